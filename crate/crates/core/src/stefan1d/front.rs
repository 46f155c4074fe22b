use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::fmt17;

/// Sampled front path `s(t_i)` with the velocity used from each sample on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrontTrajectory {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
}

impl FrontTrajectory {
    pub fn push(&mut self, t: f64, s: f64, v: f64) {
        self.times.push(t);
        self.positions.push(s);
        self.velocities.push(v);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_position(&self) -> Option<f64> {
        self.positions.last().copied()
    }

    /// Smallest `s_{i+1} - s_i`; `+inf` with fewer than two samples.
    pub fn min_increment(&self) -> f64 {
        self.positions.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Piecewise-linear `s(t)`; `None` outside the sampled range.
    pub fn position_at(&self, t: f64) -> Option<f64> {
        let n = self.times.len();
        if n == 0 || t < self.times[0] || t > self.times[n - 1] {
            return None;
        }
        let k = self.times.partition_point(|&x| x <= t);
        if k == 0 {
            return Some(self.positions[0]);
        }
        if k == n {
            return Some(self.positions[n - 1]);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        Some(self.positions[k - 1] * (1.0 - w) + self.positions[k] * w)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,s,sdot")?;
        for i in 0..self.len() {
            writeln!(out, "{},{},{}", fmt17(self.times[i]), fmt17(self.positions[i]), fmt17(self.velocities[i]))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "t,s,sdot" => {}
            _ => return Err(Error::Parse("front file must start with `t,s,sdot`".into())),
        }
        let mut out = Self::default();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("front line {}: {e}", n + 2)))?;
            if vals.len() != 3 {
                return Err(Error::Parse(format!("front line {}: expected 3 columns", n + 2)));
            }
            out.push(vals[0], vals[1], vals[2]);
        }
        Ok(out)
    }
}
