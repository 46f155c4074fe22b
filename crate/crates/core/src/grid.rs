//! Structured grids, scalar fields on them, and the space-time geometry
//! shared by every solver in the crate.
//!
//! Samples live at cell centres, stored row-major (first axis slowest).
//! Unused axes of a 1D or 2D grid behave as a single cell so that index
//! arithmetic is uniform across dimensions.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial point padded to three components; unused axes are zero.
pub type Point = [f64; 3];

/// Smallest cell count accepted on any axis.
pub const MIN_CELLS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub origin: f64,
    pub extent: f64,
    pub count: usize,
}

impl Axis {
    pub fn spacing(&self) -> f64 {
        self.extent / self.count as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.spacing()
    }
}

/// Axis-aligned box of `count` cells per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Axis>", into = "Vec<Axis>")]
pub struct Grid {
    axes: Vec<Axis>,
}

impl TryFrom<Vec<Axis>> for Grid {
    type Error = Error;

    fn try_from(axes: Vec<Axis>) -> Result<Self> {
        Grid::new(axes)
    }
}

impl From<Grid> for Vec<Axis> {
    fn from(g: Grid) -> Self {
        g.axes
    }
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidGrid(format!("dimension {} not in 1..=3", axes.len())));
        }
        for (k, a) in axes.iter().enumerate() {
            if a.count < MIN_CELLS {
                return Err(Error::InvalidGrid(format!(
                    "axis {k} has {} cells, need at least {MIN_CELLS}",
                    a.count
                )));
            }
            if !(a.extent.is_finite() && a.origin.is_finite()) || a.spacing() <= 0.0 {
                return Err(Error::InvalidGrid(format!("axis {k} has non-positive spacing")));
            }
        }
        Ok(Self { axes })
    }

    /// Box `[lo, hi]` per axis split into `counts` cells.
    pub fn cells(lo: &[f64], hi: &[f64], counts: &[usize]) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != counts.len() {
            return Err(Error::InvalidGrid("lo/hi/counts lengths differ".into()));
        }
        let axes = lo
            .iter()
            .zip(hi)
            .zip(counts)
            .map(|((&l, &h), &n)| Axis { origin: l, extent: h - l, count: n })
            .collect();
        Self::new(axes)
    }

    /// Grid whose cell centres are the `nodes` equispaced points of `[lo, hi]`,
    /// end points included. Used wherever Dirichlet data sits on the boundary.
    pub fn vertex_aligned(lo: &[f64], hi: &[f64], nodes: &[usize]) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != nodes.len() {
            return Err(Error::InvalidGrid("lo/hi/nodes lengths differ".into()));
        }
        let mut axes = Vec::with_capacity(lo.len());
        for ((&l, &h), &n) in lo.iter().zip(hi).zip(nodes) {
            if n < 2 {
                return Err(Error::InvalidGrid("need at least two nodes".into()));
            }
            let step = (h - l) / (n - 1) as f64;
            axes.push(Axis { origin: l - 0.5 * step, extent: step * n as f64, count: n });
        }
        Self::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn spacing(&self, k: usize) -> f64 {
        self.axes[k].spacing()
    }

    pub fn min_spacing(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).fold(f64::INFINITY, f64::min)
    }

    /// Cell counts padded with 1 for unused axes.
    pub fn shape(&self) -> [usize; 3] {
        let mut s = [1; 3];
        for (k, a) in self.axes.iter().enumerate() {
            s[k] = a.count;
        }
        s
    }

    pub fn strides(&self) -> [usize; 3] {
        let s = self.shape();
        [s[1] * s[2], s[2], 1]
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        let st = self.strides();
        ijk[0] * st[0] + ijk[1] * st[1] + ijk[2] * st[2]
    }

    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let s = self.shape();
        [flat / (s[1] * s[2]), (flat / s[2]) % s[1], flat % s[2]]
    }

    pub fn center(&self, flat: usize) -> Point {
        self.center_of(self.unravel(flat))
    }

    pub fn center_of(&self, ijk: [usize; 3]) -> Point {
        let mut p = [0.0; 3];
        for (k, a) in self.axes.iter().enumerate() {
            p[k] = a.center(ijk[k]);
        }
        p
    }

    /// True for cells touching the outer face of the box on any axis.
    pub fn is_boundary(&self, flat: usize) -> bool {
        let ijk = self.unravel(flat);
        self.axes.iter().enumerate().any(|(k, a)| ijk[k] == 0 || ijk[k] + 1 == a.count)
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Tensor-product trapezoid weight of a cell centre: the product of
    /// `h` per axis, halved on the first and last centre of each axis.
    pub fn trapezoid_weight(&self, flat: usize) -> f64 {
        let ijk = self.unravel(flat);
        self.axes
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let h = a.spacing();
                if ijk[k] == 0 || ijk[k] + 1 == a.count {
                    0.5 * h
                } else {
                    h
                }
            })
            .product()
    }

    /// Flat indices of the face neighbours of a cell that lie inside the grid.
    pub fn face_neighbors(&self, flat: usize) -> impl Iterator<Item = usize> + '_ {
        let ijk = self.unravel(flat);
        let st = self.strides();
        self.axes.iter().enumerate().flat_map(move |(k, a)| {
            let lo = (ijk[k] > 0).then(|| flat - st[k]);
            let hi = (ijk[k] + 1 < a.count).then(|| flat + st[k]);
            lo.into_iter().chain(hi)
        })
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.dim() == other.dim() && self.shape() == other.shape()
    }
}

/// Scalar temperature samples on a grid at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct TemperatureField {
    grid: Grid,
    time: f64,
    values: Vec<f64>,
}

impl TemperatureField {
    pub fn new(grid: Grid, time: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::InvalidArgument(format!("field time {time} must be finite and >= 0")));
        }
        check_finite(&values)?;
        Ok(Self { grid, time, values })
    }

    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(&Point) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.center(i))).collect();
        Self::new(grid, time, values)
    }

    pub fn zeros(grid: Grid, time: f64) -> Self {
        let n = grid.len();
        Self { grid, time, values: vec![0.0; n] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid, new samples and time.
    pub fn with_values(&self, time: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), time, values)
    }

    pub fn at(&self, ijk: [usize; 3]) -> f64 {
        self.values[self.grid.index(ijk)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Writes the field in the line-oriented CSV format: one header line,
    /// then one value per line with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let counts: Vec<String> = self.grid.axes.iter().map(|a| a.count.to_string()).collect();
        let spacing: Vec<String> = self.grid.axes.iter().map(|a| fmt17(a.spacing())).collect();
        writeln!(
            out,
            "# grid dim={} counts={} spacing={} time={}",
            self.grid.dim(),
            counts.join(","),
            spacing.join(","),
            fmt17(self.time)
        )?;
        for v in &self.values {
            writeln!(out, "{}", fmt17(*v))?;
        }
        Ok(())
    }

    /// Reads a field written by [`write_csv`](Self::write_csv). The header
    /// carries no origin, so the caller supplies it (zero when `None`).
    pub fn read_csv<R: BufRead>(input: R, origin: Option<&[f64]>) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))??;
        let header = header
            .strip_prefix("# grid ")
            .ok_or_else(|| Error::Parse("missing `# grid` header".into()))?;
        let mut dim = None;
        let mut counts = None;
        let mut spacing = None;
        let mut time = None;
        for kv in header.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("bad header token {kv}")))?;
            match k {
                "dim" => dim = Some(parse_num::<usize>(v)?),
                "counts" => counts = Some(v.split(',').map(parse_num::<usize>).collect::<Result<Vec<_>>>()?),
                "spacing" => spacing = Some(v.split(',').map(parse_num::<f64>).collect::<Result<Vec<_>>>()?),
                "time" => time = Some(parse_num::<f64>(v)?),
                _ => {}
            }
        }
        let (dim, counts, spacing, time) = match (dim, counts, spacing, time) {
            (Some(d), Some(c), Some(s), Some(t)) => (d, c, s, t),
            _ => return Err(Error::Parse("header needs dim, counts, spacing and time".into())),
        };
        if counts.len() != dim || spacing.len() != dim {
            return Err(Error::Parse("dim disagrees with counts/spacing".into()));
        }
        let zeros = [0.0; 3];
        let origin = origin.unwrap_or(&zeros[..dim]);
        if origin.len() != dim {
            return Err(Error::Parse("origin length disagrees with dim".into()));
        }
        let axes = (0..dim)
            .map(|k| Axis { origin: origin[k], extent: spacing[k] * counts[k] as f64, count: counts[k] })
            .collect();
        let grid = Grid::new(axes)?;
        let mut values = Vec::with_capacity(grid.len());
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            values.push(parse_num::<f64>(line)?);
        }
        Self::new(grid, time, values)
    }
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse::<T>().map_err(|_| Error::Parse(format!("cannot parse `{s}`")))
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index, value: values[index] }),
        None => Ok(()),
    }
}

/// Boolean per-cell selection over a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CellMask {
    grid: Grid,
    bits: Vec<bool>,
}

impl CellMask {
    pub fn new(grid: Grid, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::Shape(format!("mask of {} cells for grid of {}", bits.len(), grid.len())));
        }
        Ok(Self { grid, bits })
    }

    pub fn full(grid: &Grid) -> Self {
        Self { grid: grid.clone(), bits: vec![true; grid.len()] }
    }

    pub fn empty(grid: &Grid) -> Self {
        Self { grid: grid.clone(), bits: vec![false; grid.len()] }
    }

    pub fn from_fn(grid: &Grid, pred: impl Fn(&Point) -> bool) -> Self {
        let bits = (0..grid.len()).map(|i| pred(&grid.center(i))).collect();
        Self { grid: grid.clone(), bits }
    }

    /// Cells not touching the outer faces of the box.
    pub fn interior(grid: &Grid) -> Self {
        let bits = (0..grid.len()).map(|i| !grid.is_boundary(i)).collect();
        Self { grid: grid.clone(), bits }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.bits[i] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_none(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn union(&self, other: &CellMask) -> CellMask {
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        CellMask { grid: self.grid.clone(), bits }
    }

    fn conforms(&self, grid: &Grid) -> bool {
        self.grid.same_shape(grid)
    }
}

/// A field in which only some cells carry meaningful values; the rest
/// hold zero and are flagged invalid.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedField {
    pub field: TemperatureField,
    pub valid: CellMask,
}

impl MaskedField {
    pub fn valid_values(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.valid.indices().map(|i| (i, self.field.values()[i]))
    }

    pub fn sup_norm(&self) -> f64 {
        self.valid_values().fold(0.0, |m, (_, v)| m.max(v.abs()))
    }
}

/// Second-order central Laplacian. Cells on the outer faces are flagged
/// invalid; callers decide what boundary condition applies there.
pub fn discrete_laplacian(f: &TemperatureField) -> Result<MaskedField> {
    check_finite(f.values())?;
    let grid = f.grid();
    let st = grid.strides();
    let inv_h2: Vec<f64> = grid.axes().iter().map(|a| 1.0 / (a.spacing() * a.spacing())).collect();
    let u = f.values();
    let mut out = vec![0.0; u.len()];
    let valid = CellMask::interior(grid);
    for i in valid.indices() {
        let mut acc = 0.0;
        for (k, w) in inv_h2.iter().enumerate() {
            acc += (u[i + st[k]] - 2.0 * u[i] + u[i - st[k]]) * w;
        }
        out[i] = acc;
    }
    Ok(MaskedField { field: TemperatureField::new(grid.clone(), f.time(), out)?, valid })
}

/// Space-time point `(x, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: Point,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: Point, t: f64) -> Self {
        Self { x, t }
    }
}

/// Parabolic distance `(|x - x0|^2 + |t - t0|)^(1/2)`.
pub fn parabolic_distance(p: &SpaceTimePoint, q: &SpaceTimePoint) -> f64 {
    let dx2: f64 = p.x.iter().zip(&q.x).map(|(a, b)| (a - b) * (a - b)).sum();
    (dx2 + (p.t - q.t).abs()).sqrt()
}

/// Backward parabolic cylinder `{ |x - x0| < r, t0 - r^2 < t < t0 }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCylinder {
    pub center: Point,
    pub top: f64,
    pub radius: f64,
}

impl ParabolicCylinder {
    pub fn new(center: Point, top: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("cylinder radius {radius} must be positive")));
        }
        if !top.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("cylinder centre must be finite".into()));
        }
        Ok(Self { center, top, radius })
    }

    pub fn bottom(&self) -> f64 {
        self.top - self.radius * self.radius
    }

    pub fn in_ball(&self, x: &Point) -> bool {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        d2 < self.radius * self.radius
    }
}

/// Cells of `region` where `f > 0` strictly.
pub fn positivity_set(f: &TemperatureField, region: &CellMask) -> Result<CellMask> {
    if !region.conforms(f.grid()) {
        return Err(Error::Shape("region mask does not conform to the field grid".into()));
    }
    let bits = f.values().iter().zip(region.bits()).map(|(&v, &r)| r && v > 0.0).collect();
    CellMask::new(f.grid().clone(), bits)
}

/// Smallest `delta` such that every cell of `a` lies within `delta` of a
/// cell of `b`, measured between cell centres.
pub fn neighborhood_radius(a: &CellMask, b: &CellMask) -> Result<f64> {
    if !a.grid.same_shape(&b.grid) {
        return Err(Error::Shape("masks live on different grids".into()));
    }
    if a.is_none() {
        return Ok(0.0);
    }
    if b.is_none() {
        return Err(Error::InvalidArgument("reference set is empty, radius undefined".into()));
    }
    let grid = &b.grid;
    // The nearest cell of `b` to an outside point always has a face
    // neighbour outside `b`, so only that frontier needs scanning.
    let frontier: Vec<Point> = b
        .indices()
        .filter(|&i| grid.face_neighbors(i).any(|j| !b.bits[j]))
        .map(|i| grid.center(i))
        .collect();
    let mut delta2: f64 = 0.0;
    for i in a.indices().filter(|&i| !b.bits[i]) {
        let p = grid.center(i);
        let nearest = frontier
            .iter()
            .map(|q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2))
            .fold(f64::INFINITY, f64::min);
        delta2 = delta2.max(nearest);
    }
    Ok(delta2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(n: usize) -> Grid {
        Grid::cells(&[0.0], &[1.0], &[n]).unwrap()
    }

    #[test]
    fn rejects_coarse_and_degenerate_axes() {
        assert!(Grid::cells(&[0.0], &[1.0], &[3]).is_err());
        assert!(Grid::cells(&[0.0], &[0.0], &[8]).is_err());
        assert!(Grid::cells(&[0.0; 4], &[1.0; 4], &[8; 4]).is_err());
    }

    #[test]
    fn vertex_aligned_centres_hit_end_points() {
        let g = Grid::vertex_aligned(&[0.0], &[1.0], &[11]).unwrap();
        assert!((g.center(0)[0]).abs() < 1e-15);
        assert!((g.center(10)[0] - 1.0).abs() < 1e-15);
        assert!((g.spacing(0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn laplacian_exact_on_quadratics_and_constants() {
        let g = line(50);
        let f = TemperatureField::from_fn(g.clone(), 0.0, |p| p[0] * p[0]).unwrap();
        let lap = discrete_laplacian(&f).unwrap();
        assert!(!lap.valid.get(0) && !lap.valid.get(49));
        for (_, v) in lap.valid_values() {
            assert!((v - 2.0).abs() < 1e-9, "{v}");
        }
        let c = TemperatureField::from_fn(g, 0.0, |_| 3.5).unwrap();
        assert!(discrete_laplacian(&c).unwrap().sup_norm() == 0.0);
    }

    #[test]
    fn laplacian_of_sine_within_taylor_bound() {
        let g = Grid::vertex_aligned(&[0.0], &[1.0], &[101]).unwrap();
        let h = g.spacing(0);
        let pi = std::f64::consts::PI;
        let f = TemperatureField::from_fn(g.clone(), 0.0, |p| (pi * p[0]).sin()).unwrap();
        let lap = discrete_laplacian(&f).unwrap();
        let bound = pi.powi(4) * h * h / 12.0;
        for (i, v) in lap.valid_values() {
            let exact = -pi * pi * (pi * g.center(i)[0]).sin();
            assert!((v - exact).abs() <= bound, "cell {i}: {v} vs {exact}");
        }
    }

    #[test]
    fn laplacian_annihilates_affine_3d() {
        let g = Grid::cells(&[0.0, -1.0, 2.0], &[1.0, 1.0, 3.0], &[6, 7, 5]).unwrap();
        let f = TemperatureField::from_fn(g, 0.0, |p| 1.0 + 2.0 * p[0] - 3.0 * p[1] + 0.5 * p[2]).unwrap();
        assert!(discrete_laplacian(&f).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn laplacian_rejects_non_finite() {
        let g = line(8);
        let mut f = TemperatureField::zeros(g, 0.0);
        f.values[3] = f64::NAN;
        assert!(matches!(discrete_laplacian(&f), Err(Error::NonFinite { index: 3, .. })));
        assert!(TemperatureField::new(line(8), 0.0, vec![f64::INFINITY; 8]).is_err());
    }

    #[test]
    fn parabolic_distance_examples() {
        let p = SpaceTimePoint::new([0.3, 0.1, 0.0], 2.0);
        assert_eq!(parabolic_distance(&p, &p), 0.0);
        let q = SpaceTimePoint::new([0.3, 0.1, 0.0], 6.0);
        assert!((parabolic_distance(&p, &q) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn positivity_set_of_shifted_line() {
        let g = line(100);
        let f = TemperatureField::from_fn(g.clone(), 0.0, |p| p[0] - 0.5).unwrap();
        let m = positivity_set(&f, &CellMask::full(&g)).unwrap();
        assert_eq!(m.count(), 50);
        assert!(m.indices().all(|i| g.center(i)[0] > 0.5));
        let neg = TemperatureField::from_fn(g.clone(), 0.0, |_| -1.0).unwrap();
        assert!(positivity_set(&neg, &CellMask::full(&g)).unwrap().is_none());
        let pos = TemperatureField::from_fn(g.clone(), 0.0, |_| 1.0).unwrap();
        assert_eq!(positivity_set(&pos, &CellMask::full(&g)).unwrap().count(), 100);
    }

    #[test]
    fn neighborhood_radius_examples() {
        let g = Grid::cells(&[0.0], &[1.0], &[10]).unwrap();
        let b = CellMask::from_fn(&g, |p| p[0] < 0.3);
        let a = CellMask::from_fn(&g, |p| p[0] < 0.2);
        assert_eq!(neighborhood_radius(&a, &b).unwrap(), 0.0);
        // single cell at 0.55, nearest b cell at 0.25
        let single = CellMask::from_fn(&g, |p| (p[0] - 0.55).abs() < 1e-9);
        assert!((neighborhood_radius(&single, &b).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(neighborhood_radius(&CellMask::empty(&g), &CellMask::empty(&g)).unwrap(), 0.0);
        assert!(neighborhood_radius(&a, &CellMask::empty(&g)).is_err());
    }

    #[test]
    fn csv_round_trip_and_header() {
        let g = Grid::cells(&[0.0, 0.0], &[1.0, 2.0], &[4, 5]).unwrap();
        let f = TemperatureField::from_fn(g, 0.125, |p| (p[0] * 7.0).sin() + p[1] / 3.0).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            "# grid dim=2 counts=4,5 spacing=2.5000000000000000e-1,4.0000000000000002e-1 time=1.2500000000000000e-1"
        );
        assert_eq!(text.lines().count(), 21);
        let back = TemperatureField::read_csv(buf.as_slice(), None).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.time(), f.time());
    }

    fn brute_force_radius(a: &CellMask, b: &CellMask) -> f64 {
        let g = a.grid();
        let mut worst: f64 = 0.0;
        for i in a.indices() {
            let p = g.center(i);
            let mut best = f64::INFINITY;
            for j in b.indices() {
                let q = g.center(j);
                let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                best = best.min(d);
            }
            worst = worst.max(best);
        }
        worst
    }

    proptest! {
        #[test]
        fn radius_matches_brute_force(bits_a in proptest::collection::vec(proptest::bool::weighted(0.2), 400),
                                      bits_b in proptest::collection::vec(proptest::bool::weighted(0.1), 400),
                                      extra in proptest::collection::vec(proptest::bool::weighted(0.1), 400)) {
            let g = Grid::cells(&[0.0, 0.0], &[1.0, 1.0], &[20, 20]).unwrap();
            let a = CellMask::new(g.clone(), bits_a).unwrap();
            let b = CellMask::new(g.clone(), bits_b).unwrap();
            prop_assume!(!b.is_none());
            let fast = neighborhood_radius(&a, &b).unwrap();
            prop_assert!((fast - brute_force_radius(&a, &b)).abs() < 1e-12);
            // enlarging b never increases the radius
            let bigger = b.union(&CellMask::new(g, extra).unwrap());
            prop_assert!(neighborhood_radius(&a, &bigger).unwrap() <= fast + 1e-15);
        }

        #[test]
        fn laplacian_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0,
                               fa in proptest::collection::vec(-1.0f64..1.0, 64),
                               fb in proptest::collection::vec(-1.0f64..1.0, 64)) {
            let g = Grid::cells(&[0.0, 0.0], &[1.0, 1.0], &[8, 8]).unwrap();
            let f = TemperatureField::new(g.clone(), 0.0, fa.clone()).unwrap();
            let h = TemperatureField::new(g.clone(), 0.0, fb.clone()).unwrap();
            let mix: Vec<f64> = fa.iter().zip(&fb).map(|(a, b)| alpha * a + beta * b).collect();
            let m = TemperatureField::new(g, 0.0, mix).unwrap();
            let lf = discrete_laplacian(&f).unwrap();
            let lh = discrete_laplacian(&h).unwrap();
            let lm = discrete_laplacian(&m).unwrap();
            for i in lm.valid.indices() {
                let expect = alpha * lf.field.values()[i] + beta * lh.field.values()[i];
                prop_assert!((lm.field.values()[i] - expect).abs() < 1e-10 * (1.0 + expect.abs()));
            }
        }

        #[test]
        fn parabolic_distance_symmetric_and_closed_form(x in proptest::array::uniform3(-5.0f64..5.0),
                                                        y in proptest::array::uniform3(-5.0f64..5.0),
                                                        s in 0.0f64..10.0, t in 0.0f64..10.0) {
            let p = SpaceTimePoint::new(x, s);
            let q = SpaceTimePoint::new(y, t);
            let d = parabolic_distance(&p, &q);
            prop_assert_eq!(d, parabolic_distance(&q, &p));
            let direct = ((x[0]-y[0]).powi(2) + (x[1]-y[1]).powi(2) + (x[2]-y[2]).powi(2) + (s - t).abs()).sqrt();
            prop_assert!((d - direct).abs() <= 1e-12 * (1.0 + direct));
            prop_assert!(d >= 0.0);
        }
    }
}
