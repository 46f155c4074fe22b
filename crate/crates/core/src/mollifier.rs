//! Friedrichs mollifiers built on the standard bump
//! `eta(x) = Z exp(1 / (|x|^2 - 1))` for `|x| < 1`, zero elsewhere, and
//! the convolution `f^eps = eta_eps * f` by direct summation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellMask, Grid, MaskedField, Point, TemperatureField};

/// Lattice resolution that meets [`MASS_TOLERANCE`] in one to three dimensions.
pub const DEFAULT_SAMPLES_PER_RADIUS: usize = 48;

/// Allowed deviation of the kernel mass from one.
pub const MASS_TOLERANCE: f64 = 1e-8;

/// Unnormalised bump as a function of `|x|^2`.
pub fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (1.0 / (r2 - 1.0)).exp()
    } else {
        0.0
    }
}

/// `int_{R^n} exp(1 / (|x|^2 - 1)) dx` as `|S^{n-1}| int_0^1 r^{n-1} bump(r^2) dr`,
/// by composite Simpson on the radial integral.
pub fn bump_integral(dim: usize) -> f64 {
    let sphere = match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    };
    let intervals = 200_000;
    let h = 1.0 / intervals as f64;
    let g = |r: f64| r.powi(dim as i32 - 1) * bump(r * r);
    let mut acc = g(0.0) + g(1.0);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(i as f64 * h);
    }
    sphere * acc * h / 3.0
}

/// Bump kernel of width `epsilon` in `dim` dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierKernel {
    epsilon: f64,
    dim: usize,
    samples_per_radius: usize,
    normalization: f64,
}

/// Builds the kernel. The constant `Z` makes the lattice sum of `eta` with
/// `samples_per_radius` points per unit radius equal to one; the build is
/// rejected when that lattice is too coarse for the resulting kernel to
/// integrate to one within [`MASS_TOLERANCE`].
pub fn build_kernel(epsilon: f64, dim: usize, samples_per_radius: usize) -> Result<MollifierKernel> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("mollifier width {epsilon} must be positive")));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!("dimension {dim} not in 1..=3")));
    }
    if samples_per_radius < 2 {
        return Err(Error::Underresolved("need at least two samples per radius".into()));
    }
    let delta = 1.0 / samples_per_radius as f64;
    let lattice_sum: f64 = lattice_offsets(dim, samples_per_radius)
        .map(|o| bump(r2_of(&o, &[delta; 3])))
        .sum::<f64>()
        * delta.powi(dim as i32);
    let normalization = 1.0 / lattice_sum;
    let achieved = normalization * bump_integral(dim);
    if (achieved - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::KernelMass { achieved, tolerance: MASS_TOLERANCE });
    }
    Ok(MollifierKernel { epsilon, dim, samples_per_radius, normalization })
}

fn lattice_offsets(dim: usize, reach: usize) -> impl Iterator<Item = [isize; 3]> {
    let r = reach as isize;
    let span = |k: usize| if k < dim { -r..=r } else { 0..=0 };
    let (a, b, c) = (span(0), span(1), span(2));
    a.flat_map(move |i| {
        let c = c.clone();
        b.clone().flat_map(move |j| c.clone().map(move |k| [i, j, k]))
    })
}

fn r2_of(o: &[isize; 3], h: &[f64; 3]) -> f64 {
    (0..3).map(|k| (o[k] as f64 * h[k]).powi(2)).sum()
}

impl MollifierKernel {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn samples_per_radius(&self) -> usize {
        self.samples_per_radius
    }

    /// Unit-width kernel `eta(x)`.
    pub fn eta(&self, x: &Point) -> f64 {
        self.normalization * bump(x.iter().take(self.dim).map(|v| v * v).sum())
    }

    /// Scaled kernel `eta_eps(x) = eps^{-n} eta(x / eps)`.
    pub fn eta_eps(&self, x: &Point) -> f64 {
        let e = self.epsilon;
        let scaled = [x[0] / e, x[1] / e, x[2] / e];
        self.eta(&scaled) / e.powi(self.dim as i32)
    }

    /// Lattice sum of `eta` at the build resolution.
    pub fn discrete_mass(&self) -> f64 {
        let delta = 1.0 / self.samples_per_radius as f64;
        lattice_offsets(self.dim, self.samples_per_radius).map(|o| self.eta(&offset_point(&o, delta))).sum::<f64>()
            * delta.powi(self.dim as i32)
    }

    /// `M_m = int |d^m eta / dx_1^m| dx` for the unit-width kernel, by
    /// `m`-th differences on a fine lattice.
    pub fn derivative_l1(&self, order: usize) -> f64 {
        if order == 0 {
            return 1.0;
        }
        let per_radius = match self.dim {
            1 => 4000,
            2 => 400,
            _ => 80,
        };
        let delta = 1.0 / per_radius as f64;
        let reach = per_radius as isize + order as isize;
        let binom = binomials(order);
        let mut total = 0.0;
        for o in lattice_offsets(self.dim, reach as usize) {
            let mut diff = 0.0;
            for (i, c) in binom.iter().enumerate() {
                let shifted = [o[0] + i as isize, o[1], o[2]];
                let sign = if (order - i) % 2 == 0 { 1.0 } else { -1.0 };
                diff += sign * c * self.eta(&offset_point(&shifted, delta));
            }
            total += diff.abs();
        }
        total * delta.powi(self.dim as i32) / delta.powi(order as i32)
    }

    /// Kernel weights on the lattice of a grid with the given spacings,
    /// normalised to unit sum.
    pub fn stencil(&self, spacing: &[f64]) -> Vec<([isize; 3], f64)> {
        let mut h = [1.0; 3];
        h[..self.dim].copy_from_slice(&spacing[..self.dim]);
        let reach = (0..self.dim).map(|k| (self.epsilon / h[k]).ceil() as isize).collect::<Vec<_>>();
        let mut out = Vec::new();
        let span = |k: usize| if k < self.dim { -reach[k]..=reach[k] } else { 0..=0 };
        for i in span(0) {
            for j in span(1) {
                for k in span(2) {
                    let p = [i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]];
                    let w = self.eta_eps(&p);
                    if w > 0.0 {
                        out.push(([i, j, k], w));
                    }
                }
            }
        }
        let total: f64 = out.iter().map(|(_, w)| w).sum();
        for (_, w) in &mut out {
            *w /= total;
        }
        out
    }
}

fn offset_point(o: &[isize; 3], delta: f64) -> Point {
    [o[0] as f64 * delta, o[1] as f64 * delta, o[2] as f64 * delta]
}

fn binomials(m: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..m {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

/// How values outside the grid are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// Output only on `U_eps`, the cells at distance `>= eps` from the
    /// boundary of the box, where the kernel never leaves the grid.
    Restrict,
    /// `f` extended by zero; every cell is valid.
    Zero,
    /// `f` extended periodically; every cell is valid.
    Periodic,
}

/// Cells at distance `>= eps` from the faces of the grid's box.
pub fn interior_region(grid: &Grid, epsilon: f64) -> CellMask {
    CellMask::from_fn(grid, |p| {
        grid.axes().iter().enumerate().all(|(k, a)| p[k] - a.origin >= epsilon && a.origin + a.extent - p[k] >= epsilon)
    })
}

fn check_resolution(grid: &Grid, kernel: &MollifierKernel) -> Result<()> {
    if grid.dim() != kernel.dim {
        return Err(Error::Shape(format!("{}D kernel on a {}D grid", kernel.dim, grid.dim())));
    }
    for (k, a) in grid.axes().iter().enumerate() {
        if a.spacing() > kernel.epsilon / 4.0 * (1.0 + 1e-12) {
            return Err(Error::Underresolved(format!(
                "spacing {} on axis {k} exceeds eps/4 = {}",
                a.spacing(),
                kernel.epsilon / 4.0
            )));
        }
    }
    Ok(())
}

/// `f^eps` on `U_eps`; other cells are flagged invalid.
pub fn mollify(f: &TemperatureField, kernel: &MollifierKernel) -> Result<MaskedField> {
    mollify_with(f, kernel, Extension::Restrict)
}

pub fn mollify_with(f: &TemperatureField, kernel: &MollifierKernel, extension: Extension) -> Result<MaskedField> {
    let grid = f.grid();
    check_resolution(grid, kernel)?;
    let spacing: Vec<f64> = grid.axes().iter().map(|a| a.spacing()).collect();
    let stencil = kernel.stencil(&spacing);
    let shape = grid.shape();
    let valid = match extension {
        Extension::Restrict => interior_region(grid, kernel.epsilon),
        Extension::Zero | Extension::Periodic => CellMask::full(grid),
    };
    let u = f.values();
    let out: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if !valid.get(i) {
                return 0.0;
            }
            let ijk = grid.unravel(i);
            let mut acc = 0.0;
            for (o, w) in &stencil {
                let mut idx = [0usize; 3];
                let mut inside = true;
                for k in 0..3 {
                    let n = shape[k] as isize;
                    let mut j = ijk[k] as isize + o[k];
                    if extension == Extension::Periodic {
                        j = j.rem_euclid(n);
                    } else if j < 0 || j >= n {
                        inside = false;
                        break;
                    }
                    idx[k] = j as usize;
                }
                if inside {
                    acc += w * u[grid.index(idx)];
                }
            }
            acc
        })
        .collect();
    Ok(MaskedField { field: f.with_values(f.time(), out)?, valid })
}

/// `f^eps` at an arbitrary point of `U_eps`, normalised by the lattice
/// mass of the kernel at that offset.
pub fn mollify_at(f: &TemperatureField, kernel: &MollifierKernel, x: &Point) -> Result<f64> {
    let grid = f.grid();
    check_resolution(grid, kernel)?;
    for (k, a) in grid.axes().iter().enumerate() {
        if x[k] - a.origin < kernel.epsilon || a.origin + a.extent - x[k] < kernel.epsilon {
            return Err(Error::InvalidArgument(format!("{x:?} lies outside U_eps")));
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &v) in f.values().iter().enumerate() {
        let c = grid.center(i);
        let w = kernel.eta_eps(&[x[0] - c[0], x[1] - c[1], x[2] - c[2]]);
        if w > 0.0 {
            num += w * v;
            den += w;
        }
    }
    Ok(num / den)
}

/// Sup-norm of the `m`-th discrete derivative of `f^eps` for one order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeNorm {
    pub order: usize,
    pub measured: f64,
    /// `sup|f| * M_m / eps^m`.
    pub bound: f64,
}

impl DerivativeNorm {
    pub fn within_bound(&self) -> bool {
        self.measured <= self.bound * (1.0 + 0.05) + 1e-12
    }
}

/// For each order `m <= max_order`, the largest `m`-th difference quotient
/// of `f^eps` along any axis over windows lying in `U_eps`.
pub fn smoothness_report(f: &TemperatureField, kernel: &MollifierKernel, max_order: usize) -> Result<Vec<DerivativeNorm>> {
    let fe = mollify(f, kernel)?;
    let sup_f = f.sup_norm();
    let grid = f.grid();
    let st = grid.strides();
    let shape = grid.shape();
    let vals = fe.field.values();
    let mut out = Vec::with_capacity(max_order + 1);
    for m in 0..=max_order {
        let binom = binomials(m);
        let mut sup: f64 = 0.0;
        for (k, a) in grid.axes().iter().enumerate() {
            let h = a.spacing();
            for i in fe.valid.indices() {
                if grid.unravel(i)[k] + m >= shape[k] {
                    continue;
                }
                if !(0..=m).all(|s| fe.valid.get(i + s * st[k])) {
                    continue;
                }
                let diff: f64 = binom
                    .iter()
                    .enumerate()
                    .map(|(s, c)| if (m - s) % 2 == 0 { c * vals[i + s * st[k]] } else { -c * vals[i + s * st[k]] })
                    .sum();
                sup = sup.max(diff.abs() / h.powi(m as i32));
            }
        }
        let bound = sup_f * kernel.derivative_l1(m) / kernel.epsilon.powi(m as i32);
        out.push(DerivativeNorm { order: m, measured: sup, bound });
    }
    Ok(out)
}

/// `||f^eps - f||_{L^2(U_eps)}` for each width of a strictly decreasing sequence.
pub fn l2_convergence(f: &TemperatureField, epsilons: &[f64]) -> Result<Vec<f64>> {
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("widths must be strictly decreasing".into()));
    }
    let vol = f.grid().cell_volume();
    epsilons
        .iter()
        .map(|&eps| {
            let kernel = build_kernel(eps, f.grid().dim(), DEFAULT_SAMPLES_PER_RADIUS)?;
            let fe = mollify(f, &kernel)?;
            let sq: f64 = fe.valid_values().map(|(i, v)| (v - f.values()[i]).powi(2)).sum();
            Ok((sq * vol).sqrt())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Independent tanh-sinh quadrature of `int_{-1}^{1} g(x) dx`.
    fn tanh_sinh(g: impl Fn(f64) -> f64) -> f64 {
        let h = 1.0 / 64.0;
        let mut acc = 0.0;
        for k in -400i32..=400 {
            let t = k as f64 * h;
            let s = 0.5 * PI * t.sinh();
            let x = s.tanh();
            let w = 0.5 * PI * t.cosh() / s.cosh().powi(2);
            if x.abs() < 1.0 {
                acc += w * g(x);
            }
        }
        acc * h
    }

    fn line(lo: f64, hi: f64, n: usize) -> Grid {
        Grid::vertex_aligned(&[lo], &[hi], &[n]).unwrap()
    }

    #[test]
    fn normalization_matches_independent_quadrature() {
        let reference = tanh_sinh(|x| bump(x * x));
        assert!((reference - 0.443_993_816_168_079_4).abs() < 1e-13, "{reference}");
        let k = build_kernel(0.3, 1, 64).unwrap();
        assert!((k.normalization() - 1.0 / reference).abs() < 1e-8);
        assert!((bump_integral(1) - reference).abs() < 1e-12);
    }

    #[test]
    fn unit_mass_in_every_dimension() {
        for dim in 1..=3 {
            let k = build_kernel(0.5, dim, 48).unwrap();
            assert!((k.discrete_mass() - 1.0).abs() <= MASS_TOLERANCE, "dim {dim}");
        }
    }

    #[test]
    fn coarse_lattice_rejected_with_achieved_mass() {
        match build_kernel(1.0, 1, 3) {
            Err(Error::KernelMass { achieved, .. }) => assert!((achieved - 1.0).abs() > MASS_TOLERANCE),
            other => panic!("expected mass rejection, got {other:?}"),
        }
        assert!(build_kernel(0.0, 1, 64).is_err());
        assert!(build_kernel(1.0, 4, 64).is_err());
    }

    #[test]
    fn support_is_the_closed_ball_complement_zero() {
        let k = build_kernel(1.0, 2, 48).unwrap();
        assert_eq!(k.eta(&[1.0, 0.0, 0.0]), 0.0);
        assert_eq!(k.eta(&[0.8, 0.7, 0.0]), 0.0);
        assert!(k.eta(&[0.5, 0.5, 0.0]) > 0.0);
        let scaled = build_kernel(0.25, 2, 48).unwrap();
        assert!((scaled.eta_eps(&[0.1, 0.0, 0.0]) - k.eta(&[0.4, 0.0, 0.0]) * 16.0).abs() < 1e-12);
    }

    #[test]
    fn first_derivative_bound_is_twice_peak() {
        let k = build_kernel(1.0, 1, 64).unwrap();
        let expect = 2.0 * k.eta(&[0.0; 3]);
        assert!((k.derivative_l1(1) - expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn constants_and_lines_reproduced() {
        let g = line(0.0, 1.0, 201);
        let k = build_kernel(0.05, 1, 64).unwrap();
        let c = TemperatureField::from_fn(g.clone(), 0.0, |_| 3.0).unwrap();
        let out = mollify(&c, &k).unwrap();
        assert!(out.valid.count() > 100);
        assert!(!out.valid.get(0) && !out.valid.get(200));
        for (_, v) in out.valid_values() {
            assert!((v - 3.0).abs() < 1e-8);
        }
        let lin = TemperatureField::from_fn(g.clone(), 0.0, |p| p[0]).unwrap();
        for (i, v) in mollify(&lin, &k).unwrap().valid_values() {
            assert!((v - g.center(i)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn step_is_halved_at_the_jump() {
        let g = Grid::cells(&[-1.0], &[1.0], &[400]).unwrap();
        let step = TemperatureField::from_fn(g, 0.0, |p| if p[0] > 0.0 { 1.0 } else { 0.0 }).unwrap();
        let k = build_kernel(0.2, 1, 64).unwrap();
        let v = mollify_at(&step, &k, &[0.0; 3]).unwrap();
        assert!((v - 0.5).abs() < 1e-6, "{v}");
    }

    #[test]
    fn underresolved_kernel_rejected() {
        let g = line(0.0, 1.0, 21);
        let f = TemperatureField::zeros(g, 0.0);
        let k = build_kernel(0.1, 1, 64).unwrap();
        assert!(matches!(mollify(&f, &k), Err(Error::Underresolved(_))));
    }

    #[test]
    fn zero_field_has_zero_derivatives() {
        let g = line(0.0, 1.0, 401);
        let k = build_kernel(0.1, 1, 64).unwrap();
        let report = smoothness_report(&TemperatureField::zeros(g, 0.0), &k, 3).unwrap();
        assert!(report.iter().all(|d| d.measured == 0.0));
    }

    #[test]
    fn smooth_field_converges_and_constant_is_exact() {
        let g = line(0.0, 1.0, 801);
        let s = TemperatureField::from_fn(g.clone(), 0.0, |p| (2.0 * PI * p[0]).sin()).unwrap();
        let errs = l2_convergence(&s, &[0.2, 0.1, 0.05]).unwrap();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-8), "{errs:?}");
        assert!(errs[2] <= errs[0] / 4.0);
        let c = TemperatureField::from_fn(g, 0.0, |_| -2.0).unwrap();
        assert!(l2_convergence(&c, &[0.2, 0.1]).unwrap().iter().all(|e| *e <= 1e-8));
        assert!(l2_convergence(&c, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn periodic_shift_commutes() {
        let g = Grid::cells(&[0.0], &[1.0], &[64]).unwrap();
        let k = build_kernel(0.1, 1, 64).unwrap();
        let vals: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64 - 3.0).collect();
        let shifted: Vec<f64> = (0..64).map(|i| vals[(i + 63) % 64]).collect();
        let a = mollify_with(&TemperatureField::new(g.clone(), 0.0, vals).unwrap(), &k, Extension::Periodic).unwrap();
        let b = mollify_with(&TemperatureField::new(g, 0.0, shifted).unwrap(), &k, Extension::Periodic).unwrap();
        for i in 0..64 {
            assert_eq!(b.field.values()[i], a.field.values()[(i + 63) % 64]);
        }
    }

    fn step(cells: usize) -> TemperatureField {
        let g = Grid::cells(&[-1.0], &[1.0], &[cells]).unwrap();
        TemperatureField::from_fn(g, 0.0, |p| if p[0] > 0.0 { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn step_derivative_scales_inversely_with_width() {
        let f = step(2000);
        let first = |eps: f64| {
            let k = build_kernel(eps, 1, DEFAULT_SAMPLES_PER_RADIUS).unwrap();
            let r = smoothness_report(&f, &k, 2).unwrap();
            assert!(r.iter().all(DerivativeNorm::within_bound), "{r:?}");
            r[1].measured
        };
        let (a, b, c) = (first(0.1), first(0.2), first(0.4));
        assert!((a / b - 2.0).abs() < 0.2 && (b / c - 2.0).abs() < 0.2, "{a} {b} {c}");
    }

    #[test]
    fn step_derivative_norms_stable_under_refinement() {
        let k = build_kernel(0.2, 1, DEFAULT_SAMPLES_PER_RADIUS).unwrap();
        let coarse = smoothness_report(&step(1000), &k, 3).unwrap();
        let fine = smoothness_report(&step(2000), &k, 3).unwrap();
        for (c, f) in coarse.iter().zip(&fine).skip(1) {
            assert!((c.measured - f.measured).abs() < 0.05 * f.measured, "{c:?} {f:?}");
        }
    }

    #[test]
    fn step_l2_error_is_half_order() {
        let eps = [0.4, 0.2, 0.1];
        let errs = l2_convergence(&step(2000), &eps).unwrap();
        let scaled: Vec<f64> = errs.iter().zip(eps).map(|(e, x)| e / x.sqrt()).collect();
        let (lo, hi) = scaled.iter().fold((f64::MAX, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
        assert!(hi / lo < 2.0, "{scaled:?}");
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-8));
    }

    proptest! {
        #[test]
        fn linear_positive_and_bounded(fa in proptest::collection::vec(0.0f64..2.0, 121),
                                       fb in proptest::collection::vec(-1.0f64..1.0, 121),
                                       alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
            let g = Grid::cells(&[0.0], &[1.0], &[121]).unwrap();
            let k = build_kernel(0.05, 1, 64).unwrap();
            let a = TemperatureField::new(g.clone(), 0.0, fa.clone()).unwrap();
            let b = TemperatureField::new(g.clone(), 0.0, fb.clone()).unwrap();
            let mix = TemperatureField::new(g, 0.0, fa.iter().zip(&fb).map(|(x, y)| alpha * x + beta * y).collect()).unwrap();
            let ma = mollify(&a, &k).unwrap();
            let mb = mollify(&b, &k).unwrap();
            let mm = mollify(&mix, &k).unwrap();
            for (i, v) in mm.valid_values() {
                let expect = alpha * ma.field.values()[i] + beta * mb.field.values()[i];
                prop_assert!((v - expect).abs() < 1e-12);
            }
            for (_, v) in ma.valid_values() {
                prop_assert!(v >= -1e-12);
                prop_assert!(v <= a.sup_norm() + 1e-8);
            }
        }
    }
}
