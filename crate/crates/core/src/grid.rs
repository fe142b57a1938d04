//! Polar grids on the punctured unit disk, finite differences and quadrature.
//!
//! Radii are geometric, so the radial calculus works in `t = log r` with a
//! uniform step. Quadrature integrates the piecewise-linear-in-`t` interpolant
//! of a density exactly against the area element `r dr = e^{2t} dt`, times the
//! rectangle rule in θ.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::circle::CircleFunction;
use crate::cone::Kappa;
use crate::error::{LabError, Result};
use crate::par;

/// Tensor-product `(r, θ)` grid with geometric radii ending at `r = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    radii: Vec<f64>,
    log_radii: Vec<f64>,
    log_step: f64,
    n_theta: usize,
    ring_weights: Vec<f64>,
    core: bool,
}

impl PolarGrid {
    /// `n_radii` geometric radii from `r_inner` to 1 and `n_theta` angles.
    pub fn new(r_inner: f64, n_radii: usize, n_theta: usize) -> Result<Self> {
        if !(r_inner > 0.0 && r_inner < 1.0) {
            return Err(LabError::Invalid(format!("inner radius must lie in (0, 1), got {r_inner}")));
        }
        if n_radii < 3 {
            return Err(LabError::Invalid(format!("need at least 3 radii, got {n_radii}")));
        }
        let t0 = r_inner.ln();
        let h = -t0 / (n_radii - 1) as f64;
        let mut radii: Vec<f64> = (0..n_radii).map(|i| (t0 + i as f64 * h).exp()).collect();
        radii[0] = r_inner;
        radii[n_radii - 1] = 1.0;
        Self::from_radii(radii, n_theta)
    }

    /// `round(per_decade·log₁₀(1/r_inner))` radii, at least 3.
    pub fn per_decade(r_inner: f64, per_decade: usize, n_theta: usize) -> Result<Self> {
        let decades = -r_inner.log10();
        let n = (decades * per_decade as f64).round().max(3.0) as usize;
        Self::new(r_inner, n, n_theta)
    }

    /// Validate an explicit radius list (geometric to 1e−12, last entry 1).
    pub fn from_radii(radii: Vec<f64>, n_theta: usize) -> Result<Self> {
        let n = radii.len();
        if n < 3 {
            return Err(LabError::Invalid(format!("need at least 3 radii, got {n}")));
        }
        if n_theta < 8 || !n_theta.is_multiple_of(2) {
            return Err(LabError::Invalid(format!("n_theta must be even and >= 8, got {n_theta}")));
        }
        if (radii[n - 1] - 1.0).abs() > 1e-12 || radii[0] <= 0.0 {
            return Err(LabError::Invalid("radii must lie in (0, 1] and end at 1".into()));
        }
        let q = radii[1] / radii[0];
        if q <= 1.0 || radii.windows(2).any(|w| ((w[1] / w[0]) / q - 1.0).abs() > 1e-12) {
            return Err(LabError::Invalid("radii must be strictly increasing and geometric".into()));
        }
        let log_radii: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
        let log_step = (log_radii[n - 1] - log_radii[0]) / (n - 1) as f64;
        let mut ring_weights = vec![0.0; n];
        for i in 0..n - 1 {
            let (a, b) = (log_radii[i], log_radii[i + 1]);
            let j0 = exp_moment0(a, b);
            let j1 = exp_moment1(a, a, b) / (b - a);
            ring_weights[i] += j0 - j1;
            ring_weights[i + 1] += j1;
        }
        Ok(PolarGrid { radii, log_radii, log_step, n_theta, ring_weights, core: false })
    }

    /// Same grid, with the disk `B_{r_inner}` carried by the inner ring
    /// (constant extrapolation), so quadrature covers the whole disk.
    pub fn with_core_disk(mut self) -> Self {
        if !self.core {
            self.ring_weights[0] += 0.5 * self.radii[0] * self.radii[0];
            self.core = true;
        }
        self
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn log_radii(&self) -> &[f64] {
        &self.log_radii
    }

    pub fn n_radii(&self) -> usize {
        self.radii.len()
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_nodes(&self) -> usize {
        self.radii.len() * self.n_theta
    }

    /// Uniform step in `log r`.
    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    pub fn ratio(&self) -> f64 {
        self.log_step.exp()
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        self.dtheta() * j as f64
    }

    pub fn has_core(&self) -> bool {
        self.core
    }

    /// Lower end of quadrature coverage (0 with a core disk).
    pub fn r_min(&self) -> f64 {
        if self.core {
            0.0
        } else {
            self.radii[0]
        }
    }

    pub fn r_inner(&self) -> f64 {
        self.radii[0]
    }

    pub fn r_max(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }

    /// Quadrature weight of node `(i, ·)`.
    pub fn node_weight(&self, i: usize) -> f64 {
        self.ring_weights[i] * self.dtheta()
    }

    pub fn ring_weights(&self) -> &[f64] {
        &self.ring_weights
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    fn check_range(&self, lo: f64, hi: f64) -> Result<()> {
        let tol = 1e-12;
        if lo < self.r_min() - tol || hi > self.r_max() + tol || lo > hi + tol || !lo.is_finite() {
            return Err(LabError::Range { lo, hi, min: self.r_min(), max: self.r_max() });
        }
        Ok(())
    }

    /// Interpolation position of `r`: `(i, w)` with value `(1−w)·row_i + w·row_{i+1}`.
    /// `w` is exactly 0 at grid radii; radii inside a core disk clamp to ring 0.
    pub fn locate(&self, r: f64) -> Result<(usize, f64)> {
        self.check_range(r, r)?;
        let n = self.radii.len();
        if let Some(k) = self.radii.iter().position(|&x| x == r) {
            return Ok((k, 0.0));
        }
        if r <= self.radii[0] {
            return Ok((0, 0.0));
        }
        if r >= self.radii[n - 1] {
            return Ok((n - 1, 0.0));
        }
        let t = r.ln();
        let pos = ((t - self.log_radii[0]) / self.log_step).floor() as usize;
        let i = pos.min(n - 2);
        let w = ((t - self.log_radii[i]) / self.log_step).clamp(0.0, 1.0);
        Ok((i, w))
    }

    /// Node index of the grid radius nearest to `r` in `log r`.
    pub fn nearest_ring(&self, r: f64) -> usize {
        let t = r.ln();
        let pos = ((t - self.log_radii[0]) / self.log_step).round();
        pos.clamp(0.0, (self.radii.len() - 1) as f64) as usize
    }

    /// `∫_{r_lo ≤ |x| ≤ r_hi} density dx`.
    pub fn disk_integral(&self, density: &[f64], r_lo: f64, r_hi: f64) -> Result<f64> {
        assert_eq!(density.len(), self.n_nodes(), "density length must match the grid");
        self.check_range(r_lo, r_hi)?;
        if r_lo >= r_hi {
            return Ok(0.0);
        }
        let sums = self.ring_sums(density);
        Ok(self.radial_integral(&sums, r_lo, r_hi))
    }

    /// `θ`-integrals `∫ density(r_i, θ) dθ` per ring.
    pub fn ring_sums(&self, density: &[f64]) -> Vec<f64> {
        let nt = self.n_theta;
        let dt = self.dtheta();
        par::map_indices(self.radii.len(), |i| par::pairwise_sum(&density[i * nt..(i + 1) * nt]) * dt)
    }

    /// `∫_{r_lo}^{r_hi} S(r) r dr` for ring values `S` interpolated linearly in `log r`.
    pub fn radial_integral(&self, sums: &[f64], r_lo: f64, r_hi: f64) -> f64 {
        let n = self.radii.len();
        let mut core = 0.0;
        let mut lo = r_lo;
        if self.core && r_lo < self.radii[0] {
            let top = r_hi.min(self.radii[0]);
            core = sums[0] * 0.5 * (top * top - r_lo * r_lo);
            lo = self.radii[0];
        }
        if lo >= r_hi {
            return core;
        }
        let (tl, th) = (lo.max(self.radii[0]).ln(), r_hi.min(1.0).ln());
        let pieces = par::map_indices(n - 1, |i| {
            let (a, b) = (self.log_radii[i], self.log_radii[i + 1]);
            let t0 = tl.max(a);
            let t1 = th.min(b);
            if t1 <= t0 {
                return 0.0;
            }
            let slope = (sums[i + 1] - sums[i]) / (b - a);
            sums[i] * exp_moment0(t0, t1) + slope * exp_moment1(a, t0, t1)
        });
        core + par::pairwise_sum(&pieces)
    }

    /// `∫_{r_lo}^{r_hi} S(r) r dr` for ring values interpolated as a power of `r`
    /// between rings, so ring sums of homogeneous fields integrate exactly.
    /// Intervals where the values are not both positive fall back to the
    /// linear rule. No core disk is added.
    pub fn power_integral(&self, sums: &[f64], r_lo: f64, r_hi: f64) -> Result<f64> {
        let tol = 1e-12;
        if r_lo < self.radii[0] * (1.0 - tol) || r_hi > self.r_max() * (1.0 + tol) || r_lo > r_hi * (1.0 + tol) {
            return Err(LabError::Range { lo: r_lo, hi: r_hi, min: self.radii[0], max: self.r_max() });
        }
        if r_lo >= r_hi {
            return Ok(0.0);
        }
        let (tl, th) = (r_lo.max(self.radii[0]).ln(), r_hi.min(1.0).ln());
        let pieces = par::map_indices(self.radii.len() - 1, |i| {
            let (a, b) = (self.log_radii[i], self.log_radii[i + 1]);
            let t0 = tl.max(a);
            let t1 = th.min(b);
            if t1 <= t0 {
                return 0.0;
            }
            let (s0, s1) = (sums[i], sums[i + 1]);
            if s0 > 0.0 && s1 > 0.0 {
                let p = (s1 / s0).ln() / (b - a) + 2.0;
                let base = s0 * (2.0 * a).exp();
                let f = |t: f64| if p.abs() < 1e-12 { t - a } else { (p * (t - a)).exp_m1() / p };
                base * (f(t1) - f(t0))
            } else {
                let slope = (s1 - s0) / (b - a);
                s0 * exp_moment0(t0, t1) + slope * exp_moment1(a, t0, t1)
            }
        });
        Ok(par::pairwise_sum(&pieces))
    }

    /// `∫_{∂B_r} density dS`, interpolating positive ring sums as a power of `r`.
    pub fn circle_integral(&self, density: &[f64], r: f64) -> Result<f64> {
        assert_eq!(density.len(), self.n_nodes());
        let (i, w) = self.locate(r)?;
        let nt = self.n_theta;
        let dt = self.dtheta();
        let row = |k: usize| par::pairwise_sum(&density[k * nt..(k + 1) * nt]) * dt;
        let s = if w == 0.0 {
            row(i)
        } else {
            let (s0, s1) = (row(i), row(i + 1));
            if s0 > 0.0 && s1 > 0.0 {
                s0.powf(1.0 - w) * s1.powf(w)
            } else {
                (1.0 - w) * s0 + w * s1
            }
        };
        Ok(r * s)
    }
}

/// `∫_{t0}^{t1} e^{2t} dt`.
fn exp_moment0(t0: f64, t1: f64) -> f64 {
    0.5 * ((2.0 * t1).exp() - (2.0 * t0).exp())
}

/// `∫_{t0}^{t1} (t − a) e^{2t} dt`.
fn exp_moment1(a: f64, t0: f64, t1: f64) -> f64 {
    let f = |t: f64| (2.0 * t).exp() * (0.5 * (t - a) - 0.25);
    f(t1) - f(t0)
}

/// A `D`-vector-valued field sampled on a polar grid, r-major / θ-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<const D: usize> {
    grid: Arc<PolarGrid>,
    values: Vec<[f64; D]>,
}

/// The director coordinate `y` of a cone-valued map.
pub type VectorField = GridField<3>;
/// A map into `R⁴ ⊃ C_κ`, or a difference of such maps.
pub type AmbientField = GridField<4>;

impl<const D: usize> GridField<D> {
    pub fn new(grid: Arc<PolarGrid>, values: Vec<[f64; D]>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(LabError::Invalid(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        Ok(GridField { grid, values })
    }

    pub fn from_fn(grid: Arc<PolarGrid>, f: impl Fn(f64, f64) -> [f64; D] + Sync + Send) -> Self {
        let nt = grid.n_theta();
        let rows = par::map_indices(grid.n_radii(), |i| {
            let r = grid.radii()[i];
            (0..nt).map(|j| f(r, grid.theta(j))).collect::<Vec<_>>()
        });
        GridField { values: rows.into_iter().flatten().collect(), grid }
    }

    pub fn zeros(grid: Arc<PolarGrid>) -> Self {
        let n = grid.n_nodes();
        GridField { grid, values: vec![[0.0; D]; n] }
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; D]] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [[f64; D]] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<[f64; D]> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[[f64; D]] {
        let nt = self.grid.n_theta();
        &self.values[i * nt..(i + 1) * nt]
    }

    pub fn map(&self, f: impl Fn(f64, f64, [f64; D]) -> [f64; D]) -> Self {
        let nt = self.grid.n_theta();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| f(self.grid.radii()[k / nt], self.grid.theta(k % nt), *v))
            .collect();
        GridField { grid: self.grid.clone(), values }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|_, _, v| v.map(|x| c * x))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| std::array::from_fn(|c| a[c] - b[c]))
            .collect();
        GridField { grid: self.grid.clone(), values }
    }

    /// Per-node squared Euclidean norm.
    pub fn norm_squared_density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.iter().map(|x| x * x).sum()).collect()
    }

    /// Values on `∂B_r`, linear in `log r` between rings; exact rows at grid radii.
    pub fn restrict(&self, r: f64) -> Result<Vec<[f64; D]>> {
        let (i, w) = self.grid.locate(r)?;
        if w == 0.0 {
            return Ok(self.row(i).to_vec());
        }
        let (a, b) = (self.row(i), self.row(i + 1));
        Ok(a.iter()
            .zip(b)
            .map(|(x, y)| std::array::from_fn(|c| (1.0 - w) * x[c] + w * y[c]))
            .collect())
    }

    /// Values of `r^{−α} u(r, ·)` by four-point Lagrange interpolation in `log r`,
    /// exact for fields homogeneous of degree `α`.
    pub fn restrict_normalized(&self, r: f64, alpha: f64) -> Result<Vec<[f64; D]>> {
        let grid = &*self.grid;
        let (i, w) = grid.locate(r)?;
        let n = grid.n_radii();
        let scaled = |k: usize| -> Vec<[f64; D]> {
            let c = grid.radii()[k].powf(-alpha);
            self.row(k).iter().map(|v| v.map(|x| c * x)).collect()
        };
        if w == 0.0 {
            return Ok(scaled(i));
        }
        if n < 4 {
            let (a, b) = (scaled(i), scaled(i + 1));
            return Ok(a.iter().zip(&b).map(|(x, y)| std::array::from_fn(|c| (1.0 - w) * x[c] + w * y[c])).collect());
        }
        let start = i.saturating_sub(1).min(n - 4);
        let x = (r.ln() - grid.log_radii()[start]) / grid.log_step();
        let mut coef = [0.0; 4];
        for (a, c) in coef.iter_mut().enumerate() {
            *c = (0..4).filter(|&b| b != a).map(|b| (x - b as f64) / (a as f64 - b as f64)).product();
        }
        let rows: Vec<Vec<[f64; D]>> = (0..4).map(|a| scaled(start + a)).collect();
        Ok((0..grid.n_theta())
            .map(|j| std::array::from_fn(|c| (0..4).map(|a| coef[a] * rows[a][j][c]).sum()))
            .collect())
    }

    /// Per-node `(∂_r, r⁻¹∂_θ)` components.
    pub fn gradient(&self) -> Vec<[[f64; D]; 2]> {
        let dt = log_derivative(self);
        let dth = angular_derivative(self);
        let nt = self.grid.n_theta();
        dt.iter()
            .zip(&dth)
            .enumerate()
            .map(|(k, (a, b))| {
                let inv_r = 1.0 / self.grid.radii()[k / nt];
                [a.map(|x| x * inv_r), b.map(|x| x * inv_r)]
            })
            .collect()
    }

    /// Per-node `|∇v|²` summed over components.
    pub fn gradient_norm_squared(&self) -> Vec<f64> {
        self.gradient()
            .iter()
            .map(|g| g.iter().flat_map(|c| c.iter()).map(|x| x * x).sum())
            .collect()
    }
}

impl VectorField {
    pub fn boundary(&self) -> CircleFunction {
        CircleFunction::new(self.row(self.grid.n_radii() - 1).to_vec()).expect("grid n_theta is valid")
    }

    pub fn restrict_to_circle(&self, r: f64) -> Result<CircleFunction> {
        CircleFunction::new(self.restrict(r)?)
    }

    /// `u = (√(κ−1)|y|, y)`.
    pub fn lift(&self, kappa: Kappa) -> AmbientField {
        let slope = kappa.slope();
        let values = self
            .values
            .iter()
            .map(|y| [slope * Vector3::from(*y).norm(), y[0], y[1], y[2]])
            .collect();
        GridField { grid: self.grid.clone(), values }
    }

    pub fn rotated(&self, m: &nalgebra::Matrix3<f64>) -> Self {
        self.map(|_, _, y| (m * Vector3::from(y)).into())
    }

    /// CSV with header `r,theta,y1,y2,y3`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,theta,y1,y2,y3\n");
        let nt = self.grid.n_theta();
        for (k, v) in self.values.iter().enumerate() {
            let r = self.grid.radii()[k / nt];
            let th = self.grid.theta(k % nt);
            writeln!(s, "{r:.16e},{th:.16e},{:.16e},{:.16e},{:.16e}", v[0], v[1], v[2]).unwrap();
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "r,theta,y1,y2,y3" => {}
            other => return Err(LabError::Invalid(format!("unexpected CSV header {other:?}"))),
        }
        let mut radii: Vec<f64> = Vec::new();
        let mut values = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| LabError::Invalid(format!("line {}: {e}", ln + 2)))?;
            if cols.len() != 5 {
                return Err(LabError::Invalid(format!("line {}: expected 5 columns", ln + 2)));
            }
            if radii.last() != Some(&cols[0]) {
                radii.push(cols[0]);
            }
            values.push([cols[2], cols[3], cols[4]]);
        }
        if radii.is_empty() || values.len() % radii.len() != 0 {
            return Err(LabError::Invalid("CSV rows do not form a tensor grid".into()));
        }
        let nt = values.len() / radii.len();
        let grid = PolarGrid::from_radii(radii, nt)?;
        GridField::new(Arc::new(grid), values)
    }
}

pub const D1: [f64; 4] = [2.0 / 3.0, -1.0 / 12.0, 0.0, 0.0];
pub(crate) const D2_CENTER: f64 = -5.0 / 2.0;
pub(crate) const D2: [f64; 2] = [4.0 / 3.0, -1.0 / 12.0];

/// Nonzero entries of the log-radius first-derivative stencil at row `i` (unscaled by `1/h`).
pub(crate) fn radial_d1_row(n: usize, i: usize) -> [(usize, f64); 3] {
    if i == 0 {
        [(0, -1.5), (1, 2.0), (2, -0.5)]
    } else if i == n - 1 {
        [(n - 1, 1.5), (n - 2, -2.0), (n - 3, 0.5)]
    } else {
        [(i - 1, -0.5), (i, 0.0), (i + 1, 0.5)]
    }
}

/// Log-radius second-derivative stencil at row `i` (unscaled by `1/h²`).
pub(crate) fn radial_d2_row(n: usize, i: usize) -> [(usize, f64); 4] {
    if i == 0 {
        [(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)]
    } else if i == n - 1 {
        [(n - 1, 2.0), (n - 2, -5.0), (n - 3, 4.0), (n - 4, -1.0)]
    } else {
        [(i - 1, 1.0), (i, -2.0), (i + 1, 1.0), (i, 0.0)]
    }
}

/// Apply a per-row radial stencil to a field.
fn apply_radial<const D: usize, const K: usize>(
    field: &GridField<D>,
    stencil: impl Fn(usize, usize) -> [(usize, f64); K] + Sync + Send,
    scale: f64,
) -> Vec<[f64; D]> {
    let grid = field.grid();
    let (n, nt) = (grid.n_radii(), grid.n_theta());
    let mut out = vec![[0.0; D]; grid.n_nodes()];
    par::for_each_chunk(&mut out, nt, |i, row| {
        let st = stencil(n, i);
        for (j, o) in row.iter_mut().enumerate() {
            for &(k, c) in &st {
                if c != 0.0 {
                    let v = &field.values[k * nt + j];
                    for d in 0..D {
                        o[d] += c * v[d];
                    }
                }
            }
            for x in o.iter_mut() {
                *x *= scale;
            }
        }
    });
    out
}

/// `∂_t v`, `t = log r`.
pub fn log_derivative<const D: usize>(field: &GridField<D>) -> Vec<[f64; D]> {
    let h = field.grid().log_step();
    apply_radial(field, radial_d1_row, 1.0 / h)
}

/// `∂_t² v`.
pub fn log_second_derivative<const D: usize>(field: &GridField<D>) -> Vec<[f64; D]> {
    let h = field.grid().log_step();
    apply_radial(field, radial_d2_row, 1.0 / (h * h))
}

fn apply_angular<const D: usize>(values: &[[f64; D]], nt: usize, second: bool, h: f64) -> Vec<[f64; D]> {
    let mut out = vec![[0.0; D]; values.len()];
    par::for_each_chunk(&mut out, nt, |i, row| {
        let src = &values[i * nt..(i + 1) * nt];
        let at = |j: isize| &src[j.rem_euclid(nt as isize) as usize];
        for (j, o) in row.iter_mut().enumerate() {
            let j = j as isize;
            let (p1, m1, p2, m2, c0) = (at(j + 1), at(j - 1), at(j + 2), at(j - 2), at(j));
            for d in 0..D {
                o[d] = if second {
                    (D2_CENTER * c0[d] + D2[0] * (p1[d] + m1[d]) + D2[1] * (p2[d] + m2[d])) / (h * h)
                } else {
                    (D1[0] * (p1[d] - m1[d]) + D1[1] * (p2[d] - m2[d])) / h
                };
            }
        }
    });
    out
}

/// `∂_θ v` by the fourth-order periodic stencil.
pub fn angular_derivative<const D: usize>(field: &GridField<D>) -> Vec<[f64; D]> {
    apply_angular(&field.values, field.grid().n_theta(), false, field.grid().dtheta())
}

/// `∂_θ² v` by the fourth-order periodic stencil.
pub fn angular_second_derivative<const D: usize>(field: &GridField<D>) -> Vec<[f64; D]> {
    apply_angular(&field.values, field.grid().n_theta(), true, field.grid().dtheta())
}

/// `∂_t∂_θ v`.
pub fn mixed_derivative<const D: usize>(field: &GridField<D>) -> Vec<[f64; D]> {
    let dth = GridField { grid: field.grid.clone(), values: angular_derivative(field) };
    log_derivative(&dth)
}
