//! The linearized operator on the circle, its spectrum, radial exponents and
//! the separable reconstruction of Jacobi fields.
//!
//! Tangent Jacobi fields along the lifted equator are written in the moving
//! frame as `ψ̃ = (√(κ−1) f, f n + g n⊥ + h e₃)`. Substituting into the
//! operator and reading off the `ψ̃₁`, `n⊥` and `e₃` components gives
//!
//! ```text
//! f'' − (4/κ) f − (2/κ) g'
//! g'' + 2 f'
//! h'' + h
//! ```
//!
//! while the `n` component reads `f'' + 4(κ−1)f/κ − (2/κ) g'`. With
//! `F = √κ f` the first three rows form a symmetric operator in
//! `L²(S¹; R³)`, and `|ψ̃|² = F² + g² + h²`. Eigenvalues are reported for
//! `−𝓛′`, so the spectrum is bounded below and the radial equation for a mode
//! is `a'' + (1 + 2/√κ) a'/r − λ a/r² = 0`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3, Vector4};

use crate::circle::Fourier;
use crate::cone::Kappa;
use crate::error::{LabError, Result};

/// Coefficients of a tangent field in the frame `(n, n⊥, e₃)` on uniform angles.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameField {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub kappa: Kappa,
}

impl FrameField {
    pub fn new(f: Vec<f64>, g: Vec<f64>, h: Vec<f64>, kappa: Kappa) -> Result<Self> {
        let n = f.len();
        if g.len() != n || h.len() != n || n < 8 || !n.is_multiple_of(2) {
            return Err(LabError::Invalid("frame channels must share an even length >= 8".into()));
        }
        Ok(FrameField { f, g, h, kappa })
    }

    pub fn from_fn(n: usize, kappa: Kappa, f: impl Fn(f64) -> [f64; 3]) -> Result<Self> {
        let vals: Vec<[f64; 3]> = (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).collect();
        Self::new(vals.iter().map(|v| v[0]).collect(), vals.iter().map(|v| v[1]).collect(), vals.iter().map(|v| v[2]).collect(), kappa)
    }

    pub fn zeros(n: usize, kappa: Kappa) -> Self {
        FrameField { f: vec![0.0; n], g: vec![0.0; n], h: vec![0.0; n], kappa }
    }

    pub fn n_theta(&self) -> usize {
        self.f.len()
    }

    /// Stacked `(F, g, h)` with `F = √κ f`.
    pub fn to_scaled(&self) -> DVector<f64> {
        let sk = self.kappa.sqrt_kappa();
        let n = self.n_theta();
        DVector::from_fn(3 * n, |i, _| match i / n {
            0 => sk * self.f[i],
            1 => self.g[i - n],
            _ => self.h[i - 2 * n],
        })
    }

    pub fn from_scaled(v: &DVector<f64>, kappa: Kappa) -> Self {
        let n = v.len() / 3;
        let sk = kappa.sqrt_kappa();
        FrameField {
            f: (0..n).map(|j| v[j] / sk).collect(),
            g: (0..n).map(|j| v[n + j]).collect(),
            h: (0..n).map(|j| v[2 * n + j]).collect(),
            kappa,
        }
    }

    /// `∫_{S¹} ⟨a, b⟩_{R⁴}` by the rectangle rule.
    pub fn inner(&self, other: &FrameField) -> f64 {
        let dth = 2.0 * PI / self.n_theta() as f64;
        self.to_scaled().dot(&other.to_scaled()) * dth
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let m = |v: &Vec<f64>| v.iter().map(|x| c * x).collect();
        FrameField { f: m(&self.f), g: m(&self.g), h: m(&self.h), kappa: self.kappa }
    }

    /// Ambient samples `(√(κ−1) f, f n + g n⊥ + h e₃)` in `R⁴`.
    pub fn to_ambient(&self) -> Vec<Vector4<f64>> {
        let n = self.n_theta();
        let s = self.kappa.slope();
        (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                let (c, si) = (t.cos(), t.sin());
                let (f, g, h) = (self.f[j], self.g[j], self.h[j]);
                Vector4::new(s * f, f * c - g * si, f * si + g * c, h)
            })
            .collect()
    }

    /// Frame coefficients of the `R³` part of ambient samples.
    pub fn from_ambient(samples: &[Vector4<f64>], kappa: Kappa) -> Result<Self> {
        let n = samples.len();
        let mut f = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n);
        let mut h = Vec::with_capacity(n);
        for (j, v) in samples.iter().enumerate() {
            let t = 2.0 * PI * j as f64 / n as f64;
            let (c, s) = (t.cos(), t.sin());
            f.push(v[1] * c + v[2] * s);
            g.push(-v[1] * s + v[2] * c);
            h.push(v[3]);
        }
        Self::new(f, g, h, kappa)
    }
}

/// Trigonometric collocation differentiation matrices on `n` equispaced points.
pub fn fourier_matrices(n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let h = 2.0 * PI / n as f64;
    let d1 = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let m = i as i64 - j as i64;
        let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        0.5 * sign / (0.5 * m as f64 * h).tan()
    });
    let d2 = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return -PI * PI / (3.0 * h * h) - 1.0 / 6.0;
        }
        let m = i as i64 - j as i64;
        let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let s = (0.5 * m as f64 * h).sin();
        -0.5 * sign / (s * s)
    });
    (d1, d2)
}

/// Matrix of `−𝓛′` on stacked `(F, g, h)`.
pub fn assemble_lprime(n_theta: usize, kappa: Kappa) -> Result<DMatrix<f64>> {
    if n_theta < 16 || !n_theta.is_multiple_of(2) {
        return Err(LabError::Invalid(format!("n_theta must be even and >= 16, got {n_theta}")));
    }
    let (d1, d2) = fourier_matrices(n_theta);
    let k = kappa.value();
    let c = 2.0 / kappa.sqrt_kappa();
    let n = n_theta;
    let mut m = DMatrix::zeros(3 * n, 3 * n);
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            m[(i, j)] = -(d2[(i, j)] - 4.0 / k * id);
            m[(i, n + j)] = c * d1[(i, j)];
            m[(n + i, j)] = -c * d1[(i, j)];
            m[(n + i, n + j)] = -d2[(i, j)];
            m[(2 * n + i, 2 * n + j)] = -(d2[(i, j)] + id);
        }
    }
    Ok(m)
}

/// Channel outputs of `𝓛′` on a frame field: `(ψ̃₁/√(κ−1), n, n⊥, e₃)` components.
pub fn lprime_channels(field: &FrameField) -> [Vec<f64>; 4] {
    let n = field.n_theta();
    let four = Fourier::new(n);
    let k = field.kappa.value();
    let (f1, f2) = (four.derivative(&field.f, 1), four.derivative(&field.f, 2));
    let g1 = four.derivative(&field.g, 1);
    let g2 = four.derivative(&field.g, 2);
    let h2 = four.derivative(&field.h, 2);
    let psi1 = (0..n).map(|j| f2[j] - 4.0 / k * field.f[j] - 2.0 / k * g1[j]).collect();
    let nch = (0..n).map(|j| f2[j] + 4.0 * (k - 1.0) / k * field.f[j] - 2.0 / k * g1[j]).collect();
    let perp = (0..n).map(|j| g2[j] + 2.0 * f1[j]).collect();
    let e3 = (0..n).map(|j| h2[j] + field.h[j]).collect();
    [psi1, nch, perp, e3]
}

/// `𝓛′` evaluated directly from its ambient definition, with spectral
/// derivatives of the `R⁴` samples.
pub fn lprime_coordinates(field: &FrameField) -> Vec<Vector4<f64>> {
    let n = field.n_theta();
    let kappa = field.kappa;
    let k = kappa.value();
    let s = kappa.slope();
    let psi = field.to_ambient();
    let four = Fourier::new(n);
    let comp = |c: usize, order: u32| four.derivative(&psi.iter().map(|v| v[c]).collect::<Vec<_>>(), order);
    let d1: [Vec<f64>; 4] = std::array::from_fn(|c| comp(c, 1));
    let d2: [Vec<f64>; 4] = std::array::from_fn(|c| comp(c, 2));
    let jk = |a: f64, b: Vector3<f64>| Vector4::new(-a, (k - 1.0) * b[0], (k - 1.0) * b[1], (k - 1.0) * b[2]);
    (0..n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            let nn = Vector3::new(t.cos(), t.sin(), 0.0);
            let np = Vector3::new(-t.sin(), t.cos(), 0.0);
            let p2 = Vector3::new(psi[j][1], psi[j][2], psi[j][3]);
            let dp2 = Vector3::new(d1[1][j], d1[2][j], d1[3][j]);
            let second = Vector4::new(d2[0][j], d2[1][j], d2[2][j], d2[3][j]);
            let bracket = 2.0 / k * (np.dot(&dp2) + nn.dot(&p2));
            second + psi[j] / k + jk(s, nn) * bracket + jk(s * p2.dot(&nn), p2) / k
        })
        .collect()
}

/// Which block of a Fourier mode an eigenvalue comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeChannel {
    /// The coupled `(f, g)` block.
    Coupled,
    /// The `f` channel alone (`k = 0` or Nyquist).
    F,
    /// The `g` channel alone (`k = 0` or Nyquist).
    G,
    H,
}

/// Eigenvalues of `−𝓛′` restricted to Fourier mode `k`, with multiplicity.
pub fn mode_oracle(k: usize, kappa: Kappa) -> Vec<(f64, ModeChannel)> {
    let kv = kappa.value();
    if k == 0 {
        return vec![(4.0 / kv, ModeChannel::F), (0.0, ModeChannel::G), (-1.0, ModeChannel::H)];
    }
    let k2 = (k * k) as f64;
    let disc = (4.0 / (kv * kv) + 4.0 * k2 / kv).sqrt();
    let (lo, hi) = (k2 + 2.0 / kv - disc, k2 + 2.0 / kv + disc);
    let hv = k2 - 1.0;
    vec![
        (lo, ModeChannel::Coupled),
        (lo, ModeChannel::Coupled),
        (hi, ModeChannel::Coupled),
        (hi, ModeChannel::Coupled),
        (hv, ModeChannel::H),
        (hv, ModeChannel::H),
    ]
}

/// Discrete spectrum of the collocation matrix on `n_theta` points, from the mode
/// formulas. At the Nyquist mode the first-derivative matrix vanishes, so the
/// `f` and `g` blocks decouple there.
pub fn oracle_spectrum(n_theta: usize, kappa: Kappa) -> Vec<f64> {
    let mut out: Vec<f64> = (0..n_theta / 2).flat_map(|k| mode_oracle(k, kappa)).map(|(v, _)| v).collect();
    let kn = (n_theta / 2) as f64;
    out.extend([kn * kn + 4.0 / kappa.value(), kn * kn, kn * kn - 1.0]);
    out.sort_by(f64::total_cmp);
    out
}

/// `Λ`, the smallest positive eigenvalue over all modes.
pub fn smallest_positive_eigenvalue(kappa: Kappa) -> f64 {
    (0..8)
        .flat_map(|k| mode_oracle(k, kappa))
        .map(|(v, _)| v)
        .filter(|&v| v > 1e-12)
        .fold(f64::INFINITY, f64::min)
}

/// `Γ = −1/√κ + √(1/κ + Λ)`.
pub fn gamma_gap(kappa: Kappa) -> f64 {
    let lam = smallest_positive_eigenvalue(kappa);
    -1.0 / kappa.sqrt_kappa() + (1.0 / kappa.value() + lam).sqrt()
}

/// Classes of radial behaviour for one eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialExponent {
    /// `λ > 0`: `r^{γ₊}` grows, `r^{γ₋}` is singular and excluded.
    Growth { gamma: f64, gamma_minus: f64 },
    /// `λ = 0`: the constant branch is retained; the second solution is
    /// `r^{−2/√κ}`, or `r^{−1/√κ} log r` in the degenerate case `1/κ + λ = 0`.
    Kernel { gamma: f64, gamma_minus: f64 },
    /// `−1/κ ≤ λ < 0`: two decaying powers; both have finite energy.
    Decay { gamma: f64, gamma_minus: f64 },
    /// `1/κ + λ = 0`: `r^{γ}` and `r^{γ} log r` with `γ = −1/√κ`.
    Logarithmic { gamma: f64 },
    /// `1/κ + λ < 0`: `r^{−1/√κ}` times `cos`/`sin` of `ω log r`; excluded by energy.
    Oscillatory { real: f64, omega: f64 },
}

impl RadialExponent {
    pub fn label(&self) -> &'static str {
        match self {
            RadialExponent::Growth { .. } | RadialExponent::Decay { .. } => "J1",
            RadialExponent::Kernel { .. } => "J2",
            RadialExponent::Logarithmic { .. } | RadialExponent::Oscillatory { .. } => "J3",
        }
    }

    /// Exponent of the branch that survives the bounded-energy selection.
    pub fn retained(&self) -> Option<f64> {
        match *self {
            RadialExponent::Growth { gamma, .. } | RadialExponent::Kernel { gamma, .. } | RadialExponent::Decay { gamma, .. } => {
                Some(gamma)
            }
            _ => None,
        }
    }
}

/// Relative width of the zero class.
pub const ZERO_TOL: f64 = 1e-8;

pub fn radial_exponent(lambda: f64, kappa: Kappa, zero_tol: f64) -> RadialExponent {
    let a = 1.0 / kappa.sqrt_kappa();
    let disc = 1.0 / kappa.value() + lambda;
    if lambda.abs() <= zero_tol {
        return RadialExponent::Kernel { gamma: 0.0, gamma_minus: -2.0 * a };
    }
    if disc.abs() <= zero_tol {
        return RadialExponent::Logarithmic { gamma: -a };
    }
    if disc < 0.0 {
        return RadialExponent::Oscillatory { real: -a, omega: (-disc).sqrt() };
    }
    let s = disc.sqrt();
    if lambda > 0.0 {
        RadialExponent::Growth { gamma: -a + s, gamma_minus: -a - s }
    } else {
        RadialExponent::Decay { gamma: -a + s, gamma_minus: -a - s }
    }
}

/// `r² a'' + (1 + 2/√κ) r a' − λ a` for `a = r^γ`, evaluated analytically.
pub fn radial_ode_residual(gamma: f64, lambda: f64, kappa: Kappa, r: f64) -> f64 {
    let a = r.powf(gamma);
    let ra1 = gamma * a;
    let r2a2 = gamma * (gamma - 1.0) * a;
    r2a2 + (1.0 + 2.0 / kappa.sqrt_kappa()) * ra1 - lambda * a
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub kappa: Kappa,
    pub n_theta: usize,
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors in stacked `(F, g, h)` form, Euclidean-normalized.
    pub vectors: DMatrix<f64>,
    pub exponents: Vec<RadialExponent>,
    pub zero_tolerance: f64,
    pub symmetry_defect: f64,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `Ψ̃_j` as an `L²(S¹)`-normalized frame field.
    pub fn eigenfield(&self, j: usize) -> FrameField {
        let scale = 1.0 / (2.0 * PI / self.n_theta as f64).sqrt();
        FrameField::from_scaled(&(self.vectors.column(j) * scale), self.kappa)
    }

    pub fn kernel_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| matches!(self.exponents[j], RadialExponent::Kernel { .. })).collect()
    }

    /// Largest principal angle between the computed kernel and
    /// `span{g ≡ 1, h = cos θ, h = sin θ}`.
    pub fn kernel_angle(&self) -> f64 {
        let n = self.n_theta;
        let ker = self.kernel_indices();
        let k = DMatrix::from_fn(3 * n, ker.len(), |i, c| self.vectors[(i, ker[c])]);
        let mut e = DMatrix::zeros(3 * n, 3);
        for j in 0..n {
            let t = 2.0 * PI * j as f64 / n as f64;
            e[(n + j, 0)] = 1.0;
            e[(2 * n + j, 1)] = t.cos();
            e[(2 * n + j, 2)] = t.sin();
        }
        for mut c in e.column_iter_mut() {
            let nrm = c.norm();
            c /= nrm;
        }
        let resid = &e - &k * (k.transpose() * &e);
        let ref_side = resid.singular_values().max().min(1.0).asin();
        let k_side = (&k - &e * (e.transpose() * &k)).singular_values().max().min(1.0).asin();
        ref_side.max(k_side)
    }

    /// Per-eigenvector fractions of `‖F‖², ‖g‖², ‖h‖²`.
    pub fn channel_weights(&self, j: usize) -> [f64; 3] {
        let n = self.n_theta;
        let c = self.vectors.column(j);
        let w: [f64; 3] = std::array::from_fn(|b| c.rows(b * n, n).norm_squared());
        let s: f64 = w.iter().sum();
        w.map(|x| x / s)
    }

    /// Spectrum CSV `j,lambda,gamma,class,channel_weights_f,g,h`.
    pub fn to_csv(&self, max_rows: usize) -> String {
        let mut s = String::from("j,lambda,gamma,class,channel_weights_f,g,h\n");
        for j in 0..self.len().min(max_rows) {
            let gamma = self.exponents[j].retained().map(|g| format!("{g:.16e}")).unwrap_or_else(|| "nan".into());
            let w = self.channel_weights(j);
            writeln!(
                s,
                "{j},{:.16e},{gamma},{},{:.16e},{:.16e},{:.16e}",
                self.eigenvalues[j],
                self.exponents[j].label(),
                w[0],
                w[1],
                w[2]
            )
            .unwrap();
        }
        s
    }
}

/// Full symmetric eigendecomposition of an assembled `−𝓛′`.
pub fn eigendecompose(matrix: &DMatrix<f64>, n_theta: usize, kappa: Kappa) -> Result<SpectralDecomposition> {
    let asym = (matrix - matrix.transpose()).abs().max();
    let scale = matrix.abs().max().max(1.0);
    if asym > 1e-12 * scale {
        return Err(LabError::Invalid(format!("matrix is not symmetric (defect {asym:e})")));
    }
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::from_fn(matrix.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    // Fix the sign of each vector so its largest entry is positive.
    for mut col in vectors.column_iter_mut() {
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    for (c, &lam) in eigenvalues.iter().enumerate() {
        let v = vectors.column(c);
        let res = (matrix * v - v * lam).norm();
        if res > 1e-8 {
            return Err(LabError::SolverFailure { residual: res });
        }
    }
    let lam_max = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero_tolerance = ZERO_TOL * (1.0 + lam_max);
    let exponents = eigenvalues.iter().map(|&l| radial_exponent(l, kappa, zero_tolerance)).collect();
    Ok(SpectralDecomposition { kappa, n_theta, eigenvalues, vectors, exponents, zero_tolerance, symmetry_defect: asym })
}

/// Per-mode radial coefficients of a separable solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProfile {
    pub lambda: f64,
    pub exponent: RadialExponent,
    /// Coefficient of the retained branch, normalized to 1 at `r = 1`.
    pub a: f64,
    /// Coefficient of the second branch, normalized to 1 at `r = r₀`.
    pub b: f64,
}

#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub r0: f64,
    pub modes: Vec<ModeProfile>,
    basis: DMatrix<f64>,
    kappa: Kappa,
    bounded: bool,
}

impl ModeProfile {
    fn eval(&self, r: f64, r0: f64) -> f64 {
        let (p, q) = branches(&self.exponent, r, r0);
        self.a * p + self.b * q
    }

    fn eval_dr(&self, r: f64, r0: f64) -> f64 {
        let (p, q) = branch_derivatives(&self.exponent, r, r0);
        self.a * p + self.b * q
    }
}

/// The two radial branches, normalized to 1 at `r = 1` (first) and `r = r₀` (second).
fn branches(e: &RadialExponent, r: f64, r0: f64) -> (f64, f64) {
    match *e {
        RadialExponent::Growth { gamma, gamma_minus }
        | RadialExponent::Kernel { gamma, gamma_minus }
        | RadialExponent::Decay { gamma, gamma_minus } => (r.powf(gamma), (r / r0).powf(gamma_minus)),
        RadialExponent::Logarithmic { gamma } => (r.powf(gamma), r.powf(gamma) * r.ln() / (r0.powf(gamma) * r0.ln())),
        RadialExponent::Oscillatory { real, omega } => {
            let base = r.powf(real);
            (base * (omega * r.ln()).cos(), base * (omega * r.ln()).sin())
        }
    }
}

fn branch_derivatives(e: &RadialExponent, r: f64, r0: f64) -> (f64, f64) {
    match *e {
        RadialExponent::Growth { gamma, gamma_minus }
        | RadialExponent::Kernel { gamma, gamma_minus }
        | RadialExponent::Decay { gamma, gamma_minus } => {
            (gamma * r.powf(gamma - 1.0), gamma_minus * (r / r0).powf(gamma_minus) / r)
        }
        RadialExponent::Logarithmic { gamma } => {
            let c = 1.0 / (r0.powf(gamma) * r0.ln());
            (gamma * r.powf(gamma - 1.0), c * r.powf(gamma - 1.0) * (gamma * r.ln() + 1.0))
        }
        RadialExponent::Oscillatory { real, omega } => {
            let (c, s) = ((omega * r.ln()).cos(), (omega * r.ln()).sin());
            let base = r.powf(real - 1.0);
            (base * (real * c - omega * s), base * (real * s + omega * c))
        }
    }
}

/// Threshold below which a mode's data counts as absent, relative to the largest coefficient.
const ACTIVE: f64 = 1e-13;

/// Expand boundary data at `r = 1` and `r = r₀` on the eigenbasis and solve the
/// two-point radial problem per mode. With `bounded_energy` only the finite-energy
/// branch fitted to the outer data is kept, and `J₃` modes are dropped.
pub fn expand_and_reconstruct(
    decomp: &SpectralDecomposition,
    boundary: &FrameField,
    inner: &FrameField,
    r0: f64,
    bounded_energy: bool,
) -> Result<RadialProfile> {
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(LabError::Invalid(format!("r0 must lie in (0, 1), got {r0}")));
    }
    if boundary.n_theta() != decomp.n_theta || inner.n_theta() != decomp.n_theta {
        return Err(LabError::Invalid("frame fields do not match the decomposition resolution".into()));
    }
    let dth = 2.0 * PI / decomp.n_theta as f64;
    let norm = 1.0 / dth.sqrt();
    let basis = &decomp.vectors * norm;
    let c1 = basis.transpose() * boundary.to_scaled() * dth;
    let c0 = basis.transpose() * inner.to_scaled() * dth;
    let biggest = c1.amax().max(c0.amax());
    let mut modes = Vec::with_capacity(decomp.len());
    for j in 0..decomp.len() {
        let e = decomp.exponents[j];
        let (x1, x0) = (c1[j], c0[j]);
        let active = x1.abs().max(x0.abs()) > ACTIVE * biggest;
        let (a, b) = if bounded_energy {
            match e.retained() {
                Some(_) => (x1, 0.0),
                None => (0.0, 0.0),
            }
        } else if !active {
            (0.0, 0.0)
        } else {
            let (p1, q1) = branches(&e, 1.0, r0);
            let (p0, q0) = branches(&e, r0, r0);
            let m = nalgebra::Matrix2::new(p1, q1, p0, q0);
            let sv = m.singular_values();
            let cond = sv.max() / sv.min();
            if !(cond <= 1e12) {
                return Err(LabError::IllConditioned { condition: cond });
            }
            let sol = m.lu().solve(&nalgebra::Vector2::new(x1, x0)).ok_or(LabError::IllConditioned { condition: f64::INFINITY })?;
            (sol[0], sol[1])
        };
        modes.push(ModeProfile { lambda: decomp.eigenvalues[j], exponent: e, a, b });
    }
    Ok(RadialProfile { r0, modes, basis, kappa: decomp.kappa, bounded: bounded_energy })
}

impl RadialProfile {
    pub fn is_bounded_energy(&self) -> bool {
        self.bounded
    }

    fn combine(&self, coeff: impl Fn(&ModeProfile) -> f64) -> FrameField {
        let c = DVector::from_iterator(self.modes.len(), self.modes.iter().map(coeff));
        FrameField::from_scaled(&(&self.basis * c), self.kappa)
    }

    /// The reconstructed field on the circle of radius `r`.
    pub fn eval(&self, r: f64) -> FrameField {
        self.combine(|m| m.eval(r, self.r0))
    }

    /// `∂_r` of the reconstruction on the circle of radius `r`.
    pub fn eval_dr(&self, r: f64) -> FrameField {
        self.combine(|m| m.eval_dr(r, self.r0))
    }

    /// Whether every branch with a nonzero coefficient has finite radial energy
    /// `∫_{B₁} |∂_r w̃|²` near the origin.
    pub fn energy_finite(&self) -> bool {
        self.modes.iter().all(|m| {
            let second_ok = m.b == 0.0;
            let first_ok = m.a == 0.0 || m.exponent.retained().is_some();
            first_ok && second_ok
        })
    }

    /// `∫_{r_lo<|x|<1} |∂_r w̃|²`, using orthonormality of the eigenbasis and
    /// Gauss–Legendre quadrature in `log r`.
    pub fn radial_energy(&self, r_lo: f64) -> f64 {
        let (lo, hi) = (r_lo.ln(), 0.0);
        let panels = 64;
        let step = (hi - lo) / panels as f64;
        let nodes = [-0.861_136_311_594_053, -0.339_981_043_584_856, 0.339_981_043_584_856, 0.861_136_311_594_053];
        let weights = [0.347_854_845_137_454, 0.652_145_154_862_546, 0.652_145_154_862_546, 0.347_854_845_137_454];
        let mut total = 0.0;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * step;
            for (x, w) in nodes.iter().zip(weights) {
                let t = mid + 0.5 * step * x;
                let r = t.exp();
                let s: f64 = self.modes.iter().map(|m| m.eval_dr(r, self.r0).powi(2)).sum();
                total += 0.5 * step * w * s * r * r;
            }
        }
        total
    }
}
