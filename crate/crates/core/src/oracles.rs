//! Independent reference solvers used to validate the spectral reconstruction.

use nalgebra::{DMatrix, DVector};

use crate::cone::Kappa;
use crate::error::{LabError, Result};
use crate::spectral::{assemble_lprime, FrameField};

/// Second-order finite-difference solution of the Jacobi equation on the
/// annulus `r₀ < r < 1` with Dirichlet data on both circles.
///
/// In `t = log r` the equation reads `ψ_tt + (2/√κ) ψ_t + 𝓛′ψ = 0`. The block
/// tridiagonal system is solved by block Thomas elimination. Returns the
/// solution at `n_t + 1` equispaced nodes in `t`, from `r₀` to `1`.
pub fn fd_jacobi_solve(kappa: Kappa, r0: f64, n_t: usize, inner: &FrameField, outer: &FrameField) -> Result<Vec<FrameField>> {
    let n_theta = outer.n_theta();
    if inner.n_theta() != n_theta {
        return Err(LabError::Invalid("boundary circles differ in resolution".into()));
    }
    if !(r0 > 0.0 && r0 < 1.0) || n_t < 4 {
        return Err(LabError::Invalid(format!("need 0 < r0 < 1 and n_t >= 4, got {r0}, {n_t}")));
    }
    let m = assemble_lprime(n_theta, kappa)?;
    let dim = 3 * n_theta;
    let h = -r0.ln() / n_t as f64;
    let b = 2.0 / kappa.sqrt_kappa();
    let lower = 1.0 / (h * h) - b / (2.0 * h);
    let upper = 1.0 / (h * h) + b / (2.0 * h);
    let diag = DMatrix::<f64>::identity(dim, dim) * (-2.0 / (h * h)) - &m;
    let left = inner.to_scaled();
    let right = outer.to_scaled();
    let interior = n_t - 1;

    // Forward sweep: keep `D'_i⁻¹` and the modified right-hand sides.
    let mut inv = Vec::with_capacity(interior);
    let mut rhs = Vec::with_capacity(interior);
    for i in 0..interior {
        let mut d = diag.clone();
        let mut f = DVector::zeros(dim);
        if i == 0 {
            f -= &left * lower;
        } else {
            let prev: &DMatrix<f64> = &inv[i - 1];
            d -= prev * (lower * upper);
            f -= prev * &rhs[i - 1] as &DVector<f64> * lower;
        }
        if i == interior - 1 {
            f -= &right * upper;
        }
        let di = d.try_inverse().ok_or(LabError::SolverFailure { residual: f64::INFINITY })?;
        inv.push(di);
        rhs.push(f);
    }
    let mut sol = vec![DVector::zeros(dim); interior];
    for i in (0..interior).rev() {
        let mut f = rhs[i].clone();
        if i + 1 < interior {
            f -= &sol[i + 1] * upper;
        }
        sol[i] = &inv[i] * f;
    }
    let mut out = Vec::with_capacity(n_t + 1);
    out.push(inner.clone());
    out.extend(sol.iter().map(|v| FrameField::from_scaled(v, kappa)));
    out.push(outer.clone());
    Ok(out)
}

/// `(∫_{r₀<|x|<1} |a − b|²)^{1/2}` for two families sampled at the same
/// equispaced nodes in `log r`.
pub fn annulus_l2_distance(r0: f64, a: &[FrameField], b: &[FrameField]) -> f64 {
    let n_t = a.len() - 1;
    let h = -r0.ln() / n_t as f64;
    let mut total = 0.0;
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let diff = FrameField::from_scaled(&(x.to_scaled() - y.to_scaled()), x.kappa);
        let r = (r0.ln() + i as f64 * h).exp();
        let w = if i == 0 || i == n_t { 0.5 } else { 1.0 };
        total += w * h * r * r * diff.inner(&diff);
    }
    total.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{eigendecompose, expand_and_reconstruct};

    #[test]
    fn matches_separable_solution() {
        let kappa = Kappa::new(4.0).unwrap();
        let n = 32;
        let d = eigendecompose(&assemble_lprime(n, kappa).unwrap(), n, kappa).unwrap();
        let r0: f64 = 0.1;
        let n_t = 1000;
        for j in [4, 9, 14] {
            let psi = d.eigenfield(j);
            let gamma = d.exponents[j].retained().unwrap();
            let inner = psi.scaled(r0.powf(gamma));
            let fd = fd_jacobi_solve(kappa, r0, n_t, &inner, &psi).unwrap();
            let prof = expand_and_reconstruct(&d, &psi, &inner, r0, true).unwrap();
            let h = -r0.ln() / n_t as f64;
            let exact: Vec<FrameField> = (0..=n_t).map(|i| prof.eval((r0.ln() + i as f64 * h).exp())).collect();
            let err = annulus_l2_distance(r0, &fd, &exact);
            assert!(err < 1e-4, "mode {j}: {err}");
        }
    }
}
