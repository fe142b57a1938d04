//! The scale-adjusted `C²`-type norm used to measure closeness to a tangent map.

use crate::error::{LabError, Result};
use crate::grid::{
    angular_derivative, angular_second_derivative, log_derivative, log_second_derivative, mixed_derivative, GridField,
};

/// Which radius window a `(σ, ρ)` pair selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusWindow {
    /// `ρ ≤ r ≤ σ`.
    Standard,
    /// `ρ² ≤ r ≤ σ²`, for fields pulled back through the squaring lift.
    Lifted,
}

/// Per-node Frobenius norms of the gradient and of the Cartesian Hessian.
pub fn derivative_norms<const D: usize>(field: &GridField<D>) -> (Vec<f64>, Vec<f64>) {
    let grid = field.grid();
    let nt = grid.n_theta();
    let ut = log_derivative(field);
    let uth = angular_derivative(field);
    let utt = log_second_derivative(field);
    let uthth = angular_second_derivative(field);
    let utth = mixed_derivative(field);
    let mut grad = Vec::with_capacity(grid.n_nodes());
    let mut hess = Vec::with_capacity(grid.n_nodes());
    for k in 0..grid.n_nodes() {
        let r = grid.radii()[k / nt];
        let (mut g2, mut h2) = (0.0, 0.0);
        for d in 0..D {
            g2 += ut[k][d] * ut[k][d] + uth[k][d] * uth[k][d];
            let hrr = utt[k][d] - ut[k][d];
            let hrt = utth[k][d] - uth[k][d];
            let htt = uthth[k][d] + ut[k][d];
            h2 += hrr * hrr + 2.0 * hrt * hrt + htt * htt;
        }
        grad.push(g2.sqrt() / r);
        hess.push(h2.sqrt() / (r * r));
    }
    (grad, hess)
}

/// `sup_r ( ‖u_r‖_∞ + r‖∇u_r‖_∞ + r²‖∇²u_r‖_∞ )` on `∂B_r`, with `u_r = r^{−α}u`,
/// over the grid radii in the selected window.
pub fn weighted_norm<const D: usize>(
    field: &GridField<D>,
    sigma: f64,
    rho: f64,
    alpha: f64,
    window: RadiusWindow,
) -> Result<f64> {
    if !(rho > 0.0 && rho < sigma && sigma <= 1.0) {
        return Err(LabError::Invalid(format!("need 0 < rho < sigma <= 1, got rho={rho}, sigma={sigma}")));
    }
    let (lo, hi) = match window {
        RadiusWindow::Standard => (rho, sigma),
        RadiusWindow::Lifted => (rho * rho, sigma * sigma),
    };
    let grid = field.grid();
    let slack = 1e-12;
    if lo < grid.r_inner() * (1.0 - slack) || hi > grid.r_max() * (1.0 + slack) {
        return Err(LabError::Range { lo, hi, min: grid.r_inner(), max: grid.r_max() });
    }
    let rows: Vec<usize> = (0..grid.n_radii())
        .filter(|&i| {
            let r = grid.radii()[i];
            r >= lo * (1.0 - slack) && r <= hi * (1.0 + slack)
        })
        .collect();
    if rows.is_empty() {
        return Err(LabError::Range { lo, hi, min: grid.r_inner(), max: grid.r_max() });
    }
    let (grad, hess) = derivative_norms(field);
    let nt = grid.n_theta();
    let mut best = 0.0f64;
    for i in rows {
        let r = grid.radii()[i];
        let scale = r.powf(-alpha);
        let (mut a, mut b, mut c) = (0.0f64, 0.0f64, 0.0f64);
        for j in 0..nt {
            let k = i * nt + j;
            let v = field.values()[k];
            a = a.max(v.iter().map(|x| x * x).sum::<f64>().sqrt());
            b = b.max(grad[k]);
            c = c.max(hess[k]);
        }
        best = best.max(scale * (a + r * b + r * r * c));
    }
    Ok(best)
}
