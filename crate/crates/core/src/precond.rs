//! Preconditioner for the energy Hessian: the exact inverse of its quadratic
//! part (plus the cap), diagonalized in θ by the FFT and solved per Fourier
//! mode with a banded Cholesky factorization.

use rustfft::num_complex::Complex64;

use crate::circle::Fourier;
use crate::cone::Kappa;
use crate::energy::{angular_symbol, ring_trapezoid};
use crate::grid::PolarGrid;
use crate::par;

/// Cholesky factor of a symmetric positive definite matrix with two off-diagonals.
#[derive(Debug, Clone)]
struct BandedCholesky {
    /// Row `i` holds `L[i][i−2], L[i][i−1], L[i][i]`.
    l: Vec<[f64; 3]>,
}

impl BandedCholesky {
    /// `a[i] = [A[i][i−2], A[i][i−1], A[i][i]]`.
    fn factor(a: &[[f64; 3]]) -> Self {
        let n = a.len();
        let mut l = vec![[0.0; 3]; n];
        for i in 0..n {
            let l2 = if i >= 2 { a[i][0] / l[i - 2][2] } else { 0.0 };
            let l1 = if i >= 1 {
                let cross = if i >= 2 { l2 * l[i - 1][1] } else { 0.0 };
                (a[i][1] - cross) / l[i - 1][2]
            } else {
                0.0
            };
            let d = a[i][2] - l1 * l1 - l2 * l2;
            assert!(d > 0.0, "mode matrix is not positive definite");
            l[i] = [l2, l1, d.sqrt()];
        }
        BandedCholesky { l }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n {
            let mut s = b[i];
            if i >= 1 {
                s -= self.l[i][1] * b[i - 1];
            }
            if i >= 2 {
                s -= self.l[i][0] * b[i - 2];
            }
            b[i] = s / self.l[i][2];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.l[i + 1][1] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.l[i + 2][0] * b[i + 2];
            }
            b[i] = s / self.l[i][2];
        }
    }
}

pub struct Preconditioner {
    n_free: usize,
    n_theta: usize,
    fourier: Fourier,
    modes: Vec<BandedCholesky>,
}

impl Preconditioner {
    pub fn new(grid: &PolarGrid, kappa: Kappa, cap_degree: Option<f64>) -> Self {
        let (n, nt) = (grid.n_radii(), grid.n_theta());
        let n_free = n - 1;
        let (h, dth) = (grid.log_step(), grid.dtheta());
        let tw = ring_trapezoid(grid);
        let modes = (0..=nt / 2)
            .map(|k| {
                let lam = angular_symbol(k, nt);
                let mut a = vec![[0.0; 3]; n_free];
                for (i, row) in a.iter_mut().enumerate() {
                    let links = if i == 0 { 1.0 } else { 2.0 };
                    row[2] = 2.0 * (links * dth / h + tw[i] / dth * lam);
                    if i > 0 {
                        row[1] = -2.0 * dth / h;
                    }
                }
                if let Some(beta) = cap_degree {
                    a[0][2] += lam / (beta * dth) + beta * kappa.value() * dth;
                }
                BandedCholesky::factor(&a)
            })
            .collect();
        Preconditioner { n_free, n_theta: nt, fourier: Fourier::new(nt), modes }
    }

    /// `M⁻¹g`, with the outer row left at zero.
    pub fn apply(&self, g: &[[f64; 3]]) -> Vec<[f64; 3]> {
        let nt = self.n_theta;
        let spectra: Vec<[Vec<Complex64>; 3]> = par::map_indices(self.n_free, |i| {
            let ring = &g[i * nt..(i + 1) * nt];
            std::array::from_fn(|c| {
                let x: Vec<f64> = ring.iter().map(|v| v[c]).collect();
                self.fourier.forward(&x)
            })
        });
        let solved: Vec<[Vec<Complex64>; 3]> = par::map_indices(nt, |k| {
            let chol = &self.modes[k.min(nt - k)];
            std::array::from_fn(|c| {
                let mut re: Vec<f64> = spectra.iter().map(|s| s[c][k].re).collect();
                let mut im: Vec<f64> = spectra.iter().map(|s| s[c][k].im).collect();
                chol.solve(&mut re);
                chol.solve(&mut im);
                re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect()
            })
        });
        let rings: Vec<Vec<[f64; 3]>> = par::map_indices(self.n_free, |i| {
            let chans: [Vec<f64>; 3] = std::array::from_fn(|c| {
                let spec: Vec<Complex64> = (0..nt).map(|k| solved[k][c][i]).collect();
                self.fourier.inverse_real(spec)
            });
            (0..nt).map(|j| [chans[0][j], chans[1][j], chans[2][j]]).collect()
        });
        let mut out: Vec<[f64; 3]> = rings.into_iter().flatten().collect();
        out.resize(g.len(), [0.0; 3]);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::Functional;
    use crate::grid::VectorField;
    use std::sync::Arc;

    #[test]
    fn banded_cholesky_solves() {
        let a = vec![[0.0, 0.0, 4.0], [0.0, 1.0, 5.0], [0.5, 1.0, 6.0], [0.5, 1.0, 6.0]];
        let chol = BandedCholesky::factor(&a);
        let x = [1.0, -2.0, 0.5, 3.0];
        let full = |i: usize, j: usize| {
            let (a_, b_) = if i >= j { (i, j) } else { (j, i) };
            if a_ - b_ > 2 { 0.0 } else { a[a_][2 - (a_ - b_)] }
        };
        let mut b: Vec<f64> = (0..4).map(|i| (0..4).map(|j| full(i, j) * x[j]).sum()).collect();
        chol.solve(&mut b);
        for (u, v) in b.iter().zip(x) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn inverts_the_quadratic_hessian() {
        // For ε → ∞ relative to |y| the energy is quadratic with Hessian 2K on free nodes.
        let g = Arc::new(PolarGrid::new(1e-2, 21, 16).unwrap());
        let kappa = Kappa::new(4.0).unwrap();
        let f = Functional { kappa, eps: 1e8, cap_degree: Some(0.5) };
        let pre = Preconditioner::new(&g, kappa, Some(0.5));
        let nt = g.n_theta();
        let x = VectorField::from_fn(g.clone(), |r, t| {
            if r == 1.0 { [0.0; 3] } else { [(1.0 - r) * (3.0 * t).cos(), r * t.sin(), 0.2 * (1.0 - r)] }
        });
        let hx = f.gradient(&x);
        // The cap's κ|y|² term enters both gradient and preconditioner; the (κ−1)|∇a|² part vanishes.
        let back = pre.apply(&hx);
        for k in 0..(g.n_radii() - 1) * nt {
            for c in 0..3 {
                assert!((back[k][c] - x.values()[k][c]).abs() < 1e-9, "{k} {c}");
            }
        }
    }
}
