//! Great-circle families integrating the kernel Jacobi fields.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::circle::CircleFunction;
use crate::cone::{rotation_generators, Rotation3};
use crate::error::Result;

/// Coefficients of a kernel field `C n⊥ + (A cos θ + B sin θ) e₃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelField {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl KernelField {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        KernelField { a, b, c }
    }

    /// The field and its first two angular derivatives at `θ`.
    pub fn jet(&self, theta: f64) -> [Vector3<f64>; 3] {
        let (s, co) = theta.sin_cos();
        let n = Vector3::new(co, s, 0.0);
        let np = Vector3::new(-s, co, 0.0);
        let e3 = Vector3::z();
        [
            np * self.c + e3 * (self.a * co + self.b * s),
            -n * self.c + e3 * (-self.a * s + self.b * co),
            -np * self.c - e3 * (self.a * co + self.b * s),
        ]
    }

    pub fn sample(&self, n_theta: usize) -> Result<CircleFunction> {
        CircleFunction::from_fn(n_theta, |t| self.jet(t)[0])
    }
}

/// `M₁(Bt) M₂(−At) M₃(Ct)`. The sign on `A` makes `∂_t Φ|₀` equal to
/// `+A cos θ e₃` with counter-clockwise generators.
pub fn family_rotation(k: &KernelField, t: f64) -> Rotation3 {
    rotation_generators(k.b * t, 1)
        .compose(&rotation_generators(-k.a * t, 2))
        .compose(&rotation_generators(k.c * t, 3))
}

/// `Φ(t, ·)` sampled on `n_theta` angles.
pub fn geodesic_family(k: &KernelField, t: f64, n_theta: usize) -> Result<CircleFunction> {
    let r = family_rotation(k, t);
    CircleFunction::from_fn(n_theta, |th| r.apply(&Vector3::new(th.cos(), th.sin(), 0.0)))
}

/// `Φ`, `∂_θΦ`, `∂²_θΦ` at one angle.
fn family_jet(m: &Matrix3<f64>, theta: f64) -> [Vector3<f64>; 3] {
    let (s, c) = theta.sin_cos();
    let n = m * Vector3::new(c, s, 0.0);
    let np = m * Vector3::new(-s, c, 0.0);
    [n, np, -n]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicReport {
    /// `max |1 − |Φ||`.
    pub unit_defect: f64,
    /// `max |Φ″ + |Φ′|² Φ|`.
    pub geodesic_residual: f64,
    /// `‖Φ(t) − n − tψ‖_{C²} / t²`.
    pub taylor_ratio: f64,
}

/// Evaluate the family at `n_theta` angles and measure how closely it follows
/// a great circle and the first-order Taylor expansion in `t`.
pub fn integrability_check(k: &KernelField, t: f64, n_theta: usize) -> GeodesicReport {
    let m = *family_rotation(k, t).matrix();
    let mut unit: f64 = 0.0;
    let mut geo: f64 = 0.0;
    let mut c2 = [0.0f64; 3];
    for j in 0..n_theta {
        let th = 2.0 * PI * j as f64 / n_theta as f64;
        let phi = family_jet(&m, th);
        let base = family_jet(&Matrix3::identity(), th);
        let psi = k.jet(th);
        unit = unit.max((1.0 - phi[0].norm()).abs());
        geo = geo.max((phi[2] + phi[0] * phi[1].norm_squared()).norm());
        for d in 0..3 {
            c2[d] = c2[d].max((phi[d] - base[d] - psi[d] * t).norm());
        }
    }
    let taylor_ratio = if t == 0.0 { 0.0 } else { c2.iter().sum::<f64>() / (t * t) };
    GeodesicReport { unit_defect: unit, geodesic_residual: geo, taylor_ratio }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_about_axis_is_phase_shift() {
        let k = KernelField::new(0.0, 0.0, 0.4);
        let f = geodesic_family(&k, 0.5, 16).unwrap();
        for j in 0..16 {
            let th = f.theta(j) + 0.2;
            assert!((f.at(j as isize) - Vector3::new(th.cos(), th.sin(), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_field_is_constant() {
        let k = KernelField::new(0.0, 0.0, 0.0);
        let rep = integrability_check(&k, 0.3, 32);
        assert_eq!(rep.taylor_ratio, 0.0);
    }

    #[test]
    fn velocity_matches_kernel_field() {
        for k in [KernelField::new(1.0, 0.0, 0.0), KernelField::new(0.3, -1.2, 0.7)] {
            let psi = k.sample(32).unwrap();
            let mut prev = f64::NAN;
            for t in [1e-2, 5e-3] {
                let p = geodesic_family(&k, t, 32).unwrap();
                let m = geodesic_family(&k, -t, 32).unwrap();
                let err = (0..32)
                    .map(|j| ((p.at(j) - m.at(j)) / (2.0 * t) - psi.at(j)).norm())
                    .fold(0.0, f64::max);
                if prev.is_finite() {
                    assert!((prev / err - 4.0).abs() < 0.1, "ratio {}", prev / err);
                }
                prev = err;
            }
        }
        for t in [0.1, 0.5] {
            let rep = integrability_check(&KernelField::new(1.0, 0.0, 0.0), t, 64);
            assert!(rep.geodesic_residual <= 1e-12 && rep.unit_defect <= 1e-12);
        }
    }

    #[test]
    fn taylor_ratio_bounded() {
        let k = KernelField::new(0.8, 0.5, -0.9);
        let r: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&t| integrability_check(&k, t, 64).taylor_ratio).collect();
        let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo < 1.5, "{r:?}");
    }
}
