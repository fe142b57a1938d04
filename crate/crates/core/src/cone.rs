//! Geometry of the cone target `C_κ = {(z, y) : z = √(κ−1)|y|}` and the
//! homogeneous tangent-map profiles.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::error::{LabError, Result};

/// Elastic ratio κ > 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kappa(f64);

impl Kappa {
    pub fn new(kappa: f64) -> Result<Self> {
        if kappa.is_finite() && kappa > 1.0 {
            Ok(Kappa(kappa))
        } else {
            Err(LabError::Invalid(format!("kappa must exceed 1, got {kappa}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn sqrt_kappa(self) -> f64 {
        self.0.sqrt()
    }

    /// `√(κ−1)`, the slope of the cone.
    pub fn slope(self) -> f64 {
        (self.0 - 1.0).sqrt()
    }

    /// Degree of the projective tangent map, `1/(2√κ)`.
    pub fn alpha_projective(self) -> f64 {
        0.5 / self.sqrt_kappa()
    }

    /// Degree of the lifted (integer-winding) tangent map, `1/√κ`.
    pub fn alpha_lifted(self) -> f64 {
        1.0 / self.sqrt_kappa()
    }

    /// Normalization making the projective profile unit in `L²(B₁)`.
    pub fn c_kappa(self) -> f64 {
        let sk = self.sqrt_kappa();
        ((2.0 * sk + 1.0) / (2.0 * PI * self.0 * sk)).sqrt()
    }

    pub fn alpha(self, mode: ProfileMode) -> f64 {
        match mode {
            ProfileMode::Projective => self.alpha_projective(),
            ProfileMode::Lifted => self.alpha_lifted(),
        }
    }
}

/// Which branch of the tangent-map family a profile lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileMode {
    /// Half-winding director `Θ(e^{iθ/2}, 0)`, defined up to sign.
    Projective,
    /// Winding-one director `Θ(e^{iθ}, 0)` obtained through the double cover.
    Lifted,
}

/// A point `u = (z, y) ∈ R × R³` on the cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConePoint {
    pub z: f64,
    pub y: Vector3<f64>,
}

impl ConePoint {
    pub fn norm_squared(&self) -> f64 {
        self.z * self.z + self.y.norm_squared()
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.z, self.y.x, self.y.y, self.y.z]
    }
}

pub fn lift_to_cone(y: Vector3<f64>, kappa: Kappa) -> ConePoint {
    ConePoint { z: kappa.slope() * y.norm(), y }
}

/// Split a cone point into degree of orientation `s = |u|/√κ` and director `n`.
pub fn s_n_split(u: &ConePoint, kappa: Kappa) -> Result<(f64, Vector3<f64>)> {
    let m = u.y.norm();
    if m == 0.0 {
        return Err(LabError::Vertex { magnitude: 0.0 });
    }
    let s = u.norm_squared().sqrt() / kappa.sqrt_kappa();
    Ok((s, u.y / m))
}

/// Counter-clockwise rotation, `mᵀm = I`, `det m = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    m: Matrix3<f64>,
}

impl Rotation3 {
    pub fn identity() -> Self {
        Rotation3 { m: Matrix3::identity() }
    }

    /// Accept a matrix that is orthogonal with unit determinant to 1e−12.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let orth = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if orth > 1e-12 || (det - 1.0).abs() > 1e-12 {
            return Err(LabError::Invalid(format!(
                "not a rotation: orthogonality defect {orth:e}, det {det}"
            )));
        }
        Ok(Rotation3 { m })
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation3 { m }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.m * v
    }

    pub fn compose(&self, other: &Rotation3) -> Rotation3 {
        Rotation3 { m: self.m * other.m }
    }

    pub fn inverse(&self) -> Rotation3 {
        Rotation3 { m: self.m.transpose() }
    }

    /// Geodesic distance on SO(3) in radians.
    pub fn angle_to(&self, other: &Rotation3) -> f64 {
        let r = self.m.transpose() * other.m;
        let c = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        // acos loses precision near 0; use the skew part there.
        let skew = (r - r.transpose()) * 0.5;
        let s = Vector3::new(skew[(2, 1)], skew[(0, 2)], skew[(1, 0)]).norm();
        s.atan2(c)
    }
}

/// `M_axis(τ)`: rotation by `tau` about `e_axis` (`axis ∈ {1, 2, 3}`).
pub fn rotation_generators(tau: f64, axis: u8) -> Rotation3 {
    let (s, c) = tau.sin_cos();
    let m = match axis {
        1 => Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        2 => Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        3 => Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        _ => panic!("rotation axis must be 1, 2 or 3, got {axis}"),
    };
    Rotation3 { m }
}

/// The double cover `(r, θ) ↦ (r², 2θ mod 2π)`.
pub fn zeta_lift(r: f64, theta: f64) -> (f64, f64) {
    (r * r, (2.0 * theta).rem_euclid(2.0 * PI))
}

/// Reference director profile `g(θ)` before rotation.
pub fn reference_profile(mode: ProfileMode, theta: f64) -> Vector3<f64> {
    match mode {
        ProfileMode::Lifted => Vector3::new(theta.cos(), theta.sin(), 0.0),
        ProfileMode::Projective => {
            // Branch cut at θ = 0: evaluate the half angle on [0, 2π).
            let t = 0.5 * theta.rem_euclid(2.0 * PI);
            Vector3::new(t.cos(), t.sin(), 0.0)
        }
    }
}

/// `A₀ r^α h(θ)` with `h = c_κ(√(κ−1), Θ g(θ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentMapModel {
    pub a0: f64,
    pub theta: Rotation3,
    pub mode: ProfileMode,
    pub kappa: Kappa,
}

impl TangentMapModel {
    pub fn new(a0: f64, theta: Rotation3, mode: ProfileMode, kappa: Kappa) -> Result<Self> {
        if !(a0 >= 0.0 && a0.is_finite()) {
            return Err(LabError::Invalid(format!("amplitude must be nonnegative, got {a0}")));
        }
        Ok(TangentMapModel { a0, theta, mode, kappa })
    }

    pub fn alpha(&self) -> f64 {
        self.kappa.alpha(self.mode)
    }

    /// Director part `y` of the model at `(r, θ)`.
    pub fn eval_y(&self, r: f64, theta: f64) -> Vector3<f64> {
        if r == 0.0 {
            return Vector3::zeros();
        }
        let scale = self.a0 * self.kappa.c_kappa() * r.powf(self.alpha());
        self.theta.apply(&reference_profile(self.mode, theta)) * scale
    }

    /// `‖profile‖_{L²(B₁)}` for unit amplitude: 1 in projective mode.
    pub fn unit_l2_norm(&self) -> f64 {
        let c = self.kappa.c_kappa();
        let a = self.alpha();
        (c * c * self.kappa.value() * 2.0 * PI / (2.0 * a + 2.0)).sqrt()
    }
}

pub fn tangent_map_eval(model: &TangentMapModel, r: f64, theta: f64) -> ConePoint {
    lift_to_cone(model.eval_y(r, theta), model.kappa)
}

/// Sign-minimal distance between two sign classes `[a]`, `[b]`.
pub fn projective_distance(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    (a - b).norm().min((a + b).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn k(v: f64) -> Kappa {
        Kappa::new(v).unwrap()
    }

    #[test]
    fn kappa_rejects_le_one() {
        assert!(Kappa::new(1.0).is_err());
        assert!(Kappa::new(0.5).is_err());
        assert!(Kappa::new(f64::NAN).is_err());
    }

    #[test]
    fn lift_examples() {
        let v = lift_to_cone(Vector3::zeros(), k(4.0));
        assert_eq!(v.z, 0.0);
        let u = lift_to_cone(Vector3::new(1.0, 0.0, 0.0), k(4.0));
        assert_relative_eq!(u.z, 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(u.norm_squared(), 4.0, epsilon = 1e-14);
        let w = lift_to_cone(Vector3::new(0.6, 0.8, 0.0), k(2.0));
        assert_relative_eq!(w.z, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn split_examples() {
        let u = ConePoint { z: 3f64.sqrt(), y: Vector3::new(1.0, 0.0, 0.0) };
        let (s, n) = s_n_split(&u, k(4.0)).unwrap();
        assert_relative_eq!(s, 1.0, epsilon = 1e-15);
        assert_eq!(n, Vector3::new(1.0, 0.0, 0.0));
        let vertex = ConePoint { z: 0.0, y: Vector3::zeros() };
        assert!(matches!(s_n_split(&vertex, k(4.0)), Err(LabError::Vertex { .. })));
        let (s, n) = s_n_split(&lift_to_cone(Vector3::new(0.0, 2.0, 0.0), k(2.0)), k(2.0)).unwrap();
        assert_relative_eq!(s, 2.0, epsilon = 1e-15);
        assert_relative_eq!(n, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn c_kappa_four() {
        let c = k(4.0).c_kappa();
        assert_relative_eq!(c, (5.0 / (16.0 * PI)).sqrt(), epsilon = 1e-15);
        assert!((c - 0.315392).abs() < 1e-6);
        let model = TangentMapModel::new(1.0, Rotation3::identity(), ProfileMode::Lifted, k(4.0)).unwrap();
        let u = tangent_map_eval(&model, 1.0, 0.0);
        assert_relative_eq!(u.z, c * 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(u.y, Vector3::new(c, 0.0, 0.0), epsilon = 1e-15);
        let v = tangent_map_eval(&model, 0.0, 1.3);
        assert_eq!(v.to_array(), [0.0; 4]);
    }

    #[test]
    fn projective_unit_norm_closed_form() {
        for kv in [1.5, 2.0, 4.0, 9.0] {
            let m = TangentMapModel::new(1.0, Rotation3::identity(), ProfileMode::Projective, k(kv)).unwrap();
            assert_relative_eq!(m.unit_l2_norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn generator_examples() {
        let v = rotation_generators(PI / 2.0, 3).apply(&Vector3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(v, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
        for tau in [-2.0, 0.1, 3.0] {
            assert_eq!(rotation_generators(tau, 1).apply(&Vector3::x()), Vector3::x());
        }
        let p = rotation_generators(0.3, 2).compose(&rotation_generators(-0.3, 2));
        assert!((p.matrix() - Matrix3::identity()).abs().max() < 1e-15);
        for axis in 1..=3 {
            assert_eq!(*rotation_generators(0.0, axis).matrix(), Matrix3::identity());
            assert!(Rotation3::from_matrix(*rotation_generators(1.1, axis).matrix()).is_ok());
        }
    }

    #[test]
    fn zeta_examples() {
        let (r, t) = zeta_lift(1.0, PI);
        assert_eq!(r, 1.0);
        assert!(t.abs() < 1e-15 || (t - 2.0 * PI).abs() < 1e-15);
        let (r, t) = zeta_lift(0.5, 0.2);
        assert_eq!(r, 0.25);
        assert_relative_eq!(t, 0.4, epsilon = 1e-16);
    }

    #[test]
    fn zeta_degree_doubles() {
        let kp = k(4.0);
        for r in [0.01, 0.3, 0.9] {
            let (rho, _) = zeta_lift(r, 0.0);
            assert_relative_eq!(
                rho.powf(kp.alpha_projective()),
                r.powf(kp.alpha_lifted()),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn zeta_closes_half_winding() {
        // Unwrapped half-angle profile: open over one turn, closed after ζ.
        let half = |t: f64| Vector3::new((0.5 * t).cos(), (0.5 * t).sin(), 0.0);
        assert!((half(0.0) - half(2.0 * PI)).norm() > 1.9);
        let lifted = |t: f64| half(2.0 * t);
        assert!((lifted(0.0) - lifted(2.0 * PI)).norm() < 1e-12);
        for i in 0..16 {
            let th = i as f64 * PI / 8.0;
            let (_, w) = zeta_lift(1.0, th);
            let via_zeta = reference_profile(ProfileMode::Projective, w);
            assert!(projective_distance(&via_zeta, &reference_profile(ProfileMode::Lifted, th)) < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn lift_split_reassemble(x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64, kv in 1.01..20.0f64) {
            let v = Vector3::new(x, y, z);
            prop_assume!(v.norm() > 1e-6);
            let kp = k(kv);
            let u = lift_to_cone(v, kp);
            prop_assert!((u.z - kp.slope() * v.norm()).abs() <= 1e-12 * u.z.abs().max(1.0));
            let (s, n) = s_n_split(&u, kp).unwrap();
            let back = lift_to_cone(n * s, kp);
            prop_assert!((back.y - v).norm() <= 1e-12 * v.norm());
            prop_assert!((back.z - u.z).abs() <= 1e-12 * u.z);
        }

        #[test]
        fn rotations_are_orthogonal(t1 in -6.0..6.0f64, t2 in -6.0..6.0f64, t3 in -6.0..6.0f64) {
            let r = rotation_generators(t1, 1).compose(&rotation_generators(t2, 2)).compose(&rotation_generators(t3, 3));
            prop_assert!(Rotation3::from_matrix(*r.matrix()).is_ok());
        }
    }
}
