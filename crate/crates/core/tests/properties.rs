use std::sync::Arc;

use nalgebra::Vector3;
use proptest::prelude::*;

use conelab::blowup::fit_tangent;
use conelab::cone::{lift_to_cone, rotation_generators, s_n_split, Kappa, ProfileMode, Rotation3, TangentMapModel};
use conelab::energy::energy;
use conelab::grid::{PolarGrid, VectorField};

fn rotation(a: f64, b: f64, c: f64) -> Rotation3 {
    rotation_generators(a, 1).compose(&rotation_generators(b, 2)).compose(&rotation_generators(c, 3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lift_then_split(x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64, k in 1.05..30.0f64) {
        let v = Vector3::new(x, y, z);
        prop_assume!(v.norm() > 1e-6);
        let kappa = Kappa::new(k).unwrap();
        let u = lift_to_cone(v, kappa);
        prop_assert!((u.z - kappa.slope() * v.norm()).abs() <= 1e-12 * v.norm());
        let (s, n) = s_n_split(&u, kappa).unwrap();
        prop_assert!((s - v.norm()).abs() <= 1e-12 * v.norm());
        prop_assert!((n - v / v.norm()).norm() < 1e-12);
    }

    #[test]
    fn rotations_compose(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64) {
        let r = rotation(a, b, c);
        let back = r.compose(&r.inverse());
        prop_assert!(back.angle_to(&Rotation3::identity()) < 1e-12);
        prop_assert!(Rotation3::from_matrix(*r.matrix()).is_ok());
    }

    #[test]
    fn energy_is_rotation_invariant(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, w in 0.0..0.3f64) {
        let grid = Arc::new(PolarGrid::new(1e-2, 17, 16).unwrap());
        let f = VectorField::from_fn(grid, move |r, t| {
            let s = r.sqrt();
            [s * t.cos() + w * r, s * t.sin(), w * s * (2.0 * t).sin()]
        });
        let kappa = Kappa::new(3.0).unwrap();
        let rot = rotation(a, b, c);
        let e0 = energy(&f, kappa, 1e-6);
        let e1 = energy(&f.rotated(rot.matrix()), kappa, 1e-6);
        prop_assert!((e0 - e1).abs() < 1e-11 * e0);
    }

    #[test]
    fn tangent_fit_is_equivariant(a in -3.0..3.0f64, b in -1.5..1.5f64, c in -3.0..3.0f64, a0 in 0.2..5.0f64) {
        let kappa = Kappa::new(4.0).unwrap();
        let grid = Arc::new(PolarGrid::new(1e-3, 49, 32).unwrap());
        let truth = TangentMapModel::new(a0, rotation(0.3, -0.2, 0.1), ProfileMode::Lifted, kappa).unwrap();
        let f = VectorField::from_fn(grid, move |r, t| truth.eval_y(r, t).into());
        let rot = rotation(a, b, c);
        let base = fit_tangent(&f, 0.1, kappa, ProfileMode::Lifted).unwrap();
        let moved = fit_tangent(&f.rotated(rot.matrix()), 0.1, kappa, ProfileMode::Lifted).unwrap();
        prop_assert!((moved.theta.matrix() - rot.compose(&base.theta).matrix()).norm() < 1e-8);
        prop_assert!((moved.a0 - a0).abs() < 1e-8 * a0);
    }
}
