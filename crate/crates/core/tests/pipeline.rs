use std::sync::Arc;

use conelab::blowup::{decay_fit, fit_tangent};
use conelab::cone::{rotation_generators, Kappa, ProfileMode, TangentMapModel};
use conelab::diagnostics::{calibrated_slack, dyadic_radii, frequency_n, height_a, ring_deviation, Direction, SeriesKind};
use conelab::energy::{el_residual, BoundarySpec, EnergyConfig};
use conelab::grid::{PolarGrid, VectorField};
use conelab::minimize::{minimize, Init};

#[test]
fn coarse_minimizer_passes_diagnostics() {
    let kappa = Kappa::new(4.0).unwrap();
    let alpha = kappa.alpha_lifted();
    let grid = Arc::new(PolarGrid::new(1e-3, 64, 128).unwrap());
    let rot = rotation_generators(-0.5, 1).compose(&rotation_generators(0.8, 3));
    let cfg = EnergyConfig::new(kappa);
    let out = minimize(&BoundarySpec::perturbed(rot, 128, 0.05).unwrap(), grid.clone(), Init::HomogeneousSeed, &cfg).unwrap();
    let reference = minimize(&BoundarySpec::equator(rot), grid.clone(), Init::HomogeneousSeed, &cfg).unwrap();

    let profile = VectorField::from_fn(grid.clone(), move |r, t| {
        let s = r.powf(alpha);
        [s * t.cos(), s * t.sin(), 0.0]
    });
    let exact_res = el_residual(&profile, kappa).unwrap().res_full;
    let res = el_residual(&out.field, kappa).unwrap().res_full;
    assert!(res < 10.0 * exact_res.max(1e-12) || res < 1e-3, "{res} vs {exact_res}");

    let u = out.field.lift(kappa);
    let uref = reference.field.lift(kappa);
    let radii = dyadic_radii(4e-3, 1.0);
    let a = height_a(&u, &radii, alpha).unwrap();
    let n = frequency_n(&u, &radii).unwrap();
    let sa = calibrated_slack(&uref, SeriesKind::HeightA, &radii, alpha).unwrap();
    let sn = calibrated_slack(&uref, SeriesKind::FrequencyN, &radii, alpha).unwrap();
    assert!(a.audit(Direction::Increasing, sa).monotone);
    assert!(n.audit(Direction::Increasing, sn).monotone);
    assert!(ring_deviation(&u, &dyadic_radii(4e-3, 0.5), alpha).unwrap().worst_excess() <= 1e-6);

    let fit = fit_tangent(&out.field, 0.05, kappa, ProfileMode::Lifted).unwrap();
    assert!(fit.theta.angle_to(&rot) < 1e-2);
    let inner = fit_tangent(&out.field, 4e-3, kappa, ProfileMode::Lifted).unwrap();
    let model = TangentMapModel::new(inner.a0, inner.theta, ProfileMode::Lifted, kappa).unwrap();
    let decay = decay_fit(&out.field, &model, [4e-3, 0.1]).unwrap();
    assert!(decay.mu_est > 0.0 && decay.r_squared >= 0.9, "{}", decay.report());
    assert!((decay.a0_height - decay.a0_est).abs() < 0.05 * decay.a0_est);
}
