use conelab::cone::Kappa;
use conelab::geodesic::{integrability_check, KernelField};
use conelab::oracles::{annulus_l2_distance, fd_jacobi_solve};
use conelab::spectral::{
    assemble_lprime, eigendecompose, expand_and_reconstruct, gamma_gap, lprime_channels, oracle_spectrum,
    radial_ode_residual, FrameField, RadialExponent,
};

#[test]
fn kernel_is_three_dimensional_for_several_kappa() {
    for k in [1.3, 2.0, 4.0, 9.0, 20.0] {
        let kappa = Kappa::new(k).unwrap();
        let d = eigendecompose(&assemble_lprime(64, kappa).unwrap(), 64, kappa).unwrap();
        assert_eq!(d.kernel_indices().len(), 3, "kappa {k}");
        assert!(d.kernel_angle() < 1e-6);
        let gap = d.eigenvalues.iter().filter(|l| l.abs() > d.zero_tolerance).map(|l| l.abs()).fold(f64::INFINITY, f64::min);
        assert!(gap > 1e-6);
    }
}

#[test]
fn kernel_vectors_satisfy_both_reduced_equations() {
    let kappa = Kappa::new(2.5).unwrap();
    let d = eigendecompose(&assemble_lprime(64, kappa).unwrap(), 64, kappa).unwrap();
    for j in d.kernel_indices() {
        let ch = lprime_channels(&d.eigenfield(j));
        for c in ch.iter() {
            assert!(c.iter().all(|x| x.abs() < 1e-8));
        }
    }
}

#[test]
fn whole_spectrum_matches_modes() {
    let kappa = Kappa::new(7.0).unwrap();
    let n = 48;
    let d = eigendecompose(&assemble_lprime(n, kappa).unwrap(), n, kappa).unwrap();
    for (a, b) in d.eigenvalues.iter().zip(oracle_spectrum(n, kappa)) {
        assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()));
    }
    let gamma = gamma_gap(kappa);
    for j in 0..d.len() {
        if let RadialExponent::Growth { gamma: g, .. } = d.exponents[j] {
            assert!(g >= gamma - 1e-12);
            for r in [0.01, 0.3, 1.0] {
                assert!(radial_ode_residual(g, d.eigenvalues[j], kappa, r).abs() < 1e-10 * (1.0 + d.eigenvalues[j]));
            }
        }
    }
}

#[test]
fn mixed_data_reconstruction_matches_fd_solve() {
    let kappa = Kappa::new(2.0).unwrap();
    let n = 32;
    let d = eigendecompose(&assemble_lprime(n, kappa).unwrap(), n, kappa).unwrap();
    let outer = FrameField::from_fn(n, kappa, |t| [0.3 * (2.0 * t).cos(), 0.5 + 0.1 * t.sin(), (3.0 * t).sin()]).unwrap();
    let inner = FrameField::from_fn(n, kappa, |t| [0.1 * t.cos(), 0.5, 0.2 * t.cos()]).unwrap();
    let r0: f64 = 0.2;
    let prof = expand_and_reconstruct(&d, &outer, &inner, r0, false).unwrap();
    let n_t = 800;
    let fd = fd_jacobi_solve(kappa, r0, n_t, &inner, &outer).unwrap();
    let h = -r0.ln() / n_t as f64;
    let rec: Vec<FrameField> = (0..=n_t).map(|i| prof.eval((r0.ln() + i as f64 * h).exp())).collect();
    assert!(annulus_l2_distance(r0, &fd, &rec) < 1e-4);
}

#[test]
fn taylor_defect_bounded_for_random_fields() {
    let mut worst: f64 = 0.0;
    for s in 0..10u32 {
        let x = s as f64;
        let k = KernelField::new((1.3 * x).sin(), (0.7 * x + 1.0).cos(), (2.1 * x).sin() * 0.8);
        let ratios: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&t| integrability_check(&k, t, 64).taylor_ratio).collect();
        let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min).max(1e-300);
        assert!(spread < 1.5, "{ratios:?}");
        worst = worst.max(ratios[0]);
    }
    assert!(worst.is_finite());
}
