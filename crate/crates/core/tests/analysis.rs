use num_complex::Complex64;
use proptest::prelude::*;

use ssm_core::analysis::{backbone, extract_polar_rom, frc_sweep, rom_integrate, FrcConfig, PolarRom};
use ssm_core::cohomology::{compute_manifold, ManifoldExpansion, Style, Tolerances};
use ssm_core::model::{build_first_order, default_variant, duffing, FirstOrderSystem};
use ssm_core::ode::OdeOptions;
use ssm_core::spectrum::{master_spectrum, Selection, SpectrumOptions};
use ssm_core::SsmError;

fn forced_duffing(c: f64, kappa: f64, f0: f64, eps: f64, order: usize) -> (FirstOrderSystem, ManifoldExpansion) {
    let mech = duffing(1.0, c, 1.0, kappa).unwrap().with_cosine_forcing(&[f0], eps);
    let (v, n) = default_variant(&mech);
    let sys = build_first_order(&mech, v, n).unwrap();
    let (ms, outer) = master_spectrum(&sys, &Selection::SmallestMagnitude(2), &SpectrumOptions::default()).unwrap();
    let m = compute_manifold(&sys, &ms, &outer, order, &Style::NormalForm, &Tolerances::default()).unwrap();
    (sys, m)
}

fn config(omegas: &[f64], phase_samples: usize) -> FrcConfig {
    FrcConfig {
        omega_min: omegas[0],
        omega_max: *omegas.last().unwrap(),
        samples: 1,
        extra_omegas: omegas.to_vec(),
        eta: Some(1),
        eta_max: 3,
        output_dofs: vec![0],
        phase_samples,
    }
}

#[test]
fn linear_oscillator_matches_transfer_function() {
    let (c, f0, eps) = (0.05, 1.0, 0.02);
    let (sys, m) = forced_duffing(c, 0.0, f0, eps, 3);
    let omegas: Vec<f64> = (0..9).map(|k| 0.8 + 0.05 * k as f64).collect();
    let frc = frc_sweep(&sys, &m, &config(&omegas, 4096)).unwrap();
    assert_eq!(frc.points.len(), omegas.len());
    for p in &frc.points {
        let exact = eps * f0 / ((1.0 - p.omega * p.omega).powi(2) + (c * p.omega).powi(2)).sqrt();
        assert!((p.amplitudes[0] / exact - 1.0).abs() < 1e-6, "Omega {}: {} vs {exact}", p.omega, p.amplitudes[0]);
        assert!(p.stable);
    }
}

#[test]
fn frc_points_lie_on_the_level_set_and_satisfy_the_phase_equations() {
    let (sys, m) = forced_duffing(0.02, 0.5, 1.0, 0.01, 5);
    let omegas: Vec<f64> = (0..41).map(|k| 0.9 + 0.01 * k as f64).collect();
    let frc = frc_sweep(&sys, &m, &config(&omegas, 128)).unwrap();
    assert!(frc.points.iter().any(|p| p.multiplicity == 3), "hardening Duffing should show a fold");
    for p in &frc.points {
        let na = ssm_core::analysis::forced_terms(&sys, &m, p.omega, 1).unwrap();
        let rom = extract_polar_rom(&m, Some(&na), 1).unwrap();
        let f2 = rom.f.norm_sqr();
        assert!(rom.level_function(p.rho, p.omega).abs() <= 1e-10 * f2.max(1.0));
        let (a, b) = (rom.a(p.rho), rom.b(p.rho, p.omega));
        let cos = -(a * rom.f.re + b * rom.f.im) / f2;
        let sin = (b * rom.f.re - a * rom.f.im) / f2;
        assert!((p.psi.cos() - cos).abs() <= 1e-9 && (p.psi.sin() - sin).abs() <= 1e-9);
        let (dr, dpsi) = rom.polar_rhs(p.rho, p.psi, p.omega);
        assert!(dr.abs() < 1e-10 && dpsi.abs() < 1e-10);
        if p.multiplicity == 3 {
            let unstable = frc.points.iter().filter(|q| q.omega == p.omega && !q.stable).count();
            assert_eq!(unstable, 1);
        }
    }
}

fn sample_rom() -> PolarRom {
    PolarRom {
        lambda: Complex64::new(-0.02, 1.0),
        gammas: vec![Complex64::new(-0.01, 0.3), Complex64::new(0.001, -0.02)],
        f: Complex64::new(0.003, 0.004),
        eta: 1,
        omega: 1.05,
    }
}

proptest! {
    #[test]
    fn stability_jacobian_matches_finite_differences(omega in 0.95f64..1.15) {
        let rom = PolarRom { omega, ..sample_rom() };
        for rho in rom.fixed_point_amplitudes(omega) {
            let psi = rom.phase(rho, omega);
            let (j, _) = rom.stability_jacobian(rho, omega).unwrap();
            let h = 1e-6;
            let (rp, pp) = rom.polar_rhs(rho + h, psi, omega);
            let (rm, pm) = rom.polar_rhs(rho - h, psi, omega);
            let (rq, pq) = rom.polar_rhs(rho, psi + h, omega);
            let (rn, pn) = rom.polar_rhs(rho, psi - h, omega);
            let fd = [[(rp - rm) / (2.0 * h), (rq - rn) / (2.0 * h)], [(pp - pm) / (2.0 * h), (pq - pn) / (2.0 * h)]];
            for r in 0..2 {
                for c in 0..2 {
                    prop_assert!((j[r][c] - fd[r][c]).abs() <= 1e-6 * (1.0 + j[r][c].abs()), "{:?} vs {:?}", j, fd);
                }
            }
        }
    }
}

#[test]
fn reduced_flow_settles_on_the_stable_fixed_point() {
    let omega = 1.0;
    let rom = PolarRom { omega, ..sample_rom() };
    let stable: Vec<f64> = rom
        .fixed_point_amplitudes(omega)
        .into_iter()
        .filter(|&r| rom.stability_jacobian(r, omega).unwrap().1.iter().all(|e| e.re < 0.0))
        .collect();
    assert_eq!(stable.len(), 1);
    let rho = stable[0];
    let psi = rom.phase(rho, omega);
    let opts = OdeOptions::default();
    let at_rest = rom_integrate(&rom, rho, psi, (0.0, 50.0), 5.0, &opts).unwrap();
    assert!(at_rest.rho.iter().all(|r| (r - rho).abs() < 1e-9));
    let perturbed = rom_integrate(&rom, 0.5 * rho, psi + 0.3, (0.0, 2000.0), 100.0, &opts).unwrap();
    assert!((perturbed.rho.last().unwrap() - rho).abs() < 1e-6);
    let dpsi = (perturbed.psi.last().unwrap() - psi).rem_euclid(std::f64::consts::TAU);
    assert!(dpsi.min(std::f64::consts::TAU - dpsi) < 1e-5);
}

#[test]
fn unforced_reduced_flow_decays_at_the_linear_rate() {
    let rom = PolarRom { gammas: vec![], f: Complex64::new(0.0, 0.0), ..sample_rom() };
    let traj = rom_integrate(&rom, 0.1, 0.0, (0.0, 10.0), 1.0, &OdeOptions::default()).unwrap();
    for (t, r) in traj.t.iter().zip(&traj.rho) {
        assert!((r - 0.1 * (-0.02 * t).exp()).abs() < 1e-10);
    }
}

#[test]
fn backbone_collapses_onto_the_weakly_forced_response() {
    let (sys, m) = forced_duffing(1e-6, 0.5, 1.0, 1e-6, 5);
    let rom = extract_polar_rom(&m, None, 1).unwrap();
    let conservative = PolarRom { lambda: Complex64::new(0.0, rom.lambda.im), ..rom };
    let rhos = [0.05, 0.1, 0.15, 0.2, 0.25];
    let curve = backbone(&conservative, &rhos).unwrap();
    let omegas: Vec<f64> = curve.iter().map(|&(_, w)| w).collect();
    let frc = frc_sweep(&sys, &m, &config(&omegas, 128)).unwrap();
    for &(rho, omega) in &curve {
        let nearest = frc
            .points
            .iter()
            .filter(|p| p.omega == omega)
            .map(|p| (p.rho - rho).abs() / rho)
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= 0.01, "rho {rho}, Omega {omega}: closest response off by {nearest}");
    }
}

#[test]
fn damped_backbone_is_rejected() {
    let (_, m) = forced_duffing(0.05, 0.5, 1.0, 0.1, 3);
    let rom = extract_polar_rom(&m, None, 1).unwrap();
    assert!(matches!(backbone(&rom, &[0.1]), Err(SsmError::Validation(_))));
}

#[test]
fn unforced_sweep_is_rejected() {
    let (sys, m) = forced_duffing(0.05, 0.5, 0.0, 0.1, 3);
    assert!(matches!(frc_sweep(&sys, &m, &config(&[0.9, 1.1], 128)), Err(SsmError::Validation(_))));
}
