use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rom::{extract_polar_rom, mode_pair, PolarRom};
use crate::cohomology::{ManifoldExpansion, Style};
use crate::error::{Result, SsmError};
use crate::forcing::{leading_order, NonAutonomousLeading};
use crate::model::FirstOrderSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrcConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub samples: usize,
    /// Extra frequencies evaluated in addition to the uniform grid.
    #[serde(default)]
    pub extra_omegas: Vec<f64>,
    /// Forcing harmonic resonant with the master pair; detected when `None`.
    #[serde(default)]
    pub eta: Option<i32>,
    #[serde(default = "default_eta_max")]
    pub eta_max: i32,
    /// 0-based state indices whose amplitudes are reported.
    pub output_dofs: Vec<usize>,
    #[serde(default = "default_phase_samples")]
    pub phase_samples: usize,
}

fn default_eta_max() -> i32 {
    3
}

fn default_phase_samples() -> usize {
    128
}

impl FrcConfig {
    pub fn omegas(&self) -> Vec<f64> {
        let mut w: Vec<f64> = if self.samples <= 1 {
            vec![self.omega_min]
        } else {
            (0..self.samples)
                .map(|k| self.omega_min + (self.omega_max - self.omega_min) * k as f64 / (self.samples - 1) as f64)
                .collect()
        };
        w.extend(&self.extra_omegas);
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        w.dedup();
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrcPoint {
    pub omega: f64,
    pub rho: f64,
    pub psi: f64,
    pub stable: bool,
    pub eigenvalues: [Complex64; 2],
    /// Maximum of `|z_dof(t)|` over one forcing period, per output dof.
    pub amplitudes: Vec<f64>,
    /// Number of periodic responses at this frequency.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrcResult {
    pub eta: i32,
    pub rom: PolarRom,
    pub points: Vec<FrcPoint>,
    pub warnings: Vec<String>,
}

/// Smallest harmonic in `1..=eta_max` present in the forcing that best matches the master frequency.
pub fn detect_eta(sys: &FirstOrderSystem, lambda: Complex64, omega_mid: f64, eta_max: i32) -> Result<i32> {
    (1..=eta_max)
        .filter(|&e| sys.forcing.iter().any(|h| h.kappa == [e]))
        .min_by(|&a, &b| {
            let da = (lambda.im - a as f64 * omega_mid).abs();
            let db = (lambda.im - b as f64 * omega_mid).abs();
            da.partial_cmp(&db).unwrap()
        })
        .ok_or_else(|| SsmError::Validation(format!("no forcing harmonic in 1..={eta_max}")))
}

/// Leading-order forcing terms with the resonance assigned to the master pair.
pub fn forced_terms(sys: &FirstOrderSystem, manifold: &ManifoldExpansion, omega: f64, eta: i32) -> Result<NonAutonomousLeading> {
    let (j, k) = mode_pair(manifold)?;
    let assigned = vec![(vec![eta], vec![j]), (vec![-eta], vec![k])];
    leading_order(
        sys,
        &manifold.master,
        &manifold.outer,
        &[omega],
        &Style::NormalForm,
        &manifold.tolerances,
        Some(&assigned),
    )
}

/// Physical amplitude of the periodic orbit `z(t) = W(p(t)) + eps X_0(Omega t)`.
pub fn lifted_amplitudes(
    manifold: &ManifoldExpansion,
    nonaut: &NonAutonomousLeading,
    rho: f64,
    psi: f64,
    eta: i32,
    dofs: &[usize],
    phase_samples: usize,
) -> Result<Vec<f64>> {
    let (j, k) = mode_pair(manifold)?;
    let mut amp = vec![0.0f64; dofs.len()];
    for s in 0..phase_samples {
        let phi = std::f64::consts::TAU * s as f64 / phase_samples as f64;
        let theta = psi + eta as f64 * phi;
        let mut p = vec![Complex64::new(0.0, 0.0); 2];
        p[j] = Complex64::from_polar(rho, theta);
        p[k] = p[j].conj();
        let w = manifold.eval_w(&p);
        let x0 = nonaut.eval_x0(&[phi]);
        for (a, &d) in amp.iter_mut().zip(dofs) {
            let z = w[d] + x0[d] * nonaut.epsilon;
            *a = a.max(z.re.abs());
        }
    }
    Ok(amp)
}

/// Forced response curve over a frequency grid.
pub fn frc_sweep(sys: &FirstOrderSystem, manifold: &ManifoldExpansion, config: &FrcConfig) -> Result<FrcResult> {
    if !(config.omega_max >= config.omega_min) || config.omega_min <= 0.0 {
        return Err(SsmError::Validation("frequency range must be positive and nonempty".into()));
    }
    if let Some(&d) = config.output_dofs.iter().find(|&&d| d >= sys.n) {
        return Err(SsmError::Validation(format!("output dof {d} outside 0..{}", sys.n)));
    }
    let (j, _) = mode_pair(manifold)?;
    let lambda = manifold.master.lambdas[j];
    let omega_mid = 0.5 * (config.omega_min + config.omega_max);
    let eta = match config.eta {
        Some(e) => e,
        None => detect_eta(sys, lambda, omega_mid, config.eta_max)?,
    };
    let probe = forced_terms(sys, manifold, omega_mid, eta)?;
    let rom0 = extract_polar_rom(manifold, Some(&probe), eta)?;
    if rom0.f.norm() == 0.0 {
        return Err(SsmError::Validation("modal forcing vanishes: system is unforced, use the backbone curve".into()));
    }
    let omegas = config.omegas();
    let per_omega: Vec<(f64, Vec<FrcPoint>, Vec<String>)> = omegas
        .par_iter()
        .map(|&omega| {
            let na = forced_terms(sys, manifold, omega, eta)?;
            let rom = extract_polar_rom(manifold, Some(&na), eta)?;
            let rhos = rom.fixed_point_amplitudes(omega);
            let mut pts = Vec::with_capacity(rhos.len());
            let mut warn = na.warnings.clone();
            for &rho in &rhos {
                let residual = rom.level_function(rho, omega).abs();
                if residual > 1e-10 * rom.f.norm_sqr().max(1.0) {
                    warn.push(format!("root at Omega = {omega}, rho = {rho} has level residual {residual:.3e}"));
                }
                let psi = rom.phase(rho, omega);
                let (_, eig) = rom.stability_jacobian(rho, omega)?;
                let stable = eig.iter().all(|e| e.re < 0.0);
                let amplitudes = lifted_amplitudes(manifold, &na, rho, psi, eta, &config.output_dofs, config.phase_samples)?;
                pts.push(FrcPoint { omega, rho, psi, stable, eigenvalues: eig, amplitudes, multiplicity: rhos.len() });
            }
            Ok((omega, pts, warn))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    let mut prev: Option<(f64, usize)> = None;
    for (omega, pts, warn) in per_omega {
        warnings.extend(warn);
        if let Some((w0, n0)) = prev {
            if n0.abs_diff(pts.len()) > 2 {
                warnings.push(format!(
                    "root count jumps from {n0} to {} between Omega = {w0} and {omega}",
                    pts.len()
                ));
            }
        }
        prev = Some((omega, pts.len()));
        points.extend(pts);
    }
    warnings.sort();
    warnings.dedup();
    Ok(FrcResult { eta, rom: PolarRom { omega: omega_mid, ..rom0 }, points, warnings })
}
