use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::rom::{mode_pair, PolarRom};
use crate::cohomology::ManifoldExpansion;
use crate::error::{Result, SsmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackbonePoint {
    pub rho: f64,
    pub omega: f64,
    pub amplitudes: Vec<f64>,
}

/// Conservative backbone `omega(rho) = Im lambda + sum Im(gamma_l) rho^{2l}`.
pub fn backbone(rom: &PolarRom, rho_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if rom.lambda.re.abs() > 1e-9 * rom.lambda.norm().max(1e-300) {
        return Err(SsmError::Validation(
            "master mode is damped; the backbone applies to conservative systems, use the forced response curve".into(),
        ));
    }
    Ok(rho_grid
        .iter()
        .map(|&rho| {
            let w = rom.lambda.im
                + rom.gammas.iter().enumerate().map(|(l, g)| g.im * rho.powi(2 * (l as i32 + 1))).sum::<f64>();
            (rho, w)
        })
        .collect())
}

/// Maximum `|z_dof|` over the autonomous periodic orbit `W(rho e^{i theta}, rho e^{-i theta})`.
pub fn orbit_amplitudes(manifold: &ManifoldExpansion, rho: f64, dofs: &[usize], phase_samples: usize) -> Result<Vec<f64>> {
    let (j, k) = mode_pair(manifold)?;
    let mut amp = vec![0.0f64; dofs.len()];
    for s in 0..phase_samples {
        let theta = std::f64::consts::TAU * s as f64 / phase_samples as f64;
        let mut p = vec![Complex64::new(0.0, 0.0); 2];
        p[j] = Complex64::from_polar(rho, theta);
        p[k] = p[j].conj();
        let w = manifold.eval_w(&p);
        for (a, &d) in amp.iter_mut().zip(dofs) {
            *a = a.max(w[d].re.abs());
        }
    }
    Ok(amp)
}

/// Backbone with lifted physical amplitudes.
pub fn backbone_curve(rom: &PolarRom, manifold: &ManifoldExpansion, rho_grid: &[f64], dofs: &[usize]) -> Result<Vec<BackbonePoint>> {
    backbone(rom, rho_grid)?
        .into_iter()
        .map(|(rho, omega)| Ok(BackbonePoint { rho, omega, amplitudes: orbit_amplitudes(manifold, rho, dofs, 128)? }))
        .collect()
}
