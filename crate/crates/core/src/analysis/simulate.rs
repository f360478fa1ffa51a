use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::rom::{mode_pair, PolarRom};
use crate::cohomology::ManifoldExpansion;
use crate::error::{Result, SsmError};
use crate::forcing::NonAutonomousLeading;
use crate::ode::{dopri5, OdeOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RomTrajectory {
    pub t: Vec<f64>,
    pub rho: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Integrates the polar reduced dynamics from `(rho0, psi0)` at `t_span.0`,
/// sampling every `dt`.
///
/// The state is advanced in the co-rotating chart `q = rho e^{i psi}`, in which
/// the polar system reads `q' = (lambda - i eta Omega) q + sum gamma_l |q|^{2l} q + f`;
/// this is the same flow and stays regular when `rho` passes through zero.
pub fn rom_integrate(rom: &PolarRom, rho0: f64, psi0: f64, t_span: (f64, f64), dt: f64, opts: &OdeOptions) -> Result<RomTrajectory> {
    if !(dt > 0.0) || !(t_span.1 >= t_span.0) {
        return Err(SsmError::Validation("need dt > 0 and a non-decreasing time span".into()));
    }
    let n = ((t_span.1 - t_span.0) / dt + 1e-9).floor() as usize;
    let t: Vec<f64> = (0..=n).map(|k| t_span.0 + k as f64 * dt).collect();
    let shift = rom.lambda - Complex64::new(0.0, rom.eta as f64 * rom.omega);
    let rhs = |_: f64, y: &[f64], d: &mut [f64]| {
        let q = Complex64::new(y[0], y[1]);
        let r2 = q.norm_sqr();
        let mut v = shift * q + rom.f;
        for (l, g) in rom.gammas.iter().enumerate() {
            v += g * r2.powi(l as i32 + 1) * q;
        }
        d[0] = v.re;
        d[1] = v.im;
    };
    let q0 = Complex64::from_polar(rho0, psi0);
    let ys = dopri5(rhs, t_span.0, &[q0.re, q0.im], &t, opts)?;
    let mut rho = Vec::with_capacity(ys.len());
    let mut psi: Vec<f64> = Vec::with_capacity(ys.len());
    for y in &ys {
        let q = Complex64::new(y[0], y[1]);
        rho.push(q.norm());
        let mut a = q.arg();
        if let Some(&prev) = psi.last() {
            a += std::f64::consts::TAU * ((prev - a) / std::f64::consts::TAU).round();
        } else if rho0 > 0.0 {
            a += std::f64::consts::TAU * ((psi0 - a) / std::f64::consts::TAU).round();
        }
        psi.push(a);
    }
    Ok(RomTrajectory { t, rho, psi })
}

/// Lifts a reduced trajectory to physical coordinates: `z(t) = W(p(t)) + eps X_0(Omega t)`
/// with `p = rho e^{i (psi + eta Omega t)}`.
pub fn lift_trajectory(
    manifold: &ManifoldExpansion,
    nonaut: Option<&NonAutonomousLeading>,
    rom: &PolarRom,
    traj: &RomTrajectory,
) -> Result<Vec<Vec<f64>>> {
    let (j, k) = mode_pair(manifold)?;
    traj.t
        .iter()
        .zip(traj.rho.iter().zip(&traj.psi))
        .map(|(&t, (&rho, &psi))| {
            let theta = psi + rom.eta as f64 * rom.omega * t;
            let mut p = vec![Complex64::new(0.0, 0.0); 2];
            p[j] = Complex64::from_polar(rho, theta);
            p[k] = p[j].conj();
            let mut z = manifold.eval_w(&p);
            if let Some(na) = nonaut {
                for (zi, x) in z.iter_mut().zip(na.eval_x0(&[rom.omega * t])) {
                    *zi += x * na.epsilon;
                }
            }
            Ok(z.iter().map(|c| c.re).collect())
        })
        .collect()
}
