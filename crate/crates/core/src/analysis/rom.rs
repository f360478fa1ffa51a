use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly;
use crate::cohomology::{ManifoldExpansion, ModeStyle};
use crate::error::{Result, SsmError};
use crate::forcing::NonAutonomousLeading;
use crate::linalg::ZERO;

/// Polar normal form of a two-dimensional manifold:
/// `p' = lambda p + sum_l gamma_l p^{l+1} conj(p)^l + f e^{i eta Omega t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarRom {
    pub lambda: Complex64,
    pub gammas: Vec<Complex64>,
    pub f: Complex64,
    pub eta: i32,
    pub omega: f64,
}

/// Master-mode index carrying the positive-frequency member of the pair, and its partner.
pub fn mode_pair(manifold: &ManifoldExpansion) -> Result<(usize, usize)> {
    let ms = &manifold.master;
    if ms.dim() != 2 {
        return Err(SsmError::Unsupported(format!(
            "polar reduced model needs a two-dimensional master subspace, got {}",
            ms.dim()
        )));
    }
    let j = if ms.lambdas[0].im >= ms.lambdas[1].im { 0 } else { 1 };
    if ms.partner(j) != 1 - j {
        return Err(SsmError::Unsupported("master modes are not a complex conjugate pair".into()));
    }
    Ok((j, 1 - j))
}

/// Reads `lambda`, `gamma_l` and the modal forcing from a normal-form manifold.
pub fn extract_polar_rom(manifold: &ManifoldExpansion, nonaut: Option<&NonAutonomousLeading>, eta: i32) -> Result<PolarRom> {
    let (j, k) = mode_pair(manifold)?;
    if manifold.style.mode(0) != ModeStyle::NormalForm || manifold.style.mode(1) != ModeStyle::NormalForm {
        return Err(SsmError::Validation("polar reduced model requires normal-form style".into()));
    }
    let mut gammas = Vec::new();
    for l in 1..=(manifold.order.saturating_sub(1) / 2) {
        let mut e = [0usize; 2];
        e[j] = l + 1;
        e[k] = l;
        let g = manifold.reduced_coefficient(j, &e);
        let mut ec = [0usize; 2];
        ec[k] = l + 1;
        ec[j] = l;
        let gc = manifold.reduced_coefficient(k, &ec);
        if (gc - g.conj()).norm() > 1e-8 * g.norm().max(1e-300) && (gc - g.conj()).norm() > 1e-14 {
            return Err(SsmError::Numerical(format!(
                "reduced dynamics not conjugate symmetric at order {}: {g} vs {gc}",
                2 * l + 1
            )));
        }
        gammas.push(g);
    }
    let (f, omega) = match nonaut {
        None => (ZERO, 0.0),
        Some(na) => {
            let term = na
                .term(&[eta])
                .ok_or_else(|| SsmError::Validation(format!("forcing has no harmonic {eta}")))?;
            if !term.resonant_modes.contains(&j) {
                return Err(SsmError::Validation(format!(
                    "forcing harmonic {eta} is not resonant with the master mode"
                )));
            }
            (term.s[j] * na.epsilon, na.omega.first().copied().unwrap_or(0.0))
        }
    };
    Ok(PolarRom { lambda: manifold.master.lambdas[j], gammas, f, eta, omega })
}

impl PolarRom {
    /// `lambda rho + sum gamma_l rho^{2l+1}` as a complex number.
    fn series(&self, rho: f64) -> Complex64 {
        let mut s = self.lambda * rho;
        for (l, g) in self.gammas.iter().enumerate() {
            s += g * rho.powi(2 * (l as i32 + 1) + 1);
        }
        s
    }

    fn series_derivative(&self, rho: f64) -> Complex64 {
        let mut s = self.lambda;
        for (l, g) in self.gammas.iter().enumerate() {
            let p = 2 * (l as i32 + 1) + 1;
            s += g * (p as f64) * rho.powi(p - 1);
        }
        s
    }

    pub fn a(&self, rho: f64) -> f64 {
        self.series(rho).re
    }

    pub fn b(&self, rho: f64, omega: f64) -> f64 {
        self.series(rho).im - self.eta as f64 * rho * omega
    }

    /// `a(rho)^2 + b(rho, Omega)^2 - |f|^2`.
    pub fn level_function(&self, rho: f64, omega: f64) -> f64 {
        self.a(rho).powi(2) + self.b(rho, omega).powi(2) - self.f.norm_sqr()
    }

    /// Coefficients (in `s = rho^2`, lowest first) of the level function.
    pub fn level_polynomial(&self, omega: f64) -> Vec<f64> {
        let mut alpha = vec![self.lambda.re];
        let mut beta = vec![self.lambda.im - self.eta as f64 * omega];
        for g in &self.gammas {
            alpha.push(g.re);
            beta.push(g.im);
        }
        let sq: Vec<f64> = poly::mul(&alpha, &alpha).iter().zip(poly::mul(&beta, &beta)).map(|(x, y)| x + y).collect();
        let mut out = vec![-self.f.norm_sqr()];
        out.extend(sq);
        out
    }

    /// Positive amplitudes of the periodic responses at `omega`.
    pub fn fixed_point_amplitudes(&self, omega: f64) -> Vec<f64> {
        poly::positive_roots(&self.level_polynomial(omega)).into_iter().map(f64::sqrt).collect()
    }

    /// Phase lag `psi` of the fixed point at amplitude `rho`.
    pub fn phase(&self, rho: f64, omega: f64) -> f64 {
        let (a, b) = (self.a(rho), self.b(rho, omega));
        let f2 = self.f.norm_sqr();
        let cos = -(a * self.f.re + b * self.f.im) / f2;
        let sin = (b * self.f.re - a * self.f.im) / f2;
        sin.atan2(cos)
    }

    /// Right-hand side of the polar system `(rho', psi')`.
    pub fn polar_rhs(&self, rho: f64, psi: f64, omega: f64) -> (f64, f64) {
        let fe = self.f * Complex64::from_polar(1.0, -psi);
        (self.a(rho) + fe.re, (self.b(rho, omega) + fe.im) / rho)
    }

    /// Jacobian of the polar system at a fixed point and its eigenvalues.
    pub fn stability_jacobian(&self, rho: f64, omega: f64) -> Result<([[f64; 2]; 2], [Complex64; 2])> {
        if !(rho > 0.0) {
            return Err(SsmError::Validation("stability Jacobian needs rho > 0".into()));
        }
        let d = self.series_derivative(rho);
        let da = d.re;
        let db = d.im - self.eta as f64 * omega;
        let j = [[da, -self.b(rho, omega)], [db / rho, self.a(rho) / rho]];
        let tr = j[0][0] + j[1][1];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let disc = Complex64::new(tr * tr / 4.0 - det, 0.0).sqrt();
        Ok((j, [tr / 2.0 + disc, tr / 2.0 - disc]))
    }
}
