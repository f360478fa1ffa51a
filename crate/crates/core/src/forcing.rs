//! Leading-order (order zero in the reduced coordinates) non-autonomous terms
//! of the forced manifold: `X_0(phi) = sum x_kappa e^{i<kappa,phi>}` and
//! `S_0(phi) = sum s_kappa e^{i<kappa,phi>}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohomology::{ModeStyle, Style, Tolerances};
use crate::error::{Result, SsmError};
use crate::linalg::{CVec, Solver, ZERO};
use crate::model::FirstOrderSystem;
use crate::spectrum::MasterSubspace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingTerm {
    pub kappa: Vec<i32>,
    pub x: Vec<Complex64>,
    pub s: Vec<Complex64>,
    pub resonant_modes: Vec<usize>,
    pub cond_estimate: f64,
    pub min_norm: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonAutonomousLeading {
    pub omega: Vec<f64>,
    pub epsilon: f64,
    pub terms: Vec<ForcingTerm>,
    pub warnings: Vec<String>,
    pub truncation: String,
}

impl NonAutonomousLeading {
    pub fn term(&self, kappa: &[i32]) -> Option<&ForcingTerm> {
        self.terms.iter().find(|t| t.kappa == kappa)
    }

    /// `X_0(phi)` (without the factor eps).
    pub fn eval_x0(&self, phi: &[f64]) -> Vec<Complex64> {
        let n = self.terms.first().map(|t| t.x.len()).unwrap_or(0);
        let mut out = vec![ZERO; n];
        for t in &self.terms {
            let arg: f64 = t.kappa.iter().zip(phi).map(|(&k, &p)| k as f64 * p).sum();
            let e = Complex64::from_polar(1.0, arg);
            for (o, x) in out.iter_mut().zip(&t.x) {
                *o += x * e;
            }
        }
        out
    }

    /// `S_0(phi)` (without the factor eps).
    pub fn eval_s0(&self, phi: &[f64]) -> Vec<Complex64> {
        let m = self.terms.first().map(|t| t.s.len()).unwrap_or(0);
        let mut out = vec![ZERO; m];
        for t in &self.terms {
            let arg: f64 = t.kappa.iter().zip(phi).map(|(&k, &p)| k as f64 * p).sum();
            let e = Complex64::from_polar(1.0, arg);
            for (o, s) in out.iter_mut().zip(&t.s) {
                *o += s * e;
            }
        }
        out
    }
}

fn is_canonical(kappa: &[i32]) -> bool {
    kappa.iter().find(|&&k| k != 0).map(|&k| k > 0).unwrap_or(true)
}

/// Computes `x_kappa`, `s_kappa` for every forcing harmonic of `sys` at frequencies `omega`.
///
/// `assigned` optionally fixes the resonant master modes per harmonic instead of
/// detecting them; harmonics not listed are treated as non-resonant.
pub fn leading_order(
    sys: &FirstOrderSystem,
    master: &MasterSubspace,
    outer: &[Complex64],
    omega: &[f64],
    style: &Style,
    tol: &Tolerances,
    assigned: Option<&[(Vec<i32>, Vec<usize>)]>,
) -> Result<NonAutonomousLeading> {
    if sys.forcing.is_empty() {
        return Err(SsmError::Validation("system has no forcing harmonics".into()));
    }
    if let Some(bad) = sys.forcing.iter().find(|h| h.kappa.len() != omega.len()) {
        return Err(SsmError::Validation(format!(
            "harmonic {:?} does not match {} forcing frequencies",
            bad.kappa,
            omega.len()
        )));
    }
    let abs = tol.resolved_abs(master, outer);
    let a = sys.a.to_dense_complex();
    let b = sys.b.to_dense_complex();
    let bv = &b * &master.v;
    let m = master.dim();
    let canonical: Vec<_> = sys.forcing.iter().filter(|h| is_canonical(&h.kappa)).collect();
    let solved: Vec<(ForcingTerm, Vec<String>)> = canonical
        .par_iter()
        .map(|h| {
            let freq: f64 = h.kappa.iter().zip(omega).map(|(&k, &w)| k as f64 * w).sum();
            let iw = Complex64::new(0.0, freq);
            let f = CVec::from_vec(h.vector.clone());
            let resonant: Vec<usize> = match assigned {
                Some(list) => list.iter().find(|(k, _)| *k == h.kappa).map(|(_, v)| v.clone()).unwrap_or_default(),
                None => (0..m).filter(|&j| tol.is_resonant(iw, master.lambdas[j], abs)).collect(),
            };
            if let Some(&bad) = resonant.iter().find(|&&j| j >= m) {
                return Err(SsmError::Validation(format!("assigned mode {bad} outside master subspace")));
            }
            let mut warnings = vec![];
            for l in outer {
                if tol.is_resonant(iw, *l, abs) {
                    warnings.push(format!(
                        "harmonic {:?} resonant with outer eigenvalue {l}: reduced domain of convergence",
                        h.kappa
                    ));
                }
            }
            let uf = master.u.adjoint() * &f;
            let s: Vec<Complex64> = (0..m)
                .map(|j| {
                    let keep = match style.mode(j) {
                        ModeStyle::Graph => true,
                        ModeStyle::NormalForm => resonant.contains(&j),
                    };
                    if keep {
                        uf[j]
                    } else {
                        ZERO
                    }
                })
                .collect();
            let rhs = &f - &bv * CVec::from_vec(s.clone());
            let solver = Solver::new(&(&b * iw - &a), tol.cond_limit);
            let x = solver.solve(&rhs)?;
            Ok((
                ForcingTerm {
                    kappa: h.kappa.clone(),
                    x: x.iter().copied().collect(),
                    s,
                    resonant_modes: resonant,
                    cond_estimate: solver.cond_estimate,
                    min_norm: solver.is_min_norm(),
                },
                warnings,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut terms = Vec::new();
    let mut warnings = Vec::new();
    for (t, w) in solved {
        warnings.extend(w);
        if t.kappa.iter().any(|&k| k != 0) {
            let mut s = vec![ZERO; m];
            for j in 0..m {
                s[master.partner(j)] = t.s[j].conj();
            }
            let conj = ForcingTerm {
                kappa: t.kappa.iter().map(|k| -k).collect(),
                x: t.x.iter().map(|z| z.conj()).collect(),
                s,
                resonant_modes: t.resonant_modes.iter().map(|&j| master.partner(j)).collect(),
                cond_estimate: t.cond_estimate,
                min_norm: t.min_norm,
            };
            terms.push(t);
            terms.push(conj);
        } else {
            terms.push(t);
        }
    }
    Ok(NonAutonomousLeading {
        omega: omega.to_vec(),
        epsilon: sys.epsilon,
        terms,
        warnings,
        truncation: "order zero in the reduced coordinates; state-dependent forcing terms O(|z|) are dropped".into(),
    })
}
