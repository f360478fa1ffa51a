//! Generalized eigenproblem `A v = lambda B v`, master-subspace selection and normalization.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsmError};
use crate::linalg::{canonical_basis, sorted_svd, CMat, CVec, ZERO};
use crate::model::FirstOrderSystem;

/// Which eigenvalues form the master subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Selection {
    /// The first `count` eigenvalues by increasing modulus.
    SmallestMagnitude(usize),
    /// 0-based positions in the eigenvalue ordering of the chosen method.
    Indices(Vec<usize>),
    /// The first `count` eigenvalues by decreasing real part.
    SlowestDecay(usize),
}

/// Eigensolver path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EigenMethod {
    /// Dense real Schur decomposition of `B^{-1} A`.
    Dense,
    /// Arnoldi iteration on `(A - shift B)^{-1} B`; eigenvalues are ordered by distance to the shift.
    ShiftInvert { shift_re: f64, shift_im: f64, krylov_dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub n_outer: usize,
    pub method: EigenMethod,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { n_outer: 10, method: EigenMethod::Dense }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pairing {
    Real,
    Partner(usize),
}

/// Master eigenvalues with right and left eigenvectors normalized so that `U* B V = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterSubspace {
    pub lambdas: Vec<Complex64>,
    pub v: CMat,
    pub u: CMat,
    pub pairing: Vec<Pairing>,
}

impl MasterSubspace {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Index of the conjugate partner of mode `j` (itself for real modes).
    pub fn partner(&self, j: usize) -> usize {
        match self.pairing[j] {
            Pairing::Real => j,
            Pairing::Partner(k) => k,
        }
    }

    /// Largest eigenvalue modulus, or 1 when all are zero.
    pub fn scale(&self) -> f64 {
        let s = self.lambdas.iter().fold(0.0f64, |m, l| m.max(l.norm()));
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    /// Builds a conjugate-symmetric reduced coordinate from free values on the
    /// "first" member of every pair (and real values on real modes).
    pub fn conjugate_symmetric(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut p = vec![ZERO; self.dim()];
        for j in 0..self.dim() {
            let k = self.partner(j);
            if k == j {
                p[j] = Complex64::new(values[j].re, 0.0);
            } else if j < k {
                p[j] = values[j];
                p[k] = values[j].conj();
            }
        }
        p
    }
}

/// `max |U* B V - I|`.
pub fn check_normalization(ms: &MasterSubspace, sys: &FirstOrderSystem) -> f64 {
    let bv = sys.b.mul_dense(&ms.v);
    let g = ms.u.adjoint() * bv;
    let mut dev = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - target).norm());
        }
    }
    dev
}

struct Group {
    members: Vec<Complex64>,
}

fn ordered_eigenvalues(raw: &[Complex64], key: impl Fn(Complex64) -> (f64, f64)) -> Vec<Complex64> {
    let scale = raw.iter().fold(0.0f64, |m, l| m.max(l.norm())).max(1e-300);
    let real_tol = 1e-10 * scale;
    let mut used = vec![false; raw.len()];
    let mut groups: Vec<Group> = Vec::new();
    let mut idx: Vec<usize> = (0..raw.len()).collect();
    idx.sort_by(|&a, &b| raw[b].im.partial_cmp(&raw[a].im).unwrap());
    for &i in &idx {
        if used[i] {
            continue;
        }
        used[i] = true;
        let l = raw[i];
        if l.im.abs() <= real_tol {
            groups.push(Group { members: vec![Complex64::new(l.re, 0.0)] });
            continue;
        }
        // Pair with the closest unused conjugate.
        let partner = (0..raw.len())
            .filter(|&k| !used[k] && raw[k].im < -real_tol)
            .min_by(|&a, &b| (raw[a] - l.conj()).norm().partial_cmp(&(raw[b] - l.conj()).norm()).unwrap());
        if let Some(k) = partner {
            used[k] = true;
        }
        let top = Complex64::new(l.re, l.im.abs());
        groups.push(Group { members: vec![top, top.conj()] });
    }
    groups.sort_by(|a, b| {
        let ka = key(a.members[0]);
        let kb = key(b.members[0]);
        ka.partial_cmp(&kb).unwrap()
    });
    groups.into_iter().flat_map(|g| g.members).collect()
}

fn dense_eigenvalues(sys: &FirstOrderSystem) -> Result<Vec<Complex64>> {
    let b = sys.b.to_dense();
    let a = sys.a.to_dense();
    let lu = b.lu();
    let m = lu.solve(&a).ok_or_else(|| SsmError::Validation("B is singular".into()))?;
    let schur = nalgebra::linalg::Schur::try_new(m, 1e-15, 100_000)
        .ok_or_else(|| SsmError::Numerical("Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

fn arnoldi_eigenvalues(sys: &FirstOrderSystem, shift: Complex64, krylov_dim: usize) -> Result<Vec<Complex64>> {
    let n = sys.n;
    let k = krylov_dim.clamp(1, n);
    let a = sys.a.to_dense_complex();
    let b = sys.b.to_dense_complex();
    let op = (a - b.clone() * shift).lu();
    if !op.is_invertible() {
        return Err(SsmError::Numerical("shift coincides with an eigenvalue".into()));
    }
    let mut q: Vec<CVec> = Vec::with_capacity(k + 1);
    let mut h = CMat::zeros(k + 1, k);
    let mut v0 = CVec::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64 * 0.618).sin(), 0.0));
    v0 /= Complex64::new(v0.norm(), 0.0);
    q.push(v0);
    let mut m = k;
    for j in 0..k {
        let mut w = op.solve(&(&b * &q[j])).ok_or_else(|| SsmError::Numerical("shifted solve failed".into()))?;
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = qi.dotc(&w);
                h[(i, j)] += c;
                w -= qi * c;
            }
        }
        let nw = w.norm();
        h[(j + 1, j)] = Complex64::new(nw, 0.0);
        if nw < 1e-13 {
            m = j + 1;
            break;
        }
        q.push(w / Complex64::new(nw, 0.0));
    }
    let hm = h.view((0, 0), (m, m)).into_owned();
    let theta = nalgebra::linalg::Schur::try_new(hm, 1e-15, 100_000)
        .ok_or_else(|| SsmError::Numerical("Hessenberg Schur did not converge".into()))?
        .eigenvalues()
        .ok_or_else(|| SsmError::Numerical("Hessenberg eigenvalues unavailable".into()))?;
    let mut lam: Vec<Complex64> = theta.iter().filter(|t| t.norm() > 1e-14).map(|t| shift + 1.0 / t).collect();
    lam.sort_by(|x, y| (x - shift).norm().partial_cmp(&(y - shift).norm()).unwrap());
    Ok(lam)
}

/// Right/left null bases of `A - lambda B` with nullity check.
fn null_bases(a: &CMat, b: &CMat, lambda: Complex64, multiplicity: usize) -> Result<(CMat, CMat)> {
    let l = a - b * lambda;
    let (sigma, u, v) = sorted_svd(&l);
    let smax = sigma.first().copied().unwrap_or(0.0).max(1e-300);
    let n = sigma.len();
    let nullity = sigma.iter().filter(|&&s| s <= 1e-8 * smax).count().max(1);
    if nullity < multiplicity {
        return Err(SsmError::Unsupported(format!(
            "eigenvalue {lambda} has algebraic multiplicity {multiplicity} but geometric multiplicity {nullity} (defective)"
        )));
    }
    let vr = v.columns(n - multiplicity, multiplicity).into_owned();
    let ul = u.columns(n - multiplicity, multiplicity).into_owned();
    Ok((vr, ul))
}

/// Scales a vector to unit norm with its largest-modulus entry real and positive.
fn fix_phase(v: &mut CVec) {
    let vmax = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    // First entry within rounding of the maximum modulus, for a deterministic choice under ties.
    let imax = v.iter().position(|z| z.norm() >= vmax * (1.0 - 1e-12)).unwrap_or(0);
    let z = v[imax];
    let s = z.conj() / (z.norm() * v.norm());
    *v *= s;
    v[imax] = Complex64::new(v[imax].re, 0.0);
}

/// Computes and normalizes the master subspace; returns it with the screened outer eigenvalues.
pub fn master_spectrum(sys: &FirstOrderSystem, select: &Selection, opts: &SpectrumOptions) -> Result<(MasterSubspace, Vec<Complex64>)> {
    let n = sys.n;
    let raw = match opts.method {
        EigenMethod::Dense => dense_eigenvalues(sys)?,
        EigenMethod::ShiftInvert { shift_re, shift_im, krylov_dim } => {
            arnoldi_eigenvalues(sys, Complex64::new(shift_re, shift_im), krylov_dim)?
        }
    };
    let ordered = match (select, opts.method) {
        (Selection::SlowestDecay(_), _) => ordered_eigenvalues(&raw, |l| (-l.re, l.norm())),
        (_, EigenMethod::ShiftInvert { shift_re, shift_im, .. }) => {
            let s = Complex64::new(shift_re, shift_im);
            ordered_eigenvalues(&raw, move |l| ((l - s).norm().min((l.conj() - s).norm()), l.im.abs()))
        }
        _ => ordered_eigenvalues(&raw, |l| (l.norm(), -l.re)),
    };
    let chosen: Vec<usize> = match select {
        Selection::SmallestMagnitude(c) | Selection::SlowestDecay(c) => (0..*c).collect(),
        Selection::Indices(ix) => ix.clone(),
    };
    if chosen.is_empty() || chosen.len() > n {
        return Err(SsmError::Validation(format!("master dimension {} must be in 1..={n}", chosen.len())));
    }
    if let Some(bad) = chosen.iter().find(|&&i| i >= ordered.len()) {
        return Err(SsmError::Validation(format!("eigenvalue index {bad} out of range 0..{}", ordered.len())));
    }
    let mut sorted_chosen = chosen.clone();
    sorted_chosen.sort_unstable();
    sorted_chosen.dedup();
    if sorted_chosen.len() != chosen.len() {
        return Err(SsmError::Validation("duplicate eigenvalue index".into()));
    }
    let scale = {
        let s = ordered.iter().fold(0.0f64, |m, l| m.max(l.norm()));
        if s > 0.0 {
            s
        } else {
            1.0
        }
    };
    let real_tol = 1e-10 * scale;
    // Every selected complex eigenvalue must come with its conjugate.
    for &i in &chosen {
        let l = ordered[i];
        if l.im.abs() > real_tol && !chosen.iter().any(|&k| (ordered[k] - l.conj()).norm() <= 1e-8 * scale) {
            return Err(SsmError::Validation(format!(
                "selection splits the conjugate pair of eigenvalue {l}; select both members"
            )));
        }
    }

    let a = sys.a.to_dense_complex();
    let b = sys.b.to_dense_complex();
    let cluster_tol = 1e-8 * scale;
    let m = chosen.len();
    let mut lambdas = vec![ZERO; m];
    let mut v = CMat::zeros(n, m);
    let mut u = CMat::zeros(n, m);
    let mut done = vec![false; m];
    for slot in 0..m {
        if done[slot] {
            continue;
        }
        let l0 = ordered[chosen[slot]];
        if l0.im < -real_tol {
            // Filled from its partner with positive imaginary part.
            continue;
        }
        let slots: Vec<usize> = (0..m).filter(|&s| (ordered[chosen[s]] - l0).norm() <= cluster_tol).collect();
        let multiplicity = ordered.iter().filter(|l| (**l - l0).norm() <= cluster_tol).count();
        if slots.len() != multiplicity {
            return Err(SsmError::Validation(format!(
                "eigenvalue {l0} has multiplicity {multiplicity}; select all copies or none"
            )));
        }
        let lmean = slots.iter().map(|&s| ordered[chosen[s]]).sum::<Complex64>() / multiplicity as f64;
        let (mut vr, ul) = if let EigenMethod::ShiftInvert { .. } = opts.method {
            if multiplicity > 1 {
                return Err(SsmError::Unsupported("repeated eigenvalues require the dense eigensolver".into()));
            }
            inverse_iteration(&a, &b, lmean)?
        } else {
            null_bases(&a, &b, lmean, multiplicity)?
        };
        let is_real = lmean.im.abs() <= real_tol;
        if multiplicity > 1 {
            if is_real {
                vr = real_span(&vr, multiplicity);
            }
            vr = canonical_basis(&vr, 1e-12);
        }
        for c in 0..multiplicity {
            let mut col = vr.column(c).into_owned();
            fix_phase(&mut col);
            if is_real {
                col = col.map(|z| Complex64::new(z.re, 0.0));
                col /= Complex64::new(col.norm(), 0.0);
            }
            vr.set_column(c, &col);
        }
        let mut ub = if sys.symmetric { vr.map(|z| z.conj()) } else { ul };
        if is_real {
            ub = ub.map(|z| Complex64::new(z.re, 0.0));
            if ub.norm() == 0.0 {
                return Err(SsmError::Numerical("left eigenvector lost in real projection".into()));
            }
        }
        // U <- U G^{-*} with G = U* B V so that U* B V = I.
        let g = ub.adjoint() * (&b * &vr);
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| SsmError::Numerical(format!("left and right eigenvectors of {lmean} are B-orthogonal")))?;
        ub = ub * ginv.adjoint();
        // Rayleigh quotient refinement.
        let ray = ub.adjoint() * (&a * &vr);
        let mut lam = (0..multiplicity).map(|c| ray[(c, c)]).sum::<Complex64>() / multiplicity as f64;
        if is_real {
            lam.im = 0.0;
        }
        if lam.re.abs() <= 1e-13 * scale {
            lam.re = 0.0;
        }
        if lam.im.abs() <= 1e-13 * scale {
            lam.im = 0.0;
        }
        for (c, &s) in slots.iter().enumerate() {
            lambdas[s] = lam;
            v.set_column(s, &vr.column(c));
            u.set_column(s, &ub.column(c));
            done[s] = true;
        }
        if !is_real {
            let pslots: Vec<usize> = (0..m)
                .filter(|&s| !done[s] && (ordered[chosen[s]] - l0.conj()).norm() <= cluster_tol)
                .collect();
            for (c, &s) in pslots.iter().enumerate() {
                lambdas[s] = lam.conj();
                v.set_column(s, &vr.column(c).map(|z| z.conj()));
                u.set_column(s, &ub.column(c).map(|z| z.conj()));
                done[s] = true;
            }
        }
    }
    if done.iter().any(|d| !d) {
        return Err(SsmError::Numerical("could not match conjugate eigenvalue pairs".into()));
    }
    let mut pairing = vec![Pairing::Real; m];
    for j in 0..m {
        if lambdas[j].im != 0.0 {
            let k = (0..m)
                .find(|&k| k != j && lambdas[k] == lambdas[j].conj() && v.column(k) == v.column(j).map(|z| z.conj()))
                .ok_or_else(|| SsmError::Numerical("conjugate partner missing".into()))?;
            pairing[j] = Pairing::Partner(k);
        }
    }
    let outer: Vec<Complex64> = (0..ordered.len())
        .filter(|i| !chosen.contains(i))
        .take(opts.n_outer)
        .map(|i| ordered[i])
        .collect();
    Ok((MasterSubspace { lambdas, v, u, pairing }, outer))
}

/// Right and left eigenvectors of a simple eigenvalue by inverse iteration.
fn inverse_iteration(a: &CMat, b: &CMat, lambda: Complex64) -> Result<(CMat, CMat)> {
    let n = a.nrows();
    let pert = Complex64::new(1e-10, 1e-10) * lambda.norm().max(1.0);
    let l = a - b * (lambda + pert);
    let lu = l.clone().lu();
    let luh = l.adjoint().lu();
    let mut x = CVec::from_fn(n, |i, _| Complex64::new(1.0, 0.1 * i as f64));
    let mut y = x.clone();
    for _ in 0..4 {
        x = lu.solve(&(b * &x)).ok_or_else(|| SsmError::Numerical("inverse iteration failed".into()))?;
        x /= Complex64::new(x.norm(), 0.0);
        y = luh.solve(&(b.adjoint() * &y)).ok_or_else(|| SsmError::Numerical("inverse iteration failed".into()))?;
        y /= Complex64::new(y.norm(), 0.0);
    }
    Ok((CMat::from_columns(&[x]), CMat::from_columns(&[y])))
}

/// All eigenvalues of the pencil, ordered by modulus with conjugate pairs adjacent.
pub fn all_eigenvalues(sys: &FirstOrderSystem) -> Result<Vec<Complex64>> {
    Ok(ordered_eigenvalues(&dense_eigenvalues(sys)?, |l| (l.norm(), -l.re)))
}

/// Real-valued helper: dense generalized eigenvalue residual `max_j |A v_j - lambda_j B v_j| / |A|`.
pub fn eigen_residual(ms: &MasterSubspace, sys: &FirstOrderSystem) -> f64 {
    let a = sys.a.to_dense_complex();
    let b = sys.b.to_dense_complex();
    let an = a.norm().max(b.norm());
    let mut r = 0.0f64;
    for j in 0..ms.dim() {
        let vj = ms.v.column(j);
        let uj = ms.u.column(j);
        let right = &a * vj - (&b * vj) * ms.lambdas[j];
        let left = uj.adjoint() * &a - (uj.adjoint() * &b) * ms.lambdas[j];
        r = r.max(right.norm() / (an * vj.norm())).max(left.norm() / (an * uj.norm()));
    }
    r
}

/// Real orthonormal basis of the span of the real and imaginary parts of `v`.
fn real_span(v: &CMat, k: usize) -> CMat {
    let n = v.nrows();
    let mut stacked = DMatrix::<f64>::zeros(n, 2 * v.ncols());
    for c in 0..v.ncols() {
        for r in 0..n {
            stacked[(r, 2 * c)] = v[(r, c)].re;
            stacked[(r, 2 * c + 1)] = v[(r, c)].im;
        }
    }
    let svd = stacked.svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    CMat::from_fn(n, k, |r, c| Complex64::new(u[(r, order[c])], 0.0))
}
