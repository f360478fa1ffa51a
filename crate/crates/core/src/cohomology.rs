//! Order-by-order solution of the invariance equation `B DW R = A W + F(W)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsmError};
use crate::linalg::{vec_norm, CMat, CVec, Solver, ZERO};
use crate::model::FirstOrderSystem;
use crate::polytensor::{apply_kron_sum, compose, eval_series, kron, kron_sum_lambdas, MultiIndexSet};
use crate::spectrum::MasterSubspace;

/// Parametrization style for a single master mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeStyle {
    NormalForm,
    Graph,
}

/// Parametrization style, possibly chosen per master mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Style {
    NormalForm,
    Graph,
    PerMode(Vec<ModeStyle>),
}

impl Style {
    pub fn mode(&self, j: usize) -> ModeStyle {
        match self {
            Style::NormalForm => ModeStyle::NormalForm,
            Style::Graph => ModeStyle::Graph,
            Style::PerMode(v) => v.get(j).copied().unwrap_or(ModeStyle::NormalForm),
        }
    }

    fn any_normal_form(&self, m: usize) -> bool {
        (0..m).any(|j| self.mode(j) == ModeStyle::NormalForm)
    }
}

/// What to do when a monomial is resonant with a screened outer eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OuterPolicy {
    Error,
    Warn,
}

/// Resonance and solver tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute resonance tolerance; defaults to `1e-8` times the eigenvalue scale.
    pub abs: Option<f64>,
    pub rel: f64,
    /// Lightly damped near-resonance: for oscillatory `lambda_j`, a monomial whose
    /// imaginary part matches is resonant when the real parts differ by at most
    /// `light_damping * |lambda_j|`.
    pub light_damping: f64,
    /// Condition-number estimate above which block solves switch to minimum norm.
    pub cond_limit: f64,
    /// Overrides the style-dependent outer-resonance policy.
    pub outer_policy: Option<OuterPolicy>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { abs: None, rel: 1e-3, light_damping: 0.3, cond_limit: 1e12, outer_policy: None }
    }
}

impl Tolerances {
    pub fn resolved_abs(&self, master: &MasterSubspace, outer: &[Complex64]) -> f64 {
        self.abs.unwrap_or_else(|| {
            let s = master.lambdas.iter().chain(outer).fold(0.0f64, |m, l| m.max(l.norm()));
            1e-8 * if s > 0.0 { s } else { 1.0 }
        })
    }

    /// Resonance test between a combination `lhs` and an eigenvalue `target`.
    pub fn is_resonant(&self, lhs: Complex64, target: Complex64, abs: f64) -> bool {
        let gap = (lhs - target).norm();
        let tol = abs + self.rel * target.norm();
        if gap <= tol {
            return true;
        }
        target.im != 0.0 && (lhs.im - target.im).abs() <= tol && (lhs.re - target.re).abs() <= self.light_damping * target.norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerResonance {
    /// 0-based multi-index.
    pub monomial: Vec<usize>,
    pub mode: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterResonance {
    pub monomial: Vec<usize>,
    /// Index into the screened outer eigenvalue list.
    pub outer_index: usize,
    pub lambda: Complex64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub order: usize,
    pub inner: Vec<InnerResonance>,
    pub outer: Vec<OuterResonance>,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub light_damping: f64,
}

impl ResonanceReport {
    pub fn is_inner(&self, pos_tuple: &[usize], mode: usize) -> bool {
        self.inner.iter().any(|r| r.mode == mode && r.monomial == pos_tuple)
    }

    /// Copy with monomials, modes and outer indices shifted to 1-based for output files.
    pub fn one_based(&self) -> ResonanceReport {
        let shift = |v: &[usize]| v.iter().map(|k| k + 1).collect();
        ResonanceReport {
            inner: self
                .inner
                .iter()
                .map(|r| InnerResonance { monomial: shift(&r.monomial), mode: r.mode + 1, gap: r.gap })
                .collect(),
            outer: self
                .outer
                .iter()
                .map(|r| OuterResonance { monomial: shift(&r.monomial), outer_index: r.outer_index + 1, ..r.clone() })
                .collect(),
            ..self.clone()
        }
    }
}

pub fn classify_resonances(master: &MasterSubspace, outer: &[Complex64], i: usize, tol: &Tolerances) -> Result<ResonanceReport> {
    if i < 2 {
        return Err(SsmError::Validation("resonances are classified for orders >= 2".into()));
    }
    let set = MultiIndexSet::new(i, master.dim())?;
    let sums = kron_sum_lambdas(&master.lambdas, i);
    let abs = tol.resolved_abs(master, outer);
    let mut report = ResonanceReport {
        order: i,
        inner: vec![],
        outer: vec![],
        tol_abs: abs,
        tol_rel: tol.rel,
        light_damping: tol.light_damping,
    };
    for (pos, &s) in sums.iter().enumerate() {
        for (j, &l) in master.lambdas.iter().enumerate() {
            if tol.is_resonant(s, l, abs) {
                report.inner.push(InnerResonance { monomial: set.tuple(pos), mode: j, gap: (s - l).norm() });
            }
        }
        for (k, &l) in outer.iter().enumerate() {
            if tol.is_resonant(s, l, abs) {
                report.outer.push(OuterResonance { monomial: set.tuple(pos), outer_index: k, lambda: l, gap: (s - l).norm() });
            }
        }
    }
    Ok(report)
}

/// Per-factorization diagnostics of an order solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDiagnostic {
    pub lambda: Complex64,
    pub monomials: usize,
    pub cond_estimate: f64,
    pub min_norm: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderSolution {
    pub w: CMat,
    pub r: CMat,
    pub report: ResonanceReport,
    pub blocks: Vec<BlockDiagnostic>,
    pub warnings: Vec<String>,
}

/// Groups monomial positions by (numerically) equal `lambda_l`.
fn group_by_lambda(sums: &[Complex64]) -> Vec<(Complex64, Vec<usize>)> {
    let mut groups: Vec<(Complex64, Vec<usize>)> = Vec::new();
    for (pos, &s) in sums.iter().enumerate() {
        let tol = 1e-14 * s.norm().max(1.0);
        match groups.iter_mut().find(|(l, _)| (l - s).norm() <= tol) {
            Some((_, v)) => v.push(pos),
            None => groups.push((s, vec![pos])),
        }
    }
    groups
}

/// Solves the order-`i` homological equation given its right-hand side
/// `C_i = (F o W)_i - B sum_{j=2}^{i-1} W_j Rcal_{i,j}`.
pub fn solve_order(
    sys: &FirstOrderSystem,
    master: &MasterSubspace,
    outer: &[Complex64],
    i: usize,
    c: &CMat,
    style: &Style,
    tol: &Tolerances,
) -> Result<OrderSolution> {
    let m = master.dim();
    let n = sys.n;
    let set = MultiIndexSet::new(i, m)?;
    if c.nrows() != n || c.ncols() != set.len() {
        return Err(SsmError::Validation(format!(
            "order-{i} right-hand side is {}x{}, expected {n}x{}",
            c.nrows(),
            c.ncols(),
            set.len()
        )));
    }
    let report = classify_resonances(master, outer, i, tol)?;
    let policy = tol.outer_policy.unwrap_or(if style.any_normal_form(m) { OuterPolicy::Error } else { OuterPolicy::Warn });
    let mut warnings = Vec::new();
    for o in &report.outer {
        let pos = set.position(&o.monomial);
        // A zero right-hand side column leaves no small divisor to amplify.
        if c.column(pos).iter().all(|z| *z == ZERO) {
            continue;
        }
        match policy {
            OuterPolicy::Error => {
                return Err(SsmError::OuterResonance {
                    order: i,
                    monomial: o.monomial.iter().map(|k| k + 1).collect(),
                    lambda: format!("{}", o.lambda),
                    gap: o.gap,
                })
            }
            OuterPolicy::Warn => warnings.push(format!(
                "order {i}: monomial {:?} resonant with outer eigenvalue {} (gap {:.3e})",
                o.monomial.iter().map(|k| k + 1).collect::<Vec<_>>(),
                o.lambda,
                o.gap
            )),
        }
    }

    // Reduced dynamics coefficients.
    let mut r = CMat::zeros(m, set.len());
    let uc = master.u.adjoint() * c;
    for j in 0..m {
        match style.mode(j) {
            ModeStyle::Graph => r.row_mut(j).copy_from(&uc.row(j)),
            ModeStyle::NormalForm => {
                for res in report.inner.iter().filter(|res| res.mode == j) {
                    let pos = set.position(&res.monomial);
                    r[(j, pos)] = uc[(j, pos)];
                }
            }
        }
    }

    // Right-hand sides c_l - B V r_l.
    let bv = sys.b.mul_dense(&master.v);
    let rhs = c - &bv * &r;
    let sums = kron_sum_lambdas(&master.lambdas, i);
    let groups = group_by_lambda(&sums);
    let a = sys.a.to_dense_complex();
    let b = sys.b.to_dense_complex();

    let solved: Vec<(BlockDiagnostic, Vec<(usize, CVec)>)> = groups
        .par_iter()
        .map(|(lambda, cols)| {
            let l = &b * *lambda - &a;
            let solver = Solver::new(&l, tol.cond_limit);
            let mut out = Vec::with_capacity(cols.len());
            for &pos in cols {
                let col = rhs.column(pos).into_owned();
                let w = if col.iter().all(|z| *z == ZERO) { CVec::zeros(n) } else { solver.solve(&col)? };
                out.push((pos, w));
            }
            Ok((
                BlockDiagnostic {
                    lambda: *lambda,
                    monomials: cols.len(),
                    cond_estimate: solver.cond_estimate,
                    min_norm: solver.is_min_norm(),
                },
                out,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut w = CMat::zeros(n, set.len());
    let mut blocks = Vec::with_capacity(solved.len());
    for (diag, cols) in solved {
        blocks.push(diag);
        for (pos, col) in cols {
            w.set_column(pos, &col);
        }
    }
    Ok(OrderSolution { w, r, report, blocks, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderDiagnostics {
    pub order: usize,
    pub blocks: Vec<BlockDiagnostic>,
}

/// Autonomous manifold expansion `W(p) = sum W_i p^{(x)i}`, `R(p) = sum R_i p^{(x)i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldExpansion {
    pub order: usize,
    pub master: MasterSubspace,
    pub outer: Vec<Complex64>,
    pub style: Style,
    pub tolerances: Tolerances,
    /// `w[i-1]` is `W_i` (N x M^i).
    pub w: Vec<CMat>,
    /// `r[i-1]` is `R_i` (M x M^i).
    pub r: Vec<CMat>,
    /// Resonance reports for orders 2..=order.
    pub reports: Vec<ResonanceReport>,
    pub diagnostics: Vec<OrderDiagnostics>,
    pub warnings: Vec<String>,
}

pub fn compute_manifold(
    sys: &FirstOrderSystem,
    master: &MasterSubspace,
    outer: &[Complex64],
    order: usize,
    style: &Style,
    tol: &Tolerances,
) -> Result<ManifoldExpansion> {
    if order < 1 {
        return Err(SsmError::Validation("manifold order must be >= 1".into()));
    }
    if let Style::PerMode(v) = style {
        if v.len() != master.dim() {
            return Err(SsmError::Validation(format!(
                "per-mode style lists {} modes, master has {}",
                v.len(),
                master.dim()
            )));
        }
    }
    let mut w = vec![master.v.clone()];
    let mut r = vec![CMat::from_diagonal(&CVec::from_vec(master.lambdas.clone()))];
    let mut reports = Vec::new();
    let mut diagnostics = Vec::new();
    let mut warnings = Vec::new();
    for i in 2..=order {
        let mut c = compose(&sys.nonlinearity, &w, i)?;
        let mut acc = CMat::zeros(sys.n, c.ncols());
        for j in 2..i {
            acc += apply_kron_sum(&r[i - j], &w[j - 1], i, j);
        }
        if i > 2 {
            c -= sys.b.mul_dense(&acc);
        }
        let sol = solve_order(sys, master, outer, i, &c, style, tol)?;
        w.push(sol.w);
        r.push(sol.r);
        reports.push(sol.report);
        diagnostics.push(OrderDiagnostics { order: i, blocks: sol.blocks });
        warnings.extend(sol.warnings);
    }
    Ok(ManifoldExpansion {
        order,
        master: master.clone(),
        outer: outer.to_vec(),
        style: style.clone(),
        tolerances: tol.clone(),
        w,
        r,
        reports,
        diagnostics,
        warnings,
    })
}

impl ManifoldExpansion {
    pub fn dim(&self) -> usize {
        self.master.dim()
    }

    pub fn eval_w(&self, p: &[Complex64]) -> Vec<Complex64> {
        eval_series(&self.w, p)
    }

    pub fn eval_r(&self, p: &[Complex64]) -> Vec<Complex64> {
        eval_series(&self.r, p)
    }

    /// `DW(p) q`.
    pub fn dw_apply(&self, p: &[Complex64], q: &[Complex64]) -> Vec<Complex64> {
        let n = self.w[0].nrows();
        let mut out = vec![ZERO; n];
        // powers[k] = p^{(x)k}
        let mut powers = vec![vec![Complex64::new(1.0, 0.0)]];
        for k in 1..self.order {
            powers.push(kron(&powers[k - 1], p));
        }
        for (idx, wi) in self.w.iter().enumerate() {
            let i = idx + 1;
            let mut d = vec![ZERO; wi.ncols()];
            for k in 0..i {
                let t = kron(&kron(&powers[k], q), &powers[i - 1 - k]);
                for (a, b) in d.iter_mut().zip(t) {
                    *a += b;
                }
            }
            for r in 0..n {
                out[r] += wi.row(r).iter().zip(&d).map(|(a, b)| a * b).sum::<Complex64>();
            }
        }
        out
    }

    /// Invariance residual `B DW(p) R(p) - A W(p) - F(W(p))`.
    pub fn residual(&self, sys: &FirstOrderSystem, p: &[Complex64]) -> Vec<Complex64> {
        let wp = self.eval_w(p);
        let rp = self.eval_r(p);
        let dwr = self.dw_apply(p, &rp);
        let bdwr = sys.b.mul_vec_complex(&dwr);
        let aw = sys.a.mul_vec_complex(&wp);
        let fw = sys.eval_nonlinearity_complex(&wp);
        bdwr.iter().zip(&aw).zip(&fw).map(|((x, y), z)| x - y - z).collect()
    }

    /// Coefficient of a monomial in row `row` of `R`, summed over all orderings;
    /// `exponents[k]` is the power of `p_k`.
    pub fn reduced_coefficient(&self, row: usize, exponents: &[usize]) -> Complex64 {
        coefficient(&self.r, row, exponents)
    }

    pub fn manifold_coefficient(&self, row: usize, exponents: &[usize]) -> Complex64 {
        coefficient(&self.w, row, exponents)
    }

    /// Realness defect `max |Im W(p)| / max(|W(p)|, tiny)` at a conjugate-symmetric point.
    pub fn imaginary_defect(&self, p: &[Complex64]) -> f64 {
        let wp = self.eval_w(p);
        let im = wp.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        im / vec_norm(&wp).max(1e-300)
    }

    /// Serializable document with 1-based indices.
    pub fn document(&self) -> ManifoldDocument {
        let m = self.dim();
        let triplets = |mat: &CMat, degree: usize| -> Vec<Triplet> {
            let set = MultiIndexSet::new(degree, m).expect("orders were allocated");
            let mut out = Vec::new();
            for c in 0..mat.ncols() {
                for r in 0..mat.nrows() {
                    let v = mat[(r, c)];
                    if v != ZERO {
                        out.push(Triplet(r + 1, set.tuple(c).iter().map(|k| k + 1).collect(), v.re, v.im));
                    }
                }
            }
            out
        };
        ManifoldDocument {
            order: self.order,
            style: self.style.clone(),
            tolerances: self.tolerances.clone(),
            master: MasterDocument {
                lambdas: self.master.lambdas.iter().map(|l| [l.re, l.im]).collect(),
                v: triplets(&self.master.v, 1),
                u: triplets(&self.master.u, 1),
            },
            outer_lambdas: self.outer.iter().map(|l| [l.re, l.im]).collect(),
            orders: (1..=self.order)
                .map(|i| OrderDocument {
                    order: i,
                    w: triplets(&self.w[i - 1], i),
                    r: triplets(&self.r[i - 1], i),
                    resonances: if i >= 2 { Some(self.reports[i - 2].one_based()) } else { None },
                    blocks: if i >= 2 { self.diagnostics[i - 2].blocks.clone() } else { vec![] },
                })
                .collect(),
            warnings: self.warnings.clone(),
        }
    }
}

fn coefficient(series: &[CMat], row: usize, exponents: &[usize]) -> Complex64 {
    let degree: usize = exponents.iter().sum();
    if degree == 0 || degree > series.len() {
        return ZERO;
    }
    let m = exponents.len();
    let set = MultiIndexSet::new(degree, m).expect("orders were allocated");
    let mat = &series[degree - 1];
    let mut sum = ZERO;
    for pos in 0..set.len() {
        let t = set.tuple(pos);
        let mut counts = vec![0usize; m];
        for k in t {
            counts[k] += 1;
        }
        if counts == exponents {
            sum += mat[(row, pos)];
        }
    }
    sum
}

/// `(row, multi-index, re, im)` with 1-based row and indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triplet(pub usize, pub Vec<usize>, pub f64, pub f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterDocument {
    pub lambdas: Vec<[f64; 2]>,
    pub v: Vec<Triplet>,
    pub u: Vec<Triplet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderDocument {
    pub order: usize,
    pub w: Vec<Triplet>,
    pub r: Vec<Triplet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resonances: Option<ResonanceReport>,
    pub blocks: Vec<BlockDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldDocument {
    pub order: usize,
    pub style: Style,
    pub tolerances: Tolerances,
    pub master: MasterDocument,
    pub outer_lambdas: Vec<[f64; 2]>,
    pub orders: Vec<OrderDocument>,
    pub warnings: Vec<String>,
}

/// Coefficients of a series keyed by sorted 0-based multi-index, summed over permutations.
pub fn symmetrized(series_order: &CMat, degree: usize, m: usize, row: usize) -> BTreeMap<Vec<usize>, Complex64> {
    let set = MultiIndexSet::new(degree, m).expect("valid order");
    let mut out = BTreeMap::new();
    for pos in 0..set.len() {
        let v = series_order[(row, pos)];
        if v != ZERO {
            let mut t = set.tuple(pos);
            t.sort_unstable();
            *out.entry(t).or_insert(ZERO) += v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_first_order, lorenz_extended, oscillator_chain, NChoice, Variant};
    use crate::spectrum::{master_spectrum, Selection, SpectrumOptions};

    fn lorenz(order: usize, style: Style) -> ManifoldExpansion {
        let sys = lorenz_extended(1.0, 1.0).unwrap();
        let (ms, outer) = master_spectrum(&sys, &Selection::SmallestMagnitude(2), &SpectrumOptions::default()).unwrap();
        compute_manifold(&sys, &ms, &outer, order, &style, &Tolerances::default()).unwrap()
    }

    #[test]
    fn lorenz_order_two_normal_form() {
        let m = lorenz(2, Style::NormalForm);
        let r2 = &m.r[1];
        for j in 0..2 {
            for c in 0..4 {
                let expect = if j == 0 && c == 1 { 0.5 } else { 0.0 };
                assert!((r2[(j, c)] - Complex64::new(expect, 0.0)).norm() < 1e-12, "R2[{j},{c}] = {}", r2[(j, c)]);
            }
        }
        let rep = &m.reports[0];
        assert_eq!(rep.inner.len(), 8);
        assert!(rep.outer.is_empty());
    }

    #[test]
    fn lorenz_cubic_reduced_dynamics() {
        let m = lorenz(3, Style::NormalForm);
        let c = |row, e: &[usize]| m.reduced_coefficient(row, e);
        assert!((c(0, &[1, 1]) - Complex64::new(0.5, 0.0)).norm() < 1e-10);
        assert!((c(0, &[3, 0]) - Complex64::new(-0.25, 0.0)).norm() < 1e-10);
        assert!((c(0, &[1, 2]) - Complex64::new(-0.125, 0.0)).norm() < 1e-10);
        for e in [[2, 0], [0, 2], [2, 1], [0, 3]] {
            assert!(c(0, &e).norm() < 1e-10);
        }
        for e in [[2, 0], [1, 1], [0, 2], [3, 0], [2, 1], [1, 2], [0, 3]] {
            assert!(c(1, &e).norm() < 1e-10);
        }
    }

    #[test]
    fn linear_system_has_trivial_higher_orders() {
        let mech = oscillator_chain(3, 1.0, 1.0, 0.1, 0.0).unwrap();
        let sys = build_first_order(&mech, Variant::L2, NChoice::MassM).unwrap();
        let (ms, outer) = master_spectrum(&sys, &Selection::SmallestMagnitude(2), &SpectrumOptions::default()).unwrap();
        let m = compute_manifold(&sys, &ms, &outer, 4, &Style::NormalForm, &Tolerances::default()).unwrap();
        for i in 1..4 {
            assert!(m.w[i].iter().all(|z| *z == ZERO));
            assert!(m.r[i].iter().all(|z| *z == ZERO));
        }
    }

    #[test]
    fn near_resonances_of_lightly_damped_pair() {
        let l = Complex64::new(-0.0019, 5.1681);
        let ms = MasterSubspace {
            lambdas: vec![l, l.conj()],
            v: CMat::identity(2, 2),
            u: CMat::identity(2, 2),
            pairing: vec![crate::spectrum::Pairing::Partner(1), crate::spectrum::Pairing::Partner(0)],
        };
        let rep = classify_resonances(&ms, &[], 3, &Tolerances::default()).unwrap();
        let mut got: Vec<(Vec<usize>, usize)> = rep.inner.iter().map(|r| (r.monomial.clone(), r.mode)).collect();
        got.sort();
        let mut expect = vec![];
        for t in [[0, 0, 1], [0, 1, 0], [1, 0, 0]] {
            expect.push((t.to_vec(), 0));
        }
        for t in [[0, 1, 1], [1, 0, 1], [1, 1, 0]] {
            expect.push((t.to_vec(), 1));
        }
        expect.sort();
        assert_eq!(got, expect);
    }

    #[test]
    fn separated_spectrum_has_no_resonance() {
        let ms = MasterSubspace {
            lambdas: vec![Complex64::new(-1.0, 0.0), Complex64::new(-3.5, 0.0)],
            v: CMat::identity(2, 2),
            u: CMat::identity(2, 2),
            pairing: vec![crate::spectrum::Pairing::Real, crate::spectrum::Pairing::Real],
        };
        let tol = Tolerances { rel: 1e-8, ..Tolerances::default() };
        let rep = classify_resonances(&ms, &[Complex64::new(-10.0, 0.0)], 2, &tol).unwrap();
        assert!(rep.inner.is_empty() && rep.outer.is_empty());
    }
}
