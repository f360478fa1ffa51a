//! Multi-index sets, Kronecker powers and sparse polynomial coefficient arrays.
//!
//! A degree-`k` coefficient array over `M` variables maps (row, position) to a
//! value, where positions enumerate `{0..M}^k` lexicographically (first index
//! most significant), so a polynomial is `sum_pos C[row, pos] * p^{(x)k}[pos]`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, SsmError};
use crate::linalg::{CMat, ZERO};

/// Largest number of positions a single index set may address.
pub const MAX_POSITIONS: u128 = 1 << 48;

pub fn checked_pow(m: usize, i: usize) -> Result<usize> {
    let mut acc: u128 = 1;
    for _ in 0..i {
        acc *= m as u128;
        if acc > MAX_POSITIONS {
            return Err(SsmError::Capacity(format!("{m}^{i} positions exceed 2^48")));
        }
    }
    Ok(acc as usize)
}

/// The lexicographically ordered set of `degree`-tuples over `{0..alphabet}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiIndexSet {
    degree: usize,
    alphabet: usize,
    len: usize,
}

impl MultiIndexSet {
    pub fn new(degree: usize, alphabet: usize) -> Result<Self> {
        if degree == 0 || alphabet == 0 {
            return Err(SsmError::Validation("index set needs degree >= 1 and alphabet >= 1".into()));
        }
        Ok(Self { degree, alphabet, len: checked_pow(alphabet, degree)? })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Position of a 0-based tuple.
    pub fn position(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.degree);
        tuple.iter().fold(0, |acc, &t| acc * self.alphabet + t)
    }

    /// 0-based tuple at a position.
    pub fn tuple(&self, mut pos: usize) -> Vec<usize> {
        let mut t = vec![0; self.degree];
        for k in (0..self.degree).rev() {
            t[k] = pos % self.alphabet;
            pos /= self.alphabet;
        }
        t
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.len).map(move |p| self.tuple(p))
    }
}

pub fn index_set(degree: usize, alphabet: usize) -> Result<MultiIndexSet> {
    MultiIndexSet::new(degree, alphabet)
}

/// `p^{(x)i}`: entry at position(l) is the product of `p[l_k]`.
pub fn kron_power(p: &[Complex64], i: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..i {
        out = kron(&out, p);
    }
    out
}

pub fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Entry at position(l) is `lambda[l_1] + ... + lambda[l_i]`.
pub fn kron_sum_lambdas(lambdas: &[Complex64], i: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO];
    for _ in 0..i {
        out = out.iter().flat_map(|a| lambdas.iter().map(move |b| a + b)).collect();
    }
    out
}

/// All compositions of `total` into `parts` positive integers, each at most `max_part`.
pub fn compositions(total: usize, parts: usize, max_part: usize) -> Vec<Vec<usize>> {
    fn rec(rem: usize, parts: usize, max_part: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if rem == 0 {
                out.push(cur.clone());
            }
            return;
        }
        if rem < parts {
            return;
        }
        let hi = max_part.min(rem - (parts - 1));
        for q in 1..=hi {
            cur.push(q);
            rec(rem - q, parts - 1, max_part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, max_part, &mut Vec::new(), &mut out);
    out
}

/// Sparse degree-`k` coefficient array with `rows` outputs over `vars` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs {
    degree: usize,
    rows: usize,
    vars: usize,
    set: MultiIndexSet,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl PolyCoeffs {
    pub fn new(degree: usize, rows: usize, vars: usize) -> Result<Self> {
        let set = MultiIndexSet::new(degree, vars)?;
        Ok(Self { degree, rows, vars, set, entries: BTreeMap::new() })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn index_set(&self) -> &MultiIndexSet {
        &self.set
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Adds `value` at (row, 0-based tuple); duplicates accumulate.
    pub fn add(&mut self, row: usize, tuple: &[usize], value: Complex64) -> Result<()> {
        if row >= self.rows {
            return Err(SsmError::Validation(format!("row {row} out of range 0..{}", self.rows)));
        }
        if tuple.len() != self.degree || tuple.iter().any(|&t| t >= self.vars) {
            return Err(SsmError::Validation(format!(
                "multi-index {tuple:?} invalid for degree {} over {} variables",
                self.degree, self.vars
            )));
        }
        let pos = self.set.position(tuple);
        self.add_at(row, pos, value);
        Ok(())
    }

    pub fn add_real(&mut self, row: usize, tuple: &[usize], value: f64) -> Result<()> {
        self.add(row, tuple, Complex64::new(value, 0.0))
    }

    pub(crate) fn add_at(&mut self, row: usize, pos: usize, value: Complex64) {
        let e = self.entries.entry((row, pos)).or_insert(ZERO);
        *e += value;
        if *e == ZERO {
            self.entries.remove(&(row, pos));
        }
    }

    pub fn get(&self, row: usize, tuple: &[usize]) -> Complex64 {
        self.entries.get(&(row, self.set.position(tuple))).copied().unwrap_or(ZERO)
    }

    /// Iterates (row, position, value).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().map(|(&(r, p), &v)| (r, p, v))
    }

    pub fn is_real(&self) -> bool {
        self.entries.values().all(|v| v.im == 0.0)
    }

    /// Re-embeds the array with rows shifted by `offset` into `rows` total rows, scaled by `s`.
    pub fn embed(&self, rows: usize, vars: usize, row_offset: usize, var_map: &[usize], s: f64) -> Result<Self> {
        let mut out = PolyCoeffs::new(self.degree, rows, vars)?;
        for (r, p, v) in self.iter() {
            let t: Vec<usize> = self.set.tuple(p).iter().map(|&k| var_map[k]).collect();
            out.add(r + row_offset, &t, v * s)?;
        }
        Ok(out)
    }

    pub fn eval(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.rows];
        for (r, p, v) in self.iter() {
            let t = self.set.tuple(p);
            out[r] += t.iter().fold(v, |acc, &k| acc * z[k]);
        }
        out
    }

    /// Real evaluation (imaginary parts of coefficients ignored).
    pub fn eval_real_into(&self, z: &[f64], out: &mut [f64]) {
        for (r, p, v) in self.iter() {
            let t = self.set.tuple(p);
            out[r] += t.iter().fold(v.re, |acc, &k| acc * z[k]);
        }
    }

    /// Adds the Jacobian of the real evaluation to `jac`.
    pub fn jacobian_real_into(&self, z: &[f64], jac: &mut DMatrix<f64>) {
        for (r, p, v) in self.iter() {
            let t = self.set.tuple(p);
            for k in 0..t.len() {
                let d = t
                    .iter()
                    .enumerate()
                    .filter(|&(m, _)| m != k)
                    .fold(v.re, |acc, (_, &q)| acc * z[q]);
                jac[(r, t[k])] += d;
            }
        }
    }

    /// Coefficients summed over permutation orbits, keyed by the sorted tuple.
    pub fn monomials(&self, row: usize) -> BTreeMap<Vec<usize>, Complex64> {
        let mut out = BTreeMap::new();
        for (r, p, v) in self.iter() {
            if r == row {
                let mut t = self.set.tuple(p);
                t.sort_unstable();
                *out.entry(t).or_insert(ZERO) += v;
            }
        }
        out
    }

    /// Dense `rows x vars^degree` form.
    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.rows, self.set.len());
        for (r, p, v) in self.iter() {
            m[(r, p)] = v;
        }
        m
    }

    /// Sparse form of a dense coefficient matrix, dropping entries with modulus <= `drop_tol`.
    pub fn from_dense(m: &CMat, degree: usize, vars: usize, drop_tol: f64) -> Result<Self> {
        let mut out = PolyCoeffs::new(degree, m.nrows(), vars)?;
        if m.ncols() != out.set.len() {
            return Err(SsmError::Validation(format!(
                "dense coefficient matrix has {} columns, expected {}",
                m.ncols(),
                out.set.len()
            )));
        }
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)].norm() > drop_tol {
                    out.add_at(r, c, m[(r, c)]);
                }
            }
        }
        Ok(out)
    }
}

/// Degree-`i` coefficients of `F(W(p))` for `F = sum_j F_j z^{(x)j}` with `j >= 2`
/// and `W = sum_k W_k p^{(x)k}`; `w[k-1]` holds `W_k` (N x M^k). Only orders
/// below `i` are used.
pub fn compose(f: &[PolyCoeffs], w: &[CMat], i: usize) -> Result<CMat> {
    let first = w.first().ok_or_else(|| SsmError::Validation("compose needs W_1".into()))?;
    let m = first.ncols();
    let n_out = f.first().map(|p| p.rows()).unwrap_or(first.nrows());
    let cols = checked_pow(m, i)?;
    if i >= 2 && w.len() < i - 1 {
        return Err(SsmError::Validation(format!(
            "compose at order {i} needs W up to order {}, have {}",
            i - 1,
            w.len()
        )));
    }
    let mut out = CMat::zeros(n_out, cols);
    if i < 2 {
        return Ok(out);
    }
    let nonzero_rows: Vec<Vec<bool>> = w
        .iter()
        .map(|wk| (0..wk.nrows()).map(|r| wk.row(r).iter().any(|z| *z != ZERO)).collect())
        .collect();

    // Group nonlinearity entries by output row.
    let mut by_row: BTreeMap<usize, Vec<(usize, Vec<usize>, Complex64)>> = BTreeMap::new();
    for fj in f.iter().filter(|fj| fj.degree() >= 2 && fj.degree() <= i) {
        for (r, p, v) in fj.iter() {
            by_row.entry(r).or_default().push((fj.degree(), fj.index_set().tuple(p), v));
        }
    }
    let mut comps: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
    for j in 2..=i {
        comps.insert(j, compositions(i, j, i - 1));
    }

    let rows: Vec<(usize, Vec<Complex64>)> = by_row
        .par_iter()
        .map(|(&r, terms)| {
            let mut acc = vec![ZERO; cols];
            for (j, t, v) in terms {
                for q in &comps[j] {
                    if q.iter().zip(t).any(|(&qk, &tk)| !nonzero_rows[qk - 1][tk]) {
                        continue;
                    }
                    let mut cur = vec![*v];
                    for (&qk, &tk) in q.iter().zip(t) {
                        let wrow: Vec<Complex64> = w[qk - 1].row(tk).iter().copied().collect();
                        cur = kron(&cur, &wrow);
                    }
                    for (a, c) in acc.iter_mut().zip(&cur) {
                        *a += c;
                    }
                }
            }
            (r, acc)
        })
        .collect();
    for (r, acc) in rows {
        for (c, v) in acc.into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    Ok(out)
}

/// `W_j * Rcal_{i,j}` computed by index arithmetic: the degree `m = i - j + 1`
/// reduced-dynamics coefficients `r_m` (M x M^m) are inserted at each of the
/// `j` slots of the `W_j` multi-index.
pub fn apply_kron_sum(r_m: &CMat, w_j: &CMat, i: usize, j: usize) -> CMat {
    let mdim = r_m.nrows();
    let m = i + 1 - j;
    let n = w_j.nrows();
    let pow = |e: usize| mdim.pow(e as u32);
    let mut out = CMat::zeros(n, pow(i));
    for a in 0..mdim {
        for mid in 0..r_m.ncols() {
            let rv = r_m[(a, mid)];
            if rv == ZERO {
                continue;
            }
            for k in 0..j {
                let suffix_len = j - 1 - k;
                for prefix in 0..pow(k) {
                    for suffix in 0..pow(suffix_len) {
                        let l = (prefix * pow(m) + mid) * pow(suffix_len) + suffix;
                        let col = (prefix * mdim + a) * pow(suffix_len) + suffix;
                        for row in 0..n {
                            let wv = w_j[(row, col)];
                            if wv != ZERO {
                                out[(row, l)] += wv * rv;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Evaluates `sum_k C_k p^{(x)k}` for a list of dense coefficient blocks, `c[k-1] = C_k`.
pub fn eval_series(c: &[CMat], p: &[Complex64]) -> Vec<Complex64> {
    let n = c.first().map(|m| m.nrows()).unwrap_or(0);
    let mut out = vec![ZERO; n];
    let mut pk = vec![Complex64::new(1.0, 0.0)];
    for ck in c {
        pk = kron(&pk, p);
        for r in 0..n {
            out[r] += ck.row(r).iter().zip(&pk).map(|(a, b)| a * b).sum::<Complex64>();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn index_set_3_2_lexicographic() {
        let s = index_set(3, 2).unwrap();
        let t: Vec<Vec<usize>> = s.iter().map(|t| t.iter().map(|x| x + 1).collect()).collect();
        assert_eq!(
            t,
            vec![
                vec![1, 1, 1],
                vec![1, 1, 2],
                vec![1, 2, 1],
                vec![1, 2, 2],
                vec![2, 1, 1],
                vec![2, 1, 2],
                vec![2, 2, 1],
                vec![2, 2, 2]
            ]
        );
    }

    #[test]
    fn index_set_degree_one() {
        let s = index_set(1, 4).unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn index_set_position_base_expansion() {
        let s = index_set(2, 3).unwrap();
        assert_eq!(s.len(), 9);
        // (2,3) 1-based -> position 6 1-based
        assert_eq!(s.position(&[1, 2]) + 1, 6);
    }

    #[test]
    fn index_set_capacity_guard() {
        assert!(matches!(index_set(49, 2), Err(SsmError::Capacity(_))));
        assert!(index_set(48, 2).is_ok());
    }

    #[test]
    fn kron_power_examples() {
        let e = kron_power(&[c(1.0, 0.0), c(0.0, 0.0)], 3);
        assert_eq!(e[0], c(1.0, 0.0));
        assert!(e[1..].iter().all(|z| *z == ZERO));
        let (a, b) = (c(2.0, 1.0), c(-1.0, 3.0));
        assert_eq!(kron_power(&[a, b], 2), vec![a * a, a * b, b * a, b * b]);
    }

    #[test]
    fn kron_sum_examples() {
        let i = c(0.0, 1.0);
        assert_eq!(kron_sum_lambdas(&[i, -i], 2), vec![i * 2.0, ZERO, ZERO, -i * 2.0]);
        assert!(kron_sum_lambdas(&[ZERO, ZERO], 4).iter().all(|z| *z == ZERO));
    }

    #[test]
    fn compositions_enumerated() {
        assert_eq!(compositions(4, 2, 3), vec![vec![1, 3], vec![2, 2], vec![3, 1]]);
        assert!(compositions(2, 3, 5).is_empty());
    }

    #[test]
    fn compose_order_one_and_degree_bookkeeping() {
        let mut f3 = PolyCoeffs::new(3, 2, 2).unwrap();
        f3.add_real(0, &[0, 0, 1], 1.0).unwrap();
        let w1 = CMat::from_row_slice(2, 1, &[c(1.0, 0.0), c(2.0, 0.0)]);
        let fs = vec![f3];
        assert!(compose(&fs, &[w1.clone()], 1).unwrap().iter().all(|z| *z == ZERO));
        assert!(compose(&fs, &[w1.clone()], 2).unwrap().iter().all(|z| *z == ZERO));
        let w2 = CMat::zeros(2, 1);
        let c3 = compose(&fs, &[w1, w2], 3).unwrap();
        assert_eq!(c3[(0, 0)], c(2.0, 0.0));
    }

    #[test]
    fn apply_kron_sum_diagonal_case() {
        let l = [c(-1.0, 2.0), c(-1.0, -2.0)];
        let r1 = CMat::from_diagonal(&nalgebra::DVector::from_vec(l.to_vec()));
        let w = CMat::from_fn(3, 8, |r, col| c(r as f64 + 1.0, col as f64));
        let out = apply_kron_sum(&r1, &w, 3, 3);
        let sums = kron_sum_lambdas(&l, 3);
        for col in 0..8 {
            for r in 0..3 {
                assert!((out[(r, col)] - w[(r, col)] * sums[col]).norm() < 1e-12);
            }
        }
        assert!(apply_kron_sum(&CMat::zeros(2, 4), &CMat::from_element(3, 4, c(1.0, 0.0)), 3, 2)
            .iter()
            .all(|z| *z == ZERO));
    }
}
