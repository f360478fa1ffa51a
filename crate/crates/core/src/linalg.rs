//! Dense complex linear algebra helpers built on nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, SsmError};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|v| Complex64::new(v, 0.0))
}

pub fn norm1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Factorization of a square complex matrix with a fallback to a truncated SVD.
pub struct Solver {
    lu: Option<nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>>,
    svd: Option<nalgebra::SVD<Complex64, nalgebra::Dyn, nalgebra::Dyn>>,
    rcond_cut: f64,
    pub cond_estimate: f64,
}

impl Solver {
    /// Factors `m`. When the estimated 1-norm condition number exceeds `cond_limit`
    /// the solver switches to a minimum-norm solve that discards singular values
    /// below `sigma_max / cond_limit`.
    pub fn new(m: &CMat, cond_limit: f64) -> Self {
        let n = m.nrows();
        let lu = m.clone().lu();
        let cond = if n == 0 {
            1.0
        } else if lu.is_invertible() {
            let adj = m.adjoint().lu();
            let inv_norm = hager_inverse_norm1(n, |x| lu.solve(x), |x| adj.solve(x));
            norm1(m) * inv_norm
        } else {
            f64::INFINITY
        };
        if cond.is_finite() && cond <= cond_limit {
            Solver { lu: Some(lu), svd: None, rcond_cut: 0.0, cond_estimate: cond }
        } else {
            let svd = m.clone().svd(true, true);
            Solver { lu: None, svd: Some(svd), rcond_cut: 1.0 / cond_limit, cond_estimate: cond }
        }
    }

    pub fn is_min_norm(&self) -> bool {
        self.svd.is_some()
    }

    pub fn solve(&self, b: &CVec) -> Result<CVec> {
        if let Some(lu) = &self.lu {
            return lu
                .solve(b)
                .ok_or_else(|| SsmError::Numerical("LU solve failed".into()));
        }
        let svd = self.svd.as_ref().expect("one factorization is present");
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let cut = smax * self.rcond_cut;
        svd.solve(b, cut).map_err(|e| SsmError::Numerical(e.to_string()))
    }
}

/// Hager-Higham estimate of the 1-norm of an inverse, given solves with the
/// matrix and with its adjoint.
fn hager_inverse_norm1<S, T>(n: usize, solve: S, solve_adj: T) -> f64
where
    S: Fn(&CVec) -> Option<CVec>,
    T: Fn(&CVec) -> Option<CVec>,
{
    let mut x = CVec::from_element(n, Complex64::new(1.0 / n as f64, 0.0));
    let mut est = 0.0;
    for _ in 0..5 {
        let y = match solve(&x) {
            Some(y) => y,
            None => return f64::INFINITY,
        };
        let ny: f64 = y.iter().map(|z| z.norm()).sum();
        if ny <= est {
            break;
        }
        est = ny;
        let xi = y.map(|z| if z.norm() > 0.0 { z / z.norm() } else { ONE });
        let z = match solve_adj(&xi) {
            Some(z) => z,
            None => return f64::INFINITY,
        };
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .map(|(j, v)| (j, v.norm()))
            .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        let ztx: f64 = z.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum();
        if zmax <= ztx {
            break;
        }
        x = CVec::zeros(n);
        x[jmax] = ONE;
    }
    est
}

/// Singular value decomposition sorted by decreasing singular value:
/// returns (sigma, U, V) with m = U diag(sigma) V*.
pub fn sorted_svd(m: &CMat) -> (Vec<f64>, CMat, CMat) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let sigma = order.iter().map(|&k| svd.singular_values[k]).collect();
    let uu = CMat::from_columns(&order.iter().map(|&k| u.column(k).into_owned()).collect::<Vec<_>>());
    let vv = CMat::from_columns(
        &order.iter().map(|&k| vt.row(k).adjoint().into_owned()).collect::<Vec<_>>(),
    );
    (sigma, uu, vv)
}

/// Reduces the column span of `basis` to a canonical basis: the transpose is
/// brought to reduced row echelon form with partial pivoting.
pub fn canonical_basis(basis: &CMat, tol: f64) -> CMat {
    let mut r = basis.transpose();
    let (rows, cols) = r.shape();
    let mut lead = 0;
    let mut pivot_row = 0;
    while pivot_row < rows && lead < cols {
        let (best, bval) = (pivot_row..rows)
            .map(|i| (i, r[(i, lead)].norm()))
            .fold((pivot_row, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if bval <= tol {
            lead += 1;
            continue;
        }
        r.swap_rows(pivot_row, best);
        let p = r[(pivot_row, lead)];
        for j in 0..cols {
            r[(pivot_row, j)] /= p;
        }
        for i in 0..rows {
            if i != pivot_row {
                let f = r[(i, lead)];
                if f != ZERO {
                    for j in 0..cols {
                        let v = r[(pivot_row, j)];
                        r[(i, j)] -= f * v;
                    }
                }
            }
        }
        pivot_row += 1;
        lead += 1;
    }
    for z in r.iter_mut() {
        if z.re.abs() <= tol {
            z.re = 0.0;
        }
        if z.im.abs() <= tol {
            z.im = 0.0;
        }
    }
    r.transpose()
}
