//! Real polynomial helpers; coefficients are stored lowest degree first.

use nalgebra::DMatrix;

pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect()
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn trim(c: &[f64]) -> &[f64] {
    let mut d = c.len();
    while d > 0 && c[d - 1] == 0.0 {
        d -= 1;
    }
    &c[..d]
}

/// Positive real roots of `c`. Candidates come from the eigenvalues of the
/// companion matrix of the rescaled polynomial and are polished by Newton
/// steps, falling back to bisection on a sign-change bracket.
pub fn positive_roots(c: &[f64]) -> Vec<f64> {
    let c = trim(c);
    if c.len() < 2 {
        return vec![];
    }
    let deg = c.len() - 1;
    let lead = c[deg];
    let mut sigma = 1.0;
    // Rescale x = sigma y to balance the constant and leading coefficients.
    if deg > 1 {
        // between the constant and leading coefficients.
        let c0 = c[0].abs();
        if c0 > 0.0 {
            sigma = (c0 / lead.abs()).powf(1.0 / deg as f64);
        }
    }
    let scaled: Vec<f64> = c.iter().enumerate().map(|(k, a)| a * sigma.powi(k as i32)).collect();
    let sl = scaled[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for k in 0..deg {
        comp[(0, k)] = -scaled[deg - 1 - k] / sl;
        if k + 1 < deg {
            comp[(k + 1, k)] = 1.0;
        }
    }
    let eig = comp.complex_eigenvalues();
    let mut roots: Vec<f64> = Vec::new();
    let dc = derivative(c);
    let scale_at = |x: f64| c.iter().enumerate().map(|(k, a)| (a * x.powi(k as i32)).abs()).sum::<f64>();
    for z in eig.iter() {
        let y = z.re;
        if y <= 0.0 || z.im.abs() > 1e-6 * z.norm() {
            continue;
        }
        let x0 = y * sigma;
        if let Some(x) = polish(c, &dc, x0, &scale_at) {
            if x > 0.0 && !roots.iter().any(|r| (r - x).abs() <= 1e-10 * x.max(*r)) {
                roots.push(x);
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

fn polish(c: &[f64], dc: &[f64], x0: f64, scale_at: &dyn Fn(f64) -> f64) -> Option<f64> {
    let mut x = x0;
    for _ in 0..60 {
        let p = eval(c, x);
        let d = eval(dc, x);
        if d == 0.0 {
            break;
        }
        let step = p / d;
        x -= step;
        if step.abs() <= 1e-15 * x.abs() {
            break;
        }
    }
    let ok = |x: f64| x.is_finite() && eval(c, x).abs() <= 1e-12 * scale_at(x);
    if ok(x) && (x - x0).abs() <= 1e-3 * x0.abs() {
        return Some(x);
    }
    // Bisection on a bracket around the candidate.
    for width in [1e-8, 1e-6, 1e-4, 1e-2] {
        let (mut lo, mut hi) = (x0 * (1.0 - width), x0 * (1.0 + width));
        let (mut flo, fhi) = (eval(c, lo), eval(c, hi));
        if flo == 0.0 {
            return Some(lo);
        }
        if fhi == 0.0 {
            return Some(hi);
        }
        if flo.signum() != fhi.signum() {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = eval(c, mid);
                if fm == 0.0 || hi - lo <= 1e-16 * mid {
                    return Some(mid);
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_with_three_positive_roots() {
        // (x-1)(x-2)(x-3)
        let c = [-6.0, 11.0, -6.0, 1.0];
        let r = positive_roots(&c);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn widely_scaled_coefficients() {
        // (x - 1e-4)(x^2 + 1e-6) scaled
        let c = mul(&[-1e-4, 1.0], &[1e-6, 0.0, 1.0]);
        let r = positive_roots(&c);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1e-4).abs() < 1e-16);
    }

    #[test]
    fn linear() {
        assert_eq!(positive_roots(&[-2.0, 4.0]), vec![0.5]);
        assert!(positive_roots(&[2.0, 4.0]).is_empty());
    }
}
