use crate::error::{validation, Result};
use crate::polytensor::PolyCoeffs;
use crate::sparse::SparseMatrix;

use super::{FirstOrderSystem, MechanicalSystem};

/// Adds `s * (x_a - x_b)^3` to `row`; `b = None` means `x_b = 0`.
fn add_cube_of_difference(f: &mut PolyCoeffs, row: usize, a: usize, b: Option<usize>, s: f64) -> Result<()> {
    f.add_real(row, &[a, a, a], s)?;
    if let Some(b) = b {
        f.add_real(row, &[a, a, b], -3.0 * s)?;
        f.add_real(row, &[a, b, b], 3.0 * s)?;
        f.add_real(row, &[b, b, b], -s)?;
    }
    Ok(())
}

/// Chain of `n` masses between two walls with linear and cubic springs:
/// row `i` of the cubic force is `kappa ((x_i - x_{i-1})^3 - (x_{i+1} - x_i)^3)`
/// with `x_0 = x_{n+1} = 0`.
pub fn oscillator_chain(n: usize, m: f64, k: f64, c: f64, kappa: f64) -> Result<MechanicalSystem> {
    if n < 1 {
        return validation("chain needs n >= 1");
    }
    if !(m > 0.0 && k > 0.0 && c >= 0.0 && kappa >= 0.0) {
        return validation("chain needs m, k > 0 and c, kappa >= 0");
    }
    let mut lap = Vec::new();
    for i in 0..n {
        lap.push((i, i, 2.0));
        if i + 1 < n {
            lap.push((i, i + 1, -1.0));
            lap.push((i + 1, i, -1.0));
        }
    }
    let l = SparseMatrix::from_triplets(n, n, &lap)?;
    let mut f3 = PolyCoeffs::new(3, n, n)?;
    if kappa != 0.0 {
        for i in 0..n {
            // (x_i - x_{i-1})^3
            add_cube_of_difference(&mut f3, i, i, i.checked_sub(1), kappa)?;
            // -(x_{i+1} - x_i)^3 = (x_i - x_{i+1})^3
            add_cube_of_difference(&mut f3, i, i, (i + 1 < n).then_some(i + 1), kappa)?;
        }
    }
    Ok(MechanicalSystem {
        n,
        mass: SparseMatrix::identity(n).scale(m),
        damping: l.scale(c),
        stiffness: l.scale(k),
        nonlinearity: if f3.nnz() > 0 { vec![f3] } else { vec![] },
        forcing: vec![],
        epsilon: 0.0,
    })
}

/// Single oscillator `m x'' + c x' + k x + kappa x^3 = 0`.
pub fn duffing(m: f64, c: f64, k: f64, kappa: f64) -> Result<MechanicalSystem> {
    if !(m > 0.0 && k > 0.0 && c >= 0.0) {
        return validation("duffing needs m, k > 0 and c >= 0");
    }
    let mut f3 = PolyCoeffs::new(3, 1, 1)?;
    f3.add_real(0, &[0, 0, 0], kappa)?;
    Ok(MechanicalSystem {
        n: 1,
        mass: SparseMatrix::identity(1).scale(m),
        damping: SparseMatrix::identity(1).scale(c),
        stiffness: SparseMatrix::identity(1).scale(k),
        nonlinearity: if kappa != 0.0 { vec![f3] } else { vec![] },
        forcing: vec![],
        epsilon: 0.0,
    })
}

/// Lorenz system extended by the parameter `mu = rho - 1` as a fourth state:
/// `x' = sigma (y - x)`, `y' = x - y + x mu - x z`, `z' = -beta z + x y`, `mu' = 0`.
pub fn lorenz_extended(sigma: f64, beta: f64) -> Result<FirstOrderSystem> {
    if !(sigma > 0.0 && beta > 0.0) {
        return validation("lorenz needs sigma, beta > 0");
    }
    let a = SparseMatrix::from_triplets(
        4,
        4,
        &[(0, 0, -sigma), (0, 1, sigma), (1, 0, 1.0), (1, 1, -1.0), (2, 2, -beta)],
    )?;
    let mut f2 = PolyCoeffs::new(2, 4, 4)?;
    f2.add_real(1, &[0, 3], 1.0)?;
    f2.add_real(1, &[0, 2], -1.0)?;
    f2.add_real(2, &[0, 1], 1.0)?;
    FirstOrderSystem::new(a, SparseMatrix::identity(4), vec![f2], vec![], 0.0)
}
