//! Mechanical and first-order system definitions.

mod builtin;
pub mod io;

pub use builtin::{duffing, lorenz_extended, oscillator_chain};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result, SsmError};
use crate::polytensor::PolyCoeffs;
use crate::sparse::SparseMatrix;

/// One Fourier term `f_kappa e^{i <kappa, phi>}` of the external forcing.
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonic {
    pub kappa: Vec<i32>,
    pub vector: Vec<Complex64>,
}

impl Harmonic {
    pub fn new(kappa: Vec<i32>, vector: Vec<Complex64>) -> Self {
        Self { kappa, vector }
    }
}

/// Checks that forcing harmonics come in conjugate pairs so the physical force is real.
pub(crate) fn check_conjugate_closure(forcing: &[Harmonic], dim: usize) -> Result<()> {
    let k = forcing.first().map(|h| h.kappa.len()).unwrap_or(0);
    for h in forcing {
        if h.vector.len() != dim {
            return validation(format!(
                "forcing harmonic {:?} has length {}, expected {dim}",
                h.kappa,
                h.vector.len()
            ));
        }
        if h.kappa.len() != k || k == 0 {
            return validation("forcing harmonics must share a nonempty frequency dimension");
        }
        let neg: Vec<i32> = h.kappa.iter().map(|x| -x).collect();
        let partner = forcing
            .iter()
            .find(|g| g.kappa == neg)
            .ok_or_else(|| SsmError::Validation(format!("forcing harmonic {:?} has no conjugate partner", h.kappa)))?;
        let scale = h.vector.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1e-300);
        let bad = h
            .vector
            .iter()
            .zip(&partner.vector)
            .any(|(a, b)| (a.conj() - b).norm() > 1e-12 * scale);
        if bad {
            return validation(format!(
                "forcing harmonics {:?} and {:?} are not complex conjugates",
                h.kappa, neg
            ));
        }
    }
    let mut keys: Vec<&Vec<i32>> = forcing.iter().map(|h| &h.kappa).collect();
    keys.sort();
    keys.dedup();
    if keys.len() != forcing.len() {
        return validation("duplicate forcing harmonic");
    }
    Ok(())
}

/// `M x'' + C x' + K x + f(x) = eps * sum_kappa f_kappa e^{i kappa Omega t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalSystem {
    pub n: usize,
    pub mass: SparseMatrix,
    pub damping: SparseMatrix,
    pub stiffness: SparseMatrix,
    /// Nonlinear force coefficients of degree >= 2 over the n displacements.
    pub nonlinearity: Vec<PolyCoeffs>,
    pub forcing: Vec<Harmonic>,
    pub epsilon: f64,
}

impl MechanicalSystem {
    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("mass", &self.mass), ("damping", &self.damping), ("stiffness", &self.stiffness)] {
            if m.nrows() != self.n || m.ncols() != self.n {
                return validation(format!(
                    "{name} matrix is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    self.n,
                    self.n
                ));
            }
        }
        for f in &self.nonlinearity {
            if f.rows() != self.n || f.vars() != self.n || f.degree() < 2 {
                return validation("nonlinearity coefficients must be n x n^k with k >= 2");
            }
        }
        if !self.forcing.is_empty() {
            check_conjugate_closure(&self.forcing, self.n)?;
        }
        if !self.epsilon.is_finite() {
            return validation("epsilon must be finite");
        }
        Ok(())
    }

    /// Nonlinear force `f(x)` for real displacements.
    pub fn eval_force(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for f in &self.nonlinearity {
            f.eval_real_into(x, &mut out);
        }
        out
    }

    /// Attaches `eps * f0 cos(Omega t)` as the harmonic pair `+-1` with amplitude `f0 / 2`.
    pub fn with_cosine_forcing(mut self, f0: &[f64], epsilon: f64) -> Self {
        let half: Vec<Complex64> = f0.iter().map(|v| Complex64::new(0.5 * v, 0.0)).collect();
        self.forcing = vec![Harmonic::new(vec![1], half.clone()), Harmonic::new(vec![-1], half)];
        self.epsilon = epsilon;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NChoice {
    MinusK,
    MassM,
    Identity,
}

/// `B z' = A z + F(z) + eps * sum_kappa F_kappa e^{i <kappa, phi>}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderSystem {
    pub n: usize,
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    /// Nonlinearity coefficients of degree >= 2 over the N states.
    pub nonlinearity: Vec<PolyCoeffs>,
    pub forcing: Vec<Harmonic>,
    pub epsilon: f64,
    pub symmetric: bool,
}

impl FirstOrderSystem {
    /// Validates and assembles a system; `symmetric` is set when A and B are symmetric.
    pub fn new(
        a: SparseMatrix,
        b: SparseMatrix,
        nonlinearity: Vec<PolyCoeffs>,
        forcing: Vec<Harmonic>,
        epsilon: f64,
    ) -> Result<Self> {
        let symmetric = a.is_symmetric(1e-12) && b.is_symmetric(1e-12);
        let sys = Self { n: a.nrows(), a, b, nonlinearity, forcing, epsilon, symmetric };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.a.nrows() != n || self.a.ncols() != n || self.b.nrows() != n || self.b.ncols() != n {
            return validation("A and B must be square with equal dimension");
        }
        for f in &self.nonlinearity {
            if f.rows() != n || f.vars() != n || f.degree() < 2 {
                return validation("nonlinearity coefficients must be N x N^k with k >= 2");
            }
        }
        if !self.forcing.is_empty() {
            check_conjugate_closure(&self.forcing, n)?;
        }
        if self.symmetric && !(self.a.is_symmetric(1e-12) && self.b.is_symmetric(1e-12)) {
            return validation("symmetric flag set but A or B is not symmetric");
        }
        if !self.b.to_dense().lu().is_invertible() {
            return validation("B is singular");
        }
        Ok(())
    }

    pub fn max_degree(&self) -> usize {
        self.nonlinearity.iter().map(|f| f.degree()).max().unwrap_or(1)
    }

    /// Nonlinearity `F(z)` for a real state.
    pub fn eval_nonlinearity(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for f in &self.nonlinearity {
            f.eval_real_into(z, &mut out);
        }
        out
    }

    pub fn eval_nonlinearity_complex(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n];
        for f in &self.nonlinearity {
            for (o, v) in out.iter_mut().zip(f.eval(z)) {
                *o += v;
            }
        }
        out
    }

    /// Jacobian of `A z + F(z)` at a real state.
    pub fn jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        let mut j = self.a.to_dense();
        for f in &self.nonlinearity {
            f.jacobian_real_into(z, &mut j);
        }
        j
    }

    /// Real external forcing `sum_kappa F_kappa e^{i <kappa, phi>}` (without eps).
    pub fn forcing_at(&self, phi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for h in &self.forcing {
            let arg: f64 = h.kappa.iter().zip(phi).map(|(&k, &p)| k as f64 * p).sum();
            let e = Complex64::from_polar(1.0, arg);
            for (o, v) in out.iter_mut().zip(&h.vector) {
                *o += (v * e).re;
            }
        }
        out
    }
}

/// Assembles the first-order form of a mechanical system.
pub fn build_first_order(mech: &MechanicalSystem, variant: Variant, n_choice: NChoice) -> Result<FirstOrderSystem> {
    mech.validate()?;
    let n = mech.n;
    let nb = match n_choice {
        NChoice::MinusK => mech.stiffness.scale(-1.0),
        NChoice::MassM => mech.mass.clone(),
        NChoice::Identity => SparseMatrix::identity(n),
    };
    if !nb.to_dense().lu().is_invertible() {
        return Err(SsmError::Validation(format!("chosen N-block ({n_choice:?}) is singular")));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    let (f_offset, forcing_offset) = match variant {
        Variant::L1 => {
            nb.push_block(&mut b, 0, 0, 1.0);
            mech.mass.push_block(&mut b, n, n, 1.0);
            nb.push_block(&mut a, 0, n, 1.0);
            mech.stiffness.push_block(&mut a, n, 0, -1.0);
            mech.damping.push_block(&mut a, n, n, -1.0);
            (n, n)
        }
        Variant::L2 => {
            mech.damping.push_block(&mut b, 0, 0, 1.0);
            mech.mass.push_block(&mut b, 0, n, 1.0);
            nb.push_block(&mut b, n, 0, 1.0);
            mech.stiffness.push_block(&mut a, 0, 0, -1.0);
            nb.push_block(&mut a, n, n, 1.0);
            (0, 0)
        }
    };
    let var_map: Vec<usize> = (0..n).collect();
    let nonlinearity = mech
        .nonlinearity
        .iter()
        .map(|f| f.embed(2 * n, 2 * n, f_offset, &var_map, -1.0))
        .collect::<Result<Vec<_>>>()?;
    let forcing = mech
        .forcing
        .iter()
        .map(|h| {
            let mut v = vec![Complex64::new(0.0, 0.0); 2 * n];
            v[forcing_offset..forcing_offset + n].copy_from_slice(&h.vector);
            Harmonic::new(h.kappa.clone(), v)
        })
        .collect();
    let mck_symmetric = mech.mass.is_symmetric(1e-12)
        && mech.damping.is_symmetric(1e-12)
        && mech.stiffness.is_symmetric(1e-12);
    let symmetric = mck_symmetric
        && matches!((variant, n_choice), (Variant::L1, NChoice::MinusK) | (Variant::L2, NChoice::MassM));
    let sys = FirstOrderSystem {
        n: 2 * n,
        a: SparseMatrix::from_triplets(2 * n, 2 * n, &a)?,
        b: SparseMatrix::from_triplets(2 * n, 2 * n, &b)?,
        nonlinearity,
        forcing,
        epsilon: mech.epsilon,
        symmetric,
    };
    sys.validate()?;
    Ok(sys)
}

/// Default conversion: L2 with N = M for symmetric input, L1 with N = I otherwise.
pub fn default_variant(mech: &MechanicalSystem) -> (Variant, NChoice) {
    let sym = mech.mass.is_symmetric(1e-12) && mech.damping.is_symmetric(1e-12) && mech.stiffness.is_symmetric(1e-12);
    if sym {
        (Variant::L2, NChoice::MassM)
    } else {
        (Variant::L1, NChoice::Identity)
    }
}
