//! Independent checks: invariance-residual order test and full-system time integration.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cohomology::ManifoldExpansion;
use crate::error::{Result, SsmError};
use crate::linalg::vec_norm;
use crate::model::FirstOrderSystem;
use crate::ode::{dopri5, trapezoidal, OdeOptions};
use crate::spectrum::all_eigenvalues;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Strictly decreasing sample radii.
    pub radii: Vec<f64>,
    /// Largest residual norm over the directions at each radius.
    pub residuals: Vec<f64>,
    /// Rounding level of the residual evaluation at each radius.
    pub noise_floor: Vec<f64>,
    pub slope: f64,
    pub band: [f64; 2],
    pub pass: bool,
}

/// Random reduced coordinate of norm `radius` respecting the conjugate pairing.
pub fn random_conjugate_point(manifold: &ManifoldExpansion, radius: f64, rng: &mut impl Rng) -> Vec<Complex64> {
    let m = manifold.dim();
    let free: Vec<Complex64> = (0..m).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let p = manifold.master.conjugate_symmetric(&free);
    let n = vec_norm(&p);
    p.iter().map(|z| z * (radius / n)).collect()
}

/// Evaluates the invariance residual on shells of the given radii and fits the
/// log-log slope; passes when the slope lies in `[order + 0.5, order + 1.5]`.
pub fn invariance_residual(
    sys: &FirstOrderSystem,
    manifold: &ManifoldExpansion,
    radii: &[f64],
    directions: usize,
    seed: u64,
) -> Result<ResidualReport> {
    if radii.len() < 2 || directions == 0 {
        return Err(SsmError::Validation("need at least two radii and one direction".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r <= 0.1)) {
        return Err(SsmError::Validation("radii must lie in (0, 0.1]".into()));
    }
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if rs.windows(2).any(|w| w[0] == w[1]) {
        return Err(SsmError::Validation("radii must be distinct".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a_norm = sys.a.max_abs();
    let b_norm = sys.b.max_abs();
    let mut residuals = Vec::with_capacity(rs.len());
    let mut floors = Vec::with_capacity(rs.len());
    for &r in &rs {
        let mut worst = 0.0f64;
        let mut floor = 0.0f64;
        for _ in 0..directions {
            let p = random_conjugate_point(manifold, r, &mut rng);
            let res = manifold.residual(sys, &p);
            worst = worst.max(vec_norm(&res));
            let w = manifold.eval_w(&p);
            let dwr = manifold.dw_apply(&p, &manifold.eval_r(&p));
            let fw = sys.eval_nonlinearity_complex(&w);
            let scale = (a_norm * vec_norm(&w) + b_norm * vec_norm(&dwr) + vec_norm(&fw)) * (sys.n as f64).sqrt();
            floor = floor.max(f64::EPSILON * scale);
        }
        residuals.push(worst);
        floors.push(floor);
    }
    let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.max(f64::MIN_POSITIVE).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let g = manifold.order as f64;
    let band = [g + 0.5, g + 1.5];
    Ok(ResidualReport {
        radii: rs,
        residuals,
        noise_floor: floors,
        slope,
        band,
        pass: slope.is_finite() && slope >= band[0] && slope <= band[1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scheme {
    AdaptiveExplicit,
    /// Fixed step `h`.
    ImplicitTrapezoidal { h: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub z: Vec<Vec<f64>>,
}

/// Ratio of largest to smallest nonzero eigenvalue modulus of the pencil.
pub fn stiffness_ratio(sys: &FirstOrderSystem) -> Result<f64> {
    let ev = all_eigenvalues(sys)?;
    let scale = ev.iter().fold(0.0f64, |m, l| m.max(l.norm()));
    let min = ev.iter().map(|l| l.norm()).filter(|&x| x > 1e-12 * scale).fold(f64::INFINITY, f64::min);
    Ok(if min.is_finite() { scale / min } else { 1.0 })
}

/// Integrates `B z' = A z + F(z) + eps F_ext(Omega t)` (forcing when `omega` is given)
/// and samples the state at `t_out`.
pub fn integrate_full(
    sys: &FirstOrderSystem,
    z0: &[f64],
    omega: Option<f64>,
    t0: f64,
    t_out: &[f64],
    scheme: Scheme,
    opts: &OdeOptions,
) -> Result<Trajectory> {
    if z0.len() != sys.n {
        return Err(SsmError::Validation(format!("initial state has length {}, expected {}", z0.len(), sys.n)));
    }
    if matches!(scheme, Scheme::AdaptiveExplicit) && sys.n <= 2000 {
        let ratio = stiffness_ratio(sys)?;
        if ratio > 1e4 {
            return Err(SsmError::Validation(format!(
                "stiffness ratio {ratio:.3e} exceeds 1e4; use the implicit trapezoidal scheme"
            )));
        }
    }
    let binv_lu = sys.b.to_dense().lu();
    let eps = sys.epsilon;
    let rhs = |t: f64, z: &[f64], d: &mut [f64]| {
        let mut v = sys.a.mul_vec(z);
        for f in &sys.nonlinearity {
            f.eval_real_into(z, &mut v);
        }
        if let Some(w) = omega {
            for (vi, fi) in v.iter_mut().zip(sys.forcing_at(&[w * t])) {
                *vi += eps * fi;
            }
        }
        let sol = binv_lu.solve(&nalgebra::DVector::from_vec(v)).expect("B is nonsingular");
        d.copy_from_slice(sol.as_slice());
    };
    let z = match scheme {
        Scheme::AdaptiveExplicit => dopri5(rhs, t0, z0, t_out, opts)?,
        Scheme::ImplicitTrapezoidal { h } => {
            let jac = |_: f64, z: &[f64]| -> DMatrix<f64> { binv_lu.solve(&sys.jacobian(z)).expect("B is nonsingular") };
            trapezoidal(rhs, jac, t0, z0, h, t_out)?
        }
    };
    Ok(Trajectory { t: t_out.to_vec(), z })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateOptions {
    pub transient_periods: usize,
    pub measure_periods: usize,
    pub max_periods: usize,
    pub samples_per_period: usize,
    /// Relative change between successive windows accepted as converged.
    pub rel_tol: f64,
    pub ode: OdeTolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeTolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            transient_periods: 300,
            measure_periods: 5,
            max_periods: 3000,
            samples_per_period: 256,
            rel_tol: 5e-3,
            ode: OdeTolerances { rtol: 1e-9, atol: 1e-12 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub amplitude: f64,
    pub periods: usize,
    pub final_state: Vec<f64>,
}

/// Peak of `|x|` over uniformly sampled data refined by a parabola through the largest sample.
fn sampled_peak(x: &[f64]) -> f64 {
    let (k, _) = x.iter().enumerate().fold((0, -1.0), |a, (i, v)| if v.abs() > a.1 { (i, v.abs()) } else { a });
    let m = x[k].abs();
    if k == 0 || k + 1 == x.len() {
        return m;
    }
    let (l, r) = (x[k - 1].abs(), x[k + 1].abs());
    let den = l - 2.0 * m + r;
    if den >= 0.0 {
        return m;
    }
    let off = 0.5 * (l - r) / den;
    m - 0.25 * (l - r) * off
}

/// Post-transient amplitude `max |z_dof|` of the forced response started from `z0`.
pub fn steady_state_amplitude(sys: &FirstOrderSystem, omega: f64, dof: usize, z0: Option<&[f64]>, opts: &SteadyStateOptions) -> Result<SteadyState> {
    if !(omega > 0.0) {
        return Err(SsmError::Validation("forcing frequency must be positive".into()));
    }
    if dof >= sys.n {
        return Err(SsmError::Validation(format!("dof {dof} outside 0..{}", sys.n)));
    }
    let period = std::f64::consts::TAU / omega;
    let ode = OdeOptions { rtol: opts.ode.rtol, atol: opts.ode.atol, ..OdeOptions::default() };
    let mut z = z0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; sys.n]);
    let mut t = 0.0;
    if opts.transient_periods > 0 {
        let t1 = opts.transient_periods as f64 * period;
        z = integrate_full(sys, &z, Some(omega), t, &[t1], Scheme::AdaptiveExplicit, &ode)?.z.pop().unwrap();
        t = t1;
    }
    let mut periods = opts.transient_periods;
    let mut prev: Option<f64> = None;
    let per_window = opts.measure_periods.max(1) * opts.samples_per_period;
    while periods < opts.max_periods {
        let dt = period / opts.samples_per_period as f64;
        let ts: Vec<f64> = (1..=per_window).map(|k| t + k as f64 * dt).collect();
        let traj = integrate_full(sys, &z, Some(omega), t, &ts, Scheme::AdaptiveExplicit, &ode)?;
        let series: Vec<f64> = traj.z.iter().map(|s| s[dof]).collect();
        let amp = sampled_peak(&series);
        z = traj.z.last().unwrap().clone();
        t = *ts.last().unwrap();
        periods += opts.measure_periods.max(1);
        if let Some(p) = prev {
            if (amp - p).abs() <= opts.rel_tol * amp.max(1e-300) {
                return Ok(SteadyState { amplitude: amp, periods, final_state: z });
            }
        }
        prev = Some(amp);
    }
    Err(SsmError::Numerical(format!(
        "no steady state within {} periods at Omega = {omega} (quasiperiodic or unstable response?)",
        opts.max_periods
    )))
}
