//! Subcommand bodies. Each reads a resolved `RunConfig` and writes artifacts into `output.dir`.

use std::path::{Path, PathBuf};

use serde::Serialize;
use ssm_core::analysis::{backbone_curve, extract_polar_rom, frc_sweep, FrcConfig};
use ssm_core::cohomology::{compute_manifold, ManifoldExpansion, ResonanceReport};
use ssm_core::model::io::{load_manifest, write_first_order, write_mechanical, LoadedModel};
use ssm_core::model::{build_first_order, default_variant, duffing, lorenz_extended, oscillator_chain, FirstOrderSystem, MechanicalSystem};
use ssm_core::spectrum::master_spectrum;
use ssm_core::verify::{invariance_residual, ResidualReport};
use ssm_core::{Result, SsmError};

use crate::config::{Builtin, RunConfig};
use crate::output::{write_csv, write_json, write_svg, Cell};

/// Outcome of a subcommand that ran to completion.
pub enum Outcome {
    Ok,
    /// Completed, but the check it performs did not pass.
    CheckFailed(String),
}

fn stem(cfg: &RunConfig) -> &'static str {
    if cfg.model.manifest.is_some() {
        return "model";
    }
    match cfg.model.builtin {
        Builtin::Chain => "chain",
        Builtin::Duffing => "duffing",
        Builtin::Lorenz => "lorenz",
    }
}

fn load(cfg: &RunConfig) -> Result<LoadedModel> {
    let m = &cfg.model;
    let mut loaded = if let Some(path) = &m.manifest {
        load_manifest(path)?
    } else {
        let mech: MechanicalSystem = match m.builtin {
            Builtin::Chain => oscillator_chain(m.n, m.mass, m.stiffness, m.damping, m.kappa)?,
            Builtin::Duffing => duffing(m.mass, m.damping, m.stiffness, m.kappa)?,
            Builtin::Lorenz => {
                if cfg.forcing.shape.is_some() {
                    return Err(SsmError::Validation("the lorenz model takes no forcing shape".into()));
                }
                return Ok(LoadedModel::FirstOrder(lorenz_extended(m.sigma, m.beta)?));
            }
        };
        let mech = match &cfg.forcing.shape {
            Some(shape) => {
                let eps = cfg
                    .forcing
                    .epsilon
                    .ok_or_else(|| SsmError::Validation("forcing.shape requires forcing.epsilon".into()))?;
                if shape.len() != mech.n {
                    return Err(SsmError::Validation(format!("forcing.shape has {} entries, expected {}", shape.len(), mech.n)));
                }
                mech.with_cosine_forcing(shape, eps)
            }
            None => mech,
        };
        let (v, n) = default_variant(&mech);
        LoadedModel::Mechanical { system: mech, variant: v, n_choice: n }
    };
    if let LoadedModel::Mechanical { variant, n_choice, .. } = &mut loaded {
        *variant = m.variant.unwrap_or(*variant);
        *n_choice = m.n_choice.unwrap_or(*n_choice);
    }
    if let Some(eps) = cfg.forcing.epsilon {
        match &mut loaded {
            LoadedModel::Mechanical { system, .. } => system.epsilon = eps,
            LoadedModel::FirstOrder(s) => s.epsilon = eps,
        }
    }
    Ok(loaded)
}

fn system(cfg: &RunConfig) -> Result<FirstOrderSystem> {
    load(cfg)?.first_order()
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    let dir = cfg.output.dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| SsmError::Io { path: dir.display().to_string(), source: e })?;
    Ok(dir)
}

/// 0-based state indices of the requested output DOFs.
fn state_dofs(cfg: &RunConfig, sys: &FirstOrderSystem) -> Result<Vec<usize>> {
    let dofs: Vec<usize> = cfg.output.dofs.iter().map(|d| d - 1).collect();
    if let Some(d) = dofs.iter().find(|&&d| d >= sys.n) {
        return Err(SsmError::Validation(format!("output DOF {} exceeds the state dimension {}", d + 1, sys.n)));
    }
    Ok(dofs)
}

fn manifold(cfg: &RunConfig, sys: &FirstOrderSystem) -> Result<ManifoldExpansion> {
    let (ms, outer) = master_spectrum(sys, &cfg.master.selection()?, &cfg.master.options())?;
    compute_manifold(sys, &ms, &outer, cfg.order, &cfg.style.style(), &cfg.tolerances.tolerances())
}

fn amp_header(cfg: &RunConfig) -> impl Iterator<Item = String> + '_ {
    cfg.output.dofs.iter().map(|d| format!("amp_dof_{d}"))
}

pub fn model(cfg: &RunConfig) -> Result<Outcome> {
    let dir = out_dir(cfg)?;
    let path = match load(cfg)? {
        LoadedModel::Mechanical { system, variant, n_choice } => {
            build_first_order(&system, variant, n_choice)?;
            write_mechanical(dir, stem(cfg), &system, variant, n_choice)?
        }
        LoadedModel::FirstOrder(sys) => write_first_order(dir, stem(cfg), &sys)?,
    };
    println!("{}", path.display());
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct ResonanceFile<'a> {
    reports: Vec<ResonanceReport>,
    warnings: &'a [String],
}

pub fn ssm(cfg: &RunConfig) -> Result<Outcome> {
    let sys = system(cfg)?;
    let m = manifold(cfg, &sys)?;
    let dir = out_dir(cfg)?;
    write_json(&dir.join("ssm.json"), &m.document())?;
    write_json(&dir.join("resonances.json"), &ResonanceFile { reports: m.reports.iter().map(ResonanceReport::one_based).collect(), warnings: &m.warnings })?;
    for w in &m.warnings {
        eprintln!("warning: {w}");
    }
    Ok(Outcome::Ok)
}

pub fn frc(cfg: &RunConfig) -> Result<Outcome> {
    let f = &cfg.forcing;
    let (Some(omega_min), Some(omega_max)) = (f.omega_min, f.omega_max) else {
        return Err(SsmError::Validation("forcing.omega_min and forcing.omega_max are required".into()));
    };
    if !(omega_min > 0.0 && omega_max >= omega_min) || f.samples == 0 {
        return Err(SsmError::Validation("forcing range must satisfy 0 < omega_min <= omega_max with samples >= 1".into()));
    }
    let sys = system(cfg)?;
    let dofs = state_dofs(cfg, &sys)?;
    let m = manifold(cfg, &sys)?;
    let config = FrcConfig {
        omega_min,
        omega_max,
        samples: f.samples,
        extra_omegas: vec![],
        eta: f.eta,
        eta_max: f.eta_max,
        output_dofs: dofs,
        phase_samples: f.phase_samples,
    };
    let res = frc_sweep(&sys, &m, &config)?;
    let dir = out_dir(cfg)?;
    let header: Vec<String> = ["Omega", "rho", "psi", "stable"].into_iter().map(String::from).chain(amp_header(cfg)).collect();
    let rows: Vec<Vec<Cell>> = res
        .points
        .iter()
        .map(|p| {
            let mut r = vec![Cell::Num(p.omega), Cell::Num(p.rho), Cell::Num(p.psi), Cell::Bool(p.stable)];
            r.extend(p.amplitudes.iter().map(|&a| Cell::Num(a)));
            r
        })
        .collect();
    write_csv(&dir.join("frc.csv"), &header, &rows)?;
    write_json(&dir.join("frc.json"), &res)?;
    if cfg.output.svg {
        for (k, d) in cfg.output.dofs.iter().enumerate() {
            let pts: Vec<(f64, f64, bool)> = res.points.iter().map(|p| (p.omega, p.amplitudes[k], p.stable)).collect();
            let path: PathBuf = dir.join(format!("frc_dof_{d}.svg"));
            write_svg(&path, &format!("Forced response, DOF {d}"), "Omega", "amplitude", &pts)?;
        }
    }
    for w in res.warnings.iter().chain(&m.warnings) {
        eprintln!("warning: {w}");
    }
    Ok(Outcome::Ok)
}

pub fn backbone(cfg: &RunConfig) -> Result<Outcome> {
    let b = &cfg.backbone;
    if !(b.rho_max > 0.0) || b.samples == 0 {
        return Err(SsmError::Validation("backbone needs rho_max > 0 and samples >= 1".into()));
    }
    let sys = system(cfg)?;
    let dofs = state_dofs(cfg, &sys)?;
    let m = manifold(cfg, &sys)?;
    let rom = extract_polar_rom(&m, None, 1)?;
    let grid: Vec<f64> = (1..=b.samples).map(|k| b.rho_max * k as f64 / b.samples as f64).collect();
    let curve = backbone_curve(&rom, &m, &grid, &dofs)?;
    let dir = out_dir(cfg)?;
    let header: Vec<String> = ["rho", "Omega"].into_iter().map(String::from).chain(amp_header(cfg)).collect();
    let rows: Vec<Vec<Cell>> = curve
        .iter()
        .map(|p| {
            let mut r = vec![Cell::Num(p.rho), Cell::Num(p.omega)];
            r.extend(p.amplitudes.iter().map(|&a| Cell::Num(a)));
            r
        })
        .collect();
    write_csv(&dir.join("backbone.csv"), &header, &rows)?;
    write_json(&dir.join("backbone.json"), &curve)?;
    if cfg.output.svg {
        for (k, d) in cfg.output.dofs.iter().enumerate() {
            let pts: Vec<(f64, f64, bool)> = curve.iter().map(|p| (p.omega, p.amplitudes[k], true)).collect();
            write_svg(&dir.join(format!("backbone_dof_{d}.svg")), &format!("Backbone, DOF {d}"), "Omega", "amplitude", &pts)?;
        }
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct VerifyFile<'a> {
    order: usize,
    directions: usize,
    seed: u64,
    #[serde(flatten)]
    report: &'a ResidualReport,
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let sys = system(cfg)?;
    let m = manifold(cfg, &sys)?;
    let v = &cfg.verify;
    let report = invariance_residual(&sys, &m, &v.radii, v.directions, v.seed)?;
    let dir = out_dir(cfg)?;
    write_json(&dir.join("verify.json"), &VerifyFile { order: cfg.order, directions: v.directions, seed: v.seed, report: &report })?;
    let summary = format!(
        "residual slope {:.3} (expected band [{:.1}, {:.1}])",
        report.slope, report.band[0], report.band[1]
    );
    if report.pass {
        println!("PASS: {summary}");
        Ok(Outcome::Ok)
    } else {
        Ok(Outcome::CheckFailed(summary))
    }
}
