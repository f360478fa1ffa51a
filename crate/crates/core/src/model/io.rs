//! File ingestion: Matrix Market matrices, sparse tensor files and JSON manifests.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsmError};
use crate::polytensor::PolyCoeffs;
use crate::sparse::SparseMatrix;

use super::{build_first_order, default_variant, FirstOrderSystem, Harmonic, MechanicalSystem, NChoice, Variant};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| SsmError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| SsmError::Io { path: path.display().to_string(), source })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> SsmError {
    SsmError::Parse { path: path.display().to_string(), line, msg: msg.into() }
}

/// Reads a real Matrix Market coordinate file (general or symmetric).
pub fn read_matrix_market(path: &Path) -> Result<SparseMatrix> {
    let text = read(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let h: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(parse_err(path, 1, "expected '%%MatrixMarket matrix coordinate real <symmetry>' header"));
    }
    if h[2] != "coordinate" {
        return Err(parse_err(path, 1, format!("unsupported format '{}'", h[2])));
    }
    if h[3] != "real" && h[3] != "integer" {
        return Err(parse_err(path, 1, format!("unsupported field '{}'", h[3])));
    }
    let symmetric = match h[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(path, 1, format!("unsupported symmetry '{other}'"))),
    };
    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let cols: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if cols.len() != 3 {
                    return Err(parse_err(path, lineno, "size line must be 'rows cols nnz'"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| parse_err(path, lineno, format!("bad integer '{s}'")));
                size = Some((p(cols[0])?, p(cols[1])?, p(cols[2])?));
            }
            Some((nr, nc, _)) => {
                if cols.len() != 3 {
                    return Err(parse_err(path, lineno, "entry must be 'row col value'"));
                }
                let r: usize = cols[0].parse().map_err(|_| parse_err(path, lineno, format!("bad row index '{}'", cols[0])))?;
                let c: usize = cols[1].parse().map_err(|_| parse_err(path, lineno, format!("bad column index '{}'", cols[1])))?;
                let v: f64 = cols[2].parse().map_err(|_| parse_err(path, lineno, format!("bad value '{}'", cols[2])))?;
                if r == 0 || c == 0 || r > nr || c > nc {
                    return Err(parse_err(path, lineno, format!("index ({r}, {c}) outside 1..{nr} x 1..{nc}")));
                }
                if !v.is_finite() {
                    return Err(parse_err(path, lineno, "non-finite value"));
                }
                triplets.push((r - 1, c - 1, v));
                if symmetric && r != c {
                    triplets.push((c - 1, r - 1, v));
                }
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    let stored = if symmetric { triplets.iter().filter(|t| t.0 >= t.1).count() } else { triplets.len() };
    if stored != nnz {
        return Err(parse_err(path, 1, format!("header declares {nnz} entries, found {stored}")));
    }
    SparseMatrix::from_triplets(nr, nc, &triplets)
}

pub fn write_matrix_market(path: &Path, m: &SparseMatrix) -> Result<()> {
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    s.push_str(&format!("{} {} {}\n", m.nrows(), m.ncols(), m.nnz()));
    for (r, c, v) in m.triplets() {
        s.push_str(&format!("{} {} {:e}\n", r + 1, c + 1, v));
    }
    write(path, &s)
}

/// Reads a tensor file: one `row i_1 ... i_k value` entry per line, 1-based,
/// degree inferred from the column count. Duplicates are summed.
pub fn read_tensor(path: &Path, rows: usize, vars: usize) -> Result<Vec<PolyCoeffs>> {
    let text = read(path)?;
    let mut by_degree: std::collections::BTreeMap<usize, PolyCoeffs> = Default::default();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let cols: Vec<&str> = t.split_whitespace().collect();
        if cols.len() < 4 {
            return Err(parse_err(path, lineno, "entry needs a row, at least two indices and a value"));
        }
        let degree = cols.len() - 2;
        let mut idxs = Vec::with_capacity(degree + 1);
        for s in &cols[..cols.len() - 1] {
            let v: usize = s.parse().map_err(|_| parse_err(path, lineno, format!("bad index '{s}'")))?;
            idxs.push(v);
        }
        let value: f64 = cols[cols.len() - 1]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad value '{}'", cols[cols.len() - 1])))?;
        if !value.is_finite() {
            return Err(parse_err(path, lineno, "non-finite value"));
        }
        if idxs[0] == 0 || idxs[0] > rows {
            return Err(parse_err(path, lineno, format!("row index {} outside 1..{rows}", idxs[0])));
        }
        if let Some(bad) = idxs[1..].iter().find(|&&i| i == 0 || i > vars) {
            return Err(parse_err(path, lineno, format!("variable index {bad} outside 1..{vars}")));
        }
        let tuple: Vec<usize> = idxs[1..].iter().map(|i| i - 1).collect();
        let entry = match by_degree.entry(degree) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => e.insert(PolyCoeffs::new(degree, rows, vars)?),
        };
        entry.add_real(idxs[0] - 1, &tuple, value)?;
    }
    Ok(by_degree.into_values().collect())
}

pub fn write_tensor(path: &Path, coeffs: &[PolyCoeffs]) -> Result<()> {
    let mut s = String::new();
    for f in coeffs {
        if !f.is_real() {
            return Err(SsmError::Validation("tensor files hold real coefficients only".into()));
        }
        for (r, p, v) in f.iter() {
            s.push_str(&(r + 1).to_string());
            for t in f.index_set().tuple(p) {
                s.push_str(&format!(" {}", t + 1));
            }
            s.push_str(&format!(" {:e}\n", v.re));
        }
    }
    write(path, &s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicEntry {
    pub kappa: Vec<i32>,
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
    /// Polynomial degree of the forcing in the state; only 0 is supported.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub state_degree: u32,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestKind {
    Mechanical,
    FirstOrder,
}

/// JSON manifest naming matrix and tensor files (paths relative to the manifest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub kind: ManifestKind,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stiffness: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(default)]
    pub nonlinearity: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_choice: Option<NChoice>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub forcing: Vec<HarmonicEntry>,
}

/// A loaded model before or after first-order conversion.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Mechanical { system: MechanicalSystem, variant: Variant, n_choice: NChoice },
    FirstOrder(FirstOrderSystem),
}

impl LoadedModel {
    pub fn first_order(&self) -> Result<FirstOrderSystem> {
        match self {
            LoadedModel::Mechanical { system, variant, n_choice } => build_first_order(system, *variant, *n_choice),
            LoadedModel::FirstOrder(s) => Ok(s.clone()),
        }
    }
}

fn harmonics(entries: &[HarmonicEntry], dim: usize) -> Result<Vec<Harmonic>> {
    entries
        .iter()
        .map(|e| {
            if e.state_degree != 0 {
                return Err(SsmError::Unsupported("state-dependent forcing is not supported".into()));
            }
            let im = e.im.clone().unwrap_or_else(|| vec![0.0; e.re.len()]);
            if e.re.len() != dim || im.len() != dim {
                return Err(SsmError::Validation(format!(
                    "forcing harmonic {:?} must have {dim} entries",
                    e.kappa
                )));
            }
            Ok(Harmonic::new(
                e.kappa.clone(),
                e.re.iter().zip(&im).map(|(&r, &i)| Complex64::new(r, i)).collect(),
            ))
        })
        .collect()
}

fn harmonic_entries(h: &[Harmonic]) -> Vec<HarmonicEntry> {
    h.iter()
        .map(|h| {
            let im: Vec<f64> = h.vector.iter().map(|z| z.im).collect();
            HarmonicEntry {
                kappa: h.kappa.clone(),
                re: h.vector.iter().map(|z| z.re).collect(),
                im: if im.iter().any(|v| *v != 0.0) { Some(im) } else { None },
                state_degree: 0,
            }
        })
        .collect()
}

pub fn load_manifest(path: &Path) -> Result<LoadedModel> {
    let text = read(path)?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let resolve = |f: &str| dir.join(f);
    let n = manifest.dimension;
    if n == 0 {
        return Err(SsmError::Validation("manifest dimension must be positive".into()));
    }
    let check = |m: SparseMatrix, name: &str| -> Result<SparseMatrix> {
        if m.nrows() != n || m.ncols() != n {
            return Err(SsmError::Validation(format!(
                "{name} matrix is {}x{}, manifest dimension is {n}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(m)
    };
    let mut nonlinearity: Vec<PolyCoeffs> = Vec::new();
    for f in &manifest.nonlinearity {
        for p in read_tensor(&resolve(f), n, n)? {
            match nonlinearity.iter_mut().find(|q| q.degree() == p.degree()) {
                Some(q) => {
                    for (r, pos, v) in p.iter() {
                        q.add_at(r, pos, v);
                    }
                }
                None => nonlinearity.push(p),
            }
        }
    }
    nonlinearity.sort_by_key(|p| p.degree());
    let forcing = harmonics(&manifest.forcing, n)?;
    match manifest.kind {
        ManifestKind::Mechanical => {
            let mass = manifest.mass.as_deref().ok_or_else(|| SsmError::Validation("mass matrix required".into()))?;
            let stiffness = manifest
                .stiffness
                .as_deref()
                .ok_or_else(|| SsmError::Validation("stiffness matrix required".into()))?;
            let system = MechanicalSystem {
                n,
                mass: check(read_matrix_market(&resolve(mass))?, "mass")?,
                damping: match manifest.damping.as_deref() {
                    Some(d) => check(read_matrix_market(&resolve(d))?, "damping")?,
                    None => SparseMatrix::zeros(n, n),
                },
                stiffness: check(read_matrix_market(&resolve(stiffness))?, "stiffness")?,
                nonlinearity,
                forcing,
                epsilon: manifest.epsilon,
            };
            system.validate()?;
            let (dv, dn) = default_variant(&system);
            Ok(LoadedModel::Mechanical {
                system,
                variant: manifest.variant.unwrap_or(dv),
                n_choice: manifest.n_choice.unwrap_or(dn),
            })
        }
        ManifestKind::FirstOrder => {
            let a = manifest.a.as_deref().ok_or_else(|| SsmError::Validation("matrix A required".into()))?;
            let b = match manifest.b.as_deref() {
                Some(b) => check(read_matrix_market(&resolve(b))?, "B")?,
                None => SparseMatrix::identity(n),
            };
            let a = check(read_matrix_market(&resolve(a))?, "A")?;
            Ok(LoadedModel::FirstOrder(FirstOrderSystem::new(a, b, nonlinearity, forcing, manifest.epsilon)?))
        }
    }
}

/// Loads a manifest and converts it to first-order form.
pub fn load_system(path: &Path) -> Result<FirstOrderSystem> {
    load_manifest(path)?.first_order()
}

fn write_manifest(path: &Path, m: &Manifest) -> Result<()> {
    let text = serde_json::to_string_pretty(m).map_err(|e| SsmError::Numerical(e.to_string()))?;
    write(path, &(text + "\n"))
}

/// Writes `<stem>.json` plus matrix and tensor files into `dir`; returns the manifest path.
pub fn write_mechanical(dir: &Path, stem: &str, mech: &MechanicalSystem, variant: Variant, n_choice: NChoice) -> Result<PathBuf> {
    let file = |s: &str| format!("{stem}_{s}");
    write_matrix_market(&dir.join(file("M.mtx")), &mech.mass)?;
    write_matrix_market(&dir.join(file("C.mtx")), &mech.damping)?;
    write_matrix_market(&dir.join(file("K.mtx")), &mech.stiffness)?;
    let mut nl = vec![];
    if !mech.nonlinearity.is_empty() {
        write_tensor(&dir.join(file("f.tns")), &mech.nonlinearity)?;
        nl.push(file("f.tns"));
    }
    let manifest = Manifest {
        kind: ManifestKind::Mechanical,
        dimension: mech.n,
        mass: Some(file("M.mtx")),
        damping: Some(file("C.mtx")),
        stiffness: Some(file("K.mtx")),
        a: None,
        b: None,
        nonlinearity: nl,
        variant: Some(variant),
        n_choice: Some(n_choice),
        epsilon: mech.epsilon,
        forcing: harmonic_entries(&mech.forcing),
    };
    let path = dir.join(format!("{stem}.json"));
    write_manifest(&path, &manifest)?;
    Ok(path)
}

pub fn write_first_order(dir: &Path, stem: &str, sys: &FirstOrderSystem) -> Result<PathBuf> {
    let file = |s: &str| format!("{stem}_{s}");
    write_matrix_market(&dir.join(file("A.mtx")), &sys.a)?;
    write_matrix_market(&dir.join(file("B.mtx")), &sys.b)?;
    let mut nl = vec![];
    if !sys.nonlinearity.is_empty() {
        write_tensor(&dir.join(file("F.tns")), &sys.nonlinearity)?;
        nl.push(file("F.tns"));
    }
    let manifest = Manifest {
        kind: ManifestKind::FirstOrder,
        dimension: sys.n,
        mass: None,
        damping: None,
        stiffness: None,
        a: Some(file("A.mtx")),
        b: Some(file("B.mtx")),
        nonlinearity: nl,
        variant: None,
        n_choice: None,
        epsilon: sys.epsilon,
        forcing: harmonic_entries(&sys.forcing),
    };
    let path = dir.join(format!("{stem}.json"));
    write_manifest(&path, &manifest)?;
    Ok(path)
}
