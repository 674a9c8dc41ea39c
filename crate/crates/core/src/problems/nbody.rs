//! N-body problems with constants loaded from plain-text data files: the
//! outer solar system (gravity) and a frozen argon crystal (Lennard-Jones).
//!
//! Files ship embedded in the crate; setting `RRK_LAB_DATA_DIR` overrides
//! them with on-disk copies of the same format.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::ode::{Invariant, NBodyMeta, OdeProblem};

/// Environment variable locating external constants data files.
pub const DATA_DIR_ENV: &str = "RRK_LAB_DATA_DIR";

const SOLAR_FILE: &str = "outer_solar_system.txt";
const ARGON_FILE: &str = "argon_crystal.txt";
const SOLAR_EMBEDDED: &str = include_str!("../../data/outer_solar_system.txt");
const ARGON_EMBEDDED: &str = include_str!("../../data/argon_crystal.txt");

/// Masses, positions, and momenta of a body system, flattened per body.
#[derive(Debug, Clone)]
pub struct NBodyState {
    pub names: Vec<String>,
    pub masses: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub space_dim: usize,
}

impl NBodyState {
    pub fn bodies(&self) -> usize {
        self.masses.len()
    }

    /// State layout [q..., p...] used by the problems.
    pub fn flatten(&self) -> Vec<f64> {
        let mut u = self.q.clone();
        u.extend_from_slice(&self.p);
        u
    }
}

#[derive(Debug)]
struct DataFile {
    path: String,
    constants: Vec<(String, f64)>,
    records: Vec<(String, Vec<f64>)>,
}

impl DataFile {
    fn constant(&self, name: &str) -> Result<f64> {
        self.constants
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::DataFormat {
                path: self.path.clone(),
                detail: format!("missing `constant {name}`"),
            })
    }
}

fn read_data_from(dir: Option<&Path>, file: &str, embedded: &str) -> Result<DataFile> {
    let (text, path) = match dir {
        Some(dir) => {
            let path: PathBuf = dir.join(file);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::MissingDataFile {
                path: path.display().to_string(),
                detail: e.to_string(),
            })?;
            (text, path.display().to_string())
        }
        None => (embedded.to_string(), format!("builtin:{file}")),
    };
    parse_data(&text, &path)
}

fn parse_data(text: &str, path: &str) -> Result<DataFile> {
    let mut constants = Vec::new();
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let kind = tokens.next().unwrap();
        let bad = |detail: String| Error::DataFormat {
            path: path.to_string(),
            detail: format!("line {}: {detail}", lineno + 1),
        };
        match kind {
            "constant" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| bad("constant needs a name".into()))?;
                let value: f64 = tokens
                    .next()
                    .ok_or_else(|| bad("constant needs a value".into()))?
                    .parse()
                    .map_err(|e| bad(format!("bad float: {e}")))?;
                constants.push((name.to_string(), value));
            }
            "body" | "atom" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| bad("record needs a name".into()))?;
                let values: std::result::Result<Vec<f64>, _> =
                    tokens.map(|t| t.parse::<f64>()).collect();
                let values = values.map_err(|e| bad(format!("bad float: {e}")))?;
                records.push((name.to_string(), values));
            }
            other => return Err(bad(format!("unknown record `{other}`"))),
        }
    }
    Ok(DataFile {
        path: path.to_string(),
        constants,
        records,
    })
}

/// Gravitational N-body Hamiltonian:
/// H = 1/2 sum_i |p_i|^2 / m_i - G sum_{i<j} m_i m_j / |q_i - q_j|.
fn gravitational_hamiltonian(g: f64, masses: &[f64], state: &[f64]) -> f64 {
    let n = masses.len();
    let (q, p) = state.split_at(3 * n);
    let mut h = 0.0;
    for (i, m) in masses.iter().enumerate() {
        let pi = &p[3 * i..3 * i + 3];
        h += 0.5 * (pi[0] * pi[0] + pi[1] * pi[1] + pi[2] * pi[2]) / m;
    }
    for i in 1..n {
        for j in 0..i {
            let mut r2 = 0.0;
            for d in 0..3 {
                let dq = q[3 * i + d] - q[3 * j + d];
                r2 += dq * dq;
            }
            h -= g * masses[i] * masses[j] / r2.sqrt();
        }
    }
    h
}

/// The outer solar system (sun plus five outer bodies, 3D, dim 36).
pub fn outer_solar_system() -> Result<OdeProblem> {
    outer_solar_system_from(std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).as_deref())
}

/// As [`outer_solar_system`], reading from an explicit directory instead of
/// the environment (None uses the embedded constants).
pub fn outer_solar_system_from(dir: Option<&Path>) -> Result<OdeProblem> {
    let data = read_data_from(dir, SOLAR_FILE, SOLAR_EMBEDDED)?;
    let g = data.constant("G")?;
    let mut state = NBodyState {
        names: Vec::new(),
        masses: Vec::new(),
        q: Vec::new(),
        p: Vec::new(),
        space_dim: 3,
    };
    for (name, values) in &data.records {
        if values.len() != 7 {
            return Err(Error::DataFormat {
                path: data.path.clone(),
                detail: format!("body `{name}` needs mass + q(3) + p(3)"),
            });
        }
        state.names.push(name.clone());
        state.masses.push(values[0]);
        state.q.extend_from_slice(&values[1..4]);
        state.p.extend_from_slice(&values[4..7]);
    }
    let n = state.bodies();
    if n < 2 {
        return Err(Error::DataFormat {
            path: data.path.clone(),
            detail: "need at least two bodies".into(),
        });
    }
    let masses = state.masses.clone();
    let masses_rhs = masses.clone();
    let masses_h = masses.clone();
    let masses_grad = masses.clone();
    let u0 = state.flatten();

    Ok(OdeProblem::new(
        "solar",
        u0,
        Box::new(move |_t, u, out| {
            let (q, p) = u.split_at(3 * n);
            let (dq, dp) = out.split_at_mut(3 * n);
            for (i, m) in masses_rhs.iter().enumerate() {
                for d in 0..3 {
                    dq[3 * i + d] = p[3 * i + d] / m;
                }
            }
            dp.fill(0.0);
            for i in 1..n {
                for j in 0..i {
                    let mut r2 = 0.0;
                    let mut diff = [0.0; 3];
                    for d in 0..3 {
                        diff[d] = q[3 * i + d] - q[3 * j + d];
                        r2 += diff[d] * diff[d];
                    }
                    if r2 <= 1e-300 {
                        return Err(Error::DomainViolation(format!(
                            "bodies {i} and {j} collided"
                        )));
                    }
                    let inv_r3 = 1.0 / (r2 * r2.sqrt());
                    let w = g * masses_rhs[i] * masses_rhs[j] * inv_r3;
                    for d in 0..3 {
                        dp[3 * i + d] -= w * diff[d];
                        dp[3 * j + d] += w * diff[d];
                    }
                }
            }
            Ok(())
        }),
    )
    .with_invariant(
        Invariant::new(
            "hamiltonian",
            Box::new(move |u: &[f64]| gravitational_hamiltonian(g, &masses_h, u)),
        )
        .with_gradient(Box::new(move |u: &[f64]| {
            let (q, p) = u.split_at(3 * n);
            let mut grad = vec![0.0; 6 * n];
            for (i, m) in masses_grad.iter().enumerate() {
                for d in 0..3 {
                    grad[3 * n + 3 * i + d] = p[3 * i + d] / m;
                }
            }
            for i in 1..n {
                for j in 0..i {
                    let mut r2 = 0.0;
                    let mut diff = [0.0; 3];
                    for d in 0..3 {
                        diff[d] = q[3 * i + d] - q[3 * j + d];
                        r2 += diff[d] * diff[d];
                    }
                    let inv_r3 = 1.0 / (r2 * r2.sqrt());
                    let w = g * masses_grad[i] * masses_grad[j] * inv_r3;
                    for d in 0..3 {
                        grad[3 * i + d] += w * diff[d];
                        grad[3 * j + d] -= w * diff[d];
                    }
                }
            }
            grad
        })),
    )
    .with_nbody(NBodyMeta {
        masses,
        space_dim: 3,
        k_b: 1.0,
        momentum_offset: 3 * n,
    }))
}

/// Lennard-Jones pair potential V(r) = 4 eps ((sigma/r)^12 - (sigma/r)^6).
pub fn lennard_jones(eps: f64, sigma: f64, r: f64) -> f64 {
    let sr6 = (sigma / r).powi(6);
    4.0 * eps * (sr6 * sr6 - sr6)
}

/// The frozen argon crystal: 7 atoms in 2D (dim 28).
pub fn argon_crystal() -> Result<OdeProblem> {
    argon_crystal_from(std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).as_deref())
}

/// As [`argon_crystal`], reading from an explicit directory instead of the
/// environment (None uses the embedded constants).
pub fn argon_crystal_from(dir: Option<&Path>) -> Result<OdeProblem> {
    let data = read_data_from(dir, ARGON_FILE, ARGON_EMBEDDED)?;
    let eps = data.constant("epsilon")?;
    let sigma = data.constant("sigma")?;
    let mass = data.constant("mass")?;
    let k_b = data.constant("k_b")?;

    let mut q = Vec::new();
    let mut p = Vec::new();
    for (name, values) in &data.records {
        if values.len() != 4 {
            return Err(Error::DataFormat {
                path: data.path.clone(),
                detail: format!("atom `{name}` needs q(2) + v(2)"),
            });
        }
        q.extend_from_slice(&values[0..2]);
        p.push(mass * values[2]);
        p.push(mass * values[3]);
    }
    let n = q.len() / 2;
    let u0: Vec<f64> = q.iter().chain(p.iter()).copied().collect();

    let hamiltonian = move |u: &[f64]| -> f64 {
        let (q, p) = u.split_at(2 * n);
        let mut h = 0.0;
        for i in 0..n {
            h += 0.5 * (p[2 * i] * p[2 * i] + p[2 * i + 1] * p[2 * i + 1]) / mass;
        }
        for i in 1..n {
            for j in 0..i {
                let dx = q[2 * i] - q[2 * j];
                let dy = q[2 * i + 1] - q[2 * j + 1];
                h += lennard_jones(eps, sigma, (dx * dx + dy * dy).sqrt());
            }
        }
        h
    };

    Ok(OdeProblem::new(
        "argon",
        u0,
        Box::new(move |_t, u, out| {
            let (q, p) = u.split_at(2 * n);
            let (dq, dp) = out.split_at_mut(2 * n);
            for i in 0..n {
                dq[2 * i] = p[2 * i] / mass;
                dq[2 * i + 1] = p[2 * i + 1] / mass;
            }
            dp.fill(0.0);
            for i in 1..n {
                for j in 0..i {
                    let dx = q[2 * i] - q[2 * j];
                    let dy = q[2 * i + 1] - q[2 * j + 1];
                    let r2 = dx * dx + dy * dy;
                    if r2 <= 1e-12 * sigma * sigma {
                        return Err(Error::DomainViolation(format!(
                            "atoms {i} and {j} collided"
                        )));
                    }
                    // -V'(r)/r = 24 eps (2 (sigma/r)^12 - (sigma/r)^6) / r^2
                    let sr6 = (sigma * sigma / r2).powi(3);
                    let w = 24.0 * eps * (2.0 * sr6 * sr6 - sr6) / r2;
                    dp[2 * i] += w * dx;
                    dp[2 * i + 1] += w * dy;
                    dp[2 * j] -= w * dx;
                    dp[2 * j + 1] -= w * dy;
                }
            }
            Ok(())
        }),
    )
    .with_invariant(
        Invariant::new("hamiltonian", Box::new(hamiltonian)).with_gradient(Box::new(
            move |u: &[f64]| {
                let (q, p) = u.split_at(2 * n);
                let mut grad = vec![0.0; 4 * n];
                for i in 0..n {
                    grad[2 * n + 2 * i] = p[2 * i] / mass;
                    grad[2 * n + 2 * i + 1] = p[2 * i + 1] / mass;
                }
                for i in 1..n {
                    for j in 0..i {
                        let dx = q[2 * i] - q[2 * j];
                        let dy = q[2 * i + 1] - q[2 * j + 1];
                        let r2 = dx * dx + dy * dy;
                        let sr6 = (sigma * sigma / r2).powi(3);
                        let w = 24.0 * eps * (2.0 * sr6 * sr6 - sr6) / r2;
                        grad[2 * i] -= w * dx;
                        grad[2 * i + 1] -= w * dy;
                        grad[2 * j] += w * dx;
                        grad[2 * j + 1] += w * dy;
                    }
                }
                grad
            },
        )),
    )
    .with_nbody(NBodyMeta {
        masses: vec![mass; n],
        space_dim: 2,
        k_b,
        momentum_offset: 2 * n,
    }))
}
