//! Run configuration: defaults, then a flat `key = value` file, then flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use horlicz::carleson::Quadrature;
use horlicz::functionals::Settings;
use horlicz::modulus::SolverParams;
use serde::Serialize;

/// Every tunable of a run; serialized into each output for provenance.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub dim: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub map: Option<String>,
    pub psi: Option<String>,
    pub settings: Settings,
    pub solver: SolverParams,
    pub modulus_curves: usize,
    pub quadrature: Quadrature,
    pub dyadic_levels: u32,
    pub suite_samples: Option<usize>,
}

pub const KEYS: &[&str] = &[
    "dim",
    "seed",
    "workers",
    "out",
    "map",
    "psi",
    "scan.depth",
    "scan.deltas",
    "scan.exhaustive",
    "quadrature.sphere_resolution",
    "quadrature.radial_points",
    "quadrature.angular_points",
    "quadrature.azimuth",
    "mc.seed",
    "mc.budget",
    "modulus.resolution",
    "modulus.max_iterations",
    "modulus.tolerance",
    "modulus.curves",
    "carleson.sphere_resolution",
    "carleson.max_level",
    "carleson.dyadic_levels",
    "lemmas.samples",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(format!("line {}: unknown key '{k}'", i + 1));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_file(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_flat(&text)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("invalid value '{v}' for {key}"))
}

impl RunConfig {
    /// Builds a configuration for `dim` and applies `entries` in key order.
    pub fn build(entries: &BTreeMap<String, String>) -> Result<Self, String> {
        let dim = match entries.get("dim") {
            Some(v) => num::<usize>("dim", v)?,
            None => 2,
        };
        if dim != 2 && dim != 3 {
            return Err(format!("dim must be 2 or 3, got {dim}"));
        }
        let mut c = RunConfig {
            dim,
            seed: 1,
            workers: 0,
            out: PathBuf::from("out"),
            map: None,
            psi: None,
            settings: Settings::for_dim(dim),
            solver: SolverParams::for_dim(dim),
            modulus_curves: if dim == 2 { 2048 } else { 4096 },
            quadrature: Quadrature::for_dim(dim),
            dyadic_levels: 10,
            suite_samples: None,
        };
        // the global seed first, so that mc.seed can refine it
        if let Some(v) = entries.get("seed") {
            c.seed = num("seed", v)?;
            c.settings.seed = c.seed;
        }
        for (k, v) in entries {
            match k.as_str() {
                "dim" | "seed" => {}
                "workers" => c.workers = num(k, v)?,
                "out" => c.out = PathBuf::from(v),
                "map" => c.map = Some(v.clone()),
                "psi" => c.psi = Some(v.clone()),
                "scan.depth" => c.settings.depth = num(k, v)?,
                "scan.deltas" => {
                    let count: i32 = num(k, v)?;
                    if !(1..=64).contains(&count) {
                        return Err("scan.deltas must lie in 1..=64".into());
                    }
                    c.settings.deltas = (0..count).map(|j| 0.5f64.powi(j)).collect();
                }
                "scan.exhaustive" => c.settings.exhaustive_scan = num(k, v)?,
                "quadrature.sphere_resolution" => c.settings.sphere_resolution = num(k, v)?,
                "quadrature.radial_points" => c.settings.radial_points = num(k, v)?,
                "quadrature.angular_points" => c.settings.angular_points = num(k, v)?,
                "quadrature.azimuth" => c.settings.azimuth = num(k, v)?,
                "mc.seed" => c.settings.seed = num(k, v)?,
                "mc.budget" => c.settings.af_budget = num(k, v)?,
                "modulus.resolution" => c.solver.resolution = num(k, v)?,
                "modulus.max_iterations" => c.solver.max_iterations = num(k, v)?,
                "modulus.tolerance" => c.solver.tolerance = num(k, v)?,
                "modulus.curves" => c.modulus_curves = num(k, v)?,
                "carleson.sphere_resolution" => c.quadrature.sphere_resolution = num(k, v)?,
                "carleson.max_level" => c.quadrature.max_level = num(k, v)?,
                "carleson.dyadic_levels" => c.dyadic_levels = num(k, v)?,
                "lemmas.samples" => c.suite_samples = Some(num(k, v)?),
                other => return Err(format!("unknown key '{other}'")),
            }
        }
        c.settings.validate().map_err(|e| e.to_string())?;
        if c.modulus_curves == 0 || c.solver.resolution < 4 || c.solver.max_iterations == 0 {
            return Err("modulus resolution, iterations and curve count must be positive".into());
        }
        Ok(c)
    }
}
