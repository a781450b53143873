//! Experiment configuration and its flat `section.key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! target.name = tri_mode
//! target.scale = 0.12        # any other target.* key is a target parameter
//! run.biases = impartial, weak, strong
//! run.seeds = 1, 2, 3
//! sweep.c_values = 0.0, 0.05, 0.1
//! sampler.gamma = 1e-5
//! ```
//!
//! A file whose first non-blank character is `{` is read as the JSON form
//! embedded in run reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gdmc::{AcceptanceMode, DartingParams, VolumeFormula};
use crate::kameleon::{default_nu, KameleonParams};
use crate::kernel::KernelParams;
use crate::rwmh::{Bias, RwParams};
use crate::targets::{shipped_target, DemoSearch, ShippedTarget};

pub const OUT_ENV: &str = "AFFORDANCE_OUT";
pub const WORKERS_ENV: &str = "AFFORDANCE_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

/// Either an explicit list of `c` values or two ranges with their own increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CSweep {
    List(Vec<f64>),
    Ranges { start: f64, split: f64, end: f64, fine_step: f64, coarse_step: f64 },
}

impl Default for CSweep {
    fn default() -> Self {
        CSweep::Ranges { start: 0.0, split: 0.1, end: 0.2, fine_step: 0.005, coarse_step: 0.01 }
    }
}

fn steps_between(a: f64, b: f64, step: f64) -> usize {
    ((b - a) / step + 1e-9).floor().max(0.0) as usize
}

impl CSweep {
    /// `[start, split)` in fine steps followed by `[split, end]` in coarse steps.
    pub fn values(&self) -> Vec<f64> {
        match self {
            CSweep::List(v) => v.clone(),
            CSweep::Ranges { start, split, end, fine_step, coarse_step } => {
                let nf = steps_between(*start, *split, *fine_step);
                let nc = steps_between(*split, *end, *coarse_step);
                let mut out: Vec<f64> = (0..nf).map(|i| start + i as f64 * fine_step).collect();
                out.extend((0..=nc).map(|j| split + j as f64 * coarse_step));
                out
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| Err(Error::Config { key: key.into(), reason: reason.into() });
        match self {
            CSweep::List(v) if v.is_empty() => bad("sweep.c_values", "empty list"),
            CSweep::List(v) if v.iter().any(|c| !(*c >= 0.0 && c.is_finite())) => bad("sweep.c_values", "values must be finite and >= 0"),
            CSweep::Ranges { start, split, end, fine_step, coarse_step } => {
                if !(*fine_step > 0.0 && *coarse_step > 0.0) {
                    return bad("sweep.fine_step", "steps must be > 0");
                }
                if !(0.0 <= *start && start <= split && split <= end && end.is_finite()) {
                    return bad("sweep.c_start", "need 0 <= c_start <= c_split <= c_end");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub gamma: f64,
    pub nu: f64,
    pub n: usize,
    pub p_check: f64,
    pub omega: f64,
    pub sigma: f64,
    pub ell: f64,
    pub acceptance_mode: AcceptanceMode,
    pub volume_formula: VolumeFormula,
    pub assign_c: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        let d = DartingParams::default();
        SamplerConfig {
            gamma: 1e-5,
            nu: default_nu(),
            n: 100,
            p_check: d.p_check,
            omega: d.omega,
            sigma: 0.2,
            ell: 1.0,
            acceptance_mode: d.acceptance_mode,
            volume_formula: d.volume_formula,
            assign_c: d.assign_c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomWalkConfig {
    pub pos_sigma: f64,
    pub kappa: f64,
}

impl Default for RandomWalkConfig {
    fn default() -> Self {
        RandomWalkConfig { pos_sigma: 0.05, kappa: 50.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    /// Number of demonstrated grasps.
    pub m: usize,
    pub demo_search: DemoSearch,
    pub biases: Vec<Bias>,
    pub sweep: CSweep,
    pub iterations: usize,
    pub burn_in: usize,
    pub sampler: SamplerConfig,
    pub sketch_size: usize,
    /// Random walk used for sketches and for the baseline.
    pub random_walk: RandomWalkConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            target: TargetSpec { name: "tri_mode".into(), params: BTreeMap::new() },
            m: 5,
            demo_search: DemoSearch::default(),
            biases: Bias::ALL.to_vec(),
            sweep: CSweep::default(),
            iterations: 1000,
            burn_in: 100,
            sampler: SamplerConfig::default(),
            sketch_size: 1000,
            random_walk: RandomWalkConfig::default(),
            seeds: vec![1],
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim().parse::<T>().map_err(|e| Error::Config { key: key.into(), reason: format!("cannot parse `{}`: {e}", raw.trim()) })
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    raw.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_value(key, s)).collect()
}

impl ExperimentConfig {
    /// Parses the flat text format; unspecified keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let cfg: ExperimentConfig =
                serde_json::from_str(trimmed).map_err(|e| Error::Config { key: "<json>".into(), reason: e.to_string() })?;
            cfg.validate()?;
            return Ok(cfg);
        }
        let mut cfg = ExperimentConfig::default();
        let mut ranges = match cfg.sweep {
            CSweep::Ranges { start, split, end, fine_step, coarse_step } => [start, split, end, fine_step, coarse_step],
            CSweep::List(_) => unreachable!("default sweep uses ranges"),
        };
        let mut list: Option<Vec<f64>> = None;
        let mut ranges_touched = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                key: format!("line {}", lineno + 1),
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let s = &mut cfg.sampler;
            match key {
                "target.name" => cfg.target.name = value.trim().to_string(),
                k if k.starts_with("target.") => {
                    cfg.target.params.insert(k["target.".len()..].to_string(), parse_value(key, value)?);
                }
                "demos.m" => cfg.m = parse_value(key, value)?,
                "demos.budget" => cfg.demo_search.budget = parse_value(key, value)?,
                "demos.kappa_start" => cfg.demo_search.kappa_start = parse_value(key, value)?,
                "demos.kappa_end" => cfg.demo_search.kappa_end = parse_value(key, value)?,
                "run.biases" => cfg.biases = parse_list(key, value)?,
                "run.iterations" => cfg.iterations = parse_value(key, value)?,
                "run.burn_in" => cfg.burn_in = parse_value(key, value)?,
                "run.seed" => cfg.seeds = vec![parse_value(key, value)?],
                "run.seeds" => cfg.seeds = parse_list(key, value)?,
                "run.output_dir" => cfg.output_dir = PathBuf::from(value.trim()),
                "sweep.c_values" => list = Some(parse_list(key, value)?),
                "sweep.c_start" | "sweep.c_split" | "sweep.c_end" | "sweep.fine_step" | "sweep.coarse_step" => {
                    let i = ["sweep.c_start", "sweep.c_split", "sweep.c_end", "sweep.fine_step", "sweep.coarse_step"]
                        .iter()
                        .position(|k| *k == key)
                        .expect("matched above");
                    ranges[i] = parse_value(key, value)?;
                    ranges_touched = true;
                }
                "sampler.gamma" => s.gamma = parse_value(key, value)?,
                "sampler.nu" => s.nu = parse_value(key, value)?,
                "sampler.n" => s.n = parse_value(key, value)?,
                "sampler.p_check" => s.p_check = parse_value(key, value)?,
                "sampler.omega" => s.omega = parse_value(key, value)?,
                "sampler.sigma" => s.sigma = parse_value(key, value)?,
                "sampler.ell" => s.ell = parse_value(key, value)?,
                "sampler.acceptance_mode" => s.acceptance_mode = parse_value(key, value)?,
                "sampler.volume_formula" => s.volume_formula = parse_value(key, value)?,
                "sampler.assign_c" => s.assign_c = parse_value(key, value)?,
                "sketch.size" => cfg.sketch_size = parse_value(key, value)?,
                "random_walk.pos_sigma" => cfg.random_walk.pos_sigma = parse_value(key, value)?,
                "random_walk.kappa" => cfg.random_walk.kappa = parse_value(key, value)?,
                _ => return Err(Error::Config { key: key.into(), reason: "unknown key".into() }),
            }
        }
        match list {
            Some(_) if ranges_touched => {
                return Err(Error::Config { key: "sweep.c_values".into(), reason: "give either a list or ranges, not both".into() })
            }
            Some(v) => cfg.sweep = CSweep::List(v),
            None => {
                let [start, split, end, fine_step, coarse_step] = ranges;
                cfg.sweep = CSweep::Ranges { start, split, end, fine_step, coarse_step };
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::parse(&text)
    }

    /// The flat text form; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let list = |v: &[String]| v.join(", ");
        let s = &self.sampler;
        let _ = writeln!(out, "target.name = {}", self.target.name);
        for (k, v) in &self.target.params {
            let _ = writeln!(out, "target.{k} = {v:?}");
        }
        let _ = writeln!(out, "demos.m = {}", self.m);
        let _ = writeln!(out, "demos.budget = {}", self.demo_search.budget);
        let _ = writeln!(out, "demos.kappa_start = {:?}", self.demo_search.kappa_start);
        let _ = writeln!(out, "demos.kappa_end = {:?}", self.demo_search.kappa_end);
        let _ = writeln!(out, "run.biases = {}", list(&self.biases.iter().map(|b| b.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(out, "run.iterations = {}", self.iterations);
        let _ = writeln!(out, "run.burn_in = {}", self.burn_in);
        let _ = writeln!(out, "run.seeds = {}", list(&self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(out, "run.output_dir = {}", self.output_dir.display());
        match &self.sweep {
            CSweep::List(v) => {
                let _ = writeln!(out, "sweep.c_values = {}", list(&v.iter().map(|c| format!("{c:?}")).collect::<Vec<_>>()));
            }
            CSweep::Ranges { start, split, end, fine_step, coarse_step } => {
                let _ = writeln!(out, "sweep.c_start = {start:?}");
                let _ = writeln!(out, "sweep.c_split = {split:?}");
                let _ = writeln!(out, "sweep.c_end = {end:?}");
                let _ = writeln!(out, "sweep.fine_step = {fine_step:?}");
                let _ = writeln!(out, "sweep.coarse_step = {coarse_step:?}");
            }
        }
        let _ = writeln!(out, "sampler.gamma = {:?}", s.gamma);
        let _ = writeln!(out, "sampler.nu = {:?}", s.nu);
        let _ = writeln!(out, "sampler.n = {}", s.n);
        let _ = writeln!(out, "sampler.p_check = {:?}", s.p_check);
        let _ = writeln!(out, "sampler.omega = {:?}", s.omega);
        let _ = writeln!(out, "sampler.sigma = {:?}", s.sigma);
        let _ = writeln!(out, "sampler.ell = {:?}", s.ell);
        let mode = match s.acceptance_mode {
            AcceptanceMode::Standard => "standard",
            AcceptanceMode::PaperLiteral => "paper_literal",
        };
        let formula = match s.volume_formula {
            VolumeFormula::Ellipsoid => "ellipsoid",
            VolumeFormula::Literal => "literal",
        };
        let _ = writeln!(out, "sampler.acceptance_mode = {mode}");
        let _ = writeln!(out, "sampler.volume_formula = {formula}");
        let _ = writeln!(out, "sampler.assign_c = {:?}", s.assign_c);
        let _ = writeln!(out, "sketch.size = {}", self.sketch_size);
        let _ = writeln!(out, "random_walk.pos_sigma = {:?}", self.random_walk.pos_sigma);
        let _ = writeln!(out, "random_walk.kappa = {:?}", self.random_walk.kappa);
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Err(Error::Config { key: key.into(), reason });
        if self.m == 0 {
            return bad("demos.m", "need at least one demonstrated grasp".into());
        }
        if self.biases.is_empty() {
            return bad("run.biases", "need at least one bias level".into());
        }
        if self.seeds.is_empty() {
            return bad("run.seeds", "need at least one seed".into());
        }
        if self.iterations == 0 {
            return bad("run.iterations", "must be >= 1".into());
        }
        if self.sketch_size == 0 {
            return bad("sketch.size", "must be >= 1".into());
        }
        self.sweep.validate()?;
        self.shipped_target()?;
        let s = &self.sampler;
        let under = |section: &'static str| {
            move |e: Error| match e {
                Error::InvalidParameter { name, reason } => {
                    let name = if name == "pos_cov" { "pos_sigma" } else { name };
                    Error::Config { key: format!("{section}.{name}"), reason }
                }
                other => Error::Config { key: section.into(), reason: other.to_string() },
            }
        };
        self.kameleon_params(0.0).map_err(under("sampler"))?;
        DartingParams { p_check: s.p_check, omega: s.omega, acceptance_mode: s.acceptance_mode, volume_formula: s.volume_formula, assign_c: s.assign_c }
            .validate()
            .map_err(under("sampler"))?;
        self.rw_params().map_err(under("random_walk"))?;
        Ok(())
    }

    pub fn shipped_target(&self) -> Result<ShippedTarget> {
        shipped_target(&self.target.name, &self.target.params)
    }

    pub fn kameleon_params(&self, c: f64) -> Result<KameleonParams> {
        let s = &self.sampler;
        let p = KameleonParams {
            gamma: s.gamma,
            nu: s.nu,
            n: s.n,
            burn_in: self.burn_in,
            iterations: self.iterations,
            eta: 1.0,
            kernel: KernelParams::new(s.sigma, s.ell, c)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn darting_params(&self) -> DartingParams {
        let s = &self.sampler;
        DartingParams { p_check: s.p_check, omega: s.omega, acceptance_mode: s.acceptance_mode, volume_formula: s.volume_formula, assign_c: s.assign_c }
    }

    pub fn rw_params(&self) -> Result<RwParams> {
        RwParams::isotropic(self.random_walk.pos_sigma, self.random_walk.kappa)
    }

    /// Applies `AFFORDANCE_OUT` when set.
    pub fn apply_env(&mut self) {
        if let Ok(dir) = std::env::var(OUT_ENV) {
            if !dir.is_empty() {
                self.output_dir = PathBuf::from(dir);
            }
        }
    }
}

/// Worker count from `AFFORDANCE_WORKERS`, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|&n: &usize| n > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_parameters() {
        let c = ExperimentConfig::default();
        assert_eq!((c.iterations, c.burn_in, c.m, c.sketch_size), (1000, 100, 5, 1000));
        assert_eq!(c.sampler.gamma, 1e-5);
        assert_eq!(c.sampler.n, 100);
        assert!((c.sampler.nu - 2.38 / 6f64.sqrt()).abs() < 1e-15);
        assert_eq!((c.sampler.p_check, c.sampler.omega), (0.5, 0.7));
        let v = c.sweep.values();
        assert_eq!(v.len(), 31);
        assert_eq!(v[0], 0.0);
        assert!((v[20] - 0.1).abs() < 1e-12);
        assert!((v[30] - 0.2).abs() < 1e-12);
        assert!((v[1] - 0.005).abs() < 1e-12 && (v[21] - 0.11).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let mut c = ExperimentConfig::default();
        c.target.params.insert("scale".into(), 0.12);
        c.seeds = vec![3, 9];
        c.sampler.acceptance_mode = AcceptanceMode::PaperLiteral;
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        c.sweep = CSweep::List(vec![0.0, 0.05]);
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::parse(&json).unwrap(), c);
    }

    #[test]
    fn errors_name_the_key() {
        let e = ExperimentConfig::parse("sampler.gamma = fast").unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "sampler.gamma"), "{e}");
        let e = ExperimentConfig::parse("sampler.gama = 1").unwrap_err();
        assert!(e.to_string().contains("sampler.gama"));
        let e = ExperimentConfig::parse("target.bogus = 1").unwrap_err();
        assert!(e.to_string().contains("target.bogus"));
        let e = ExperimentConfig::parse("run.biases = weak, medium").unwrap_err();
        assert!(e.to_string().contains("run.biases"));
        let e = ExperimentConfig::parse("target.name = teapot").unwrap_err();
        assert!(e.to_string().contains("tri_mode"));
    }

    #[test]
    fn missing_file_names_the_path() {
        let e = ExperimentConfig::load(Path::new("/definitely/not/here.cfg")).unwrap_err();
        assert!(e.to_string().contains("/definitely/not/here.cfg"));
    }

    #[test]
    fn reduced_sweep() {
        let c = ExperimentConfig::parse("sweep.fine_step = 0.02\nsweep.coarse_step = 0.02").unwrap();
        assert_eq!(c.sweep.values().len(), 11);
    }
}
