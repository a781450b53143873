//! Single runs, the random-walk baseline and the full experiment matrix.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gdmc::{build_regions, combined_step, Branch};
use crate::geometry::Pose;
use crate::harness::config::{workers_from_env, ExperimentConfig};
use crate::harness::io;
use crate::kameleon::{kameleon_step, ChainState};
use crate::metrics::{aggregate, convex_hull_area, successful_poses, AggregateRow, RunMetrics};
use crate::rng::{seeded, SimRng};
use crate::rwmh::{build_sketch, rw_step, Bias, RwChain, Sketch};
use crate::targets::{generate_demo_grasps, DemoGrasps, ShippedTarget, TargetDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Kameleon burn-in followed by the darting/Kameleon mix.
    Combined,
    RandomWalk,
}

/// Chain state after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub iter: usize,
    pub pose: Pose,
    pub log_quality: f64,
    pub accepted: bool,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCounts {
    /// Kameleon or random-walk steps.
    pub local: usize,
    pub local_accepted: usize,
    pub dart: usize,
    pub dart_accepted: usize,
    pub hold: usize,
}

impl StepCounts {
    fn add(&mut self, branch: Branch, accepted: bool) {
        match branch {
            Branch::Kameleon | Branch::RandomWalk => {
                self.local += 1;
                self.local_accepted += accepted as usize;
            }
            Branch::Dart => {
                self.dart += 1;
                self.dart_accepted += accepted as usize;
            }
            Branch::Hold => self.hold += 1,
        }
    }

    /// Accepted over attempted moves; holds attempt nothing.
    pub fn acceptance_rate(&self) -> f64 {
        let attempted = self.local + self.dart;
        if attempted == 0 {
            0.0
        } else {
            (self.local_accepted + self.dart_accepted) as f64 / attempted as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub sampler: SamplerKind,
    pub bias: Bias,
    pub c: f64,
    pub seed: u64,
    pub demos: Vec<Pose>,
    pub chain: Vec<ChainRecord>,
    /// Counts over the whole chain and over post-burn-in steps only.
    pub counts_all: StepCounts,
    pub counts: StepCounts,
    pub metrics: RunMetrics,
    pub chain_hash: String,
    pub duration_secs: f64,
}

impl RunReport {
    pub fn post_burn_in(&self) -> &[ChainRecord] {
        &self.chain[self.config.burn_in.min(self.chain.len())..]
    }

    /// Mode basins in which the chain held a successful grasp after burn-in.
    pub fn basins_visited(&self, target: &dyn TargetDensity) -> Vec<usize> {
        let mut b: Vec<usize> =
            self.post_burn_in().iter().filter(|r| target.is_success(&r.pose)).filter_map(|r| target.basin_of(&r.pose)).collect();
        b.sort_unstable();
        b.dedup();
        b
    }
}

fn wrap(bias: Bias, c: f64, seed: u64) -> impl Fn(Error) -> Error {
    move |e| Error::Run { bias: bias.to_string(), c, seed, source: Box::new(e) }
}

/// Demonstrated grasps for a run; the first draws of every run's generator.
pub fn demos_for(config: &ExperimentConfig, shipped: &ShippedTarget, rng: &mut SimRng) -> Result<DemoGrasps> {
    generate_demo_grasps(shipped.target.as_ref(), &shipped.demo_seeds, config.m, &config.demo_search, rng)
}

/// Demos followed by the sketch, both from `seed`'s generator.
pub fn sketch_for(config: &ExperimentConfig, bias: Bias, seed: u64) -> Result<(DemoGrasps, Sketch)> {
    let shipped = config.shipped_target()?;
    let mut rng = seeded(seed);
    let demos = demos_for(config, &shipped, &mut rng)?;
    let sketch = build_sketch(shipped.target.as_ref(), &demos, bias, config.sketch_size, &config.rw_params()?, &mut rng)?;
    Ok((demos, sketch))
}

fn finish(
    config: &ExperimentConfig,
    target: &dyn TargetDensity,
    sampler: SamplerKind,
    bias: Bias,
    c: f64,
    seed: u64,
    demos: &DemoGrasps,
    chain: Vec<ChainRecord>,
    started: Instant,
) -> RunReport {
    let mut counts_all = StepCounts::default();
    let mut counts = StepCounts::default();
    for (i, r) in chain.iter().enumerate() {
        counts_all.add(r.branch, r.accepted);
        if i >= config.burn_in {
            counts.add(r.branch, r.accepted);
        }
    }
    let post: Vec<Pose> = chain[config.burn_in.min(chain.len())..].iter().map(|r| r.pose).collect();
    let (success_count, unique) = successful_poses(&post, target);
    let hull = convex_hull_area(&unique.iter().map(|p| p.tra).collect::<Vec<Vector3<f64>>>());
    let metrics = RunMetrics {
        success_count,
        unique_success_count: unique.len(),
        acceptance_rate: counts.acceptance_rate(),
        dispersion_area: hull.area,
        dispersion_degenerate: hull.degenerate,
        c_value: c,
        bias,
        seed,
    };
    let chain_hash = io::fnv1a_hex(io::chain_csv(&chain).as_bytes());
    RunReport {
        config: config.clone(),
        sampler,
        bias,
        c,
        seed,
        demos: demos.poses().to_vec(),
        chain,
        counts_all,
        counts,
        metrics,
        chain_hash,
        duration_secs: started.elapsed().as_secs_f64(),
    }
}

/// One full run of the combined sampler.
///
/// Draw order on the run's single generator: demo generation, sketch,
/// `burn_in` Kameleon steps, subsample freeze, then the combined steps.
/// The chain starts at the first demonstrated grasp.
pub fn run_single(config: &ExperimentConfig, bias: Bias, c: f64, seed: u64) -> Result<RunReport> {
    let started = Instant::now();
    let err = wrap(bias, c, seed);
    let shipped = config.shipped_target().map_err(&err)?;
    let target = shipped.target.as_ref();
    let kp = config.kameleon_params(c).map_err(&err)?;
    let dp = config.darting_params();
    let mut rng = seeded(seed);
    let demos = demos_for(config, &shipped, &mut rng).map_err(&err)?;
    let rw = config.rw_params().map_err(&err)?;
    let sketch = build_sketch(target, &demos, bias, config.sketch_size, &rw, &mut rng).map_err(&err)?;
    let mut state = ChainState::new(demos.poses()[0], sketch.poses(), config.burn_in, target);
    let mut chain = Vec::with_capacity(config.burn_in + config.iterations);
    for i in 0..config.burn_in {
        let s = kameleon_step(&mut state, target, &kp, &mut rng).map_err(&err)?;
        chain.push(ChainRecord { iter: i, pose: state.current, log_quality: state.current_log_density, accepted: s.accepted, branch: Branch::Kameleon });
    }
    state.freeze(kp.n, &mut rng);
    let regions = build_regions(&demos, state.history(), &dp).map_err(&err)?;
    for i in 0..config.iterations {
        let s = combined_step(&mut state, target, &regions, &kp, &dp, &mut rng).map_err(&err)?;
        chain.push(ChainRecord {
            iter: config.burn_in + i,
            pose: state.current,
            log_quality: state.current_log_density,
            accepted: s.accepted,
            branch: s.branch,
        });
    }
    Ok(finish(config, target, SamplerKind::Combined, bias, c, seed, &demos, chain, started))
}

/// Random-walk MH from the first demonstrated grasp for `burn_in + iterations` steps.
/// No sketch is involved; the report carries the impartial label.
pub fn run_baseline(config: &ExperimentConfig, seed: u64) -> Result<RunReport> {
    let started = Instant::now();
    let err = wrap(Bias::Impartial, 0.0, seed);
    let shipped = config.shipped_target().map_err(&err)?;
    let target = shipped.target.as_ref();
    let rw = config.rw_params().map_err(&err)?;
    let mut rng = seeded(seed);
    let demos = demos_for(config, &shipped, &mut rng).map_err(&err)?;
    let mut walker = RwChain::start(demos.poses()[0], target);
    let total = config.burn_in + config.iterations;
    let chain = (0..total)
        .map(|i| {
            let s = rw_step(&mut walker, target, &rw, &mut rng, None);
            ChainRecord { iter: i, pose: walker.current, log_quality: walker.log_density, accepted: s.accepted, branch: Branch::RandomWalk }
        })
        .collect();
    Ok(finish(config, target, SamplerKind::RandomWalk, Bias::Impartial, 0.0, seed, &demos, chain, started))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub bias: Bias,
    pub c: f64,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug)]
pub struct MatrixOutcome {
    pub reports: Vec<RunReport>,
    pub failures: Vec<RunFailure>,
    pub aggregate: Vec<AggregateRow>,
    pub output_dir: PathBuf,
}

/// Every bias level x c value x seed, in that nesting order.
pub fn matrix_cells(config: &ExperimentConfig) -> Vec<(Bias, f64, u64)> {
    let cs = config.sweep.values();
    let mut cells = Vec::new();
    for &b in &config.biases {
        for &c in &cs {
            for &s in &config.seeds {
                cells.push((b, c, s));
            }
        }
    }
    cells
}

/// Runs the matrix in parallel and writes reports, chains and summaries
/// under `config.output_dir`. Failed runs are collected, not fatal.
pub fn run_matrix(config: &ExperimentConfig) -> Result<MatrixOutcome> {
    run_matrix_in(config, &config.output_dir, workers_from_env())
}

pub fn run_matrix_in(config: &ExperimentConfig, out: &Path, workers: Option<usize>) -> Result<MatrixOutcome> {
    config.validate()?;
    io::ensure_dir(out)?;
    let cells = matrix_cells(config);
    let work = || {
        cells
            .par_iter()
            .map(|&(bias, c, seed)| {
                let report = run_single(config, bias, c, seed)?;
                io::write_run(&report, out)?;
                Ok(report)
            })
            .collect::<Vec<Result<RunReport>>>()
    };
    let results = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config { key: crate::harness::config::WORKERS_ENV.into(), reason: e.to_string() })?
            .install(work),
        None => work(),
    };
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (r, &(bias, c, seed)) in results.into_iter().zip(&cells) {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => failures.push(RunFailure { bias, c, seed, error: e.to_string() }),
        }
    }
    let metrics: Vec<RunMetrics> = reports.iter().map(|r| r.metrics.clone()).collect();
    let rows = aggregate(&metrics);
    io::write_summaries(&metrics, &rows, out)?;
    io::write_failures(&failures, out)?;
    Ok(MatrixOutcome { reports, failures, aggregate: rows, output_dir: out.to_path_buf() })
}

/// Re-aggregates the run reports saved under `dir`, rewriting the summaries.
pub fn report_dir(dir: &Path) -> Result<(Vec<RunMetrics>, Vec<AggregateRow>)> {
    let mut metrics: Vec<RunMetrics> = io::read_reports(dir)?.into_iter().map(|r| r.metrics).collect();
    metrics.sort_by(|a, b| a.bias.cmp(&b.bias).then(a.c_value.total_cmp(&b.c_value)).then(a.seed.cmp(&b.seed)));
    let rows = aggregate(&metrics);
    io::write_summaries(&metrics, &rows, dir)?;
    Ok((metrics, rows))
}
