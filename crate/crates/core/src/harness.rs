//! Monte Carlo memory benchmarks, their statistics and result files.

use std::io::{Read, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{memory_experiment, Circuit};
use crate::classical::AMatrix;
use crate::decoder::{evaluate_shot, BpConfig, OsdConfig, WindowConfig, WindowDecoder};
use crate::noise::{apply_noise, build_dem, sample_range, DetectorErrorModel, NoiseModel, Program};
use crate::quantum::{lifted_product, preset, Basis, RadialCssCode};
use crate::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

/// Shots handed to one worker task.
pub const BATCH_SHOTS: usize = 10_000;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "RADIAL_QEC_THREADS";

/// Where the code comes from: a named preset or two exponent matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeSource {
    Preset { preset: String },
    Matrices { a1: AMatrix, a2: AMatrix },
}

impl CodeSource {
    pub fn build(&self) -> Result<RadialCssCode> {
        match self {
            Self::Preset { preset: name } => preset(name),
            Self::Matrices { a1, a2 } => lifted_product(a1, a2),
        }
    }
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(flatten)]
    pub code: CodeSource,
    /// Physical error rate applied to all four noise locations.
    pub p: f64,
    /// Per-location rates, overriding `p` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    pub cycles: usize,
    pub shots: usize,
    #[serde(default = "default_basis")]
    pub basis: Basis,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub bp: BpConfig,
    #[serde(default)]
    pub osd: OsdConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_basis() -> Basis {
    Basis::Z
}

impl BenchmarkConfig {
    pub fn preset(name: &str, p: f64, cycles: usize, shots: usize) -> Self {
        Self {
            version: CONFIG_VERSION,
            code: CodeSource::Preset { preset: name.to_string() },
            p,
            noise: None,
            cycles,
            shots,
            basis: Basis::Z,
            window: WindowConfig::default(),
            bp: BpConfig::default(),
            osd: OsdConfig::default(),
            seed: 0,
        }
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise.unwrap_or_else(|| NoiseModel::uniform(self.p))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::InvalidInput(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.shots == 0 {
            return Err(Error::InvalidInput("shots must be at least 1".into()));
        }
        if self.cycles == 0 {
            return Err(Error::InvalidInput("cycles must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&self.p) {
            return Err(Error::InvalidInput(format!("p = {} is outside [0, 0.5)", self.p)));
        }
        self.noise_model().validate()?;
        self.window.validate()?;
        self.bp.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

/// Everything a benchmark derives from its config before sampling.
pub struct Pipeline {
    pub code: RadialCssCode,
    pub circuit: Circuit,
    pub program: Program,
    pub dem: DetectorErrorModel,
}

impl Pipeline {
    pub fn new(config: &BenchmarkConfig) -> Result<Self> {
        config.validate()?;
        let code = config.code.build()?;
        let circuit = apply_noise(&memory_experiment(&code, config.basis, config.cycles)?, &config.noise_model())?;
        let program = Program::new(&circuit)?;
        let dem = build_dem(&circuit)?;
        Ok(Self { code, circuit, program, dem })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceIntervals {
    /// Wilson score interval at 95 %.
    pub wilson: Interval,
    /// Rates whose likelihood is within a factor 1000 of the maximum.
    pub likelihood: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub config: BenchmarkConfig,
    pub shots: u64,
    pub failures: u64,
    pub observable_failures: Vec<u64>,
    pub wer: f64,
    pub wer_per_cycle: f64,
    /// Set when every shot failed and the per-cycle rate is pinned to 1.
    pub saturated: bool,
    pub intervals: ConfidenceIntervals,
    pub wall_clock_s: f64,
    /// False when the run stopped before all shots were decoded.
    pub complete: bool,
}

impl BenchmarkResult {
    fn new(config: &BenchmarkConfig, tally: Tally, wall_clock_s: f64, complete: bool) -> Self {
        let shots = tally.shots.max(1);
        let wer = tally.failures as f64 / shots as f64;
        let (wer_per_cycle, saturated) = per_cycle_rate(wer, config.cycles);
        Self {
            config: config.clone(),
            shots: tally.shots,
            failures: tally.failures,
            observable_failures: tally.observables,
            wer,
            wer_per_cycle,
            saturated,
            intervals: confidence_interval(tally.failures, shots),
            wall_clock_s,
            complete,
        }
    }

    pub fn csv_row(&self) -> CsvRow {
        CsvRow {
            p: self.config.p,
            cycles: self.config.cycles,
            shots: self.shots,
            failures: self.failures,
            wer: self.wer,
            wer_per_cycle: self.wer_per_cycle,
            wilson_lo: self.intervals.wilson.lo,
            wilson_hi: self.intervals.wilson.hi,
            lik_lo: self.intervals.likelihood.lo,
            lik_hi: self.intervals.likelihood.hi,
            seed: self.config.seed,
        }
    }

    /// Standard error of the word error rate.
    pub fn stderr(&self) -> f64 {
        (self.wer * (1.0 - self.wer) / self.shots.max(1) as f64).sqrt()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Tally {
    shots: u64,
    failures: u64,
    observables: Vec<u64>,
}

impl Tally {
    fn merge(mut self, other: Self) -> Self {
        self.shots += other.shots;
        self.failures += other.failures;
        if self.observables.len() < other.observables.len() {
            self.observables.resize(other.observables.len(), 0);
        }
        for (a, b) in self.observables.iter_mut().zip(other.observables) {
            *a += b;
        }
        self
    }
}

/// Worker count from `RADIAL_QEC_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions<'a> {
    /// Worker count; falls back to `RADIAL_QEC_THREADS`, then to rayon's default.
    pub threads: Option<usize>,
    /// Checked between shots; when set the run stops and reports a partial result.
    pub stop: Option<&'a AtomicBool>,
}

pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkResult> {
    run_benchmark_with(config, RunOptions::default())
}

pub fn run_benchmark_with(config: &BenchmarkConfig, options: RunOptions<'_>) -> Result<BenchmarkResult> {
    let pipeline = Pipeline::new(config)?;
    run_pipeline(&pipeline, config, options)
}

/// Samples and decodes `config.shots` shots on an already built pipeline.
/// Outcomes depend only on the config and seed, not on the worker count.
pub fn run_pipeline(pipeline: &Pipeline, config: &BenchmarkConfig, options: RunOptions<'_>) -> Result<BenchmarkResult> {
    let start = Instant::now();
    let decoder = WindowDecoder::new(&pipeline.dem, config.window, config.bp, config.osd)?;
    let n_obs = pipeline.dem.n_observables;
    let stopped = AtomicBool::new(false);
    let should_stop = || options.stop.is_some_and(|s| s.load(Ordering::Relaxed));

    let batch = |b: usize| -> Result<Tally> {
        let first = b * BATCH_SHOTS;
        let count = BATCH_SHOTS.min(config.shots - first);
        let samples = sample_range(&pipeline.program, first, count, config.seed);
        let mut tally = Tally { observables: vec![0; n_obs], ..Tally::default() };
        for shot in 0..count {
            if should_stop() {
                stopped.store(true, Ordering::Relaxed);
                break;
            }
            let correction = decoder.decode(&samples.detectors.row(shot))?;
            let fail = evaluate_shot(&pipeline.dem, &correction, &samples.observables.row(shot));
            tally.shots += 1;
            tally.failures += !fail.is_zero() as u64;
            for o in fail.iter_ones() {
                tally.observables[o] += 1;
            }
        }
        Ok(tally)
    };
    let batches = config.shots.div_ceil(BATCH_SHOTS);
    let run = || -> Result<Tally> {
        (0..batches)
            .into_par_iter()
            .map(batch)
            .try_reduce(|| Tally { observables: vec![0; n_obs], ..Tally::default() }, |a, b| Ok(a.merge(b)))
    };
    let tally = match options.threads.or_else(threads_from_env) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let complete = !stopped.load(Ordering::Relaxed) && tally.shots == config.shots as u64;
    Ok(BenchmarkResult::new(config, tally, start.elapsed().as_secs_f64(), complete))
}

/// `1 - (1 - P)^(1 / cycles)`, with a saturation flag when `P = 1`.
pub fn per_cycle_rate(p_total: f64, cycles: usize) -> (f64, bool) {
    if p_total >= 1.0 {
        return (1.0, true);
    }
    (1.0 - (1.0 - p_total).powf(1.0 / cycles.max(1) as f64), false)
}

/// Per-cycle rate of `k` independent single-logical patches decoded over
/// `rounds` cycles: `1 - (1 - P)^(k / rounds)`.
pub fn rescale_multi_patch(p_single: f64, k: usize, rounds: usize) -> f64 {
    1.0 - (1.0 - p_single).powf(k as f64 / rounds as f64)
}

pub fn wilson_interval(failures: u64, shots: u64, z: f64) -> Interval {
    let n = shots as f64;
    let phat = failures as f64 / n;
    let z2 = z * z;
    let centre = (phat + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    Interval {
        lo: if failures == 0 { 0.0 } else { (centre - half).max(0.0) },
        hi: if failures == shots { 1.0 } else { (centre + half).min(1.0) },
    }
}

/// Rates `q` with `L(q) >= L(max) / factor` under the binomial likelihood.
pub fn likelihood_interval(failures: u64, shots: u64, factor: f64) -> Interval {
    let (f, n) = (failures as f64, shots as f64);
    let phat = f / n;
    let ll = |q: f64| {
        let a = if f > 0.0 { f * q.ln() } else { 0.0 };
        let b = if n - f > 0.0 { (n - f) * (1.0 - q).ln() } else { 0.0 };
        a + b
    };
    let target = ll(phat) - factor.ln();
    // ll is increasing below phat and decreasing above it
    let bisect = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if ll(mid) >= target {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    Interval {
        lo: if failures == 0 { 0.0 } else { bisect(phat, 0.0) },
        hi: if failures == shots { 1.0 } else { bisect(phat, 1.0) },
    }
}

pub fn confidence_interval(failures: u64, shots: u64) -> ConfidenceIntervals {
    ConfidenceIntervals {
        wilson: wilson_interval(failures, shots, 1.959_963_984_540_054),
        likelihood: likelihood_interval(failures, shots, 1000.0),
    }
}

/// One benchmark per iteration cap, all with the same seed and OSD-0.
pub fn iteration_sweep(config: &BenchmarkConfig, iters: &[usize], options: RunOptions<'_>) -> Result<Vec<(usize, BenchmarkResult)>> {
    let mut base = config.clone();
    base.osd = OsdConfig::order0();
    let pipeline = Pipeline::new(&base)?;
    iters
        .iter()
        .map(|&max_iter| {
            let mut c = base.clone();
            c.bp.max_iter = max_iter;
            c.validate()?;
            Ok((max_iter, run_pipeline(&pipeline, &c, options)?))
        })
        .collect()
}

/// One line of the results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub p: f64,
    pub cycles: usize,
    pub shots: u64,
    pub failures: u64,
    pub wer: f64,
    pub wer_per_cycle: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub lik_lo: f64,
    pub lik_hi: f64,
    pub seed: u64,
}

pub fn write_csv<W: Write>(rows: &[CsvRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<CsvRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(csv_error))
        .collect()
}

/// Iteration sweep table: the results columns preceded by `max_iter`.
pub fn write_sweep_csv<W: Write>(rows: &[(usize, BenchmarkResult)], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record([
        "max_iter", "p", "cycles", "shots", "failures", "wer", "wer_per_cycle", "wilson_lo", "wilson_hi", "lik_lo",
        "lik_hi", "seed",
    ])
    .map_err(csv_error)?;
    for (max_iter, r) in rows {
        out.serialize((max_iter, r.csv_row())).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Least-squares line through `(x, y)`: slope, intercept and R².
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

/// First `p` where the curve `rate(p)` crosses the diagonal `rate = p`,
/// interpolated linearly in log-log coordinates. `None` if it never does.
pub fn pseudo_threshold(ps: &[f64], rates: &[f64]) -> Option<f64> {
    let g: Vec<f64> = ps.iter().zip(rates).map(|(&p, &r)| (r.max(f64::MIN_POSITIVE) / p).ln()).collect();
    if g.first() == Some(&0.0) {
        return Some(ps[0]);
    }
    (0..ps.len().saturating_sub(1)).find_map(|i| {
        (g[i] < 0.0 && g[i + 1] >= 0.0).then(|| {
            let t = g[i] / (g[i] - g[i + 1]);
            let (a, b) = (ps[i].ln(), ps[i + 1].ln());
            (a + t * (b - a)).exp()
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_cycle_examples() {
        assert_eq!(per_cycle_rate(0.0, 7), (0.0, false));
        assert!((per_cycle_rate(0.3, 1).0 - 0.3).abs() < 1e-15);
        assert!((per_cycle_rate(0.19, 2).0 - 0.1).abs() < 1e-12);
        assert_eq!(per_cycle_rate(1.0, 3), (1.0, true));
    }

    #[test]
    fn multi_patch_examples() {
        assert_eq!(rescale_multi_patch(0.0, 8, 30), 0.0);
        assert!((rescale_multi_patch(0.2, 9, 9) - 0.2).abs() < 1e-15);
        assert!((rescale_multi_patch(0.271, 8, 24) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn interval_edges() {
        let ci = confidence_interval(0, 100);
        assert_eq!((ci.wilson.lo, ci.likelihood.lo), (0.0, 0.0));
        let ci = confidence_interval(100, 100);
        assert_eq!((ci.wilson.hi, ci.likelihood.hi), (1.0, 1.0));
        let ci = confidence_interval(10, 1000);
        assert!(ci.likelihood.contains(0.01) && ci.wilson.contains(0.01));
        assert!(ci.likelihood.lo < ci.wilson.lo && ci.likelihood.hi > ci.wilson.hi);
    }

    #[test]
    fn fits() {
        let (m, c, r2) = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((m - 2.0).abs() < 1e-12 && (c - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        let t = pseudo_threshold(&[1e-3, 1e-2], &[1e-4, 1e-1]).unwrap();
        assert!((t - 10f64.powf(-2.5)).abs() < 1e-12);
        assert_eq!(pseudo_threshold(&[1e-3, 1e-2], &[1e-4, 1e-3]), None);
    }
}
