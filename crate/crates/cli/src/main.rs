use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use radial_qec::analysis::{
    confinement_profile_with_limit, estimate_distance, DEFAULT_ENUMERATION_LIMIT,
};
use radial_qec::circuits::{memory_experiment, validate_circuit, Circuit};
use radial_qec::classical::{AMatrix, ClassicalRadialCode};
use radial_qec::decoder::{evaluate_shot, BpConfig, OsdConfig, WindowConfig, WindowDecoder};
use radial_qec::harness::{
    iteration_sweep, run_benchmark_with, write_csv, write_sweep_csv, BenchmarkConfig, BenchmarkResult,
    CodeSource, RunOptions,
};
use radial_qec::noise::{apply_noise, build_dem, sample, DetectorErrorModel, NoiseModel, ShotTable};
use radial_qec::quantum::{Basis, RadialCssCode};
use radial_qec::Error;

#[derive(Parser)]
#[command(name = "radial-qec", version, about = "Quantum radial codes: construction, analysis, circuits and decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build classical or quantum radial codes and write their matrices.
    #[command(subcommand)]
    Construct(Construct),
    /// Distance and confinement analysis.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Write the noiseless memory-experiment circuit.
    Circuit {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 15)]
        cycles: usize,
        #[arg(long, default_value = "z")]
        basis: Basis,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add noise to a circuit and extract its detector error model.
    Dem {
        #[arg(long)]
        circuit: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample detector and observable outcomes of a noisy circuit.
    Simulate {
        #[arg(long)]
        circuit: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bit-packed detector table.
        #[arg(long)]
        out: PathBuf,
        /// Bit-packed observable table.
        #[arg(long)]
        obs_out: Option<PathBuf>,
    },
    /// Decode a detector table with the overlapping-window decoder.
    Decode {
        #[arg(long)]
        dem: PathBuf,
        #[arg(long)]
        shots: PathBuf,
        /// Observable table; adds per-shot failure flags to the output.
        #[arg(long)]
        obs: Option<PathBuf>,
        #[command(flatten)]
        decoder: DecoderArgs,
        /// Accepted for symmetry with the other commands; decoding is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Memory benchmark: sample, decode and report word error rates.
    Bench {
        #[command(flatten)]
        bench: BenchArgs,
        /// Physical error rates, comma separated.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        /// Cycle counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        cycles: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Full results with the configuration echoed.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// One benchmark per BP iteration cap, with OSD-0.
    SweepIters {
        #[command(flatten)]
        bench: BenchArgs,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        cycles: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        iters: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum Construct {
    /// Check an exponent matrix and optionally write its parity-check matrix.
    Classical {
        #[arg(long)]
        a_file: PathBuf,
        /// Destination of the binary parity-check matrix (alist).
        #[arg(long)]
        emit_pcm: Option<PathBuf>,
    },
    /// Lifted product of two classical codes.
    Quantum {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Sector {
    X,
    Z,
    Both,
}

#[derive(Subcommand)]
enum Analyze {
    /// Randomised minimum-distance estimate.
    Distance {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Error type whose logical weight is estimated.
        #[arg(long, value_enum, default_value_t = Sector::Both)]
        sector: Sector,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum syndrome weight of irreducible errors by error weight.
    Confinement {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 4)]
        wmax: usize,
        /// Error type: `x` errors are seen by Z checks.
        #[arg(long, default_value = "x")]
        sector: Basis,
        /// Cap on enumerated errors.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
        limit: u128,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct CodeArgs {
    #[arg(long, conflicts_with_all = ["a1", "a2"])]
    preset: Option<String>,
    /// Exponent matrix of the first classical code (JSON).
    #[arg(long, requires = "a2")]
    a1: Option<PathBuf>,
    #[arg(long, requires = "a1")]
    a2: Option<PathBuf>,
}

impl CodeArgs {
    fn source(&self) -> anyhow::Result<Option<CodeSource>> {
        Ok(match (&self.preset, &self.a1, &self.a2) {
            (Some(name), _, _) => Some(CodeSource::Preset { preset: name.clone() }),
            (None, Some(a1), Some(a2)) => Some(CodeSource::Matrices { a1: read_a(a1)?, a2: read_a(a2)? }),
            _ => None,
        })
    }

    fn build(&self) -> anyhow::Result<RadialCssCode> {
        match self.source()? {
            Some(src) => Ok(src.build()?),
            None => Err(Error::InvalidInput("give --preset or both --a1 and --a2".into()).into()),
        }
    }
}

#[derive(Args, Clone)]
struct NoiseArgs {
    /// Rate for every noise location unless overridden below.
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    #[arg(long)]
    p_idle: Option<f64>,
    #[arg(long)]
    p_cx: Option<f64>,
    #[arg(long)]
    p_reset: Option<f64>,
    #[arg(long)]
    p_meas: Option<f64>,
}

impl NoiseArgs {
    fn model(&self) -> NoiseModel {
        NoiseModel {
            p_idle: self.p_idle.unwrap_or(self.p),
            p_cx: self.p_cx.unwrap_or(self.p),
            p_reset: self.p_reset.unwrap_or(self.p),
            p_meas: self.p_meas.unwrap_or(self.p),
        }
    }
}

#[derive(Args, Clone)]
struct DecoderArgs {
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    commit: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// `osd0` or `csN`.
    #[arg(long)]
    osd: Option<OsdConfig>,
    /// Min-sum normalisation factor.
    #[arg(long)]
    scaling: Option<f64>,
}

impl DecoderArgs {
    fn apply(&self, window: &mut WindowConfig, bp: &mut BpConfig, osd: &mut OsdConfig) {
        if let Some(w) = self.window {
            window.w = w;
        }
        if let Some(c) = self.commit {
            window.c = c;
        }
        if let Some(m) = self.max_iter {
            bp.max_iter = m;
        }
        if let Some(s) = self.scaling {
            bp.scaling = s;
        }
        if let Some(o) = self.osd {
            *osd = o;
        }
    }
}

#[derive(Args, Clone)]
struct BenchArgs {
    /// JSON configuration; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    basis: Option<Basis>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    decoder: DecoderArgs,
    /// Worker threads (default: RADIAL_QEC_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl BenchArgs {
    fn base_config(&self) -> anyhow::Result<BenchmarkConfig> {
        let mut config = match &self.config {
            Some(path) => BenchmarkConfig::from_json(&read(path)?)?,
            None => BenchmarkConfig::preset("qr_90_8_10", 0.0, 15, 1000),
        };
        if let Some(src) = self.code.source()? {
            config.code = src;
        }
        if let Some(s) = self.shots {
            config.shots = s;
        }
        if let Some(b) = self.basis {
            config.basis = b;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        self.decoder.apply(&mut config.window, &mut config.bp, &mut config.osd);
        Ok(config)
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_a(path: &Path) -> anyhow::Result<AMatrix> {
    Ok(AMatrix::from_json_str(&read(path)?)?)
}

fn read_circuit(path: &Path) -> anyhow::Result<Circuit> {
    Ok(Circuit::from_text(&read(path)?)?)
}

fn read_table(path: &Path) -> anyhow::Result<ShotTable> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(ShotTable::read_from(std::io::BufReader::new(f))?)
}

fn write_table(path: &Path, table: &ShotTable) -> anyhow::Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::new(f);
    table.write_to(&mut w)?;
    Ok(())
}

fn stop_flag() -> Arc<AtomicBool> {
    let flag = Arc::new(AtomicBool::new(false));
    let handler = Arc::clone(&flag);
    // a second handler cannot be installed; later runs just go without one
    let _ = ctrlc::set_handler(move || handler.store(true, Ordering::Relaxed));
    flag
}

fn construct_quantum(code: &RadialCssCode, out: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out)?;
    for (name, m) in [("hx", code.hx()), ("hz", code.hz())] {
        write(&out.join(format!("{name}.alist")), m.to_alist_string())?;
        write(&out.join(format!("{name}.json")), serde_json::to_string(&m.to_json())?)?;
    }
    let mut coords = String::from("index,kind,c,u,v\n");
    for q in 0..code.n() {
        let c = code.qubit_coordinate(q);
        coords.push_str(&format!("{q},{},{},{},{}\n", c.kind.label(), c.c, c.u, c.v));
    }
    write(&out.join("coordinates.csv"), coords)?;
    let supports = |ls: &[radial_qec::gf2::BinaryVector]| ls.iter().map(|l| l.support()).collect::<Vec<_>>();
    let logicals = serde_json::json!({
        "x": supports(code.logical_x()),
        "z": supports(code.logical_z()),
    });
    write(&out.join("logicals.json"), serde_json::to_string_pretty(&logicals)?)?;
    println!("n = {}, k = {}, written to {}", code.n(), code.k(), out.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Construct(Construct::Classical { a_file, emit_pcm }) => {
            let code = ClassicalRadialCode::new(read_a(&a_file)?);
            println!("{}", serde_json::to_string_pretty(&code.report())?);
            if let Some(path) = emit_pcm {
                write(&path, code.pcm().to_alist_string())?;
            }
            if !code.report().is_valid() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Construct(Construct::Quantum { code, out }) => construct_quantum(&code.build()?, &out)?,
        Command::Analyze(Analyze::Distance { code, trials, seed, sector, out }) => {
            let code = code.build()?;
            let sectors = match sector {
                Sector::X => vec![Basis::X],
                Sector::Z => vec![Basis::Z],
                Sector::Both => vec![Basis::X, Basis::Z],
            };
            let estimates = sectors
                .into_iter()
                .map(|b| estimate_distance(&code, b, trials, seed))
                .collect::<Result<Vec<_>, _>>()?;
            let text = serde_json::to_string_pretty(&estimates)?;
            match out {
                Some(path) => write(&path, &text)?,
                None => println!("{text}"),
            }
        }
        Command::Analyze(Analyze::Confinement { code, wmax, sector, limit, csv, out }) => {
            let profile = confinement_profile_with_limit(&code.build()?, sector, wmax, limit)?;
            if let Some(path) = csv {
                write(&path, profile.to_csv())?;
            }
            let text = serde_json::to_string_pretty(&profile)?;
            match out {
                Some(path) => write(&path, &text)?,
                None => println!("{text}"),
            }
        }
        Command::Circuit { code, cycles, basis, out } => {
            let circuit = memory_experiment(&code.build()?, basis, cycles)?;
            let stats = validate_circuit(&circuit)?;
            write(&out, circuit.to_text())?;
            println!(
                "{} qubits, {} timesteps, {} CX gates, {} detectors",
                circuit.n_qubits,
                stats.timesteps,
                stats.cx_gates,
                circuit.n_detectors()
            );
        }
        Command::Dem { circuit, noise, out } => {
            let noisy = apply_noise(&read_circuit(&circuit)?, &noise.model())?;
            let dem = build_dem(&noisy)?;
            write(&out, dem.to_json()?)?;
            println!("{} detectors, {} mechanisms, {} rounds", dem.n_detectors, dem.mechanisms.len(), dem.rounds);
        }
        Command::Simulate { circuit, noise, shots, seed, out, obs_out } => {
            let noisy = apply_noise(&read_circuit(&circuit)?, &noise.model())?;
            let samples = sample(&noisy, shots, seed)?;
            write_table(&out, &samples.detectors)?;
            if let Some(path) = obs_out {
                write_table(&path, &samples.observables)?;
            }
        }
        Command::Decode { dem, shots, obs, decoder, seed: _, out } => {
            let dem = DetectorErrorModel::from_json(&read(&dem)?)?;
            let dets = read_table(&shots)?;
            if dets.bits() != dem.n_detectors {
                bail!(Error::DimensionMismatch(format!(
                    "shot table has {} detectors, model has {}",
                    dets.bits(),
                    dem.n_detectors
                )));
            }
            let obs = obs.map(|p| read_table(&p)).transpose()?;
            let (mut window, mut bp, mut osd) = (WindowConfig::default(), BpConfig::default(), OsdConfig::default());
            decoder.apply(&mut window, &mut bp, &mut osd);
            let dec = WindowDecoder::new(&dem, window, bp, osd)?;
            let mut text = String::from(if obs.is_some() { "shot,prediction,failed\n" } else { "shot,prediction\n" });
            let mut failures = 0;
            for shot in 0..dets.shots() {
                let correction = dec.decode(&dets.row(shot))?;
                let zero = radial_qec::gf2::BinaryVector::zeros(dem.n_observables);
                let prediction = evaluate_shot(&dem, &correction, &zero);
                text.push_str(&format!("{shot},{}", prediction.to_bit_string()));
                if let Some(obs) = &obs {
                    let failed = prediction != obs.row(shot);
                    failures += failed as usize;
                    text.push_str(&format!(",{}", failed as u8));
                }
                text.push('\n');
            }
            write(&out, text)?;
            if obs.is_some() {
                println!("{failures} word failures in {} shots", dets.shots());
            }
        }
        Command::Bench { bench, p, cycles, out, json } => {
            let base = bench.base_config()?;
            let ps = if p.is_empty() { vec![base.p] } else { p };
            let cycles = if cycles.is_empty() { vec![base.cycles] } else { cycles };
            let stop = stop_flag();
            let options = RunOptions { threads: bench.threads, stop: Some(&stop) };
            let mut results: Vec<BenchmarkResult> = Vec::new();
            let mut complete = true;
            'outer: for &p in &ps {
                for &c in &cycles {
                    let config = BenchmarkConfig { p, cycles: c, ..base.clone() };
                    let r = run_benchmark_with(&config, options)?;
                    eprintln!(
                        "p = {p:e}, cycles = {c}: {} / {} failures, per-cycle {:.3e} ({:.1} s)",
                        r.failures, r.shots, r.wer_per_cycle, r.wall_clock_s
                    );
                    complete &= r.complete;
                    results.push(r);
                    // keep the table current so long sweeps leave usable output
                    write_results(&out, json.as_deref(), &results)?;
                    if !complete {
                        break 'outer;
                    }
                }
            }
            if !complete {
                eprintln!("interrupted: partial results written, last row marked incomplete in the JSON");
                return Ok(ExitCode::from(130));
            }
        }
        Command::SweepIters { bench, p, cycles, iters, out } => {
            let mut config = bench.base_config()?;
            if let Some(p) = p {
                config.p = p;
            }
            if let Some(c) = cycles {
                config.cycles = c;
            }
            let stop = stop_flag();
            let rows = iteration_sweep(&config, &iters, RunOptions { threads: bench.threads, stop: Some(&stop) })?;
            let f = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_sweep_csv(&rows, f)?;
            for (it, r) in &rows {
                eprintln!("max_iter = {it}: {} / {} failures", r.failures, r.shots);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_results(csv: &Path, json: Option<&Path>, results: &[BenchmarkResult]) -> anyhow::Result<()> {
    let rows: Vec<_> = results.iter().map(|r| r.csv_row()).collect();
    let f = fs::File::create(csv).with_context(|| format!("creating {}", csv.display()))?;
    write_csv(&rows, f)?;
    if let Some(path) = json {
        write(path, serde_json::to_string_pretty(results)?)?;
    }
    Ok(())
}

/// 2 for bad input or configuration, 3 for an exceeded analysis budget.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded { .. }) => 3,
        Some(Error::Io(_)) | None => 1,
        Some(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
