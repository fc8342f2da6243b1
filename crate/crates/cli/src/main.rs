use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use efqse::analysis::shot_sweep;
use efqse::config::{Pt2Config, RunConfig, SystemConfig};
use efqse::fixtures;
use efqse::forging::Preparation;
use efqse::pipeline::{barrier, oracle_energy, run_pipeline, PipelineFailure, Report};
use efqse::simcore::{count_resources, HopLayout};
use efqse::tomography::TomographyOptions;
use efqse::Error;

#[derive(Parser)]
#[command(name = "efqse", version, about = "Entanglement-forged VQE, tomography, subspace expansion and PT2")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: VQE, tomography, purification, QSE, PT2.
    Run(RunArgs),
    /// Forged VQE only.
    Vqe(RunArgs),
    /// VQE followed by subspace expansion.
    Qse(RunArgs),
    /// VQE, QSE and PT2 (needs a [pt2] section or --full-fcidump).
    Pt2(Pt2Args),
    /// Pearson correlation of sampled Bloch vectors versus shots.
    Sweep(SweepArgs),
    /// Qubit, gate and circuit counts.
    Resources(ResourceArgs),
    /// Exact ground state of the configured system.
    Oracle(RunArgs),
    /// Activation barrier from a transition-state and reactant runs.
    Barrier(BarrierArgs),
    /// Write the bundled FCIDUMP fixtures and example configs.
    Fixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Hamiltonian file (instead of a config).
    #[arg(long, conflicts_with = "fixture")]
    fcidump: Option<PathBuf>,
    /// Bundled fixture name (instead of a config).
    #[arg(long)]
    fixture: Option<String>,
    /// Shots per measurement basis (0 = exact).
    #[arg(long)]
    shots: Option<usize>,
    /// Exact (infinite-shot) mode.
    #[arg(long, conflicts_with = "shots")]
    exact: bool,
    /// Base seed for tomography and optimizer restarts.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of tomography repetitions.
    #[arg(long)]
    samples: Option<usize>,
    /// Number of bitstrings K.
    #[arg(long, short = 'k')]
    bitstrings: Option<usize>,
    /// Overlap eigenvalue cutoff for the subspace solve.
    #[arg(long)]
    qse_cutoff: Option<f64>,
    /// Output directory for report.json, timings.json and traces.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Pt2Args {
    #[command(flatten)]
    run: RunArgs,
    /// Full-space Hamiltonian file.
    #[arg(long)]
    full_fcidump: Option<PathBuf>,
    /// Full-space bundled fixture.
    #[arg(long, conflicts_with = "full_fcidump")]
    full_fixture: Option<String>,
    #[arg(long, default_value_t = 0)]
    n_core: usize,
    #[arg(long)]
    n_active: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Ascending shot counts.
    #[arg(long, value_delimiter = ',', default_value = "100,250,500,1000,2500,5000,10000")]
    shot_grid: Vec<usize>,
    /// Number of seeds per grid point.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
}

#[derive(Args)]
struct ResourceArgs {
    /// Register sizes.
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8")]
    qubits: Vec<usize>,
    #[arg(long, short = 'k', default_value_t = 2)]
    bitstrings: usize,
    /// Hop count (default per register size).
    #[arg(long)]
    hops: Option<usize>,
}

#[derive(Args)]
struct BarrierArgs {
    /// Transition-state config.
    #[arg(long)]
    ts: PathBuf,
    /// Reactant configs (repeat the flag).
    #[arg(long, required = true)]
    reactant: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Core(Error),
    Pipeline(PipelineFailure),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

impl From<PipelineFailure> for Failure {
    fn from(e: PipelineFailure) -> Self {
        Failure::Pipeline(e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn load_config(a: &RunArgs) -> CliResult<RunConfig> {
    let mut cfg = match (&a.config, &a.fcidump, &a.fixture) {
        (Some(path), None, None) => RunConfig::load(path)?,
        (None, fcidump, fixture) if fcidump.is_some() || fixture.is_some() => {
            RunConfig::for_system(SystemConfig { fcidump: fcidump.clone(), fixture: fixture.clone() })
        }
        (Some(_), _, _) => return Err(Error::Config("--config cannot be combined with --fcidump/--fixture".into()).into()),
        _ => return Err(Error::Config("give --config, --fcidump or --fixture".into()).into()),
    };
    if let Some(s) = a.shots {
        cfg.tomography.shots = s;
    }
    if a.exact {
        cfg.tomography.shots = 0;
    }
    if let Some(seed) = a.seed {
        cfg.tomography.seed = seed;
        cfg.optimizer.seed = seed;
    }
    if let Some(n) = a.samples {
        cfg.tomography.n_samples = n;
    }
    if let Some(k) = a.bitstrings {
        cfg.ansatz.n_bitstrings = k;
        cfg.ansatz.bitstrings = None;
    }
    if let Some(c) = a.qse_cutoff {
        cfg.qse.cutoff = Some(c);
    }
    if let Some(out) = &a.out {
        cfg.output.dir = Some(out.clone());
    }
    Ok(cfg)
}

fn write_out(dir: Option<&Path>, name: &str, contents: &str) -> CliResult<()> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

fn emit_report(cfg: &RunConfig, report: &Report) -> CliResult<()> {
    let json = report.to_json()?;
    let dir = cfg.output.dir.as_deref();
    write_out(dir, "report.json", &json)?;
    write_out(dir, "timings.json", &report.timings_json()?)?;
    if let (Some(dir), Some(vqe)) = (dir, &report.vqe_result) {
        vqe.write_trace_csv(std::fs::File::create(dir.join("vqe_trace.csv"))?)?;
    }
    emit(&json)
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(text: &str) -> CliResult<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn pipeline(cfg: RunConfig) -> CliResult<()> {
    let run = cfg.prepare()?;
    match run_pipeline(&run) {
        Ok(report) => emit_report(&cfg, &report),
        Err(failure) => {
            if let Ok(json) = failure.partial.to_json() {
                write_out(cfg.output.dir.as_deref(), "partial_report.json", &json)?;
                eprintln!("partial report:\n{json}");
            }
            Err(failure.into())
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(a) => pipeline(load_config(&a)?),
        Command::Vqe(a) => {
            let mut cfg = load_config(&a)?;
            cfg.qse.enabled = false;
            cfg.tomography.shots = 0;
            cfg.pt2 = None;
            pipeline(cfg)
        }
        Command::Qse(a) => {
            let mut cfg = load_config(&a)?;
            cfg.qse.enabled = true;
            cfg.pt2 = None;
            pipeline(cfg)
        }
        Command::Pt2(a) => {
            let mut cfg = load_config(&a.run)?;
            if a.full_fcidump.is_some() || a.full_fixture.is_some() {
                let n_active = a
                    .n_active
                    .ok_or_else(|| Error::Config("--n-active is required with a full-space Hamiltonian".into()))?;
                cfg.pt2 = Some(Pt2Config {
                    full: SystemConfig { fcidump: a.full_fcidump.clone(), fixture: a.full_fixture.clone() },
                    n_core: a.n_core,
                    n_active,
                    degeneracy_threshold: efqse::pt2::DEGENERACY_THRESHOLD,
                });
            }
            if cfg.pt2.is_none() {
                return Err(Error::Config("pt2 needs a [pt2] config section or --full-fcidump/--full-fixture".into()).into());
            }
            pipeline(cfg)
        }
        Command::Sweep(a) => {
            let mut cfg = load_config(&a.run)?;
            cfg.qse.enabled = false;
            cfg.tomography.shots = 0;
            cfg.pt2 = None;
            let run = cfg.prepare()?;
            let report = run_pipeline(&run)?;
            let ansatz = &report.vqe_result.as_ref().expect("vqe stage ran").ansatz;
            let preps = Preparation::all(ansatz.n_bitstrings());
            let seeds: Vec<u64> = (0..a.seeds).map(|i| efqse::rng::derive_seed(cfg.tomography.seed, i)).collect();
            let opts = TomographyOptions { bit_flip: cfg.tomography.bit_flip };
            let res = shot_sweep(ansatz, &preps, &a.shot_grid, &seeds, &opts)?;
            let mut buf = Vec::new();
            res.write_csv(&mut buf)?;
            let csv = String::from_utf8(buf).expect("csv is utf-8");
            write_out(cfg.output.dir.as_deref(), "sweep.csv", &csv)?;
            let summary = serde_json::json!({
                "plateaus": res.plateaus.iter().map(|(l, p)| (l.clone(), p.to_string())).collect::<std::collections::BTreeMap<_, _>>(),
                "mean_r": preps.iter().map(|p| (p.label(), res.mean_curve(&p.label()))).collect::<std::collections::BTreeMap<_, _>>(),
            });
            write_out(cfg.output.dir.as_deref(), "sweep_summary.json", &serde_json::to_string_pretty(&summary).map_err(Error::from)?)?;
            emit(csv.trim_end())
        }
        Command::Resources(a) => {
            if a.bitstrings == 0 {
                return Err(Error::Config("--bitstrings must be at least 1".into()).into());
            }
            let rows = a
                .qubits
                .iter()
                .map(|&n| {
                    let layout = match a.hops {
                        Some(h) => HopLayout::brick_wall(n, h)?,
                        None => HopLayout::default_for(n),
                    };
                    Ok(count_resources(&layout, a.bitstrings))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            emit(&serde_json::to_string_pretty(&rows).map_err(Error::from)?)
        }
        Command::Oracle(a) => {
            let cfg = load_config(&a)?;
            let run = cfg.prepare()?;
            let (energy, ci) = oracle_energy(&run)?;
            let json = serde_json::json!({
                "system": cfg.system.label(),
                "energy": energy,
                "dimension": ci.len(),
                "ci_vector": ci.to_json(),
            });
            let text = serde_json::to_string_pretty(&json).map_err(Error::from)?;
            write_out(cfg.output.dir.as_deref(), "oracle.json", &text)?;
            emit(&text)
        }
        Command::Barrier(a) => {
            let run_one = |path: &Path| -> CliResult<Report> {
                let run = RunConfig::load(path)?.prepare()?;
                Ok(run_pipeline(&run)?)
            };
            // validate every config before computing anything
            RunConfig::load(&a.ts)?.prepare()?;
            for r in &a.reactant {
                RunConfig::load(r)?.prepare()?;
            }
            let ts = run_one(&a.ts)?;
            let reactants = a.reactant.iter().map(|p| run_one(p)).collect::<CliResult<Vec<_>>>()?;
            let rows = barrier(&ts, &reactants)?;
            let text = serde_json::to_string_pretty(&rows).map_err(Error::from)?;
            write_out(a.out.as_deref(), "barrier.json", &text)?;
            emit(&text)
        }
        Command::Fixtures { out } => {
            for path in fixtures::write_bundled(&out)? {
                emit(&path.display().to_string())?;
            }
            for (name, text) in example_configs() {
                let path = out.join(name);
                std::fs::write(&path, text)?;
                emit(&path.display().to_string())?;
            }
            Ok(())
        }
    }
}

fn example_configs() -> Vec<(&'static str, String)> {
    let exact = |fcidump: &str, k: usize| {
        format!("[system]\nfcidump = \"{fcidump}\"\n\n[ansatz]\nn_bitstrings = {k}\n")
    };
    vec![
        ("ethylene_exact.toml", exact("ethylene_2e2o.fcidump", 2)),
        ("butadiene_exact.toml", exact("butadiene_4e4o.fcidump", 2)),
        ("hexatriene_exact.toml", exact("hexatriene_6e6o.fcidump", 2)),
        ("ts_6e6o_exact.toml", exact("ts_6e6o.fcidump", 2)),
        ("ts_6e6o_k3.toml", exact("ts_6e6o.fcidump", 3)),
        (
            "butadiene_sampled.toml",
            "name = \"butadiene sampled\"\n\n[system]\nfcidump = \"butadiene_4e4o.fcidump\"\n\n[tomography]\nshots = 1024\nseed = 7\nn_samples = 20\n"
                .to_string(),
        ),
        (
            "butadiene_pt2.toml",
            "name = \"butadiene 2-orbital window with PT2\"\n\n[system]\nfcidump = \"butadiene_4o_2act_active.fcidump\"\n\n[tomography]\nshots = 1024\nseed = 3\nn_samples = 10\n\n[pt2]\nfull = { fcidump = \"butadiene_4e4o.fcidump\" }\nn_core = 1\nn_active = 2\n"
                .to_string(),
        ),
        (
            "hexatriene_pt2.toml",
            "[system]\nfcidump = \"hexatriene_6o_4act_active.fcidump\"\n\n[pt2]\nfull = { fcidump = \"hexatriene_6e6o.fcidump\" }\nn_core = 1\nn_active = 4\n"
                .to_string(),
        ),
    ]
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let error = match &failure {
                Failure::Core(e) => e,
                Failure::Pipeline(p) => &p.error,
            };
            eprintln!("error: {error}");
            ExitCode::from(if error.is_config_error() { 2 } else { 3 })
        }
    }
}
