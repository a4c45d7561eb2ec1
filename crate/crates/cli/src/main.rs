use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use vocalmatch::audio_io::{read_wav, write_wav, WavEncoding};
use vocalmatch::bench::{self, ExperimentConfig};
use vocalmatch::features::ReprKind;
use vocalmatch::inversion::{match_static, match_windowed, MatchTask, WindowedConfig};
use vocalmatch::optimizers::{Method, OptimizerConfig, StopCriteria};
use vocalmatch::quality::stoi;
use vocalmatch::vocal_tract::{synthesize_static, synthesize_trajectory, ParamTrajectory, SynthConfig, TractParams};
use vocalmatch::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_FAILED_CELLS: u8 = 3;

#[derive(Parser)]
#[command(name = "vocalmatch", version, about = "Vocal tract synthesis and parameter matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render controls or a keyframe trajectory to a WAV file.
    Synth(SynthArgs),
    /// Write random-control clips and a manifest.
    Dataset {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
    },
    /// Recover the controls of a target WAV.
    Match(MatchArgs),
    /// Run an experiment grid from a JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Intelligibility of a degraded clip against a reference.
    Stoi {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        deg: PathBuf,
    },
    /// Render plots from a report CSV.
    Report {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        plots_dir: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// JSON object with the eight controls.
    #[arg(long, conflicts_with = "trajectory", required_unless_present = "trajectory")]
    params: Option<PathBuf>,
    /// JSON object with a `keyframes` list of `{time_s, params}`.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write 16-bit PCM instead of 32-bit float.
    #[arg(long)]
    pcm16: bool,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long, default_value = "multiscale")]
    repr: ReprKind,
    #[arg(long, default_value = "ga")]
    method: Method,
    #[arg(long)]
    windowed: bool,
    #[arg(long, default_value_t = 100.0)]
    window_ms: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    max_evals: usize,
    /// JSON result file; the summary is printed either way.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> vocalmatch::Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> vocalmatch::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    std::fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn synth(a: &SynthArgs) -> vocalmatch::Result<()> {
    let cfg = SynthConfig::with_seed(a.seed);
    let clip = match (&a.params, &a.trajectory) {
        (Some(p), _) => synthesize_static(&read_json::<TractParams>(p)?, a.duration, &cfg)?,
        (_, Some(t)) => synthesize_trajectory(&read_json::<ParamTrajectory>(t)?, a.duration, &cfg)?,
        _ => unreachable!("clap requires one source"),
    };
    let encoding = if a.pcm16 {
        WavEncoding::Pcm16
    } else {
        WavEncoding::Float32
    };
    let clipped = write_wav(&a.out, &clip, encoding)?;
    println!(
        "wrote {} samples to {} ({clipped} clipped)",
        clip.len(),
        a.out.display()
    );
    Ok(())
}

fn run_match(a: &MatchArgs) -> vocalmatch::Result<()> {
    let target = read_wav(&a.target)?;
    let task = MatchTask {
        stop: StopCriteria::with_budget(a.max_evals),
        synth: SynthConfig::with_seed(a.seed),
        ..MatchTask::new(target, a.repr, OptimizerConfig::new(a.method, a.seed))
    };
    let value = if a.windowed {
        let cfg = WindowedConfig {
            window_ms: a.window_ms,
            ..WindowedConfig::default()
        };
        let r = match_windowed(&task, &cfg)?;
        let evals: usize = r.windows.iter().map(|w| w.optimization.n_evals).sum();
        println!("{} windows, {evals} evaluations", r.windows.len());
        json!({
            "method": a.method,
            "representation": a.repr,
            "window_ms": a.window_ms,
            "window_centers_s": r.window_centers_s,
            "raw": r.raw,
            "smoothed": r.smoothed,
            "clamped": r.clamped,
            "window_costs": r.windows.iter().map(|w| w.optimization.best_cost).collect::<Vec<_>>(),
            "n_evals": evals,
        })
    } else {
        let r = match_static(&task)?;
        let o = &r.optimization;
        println!(
            "cost {:.6e} after {} evaluations ({}), audio MAE {:.6}",
            o.best_cost, o.n_evals, o.stop_reason, r.audio_mae
        );
        println!("{}", serde_json::to_string(&r.estimate).expect("params serialize"));
        json!({
            "method": a.method,
            "representation": a.repr,
            "estimate": r.estimate,
            "best_cost": o.best_cost,
            "n_evals": o.n_evals,
            "n_iterations": o.n_iterations,
            "elapsed_s": o.elapsed_s,
            "stop_reason": o.stop_reason,
            "audio_mae": r.audio_mae,
            "history": o.history,
        })
    };
    if let Some(out) = &a.out {
        write_json(out, &value)?;
    }
    Ok(())
}

fn run_bench(config: &Path, out_dir: &Path) -> vocalmatch::Result<usize> {
    let cfg = ExperimentConfig::load(config)?;
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let report = bench::run_experiment(&cfg)?;
    let csv = out_dir.join("report.csv");
    bench::write_report(&report, &csv)?;
    let plots = bench::render_plots(&report, out_dir.join("plots"))?;
    println!(
        "{} rows written to {}, {} plots",
        report.rows.len(),
        csv.display(),
        plots.len()
    );
    Ok(report.failed_count())
}

fn run(cli: Cli) -> vocalmatch::Result<u8> {
    match cli.command {
        Command::Synth(a) => synth(&a)?,
        Command::Dataset { n, seed, out, duration } => {
            let m = bench::generate_dataset_with_duration(n, seed, &out, duration)?;
            println!("{} clips in {}", m.entries.len(), out.display());
        }
        Command::Match(a) => run_match(&a)?,
        Command::Bench { config, out_dir } => {
            let failed = run_bench(&config, &out_dir)?;
            if failed > 0 {
                eprintln!("{failed} grid cells failed");
                return Ok(EXIT_FAILED_CELLS);
            }
        }
        Command::Stoi { reference, deg } => {
            let score = stoi(&read_wav(&reference)?, &read_wav(&deg)?)?;
            println!("{:.6}", score.value);
        }
        Command::Report { csv, plots_dir } => {
            let report = bench::read_report(&csv)?;
            for p in bench::render_plots(&report, &plots_dir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { EXIT_IO } else { EXIT_USAGE })
        }
    }
}
