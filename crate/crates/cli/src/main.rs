use std::fs;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nanosyn::crossbar::Snapshot;
use nanosyn::data::{generate_synthetic_cochleagrams, save_cochleagram};
use nanosyn::SyntheticSpec;
use nanosyn_cli::{
    load_config, run_baseline_onelayer, run_experiment, run_sweep, write_outputs, CliError,
    CliResult, ExperimentConfig, MetricsRecord, SweepAxis, SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "nanosyn",
    version,
    about = "Two-crossbar spatio-temporal learning simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate the two-layer system.
    Run {
        #[command(flatten)]
        common: Common,
        /// Re-run the config embedded in a metrics file; other options are ignored.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Run a parameter sweep and write a CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        /// Sweep CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for per-run metrics JSON.
        #[arg(long)]
        metrics_dir: Option<PathBuf>,
    },
    /// Train the readout directly on time-integrated inputs.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// Integrate every frame of every channel (mask density 1).
        #[arg(long)]
        uniform: bool,
    },
    /// Write a synthetic cochleagram container.
    GenSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 350)]
        train: usize,
    },
    /// Summarize a crossbar snapshot CSV.
    InspectCrossbar { path: PathBuf },
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set seeds.masks=9`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
    #[arg(long)]
    cochleagram: Option<PathBuf>,
    #[arg(long)]
    hidden_size: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    /// Readout device dispersion; 0 means perfect devices.
    #[arg(long)]
    sigma: Option<f64>,
    /// Spike-encode the input.
    #[arg(long)]
    spiking: bool,
    /// Spike flip probability; implies --spiking.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    log_interval: Option<usize>,
    /// Derive every seed from this one value.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train_limit: Option<usize>,
    #[arg(long)]
    test_limit: Option<usize>,
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    trace_csv: Option<PathBuf>,
    #[arg(long)]
    energy_csv: Option<PathBuf>,
    #[arg(long)]
    readout_snapshot: Option<PathBuf>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn toml_str(p: &std::path::Path) -> String {
    toml::Value::String(p.display().to_string()).to_string()
}

impl Common {
    fn overrides(&self) -> Vec<String> {
        let mut o = Vec::new();
        let mut push = |k: &str, v: String| o.push(format!("{k}={v}"));
        if let Some(v) = &self.task {
            push("task", format!("\"{v}\""));
        }
        if let Some(v) = &self.mnist_dir {
            push("mnist_dir", toml_str(v));
        }
        if let Some(v) = &self.cochleagram {
            push("task", "\"cochleagram\"".into());
            push("cochleagram_path", toml_str(v));
        }
        if let Some(v) = self.hidden_size {
            push("hidden_size", v.to_string());
        }
        if let Some(v) = self.density {
            push("mask_density", format!("{v:?}"));
        }
        if let Some(v) = self.sigma {
            if v == 0.0 {
                push("device_mode.kind", "\"perfect\"".into());
            } else {
                push("device_mode.kind", "\"imperfect\"".into());
                push("device_mode.sigma", format!("{v:?}"));
            }
        }
        if self.spiking || self.noise.is_some() {
            push("input_mode.kind", "\"spiking\"".into());
            push(
                "input_mode.noise",
                format!("{:?}", self.noise.unwrap_or(0.0)),
            );
        }
        if let Some(v) = self.epochs {
            push("epochs", v.to_string());
        }
        if let Some(v) = self.log_interval {
            push("log_interval", v.to_string());
        }
        if let Some(v) = self.train_limit {
            push("train_limit", v.to_string());
        }
        if let Some(v) = self.test_limit {
            push("test_limit", v.to_string());
        }
        for (k, v) in [
            ("outputs.metrics", &self.metrics),
            ("outputs.trace_csv", &self.trace_csv),
            ("outputs.energy_csv", &self.energy_csv),
            ("outputs.readout_snapshot", &self.readout_snapshot),
        ] {
            if let Some(p) = v {
                push(k, toml_str(p));
            }
        }
        o.extend(self.sets.iter().cloned());
        o
    }

    fn config(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = load_config(self.config.as_deref(), &self.overrides())?;
        if let Some(s) = self.seed {
            cfg.seeds = nanosyn_cli::Seeds::from_base(s);
        }
        Ok(cfg)
    }
}

fn emit(record: &MetricsRecord) -> CliResult<()> {
    write_outputs(record)?;
    if record.config.outputs.metrics.is_none() {
        print!("{}", record.to_json());
    } else {
        eprintln!(
            "test accuracy {:.4}, {} pulses over {} samples",
            record.test_accuracy,
            record.pulses.total_pulses(),
            record.samples_seen
        );
    }
    Ok(())
}

fn inspect(path: &std::path::Path) -> CliResult<()> {
    let f = fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let s = Snapshot::read(BufReader::new(f))?;
    let n = s.weights.len().max(1) as f64;
    let mean = s.weights.iter().sum::<f64>() / n;
    let (min, max) = s
        .weights
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &w| {
            (a.min(w), b.max(w))
        });
    let top = s
        .pos_levels
        .iter()
        .chain(&s.neg_levels)
        .copied()
        .max()
        .unwrap_or(0);
    let at_zero = s
        .pos_levels
        .iter()
        .chain(&s.neg_levels)
        .filter(|&&l| l == 0)
        .count();
    let at_top = s
        .pos_levels
        .iter()
        .chain(&s.neg_levels)
        .filter(|&&l| l == top)
        .count();
    println!("rows {} cols {}", s.n_rows, s.n_cols);
    println!("weight mean {mean:.6e} min {min:.6e} max {max:.6e}");
    println!(
        "devices at level 0: {at_zero}; at level {top}: {at_top}; total {}",
        2 * s.weights.len()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { common, replay } => {
            let cfg = match replay {
                Some(p) => {
                    let text = fs::read_to_string(&p)
                        .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                    MetricsRecord::from_json(&text)?.config
                }
                None => common.config()?,
            };
            emit(&run_experiment(&cfg)?)
        }
        Command::Baseline { common, uniform } => {
            let mut cfg = common.config()?;
            if uniform {
                cfg.mask_density = 1.0;
            }
            emit(&run_baseline_onelayer(&cfg)?)
        }
        Command::Sweep {
            common,
            axis,
            values,
            repetitions,
            workers,
            out,
            metrics_dir,
        } => {
            let cfg = common.config()?;
            let spec = SweepSpec {
                axis,
                values,
                repetitions,
                workers,
                metrics_dir,
            };
            let result = run_sweep(&cfg, &spec)?;
            let csv = result.to_csv();
            match out {
                Some(p) => fs::write(&p, csv)
                    .map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?,
                None => print!("{csv}"),
            }
            if result.failures() > 0 {
                return Err(CliError::Runtime(format!(
                    "{} sweep points failed",
                    result.failures()
                )));
            }
            Ok(())
        }
        Command::GenSynthetic {
            out,
            seed,
            samples,
            train,
        } => {
            let spec = SyntheticSpec {
                n_samples: samples,
                n_train: train,
                ..SyntheticSpec::with_seed(seed)
            };
            let d = generate_synthetic_cochleagrams::<f32>(&spec)?;
            let all: Vec<_> = d.train.iter().chain(&d.test).cloned().collect();
            save_cochleagram(&out, spec.n_channels, &all)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
            eprintln!(
                "wrote {} samples ({} train) to {}",
                all.len(),
                d.train.len(),
                out.display()
            );
            Ok(())
        }
        Command::InspectCrossbar { path } => inspect(&path),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nanosyn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
