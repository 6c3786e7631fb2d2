use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use padic_nn::cli::{self, ExperimentConfig};
use padic_nn::encoding::SampleMode;
use padic_nn::{Characteristic, LayerKind};

#[derive(Parser)]
#[command(
    name = "padic-nn",
    version,
    about = "p-adic deep neural network experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the base-p digits of x in [0, 1].
    Encode {
        x: f64,
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, default_value_t = 16)]
        depth: usize,
    },
    /// Sample a builtin function on the cells of a level and write test-function JSON.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Cell level; defaults to L + delta.
        #[arg(long)]
        level: Option<u32>,
        /// Sub-samples per cell for cell averages; 0 samples left endpoints.
        #[arg(long, default_value_t = 0)]
        average: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the constructive network and report its errors and robustness radii.
    Approx {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        reference_level: Option<u32>,
    },
    /// Train a random network by mini-batch gradient descent.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        /// euclidean or haar
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        init_scale: Option<f64>,
    },
    /// Walsh coefficients of the target and the truncation-error table.
    Walsh {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_level: Option<u32>,
        /// theta, gamma or raw
        #[arg(long)]
        basis: Option<String>,
    },
    /// Direct product of constructive networks, or approximation on disjoint charts.
    Product {
        #[command(flatten)]
        common: Common,
        /// Comma-separated targets, one network each.
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<String>>,
        /// Charts as center:N, e.g. 0:1 (repeatable).
        #[arg(long)]
        chart: Option<Vec<String>>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<u32>,
    /// pos or zero
    #[arg(long = "char")]
    characteristic: Option<Characteristic>,
    #[arg(short = 'L', long = "input-level")]
    input_level: Option<u32>,
    #[arg(long)]
    delta: Option<u32>,
    #[arg(short = 'M', long = "bound")]
    bound: Option<f64>,
    /// dense or conv
    #[arg(long)]
    kind: Option<LayerKind>,
    /// Builtin (sin2pi, absaw, step, poly:c0,c1,...) or test-function JSON path.
    #[arg(long)]
    target: Option<String>,
    /// Norms to report, e.g. 1,2,inf.
    #[arg(long, value_delimiter = ',')]
    norms: Option<Vec<String>>,
    /// Directory for written artifacts.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

impl Common {
    fn config(
        &self,
        extra: impl FnOnce(&mut ExperimentConfig),
    ) -> anyhow::Result<ExperimentConfig> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let mut flags = ExperimentConfig::default();
        flags.field.p = self.p;
        flags.field.characteristic = self.characteristic;
        flags.network.input_level = self.input_level;
        flags.network.delta = self.delta;
        flags.network.bound = self.bound;
        flags.network.kind = self.kind;
        flags.target = self.target.clone();
        flags.norms = self.norms.clone();
        extra(&mut flags);
        Ok(base.overlay(flags))
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    cli::write_artifact(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Encode { x, p, depth } => {
            print!("{}", cli::cmd_encode(x, p, depth)?);
        }
        Command::Sample {
            common,
            level,
            average,
            out,
        } => {
            let settings = common.config(|_| {})?.resolve()?;
            let mode = if average == 0 {
                SampleMode::LeftEndpoint
            } else {
                SampleMode::CellAverage(average)
            };
            let json = cli::cmd_sample(&settings, level.unwrap_or(settings.output_level()), mode)?;
            match out {
                Some(path) => cli::write_artifact(&path, &json)?,
                None => println!("{json}"),
            }
        }
        Command::Approx {
            common,
            epsilon,
            reference_level,
        } => {
            let settings = common
                .config(|c| {
                    c.approx.epsilon = epsilon;
                    c.approx.reference_level = reference_level;
                })?
                .resolve()?;
            let out = cli::cmd_approx(&settings)?;
            write(&common.out_dir, "model.json", &out.model_json)?;
            let report = out.report_json()?;
            write(&common.out_dir, "approx_report.json", &report)?;
            println!("{report}");
        }
        Command::Train {
            common,
            epochs,
            batch,
            eta,
            seed,
            samples,
            metric,
            init_scale,
        } => {
            let settings = common
                .config(|c| {
                    c.training.epochs = epochs;
                    c.training.batch = batch;
                    c.training.eta = eta;
                    c.training.seed = seed;
                    c.training.samples = samples;
                    c.training.metric = metric;
                    c.network.init_scale = init_scale;
                })?
                .resolve()?;
            let out = cli::cmd_train(&settings)?;
            write(&common.out_dir, "model.json", &out.model_json)?;
            write(&common.out_dir, "costs.csv", &out.cost_csv)?;
            println!(
                "initial cost {:.6e}, final cost {:.6e}",
                out.initial_cost, out.final_cost
            );
            if !out.improved() {
                eprintln!("training did not lower the cost");
            }
            return Ok(out.exit_code());
        }
        Command::Walsh {
            common,
            max_level,
            basis,
        } => {
            let settings = common
                .config(|c| {
                    c.walsh.max_level = max_level;
                    c.walsh.basis = basis;
                })?
                .resolve()?;
            let out = cli::cmd_walsh(&settings)?;
            write(
                &common.out_dir,
                "walsh_coefficients.csv",
                &out.coefficients_csv,
            )?;
            write(&common.out_dir, "walsh_truncation.csv", &out.truncation_csv)?;
            print!("{}", out.truncation_csv);
        }
        Command::Product {
            common,
            targets,
            chart,
            epsilon,
        } => {
            let settings = common
                .config(|c| {
                    c.product.targets = targets;
                    c.product.charts = chart;
                    c.approx.epsilon = epsilon;
                })?
                .resolve()?;
            let out = cli::cmd_product(&settings)?;
            write(&common.out_dir, "bundle.json", &out.bundle_json)?;
            let report = out.report_json()?;
            write(&common.out_dir, "product_report.json", &report)?;
            println!("{report}");
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args.command).context("padic-nn failed") {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<padic_nn::Error>()
                .map(padic_nn::Error::exit_code)
                .unwrap_or(2);
            ExitCode::from(code)
        }
    }
}
