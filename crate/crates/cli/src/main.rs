use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tensorlite::demo::{self, DemoConfig, Task};
use tensorlite::gradcheck::suite::run_suite;
use tensorlite::gradcheck::Tolerances;
use tensorlite::optim::OptimizerKind;
use tensorlite::parallel::{thread_limit, THREADS_ENV};

mod bench;

/// Exit status when a check or threshold fails. Usage errors exit with 2.
const FAILED: u8 = 1;

#[derive(Parser)]
#[command(name = "tensorlite", version, about = "Gradient checks, training demos and kernel benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every analytic pullback against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Train a small model and print the loss log.
    Demo(DemoArgs),
    /// Time elementwise, reduction and matmul kernels.
    Bench(OutArg),
}

#[derive(Args)]
struct OutArg {
    /// Write output to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Run only this case or op family (e.g. matmul, div_broadcast).
    #[arg(long)]
    only: Option<String>,
    #[arg(long, default_value_t = 1e-2)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-3)]
    atol: f64,
    /// Finite-difference step, scaled by max(1, |θ|).
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// First of three consecutive seeds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Xor,
    Blobs,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
    Rmsprop,
}

#[derive(Args)]
struct DemoArgs {
    task: TaskArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of updates [default: xor 5000, blobs 200].
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate [default: xor 0.5, blobs 0.01].
    #[arg(long)]
    lr: Option<f32>,
    /// [default: xor sgd, blobs adam]
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerArg>,
    #[command(flatten)]
    out: OutArg,
}

fn open_output(out: &OutArg) -> io::Result<Box<dyn Write>> {
    Ok(match &out.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn gradcheck(args: GradcheckArgs) -> io::Result<ExitCode> {
    let tol = Tolerances {
        rtol: args.rtol,
        atol: args.atol,
        eps: args.eps,
    };
    let seeds: Vec<u64> = (0..3).map(|i| args.seed.wrapping_add(i)).collect();
    let report = match run_suite(args.only.as_deref(), &seeds, tol) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    let mut w = open_output(&args.out)?;
    writeln!(w, "{report}")?;
    w.flush()?;
    if report.pass() {
        return Ok(ExitCode::SUCCESS);
    }
    for e in report.failures() {
        match &e.outcome {
            Ok(r) => {
                for p in r.params.iter().filter(|p| !p.pass) {
                    eprintln!("FAIL {} seed {}: {}", e.case, e.seed, p);
                }
            }
            Err(err) => eprintln!("FAIL {} seed {}: {err}", e.case, e.seed),
        }
    }
    Ok(ExitCode::from(FAILED))
}

fn demo(args: DemoArgs) -> io::Result<ExitCode> {
    let task = match args.task {
        TaskArg::Xor => Task::Xor,
        TaskArg::Blobs => Task::Blobs,
    };
    let mut config = DemoConfig::new(task);
    config.seed = args.seed;
    if let Some(e) = args.epochs {
        config.epochs = e;
    }
    if let Some(lr) = args.lr {
        config.lr = lr;
    }
    if let Some(o) = args.optimizer {
        config.optimizer = match o {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Adam => OptimizerKind::Adam,
            OptimizerArg::Rmsprop => OptimizerKind::RmsProp,
        };
    }

    let mut w = open_output(&args.out)?;
    let mut write_err = None;
    let result = demo::run(config, |r| {
        if write_err.is_none() {
            write_err = writeln!(w, "{r}").err();
        }
    });
    if let Some(e) = write_err {
        return Err(e);
    }
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            w.flush()?;
            eprintln!("error: {e}");
            return Ok(ExitCode::from(FAILED));
        }
    };
    writeln!(w, "{}", outcome.summary())?;
    w.flush()?;
    if config.threshold_applies() && !outcome.threshold_met() {
        let what = match task {
            Task::Xor => format!("final mse {} is not below 0.05", outcome.final_loss()),
            Task::Blobs => format!("accuracy {} is below 0.95", outcome.accuracy),
        };
        eprintln!("threshold missed: {what}");
        return Ok(ExitCode::from(FAILED));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gradcheck(a) => gradcheck(a),
        Command::Demo(a) => demo(a),
        Command::Bench(a) => open_output(&a).and_then(|mut w| {
            writeln!(w, "# threads: multi={} ({THREADS_ENV} caps it)", thread_limit())?;
            bench::run(&mut w)?;
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(FAILED)
    })
}
