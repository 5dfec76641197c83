use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use bwsolve::spectral_core::RegularityLadder;
use bwsolve_cli::commands::{self, SweepAxis};
use bwsolve_cli::config::{Integrator, RunConfig, SuiteName, SystemSource};
use bwsolve_cli::{class_name, exit_code, EXIT_OK, EXIT_VERIFICATION_FAILED};

#[derive(Parser)]
#[command(name = "bwsolve", version, about = "Quasilinear beam-wave solver on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write manifest.json and CSV time series.
    Simulate(RunArgs),
    /// Run an invariant suite and write report.json; exit 1 if any check fails.
    Verify {
        suite: SuiteName,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run one child per value in parallel and write an aggregated CSV.
    Sweep {
        axis: SweepAxis,
        /// Comma-separated values (at least two).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Built-in systems.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List preset names and descriptions.
    List {
        #[arg(long)]
        json: bool,
    },
}

/// Flags mirror the RunConfig fields and override values from `--config`.
#[derive(Args, Default)]
struct RunArgs {
    /// JSON RunConfig file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "system_file")]
    preset: Option<String>,
    /// JSON system document.
    #[arg(long)]
    system_file: Option<PathBuf>,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    eps_para: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    cfl_safety: Option<f64>,
    #[arg(long)]
    kato_tol: Option<f64>,
    #[arg(long)]
    kato_max_iter: Option<usize>,
    #[arg(long)]
    rebuild_every: Option<usize>,
    #[arg(long)]
    monitor_every: Option<usize>,
    /// Base index s₀ of the regularity ladder (requires --s).
    #[arg(long, requires = "s")]
    s0: Option<f64>,
    /// Top index s of the regularity ladder (requires --s0).
    #[arg(long, requires = "s0")]
    s: Option<f64>,
    /// H^{s₁} norm of the initial data.
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    integrator: Option<Integrator>,
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

impl RunArgs {
    fn resolve(&self) -> bwsolve::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(name) = &self.preset {
            c.system = SystemSource::Preset { name: name.clone() };
        }
        if let Some(path) = &self.system_file {
            c.system = SystemSource::File { path: path.clone() };
        }
        macro_rules! set {
            ($($flag:ident => $field:expr),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { $field = v; })*
            };
        }
        set!(
            n_points => c.n_points,
            eps_para => c.eps_para,
            t_final => c.solver.t_final,
            epsilon => c.solver.epsilon,
            cfl_safety => c.solver.cfl_safety,
            kato_tol => c.solver.kato_tol,
            kato_max_iter => c.solver.kato_max_iter,
            rebuild_every => c.solver.rebuild_every,
            monitor_every => c.solver.monitor_every,
            integrator => c.integrator,
            n_list => c.n_list,
            samples => c.samples,
            seed => c.seed,
        );
        if let Some(dt) = self.dt {
            c.solver.dt = Some(dt);
        }
        if let Some(a) = self.amplitude {
            c.data.amplitude = Some(a);
        }
        if let Some(d) = &self.output_dir {
            c.output_dir = Some(d.clone());
        }
        if let (Some(s0), Some(s)) = (self.s0, self.s) {
            c.solver.ladder =
                RegularityLadder::new(s0, s).map_err(|e| bwsolve::Error::Config(e.to_string()))?;
        }
        Ok(c)
    }
}

fn fail(err: &bwsolve::Error) -> ExitCode {
    let doc = json!({"error": {"class": class_name(err), "cause": err.cause(), "message": err.to_string()}});
    eprintln!("{doc}");
    ExitCode::from(exit_code(err) as u8)
}

fn execute(cli: Cli) -> Result<i32, bwsolve::Error> {
    let print = |args: &RunArgs| -> Result<Option<RunConfig>, bwsolve::Error> {
        let c = args.resolve()?;
        if args.print_config {
            println!("{}", c.to_json());
            return Ok(None);
        }
        Ok(Some(c))
    };
    match cli.command {
        Command::Simulate(args) => {
            let Some(mut cfg) = print(&args)? else { return Ok(EXIT_OK) };
            cfg.suite = None;
            let out = commands::simulate(&cfg)?;
            let r = &out.result;
            println!(
                "simulate ok: {} steps, dt {:e}, final H^s1 norm {:e}, {} Kato sweeps -> {}",
                r.n_steps,
                r.dt,
                r.norm_s1.last().copied().unwrap_or(f64::NAN),
                r.kato_increments.len(),
                out.dir.display()
            );
            Ok(EXIT_OK)
        }
        Command::Verify { suite, run } => {
            let Some(mut cfg) = print(&run)? else { return Ok(EXIT_OK) };
            cfg.suite = Some(suite);
            let out = commands::verify(&cfg, suite)?;
            for c in &out.report.checks {
                println!("{} {} = {:e} ({})", if c.pass { "ok  " } else { "FAIL" }, c.name, c.value, c.bound);
            }
            println!(
                "verify {}: {} -> {}",
                out.report.suite,
                if out.report.passed { "passed" } else { "FAILED" },
                out.dir.display()
            );
            Ok(if out.report.passed { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
        }
        Command::Sweep { axis, values, run } => {
            let Some(cfg) = print(&run)? else { return Ok(EXIT_OK) };
            let out = commands::sweep(&cfg, axis, &values)?;
            for r in out.rows.iter().filter(|r| r.value == "all") {
                println!("{} {} = {:?} ({})", r.axis, r.metric, r.result, r.status);
            }
            println!("sweep {}: {} values, {} failed -> {}", axis.name(), values.len(), out.failures.len(), out.dir.display());
            Ok(match out.failures.first() {
                Some((v, e)) => {
                    eprintln!("value {v} failed: {e}");
                    exit_code(e)
                }
                None => EXIT_OK,
            })
        }
        Command::Preset {
            action: PresetAction::List { json },
        } => {
            let list = commands::preset_list();
            if json {
                let doc: Vec<_> = list.iter().map(|(n, d)| json!({"name": n, "description": d})).collect();
                println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
            } else {
                for (n, d) in list {
                    println!("{n:<18} {d}");
                }
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => fail(&e),
    }
}
