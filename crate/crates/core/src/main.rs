use clap::{Args, Parser, Subcommand};
use ldg_imex::harness::{run_convergence, run_efficiency, run_single, RunConfig};
use ldg_imex::treatment::write_trace_csv;
use ldg_imex::{Error, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ldg-imex", version, about = "IMEX LDG solver with stage boundary treatment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Errors and observed orders over a sequence of meshes.
    Convergence(Common),
    /// Wall time of naive and treated runs per level.
    Efficiency {
        #[command(flatten)]
        common: Common,
        /// Paired naive/treated samples per level; the overhead is their median ratio.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// One mesh level with an error profile dump.
    Single {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Also dump the final nodal field.
        #[arg(long)]
        field: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// File of `key = value` lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    tableau: Option<String>,
    /// naive | treated
    #[arg(long)]
    bc: Option<String>,
    /// alg1 | alg2
    #[arg(long)]
    alg: Option<String>,
    /// Comma-separated N values.
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    cfl: Option<f64>,
    /// width | wave | dg-wave
    #[arg(long)]
    step_rule: Option<String>,
    #[arg(long = "T")]
    final_time: Option<f64>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of naive and treated stage boundary values.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    parallel: bool,
}

impl Common {
    fn into_config(self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            c.apply_file_text(&std::fs::read_to_string(path)?)?;
        }
        let pairs = [
            ("problem", self.problem),
            ("tableau", self.tableau),
            ("bc", self.bc),
            ("alg", self.alg),
            ("levels", self.levels),
            ("step_rule", self.step_rule),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                c.set(k, &v)?;
            }
        }
        c.cfl = self.cfl.or(c.cfl);
        c.final_time = self.final_time.or(c.final_time);
        c.degree = self.degree.or(c.degree);
        c.out = self.out.or(c.out);
        c.trace = self.trace.or(c.trace);
        c.parallel |= self.parallel;
        c.validate()?;
        Ok(c)
    }
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convergence(common) => {
            let cfg = common.into_config()?;
            let report = run_convergence(&cfg)?;
            emit(&report.to_csv(true), cfg.out.as_deref())
        }
        Command::Efficiency { common, repeats } => {
            let cfg = common.into_config()?;
            let report = run_efficiency(&cfg, repeats)?;
            for (n, o) in report.overheads() {
                eprintln!("N={n}: treated overhead {:+.1}%", 100.0 * o);
            }
            emit(&report.to_csv(), cfg.out.as_deref())
        }
        Command::Single {
            common,
            n,
            profile,
            field,
        } => {
            let cfg = common.into_config()?;
            let single = run_single(&cfg, n)?;
            if let Some(nm) = single.run.norms {
                eprintln!("N={n}: L1 {:.6e}  L2 {:.6e}  Linf {:.6e}", nm.l1, nm.l2, nm.linf);
            }
            if let Some(p) = &profile {
                std::fs::write(p, single.profile_csv())?;
            }
            if let Some(p) = &field {
                single.run.field.write_csv(std::fs::File::create(p)?)?;
            }
            if let (Some(p), Some(rows)) = (&cfg.trace, &single.run.trace) {
                let two_d = single.run.field.space.dim() == ldg_imex::mesh::Dimension::Two;
                write_trace_csv(rows, two_d, std::fs::File::create(p)?)?;
            }
            let nm = single.run.norms;
            let line = match nm {
                Some(nm) => format!(
                    "N,l1_error,l2_error,linf_error,steps\n{n},{:.6e},{:.6e},{:.6e},{}\n",
                    nm.l1, nm.l2, nm.linf, single.run.stats.steps
                ),
                None => format!("N,steps\n{n},{}\n", single.run.stats.steps),
            };
            emit(&line, cfg.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidArgument(_) | Error::Io(_) | Error::Unsupported(_) => {
                    ExitCode::from(1)
                }
                _ => ExitCode::from(2),
            }
        }
    }
}
