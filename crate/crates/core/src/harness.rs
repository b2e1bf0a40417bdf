//! Convergence studies, efficiency timing and single runs with CSV output.

use crate::error::{Error, Result};
use crate::field::{ErrorNorms, NodalField};
use crate::imex::{ImexSolver, ImexTableau, IntegrationStats, NaiveBoundary, StageBoundary, TimeStepRule};
use crate::mesh::{CartesianMesh, Dimension};
use crate::problem::{builtin_problem, ProblemSpec};
use crate::space::DgSpace;
use crate::treatment::{TraceRow, TreatedBoundary, TreatmentAlgorithm};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryMode {
    Naive,
    Treated,
}

impl BoundaryMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Self::Naive),
            "treated" => Ok(Self::Treated),
            _ => Err(Error::Config(format!("unknown boundary mode '{s}' (naive, treated)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Naive => "naive",
            Self::Treated => "treated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub tableau: String,
    pub mode: BoundaryMode,
    pub algorithm: TreatmentAlgorithm,
    pub levels: Vec<usize>,
    pub cfl: Option<f64>,
    pub step_rule: TimeStepRule,
    pub final_time: Option<f64>,
    /// Polynomial degree; defaults to the tableau order minus one.
    pub degree: Option<usize>,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    /// Run the levels of a convergence study on separate threads.
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "heat1d".into(),
            tableau: "ark3".into(),
            mode: BoundaryMode::Treated,
            algorithm: TreatmentAlgorithm::Staged,
            levels: vec![5, 10, 20, 40, 80, 160],
            cfl: None,
            step_rule: TimeStepRule::Width,
            final_time: None,
            degree: None,
            out: None,
            trace: None,
            parallel: false,
        }
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("'{key}' expects a number, got '{v}'")))
        };
        match key {
            "problem" => self.problem = value.to_string(),
            "tableau" => self.tableau = value.to_string(),
            "bc" => self.mode = BoundaryMode::parse(value)?,
            "alg" => self.algorithm = TreatmentAlgorithm::parse(value)?,
            "levels" => self.levels = parse_levels(value)?,
            "cfl" => self.cfl = Some(num(value)?),
            "step_rule" => self.step_rule = TimeStepRule::parse(value)?,
            "T" | "final_time" => self.final_time = Some(num(value)?),
            "degree" => {
                self.degree = Some(
                    value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad degree '{value}'")))?,
                )
            }
            "out" => self.out = Some(value.into()),
            "trace" => self.trace = Some(value.into()),
            "parallel" => {
                self.parallel = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad boolean '{value}'")))?
            }
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value", n + 1)));
            };
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Config("no levels given".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) || self.levels[0] == 0 {
            return Err(Error::Config("levels must be positive and strictly increasing".into()));
        }
        if let Some(c) = self.cfl {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("CFL must be positive, got {c}")));
            }
        }
        if let Some(t) = self.final_time {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("final time must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

pub fn parse_levels(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad level '{t}'")))
        })
        .collect()
}

/// Everything needed to run one mesh level.
struct Setup {
    problem: Arc<ProblemSpec>,
    tableau: ImexTableau,
    degree: usize,
    cfl: f64,
    step_rule: TimeStepRule,
    final_time: f64,
}

fn setup(cfg: &RunConfig, problem: Option<Arc<ProblemSpec>>) -> Result<Setup> {
    cfg.validate()?;
    let problem = match problem {
        Some(p) => p,
        None => Arc::new(builtin_problem(&cfg.problem).map_err(|e| Error::Config(e.to_string()))?),
    };
    let tableau = ImexTableau::builtin(&cfg.tableau).map_err(|e| Error::Config(e.to_string()))?;
    let degree = cfg.degree.unwrap_or(tableau.order - 1);
    Ok(Setup {
        cfl: cfg.cfl.unwrap_or(problem.cfl),
        step_rule: cfg.step_rule,
        final_time: cfg.final_time.unwrap_or(problem.final_time),
        problem,
        tableau,
        degree,
    })
}

/// Result of integrating one mesh level.
#[derive(Debug, Clone)]
pub struct LevelRun {
    pub n: usize,
    pub field: NodalField,
    pub norms: Option<ErrorNorms>,
    pub stats: IntegrationStats,
    pub trace: Option<Vec<TraceRow>>,
}

fn run_level_with(s: &Setup, n: usize, mode: BoundaryMode, alg: TreatmentAlgorithm, trace: bool) -> Result<LevelRun> {
    let p = &s.problem;
    let mesh = match p.dim {
        Dimension::One => CartesianMesh::new_1d(p.x_bounds, n)?,
        Dimension::Two => CartesianMesh::new_2d(p.x_bounds, p.y_bounds, n, n)?,
    };
    let space = Arc::new(DgSpace::new(mesh, s.degree)?);
    let mut solver = ImexSolver::new(space.clone(), p.clone(), s.tableau.clone())?;
    let u0 = NodalField::interpolate(space.clone(), |x| (p.initial)(x));
    let tau = solver.time_step_with(s.cfl, s.step_rule, &u0)?;
    let (field, stats, trace) = match mode {
        BoundaryMode::Naive => {
            let mut bc = NaiveBoundary {
                space: space.clone(),
                problem: p.clone(),
            };
            let (f, st) = solver.integrate(u0, s.final_time, tau, &mut bc as &mut dyn StageBoundary)?;
            (f, st, None)
        }
        BoundaryMode::Treated => {
            let mut bc = TreatedBoundary::new(space.clone(), p.clone(), alg)?;
            if trace {
                bc = bc.with_trace();
            }
            let (f, st) = solver.integrate(u0, s.final_time, tau, &mut bc)?;
            (f, st, bc.trace.take())
        }
    };
    let norms = p.exact_at(s.final_time).map(|e| field.error_norms(e));
    Ok(LevelRun {
        n,
        field,
        norms,
        stats,
        trace,
    })
}

/// Integrates a single level of the configured study.
pub fn run_level(cfg: &RunConfig, n: usize) -> Result<LevelRun> {
    let s = setup(cfg, None)?;
    run_level_with(&s, n, cfg.mode, cfg.algorithm, cfg.trace.is_some())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub errors: [f64; 3],
    /// L1, L2, Linf orders against the previous row; `None` on the first row.
    pub orders: Option<[Option<f64>; 3]>,
    pub seconds: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub problem: String,
    pub tableau: String,
    pub mode: BoundaryMode,
    pub rows: Vec<ConvergenceRow>,
}

/// Errors below this are treated as exact and get no order.
const EXACT_ERROR: f64 = 1e-13;

fn observed_order(coarse: f64, fine: f64, n_coarse: usize, n_fine: usize) -> Option<f64> {
    if coarse <= EXACT_ERROR && fine <= EXACT_ERROR {
        return None;
    }
    let o = (coarse / fine).ln() / (n_fine as f64 / n_coarse as f64).ln();
    o.is_finite().then_some(o)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), |x| format!("{x:.6e}"))
}

impl ConvergenceReport {
    fn from_runs(cfg: &RunConfig, runs: &[LevelRun]) -> Result<Self> {
        let mut rows: Vec<ConvergenceRow> = Vec::new();
        for r in runs {
            let Some(nm) = r.norms else {
                return Err(Error::Config(format!(
                    "problem '{}' has no exact solution",
                    cfg.problem
                )));
            };
            let errors = [nm.l1, nm.l2, nm.linf];
            let orders = rows.last().map(|prev| {
                let mut o = [None; 3];
                for k in 0..3 {
                    o[k] = observed_order(prev.errors[k], errors[k], prev.n, r.n);
                }
                o
            });
            rows.push(ConvergenceRow {
                n: r.n,
                errors,
                orders,
                seconds: r.stats.seconds,
                steps: r.stats.steps,
            });
        }
        Ok(Self {
            problem: cfg.problem.clone(),
            tableau: cfg.tableau.clone(),
            mode: cfg.mode,
            rows,
        })
    }

    pub fn row(&self, n: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// CSV text; `timing = false` drops the seconds column for reproducibility checks.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut s = String::from("N,l1_error,l1_order,l2_error,l2_order,linf_error,linf_order");
        s.push_str(if timing { ",seconds,steps\n" } else { ",steps\n" });
        for r in &self.rows {
            let _ = write!(s, "{}", r.n);
            for k in 0..3 {
                let order = match &r.orders {
                    None => String::new(),
                    Some(o) => fmt_opt(o[k]),
                };
                let _ = write!(s, ",{:.6e},{}", r.errors[k], order);
            }
            if timing {
                let _ = write!(s, ",{:.6e}", r.seconds);
            }
            let _ = writeln!(s, ",{}", r.steps);
        }
        s
    }
}

fn run_levels(s: &Setup, cfg: &RunConfig, mode: BoundaryMode) -> Result<Vec<LevelRun>> {
    let go = |n: usize| {
        run_level_with(s, n, mode, cfg.algorithm, false).map_err(|e| match e {
            Error::Numeric(m) => Error::Numeric(format!("level N={n}: {m}")),
            other => other,
        })
    };
    if cfg.parallel {
        std::thread::scope(|sc| {
            let handles: Vec<_> = cfg.levels.iter().map(|&n| sc.spawn(move || go(n))).collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(Error::Numeric("worker thread panicked".into())))
                })
                .collect()
        })
    } else {
        cfg.levels.iter().map(|&n| go(n)).collect()
    }
}

pub fn run_convergence(cfg: &RunConfig) -> Result<ConvergenceReport> {
    let s = setup(cfg, None)?;
    ConvergenceReport::from_runs(cfg, &run_levels(&s, cfg, cfg.mode)?)
}

/// Convergence study for a user-supplied problem.
pub fn run_convergence_for(cfg: &RunConfig, problem: Arc<ProblemSpec>) -> Result<ConvergenceReport> {
    let s = setup(cfg, Some(problem))?;
    ConvergenceReport::from_runs(cfg, &run_levels(&s, cfg, cfg.mode)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyRow {
    pub mode: BoundaryMode,
    pub n: usize,
    /// Fastest integration time over the repeats.
    pub seconds: f64,
    pub l2: f64,
    pub linf: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    pub rows: Vec<EfficiencyRow>,
    /// Per level, treated over naive time of each interleaved pair of samples.
    pub ratios: Vec<(usize, Vec<f64>)>,
}

impl EfficiencyReport {
    /// Median paired treated/naive time ratio, minus one, per level.
    pub fn overheads(&self) -> Vec<(usize, f64)> {
        self.ratios
            .iter()
            .filter(|(_, r)| !r.is_empty())
            .map(|(n, r)| {
                let mut r = r.clone();
                r.sort_by(f64::total_cmp);
                let m = r.len() / 2;
                let med = if r.len() % 2 == 1 {
                    r[m]
                } else {
                    0.5 * (r[m - 1] + r[m])
                };
                (*n, med - 1.0)
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("mode,N,seconds,l2_error,linf_error,steps\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.6e},{:.6e},{:.6e},{}",
                r.mode.name(),
                r.n,
                r.seconds,
                r.l2,
                r.linf,
                r.steps
            );
        }
        s
    }
}

/// Shortest integration time a single efficiency sample accumulates before averaging.
pub const MIN_SAMPLE_SECONDS: f64 = 0.02;

/// Naive and treated runs of every level, repeated `repeats` times (interleaved) keeping the fastest.
/// Short integrations are batched until a sample spans [`MIN_SAMPLE_SECONDS`]; `seconds` is per run.
pub fn run_efficiency(cfg: &RunConfig, repeats: usize) -> Result<EfficiencyReport> {
    let s = setup(cfg, None)?;
    let (mut rows, mut ratios) = (Vec::new(), Vec::new());
    for &n in &cfg.levels {
        let mut best: [Option<EfficiencyRow>; 2] = [None, None];
        let mut level_ratios = Vec::with_capacity(repeats.max(1));
        for _ in 0..repeats.max(1) {
            let mut pair = [0.0; 2];
            for (k, mode) in [BoundaryMode::Naive, BoundaryMode::Treated].into_iter().enumerate() {
                let (mut total, mut count) = (0.0, 0usize);
                let r = loop {
                    let r = run_level_with(&s, n, mode, cfg.algorithm, false)?;
                    total += r.stats.seconds;
                    count += 1;
                    if total >= MIN_SAMPLE_SECONDS {
                        break r;
                    }
                };
                let nm = r
                    .norms
                    .ok_or_else(|| Error::Config("efficiency runs need an exact solution".into()))?;
                let row = EfficiencyRow {
                    mode,
                    n,
                    seconds: total / count as f64,
                    l2: nm.l2,
                    linf: nm.linf,
                    steps: r.stats.steps,
                };
                pair[k] = row.seconds;
                if best[k].as_ref().is_none_or(|b| row.seconds < b.seconds) {
                    best[k] = Some(row);
                }
            }
            level_ratios.push(pair[1] / pair[0]);
        }
        rows.extend(best.into_iter().flatten());
        ratios.push((n, level_ratios));
    }
    Ok(EfficiencyReport { rows, ratios })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub dof: usize,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct SingleRun {
    pub run: LevelRun,
    pub profile: Vec<ProfileRow>,
}

impl SingleRun {
    /// Writes `cell_i[,cell_j],node_k1[,node_k2],x[,y],value,reference,abs_error`.
    pub fn profile_csv(&self) -> String {
        let s = &*self.run.field.space;
        let two_d = s.dim() == Dimension::Two;
        let mut out = String::from(if two_d {
            "cell_i,cell_j,node_k1,node_k2,x,y,value,reference,abs_error\n"
        } else {
            "cell_i,node_k1,x,value,reference,abs_error\n"
        });
        for r in &self.profile {
            let (i, j, a, b) = s.dof_coords(r.dof);
            let p = s.coords[r.dof];
            if two_d {
                let _ = write!(out, "{i},{j},{a},{b},{:.6e},{:.6e}", p.x, p.y);
            } else {
                let _ = write!(out, "{i},{a},{:.6e}", p.x);
            }
            let _ = writeln!(out, ",{:.6e},{:.6e},{:.6e}", r.value, r.reference, r.error);
        }
        out
    }

    /// Largest error over the median error of the cells in the middle half of the domain.
    pub fn boundary_layer_ratio(&self) -> f64 {
        let s = &*self.run.field.space;
        let m = &s.mesh;
        let inner = |i: usize, n: usize| n < 4 || (i >= n / 4 && i < n - n / 4);
        let mut interior: Vec<f64> = self
            .profile
            .iter()
            .filter(|r| {
                let (i, j, _, _) = s.dof_coords(r.dof);
                inner(i, m.nx) && (m.dim == Dimension::One || inner(j, m.ny))
            })
            .map(|r| r.error)
            .collect();
        interior.sort_by(f64::total_cmp);
        let median = interior.get(interior.len() / 2).copied().unwrap_or(0.0);
        let max = self.profile.iter().map(|r| r.error).fold(0.0, f64::max);
        max / median
    }
}

/// One level with a per-node error profile against the exact solution, or against the naive run.
pub fn run_single(cfg: &RunConfig, n: usize) -> Result<SingleRun> {
    let mut c = cfg.clone();
    c.levels = vec![n];
    let s = setup(&c, None)?;
    let run = run_level_with(&s, n, c.mode, c.algorithm, c.trace.is_some())?;
    let reference: Vec<f64> = match s.problem.exact_at(s.final_time) {
        Some(e) => run.field.space.coords.iter().map(|&p| e(p)).collect(),
        None => {
            run_level_with(&s, n, BoundaryMode::Naive, c.algorithm, false)?
                .field
                .values
        }
    };
    let profile = run
        .field
        .values
        .iter()
        .zip(&reference)
        .enumerate()
        .map(|(dof, (&v, &r))| ProfileRow {
            dof,
            value: v,
            reference: r,
            error: (v - r).abs(),
        })
        .collect();
    Ok(SingleRun { run, profile })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_and_validation() {
        let mut c = RunConfig::default();
        c.apply_file_text("# study\nproblem = burgers1d\nlevels = 5, 10,20\ncfl = 0.3\nbc = naive\n")
            .unwrap();
        assert_eq!(c.problem, "burgers1d");
        assert_eq!(c.levels, vec![5, 10, 20]);
        assert_eq!(c.mode, BoundaryMode::Naive);
        c.validate().unwrap();
        assert!(c.apply_file_text("levels 5").is_err());
        assert!(c.set("colour", "red").is_err());
        c.levels = vec![10, 5];
        assert!(c.validate().is_err());
        c.levels = vec![5];
        c.cfl = Some(0.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn orders_on_finer_rows() {
        assert!((observed_order(8e-3, 1e-3, 10, 20).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(observed_order(1e-16, 2e-16, 10, 20), None);
    }
}
