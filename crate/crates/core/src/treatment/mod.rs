//! Stage boundary values for IMEX schemes that keep the full temporal order.
//!
//! At each boundary point the stage value is built from the Dirichlet data and
//! its time derivatives, Taylor-expanded in time, while the spatial derivatives
//! that appear in the explicit and implicit right-hand sides are advanced with
//! the same tableau as the interior stages.

mod recovery;

pub use recovery::{
    first_difference_weights, recover_derivatives, recover_with_rows, second_difference, BoundaryDerivatives,
    RecoveryRows,
};

use crate::error::{invalid, Error, Result};
use crate::field::NodalField;
use crate::imex::{ImexTableau, StageBoundary, StepContext};
use crate::ldg::BoundaryData;
use crate::mesh::{Dimension, Point};
use crate::problem::{Flux, ProblemSpec, Source};
use crate::space::DgSpace;
use std::io::Write;
use std::sync::Arc;

/// Where the spatial derivatives of the explicit and implicit terms are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreatmentAlgorithm {
    /// Taylor-shifted from the start of the step.
    Anchored,
    /// Re-read from the previous stage solution.
    Staged,
}

impl TreatmentAlgorithm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "alg1" | "anchored" => Ok(Self::Anchored),
            "alg2" | "alg3" | "staged" => Ok(Self::Staged),
            _ => Err(Error::Config(format!("unknown treatment algorithm '{s}' (alg1, alg2)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Anchored => "alg1",
            Self::Staged => "alg2",
        }
    }
}

/// Coefficients of u_t = a u_x + b u_xx + lambda u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCoefficients {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
}

/// Pointwise form of the PDE right-hand sides xi (explicit) and psi (implicit).
#[derive(Debug, Clone)]
pub struct PointModel {
    pub flux: [Flux; 2],
    pub source: Source,
    pub diffusion: [f64; 2],
    pub linear: Option<LinearCoefficients>,
}

impl PointModel {
    pub fn new(problem: &ProblemSpec) -> Result<Self> {
        let diffusion = problem.diffusion_coefficients()?;
        let speed = match problem.flux[0] {
            Flux::Linear(c) => Some(-c),
            Flux::Zero => Some(0.0),
            _ => None,
        };
        let lambda = match problem.source {
            Source::Zero => Some(0.0),
            Source::Proportional(l) => Some(l),
            _ => None,
        };
        let linear = match (problem.dim, speed, lambda) {
            (Dimension::One, Some(a), Some(lambda)) => Some(LinearCoefficients {
                a,
                b: diffusion[0],
                lambda,
            }),
            _ => None,
        };
        Ok(Self {
            flux: problem.flux.clone(),
            source: problem.source.clone(),
            diffusion,
            linear,
        })
    }

    /// xi = -f1'(u) u_x - f2'(u) u_y + h(u, x, t)
    pub fn xi(&self, u: f64, ux: f64, uy: f64, p: Point, t: f64) -> f64 {
        -self.flux[0].derivative(u) * ux - self.flux[1].derivative(u) * uy + self.source.value(u, p, t)
    }

    /// x-derivative of xi along the boundary.
    #[allow(clippy::too_many_arguments)]
    pub fn xi_x(&self, u: f64, ux: f64, uy: f64, uxx: f64, uxy: f64, p: Point, t: f64) -> f64 {
        let (f1, f2) = (&self.flux[0], &self.flux[1]);
        -f1.second_derivative(u) * ux * ux
            - f1.derivative(u) * uxx
            - f2.second_derivative(u) * ux * uy
            - f2.derivative(u) * uxy
            + self.source.du(u, p, t) * ux
            + self.source.dx(u, p, t)[0]
    }

    /// y-derivative of xi along the boundary.
    #[allow(clippy::too_many_arguments)]
    pub fn xi_y(&self, u: f64, ux: f64, uy: f64, uxy: f64, uyy: f64, p: Point, t: f64) -> f64 {
        let (f1, f2) = (&self.flux[0], &self.flux[1]);
        -f1.second_derivative(u) * ux * uy
            - f1.derivative(u) * uxy
            - f2.second_derivative(u) * uy * uy
            - f2.derivative(u) * uyy
            + self.source.du(u, p, t) * uy
            + self.source.dx(u, p, t)[1]
    }

    pub fn psi_x(&self, d: &BoundaryDerivatives) -> f64 {
        self.diffusion[0] * d.uxxx + self.diffusion[1] * d.uyyx
    }

    pub fn psi_y(&self, d: &BoundaryDerivatives) -> f64 {
        self.diffusion[0] * d.uxxy + self.diffusion[1] * d.uyyy
    }

    fn linear_or_err(&self) -> Result<LinearCoefficients> {
        self.linear
            .ok_or_else(|| Error::Unsupported("fourth-order treatment needs a 1D linear problem".into()))
    }

    /// Time derivative of psi_x for the linear model.
    fn psi_x_dt(&self, d: &BoundaryDerivatives) -> Result<f64> {
        let LinearCoefficients { a, b, lambda } = self.linear_or_err()?;
        Ok(b * (a * d.uxxxx + b * d.uxxxxx + lambda * d.uxxx_local))
    }

    /// Time derivative of xi_x for the linear model, with u_x supplied separately.
    fn xi_x_dt(&self, ux: f64, d: &BoundaryDerivatives) -> Result<f64> {
        let LinearCoefficients { a, b, lambda } = self.linear_or_err()?;
        Ok(a * (a * d.uxxx_local + b * d.uxxxx + lambda * d.uxx)
            + lambda * (a * d.uxx + b * d.uxxx_local + lambda * ux))
    }
}

/// Dirichlet data at one point over one step.
#[derive(Debug, Clone, PartialEq)]
pub struct PointBoundaryData {
    pub position: Point,
    /// omega(t^n)
    pub value: f64,
    /// omega_t at every stage time.
    pub dt: Vec<f64>,
    /// omega_tt(t^n); used at fourth order.
    pub dtt: f64,
}

impl PointBoundaryData {
    pub fn from_problem(problem: &ProblemSpec, position: Point, ctx: &StepContext<'_>) -> Self {
        let mut d = Self {
            position,
            value: 0.0,
            dt: Vec::with_capacity(ctx.tableau.stages()),
            dtt: 0.0,
        };
        d.refresh(problem, ctx);
        d
    }

    /// Re-evaluates the data for the step described by `ctx`, keeping the position.
    pub fn refresh(&mut self, problem: &ProblemSpec, ctx: &StepContext<'_>) {
        let bd = &problem.boundary;
        let p = self.position;
        self.value = (bd.value)(p, ctx.t_n);
        self.dt.clear();
        self.dt
            .extend((0..ctx.tableau.stages()).map(|i| (bd.dt)(p, ctx.stage_time(i))));
        self.dtt = if ctx.tableau.order >= 4 {
            bd.dtt.as_ref().map_or(0.0, |f| f(p, ctx.t_n))
        } else {
            0.0
        };
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct StageRecord {
    u: f64,
    uh: f64,
    ux: f64,
    uy: f64,
    xi: f64,
    xi_x: f64,
    xi_y: f64,
    psi_x_hat: f64,
    psi_y_hat: f64,
    derivs: Option<BoundaryDerivatives>,
}

/// Stage treatment at a single boundary point over one step.
#[derive(Debug, Clone)]
pub struct PointTreatment {
    model: Arc<PointModel>,
    tableau: Arc<ImexTableau>,
    algorithm: TreatmentAlgorithm,
    t_n: f64,
    tau: f64,
    data: PointBoundaryData,
    records: Vec<StageRecord>,
    dxi_dt: [f64; 2],
    dpsi_dt: [f64; 2],
}

impl PointTreatment {
    /// Starts a step from the derivatives of u^n at the point.
    pub fn new(
        model: Arc<PointModel>,
        tableau: Arc<ImexTableau>,
        algorithm: TreatmentAlgorithm,
        t_n: f64,
        tau: f64,
        data: PointBoundaryData,
        derivs: BoundaryDerivatives,
    ) -> Result<Self> {
        if tableau.order > 4 || tableau.order < 3 {
            return Err(Error::Unsupported(format!("treatment of order {}", tableau.order)));
        }
        let mut pt = Self {
            model,
            records: Vec::with_capacity(tableau.stages()),
            tableau,
            algorithm,
            t_n,
            tau,
            data,
            dxi_dt: [0.0; 2],
            dpsi_dt: [0.0; 2],
        };
        pt.start(derivs)?;
        Ok(pt)
    }

    /// Reuses this point for a new step; `data` is refreshed from the problem.
    pub fn restart(&mut self, problem: &ProblemSpec, ctx: &StepContext<'_>, derivs: BoundaryDerivatives) -> Result<()> {
        self.t_n = ctx.t_n;
        self.tau = ctx.tau;
        self.data.refresh(problem, ctx);
        self.start(derivs)
    }

    fn start(&mut self, derivs: BoundaryDerivatives) -> Result<()> {
        if self.data.dt.len() != self.tableau.stages() {
            return invalid("boundary time derivatives do not match the stage count");
        }
        let (p, w, t_n) = (self.data.position, self.data.value, self.t_n);
        let m = &self.model;
        let rec = StageRecord {
            u: w,
            uh: w,
            ux: derivs.ux,
            uy: derivs.uy,
            xi: m.xi(w, derivs.ux, derivs.uy, p, t_n),
            xi_x: m.xi_x(w, derivs.ux, derivs.uy, derivs.uxx, derivs.uxy, p, t_n),
            xi_y: m.xi_y(w, derivs.ux, derivs.uy, derivs.uxy, derivs.uyy, p, t_n),
            psi_x_hat: m.psi_x(&derivs),
            psi_y_hat: m.psi_y(&derivs),
            derivs: Some(derivs),
        };
        if self.fourth_order() {
            self.dpsi_dt[0] = m.psi_x_dt(&derivs)?;
            self.dxi_dt[0] = m.xi_x_dt(derivs.ux, &derivs)?;
        }
        self.records.clear();
        self.records.push(rec);
        Ok(())
    }

    fn fourth_order(&self) -> bool {
        self.tableau.order >= 4
    }

    fn stage_time(&self, i: usize) -> f64 {
        self.t_n + self.tableau.c[i] * self.tau
    }

    /// Treated value imposed at stage 0 (the Dirichlet value at t^n).
    pub fn initial_value(&self) -> f64 {
        self.data.value
    }

    /// Stores derivatives recovered from the solved stage `j`; needed by the staged variant.
    pub fn record_stage(&mut self, j: usize, derivs: BoundaryDerivatives) -> Result<()> {
        let m = self.model.clone();
        let Some(rec) = self.records.get_mut(j) else {
            return Err(Error::Contract(format!("stage {j} recorded before it was treated")));
        };
        rec.psi_x_hat = m.psi_x(&derivs);
        rec.psi_y_hat = m.psi_y(&derivs);
        rec.derivs = Some(derivs);
        Ok(())
    }

    /// Treated boundary value for stage i; stages must be advanced in order.
    pub fn advance(&mut self, i: usize) -> Result<f64> {
        if i == 0 || i != self.records.len() || i >= self.tableau.stages() {
            return Err(Error::Contract(format!(
                "stage {i} requested after {} stages",
                self.records.len()
            )));
        }
        let fourth = self.fourth_order();
        let (tab, m) = (&*self.tableau, &*self.model);
        let tau = self.tau;
        let p = self.data.position;
        let (ae, ai) = (&tab.explicit[i], &tab.implicit[i]);
        let r0 = self.records[0];
        let (mut ux, mut uy) = (r0.ux, r0.uy);
        match self.algorithm {
            TreatmentAlgorithm::Anchored => {
                for j in 0..=i {
                    let shift = if fourth { tab.c[j] * tau } else { 0.0 };
                    let xi_x = r0.xi_x + shift * self.dxi_dt[0];
                    let xi_y = r0.xi_y + shift * self.dxi_dt[1];
                    let psi_x = r0.psi_x_hat + shift * self.dpsi_dt[0];
                    let psi_y = r0.psi_y_hat + shift * self.dpsi_dt[1];
                    if j < i {
                        ux += tau * ae[j] * xi_x;
                        uy += tau * ae[j] * xi_y;
                    }
                    ux += tau * ai[j] * psi_x;
                    uy += tau * ai[j] * psi_y;
                }
            }
            TreatmentAlgorithm::Staged => {
                let prev = self.records[i - 1];
                let Some(d) = prev.derivs else {
                    return Err(Error::Contract(format!("stage {} derivatives missing", i - 1)));
                };
                let t_prev = self.stage_time(i - 1);
                let xi_x = m.xi_x(prev.uh, prev.ux, prev.uy, d.uxx, d.uxy, p, t_prev);
                let xi_y = m.xi_y(prev.uh, prev.ux, prev.uy, d.uxy, d.uyy, p, t_prev);
                self.records[i - 1].xi_x = xi_x;
                self.records[i - 1].xi_y = xi_y;
                let (mut psi_x, psi_y) = (prev.psi_x_hat, prev.psi_y_hat);
                if fourth {
                    psi_x += tau * (tab.c[i] - tab.c[i - 1]) * m.psi_x_dt(&d)?;
                }
                for j in 0..i {
                    let r = &self.records[j];
                    ux += tau * (ae[j] * r.xi_x + ai[j] * r.psi_x_hat);
                    uy += tau * (ae[j] * r.xi_y + ai[j] * r.psi_y_hat);
                }
                ux += tau * ai[i] * psi_x;
                uy += tau * ai[i] * psi_y;
            }
        }
        let ci = tab.c[i] * tau;
        let mut uh = self.data.value + ci * self.data.dt[0];
        if fourth {
            uh += 0.5 * ci * ci * self.data.dtt;
        }
        let xi = m.xi(uh, ux, uy, p, self.stage_time(i));
        let mut u = self.data.value;
        for j in 0..i {
            u += tau * ae[j] * self.records[j].xi + tau * ai[j] * (self.data.dt[j] - self.records[j].xi);
        }
        u += tau * ai[i] * (self.data.dt[i] - xi);
        self.records.push(StageRecord {
            u,
            uh,
            ux,
            uy,
            xi,
            ..Default::default()
        });
        Ok(u)
    }

    /// Treated u_x and u_y at stage i (after it has been advanced).
    pub fn stage_gradient(&self, i: usize) -> Option<(f64, f64)> {
        self.records.get(i).map(|r| (r.ux, r.uy))
    }
}

/// One row of the stage trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub stage: usize,
    pub t: f64,
    pub position: Point,
    pub naive: f64,
    pub treated: f64,
}

pub fn write_trace_csv(rows: &[TraceRow], two_d: bool, mut w: impl Write) -> std::io::Result<()> {
    if two_d {
        writeln!(w, "step,stage,t,x,y,naive,treated")?;
    } else {
        writeln!(w, "step,stage,t,x,naive,treated")?;
    }
    for r in rows {
        if two_d {
            writeln!(
                w,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.step, r.stage, r.t, r.position.x, r.position.y, r.naive, r.treated
            )?;
        } else {
            writeln!(
                w,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.step, r.stage, r.t, r.position.x, r.naive, r.treated
            )?;
        }
    }
    Ok(())
}

/// Boundary provider applying the stage treatment at every boundary point.
#[derive(Debug)]
pub struct TreatedBoundary {
    pub space: Arc<DgSpace>,
    pub problem: Arc<ProblemSpec>,
    pub algorithm: TreatmentAlgorithm,
    model: Arc<PointModel>,
    rows: Vec<RecoveryRows>,
    tableau: Option<Arc<ImexTableau>>,
    points: Vec<PointTreatment>,
    step: usize,
    pub trace: Option<Vec<TraceRow>>,
}

impl TreatedBoundary {
    pub fn new(space: Arc<DgSpace>, problem: Arc<ProblemSpec>, algorithm: TreatmentAlgorithm) -> Result<Self> {
        let model = Arc::new(PointModel::new(&problem)?);
        let rows = space
            .boundary_points
            .iter()
            .map(|bp| RecoveryRows::new(&space, bp))
            .collect::<Result<_>>()?;
        Ok(Self {
            space,
            problem,
            algorithm,
            model,
            rows,
            tableau: None,
            points: Vec::new(),
            step: 0,
            trace: None,
        })
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    fn tableau(&mut self, t: &ImexTableau) -> Arc<ImexTableau> {
        match &self.tableau {
            Some(a) if **a == *t => a.clone(),
            _ => {
                let a = Arc::new(t.clone());
                self.tableau = Some(a.clone());
                a
            }
        }
    }

    fn check_supported(&self, order: usize) -> Result<()> {
        if order >= 4 && (self.space.dim() == Dimension::Two || self.model.linear.is_none()) {
            return Err(Error::Unsupported(
                "fourth-order stage treatment is only available for 1D linear problems".into(),
            ));
        }
        Ok(())
    }
}

impl StageBoundary for TreatedBoundary {
    fn begin_step(&mut self, ctx: &StepContext<'_>, u_n: &NodalField) -> Result<BoundaryData> {
        let reuse = matches!(&self.tableau, Some(a) if **a == *ctx.tableau) && self.points.len() == self.rows.len();
        let tab = self.tableau(ctx.tableau);
        self.check_supported(tab.order)?;
        if reuse {
            for ((pt, bp), rows) in self.points.iter_mut().zip(&self.space.boundary_points).zip(&self.rows) {
                pt.restart(&self.problem, ctx, recover_with_rows(u_n, bp, rows, tab.order)?)?;
            }
        } else {
            let mut points = Vec::with_capacity(self.space.num_boundary_points());
            for (bp, rows) in self.space.boundary_points.iter().zip(&self.rows) {
                let d = recover_with_rows(u_n, bp, rows, tab.order)?;
                let data = PointBoundaryData::from_problem(&self.problem, bp.position, ctx);
                points.push(PointTreatment::new(
                    self.model.clone(),
                    tab.clone(),
                    self.algorithm,
                    ctx.t_n,
                    ctx.tau,
                    data,
                    d,
                )?);
            }
            self.points = points;
        }
        self.step += 1;
        Ok(BoundaryData {
            values: self.points.iter().map(PointTreatment::initial_value).collect(),
        })
    }

    fn stage_data(&mut self, ctx: &StepContext<'_>, i: usize) -> Result<BoundaryData> {
        let values = self
            .points
            .iter_mut()
            .map(|p| p.advance(i))
            .collect::<Result<Vec<_>>>()?;
        if let Some(trace) = &mut self.trace {
            let t = ctx.stage_time(i);
            for (bp, &v) in self.space.boundary_points.iter().zip(&values) {
                trace.push(TraceRow {
                    step: self.step - 1,
                    stage: i,
                    t,
                    position: bp.position,
                    naive: (self.problem.boundary.value)(bp.position, t),
                    treated: v,
                });
            }
        }
        Ok(BoundaryData { values })
    }

    fn stage_solved(&mut self, ctx: &StepContext<'_>, i: usize, u_i: &NodalField) -> Result<()> {
        if self.algorithm == TreatmentAlgorithm::Staged && i + 1 < ctx.tableau.stages() {
            let order = ctx.tableau.order;
            for ((pt, bp), rows) in self.points.iter_mut().zip(&self.space.boundary_points).zip(&self.rows) {
                pt.record_stage(i, recover_with_rows(u_i, bp, rows, order)?)?;
            }
        }
        Ok(())
    }
}
