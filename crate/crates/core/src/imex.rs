//! Additive IMEX Runge-Kutta integration: convection and sources explicit, diffusion implicit.

use crate::error::{invalid, Error, Result};
use crate::field::NodalField;
use crate::ldg::{max_wave_speed, BoundaryData, DiffusionOperator, ExplicitOperator};
use crate::problem::ProblemSpec;
use crate::space::DgSpace;
use crate::sparse::ImplicitSolver;
use std::sync::Arc;
use std::time::Instant;

/// Paired Butcher tableaus; stage 0 is the explicit first stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ImexTableau {
    pub name: String,
    pub order: usize,
    pub explicit: Vec<Vec<f64>>,
    pub implicit: Vec<Vec<f64>>,
    pub b_explicit: Vec<f64>,
    pub b_implicit: Vec<f64>,
    pub c: Vec<f64>,
}

const TABLEAU_TOL: f64 = 1e-12;

fn pad(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = rows.len();
    rows.into_iter()
        .map(|mut r| {
            r.resize(n, 0.0);
            r
        })
        .collect()
}

impl ImexTableau {
    /// Number of stages including stage 0.
    pub fn stages(&self) -> usize {
        self.c.len()
    }

    pub fn ark3() -> Self {
        let g = 1767732205903.0 / 4055673282236.0;
        let beta1 = -1.5 * g * g + 4.0 * g - 0.25;
        let beta2 = 1.5 * g * g - 5.0 * g + 1.25;
        let alpha1 = -0.35;
        let alpha2 = (1.0 / 3.0 - 2.0 * g * g - 2.0 * beta2 * alpha1 * g) / (g * (1.0 - g));
        let b = vec![0.0, beta1, beta2, g];
        Self {
            name: "ark3".into(),
            order: 3,
            explicit: pad(vec![
                vec![],
                vec![g],
                vec![(1.0 + g) / 2.0 - alpha1, alpha1],
                vec![0.0, 1.0 - alpha2, alpha2],
            ]),
            implicit: pad(vec![
                vec![],
                vec![0.0, g],
                vec![0.0, (1.0 - g) / 2.0, g],
                vec![0.0, beta1, beta2, g],
            ]),
            b_explicit: b.clone(),
            b_implicit: b,
            c: vec![0.0, g, (1.0 + g) / 2.0, 1.0],
        }
    }

    /// ARK4(3)6L[2]SA pair.
    pub fn ark4() -> Self {
        let b = vec![
            82889.0 / 524892.0,
            0.0,
            15625.0 / 83664.0,
            69875.0 / 102672.0,
            -2260.0 / 8211.0,
            0.25,
        ];
        Self {
            name: "ark4".into(),
            order: 4,
            explicit: pad(vec![
                vec![],
                vec![0.5],
                vec![13861.0 / 62500.0, 6889.0 / 62500.0],
                vec![
                    -116923316275.0 / 2393684061468.0,
                    -2731218467317.0 / 15368042101831.0,
                    9408046702089.0 / 11113171139209.0,
                ],
                vec![
                    -451086348788.0 / 2902428689909.0,
                    -2682348792572.0 / 7519795681897.0,
                    12662868775082.0 / 11960479115383.0,
                    3355817975965.0 / 11060851509271.0,
                ],
                vec![
                    647845179188.0 / 3216320057751.0,
                    73281519250.0 / 8382639484533.0,
                    552539513391.0 / 3454668386233.0,
                    3354512671639.0 / 8306763924573.0,
                    4040.0 / 17871.0,
                ],
            ]),
            implicit: pad(vec![
                vec![],
                vec![0.25, 0.25],
                vec![8611.0 / 62500.0, -1743.0 / 31250.0, 0.25],
                vec![5012029.0 / 34652500.0, -654441.0 / 2922500.0, 174375.0 / 388108.0, 0.25],
                vec![
                    15267082809.0 / 155376265600.0,
                    -71443401.0 / 120774400.0,
                    730878875.0 / 902184768.0,
                    2285395.0 / 8070912.0,
                    0.25,
                ],
                b.clone(),
            ]),
            b_explicit: b.clone(),
            b_implicit: b,
            c: vec![0.0, 0.5, 83.0 / 250.0, 31.0 / 50.0, 17.0 / 20.0, 1.0],
        }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "ark3" => Ok(Self::ark3()),
            "ark4" => Ok(Self::ark4()),
            _ => invalid(format!("unknown tableau '{name}' (known: ark3, ark4)")),
        }
    }

    /// Checks shapes, triangularity, row sums and weight sums.
    pub fn validate(&self) -> Result<()> {
        let n = self.stages();
        let bad = |m: String| Err(Error::InvalidArgument(format!("tableau '{}': {m}", self.name)));
        if n < 2 {
            return bad("needs at least two stages".into());
        }
        let square = |a: &Vec<Vec<f64>>| a.len() == n && a.iter().all(|r| r.len() == n);
        if !square(&self.explicit)
            || !square(&self.implicit)
            || self.b_explicit.len() != n
            || self.b_implicit.len() != n
        {
            return bad("inconsistent dimensions".into());
        }
        for i in 0..n {
            if self.explicit[i][i..].iter().any(|&v| v != 0.0) {
                return bad(format!("explicit row {i} is not strictly lower triangular"));
            }
            if self.implicit[i][i + 1..].iter().any(|&v| v != 0.0) {
                return bad(format!("implicit row {i} is not lower triangular"));
            }
            for (a, which) in [(&self.explicit, "explicit"), (&self.implicit, "implicit")] {
                let sum: f64 = a[i].iter().sum();
                if (sum - self.c[i]).abs() > TABLEAU_TOL {
                    return bad(format!("{which} row {i} sums to {sum}, expected c = {}", self.c[i]));
                }
            }
        }
        if self.implicit[0][0] != 0.0 {
            return bad("first stage must be explicit".into());
        }
        for (b, which) in [(&self.b_explicit, "explicit"), (&self.b_implicit, "implicit")] {
            let sum: f64 = b.iter().sum();
            if (sum - 1.0).abs() > TABLEAU_TOL {
                return bad(format!("{which} weights sum to {sum}"));
            }
        }
        Ok(())
    }

    /// Both parts reproduce their weights in the last row, so u^{n+1} is the last stage.
    pub fn stiffly_accurate(&self) -> bool {
        let last = self.stages() - 1;
        let eq = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= TABLEAU_TOL);
        eq(&self.implicit[last], &self.b_implicit) && eq(&self.explicit[last], &self.b_explicit)
    }
}

/// How the CFL number maps to a time step; `h` is the smallest cell width,
/// `alpha` the largest flux speed of the initial data and `k` the degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TimeStepRule {
    /// `tau = cfl * h`
    #[default]
    Width,
    /// `tau = cfl * h / alpha`
    WaveSpeed,
    /// `tau = cfl * h / ((2k + 1) * alpha)`
    DgWaveSpeed,
}

impl TimeStepRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "width" => Ok(Self::Width),
            "wave" => Ok(Self::WaveSpeed),
            "dg-wave" => Ok(Self::DgWaveSpeed),
            _ => Err(Error::Config(format!(
                "unknown time step rule '{s}' (width, wave, dg-wave)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Width => "width",
            Self::WaveSpeed => "wave",
            Self::DgWaveSpeed => "dg-wave",
        }
    }
}

/// Data shared with boundary providers at each step.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub tableau: &'a ImexTableau,
    pub t_n: f64,
    pub tau: f64,
}

impl StepContext<'_> {
    pub fn stage_time(&self, i: usize) -> f64 {
        self.t_n + self.tableau.c[i] * self.tau
    }
}

/// Supplies boundary data for every stage of a step.
pub trait StageBoundary {
    /// Called with u^n; returns the data used at stage 0.
    fn begin_step(&mut self, ctx: &StepContext<'_>, u_n: &NodalField) -> Result<BoundaryData>;
    /// Data imposed at stage i >= 1; stages are requested in order.
    fn stage_data(&mut self, ctx: &StepContext<'_>, i: usize) -> Result<BoundaryData>;
    /// Notification that stage i has been solved.
    fn stage_solved(&mut self, _ctx: &StepContext<'_>, _i: usize, _u_i: &NodalField) -> Result<()> {
        Ok(())
    }
}

/// Dirichlet data evaluated directly at the stage times.
#[derive(Debug, Clone)]
pub struct NaiveBoundary {
    pub space: Arc<DgSpace>,
    pub problem: Arc<ProblemSpec>,
}

impl StageBoundary for NaiveBoundary {
    fn begin_step(&mut self, ctx: &StepContext<'_>, _u_n: &NodalField) -> Result<BoundaryData> {
        Ok(BoundaryData::naive(&self.space, &self.problem, ctx.t_n))
    }

    fn stage_data(&mut self, ctx: &StepContext<'_>, i: usize) -> Result<BoundaryData> {
        Ok(BoundaryData::naive(&self.space, &self.problem, ctx.stage_time(i)))
    }
}

/// Per-step archive of stage solutions and right-hand sides.
#[derive(Debug, Clone)]
pub struct TimeStepState {
    pub stages: Vec<NodalField>,
    pub explicit_rhs: Vec<Vec<f64>>,
    pub implicit_rhs: Vec<Vec<f64>>,
    pub boundary: Vec<BoundaryData>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegrationStats {
    pub steps: usize,
    pub seconds: f64,
    pub max_solve_residual: f64,
}

/// Relative residual above which an implicit solve counts as failed.
pub const SOLVE_RESIDUAL_LIMIT: f64 = 1e-10;

#[derive(Debug)]
pub struct ImexSolver {
    pub space: Arc<DgSpace>,
    pub problem: Arc<ProblemSpec>,
    pub tableau: ImexTableau,
    pub explicit: ExplicitOperator,
    pub diffusion: DiffusionOperator,
    implicit: ImplicitSolver,
    pub max_solve_residual: f64,
}

impl ImexSolver {
    pub fn new(space: Arc<DgSpace>, problem: Arc<ProblemSpec>, tableau: ImexTableau) -> Result<Self> {
        tableau.validate()?;
        let explicit = ExplicitOperator::new(space.clone(), problem.clone())?;
        let diffusion = DiffusionOperator::new(space.clone(), &problem)?;
        let implicit = ImplicitSolver::new(diffusion.matrix().clone());
        Ok(Self {
            space,
            problem,
            tableau,
            explicit,
            diffusion,
            implicit,
            max_solve_residual: 0.0,
        })
    }

    /// Time step from the CFL number and the smallest cell width.
    pub fn time_step(&self, cfl: f64) -> f64 {
        cfl * self.space.mesh.min_width()
    }

    /// Time step under `rule`; wave-speed rules use the largest flux speed of `u0`.
    pub fn time_step_with(&self, cfl: f64, rule: TimeStepRule, u0: &NodalField) -> Result<f64> {
        let h = self.space.mesh.min_width();
        if rule == TimeStepRule::Width {
            return Ok(cfl * h);
        }
        let bdata = BoundaryData::naive(&self.space, &self.problem, 0.0);
        let alpha = max_wave_speed(&self.problem, u0, &bdata);
        if alpha.is_nan() || alpha <= 1e-14 {
            return Err(Error::Unsupported(format!(
                "time step rule '{}' needs a nonzero wave speed",
                rule.name()
            )));
        }
        let k = self.space.basis.degree as f64;
        Ok(match rule {
            TimeStepRule::Width => unreachable!(),
            TimeStepRule::WaveSpeed => cfl * h / alpha,
            TimeStepRule::DgWaveSpeed => cfl * h / ((2.0 * k + 1.0) * alpha),
        })
    }

    /// One IMEX step from t_n to t_n + tau.
    pub fn step(
        &mut self,
        u: &NodalField,
        t_n: f64,
        tau: f64,
        bc: &mut dyn StageBoundary,
    ) -> Result<(NodalField, TimeStepState)> {
        if !(tau > 0.0 && tau.is_finite()) {
            return invalid(format!("time step must be positive, got {tau}"));
        }
        let tab = self.tableau.clone();
        let ctx = StepContext {
            tableau: &tab,
            t_n,
            tau,
        };
        let ns = tab.stages();
        let b0 = bc.begin_step(&ctx, u)?;
        let mut st = TimeStepState {
            explicit_rhs: vec![self.explicit.apply(u, &b0, t_n)?],
            implicit_rhs: vec![self.diffusion.apply_assembled(&u.values, &b0)?],
            stages: vec![u.clone()],
            boundary: vec![b0],
        };
        for i in 1..ns {
            let bi = bc.stage_data(&ctx, i)?;
            let aii = tab.implicit[i][i];
            let mut rhs = u.values.clone();
            for j in 0..i {
                let (ae, ai) = (tau * tab.explicit[i][j], tau * tab.implicit[i][j]);
                for ((r, x), p) in rhs.iter_mut().zip(&st.explicit_rhs[j]).zip(&st.implicit_rhs[j]) {
                    *r += ae * x + ai * p;
                }
            }
            if aii != 0.0 {
                let g = self.diffusion.boundary_term(&bi)?;
                for (r, gv) in rhs.iter_mut().zip(&g) {
                    *r += aii * tau * gv;
                }
                let res = self.implicit.solve(aii * tau, &mut rhs)?;
                self.max_solve_residual = self.max_solve_residual.max(res);
                if res > SOLVE_RESIDUAL_LIMIT {
                    return Err(Error::Numeric(format!("implicit solve residual {res:e} at stage {i}")));
                }
            }
            let ui = NodalField {
                space: self.space.clone(),
                values: rhs,
            };
            st.explicit_rhs.push(self.explicit.apply(&ui, &bi, ctx.stage_time(i))?);
            st.implicit_rhs.push(self.diffusion.apply_assembled(&ui.values, &bi)?);
            bc.stage_solved(&ctx, i, &ui)?;
            st.stages.push(ui);
            st.boundary.push(bi);
        }
        let next = if tab.stiffly_accurate() {
            st.stages[ns - 1].clone()
        } else {
            let mut v = u.values.clone();
            for j in 0..ns {
                let (be, bi) = (tau * tab.b_explicit[j], tau * tab.b_implicit[j]);
                for ((r, x), p) in v.iter_mut().zip(&st.explicit_rhs[j]).zip(&st.implicit_rhs[j]) {
                    *r += be * x + bi * p;
                }
            }
            NodalField {
                space: self.space.clone(),
                values: v,
            }
        };
        if next.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite solution after step at t = {t_n}")));
        }
        Ok((next, st))
    }

    /// Advances to `t_final` with steps of `tau`, shortening the last one to land on `t_final`.
    pub fn integrate(
        &mut self,
        u0: NodalField,
        t_final: f64,
        tau: f64,
        bc: &mut dyn StageBoundary,
    ) -> Result<(NodalField, IntegrationStats)> {
        if !(tau > 0.0 && tau.is_finite()) || t_final.is_nan() || t_final < 0.0 {
            return invalid(format!("invalid time step {tau} or final time {t_final}"));
        }
        let start = Instant::now();
        let ratio = t_final / tau;
        let whole = ratio.round();
        let (full, partial) = if (whole - ratio).abs() <= 1e-9 * ratio.max(1.0) {
            (whole as usize, 0.0)
        } else {
            let f = ratio.floor();
            (f as usize, t_final - f * tau)
        };
        let mut u = u0;
        for n in 0..full {
            let t_n = n as f64 * tau;
            let dt = if n + 1 == full && partial == 0.0 {
                t_final - t_n
            } else {
                tau
            };
            u = self.step(&u, t_n, dt, bc)?.0;
        }
        let mut steps = full;
        if partial > 0.0 {
            u = self.step(&u, full as f64 * tau, partial, bc)?.0;
            steps += 1;
        }
        Ok((
            u,
            IntegrationStats {
                steps,
                seconds: start.elapsed().as_secs_f64(),
                max_solve_residual: self.max_solve_residual,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for t in [ImexTableau::ark3(), ImexTableau::ark4()] {
            t.validate().unwrap();
            assert!(!t.stiffly_accurate(), "{}", t.name);
        }
    }

    #[test]
    fn ark3_known_values() {
        let t = ImexTableau::ark3();
        assert!((t.c[1] - 0.435866521508459).abs() < 1e-15);
        assert_eq!(t.stages(), 4);
    }

    #[test]
    fn validate_rejects_bad_row_sum() {
        let mut t = ImexTableau::ark3();
        t.explicit[2][0] += 1e-6;
        assert!(t.validate().is_err());
        let mut t = ImexTableau::ark3();
        t.implicit[1][2] = 0.1;
        assert!(t.validate().is_err());
        assert!(ImexTableau::builtin("rk4").is_err());
    }
}
