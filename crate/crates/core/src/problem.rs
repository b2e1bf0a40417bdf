//! PDE definitions u_t + div F(u) = div(D grad u) + h(u, x, t) with Dirichlet data.

use crate::error::{invalid, Error, Result};
use crate::mesh::{Dimension, Point};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::fmt;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(Point, f64) -> [f64; 2] + Send + Sync>;
pub type SourceFn = Arc<dyn Fn(f64, Point, f64) -> f64 + Send + Sync>;
pub type SourceGradientFn = Arc<dyn Fn(f64, Point, f64) -> [f64; 2] + Send + Sync>;

/// One component of the convective flux.
#[derive(Clone)]
pub enum Flux {
    Zero,
    /// f(u) = a u
    Linear(f64),
    /// f(u) = c u^2 / 2
    Quadratic(f64),
    Custom {
        f: ScalarFn,
        df: ScalarFn,
        d2f: ScalarFn,
    },
}

impl Flux {
    pub fn value(&self, u: f64) -> f64 {
        match self {
            Flux::Zero => 0.0,
            Flux::Linear(a) => a * u,
            Flux::Quadratic(c) => 0.5 * c * u * u,
            Flux::Custom { f, .. } => f(u),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            Flux::Zero => 0.0,
            Flux::Linear(a) => *a,
            Flux::Quadratic(c) => c * u,
            Flux::Custom { df, .. } => df(u),
        }
    }

    pub fn second_derivative(&self, u: f64) -> f64 {
        match self {
            Flux::Zero | Flux::Linear(_) => 0.0,
            Flux::Quadratic(c) => *c,
            Flux::Custom { d2f, .. } => d2f(u),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Flux::Zero)
    }
}

impl fmt::Debug for Flux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flux::Zero => write!(f, "Zero"),
            Flux::Linear(a) => write!(f, "Linear({a})"),
            Flux::Quadratic(c) => write!(f, "Quadratic({c})"),
            Flux::Custom { .. } => write!(f, "Custom"),
        }
    }
}

#[derive(Clone)]
pub enum Source {
    Zero,
    /// h = lambda u
    Proportional(f64),
    /// h = p(x, t) u, with the spatial gradient of p.
    Linear {
        rate: SpaceTimeFn,
        rate_gradient: GradientFn,
    },
    /// General h with its u-derivative and spatial gradient at fixed u.
    General {
        h: SourceFn,
        dh_du: SourceFn,
        dh_dx: SourceGradientFn,
    },
}

impl Source {
    pub fn value(&self, u: f64, p: Point, t: f64) -> f64 {
        match self {
            Source::Zero => 0.0,
            Source::Proportional(l) => l * u,
            Source::Linear { rate, .. } => rate(p, t) * u,
            Source::General { h, .. } => h(u, p, t),
        }
    }

    pub fn du(&self, u: f64, p: Point, t: f64) -> f64 {
        match self {
            Source::Zero => 0.0,
            Source::Proportional(l) => *l,
            Source::Linear { rate, .. } => rate(p, t),
            Source::General { dh_du, .. } => dh_du(u, p, t),
        }
    }

    /// Partial derivatives in x and y with u held fixed.
    pub fn dx(&self, u: f64, p: Point, t: f64) -> [f64; 2] {
        match self {
            Source::Zero | Source::Proportional(_) => [0.0, 0.0],
            Source::Linear { rate_gradient, .. } => {
                let g = rate_gradient(p, t);
                [g[0] * u, g[1] * u]
            }
            Source::General { dh_dx, .. } => dh_dx(u, p, t),
        }
    }
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Zero => write!(f, "Zero"),
            Source::Proportional(l) => write!(f, "Proportional({l})"),
            Source::Linear { .. } => write!(f, "Linear"),
            Source::General { .. } => write!(f, "General"),
        }
    }
}

#[derive(Clone)]
pub enum Diffusion {
    /// Coefficients in x and y.
    Linear([f64; 2]),
    /// g(u_x) in 1D; described but not supported by the solver.
    Nonlinear(ScalarFn),
}

impl fmt::Debug for Diffusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diffusion::Linear(d) => write!(f, "Linear({d:?})"),
            Diffusion::Nonlinear(_) => write!(f, "Nonlinear"),
        }
    }
}

/// Dirichlet data with the time derivatives used by the stage treatment.
#[derive(Clone)]
pub struct DirichletData {
    pub value: SpaceTimeFn,
    pub dt: SpaceTimeFn,
    pub dtt: Option<SpaceTimeFn>,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub dim: Dimension,
    pub x_bounds: (f64, f64),
    pub y_bounds: (f64, f64),
    pub flux: [Flux; 2],
    pub diffusion: Diffusion,
    pub source: Source,
    pub boundary: DirichletData,
    pub initial: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
    pub exact: Option<SpaceTimeFn>,
    pub cfl: f64,
    pub final_time: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("x_bounds", &self.x_bounds)
            .field("y_bounds", &self.y_bounds)
            .field("flux", &self.flux)
            .field("diffusion", &self.diffusion)
            .field("source", &self.source)
            .field("cfl", &self.cfl)
            .field("final_time", &self.final_time)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn builder(name: &str, dim: Dimension) -> ProblemBuilder {
        ProblemBuilder {
            name: name.to_string(),
            dim,
            x_bounds: (-1.0, 1.0),
            y_bounds: (-1.0, 1.0),
            flux: [Flux::Zero, Flux::Zero],
            diffusion: Diffusion::Linear([0.0, 0.0]),
            source: Source::Zero,
            boundary: None,
            initial: None,
            exact: None,
            cfl: 0.25,
            final_time: 1.0,
        }
    }

    /// Linear diffusion coefficients, or an error for nonlinear diffusion.
    pub fn diffusion_coefficients(&self) -> Result<[f64; 2]> {
        match &self.diffusion {
            Diffusion::Linear(d) => Ok(match self.dim {
                Dimension::One => [d[0], 0.0],
                Dimension::Two => *d,
            }),
            Diffusion::Nonlinear(_) => Err(Error::Unsupported("nonlinear diffusion".into())),
        }
    }

    /// Exact solution sampled at time t, if present.
    pub fn exact_at(&self, t: f64) -> Option<impl Fn(Point) -> f64 + '_> {
        self.exact.as_ref().map(|e| move |p| e(p, t))
    }
}

pub struct ProblemBuilder {
    name: String,
    dim: Dimension,
    x_bounds: (f64, f64),
    y_bounds: (f64, f64),
    flux: [Flux; 2],
    diffusion: Diffusion,
    source: Source,
    boundary: Option<DirichletData>,
    initial: Option<Arc<dyn Fn(Point) -> f64 + Send + Sync>>,
    exact: Option<SpaceTimeFn>,
    cfl: f64,
    final_time: f64,
}

impl ProblemBuilder {
    pub fn x_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.x_bounds = (lo, hi);
        self
    }

    pub fn y_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.y_bounds = (lo, hi);
        self
    }

    pub fn flux(mut self, fx: Flux, fy: Flux) -> Self {
        self.flux = [fx, fy];
        self
    }

    pub fn diffusion(mut self, d: Diffusion) -> Self {
        self.diffusion = d;
        self
    }

    pub fn source(mut self, s: Source) -> Self {
        self.source = s;
        self
    }

    pub fn dirichlet(mut self, value: SpaceTimeFn, dt: SpaceTimeFn, dtt: Option<SpaceTimeFn>) -> Self {
        self.boundary = Some(DirichletData { value, dt, dtt });
        self
    }

    pub fn initial(mut self, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.initial = Some(Arc::new(f));
        self
    }

    pub fn exact(mut self, f: SpaceTimeFn) -> Self {
        self.exact = Some(f);
        self
    }

    pub fn cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn final_time(mut self, t: f64) -> Self {
        self.final_time = t;
        self
    }

    pub fn build(self) -> Result<ProblemSpec> {
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return invalid(format!("CFL must be positive, got {}", self.cfl));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return invalid(format!("final time must be positive, got {}", self.final_time));
        }
        if self.x_bounds.0 >= self.x_bounds.1 || (self.dim == Dimension::Two && self.y_bounds.0 >= self.y_bounds.1) {
            return invalid("degenerate domain");
        }
        if self.dim == Dimension::One && !self.flux[1].is_zero() {
            return invalid("a 1D problem cannot have a y flux");
        }
        if let Diffusion::Linear(d) = self.diffusion {
            if d.iter().any(|&c| c < 0.0 || !c.is_finite()) {
                return invalid("diffusion coefficients must be non-negative");
            }
        }
        let boundary = match (self.boundary, &self.exact) {
            (Some(b), _) => b,
            (None, Some(_)) => return invalid("exact solution given without Dirichlet time derivatives"),
            (None, None) => return invalid("Dirichlet data missing"),
        };
        let initial = match (self.initial, &self.exact) {
            (Some(f), _) => f,
            (None, Some(e)) => {
                let e = e.clone();
                Arc::new(move |p| e(p, 0.0))
            }
            (None, None) => return invalid("initial condition missing"),
        };
        Ok(ProblemSpec {
            name: self.name,
            dim: self.dim,
            x_bounds: self.x_bounds,
            y_bounds: if self.dim == Dimension::One {
                (0.0, 0.0)
            } else {
                self.y_bounds
            },
            flux: self.flux,
            diffusion: self.diffusion,
            source: self.source,
            boundary,
            initial,
            exact: self.exact,
            cfl: self.cfl,
            final_time: self.final_time,
        })
    }
}

pub const BUILTIN_PROBLEMS: [&str; 4] = ["heat1d", "burgers1d", "heat2d", "heat1d_o4"];

fn space_time(f: impl Fn(Point, f64) -> f64 + Send + Sync + 'static) -> SpaceTimeFn {
    Arc::new(f)
}

/// Linear convection-diffusion with u = e^{-t} sin(x + C t) and h = (D - 1) u.
fn traveling_sine_1d(name: &str, c: f64, d: f64, cfl: f64) -> Result<ProblemSpec> {
    let value = space_time(move |p, t| (-t).exp() * (p.x + c * t).sin());
    let dt = space_time(move |p, t| {
        let a = p.x + c * t;
        (-t).exp() * (c * a.cos() - a.sin())
    });
    let dtt = space_time(move |p, t| {
        let a = p.x + c * t;
        (-t).exp() * ((1.0 - c * c) * a.sin() - 2.0 * c * a.cos())
    });
    let source = if d == 1.0 {
        Source::Zero
    } else {
        Source::Proportional(d - 1.0)
    };
    ProblemSpec::builder(name, Dimension::One)
        .x_bounds(-1.0, 1.0)
        .flux(Flux::Linear(-c), Flux::Zero)
        .diffusion(Diffusion::Linear([d, 0.0]))
        .source(source)
        .dirichlet(value.clone(), dt, Some(dtt))
        .exact(value)
        .cfl(cfl)
        .final_time(5.0)
        .build()
}

fn burgers_1d() -> Result<ProblemSpec> {
    let d = 2.0;
    let value = space_time(|p, t| (-t).exp() * p.x.sin());
    let dt = space_time(|p, t| -(-t).exp() * p.x.sin());
    let dtt = space_time(|p, t| (-t).exp() * p.x.sin());
    ProblemSpec::builder("burgers1d", Dimension::One)
        .x_bounds(-1.0, 1.0)
        .flux(Flux::Quadratic(1.0), Flux::Zero)
        .diffusion(Diffusion::Linear([d, 0.0]))
        .source(Source::Linear {
            rate: space_time(move |p, t| d - 1.0 + (-t).exp() * p.x.cos()),
            rate_gradient: Arc::new(|p, t| [-(-t).exp() * p.x.sin(), 0.0]),
        })
        .dirichlet(value.clone(), dt, Some(dtt))
        .exact(value)
        .cfl(0.4)
        .final_time(5.0)
        .build()
}

fn heat_2d() -> Result<ProblemSpec> {
    let (c, d) = (0.1, 1.0);
    // g = sin(x + Ct) cos(y + Ct), g_t = C cos(x + y + 2Ct), g_tt = -2C^2 sin(x + y + 2Ct)
    let g = move |p: Point, t: f64| (p.x + c * t).sin() * (p.y + c * t).cos();
    let value = space_time(move |p, t| (-t).exp() * g(p, t));
    let dt = space_time(move |p, t| (-t).exp() * (c * (p.x + p.y + 2.0 * c * t).cos() - g(p, t)));
    let dtt = space_time(move |p, t| {
        let s = p.x + p.y + 2.0 * c * t;
        (-t).exp() * (-2.0 * c * c * s.sin() - 2.0 * c * s.cos() + g(p, t))
    });
    ProblemSpec::builder("heat2d", Dimension::Two)
        .x_bounds(-1.0, 1.0)
        .y_bounds(-1.0, 1.0)
        .flux(Flux::Linear(-c), Flux::Linear(-c))
        .diffusion(Diffusion::Linear([d, d]))
        .source(Source::Proportional(2.0 * d - 1.0))
        .dirichlet(value.clone(), dt, Some(dtt))
        .exact(value)
        .cfl(0.2)
        .final_time(5.0)
        .build()
}

pub fn builtin_problem(name: &str) -> Result<ProblemSpec> {
    match name {
        "heat1d" => traveling_sine_1d("heat1d", 0.1, 2.0, 0.25),
        "burgers1d" => burgers_1d(),
        "heat2d" => heat_2d(),
        "heat1d_o4" => traveling_sine_1d("heat1d_o4", 0.1, 1.0, 0.25),
        _ => invalid(format!(
            "unknown problem '{name}' (known: {})",
            BUILTIN_PROBLEMS.join(", ")
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// Largest PDE residual of the exact solution.
    pub pde: f64,
    /// Largest mismatch between the Dirichlet data and the exact trace.
    pub trace: f64,
    pub dt: f64,
    pub dtt: f64,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.pde.max(self.trace).max(self.dt).max(self.dtt)
    }
}

/// Sixth-order central first derivative.
fn d1(f: &impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x - 3.0 * h) + 9.0 * f(x - 2.0 * h) - 45.0 * f(x - h) + 45.0 * f(x + h) - 9.0 * f(x + 2.0 * h) + f(x + 3.0 * h))
        / (60.0 * h)
}

/// Sixth-order central second derivative.
fn d2(f: &impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (2.0 * f(x - 3.0 * h) - 27.0 * f(x - 2.0 * h) + 270.0 * f(x - h) - 490.0 * f(x) + 270.0 * f(x + h)
        - 27.0 * f(x + 2.0 * h)
        + 2.0 * f(x + 3.0 * h))
        / (180.0 * h * h)
}

/// Finite-difference residual of the exact solution at random space-time samples.
pub fn residual_check(spec: &ProblemSpec, samples: usize, step: f64, seed: u64) -> Result<ResidualReport> {
    let Some(exact) = spec.exact.clone() else {
        return invalid(format!("problem '{}' has no exact solution", spec.name));
    };
    let dcoef = spec.diffusion_coefficients()?;
    let mut rng = StdRng::seed_from_u64(seed);
    let two_d = spec.dim == Dimension::Two;
    let mut rep = ResidualReport {
        pde: 0.0,
        trace: 0.0,
        dt: 0.0,
        dtt: 0.0,
    };
    let bd = &spec.boundary;
    for _ in 0..samples {
        let x = rng.random_range(spec.x_bounds.0..spec.x_bounds.1);
        let y = if two_d {
            rng.random_range(spec.y_bounds.0..spec.y_bounds.1)
        } else {
            0.0
        };
        let t = rng.random_range(0.0..spec.final_time);
        let p = Point::new(x, y);
        let u = exact(p, t);
        let ut = d1(&|s| exact(p, s), t, step);
        let fx = d1(&|s| spec.flux[0].value(exact(Point::new(s, y), t)), x, step);
        let uxx = d2(&|s| exact(Point::new(s, y), t), x, step);
        let (fy, uyy) = if two_d {
            (
                d1(&|s| spec.flux[1].value(exact(Point::new(x, s), t)), y, step),
                d2(&|s| exact(Point::new(x, s), t), y, step),
            )
        } else {
            (0.0, 0.0)
        };
        let r = ut + fx + fy - dcoef[0] * uxx - dcoef[1] * uyy - spec.source.value(u, p, t);
        rep.pde = rep.pde.max(r.abs());

        // Dirichlet data along the boundary: snap the sample to the nearest side.
        let q = boundary_projection(spec, p);
        rep.trace = rep.trace.max(((bd.value)(q, t) - exact(q, t)).abs());
        rep.dt = rep.dt.max(((bd.dt)(q, t) - d1(&|s| (bd.value)(q, s), t, step)).abs());
        if let Some(dtt) = &bd.dtt {
            rep.dtt = rep.dtt.max((dtt(q, t) - d2(&|s| (bd.value)(q, s), t, step)).abs());
        }
    }
    Ok(rep)
}

fn boundary_projection(spec: &ProblemSpec, p: Point) -> Point {
    let (x0, x1) = spec.x_bounds;
    let dx = [(p.x - x0).abs(), (x1 - p.x).abs()];
    if spec.dim == Dimension::One {
        return Point::new(if dx[0] < dx[1] { x0 } else { x1 }, 0.0);
    }
    let (y0, y1) = spec.y_bounds;
    let dists = [dx[0], dx[1], (p.y - y0).abs(), (y1 - p.y).abs()];
    let k = (0..4).min_by(|&a, &b| dists[a].total_cmp(&dists[b])).unwrap_or(0);
    match k {
        0 => Point::new(x0, p.y),
        1 => Point::new(x1, p.y),
        2 => Point::new(p.x, y0),
        _ => Point::new(p.x, y1),
    }
}
