//! Hand-derived closed forms of the third-order stage boundary values for the
//! three model problems, compared with the point treatment.

use ldg_imex::imex::ImexTableau;
use ldg_imex::mesh::Point;
use ldg_imex::problem::builtin_problem;
use ldg_imex::treatment::{BoundaryDerivatives, PointBoundaryData, PointModel, PointTreatment, TreatmentAlgorithm};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::sync::Arc;

/// Named coefficients of the third-order pair, computed independently of `ImexTableau`.
struct Coef {
    g: f64,
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
}

impl Coef {
    fn new() -> Self {
        let g = 1767732205903.0 / 4055673282236.0;
        let b1 = -1.5 * g * g + 4.0 * g - 0.25;
        let b2 = 1.5 * g * g - 5.0 * g + 1.25;
        let a1 = -0.35;
        let a2 = (1.0 / 3.0 - 2.0 * g * g - 2.0 * b2 * a1 * g) / (g * (1.0 - g));
        Self { g, a1, a2, b1, b2 }
    }

    fn c(&self) -> [f64; 4] {
        [0.0, self.g, (1.0 + self.g) / 2.0, 1.0]
    }
}

struct State {
    t: f64,
    tau: f64,
    w: f64,
    wt: [f64; 4],
    d: [BoundaryDerivatives; 3],
}

fn random_derivs(rng: &mut StdRng, two_d: bool) -> BoundaryDerivatives {
    let mut r = || rng.random_range(-2.0..2.0);
    let mut d = BoundaryDerivatives {
        ux: r(),
        uxx: r(),
        uxxx: r(),
        ..Default::default()
    };
    if two_d {
        d.uy = r();
        d.uxy = r();
        d.uyy = r();
        d.uyyy = r();
        d.uxxy = r();
        d.uyyx = r();
    }
    d
}

fn random_state(rng: &mut StdRng, two_d: bool) -> State {
    State {
        t: rng.random_range(0.0..5.0),
        tau: rng.random_range(1e-3..0.2),
        w: rng.random_range(-1.0..1.0),
        wt: std::array::from_fn(|_| rng.random_range(-1.0..1.0)),
        d: std::array::from_fn(|_| random_derivs(rng, two_d)),
    }
}

/// Treated stage values 1..=3 and the treated gradients.
fn run(problem: &str, alg: TreatmentAlgorithm, s: &State, position: Point) -> ([f64; 4], [(f64, f64); 4]) {
    let spec = builtin_problem(problem).unwrap();
    let model = Arc::new(PointModel::new(&spec).unwrap());
    let tab = Arc::new(ImexTableau::ark3());
    let data = PointBoundaryData {
        position,
        value: s.w,
        dt: s.wt.to_vec(),
        dtt: 0.0,
    };
    let mut pt = PointTreatment::new(model, tab, alg, s.t, s.tau, data, s.d[0]).unwrap();
    let mut u = [s.w; 4];
    for (i, ui) in u.iter_mut().enumerate().skip(1) {
        *ui = pt.advance(i).unwrap();
        if i < 3 {
            pt.record_stage(i, s.d[i]).unwrap();
        }
    }
    let grads = std::array::from_fn(|i| pt.stage_gradient(i).unwrap());
    (u, grads)
}

/// Largest deviation relative to max(1, |value|) over every compared stage value.
#[derive(Debug, Clone, Copy, Default)]
pub struct Deviation {
    pub max: f64,
    pub compared: usize,
}

impl Deviation {
    fn record(&mut self, got: f64, want: f64) {
        let d = (got - want).abs() / got.abs().max(want.abs()).max(1.0);
        self.max = if d.is_nan() { f64::INFINITY } else { self.max.max(d) };
        self.compared += 1;
    }
}

fn sides_1d() -> [Point; 2] {
    [Point::new(-1.0, 0.0), Point::new(1.0, 0.0)]
}

/// Stage-2 and stage-3 skeleton shared by all three problems, where `xi_gap(i)` is
/// xi^{n,0} - xi^{n,i} with the model's own stage gradient and Taylor value.
fn stage_2(k: &Coef, s: &State, u1: f64, xi_gap: f64) -> f64 {
    let tau = s.tau;
    s.w + k.a1 * tau * s.wt[1]
        + k.g * tau * s.wt[2]
        + ((1.0 - k.g) / 2.0 - k.a1) * (u1 - s.w) / k.g
        + k.g * tau * xi_gap
}

fn stage_3(k: &Coef, s: &State, u1: f64, u2: f64, xi_gap: f64) -> f64 {
    let (g, tau) = (k.g, s.tau);
    s.w + (1.0 - k.a2 - (k.b2 - k.a2) * k.a1 / g) * tau * s.wt[1]
        + k.a2 * tau * s.wt[2]
        + g * tau * s.wt[3]
        + (k.a2 + k.b1 - 1.0 - (k.b2 - k.a2) / g * ((1.0 - g) / 2.0 - k.a1)) * (u1 - s.w) / g
        + (k.b2 - k.a2) / g * (u2 - s.w)
        + g * tau * xi_gap
}

/// Gradient increments u_x^{n,i} - u_x^n of the anchored and staged variants.
fn ux_increment(k: &Coef, s: &State, alg: TreatmentAlgorithm, i: usize, xi_x: [f64; 3], psi_x: [f64; 3]) -> f64 {
    let tau = s.tau;
    let c = k.c();
    match (alg, i) {
        (_, 1) => k.g * tau * (xi_x[0] + psi_x[0]),
        (TreatmentAlgorithm::Anchored, _) => c[i] * tau * (xi_x[0] + psi_x[0]),
        (TreatmentAlgorithm::Staged, 2) => {
            tau * (((1.0 + k.g) / 2.0 - k.a1) * xi_x[0] + k.a1 * xi_x[1] + ((1.0 - k.g) / 2.0 + k.g) * psi_x[1])
        }
        (TreatmentAlgorithm::Staged, _) => {
            tau * ((1.0 - k.a2) * xi_x[1] + k.a2 * xi_x[2] + k.b1 * psi_x[1] + (k.b2 + k.g) * psi_x[2])
        }
    }
}

/// Heat equation with advection: all stages, both sides, `states` random states per algorithm.
pub fn heat1d_deviation(states: usize, seed: u64) -> Deviation {
    let mut dev = Deviation::default();
    let (cc, dd) = (0.1, 2.0);
    let k = Coef::new();
    let mut rng = StdRng::seed_from_u64(seed);
    for alg in [TreatmentAlgorithm::Anchored, TreatmentAlgorithm::Staged] {
        for _ in 0..states {
            let s = random_state(&mut rng, false);
            for p in sides_1d() {
                let (u, grads) = run("heat1d", alg, &s, p);
                let (g, tau, d0) = (k.g, s.tau, s.d[0]);
                let expect1 = s.w + g * tau * s.wt[1]
                    - g * g * tau * tau * (dd - 1.0) * s.wt[0]
                    - g * g * tau * tau * cc * ((dd - 1.0) * d0.ux + cc * d0.uxx + dd * d0.uxxx);
                dev.record(u[1], expect1);

                let xi_x = |j: usize| cc * s.d[j].uxx + (dd - 1.0) * grads[j].0;
                let psi_x = |j: usize| dd * s.d[j].uxxx;
                let xs = [xi_x(0), xi_x(1), xi_x(2)];
                let ps = [psi_x(0), psi_x(1), psi_x(2)];
                let c = k.c();
                let gap = |i: usize| -cc * ux_increment(&k, &s, alg, i, xs, ps) - (dd - 1.0) * c[i] * tau * s.wt[0];
                let expect2 = stage_2(&k, &s, u[1], gap(2));
                dev.record(u[2], expect2);
                let expect3 = stage_3(&k, &s, u[1], u[2], gap(3));
                dev.record(u[3], expect3);
            }
        }
    }
    dev
}

/// Viscous Burgers with a source: all stages, both sides.
pub fn burgers1d_deviation(states: usize, seed: u64) -> Deviation {
    let mut dev = Deviation::default();
    let dd = 2.0;
    let k = Coef::new();
    let c = k.c();
    let mut rng = StdRng::seed_from_u64(seed);
    for alg in [TreatmentAlgorithm::Anchored, TreatmentAlgorithm::Staged] {
        for _ in 0..states {
            let s = random_state(&mut rng, false);
            for pos in sides_1d() {
                let (u, grads) = run("burgers1d", alg, &s, pos);
                let x = pos.x;
                let p = |t: f64| dd - 1.0 + (-t).exp() * x.cos();
                let px = |t: f64| -(-t).exp() * x.sin();
                let (g, tau, d0, w) = (k.g, s.tau, s.d[0], s.w);
                let t_at = |i: usize| s.t + c[i] * tau;
                let expect1 = w
                    + g * tau * (s.wt[1] + p(s.t) * w - w * d0.ux)
                    + g * tau
                        * (w + g * tau * s.wt[0])
                        * (-p(t_at(1))
                            + d0.ux
                            + g * tau * (-d0.ux * d0.ux - w * d0.uxx + px(s.t) * w + p(s.t) * d0.ux + dd * d0.uxxx));
                dev.record(u[1], expect1);

                // Taylor values u_h at stage times and the stage gradients they pair with.
                let uh = |i: usize| w + c[i] * tau * s.wt[0];
                let xi_x = |j: usize| {
                    let (uj, uxj, tj) = (uh(j), grads[j].0, t_at(j));
                    -uxj * uxj - uj * s.d[j].uxx + px(tj) * uj + p(tj) * uxj
                };
                let xs = [xi_x(0), xi_x(1), xi_x(2)];
                let ps = [dd * s.d[0].uxxx, dd * s.d[1].uxxx, dd * s.d[2].uxxx];
                let xi0 = -w * d0.ux + p(s.t) * w;
                let gap = |i: usize| {
                    let uxi = d0.ux + ux_increment(&k, &s, alg, i, xs, ps);
                    xi0 + uh(i) * (uxi - p(t_at(i)))
                };
                let expect2 = stage_2(&k, &s, u[1], gap(2));
                dev.record(u[2], expect2);
                let expect3 = stage_3(&k, &s, u[1], u[2], gap(3));
                dev.record(u[3], expect3);
            }
        }
    }
    dev
}

/// Two-dimensional heat equation with advection: all stages, all four sides.
pub fn heat2d_deviation(states: usize, seed: u64) -> Deviation {
    let mut dev = Deviation::default();
    let (cc, dd) = (0.1, 1.0);
    let lam = 2.0 * dd - 1.0;
    let k = Coef::new();
    let c = k.c();
    let sides = [
        Point::new(-1.0, 0.3),
        Point::new(1.0, -0.6),
        Point::new(0.2, -1.0),
        Point::new(-0.7, 1.0),
    ];
    let mut rng = StdRng::seed_from_u64(seed);
    for alg in [TreatmentAlgorithm::Anchored, TreatmentAlgorithm::Staged] {
        for _ in 0..states {
            let s = random_state(&mut rng, true);
            for pos in sides {
                let (u, grads) = run("heat2d", alg, &s, pos);
                let (g, tau, d0) = (k.g, s.tau, s.d[0]);
                let expect1 = s.w + g * tau * s.wt[1]
                    - g * g * tau * tau * lam * s.wt[0]
                    - g * g * tau * tau * cc * (cc * d0.uxx + cc * d0.uxy + lam * d0.ux + dd * d0.uxxx + dd * d0.uyyx)
                    - g * g * tau * tau * cc * (cc * d0.uxy + cc * d0.uyy + lam * d0.uy + dd * d0.uxxy + dd * d0.uyyy);
                dev.record(u[1], expect1);

                let xs = std::array::from_fn(|j| cc * s.d[j].uxx + cc * s.d[j].uxy + lam * grads[j].0);
                let ps = std::array::from_fn(|j| dd * s.d[j].uxxx + dd * s.d[j].uyyx);
                let ys = std::array::from_fn(|j| cc * s.d[j].uxy + cc * s.d[j].uyy + lam * grads[j].1);
                let qs = std::array::from_fn(|j| dd * s.d[j].uxxy + dd * s.d[j].uyyy);
                let gap = |i: usize| {
                    -cc * ux_increment(&k, &s, alg, i, xs, ps)
                        - cc * ux_increment(&k, &s, alg, i, ys, qs)
                        - lam * c[i] * tau * s.wt[0]
                };
                let expect2 = stage_2(&k, &s, u[1], gap(2));
                dev.record(u[2], expect2);
                let expect3 = stage_3(&k, &s, u[1], u[2], gap(3));
                dev.record(u[3], expect3);
            }
        }
    }
    dev
}

/// Anchored and staged first-stage values on the 1D problems.
pub fn stage_one_deviation(states: usize, seed: u64) -> Deviation {
    let mut dev = Deviation::default();
    let mut rng = StdRng::seed_from_u64(seed);
    for problem in ["heat1d", "burgers1d"] {
        for _ in 0..states {
            let s = random_state(&mut rng, false);
            for p in sides_1d() {
                let (a, _) = run(problem, TreatmentAlgorithm::Anchored, &s, p);
                let (b, _) = run(problem, TreatmentAlgorithm::Staged, &s, p);
                dev.record(a[1], b[1]);
            }
        }
    }
    dev
}
