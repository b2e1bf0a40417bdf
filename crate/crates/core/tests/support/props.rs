//! Measured quantities behind the property checks, each returned as a number so
//! callers can assert on it or report it.

use ldg_imex::field::NodalField;
use ldg_imex::imex::{ImexSolver, ImexTableau, NaiveBoundary};
use ldg_imex::mesh::{CartesianMesh, Dimension, Point};
use ldg_imex::problem::{builtin_problem, Diffusion, Flux, ProblemSpec, SpaceTimeFn};
use ldg_imex::quadrature::{gauss_legendre, NodalBasis};
use ldg_imex::space::DgSpace;
use ldg_imex::treatment::{
    first_difference_weights, second_difference, BoundaryDerivatives, PointBoundaryData, PointModel, PointTreatment,
    TreatedBoundary, TreatmentAlgorithm,
};
use std::sync::Arc;

pub fn space_1d(n: usize, degree: usize) -> Arc<DgSpace> {
    Arc::new(DgSpace::new(CartesianMesh::new_1d((-1.0, 1.0), n).unwrap(), degree).unwrap())
}

pub fn space_2d(bx: (f64, f64), by: (f64, f64), n: usize, degree: usize) -> Arc<DgSpace> {
    Arc::new(DgSpace::new(CartesianMesh::new_2d(bx, by, n, n).unwrap(), degree).unwrap())
}

/// Error of the n-point Gauss rule on x^m.
pub fn gauss_monomial_error(n: usize, m: usize) -> f64 {
    let rule = gauss_legendre(n).unwrap();
    let exact = if m % 2 == 1 { 0.0 } else { 2.0 / (m as f64 + 1.0) };
    (rule.integrate(|x| x.powi(m as i32)) - exact).abs()
}

/// Relative error of the nodal basis derivative of `order` for the polynomial with `coef`.
pub fn basis_derivative_error(degree: usize, coef: &[f64], xi: f64, order: usize) -> f64 {
    let basis = NodalBasis::new(degree).unwrap();
    let p = |x: f64, d: usize| -> f64 {
        (d..=degree)
            .map(|k| {
                let falling: f64 = (0..d).map(|r| (k - r) as f64).product();
                coef[k] * falling * x.powi((k - d) as i32)
            })
            .sum()
    };
    let values: Vec<f64> = basis.nodes().iter().map(|&x| p(x, 0)).collect();
    let got = basis.evaluate_derivative(&values, xi, order).unwrap();
    let want = p(xi, order);
    (got - want).abs() / want.abs().max(1.0)
}

/// Errors of the second-difference and first-difference stencils on a x^2 + b x + c,
/// scaled by their rounding bounds (a value <= 1 passes).
pub fn stencil_scaled_errors(a: f64, b: f64, c: f64, h: f64, n: usize, idx: usize) -> [f64; 2] {
    let x0 = idx as f64 * h;
    let f = |x: f64| a * x * x + b * x + c;
    let v = second_difference(|o| f(x0 + o as f64 * h), idx, n, h);
    let scale = (0..n).map(|k| f(k as f64 * h).abs()).fold(1.0f64, f64::max);
    let d: f64 = first_difference_weights(idx, n, h)
        .iter()
        .map(|&(o, w)| w * f(x0 + o as f64 * h))
        .sum();
    [
        (v - 2.0 * a).abs() / (1e-13 * scale / (h * h)),
        (d - (2.0 * a * x0 + b)).abs() / (1e-11 * (1.0 + 1.0 / h)),
    ]
}

fn constant_problem(dim: Dimension, value: f64, flux: [Flux; 2], d: f64) -> Arc<ProblemSpec> {
    let zero: SpaceTimeFn = Arc::new(|_, _| 0.0);
    Arc::new(
        ProblemSpec::builder("constant", dim)
            .flux(flux[0].clone(), flux[1].clone())
            .diffusion(Diffusion::Linear([d, d]))
            .dirichlet(Arc::new(move |_, _| value), zero.clone(), Some(zero))
            .initial(move |_| value)
            .build()
            .unwrap(),
    )
}

/// Largest drift from a constant state after three steps with matching constant data.
pub fn constant_drift(value: f64, tau: f64, d: f64, treated: bool, two_d: bool) -> f64 {
    let (space, problem) = if two_d {
        (
            space_2d((-1.0, 1.0), (-1.0, 1.0), 4, 2),
            constant_problem(Dimension::Two, value, [Flux::Linear(0.3), Flux::Quadratic(1.0)], d),
        )
    } else {
        (
            space_1d(6, 2),
            constant_problem(Dimension::One, value, [Flux::Quadratic(1.0), Flux::Zero], d),
        )
    };
    let mut solver = ImexSolver::new(space.clone(), problem.clone(), ImexTableau::ark3()).unwrap();
    let u0 = NodalField::interpolate(space.clone(), |_| value);
    let (u, _) = if treated {
        let mut bc = TreatedBoundary::new(space.clone(), problem.clone(), TreatmentAlgorithm::Staged).unwrap();
        solver.integrate(u0, 3.0 * tau, tau, &mut bc).unwrap()
    } else {
        let mut bc = NaiveBoundary {
            space: space.clone(),
            problem: problem.clone(),
        };
        solver.integrate(u0, 3.0 * tau, tau, &mut bc).unwrap()
    };
    u.values.iter().fold(0.0f64, |m, v| m.max((v - value).abs()))
}

/// Largest relative implicit-solve residual over two heat1d steps.
pub fn solve_residual(n: usize, tau: f64, tableau: &str) -> f64 {
    let problem = Arc::new(builtin_problem("heat1d").unwrap());
    let tab = ImexTableau::builtin(tableau).unwrap();
    let space = space_1d(n, tab.order - 1);
    let mut solver = ImexSolver::new(space.clone(), problem.clone(), tab).unwrap();
    let u0 = NodalField::interpolate(space.clone(), |p| (problem.initial)(p));
    let mut bc = NaiveBoundary { space, problem };
    solver.integrate(u0, 2.0 * tau, tau, &mut bc).unwrap();
    solver.max_solve_residual
}

/// Largest relative error of treated stage values for data a + b t (zero spatial derivatives).
pub fn linear_data_error(a: f64, b: f64, t_n: f64, tau: f64, d: f64, tableau: &str, alg: TreatmentAlgorithm) -> f64 {
    let zero: SpaceTimeFn = Arc::new(|_, _| 0.0);
    let problem = ProblemSpec::builder("ramp", Dimension::One)
        .diffusion(Diffusion::Linear([d, 0.0]))
        .dirichlet(Arc::new(move |_, t| a + b * t), Arc::new(move |_, _| b), Some(zero))
        .initial(move |_| a)
        .build()
        .unwrap();
    let tab = Arc::new(ImexTableau::builtin(tableau).unwrap());
    let model = Arc::new(PointModel::new(&problem).unwrap());
    let data = PointBoundaryData {
        position: Point::new(-1.0, 0.0),
        value: a + b * t_n,
        dt: vec![b; tab.stages()],
        dtt: 0.0,
    };
    let mut pt = PointTreatment::new(model, tab.clone(), alg, t_n, tau, data, BoundaryDerivatives::default()).unwrap();
    let mut worst = 0.0f64;
    for i in 1..tab.stages() {
        let u = pt.advance(i).unwrap();
        let want = a + b * (t_n + tab.c[i] * tau);
        worst = worst.max((u - want).abs() / want.abs().max(1.0));
        pt.record_stage(i, BoundaryDerivatives::default()).unwrap();
    }
    worst
}

/// Largest violation of the order conditions up to third order, including the
/// explicit/implicit coupling conditions.
pub fn tableau_identity_residual(name: &str) -> f64 {
    let t = ImexTableau::builtin(name).unwrap();
    let s = t.stages();
    let mut worst = 0.0f64;
    for i in 0..s {
        let se: f64 = t.explicit[i].iter().sum();
        let si: f64 = t.implicit[i].iter().sum();
        worst = worst.max((se - t.c[i]).abs()).max((si - t.c[i]).abs());
        if t.explicit[i][i..].iter().any(|&v| v != 0.0) {
            return f64::INFINITY;
        }
    }
    for b in [&t.b_explicit, &t.b_implicit] {
        let sum: f64 = b.iter().sum();
        let bc: f64 = b.iter().zip(&t.c).map(|(b, c)| b * c).sum();
        let bc2: f64 = b.iter().zip(&t.c).map(|(b, c)| b * c * c).sum();
        worst = worst
            .max((sum - 1.0).abs())
            .max((bc - 0.5).abs())
            .max((bc2 - 1.0 / 3.0).abs());
        for m in [&t.explicit, &t.implicit] {
            let v: f64 = (0..s)
                .map(|i| b[i] * (0..s).map(|j| m[i][j] * t.c[j]).sum::<f64>())
                .sum();
            worst = worst.max((v - 1.0 / 6.0).abs());
        }
    }
    worst
}

/// Scalar additive ODE y' = cos t - y^2 / 2 (explicit) - 3 y (implicit) on [0, 1].
fn ark_solve(t: &ImexTableau, steps: usize) -> f64 {
    let fe = |time: f64, y: f64| time.cos() - 0.5 * y * y;
    let tau = 1.0 / steps as f64;
    let s = t.stages();
    let mut y = 1.0;
    for n in 0..steps {
        let t0 = n as f64 * tau;
        let (mut e, mut im) = (vec![0.0; s], vec![0.0; s]);
        for i in 0..s {
            let mut rhs = y;
            for j in 0..i {
                rhs += tau * (t.explicit[i][j] * e[j] + t.implicit[i][j] * im[j]);
            }
            let yi = rhs / (1.0 + 3.0 * tau * t.implicit[i][i]);
            e[i] = fe(t0 + t.c[i] * tau, yi);
            im[i] = -3.0 * yi;
        }
        y += tau
            * (0..s)
                .map(|j| t.b_explicit[j] * e[j] + t.b_implicit[j] * im[j])
                .sum::<f64>();
    }
    y
}

fn rk4_reference() -> f64 {
    let f = |time: f64, y: f64| time.cos() - 0.5 * y * y - 3.0 * y;
    let n = 200_000;
    let h = 1.0 / n as f64;
    let mut y = 1.0;
    for k in 0..n {
        let t = k as f64 * h;
        let k1 = f(t, y);
        let k2 = f(t + h / 2.0, y + h / 2.0 * k1);
        let k3 = f(t + h / 2.0, y + h / 2.0 * k2);
        let k4 = f(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

/// Observed order of the tableau on the scalar ODE between 20 and 40 steps.
pub fn scalar_ode_order(name: &str) -> f64 {
    let exact = rk4_reference();
    let t = ImexTableau::builtin(name).unwrap();
    let e1 = (ark_solve(&t, 20) - exact).abs();
    let e2 = (ark_solve(&t, 40) - exact).abs();
    (e1 / e2).log2()
}

/// Observed order on y' = -y (explicit) - 2 y (implicit), y(0) = 1 on [0, 1], fitted
/// between 40 and 640 steps.
pub fn exponential_order(name: &str) -> f64 {
    let t = ImexTableau::builtin(name).unwrap();
    let s = t.stages();
    let solve = |steps: usize| {
        let tau = 1.0 / steps as f64;
        let mut y = 1.0f64;
        for _ in 0..steps {
            let (mut e, mut im) = (vec![0.0; s], vec![0.0; s]);
            for i in 0..s {
                let mut rhs = y;
                for j in 0..i {
                    rhs += tau * (t.explicit[i][j] * e[j] + t.implicit[i][j] * im[j]);
                }
                let yi = rhs / (1.0 + 2.0 * tau * t.implicit[i][i]);
                e[i] = -yi;
                im[i] = -2.0 * yi;
            }
            y += tau * (0..s).map(|j| t.b_explicit[j] * e[j] + t.b_implicit[j] * im[j]).sum::<f64>();
        }
        (y - (-3.0f64).exp()).abs()
    };
    (solve(40) / solve(640)).ln() / 16f64.ln()
}

/// Exact derivatives of e^{-t} sin(x + C t) at a point.
fn heat1d_derivs(x: f64, t: f64) -> BoundaryDerivatives {
    let c = 0.1;
    let (s, co, e) = ((x + c * t).sin(), (x + c * t).cos(), (-t).exp());
    BoundaryDerivatives {
        ux: e * co,
        uxx: -e * s,
        uxxx: -e * co,
        ..Default::default()
    }
}

/// Largest treated-minus-exact stage value at both heat1d boundaries over one step,
/// fed with exact derivatives.
pub fn treated_stage_error(alg: TreatmentAlgorithm, tau: f64) -> f64 {
    let problem = builtin_problem("heat1d").unwrap();
    let tab = Arc::new(ImexTableau::ark3());
    let model = Arc::new(PointModel::new(&problem).unwrap());
    let mut worst = 0.0f64;
    for x in [-1.0, 1.0] {
        let position = Point::new(x, 0.0);
        let t_n = 0.7;
        let bd = &problem.boundary;
        let data = PointBoundaryData {
            position,
            value: (bd.value)(position, t_n),
            dt: tab.c.iter().map(|c| (bd.dt)(position, t_n + c * tau)).collect(),
            dtt: 0.0,
        };
        let mut pt =
            PointTreatment::new(model.clone(), tab.clone(), alg, t_n, tau, data, heat1d_derivs(x, t_n)).unwrap();
        for i in 1..tab.stages() {
            let t_i = t_n + tab.c[i] * tau;
            let u = pt.advance(i).unwrap();
            worst = worst.max((u - (bd.value)(position, t_i)).abs());
            pt.record_stage(i, heat1d_derivs(x, t_i)).unwrap();
        }
    }
    worst
}

/// Smallest log2 ratio of successive values, for steps that halve.
pub fn min_slope(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min)
}

/// Smallest consistency slope of the treated values at steps 0.2, 0.1, 0.05.
pub fn consistency_slope(alg: TreatmentAlgorithm) -> f64 {
    let errs: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&tau| treated_stage_error(alg, tau))
        .collect();
    min_slope(&errs)
}

/// Largest difference between anchored and staged treated values over one step at N = 40.
pub fn algorithm_gap(tau: f64) -> f64 {
    let problem = Arc::new(builtin_problem("heat1d").unwrap());
    let space = space_1d(40, 2);
    let u0 = NodalField::interpolate(space.clone(), |p| (problem.initial)(p));
    let mut traces = Vec::new();
    for alg in [TreatmentAlgorithm::Anchored, TreatmentAlgorithm::Staged] {
        let mut solver = ImexSolver::new(space.clone(), problem.clone(), ImexTableau::ark3()).unwrap();
        let mut bc = TreatedBoundary::new(space.clone(), problem.clone(), alg)
            .unwrap()
            .with_trace();
        solver.step(&u0, 0.0, tau, &mut bc).unwrap();
        traces.push(bc.trace.take().unwrap());
    }
    traces[0]
        .iter()
        .zip(&traces[1])
        .fold(0.0f64, |m, (a, b)| m.max((a.treated - b.treated).abs()))
}

/// Smallest agreement slope of the two algorithms at steps 0.04, 0.02, 0.01.
pub fn algorithm_agreement_slope() -> f64 {
    let gaps: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&tau| algorithm_gap(tau)).collect();
    min_slope(&gaps)
}
