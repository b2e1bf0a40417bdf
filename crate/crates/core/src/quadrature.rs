//! Gauss-Legendre quadrature and the nodal Lagrange basis built on its nodes.

use crate::error::{invalid, Error, Result};
use std::f64::consts::PI;

const MAX_POINTS: usize = 16;
const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Approximates the integral of `f` over [-1, 1].
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Legendre polynomial P_n and its derivative at x.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for m in 2..=n {
        let m = m as f64;
        let p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_POINTS {
        return invalid(format!("quadrature size {n} outside 1..={MAX_POINTS}"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    if n == 1 {
        return Ok(QuadratureRule {
            nodes,
            weights: vec![2.0],
        });
    }
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (4 * i + 3) as f64 / (4 * n + 2) as f64).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                what: "Gauss-Legendre Newton iteration",
                iterations: NEWTON_MAX_ITER,
            });
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Lagrange basis of degree k collocated at the k+1 Gauss-Legendre nodes.
#[derive(Debug, Clone)]
pub struct NodalBasis {
    pub degree: usize,
    pub rule: QuadratureRule,
    /// `diff[a][b]` is the derivative of basis function b at node a.
    pub diff: Vec<Vec<f64>>,
    bary: Vec<f64>,
}

impl NodalBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree + 1 > MAX_POINTS {
            return invalid(format!("degree {degree} too large"));
        }
        let rule = gauss_legendre(degree + 1)?;
        let n = degree + 1;
        let x = &rule.nodes;
        let bary: Vec<f64> = (0..n)
            .map(|j| 1.0 / (0..n).filter(|&m| m != j).map(|m| x[j] - x[m]).product::<f64>())
            .collect();
        let mut diff = vec![vec![0.0; n]; n];
        for a in 0..n {
            let mut diag = 0.0;
            for b in 0..n {
                if a != b {
                    let d = (bary[b] / bary[a]) / (x[a] - x[b]);
                    diff[a][b] = d;
                    diag -= d;
                }
            }
            diff[a][a] = diag;
        }
        Ok(Self {
            degree,
            rule,
            diff,
            bary,
        })
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.rule.weights
    }

    pub fn barycentric_weights(&self) -> &[f64] {
        &self.bary
    }

    /// Values of every basis function at xi.
    pub fn values_at(&self, xi: f64) -> Vec<f64> {
        let x = self.nodes();
        (0..self.len())
            .map(|b| {
                (0..self.len())
                    .filter(|&m| m != b)
                    .map(|m| (xi - x[m]) / (x[b] - x[m]))
                    .product()
            })
            .collect()
    }

    /// Reference-coordinate derivatives of order `order` of every basis function at xi.
    pub fn derivatives_at(&self, xi: f64, order: usize) -> Result<Vec<f64>> {
        if order > self.degree {
            return invalid(format!("derivative order {order} exceeds degree {}", self.degree));
        }
        let mut row = self.values_at(xi);
        for _ in 0..order {
            row = (0..self.len())
                .map(|b| (0..self.len()).map(|a| row[a] * self.diff[a][b]).sum())
                .collect();
        }
        Ok(row)
    }

    /// Interpolant of the nodal values evaluated at xi.
    pub fn evaluate(&self, values: &[f64], xi: f64) -> f64 {
        self.values_at(xi).iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// Reference derivative of the interpolant; divide by J^order for physical coordinates.
    pub fn evaluate_derivative(&self, values: &[f64], xi: f64, order: usize) -> Result<f64> {
        Ok(self
            .derivatives_at(xi, order)?
            .iter()
            .zip(values)
            .map(|(p, v)| p * v)
            .sum())
    }
}
