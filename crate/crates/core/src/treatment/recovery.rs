//! Boundary derivative recovery from the local polynomials and neighbouring cells.

use crate::error::{invalid, Result};
use crate::field::NodalField;
use crate::mesh::Dimension;
use crate::space::{BoundaryPoint, DgSpace};

/// Derivative estimates at one boundary point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundaryDerivatives {
    pub ux: f64,
    pub uy: f64,
    pub uxx: f64,
    pub uxy: f64,
    pub uyy: f64,
    /// Third derivatives entering psi; built from neighbouring cells.
    pub uxxx: f64,
    pub uyyy: f64,
    pub uxxy: f64,
    pub uyyx: f64,
    /// Fourth-order extras (1D): u_xxx of the local polynomial, u_xxxx and u_xxxxx.
    pub uxxx_local: f64,
    pub uxxxx: f64,
    pub uxxxxx: f64,
}

/// Second difference of samples taken at cells `idx - 1, idx, idx + 1` (centered) or
/// at `idx, idx ± 1, idx ± 2` (one-sided, moving inwards) when `idx` is on the edge.
pub fn second_difference(f: impl Fn(isize) -> f64, idx: usize, n: usize, h: f64) -> f64 {
    let (a, b, c) = if idx > 0 && idx + 1 < n {
        (f(-1), f(0), f(1))
    } else if idx == 0 {
        (f(0), f(1), f(2))
    } else {
        (f(0), f(-1), f(-2))
    };
    (a - 2.0 * b + c) / (h * h)
}

/// Three-point first derivative weights at offsets relative to `idx`.
pub fn first_difference_weights(idx: usize, n: usize, h: f64) -> [(isize, f64); 3] {
    let s = 1.0 / (2.0 * h);
    if idx > 0 && idx + 1 < n {
        [(-1, -s), (0, 0.0), (1, s)]
    } else if idx == 0 {
        [(0, -3.0 * s), (1, 4.0 * s), (2, -s)]
    } else {
        [(0, 3.0 * s), (-1, -4.0 * s), (-2, s)]
    }
}

/// One-sided two-point difference moving inwards from an edge cell.
fn inward_difference(f: impl Fn(isize) -> f64, idx: usize, h: f64) -> f64 {
    if idx == 0 {
        (f(1) - f(0)) / h
    } else {
        (f(0) - f(-1)) / h
    }
}

fn min_cells(order: usize) -> usize {
    if order >= 4 {
        5
    } else {
        3
    }
}

/// Basis derivative rows at a boundary point's reference coordinates, reused across steps.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryRows {
    /// `rx[p][a]`: p-th physical x-derivative of basis function a.
    rx: Vec<Vec<f64>>,
    /// `ry[q][b]`: q-th physical y-derivative of basis function b (a single 1 in 1D).
    ry: Vec<Vec<f64>>,
}

impl RecoveryRows {
    pub fn new(space: &DgSpace, bp: &BoundaryPoint) -> Result<Self> {
        let b = &space.basis;
        let m = &space.mesh;
        let (xi, eta) = bp.reference;
        let rx = (0..=space.degree())
            .map(|p| {
                Ok(b.derivatives_at(xi, p)?
                    .into_iter()
                    .map(|v| v / (0.5 * m.dx).powi(p as i32))
                    .collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let ry = match m.dim {
            Dimension::One => vec![vec![1.0]],
            Dimension::Two => (0..=space.degree())
                .map(|q| {
                    Ok(b.derivatives_at(eta, q)?
                        .into_iter()
                        .map(|v| v / (0.5 * m.dy).powi(q as i32))
                        .collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()?,
        };
        Ok(Self { rx, ry })
    }

    fn derivative(&self, u: &NodalField, i: usize, j: usize, p: usize, q: usize) -> f64 {
        let (Some(rx), Some(ry)) = (self.rx.get(p), self.ry.get(q)) else {
            return 0.0;
        };
        let m = &u.space.mesh;
        if i >= m.nx || j >= m.ny {
            return f64::NAN;
        }
        let vals = u.cell_values(i, j);
        let dot = |v: &[f64]| rx.iter().zip(v).fold(0.0, |acc, (w, v)| acc + w * v);
        if let [wy] = ry.as_slice() {
            return wy * dot(vals);
        }
        ry.iter()
            .zip(vals.chunks_exact(rx.len()))
            .map(|(wy, v)| wy * dot(v))
            .sum()
    }
}

/// Recovers the derivatives needed by the stage treatment at `bp` for a scheme of temporal `order`.
pub fn recover_derivatives(u: &NodalField, bp: &BoundaryPoint, order: usize) -> Result<BoundaryDerivatives> {
    recover_with_rows(u, bp, &RecoveryRows::new(&u.space, bp)?, order)
}

/// As [`recover_derivatives`], with precomputed basis rows for the point.
pub fn recover_with_rows(
    u: &NodalField,
    bp: &BoundaryPoint,
    rows: &RecoveryRows,
    order: usize,
) -> Result<BoundaryDerivatives> {
    let s = &*u.space;
    let m = &s.mesh;
    let need = min_cells(order);
    let two_d = m.dim == Dimension::Two;
    if m.nx < need || (two_d && m.ny < need) {
        return invalid(format!("derivative recovery needs at least {need} cells per direction"));
    }
    if !(3..=4).contains(&order) {
        return invalid(format!("no recovery recipe for order {order}"));
    }
    if order == 4 && (two_d || s.degree() < 3) {
        return invalid("fourth-order recovery needs a 1D mesh and degree >= 3");
    }
    if s.degree() < 2 {
        return invalid("derivative recovery needs degree >= 2");
    }
    let (i, j) = bp.cell;
    let sample = |di: isize, dj: isize, p: usize, q: usize| -> f64 {
        let (ci, cj) = (i as isize + di, j as isize + dj);
        if ci < 0 || cj < 0 {
            return f64::NAN;
        }
        rows.derivative(u, ci as usize, cj as usize, p, q)
    };
    let local = |p, q| sample(0, 0, p, q);
    let mut d = BoundaryDerivatives {
        ux: local(1, 0),
        uxx: local(2, 0),
        ..Default::default()
    };
    d.uxxx = second_difference(|o| sample(o, 0, 1, 0), i, m.nx, m.dx);
    if two_d {
        d.uy = local(0, 1);
        d.uxy = local(1, 1);
        d.uyy = local(0, 2);
        d.uyyy = second_difference(|o| sample(0, o, 0, 1), j, m.ny, m.dy);
        let wx = first_difference_weights(i, m.nx, m.dx);
        let wy = first_difference_weights(j, m.ny, m.dy);
        let mixed = |p: usize, q: usize| -> f64 {
            let mut acc = 0.0;
            for &(oi, a) in &wx {
                for &(oj, b) in &wy {
                    if a != 0.0 && b != 0.0 {
                        acc += a * b * sample(oi, oj, p, q);
                    }
                }
            }
            acc
        };
        d.uxxy = mixed(1, 0);
        d.uyyx = mixed(0, 1);
    }
    if order == 4 {
        d.uxxx_local = local(3, 0);
        d.uxxx = first_difference_weights(i, m.nx, m.dx)
            .iter()
            .map(|&(o, w)| w * sample(o, 0, 2, 0))
            .sum();
        d.uxxxx = inward_difference(|o| sample(o, 0, 3, 0), i, m.dx);
        d.uxxxxx = second_difference(|o| sample(o, 0, 3, 0), i, m.nx, m.dx);
    }
    if [
        d.ux, d.uy, d.uxx, d.uxy, d.uyy, d.uxxx, d.uyyy, d.uxxy, d.uyyx, d.uxxxx, d.uxxxxx,
    ]
    .iter()
    .any(|v| !v.is_finite())
    {
        return invalid("non-finite derivative recovered");
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sided_second_difference_of_cubic_slope() {
        // u = x^3 sampled as u_x = 3x^2 at offsets 0, h, 2h
        let h = 0.1;
        let v = second_difference(|o| 3.0 * (o as f64 * h).powi(2), 0, 10, h);
        assert!((v - 6.0).abs() < 1e-12);
    }

    #[test]
    fn first_difference_is_exact_for_quadratics() {
        let h = 0.25;
        let f = |x: f64| 2.0 * x * x - x + 1.0;
        for idx in [0, 3, 7] {
            let x0 = idx as f64 * h;
            let v: f64 = first_difference_weights(idx, 8, h)
                .iter()
                .map(|&(o, w)| w * f(x0 + o as f64 * h))
                .sum();
            assert!((v - (4.0 * x0 - 1.0)).abs() < 1e-12, "idx {idx}");
        }
    }
}
