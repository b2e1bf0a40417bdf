//! Nodal coefficient arrays over a [`DgSpace`].

use crate::error::{invalid, Result};
use crate::mesh::{Dimension, Point};
use crate::space::DgSpace;
use std::io::Write;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct NodalField {
    pub space: Arc<DgSpace>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

impl NodalField {
    pub fn zeros(space: Arc<DgSpace>) -> Self {
        let n = space.num_dofs();
        Self {
            space,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(space: Arc<DgSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.num_dofs() {
            return invalid(format!("expected {} values, got {}", space.num_dofs(), values.len()));
        }
        Ok(Self { space, values })
    }

    /// Nodal interpolation of `f`.
    pub fn interpolate(space: Arc<DgSpace>, f: impl Fn(Point) -> f64) -> Self {
        let values = space.coords.iter().map(|&p| f(p)).collect();
        Self { space, values }
    }

    pub fn cell_values(&self, i: usize, j: usize) -> &[f64] {
        let n = self.space.nodes_per_cell();
        let c = self.space.mesh.cell_index(i, j);
        &self.values[c * n..(c + 1) * n]
    }

    /// Physical derivative d^(p+q) u / dx^p dy^q of the cell polynomial at reference (xi, eta).
    pub fn cell_derivative(&self, cell: (usize, usize), reference: (f64, f64), order: (usize, usize)) -> Result<f64> {
        let s = &*self.space;
        let (i, j) = cell;
        if i >= s.mesh.nx || j >= s.mesh.ny {
            return invalid(format!("cell ({i}, {j}) outside mesh"));
        }
        let rx = s.basis.derivatives_at(reference.0, order.0)?;
        let ry = match s.dim() {
            Dimension::One => vec![if order.1 == 0 { 1.0 } else { 0.0 }],
            Dimension::Two => s.basis.derivatives_at(reference.1, order.1)?,
        };
        let map = s.mesh.reference_map(s.mesh.cell_index(i, j))?;
        let vals = self.cell_values(i, j);
        let mut acc = 0.0;
        for (b, wy) in ry.iter().enumerate() {
            for (a, wx) in rx.iter().enumerate() {
                acc += vals[b * s.nodes_x + a] * wx * wy;
            }
        }
        Ok(acc / (map.jx.powi(order.0 as i32) * map.jy.powi(order.1 as i32)))
    }

    /// Value of the piecewise polynomial at a physical point (the left/lower cell wins on faces).
    pub fn evaluate(&self, p: Point) -> Result<f64> {
        let m = &self.space.mesh;
        let locate = |v: f64, lo: f64, h: f64, n: usize| -> Option<usize> {
            let r = (v - lo) / h;
            if r < -1e-12 || r > n as f64 + 1e-12 {
                return None;
            }
            Some((r.max(0.0) as usize).min(n - 1))
        };
        let i = locate(p.x, m.x_bounds.0, m.dx, m.nx);
        let j = match m.dim {
            Dimension::One => Some(0),
            Dimension::Two => locate(p.y, m.y_bounds.0, m.dy, m.ny),
        };
        let (Some(i), Some(j)) = (i, j) else {
            return invalid(format!("point ({}, {}) outside the domain", p.x, p.y));
        };
        let map = m.reference_map(m.cell_index(i, j))?;
        let (xi, eta) = map.to_reference(p);
        self.cell_derivative((i, j), (xi, if m.dim == Dimension::One { 0.0 } else { eta }), (0, 0))
    }

    /// Quadrature-based L1 and L2 norms and the nodal maximum of the error against `exact`.
    pub fn error_norms(&self, exact: impl Fn(Point) -> f64) -> ErrorNorms {
        let s = &*self.space;
        let w = s.basis.weights();
        let (jx, jy) = (
            0.5 * s.mesh.dx,
            if s.dim() == Dimension::Two {
                0.5 * s.mesh.dy
            } else {
                1.0
            },
        );
        let mut norms = ErrorNorms {
            l1: 0.0,
            l2: 0.0,
            linf: 0.0,
        };
        for (d, (&u, &p)) in self.values.iter().zip(&s.coords).enumerate() {
            let (_, _, a, b) = s.dof_coords(d);
            let wt = w[a] * if s.dim() == Dimension::Two { w[b] } else { 1.0 } * jx * jy;
            let e = (u - exact(p)).abs();
            norms.l1 += wt * e;
            norms.l2 += wt * e * e;
            norms.linf = norms.linf.max(e);
        }
        norms.l2 = norms.l2.sqrt();
        norms
    }

    /// Writes `cell_i[,cell_j],node_k1[,node_k2],x[,y],value` rows.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let s = &*self.space;
        let two_d = s.dim() == Dimension::Two;
        if two_d {
            writeln!(w, "cell_i,cell_j,node_k1,node_k2,x,y,value")?;
        } else {
            writeln!(w, "cell_i,node_k1,x,value")?;
        }
        for (d, (&u, p)) in self.values.iter().zip(&s.coords).enumerate() {
            let (i, j, a, b) = s.dof_coords(d);
            if two_d {
                writeln!(w, "{i},{j},{a},{b},{:.16e},{:.16e},{:.16e}", p.x, p.y, u)?;
            } else {
                writeln!(w, "{i},{a},{:.16e},{:.16e}", p.x, u)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::CartesianMesh;

    fn space_2d() -> Arc<DgSpace> {
        Arc::new(DgSpace::new(CartesianMesh::new_2d((0.0, 1.0), (-1.0, 1.0), 3, 4).unwrap(), 2).unwrap())
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        let f = NodalField::interpolate(space_2d(), |p| p.x * p.x * p.y + 3.0 * p.y * p.y);
        let d = f.cell_derivative((1, 2), (0.3, -0.4), (1, 1)).unwrap();
        let map = f.space.mesh.reference_map(f.space.mesh.cell_index(1, 2)).unwrap();
        let x = map.to_physical(0.3, -0.4).x;
        assert!((d - 2.0 * x).abs() < 1e-11);
        assert!((f.cell_derivative((0, 0), (0.0, 0.0), (0, 2)).unwrap() - 6.0).abs() < 1e-10);
    }

    #[test]
    fn evaluate_matches_function() {
        let f = NodalField::interpolate(space_2d(), |p| p.x + 2.0 * p.y);
        let v = f.evaluate(Point::new(0.77, 0.31)).unwrap();
        assert!((v - (0.77 + 0.62)).abs() < 1e-13);
        assert!(f.evaluate(Point::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn norms_of_constant_error() {
        let s = space_2d();
        let f = NodalField::zeros(s);
        let n = f.error_norms(|_| 0.5);
        assert!((n.l1 - 1.0).abs() < 1e-13);
        assert!((n.l2 - (0.5f64).sqrt()).abs() < 1e-13);
        assert_eq!(n.linf, 0.5);
    }

    #[test]
    fn csv_dump_header() {
        let s = Arc::new(DgSpace::new(CartesianMesh::new_1d((0.0, 1.0), 2).unwrap(), 1).unwrap());
        let f = NodalField::zeros(s);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("cell_i,node_k1,x,value\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
