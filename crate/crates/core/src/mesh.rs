//! Uniform Cartesian meshes on intervals and rectangles.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    West,
    East,
    South,
    North,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::West => "west",
            Side::East => "east",
            Side::South => "south",
            Side::North => "north",
        }
    }
}

/// Affine map between the reference cell [-1,1]^d and a physical cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub center: Point,
    /// Jacobians dx/dxi and dy/deta (half widths).
    pub jx: f64,
    pub jy: f64,
}

impl AffineMap {
    pub fn to_physical(&self, xi: f64, eta: f64) -> Point {
        Point::new(self.center.x + self.jx * xi, self.center.y + self.jy * eta)
    }

    pub fn to_reference(&self, p: Point) -> (f64, f64) {
        ((p.x - self.center.x) / self.jx, (p.y - self.center.y) / self.jy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartesianMesh {
    pub dim: Dimension,
    pub x_bounds: (f64, f64),
    pub y_bounds: (f64, f64),
    pub nx: usize,
    /// One in 1D.
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl CartesianMesh {
    pub fn new_1d(x_bounds: (f64, f64), nx: usize) -> Result<Self> {
        check_interval(x_bounds, nx)?;
        let dx = (x_bounds.1 - x_bounds.0) / nx as f64;
        Ok(Self {
            dim: Dimension::One,
            x_bounds,
            y_bounds: (0.0, 0.0),
            nx,
            ny: 1,
            dx,
            dy: dx,
        })
    }

    pub fn new_2d(x_bounds: (f64, f64), y_bounds: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        check_interval(x_bounds, nx)?;
        check_interval(y_bounds, ny)?;
        Ok(Self {
            dim: Dimension::Two,
            x_bounds,
            y_bounds,
            nx,
            ny,
            dx: (x_bounds.1 - x_bounds.0) / nx as f64,
            dy: (y_bounds.1 - y_bounds.0) / ny as f64,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    /// Smallest cell width, used for the time step.
    pub fn min_width(&self) -> f64 {
        match self.dim {
            Dimension::One => self.dx,
            Dimension::Two => self.dx.min(self.dy),
        }
    }

    pub fn reference_map(&self, cell: usize) -> Result<AffineMap> {
        if cell >= self.num_cells() {
            return invalid(format!("cell {cell} out of range (mesh has {})", self.num_cells()));
        }
        let (i, j) = self.cell_coords(cell);
        let cx = self.x_bounds.0 + (i as f64 + 0.5) * self.dx;
        let (cy, jy) = match self.dim {
            Dimension::One => (0.0, 1.0),
            Dimension::Two => (self.y_bounds.0 + (j as f64 + 0.5) * self.dy, 0.5 * self.dy),
        };
        Ok(AffineMap {
            center: Point::new(cx, cy),
            jx: 0.5 * self.dx,
            jy,
        })
    }

    /// Exterior faces: west (j ascending), east, south (i ascending), north.
    pub fn boundary_faces(&self) -> Vec<BoundaryFace> {
        let mut faces = Vec::new();
        for (side, i) in [(Side::West, 0), (Side::East, self.nx - 1)] {
            for j in 0..self.ny {
                faces.push(BoundaryFace { side, cell: (i, j) });
            }
        }
        if self.dim == Dimension::Two {
            for (side, j) in [(Side::South, 0), (Side::North, self.ny - 1)] {
                for i in 0..self.nx {
                    faces.push(BoundaryFace { side, cell: (i, j) });
                }
            }
        }
        faces
    }
}

fn check_interval(b: (f64, f64), n: usize) -> Result<()> {
    if n == 0 {
        return invalid("mesh needs at least one cell");
    }
    if !(b.0.is_finite() && b.1.is_finite()) || b.0 >= b.1 {
        return invalid(format!("degenerate interval [{}, {}]", b.0, b.1));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub side: Side,
    pub cell: (usize, usize),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_and_centers() {
        let m = CartesianMesh::new_1d((-1.0, 1.0), 4).unwrap();
        assert_eq!(m.dx, 0.5);
        let map = m.reference_map(3).unwrap();
        assert_eq!(map.to_physical(1.0, 0.0).x, 1.0);
        assert!(m.reference_map(4).is_err());
        assert!(CartesianMesh::new_1d((0.0, 0.0), 4).is_err());
        assert!(CartesianMesh::new_1d((0.0, 1.0), 0).is_err());
    }

    #[test]
    fn face_counts() {
        let m = CartesianMesh::new_2d((0.0, 1.0), (0.0, 2.0), 3, 5).unwrap();
        let faces = m.boundary_faces();
        assert_eq!(faces.len(), 2 * 5 + 2 * 3);
        assert_eq!(
            faces[0],
            BoundaryFace {
                side: Side::West,
                cell: (0, 0)
            }
        );
        assert_eq!(
            faces[5],
            BoundaryFace {
                side: Side::East,
                cell: (2, 0)
            }
        );
        assert_eq!(m.cell_coords(m.cell_index(2, 4)), (2, 4));
    }
}
