//! Degrees of freedom, node coordinates and boundary points for a mesh/basis pair.

use crate::error::Result;
use crate::mesh::{CartesianMesh, Dimension, Point, Side};
use crate::quadrature::NodalBasis;

/// A collocation point on the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub side: Side,
    pub cell: (usize, usize),
    /// Node index along the face (always 0 in 1D).
    pub node: usize,
    /// Reference coordinates of the point inside `cell`.
    pub reference: (f64, f64),
    pub position: Point,
}

/// A row (or column) of cells sharing a tangential node, used by the line kernels.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Line {
    pub base: usize,
    pub cell_stride: usize,
    pub node_stride: usize,
    pub cells: usize,
    pub width: f64,
    /// Transverse width used by the exterior penalty on the high end.
    pub penalty_width: f64,
    pub lo_bc: usize,
    pub hi_bc: usize,
}

impl Line {
    pub fn dof(&self, cell: usize, node: usize) -> usize {
        self.base + cell * self.cell_stride + node * self.node_stride
    }
}

#[derive(Debug, Clone)]
pub struct DgSpace {
    pub mesh: CartesianMesh,
    pub basis: NodalBasis,
    /// Nodes per cell in x and y (y is 1 in 1D).
    pub nodes_x: usize,
    pub nodes_y: usize,
    pub coords: Vec<Point>,
    pub boundary_points: Vec<BoundaryPoint>,
    pub(crate) x_lines: Vec<Line>,
    pub(crate) y_lines: Vec<Line>,
    /// Basis values at the left and right ends of the reference interval.
    pub(crate) lo: Vec<f64>,
    pub(crate) hi: Vec<f64>,
}

impl DgSpace {
    pub fn new(mesh: CartesianMesh, degree: usize) -> Result<Self> {
        let basis = NodalBasis::new(degree)?;
        let nodes_x = degree + 1;
        let nodes_y = match mesh.dim {
            Dimension::One => 1,
            Dimension::Two => degree + 1,
        };
        let lo = basis.values_at(-1.0);
        let hi = basis.values_at(1.0);
        let mut space = Self {
            mesh,
            basis,
            nodes_x,
            nodes_y,
            coords: Vec::new(),
            boundary_points: Vec::new(),
            x_lines: Vec::new(),
            y_lines: Vec::new(),
            lo,
            hi,
        };
        space.coords = space.build_coords()?;
        space.boundary_points = space.build_boundary_points()?;
        space.build_lines();
        Ok(space)
    }

    pub fn dim(&self) -> Dimension {
        self.mesh.dim
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.nodes_x * self.nodes_y
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_cells() * self.nodes_per_cell()
    }

    pub fn dof(&self, i: usize, j: usize, a: usize, b: usize) -> usize {
        (self.mesh.cell_index(i, j) * self.nodes_y + b) * self.nodes_x + a
    }

    /// Inverse of [`DgSpace::dof`]: (i, j, a, b).
    pub fn dof_coords(&self, dof: usize) -> (usize, usize, usize, usize) {
        let a = dof % self.nodes_x;
        let b = (dof / self.nodes_x) % self.nodes_y;
        let (i, j) = self.mesh.cell_coords(dof / self.nodes_per_cell());
        (i, j, a, b)
    }

    /// Reference node coordinate in y; 0 in 1D.
    pub fn eta_node(&self, b: usize) -> f64 {
        match self.mesh.dim {
            Dimension::One => 0.0,
            Dimension::Two => self.basis.nodes()[b],
        }
    }

    pub fn num_boundary_points(&self) -> usize {
        self.boundary_points.len()
    }

    pub fn points_per_face(&self) -> usize {
        match self.mesh.dim {
            Dimension::One => 1,
            Dimension::Two => self.nodes_x,
        }
    }

    /// Index into boundary data for face `face` (along-side cell index) and tangential node.
    pub fn boundary_index(&self, side: Side, face: usize, node: usize) -> usize {
        let p = self.points_per_face();
        let ny = self.mesh.ny;
        let nx = self.mesh.nx;
        match side {
            Side::West => face * p + node,
            Side::East => (ny + face) * p + node,
            Side::South => (2 * ny + face) * p + node,
            Side::North => (2 * ny + nx + face) * p + node,
        }
    }

    fn build_coords(&self) -> Result<Vec<Point>> {
        let mut coords = Vec::with_capacity(self.num_dofs());
        for cell in 0..self.mesh.num_cells() {
            let map = self.mesh.reference_map(cell)?;
            for b in 0..self.nodes_y {
                for a in 0..self.nodes_x {
                    coords.push(map.to_physical(self.basis.nodes()[a], self.eta_node(b)));
                }
            }
        }
        Ok(coords)
    }

    fn build_boundary_points(&self) -> Result<Vec<BoundaryPoint>> {
        let mut pts = Vec::new();
        for face in self.mesh.boundary_faces() {
            let (i, j) = face.cell;
            let map = self.mesh.reference_map(self.mesh.cell_index(i, j))?;
            for node in 0..self.points_per_face() {
                let t = match self.mesh.dim {
                    Dimension::One => 0.0,
                    Dimension::Two => self.basis.nodes()[node],
                };
                let reference = match face.side {
                    Side::West => (-1.0, t),
                    Side::East => (1.0, t),
                    Side::South => (t, -1.0),
                    Side::North => (t, 1.0),
                };
                let mut position = map.to_physical(reference.0, reference.1);
                if self.mesh.dim == Dimension::One {
                    position.y = 0.0;
                }
                pts.push(BoundaryPoint {
                    side: face.side,
                    cell: face.cell,
                    node,
                    reference,
                    position,
                });
            }
        }
        Ok(pts)
    }

    fn build_lines(&mut self) {
        let m = &self.mesh;
        let penalty_x = match m.dim {
            Dimension::One => m.dx,
            Dimension::Two => m.dy,
        };
        for j in 0..m.ny {
            for b in 0..self.nodes_y {
                self.x_lines.push(Line {
                    base: self.dof(0, j, 0, b),
                    cell_stride: self.nodes_per_cell(),
                    node_stride: 1,
                    cells: m.nx,
                    width: m.dx,
                    penalty_width: penalty_x,
                    lo_bc: self.boundary_index(Side::West, j, b),
                    hi_bc: self.boundary_index(Side::East, j, b),
                });
            }
        }
        if m.dim == Dimension::Two {
            for i in 0..m.nx {
                for a in 0..self.nodes_x {
                    self.y_lines.push(Line {
                        base: self.dof(i, 0, a, 0),
                        cell_stride: m.nx * self.nodes_per_cell(),
                        node_stride: self.nodes_x,
                        cells: m.ny,
                        width: m.dy,
                        penalty_width: m.dx,
                        lo_bc: self.boundary_index(Side::South, i, a),
                        hi_bc: self.boundary_index(Side::North, i, a),
                    });
                }
            }
        }
    }
}
