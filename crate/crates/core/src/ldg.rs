//! Local discontinuous Galerkin operators on tensor-product collocation meshes.
//!
//! With nodes at the Gauss points the mass matrix is diagonal and every 2D
//! operator splits into independent 1D kernels along x-lines and y-lines.

use crate::error::{invalid, Result};
use crate::field::NodalField;
use crate::mesh::{Dimension, Point};
use crate::problem::{Flux, ProblemSpec, Source};
use crate::space::{DgSpace, Line};
use crate::sparse::CsrMatrix;
use std::sync::Arc;

/// Dirichlet values at the boundary collocation points, in `DgSpace::boundary_points` order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub values: Vec<f64>,
}

impl BoundaryData {
    pub fn zeros(space: &DgSpace) -> Self {
        Self {
            values: vec![0.0; space.num_boundary_points()],
        }
    }

    pub fn from_fn(space: &DgSpace, f: impl Fn(Point) -> f64) -> Self {
        Self {
            values: space.boundary_points.iter().map(|bp| f(bp.position)).collect(),
        }
    }

    /// Dirichlet data evaluated directly at time t.
    pub fn naive(space: &DgSpace, problem: &ProblemSpec, t: f64) -> Self {
        Self::from_fn(space, |p| (problem.boundary.value)(p, t))
    }

    fn check(&self, space: &DgSpace) -> Result<()> {
        if self.values.len() != space.num_boundary_points() {
            return invalid(format!(
                "boundary data has {} values, space has {} boundary points",
                self.values.len(),
                space.num_boundary_points()
            ));
        }
        Ok(())
    }
}

/// Lax-Friedrichs flux across a face with unit normal pointing from `u_in` to `u_out`.
pub fn lax_friedrichs(flux: &Flux, u_in: f64, u_out: f64, alpha: f64) -> f64 {
    0.5 * (flux.value(u_in) + flux.value(u_out) - alpha * (u_out - u_in))
}

/// Per-line kernels; all buffers are in local (cell, node) order.
struct Kernel<'a> {
    space: &'a DgSpace,
    n: usize,
}

impl<'a> Kernel<'a> {
    fn new(space: &'a DgSpace) -> Self {
        Self {
            space,
            n: space.nodes_x,
        }
    }

    fn trace(&self, v: &[f64], cell: usize, ends: &[f64]) -> f64 {
        let n = self.n;
        v[cell * n..(cell + 1) * n].iter().zip(ends).map(|(a, b)| a * b).sum()
    }

    fn gather(&self, line: &Line, src: &[f64], dst: &mut Vec<f64>) {
        dst.clear();
        for c in 0..line.cells {
            for a in 0..self.n {
                dst.push(src[line.dof(c, a)]);
            }
        }
    }

    fn scatter_add(&self, line: &Line, src: &[f64], dst: &mut [f64]) {
        for c in 0..line.cells {
            for a in 0..self.n {
                dst[line.dof(c, a)] += src[c * self.n + a];
            }
        }
    }

    /// Auxiliary variable q = u_x with u-tilde from the left and Dirichlet data on both ends.
    fn gradient(&self, line: &Line, u: &[f64], lo: f64, hi: f64, q: &mut Vec<f64>) {
        let s = self.space;
        let (n, w, d) = (self.n, s.basis.weights(), &s.basis.diff);
        let jac = 0.5 * line.width;
        q.clear();
        for c in 0..line.cells {
            let uw = if c == 0 { lo } else { self.trace(u, c - 1, &s.hi) };
            let ue = if c + 1 == line.cells {
                hi
            } else {
                self.trace(u, c, &s.hi)
            };
            let uc = &u[c * n..(c + 1) * n];
            for b in 0..n {
                let vol: f64 = (0..n).map(|a| w[a] * uc[a] * d[a][b]).sum();
                q.push((-vol + ue * s.hi[b] - uw * s.lo[b]) / (jac * w[b]));
            }
        }
    }

    /// Adds kappa (q)_x with q-tilde from the right and the penalised exterior flux on the high end.
    #[allow(clippy::too_many_arguments)]
    fn divergence(&self, line: &Line, u: &[f64], q: &[f64], hi: f64, kappa: f64, out: &mut [f64]) {
        let s = self.space;
        let (n, w, d) = (self.n, s.basis.weights(), &s.basis.diff);
        let jac = 0.5 * line.width;
        let last = line.cells - 1;
        for c in 0..line.cells {
            let qw = self.trace(q, c, &s.lo);
            let qe = if c < last {
                self.trace(q, c + 1, &s.lo)
            } else {
                self.trace(q, c, &s.hi) - (self.trace(u, c, &s.hi) - hi) / line.penalty_width
            };
            let qc = &q[c * n..(c + 1) * n];
            for b in 0..n {
                let vol: f64 = (0..n).map(|a| w[a] * qc[a] * d[a][b]).sum();
                out[c * n + b] += kappa * (-vol + qe * s.hi[b] - qw * s.lo[b]) / (jac * w[b]);
            }
        }
    }

    /// Adds -(f(u))_x with Lax-Friedrichs fluxes.
    #[allow(clippy::too_many_arguments)]
    fn convection(&self, line: &Line, u: &[f64], flux: &Flux, alpha: f64, lo: f64, hi: f64, out: &mut [f64]) {
        let s = self.space;
        let (n, w, d) = (self.n, s.basis.weights(), &s.basis.diff);
        let jac = 0.5 * line.width;
        let cells = line.cells;
        let mut faces = Vec::with_capacity(cells + 1);
        faces.push(lax_friedrichs(flux, lo, self.trace(u, 0, &s.lo), alpha));
        for c in 0..cells {
            let left = self.trace(u, c, &s.hi);
            let right = if c + 1 == cells {
                hi
            } else {
                self.trace(u, c + 1, &s.lo)
            };
            faces.push(lax_friedrichs(flux, left, right, alpha));
        }
        for c in 0..cells {
            let uc = &u[c * n..(c + 1) * n];
            for b in 0..n {
                let vol: f64 = (0..n).map(|a| w[a] * flux.value(uc[a]) * d[a][b]).sum();
                out[c * n + b] += (vol - faces[c + 1] * s.hi[b] + faces[c] * s.lo[b]) / (jac * w[b]);
            }
        }
    }
}

fn lines_with_flux<'a>(space: &'a DgSpace, problem: &'a ProblemSpec) -> [(&'a [Line], &'a Flux); 2] {
    [
        (&space.x_lines[..], &problem.flux[0]),
        (&space.y_lines[..], &problem.flux[1]),
    ]
}

/// Auxiliary variables (q1, q2); q2 is empty in 1D.
pub fn compute_aux(u: &NodalField, bdata: &BoundaryData) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = &*u.space;
    bdata.check(s)?;
    let k = Kernel::new(s);
    let mut out = [vec![0.0; s.num_dofs()], Vec::new()];
    if s.dim() == Dimension::Two {
        out[1] = vec![0.0; s.num_dofs()];
    }
    let (mut ul, mut ql) = (Vec::new(), Vec::new());
    for (lines, dst) in [&s.x_lines, &s.y_lines].into_iter().zip(out.iter_mut()) {
        for line in lines.iter() {
            k.gather(line, &u.values, &mut ul);
            k.gradient(line, &ul, bdata.values[line.lo_bc], bdata.values[line.hi_bc], &mut ql);
            k.scatter_add(line, &ql, dst);
        }
    }
    let [q1, q2] = out;
    Ok((q1, q2))
}

/// Global Lax-Friedrichs speed: max |f'(u)| over nodes, face traces and boundary data.
pub fn max_wave_speed(problem: &ProblemSpec, u: &NodalField, bdata: &BoundaryData) -> f64 {
    let fl = &problem.flux;
    let constant = fl.iter().all(|f| matches!(f, Flux::Zero | Flux::Linear(_)));
    let speed = |v: f64| fl[0].derivative(v).abs().max(fl[1].derivative(v).abs());
    if constant {
        return speed(0.0);
    }
    let s = &*u.space;
    let k = Kernel::new(s);
    let mut alpha = u
        .values
        .iter()
        .chain(&bdata.values)
        .fold(0.0f64, |m, &v| m.max(speed(v)));
    let mut ul = Vec::new();
    for line in s.x_lines.iter().chain(&s.y_lines) {
        k.gather(line, &u.values, &mut ul);
        for c in 0..line.cells {
            alpha = alpha
                .max(speed(k.trace(&ul, c, &s.lo)))
                .max(speed(k.trace(&ul, c, &s.hi)));
        }
    }
    alpha
}

/// Explicit part: convection with Lax-Friedrichs fluxes plus the collocated source.
#[derive(Debug, Clone)]
pub struct ExplicitOperator {
    pub space: Arc<DgSpace>,
    pub problem: Arc<ProblemSpec>,
}

impl ExplicitOperator {
    pub fn new(space: Arc<DgSpace>, problem: Arc<ProblemSpec>) -> Result<Self> {
        if space.dim() != problem.dim {
            return invalid("problem and mesh dimensions differ");
        }
        Ok(Self { space, problem })
    }

    pub fn apply(&self, u: &NodalField, bdata: &BoundaryData, t: f64) -> Result<Vec<f64>> {
        let s = &*self.space;
        bdata.check(s)?;
        let mut out = vec![0.0; s.num_dofs()];
        if !matches!(self.problem.source, Source::Zero) {
            for ((o, &v), &p) in out.iter_mut().zip(&u.values).zip(&s.coords) {
                *o = self.problem.source.value(v, p, t);
            }
        }
        if self.problem.flux.iter().all(Flux::is_zero) {
            return Ok(out);
        }
        let alpha = max_wave_speed(&self.problem, u, bdata);
        let k = Kernel::new(s);
        let (mut ul, mut rl) = (Vec::new(), Vec::new());
        for (lines, flux) in lines_with_flux(s, &self.problem) {
            if flux.is_zero() {
                continue;
            }
            for line in lines {
                k.gather(line, &u.values, &mut ul);
                rl.clear();
                rl.resize(ul.len(), 0.0);
                k.convection(
                    line,
                    &ul,
                    flux,
                    alpha,
                    bdata.values[line.lo_bc],
                    bdata.values[line.hi_bc],
                    &mut rl,
                );
                k.scatter_add(line, &rl, &mut out);
            }
        }
        Ok(out)
    }
}

/// Convenience wrapper around [`ExplicitOperator::apply`].
pub fn explicit_rhs(problem: &Arc<ProblemSpec>, u: &NodalField, bdata: &BoundaryData, t: f64) -> Result<Vec<f64>> {
    ExplicitOperator::new(u.space.clone(), problem.clone())?.apply(u, bdata, t)
}

/// Linear diffusion operator: apply(u, b) = L u + g(b).
#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    pub space: Arc<DgSpace>,
    pub coefficients: [f64; 2],
    matrix: CsrMatrix,
    /// Entries (boundary index, dof, weight) of the linear map b -> g(b).
    boundary_map: Vec<(usize, usize, f64)>,
}

impl DiffusionOperator {
    pub fn new(space: Arc<DgSpace>, problem: &ProblemSpec) -> Result<Self> {
        let coefficients = problem.diffusion_coefficients()?;
        if space.dim() != problem.dim {
            return invalid("problem and mesh dimensions differ");
        }
        let mut op = Self {
            space,
            coefficients,
            matrix: CsrMatrix::empty(0),
            boundary_map: Vec::new(),
        };
        op.matrix = op.probe_matrix()?;
        op.boundary_map = op.probe_boundary();
        Ok(op)
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Matrix-free evaluation of the full diffusion term.
    pub fn apply(&self, u: &[f64], bdata: &BoundaryData) -> Result<Vec<f64>> {
        let s = &*self.space;
        bdata.check(s)?;
        if u.len() != s.num_dofs() {
            return invalid("field length does not match the space");
        }
        let k = Kernel::new(s);
        let mut out = vec![0.0; s.num_dofs()];
        let (mut ul, mut ql, mut rl) = (Vec::new(), Vec::new(), Vec::new());
        for (lines, kappa) in [(&s.x_lines, self.coefficients[0]), (&s.y_lines, self.coefficients[1])] {
            if kappa == 0.0 {
                continue;
            }
            for line in lines.iter() {
                let (lo, hi) = (bdata.values[line.lo_bc], bdata.values[line.hi_bc]);
                k.gather(line, u, &mut ul);
                k.gradient(line, &ul, lo, hi, &mut ql);
                rl.clear();
                rl.resize(ul.len(), 0.0);
                k.divergence(line, &ul, &ql, hi, kappa, &mut rl);
                k.scatter_add(line, &rl, &mut out);
            }
        }
        Ok(out)
    }

    /// Boundary contribution g(b) = apply(0, b).
    pub fn boundary_term(&self, bdata: &BoundaryData) -> Result<Vec<f64>> {
        bdata.check(&self.space)?;
        let mut g = vec![0.0; self.space.num_dofs()];
        for &(k, dof, w) in &self.boundary_map {
            g[dof] += w * bdata.values[k];
        }
        Ok(g)
    }

    /// Response of each line to unit data at either end; lines are independent.
    fn probe_boundary(&self) -> Vec<(usize, usize, f64)> {
        let s = &*self.space;
        let k = Kernel::new(s);
        let mut map = Vec::new();
        let (mut ql, mut rl) = (Vec::new(), Vec::new());
        for (lines, kappa) in [(&s.x_lines, self.coefficients[0]), (&s.y_lines, self.coefficients[1])] {
            if kappa == 0.0 {
                continue;
            }
            for line in lines.iter() {
                let ul = vec![0.0; line.cells * k.n];
                for (idx, lo, hi) in [(line.lo_bc, 1.0, 0.0), (line.hi_bc, 0.0, 1.0)] {
                    k.gradient(line, &ul, lo, hi, &mut ql);
                    rl.clear();
                    rl.resize(ul.len(), 0.0);
                    k.divergence(line, &ul, &ql, hi, kappa, &mut rl);
                    for c in 0..line.cells {
                        for a in 0..k.n {
                            let v = rl[c * k.n + a];
                            if v != 0.0 {
                                map.push((idx, line.dof(c, a), v));
                            }
                        }
                    }
                }
            }
        }
        map
    }

    /// L u + g(b) using the assembled matrix.
    pub fn apply_assembled(&self, u: &[f64], bdata: &BoundaryData) -> Result<Vec<f64>> {
        let mut g = self.boundary_term(bdata)?;
        self.matrix.mul_add(u, &mut g);
        Ok(g)
    }

    /// Assembles L column-by-column with a 3x3 cell colouring; the stencil spans one neighbour.
    fn probe_matrix(&self) -> Result<CsrMatrix> {
        let s = &*self.space;
        let m = &s.mesh;
        let npc = s.nodes_per_cell();
        let zero_b = BoundaryData::zeros(s);
        let mut triplets = Vec::new();
        let (cx, cy) = (m.nx.min(3), m.ny.min(3));
        let mut probe = vec![0.0; s.num_dofs()];
        for ci in 0..cx {
            for cj in 0..cy {
                for l in 0..npc {
                    probe.iter_mut().for_each(|v| *v = 0.0);
                    for j in (cj..m.ny).step_by(3) {
                        for i in (ci..m.nx).step_by(3) {
                            probe[m.cell_index(i, j) * npc + l] = 1.0;
                        }
                    }
                    let r = self.apply(&probe, &zero_b)?;
                    for (row, &v) in r.iter().enumerate() {
                        if v == 0.0 {
                            continue;
                        }
                        let (mi, mj) = m.cell_coords(row / npc);
                        let src = |mc: usize, c: usize, n: usize| {
                            (mc.saturating_sub(1)..=(mc + 1).min(n - 1)).find(|&x| x % 3 == c)
                        };
                        if let (Some(si), Some(sj)) = (src(mi, ci, m.nx), src(mj, cj, m.ny)) {
                            triplets.push((row, m.cell_index(si, sj) * npc + l, v));
                        }
                    }
                }
            }
        }
        Ok(CsrMatrix::from_triplets(s.num_dofs(), triplets))
    }
}
