//! Quasi-uniform triangulations of the unit ball and the P1 space on them.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

/// Budget for the dense free-node matrix a mesh will eventually need.
pub const DENSE_MEMORY_BUDGET: usize = 2 << 30;

/// Triangulation of the unit ball (segments for N = 1, triangles for N = 2).
///
/// Interior nodes come first; the degrees of freedom are exactly the
/// interior nodes `0..n_free`.
#[derive(Debug, Clone)]
pub struct BallMesh<T> {
    pub dim: usize,
    pub level: usize,
    nodes: Vec<T>,
    elements: Vec<usize>,
    pub boundary: Vec<bool>,
    pub n_free: usize,
    pub h: T,
    pub h_min: T,
    pub sigma: T,
    pub rho: T,
}

/// Shape statistics of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQuality<T> {
    /// max over elements of h_T/ρ_T, ρ_T the inscribed-ball diameter.
    pub sigma: T,
    /// h_min / h.
    pub rho: T,
    pub h: T,
    pub h_min: T,
}

/// Affine simplex with cached barycentric gradients. Points are padded to
/// two coordinates; in 1D the second one is zero.
#[derive(Debug, Clone, Copy)]
pub struct Simplex<T> {
    pub dim: usize,
    pub vertices: [[T; 2]; 3],
    pub grads: [[T; 2]; 3],
    pub measure: T,
    pub diameter: T,
}

impl<T: Scalar> Simplex<T> {
    pub fn from_vertices(dim: usize, pts: &[[T; 2]]) -> Option<Self> {
        let z = T::zero();
        match dim {
            1 => {
                let len = pts[1][0] - pts[0][0];
                if !(len.abs() > z) {
                    return None;
                }
                let g = T::one() / len;
                Some(Self {
                    dim,
                    vertices: [pts[0], pts[1], [z, z]],
                    grads: [[-g, z], [g, z], [z, z]],
                    measure: len.abs(),
                    diameter: len.abs(),
                })
            }
            _ => {
                let (a, b, c) = (pts[0], pts[1], pts[2]);
                let e1 = [b[0] - a[0], b[1] - a[1]];
                let e2 = [c[0] - a[0], c[1] - a[1]];
                let det = e1[0] * e2[1] - e1[1] * e2[0];
                if !(det.abs() > z) {
                    return None;
                }
                // rows of the inverse Jacobian are ∇λ1, ∇λ2
                let g1 = [e2[1] / det, -e2[0] / det];
                let g2 = [-e1[1] / det, e1[0] / det];
                let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
                let d = |p: [T; 2], q: [T; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                let diameter = d(a, b).max(d(b, c)).max(d(a, c));
                Some(Self {
                    dim,
                    vertices: [a, b, c],
                    grads: [g0, g1, g2],
                    measure: det.abs() * lit(0.5),
                    diameter,
                })
            }
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.dim + 1
    }

    /// Point with the given barycentric coordinates.
    pub fn map(&self, bary: &[T; 3]) -> [T; 2] {
        let mut p = [T::zero(); 2];
        for (k, &b) in bary.iter().enumerate().take(self.n_vertices()) {
            p[0] = p[0] + b * self.vertices[k][0];
            p[1] = p[1] + b * self.vertices[k][1];
        }
        p
    }

    pub fn barycentric(&self, x: &[T; 2]) -> [T; 3] {
        let a = self.vertices[0];
        let dx = [x[0] - a[0], x[1] - a[1]];
        let mut out = [T::zero(); 3];
        for k in 1..self.n_vertices() {
            out[k] = self.grads[k][0] * dx[0] + self.grads[k][1] * dx[1];
        }
        out[0] = T::one() - out[1] - out[2];
        out
    }

    /// Diameter of the largest inscribed ball.
    pub fn inball_diameter(&self) -> T {
        match self.dim {
            1 => self.measure,
            _ => {
                let v = self.vertices;
                let d = |p: [T; 2], q: [T; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                let semi = (d(v[0], v[1]) + d(v[1], v[2]) + d(v[0], v[2])) * lit(0.5);
                lit::<T>(2.0) * self.measure / semi
            }
        }
    }

    pub fn centroid(&self) -> [T; 2] {
        let w = T::one() / from_usize::<T>(self.n_vertices());
        self.map(&[w, w, if self.dim == 2 { w } else { T::zero() }])
    }
}

impl<T: Scalar> BallMesh<T> {
    pub fn node(&self, i: usize) -> &[T] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    /// Node coordinates padded to two components.
    pub fn point(&self, i: usize) -> [T; 2] {
        let p = self.node(i);
        [p[0], if self.dim > 1 { p[1] } else { T::zero() }]
    }

    pub fn n_nodes(&self) -> usize {
        self.boundary.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len() / (self.dim + 1)
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.elements[e * k..(e + 1) * k]
    }

    pub fn simplex(&self, e: usize) -> Simplex<T> {
        let pts: Vec<[T; 2]> = self.element(e).iter().map(|&i| self.point(i)).collect();
        Simplex::from_vertices(self.dim, &pts).expect("mesh elements are validated at construction")
    }

    pub fn is_free(&self, i: usize) -> bool {
        i < self.n_free
    }

    /// Writes "index x [y]" node lines followed by "index n0 n1 [n2]" element lines.
    pub fn export<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# nodes {}", self.n_nodes())?;
        for i in 0..self.n_nodes() {
            write!(w, "{i}")?;
            for x in self.node(i) {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        writeln!(w, "# elements {}", self.n_elements())?;
        for e in 0..self.n_elements() {
            write!(w, "{e}")?;
            for n in self.element(e) {
                write!(w, " {n}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn finish<T: Scalar>(
    dim: usize,
    level: usize,
    nodes: Vec<T>,
    elements: Vec<usize>,
    boundary: Vec<bool>,
) -> Result<BallMesh<T>> {
    let n_free = boundary.iter().take_while(|&&b| !b).count();
    debug_assert!(boundary[n_free..].iter().all(|&b| b));
    let mut mesh = BallMesh {
        dim,
        level,
        nodes,
        elements,
        boundary,
        n_free,
        h: T::zero(),
        h_min: T::zero(),
        sigma: T::zero(),
        rho: T::zero(),
    };
    let q = mesh_quality(&mesh)?;
    mesh.h = q.h;
    mesh.h_min = q.h_min;
    mesh.sigma = q.sigma;
    mesh.rho = q.rho;
    Ok(mesh)
}

fn check_budget(dim: usize, level: usize) -> Result<()> {
    let free: u128 = match dim {
        1 => (1u128 << (level + 1).min(100)) - 1,
        _ => {
            let m = 1u128 << level.min(60);
            1 + 3 * m * (m - 1)
        }
    };
    let bytes = free.saturating_mul(free).saturating_mul(8);
    if bytes > DENSE_MEMORY_BUDGET as u128 {
        return Err(Error::MeshTooLarge {
            level,
            bytes: bytes.min(usize::MAX as u128) as usize,
            budget: DENSE_MEMORY_BUDGET,
        });
    }
    Ok(())
}

/// Builds the level-`level` mesh of the unit ball in dimension `dim`.
///
/// N = 1: uniform partition of [−1, 1] into 2^{level+1} segments (nested).
/// N = 2: concentric rings at radii j/M, M = 2^level, ring j carrying 6j
/// nodes, triangulated between consecutive rings; the outer ring lies on
/// the unit circle.
pub fn build_mesh<T: Scalar>(dim: usize, level: usize) -> Result<BallMesh<T>> {
    check_budget(dim, level)?;
    match dim {
        1 => Ok(build_interval(level)?),
        2 => Ok(build_disk(level)?),
        _ => Err(Error::InvalidParams(format!("meshes exist for N ∈ {{1, 2}}, got {dim}"))),
    }
}

fn build_interval<T: Scalar>(level: usize) -> Result<BallMesh<T>> {
    let segments = 1usize << (level + 1);
    let h = T::one() / from_usize::<T>(1usize << level);
    // index of grid point k in interior-first order
    let index = |k: usize| -> usize {
        if k == 0 {
            segments - 1
        } else if k == segments {
            segments
        } else {
            k - 1
        }
    };
    let mut nodes = vec![T::zero(); segments + 1];
    let mut boundary = vec![false; segments + 1];
    for k in 0..=segments {
        let x = if k == segments { T::one() } else { -T::one() + from_usize::<T>(k) * h };
        nodes[index(k)] = x;
        boundary[index(k)] = k == 0 || k == segments;
    }
    let elements = (0..segments).flat_map(|k| [index(k), index(k + 1)]).collect();
    finish(1, level, nodes, elements, boundary)
}

fn build_disk<T: Scalar>(level: usize) -> Result<BallMesh<T>> {
    let m = 1usize << level;
    let mf = from_usize::<T>(m);
    // ring j occupies indices ring_start[j]..ring_start[j]+6j (ring 0 = center)
    let mut ring_start = vec![0usize; m + 1];
    for j in 1..=m {
        ring_start[j] = ring_start[j - 1] + if j == 1 { 1 } else { 6 * (j - 1) };
    }
    let total = ring_start[m] + 6 * m;
    let mut nodes = vec![T::zero(); 2 * total];
    let mut boundary = vec![false; total];
    for j in 0..=m {
        let count = if j == 0 { 1 } else { 6 * j };
        let r = from_usize::<T>(j) / mf;
        for i in 0..count {
            let idx = ring_start[j] + i;
            if j == 0 {
                continue;
            }
            let theta = lit::<T>(2.0) * T::PI() * from_usize::<T>(i) / from_usize::<T>(count);
            let (sn, cs) = theta.sin_cos();
            if j == m {
                nodes[2 * idx] = cs;
                nodes[2 * idx + 1] = sn;
                boundary[idx] = true;
            } else {
                nodes[2 * idx] = r * cs;
                nodes[2 * idx + 1] = r * sn;
            }
        }
    }
    let mut elements = Vec::with_capacity(3 * 6 * m * m);
    let mut push_ccw = |a: usize, b: usize, c: usize, nodes: &[T]| {
        let p = |i: usize| (nodes[2 * i], nodes[2 * i + 1]);
        let (pa, pb, pc) = (p(a), p(b), p(c));
        let det = (pb.0 - pa.0) * (pc.1 - pa.1) - (pb.1 - pa.1) * (pc.0 - pa.0);
        if det > T::zero() {
            elements.extend([a, b, c]);
        } else {
            elements.extend([a, c, b]);
        }
    };
    for i in 0..6 {
        let b0 = ring_start[1] + i;
        let b1 = ring_start[1] + (i + 1) % 6;
        push_ccw(0, b0, b1, &nodes);
    }
    for j in 2..=m {
        let na = 6 * (j - 1);
        let nb = 6 * j;
        let a = |i: usize| ring_start[j - 1] + i % na;
        let b = |i: usize| ring_start[j] + i % nb;
        let (mut ia, mut ib) = (0usize, 0usize);
        while ia < na || ib < nb {
            // compare next angles (ia+1)/na vs (ib+1)/nb; ties advance the inner ring
            let advance_outer = ia == na || (ib < nb && (ib + 1) * na < (ia + 1) * nb);
            if advance_outer {
                push_ccw(a(ia), b(ib), b(ib + 1), &nodes);
                ib += 1;
            } else {
                push_ccw(a(ia), a(ia + 1), b(ib), &nodes);
                ia += 1;
            }
        }
    }
    finish(2, level, nodes, elements, boundary)
}

/// Exact per-element diameters and inscribed-ball diameters, aggregated.
pub fn mesh_quality<T: Scalar>(mesh: &BallMesh<T>) -> Result<MeshQuality<T>> {
    let mut h = T::zero();
    let mut h_min = T::infinity();
    let mut sigma = T::zero();
    for e in 0..mesh.n_elements() {
        let pts: Vec<[T; 2]> = mesh.element(e).iter().map(|&i| mesh.point(i)).collect();
        let simplex = Simplex::from_vertices(mesh.dim, &pts).ok_or(Error::DegenerateElement { index: e })?;
        let inball = simplex.inball_diameter();
        if !(inball > T::zero()) {
            return Err(Error::DegenerateElement { index: e });
        }
        h = h.max(simplex.diameter);
        h_min = h_min.min(simplex.diameter);
        sigma = sigma.max(simplex.diameter / inball);
    }
    Ok(MeshQuality { sigma, rho: h_min / h, h, h_min })
}

/// Nodal values on a [`BallMesh`], zero at boundary nodes and outside B_h.
#[derive(Debug, Clone)]
pub struct FeFunction<T> {
    pub mesh: Arc<BallMesh<T>>,
    pub values: Vec<T>,
}

impl<T: Scalar> FeFunction<T> {
    pub fn zeros(mesh: Arc<BallMesh<T>>) -> Self {
        let n = mesh.n_nodes();
        Self { mesh, values: vec![T::zero(); n] }
    }

    /// Builds a function from its free-node coefficients.
    pub fn from_free(mesh: Arc<BallMesh<T>>, free: &[T]) -> Self {
        assert_eq!(free.len(), mesh.n_free, "coefficient count must match free nodes");
        let mut values = vec![T::zero(); mesh.n_nodes()];
        values[..free.len()].copy_from_slice(free);
        Self { mesh, values }
    }

    pub fn free_values(&self) -> &[T] {
        &self.values[..self.mesh.n_free]
    }

    pub fn scaled(&self, t: T) -> Self {
        Self { mesh: self.mesh.clone(), values: self.values.iter().map(|&v| v * t).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == T::zero())
    }

    pub fn same_mesh(&self, other: &Arc<BallMesh<T>>) -> bool {
        Arc::ptr_eq(&self.mesh, other)
    }

    /// Value at a point inside element `e`.
    pub fn eval_in(&self, e: usize, simplex: &Simplex<T>, x: &[T; 2]) -> T {
        let bary = simplex.barycentric(x);
        self.mesh.element(e).iter().zip(bary).map(|(&i, b)| b * self.values[i]).sum()
    }

    /// Constant gradient on element `e`.
    pub fn gradient_in(&self, e: usize, simplex: &Simplex<T>) -> [T; 2] {
        let mut g = [T::zero(); 2];
        for (k, &i) in self.mesh.element(e).iter().enumerate() {
            g[0] = g[0] + simplex.grads[k][0] * self.values[i];
            g[1] = g[1] + simplex.grads[k][1] * self.values[i];
        }
        g
    }
}

/// Nodal interpolant I_h f; boundary nodes are set to zero so the result lies in V_h.
pub fn interpolate<T: Scalar, F: Fn(&[T]) -> T>(mesh: &Arc<BallMesh<T>>, f: F) -> Result<FeFunction<T>> {
    let mut values = vec![T::zero(); mesh.n_nodes()];
    for (i, v) in values.iter_mut().enumerate() {
        let sample = f(mesh.node(i));
        if !sample.is_finite() {
            return Err(Error::NonFiniteSample { node: i });
        }
        if !mesh.boundary[i] {
            *v = sample;
        }
    }
    Ok(FeFunction { mesh: mesh.clone(), values })
}
