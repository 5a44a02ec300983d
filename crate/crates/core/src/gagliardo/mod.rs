//! The Gagliardo bilinear form on V_h.
//!
//! a(u,v) = s(1−s)∬_{R^N×R^N} (u(x)−u(y))(v(x)−v(y))/|x−y|^{N+2s} for u, v
//! vanishing outside the meshed polytope B_h. Splitting R^N into B_h and its
//! complement gives a pair sum over B_h×B_h plus 2∫ u v κ_h with
//! κ_h(x) = ∫_{R^N∖B_h} |x−y|^{−N−2s} dy.

mod complement;
mod pairs;

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

pub use complement::{complement_weight, SPHERE_GUARD};
pub use pairs::PairKind;

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, Cholesky, DenseMatrix};
use crate::mesh::{BallMesh, FeFunction, Simplex};
use crate::params::{check_order, ProblemParams};
use crate::scalar::{lit, Scalar};
use complement::{element_complement_1d, element_complement_2d, PolygonExterior};
use pairs::{LocalBlock, PairContext};

/// Quadrature configuration for [`assemble`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadSpec {
    /// Gauss points per direction for pairs at least one diameter apart.
    pub disjoint_order: usize,
    /// Extra points per direction for nearer disjoint pairs.
    pub near_boost: usize,
    /// Points per direction in the reduced integrals of identical and touching pairs.
    pub singular_order: usize,
    /// Points per direction for ∫ φ_a φ_b κ_h.
    pub complement_order: usize,
    /// Refinement depth of boundary-layer sub-triangles in the complement term (N = 2).
    pub boundary_depth: usize,
    /// Number of partial matrices the pair loop is split into (fixed, so the
    /// summation order never depends on the thread pool).
    pub blocks: usize,
}

impl QuadSpec {
    pub fn for_dim(dim: usize) -> Self {
        match dim {
            1 => Self { disjoint_order: 6, near_boost: 2, singular_order: 10, complement_order: 10, boundary_depth: 0, blocks: 16 },
            _ => Self { disjoint_order: 5, near_boost: 2, singular_order: 8, complement_order: 5, boundary_depth: 5, blocks: 16 },
        }
    }

    /// Every order raised by two and one more boundary refinement level.
    pub fn enriched(&self) -> Self {
        Self {
            disjoint_order: self.disjoint_order + 2,
            near_boost: self.near_boost,
            singular_order: self.singular_order + 2,
            complement_order: self.complement_order + 2,
            boundary_depth: self.boundary_depth + 1,
            blocks: self.blocks,
        }
    }
}

/// Work done in one category of the assembly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CategoryStats {
    pub pairs: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssemblyReport {
    pub identical: CategoryStats,
    pub edge: CategoryStats,
    pub vertex: CategoryStats,
    pub near: CategoryStats,
    pub far: CategoryStats,
    pub complement: CategoryStats,
    pub spec: Option<QuadSpec>,
    /// max |A_ij − A_ji| / max |A|.
    pub asymmetry: f64,
}

impl AssemblyReport {
    fn category(&mut self, kind: PairKind) -> &mut CategoryStats {
        match kind {
            PairKind::Identical => &mut self.identical,
            PairKind::Edge => &mut self.edge,
            PairKind::Vertex => &mut self.vertex,
            PairKind::Near => &mut self.near,
            PairKind::Far => &mut self.far,
        }
    }

    fn merge(&mut self, other: &Self) {
        for kind in [PairKind::Identical, PairKind::Edge, PairKind::Vertex, PairKind::Near, PairKind::Far] {
            let o = *other.clone().category(kind);
            let c = self.category(kind);
            c.pairs += o.pairs;
            c.evaluations += o.evaluations;
        }
    }
}

/// Assembled stiffness matrix of the seminorm over the free nodes of a mesh.
#[derive(Debug, Clone)]
pub struct NonlocalForm<T> {
    pub mesh: Arc<BallMesh<T>>,
    pub s: T,
    pub matrix: DenseMatrix<T>,
    /// The 2 s(1−s)∫ φ_i φ_j κ_h part of `matrix`, as sorted (i, j, value) triplets.
    pub complement: Vec<(usize, usize, T)>,
    pub report: AssemblyReport,
    pub params: ProblemParams<T>,
    factor: Cholesky<T>,
}

/// Assembles the form on the free nodes of `mesh`.
pub fn assemble<T: Scalar>(mesh: &Arc<BallMesh<T>>, s: T, spec: &QuadSpec) -> Result<NonlocalForm<T>> {
    let params = ProblemParams::new(mesh.dim, s)?;
    let n = mesh.n_free;
    let ctx = PairContext::new(mesh, s, spec.disjoint_order, spec.disjoint_order + spec.near_boost, spec.singular_order);
    let n_el = mesh.n_elements();
    // cap partial-matrix memory at roughly half a gigabyte
    let per_block = (n * n * std::mem::size_of::<T>()).max(1);
    let blocks = spec.blocks.min((512usize << 20) / per_block).max(1);

    let partials: Vec<Result<(DenseMatrix<T>, AssemblyReport)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut mat = DenseMatrix::zeros(n);
            let mut report = AssemblyReport::default();
            let mut e1 = b;
            while e1 < n_el {
                for e2 in e1..n_el {
                    let kind = ctx.classify(e1, e2);
                    let block = ctx.integrate(e1, e2, kind);
                    if !block.is_finite() {
                        return Err(Error::NonFinite { category: kind.name() });
                    }
                    let stats = report.category(kind);
                    stats.pairs += 1;
                    stats.evaluations += block.evaluations;
                    let mult = if e1 == e2 { T::one() } else { lit(2.0) };
                    scatter(&mut mat, &block, mult, n);
                }
                e1 += blocks;
            }
            Ok((mat, report))
        })
        .collect();

    let mut matrix = DenseMatrix::zeros(n);
    let mut report = AssemblyReport { spec: Some(*spec), ..Default::default() };
    for part in partials {
        let (mat, rep) = part?;
        matrix.add_assign(&mat);
        report.merge(&rep);
    }

    let (complement, stats) = complement_triplets(mesh, s, spec)?;
    report.complement = stats;
    let factor_c = s * (T::one() - s);
    let mut scaled = Vec::with_capacity(complement.len());
    for (i, j, v) in complement {
        let v = lit::<T>(2.0) * factor_c * v;
        scaled.push((i, j, v));
    }
    let mut data = matrix.as_slice().iter().map(|&v| v * factor_c).collect::<Vec<T>>();
    for &(i, j, v) in &scaled {
        data[i * n + j] = data[i * n + j] + v;
    }
    let matrix = DenseMatrix::from_rows(n, data);
    let max_abs = matrix.as_slice().iter().fold(T::zero(), |m, v| m.max(v.abs()));
    report.asymmetry = if max_abs > T::zero() { (matrix.max_asymmetry() / max_abs).to_f64().unwrap_or(f64::NAN) } else { 0.0 };
    let factor = matrix.cholesky()?;
    Ok(NonlocalForm { mesh: mesh.clone(), s, matrix, complement: scaled, report, params, factor })
}

fn scatter<T: Scalar>(mat: &mut DenseMatrix<T>, block: &LocalBlock<T>, mult: T, n: usize) {
    for a in 0..block.m {
        let i = block.nodes[a];
        if i >= n {
            continue;
        }
        for b in 0..block.m {
            let j = block.nodes[b];
            if j < n {
                mat.add(i, j, mult * block.vals[a][b]);
            }
        }
    }
}

/// Unscaled ∫ φ_i φ_j κ_h over B_h for free i, j.
fn complement_triplets<T: Scalar>(
    mesh: &BallMesh<T>,
    s: T,
    spec: &QuadSpec,
) -> Result<(Vec<(usize, usize, T)>, CategoryStats)> {
    let exterior = (mesh.dim == 2).then(|| PolygonExterior::of_mesh(mesh, s));
    let locals: Vec<([[T; 3]; 3], usize)> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let simplex = mesh.simplex(e);
            let mut free = [false; 3];
            for (k, &i) in mesh.element(e).iter().enumerate() {
                free[k] = mesh.is_free(i);
            }
            match &exterior {
                None => (element_complement_1d(&simplex, free, s, spec.complement_order), spec.complement_order),
                Some(ext) => {
                    let mut count = 0;
                    let m = element_complement_2d(&simplex, free, ext, spec.complement_order, spec.boundary_depth, &mut count);
                    (m, count)
                }
            }
        })
        .collect();
    let mut map = std::collections::BTreeMap::new();
    let mut stats = CategoryStats::default();
    for (e, (local, count)) in locals.into_iter().enumerate() {
        stats.pairs += 1;
        stats.evaluations += count;
        let nodes = mesh.element(e);
        for (a, &i) in nodes.iter().enumerate() {
            for (b, &j) in nodes.iter().enumerate() {
                if mesh.is_free(i) && mesh.is_free(j) {
                    let v = local[a][b];
                    if !v.is_finite() {
                        return Err(Error::NonFinite { category: "complement" });
                    }
                    *map.entry((i, j)).or_insert(T::zero()) = *map.get(&(i, j)).unwrap_or(&T::zero()) + v;
                }
            }
        }
    }
    Ok((map.into_iter().map(|((i, j), v)| (i, j, v)).collect(), stats))
}

impl<T: Scalar> NonlocalForm<T> {
    fn check(&self, u: &FeFunction<T>) -> Result<()> {
        if !u.same_mesh(&self.mesh) && !same_geometry(&u.mesh, &self.mesh) {
            return Err(Error::MeshMismatch);
        }
        Ok(())
    }

    pub fn n_free(&self) -> usize {
        self.mesh.n_free
    }

    /// [u]² = coeffᵀ A coeff.
    pub fn seminorm_sq(&self, u: &FeFunction<T>) -> Result<T> {
        self.check(u)?;
        Ok(self.matrix.bilinear(u.free_values(), u.free_values()))
    }

    /// a(u, v).
    pub fn inner(&self, u: &FeFunction<T>, v: &FeFunction<T>) -> Result<T> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.matrix.bilinear(u.free_values(), v.free_values()))
    }

    /// s(1−s)∬_{B_h×B_h} |u(x)−u(y)|²/|x−y|^{N+2s}, the seminorm without the exterior interaction.
    pub fn regional_seminorm_sq(&self, u: &FeFunction<T>) -> Result<T> {
        let full = self.seminorm_sq(u)?;
        let c = u.free_values();
        let ext: T = self.complement.iter().map(|&(i, j, v)| c[i] * v * c[j]).sum();
        Ok(full - ext)
    }

    /// Solves A x = b on the free nodes with the factor computed at assembly.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.factor.solve(b)
    }

    pub fn factor(&self) -> &Cholesky<T> {
        &self.factor
    }

    pub fn min_eigenvalue(&self) -> T {
        min_eigenvalue(&self.matrix, &self.factor, lit(1e-10), 500)
    }

    /// Writes the matrix as "i j value" lines (nonzero entries only).
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.matrix.dim();
        for i in 0..n {
            for j in 0..n {
                let v = self.matrix.get(i, j);
                if v != T::zero() {
                    writeln!(w, "{i} {j} {v:e}")?;
                }
            }
        }
        Ok(())
    }
}

fn same_geometry<T: Scalar>(a: &BallMesh<T>, b: &BallMesh<T>) -> bool {
    a.dim == b.dim && a.level == b.level && a.n_nodes() == b.n_nodes() && a.n_elements() == b.n_elements()
}

/// ∬_{T×T} |u(x)−u(y)|²/|x−y|^{N+2s} dx dy for u affine on T with gradient `grad`
/// (no s(1−s) factor).
pub fn element_self_energy<T: Scalar>(simplex: &Simplex<T>, s: T, grad: [T; 2]) -> T {
    let m = pairs::self_interaction_moment(simplex, s, &pairs::arc_rule(QuadSpec::for_dim(simplex.dim).singular_order));
    grad[0] * (m[0][0] * grad[0] + m[0][1] * grad[1]) + grad[1] * (m[1][0] * grad[0] + m[1][1] * grad[1])
}

/// [u]² for `u` on the form's mesh.
pub fn seminorm_sq<T: Scalar>(form: &NonlocalForm<T>, u: &FeFunction<T>) -> Result<T> {
    form.seminorm_sq(u)
}

/// s(1−s)∬_{B_h×B_h} |u(x)−u(y)|²/|x−y|^{N+2s} for arbitrary nodal values,
/// boundary nodes included, without assembling a matrix.
pub fn regional_energy<T: Scalar>(mesh: &BallMesh<T>, s: T, spec: &QuadSpec, values: &[T]) -> Result<T> {
    check_order(mesh.dim, s)?;
    assert_eq!(values.len(), mesh.n_nodes());
    let ctx = PairContext::new(mesh, s, spec.disjoint_order, spec.disjoint_order + spec.near_boost, spec.singular_order);
    let n_el = mesh.n_elements();
    let rows: Vec<Result<T>> = (0..n_el)
        .into_par_iter()
        .map(|e1| {
            let mut acc = T::zero();
            for e2 in e1..n_el {
                let kind = ctx.classify(e1, e2);
                let block = ctx.integrate(e1, e2, kind);
                if !block.is_finite() {
                    return Err(Error::NonFinite { category: kind.name() });
                }
                let mut v = T::zero();
                for a in 0..block.m {
                    for b in 0..block.m {
                        v = v + values[block.nodes[a]] * block.vals[a][b] * values[block.nodes[b]];
                    }
                }
                acc = acc + if e1 == e2 { v } else { v + v };
            }
            Ok(acc)
        })
        .collect();
    let mut total = T::zero();
    for r in rows {
        total = total + r?;
    }
    Ok(total * s * (T::one() - s))
}
