//! Element-pair integrals ∬_{T×T'} (φ_a(x)−φ_a(y))(φ_b(x)−φ_b(y)) |x−y|^{−(N+2s)}.
//!
//! Identical pairs use the exact overlap formula for a simplex and its
//! translates. Touching pairs are split into cones around a shared vertex;
//! the integrand is homogeneous there, so the radial variable integrates in
//! closed form and what remains is smooth. Disjoint pairs use tensor Gauss.

use crate::mesh::{BallMesh, Simplex};
use crate::quadrature::{gauss_legendre, QuadratureRule};
use crate::scalar::{lit, Scalar};

pub(crate) const MAX_LOCAL: usize = 6;
const NONE: usize = usize::MAX;

/// How two elements meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Identical,
    Edge,
    Vertex,
    Near,
    Far,
}

impl PairKind {
    pub fn name(self) -> &'static str {
        match self {
            PairKind::Identical => "identical",
            PairKind::Edge => "edge-touching",
            PairKind::Vertex => "vertex-touching",
            PairKind::Near => "near disjoint",
            PairKind::Far => "far disjoint",
        }
    }
}

/// Quadrature rule mapped onto one element.
#[derive(Debug, Clone)]
pub(crate) struct PhysicalRule<T> {
    pub pts: Vec<[T; 2]>,
    pub weights: Vec<T>,
    pub bary: Vec<[T; 3]>,
}

impl<T: Scalar> PhysicalRule<T> {
    fn new(simplex: &Simplex<T>, rule: &QuadratureRule<T>) -> Self {
        let scale = if simplex.dim == 1 { simplex.measure } else { simplex.measure + simplex.measure };
        let bary: Vec<[T; 3]> = (0..rule.len()).map(|k| rule.barycentric(k)).collect();
        Self {
            pts: bary.iter().map(|b| simplex.map(b)).collect(),
            weights: rule.weights.iter().map(|&w| w * scale).collect(),
            bary,
        }
    }
}

/// Per-element data shared by all pairs.
pub(crate) struct ElementData<T> {
    pub simplex: Simplex<T>,
    pub nodes: [usize; 3],
    pub n_vertices: usize,
    pub centroid: [T; 2],
    pub radius: T,
    pub far_rule: PhysicalRule<T>,
    pub near_rule: PhysicalRule<T>,
    pub singular_rule: PhysicalRule<T>,
}

pub(crate) struct PairContext<T> {
    pub dim: usize,
    pub s: T,
    pub elements: Vec<ElementData<T>>,
    /// −(N+2s)/2, applied to |x−y|².
    kernel_power: T,
    line: (Vec<T>, Vec<T>),
    /// Angular rule for the identical-pair formula.
    arc: (Vec<T>, Vec<T>),
}

/// Local matrix over the union of the two elements' vertices.
#[derive(Debug, Clone)]
pub(crate) struct LocalBlock<T> {
    pub nodes: [usize; MAX_LOCAL],
    pub m: usize,
    pub vals: [[T; MAX_LOCAL]; MAX_LOCAL],
    /// Position of each local node in T and in T' (NONE if absent).
    pos: [[usize; 2]; MAX_LOCAL],
    pub evaluations: usize,
}

impl<T: Scalar> LocalBlock<T> {
    fn new(t: &ElementData<T>, tp: &ElementData<T>) -> Self {
        let mut nodes = [0usize; MAX_LOCAL];
        let mut pos = [[NONE; 2]; MAX_LOCAL];
        let mut m = 0;
        for k in 0..t.n_vertices {
            nodes[m] = t.nodes[k];
            pos[m][0] = k;
            m += 1;
        }
        for k in 0..tp.n_vertices {
            match nodes[..m].iter().position(|&n| n == tp.nodes[k]) {
                Some(a) => pos[a][1] = k,
                None => {
                    nodes[m] = tp.nodes[k];
                    pos[m][1] = k;
                    m += 1;
                }
            }
        }
        Self { nodes, m, vals: [[T::zero(); MAX_LOCAL]; MAX_LOCAL], pos, evaluations: 0 }
    }

    /// Adds w·d dᵀ with d_a = φ_a(x) − φ_a(y), x given by barycentrics `lam` in T
    /// and y by `mu` in T'.
    #[inline]
    fn add(&mut self, w: T, lam: &[T; 3], mu: &[T; 3]) {
        let mut d = [T::zero(); MAX_LOCAL];
        for a in 0..self.m {
            let [p, q] = self.pos[a];
            let mut v = T::zero();
            if p != NONE {
                v = lam[p];
            }
            if q != NONE {
                v = v - mu[q];
            }
            d[a] = v;
        }
        for a in 0..self.m {
            let wa = w * d[a];
            for b in a..self.m {
                self.vals[a][b] = self.vals[a][b] + wa * d[b];
            }
        }
        self.evaluations += 1;
    }

    fn scale(&mut self, f: T) {
        for a in 0..self.m {
            for b in a..self.m {
                self.vals[a][b] = self.vals[a][b] * f;
            }
        }
    }

    fn absorb(&mut self, other: &Self) {
        for a in 0..self.m {
            for b in a..self.m {
                self.vals[a][b] = self.vals[a][b] + other.vals[a][b];
            }
        }
        self.evaluations += other.evaluations;
    }

    fn mirror(&mut self) {
        for a in 0..self.m {
            for b in 0..a {
                self.vals[a][b] = self.vals[b][a];
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        (0..self.m).all(|a| (0..self.m).all(|b| self.vals[a][b].is_finite()))
    }
}

fn vertex_bary<T: Scalar>(k: usize) -> [T; 3] {
    let mut b = [T::zero(); 3];
    b[k] = T::one();
    b
}

fn edge_bary<T: Scalar>(from: usize, to: usize, t: T) -> [T; 3] {
    let mut b = [T::zero(); 3];
    b[from] = T::one() - t;
    b[to] = b[to] + t;
    b
}

impl<T: Scalar> PairContext<T> {
    pub fn new(mesh: &BallMesh<T>, s: T, far: usize, near: usize, singular: usize) -> Self {
        let dim = mesh.dim;
        let rules = [far, near, singular].map(|o| QuadratureRule::<T>::for_dim(dim, o));
        let elements = (0..mesh.n_elements())
            .map(|e| {
                let simplex = mesh.simplex(e);
                let mut nodes = [0usize; 3];
                nodes[..dim + 1].copy_from_slice(mesh.element(e));
                let centroid = simplex.centroid();
                let radius = (0..dim + 1)
                    .map(|k| {
                        let v = simplex.vertices[k];
                        ((v[0] - centroid[0]).powi(2) + (v[1] - centroid[1]).powi(2)).sqrt()
                    })
                    .fold(T::zero(), T::max);
                ElementData {
                    far_rule: PhysicalRule::new(&simplex, &rules[0]),
                    near_rule: PhysicalRule::new(&simplex, &rules[1]),
                    singular_rule: PhysicalRule::new(&simplex, &rules[2]),
                    simplex,
                    nodes,
                    n_vertices: dim + 1,
                    centroid,
                    radius,
                }
            })
            .collect();
        let kernel_power = -(from_dim::<T>(dim) + s + s) * lit(0.5);
        Self {
            dim,
            s,
            elements,
            kernel_power,
            line: gauss_legendre(singular),
            arc: arc_rule(singular),
        }
    }

    pub fn classify(&self, e1: usize, e2: usize) -> PairKind {
        if e1 == e2 {
            return PairKind::Identical;
        }
        let (t, tp) = (&self.elements[e1], &self.elements[e2]);
        let shared = t.nodes[..t.n_vertices].iter().filter(|n| tp.nodes[..tp.n_vertices].contains(n)).count();
        match (shared, self.dim) {
            (2, 2) => PairKind::Edge,
            (1, _) => PairKind::Vertex,
            _ => {
                let dc = ((t.centroid[0] - tp.centroid[0]).powi(2) + (t.centroid[1] - tp.centroid[1]).powi(2)).sqrt();
                let gap = dc - t.radius - tp.radius;
                if gap < t.simplex.diameter.max(tp.simplex.diameter) {
                    PairKind::Near
                } else {
                    PairKind::Far
                }
            }
        }
    }

    #[inline]
    fn kernel(&self, x: &[T; 2], y: &[T; 2]) -> T {
        let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
        r2.powf(self.kernel_power)
    }

    /// Local block of ∬_{T×T'} for the given pair kind.
    pub fn integrate(&self, e1: usize, e2: usize, kind: PairKind) -> LocalBlock<T> {
        let (t, tp) = (&self.elements[e1], &self.elements[e2]);
        let mut block = LocalBlock::new(t, tp);
        match kind {
            PairKind::Identical => self.identical(t, &mut block),
            PairKind::Far => self.disjoint(&t.far_rule, &tp.far_rule, &mut block),
            PairKind::Near => self.disjoint(&t.near_rule, &tp.near_rule, &mut block),
            PairKind::Vertex if self.dim == 1 => self.vertex_1d(t, tp, &mut block),
            PairKind::Vertex => self.vertex_2d(t, tp, &mut block),
            PairKind::Edge => self.edge_2d(t, tp, &mut block),
        }
        block.mirror();
        block
    }

    fn identical(&self, t: &ElementData<T>, block: &mut LocalBlock<T>) {
        let m = self_interaction_moment(&t.simplex, self.s, &self.arc);
        let g = &t.simplex.grads;
        let nv = t.n_vertices;
        for a in 0..nv {
            let ma = [m[0][0] * g[a][0] + m[0][1] * g[a][1], m[1][0] * g[a][0] + m[1][1] * g[a][1]];
            for b in a..nv {
                block.vals[a][b] = ma[0] * g[b][0] + ma[1] * g[b][1];
            }
        }
        block.evaluations += if self.dim == 1 { 1 } else { 8 * self.arc.0.len() };
    }

    fn disjoint(&self, rx: &PhysicalRule<T>, ry: &PhysicalRule<T>, block: &mut LocalBlock<T>) {
        for p in 0..rx.pts.len() {
            for q in 0..ry.pts.len() {
                let w = rx.weights[p] * ry.weights[q] * self.kernel(&rx.pts[p], &ry.pts[q]);
                block.add(w, &rx.bary[p], &ry.bary[q]);
            }
        }
    }

    /// Shared vertex indices (in T, in T').
    fn shared(t: &ElementData<T>, tp: &ElementData<T>) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for k in 0..t.n_vertices {
            for l in 0..tp.n_vertices {
                if t.nodes[k] == tp.nodes[l] {
                    out.push((k, l));
                }
            }
        }
        out
    }

    fn point(el: &ElementData<T>, bary: &[T; 3]) -> [T; 2] {
        el.simplex.map(bary)
    }

    fn vertex_1d(&self, t: &ElementData<T>, tp: &ElementData<T>, block: &mut LocalBlock<T>) {
        let (kp, lp) = Self::shared(t, tp)[0];
        let ka = 1 - kp;
        let la = 1 - lp;
        let c = lit::<T>(3.0) - self.s - self.s;
        // x ranges further from P than y: x pinned at T's far vertex
        let far = vertex_bary::<T>(ka);
        let xa = Self::point(t, &far);
        let mut part = Self::empty_like(block);
        let r = &tp.singular_rule;
        for q in 0..r.pts.len() {
            part.add(r.weights[q] * self.kernel(&xa, &r.pts[q]), &far, &r.bary[q]);
        }
        part.scale(t.simplex.measure / c);
        block.absorb(&part);
        let far_p = vertex_bary::<T>(la);
        let ya = Self::point(tp, &far_p);
        let mut part = Self::empty_like(block);
        let r = &t.singular_rule;
        for p in 0..r.pts.len() {
            part.add(r.weights[p] * self.kernel(&r.pts[p], &ya), &r.bary[p], &far_p);
        }
        part.scale(tp.simplex.measure / c);
        block.absorb(&part);
    }

    fn empty_like(block: &LocalBlock<T>) -> LocalBlock<T> {
        LocalBlock { vals: [[T::zero(); MAX_LOCAL]; MAX_LOCAL], evaluations: 0, ..block.clone() }
    }

    fn vertex_2d(&self, t: &ElementData<T>, tp: &ElementData<T>, block: &mut LocalBlock<T>) {
        let (kp, lp) = Self::shared(t, tp)[0];
        let c = lit::<T>(4.0) - self.s - self.s;
        let (xs, ws) = &self.line;
        // region where x is further from P (in T's barycentric sense) than y
        {
            let (kq, kr) = ((kp + 1) % 3, (kp + 2) % 3);
            let r = &tp.singular_rule;
            let mut part = Self::empty_like(block);
            for (&sig, &wsig) in xs.iter().zip(ws) {
                let lam = edge_bary::<T>(kq, kr, sig);
                let x = Self::point(t, &lam);
                for q in 0..r.pts.len() {
                    part.add(wsig * r.weights[q] * self.kernel(&x, &r.pts[q]), &lam, &r.bary[q]);
                }
            }
            part.scale(lit::<T>(2.0) * t.simplex.measure / c);
            block.absorb(&part);
        }
        {
            let (lq, lr) = ((lp + 1) % 3, (lp + 2) % 3);
            let r = &t.singular_rule;
            let mut part = Self::empty_like(block);
            for (&sig, &wsig) in xs.iter().zip(ws) {
                let mu = edge_bary::<T>(lq, lr, sig);
                let y = Self::point(tp, &mu);
                for p in 0..r.pts.len() {
                    part.add(wsig * r.weights[p] * self.kernel(&r.pts[p], &y), &r.bary[p], &mu);
                }
            }
            part.scale(lit::<T>(2.0) * tp.simplex.measure / c);
            block.absorb(&part);
        }
    }

    fn edge_2d(&self, t: &ElementData<T>, tp: &ElementData<T>, block: &mut LocalBlock<T>) {
        let sh = Self::shared(t, tp);
        let (kp, lp) = sh[0];
        let (kq, lq) = sh[1];
        let kr = 3 - kp - kq;
        let lr = 3 - lp - lq;
        let s2 = self.s + self.s;
        let c4 = lit::<T>(4.0) - s2;
        let c3 = lit::<T>(3.0) - s2;
        let (xs, ws) = &self.line;

        // cone at P with x outermost; then a second cone at Q
        let mut d1 = Self::empty_like(block);
        {
            let lam = vertex_bary::<T>(kr);
            let x = Self::point(t, &lam);
            let r = &tp.singular_rule;
            let mut a = Self::empty_like(block);
            for q in 0..r.pts.len() {
                a.add(r.weights[q] * self.kernel(&x, &r.pts[q]), &lam, &r.bary[q]);
            }
            a.scale(T::one() / c3);
            d1.absorb(&a);
            let mut b = Self::empty_like(block);
            for (&th, &wt) in xs.iter().zip(ws) {
                let lam = edge_bary::<T>(kq, kr, th);
                let x = Self::point(t, &lam);
                for (&w, &ww) in xs.iter().zip(ws) {
                    let mu = edge_bary::<T>(lp, lr, w);
                    let y = Self::point(tp, &mu);
                    b.add(wt * ww * self.kernel(&x, &y), &lam, &mu);
                }
            }
            b.scale(lit::<T>(2.0) * tp.simplex.measure / c3);
            d1.absorb(&b);
            d1.scale(lit::<T>(2.0) * t.simplex.measure / c4);
        }
        // same with the roles of T and T' exchanged
        let mut d2 = Self::empty_like(block);
        {
            let mu = vertex_bary::<T>(lr);
            let y = Self::point(tp, &mu);
            let r = &t.singular_rule;
            let mut a = Self::empty_like(block);
            for p in 0..r.pts.len() {
                a.add(r.weights[p] * self.kernel(&r.pts[p], &y), &r.bary[p], &mu);
            }
            a.scale(T::one() / c3);
            d2.absorb(&a);
            let mut b = Self::empty_like(block);
            for (&th, &wt) in xs.iter().zip(ws) {
                let mu = edge_bary::<T>(lq, lr, th);
                let y = Self::point(tp, &mu);
                for (&w, &ww) in xs.iter().zip(ws) {
                    let lam = edge_bary::<T>(kp, kr, w);
                    let x = Self::point(t, &lam);
                    b.add(wt * ww * self.kernel(&x, &y), &lam, &mu);
                }
            }
            b.scale(lit::<T>(2.0) * t.simplex.measure / c3);
            d2.absorb(&b);
            d2.scale(lit::<T>(2.0) * tp.simplex.measure / c4);
        }
        block.absorb(&d1);
        block.absorb(&d2);
    }
}

fn from_dim<T: Scalar>(dim: usize) -> T {
    T::from_usize(dim).unwrap()
}

/// Symmetric M with ∬_{T×T} (g·(x−y))² |x−y|^{−(N+2s)} dx dy = gᵀ M g.
///
/// In 1D this is 2h^{3−2s}/((2−2s)(3−2s)). In 2D, |T ∩ (T+z)| = |T|(1 − h(z))²
/// with the gauge h(z) = ½Σ|∇λ_k·z|, so the radial integral is a Beta
/// function and only a smooth angular integral remains, split where a
/// ∇λ_k·ω changes sign.
pub(crate) fn self_interaction_moment<T: Scalar>(simplex: &Simplex<T>, s: T, arc: &(Vec<T>, Vec<T>)) -> [[T; 2]; 2] {
    let s2 = s + s;
    let z = T::zero();
    if simplex.dim == 1 {
        let h = simplex.measure;
        let c = lit::<T>(2.0) * h.powf(lit::<T>(3.0) - s2) / ((lit::<T>(2.0) - s2) * (lit::<T>(3.0) - s2));
        return [[c, z], [z, z]];
    }
    let g = &simplex.grads;
    let beta = lit::<T>(2.0) / ((lit::<T>(2.0) - s2) * (lit::<T>(3.0) - s2) * (lit::<T>(4.0) - s2));
    let two_pi = lit::<T>(2.0) * T::PI();
    let mut cuts: Vec<T> = Vec::with_capacity(8);
    for gk in g.iter() {
        let a = (-gk[0]).atan2(gk[1]);
        let a = if a < z { a + T::PI() } else { a };
        cuts.push(a);
        cuts.push(a + T::PI());
    }
    cuts.push(z);
    cuts.push(two_pi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (nodes, weights) = arc;
    let mut m = [[z; 2]; 2];
    for win in cuts.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        if hi - lo <= T::epsilon() {
            continue;
        }
        for (&u, &w) in nodes.iter().zip(weights) {
            let th = lo + (hi - lo) * u;
            let (sn, cs) = th.sin_cos();
            let gauge: T = g.iter().map(|gk| (gk[0] * cs + gk[1] * sn).abs()).sum::<T>() * lit(0.5);
            let f = w * (hi - lo) * gauge.powf(s2 - lit(2.0));
            m[0][0] = m[0][0] + f * cs * cs;
            m[0][1] = m[0][1] + f * cs * sn;
            m[1][1] = m[1][1] + f * sn * sn;
        }
    }
    m[1][0] = m[0][1];
    let c = simplex.measure * beta;
    [[c * m[0][0], c * m[0][1]], [c * m[1][0], c * m[1][1]]]
}

/// Default angular rule for [`self_interaction_moment`].
pub(crate) fn arc_rule<T: Scalar>(order: usize) -> (Vec<T>, Vec<T>) {
    gauss_legendre(order.max(8) + 4)
}
