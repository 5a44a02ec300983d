//! Interaction of B_h with its exterior: the weight κ and its element integrals.

use crate::error::{Error, Result};
use crate::mesh::{BallMesh, Simplex};
use crate::quadrature::QuadratureRule;
use crate::scalar::{lit, Scalar};
use crate::special::gamma;

/// Points closer than this to the unit sphere are rejected by [`complement_weight`].
pub const SPHERE_GUARD: f64 = 1e-12;

/// κ(x) = ∫_{R^N∖B} |x−y|^{−(N+2s)} dy for the unit ball B.
///
/// N = 1 uses the closed form; N = 2 integrates (1/2s)·r*(θ)^{−2s} over the
/// circle with the periodic trapezoid rule, doubling until it settles.
pub fn complement_weight<T: Scalar>(x: &[T], s: T) -> Result<T> {
    let r2: T = x.iter().map(|&v| v * v).sum();
    let r = r2.sqrt();
    if !(r < T::one() - lit(SPHERE_GUARD)) {
        return Err(Error::DivergenceGuard { radius: r.to_f64().unwrap_or(f64::NAN) });
    }
    let two_s = s + s;
    match x.len() {
        1 => Ok(((T::one() - x[0]).powf(-two_s) + (T::one() + x[0]).powf(-two_s)) / two_s),
        2 => {
            let mut n = 64usize;
            let mut prev = disk_trapezoid(x, two_s, n);
            loop {
                n *= 2;
                let next = disk_trapezoid(x, two_s, n);
                if (next - prev).abs() <= lit::<T>(1e-15) * next.abs() || n >= 1 << 20 {
                    return Ok(next);
                }
                prev = next;
            }
        }
        d => Err(Error::InvalidParams(format!("complement weight implemented for N ≤ 2, got {d}"))),
    }
}

fn disk_trapezoid<T: Scalar>(x: &[T], two_s: T, n: usize) -> T {
    let one_minus = T::one() - x[0] * x[0] - x[1] * x[1];
    let step = lit::<T>(2.0) * T::PI() / T::from_usize(n).unwrap();
    let mut sum = T::zero();
    for k in 0..n {
        let (sn, cs) = (step * T::from_usize(k).unwrap()).sin_cos();
        let proj = x[0] * cs + x[1] * sn;
        // distance to the circle along ω, written to avoid cancellation
        let root = (one_minus + proj * proj).sqrt();
        let dist = one_minus / (root + proj);
        sum = sum + dist.powf(-two_s);
    }
    sum * step / two_s
}

/// ∫_0^ψ cos^{2s}(t) dt, from sin ψ and cos ψ ≥ 0.
///
/// Two binomial series: one in sin ψ for |ψ| ≤ π/4, one in cos ψ around
/// ±π/2, each converging at least like 2^{−k}.
pub(crate) struct CosPowerIntegral<T> {
    s: T,
    full: T,
}

impl<T: Scalar> CosPowerIntegral<T> {
    pub fn new(s: T) -> Self {
        let half = lit::<T>(0.5);
        let full = T::PI().sqrt() * gamma(s + half) / (lit::<T>(2.0) * gamma(s + T::one()));
        Self { s, full }
    }

    pub fn eval(&self, sin: T, cos: T) -> T {
        let eps = T::epsilon() * lit(0.25);
        if sin.abs() <= cos {
            // (1−w²)^{s−1/2} expanded in w²
            let w2 = sin * sin;
            let e = self.s - lit(0.5);
            let mut coef = T::one();
            let mut pow = sin;
            let mut sum = sin;
            for k in 1..200 {
                let kf = T::from_usize(k).unwrap();
                coef = -coef * (e - kf + T::one()) / kf;
                pow = pow * w2;
                let term = coef * pow / (kf + kf + T::one());
                sum = sum + term;
                if term.abs() <= eps * sum.abs() {
                    break;
                }
            }
            sum
        } else {
            // ∫_0^{π/2−|ψ|} sin^{2s} = Σ binom(2k,k)/4^k · c^{2s+2k+1}/(2s+2k+1)
            let c2 = cos * cos;
            let two_s = self.s + self.s;
            let mut coef = T::one();
            let mut pow = cos.powf(two_s + T::one());
            let mut tail = pow / (two_s + T::one());
            for k in 1..200 {
                let kf = T::from_usize(k).unwrap();
                coef = coef * (kf + kf - T::one()) / (kf + kf);
                pow = pow * c2;
                let term = coef * pow / (two_s + kf + kf + T::one());
                tail = tail + term;
                if term <= eps * tail {
                    break;
                }
            }
            let g = self.full - tail;
            if sin < T::zero() {
                -g
            } else {
                g
            }
        }
    }
}

/// κ_h(x) = ∫_{R²∖P} |x−y|^{−2−2s} dy for a convex polygon P (counter-clockwise).
pub(crate) struct PolygonExterior<T> {
    /// (start vertex, unit tangent, outward normal) per edge.
    edges: Vec<([T; 2], [T; 2], [T; 2])>,
    s: T,
    cos_pow: CosPowerIntegral<T>,
}

impl<T: Scalar> PolygonExterior<T> {
    pub fn new(vertices: &[[T; 2]], s: T) -> Self {
        let n = vertices.len();
        let edges = (0..n)
            .map(|k| {
                let a = vertices[k];
                let b = vertices[(k + 1) % n];
                let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                let t = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
                (a, t, [t[1], -t[0]])
            })
            .collect();
        Self { edges, s, cos_pow: CosPowerIntegral::new(s) }
    }

    /// The polygon spanned by the boundary nodes of a disk mesh, in angular order.
    pub fn of_mesh(mesh: &BallMesh<T>, s: T) -> Self {
        let mut pts: Vec<[T; 2]> = (mesh.n_free..mesh.n_nodes()).map(|i| mesh.point(i)).collect();
        pts.sort_by(|a, b| a[1].atan2(a[0]).partial_cmp(&b[1].atan2(b[0])).unwrap());
        Self::new(&pts, s)
    }

    /// Distance from an interior point to the boundary.
    pub fn distance(&self, x: &[T; 2]) -> T {
        self.edges
            .iter()
            .map(|(a, _, n)| (a[0] - x[0]) * n[0] + (a[1] - x[1]) * n[1])
            .fold(T::infinity(), T::min)
    }

    pub fn weight(&self, x: &[T; 2]) -> T {
        let n = self.edges.len();
        let mut sum = T::zero();
        for k in 0..n {
            let (a, t, nrm) = self.edges[k];
            let b = self.edges[(k + 1) % n].0;
            let d = (a[0] - x[0]) * nrm[0] + (a[1] - x[1]) * nrm[1];
            let end = |v: [T; 2]| {
                let rel = [v[0] - x[0], v[1] - x[1]];
                let dist = (rel[0] * rel[0] + rel[1] * rel[1]).sqrt();
                let p = rel[0] * t[0] + rel[1] * t[1];
                self.cos_pow.eval(p / dist, d / dist)
            };
            sum = sum + d.powf(-(self.s + self.s)) * (end(b) - end(a));
        }
        sum / (self.s + self.s)
    }
}

/// ∫_T φ_a φ_b κ dx for the free vertices a, b of a 1D element (unscaled).
pub(crate) fn element_complement_1d<T: Scalar>(
    simplex: &Simplex<T>,
    free: [bool; 3],
    s: T,
    order: usize,
) -> [[T; 3]; 3] {
    let mut out = [[T::zero(); 3]; 3];
    let two_s = s + s;
    let x0 = simplex.vertices[0][0];
    let x1 = simplex.vertices[1][0];
    let h = simplex.measure;
    let rule = QuadratureRule::<T>::segment(order);
    for sing in [T::one(), -T::one()] {
        // the term |sing − x|^{−2s}/(2s)
        let touching = [(x0 - sing).abs(), (x1 - sing).abs()]
            .iter()
            .position(|&d| d <= lit::<T>(1e-14));
        match touching {
            Some(k) => {
                // the only free vertex sits at distance h; its hat is t/h
                let other = 1 - k;
                if free[other] {
                    let v = h.powf(T::one() - two_s) / (lit::<T>(3.0) - two_s) / two_s;
                    out[other][other] = out[other][other] + v;
                }
            }
            None => {
                for q in 0..rule.len() {
                    let lam = rule.barycentric(q);
                    let x = lam[0] * x0 + lam[1] * x1;
                    let kappa = (sing - x).abs().powf(-two_s) / two_s;
                    let w = rule.weights[q] * h * kappa;
                    for a in 0..2 {
                        for b in 0..2 {
                            if free[a] && free[b] {
                                out[a][b] = out[a][b] + w * lam[a] * lam[b];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// ∫_T φ_a φ_b κ_h dx for a triangle, refining sub-triangles that lie within
/// a quarter diameter of the polygon boundary, down to `depth` levels (unscaled).
pub(crate) fn element_complement_2d<T: Scalar>(
    simplex: &Simplex<T>,
    free: [bool; 3],
    exterior: &PolygonExterior<T>,
    order: usize,
    depth: usize,
    evaluations: &mut usize,
) -> [[T; 3]; 3] {
    let rule = QuadratureRule::<T>::triangle(order);
    let mut out = [[T::zero(); 3]; 3];
    let eye = [[T::one(), T::zero(), T::zero()], [T::zero(), T::one(), T::zero()], [T::zero(), T::zero(), T::one()]];
    let mut stack = vec![(eye, 0usize)];
    while let Some((sub, level)) = stack.pop() {
        let pts = sub.map(|b| simplex.map(&b));
        let diam = (0..3)
            .map(|k| {
                let (p, q) = (pts[k], pts[(k + 1) % 3]);
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
            })
            .fold(T::zero(), T::max);
        let gap = pts.iter().map(|p| exterior.distance(p)).fold(T::infinity(), T::min);
        if level < depth && gap < diam * lit(0.25) {
            let mid = |i: usize, j: usize| {
                let mut m = [T::zero(); 3];
                for k in 0..3 {
                    m[k] = (sub[i][k] + sub[j][k]) * lit(0.5);
                }
                m
            };
            let (m01, m12, m02) = (mid(0, 1), mid(1, 2), mid(0, 2));
            stack.push(([sub[0], m01, m02], level + 1));
            stack.push(([m01, sub[1], m12], level + 1));
            stack.push(([m02, m12, sub[2]], level + 1));
            stack.push(([m01, m12, m02], level + 1));
            continue;
        }
        let area = simplex.measure * lit::<T>(0.25).powi(level as i32);
        for q in 0..rule.len() {
            let local = rule.barycentric(q);
            let mut lam = [T::zero(); 3];
            for k in 0..3 {
                lam[k] = local[0] * sub[0][k] + local[1] * sub[1][k] + local[2] * sub[2][k];
            }
            let x = simplex.map(&lam);
            let w = rule.weights[q] * (area + area) * exterior.weight(&x);
            *evaluations += 1;
            for a in 0..3 {
                for b in 0..3 {
                    if free[a] && free[b] {
                        out[a][b] = out[a][b] + w * lam[a] * lam[b];
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_gk;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn center_values() {
        for s in [0.1, 0.25, 0.4] {
            assert_relative_eq!(complement_weight(&[0.0], s).unwrap(), 1.0 / s, max_relative = 1e-14);
        }
        for s in [0.25, 0.5, 0.75] {
            assert_relative_eq!(complement_weight(&[0.0, 0.0], s).unwrap(), PI / s, max_relative = 1e-13);
        }
        let want = (0.5f64.powf(-0.5) + 1.5f64.powf(-0.5)) / 0.5;
        assert_relative_eq!(complement_weight(&[0.5], 0.25).unwrap(), want, max_relative = 1e-14);
    }

    #[test]
    fn guard_near_sphere() {
        assert!(matches!(complement_weight(&[1.0], 0.25), Err(Error::DivergenceGuard { .. })));
        assert!(matches!(complement_weight(&[0.6, 0.8], 0.5), Err(Error::DivergenceGuard { .. })));
    }

    #[test]
    fn disk_weight_is_radial_and_increasing() {
        let s = 0.5;
        let mut prev = 0.0;
        for r in [0.0, 0.3, 0.6, 0.9, 0.99] {
            let base = complement_weight(&[r, 0.0], s).unwrap();
            for k in 1..8 {
                let t = k as f64 * PI / 4.0;
                let v = complement_weight(&[r * t.cos(), r * t.sin()], s).unwrap();
                assert_relative_eq!(v, base, max_relative = 1e-12);
            }
            assert!(base > prev);
            prev = base;
        }
    }

    #[test]
    fn cos_power_series_match_quadrature() {
        for s in [0.1, 0.25, 0.5, 0.75] {
            let g = CosPowerIntegral::new(s);
            for psi in [-1.5, -1.0, -0.7, -0.2, 0.0, 0.3, 0.78, 0.8, 1.2, 1.55] {
                let want = adaptive_gk(|t: f64| t.cos().powf(2.0 * s), 0.0, psi, 1e-15, 1e-14, 200).unwrap().value;
                assert_relative_eq!(g.eval(psi.sin(), psi.cos()), want, epsilon = 1e-14, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn polygon_weight_approaches_disk() {
        let s = 0.5;
        let n = 4096;
        let verts: Vec<[f64; 2]> =
            (0..n).map(|k| [(2.0 * PI * k as f64 / n as f64).cos(), (2.0 * PI * k as f64 / n as f64).sin()]).collect();
        let poly = PolygonExterior::new(&verts, s);
        let x = [0.3, -0.2];
        let disk = complement_weight(&x, s).unwrap();
        assert_relative_eq!(poly.weight(&x), disk, max_relative = 1e-5);
        assert!(poly.weight(&x) > disk);
    }

    #[test]
    fn square_exterior_from_a_corner_quadrant() {
        // unit square around x = center; compare against direct polar quadrature
        let s = 0.25;
        let verts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let poly = PolygonExterior::new(&verts, s);
        let x = [0.3, 0.6];
        let reach = |t: f64| {
            let (c, sn) = (t.cos(), t.sin());
            let tx = if c > 0.0 { (1.0 - x[0]) / c } else if c < 0.0 { -x[0] / c } else { f64::INFINITY };
            let ty = if sn > 0.0 { (1.0 - x[1]) / sn } else if sn < 0.0 { -x[1] / sn } else { f64::INFINITY };
            tx.min(ty)
        };
        let corners: Vec<f64> =
            verts.iter().map(|v| (v[1] - x[1]).atan2(v[0] - x[0])).map(|a| if a < 0.0 { a + 2.0 * PI } else { a }).collect();
        let mut pts = vec![0.0, 2.0 * PI];
        pts.extend(corners);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = crate::quadrature::adaptive_gk_split(|t| reach(t).powf(-2.0 * s), &pts, 1e-14, 1e-14, 500)
            .unwrap()
            .value
            / (2.0 * s);
        assert_relative_eq!(poly.weight(&x), want, max_relative = 1e-12);
    }
}
