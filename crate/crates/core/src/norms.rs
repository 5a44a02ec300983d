//! L^q norms of P1 functions and the first variation of ‖u‖^q_{L^q}.

use rayon::prelude::*;

use crate::mesh::{FeFunction, Simplex};
use crate::quadrature::QuadratureRule;
use crate::scalar::{lit, Scalar};

/// Default Gauss order (points per direction) for |u|^q integrals.
pub const DEFAULT_ORDER: usize = 6;
/// Relative change tolerated between successive orders before retrying.
pub const AUDIT_TOL: f64 = 1e-8;
const MAX_ORDER: usize = 20;

/// Pieces of an element on which an affine function keeps one sign,
/// as barycentric vertex triples (unused third entry in 1D).
fn one_signed_pieces<T: Scalar>(dim: usize, vals: &[T]) -> Vec<[[T; 3]; 3]> {
    let z = T::zero();
    let e = |k: usize| {
        let mut b = [z; 3];
        b[k] = T::one();
        b
    };
    let cut = |a: usize, b: usize| {
        let t = vals[a] / (vals[a] - vals[b]);
        let mut p = [z; 3];
        p[a] = T::one() - t;
        p[b] = t;
        p
    };
    let pos = |v: T| v > z;
    let neg = |v: T| v < z;
    if dim == 1 {
        if (pos(vals[0]) && neg(vals[1])) || (neg(vals[0]) && pos(vals[1])) {
            let m = cut(0, 1);
            return vec![[e(0), m, [z; 3]], [m, e(1), [z; 3]]];
        }
        return vec![[e(0), e(1), [z; 3]]];
    }
    let has_pos = vals.iter().any(|&v| pos(v));
    let has_neg = vals.iter().any(|&v| neg(v));
    if !(has_pos && has_neg) {
        return vec![[e(0), e(1), e(2)]];
    }
    // the vertex alone on its side of the zero line
    let lone = (0..3)
        .find(|&k| {
            let others = [(k + 1) % 3, (k + 2) % 3];
            let side = |v: T| if pos(vals[k]) { !pos(v) } else { !neg(v) };
            (pos(vals[k]) || neg(vals[k])) && others.iter().all(|&o| side(vals[o]))
        })
        .expect("a sign-changing affine function has a lone vertex");
    let (a, b) = ((lone + 1) % 3, (lone + 2) % 3);
    let pa = if vals[a] == z { e(a) } else { cut(lone, a) };
    let pb = if vals[b] == z { e(b) } else { cut(lone, b) };
    vec![[e(lone), pa, pb], [pa, e(a), e(b)], [pa, e(b), pb]]
}

/// ∫_T |u|^q and ∫_T |u|^{q−2} u φ_k for the vertices k of one element.
fn element_power<T: Scalar>(simplex: &Simplex<T>, vals: &[T], q: T, rule: &QuadratureRule<T>) -> (T, [T; 3]) {
    let dim = simplex.dim;
    let mut total = T::zero();
    let mut first = [T::zero(); 3];
    for piece in one_signed_pieces(dim, vals) {
        // measure of the piece relative to the element
        let rel = if dim == 1 {
            (piece[1][1] - piece[0][1]).abs()
        } else {
            let d1 = [piece[1][1] - piece[0][1], piece[1][2] - piece[0][2]];
            let d2 = [piece[2][1] - piece[0][1], piece[2][2] - piece[0][2]];
            (d1[0] * d2[1] - d1[1] * d2[0]).abs()
        };
        if rel == T::zero() {
            continue;
        }
        let scale = if dim == 1 { simplex.measure * rel } else { (simplex.measure + simplex.measure) * rel };
        for k in 0..rule.len() {
            let local = rule.barycentric(k);
            let mut lam = [T::zero(); 3];
            for (v, &w) in piece.iter().zip(&local).take(dim + 1) {
                for m in 0..3 {
                    lam[m] = lam[m] + w * v[m];
                }
            }
            let u: T = (0..dim + 1).map(|m| lam[m] * vals[m]).sum();
            let au = u.abs();
            if au == T::zero() {
                continue;
            }
            let pw = au.powf(q - lit(2.0));
            let w = rule.weights[k] * scale;
            total = total + w * pw * au * au;
            for m in 0..dim + 1 {
                first[m] = first[m] + w * pw * u * lam[m];
            }
        }
    }
    (total, first)
}

/// ∫ |u|^q and the vector ∫ |u|^{q−2} u φ_i over all nodes, at a fixed order.
pub fn power_integrals<T: Scalar>(u: &FeFunction<T>, q: T, order: usize) -> (T, Vec<T>) {
    let mesh = &u.mesh;
    let rule = QuadratureRule::<T>::for_dim(mesh.dim, order);
    let locals: Vec<(T, [T; 3])> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let nodes = mesh.element(e);
            let vals: Vec<T> = nodes.iter().map(|&i| u.values[i]).collect();
            if vals.iter().all(|&v| v == T::zero()) {
                return (T::zero(), [T::zero(); 3]);
            }
            element_power(&mesh.simplex(e), &vals, q, &rule)
        })
        .collect();
    let mut total = T::zero();
    let mut grad = vec![T::zero(); mesh.n_nodes()];
    for (e, (t, f)) in locals.into_iter().enumerate() {
        total = total + t;
        for (k, &i) in mesh.element(e).iter().enumerate() {
            grad[i] = grad[i] + f[k];
        }
    }
    (total, grad)
}

/// ∫ |u|^q, starting at [`DEFAULT_ORDER`] and raising the order by two until
/// successive values agree to [`AUDIT_TOL`].
pub fn lq_integral<T: Scalar>(u: &FeFunction<T>, q: T) -> T {
    let mut order = DEFAULT_ORDER;
    let mut prev = power_integrals(u, q, order).0;
    while order < MAX_ORDER {
        order += 2;
        let next = power_integrals(u, q, order).0;
        if (next - prev).abs() <= lit::<T>(AUDIT_TOL) * next.abs() {
            return next;
        }
        prev = next;
    }
    prev
}

/// ‖u‖_{L^q(B_h)}.
pub fn lq_norm<T: Scalar>(u: &FeFunction<T>, q: T) -> T {
    lq_integral(u, q).powf(T::one() / q)
}

/// b(u)_i = ∫ |u|^{q−2} u φ_i for each free node i.
pub fn nonlinear_residual<T: Scalar>(u: &FeFunction<T>, q: T) -> Vec<T> {
    let (_, mut b) = power_integrals(u, q, DEFAULT_ORDER + 2);
    b.truncate(u.mesh.n_free);
    b
}

/// ‖∇u‖_{L^p}, exact for piecewise-constant gradients.
pub fn gradient_lq_norm<T: Scalar>(u: &FeFunction<T>, p: T) -> T {
    let mesh = &u.mesh;
    let total: T = (0..mesh.n_elements())
        .map(|e| {
            let t = mesh.simplex(e);
            let g = u.gradient_in(e, &t);
            t.measure * (g[0] * g[0] + g[1] * g[1]).sqrt().powf(p)
        })
        .sum();
    total.powf(T::one() / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, interpolate, FeFunction};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn zero_function() {
        let mesh = Arc::new(build_mesh::<f64>(1, 3).unwrap());
        assert_eq!(lq_norm(&FeFunction::zeros(mesh), 4.0), 0.0);
    }

    #[test]
    fn single_linear_element() {
        // on [0, 1] with u = t, ∫ t⁴ = 1/5
        let t = Simplex::from_vertices(1, &[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let (v, _): (f64, _) = element_power(&t, &[0.0, 1.0], 4.0, &QuadratureRule::segment(6));
        assert_relative_eq!(v.powf(0.25), 0.2f64.powf(0.25), max_relative = 1e-14);
    }

    #[test]
    fn sign_change_split_is_exact() {
        // affine u = x on [−1, 1] as one element, q = 3: ∫|x|³ = 1/2
        let t = Simplex::from_vertices(1, &[[-1.0, 0.0], [1.0, 0.0]]).unwrap();
        let (v, _) = element_power(&t, &[-1.0, 1.0], 3.0, &QuadratureRule::segment(6));
        assert_relative_eq!(v, 0.5, max_relative = 1e-14);
        // unit triangle with u = x − y: ∫|x−y|³ = 1/20
        let tri = Simplex::from_vertices(2, &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let (v, _) = element_power(&tri, &[0.0, 1.0, -1.0], 3.0, &QuadratureRule::triangle(6));
        assert_relative_eq!(v, 1.0 / 20.0, max_relative = 1e-13);
        let (w, _) = element_power(&tri, &[0.3, 1.0, -0.6], 2.5, &QuadratureRule::triangle(6));
        let (w_hi, _) = element_power(&tri, &[0.3, 1.0, -0.6], 2.5, &QuadratureRule::triangle(24));
        assert_relative_eq!(w, w_hi, max_relative = 1e-5);
    }

    #[test]
    fn euler_identity_and_homogeneity() {
        for dim in [1, 2] {
            let mesh = Arc::new(build_mesh::<f64>(dim, 3).unwrap());
            let u = interpolate(&mesh, |x| (1.0 - x.iter().map(|v| v * v).sum::<f64>()) * (x[0] - 0.2)).unwrap();
            let q = 3.3;
            let (total, b) = power_integrals(&u, q, DEFAULT_ORDER + 2);
            let euler: f64 = b.iter().zip(&u.values).map(|(a, v)| a * v).sum();
            assert_relative_eq!(euler, total, max_relative = 1e-12);
            let b2 = nonlinear_residual(&u.scaled(2.0), q);
            let b1 = nonlinear_residual(&u, q);
            for (x, y) in b2.iter().zip(&b1) {
                assert_relative_eq!(*x, 2f64.powf(q - 1.0) * *y, max_relative = 1e-12, epsilon = 1e-300);
            }
        }
    }

    #[test]
    fn residual_is_directional_derivative() {
        let mesh = Arc::new(build_mesh::<f64>(1, 4).unwrap());
        let u = interpolate(&mesh, |x| 1.0 - x[0].abs().powf(1.5)).unwrap();
        let q = 4.0;
        let b = nonlinear_residual(&u, q);
        let base = power_integrals(&u, q, DEFAULT_ORDER + 2).0;
        for i in [0, 5, 17] {
            let t = 1e-6;
            let mut v = u.clone();
            v.values[i] += t;
            let fd = (power_integrals(&v, q, DEFAULT_ORDER + 2).0 - base) / t;
            assert_relative_eq!(fd, q * b[i], max_relative = 1e-5);
        }
    }

    #[test]
    fn audited_integral_on_sign_changing_functions() {
        let mesh = Arc::new(build_mesh::<f64>(2, 3).unwrap());
        let u = interpolate(&mesh, |x| (3.0 * x[0]).sin() * (1.0 - x[0] * x[0] - x[1] * x[1])).unwrap();
        let q = 2.0 * 2.0 / (2.0 - 2.0 * 0.3);
        let audited = lq_integral(&u, q);
        let reference = power_integrals(&u, q, 40).0;
        assert_relative_eq!(audited, reference, max_relative = 1e-8);
    }

    #[test]
    fn one_signed_functions_pass_the_audit_at_default_order() {
        let mesh = Arc::new(build_mesh::<f64>(1, 6).unwrap());
        let u = interpolate(&mesh, |x| (1.0 + x[0] * x[0] / 0.01).powf(-0.25) - (1.0f64 + 100.0).powf(-0.25)).unwrap();
        for q in [4.0, 2.5, 5.0] {
            let a = power_integrals(&u, q, DEFAULT_ORDER).0;
            let b = power_integrals(&u, q, 2 * DEFAULT_ORDER).0;
            assert!((a - b).abs() <= AUDIT_TOL * b, "q = {q}");
        }
    }
}
