//! Extremal profiles Φ_{λ,c,X₀}(x) = λ(1+|x−X₀|²/c²)^{−(N−2s)/2} and the
//! truncated profile Ψ that vanishes on the unit sphere.

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gk_split;
use crate::scalar::{from_usize, lit, Scalar};

/// A point (λ, c, X₀) on the extremal manifold for fixed (N, s).
#[derive(Debug, Clone, PartialEq)]
pub struct Bubble<T> {
    pub lambda: T,
    pub c: T,
    pub center: Vec<T>,
    pub s: T,
}

impl<T: Scalar> Bubble<T> {
    pub fn new(lambda: T, c: T, center: Vec<T>, s: T) -> Result<Self> {
        if !(c > T::zero()) || lambda == T::zero() {
            return Err(Error::InvalidParams(format!("bubble needs c > 0 and λ ≠ 0 (got c = {c}, λ = {lambda})")));
        }
        if center.is_empty() {
            return Err(Error::InvalidParams("bubble center must have at least one coordinate".into()));
        }
        Ok(Self { lambda, c, center, s })
    }

    /// Centered bubble in dimension `dim`.
    pub fn centered(lambda: T, c: T, dim: usize, s: T) -> Result<Self> {
        Self::new(lambda, c, vec![T::zero(); dim], s)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// N − 2s.
    pub fn decay(&self) -> T {
        from_usize::<T>(self.dim()) - lit::<T>(2.0) * self.s
    }

    fn rho_sq(&self, x: &[T]) -> T {
        let r2: T = x.iter().zip(&self.center).map(|(&a, &b)| (a - b) * (a - b)).sum();
        r2 / (self.c * self.c)
    }

    /// Profile value at distance `r` from the center.
    pub fn radial(&self, r: T) -> T {
        let rho2 = r * r / (self.c * self.c);
        self.lambda * (T::one() + rho2).powf(-self.decay() * lit(0.5))
    }

    pub fn evaluate(&self, x: &[T]) -> T {
        self.lambda * (T::one() + self.rho_sq(x)).powf(-self.decay() * lit(0.5))
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        let d = self.decay();
        let c2 = self.c * self.c;
        let f = -self.lambda * d / c2 * (T::one() + self.rho_sq(x)).powf(-(d + lit(2.0)) * lit(0.5));
        x.iter().zip(&self.center).map(|(&a, &b)| f * (a - b)).collect()
    }

    /// Full Hessian, row-major N×N.
    ///
    /// Written as λ[(u′/r)δ_ij + ((u″ − u′/r)/r²) z_i z_j], where both
    /// coefficients are smooth at z = 0; the limit there is −λ(N−2s)/c²·I.
    pub fn hessian(&self, x: &[T]) -> Vec<T> {
        let n = self.dim();
        let d = self.decay();
        let c2 = self.c * self.c;
        let base = T::one() + self.rho_sq(x);
        let diag = -d / c2 * base.powf(-(d + lit(2.0)) * lit(0.5));
        let outer = d * (d + lit(2.0)) / (c2 * c2) * base.powf(-(d + lit(4.0)) * lit(0.5));
        let z: Vec<T> = x.iter().zip(&self.center).map(|(&a, &b)| a - b).collect();
        let mut h = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let delta = if i == j { diag } else { T::zero() };
                h[i * n + j] = self.lambda * (delta + outer * (z[i] * z[j]));
            }
        }
        h
    }

    /// Closed-form Frobenius norm |D²Φ(x)|.
    pub fn hessian_norm(&self, x: &[T]) -> T {
        let d = self.decay();
        let n = from_usize::<T>(self.dim());
        let rho2 = self.rho_sq(x);
        let a = T::one() - (d + T::one()) * rho2;
        let b = T::one() + rho2;
        self.lambda.abs() * d / (self.c * self.c)
            * b.powf(-(d + lit(4.0)) * lit(0.5))
            * (a * a + (n - T::one()) * b * b).sqrt()
    }

    /// Envelope (|λ|/c²)(1+|x−X₀|²/c²)^{−(N−2s+2)/2} bounding the Hessian.
    pub fn hessian_envelope(&self, x: &[T]) -> T {
        let d = self.decay();
        self.lambda.abs() / (self.c * self.c) * (T::one() + self.rho_sq(x)).powf(-(d + lit(2.0)) * lit(0.5))
    }

    /// Second radial derivative u″(r) of the profile (times λ).
    pub fn radial_second_derivative(&self, r: T) -> T {
        let d = self.decay();
        let c2 = self.c * self.c;
        let rho2 = r * r / c2;
        -self.lambda * d / c2 * (T::one() + rho2).powf(-(d + lit(4.0)) * lit(0.5)) * (T::one() - (d + T::one()) * rho2)
    }
}

/// Ψ_{λ,c,0} = Φ_{λ,c,0} − λ(1+1/c²)^{−(N−2s)/2}, zero on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedBubble<T> {
    pub base: Bubble<T>,
    pub offset: T,
}

pub fn truncated_bubble<T: Scalar>(lambda: T, c: T, dim: usize, s: T) -> Result<TruncatedBubble<T>> {
    let base = Bubble::centered(lambda, c, dim, s)?;
    let offset = base.radial(T::one());
    Ok(TruncatedBubble { base, offset })
}

impl<T: Scalar> TruncatedBubble<T> {
    pub fn evaluate(&self, x: &[T]) -> T {
        self.base.evaluate(x) - self.offset
    }

    pub fn radial(&self, r: T) -> T {
        self.base.radial(r) - self.offset
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        self.base.gradient(x)
    }

    pub fn hessian(&self, x: &[T]) -> Vec<T> {
        self.base.hessian(x)
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn scaled(&self, factor: T) -> Self {
        let mut base = self.base.clone();
        base.lambda = base.lambda * factor;
        Self { base, offset: self.offset * factor }
    }
}

/// Integration region for [`bubble_lq_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    UnitBall,
    AllSpace,
}

/// Radially symmetric profile about its own center.
pub trait RadialProfile<T: Scalar> {
    fn radial_value(&self, r: T) -> T;
    fn dim(&self) -> usize;
    fn scale(&self) -> T;
    fn centered_at_origin(&self) -> bool;
    fn decay(&self) -> T;
}

impl<T: Scalar> RadialProfile<T> for Bubble<T> {
    fn radial_value(&self, r: T) -> T {
        self.radial(r)
    }
    fn dim(&self) -> usize {
        Bubble::dim(self)
    }
    fn scale(&self) -> T {
        self.c
    }
    fn centered_at_origin(&self) -> bool {
        self.center.iter().all(|&x| x == T::zero())
    }
    fn decay(&self) -> T {
        Bubble::decay(self)
    }
}

impl<T: Scalar> RadialProfile<T> for TruncatedBubble<T> {
    fn radial_value(&self, r: T) -> T {
        self.radial(r)
    }
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn scale(&self) -> T {
        self.base.c
    }
    fn centered_at_origin(&self) -> bool {
        true
    }
    fn decay(&self) -> T {
        self.base.decay()
    }
}

/// Surface measure of the unit sphere S^{N−1} for N ∈ {1, 2, 3}.
pub fn sphere_measure<T: Scalar>(dim: usize) -> T {
    match dim {
        1 => lit(2.0),
        2 => lit::<T>(2.0) * T::PI(),
        3 => lit::<T>(4.0) * T::PI(),
        _ => panic!("sphere measure for N = {dim} not needed"),
    }
}

/// ∫ over the region of |f|^q, by radial reduction.
pub fn radial_power_integral<T: Scalar, P: RadialProfile<T>>(f: &P, q: T, region: Region, rel_tol: T) -> Result<T> {
    let dim = f.dim();
    let nm1 = from_usize::<T>(dim - 1);
    let c = f.scale();
    let integrand = |r: T| {
        let v = f.radial_value(r).abs();
        if v == T::zero() {
            T::zero()
        } else {
            r.powf(nm1) * v.powf(q)
        }
    };
    let abs_tol = T::min_positive_value();
    let measure = sphere_measure::<T>(dim);
    match region {
        Region::UnitBall => {
            if !f.centered_at_origin() {
                return Err(Error::InvalidParams("ball norms need a profile centered at the origin".into()));
            }
            let mut pts = vec![T::zero()];
            for k in [lit::<T>(0.25), lit(1.0), lit(4.0)] {
                let p = k * c;
                if p < T::one() {
                    pts.push(p);
                }
            }
            pts.push(T::one());
            Ok(measure * adaptive_gk_split(integrand, &pts, abs_tol, rel_tol, 400)?.value)
        }
        Region::AllSpace => {
            if !(q * f.decay() > from_usize::<T>(dim)) {
                return Err(Error::InvalidParams(format!("|Φ|^q not integrable over R^{dim} for q = {q}")));
            }
            let inner = adaptive_gk_split(integrand, &[T::zero(), c * lit(0.25), c], abs_tol, rel_tol, 400)?.value;
            // r = c/t on [c, ∞)
            let outer = adaptive_gk_split(
                |t: T| {
                    if t == T::zero() {
                        T::zero()
                    } else {
                        integrand(c / t) * c / (t * t)
                    }
                },
                &[T::zero(), lit(0.25), T::one()],
                abs_tol,
                rel_tol,
                400,
            )?
            .value;
            Ok(measure * (inner + outer))
        }
    }
}

/// L^q norm of a bubble or truncated bubble over the unit ball or all of R^N.
pub fn bubble_lq_norm<T: Scalar, P: RadialProfile<T>>(f: &P, q: T, region: Region) -> Result<T> {
    if q < T::one() {
        return Err(Error::InvalidParams(format!("L^q norm needs q ≥ 1, got {q}")));
    }
    Ok(radial_power_integral(f, q, region, lit(1e-13))?.powf(T::one() / q))
}

/// λ_c with ‖Ψ_{λ_c,c,0}‖_{L^{2*_s}(B)} = 1, using Ψ_{λ,c,0} = λΨ_{1,c,0}.
pub fn normalize_lambda<T: Scalar>(c: T, dim: usize, s: T) -> Result<T> {
    let q = crate::params::critical_exponent(dim, s)?;
    let unit = truncated_bubble(T::one(), c, dim, s)?;
    let norm = bubble_lq_norm(&unit, q, Region::UnitBall)?;
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::Quadrature { achieved: f64::NAN, what: "degenerate truncated-bubble norm" });
    }
    Ok(T::one() / norm)
}

/// The normalized truncated bubble Ψ_{λ_c,c,0}.
pub fn normalized_truncated_bubble<T: Scalar>(c: T, dim: usize, s: T) -> Result<TruncatedBubble<T>> {
    let lambda = normalize_lambda(c, dim, s)?;
    truncated_bubble(lambda, c, dim, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn evaluation_at_center_and_unit_distance() {
        let b = Bubble::centered(1.0_f64, 1.0, 1, 0.25).unwrap();
        assert_eq!(b.evaluate(&[0.0]), 1.0);
        assert_relative_eq!(b.evaluate(&[1.0]), 2f64.powf(-0.25), epsilon = 1e-15);
        let b = Bubble::new(-2.5_f64, 0.3, vec![0.1, -0.2], 0.5).unwrap();
        assert_eq!(b.evaluate(&[0.1, -0.2]), -2.5);
    }

    #[test]
    fn invalid_bubbles_rejected() {
        assert!(Bubble::centered(0.0_f64, 1.0, 1, 0.25).is_err());
        assert!(Bubble::centered(1.0_f64, 0.0, 1, 0.25).is_err());
    }

    #[test]
    fn gradient_values() {
        let b = Bubble::centered(1.0_f64, 1.0, 1, 0.25).unwrap();
        assert_eq!(b.gradient(&[0.0]), vec![0.0]);
        let g = b.gradient(&[1.0]);
        assert_relative_eq!(g[0].abs(), 0.5 * 2f64.powf(-1.25), epsilon = 1e-15);
        assert!(g[0] < 0.0);
    }

    #[test]
    fn hessian_at_center_is_scaled_identity() {
        let b = Bubble::new(1.7_f64, 0.4, vec![0.2, 0.1], 0.3).unwrap();
        let h = b.hessian(&[0.2, 0.1]);
        let d = 2.0 - 0.6;
        assert_relative_eq!(h[0], -1.7 * d / 0.16, max_relative = 1e-14);
        assert_eq!(h[1], 0.0);
        let frob = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert_relative_eq!(frob, 1.7 * d / 0.16 * 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(b.hessian_norm(&[0.2, 0.1]), frob, max_relative = 1e-14);
    }

    #[test]
    fn second_derivative_changes_sign_at_inflection() {
        let s = 0.25_f64;
        let b = Bubble::centered(1.0, 1.0, 1, s).unwrap();
        let r0 = 1.0 / (1.0 - 2.0 * s + 1.0_f64).sqrt();
        assert!(b.radial_second_derivative(r0 * (1.0 - 1e-6)) < 0.0);
        assert!(b.radial_second_derivative(r0 * (1.0 + 1e-6)) > 0.0);
        assert!(b.radial_second_derivative(r0).abs() < 1e-14);
    }

    #[test]
    fn truncated_bubble_vanishes_on_sphere() {
        let t = truncated_bubble(2.0_f64, 0.1, 2, 0.5).unwrap();
        assert!(t.evaluate(&[1.0, 0.0]).abs() < 1e-15);
        assert!(t.evaluate(&[0.6, 0.8]).abs() < 1e-15);
        let t1 = truncated_bubble(1.0_f64, 0.1, 1, 0.25).unwrap();
        let want0 = 1.0 - (1.0 + 100.0_f64).powf(-0.25);
        assert_relative_eq!(t1.evaluate(&[0.0]), want0, epsilon = 1e-15);
        let want = (1.0 + 25.0_f64).powf(-0.25) - 101f64.powf(-0.25);
        assert_relative_eq!(t1.evaluate(&[0.5]), want, epsilon = 1e-15);
        assert_relative_eq!(t1.evaluate(&[0.5]), t1.base.evaluate(&[0.5]) - t1.offset, epsilon = 0.0);
    }

    #[test]
    fn truncated_between_zero_and_bubble() {
        let t = truncated_bubble(1.3_f64, 0.2, 1, 0.3).unwrap();
        for k in 0..=100 {
            let x = [k as f64 / 100.0];
            let v = t.evaluate(&x);
            assert!(v >= -1e-15 && v <= t.base.evaluate(&x));
        }
    }

    #[test]
    fn l4_norm_of_unit_bubble_on_line() {
        // s = 1/4: |Φ|^4 = (1+x²)^{-1}, integral π
        let b = Bubble::centered(1.0_f64, 1.0, 1, 0.25).unwrap();
        let n = bubble_lq_norm(&b, 4.0, Region::AllSpace).unwrap();
        assert_relative_eq!(n, std::f64::consts::PI.powf(0.25), max_relative = 1e-12);
    }

    #[test]
    fn non_integrable_rejected() {
        let b = Bubble::centered(1.0_f64, 1.0, 1, 0.25).unwrap();
        assert!(bubble_lq_norm(&b, 2.0, Region::AllSpace).is_err());
        assert!(bubble_lq_norm(&b, 0.5, Region::UnitBall).is_err());
    }

    #[test]
    fn critical_norm_scaling() {
        // ‖Φ_{λ,c}‖^{2*}_{2*} = |λ|^{2*} c^N ‖Φ_{1,1}‖^{2*}_{2*}
        for &(dim, s) in &[(1usize, 0.25_f64), (2, 0.5)] {
            let q = crate::params::critical_exponent(dim, s).unwrap();
            let unit = radial_power_integral(&Bubble::centered(1.0, 1.0, dim, s).unwrap(), q, Region::AllSpace, 1e-13)
                .unwrap();
            for &c in &[0.4, 0.2, 0.1] {
                let b = Bubble::new(1.7, c, vec![0.3; dim], s).unwrap();
                let v = radial_power_integral(&b, q, Region::AllSpace, 1e-13).unwrap();
                let ratio = v / (1.7_f64.powf(q) * c.powi(dim as i32));
                assert_relative_eq!(ratio, unit, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn normalized_lambda_gives_unit_norm() {
        let lam = normalize_lambda(0.1_f64, 1, 0.25).unwrap();
        let t = truncated_bubble(lam, 0.1, 1, 0.25).unwrap();
        let n = bubble_lq_norm(&t, 4.0, Region::UnitBall).unwrap();
        assert_relative_eq!(n, 1.0, max_relative = 1e-10);
    }
}
