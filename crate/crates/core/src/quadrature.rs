//! Gauss–Legendre rules, collapsed triangle rules and adaptive Gauss–Kronrod.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n > 0, "Gauss rule needs at least one point");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = from_usize::<T>(n);
    let half = lit::<T>(0.5);
    let tol = T::epsilon() * lit(4.0);
    for i in 0..n.div_ceil(2) {
        // Newton on P_n starting from the Tricomi estimate
        let mut x = (T::PI() * (from_usize::<T>(i + 1) - lit(0.25)) / (nf + half)).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x = x - dx;
            if dx.abs() <= tol {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = lit::<T>(2.0) / ((T::one() - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = half * (T::one() - x);
        nodes[n - 1 - i] = half * (T::one() + x);
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = from_usize::<T>(k);
        let p2 = ((lit::<T>(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = from_usize::<T>(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Quadrature rule on a reference simplex.
///
/// The reference segment is [0, 1]; the reference triangle has vertices
/// (0,0), (1,0), (0,1). Points are stored flat with stride `dim`.
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    pub dim: usize,
    pub points: Vec<T>,
    pub weights: Vec<T>,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
}

impl<T: Scalar> QuadratureRule<T> {
    pub fn segment(order: usize) -> Self {
        let (points, weights) = gauss_legendre(order);
        Self { dim: 1, points, weights, degree: 2 * order - 1 }
    }

    /// Collapsed (Duffy) tensor Gauss rule with `order` points per direction.
    pub fn triangle(order: usize) -> Self {
        let (x, w) = gauss_legendre::<T>(order);
        let mut points = Vec::with_capacity(2 * order * order);
        let mut weights = Vec::with_capacity(order * order);
        for (&u, &wu) in x.iter().zip(&w) {
            for (&v, &wv) in x.iter().zip(&w) {
                points.push(u);
                points.push(v * (T::one() - u));
                weights.push(wu * wv * (T::one() - u));
            }
        }
        Self { dim: 2, points, weights, degree: 2 * order - 2 }
    }

    pub fn for_dim(dim: usize, order: usize) -> Self {
        match dim {
            1 => Self::segment(order),
            2 => Self::triangle(order),
            _ => panic!("unsupported simplex dimension {dim}"),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, k: usize) -> &[T] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    /// Barycentric coordinates of point `k`, vertex 0 first.
    pub fn barycentric(&self, k: usize) -> [T; 3] {
        let p = self.point(k);
        match self.dim {
            1 => [T::one() - p[0], p[0], T::zero()],
            _ => [T::one() - p[0] - p[1], p[0], p[1]],
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<T: Scalar, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = lit::<T>(0.5);
    let center = half * (a + b);
    let hl = half * (b - a);
    let fc = f(center);
    let mut resk = fc * lit(WGK[7]);
    let mut resg = fc * lit(WG[3]);
    for j in 0..7 {
        let dx = hl * lit(XGK[j]);
        let fsum = f(center - dx) + f(center + dx);
        resk = resk + lit::<T>(WGK[j]) * fsum;
        if j % 2 == 1 {
            resg = resg + lit::<T>(WG[j / 2]) * fsum;
        }
    }
    (resk * hl, ((resk - resg) * hl).abs())
}

/// Adaptive 7/15-point Gauss–Kronrod integration of `f` over [a, b].
///
/// Bisects the worst interval until the summed error estimate falls below
/// `max(abs_tol, rel_tol·|I|)`; fails with the achieved estimate once
/// `max_intervals` is exhausted.
pub fn adaptive_gk<T, F>(mut f: F, a: T, b: T, abs_tol: T, rel_tol: T, max_intervals: usize) -> Result<Integral<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let (v, e) = kronrod15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let value: T = parts.iter().map(|p| p.2).sum();
        let error: T = parts.iter().map(|p| p.3).sum();
        if !value.is_finite() {
            return Err(Error::Quadrature { achieved: f64::NAN, what: "non-finite integrand" });
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Integral { value, error, intervals: parts.len() });
        }
        if parts.len() >= max_intervals {
            return Err(Error::Quadrature {
                achieved: error.to_f64().unwrap_or(f64::NAN),
                what: "adaptive Gauss–Kronrod interval budget exhausted",
            });
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = lit::<T>(0.5) * (lo + hi);
        let (v1, e1) = kronrod15(&mut f, lo, mid);
        let (v2, e2) = kronrod15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Adaptive integration over consecutive breakpoints `pts[0] < pts[1] < …`.
pub fn adaptive_gk_split<T, F>(mut f: F, pts: &[T], abs_tol: T, rel_tol: T, max_intervals: usize) -> Result<Integral<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let mut total = Integral { value: T::zero(), error: T::zero(), intervals: 0 };
    let pieces = from_usize::<T>(pts.len().saturating_sub(1).max(1));
    for w in pts.windows(2) {
        let part = adaptive_gk(&mut f, w[0], w[1], abs_tol / pieces, rel_tol, max_intervals)?;
        total.value = total.value + part.value;
        total.error = total.error + part.error;
        total.intervals += part.intervals;
    }
    Ok(total)
}
