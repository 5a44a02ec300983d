//! Problem parameters: critical exponent, rate exponent, the sharp constant
//! S_{N,s} and the balanced concentration scale.

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gk;
use crate::scalar::{from_usize, lit, Scalar};
use crate::special::gamma;

/// Admissible (N, s) pair together with its derived exponents and constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams<T> {
    pub dim: usize,
    pub s: T,
    /// Critical exponent 2N/(N−2s).
    pub two_star: T,
    /// Convergence-rate exponent 2(2−s)(N−2s)/(N+4(1−s)).
    pub alpha: T,
    /// Sharp Sobolev constant S_{N,s}.
    pub sobolev_constant: T,
}

impl<T: Scalar> ProblemParams<T> {
    /// Builds the parameter set for N ∈ {1, 2}; the constant is computed by quadrature.
    pub fn new(dim: usize, s: T) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidParams(format!("dimension {dim} not in {{1, 2}}")));
        }
        check_order(dim, s)?;
        Ok(Self {
            dim,
            s,
            two_star: critical_exponent(dim, s)?,
            alpha: rate_exponent(dim, s)?,
            sobolev_constant: exact_constant(dim, s)?,
        })
    }

    /// Exponent (N−2s)/2 of the bubble profile.
    pub fn profile_exponent(&self) -> T {
        (from_usize::<T>(self.dim) - lit::<T>(2.0) * self.s) * lit(0.5)
    }

    pub fn optimal_concentration(&self, h: T) -> Result<T> {
        optimal_concentration(h, self.dim, self.s)
    }
}

pub(crate) fn check_order<T: Scalar>(dim: usize, s: T) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidParams("dimension must be positive".into()));
    }
    let cap = T::one().min(from_usize::<T>(dim) * lit(0.5));
    if !(s > T::zero() && s < cap) {
        return Err(Error::InvalidParams(format!("need 0 < s < min(1, N/2) = {cap}, got s = {s}")));
    }
    Ok(())
}

/// α = 2(2−s)(N−2s)/(N+4(1−s)).
pub fn rate_exponent<T: Scalar>(dim: usize, s: T) -> Result<T> {
    check_order(dim, s)?;
    let n = from_usize::<T>(dim);
    let two = lit::<T>(2.0);
    Ok(two * (two - s) * (n - two * s) / (n + lit::<T>(4.0) * (T::one() - s)))
}

/// 2*_s = 2N/(N−2s).
pub fn critical_exponent<T: Scalar>(dim: usize, s: T) -> Result<T> {
    check_order(dim, s)?;
    let n = from_usize::<T>(dim);
    Ok(lit::<T>(2.0) * n / (n - lit::<T>(2.0) * s))
}

/// Balanced concentration c_h = h^{2(2−s)/(N+4(1−s))}.
pub fn optimal_concentration<T: Scalar>(h: T, dim: usize, s: T) -> Result<T> {
    check_order(dim, s)?;
    if !(h > T::zero() && h < T::one()) {
        return Err(Error::InvalidParams(format!("mesh size must lie in (0, 1), got {h}")));
    }
    Ok(h.powf(concentration_exponent(dim, s)))
}

/// Exponent 2(2−s)/(N+4(1−s)) of the balancing rule.
pub fn concentration_exponent<T: Scalar>(dim: usize, s: T) -> T {
    let n = from_usize::<T>(dim);
    let two = lit::<T>(2.0);
    two * (two - s) / (n + lit::<T>(4.0) * (T::one() - s))
}

/// Sharp constant S_{N,s} with the Fourier integral evaluated numerically.
pub fn exact_constant<T: Scalar>(dim: usize, s: T) -> Result<T> {
    check_order(dim, s)?;
    let fourier = match dim {
        1 => fourier_integral_1d(s)?,
        2 => fourier_integral_2d(s)?,
        _ => return Err(Error::InvalidParams(format!("exact constant implemented for N ≤ 2, got {dim}"))),
    };
    Ok(constant_from_fourier_integral(dim, s, fourier))
}

/// S_{N,s} = 2s(1−s)·I·2^{2s}π^s·Γ((N+2s)/2)/Γ((N−2s)/2)·(Γ(N/2)/Γ(N))^{2s/N}.
pub fn constant_from_fourier_integral<T: Scalar>(dim: usize, s: T, fourier: T) -> T {
    let n = from_usize::<T>(dim);
    let two = lit::<T>(2.0);
    let half = lit::<T>(0.5);
    let gamma_ratio = gamma((n + two * s) * half) / gamma((n - two * s) * half);
    let shape = (gamma(n * half) / gamma(n)).powf(two * s / n);
    two * s * (T::one() - s) * fourier * two.powf(two * s) * T::PI().powf(s) * gamma_ratio * shape
}

const TAIL_START_PERIODS: usize = 32;

/// I(1,s) = ∫_R (1−cos ζ)/|ζ|^{1+2s} dζ.
///
/// [0,1] by the power series of 1−cos; [1,Z] by adaptive quadrature per
/// half period; [Z,∞) by the asymptotic integration-by-parts series.
pub fn fourier_integral_1d<T: Scalar>(s: T) -> Result<T> {
    let two = lit::<T>(2.0);
    let beta = T::one() + two * s;
    // ∫_0^1 (1−cos ζ) ζ^{−1−2s} = Σ_{k≥1} (−1)^{k+1} / ((2k)! (2k−2s))
    let mut near = T::zero();
    let mut fact = T::one();
    for k in 1..30usize {
        let kk = from_usize::<T>(2 * k);
        fact = fact * (kk - T::one()) * kk;
        let term = T::one() / (fact * (kk - two * s));
        near = if k % 2 == 1 { near + term } else { near - term };
        if term < T::epsilon() * lit(1e-3) {
            break;
        }
    }
    let z = T::PI() * from_usize::<T>(2 * TAIL_START_PERIODS);
    let cos_mid = oscillatory_cos_integral(beta, T::one(), z)?;
    let (cos_tail, _) = oscillatory_tail(beta, z);
    // ∫_1^∞ (1−cos ζ)ζ^{−β} = 1/(2s) − ∫_1^∞ cos ζ ζ^{−β}
    let far = T::one() / (two * s) - cos_mid - cos_tail;
    Ok(two * (near + far))
}

fn oscillatory_cos_integral<T: Scalar>(beta: T, a: T, b: T) -> Result<T> {
    // split at multiples of π so each piece has one sign change at most
    let mut edges = vec![a];
    let mut k = 1usize;
    loop {
        let e = T::PI() * from_usize::<T>(k);
        if e >= b {
            break;
        }
        if e > a {
            edges.push(e);
        }
        k += 1;
    }
    edges.push(b);
    let mut total = T::zero();
    for w in edges.windows(2) {
        let part = adaptive_gk(|x: T| x.cos() * x.powf(-beta), w[0], w[1], lit(1e-16), lit(1e-14), 200)?;
        total = total + part.value;
    }
    Ok(total)
}

/// (∫_Z^∞ r^{−β} cos r dr, ∫_Z^∞ r^{−β} sin r dr) by the asymptotic series
/// ∫_Z^∞ f e^{ir} = i e^{iZ} Σ_k i^k f^{(k)}(Z).
pub(crate) fn oscillatory_tail<T: Scalar>(beta: T, z: T) -> (T, T) {
    // term_k = (−i)^k (β)_k Z^{−k}
    let mut re = T::zero();
    let mut im = T::zero();
    let mut mag = T::one();
    let mut prev = T::infinity();
    for k in 0..40usize {
        if k > 0 {
            mag = mag * (beta + from_usize::<T>(k - 1)) / z;
        }
        if mag > prev || mag < T::epsilon() * lit(1e-4) {
            break;
        }
        prev = mag;
        // (−i)^k cycles 1, −i, −1, i
        match k % 4 {
            0 => re = re + mag,
            1 => im = im - mag,
            2 => re = re - mag,
            _ => im = im + mag,
        }
    }
    // multiply by i e^{iZ} Z^{−β}
    let scale = z.powf(-beta);
    let (sz, cz) = z.sin_cos();
    // i(cz + i sz)(re + i im) = i[(cz re − sz im) + i(cz im + sz re)]
    let pr = cz * re - sz * im;
    let pi = cz * im + sz * re;
    (-pi * scale, pr * scale)
}

/// Azimuthal average (1/2π)∫ cos(r cos θ) dθ = J₀(r) by the periodic trapezoid rule.
pub(crate) fn azimuthal_average<T: Scalar>(r: T) -> T {
    let n = r.to_f64().unwrap_or(0.0).abs().ceil() as usize + 40;
    let nf = from_usize::<T>(n);
    let mut acc = T::zero();
    for k in 0..n {
        let theta = T::PI() * (from_usize::<T>(k) + lit(0.5)) / nf;
        acc = acc + (r * theta.cos()).cos();
    }
    acc / nf
}

const BESSEL_TAIL_START: f64 = 256.0;

/// I(2,s) = 2π∫_0^∞ (1−J₀(r)) r^{−1−2s} dr after polar reduction.
pub fn fourier_integral_2d<T: Scalar>(s: T) -> Result<T> {
    let two = lit::<T>(2.0);
    let beta = T::one() + two * s;
    // ∫_0^1: 1−J₀(r) = Σ_{k≥1} (−1)^{k+1} (r/2)^{2k}/(k!)²
    let mut near = T::zero();
    let mut coef = T::one();
    for k in 1..30usize {
        let kf = from_usize::<T>(k);
        coef = coef / (lit::<T>(4.0) * kf * kf);
        let term = coef / (two * kf - two * s);
        near = if k % 2 == 1 { near + term } else { near - term };
        if term < T::epsilon() * lit(1e-3) {
            break;
        }
    }
    let big_r = lit::<T>(BESSEL_TAIL_START);
    // ∫_1^R J₀(r) r^{−β}: split at unit steps, J₀ by trapezoid
    let mut mid = T::zero();
    let mut a = T::one();
    while a < big_r {
        let b = (a + lit(4.0)).min(big_r);
        let part = adaptive_gk(|r: T| azimuthal_average(r) * r.powf(-beta), a, b, lit(1e-17), lit(1e-14), 200)?;
        mid = mid + part.value;
        a = b;
    }
    // Hankel expansion J₀(r) ≈ √(2/(πr)) [P cos(r−π/4) − Q sin(r−π/4)],
    // P = 1 − 9/(128 r²), Q = −1/(8r) + 75/(1024 r³)
    let amp = (two / T::PI()).sqrt();
    let phase = T::FRAC_PI_4();
    let (sp, cp) = phase.sin_cos();
    let shifted = |b: T| -> (T, T) {
        // (∫ r^{−b} cos(r−π/4), ∫ r^{−b} sin(r−π/4))
        let (c, s_) = oscillatory_tail(b, big_r);
        (c * cp + s_ * sp, s_ * cp - c * sp)
    };
    let base = beta + lit(0.5);
    let (c0, _) = shifted(base);
    let (c2, _) = shifted(base + two);
    let (_, s1) = shifted(base + T::one());
    let (_, s3) = shifted(base + lit(3.0));
    let tail = amp
        * (c0 - lit::<T>(9.0 / 128.0) * c2 + lit::<T>(1.0 / 8.0) * s1 - lit::<T>(75.0 / 1024.0) * s3);
    let far = T::one() / (two * s) - mid - tail;
    Ok(two * T::PI() * (near + far))
}
