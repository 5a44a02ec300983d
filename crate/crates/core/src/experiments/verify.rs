//! Numerical audits of the auxiliary estimates: interpolation error rates,
//! the Hessian covering, the truncated-bubble minimizing sequence and three
//! functional inequalities.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::records::{fit_rate, RateFit};
use crate::bubble::{normalized_truncated_bubble, truncated_bubble, Bubble, TruncatedBubble};
use crate::error::{Error, Result};
use crate::gagliardo::{assemble, element_self_energy, QuadSpec};
use crate::mesh::{build_mesh, interpolate, BallMesh, FeFunction, Simplex};
use crate::norms::{gradient_lq_norm, lq_norm};
use crate::params::{check_order, ProblemParams};
use crate::quadrature::{gauss_legendre, QuadratureRule};
use crate::solver::quotient;

/// Relative change tolerated when the sample set is doubled.
pub const DOUBLING_TOL: f64 = 0.2;

const ERROR_ORDER: usize = 8;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn relative_change(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs()
}

// ---------------------------------------------------------------- interpolation

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpRecord {
    pub level: usize,
    pub h: f64,
    pub c: f64,
    pub lq_error: f64,
    pub grad_error: f64,
}

#[derive(Debug, Clone)]
pub struct InterpReport {
    pub q: f64,
    pub records: Vec<InterpRecord>,
    pub lq_fit: RateFit,
    pub grad_fit: RateFit,
}

#[derive(Debug, Clone)]
pub struct ConcentrationReport {
    pub q: f64,
    pub records: Vec<InterpRecord>,
    /// Slope of log error against log c at fixed h.
    pub fit: RateFit,
    pub expected_slope: f64,
}

/// ‖Ψ − I_hΨ‖_{L^q(B_h)} and ‖∇(Ψ − I_hΨ)‖_{L^q(B_h)} by per-element Gauss
/// quadrature against the closed form.
pub fn interpolation_errors(mesh: &Arc<BallMesh<f64>>, psi: &TruncatedBubble<f64>, q: f64) -> Result<(f64, f64)> {
    let u = interpolate(mesh, |x| psi.evaluate(x))?;
    let rule = QuadratureRule::<f64>::for_dim(mesh.dim, ERROR_ORDER);
    let ref_measure: f64 = rule.weights.iter().sum();
    let (mut lq, mut grad) = (0.0, 0.0);
    for e in 0..mesh.n_elements() {
        let t = mesh.simplex(e);
        let g = u.gradient_in(e, &t);
        let scale = t.measure / ref_measure;
        for k in 0..rule.len() {
            let x = t.map(&rule.barycentric(k));
            let xs = &x[..mesh.dim];
            let diff = psi.evaluate(xs) - u.eval_in(e, &t, &x);
            let dg = psi.gradient(xs);
            let gd: f64 = dg.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            lq += rule.weights[k] * scale * diff.abs().powf(q);
            grad += rule.weights[k] * scale * gd.powf(q);
        }
    }
    Ok((lq.powf(1.0 / q), grad.powf(1.0 / q)))
}

fn check_q(q: f64) -> Result<()> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidParams(format!("need 1 ≤ q < ∞, got {q}")));
    }
    Ok(())
}

/// h-rates of the interpolation error at fixed concentration `c`
/// (expected 2 for L^q and 1 for the gradient).
pub fn verify_interp_error(dim: usize, s: f64, q: f64, c: f64, levels: &[usize]) -> Result<InterpReport> {
    check_order(dim, s)?;
    check_q(q)?;
    let psi = normalized_truncated_bubble(c, dim, s)?;
    let mut records = Vec::new();
    for &level in levels {
        let mesh = Arc::new(build_mesh(dim, level)?);
        if mesh.h > c {
            return Err(Error::InvalidParams(format!("level {level} has h = {} > c = {c}", mesh.h)));
        }
        let (lq_error, grad_error) = interpolation_errors(&mesh, &psi, q)?;
        records.push(InterpRecord { level, h: mesh.h, c, lq_error, grad_error });
    }
    let lq_fit = fit_rate(&records.iter().map(|r| (r.h, r.lq_error)).collect::<Vec<_>>())?;
    let grad_fit = fit_rate(&records.iter().map(|r| (r.h, r.grad_error)).collect::<Vec<_>>())?;
    Ok(InterpReport { q, records, lq_fit, grad_fit })
}

/// The c-exponent of ‖Ψ_{λ_c,c} − I_hΨ_{λ_c,c}‖_{L^q} at fixed h:
/// −(N/2 − N/q + 2 − s).
pub fn interp_concentration_exponent(dim: usize, s: f64, q: f64) -> f64 {
    let n = dim as f64;
    -(n / 2.0 - n / q + 2.0 - s)
}

/// c-rate of the L^q interpolation error on one fine mesh.
pub fn verify_interp_concentration(dim: usize, s: f64, q: f64, level: usize, cs: &[f64]) -> Result<ConcentrationReport> {
    check_order(dim, s)?;
    check_q(q)?;
    let mesh = Arc::new(build_mesh(dim, level)?);
    let mut records = Vec::new();
    for &c in cs {
        if mesh.h > c / 4.0 {
            return Err(Error::InvalidParams(format!("c = {c} is under-resolved by h = {}", mesh.h)));
        }
        let psi = normalized_truncated_bubble(c, dim, s)?;
        let (lq_error, grad_error) = interpolation_errors(&mesh, &psi, q)?;
        records.push(InterpRecord { level, h: mesh.h, c, lq_error, grad_error });
    }
    let fit = fit_rate(&records.iter().map(|r| (r.c, r.lq_error)).collect::<Vec<_>>())?;
    Ok(ConcentrationReport { q, records, fit, expected_slope: interp_concentration_exponent(dim, s, q) })
}

// --------------------------------------------------------------------- covering

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub dim: usize,
    pub s: f64,
    pub seed: u64,
    pub samples: usize,
    /// Minimum over the first `samples` draws.
    pub min_ratio: f64,
    /// Minimum over `2·samples` draws (the first half is shared).
    pub min_ratio_doubled: f64,
    /// 1D draws rejected because |x − X₀|/c fell in (1/2, 1).
    pub excluded: usize,
}

impl CoveringReport {
    pub fn relative_change(&self) -> f64 {
        relative_change(self.min_ratio, self.min_ratio_doubled)
    }

    pub fn is_stable(&self) -> bool {
        self.min_ratio > 0.0 && self.relative_change() < DOUBLING_TOL
    }
}

/// Coordinate axes, the radial direction and, in 2D, 16 directions kπ/16.
fn dictionary(dim: usize, z: &[f64]) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r > 0.0 {
        dirs.push(z.iter().map(|v| v / r).collect());
    }
    if dim == 2 {
        for k in 0..16 {
            let th = k as f64 * std::f64::consts::PI / 16.0;
            dirs.push(vec![th.cos(), th.sin()]);
        }
    }
    dirs
}

/// max_ξ |ξᵀD²Φ(x)ξ| over the dictionary, divided by (|λ|/c²)(1+|x−X₀|²/c²)^{−(N−2s+2)/2}.
pub fn covering_ratio(b: &Bubble<f64>, x: &[f64]) -> f64 {
    let n = b.dim();
    let hess = b.hessian(x);
    let z: Vec<f64> = x.iter().zip(&b.center).map(|(a, c)| a - c).collect();
    let rho2 = z.iter().map(|v| v * v).sum::<f64>() / (b.c * b.c);
    let envelope = b.lambda.abs() / (b.c * b.c) * (1.0 + rho2).powf(-(b.decay() + 2.0) / 2.0);
    dictionary(n, &z)
        .iter()
        .map(|xi| {
            let mut v = 0.0;
            for i in 0..n {
                for j in 0..n {
                    v += xi[i] * hess[i * n + j] * xi[j];
                }
            }
            v.abs()
        })
        .fold(0.0, f64::max)
        / envelope
}

/// Minimum dictionary ratio over random (λ, c, X₀, x), at `samples` and
/// `2·samples` draws. In 1D draws with |x − X₀|/c ∈ (1/2, 1) are redrawn,
/// since the lone second derivative vanishes inside that band.
pub fn verify_covering(dim: usize, s: f64, samples: usize, seed: u64) -> Result<CoveringReport> {
    check_order(dim, s)?;
    if samples == 0 {
        return Err(Error::InvalidParams("covering needs at least one sample".into()));
    }
    let mut rng = rng(seed);
    let mut excluded = 0;
    let mut mins = [f64::INFINITY; 2];
    for k in 0..2 * samples {
        let ratio = loop {
            let lambda = if rng.gen_bool(0.5) { 1.0 } else { -1.0 } * 10f64.powf(rng.gen_range(-2.0..2.0));
            let c = 10f64.powf(rng.gen_range(-2.0..0.0));
            let center: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let rho = 10f64.powf(rng.gen_range(-3.0..3.0));
            let dir: Vec<f64> = if dim == 1 {
                vec![if rng.gen_bool(0.5) { 1.0 } else { -1.0 }]
            } else {
                let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                vec![th.cos(), th.sin()]
            };
            if dim == 1 && rho > 0.5 && rho < 1.0 {
                excluded += 1;
                continue;
            }
            let x: Vec<f64> = center.iter().zip(&dir).map(|(x0, d)| x0 + rho * c * d).collect();
            break covering_ratio(&Bubble::new(lambda, c, center, s)?, &x);
        };
        if k < samples {
            mins[0] = mins[0].min(ratio);
        }
        mins[1] = mins[1].min(ratio);
    }
    Ok(CoveringReport { dim, s, seed, samples, min_ratio: mins[0], min_ratio_doubled: mins[1], excluded })
}

// ------------------------------------------------------------ minimizing sequence

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinSeqRecord {
    pub eps: f64,
    pub h: f64,
    pub quotient: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct MinSeqReport {
    pub records: Vec<MinSeqRecord>,
    /// gap(ε_k)/gap(ε_{k+1}).
    pub ratios: Vec<f64>,
    /// 2^{N−2s} per halving of ε.
    pub expected_ratio: f64,
}

/// Quotient gaps of u_ε = (1+|x|²/ε²)^{−(N−2s)/2} − (1+1/ε²)^{−(N−2s)/2} on a
/// fixed fine mesh at `level`, which must satisfy h ≤ ε/4 for every ε.
pub fn verify_minimizing_sequence(dim: usize, s: f64, eps: &[f64], level: usize) -> Result<MinSeqReport> {
    let params = ProblemParams::new(dim, s)?;
    if eps.is_empty() || eps.windows(2).any(|w| w[1] >= w[0]) || eps.iter().any(|&e| !(e > 0.0 && e < 1.0 / 3.0)) {
        return Err(Error::InvalidParams(format!("ε must be strictly decreasing in (0, 1/3), got {eps:?}")));
    }
    let mesh = Arc::new(build_mesh(dim, level)?);
    let smallest = eps[eps.len() - 1];
    if mesh.h > smallest / 4.0 {
        return Err(Error::InvalidParams(format!("proxy mesh too coarse: h = {} > ε/4 = {}", mesh.h, smallest / 4.0)));
    }
    let form = assemble(&mesh, s, &QuadSpec::for_dim(dim))?;
    let mut records = Vec::new();
    for &e in eps {
        let psi = truncated_bubble(1.0, e, dim, s)?;
        let u = interpolate(&mesh, |x| psi.evaluate(x))?;
        let qv = quotient(&form, &u)?;
        records.push(MinSeqRecord { eps: e, h: mesh.h, quotient: qv, gap: qv - params.sobolev_constant });
    }
    let ratios = records.windows(2).map(|w| w[0].gap / w[1].gap).collect();
    Ok(MinSeqReport { records, ratios, expected_ratio: 2f64.powf(dim as f64 - 2.0 * s) })
}

// ------------------------------------------------------------ functional inequalities

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareCheck {
    pub functions: usize,
    pub elements_checked: usize,
    /// max over elements of LHS/(constant·RHS); the inequality holds iff ≤ 1.
    pub max_ratio: f64,
    pub violations: usize,
}

/// Max of a fitted ratio over n and 2n samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedConstant {
    pub samples: usize,
    pub max_ratio: f64,
    pub max_ratio_doubled: f64,
}

impl FittedConstant {
    fn from_ratios(ratios: &[f64]) -> Self {
        let n = ratios.len() / 2;
        let max = |r: &[f64]| r.iter().copied().fold(0.0, f64::max);
        Self { samples: n, max_ratio: max(&ratios[..n]), max_ratio_doubled: max(ratios) }
    }

    pub fn relative_change(&self) -> f64 {
        relative_change(self.max_ratio, self.max_ratio_doubled)
    }

    pub fn is_stable(&self) -> bool {
        self.max_ratio.is_finite() && self.max_ratio > 0.0 && self.relative_change() < DOUBLING_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubeConstant {
    pub side: f64,
    pub constant: FittedConstant,
}

#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub dim: usize,
    pub s: f64,
    pub seed: u64,
    pub poincare: PoincareCheck,
    pub gagliardo_nirenberg: FittedConstant,
    pub cube: Vec<CubeConstant>,
}

impl InequalityReport {
    /// max/min of the doubled cube constants across side lengths.
    pub fn cube_spread(&self) -> f64 {
        let v: Vec<f64> = self.cube.iter().map(|c| c.constant.max_ratio_doubled).collect();
        v.iter().copied().fold(0.0, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Random element of V_h: a few random bubbles plus nodal noise of random weight.
fn random_fe_function(mesh: &Arc<BallMesh<f64>>, s: f64, rng: &mut ChaCha8Rng) -> Result<FeFunction<f64>> {
    let dim = mesh.dim;
    let bumps: Vec<Bubble<f64>> = (0..rng.gen_range(1..4))
        .map(|_| {
            let lambda = rng.gen_range(-1.0..1.0);
            let c = 10f64.powf(rng.gen_range(-1.5..0.0));
            let center = (0..dim).map(|_| rng.gen_range(-0.7..0.7)).collect();
            Bubble::new(if lambda == 0.0 { 1.0 } else { lambda }, c, center, s)
        })
        .collect::<Result<_>>()?;
    let noise = rng.gen_range(0.0..1.0f64).powi(2);
    let smooth = interpolate(mesh, |x| bumps.iter().map(|b| b.evaluate(x)).sum())?;
    let free: Vec<f64> = smooth.free_values().iter().map(|&v| v + noise * rng.gen_range(-1.0..1.0)).collect();
    let u = FeFunction::from_free(mesh.clone(), &free);
    if u.is_zero() {
        return Err(Error::ZeroFunction);
    }
    Ok(u)
}

/// ∫_T |u − ū_T|² for u affine on T with gradient g.
fn element_variance(t: &Simplex<f64>, g: [f64; 2]) -> f64 {
    let rule = QuadratureRule::<f64>::for_dim(t.dim, 2);
    let ref_measure: f64 = rule.weights.iter().sum();
    let m = t.centroid();
    (0..rule.len())
        .map(|k| {
            let x = t.map(&rule.barycentric(k));
            let v = g[0] * (x[0] - m[0]) + g[1] * (x[1] - m[1]);
            rule.weights[k] * v * v
        })
        .sum::<f64>()
        * t.measure
        / ref_measure
}

fn poincare_check(mesh: &Arc<BallMesh<f64>>, s: f64, funcs: &[FeFunction<f64>]) -> PoincareCheck {
    let n = mesh.dim as f64;
    let mut out = PoincareCheck { functions: funcs.len(), elements_checked: 0, max_ratio: 0.0, violations: 0 };
    for u in funcs {
        for e in 0..mesh.n_elements() {
            let t = mesh.simplex(e);
            let g = u.gradient_in(e, &t);
            if g == [0.0, 0.0] {
                continue;
            }
            let lhs = element_variance(&t, g);
            let constant = t.diameter.powf(n + 2.0 * s) / t.measure;
            let ratio = lhs / (constant * element_self_energy(&t, s, g));
            out.elements_checked += 1;
            out.max_ratio = out.max_ratio.max(ratio);
            if !(ratio <= 1.0) {
                out.violations += 1;
            }
        }
    }
    out
}

/// ‖u‖_{L²(Q)}, ‖Du‖_{L²(Q)}, ‖D²u‖_{L²(Q)} on Q = [−l/2, l/2]^N by composite Gauss.
fn cube_norms(b: &Bubble<f64>, side: f64) -> (f64, f64, f64) {
    const CELLS: usize = 16;
    let (x, w) = gauss_legendre::<f64>(6);
    let cell = side / CELLS as f64;
    let line: Vec<(f64, f64)> = (0..CELLS)
        .flat_map(|k| {
            let a = -side / 2.0 + k as f64 * cell;
            x.iter().zip(&w).map(move |(&u, &wu)| (a + cell * u, cell * wu)).collect::<Vec<_>>()
        })
        .collect();
    let mut acc = [0.0; 3];
    let mut add = |p: &[f64], wt: f64| {
        let v = b.evaluate(p);
        let g: f64 = b.gradient(p).iter().map(|v| v * v).sum();
        let hs = b.hessian_norm(p);
        acc[0] += wt * v * v;
        acc[1] += wt * g;
        acc[2] += wt * hs * hs;
    };
    if b.dim() == 1 {
        line.iter().for_each(|&(p, wp)| add(&[p], wp));
    } else {
        for &(p, wp) in &line {
            for &(r, wr) in &line {
                add(&[p, r], wp * wr);
            }
        }
    }
    (acc[0].sqrt(), acc[1].sqrt(), acc[2].sqrt())
}

/// Checks three inequalities on random samples drawn from `seed`.
///
/// Poincaré: ∫_T |u − ū_T|² ≤ diam(T)^{N+2s}/|T| ∬_{T×T} |u(x)−u(y)|²/|x−y|^{N+2s}
/// on every element, for `poincare_functions` random elements of V_h.
/// Gagliardo–Nirenberg: sup of [u]_{B_h}/(‖u‖^{1−s}‖∇u‖^s) over `samples` and
/// `2·samples` random elements of V_h. Cube estimate: sup of
/// ‖Du‖/(‖u‖/l + ‖u‖^{1/2}‖D²u‖^{1/2}) on [−l/2, l/2]^N for random bubbles, per l.
pub fn verify_functional_inequalities(
    dim: usize,
    s: f64,
    level: usize,
    poincare_functions: usize,
    samples: usize,
    seed: u64,
) -> Result<InequalityReport> {
    check_order(dim, s)?;
    if samples == 0 || poincare_functions == 0 {
        return Err(Error::InvalidParams("need at least one sample function".into()));
    }
    let mut rng = rng(seed);
    let mesh = Arc::new(build_mesh(dim, level)?);

    let funcs: Vec<FeFunction<f64>> = (0..poincare_functions).map(|_| random_fe_function(&mesh, s, &mut rng)).collect::<Result<_>>()?;
    let poincare = poincare_check(&mesh, s, &funcs);

    let form = assemble(&mesh, s, &QuadSpec::for_dim(dim))?;
    let scale = s * (1.0 - s);
    let gn_ratios: Vec<f64> = (0..2 * samples)
        .map(|_| {
            let u = random_fe_function(&mesh, s, &mut rng)?;
            let regional = form.regional_seminorm_sq(&u)? / scale;
            Ok(regional.sqrt() / (lq_norm(&u, 2.0).powf(1.0 - s) * gradient_lq_norm(&u, 2.0).powf(s)))
        })
        .collect::<Result<_>>()?;

    let bubbles: Vec<Bubble<f64>> = (0..2 * samples)
        .map(|_| {
            let c = 10f64.powf(rng.gen_range(-1.3..0.3));
            let center = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Bubble::new(1.0, c, center, s)
        })
        .collect::<Result<_>>()?;
    let cube = [1.0, 0.5, 0.25]
        .iter()
        .map(|&side| {
            let ratios: Vec<f64> = bubbles
                .iter()
                .map(|b| {
                    let (u, du, d2u) = cube_norms(b, side);
                    du / (u / side + (u * d2u).sqrt())
                })
                .collect();
            CubeConstant { side, constant: FittedConstant::from_ratios(&ratios) }
        })
        .collect();

    Ok(InequalityReport { dim, s, seed, poincare, gagliardo_nirenberg: FittedConstant::from_ratios(&gn_ratios), cube })
}
