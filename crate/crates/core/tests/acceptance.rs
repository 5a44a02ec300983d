//! Exit criteria. Each test prints one `criterion N: PASS|FAIL ...` line.
//!
//! Run with `cargo test --release -p fracsob --test acceptance -- --nocapture --test-threads 1`.

mod common;

use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use fracsob::bubble::{normalize_lambda, Bubble};
use fracsob::experiments::{
    discrete_constant_sweep, fit_rate, upper_bound_sweep, verify_covering, verify_functional_inequalities, verify_interp_error,
    verify_minimizing_sequence, ConstantSweepReport,
};
use fracsob::gagliardo::{assemble, complement_weight, QuadSpec};
use fracsob::mesh::build_mesh;
use fracsob::params::{exact_constant, rate_exponent, ProblemParams};
use fracsob::solver::{balanced_bubble, quadrature_slack, solve, SolveOptions};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn verdict(n: usize, pass: bool, detail: String) {
    println!("criterion {n:2}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn within(start: Instant, limit: Duration) -> (bool, f64) {
    let t = start.elapsed();
    (t <= limit, t.as_secs_f64())
}

fn golden(kind: &str, dim: usize, s: f64) -> f64 {
    include_str!("fixtures/golden.txt")
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().collect::<Vec<_>>())
        .find(|f| f[0] == kind && f[1].parse::<usize>().unwrap() == dim && (f[2].parse::<f64>().unwrap() - s).abs() < 1e-12)
        .map(|f| f[4].parse().unwrap())
        .unwrap_or_else(|| panic!("no golden {kind} for N = {dim}, s = {s}"))
}

#[test]
fn c01_exact_constant() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (dim, s) in [(1, 0.25), (2, 0.5)] {
        let v = exact_constant(dim, s).unwrap();
        worst = worst.max((v - golden("constant", dim, s)).abs() / golden("constant", dim, s));
    }
    let (fast, t) = within(start, Duration::from_secs(10));
    verdict(1, worst <= 1e-8 && fast, format!("worst relative error {worst:.2e} (≤ 1e-8), {t:.2} s"));
}

#[test]
fn c02_assembly_oracle() {
    let start = Instant::now();
    let (mut worst, mut asym, mut min_eig): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
    for s in [0.1, 0.25, 0.4] {
        for level in 0..=2 {
            let mesh = Arc::new(build_mesh::<f64>(1, level).unwrap());
            assert!(mesh.n_elements() <= 8);
            let form = assemble(&mesh, s, &QuadSpec::for_dim(1)).unwrap();
            for i in 0..mesh.n_free {
                for j in 0..mesh.n_free {
                    let want = common::oracle_entry(&mesh, s, i, j);
                    let got = form.matrix.get(i, j);
                    let scale = want.abs().max(1e-3 * form.matrix.get(i, i).abs());
                    worst = worst.max((got - want).abs() / scale);
                }
            }
            asym = asym.max(form.report.asymmetry);
            min_eig = min_eig.min(form.min_eigenvalue());
        }
    }
    let (fast, t) = within(start, Duration::from_secs(120));
    verdict(
        2,
        worst <= 1e-4 && asym <= 1e-12 && min_eig > 0.0 && fast,
        format!("worst entry deviation {worst:.2e} (≤ 1e-4), asymmetry {asym:.1e}, min eigenvalue {min_eig:.3e}, {t:.1} s"),
    );
}

/// Five-point central difference of a scalar function along coordinate k.
fn five_point<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], k: usize, step: f64) -> f64 {
    let at = |d: f64| {
        let mut y = x.to_vec();
        y[k] += d;
        f(&y)
    };
    (at(-2.0 * step) - 8.0 * at(-step) + 8.0 * at(step) - at(2.0 * step)) / (12.0 * step)
}

#[test]
fn c03_bubble_calculus() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut grad_err, mut hess_err, mut frob_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..1000 {
        let dim = 1 + k % 2;
        let s = rng.gen_range(0.05..if dim == 1 { 0.45 } else { 0.95 });
        let c = 10f64.powf(rng.gen_range(-2.0..0.0));
        let center: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lambda = rng.gen_range(0.1..10.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let b = Bubble::new(lambda, c, center.clone(), s).unwrap();
        let rho = 10f64.powf(rng.gen_range(-2.0..2.0));
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let dir = if dim == 1 { vec![th.cos().signum()] } else { vec![th.cos(), th.sin()] };
        let x: Vec<f64> = center.iter().zip(&dir).map(|(x0, d)| x0 + rho * c * d).collect();
        let step = 1e-3 * c * (1.0 + rho);

        let g = b.gradient(&x);
        let g_fd: Vec<f64> = (0..dim).map(|i| five_point(|y| b.evaluate(y), &x, i, step)).collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let diff: Vec<f64> = g.iter().zip(&g_fd).map(|(a, b)| a - b).collect();
        grad_err = grad_err.max(norm(&diff) / norm(&g));

        let h = b.hessian(&x);
        let mut h_fd = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                h_fd[i * dim + j] = five_point(|y| b.gradient(y)[i], &x, j, step);
            }
        }
        let diff: Vec<f64> = h.iter().zip(&h_fd).map(|(a, b)| a - b).collect();
        hess_err = hess_err.max(norm(&diff) / norm(&h));
        frob_err = frob_err.max((norm(&h) - b.hessian_norm(&x)).abs() / b.hessian_norm(&x));
    }
    let (fast, t) = within(start, Duration::from_secs(10));
    verdict(
        3,
        grad_err <= 1e-8 && hess_err <= 1e-6 && frob_err <= 1e-12 && fast,
        format!("gradient {grad_err:.1e} (≤ 1e-8), Hessian {hess_err:.1e} (≤ 1e-6), Frobenius {frob_err:.1e} (≤ 1e-12) over 1000 samples, {t:.2} s"),
    );
}

#[test]
fn c04_amplitude_scaling() {
    let mut lines = Vec::new();
    let mut pass = true;
    for (dim, s) in [(1usize, 0.25), (2, 0.5)] {
        let pts: Vec<(f64, f64)> = (3..=7)
            .map(|k| {
                let c = 0.5f64.powi(k);
                (c, normalize_lambda(c, dim, s).unwrap())
            })
            .collect();
        let slope = fit_rate(&pts).unwrap().slope;
        let expected = -(dim as f64 - 2.0 * s) / 2.0;
        let ok = (slope / expected - 1.0).abs() <= 0.1;
        pass &= ok;
        lines.push(format!("N={dim} s={s}: slope {slope:.4} vs {expected} ± 10%"));
    }
    verdict(4, pass, lines.join("; "));
}

#[test]
fn c05_interpolation_rates() {
    let start = Instant::now();
    let r = verify_interp_error(1, 0.25, 2.0, 0.25, &[4, 5, 6, 7, 8, 9]).unwrap();
    let (lq, gr) = (r.lq_fit.slope, r.grad_fit.slope);
    let (fast, t) = within(start, Duration::from_secs(300));
    verdict(
        5,
        (lq - 2.0).abs() <= 0.15 && (gr - 1.0).abs() <= 0.15 && fast,
        format!("L² slope {lq:.4} (2 ± 0.15), gradient slope {gr:.4} (1 ± 0.15), {t:.2} s"),
    );
}

#[test]
fn c06_upper_bound_rate() {
    let start = Instant::now();
    let r = upper_bound_sweep(1, 0.3, &[5, 6, 7, 8, 9, 10]).unwrap();
    let alpha = rate_exponent(1, 0.3).unwrap();
    let positive = r.failures.is_empty() && r.records.iter().all(|x| x.value > 0.0);
    let monotone = r.records.windows(2).all(|w| w[1].value < w[0].value);
    let slope = r.fit.map(|f| f.slope).unwrap_or(f64::NAN);
    let in_band = slope >= 0.6 * alpha && slope <= 1.4 * alpha;
    let (fast, t) = within(start, Duration::from_secs(1800));
    verdict(
        6,
        positive && monotone && in_band && fast,
        format!(
            "deficits positive {positive}, monotone {monotone}, slope {slope:.4} in [{:.4}, {:.4}] ({:.3}α), {t:.1} s",
            0.6 * alpha,
            1.4 * alpha,
            slope / alpha
        ),
    );
}

fn constant_sweep() -> &'static (ConstantSweepReport, f64) {
    static SWEEP: OnceLock<(ConstantSweepReport, f64)> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let r = discrete_constant_sweep(1, 0.25, &[4, 5, 6, 7, 8]).unwrap();
        (r, start.elapsed().as_secs_f64())
    })
}

#[test]
fn c07_discrete_constant_sweep() {
    let (r, t) = constant_sweep();
    let recs = &r.sweep.records;
    let complete = r.sweep.failures.is_empty() && recs.len() == 5;
    let max_slack = recs.iter().map(|x| x.slack).fold(0.0, f64::max);
    let above = recs.iter().all(|x| x.value >= -x.slack) && max_slack <= 1e-6;
    let non_increasing = r.diagnostics.windows(2).all(|w| w[1].s_h <= w[0].s_h);
    let dominated = recs.iter().zip(&r.diagnostics).all(|(x, d)| x.value <= d.initial_deficit);
    let slope = r.sweep.fit.map(|f| f.slope).unwrap_or(f64::NAN);
    let in_band = slope > 0.0 && (0.2625..=0.6125).contains(&slope);
    verdict(
        7,
        complete && above && non_increasing && dominated && in_band && *t <= 1800.0,
        format!(
            "S_h ≥ S − slack {above} (max slack {max_slack:.1e}), non-increasing {non_increasing}, below I_hΨ {dominated}, slope {slope:.4} in [0.2625, 0.6125], {t:.1} s"
        ),
    );
}

#[test]
fn c08_stability_ratio() {
    let (r, _) = constant_sweep();
    let ratios: Vec<f64> = r.diagnostics.iter().filter(|d| (5..=8).contains(&d.level)).map(|d| d.stability_ratio).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let spread = hi / lo;
    verdict(
        8,
        ratios.len() == 4 && lo > 0.0 && spread <= 10.0,
        format!("ratios {:?}, max/min {spread:.3} (≤ 10)", ratios.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()),
    );
}

#[test]
fn c09_minimizing_sequence() {
    let r = verify_minimizing_sequence(1, 0.25, &[0.2, 0.1, 0.05], 9).unwrap();
    let positive = r.records.iter().all(|x| x.gap > 0.0);
    let decreasing = r.records.windows(2).all(|w| w[1].gap < w[0].gap);
    let banded = r.ratios.iter().all(|q| (1.2..=1.7).contains(q));
    verdict(
        9,
        positive && decreasing && banded,
        format!("gaps {:?}, halving ratios {:?} in [1.2, 1.7]", r.records.iter().map(|x| format!("{:.4e}", x.gap)).collect::<Vec<_>>(), r.ratios.iter().map(|q| format!("{q:.4}")).collect::<Vec<_>>()),
    );
}

#[test]
fn c10_covering() {
    let one = verify_covering(1, 0.25, 10_000, 10).unwrap();
    let two = verify_covering(2, 0.5, 10_000, 10).unwrap();
    // outside the band the 1D ratio 2a|(2a+1)ρ²−1|/(1+ρ²) is smallest at ρ = 1/2 or ρ = 1
    let a = (1.0 - 2.0 * 0.25) / 2.0;
    let f = |rho: f64| 2.0 * a * ((2.0 * a + 1.0) * rho * rho - 1.0).abs() / (1.0 + rho * rho);
    let floor = f(0.5).min(f(1.0));
    let band = one.excluded > 0 && one.min_ratio_doubled >= floor * (1.0 - 1e-12);
    verdict(
        10,
        one.is_stable() && two.is_stable() && band,
        format!(
            "N=1 min {:.4e} (change {:.1e}, {} draws excluded, floor {floor:.4e}), N=2 min {:.4e} (change {:.1e})",
            one.min_ratio,
            one.relative_change(),
            one.excluded,
            two.min_ratio,
            two.relative_change()
        ),
    );
}

#[test]
fn c11_functional_inequalities() {
    let mut pass = true;
    let mut lines = Vec::new();
    for (dim, s, level) in [(1usize, 0.25, 6usize), (2, 0.5, 2)] {
        let r = verify_functional_inequalities(dim, s, level, 50, 1000, 11).unwrap();
        let cubes_stable = r.cube.iter().all(|c| c.constant.is_stable());
        let ok = r.poincare.violations == 0 && r.poincare.functions == 50 && r.gagliardo_nirenberg.is_stable() && cubes_stable;
        pass &= ok;
        lines.push(format!(
            "N={dim}: Poincaré max {:.3} over {} elements ({} violations), GN {:.3} (change {:.1e}), cube constants {:?}",
            r.poincare.max_ratio,
            r.poincare.elements_checked,
            r.poincare.violations,
            r.gagliardo_nirenberg.max_ratio_doubled,
            r.gagliardo_nirenberg.relative_change(),
            r.cube.iter().map(|c| format!("l={}: {:.3}", c.side, c.constant.max_ratio_doubled)).collect::<Vec<_>>()
        ));
    }
    verdict(11, pass, lines.join("; "));
}

#[test]
fn c12_two_dimensional_smoke() {
    let start = Instant::now();
    let s = 0.5;
    let mesh = Arc::new(build_mesh::<f64>(2, 3).unwrap());
    let form = assemble(&mesh, s, &QuadSpec::for_dim(2)).unwrap();
    let min_eig = form.min_eigenvalue();
    let mut rot: f64 = 0.0;
    for r in [0.0, 0.3, 0.6, 0.9] {
        let base = complement_weight(&[r, 0.0], s).unwrap();
        for k in 0..8 {
            let th = std::f64::consts::TAU * k as f64 / 8.0 + 0.1;
            rot = rot.max((complement_weight(&[r * th.cos(), r * th.sin()], s).unwrap() - base).abs() / base);
        }
    }
    let (init, _) = balanced_bubble(&mesh, s).unwrap();
    let report = solve(&form, &init, &SolveOptions::default()).unwrap();
    let slack = quadrature_slack(&form, &report.minimizer).unwrap();
    let sharp = ProblemParams::new(2, s).unwrap().sobolev_constant;
    let above = report.s_h >= sharp - slack;
    let (fast, t) = within(start, Duration::from_secs(1200));
    verdict(
        12,
        form.report.asymmetry <= 1e-12 && min_eig > 0.0 && rot <= 1e-8 && above && fast,
        format!(
            "asymmetry {:.1e}, min eigenvalue {min_eig:.3e}, κ rotation spread {rot:.1e}, S_h {:.6} vs S {sharp:.6} (slack {slack:.1e}), {t:.1} s",
            form.report.asymmetry, report.s_h
        ),
    );
}
