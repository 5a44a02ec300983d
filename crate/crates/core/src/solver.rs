//! Minimization of the discrete Rayleigh quotient and distance to the bubble manifold.

use std::sync::Arc;

use crate::bubble::{normalized_truncated_bubble, Bubble};
use crate::error::{Error, Result};
use crate::gagliardo::{assemble, NonlocalForm, QuadSpec};
use crate::linalg::dot;
use crate::mesh::{interpolate, BallMesh, FeFunction};
use crate::norms::{lq_integral, nonlinear_residual};
use crate::scalar::{lit, Scalar};

/// [u]²/‖u‖²_{L^{2*}}.
pub fn quotient<T: Scalar>(form: &NonlocalForm<T>, u: &FeFunction<T>) -> Result<T> {
    if u.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let q = form.params.two_star;
    let num = form.seminorm_sq(u)?;
    let den = lq_integral(u, q).powf(lit::<T>(2.0) / q);
    Ok(num / den)
}

/// Sobolev deficit: quotient minus the sharp constant S_{N,s}.
pub fn deficit<T: Scalar>(form: &NonlocalForm<T>, u: &FeFunction<T>) -> Result<T> {
    Ok(quotient(form, u)? - form.params.sobolev_constant)
}

/// Interpolated truncated bubble at the balanced concentration c_h, with unit
/// L^{2*} norm on the ball. Returns the function and c_h.
pub fn balanced_bubble<T: Scalar>(mesh: &Arc<BallMesh<T>>, s: T) -> Result<(FeFunction<T>, T)> {
    let c = crate::params::optimal_concentration(mesh.h, mesh.dim, s)?;
    let psi = normalized_truncated_bubble(c, mesh.dim, s)?;
    Ok((interpolate(mesh, |x| psi.evaluate(x))?, c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    /// Stop once the relative quotient decrease of an accepted step falls below this.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        Self { tol: lit(1e-10), max_iter: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct SolverReport<T> {
    pub s_h: T,
    /// Unit L^{2*} norm, zero on the boundary.
    pub minimizer: FeFunction<T>,
    pub iterations: usize,
    pub quotient_history: Vec<T>,
    pub converged: bool,
    pub tolerance_used: T,
    /// ‖A u − μ b(u)‖/‖A u‖ at the returned iterate, μ = [u]².
    pub euler_lagrange_residual: T,
}

fn normalize<T: Scalar>(u: &mut FeFunction<T>, q: T) -> Result<()> {
    let norm = lq_integral(u, q).powf(T::one() / q);
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::ZeroFunction);
    }
    let n_free = u.mesh.n_free;
    let mean: T = u.values[..n_free].iter().copied().sum();
    let scale = if mean < T::zero() { -T::one() / norm } else { T::one() / norm };
    u.values.iter_mut().for_each(|v| *v = *v * scale);
    Ok(())
}

/// Safeguarded normalized fixed point for A u = μ b(u).
///
/// Each step solves A v = b(u_k) with the stored factor, rescales v to unit
/// L^{2*} norm and accepts it if the quotient drops; otherwise the step is
/// halved towards u_k. Because the plain iteration crawls along the slowest
/// modes, every accepted step is followed by an extrapolated trial along
/// u_{k+1} − u_k that is kept only when it lowers the quotient further.
pub fn solve<T: Scalar>(form: &NonlocalForm<T>, init: &FeFunction<T>, opts: &SolveOptions<T>) -> Result<SolverReport<T>> {
    if init.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let q = form.params.two_star;
    let mesh = form.mesh.clone();
    let mut u = FeFunction::from_free(mesh.clone(), init.free_values());
    normalize(&mut u, q)?;
    let mut qu = form.seminorm_sq(&u)?;
    let mut history = vec![qu];
    let mut converged = false;
    let mut iterations = 0;
    let mut momentum = T::one();

    let trial = |base: &FeFunction<T>, dir: &[T], t: T| -> Result<(FeFunction<T>, T)> {
        let free: Vec<T> = base.free_values().iter().zip(dir).map(|(&a, &d)| a + t * d).collect();
        let mut w = FeFunction::from_free(mesh.clone(), &free);
        normalize(&mut w, q)?;
        let val = form.seminorm_sq(&w)?;
        Ok((w, val))
    };

    while iterations < opts.max_iter {
        iterations += 1;
        let b = nonlinear_residual(&u, q);
        let mut v = FeFunction::from_free(mesh.clone(), &form.solve(&b));
        normalize(&mut v, q)?;
        let dir: Vec<T> = v.free_values().iter().zip(u.free_values()).map(|(&a, &b)| a - b).collect();
        let mut theta = T::one();
        let mut accepted = None;
        while theta > lit(1e-6) {
            let (w, val) = trial(&u, &dir, theta)?;
            if val < qu {
                accepted = Some((w, val));
                break;
            }
            theta = theta * lit(0.5);
        }
        let Some((mut next, mut qn)) = accepted else {
            converged = true;
            break;
        };
        // extrapolation along the accepted step
        let step: Vec<T> = next.free_values().iter().zip(u.free_values()).map(|(&a, &b)| a - b).collect();
        loop {
            let (w, val) = trial(&next, &step, momentum)?;
            if val < qn {
                next = w;
                qn = val;
                momentum = (momentum * lit(2.0)).min(lit(64.0));
                break;
            }
            momentum = momentum * lit(0.5);
            if momentum < lit(0.25) {
                momentum = lit(0.25);
                break;
            }
        }
        let decrease = (qu - qn) / qn;
        u = next;
        qu = qn;
        history.push(qu);
        if decrease < opts.tol {
            converged = true;
            break;
        }
    }

    let au = form.matrix.matvec(u.free_values());
    let b = nonlinear_residual(&u, q);
    let res: Vec<T> = au.iter().zip(&b).map(|(&a, &bb)| a - qu * bb).collect();
    let el = dot(&res, &res).sqrt() / dot(&au, &au).sqrt();
    let s_h = qu / lq_integral(&u, q).powf(lit::<T>(2.0) / q);
    Ok(SolverReport {
        s_h,
        minimizer: u,
        iterations,
        quotient_history: history,
        converged,
        tolerance_used: opts.tol,
        euler_lagrange_residual: el,
    })
}

/// Locally optimal bubble approximating `u` in the form's norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldFit<T> {
    pub lambda: T,
    pub c: T,
    pub center: Vec<T>,
    /// [u − I_hΦ_{λ,c,X₀}]² at the optimum.
    pub discrete_distance_sq: T,
    pub converged: bool,
    pub evaluations: usize,
}

/// For fixed (c, X₀): the optimal amplitude and the remaining squared distance.
pub fn eliminate_lambda<T: Scalar>(form: &NonlocalForm<T>, u: &FeFunction<T>, c: T, center: &[T]) -> Result<(T, T)> {
    let b = Bubble::new(T::one(), c, center.to_vec(), form.s)?;
    let phi = interpolate(&form.mesh, |x| b.evaluate(x))?;
    let a_phi = form.matrix.matvec(phi.free_values());
    let pp = dot(phi.free_values(), &a_phi);
    if !(pp > T::zero()) {
        return Err(Error::ZeroFunction);
    }
    let up = dot(u.free_values(), &a_phi);
    let uu = form.seminorm_sq(u)?;
    Ok((up / pp, (uu - up * up / pp).max(T::zero())))
}

/// Nelder–Mead over (log c, X₀) with λ eliminated in closed form.
pub fn fit_manifold<T: Scalar>(
    form: &NonlocalForm<T>,
    u: &FeFunction<T>,
    init: (T, T, Vec<T>),
) -> Result<ManifoldFit<T>> {
    if u.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let dim = form.mesh.dim;
    let (_, c0, x0) = init;
    assert_eq!(x0.len(), dim);
    let mut evaluations = 0usize;
    let mut objective = |p: &[T]| -> T {
        evaluations += 1;
        match eliminate_lambda(form, u, p[0].exp(), &p[1..]) {
            Ok((_, r)) => r,
            Err(_) => T::infinity(),
        }
    };
    let mut start = vec![c0.ln()];
    start.extend_from_slice(&x0);
    let steps: Vec<T> = std::iter::once(lit(0.3)).chain(std::iter::repeat(c0 * lit(0.5)).take(dim)).collect();
    let (best, _, converged) = nelder_mead(&mut objective, &start, &steps, lit(1e-10), 2000);
    let c = best[0].exp();
    let center = best[1..].to_vec();
    let (lambda, dist) = eliminate_lambda(form, u, c, &center)?;
    Ok(ManifoldFit { lambda, c, center, discrete_distance_sq: dist, converged, evaluations: evaluations + 1 })
}

/// Standard Nelder–Mead; returns (best point, best value, converged).
fn nelder_mead<T: Scalar, F: FnMut(&[T]) -> T>(f: &mut F, start: &[T], steps: &[T], tol: T, max_eval: usize) -> (Vec<T>, T, bool) {
    let n = start.len();
    let mut simplex: Vec<Vec<T>> = vec![start.to_vec()];
    for k in 0..n {
        let mut p = start.to_vec();
        p[k] = p[k] + steps[k];
        simplex.push(p);
    }
    let mut vals: Vec<T> = simplex.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    let half = lit::<T>(0.5);
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let spread = (vals[n] - vals[0]).abs();
        let size = (1..=n)
            .map(|k| (0..n).map(|d| (simplex[k][d] - simplex[0][d]).abs()).fold(T::zero(), T::max))
            .fold(T::zero(), T::max);
        if spread <= tol * (vals[0].abs() + tol) && size <= tol.sqrt() {
            return (simplex[0].clone(), vals[0], true);
        }
        if evals >= max_eval {
            return (simplex[0].clone(), vals[0], false);
        }
        let centroid: Vec<T> = (0..n).map(|d| (0..n).map(|k| simplex[k][d]).sum::<T>() / T::from_usize(n).unwrap()).collect();
        let along = |t: T| -> Vec<T> { (0..n).map(|d| centroid[d] + t * (simplex[n][d] - centroid[d])).collect() };
        let xr = along(-T::one());
        let fr = f(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = along(lit(-2.0));
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let x = along(-half);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(half);
                let v = f(&x);
                (x, v)
            };
            evals += 1;
            if fc < vals[n].min(fr) {
                simplex[n] = xc;
                vals[n] = fc;
            } else {
                for k in 1..=n {
                    for d in 0..n {
                        simplex[k][d] = simplex[0][d] + half * (simplex[k][d] - simplex[0][d]);
                    }
                    vals[k] = f(&simplex[k]);
                }
                evals += n;
            }
        }
    }
}

/// |quotient(u) − quotient_enriched(u)|, the sensitivity of the quotient to
/// the assembly quadrature. Assembles the form a second time with every order raised.
pub fn quadrature_slack<T: Scalar>(form: &NonlocalForm<T>, u: &FeFunction<T>) -> Result<T> {
    let spec = form.report.spec.unwrap_or_else(|| QuadSpec::for_dim(form.mesh.dim));
    let rich = assemble(&form.mesh, form.s, &spec.enriched())?;
    let v = FeFunction::from_free(form.mesh.clone(), u.free_values());
    Ok((quotient(form, &v)? - quotient(&rich, &v)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use approx::assert_relative_eq;

    fn form(dim: usize, level: usize, s: f64) -> NonlocalForm<f64> {
        let mesh = Arc::new(build_mesh::<f64>(dim, level).unwrap());
        assemble(&mesh, s, &QuadSpec::for_dim(dim)).unwrap()
    }

    #[test]
    fn deficit_is_scale_invariant() {
        let f = form(1, 5, 0.25);
        let (u, _) = balanced_bubble(&f.mesh, 0.25).unwrap();
        let d = deficit(&f, &u).unwrap();
        assert!(d > 0.0);
        assert_relative_eq!(deficit(&f, &u.scaled(5.0)).unwrap(), d, max_relative = 1e-12);
        assert!(matches!(deficit(&f, &FeFunction::zeros(f.mesh.clone())), Err(Error::ZeroFunction)));
    }

    #[test]
    fn solver_report_invariants() {
        let f = form(1, 5, 0.25);
        let (init, _) = balanced_bubble(&f.mesh, 0.25).unwrap();
        let q0 = quotient(&f, &init).unwrap();
        let rep = solve(&f, &init, &SolveOptions::default()).unwrap();
        assert!(rep.converged, "{} iterations", rep.iterations);
        assert!(rep.quotient_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(rep.s_h <= q0);
        assert!(rep.s_h >= f.params.sobolev_constant);
        assert_relative_eq!(lq_integral(&rep.minimizer, f.params.two_star), 1.0, max_relative = 1e-10);
        assert!(rep.minimizer.values[f.mesh.n_free..].iter().all(|&v| v == 0.0));
        assert!(rep.euler_lagrange_residual < 1e-4, "EL residual {}", rep.euler_lagrange_residual);
    }

    #[test]
    fn lambda_elimination_matches_direct_evaluation() {
        let f = form(1, 5, 0.25);
        let (u, _) = balanced_bubble(&f.mesh, 0.25).unwrap();
        let (lam, r) = eliminate_lambda(&f, &u, 0.4, &[0.1]).unwrap();
        let b = Bubble::new(lam, 0.4, vec![0.1], 0.25).unwrap();
        let phi = interpolate(&f.mesh, |x| b.evaluate(x)).unwrap();
        let diff: Vec<f64> = u.free_values().iter().zip(phi.free_values()).map(|(a, b)| a - b).collect();
        let direct = f.seminorm_sq(&FeFunction::from_free(f.mesh.clone(), &diff)).unwrap();
        assert_relative_eq!(r, direct, max_relative = 1e-12);
    }

    #[test]
    fn self_fit_recovers_bubble() {
        let f = form(1, 6, 0.25);
        let b = Bubble::new(1.0, 0.3, vec![0.0], 0.25).unwrap();
        let u = interpolate(&f.mesh, |x| b.evaluate(x)).unwrap();
        let fit = fit_manifold(&f, &u, (0.8, 0.25, vec![0.05])).unwrap();
        assert!(fit.converged);
        assert_relative_eq!(fit.lambda, 1.0, max_relative = 1e-4);
        assert_relative_eq!(fit.c, 0.3, max_relative = 1e-4);
        assert!(fit.center[0].abs() < 1e-4);
        assert!(fit.discrete_distance_sq <= 1e-10);
    }
}
