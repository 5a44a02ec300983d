//! Brute-force oracles shared by the integration tests.

use fracsob::gagliardo::complement_weight;
use fracsob::mesh::BallMesh;
use fracsob::quadrature::adaptive_gk_split;

fn hat(mesh: &BallMesh<f64>, i: usize, x: f64) -> f64 {
    let xi = mesh.node(i)[0];
    let h = mesh.h;
    (1.0 - (x - xi).abs() / h).max(0.0)
}

/// s(1−s)[∬ (φ_i(x)−φ_i(y))(φ_j(x)−φ_j(y))|x−y|^{−1−2s} + 2∫ φ_i φ_j κ], by nested adaptive quadrature.
pub fn oracle_entry(mesh: &BallMesh<f64>, s: f64, i: usize, j: usize) -> f64 {
    let mut nodes: Vec<f64> = (0..mesh.n_nodes()).map(|k| mesh.node(k)[0]).collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let inner = |x: f64| {
        let mut pts = nodes.clone();
        if !pts.iter().any(|&p| (p - x).abs() < 1e-15) {
            pts.push(x);
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let (fi, fj) = (hat(mesh, i, x), hat(mesh, j, x));
        adaptive_gk_split(
            |y: f64| {
                let r = (x - y).abs();
                if r == 0.0 {
                    return 0.0;
                }
                (fi - hat(mesh, i, y)) * (fj - hat(mesh, j, y)) * r.powf(-1.0 - 2.0 * s)
            },
            &pts,
            1e-14,
            1e-12,
            4000,
        )
        .unwrap()
        .value
    };
    let pair = adaptive_gk_split(inner, &nodes, 1e-13, 1e-11, 4000).unwrap().value;
    let ext = adaptive_gk_split(
        |x: f64| hat(mesh, i, x) * hat(mesh, j, x) * complement_weight(&[x], s).unwrap_or(0.0),
        &nodes,
        1e-14,
        1e-12,
        4000,
    )
    .unwrap()
    .value;
    s * (1.0 - s) * (pair + 2.0 * ext)
}
