use fracsob::experiments::*;
use proptest::prelude::*;

#[test]
fn interpolation_error_concentration_slope() {
    let r = verify_interp_concentration(1, 0.25, 2.0, 10, &[0.25, 0.125, 0.0625, 0.03125]).unwrap();
    assert_eq!(r.expected_slope, -1.75);
    let ratio = r.fit.slope / r.expected_slope;
    assert!((ratio - 1.0).abs() <= 0.2, "c-slope {} vs {}", r.fit.slope, r.expected_slope);
}

#[test]
fn cube_constants_comparable_across_sizes() {
    for (dim, s) in [(1, 0.25), (2, 0.5)] {
        let r = verify_functional_inequalities(dim, s, 2, 5, 500, 4).unwrap();
        assert!(r.cube_spread() <= 2.0, "N={dim}: spread {}", r.cube_spread());
    }
}

#[test]
fn minimizing_sequence_quotients_decrease() {
    let r = verify_minimizing_sequence(1, 0.25, &[0.3, 0.15, 0.075], 8).unwrap();
    assert!(r.records.windows(2).all(|w| w[1].quotient < w[0].quotient));
    assert!((r.expected_ratio - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn sweeps_are_reproducible() {
    let strip = |r: SweepReport| r.records.into_iter().map(|x| (x.level, x.h, x.c_h, x.value, x.slack)).collect::<Vec<_>>();
    let a = strip(upper_bound_sweep(1, 0.3, &[3, 4, 5]).unwrap());
    let b = strip(upper_bound_sweep(1, 0.3, &[3, 4, 5]).unwrap());
    assert_eq!(a, b);
    let a = verify_functional_inequalities(2, 0.5, 1, 3, 20, 9).unwrap();
    let b = verify_functional_inequalities(2, 0.5, 1, 3, 20, 9).unwrap();
    assert_eq!(a.gagliardo_nirenberg, b.gagliardo_nirenberg);
    assert_eq!(a.poincare, b.poincare);
}

#[test]
fn concentration_of_fitted_bubbles_shrinks() {
    let r = discrete_constant_sweep(1, 0.25, &[4, 5, 6]).unwrap();
    let fit = r.concentration_fit.unwrap();
    assert!(fit.slope > 0.0, "c_fit slope {}", fit.slope);
    assert!(r.diagnostics.iter().all(|d| d.converged));
}

fn record() -> impl Strategy<Value = SweepRecord> {
    (0usize..30, 1e-9f64..1.0, 1e-9f64..1.0, -10.0f64..10.0, 0.0f64..1e-3, 0.0f64..1e4)
        .prop_map(|(level, h, c_h, value, slack, wall_time)| SweepRecord { level, h, c_h, value, slack, wall_time })
}

proptest! {
    #[test]
    fn csv_round_trip(mut recs in prop::collection::vec(record(), 0..12)) {
        recs.sort_by(|a, b| b.h.partial_cmp(&a.h).unwrap());
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        let back: Vec<SweepRecord> = read_csv(&buf[..]).unwrap();
        prop_assert_eq!(back, recs);
    }
}
