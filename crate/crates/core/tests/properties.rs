use proptest::prelude::*;
use seqsearch::mc::{ks_critical_1pct, ks_two_sample, Moments};
use seqsearch::output::round_sig;
use seqsearch::rng::{CounterRng, Stream};
use seqsearch::*;

fn families() -> Vec<Distribution> {
    vec![
        make_uniform(0.0, 1.0).unwrap(),
        make_exponential(1.0).unwrap(),
        make_pareto(2.0, 1.0).unwrap(),
    ]
}

/// One-sample KS statistic against the uniform CDF.
fn ks_uniform(mut u: Vec<f64>) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn probability_integral_transform() {
    let rng = CounterRng::new(17);
    for d in families() {
        let mut s = rng.player_stream(0, Stream::Draws, 0);
        let u: Vec<f64> = (0..1_000_000).map(|_| d.cdf(d.sample(&mut s))).collect();
        let ks = ks_uniform(u);
        assert!(ks < 0.002, "{}: {ks}", d.label());
    }
}

#[test]
fn truncation_matches_rejection_sampling() {
    let e = make_exponential(1.0).unwrap();
    let t = truncate_below(&e, 0.7).unwrap();
    let rng = CounterRng::new(3);
    let mut s = rng.player_stream(0, Stream::Draws, 0);
    let mut kept = Vec::with_capacity(100_000);
    while kept.len() < 100_000 {
        let x = e.sample(&mut s);
        if x >= 0.7 {
            kept.push(t.cdf_trunc(x));
        }
    }
    assert!(ks_uniform(kept) < 0.005);
}

#[test]
fn two_sample_ks_detects_shift() {
    let rng = CounterRng::new(5);
    let mut a: Vec<f64> = (0..20_000).map(|i| rng.uniform(i, Stream::Draws, 0, 0)).collect();
    let mut b: Vec<f64> = (0..20_000).map(|i| rng.uniform(i, Stream::Alternate, 0, 0).powf(1.1)).collect();
    let crit = ks_critical_1pct(a.len(), b.len());
    assert!(ks_two_sample(&mut a, &mut b) > crit);
}

proptest! {
    #[test]
    fn symmetric_quantile_is_distribution_free(n in 2usize..12, c in 0.001f64..0.08) {
        let params = ContestParams::new(n, c, 1.0).unwrap();
        prop_assume!(params.is_viable());
        let qs: Vec<f64> = families().iter().map(|d| solve_symmetric(&params, d).unwrap().threshold_quantile).collect();
        for q in &qs {
            prop_assert!((q - qs[0]).abs() < 1e-12);
        }
        let eq = solve_symmetric(&params, &families()[0]).unwrap();
        prop_assert!(eq.player_value.abs() < 1e-12);
        prop_assert!((eq.dissipation_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn designer_quantile_is_distribution_free(m in 2usize..6, n in 1usize..6, c in 0.001f64..0.02) {
        let params = DesignerParams::new(m, n, c, 1.0).unwrap();
        prop_assume!(params.is_viable());
        let eqs: Vec<DesignerEquilibrium> = families().iter().map(|d| solve_designer(&params, d).unwrap()).collect();
        for e in &eqs {
            prop_assert!((e.threshold_quantile - eqs[0].threshold_quantile).abs() < 1e-12);
        }
        prop_assert_eq!(eqs[0].designer_value == 0.0, n == 1);
    }

    #[test]
    fn quantile_inverts_cdf(u in 1e-9f64..(1.0 - 1e-9)) {
        for d in families() {
            let x = d.quantile(u);
            prop_assert!((d.cdf(x) - u).abs() < 1e-9, "{} at {u}", d.label());
            prop_assert!((d.cdf(d.inverse_survival(1.0 - u)) - u).abs() < 1e-9);
        }
    }

    #[test]
    fn moments_merge_matches_single_pass(xs in prop::collection::vec(-1e3f64..1e3, 2..200), split in 0usize..200) {
        let split = split.min(xs.len());
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..split].iter().for_each(|&x| a.push(x));
        xs[split..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        prop_assert_eq!(a.count(), whole.count());
        prop_assert!((a.mean() - whole.mean()).abs() < 1e-9);
        prop_assert!((a.variance() - whole.variance()).abs() < 1e-6 * (1.0 + whole.variance()));
    }

    #[test]
    fn round_sig_is_idempotent(x in -1e12f64..1e12) {
        let r = round_sig(x);
        prop_assert_eq!(round_sig(r), r);
        prop_assert!((r - x).abs() <= 1e-14 * x.abs());
    }

    #[test]
    fn two_draw_root_satisfies_indifference(n in 2usize..15, r in 0.0f64..0.1) {
        let eq = solve_two_draw(n, r).unwrap();
        if let Some(a) = eq.first_quantile() {
            prop_assert!(a > 0.0 && a < 1.0);
            let m = n as i32;
            let lhs = (1.0 + a.powi(2 * m - 1)) / (n as f64 * (1.0 + a)) - a.powi(2 * m - 2);
            prop_assert!((lhs - r).abs() < 1e-12);
        }
    }
}

#[test]
fn multiprize_value_equals_consolation_prize() {
    let u = make_uniform(0.0, 1.0).unwrap();
    let prizes = PrizeSchedule::new(vec![3.0, 1.5, 0.25]).unwrap();
    let eq = solve_multiprize(3, 0.2, &prizes, &u).unwrap();
    assert!((eq.player_value - 0.25).abs() < 1e-12);
}

#[test]
fn comparative_statics_rows_follow_grid() {
    let u = make_uniform(0.0, 1.0).unwrap();
    let grid: Vec<ContestParams> = (2..=8).map(|n| ContestParams::new(n, 0.1, 1.0).unwrap()).collect();
    let rows = comparative_statics(&grid, &u);
    assert_eq!(rows.len(), 7);
    let ts: Vec<f64> = rows.iter().filter_map(|r| r.equilibrium.map(|e| e.threshold)).collect();
    assert!(ts.windows(2).all(|w| w[1] < w[0]));
    assert!(rows.last().unwrap().error.is_none());
}
