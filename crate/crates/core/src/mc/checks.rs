//! Simulation-based checks of distribution-free quantities, recall
//! irrelevance and the designer game.

use serde::Serialize;

use super::stats::{ks_critical_1pct, ks_two_sample, Estimate, Moments};
use super::{ranks, run_chunks, simulate_contest, Compiled, ConfigEcho, SimulationConfig, StrategyProfile, CHUNK};
use crate::dist::Distribution;
use crate::equilibrium::{solve_symmetric, ContestParams, PrizeSchedule};
use crate::error::{Error, Result};
use crate::hierarchy::{solve_designer, DesignerParams};
use crate::rng::{CounterRng, Stream};

/// Seed for the `i`-th independent sub-experiment (splitmix64 finaliser).
pub(crate) fn derived_seed(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add((i + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub distribution: String,
    pub seed: u64,
    pub threshold: f64,
    pub acceptance_rate: Estimate,
    /// Draws of player 0.
    pub draws: Estimate,
    pub total_cost: Estimate,
    pub dissipation_ratio: Estimate,
    pub capped_replications: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseGap {
    pub metric: String,
    pub first: usize,
    pub second: usize,
    pub gap: f64,
    pub joint_se: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionFreeReport {
    pub params: ContestParams,
    pub expected_acceptance_rate: f64,
    pub expected_draws: f64,
    pub expected_dissipation: f64,
    pub summaries: Vec<DistributionSummary>,
    pub gaps: Vec<PairwiseGap>,
    /// Every simulated metric within three standard errors of its analytic value.
    pub analytic_agreement: bool,
    pub pass: bool,
}

/// Simulates the symmetric equilibrium under each distribution (independent
/// seeds) and compares acceptance rate, draws, cost and dissipation pairwise.
pub fn distribution_free_check(
    params: &ContestParams,
    distributions: &[Distribution],
    cfg: &SimulationConfig,
) -> Result<DistributionFreeReport> {
    if distributions.len() < 2 {
        return Err(Error::invalid("need at least two distributions to compare"));
    }
    let prizes = PrizeSchedule::winner_take_all(params.n_players, params.prize)?;
    let mut summaries = Vec::with_capacity(distributions.len());
    let mut analytic = true;
    let p = params.acceptance_prob();
    let n = params.n_players as f64;
    for (i, d) in distributions.iter().enumerate() {
        let eq = solve_symmetric(params, d)?;
        let seed = derived_seed(cfg.seed, i as u64);
        let run = SimulationConfig { seed, ..*cfg };
        let rep = simulate_contest(&StrategyProfile::symmetric(params.n_players, eq.threshold), params.cost, &prizes, d, &run)?;
        let s = DistributionSummary {
            distribution: d.label(),
            seed,
            threshold: eq.threshold,
            acceptance_rate: rep.acceptance_rate,
            draws: rep.players[0].draws,
            total_cost: rep.total_cost,
            dissipation_ratio: rep.dissipation_ratio,
            capped_replications: rep.capped_replications,
        };
        analytic &= s.acceptance_rate.within(p, 3.0)
            && s.draws.within(1.0 / p, 3.0)
            && s.total_cost.within(n * params.cost / p, 3.0)
            && s.dissipation_ratio.within(eq.dissipation_ratio, 3.0);
        summaries.push(s);
    }

    type Metric = fn(&DistributionSummary) -> Estimate;
    let metrics: [(&str, Metric); 4] = [
        ("acceptance_rate", |s| s.acceptance_rate),
        ("draws", |s| s.draws),
        ("total_cost", |s| s.total_cost),
        ("dissipation_ratio", |s| s.dissipation_ratio),
    ];
    let mut gaps = Vec::new();
    for (name, get) in metrics {
        for i in 0..summaries.len() {
            for j in i + 1..summaries.len() {
                let (a, b) = (get(&summaries[i]), get(&summaries[j]));
                let gap = (a.mean - b.mean).abs();
                let joint_se = a.se.hypot(b.se);
                gaps.push(PairwiseGap {
                    metric: name.to_string(),
                    first: i,
                    second: j,
                    gap,
                    joint_se,
                    within: gap <= 3.0 * joint_se,
                });
            }
        }
    }
    let pass = analytic && gaps.iter().all(|g| g.within);
    Ok(DistributionFreeReport {
        params: *params,
        expected_acceptance_rate: p,
        expected_draws: 1.0 / p,
        expected_dissipation: n * params.cost / (p * params.prize),
        summaries,
        gaps,
        analytic_agreement: analytic,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallReport {
    pub distribution: String,
    pub threshold: f64,
    pub replications: u64,
    /// Two-sample KS statistic between with-recall and no-recall final values
    /// drawn on independent streams.
    pub ks_statistic: f64,
    pub critical_value_1pct: f64,
    /// Replications where recall changed player 0's outcome on the same draws.
    pub pathwise_differences: u64,
    pub no_recall_mean: Estimate,
    pub recall_mean: Estimate,
    pub pass: bool,
    pub config: ConfigEcho,
}

/// Plays player 0's equilibrium search with and without recall of rejected
/// draws and compares the final-value distributions.
pub fn recall_irrelevance_check(params: &ContestParams, d: &Distribution, cfg: &SimulationConfig) -> Result<RecallReport> {
    if cfg.replications == 0 {
        return Err(Error::invalid("need at least one replication"));
    }
    let eq = solve_symmetric(params, d)?;
    let compiled = Compiled::new(&StrategyProfile::symmetric(params.n_players, eq.threshold), d, cfg.max_draws_cap)?;
    let rng = CounterRng::new(cfg.seed);

    #[derive(Default)]
    struct Acc {
        plain: Vec<f64>,
        recall: Vec<f64>,
        plain_m: Moments,
        recall_m: Moments,
        differ: u64,
    }
    let mut acc = run_chunks(
        cfg,
        Acc::default,
        |a, rep| {
            let plain = compiled.play(0, &rng, d, rep, Stream::Draws, 0, false);
            let same = compiled.play(0, &rng, d, rep, Stream::Draws, 0, true);
            let recall = compiled.play(0, &rng, d, rep, Stream::Alternate, 0, true);
            a.differ += (plain.value != same.value) as u64;
            a.plain.push(plain.value);
            a.recall.push(recall.value);
            a.plain_m.push(plain.value);
            a.recall_m.push(recall.value);
        },
        |a, b| {
            a.plain.extend(b.plain);
            a.recall.extend(b.recall);
            a.plain_m.merge(&b.plain_m);
            a.recall_m.merge(&b.recall_m);
            a.differ += b.differ;
        },
    );
    let ks = ks_two_sample(&mut acc.plain, &mut acc.recall);
    let crit = ks_critical_1pct(acc.plain.len(), acc.recall.len());
    Ok(RecallReport {
        distribution: d.label(),
        threshold: eq.threshold,
        replications: cfg.replications,
        ks_statistic: ks,
        critical_value_1pct: crit,
        pathwise_differences: acc.differ,
        no_recall_mean: acc.plain_m.estimate(),
        recall_mean: acc.recall_m.estimate(),
        pass: ks < crit,
        config: ConfigEcho {
            seed: cfg.seed,
            replications: cfg.replications,
            max_draws_cap: compiled.cap(),
            chunk_size: CHUNK,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignerSimulationReport {
    pub params: DesignerParams,
    pub threshold: f64,
    pub internal_prize: f64,
    /// Total worker search cost over the meta-prize.
    pub dissipation_ratio: Estimate,
    pub expected_dissipation: f64,
    /// Meta-prize won less internal prize paid, per designer.
    pub designer_payoffs: Vec<Estimate>,
    pub expected_designer_value: f64,
    pub designer_win_frequencies: Vec<Estimate>,
    /// Payoff of worker 0 of designer 0.
    pub worker_payoff: Estimate,
    pub capped_replications: u64,
    pub config: ConfigEcho,
}

/// Simulates `M` teams of `N` workers at the symmetric designer equilibrium.
pub fn simulate_designer(params: &DesignerParams, d: &Distribution, cfg: &SimulationConfig) -> Result<DesignerSimulationReport> {
    if cfg.replications == 0 {
        return Err(Error::invalid("need at least one replication"));
    }
    let eq = solve_designer(params, d)?;
    let (m, n) = (params.n_designers, params.team_size);
    let compiled = Compiled::new(&StrategyProfile::symmetric(m * n, eq.threshold), d, cfg.max_draws_cap)?;
    let rng = CounterRng::new(cfg.seed);
    let w = eq.internal_prize;
    let omega = params.meta_prize;

    #[derive(Clone)]
    struct Acc {
        dissipation: Moments,
        payoff: Vec<Moments>,
        win: Vec<Moments>,
        worker: Moments,
        capped: u64,
    }
    let acc = run_chunks(
        cfg,
        || Acc {
            dissipation: Moments::default(),
            payoff: vec![Moments::default(); m],
            win: vec![Moments::default(); m],
            worker: Moments::default(),
            capped: 0,
        },
        |a, rep| {
            let mut values = Vec::with_capacity(m * n);
            let mut spent = 0.0;
            let mut worker0_cost = 0.0;
            let mut capped = false;
            for i in 0..m * n {
                let p = compiled.play(i, &rng, d, rep, Stream::Draws, i as u32, false);
                let c = params.cost * p.draws as f64;
                if i == 0 {
                    worker0_cost = c;
                }
                spent += c;
                capped |= p.capped;
                values.push(p.value);
            }
            let mut rank = Vec::with_capacity(m * n);
            ranks(&values, &rng, rep, &mut rank);
            let winner = rank.iter().position(|&r| r == 0).unwrap_or(0) / n;
            for t in 0..m {
                let won = (t == winner) as u8 as f64;
                a.payoff[t].push(omega * won - w);
                a.win[t].push(won);
            }
            // the internal prize goes to the best worker of each team
            let best_in_team0 = (0..n).min_by_key(|&j| rank[j]).unwrap_or(0);
            a.worker.push(if best_in_team0 == 0 { w } else { 0.0 } - worker0_cost);
            a.dissipation.push(spent / omega);
            a.capped += capped as u64;
        },
        |a, b| {
            a.dissipation.merge(&b.dissipation);
            for (x, y) in a.payoff.iter_mut().zip(&b.payoff) {
                x.merge(y);
            }
            for (x, y) in a.win.iter_mut().zip(&b.win) {
                x.merge(y);
            }
            a.worker.merge(&b.worker);
            a.capped += b.capped;
        },
    );
    Ok(DesignerSimulationReport {
        params: *params,
        threshold: eq.threshold,
        internal_prize: w,
        dissipation_ratio: acc.dissipation.estimate(),
        expected_dissipation: eq.dissipation_ratio,
        designer_payoffs: acc.payoff.iter().map(Moments::estimate).collect(),
        expected_designer_value: eq.designer_value,
        designer_win_frequencies: acc.win.iter().map(Moments::estimate).collect(),
        worker_payoff: acc.worker.estimate(),
        capped_replications: acc.capped,
        config: ConfigEcho {
            seed: cfg.seed,
            replications: cfg.replications,
            max_draws_cap: compiled.cap(),
            chunk_size: CHUNK,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_exponential, make_pareto, make_uniform};

    #[test]
    fn distribution_free_small() {
        let ds = vec![
            make_uniform(0.0, 1.0).unwrap(),
            make_exponential(1.0).unwrap(),
            make_pareto(2.0, 1.0).unwrap(),
        ];
        let r = distribution_free_check(&ContestParams::new(2, 0.1, 1.0).unwrap(), &ds, &SimulationConfig::new(40_000, 5)).unwrap();
        assert_eq!(r.gaps.len(), 12);
        assert!(r.pass, "{r:#?}");
    }

    #[test]
    fn recall_boundary_is_identical() {
        let u = make_uniform(0.0, 1.0).unwrap();
        let r = recall_irrelevance_check(&ContestParams::new(2, 0.5, 1.0).unwrap(), &u, &SimulationConfig::new(5_000, 1)).unwrap();
        assert_eq!(r.pathwise_differences, 0);
        assert!(r.pass);
    }

    #[test]
    fn designer_small() {
        let u = make_uniform(0.0, 1.0).unwrap();
        let p = DesignerParams::new(2, 2, 0.05, 1.0).unwrap();
        let r = simulate_designer(&p, &u, &SimulationConfig::new(100_000, 2)).unwrap();
        assert!(r.dissipation_ratio.within(2.0 / 3.0, 4.0), "{r:?}");
        assert!(r.worker_payoff.within(0.0, 4.0), "{r:?}");
        for e in &r.designer_payoffs {
            assert!(e.within(1.0 / 6.0, 4.0), "{r:?}");
        }
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(derived_seed(1, 0), derived_seed(1, 1));
        assert_ne!(derived_seed(1, 0), derived_seed(2, 0));
    }
}
