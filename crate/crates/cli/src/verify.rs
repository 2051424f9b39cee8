use serde::Serialize;
use serde_json::{json, Value};
use seqsearch::mc::{deviation_scan, first_round_grid, quantile_grid, DeviationReport, Strategy};
use seqsearch::*;
use std::result::Result;

use crate::args::{Family, Global, Preset, SimArgs, VerifyCmd};
use crate::emit::{json, manifest, with_dist};
use crate::{CliError, Outcome};

#[derive(Serialize)]
struct CheckLine {
    name: String,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyResult<R: Serialize> {
    pass: bool,
    checks: Vec<CheckLine>,
    report: R,
}

fn sim_config(sim: &SimArgs, g: &Global) -> SimulationConfig {
    let mut cfg = SimulationConfig::new(sim.reps, g.seed);
    cfg.max_draws_cap = sim.max_draws;
    cfg.parallel = !g.sequential;
    cfg
}

fn finish<R: Serialize>(g: &Global, m: output::RunManifest, checks: Vec<(String, bool)>, report: R) -> Result<Outcome, CliError> {
    let pass = checks.iter().all(|c| c.1);
    let mut summary = String::new();
    for (name, ok) in &checks {
        summary.push_str(&format!("{}: {name}\n", if *ok { "PASS" } else { "FAIL" }));
    }
    summary.push_str(if pass { "verification passed\n" } else { "verification FAILED\n" });
    let result = VerifyResult {
        pass,
        checks: checks.into_iter().map(|(name, pass)| CheckLine { name, pass }).collect(),
        report,
    };
    json(g, m, &result, &summary)?;
    Ok(if pass { Outcome::Done } else { Outcome::VerifyFailed })
}

fn scan_checks(scans: &[DeviationReport]) -> Vec<(String, bool)> {
    scans
        .iter()
        .map(|s| {
            (
                format!(
                    "player {}: {} of {} deviations profitable beyond {:.2} SE ({} beyond 3 SE unadjusted)",
                    s.player,
                    s.flagged.len(),
                    s.results.len(),
                    s.z_threshold,
                    s.above_3se
                ),
                !s.any_flagged(),
            )
        })
        .collect()
}

pub fn run(cmd: &VerifyCmd, g: &Global) -> Result<Outcome, CliError> {
    match cmd {
        VerifyCmd::Dissipation { contest: a, sim } => {
            let d = a.dist.load()?;
            let params = ContestParams::new(a.n, a.cost, a.prize)?;
            let eq = solve_symmetric(&params, &d)?;
            let prizes = PrizeSchedule::winner_take_all(a.n, a.prize)?;
            let cfg = sim_config(sim, g);
            let rep = simulate_contest(&StrategyProfile::symmetric(a.n, eq.threshold), a.cost, &prizes, &d, &cfg)?;
            let mut checks = vec![(
                format!(
                    "dissipation {:.5} +- {:.5} within 3 SE of {}",
                    rep.dissipation_ratio.mean, rep.dissipation_ratio.se, eq.dissipation_ratio
                ),
                rep.dissipation_ratio.within(eq.dissipation_ratio, 3.0),
            )];
            for (i, p) in rep.players.iter().enumerate() {
                checks.push((
                    format!(
                        "player {i} payoff {:.5} +- {:.5} within 3 SE of {:.5}",
                        p.payoff.mean, p.payoff.se, eq.player_value
                    ),
                    p.payoff.within(eq.player_value, 3.0),
                ));
            }
            checks.push((format!("{} capped replications", rep.capped_replications), rep.capped_replications == 0));
            let mut m = with_dist(manifest("verify dissipation", json!(params), g), &d);
            m.seed = Some(g.seed);
            finish(g, m, checks, json!({"equilibrium": eq, "simulation": rep}))
        }
        VerifyCmd::DistributionFree {
            n,
            cost,
            prize,
            dists,
            sim,
        } => {
            let specs: Vec<String> = if dists.is_empty() {
                vec!["uniform:0,1".into(), "exponential:1".into(), "pareto:2,1".into()]
            } else {
                dists.clone()
            };
            let ds = specs
                .iter()
                .map(|s| s.parse::<Distribution>().map_err(|e| CliError::Usage(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            let params = ContestParams::new(*n, *cost, *prize)?;
            let r = distribution_free_check(&params, &ds, &sim_config(sim, g))?;
            let mut checks = vec![("simulated statistics within 3 SE of analytic values".to_string(), r.analytic_agreement)];
            for gap in &r.gaps {
                checks.push((
                    format!(
                        "{} gap between {} and {}: {:.2e} vs 3 SE {:.2e}",
                        gap.metric,
                        r.summaries[gap.first].distribution,
                        r.summaries[gap.second].distribution,
                        gap.gap,
                        3.0 * gap.joint_se
                    ),
                    gap.within,
                ));
            }
            let mut m = manifest(
                "verify distribution_free",
                json!({"params": params, "distributions": specs}),
                g,
            );
            m.seed = Some(g.seed);
            finish(g, m, checks, r)
        }
        VerifyCmd::BestResponse {
            preset,
            family,
            n,
            cost,
            prize,
            draws,
            grid,
            dist,
            sim,
        } => {
            let (family, n, cost, prize, d) = match preset {
                Some(Preset::AsymmetricN3) => (Family::Asymmetric, 3, 0.1, 1.0, make_uniform(0.0, 1.0)?),
                None => (*family, *n, *cost, *prize, dist.load()?),
            };
            let cfg = sim_config(sim, g);
            let prizes = PrizeSchedule::winner_take_all(n, prize)?;
            let (equilibrium, scans): (Value, Vec<DeviationReport>) = match family {
                Family::Symmetric => {
                    let eq = solve_symmetric(&ContestParams::new(n, cost, prize)?, &d)?;
                    let profile = StrategyProfile::symmetric(n, eq.threshold);
                    let s = deviation_scan(&profile, 0, &quantile_grid(&d, *grid), cost, &prizes, &d, &cfg)?;
                    (json!(eq), vec![s])
                }
                Family::Asymmetric => {
                    let eq = solve_asymmetric(&ContestParams::new(n, cost, prize)?, &d)?;
                    let mut strategies = vec![Strategy::Threshold(eq.low_threshold); n - 1];
                    strategies.push(Strategy::Threshold(eq.high_threshold));
                    let profile = StrategyProfile::new(strategies);
                    let candidates = quantile_grid(&d, *grid);
                    let scans = [0, n - 1]
                        .iter()
                        .map(|&p| deviation_scan(&profile, p, &candidates, cost, &prizes, &d, &cfg))
                        .collect::<seqsearch::Result<Vec<_>>>()?;
                    (json!(eq), scans)
                }
                Family::Finite => {
                    let eq = solve_k_draw(FiniteHorizonParams::new(n, cost / prize, *draws)?)?;
                    if !eq.exists {
                        eprintln!("no finite-horizon equilibrium at these parameters");
                        return Ok(Outcome::NoEquilibrium);
                    }
                    let ts: Vec<f64> = eq.round_quantiles.iter().map(|&a| d.quantile(a)).collect();
                    let profile = StrategyProfile::finite_symmetric(n, ts.clone());
                    let candidates = first_round_grid(&d, &ts[1..], *grid);
                    let s = deviation_scan(&profile, 0, &candidates, cost, &prizes, &d, &cfg)?;
                    (json!(eq), vec![s])
                }
            };
            let checks = scan_checks(&scans);
            let family_name = match family {
                Family::Symmetric => "symmetric",
                Family::Asymmetric => "asymmetric",
                Family::Finite => "finite",
            };
            let mut m = with_dist(
                manifest(
                    "verify best_response",
                    json!({"family": family_name, "n_players": n, "cost": cost, "prize": prize, "draws": draws, "grid": grid}),
                    g,
                ),
                &d,
            );
            m.seed = Some(g.seed);
            finish(g, m, checks, json!({"equilibrium": equilibrium, "scans": scans}))
        }
        VerifyCmd::DesignerFoc { designer: a, step } => {
            let d = a.dist.load()?;
            let params = DesignerParams::new(a.m, a.team, a.cost, a.meta_prize)?;
            let r = verify_designer_foc(&params, &d, *step)?;
            if let Some(w) = &r.warning {
                eprintln!("warning: {w}");
            }
            let checks = vec![
                (
                    format!("derivative relative error {:.2e} below 1e-4", r.relative_error),
                    r.relative_error < 1e-4,
                ),
                (
                    format!("winning probability {:.12} equals 1/M", r.win_prob_at_equilibrium),
                    (r.win_prob_at_equilibrium - r.win_prob_expected).abs() < 1e-10,
                ),
            ];
            let m = with_dist(manifest("verify designer_foc", json!({"params": params, "step": step}), g), &d);
            finish(g, m, checks, r)
        }
        VerifyCmd::Recall { contest: a, reps } => {
            let d = a.dist.load()?;
            let params = ContestParams::new(a.n, a.cost, a.prize)?;
            let mut cfg = SimulationConfig::new(*reps, g.seed);
            cfg.parallel = !g.sequential;
            let r = recall_irrelevance_check(&params, &d, &cfg)?;
            let checks = vec![
                (
                    format!("KS {:.5} below 1% critical value {:.5}", r.ks_statistic, r.critical_value_1pct),
                    r.pass,
                ),
                (
                    format!("{} replications changed by recall on the same draws", r.pathwise_differences),
                    r.pathwise_differences == 0,
                ),
            ];
            let mut m = with_dist(manifest("verify recall", json!(params), g), &d);
            m.seed = Some(g.seed);
            finish(g, m, checks, r)
        }
    }
}
