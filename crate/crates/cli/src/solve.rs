use serde_json::json;
use seqsearch::*;
use std::result::Result;

use crate::args::{Global, SolveCmd};
use crate::emit::{json, manifest, with_dist};
use crate::{CliError, Outcome};

fn parse_prizes(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad prize value '{s}'")))
        })
        .collect()
}

pub fn run(cmd: &SolveCmd, g: &Global) -> Result<Outcome, CliError> {
    match cmd {
        SolveCmd::Symmetric(a) => {
            let d = a.dist.load()?;
            let params = ContestParams::new(a.n, a.cost, a.prize)?;
            let eq = solve_symmetric(&params, &d)?;
            let summary = format!(
                "symmetric equilibrium: threshold {:.6} (quantile {:.6}), acceptance probability {:.6}, expected draws {:.4}\n",
                eq.threshold, eq.threshold_quantile, eq.acceptance_prob, eq.expected_draws
            );
            let m = with_dist(manifest("solve symmetric", json!(params), g), &d);
            json(g, m, &eq, &summary)?;
        }
        SolveCmd::Multiprize {
            n,
            cost,
            prizes,
            linear,
            dist,
        } => {
            let d = dist.load()?;
            let schedule = match (prizes, linear) {
                (Some(p), _) => PrizeSchedule::new(parse_prizes(p)?)?,
                (None, Some(a)) => PrizeSchedule::linear(*n, *a)?,
                (None, None) => return Err(CliError::Usage("give --prizes or --linear".into())),
            };
            let eq = solve_multiprize(*n, *cost, &schedule, &d)?;
            let summary = format!(
                "multi-prize equilibrium: threshold {:.6}, player value {:.6}, dissipation {:.6}\n",
                eq.threshold, eq.player_value, eq.dissipation_ratio
            );
            let m = with_dist(
                manifest(
                    "solve multiprize",
                    json!({"n_players": n, "cost": cost, "prizes": schedule.prizes()}),
                    g,
                ),
                &d,
            );
            json(g, m, &eq, &summary)?;
        }
        SolveCmd::Asymmetric(a) => {
            let d = a.dist.load()?;
            let params = ContestParams::new(a.n, a.cost, a.prize)?;
            let eq = solve_asymmetric(&params, &d)?;
            let summary = format!(
                "asymmetric equilibrium: low threshold {:.6}, high threshold {:.6}, high-player value {:.6}\n",
                eq.low_threshold, eq.high_threshold, eq.high_player_value
            );
            let m = with_dist(manifest("solve asymmetric", json!(params), g), &d);
            json(g, m, &eq, &summary)?;
        }
        SolveCmd::Finite {
            n,
            cost_ratio,
            draws,
            dist,
        } => {
            let d = dist.load()?;
            let params = FiniteHorizonParams::new(*n, *cost_ratio, *draws)?;
            let eq = solve_k_draw(params)?;
            let thresholds: Vec<f64> = eq.round_quantiles.iter().map(|&a| d.quantile(a)).collect();
            let result = json!({"equilibrium": eq, "round_thresholds": thresholds});
            let m = with_dist(manifest("solve finite", json!(params), g), &d);
            if !eq.exists {
                json(g, m, &result, "no finite-horizon equilibrium found\n")?;
                return Ok(Outcome::NoEquilibrium);
            }
            let qs: Vec<String> = eq.round_quantiles.iter().map(|a| format!("{a:.6}")).collect();
            let summary = format!(
                "finite-horizon equilibrium: round quantiles [{}], player value {:.6}\n",
                qs.join(", "),
                eq.player_value.unwrap_or(f64::NAN)
            );
            json(g, m, &result, &summary)?;
        }
        SolveCmd::Designer(a) => {
            let d = a.dist.load()?;
            let params = DesignerParams::new(a.m, a.team, a.cost, a.meta_prize)?;
            let eq = solve_designer(&params, &d)?;
            let summary = format!(
                "designer equilibrium: threshold {:.6}, internal prize {:.6}, designer value {:.6}, dissipation {:.6}\n",
                eq.threshold, eq.internal_prize, eq.designer_value, eq.dissipation_ratio
            );
            let m = with_dist(manifest("solve designer", json!(params), g), &d);
            json(g, m, &eq, &summary)?;
        }
        SolveCmd::Planner { n, cost, dist } => {
            let d = dist.load()?;
            let sol = solve_planner(*n, *cost, &d)?;
            let summary = format!(
                "planner: threshold {:.6}, welfare {:.6}, efficient prize W* = {:.6}\n",
                sol.threshold, sol.welfare, sol.efficient_prize
            );
            let m = with_dist(manifest("solve planner", json!({"n_players": n, "cost": cost}), g), &d);
            json(g, m, &sol, &summary)?;
        }
    }
    Ok(Outcome::Done)
}
