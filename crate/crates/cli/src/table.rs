use serde::Serialize;
use serde_json::json;
use seqsearch::finite::round3;
use seqsearch::output::{write_finite_table, write_profile, write_records};
use seqsearch::*;
use std::result::Result;

use crate::args::{Global, TableCmd};
use crate::emit::{csv, manifest};
use crate::{CliError, Outcome};

const RATIOS: [f64; 3] = [0.0, 0.05, 0.1];

#[derive(Serialize)]
struct WelfareRow {
    distribution: String,
    efficient_prize_3dp: f64,
    efficient_prize: f64,
    planner_threshold: f64,
    welfare: f64,
    integral_form: f64,
}

fn finite(k: usize, g: &Global) -> Result<Outcome, CliError> {
    let profiles = RATIOS
        .iter()
        .map(|&r| threshold_profile_with(!g.sequential, k, r, 2..=9))
        .collect::<seqsearch::Result<Vec<_>>>()?;
    let m = manifest(
        &format!("table finite_k{k}"),
        json!({"n_draws": k, "cost_ratios": RATIOS, "n_range": [2, 9]}),
        g,
    );
    csv(g, m, |w| write_finite_table(&profiles, w), Some(&profiles))?;
    Ok(Outcome::Done)
}

pub fn run(cmd: &TableCmd, g: &Global) -> Result<Outcome, CliError> {
    match cmd {
        TableCmd::FiniteK2 => finite(2, g),
        TableCmd::FiniteK3 => finite(3, g),
        TableCmd::WelfareExamples { n, cost } => {
            let families = [
                ("uniform", make_uniform(0.0, 1.0)?),
                ("exponential", make_exponential(1.0)?),
                ("pareto", make_pareto(2.0, 1.0)?),
            ];
            let rows = families
                .iter()
                .map(|(name, d)| {
                    let s = solve_planner(*n, *cost, d)?;
                    Ok(WelfareRow {
                        distribution: name.to_string(),
                        efficient_prize_3dp: round3(s.efficient_prize),
                        efficient_prize: s.efficient_prize,
                        planner_threshold: s.threshold,
                        welfare: s.welfare,
                        integral_form: efficient_prize_integral(*n, *cost, d)?,
                    })
                })
                .collect::<seqsearch::Result<Vec<_>>>()?;
            let m = manifest("table welfare_examples", json!({"n_players": n, "cost": cost}), g);
            csv(g, m, |w| write_records(&rows, w), None::<&()>)?;
            Ok(Outcome::Done)
        }
        TableCmd::Profile {
            draws,
            cost_ratio,
            n_min,
            n_max,
        } => {
            if n_min > n_max {
                return Err(CliError::Usage(format!("--n-min {n_min} exceeds --n-max {n_max}")));
            }
            let p = threshold_profile_with(!g.sequential, *draws, *cost_ratio, *n_min..=*n_max)?;
            let m = manifest(
                "table profile",
                json!({"n_draws": draws, "cost_ratio": cost_ratio, "n_range": [n_min, n_max]}),
                g,
            );
            csv(g, m, |w| write_profile(&p, w), Some(&p))?;
            Ok(Outcome::Done)
        }
        TableCmd::LargeMarket {
            team,
            cost,
            per_designer_prize,
            m_max,
        } => {
            let rows = large_market_limit(*team, *cost, *per_designer_prize, 2..=*m_max)?;
            let m = manifest(
                "table large_market",
                json!({"team_size": team, "cost": cost, "per_designer_prize": per_designer_prize, "m_range": [2, m_max]}),
                g,
            );
            csv(g, m, |w| write_records(&rows, w), None::<&()>)?;
            Ok(Outcome::Done)
        }
    }
}
