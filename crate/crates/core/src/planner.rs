//! Welfare benchmark: a planner picks the common threshold `b` to maximise the
//! expected best value net of total search cost, and the efficient prize is
//! the prize whose competitive threshold coincides with that choice.
//!
//! Unlike the contest equilibrium, the planner's optimum depends on `F`.
//! Integrals over `[b, K)` are taken in quantile space with `u = 1 - s^2`, so
//! heavy upper tails become bounded (or mildly singular) integrands on [0, 1].

use serde::Serialize;

use crate::dist::Distribution;
use crate::equilibrium::{solve_symmetric, ContestParams};
use crate::error::{Error, Result};
use crate::numeric::{brent, integrate_with, QuadOptions};

const QUAD: QuadOptions = QuadOptions {
    abs_tol: 1e-14,
    rel_tol: 1e-13,
    max_intervals: 4000,
};

fn check_inputs(n_players: usize, cost: f64, d: &Distribution) -> Result<()> {
    if n_players < 1 {
        return Err(Error::invalid("need at least one player"));
    }
    if !(cost.is_finite() && cost >= 0.0) {
        return Err(Error::invalid(format!("cost must be nonnegative, got {cost}")));
    }
    if d.mean().is_none() {
        return Err(Error::DivergentObjective(format!(
            "{d} has no finite mean, so the expected best value diverges"
        )));
    }
    Ok(())
}

/// `int_0^1 g(u, 1 - u, x(u)) du` with `x(u) = F^{-1}(q + (1 - q) u)`,
/// substituting `u = 1 - s^2`.
fn quantile_integral<G: Fn(f64, f64, f64) -> f64>(d: &Distribution, q: f64, g: G) -> Result<f64> {
    let tail = 1.0 - q;
    integrate_with(
        |s| {
            let one_minus_u = s * s;
            let x = d.inverse_survival(tail * one_minus_u);
            2.0 * s * g(1.0 - one_minus_u, one_minus_u, x)
        },
        0.0,
        1.0,
        QUAD,
    )
}

/// `1 - u^N` computed from `1 - u` without cancellation.
fn one_minus_pow(one_minus_u: f64, n: usize) -> f64 {
    -((n as f64) * (-one_minus_u).ln_1p()).exp_m1()
}

/// Expected maximum of `N` draws from `F` truncated below at `b`.
pub fn expected_max(b: f64, n_players: usize, d: &Distribution) -> Result<f64> {
    if d.mean().is_none() {
        return Err(Error::DivergentObjective(format!("{d} has no finite mean")));
    }
    let q = d.cdf(b);
    if q >= 1.0 - 1e-12 {
        return Err(Error::DegenerateTruncation { threshold: b, cdf: q });
    }
    let b = b.max(d.support_lower());
    let tail = 1.0 - q;
    Ok(b + quantile_integral(d, q, |_, omu, x| one_minus_pow(omu, n_players) * tail / d.density(x))?)
}

/// Expected best value minus expected total search cost `N c / (1 - F(b))`.
pub fn planner_welfare(b: f64, n_players: usize, cost: f64, d: &Distribution) -> Result<f64> {
    check_inputs(n_players, cost, d)?;
    let e_max = expected_max(b, n_players, d)?;
    Ok(e_max - n_players as f64 * cost / d.survival(b.max(d.support_lower())))
}

/// Marginal value of raising the quantile threshold, less the cost:
/// `int_b^K G(x)^{N-1} (1 - F(x)) dx - c` in quantile coordinates.
fn foc_residual_at(q: f64, n_players: usize, cost: f64, d: &Distribution) -> Result<f64> {
    let tail = 1.0 - q;
    let m = (n_players - 1) as i32;
    let v = quantile_integral(d, q, |u, omu, x| u.powi(m) * tail * omu * tail / d.density(x))?;
    Ok(v - cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlannerSolution {
    pub n_players: usize,
    pub cost: f64,
    pub threshold: f64,
    pub threshold_quantile: f64,
    pub welfare: f64,
    pub efficient_prize: f64,
    pub acceptance_prob: f64,
    pub foc_residual: f64,
    /// True when the optimum sits at the lower end of the support.
    pub corner: bool,
    pub roots_found: usize,
}

fn quantile_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..128).map(|i| i as f64 / 128.0).collect();
    g.extend((1..=128).map(|j| 1.0 - 10f64.powf(-12.0 * j as f64 / 128.0)));
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g.dedup();
    g
}

/// Planner's optimal threshold. First-order roots are bracketed on a
/// 256-point quantile grid and refined; the reported optimum is the candidate
/// (roots plus the lower corner) with the highest welfare.
pub fn solve_planner(n_players: usize, cost: f64, d: &Distribution) -> Result<PlannerSolution> {
    check_inputs(n_players, cost, d)?;
    if cost <= 0.0 {
        return Err(Error::invalid("the planner problem needs a positive search cost"));
    }
    let grid = quantile_grid();
    let mut values = Vec::with_capacity(grid.len());
    for &q in &grid {
        values.push(foc_residual_at(q, n_players, cost, d)?);
    }
    let mut roots = Vec::new();
    for i in 1..grid.len() {
        let (v0, v1) = (values[i - 1], values[i]);
        if v1 == 0.0 {
            roots.push(grid[i]);
        } else if v0 != 0.0 && (v0 < 0.0) != (v1 < 0.0) {
            let root = brent(
                |q| foc_residual_at(q, n_players, cost, d).unwrap_or(f64::NAN),
                grid[i - 1],
                grid[i],
                1e-17,
            )?;
            roots.push(root);
        }
    }
    let lower = d.support_lower();
    let mut best = (0.0, planner_welfare(lower, n_players, cost, d)?, true);
    for &q in &roots {
        let w = planner_welfare(d.quantile(q), n_players, cost, d)?;
        if w > best.1 {
            best = (q, w, false);
        }
    }
    let (q, welfare, corner) = best;
    let accept = 1.0 - q;
    Ok(PlannerSolution {
        n_players,
        cost,
        threshold: if corner { lower } else { d.quantile(q) },
        threshold_quantile: q,
        welfare,
        efficient_prize: n_players as f64 * cost / accept,
        acceptance_prob: accept,
        foc_residual: foc_residual_at(q, n_players, cost, d)?,
        corner,
        roots_found: roots.len(),
    })
}

/// Efficient prize by the hazard-rate route:
/// `N int_0^1 u^{N-1} / h(x*(u)) du` along the planner's search region.
pub fn efficient_prize_integral(n_players: usize, cost: f64, d: &Distribution) -> Result<f64> {
    let sol = solve_planner(n_players, cost, d)?;
    let m = (n_players - 1) as i32;
    let n = n_players as f64;
    let v = quantile_integral(d, sol.threshold_quantile, |u, _, x| {
        let h = d.hazard(x);
        n * u.powi(m) / h
    })?;
    if !v.is_finite() {
        return Err(Error::numeric("efficient prize integral", "hazard evaluation produced a non-finite value"));
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchClass {
    Oversearch,
    Efficient,
    Undersearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrizeClassification {
    pub class: SearchClass,
    pub prize: f64,
    pub efficient_prize: f64,
    pub competitive_threshold: f64,
    pub planner_threshold: f64,
    /// Competitive minus planner threshold.
    pub threshold_gap: f64,
}

/// Compares the competitive threshold at `prize` with the planner's optimum.
pub fn classify_prize(prize: f64, n_players: usize, cost: f64, d: &Distribution) -> Result<PrizeClassification> {
    let params = ContestParams::new(n_players, cost, prize)?;
    if !params.is_viable() {
        return Err(Error::NotViable(format!(
            "N*c = {} is not below the prize {prize}",
            n_players as f64 * cost
        )));
    }
    let eq = solve_symmetric(&params, d)?;
    let sol = solve_planner(n_players, cost, d)?;
    let dq = eq.threshold_quantile - sol.threshold_quantile;
    let class = if dq.abs() <= 1e-12 {
        SearchClass::Efficient
    } else if dq > 0.0 {
        SearchClass::Oversearch
    } else {
        SearchClass::Undersearch
    };
    Ok(PrizeClassification {
        class,
        prize,
        efficient_prize: sol.efficient_prize,
        competitive_threshold: eq.threshold,
        planner_threshold: sol.threshold,
        threshold_gap: eq.threshold - sol.threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HazardOrderReport {
    pub grid_points: usize,
    pub range: (f64, f64),
    /// Whether `h_1(x) >= h_2(x)` at every grid point.
    pub dominance_holds: bool,
    pub first_violation: Option<f64>,
    pub efficient_prize_1: f64,
    pub efficient_prize_2: f64,
    /// `W*_1 <= W*_2`; only implied by the hazard order when dominance holds.
    pub prize_order_holds: bool,
    /// Dominance holds but the prize order does not.
    pub contradiction: bool,
}

/// Checks pointwise hazard dominance of `d1` over `d2` on the common support
/// and the implied ordering of efficient prizes.
pub fn hazard_order_check(
    d1: &Distribution,
    d2: &Distribution,
    n_players: usize,
    cost: f64,
    grid: usize,
) -> Result<HazardOrderReport> {
    if grid == 0 {
        return Err(Error::invalid("grid must have at least one point"));
    }
    let lo = d1.support_lower().max(d2.support_lower());
    let far = 1.0 - 1e-9;
    let hi = d1.support_upper().min(d2.support_upper()).min(d1.quantile(far).max(d2.quantile(far)));
    if hi.is_nan() || hi <= lo {
        return Err(Error::invalid("the two supports do not overlap"));
    }
    // points at evenly spaced quantiles of each distribution, so both bodies
    // and the start of a long tail are covered
    let mut points: Vec<f64> = (0..grid)
        .flat_map(|i| {
            let u = (i as f64 + 0.5) / grid as f64;
            [d1.quantile(u), d2.quantile(u), lo + (hi - lo) * u]
        })
        .filter(|x| *x >= lo && *x < hi)
        .collect();
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    let mut first_violation = None;
    for &x in &points {
        let (h1, h2) = (d1.hazard(x), d2.hazard(x));
        if h1 < h2 * (1.0 - 1e-12) {
            first_violation = Some(x);
            break;
        }
    }
    let w1 = solve_planner(n_players, cost, d1)?.efficient_prize;
    let w2 = solve_planner(n_players, cost, d2)?.efficient_prize;
    let dominance = first_violation.is_none();
    let order = w1 <= w2 * (1.0 + 1e-12);
    Ok(HazardOrderReport {
        grid_points: points.len(),
        range: (lo, hi),
        dominance_holds: dominance,
        first_violation,
        efficient_prize_1: w1,
        efficient_prize_2: w2,
        prize_order_holds: order,
        contradiction: dominance && !order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_exponential, make_pareto, make_uniform};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn welfare_examples() {
        let u = make_uniform(0.0, 1.0).unwrap();
        assert!((planner_welfare(0.0, 1, 0.0, &u).unwrap() - 0.5).abs() < 1e-12);
        assert!((planner_welfare(0.0, 2, 0.1, &u).unwrap() - (2.0 / 3.0 - 0.2)).abs() < 1e-12);
        assert!((planner_welfare(0.5, 2, 0.1, &u).unwrap() - (0.5 + 0.5 * 2.0 / 3.0 - 0.4)).abs() < 1e-12);
    }

    #[test]
    fn expected_max_of_heavy_tails() {
        // E[max of 2 Pareto(2,1)] = 2 * 2 * 2 / (2*2 - 1) * ... = 8/3 by the order-statistic integral
        let p = make_pareto(2.0, 1.0).unwrap();
        assert!((expected_max(1.0, 2, &p).unwrap() - 8.0 / 3.0).abs() < 1e-10);
        let e = make_exponential(1.0).unwrap();
        assert!((expected_max(0.0, 2, &e).unwrap() - 1.5).abs() < 1e-12);
        let heavy = make_pareto(1.0, 1.0).unwrap();
        assert!(matches!(planner_welfare(1.0, 2, 0.1, &heavy), Err(Error::DivergentObjective(_))));
    }

    #[test]
    fn closed_forms_n2() {
        let u = solve_planner(2, 0.1, &make_uniform(0.0, 1.0).unwrap()).unwrap();
        assert!(rel(u.threshold, 1.0 - 0.6f64.sqrt()) < 1e-9);
        assert!(rel(u.efficient_prize, (0.2f64 / 3.0).sqrt()) < 1e-9);
        let e = solve_planner(2, 0.1, &make_exponential(1.0).unwrap()).unwrap();
        assert!(rel(e.threshold, 5f64.ln()) < 1e-9);
        assert!(rel(e.efficient_prize, 1.0) < 1e-9);
        let p = solve_planner(2, 0.1, &make_pareto(2.0, 1.0).unwrap()).unwrap();
        assert!(rel(p.threshold, 2.0 / 0.3) < 1e-9, "{p:?}");
        assert!(rel(p.efficient_prize, 8.0 / 0.9) < 1e-9, "{p:?}");
        assert!(p.foc_residual.abs() < 1e-9);
    }

    #[test]
    fn uniform_corner_when_search_is_too_costly() {
        // c N (N + 1) >= 1
        let s = solve_planner(2, 0.2, &make_uniform(0.0, 1.0).unwrap()).unwrap();
        assert!(s.corner);
        assert_eq!(s.threshold, 0.0);
    }

    #[test]
    fn hazard_route_matches() {
        for d in [
            make_uniform(0.0, 1.0).unwrap(),
            make_exponential(1.0).unwrap(),
            make_pareto(2.0, 1.0).unwrap(),
        ] {
            let a = solve_planner(2, 0.1, &d).unwrap().efficient_prize;
            let b = efficient_prize_integral(2, 0.1, &d).unwrap();
            assert!(rel(b, a) < 1e-6, "{d}: {a} vs {b}");
        }
    }

    #[test]
    fn classification() {
        let u = make_uniform(0.0, 1.0).unwrap();
        assert_eq!(classify_prize(1.0, 2, 0.1, &u).unwrap().class, SearchClass::Oversearch);
        let w_star = solve_planner(2, 0.1, &u).unwrap().efficient_prize;
        let c = classify_prize(w_star, 2, 0.1, &u).unwrap();
        assert_eq!(c.class, SearchClass::Efficient);
        assert!(c.threshold_gap.abs() < 1e-9);
        let p = make_pareto(2.0, 1.0).unwrap();
        assert_eq!(classify_prize(1.0, 2, 0.1, &p).unwrap().class, SearchClass::Undersearch);
        assert!(matches!(classify_prize(0.1, 2, 0.1, &u), Err(Error::NotViable(_))));
    }

    #[test]
    fn hazard_order() {
        let u = make_uniform(0.0, 1.0).unwrap();
        let e = make_exponential(1.0).unwrap();
        let p = make_pareto(2.0, 1.0).unwrap();
        let r = hazard_order_check(&u, &e, 2, 0.1, 1000).unwrap();
        assert!(r.dominance_holds && r.prize_order_holds);
        let r = hazard_order_check(&e, &p, 2, 0.1, 1000).unwrap();
        assert!(!r.dominance_holds);
        assert!(r.first_violation.unwrap() < 2.0);
        assert!(r.prize_order_holds);
        let r = hazard_order_check(&e, &e, 2, 0.1, 100).unwrap();
        assert!(r.dominance_holds && r.efficient_prize_1 == r.efficient_prize_2);
    }
}
