//! Infinite-horizon contest equilibria: symmetric single-prize, rank-order
//! multi-prize, and the two-threshold asymmetric family for three or more players.
//!
//! All solver arithmetic happens in quantile space `u = F(x)`; a `Distribution`
//! is consulted only to map the final acceptance quantile back to a threshold.

use serde::Serialize;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::numeric::{bisect, integrate_with, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContestParams {
    pub n_players: usize,
    /// Cost of one draw.
    pub cost: f64,
    /// Prize paid to the player with the highest accepted value.
    pub prize: f64,
}

impl ContestParams {
    pub fn new(n_players: usize, cost: f64, prize: f64) -> Result<Self> {
        if n_players < 2 {
            return Err(Error::invalid(format!("need at least two players, got {n_players}")));
        }
        if !(cost.is_finite() && cost > 0.0) {
            return Err(Error::invalid(format!("cost must be positive, got {cost}")));
        }
        if !(prize.is_finite() && prize > 0.0) {
            return Err(Error::invalid(format!("prize must be positive, got {prize}")));
        }
        Ok(ContestParams { n_players, cost, prize })
    }

    /// Strict viability `N c < W`.
    pub fn is_viable(&self) -> bool {
        self.n_players as f64 * self.cost < self.prize
    }

    /// Equilibrium probability that a single draw clears the threshold, `N c / W`.
    pub fn acceptance_prob(&self) -> f64 {
        self.n_players as f64 * self.cost / self.prize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricEquilibrium {
    pub threshold: f64,
    pub threshold_quantile: f64,
    pub acceptance_prob: f64,
    pub expected_draws: f64,
    pub expected_cost_per_player: f64,
    pub total_expected_cost: f64,
    pub dissipation_ratio: f64,
    pub player_value: f64,
}

/// Unique symmetric equilibrium: threshold `F^{-1}(1 - Nc/W)`.
///
/// The boundary `N c = W` is allowed and yields the lower support bound
/// (every player accepts the first draw).
pub fn solve_symmetric(params: &ContestParams, d: &Distribution) -> Result<SymmetricEquilibrium> {
    let n = params.n_players as f64;
    let p = params.acceptance_prob();
    if p > 1.0 {
        return Err(Error::NotViable(format!(
            "N*c = {} exceeds the prize {}; a single draw is worth W/N - c < 0",
            n * params.cost,
            params.prize
        )));
    }
    let q = 1.0 - p;
    let threshold = if p == 1.0 { d.support_lower() } else { d.quantile(q) };
    let expected_draws = 1.0 / p;
    let cost_per_player = params.cost * expected_draws;
    let total = n * cost_per_player;
    Ok(SymmetricEquilibrium {
        threshold,
        threshold_quantile: q,
        acceptance_prob: p,
        expected_draws,
        expected_cost_per_player: cost_per_player,
        total_expected_cost: total,
        dissipation_ratio: total / params.prize,
        // winning probability 1/N by symmetry, less expected search cost
        player_value: params.prize / n - cost_per_player,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StaticsRow {
    pub params: ContestParams,
    pub equilibrium: Option<SymmetricEquilibrium>,
    /// Set when the grid point is not viable.
    pub error: Option<String>,
}

/// Solves every grid point; non-viable points are flagged in their row.
pub fn comparative_statics(grid: &[ContestParams], d: &Distribution) -> Vec<StaticsRow> {
    grid.iter()
        .map(|p| match solve_symmetric(p, d) {
            Ok(eq) => StaticsRow {
                params: *p,
                equilibrium: Some(eq),
                error: None,
            },
            Err(e) => StaticsRow {
                params: *p,
                equilibrium: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

/// Rank-order prizes `W_1 >= W_2 >= ... >= W_N >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrizeSchedule {
    prizes: Vec<f64>,
}

impl PrizeSchedule {
    pub fn new(prizes: Vec<f64>) -> Result<Self> {
        if prizes.is_empty() {
            return Err(Error::invalid("prize schedule is empty"));
        }
        if prizes.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("prizes must be finite and nonnegative"));
        }
        if prizes.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("prizes must be sorted non-increasing"));
        }
        Ok(PrizeSchedule { prizes })
    }

    /// Winner takes `prize`, everyone else gets nothing.
    pub fn winner_take_all(n_players: usize, prize: f64) -> Result<Self> {
        let mut v = vec![0.0; n_players];
        if let Some(first) = v.first_mut() {
            *first = prize;
        }
        PrizeSchedule::new(v)
    }

    /// `W_k = a (N + 1 - k)`.
    pub fn linear(n_players: usize, step: f64) -> Result<Self> {
        PrizeSchedule::new((1..=n_players).map(|k| step * (n_players + 1 - k) as f64).collect())
    }

    pub fn prizes(&self) -> &[f64] {
        &self.prizes
    }

    pub fn len(&self) -> usize {
        self.prizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prizes.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.prizes.iter().sum::<f64>() / self.prizes.len() as f64
    }

    pub fn total(&self) -> f64 {
        self.prizes.iter().sum()
    }

    pub fn consolation(&self) -> f64 {
        *self.prizes.last().expect("non-empty")
    }

    /// Prize for finishing at zero-based rank `rank` (0 = best).
    pub fn prize_for_rank(&self, rank: usize) -> f64 {
        self.prizes[rank]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiPrizeEquilibrium {
    pub threshold: f64,
    pub threshold_quantile: f64,
    pub acceptance_prob: f64,
    pub expected_draws: f64,
    pub mean_prize: f64,
    pub consolation_prize: f64,
    pub player_value: f64,
    pub total_expected_cost: f64,
    pub dissipation_ratio: f64,
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    (1..=k).map(|i| ((n + 1 - i) as f64 / i as f64).ln()).sum()
}

/// Expected prize of a player stopping at truncated quantile `u`, when every
/// opponent's final quantile is uniform on [0, 1].
fn expected_prize_at(prizes: &PrizeSchedule, u: f64) -> f64 {
    let n = prizes.len();
    (1..=n)
        .map(|k| {
            let w = prizes.prize_for_rank(k - 1);
            if w == 0.0 {
                return 0.0;
            }
            let log_c = ln_binomial(n - 1, k - 1);
            w * log_c.exp() * u.powi((n - k) as i32) * (1.0 - u).powi((k - 1) as i32)
        })
        .sum()
}

/// Symmetric equilibrium with rank-order prizes: `1 - F(lambda) = c / (mean - W_N)`.
pub fn solve_multiprize(
    n_players: usize,
    cost: f64,
    prizes: &PrizeSchedule,
    d: &Distribution,
) -> Result<MultiPrizeEquilibrium> {
    if n_players < 2 {
        return Err(Error::invalid("need at least two players"));
    }
    if prizes.len() != n_players {
        return Err(Error::invalid(format!(
            "prize schedule has {} entries for {n_players} players",
            prizes.len()
        )));
    }
    if !(cost.is_finite() && cost > 0.0) {
        return Err(Error::invalid(format!("cost must be positive, got {cost}")));
    }
    let mean = prizes.mean();
    let last = prizes.consolation();
    let gap = mean - last;
    if gap <= 0.0 {
        return Err(Error::NoSearchIncentive);
    }
    let p = cost / gap;
    if p > 1.0 {
        return Err(Error::NotViable(format!(
            "cost {cost} exceeds the search incentive mean - W_N = {gap}"
        )));
    }
    let q = 1.0 - p;
    let threshold = if p == 1.0 { d.support_lower() } else { d.quantile(q) };
    // Bellman route: the per-player expected prize is integrated over the
    // truncated quantile; the player's value is that less the expected search cost.
    let opts = QuadOptions {
        abs_tol: 1e-13,
        ..QuadOptions::default()
    };
    let expected_prize = integrate_with(|u| expected_prize_at(prizes, u), 0.0, 1.0, opts)?;
    let expected_draws = 1.0 / p;
    let total_cost = n_players as f64 * cost * expected_draws;
    Ok(MultiPrizeEquilibrium {
        threshold,
        threshold_quantile: q,
        acceptance_prob: p,
        expected_draws,
        mean_prize: mean,
        consolation_prize: last,
        player_value: expected_prize - cost * expected_draws,
        total_expected_cost: total_cost,
        dissipation_ratio: total_cost / prizes.total(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymmetricDiagnostics {
    pub outer_grid_points: usize,
    pub high_quantile_upper_bound: f64,
    /// Residual of the high player's Bellman condition.
    pub residual_high: f64,
    /// Residual of the low players' zero-profit condition.
    pub residual_low: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymmetricEquilibrium {
    pub n_players: usize,
    /// Threshold shared by the `N - 1` low-threshold players.
    pub low_threshold: f64,
    pub high_threshold: f64,
    pub low_quantile: f64,
    pub high_quantile: f64,
    pub high_player_value: f64,
    pub low_player_value: f64,
    pub symmetric_threshold: f64,
    pub diagnostics: AsymmetricDiagnostics,
}

struct AsymmetricSystem {
    n: usize,
    cost: f64,
    prize: f64,
    opts: QuadOptions,
}

impl AsymmetricSystem {
    fn g(u: f64, q: f64) -> f64 {
        ((u - q) / (1.0 - q)).max(0.0)
    }

    /// Low player's zero-profit residual: `-c + W int_h^1 G_L^{N-2} G_H du`.
    fn low_residual(&self, l: f64, h: f64) -> Result<f64> {
        let m = (self.n - 2) as i32;
        let v = integrate_with(|u| Self::g(u, l).powi(m) * Self::g(u, h), h, 1.0, self.opts)?;
        Ok(-self.cost + self.prize * v)
    }

    /// High player's Bellman residual with `V_H = W G_L(h)^{N-1}`.
    fn high_residual(&self, l: f64, h: f64) -> Result<f64> {
        let m = (self.n - 1) as i32;
        let v_high = self.prize * Self::g(h, l).powi(m);
        let gain = integrate_with(|u| Self::g(u, l).powi(m), h, 1.0, self.opts)?;
        Ok(v_high * (1.0 - h) + self.cost - self.prize * gain)
    }

    /// Low quantile solving the zero-profit condition for a given high quantile.
    fn low_for_high(&self, h: f64) -> Result<Option<f64>> {
        let at_zero = self.low_residual(0.0, h)?;
        let at_h = self.low_residual(h, h)?;
        if at_zero < 0.0 || at_h > 0.0 {
            return Ok(None);
        }
        let mut err = None;
        let l = bisect(
            |l| match self.low_residual(l, h) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    f64::NAN
                }
            },
            0.0,
            h,
            1e-15,
        )?;
        match err {
            Some(e) => Err(e),
            None => Ok(Some(l)),
        }
    }
}

/// Two-threshold asymmetric equilibrium (one high-threshold player earning
/// rents, `N - 1` low-threshold players at zero profit).
///
/// Conditions, with `G_q(u) = (u - q)/(1 - q)` in quantile space:
/// the high player's value is `W G_L(h)^{N-1}` and satisfies her Bellman
/// equation; each low player breaks even on draws above `h`. Solved by nested
/// bisection: inner on the low quantile, outer on the high quantile.
pub fn solve_asymmetric(params: &ContestParams, d: &Distribution) -> Result<AsymmetricEquilibrium> {
    if params.n_players < 3 {
        return Err(Error::NoneExists(
            "with two players the symmetric equilibrium is the unique Nash equilibrium".into(),
        ));
    }
    if !params.is_viable() {
        return Err(Error::NotViable(format!(
            "N*c = {} is not below the prize {}",
            params.n_players as f64 * params.cost,
            params.prize
        )));
    }
    let sys = AsymmetricSystem {
        n: params.n_players,
        cost: params.cost,
        prize: params.prize,
        opts: QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            max_intervals: 200,
        },
    };
    let h_sym = 1.0 - params.acceptance_prob();

    // Largest high quantile for which a low quantile >= 0 exists.
    let h_max = bisect(
        |h| sys.low_residual(0.0, h).unwrap_or(f64::NAN),
        h_sym,
        1.0,
        1e-15,
    )?;

    const GRID: usize = 400;
    let outer = |h: f64| -> Result<Option<(f64, f64)>> {
        match sys.low_for_high(h)? {
            Some(l) => Ok(Some((sys.high_residual(l, h)?, l))),
            None => Ok(None),
        }
    };
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for i in 1..GRID {
        let h = h_sym + (h_max - h_sym) * i as f64 / GRID as f64;
        if let Some((r, _)) = outer(h)? {
            if let Some((h0, r0)) = prev {
                if r0 < 0.0 && r >= 0.0 || r0 > 0.0 && r <= 0.0 {
                    bracket = Some((h0, h));
                    break;
                }
            }
            prev = Some((h, r));
        }
    }
    let (lo, hi) = bracket.ok_or_else(|| {
        Error::numeric(
            "asymmetric solver",
            format!(
                "no sign change of the high-player condition on ({h_sym:.6}, {h_max:.6}) over {GRID} grid points; \
                 a two-threshold equilibrium was not found"
            ),
        )
    })?;
    let h = bisect(
        |h| match outer(h) {
            Ok(Some((r, _))) => r,
            _ => f64::NAN,
        },
        lo,
        hi,
        1e-14,
    )?;
    let l = sys
        .low_for_high(h)?
        .ok_or_else(|| Error::numeric("asymmetric solver", "inner solve failed at the root"))?;
    if !(l < h_sym && h_sym < h) {
        return Err(Error::numeric(
            "asymmetric solver",
            format!("solution ({l}, {h}) does not straddle the symmetric quantile {h_sym}"),
        ));
    }
    let v_high = params.prize * AsymmetricSystem::g(h, l).powi(params.n_players as i32 - 1);
    Ok(AsymmetricEquilibrium {
        n_players: params.n_players,
        low_threshold: d.quantile(l),
        high_threshold: d.quantile(h),
        low_quantile: l,
        high_quantile: h,
        high_player_value: v_high,
        low_player_value: 0.0,
        symmetric_threshold: d.quantile(h_sym),
        diagnostics: AsymmetricDiagnostics {
            outer_grid_points: GRID,
            high_quantile_upper_bound: h_max,
            residual_high: sys.high_residual(l, h)?,
            residual_low: sys.low_residual(l, h)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_exponential, make_pareto, make_uniform};

    fn uniform() -> Distribution {
        make_uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn symmetric_examples() {
        let eq = solve_symmetric(&ContestParams::new(2, 0.1, 1.0).unwrap(), &uniform()).unwrap();
        assert!((eq.threshold - 0.8).abs() < 1e-12);
        assert!((eq.acceptance_prob - 0.2).abs() < 1e-12);
        assert!((eq.expected_draws - 5.0).abs() < 1e-12);

        let eq = solve_symmetric(&ContestParams::new(3, 0.1, 1.0).unwrap(), &uniform()).unwrap();
        assert!((eq.threshold - 0.70).abs() < 1e-12);

        let e = make_exponential(1.0).unwrap();
        let eq = solve_symmetric(&ContestParams::new(2, 0.1, 1.0).unwrap(), &e).unwrap();
        assert!((eq.acceptance_prob - 0.2).abs() < 1e-12);
        assert!((eq.threshold - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_boundary_and_non_viable() {
        let eq = solve_symmetric(&ContestParams::new(2, 0.5, 1.0).unwrap(), &uniform()).unwrap();
        assert_eq!(eq.threshold, 0.0);
        assert_eq!(eq.expected_draws, 1.0);
        let p = make_pareto(2.0, 1.0).unwrap();
        let eq = solve_symmetric(&ContestParams::new(2, 0.5, 1.0).unwrap(), &p).unwrap();
        assert_eq!(eq.threshold, 1.0);
        let err = solve_symmetric(&ContestParams::new(2, 0.6, 1.0).unwrap(), &uniform()).unwrap_err();
        assert!(matches!(err, Error::NotViable(_)));
    }

    #[test]
    fn params_validation() {
        assert!(ContestParams::new(1, 0.1, 1.0).is_err());
        assert!(ContestParams::new(2, 0.0, 1.0).is_err());
        assert!(ContestParams::new(2, 0.1, -1.0).is_err());
        assert!(ContestParams::new(2, 0.1, 1.0).unwrap().is_viable());
        assert!(!ContestParams::new(2, 0.5, 1.0).unwrap().is_viable());
    }

    #[test]
    fn comparative_statics_flags_non_viable_rows() {
        let grid: Vec<_> = [2, 3, 4, 20]
            .iter()
            .map(|&n| ContestParams::new(n, 0.1, 1.0).unwrap())
            .collect();
        let rows = comparative_statics(&grid, &uniform());
        let ps: Vec<f64> = rows.iter().filter_map(|r| r.equilibrium.map(|e| e.acceptance_prob)).collect();
        assert_eq!(ps.len(), 3);
        assert!((ps[0] - 0.2).abs() < 1e-12 && (ps[1] - 0.3).abs() < 1e-12 && (ps[2] - 0.4).abs() < 1e-12);
        assert!(rows[3].error.is_some());
        for r in &rows[..3] {
            assert!((r.equilibrium.unwrap().total_expected_cost - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn multiprize_examples() {
        let u = uniform();
        let wta = PrizeSchedule::new(vec![1.0, 0.0]).unwrap();
        let eq = solve_multiprize(2, 0.1, &wta, &u).unwrap();
        assert!((eq.acceptance_prob - 0.2).abs() < 1e-12);
        assert!(eq.player_value.abs() < 1e-12);

        let lin = PrizeSchedule::new(vec![3.0, 2.0, 1.0]).unwrap();
        let eq = solve_multiprize(3, 0.1, &lin, &u).unwrap();
        assert!((eq.acceptance_prob - 0.1).abs() < 1e-12);
        assert!((eq.player_value - 1.0).abs() < 1e-12);
        assert!((eq.dissipation_ratio - 0.5).abs() < 1e-12);

        let flat = PrizeSchedule::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(solve_multiprize(3, 0.1, &flat, &u).unwrap_err(), Error::NoSearchIncentive);
        assert!(matches!(solve_multiprize(3, 5.0, &lin, &u), Err(Error::NotViable(_))));
        assert!(solve_multiprize(2, 0.1, &lin, &u).is_err());
        assert!(PrizeSchedule::new(vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn asymmetric_three_players() {
        let eq = solve_asymmetric(&ContestParams::new(3, 0.1, 1.0).unwrap(), &uniform()).unwrap();
        assert!((eq.low_threshold - 0.644).abs() < 2e-3, "{eq:?}");
        assert!((eq.high_threshold - 0.733).abs() < 2e-3, "{eq:?}");
        assert!((eq.high_player_value - 0.063).abs() < 2e-3, "{eq:?}");
        assert!(eq.diagnostics.residual_high.abs() < 1e-10);
        assert!(eq.diagnostics.residual_low.abs() < 1e-10);
    }

    #[test]
    fn asymmetric_requires_three_players() {
        let err = solve_asymmetric(&ContestParams::new(2, 0.1, 1.0).unwrap(), &uniform()).unwrap_err();
        assert!(matches!(err, Error::NoneExists(_)));
    }

    #[test]
    fn asymmetric_quantiles_are_distribution_free() {
        let params = ContestParams::new(4, 0.05, 1.0).unwrap();
        let a = solve_asymmetric(&params, &uniform()).unwrap();
        let b = solve_asymmetric(&params, &make_pareto(2.0, 1.0).unwrap()).unwrap();
        assert_eq!(a.low_quantile, b.low_quantile);
        assert_eq!(a.high_quantile, b.high_quantile);
        assert!(a.low_threshold < a.symmetric_threshold && a.symmetric_threshold < a.high_threshold);
    }
}
