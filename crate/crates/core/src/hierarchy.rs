//! Designer competition: `M` designers each fund an internal prize for a team
//! of `N` workers, and the designer whose best worker has the highest accepted
//! value wins the meta-prize `Omega`.
//!
//! Within each team workers play the symmetric equilibrium, so a designer's
//! internal prize is equivalent to a choice of team threshold `b_m` with
//! `W_m = N c / (1 - F(b_m))`.

use serde::Serialize;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::numeric::{integrate_with, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignerParams {
    pub n_designers: usize,
    pub team_size: usize,
    pub cost: f64,
    pub meta_prize: f64,
}

impl DesignerParams {
    pub fn new(n_designers: usize, team_size: usize, cost: f64, meta_prize: f64) -> Result<Self> {
        if n_designers < 2 {
            return Err(Error::invalid(format!("need at least two designers, got {n_designers}")));
        }
        if team_size < 1 {
            return Err(Error::invalid("team size must be at least one"));
        }
        if !(cost.is_finite() && cost > 0.0) {
            return Err(Error::invalid(format!("cost must be positive, got {cost}")));
        }
        if !(meta_prize.is_finite() && meta_prize > 0.0) {
            return Err(Error::invalid(format!("meta-prize must be positive, got {meta_prize}")));
        }
        Ok(DesignerParams {
            n_designers,
            team_size,
            cost,
            meta_prize,
        })
    }

    /// Equilibrium acceptance probability `c M (N M - 1) / (Omega (M - 1))`.
    pub fn acceptance_prob(&self) -> f64 {
        let m = self.n_designers as f64;
        let n = self.team_size as f64;
        self.cost * m * (n * m - 1.0) / (self.meta_prize * (m - 1.0))
    }

    pub fn is_viable(&self) -> bool {
        self.acceptance_prob() < 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignerEquilibrium {
    pub threshold: f64,
    pub threshold_quantile: f64,
    pub acceptance_prob: f64,
    pub internal_prize: f64,
    pub designer_value: f64,
    pub dissipation_ratio: f64,
    /// Acceptance quantile if all `N M` workers competed directly for `Omega`;
    /// `None` when that contest is not viable.
    pub individual_quantile: Option<f64>,
}

pub fn solve_designer(params: &DesignerParams, d: &Distribution) -> Result<DesignerEquilibrium> {
    let p = params.acceptance_prob();
    if p >= 1.0 {
        return Err(Error::NotViable(format!(
            "designer acceptance probability {p} is not below one; no interior threshold"
        )));
    }
    let m = params.n_designers as f64;
    let n = params.team_size as f64;
    let q = 1.0 - p;
    let individual = 1.0 - n * m * params.cost / params.meta_prize;
    Ok(DesignerEquilibrium {
        threshold: d.quantile(q),
        threshold_quantile: q,
        acceptance_prob: p,
        internal_prize: n * params.cost / p,
        designer_value: params.meta_prize * (n - 1.0) / (m * (n * m - 1.0)),
        dissipation_ratio: n * (m - 1.0) / (n * m - 1.0),
        individual_quantile: (individual >= 0.0).then_some(individual),
    })
}

/// Winning probability of a designer using team quantile `q_dev` against
/// `M - 1` rivals at `q`, integrated in quantile space.
pub fn deviation_win_prob(params: &DesignerParams, q: f64, q_dev: f64) -> Result<f64> {
    let rivals = (params.team_size * (params.n_designers - 1)) as i32;
    let n = params.team_size as i32;
    let lower = q.max(q_dev);
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-14,
        max_intervals: 400,
    };
    integrate_with(
        |u| {
            let g = (u - q) / (1.0 - q);
            let g_dev = (u - q_dev) / (1.0 - q_dev);
            g.powi(rivals) * n as f64 * g_dev.powi(n - 1) / (1.0 - q_dev)
        },
        lower,
        1.0,
        opts,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FocReport {
    pub threshold: f64,
    pub step: f64,
    pub win_prob_at_equilibrium: f64,
    pub win_prob_expected: f64,
    pub derivative_fd: f64,
    pub derivative_closed_form: f64,
    pub relative_error: f64,
    /// `Omega` times the finite-difference derivative.
    pub marginal_benefit: f64,
    /// `N c f(b) / (1 - F(b))^2`.
    pub marginal_cost: f64,
    pub foc_relative_error: f64,
    pub warning: Option<String>,
}

/// Finite-difference check of the winning-probability derivative at the
/// designer equilibrium. `step` is in quantile units and is converted to a
/// value step through the density at the threshold; the central difference
/// is Richardson-extrapolated from steps `h` and `h/2`.
pub fn verify_designer_foc(params: &DesignerParams, d: &Distribution, step: f64) -> Result<FocReport> {
    let eq = solve_designer(params, d)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid(format!("step must be positive, got {step}")));
    }
    let warning = if step > 1e-2 {
        Some(format!("step {step} is large; truncation error may dominate"))
    } else if step < 1e-8 {
        Some(format!("step {step} is small; rounding error may dominate"))
    } else {
        None
    };
    let b = eq.threshold;
    let q = eq.threshold_quantile;
    let f_b = d.density(b);
    let h = step / f_b;
    if b - h <= d.support_lower() {
        return Err(Error::invalid(format!(
            "step {step} reaches below the support at threshold {b}"
        )));
    }
    let p_at = |x: f64| deviation_win_prob(params, q, d.cdf(x));
    let central = |h: f64| -> Result<f64> { Ok((p_at(b + h)? - p_at(b - h)?) / (2.0 * h)) };
    let d1 = central(h)?;
    let d2 = central(0.5 * h)?;
    let fd = (4.0 * d2 - d1) / 3.0;

    let m = params.n_designers as f64;
    let n = params.team_size as f64;
    let survival = d.survival(b);
    let closed = n * f_b * (m - 1.0) / (survival * m * (n * m - 1.0));
    let marginal_benefit = params.meta_prize * fd;
    let marginal_cost = n * params.cost * f_b / (survival * survival);
    Ok(FocReport {
        threshold: b,
        step,
        win_prob_at_equilibrium: deviation_win_prob(params, q, q)?,
        win_prob_expected: 1.0 / m,
        derivative_fd: fd,
        derivative_closed_form: closed,
        relative_error: ((fd - closed) / closed).abs(),
        marginal_benefit,
        marginal_cost,
        foc_relative_error: ((marginal_benefit - marginal_cost) / marginal_cost).abs(),
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargeMarketRow {
    #[serde(rename = "M")]
    pub n_designers: usize,
    pub accept_prob: f64,
    pub limit_gap: f64,
}

/// Designer acceptance probability with the per-designer prize `omega` held
/// fixed, and its distance from the individual-competition value `N c / omega`.
pub fn large_market_limit(
    team_size: usize,
    cost: f64,
    per_designer_prize: f64,
    m_range: std::ops::RangeInclusive<usize>,
) -> Result<Vec<LargeMarketRow>> {
    if *m_range.start() < 2 {
        return Err(Error::invalid("the designer range must start at two or more"));
    }
    let n = team_size as f64;
    let limit = n * cost / per_designer_prize;
    m_range
        .map(|m| {
            let params = DesignerParams::new(m, team_size, cost, per_designer_prize * m as f64)?;
            let accept = params.acceptance_prob();
            Ok(LargeMarketRow {
                n_designers: m,
                accept_prob: accept,
                limit_gap: (accept - limit).abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_exponential, make_uniform};
    use crate::equilibrium::{solve_symmetric, ContestParams};

    #[test]
    fn single_worker_teams_reduce_to_individual_contest() {
        let u = make_uniform(0.0, 1.0).unwrap();
        let eq = solve_designer(&DesignerParams::new(2, 1, 0.1, 1.0).unwrap(), &u).unwrap();
        assert!((eq.threshold_quantile - 0.8).abs() < 1e-12);
        let sym = solve_symmetric(&ContestParams::new(2, 0.1, 1.0).unwrap(), &u).unwrap();
        assert!((eq.threshold_quantile - sym.threshold_quantile).abs() < 1e-12);
        assert_eq!(eq.designer_value, 0.0);
        assert!((eq.dissipation_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corollary_values() {
        let u = make_uniform(0.0, 1.0).unwrap();
        let eq = solve_designer(&DesignerParams::new(2, 2, 0.05, 1.0).unwrap(), &u).unwrap();
        assert!((eq.dissipation_ratio - 2.0 / 3.0).abs() < 1e-12);
        assert!((eq.designer_value - 1.0 / 6.0).abs() < 1e-12);
        assert!((eq.acceptance_prob - 0.3).abs() < 1e-12);
        assert!((eq.internal_prize - 2.0 * 0.05 / 0.3).abs() < 1e-12);
        assert!(eq.threshold_quantile < eq.individual_quantile.unwrap());
    }

    #[test]
    fn not_viable() {
        let u = make_uniform(0.0, 1.0).unwrap();
        let err = solve_designer(&DesignerParams::new(2, 2, 0.4, 1.0).unwrap(), &u).unwrap_err();
        assert!(matches!(err, Error::NotViable(_)));
    }

    #[test]
    fn symmetric_win_prob_is_one_over_m() {
        for m in 2..5 {
            let p = DesignerParams::new(m, 3, 0.01, 1.0).unwrap();
            let q = 1.0 - p.acceptance_prob();
            assert!((deviation_win_prob(&p, q, q).unwrap() - 1.0 / m as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn foc_finite_difference() {
        let p = DesignerParams::new(2, 2, 0.05, 1.0).unwrap();
        let r = verify_designer_foc(&p, &make_uniform(0.0, 1.0).unwrap(), 1e-5).unwrap();
        assert!(r.relative_error < 1e-4, "{r:?}");
        assert!(r.foc_relative_error < 1e-3, "{r:?}");
        let p = DesignerParams::new(3, 2, 0.05, 1.0).unwrap();
        let r = verify_designer_foc(&p, &make_exponential(1.0).unwrap(), 1e-5).unwrap();
        assert!(r.relative_error < 1e-4, "{r:?}");
        assert!(r.warning.is_none());
    }

    #[test]
    fn large_market() {
        let rows = large_market_limit(2, 0.05, 1.0, 2..=1000).unwrap();
        assert!((rows[0].accept_prob - 0.15).abs() < 1e-12);
        assert!((rows.last().unwrap().accept_prob - 0.1).abs() < 1e-3);
        assert!(rows.windows(2).all(|w| w[1].limit_gap <= w[0].limit_gap));
    }
}
