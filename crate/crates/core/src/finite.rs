//! Finite-horizon contests: each player has at most `k` draws, no recall, and
//! must accept the last draw.
//!
//! A symmetric equilibrium is a vector of acceptance quantiles
//! `(a_1, ..., a_{k-1})`. Everything is expressed relative to `W`, so only the
//! cost ratio `r = c/W` matters and no `Distribution` is involved.
//!
//! Near the existence frontier the continuation values become tiny differences
//! of O(1) terms, so residuals are evaluated in double-double arithmetic with
//! exact integration of the piecewise-polynomial payoff `h(u)^{N-1}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::Dd;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteHorizonParams {
    pub n_players: usize,
    /// Cost per draw over the prize, `c/W`.
    pub cost_ratio: f64,
    /// Maximum number of draws `k`.
    pub n_draws: usize,
}

impl FiniteHorizonParams {
    pub fn new(n_players: usize, cost_ratio: f64, n_draws: usize) -> Result<Self> {
        if n_players < 2 {
            return Err(Error::invalid(format!("need at least two players, got {n_players}")));
        }
        if !(cost_ratio.is_finite() && cost_ratio >= 0.0) {
            return Err(Error::invalid(format!("cost ratio must be nonnegative, got {cost_ratio}")));
        }
        if n_draws < 2 {
            return Err(Error::invalid(format!("need at least two draws, got {n_draws}")));
        }
        Ok(FiniteHorizonParams {
            n_players,
            cost_ratio,
            n_draws,
        })
    }
}

/// How the reported solution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ClosedForm,
    BestResponse,
    MultiStart,
    NestedBisection,
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteDiagnostics {
    pub method: SolveMethod,
    /// Best-response iterations used by the successful (or last) run.
    pub iterations: usize,
    /// Largest absolute indifference residual at the reported solution.
    pub max_residual: f64,
    /// Spectral radius of the damped best-response map at the solution.
    pub br_spectral_radius: Option<f64>,
    /// Whether damped best-response play converges locally to the solution.
    pub br_stable: Option<bool>,
    /// Every distinct solution seen across starts and the bracketing scan.
    pub distinct_solutions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteHorizonEquilibrium {
    pub params: FiniteHorizonParams,
    /// Acceptance quantile for rounds `1..k-1`; empty when no equilibrium exists.
    pub round_quantiles: Vec<f64>,
    pub exists: bool,
    /// Ex-ante value of a player in units of `W`.
    pub player_value: Option<f64>,
    pub expected_draws: Option<f64>,
    pub diagnostics: FiniteDiagnostics,
}

impl FiniteHorizonEquilibrium {
    /// Round-1 acceptance quantile.
    pub fn first_quantile(&self) -> Option<f64> {
        self.round_quantiles.first().copied()
    }

    /// Opponent final-value CDF induced by the solution.
    pub fn opponent_cdf(&self) -> Option<OpponentFinalCdf> {
        self.exists.then(|| OpponentFinalCdf::new(&self.round_quantiles))
    }
}

/// CDF of an opponent's final value in quantile space, for a symmetric
/// profile of round quantiles. Piecewise linear with kinks at the `a_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpponentFinalCdf {
    round_quantiles: Vec<f64>,
}

impl OpponentFinalCdf {
    pub fn new(round_quantiles: &[f64]) -> Self {
        OpponentFinalCdf {
            round_quantiles: round_quantiles.to_vec(),
        }
    }

    pub fn round_quantiles(&self) -> &[f64] {
        &self.round_quantiles
    }

    pub fn eval(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let mut reach = 1.0;
        let mut total = 0.0;
        for &a in &self.round_quantiles {
            total += reach * (u - a).max(0.0);
            reach *= a;
        }
        total + reach * u
    }
}

/// One linear piece `alpha u + beta` of `h` on `[u0, u1]`.
#[derive(Debug, Clone, Copy)]
struct Segment {
    u0: Dd,
    u1: Dd,
    alpha: Dd,
    beta: Dd,
}

impl Segment {
    fn at(&self, u: Dd) -> Dd {
        self.alpha * u + self.beta
    }
}

/// Double-double evaluator for a symmetric profile.
struct Profile {
    a: Vec<Dd>,
    segments: Vec<Segment>,
    m: u32,
    r: Dd,
}

impl Profile {
    fn new(a: &[f64], n_players: usize, cost_ratio: f64) -> Self {
        Profile::from_dd(a.iter().map(|&x| Dd::from_f64(x)).collect(), n_players, cost_ratio)
    }

    fn from_dd(a: Vec<Dd>, n_players: usize, cost_ratio: f64) -> Self {
        let mut reach = Vec::with_capacity(a.len() + 1);
        let mut p = Dd::ONE;
        for &aj in &a {
            reach.push(p);
            p = p * aj;
        }
        let final_reach = p;

        let mut cuts: Vec<Dd> = a.clone();
        cuts.push(Dd::ZERO);
        cuts.push(Dd::ONE);
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup();

        let mut segments = Vec::with_capacity(cuts.len());
        for w in cuts.windows(2) {
            let (u0, u1) = (w[0], w[1]);
            let mut alpha = final_reach;
            let mut beta = Dd::ZERO;
            for (j, &aj) in a.iter().enumerate() {
                if aj <= u0 {
                    alpha = alpha + reach[j];
                    beta = beta - reach[j] * aj;
                }
            }
            segments.push(Segment {
                u0,
                u1,
                alpha,
                beta,
            });
        }
        Profile {
            a,
            segments,
            m: (n_players - 1) as u32,
            r: Dd::from_f64(cost_ratio),
        }
    }

    fn h(&self, u: Dd) -> Dd {
        let seg = self
            .segments
            .iter()
            .find(|s| u <= s.u1)
            .unwrap_or_else(|| self.segments.last().unwrap());
        seg.at(u)
    }

    /// Smallest `u` with `h(u) = y`, for `y` in `[0, 1]`.
    fn h_inv(&self, y: Dd) -> Dd {
        if !y.is_positive() {
            return Dd::ZERO;
        }
        for s in &self.segments {
            let top = s.at(s.u1);
            if y <= top {
                if !s.alpha.is_positive() {
                    return s.u0;
                }
                return ((y - s.beta) / s.alpha).max(s.u0).min(s.u1);
            }
        }
        Dd::ONE
    }

    /// Exact `int_lo^hi h(u)^m du`.
    fn integral(&self, lo: Dd, hi: Dd) -> Dd {
        let m = self.m;
        let mut total = Dd::ZERO;
        for s in &self.segments {
            let u0 = s.u0.max(lo);
            let u1 = s.u1.min(hi);
            if !(u1 - u0).is_positive() {
                continue;
            }
            // (A^{m+1} - B^{m+1}) / (A - B) expanded, so a flat piece never divides by zero.
            let top = s.at(u1);
            let bottom = s.at(u0);
            let mut pows_b = Vec::with_capacity(m as usize + 1);
            let mut pb = Dd::ONE;
            for _ in 0..=m {
                pows_b.push(pb);
                pb = pb * bottom;
            }
            let mut sum = Dd::ZERO;
            let mut pa = Dd::ONE;
            for i in 0..=m {
                sum = sum + pa * pows_b[(m - i) as usize];
                pa = pa * top;
            }
            total = total + (u1 - u0) * sum / Dd::from_f64((m + 1) as f64);
        }
        total
    }

    /// Indifference residuals `h(a_j)^m - V_{j+1}` with continuation values
    /// evaluated under the profile itself, plus the round-1 value `V_1`.
    fn residuals(&self) -> (Vec<Dd>, Dd) {
        let k1 = self.a.len();
        let mut v = self.integral(Dd::ZERO, Dd::ONE) - self.r;
        let mut res = vec![Dd::ZERO; k1];
        for j in (0..k1).rev() {
            let aj = self.a[j];
            res[j] = self.h(aj).powi(self.m) - v;
            v = aj * v + self.integral(aj, Dd::ONE) - self.r;
        }
        (res, v)
    }

    /// Backward-induction best response of one player to the profile.
    fn best_response(&self) -> Vec<Dd> {
        let k1 = self.a.len();
        let mut v = self.integral(Dd::ZERO, Dd::ONE) - self.r;
        let mut b = vec![Dd::ZERO; k1];
        for j in (0..k1).rev() {
            let bj = if v.is_positive() { self.h_inv(v.nth_root(self.m)) } else { Dd::ZERO };
            b[j] = bj;
            v = bj * v + self.integral(bj, Dd::ONE) - self.r;
        }
        b
    }
}

fn best_response(a: &[f64], n: usize, r: f64) -> Vec<f64> {
    Profile::new(a, n, r).best_response().iter().map(|x| x.to_f64()).collect()
}

fn max_residual(a: &[f64], n: usize, r: f64) -> f64 {
    Profile::new(a, n, r)
        .residuals()
        .0
        .iter()
        .map(|x| x.to_f64().abs())
        .fold(0.0, f64::max)
}

const DAMPING: f64 = 0.5;
const BR_TOL: f64 = 1e-10;
const BR_MAX_ITER: usize = 10_000;

struct BrRun {
    point: Vec<f64>,
    converged: bool,
    iterations: usize,
}

fn damped_best_response(start: &[f64], n: usize, r: f64) -> BrRun {
    let mut a = start.to_vec();
    for it in 1..=BR_MAX_ITER {
        let b = best_response(&a, n, r);
        let mut step = 0.0f64;
        for (x, y) in a.iter_mut().zip(&b) {
            let next = (1.0 - DAMPING) * *x + DAMPING * y;
            step = step.max((next - *x).abs());
            *x = next;
        }
        if step < BR_TOL {
            return BrRun {
                point: a,
                converged: true,
                iterations: it,
            };
        }
    }
    BrRun {
        point: a,
        converged: false,
        iterations: BR_MAX_ITER,
    }
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve_linear(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col] == 0.0 || !m[piv][col].is_finite() {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        let (top, bottom) = m.split_at_mut(col + 1);
        let pivot = &top[col];
        for (off, r) in bottom.iter_mut().enumerate() {
            let row = col + 1 + off;
            let f = r[col] / pivot[col];
            for (x, p) in r[col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| m[row][c] * x[c]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    Some(x)
}

/// A few Newton steps on the indifference residuals; keeps any step that
/// lowers the residual.
fn polish(mut a: Vec<f64>, n: usize, r: f64) -> Vec<f64> {
    let k1 = a.len();
    let eval = |x: &[f64]| -> Vec<f64> {
        Profile::new(x, n, r).residuals().0.iter().map(|v| v.to_f64()).collect()
    };
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let mut f = eval(&a);
    for _ in 0..8 {
        if norm(&f) < 1e-15 {
            break;
        }
        let mut jac = vec![vec![0.0; k1]; k1];
        for j in 0..k1 {
            let step = 1e-7 * a[j].max(1e-3);
            let mut xp = a.clone();
            let mut xm = a.clone();
            xp[j] += step;
            xm[j] -= step;
            let (fp, fm) = (eval(&xp), eval(&xm));
            for i in 0..k1 {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * step);
            }
        }
        let Some(delta) = solve_linear(jac, f.iter().map(|x| -x).collect()) else {
            break;
        };
        let cand: Vec<f64> = a.iter().zip(&delta).map(|(x, d)| x + d).collect();
        if cand.iter().any(|x| !(0.0..1.0).contains(x)) {
            break;
        }
        let fc = eval(&cand);
        if norm(&fc) >= norm(&f) {
            break;
        }
        a = cand;
        f = fc;
    }
    a
}

/// Spectral radius of the Jacobian of the damped best-response map, via
/// Gelfand's formula on a finite-difference Jacobian.
fn damped_br_spectral_radius(a: &[f64], n: usize, r: f64) -> f64 {
    let k1 = a.len();
    let mut jac = vec![vec![0.0; k1]; k1];
    for j in 0..k1 {
        let step = 1e-7 * a[j].max(1e-3);
        let mut xp = a.to_vec();
        let mut xm = a.to_vec();
        xp[j] += step;
        xm[j] -= step;
        let (bp, bm) = (best_response(&xp, n, r), best_response(&xm, n, r));
        for i in 0..k1 {
            let d = (bp[i] - bm[i]) / (2.0 * step);
            jac[i][j] = DAMPING * d + if i == j { 1.0 - DAMPING } else { 0.0 };
        }
    }
    if k1 == 1 {
        return jac[0][0].abs();
    }
    // ||J^(2^s)||^(1/2^s) with rescaling to stay in range
    let mut pow = jac;
    let mut log_scale = 0.0;
    let mut exponent = 1.0;
    for _ in 0..8 {
        let mut sq = vec![vec![0.0; k1]; k1];
        for i in 0..k1 {
            for j in 0..k1 {
                sq[i][j] = (0..k1).map(|l| pow[i][l] * pow[l][j]).sum();
            }
        }
        log_scale *= 2.0;
        exponent *= 2.0;
        let norm = sq.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if norm == 0.0 {
            return 0.0;
        }
        for x in sq.iter_mut().flatten() {
            *x /= norm;
        }
        log_scale += norm.ln();
        pow = sq;
    }
    let norm = pow.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
    ((log_scale + norm.ln()) / exponent).exp()
}

/// Scan points on (0, 1): a uniform grid plus geometric points toward 0.
fn scan_grid(uniform: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (1..=20).map(|i| 10f64.powf(-8.0 + 7.0 * i as f64 / 20.0)).collect();
    g.extend((1..uniform).map(|i| i as f64 / uniform as f64));
    g.sort_by(|x, y| x.partial_cmp(y).unwrap());
    g.dedup();
    g
}

fn bisect_opt<F: FnMut(f64) -> Option<f64>>(mut f: F, mut lo: f64, mut hi: f64, f_lo: f64) -> Option<f64> {
    let neg_lo = f_lo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid)?;
        if v == 0.0 {
            return Some(mid);
        }
        if (v < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Nested bisection: fix a prefix of round quantiles and solve the remaining
/// rounds' indifference conditions, innermost round first. Coordinates are
/// carried in double-double so residuals of order 1e-20 keep their sign.
struct NestedSolver {
    n: usize,
    r: f64,
    k1: usize,
    grid: Vec<Dd>,
    /// Which root to keep when an inner level has several.
    inner_largest: bool,
}

impl NestedSolver {
    fn residual_at(&self, full: &[Dd], level: usize) -> Dd {
        Profile::from_dd(full.to_vec(), self.n, self.r).residuals().0[level]
    }

    /// Completes `prefix` to a full vector, keeping either the largest or the
    /// smallest root at each inner level.
    fn complete(&self, prefix: &mut Vec<Dd>) -> Option<Vec<Dd>> {
        if prefix.len() == self.k1 {
            return Some(prefix.clone());
        }
        self.roots_at_level(prefix, false).pop()
    }

    fn level_value(&self, prefix: &mut Vec<Dd>, x: Dd) -> Option<(Dd, Vec<Dd>)> {
        let level = prefix.len();
        prefix.push(x);
        let full = self.complete(prefix);
        prefix.pop();
        let full = full?;
        Some((self.residual_at(&full, level), full))
    }

    fn bisect(&self, prefix: &mut Vec<Dd>, mut lo: Dd, mut hi: Dd, neg_lo: bool) -> Option<Dd> {
        let half = Dd::from_f64(0.5);
        for _ in 0..110 {
            if !(hi - lo).is_positive() || (hi - lo).to_f64() < 1e-31 {
                break;
            }
            let mid = (lo + hi) * half;
            let (v, _) = self.level_value(prefix, mid)?;
            if v == Dd::ZERO {
                return Some(mid);
            }
            if (v.hi < 0.0) == neg_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some((lo + hi) * half)
    }

    fn roots_at_level(&self, prefix: &mut Vec<Dd>, all: bool) -> Vec<Vec<Dd>> {
        let mut brackets = Vec::new();
        let mut prev: Option<(Dd, Dd)> = None;
        for &x in &self.grid {
            let Some((v, _)) = self.level_value(prefix, x) else {
                prev = None;
                continue;
            };
            if v == Dd::ZERO {
                brackets.push((x, x, false));
            } else if let Some((x0, v0)) = prev {
                if v0 != Dd::ZERO && (v0.hi < 0.0) != (v.hi < 0.0) {
                    brackets.push((x0, x, v0.hi < 0.0));
                }
            }
            prev = Some((x, v));
        }
        if !all {
            if self.inner_largest {
                brackets.drain(..brackets.len().saturating_sub(1));
            } else {
                brackets.truncate(1);
            }
        }
        let mut out = Vec::new();
        for (lo, hi, neg_lo) in brackets {
            let root = if lo == hi { Some(lo) } else { self.bisect(prefix, lo, hi, neg_lo) };
            if let Some(root) = root {
                if let Some((_, full)) = self.level_value(prefix, root) {
                    out.push(full);
                }
            }
        }
        out
    }
}

fn nested_grid_size(k1: usize) -> Option<usize> {
    match k1 {
        1 | 2 => Some(160),
        3 => Some(40),
        _ => None,
    }
}

fn push_distinct(list: &mut Vec<Vec<f64>>, x: &[f64]) {
    let close = |a: &Vec<f64>| a.iter().zip(x).all(|(p, q)| (p - q).abs() < 1e-7);
    if !list.iter().any(close) {
        list.push(x.to_vec());
    }
}

fn finish(
    params: FiniteHorizonParams,
    a: Vec<f64>,
    method: SolveMethod,
    iterations: usize,
    distinct: Vec<Vec<f64>>,
) -> FiniteHorizonEquilibrium {
    let (n, r) = (params.n_players, params.cost_ratio);
    let (res, v1) = Profile::new(&a, n, r).residuals();
    let max_res = res.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max);
    let rho = damped_br_spectral_radius(&a, n, r);
    let mut reach = 1.0;
    let mut draws = 1.0;
    for &x in &a {
        reach *= x;
        draws += reach;
    }
    FiniteHorizonEquilibrium {
        params,
        round_quantiles: a,
        exists: true,
        player_value: Some(v1.to_f64()),
        expected_draws: Some(draws),
        diagnostics: FiniteDiagnostics {
            method,
            iterations,
            max_residual: max_res,
            br_spectral_radius: Some(rho),
            br_stable: Some(rho < 1.0),
            distinct_solutions: distinct,
        },
    }
}

fn not_found(params: FiniteHorizonParams, iterations: usize, distinct: Vec<Vec<f64>>) -> FiniteHorizonEquilibrium {
    FiniteHorizonEquilibrium {
        params,
        round_quantiles: Vec::new(),
        exists: false,
        player_value: None,
        expected_draws: None,
        diagnostics: FiniteDiagnostics {
            method: SolveMethod::NotFound,
            iterations,
            max_residual: f64::NAN,
            br_spectral_radius: None,
            br_stable: None,
            distinct_solutions: distinct,
        },
    }
}

/// Two-draw equilibrium from the one-dimensional condition
/// `r = (1 + a^{2N-1}) / (N (1 + a)) - a^{2N-2}`.
///
/// When several roots lie in (0, 1) the largest is reported and all are
/// listed in the diagnostics.
pub fn solve_two_draw(n_players: usize, cost_ratio: f64) -> Result<FiniteHorizonEquilibrium> {
    let params = FiniteHorizonParams::new(n_players, cost_ratio, 2)?;
    let n = n_players as i32;
    let f = |a: f64| -> f64 {
        let a_dd = Dd::from_f64(a);
        let one = Dd::ONE;
        let lhs = (one + a_dd.powi((2 * n - 1) as u32)) / (Dd::from_f64(n as f64) * (one + a_dd))
            - a_dd.powi((2 * n - 2) as u32);
        (lhs - Dd::from_f64(cost_ratio)).to_f64()
    };
    let grid = scan_grid(400);
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &x in &grid {
        let v = f(x);
        if let Some((x0, v0)) = prev {
            if v == 0.0 {
                roots.push(x);
            } else if v0 != 0.0 && (v0 < 0.0) != (v < 0.0) {
                roots.push(bisect_opt(|t| Some(f(t)), x0, x, v0).unwrap_or(x));
            }
        }
        prev = Some((x, v));
    }
    let distinct: Vec<Vec<f64>> = roots.iter().map(|&x| vec![x]).collect();
    match roots.last() {
        Some(&a) => Ok(finish(params, vec![a], SolveMethod::ClosedForm, 0, distinct)),
        None => Ok(not_found(params, 0, distinct)),
    }
}

/// General `k`-draw symmetric equilibrium.
///
/// Damped best response from the equal vector at the two-draw solution,
/// then a five-point multi-start, then nested bisection over the
/// indifference conditions. `exists` is false when none of these finds a
/// fixed point in (0, 1)^{k-1}.
pub fn solve_k_draw(params: FiniteHorizonParams) -> Result<FiniteHorizonEquilibrium> {
    let FiniteHorizonParams {
        n_players: n,
        cost_ratio: r,
        n_draws: k,
    } = FiniteHorizonParams::new(params.n_players, params.cost_ratio, params.n_draws)?;
    let k1 = k - 1;
    let accept = |a: &[f64]| a.iter().all(|x| *x > 0.0 && *x < 1.0) && max_residual(a, n, r) < 1e-9;

    let seed = solve_two_draw(n, r)?.first_quantile().unwrap_or(0.5);
    let mut distinct = Vec::new();
    let mut trace = Vec::new();

    let first = damped_best_response(&vec![seed; k1], n, r);
    trace.push((seed, first.iterations, first.converged));
    let mut chosen: Option<(Vec<f64>, SolveMethod, usize)> = None;
    if first.converged {
        let a = polish(first.point, n, r);
        if accept(&a) {
            push_distinct(&mut distinct, &a);
            chosen = Some((a, SolveMethod::BestResponse, first.iterations));
        }
    }

    for start in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let run = damped_best_response(&vec![start; k1], n, r);
        trace.push((start, run.iterations, run.converged));
        if !run.converged {
            continue;
        }
        let a = polish(run.point, n, r);
        if accept(&a) {
            push_distinct(&mut distinct, &a);
            if chosen.is_none() {
                chosen = Some((a, SolveMethod::MultiStart, run.iterations));
            }
        }
    }

    if let Some((a, method, it)) = chosen {
        return Ok(finish(params, a, method, it, distinct));
    }

    let Some(size) = nested_grid_size(k1) else {
        let detail = trace
            .iter()
            .map(|(s, it, ok)| format!("start {s}: {it} iterations, converged={ok}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::numeric("k-draw fixed point", detail));
    };
    let mut roots = Vec::new();
    for inner_largest in [true, false] {
        let solver = NestedSolver {
            n,
            r,
            k1,
            grid: scan_grid(size).into_iter().map(Dd::from_f64).collect(),
            inner_largest,
        };
        let found = solver.roots_at_level(&mut Vec::new(), true);
        roots.extend(found.into_iter().map(|v| v.iter().map(|x| x.to_f64()).collect::<Vec<f64>>()));
        if k1 == 1 {
            break;
        }
    }
    let mut best: Option<Vec<f64>> = None;
    for root in roots {
        let a = polish(root, n, r);
        if accept(&a) {
            push_distinct(&mut distinct, &a);
            if best.as_ref().map_or(true, |b| a[0] > b[0]) {
                best = Some(a);
            }
        }
    }
    match best {
        Some(a) => Ok(finish(params, a, SolveMethod::NestedBisection, 0, distinct)),
        None => Ok(not_found(params, BR_MAX_ITER, distinct)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdProfile {
    pub n_draws: usize,
    pub cost_ratio: f64,
    pub rows: Vec<FiniteHorizonEquilibrium>,
    /// `N` with the largest round-1 quantile.
    pub peak_n: Option<usize>,
    pub peak_quantile: Option<f64>,
    /// Every `N` whose round-1 quantile ties the peak at three decimals.
    pub peak_ties: Vec<usize>,
    /// Smallest `N` in the range without an equilibrium.
    pub frontier_n: Option<usize>,
}

pub fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Round-1 quantile across a range of `N`, with the peak and existence frontier.
pub fn threshold_profile(
    n_draws: usize,
    cost_ratio: f64,
    n_range: std::ops::RangeInclusive<usize>,
) -> Result<ThresholdProfile> {
    threshold_profile_with(true, n_draws, cost_ratio, n_range)
}

/// As [`threshold_profile`], optionally solving every `N` on the current thread.
pub fn threshold_profile_with(
    parallel: bool,
    n_draws: usize,
    cost_ratio: f64,
    n_range: std::ops::RangeInclusive<usize>,
) -> Result<ThresholdProfile> {
    let ns: Vec<usize> = n_range.collect();
    if ns.is_empty() {
        return Err(Error::invalid("empty range of N"));
    }
    let params = ns
        .iter()
        .map(|&n| FiniteHorizonParams::new(n, cost_ratio, n_draws))
        .collect::<Result<Vec<_>>>()?;
    let rows = crate::par::map_with(parallel, &params, |p| solve_k_draw(*p))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut peak: Option<(usize, f64)> = None;
    for row in &rows {
        if let Some(a) = row.first_quantile() {
            if peak.map_or(true, |(_, best)| a > best) {
                peak = Some((row.params.n_players, a));
            }
        }
    }
    let peak_ties = match peak {
        Some((_, best)) => rows
            .iter()
            .filter(|row| row.first_quantile().map(round3) == Some(round3(best)))
            .map(|row| row.params.n_players)
            .collect(),
        None => Vec::new(),
    };
    Ok(ThresholdProfile {
        n_draws,
        cost_ratio,
        frontier_n: rows.iter().find(|row| !row.exists).map(|row| row.params.n_players),
        peak_n: peak.map(|p| p.0),
        peak_quantile: peak.map(|p| p.1),
        peak_ties,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opponent_cdf_two_draws() {
        let h = OpponentFinalCdf::new(&[0.6]);
        assert!((h.eval(0.3) - 0.18).abs() < 1e-15);
        assert!((h.eval(0.8) - (1.6 * 0.8 - 0.6)).abs() < 1e-15);
        assert_eq!(h.eval(0.0), 0.0);
        assert!((h.eval(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_integral_matches_expansion() {
        // k = 2: int_0^1 h^m = a^{2m+1}/(m+1) + (1 - a^{2m+2})/((m+1)(1+a))
        let (a, n) = (0.6, 4usize);
        let m = (n - 1) as i32;
        let p = Profile::new(&[a], n, 0.0);
        let got = p.integral(Dd::ZERO, Dd::ONE).to_f64();
        let want = a.powi(2 * m + 1) / (m + 1) as f64 + (1.0 - a.powi(2 * m + 2)) / ((m + 1) as f64 * (1.0 + a));
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn two_draw_zero_cost_golden_ratio() {
        let eq = solve_two_draw(2, 0.0).unwrap();
        let a = eq.first_quantile().unwrap();
        assert!((a - 0.618).abs() < 1e-3);
        assert!((2.0 * a * a + a * a * a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_draw_peak_cell() {
        let a = solve_two_draw(5, 0.1).unwrap().first_quantile().unwrap();
        assert!((a - 0.629).abs() < 5e-4);
    }

    #[test]
    fn no_equilibrium_when_one_draw_is_unprofitable() {
        // r >= 1/N: even a single draw does not pay
        let eq = solve_two_draw(10, 0.15).unwrap();
        assert!(!eq.exists);
        assert!(eq.round_quantiles.is_empty());
    }

    #[test]
    fn k_draw_agrees_with_closed_form() {
        for (n, r) in [(2, 0.05), (4, 0.0), (6, 0.1)] {
            let a = solve_two_draw(n, r).unwrap().first_quantile().unwrap();
            let b = solve_k_draw(FiniteHorizonParams::new(n, r, 2).unwrap())
                .unwrap()
                .first_quantile()
                .unwrap();
            assert!((a - b).abs() < 1e-9, "N={n} r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn three_draw_examples() {
        let eq = solve_k_draw(FiniteHorizonParams::new(2, 0.0, 3).unwrap()).unwrap();
        assert!((eq.first_quantile().unwrap() - 0.743).abs() < 5e-4);
        let eq = solve_k_draw(FiniteHorizonParams::new(6, 0.05, 3).unwrap()).unwrap();
        assert!((eq.first_quantile().unwrap() - 0.798).abs() < 5e-4);
        assert!(eq.diagnostics.max_residual < 1e-9);
    }

    #[test]
    fn player_value_matches_accounting_identity() {
        // symmetric: value = 1/N - r E[draws]
        let eq = solve_k_draw(FiniteHorizonParams::new(4, 0.05, 3).unwrap()).unwrap();
        let v = eq.player_value.unwrap();
        let want = 0.25 - 0.05 * eq.expected_draws.unwrap();
        assert!((v - want).abs() < 1e-9, "{v} vs {want}");
    }

    #[test]
    fn best_response_to_equilibrium_is_itself() {
        let eq = solve_k_draw(FiniteHorizonParams::new(3, 0.05, 3).unwrap()).unwrap();
        let br = best_response(&eq.round_quantiles, 3, 0.05);
        for (x, y) in br.iter().zip(&eq.round_quantiles) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_params() {
        assert!(FiniteHorizonParams::new(1, 0.0, 2).is_err());
        assert!(FiniteHorizonParams::new(2, -0.1, 2).is_err());
        assert!(FiniteHorizonParams::new(2, 0.1, 1).is_err());
    }
}

