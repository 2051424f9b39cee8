//! Continuous draw distributions.
//!
//! Every family exposes CDF, density, quantile, hazard rate and an
//! inverse-transform sampler. Values are immutable after construction, so a
//! `Distribution` can be shared freely across threads.
//!
//! Distributions parse either from a JSON spec
//! (`{"family":"pareto","params":{"shape":2,"scale":1}}`) or from the compact
//! flag grammar `family:p1,p2` (`uniform:0,1`, `exponential:1`, `pareto:2,1`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect;

/// Source of independent Uniform(0,1) variates.
pub trait UniformSource {
    /// Returns a value strictly inside (0, 1).
    fn next_uniform(&mut self) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistSpec", into = "DistSpec")]
pub enum Distribution {
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Pareto { shape: f64, scale: f64 },
    Custom(CustomDistribution),
}

pub fn make_uniform(lo: f64, hi: f64) -> Result<Distribution> {
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::invalid(format!("uniform requires finite lo < hi, got [{lo}, {hi}]")));
    }
    Ok(Distribution::Uniform { lo, hi })
}

pub fn make_exponential(rate: f64) -> Result<Distribution> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::invalid(format!("exponential rate must be positive, got {rate}")));
    }
    Ok(Distribution::Exponential { rate })
}

pub fn make_pareto(shape: f64, scale: f64) -> Result<Distribution> {
    if !(shape.is_finite() && shape > 0.0 && scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid(format!(
            "pareto shape and scale must be positive, got shape={shape} scale={scale}"
        )));
    }
    Ok(Distribution::Pareto { shape, scale })
}

/// Builds a distribution from a quantile grid `[(u, x), ...]` with `u` running
/// from 0 to 1. See [`CustomDistribution`].
pub fn make_custom(grid: &[[f64; 2]]) -> Result<Distribution> {
    CustomDistribution::new(grid).map(Distribution::Custom)
}

impl Distribution {
    pub fn support_lower(&self) -> f64 {
        match self {
            Distribution::Uniform { lo, .. } => *lo,
            Distribution::Exponential { .. } => 0.0,
            Distribution::Pareto { scale, .. } => *scale,
            Distribution::Custom(c) => c.xs[0],
        }
    }

    /// Upper end of the support; `f64::INFINITY` for unbounded families.
    pub fn support_upper(&self) -> f64 {
        match self {
            Distribution::Uniform { hi, .. } => *hi,
            Distribution::Exponential { .. } | Distribution::Pareto { .. } => f64::INFINITY,
            Distribution::Custom(c) => *c.xs.last().expect("validated grid"),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    /// `1 - F(x)`, evaluated without cancellation for the closed-form families.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= self.support_lower() {
            return 1.0;
        }
        if x >= self.support_upper() {
            return 0.0;
        }
        match self {
            Distribution::Uniform { lo, hi } => (hi - x) / (hi - lo),
            Distribution::Exponential { rate } => (-rate * x).exp(),
            Distribution::Pareto { shape, scale } => (scale / x).powf(*shape),
            Distribution::Custom(c) => 1.0 - c.cdf(x),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.support_lower() || x > self.support_upper() {
            return 0.0;
        }
        match self {
            Distribution::Uniform { lo, hi } => 1.0 / (hi - lo),
            Distribution::Exponential { rate } => rate * (-rate * x).exp(),
            Distribution::Pareto { shape, scale } => shape / x * (scale / x).powf(*shape),
            Distribution::Custom(c) => c.density(x),
        }
    }

    /// Inverse CDF on `[0, 1]`. Returns the support bounds at the endpoints.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            Distribution::Uniform { lo, hi } => lo + u * (hi - lo),
            Distribution::Exponential { rate } => -(-u).ln_1p() / rate,
            Distribution::Pareto { shape, scale } => {
                if u >= 1.0 {
                    f64::INFINITY
                } else {
                    scale * (1.0 - u).powf(-1.0 / shape)
                }
            }
            Distribution::Custom(c) => c.quantile(u),
        }
    }

    /// Value with upper-tail probability `t`, i.e. `quantile(1 - t)` without
    /// the cancellation in `1 - t` for small `t`.
    pub fn inverse_survival(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Distribution::Uniform { lo, hi } => hi - t * (hi - lo),
            Distribution::Exponential { rate } => -t.ln() / rate,
            Distribution::Pareto { shape, scale } => scale * t.powf(-1.0 / shape),
            Distribution::Custom(c) => c.quantile(1.0 - t),
        }
    }

    /// `f(x) / (1 - F(x))`; infinite at or beyond a finite upper support bound.
    pub fn hazard(&self, x: f64) -> f64 {
        if x < self.support_lower() {
            return 0.0;
        }
        match self {
            Distribution::Uniform { hi, .. } => {
                if x >= *hi {
                    f64::INFINITY
                } else {
                    1.0 / (hi - x)
                }
            }
            Distribution::Exponential { rate } => *rate,
            Distribution::Pareto { shape, .. } => shape / x,
            Distribution::Custom(c) => {
                let s = 1.0 - c.cdf(x);
                if s <= 0.0 {
                    f64::INFINITY
                } else {
                    c.density(x) / s
                }
            }
        }
    }

    /// Draws one value by inverse transform.
    pub fn sample<R: UniformSource + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.next_uniform())
    }

    /// Mean of the distribution, if finite.
    pub fn mean(&self) -> Option<f64> {
        match self {
            Distribution::Uniform { lo, hi } => Some(0.5 * (lo + hi)),
            Distribution::Exponential { rate } => Some(1.0 / rate),
            Distribution::Pareto { shape, scale } => (*shape > 1.0).then(|| shape * scale / (shape - 1.0)),
            Distribution::Custom(c) => Some(c.mean()),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.support_upper().is_finite()
    }

    /// Short human label, e.g. `pareto(2,1)`.
    pub fn label(&self) -> String {
        match self {
            Distribution::Uniform { lo, hi } => format!("uniform({lo},{hi})"),
            Distribution::Exponential { rate } => format!("exponential({rate})"),
            Distribution::Pareto { shape, scale } => format!("pareto({shape},{scale})"),
            Distribution::Custom(c) => format!("custom({} knots)", c.us.len()),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// User-supplied distribution given by quantile knots `(u_i, x_i)`.
///
/// The quantile function is the monotone cubic (Fritsch–Carlson) interpolant
/// of the knots, so the density `1 / Q'(F(x))` is continuous and positive.
/// The CDF is recovered by bisection on the quantile to 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomDistribution {
    us: Vec<f64>,
    xs: Vec<f64>,
    slopes: Vec<f64>,
}

impl CustomDistribution {
    pub fn new(grid: &[[f64; 2]]) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::invalid("custom quantile grid needs at least two knots"));
        }
        let us: Vec<f64> = grid.iter().map(|p| p[0]).collect();
        let xs: Vec<f64> = grid.iter().map(|p| p[1]).collect();
        if us[0] != 0.0 || *us.last().unwrap() != 1.0 {
            return Err(Error::invalid("custom quantile grid must start at u=0 and end at u=1"));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("custom quantile grid needs finite x values (bounded support)"));
        }
        for w in grid.windows(2) {
            if !(w[1][0] > w[0][0] && w[1][1] > w[0][1]) {
                return Err(Error::invalid(
                    "custom quantile grid must be strictly increasing in both u and x",
                ));
            }
        }
        let n = us.len();
        let secant: Vec<f64> = (0..n - 1).map(|i| (xs[i + 1] - xs[i]) / (us[i + 1] - us[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secant[0];
        slopes[n - 1] = secant[n - 2];
        for i in 1..n - 1 {
            let (h0, h1) = (us[i] - us[i - 1], us[i + 1] - us[i]);
            let (s0, s1) = (secant[i - 1], secant[i]);
            // Weighted harmonic mean keeps the interpolant monotone.
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            slopes[i] = (w1 + w2) / (w1 / s0 + w2 / s1);
        }
        Ok(CustomDistribution { us, xs, slopes })
    }

    fn segment(&self, u: f64) -> usize {
        match self.us.partition_point(|&k| k <= u) {
            0 => 0,
            i => (i - 1).min(self.us.len() - 2),
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        let i = self.segment(u);
        let h = self.us[i + 1] - self.us[i];
        let t = (u - self.us[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.xs[i] + h10 * h * self.slopes[i] + h01 * self.xs[i + 1] + h11 * h * self.slopes[i + 1]
    }

    fn quantile_derivative(&self, u: f64) -> f64 {
        let i = self.segment(u);
        let h = self.us[i + 1] - self.us[i];
        let t = (u - self.us[i]) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * self.xs[i] + d10 * self.slopes[i] + d01 * self.xs[i + 1] + d11 * self.slopes[i + 1]
    }

    fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = (self.xs[0], *self.xs.last().unwrap());
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        bisect(|u| self.quantile(u) - x, 0.0, 1.0, 1e-12).unwrap_or(0.5)
    }

    fn density(&self, x: f64) -> f64 {
        1.0 / self.quantile_derivative(self.cdf(x))
    }

    fn mean(&self) -> f64 {
        // Quantile-space mean with Gauss-Legendre per knot interval (exact for cubics).
        const NODES: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
        self.us
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let half = 0.5 * (b - a);
                NODES.iter().map(|t| half * self.quantile(0.5 * (a + b) + half * t)).sum::<f64>()
            })
            .sum()
    }

    pub fn knots(&self) -> Vec<[f64; 2]> {
        self.us.iter().zip(&self.xs).map(|(&u, &x)| [u, x]).collect()
    }
}

/// Serialized form of a [`Distribution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistSpec {
    Uniform { params: UniformParams },
    Exponential { params: ExponentialParams },
    Pareto { params: ParetoParams },
    Custom { quantile_grid: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformParams {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialParams {
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoParams {
    pub shape: f64,
    pub scale: f64,
}

impl TryFrom<DistSpec> for Distribution {
    type Error = Error;

    fn try_from(spec: DistSpec) -> Result<Self> {
        match spec {
            DistSpec::Uniform { params } => make_uniform(params.lo, params.hi),
            DistSpec::Exponential { params } => make_exponential(params.rate),
            DistSpec::Pareto { params } => make_pareto(params.shape, params.scale),
            DistSpec::Custom { quantile_grid } => make_custom(&quantile_grid),
        }
    }
}

impl From<Distribution> for DistSpec {
    fn from(d: Distribution) -> Self {
        match d {
            Distribution::Uniform { lo, hi } => DistSpec::Uniform {
                params: UniformParams { lo, hi },
            },
            Distribution::Exponential { rate } => DistSpec::Exponential {
                params: ExponentialParams { rate },
            },
            Distribution::Pareto { shape, scale } => DistSpec::Pareto {
                params: ParetoParams { shape, scale },
            },
            Distribution::Custom(c) => DistSpec::Custom {
                quantile_grid: c.knots(),
            },
        }
    }
}

impl Distribution {
    pub fn from_json(text: &str) -> Result<Distribution> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl FromStr for Distribution {
    type Err = Error;

    /// Parses `family:p1,p2` (`uniform:0,1`, `exponential:2`, `pareto:2,1`).
    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let params: Vec<f64> = if rest.trim().is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("bad parameter in '{s}': {e}")))?
        };
        let family = family.trim().to_ascii_lowercase();
        let arity = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("'{family}' takes {n} parameter(s), got {}", params.len())))
            }
        };
        match family.as_str() {
            "uniform" => {
                arity(2)?;
                make_uniform(params[0], params[1])
            }
            "exponential" | "exp" => {
                arity(1)?;
                make_exponential(params[0])
            }
            "pareto" => {
                arity(2)?;
                make_pareto(params[0], params[1])
            }
            "custom" => Err(Error::Parse("custom distributions are read from a JSON file".into())),
            other => Err(Error::Parse(format!("unknown distribution family '{other}'"))),
        }
    }
}

/// A base distribution conditioned on exceeding `lower`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDistribution {
    base: Distribution,
    lower: f64,
    base_cdf_at_lower: f64,
}

pub fn truncate_below(d: &Distribution, b: f64) -> Result<TruncatedDistribution> {
    let fb = d.cdf(b);
    if fb.is_nan() || fb >= 1.0 - 1e-12 || b >= d.support_upper() {
        return Err(Error::DegenerateTruncation { threshold: b, cdf: fb });
    }
    Ok(TruncatedDistribution {
        base: d.clone(),
        lower: b.max(d.support_lower()),
        base_cdf_at_lower: fb,
    })
}

impl TruncatedDistribution {
    pub fn base(&self) -> &Distribution {
        &self.base
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn cdf_trunc(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        ((self.base.cdf(x) - self.base_cdf_at_lower) / (1.0 - self.base_cdf_at_lower)).clamp(0.0, 1.0)
    }

    pub fn density_trunc(&self, x: f64) -> f64 {
        if x < self.lower {
            return 0.0;
        }
        self.base.density(x) / (1.0 - self.base_cdf_at_lower)
    }

    pub fn quantile_trunc(&self, v: f64) -> f64 {
        let fb = self.base_cdf_at_lower;
        self.base.quantile(fb + v.clamp(0.0, 1.0) * (1.0 - fb))
    }

    pub fn sample<R: UniformSource + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile_trunc(rng.next_uniform())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn uniform_examples() {
        let d = make_uniform(0.0, 1.0).unwrap();
        close(d.cdf(0.5), 0.5, 1e-15);
        close(d.hazard(0.0), 1.0, 1e-15);
        close(d.quantile(0.8), 0.8, 1e-15);
        assert!(make_uniform(1.0, 1.0).is_err());
        assert!(make_uniform(2.0, 1.0).is_err());
    }

    #[test]
    fn exponential_examples() {
        let d = make_exponential(1.0).unwrap();
        close(d.hazard(3.7), 1.0, 1e-15);
        close(d.quantile(1.0 - 0.2), 5f64.ln(), 1e-14);
        close(make_exponential(2.0).unwrap().cdf(0.0), 0.0, 0.0);
        assert!(make_exponential(0.0).is_err());
        assert!(make_exponential(-1.0).is_err());
    }

    #[test]
    fn pareto_examples() {
        let d = make_pareto(2.0, 1.0).unwrap();
        close(d.hazard(4.0), 0.5, 1e-15);
        close(d.cdf(1.0), 0.0, 0.0);
        // 1 - x^{-2} = 0.75  =>  x = 2
        close(d.quantile(0.75), 2.0, 1e-14);
        assert!(make_pareto(0.0, 1.0).is_err());
        assert!(make_pareto(2.0, -1.0).is_err());
    }

    #[test]
    fn truncation_examples() {
        let u = make_uniform(0.0, 1.0).unwrap();
        let t = truncate_below(&u, 0.8).unwrap();
        close(t.cdf_trunc(0.9), 0.5, 1e-14);
        close(t.cdf_trunc(0.8), 0.0, 0.0);

        let e = make_exponential(1.0).unwrap();
        let t = truncate_below(&e, 5f64.ln()).unwrap();
        close(t.cdf_trunc(e.quantile(0.9)), 0.5, 1e-12);
        // memorylessness: the truncated exponential is a shifted exponential
        let x = 5f64.ln() + 0.3;
        close(t.cdf_trunc(x), 1.0 - (-0.3f64).exp(), 1e-12);
    }

    #[test]
    fn degenerate_truncation_is_rejected() {
        let u = make_uniform(0.0, 1.0).unwrap();
        assert!(matches!(truncate_below(&u, 1.0), Err(Error::DegenerateTruncation { .. })));
        assert!(matches!(truncate_below(&u, 3.0), Err(Error::DegenerateTruncation { .. })));
    }

    #[test]
    fn flag_grammar() {
        assert_eq!("uniform:0,1".parse::<Distribution>().unwrap(), make_uniform(0.0, 1.0).unwrap());
        assert_eq!("exponential:1".parse::<Distribution>().unwrap(), make_exponential(1.0).unwrap());
        assert_eq!("pareto:2,1".parse::<Distribution>().unwrap(), make_pareto(2.0, 1.0).unwrap());
        assert!("pareto:2".parse::<Distribution>().is_err());
        assert!("weibull:1,2".parse::<Distribution>().is_err());
        assert!("uniform:a,b".parse::<Distribution>().is_err());
    }

    #[test]
    fn json_spec() {
        let d = Distribution::from_json(r#"{"family":"pareto","params":{"shape":2,"scale":1}}"#).unwrap();
        assert_eq!(d, make_pareto(2.0, 1.0).unwrap());
        let back = serde_json::to_string(&d).unwrap();
        assert_eq!(Distribution::from_json(&back).unwrap(), d);
        let c = Distribution::from_json(r#"{"family":"custom","quantile_grid":[[0,0],[0.5,0.25],[1,1]]}"#).unwrap();
        close(c.quantile(0.5), 0.25, 1e-15);
        assert!(Distribution::from_json(r#"{"family":"uniform","params":{"lo":1,"hi":0}}"#).is_err());
        assert!(Distribution::from_json(r#"{"family":"custom","quantile_grid":[[0,0],[0.5,0.5],[0.9,1]]}"#).is_err());
    }

    #[test]
    fn custom_matches_uniform_when_linear() {
        let c = make_custom(&[[0.0, 0.0], [0.25, 0.25], [1.0, 1.0]]).unwrap();
        for &x in &[0.1, 0.3, 0.77] {
            close(c.cdf(x), x, 1e-11);
            close(c.density(x), 1.0, 1e-9);
            close(c.hazard(x), 1.0 / (1.0 - x), 1e-8);
        }
        close(c.mean().unwrap(), 0.5, 1e-14);
    }

    #[test]
    fn means() {
        close(make_pareto(2.0, 1.0).unwrap().mean().unwrap(), 2.0, 1e-15);
        assert!(make_pareto(1.0, 1.0).unwrap().mean().is_none());
        close(make_exponential(4.0).unwrap().mean().unwrap(), 0.25, 1e-15);
    }
}
