//! Linear isotonic spline quantile functions and their CRPS.
//!
//! A spline with knots `0 = d_0 < ... < d_M = 1` is
//!
//! ```text
//! D(a) = gamma + sum_m b_m * max(a - d_m, 0)
//! ```
//!
//! and is non-decreasing in `a` exactly when every partial sum
//! `b_0 + ... + b_k` is non-negative. The decoder never emits `b` directly:
//! [`build_spline`] maps unconstrained outputs onto cumulative slopes through
//! a softplus, so every network output yields a valid quantile function.

use crate::error::{Error, Result};
use crate::nn::{softplus, softplus_grad};

#[derive(Debug, Clone, PartialEq)]
pub struct SplineCoeffs {
    pub gamma: f64,
    pub b: Vec<f64>,
    pub knots: Vec<f64>,
}

/// Closed-form CRPS of a spline at one observation. `loss` is twice the
/// integral of the check loss over the quantile level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrpsBreakdown {
    pub loss: f64,
    pub alpha_tilde: f64,
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrpsGrad {
    pub gamma: f64,
    pub b: Vec<f64>,
}

/// `M + 1` equally spaced knots on `[0, 1]`.
pub fn uniform_knots(m: usize) -> Vec<f64> {
    assert!(m >= 1, "need at least one spline segment");
    (0..=m).map(|i| i as f64 / m as f64).collect()
}

pub fn validate_knots(knots: &[f64]) -> Result<()> {
    if knots.len() < 2 {
        return Err(Error::InvalidArgument("a spline needs at least two knots".into()));
    }
    if knots[0] != 0.0 || *knots.last().unwrap() != 1.0 {
        return Err(Error::InvalidArgument(format!(
            "knots must start at 0 and end at 1, got {knots:?}"
        )));
    }
    if knots.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(format!(
            "knots must be strictly increasing, got {knots:?}"
        )));
    }
    Ok(())
}

/// Check (pinball) loss `u * (alpha - 1[u < 0])`.
#[inline]
pub fn check_loss(alpha: f64, u: f64) -> f64 {
    if u < 0.0 {
        u * (alpha - 1.0)
    } else {
        u * alpha
    }
}

/// Maps raw decoder outputs onto spline coefficients. Cumulative slopes are
/// `s_k = softplus(slope_raw[k])`; `b_0 = s_0` and `b_m = s_m - s_{m-1}`.
pub fn build_spline(gamma_raw: f64, slope_raw: &[f64], knots: &[f64]) -> Result<SplineCoeffs> {
    validate_knots(knots)?;
    if slope_raw.len() != knots.len() {
        return Err(Error::Shape(format!(
            "{} slope outputs for {} knots",
            slope_raw.len(),
            knots.len()
        )));
    }
    let mut b = Vec::with_capacity(slope_raw.len());
    let mut prev = 0.0;
    for &r in slope_raw {
        let s = softplus(r);
        b.push(s - prev);
        prev = s;
    }
    Ok(SplineCoeffs {
        gamma: gamma_raw,
        b,
        knots: knots.to_vec(),
    })
}

impl SplineCoeffs {
    /// Validates knots and the partial-sum (monotonicity) constraint.
    pub fn new(gamma: f64, b: Vec<f64>, knots: Vec<f64>) -> Result<Self> {
        validate_knots(&knots)?;
        if b.len() != knots.len() {
            return Err(Error::Shape(format!("{} slopes for {} knots", b.len(), knots.len())));
        }
        let coeffs = SplineCoeffs { gamma, b, knots };
        let scale = coeffs.b.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if let Some(k) = coeffs.partial_sums().position(|s| s < -1e-12 * scale) {
            return Err(Error::InvalidArgument(format!(
                "partial slope sum {k} is negative; quantile function would decrease"
            )));
        }
        Ok(coeffs)
    }

    pub fn segments(&self) -> usize {
        self.knots.len() - 1
    }

    fn partial_sums(&self) -> impl Iterator<Item = f64> + '_ {
        self.b.iter().scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
    }

    /// `s_k = b_0 + ... + b_k`, the slope on `[d_k, d_{k+1}]`. Cancellation
    /// can leave a true zero slightly negative; such values are clamped to 0.
    pub fn cumulative_slopes(&self) -> Vec<f64> {
        self.partial_sums().map(|s| s.max(0.0)).collect()
    }

    /// `D(d_k)` for every knot.
    pub fn knot_values(&self) -> Vec<f64> {
        let slopes = self.cumulative_slopes();
        let mut out = Vec::with_capacity(self.knots.len());
        let mut value = self.gamma;
        out.push(value);
        for k in 0..self.segments() {
            value += slopes[k] * (self.knots[k + 1] - self.knots[k]);
            out.push(value);
        }
        out
    }

    pub fn eval(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "quantile level {alpha} outside [0, 1]"
            )));
        }
        Ok(self.eval_unchecked(alpha))
    }

    /// Segment-wise evaluation: each knot value is the previous one plus a
    /// non-negative increment, so the result is monotone even under rounding.
    #[inline]
    pub(crate) fn eval_unchecked(&self, alpha: f64) -> f64 {
        let mut value = self.gamma;
        let mut partial = 0.0;
        for k in 0..self.segments() {
            partial += self.b[k];
            let slope = partial.max(0.0);
            let width = self.knots[k + 1] - self.knots[k];
            if alpha <= self.knots[k + 1] || k + 1 == self.segments() {
                return value + slope * (alpha - self.knots[k]).max(0.0).min(width);
            }
            value += slope * width;
        }
        value
    }

    /// Quantile level at which the spline reaches `x`, clamped to `[0, 1]`.
    /// On a flat stretch the left end is returned.
    pub fn inverse(&self, x: f64) -> (f64, usize) {
        let values = self.knot_values();
        let last = self.segments();
        if x <= values[0] {
            return (0.0, 0);
        }
        if x > values[last] {
            return (1.0, last - 1);
        }
        let seg = (0..last).find(|&k| x <= values[k + 1]).unwrap_or(last - 1);
        let slope = self.cumulative_slopes()[seg];
        if !(slope > 0.0) {
            return (self.knots[seg], seg);
        }
        let alpha = self.knots[seg] + (x - values[seg]) / slope;
        (alpha.clamp(self.knots[seg], self.knots[seg + 1]), seg)
    }

    pub fn crps(&self, x: f64) -> CrpsBreakdown {
        let (alpha_tilde, segment) = self.inverse(x);
        CrpsBreakdown {
            loss: self.crps_at(x, alpha_tilde).max(0.0),
            alpha_tilde,
            segment,
        }
    }

    /// The closed-form expression evaluated at an arbitrary `alpha_tilde`.
    /// It is minimal (stationary) at the true inverse.
    pub fn crps_at(&self, x: f64, alpha_tilde: f64) -> f64 {
        let a = alpha_tilde;
        let mut loss = (2.0 * a - 1.0) * x + (1.0 - 2.0 * a) * self.gamma;
        for (b, &d) in self.b.iter().zip(&self.knots) {
            let hi = a.max(d);
            loss += b * ((1.0 - d * d * d) / 3.0 - d - hi * hi + 2.0 * hi * d);
        }
        loss
    }

    /// `(1/K) sum_k rho_{k/K}(x - D(k/K))`, the finite mixture counterpart of
    /// half the CRPS.
    pub fn crps_finite_k(&self, x: f64, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidArgument("K must be positive".into()));
        }
        let kf = k as f64;
        let total: f64 = (1..=k)
            .map(|i| {
                let alpha = i as f64 / kf;
                check_loss(alpha, x - self.eval_unchecked(alpha))
            })
            .sum();
        Ok(total / kf)
    }

    /// Gradient of [`SplineCoeffs::crps`] w.r.t. `gamma` and each `b_m`,
    /// holding `alpha_tilde` fixed (the loss is stationary in it).
    pub fn crps_grad(&self, x: f64) -> CrpsGrad {
        let (a, _) = self.inverse(x);
        let b = self
            .knots
            .iter()
            .map(|&d| {
                let hi = a.max(d);
                (1.0 - d * d * d) / 3.0 - d - hi * hi + 2.0 * hi * d
            })
            .collect();
        CrpsGrad {
            gamma: 1.0 - 2.0 * a,
            b,
        }
    }
}

/// Pulls a gradient w.r.t. `(gamma, b)` back through [`build_spline`] onto
/// `(gamma_raw, slope_raw)`.
pub fn chain_to_raw(grad: &CrpsGrad, slope_raw: &[f64]) -> (f64, Vec<f64>) {
    let n = grad.b.len();
    let raw = (0..n)
        .map(|k| {
            let next = if k + 1 < n { grad.b[k + 1] } else { 0.0 };
            (grad.b[k] - next) * softplus_grad(slope_raw[k])
        })
        .collect();
    (grad.gamma, raw)
}

/// `(1/K) sum_{k<K} ln(a_k (1 - a_k))` with `a_k = k/K`. The `k = K` term is
/// `-inf` and is left out; the remaining sum tends to `-2`.
pub fn mean_log_level_weight(k: usize) -> f64 {
    let kf = k as f64;
    (1..k)
        .map(|i| {
            let a = i as f64 / kf;
            a.ln() + (1.0 - a).ln()
        })
        .sum::<f64>()
        / kf
}
