//! Hand-reduced rate curves for the 3-vertex star and path, and exponent
//! formulas for the smallest named graphs.
//!
//! Everything here is evaluated straight from explicit piecewise
//! expressions, sharing no code with the variational solvers, so the
//! agreement tests between this module and [`crate::rate`] are genuine
//! cross-checks rather than tautologies.
//!
//! Both rate curves live on the one-parameter family of measures that pin
//! mass ½ on the centre of the 3-vertex path and split the rest between the
//! two leaves; `x` is the mass of the distinguished leaf.  Starting the walk
//! at the centre clamps the curve on both sides of the stationary point
//! `x = ¼`; starting at the distinguished leaf clamps it only above.  The
//! same curves can be written as an entropy difference against a clamped
//! projection of the measure — [`PiecewiseRate::eval_via_clamp`] — and the
//! two routes are asserted equal in the tests.

use thiserror::Error;

/// Errors from closed-form evaluation.
#[derive(Debug, Error)]
pub enum ClosedFormError {
    #[error("leaf mass {0} outside [0, 1/2]")]
    XOutOfRange(f64),
    #[error("reinforcement parameter must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("no closed exponent form for graph tag {0:?}")]
    UnknownGraph(String),
}

/// A piecewise rate curve over the family `ν = (½ centre, x, ½ − x)`.
#[derive(Clone, Copy, Debug)]
pub struct PiecewiseRate {
    pub delta: f64,
    /// Lower clamp threshold `(δ−1)/4δ` (≤ 0 when δ ≤ 1, so inactive).
    pub lower: f64,
    /// Upper clamp threshold `(δ+1)/4δ` (≥ ½ when δ ≤ 1, so inactive).
    pub upper: f64,
    /// Whether the lower clamp exists: true when the walk starts at the
    /// centre, false when it starts at the distinguished leaf (the first
    /// step then always enters the near edge, so only heavy near-leaf mass
    /// can be carried early and save entropy).
    lower_clamped: bool,
}

impl PiecewiseRate {
    /// Curve for the walk started at the centre (clamped on both sides).
    pub fn center_start(delta: f64) -> Result<Self, ClosedFormError> {
        Self::build(delta, true)
    }

    /// Curve for the walk started at the distinguished leaf (clamped above
    /// only).
    pub fn leaf_start(delta: f64) -> Result<Self, ClosedFormError> {
        Self::build(delta, false)
    }

    fn build(delta: f64, lower_clamped: bool) -> Result<Self, ClosedFormError> {
        if !(delta > 0.0) {
            return Err(ClosedFormError::NonPositiveDelta(delta));
        }
        Ok(PiecewiseRate {
            delta,
            lower: (delta - 1.0) / (4.0 * delta),
            upper: (delta + 1.0) / (4.0 * delta),
            lower_clamped,
        })
    }

    /// Evaluate by branch selection.
    pub fn eval(&self, x: f64) -> Result<f64, ClosedFormError> {
        if !(0.0..=0.5).contains(&x) {
            return Err(ClosedFormError::XOutOfRange(x));
        }
        if self.lower_clamped && x < self.lower {
            Ok(lower_branch(self.delta, x))
        } else if x > self.upper {
            Ok(upper_branch(self.delta, x))
        } else {
            Ok(middle_branch(x))
        }
    }

    /// Evaluate as the entropy gap `R(ν‖μ) − R(ν‖Tν)` between the measure's
    /// divergence from the degree-stationary measure and from its clamped
    /// projection `Tν` (leaf masses clamped into the threshold interval;
    /// with a leaf start the near leaf is only clamped from above and the
    /// far leaf only from below).
    pub fn eval_via_clamp(&self, x: f64) -> Result<f64, ClosedFormError> {
        if !(0.0..=0.5).contains(&x) {
            return Err(ClosedFormError::XOutOfRange(x));
        }
        let nu = [0.5, x, 0.5 - x];
        let mu = [0.5, 0.25, 0.25];
        let t = if self.lower_clamped {
            [0.5, x.max(self.lower).min(self.upper), (0.5 - x).max(self.lower).min(self.upper)]
        } else {
            [0.5, x.min(self.upper), (0.5 - x).max(self.lower)]
        };
        Ok(relative_entropy(&nu, &mu) - relative_entropy(&nu, &t))
    }
}

/// `Σ ν log(ν/ρ)` with the `0·log 0 = 0` convention; callers only pass
/// `ρ` positive wherever `ν` is.
fn relative_entropy(nu: &[f64], rho: &[f64]) -> f64 {
    nu.iter().zip(rho).map(|(&n, &r)| if n > 0.0 { n * (n / r).ln() } else { 0.0 }).sum()
}

fn xlog(x: f64, inner: f64) -> f64 {
    if x > 0.0 {
        x * inner.ln()
    } else {
        0.0
    }
}

/// Unclamped branch `x log 4x + (½−x) log 2(1−2x)`: the plain stationarity
/// cost, exact wherever no early-stage confinement helps.
fn middle_branch(x: f64) -> f64 {
    xlog(x, 4.0 * x) + xlog(0.5 - x, 2.0 * (1.0 - 2.0 * x))
}

/// Clamped branch below the lower threshold (light distinguished leaf).
fn lower_branch(delta: f64, x: f64) -> f64 {
    xlog(x, (delta - 1.0) / delta) + xlog(0.5 - x, (delta + 1.0) / delta)
}

/// Clamped branch above the upper threshold (heavy distinguished leaf).
fn upper_branch(delta: f64, x: f64) -> f64 {
    xlog(x, (delta + 1.0) / delta) + xlog(0.5 - x, (delta - 1.0) / delta)
}

/// Rate curve of the 3-vertex star (walk started at the centre) at leaf
/// mass `x`; the centre carries mass ½, the other leaf `½ − x`.  Measures
/// with centre mass ≠ ½ have infinite rate and are outside this function's
/// domain.
pub fn star3_rate(delta: f64, x: f64) -> Result<f64, ClosedFormError> {
    PiecewiseRate::center_start(delta)?.eval(x)
}

/// Rate curve of the 3-vertex path (walk started at a leaf) at start-leaf
/// mass `x`; the centre carries mass ½, the far leaf `½ − x`.
pub fn path3_rate(delta: f64, x: f64) -> Result<f64, ClosedFormError> {
    PiecewiseRate::leaf_start(delta)?.eval(x)
}

/// Closed exponent formulas for the named graphs: `½ log((1+δ)/δ)` for
/// `star3`, `path3` and `triangle`, `½ log((2+2δ)/(1+2δ))` for `path4`
/// (independent of the starting vertex).
pub fn alpha_closed(graph_tag: &str, delta: f64) -> Result<f64, ClosedFormError> {
    if !(delta > 0.0) {
        return Err(ClosedFormError::NonPositiveDelta(delta));
    }
    match graph_tag {
        "star3" | "path3" | "triangle" => Ok(0.5 * ((1.0 + delta) / delta).ln()),
        "path4" => Ok(0.5 * ((2.0 + 2.0 * delta) / (1.0 + 2.0 * delta)).ln()),
        other => Err(ClosedFormError::UnknownGraph(other.to_string())),
    }
}
