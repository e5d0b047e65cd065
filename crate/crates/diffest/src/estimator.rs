//! Windowed-mean estimation with finite-sample confidence radii.
//!
//! Everything here is a pure function of its arguments. The estimator is
//! a box-kernel (indicator window) mean: at a query point `x` with
//! bandwidth `h`, the estimate is the arithmetic mean of the outputs of
//! all samples whose explanatory value lies in `[x-h, x+h]`, both edges
//! included. The number of such samples is the kernel mass `kappa`.
//!
//! The confidence radius combines a bias term and a noise term:
//!
//! ```text
//! beta = L*h + 2*sigma*alpha(kappa, delta) / kappa
//! ```
//!
//! where `L` is the phenomenon's Lipschitz constant, `sigma` the
//! sub-Gaussian scale of the observation noise, and `alpha` a
//! self-normalized deviation term. All logarithms are natural. When the
//! window is empty (`kappa = 0`) there is no estimate and the radius is
//! positive infinity; that is a value, not an error.
//!
//! Bandwidth can be fixed or chosen per query to minimize `beta` over
//! `[h_min, h_max]`. For the box kernel `kappa(h)` is a right-continuous
//! step function jumping exactly at the sample distances `|x - xi_n|`,
//! and between jumps `beta` is affine and increasing in `h`, so the
//! minimum is attained on the finite candidate set `{h_min}` united with
//! the in-range distances. [`optimize_bandwidth`] enumerates that set
//! exactly; [`optimize_bandwidth_golden`] is an interval-shrinking
//! alternative kept as a configuration option.

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// One local observation: an explanatory value and its noisy output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub xi: f64,
    pub y: f64,
}

/// Kernel family. Only the indicator (box) window is provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Box,
}

/// How the window half-width is chosen at a query point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BandwidthMode {
    /// One half-width for every query.
    Fixed { h: f64 },
    /// Minimize the confidence radius over `[h_min, h_max]` per query.
    PerQueryOptimal { h_min: f64, h_max: f64 },
}

/// Minimization routine used in per-query-optimal mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    /// Exact enumeration of the breakpoints of the step function
    /// `kappa(h)`; the default, and exact for the box kernel.
    #[default]
    ExactBreakpoints,
    /// Golden-section interval shrinking. Kept as an option; the radius
    /// is not unimodal in `h`, so this is a heuristic.
    GoldenSection,
}

/// Kernel family plus bandwidth policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub bandwidth: BandwidthMode,
    #[serde(default)]
    pub search: SearchMethod,
}

/// Scale parameters entering the confidence radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    /// Known bound on the phenomenon's rate of change; nonnegative.
    pub lipschitz: f64,
    /// Sub-Gaussian scale of the observation noise; strictly positive.
    pub sigma: f64,
    /// Per-query failure probability; strictly inside (0, 1).
    pub delta: f64,
}

/// Result of evaluating the estimator at one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalEvaluation {
    /// Windowed mean; `None` exactly when the window is empty.
    pub mu_hat: Option<f64>,
    /// Number of in-window samples.
    pub kappa: f64,
    /// Confidence radius; infinite exactly when the window is empty.
    pub beta: f64,
    /// Half-width actually used (the fixed one, or the minimizer).
    pub h_used: f64,
}

/// Raised when a bandwidth search range is empty or non-positive.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("invalid bandwidth range: need 0 < h_min < h_max, got [{h_min}, {h_max}]")]
pub struct InvalidRange {
    pub h_min: f64,
    pub h_max: f64,
}

/// Box kernel: 1 inside the closed unit window, 0 outside.
pub fn kernel_eval(v: f64) -> f64 {
    if v.abs() <= 1.0 {
        1.0
    } else {
        0.0
    }
}

/// Closed-window membership. Phrased on raw distances (no quotient) so
/// the bandwidth search's candidate set uses the exact same predicate.
fn in_window(x: f64, xi: f64, h: f64) -> bool {
    (x - xi).abs() <= h
}

/// Kernel mass at `x`: the number of samples in `[x-h, x+h]`.
pub fn kappa(x: f64, samples: &[Sample], h: f64) -> f64 {
    debug_assert!(h > 0.0);
    samples.iter().filter(|s| in_window(x, s.xi, h)).count() as f64
}

/// Windowed mean of the outputs at `x`, or `None` when the window is
/// empty.
///
/// In-window outputs are accumulated in value-sorted order, so the
/// result is invariant under permutation of the sample list, bit for
/// bit.
pub fn nw_estimate(x: f64, samples: &[Sample], h: f64) -> Option<f64> {
    debug_assert!(h > 0.0);
    let mut ys: Vec<f64> = samples
        .iter()
        .filter(|s| in_window(x, s.xi, h))
        .map(|s| s.y)
        .collect();
    if ys.is_empty() {
        return None;
    }
    ys.sort_unstable_by(f64::total_cmp);
    Some(ys.iter().sum::<f64>() / ys.len() as f64)
}

/// Self-normalized deviation term of the confidence radius.
///
/// `sqrt(ln(sqrt(2)/delta))` for `kappa <= 1`, and
/// `sqrt(kappa * ln(sqrt(1 + kappa)/delta))` for `kappa > 1`; the two
/// branches coincide at `kappa = 1`. Natural logarithms.
pub fn alpha(kappa: f64, delta: f64) -> f64 {
    debug_assert!(kappa >= 0.0);
    debug_assert!(delta > 0.0 && delta < 1.0);
    if kappa <= 1.0 {
        (SQRT_2 / delta).ln().sqrt()
    } else {
        (kappa * ((1.0 + kappa).sqrt() / delta).ln()).sqrt()
    }
}

fn beta_from_kappa(kappa: f64, h: f64, params: &BoundParams) -> f64 {
    if kappa == 0.0 {
        f64::INFINITY
    } else {
        params.lipschitz * h + 2.0 * params.sigma * alpha(kappa, params.delta) / kappa
    }
}

/// Confidence radius at `x` with bandwidth `h`: `L*h + 2*sigma*alpha/kappa`,
/// or positive infinity when the window is empty.
pub fn beta_bound(x: f64, samples: &[Sample], h: f64, params: &BoundParams) -> f64 {
    beta_from_kappa(kappa(x, samples, h), h, params)
}

/// Exact minimizer of the confidence radius over `h in [h_min, h_max]`.
///
/// Candidates are `h_min` plus every distinct sample distance inside the
/// range; on each interval between candidates the radius is affine
/// increasing, so its global minimum sits on a candidate. Ties go to the
/// smallest `h`. With no sample inside `h_max` the result is
/// `(h_min, infinity)`.
pub fn optimize_bandwidth(
    x: f64,
    samples: &[Sample],
    params: &BoundParams,
    h_min: f64,
    h_max: f64,
) -> Result<(f64, f64), InvalidRange> {
    if !(h_min > 0.0 && h_min < h_max) {
        return Err(InvalidRange { h_min, h_max });
    }
    let mut dist: Vec<f64> = samples.iter().map(|s| (x - s.xi).abs()).collect();
    dist.sort_unstable_by(f64::total_cmp);

    // Mass at a candidate h is the number of distances <= h.
    let at_h_min = dist.partition_point(|&d| d <= h_min);
    let mut best_h = h_min;
    let mut best_beta = beta_from_kappa(at_h_min as f64, h_min, params);

    let mut i = at_h_min;
    while i < dist.len() && dist[i] <= h_max {
        let h = dist[i];
        let mut j = i + 1;
        while j < dist.len() && dist[j] == h {
            j += 1;
        }
        let beta = beta_from_kappa(j as f64, h, params);
        if beta < best_beta {
            best_beta = beta;
            best_h = h;
        }
        i = j;
    }
    Ok((best_h, best_beta))
}

/// Golden-section alternative to [`optimize_bandwidth`].
///
/// Shrinks `[h_min, h_max]` through a fixed probe budget and returns the
/// best radius seen at any probed point (endpoints included). Because
/// the radius is piecewise affine with downward jumps rather than
/// unimodal, this can miss the exact minimizer; it is retained for
/// continuity with bound-minimization by line search.
pub fn optimize_bandwidth_golden(
    x: f64,
    samples: &[Sample],
    params: &BoundParams,
    h_min: f64,
    h_max: f64,
) -> Result<(f64, f64), InvalidRange> {
    if !(h_min > 0.0 && h_min < h_max) {
        return Err(InvalidRange { h_min, h_max });
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    const ROUNDS: usize = 96;

    let mut best_h = f64::NAN;
    let mut best_beta = f64::INFINITY;
    let mut consider = |h: f64, beta: f64| {
        if beta < best_beta || (beta == best_beta && h < best_h) {
            best_beta = beta;
            best_h = h;
        }
    };
    consider(h_min, beta_bound(x, samples, h_min, params));
    consider(h_max, beta_bound(x, samples, h_max, params));

    let (mut a, mut b) = (h_min, h_max);
    for _ in 0..ROUNDS {
        let lo = b - (b - a) * INV_PHI;
        let hi = a + (b - a) * INV_PHI;
        let f_lo = beta_bound(x, samples, lo, params);
        let f_hi = beta_bound(x, samples, hi, params);
        consider(lo, f_lo);
        consider(hi, f_hi);
        if f_lo < f_hi {
            b = hi;
        } else {
            a = lo;
        }
    }
    // A NaN best_h would need beta_bound to return NaN, which it cannot.
    Ok((best_h, best_beta))
}

/// Full evaluation at one query point under a kernel configuration.
///
/// Fixed mode reproduces [`nw_estimate`] and [`beta_bound`] at the fixed
/// half-width; per-query-optimal mode first selects the half-width with
/// the configured search, then evaluates there. The range of a
/// per-query-optimal mode must be valid (checked at configuration time).
pub fn evaluate(
    x: f64,
    samples: &[Sample],
    kernel: &KernelConfig,
    params: &BoundParams,
) -> LocalEvaluation {
    let (h_used, beta) = match kernel.bandwidth {
        BandwidthMode::Fixed { h } => {
            debug_assert!(h > 0.0);
            (h, beta_bound(x, samples, h, params))
        }
        BandwidthMode::PerQueryOptimal { h_min, h_max } => match kernel.search {
            SearchMethod::ExactBreakpoints => {
                optimize_bandwidth(x, samples, params, h_min, h_max)
                    .expect("bandwidth range validated at configuration time")
            }
            SearchMethod::GoldenSection => {
                optimize_bandwidth_golden(x, samples, params, h_min, h_max)
                    .expect("bandwidth range validated at configuration time")
            }
        },
    };
    LocalEvaluation {
        mu_hat: nw_estimate(x, samples, h_used),
        kappa: kappa(x, samples, h_used),
        beta,
        h_used,
    }
}
