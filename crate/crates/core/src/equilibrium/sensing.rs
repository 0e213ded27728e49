//! Stage I: choose how much spectrum to sense before the realization factor
//! is known.
//!
//! With the high-SNR rate model and uniformly distributed realizations the
//! expected profit is an explicit three-piece function of the sensing amount
//! and the optimum is either zero or the root of its first-order condition on
//! the middle piece. Every other combination (general SNR, other laws, or a
//! sensing cost below the closed-form floor) is maximized numerically with a
//! golden-section search; the objective is concave in all of these cases.

use serde::Serialize;

use super::leasing::lease_with;
use super::pricing::NormalizedCurve;
use crate::error::{Error, Result};
use crate::model::{Scenario, SnrModel};
use crate::numeric::{bisect, golden_section_max};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SensingRegime {
    HighSensingCost,
    LowSensingCost,
    /// Sensing cost below `(1 - e^{-2 c_l}) / 4`; solved numerically.
    BelowCostFloor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SensingMethod {
    ClosedForm,
    GoldenSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensingDecision {
    pub b_s_star: f64,
    pub regime: SensingRegime,
    pub expected_profit: f64,
    pub method: SensingMethod,
}

/// Normalized optimizer resolution on `b_s / G`.
const SENSING_TOL: f64 = 1e-8;
/// Normalized bisection width for the first-order condition.
const ROOT_TOL: f64 = 1e-12;

fn uses_closed_form(scenario: &Scenario) -> bool {
    scenario.snr_model() == SnrModel::HighSnr && scenario.alpha().is_uniform()
}

/// Closed-form expected profit per `G` at `x = b_s / G` (high SNR, uniform).
fn closed_form_profit(x: f64, c_s: f64, c_l: f64) -> f64 {
    let t = (-(2.0 + c_l)).exp();
    let e2 = (-2.0f64).exp();
    if x <= t {
        t + x * (0.5 * c_l - c_s)
    } else if x <= e2 {
        middle_piece_profit(x, c_s, c_l)
    } else {
        e2 * e2 * (-2.0 * c_l).exp_m1() / (4.0 * x) - x * c_s + e2
    }
}

/// Expected profit per `G` when sensing can land in either conservative case.
fn middle_piece_profit(x: f64, c_s: f64, c_l: f64) -> f64 {
    let t = (-(2.0 + c_l)).exp();
    0.5 * x * (-x.ln()) - 0.25 * x + t * t / (4.0 * x) - x * c_s
}

/// Derivative of the middle piece per unit `x`.
fn middle_piece_slope(x: f64, c_s: f64, c_l: f64) -> f64 {
    let t = (-(2.0 + c_l)).exp();
    0.5 * (-x.ln()) - 0.75 - c_s - (t / (2.0 * x)).powi(2)
}

/// Expected profit before the realization factor is revealed, when `b_s`
/// units are sensed and Stages II and III respond optimally.
pub fn expected_profit(b_s: f64, scenario: &Scenario) -> Result<f64> {
    if !(b_s.is_finite() && b_s >= 0.0) {
        return Err(Error::Domain(format!(
            "sensing amount must be non-negative, got {b_s}"
        )));
    }
    let g = scenario.total_g();
    let costs = scenario.costs();
    if uses_closed_form(scenario) {
        return Ok(g * closed_form_profit(b_s / g, costs.sensing(), costs.leasing()));
    }
    let curve = NormalizedCurve::new(scenario.snr_model());
    let threshold = curve.lease_threshold(costs.leasing());
    numeric_expected_profit(&curve, threshold, b_s, scenario)
}

fn numeric_expected_profit(
    curve: &NormalizedCurve,
    threshold: f64,
    b_s: f64,
    scenario: &Scenario,
) -> Result<f64> {
    let g = scenario.total_g();
    let costs = scenario.costs();
    let profit = |alpha: f64| lease_with(curve, threshold, g, b_s, alpha, costs).profit;
    if b_s == 0.0 {
        return Ok(profit(0.0));
    }
    // Kinks where the sensed amount crosses the leasing threshold and the
    // revenue peak.
    let breaks = [g * threshold / b_s, g * curve.saturation / b_s];
    scenario.alpha().expectation_split(profit, &breaks)
}

/// Root of the middle-piece first-order condition on
/// `[G e^{-(2+c_l)}, G e^{-2}]` (high SNR, uniform, low sensing cost).
pub fn first_order_sensing_root(scenario: &Scenario) -> Result<f64> {
    if !uses_closed_form(scenario) {
        return Err(Error::Domain(
            "first-order condition needs the high-SNR model with uniform realizations".into(),
        ));
    }
    let costs = scenario.costs();
    let (c_s, c_l) = (costs.sensing(), costs.leasing());
    if !costs.low_bound_ok() || c_s > 0.5 * c_l {
        return Err(Error::Domain(format!(
            "no interior root for c_s = {c_s}, c_l = {c_l}"
        )));
    }
    let lo = (-(2.0 + c_l)).exp();
    let hi = (-2.0f64).exp();
    let x = bisect(|x| middle_piece_slope(x, c_s, c_l), lo, hi, ROOT_TOL)?;
    Ok(scenario.total_g() * x)
}

/// Golden-section maximization of the expected profit; returns
/// `(b_s, expected_profit)`.
pub fn golden_section_sensing(scenario: &Scenario) -> Result<(f64, f64)> {
    let g = scenario.total_g();
    let curve = NormalizedCurve::new(scenario.snr_model());
    let costs = scenario.costs();
    let threshold = curve.lease_threshold(costs.leasing());
    let closed = uses_closed_form(scenario);
    let per_g = |x: f64| -> f64 {
        if closed {
            closed_form_profit(x, costs.sensing(), costs.leasing())
        } else {
            numeric_expected_profit(&curve, threshold, x * g, scenario)
                .map(|v| v / g)
                .unwrap_or(f64::NAN)
        }
    };
    let mut upper = 4.0 * NormalizedCurve::new(SnrModel::General).saturation;
    // Beyond ~10^6 G the objective is numerically flat; treat that as an
    // unbounded optimum (free sensing).
    for _ in 0..20 {
        let (x, v) = golden_section_max(per_g, 0.0, upper, SENSING_TOL)?;
        if x < upper * (1.0 - 1e-6) {
            return Ok((g * x, g * v));
        }
        upper *= 2.0;
    }
    Err(Error::OptimizerStall(format!(
        "expected profit still increasing at b_s = {} G",
        upper / 2.0
    )))
}

/// Optimal sensing amount and the resulting expected profit.
pub fn stage1_sense(scenario: &Scenario) -> Result<SensingDecision> {
    let g = scenario.total_g();
    let costs = scenario.costs();
    let (c_s, c_l) = (costs.sensing(), costs.leasing());
    if uses_closed_form(scenario) && costs.low_bound_ok() {
        if c_s > 0.5 * c_l {
            return Ok(SensingDecision {
                b_s_star: 0.0,
                regime: SensingRegime::HighSensingCost,
                expected_profit: g * (-(2.0 + c_l)).exp(),
                method: SensingMethod::ClosedForm,
            });
        }
        let b_s = first_order_sensing_root(scenario)?;
        return Ok(SensingDecision {
            b_s_star: b_s,
            regime: SensingRegime::LowSensingCost,
            expected_profit: g * middle_piece_profit(b_s / g, c_s, c_l),
            method: SensingMethod::ClosedForm,
        });
    }
    let (b_s, profit) = golden_section_sensing(scenario)?;
    let regime = if b_s == 0.0 {
        SensingRegime::HighSensingCost
    } else if !costs.low_bound_ok() {
        SensingRegime::BelowCostFloor
    } else {
        SensingRegime::LowSensingCost
    };
    Ok(SensingDecision {
        b_s_star: b_s,
        regime,
        expected_profit: profit,
        method: SensingMethod::GoldenSection,
    })
}
