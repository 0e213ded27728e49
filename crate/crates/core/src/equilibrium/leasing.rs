//! Stage II: lease on top of the sensed bandwidth.

use serde::Serialize;

use super::pricing::NormalizedCurve;
use crate::error::{Error, Result};
use crate::model::{CostParams, SnrModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LeasingCase {
    /// Sensed bandwidth is below the leasing threshold; lease up to it.
    CS1,
    /// Between the leasing threshold and the revenue peak; no lease.
    CS2,
    /// Sensing alone overshoots the revenue peak; no lease.
    ES3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeasingDecision {
    pub b_l_star: f64,
    pub case_tag: LeasingCase,
    /// Realized profit with the optimal lease and price.
    pub profit: f64,
    /// Total bandwidth on offer after leasing.
    pub supply: f64,
}

/// Optimal lease given `b_s` sensed units of which a fraction `alpha` turned
/// out to be usable.
pub fn stage2_lease(
    g_total: f64,
    b_s: f64,
    alpha: f64,
    costs: CostParams,
    model: SnrModel,
) -> Result<LeasingDecision> {
    validate(g_total, b_s, alpha)?;
    let curve = NormalizedCurve::new(model);
    let threshold = curve.lease_threshold(costs.leasing());
    Ok(lease_with(&curve, threshold, g_total, b_s, alpha, costs))
}

fn validate(g_total: f64, b_s: f64, alpha: f64) -> Result<()> {
    if !(g_total.is_finite() && g_total > 0.0) {
        return Err(Error::Domain(format!("G must be positive, got {g_total}")));
    }
    if !(b_s.is_finite() && b_s >= 0.0) {
        return Err(Error::Domain(format!(
            "sensing amount must be non-negative, got {b_s}"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// Stage II with the curve and the per-`G` leasing threshold precomputed.
pub(crate) fn lease_with(
    curve: &NormalizedCurve,
    threshold: f64,
    g_total: f64,
    b_s: f64,
    alpha: f64,
    costs: CostParams,
) -> LeasingDecision {
    let (c_s, c_l) = (costs.sensing(), costs.leasing());
    let sensed = b_s * alpha;
    let x = sensed / g_total;
    let (case_tag, b_l) = if x <= threshold {
        (LeasingCase::CS1, g_total * (threshold - x))
    } else if x <= curve.saturation {
        (LeasingCase::CS2, 0.0)
    } else {
        (LeasingCase::ES3, 0.0)
    };
    let profit = match curve.model {
        SnrModel::HighSnr => {
            let t = g_total * threshold;
            match case_tag {
                LeasingCase::CS1 => high_snr_cs1_profit(t, b_s, alpha, c_s, c_l),
                LeasingCase::CS2 => sensed * (g_total / sensed).ln() - b_s * (alpha + c_s),
                LeasingCase::ES3 => g_total * curve.saturation - b_s * c_s,
            }
        }
        SnrModel::General => {
            g_total * curve.revenue((sensed + b_l) / g_total) - b_s * c_s - b_l * c_l
        }
    };
    LeasingDecision {
        b_l_star: b_l,
        case_tag,
        profit,
        supply: sensed + b_l,
    }
}

fn high_snr_cs1_profit(threshold: f64, b_s: f64, alpha: f64, c_s: f64, c_l: f64) -> f64 {
    threshold + b_s * (alpha * c_l - c_s)
}
