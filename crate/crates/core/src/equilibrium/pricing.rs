//! Stage III: price the bandwidth already acquired.

use serde::Serialize;

use crate::demand::{general_revenue_peak, marginal_revenue_normalized, price_of_snr};
use crate::error::{Error, Result};
use crate::model::SnrModel;
use crate::numeric::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SupplyRegime {
    /// Supply covers the revenue-maximizing demand; some bandwidth may go unsold.
    ExcessiveSupply,
    /// Price is set so that demand equals supply.
    ConservativeSupply,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PricingDecision {
    /// `None` when there is nothing to sell.
    pub pi_star: Option<f64>,
    pub regime: SupplyRegime,
    pub revenue: f64,
    /// Revenue minus the acquisition cost handed in by the caller.
    pub profit: f64,
}

/// Revenue and threshold structure of the market per unit of aggregate
/// characteristic `G`. Every quantity here is independent of `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NormalizedCurve {
    pub model: SnrModel,
    /// Supply per `G` at which the revenue peaks.
    pub saturation: f64,
    /// Revenue-maximizing price.
    pub peak_price: f64,
}

impl NormalizedCurve {
    pub fn new(model: SnrModel) -> Self {
        match model {
            SnrModel::HighSnr => NormalizedCurve {
                model,
                saturation: (-2.0f64).exp(),
                peak_price: 1.0,
            },
            SnrModel::General => {
                let peak = general_revenue_peak();
                NormalizedCurve {
                    model,
                    saturation: peak.supply_per_g,
                    peak_price: peak.price,
                }
            }
        }
    }

    /// Price at which demand per `G` equals `x > 0`.
    pub fn clearing_price(&self, x: f64) -> f64 {
        match self.model {
            SnrModel::HighSnr => -x.ln() - 1.0,
            SnrModel::General => price_of_snr(1.0 / x),
        }
    }

    /// Best revenue per `G` from supply `x` per `G`.
    pub fn revenue(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= self.saturation {
            self.saturation * self.peak_price
        } else {
            x * self.clearing_price(x)
        }
    }

    /// Supply per `G` where marginal revenue drops to the leasing cost.
    pub fn lease_threshold(&self, c_l: f64) -> f64 {
        match self.model {
            SnrModel::HighSnr => (-(2.0 + c_l)).exp(),
            SnrModel::General => general_lease_threshold(c_l, self.saturation),
        }
    }
}

fn general_lease_threshold(c_l: f64, saturation: f64) -> f64 {
    if c_l <= 0.0 {
        return saturation;
    }
    let excess = |x: f64| marginal_revenue_normalized(x) - c_l;
    let mut lo = 0.5 * saturation;
    let mut halvings = 0;
    while excess(lo) <= 0.0 {
        lo *= 0.5;
        halvings += 1;
        if halvings > 1100 || lo == 0.0 {
            // Marginal revenue never reaches c_l at representable supplies.
            return 0.0;
        }
    }
    let hi = if halvings == 0 { saturation } else { 2.0 * lo };
    bisect(excess, lo, hi, 1e-12 * hi.min(1.0)).unwrap_or(0.0)
}

fn validate(g_total: f64, supply: f64) -> Result<()> {
    if !(g_total.is_finite() && g_total > 0.0) {
        return Err(Error::Domain(format!("G must be positive, got {g_total}")));
    }
    if !(supply.is_finite() && supply >= 0.0) {
        return Err(Error::Domain(format!(
            "supply must be non-negative, got {supply}"
        )));
    }
    Ok(())
}

/// Revenue-maximizing price for `supply` units of bandwidth sold to a
/// population with aggregate characteristic `g_total`.
///
/// `acquisition_cost` (sensing plus leasing spend) is already sunk; it only
/// enters the reported profit.
pub fn stage3_price(
    g_total: f64,
    supply: f64,
    acquisition_cost: f64,
    model: SnrModel,
) -> Result<PricingDecision> {
    validate(g_total, supply)?;
    if !acquisition_cost.is_finite() {
        return Err(Error::Domain("acquisition cost must be finite".into()));
    }
    let curve = NormalizedCurve::new(model);
    if supply == 0.0 {
        return Ok(PricingDecision {
            pi_star: None,
            regime: SupplyRegime::ConservativeSupply,
            revenue: 0.0,
            profit: -acquisition_cost,
        });
    }
    let (pi, regime, revenue) = if supply >= g_total * curve.saturation {
        (
            curve.peak_price,
            SupplyRegime::ExcessiveSupply,
            g_total * curve.saturation * curve.peak_price,
        )
    } else {
        let pi = curve.clearing_price(supply / g_total);
        (pi, SupplyRegime::ConservativeSupply, supply * pi)
    };
    Ok(PricingDecision {
        pi_star: Some(pi),
        regime,
        revenue,
        profit: revenue - acquisition_cost,
    })
}

/// General-SNR supply at which the revenue-maximizing price clears the market.
pub fn b_th1(g_total: f64) -> Result<f64> {
    validate(g_total, 0.0)?;
    Ok(g_total * general_revenue_peak().supply_per_g)
}

/// General-SNR supply where the marginal revenue of bandwidth equals `c_l`.
///
/// Returns `b_th1` for a free lease and 0 when no supply is worth leasing.
pub fn b_th2(g_total: f64, c_l: f64) -> Result<f64> {
    validate(g_total, 0.0)?;
    if !(c_l.is_finite() && c_l >= 0.0) {
        return Err(Error::Domain(format!(
            "leasing cost must be non-negative, got {c_l}"
        )));
    }
    let curve = NormalizedCurve::new(SnrModel::General);
    Ok(g_total * curve.lease_threshold(c_l))
}
