//! Backward induction over the operator's three decisions: sense, lease,
//! price.

mod leasing;
mod pricing;
mod sensing;

pub use leasing::{stage2_lease, LeasingCase, LeasingDecision};
pub use pricing::{b_th1, b_th2, stage3_price, PricingDecision, SupplyRegime};
pub use sensing::{
    expected_profit, first_order_sensing_root, golden_section_sensing, stage1_sense,
    SensingDecision, SensingMethod, SensingRegime,
};

use serde::Serialize;

use crate::demand::{optimal_demand, solve_q, DemandResult};
use crate::error::{Error, Result};
use crate::model::{Scenario, SnrModel};

/// Subgame-perfect outcome for one realization of the sensing factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumOutcome {
    pub b_s: f64,
    pub alpha: f64,
    pub b_l: f64,
    pub pi: f64,
    pub supply: f64,
    pub sensing_regime: SensingRegime,
    pub leasing_case: LeasingCase,
    pub pricing_regime: SupplyRegime,
    pub expected_profit: f64,
    pub operator_profit_realized: f64,
    pub per_user: Vec<DemandResult>,
    pub snr_common: f64,
}

/// Solves all stages for realization `alpha`.
pub fn equilibrium_at(scenario: &Scenario, alpha: f64) -> Result<EquilibriumOutcome> {
    let sensing = stage1_sense(scenario)?;
    equilibrium_given_sensing(scenario, &sensing, alpha)
}

/// Stages II-IV for a sensing decision that has already been made.
pub fn equilibrium_given_sensing(
    scenario: &Scenario,
    sensing: &SensingDecision,
    alpha: f64,
) -> Result<EquilibriumOutcome> {
    let g = scenario.total_g();
    let model = scenario.snr_model();
    let costs = scenario.costs();
    let b_s = sensing.b_s_star;
    let lease = stage2_lease(g, b_s, alpha, costs, model)?;
    let cost = b_s * costs.sensing() + lease.b_l_star * costs.leasing();
    let pricing = stage3_price(g, lease.supply, cost, model)?;
    let pi = pricing
        .pi_star
        .ok_or_else(|| Error::Domain("equilibrium supply is zero; price undefined".into()))?;
    let per_user = scenario
        .users()
        .iter()
        .map(|u| optimal_demand(u.g(), pi, model))
        .collect::<Result<Vec<_>>>()?;
    let snr_common = match model {
        SnrModel::HighSnr => (1.0 + pi).exp(),
        SnrModel::General => solve_q(pi)?.q,
    };
    Ok(EquilibriumOutcome {
        b_s,
        alpha,
        b_l: lease.b_l_star,
        pi,
        supply: lease.supply,
        sensing_regime: sensing.regime,
        leasing_case: lease.case_tag,
        pricing_regime: pricing.regime,
        expected_profit: sensing.expected_profit,
        operator_profit_realized: lease.profit,
        per_user,
        snr_common,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AlphaDistribution, CostParams, UserProfile};
    use approx::assert_relative_eq;

    #[test]
    fn realized_examples() {
        let s = Scenario::single_user(1.0, 0.8, 2.0).unwrap();
        let low = equilibrium_at(&s, 0.2).unwrap();
        assert_eq!(low.leasing_case, LeasingCase::CS1);
        assert!((low.b_l - 0.010_18).abs() < 1e-5, "{}", low.b_l);
        assert_relative_eq!(low.pi, 3.0, max_relative = 1e-12);
        assert!((low.operator_profit_realized - 0.002_04).abs() < 1e-5);

        let high = equilibrium_at(&s, 1.0).unwrap();
        assert_eq!(high.b_l, 0.0);
        // 30-digit references: pi = 2.2011885, profit = 0.0570477.
        assert!((high.pi - 2.201_188_5).abs() < 1e-6, "{}", high.pi);
        assert!((high.operator_profit_realized - 0.057_047_7).abs() < 1e-6);
    }

    #[test]
    fn high_sensing_cost_column() {
        let users = vec![
            UserProfile::from_g(0.4).unwrap(),
            UserProfile::new(2.0, 0.3, 0.5).unwrap(),
        ];
        let s = Scenario::new(
            users,
            CostParams::new(1.3, 2.0).unwrap(),
            AlphaDistribution::uniform(),
            SnrModel::HighSnr,
        )
        .unwrap();
        let g = s.total_g();
        for alpha in [0.0, 0.3, 1.0] {
            let o = equilibrium_at(&s, alpha).unwrap();
            assert_eq!(o.b_s, 0.0);
            assert_relative_eq!(o.pi, 3.0, max_relative = 1e-12);
            assert_relative_eq!(o.b_l, g * (-4.0f64).exp(), max_relative = 1e-12);
            for u in &o.per_user {
                assert_relative_eq!(u.snr, 4.0f64.exp(), max_relative = 1e-12);
                assert_relative_eq!(u.snr, o.snr_common, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn allocations_never_exceed_supply() {
        let s = Scenario::single_user(2.0, 0.3, 1.0).unwrap();
        let general = s.with_snr_model(SnrModel::General);
        for sc in [&s, &general] {
            for i in 0..=20 {
                let o = equilibrium_at(sc, i as f64 / 20.0).unwrap();
                let used: f64 = o.per_user.iter().map(|u| u.w).sum();
                assert!(used <= o.supply + 1e-9);
            }
        }
    }

    #[test]
    fn rejects_alpha_outside_unit_interval() {
        let s = Scenario::single_user(1.0, 0.8, 2.0).unwrap();
        assert!(equilibrium_at(&s, 1.5).is_err());
        assert!(equilibrium_at(&s, -0.1).is_err());
    }
}
