//! Brute-force verification of the backward-induction solution.
//!
//! Nothing here calls the closed forms it checks. Revenue for a given supply
//! is rebuilt from the users' demand curve alone (a bisection for the clearing
//! price, a golden-section search for the revenue peak); prices, leases and
//! sensing amounts are then found by exhaustive enumeration, and the
//! expectation over the realization factor by seeded Monte-Carlo sampling.
//!
//! Profit tolerances are relative (`Budgets::profit_rel_tol`) widened to three
//! standard errors when sampling is involved; decision tolerances are one
//! grid step, widened to the statistically indistinguishable neighbourhood of
//! the sampled maximum.

use rayon::prelude::*;
use serde::Serialize;

use crate::demand::total_demand;
use crate::equilibrium::{self, LeasingDecision, PricingDecision, SensingDecision};
use crate::error::Result;
use crate::format::round_json;
use crate::model::{CostParams, Scenario, SnrModel};
use crate::numeric::{bisect, golden_section_max};
use crate::rng;

/// Floor applied to the denominator of relative deviations.
pub const REL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    Pricing,
    Leasing,
    Sensing,
    EndToEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub scenario: usize,
    pub stage: Stage,
    /// Revenue (pricing) or profit (leasing, sensing) from the solver.
    pub closed_form_value: f64,
    pub brute_force_value: f64,
    pub abs_dev: f64,
    pub rel_dev: f64,
    pub value_tol: f64,
    /// Price, lease or sensing amount; absent when undefined.
    pub closed_form_decision: Option<f64>,
    pub brute_force_decision: Option<f64>,
    pub decision_dev: f64,
    pub decision_tol: f64,
    pub grid_density: usize,
    pub mc_samples: usize,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl OracleReport {
    pub fn to_json_line(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        round_json(&mut v);
        v.to_string()
    }

    fn failed(scenario: usize, stage: Stage, budgets: &Budgets, error: String) -> Self {
        OracleReport {
            scenario,
            stage,
            closed_form_value: f64::NAN,
            brute_force_value: f64::NAN,
            abs_dev: f64::NAN,
            rel_dev: f64::NAN,
            value_tol: 0.0,
            closed_form_decision: None,
            brute_force_decision: None,
            decision_dev: f64::NAN,
            decision_tol: 0.0,
            grid_density: budgets.grid_density,
            mc_samples: budgets.mc_samples,
            passed: false,
            error: Some(error),
        }
    }
}

fn rel_dev(abs_dev: f64, reference: f64) -> f64 {
    abs_dev / reference.abs().max(REL_FLOOR)
}

/// The solver under test.
pub trait ClosedFormSolver: Sync {
    fn stage3(&self, g: f64, supply: f64, model: SnrModel) -> Result<PricingDecision>;
    fn stage2(
        &self,
        g: f64,
        b_s: f64,
        alpha: f64,
        costs: CostParams,
        model: SnrModel,
    ) -> Result<LeasingDecision>;
    fn stage1(&self, scenario: &Scenario) -> Result<SensingDecision>;
}

/// The library's own backward-induction solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct BackwardInduction;

impl ClosedFormSolver for BackwardInduction {
    fn stage3(&self, g: f64, supply: f64, model: SnrModel) -> Result<PricingDecision> {
        equilibrium::stage3_price(g, supply, 0.0, model)
    }

    fn stage2(
        &self,
        g: f64,
        b_s: f64,
        alpha: f64,
        costs: CostParams,
        model: SnrModel,
    ) -> Result<LeasingDecision> {
        equilibrium::stage2_lease(g, b_s, alpha, costs, model)
    }

    fn stage1(&self, scenario: &Scenario) -> Result<SensingDecision> {
        equilibrium::stage1_sense(scenario)
    }
}

/// Negative control: scales every decision and value of the wrapped solver.
#[doc(hidden)]
#[derive(Debug, Clone, Copy)]
pub struct Corrupted<S> {
    pub inner: S,
    pub factor: f64,
}

impl<S: ClosedFormSolver> ClosedFormSolver for Corrupted<S> {
    fn stage3(&self, g: f64, supply: f64, model: SnrModel) -> Result<PricingDecision> {
        let mut d = self.inner.stage3(g, supply, model)?;
        d.pi_star = d.pi_star.map(|p| p * self.factor);
        d.revenue *= self.factor;
        d.profit *= self.factor;
        Ok(d)
    }

    fn stage2(
        &self,
        g: f64,
        b_s: f64,
        alpha: f64,
        costs: CostParams,
        model: SnrModel,
    ) -> Result<LeasingDecision> {
        let mut d = self.inner.stage2(g, b_s, alpha, costs, model)?;
        d.b_l_star *= self.factor;
        d.profit *= self.factor;
        Ok(d)
    }

    fn stage1(&self, scenario: &Scenario) -> Result<SensingDecision> {
        let mut d = self.inner.stage1(scenario)?;
        d.b_s_star *= self.factor;
        d.expected_profit *= self.factor;
        Ok(d)
    }
}

/// Work budgets and pass thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Budgets {
    pub grid_density: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub profit_rel_tol: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            grid_density: 10_000,
            mc_samples: 100_000,
            seed: 0,
            profit_rel_tol: 0.01,
        }
    }
}

/// Revenue of a given supply, rebuilt from the demand curve.
struct DemandSide {
    g: f64,
    model: SnrModel,
    peak_price: f64,
    peak_revenue: f64,
    peak_demand: f64,
}

impl DemandSide {
    fn new(g: f64, model: SnrModel) -> Result<Self> {
        let revenue = |pi: f64| pi * total_demand(g, pi, model).unwrap_or(f64::NAN);
        let (peak_price, peak_revenue) = golden_section_max(revenue, 1e-6, 20.0, 1e-12)?;
        Ok(DemandSide {
            g,
            model,
            peak_price,
            peak_revenue,
            peak_demand: total_demand(g, peak_price, model)?,
        })
    }

    fn demand(&self, pi: f64) -> f64 {
        total_demand(self.g, pi, self.model).unwrap_or(f64::NAN)
    }

    /// `max_pi min(pi * demand(pi), pi * supply)`.
    fn revenue(&self, supply: f64) -> f64 {
        if supply <= 0.0 {
            return 0.0;
        }
        if supply >= self.peak_demand {
            return self.peak_revenue;
        }
        // Clearing price lies above the peak because demand is decreasing.
        let mut hi = 2.0 * self.peak_price.max(1.0);
        while self.demand(hi) > supply && hi < 1e6 {
            hi *= 2.0;
        }
        let excess = |pi: f64| self.demand(pi) - supply;
        match bisect(excess, self.peak_price, hi, 1e-13 * hi) {
            Ok(pi) => pi * supply,
            Err(_) => f64::NAN,
        }
    }
}

/// Enumerates prices and returns the report for pricing `supply`.
pub fn grid_stage3(
    solver: &dyn ClosedFormSolver,
    g: f64,
    supply: f64,
    model: SnrModel,
    budgets: &Budgets,
) -> OracleReport {
    let n = budgets.grid_density.max(1);
    let closed = match solver.stage3(g, supply, model) {
        Ok(c) => c,
        Err(e) => return OracleReport::failed(0, Stage::Pricing, budgets, e.to_string()),
    };
    let step = 10.0 / n as f64;
    let uniform = (1..=n).map(|i| i as f64 * step);
    // Extra log-spaced points resolve the region near zero price.
    let log_points = (n / 10).max(10);
    let (lo, hi) = (1e-6f64.ln(), step.ln());
    let logs = (0..log_points).map(|i| (lo + (hi - lo) * i as f64 / log_points as f64).exp());
    let objective = |pi: f64| {
        let d = pi * total_demand(g, pi, model).unwrap_or(f64::NAN);
        d.min(pi * supply)
    };
    let best = logs
        .chain(uniform)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|pi| (pi, objective(pi)))
        .reduce(
            || (f64::NAN, f64::NEG_INFINITY),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    let abs_dev = (closed.revenue - best.1).abs();
    let value_tol = budgets.profit_rel_tol * closed.revenue.abs().max(REL_FLOOR);
    let (brute_decision, decision_dev) = if supply == 0.0 {
        (
            None,
            if closed.pi_star.is_none() {
                0.0
            } else {
                f64::INFINITY
            },
        )
    } else {
        let dev = closed.pi_star.map_or(f64::INFINITY, |p| (p - best.0).abs());
        (Some(best.0), dev)
    };
    OracleReport {
        scenario: 0,
        stage: Stage::Pricing,
        closed_form_value: closed.revenue,
        brute_force_value: best.1,
        abs_dev,
        rel_dev: rel_dev(abs_dev, closed.revenue),
        value_tol,
        closed_form_decision: closed.pi_star,
        brute_force_decision: brute_decision,
        decision_dev,
        decision_tol: step,
        grid_density: n,
        mc_samples: 0,
        passed: abs_dev <= value_tol && decision_dev <= step,
        error: None,
    }
}

/// Enumerates leases `b_l` on `[0, G]` for a given sensing outcome.
pub fn grid_stage2(
    solver: &dyn ClosedFormSolver,
    g: f64,
    b_s: f64,
    alpha: f64,
    costs: CostParams,
    model: SnrModel,
    budgets: &Budgets,
) -> OracleReport {
    let n = budgets.grid_density.max(1);
    let closed = match solver.stage2(g, b_s, alpha, costs, model) {
        Ok(c) => c,
        Err(e) => return OracleReport::failed(0, Stage::Leasing, budgets, e.to_string()),
    };
    let market = match DemandSide::new(g, model) {
        Ok(m) => m,
        Err(e) => return OracleReport::failed(0, Stage::Leasing, budgets, e.to_string()),
    };
    let sensed = b_s * alpha;
    let step = g / n as f64;
    let profit =
        |b_l: f64| market.revenue(sensed + b_l) - b_s * costs.sensing() - b_l * costs.leasing();
    let best = (0..=n)
        .into_par_iter()
        .map(|j| {
            let b_l = j as f64 * step;
            (b_l, profit(b_l))
        })
        .reduce(
            || (f64::NAN, f64::NEG_INFINITY),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    let abs_dev = (closed.profit - best.1).abs();
    let value_tol = budgets.profit_rel_tol * closed.profit.abs().max(REL_FLOOR);
    let decision_dev = (closed.b_l_star - best.0).abs();
    OracleReport {
        scenario: 0,
        stage: Stage::Leasing,
        closed_form_value: closed.profit,
        brute_force_value: best.1,
        abs_dev,
        rel_dev: rel_dev(abs_dev, closed.profit),
        value_tol,
        closed_form_decision: Some(closed.b_l_star),
        brute_force_decision: Some(best.0),
        decision_dev,
        decision_tol: step,
        grid_density: n,
        mc_samples: 0,
        passed: abs_dev <= value_tol && decision_dev <= step,
        error: None,
    }
}

/// Leasing value `max_{b_l} revenue(s + b_l) - b_l c_l` tabulated on a supply
/// grid, leases enumerated on the same grid.
struct LeaseValueTable {
    values: Vec<f64>,
    slopes: Vec<f64>,
    inv_step: f64,
}

impl LeaseValueTable {
    fn build(market: &DemandSide, c_l: f64, top: f64, nodes: usize) -> Self {
        let step = top / nodes as f64;
        let supplies: Vec<f64> = (0..=nodes).map(|k| k as f64 * step).collect();
        let net: Vec<f64> = supplies
            .par_iter()
            .map(|&s| market.revenue(s) - s * c_l)
            .collect();
        // values[k] = s_k c_l + max_{j >= k} (revenue_j - s_j c_l)
        let mut values = vec![0.0; nodes + 1];
        let mut best = f64::NEG_INFINITY;
        for k in (0..=nodes).rev() {
            best = best.max(net[k]);
            values[k] = supplies[k] * c_l + best;
        }
        let mut slopes: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        slopes.push(0.0);
        LeaseValueTable {
            values,
            slopes,
            inv_step: 1.0 / step,
        }
    }

    #[inline]
    fn at(&self, s: f64) -> f64 {
        let t = s * self.inv_step;
        let k = (t as usize).min(self.values.len() - 2);
        self.values[k] + (t - k as f64) * self.slopes[k]
    }
}

/// Enumerates sensing amounts, estimating each expected profit with the same
/// `mc_samples` realizations (common random numbers).
pub fn grid_stage1(
    solver: &dyn ClosedFormSolver,
    scenario: &Scenario,
    budgets: &Budgets,
    stream_key: u64,
) -> OracleReport {
    let n = budgets.grid_density.max(1);
    let m = budgets.mc_samples.max(2);
    let closed = match solver.stage1(scenario) {
        Ok(c) => c,
        Err(e) => return OracleReport::failed(0, Stage::Sensing, budgets, e.to_string()),
    };
    let g = scenario.total_g();
    let costs = scenario.costs();
    let market = match DemandSide::new(g, scenario.snr_model()) {
        Ok(m) => m,
        Err(e) => return OracleReport::failed(0, Stage::Sensing, budgets, e.to_string()),
    };
    let top = 4.0 * market.peak_demand;
    let table = LeaseValueTable::build(&market, costs.leasing(), top, 8 * n);
    let mut stream = rng::stream(budgets.seed, stream_key);
    let alphas: Vec<f64> = (0..m)
        .map(|_| scenario.alpha().sample(&mut stream))
        .collect();

    // Sample mean and standard error of realized profit at sensing amount b.
    let estimate = |b: f64| -> (f64, f64) {
        let (mut sum, mut sq) = (0.0, 0.0);
        for &a in &alphas {
            let v = table.at(b * a);
            sum += v;
            sq += v * v;
        }
        let mean = sum / m as f64;
        let var = ((sq / m as f64 - mean * mean) * m as f64 / (m as f64 - 1.0)).max(0.0);
        (mean - b * costs.sensing(), (var / m as f64).sqrt())
    };
    let step = top / n as f64;
    let curve: Vec<(f64, f64)> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let b = i as f64 * step;
            (b, estimate(b).0)
        })
        .collect();
    let (arg, &(b_best, v_best)) = curve
        .iter()
        .enumerate()
        .fold(None::<(usize, &(f64, f64))>, |acc, (i, p)| match acc {
            Some((_, q)) if q.1 >= p.1 => acc,
            _ => Some((i, p)),
        })
        .expect("grid is non-empty");
    let (_, se) = estimate(b_best);
    let mc_tol = 3.0 * se;

    // Grid points statistically indistinguishable from the sampled maximum.
    let near = |i: usize| curve[i].1 >= v_best - mc_tol;
    let mut left = arg;
    while left > 0 && near(left - 1) {
        left -= 1;
    }
    let mut right = arg;
    while right < n && near(right + 1) {
        right += 1;
    }
    let spread = (b_best - curve[left].0).max(curve[right].0 - b_best);
    let decision_tol = step.max(spread + step);
    let decision_dev = (closed.b_s_star - b_best).abs();

    let abs_dev = (closed.expected_profit - v_best).abs();
    let value_tol = (budgets.profit_rel_tol * closed.expected_profit.abs()).max(mc_tol);
    OracleReport {
        scenario: 0,
        stage: Stage::Sensing,
        closed_form_value: closed.expected_profit,
        brute_force_value: v_best,
        abs_dev,
        rel_dev: rel_dev(abs_dev, closed.expected_profit),
        value_tol,
        closed_form_decision: Some(closed.b_s_star),
        brute_force_decision: Some(b_best),
        decision_dev,
        decision_tol,
        grid_density: n,
        mc_samples: m,
        passed: abs_dev <= value_tol && decision_dev <= decision_tol,
        error: None,
    }
}

/// `count` variations of `base` with `c_l` uniform on `[0.5, 3]` and `c_s`
/// uniform between the sensing-cost floor and `c_l / 2`.
pub fn random_scenarios(base: &Scenario, count: usize, seed: u64) -> Result<Vec<Scenario>> {
    use rand::Rng;
    // Keyed away from the per-scenario sampling streams.
    let mut stream = rng::stream(seed, u64::MAX);
    (0..count)
        .map(|_| {
            let c_l = stream.random_range(0.5..=3.0);
            let c_s = stream.random_range(crate::model::sensing_cost_floor(c_l)..=c_l / 2.0);
            Ok(base.with_costs(CostParams::new(c_s, c_l)?))
        })
        .collect()
}

/// Runs the three stage checks for every scenario and appends a per-scenario
/// summary report.
///
/// Pricing and leasing are checked at the solver's own equilibrium for the
/// mean realization.
pub fn end_to_end_check(
    solver: &dyn ClosedFormSolver,
    scenarios: &[Scenario],
    budgets: &Budgets,
) -> Vec<OracleReport> {
    let mut out = Vec::with_capacity(4 * scenarios.len());
    for (idx, scenario) in scenarios.iter().enumerate() {
        let mut reports = Vec::with_capacity(4);
        let g = scenario.total_g();
        let model = scenario.snr_model();
        let alpha = scenario.alpha().mean();
        reports.push(grid_stage1(solver, scenario, budgets, idx as u64));
        match equilibrium::stage1_sense(scenario).and_then(|s| {
            equilibrium::stage2_lease(g, s.b_s_star, alpha, scenario.costs(), model)
                .map(|l| (s.b_s_star, l))
        }) {
            Ok((b_s, lease)) => {
                reports.push(grid_stage2(
                    solver,
                    g,
                    b_s,
                    alpha,
                    scenario.costs(),
                    model,
                    budgets,
                ));
                reports.push(grid_stage3(solver, g, lease.supply, model, budgets));
            }
            Err(e) => {
                reports.push(OracleReport::failed(
                    idx,
                    Stage::Leasing,
                    budgets,
                    e.to_string(),
                ));
                reports.push(OracleReport::failed(
                    idx,
                    Stage::Pricing,
                    budgets,
                    e.to_string(),
                ));
            }
        }
        for r in &mut reports {
            r.scenario = idx;
        }
        let worst = reports
            .iter()
            .max_by(|a, b| a.rel_dev.total_cmp(&b.rel_dev))
            .cloned()
            .expect("three reports");
        let summary = OracleReport {
            stage: Stage::EndToEnd,
            passed: reports.iter().all(|r| r.passed),
            ..worst
        };
        out.extend(reports);
        out.push(summary);
    }
    out
}
