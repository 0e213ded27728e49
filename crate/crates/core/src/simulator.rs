//! Slot-by-slot replay of the market and the sensing-impact measurements.
//!
//! The sensing amount is fixed once per scenario; each slot then draws a
//! realization from a stream keyed by `(seed, slot)` and plays Stages II-IV.
//! The no-sensing baseline leases up to the leasing threshold with nothing
//! sensed.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{
    equilibrium_given_sensing, stage1_sense, stage2_lease, stage3_price, SensingDecision,
};
use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::model::{CostParams, Scenario};
use crate::numeric::bisect;
use crate::rng;

/// Tolerance used when counting slots whose price moved off the baseline.
pub const PRICE_CHANGE_TOL: f64 = 1e-9;

pub const TRACE_HEADER: [&str; 6] = ["slot", "alpha", "b_l", "pi", "profit", "profit_baseline"];
pub const SWEEP_HEADER: [&str; 8] = [
    "axis",
    "value",
    "bs_over_g",
    "bl_over_g",
    "pi",
    "eprofit_over_g",
    "baseline_over_g",
    "payoff_over_g",
];

/// Profit realized in one slot when `b_s` was sensed and `alpha` of it is idle.
pub fn realized_profit(scenario: &Scenario, b_s: f64, alpha: f64) -> Result<f64> {
    Ok(stage2_lease(
        scenario.total_g(),
        b_s,
        alpha,
        scenario.costs(),
        scenario.snr_model(),
    )?
    .profit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Baseline {
    pub pi: f64,
    pub profit: f64,
    pub b_l: f64,
}

/// The operator that cannot sense.
pub fn baseline_outcome(scenario: &Scenario) -> Result<Baseline> {
    let g = scenario.total_g();
    let costs = scenario.costs();
    let lease = stage2_lease(g, 0.0, 0.0, costs, scenario.snr_model())?;
    let pricing = stage3_price(
        g,
        lease.supply,
        lease.b_l_star * costs.leasing(),
        scenario.snr_model(),
    )?;
    let pi = pricing
        .pi_star
        .ok_or_else(|| Error::Domain("baseline leases nothing; price undefined".into()))?;
    Ok(Baseline {
        pi,
        profit: lease.profit,
        b_l: lease.b_l_star,
    })
}

/// Realization above which sensing beats the baseline in the realized profit.
pub fn find_alpha_th(scenario: &Scenario) -> Result<f64> {
    let sensing = stage1_sense(scenario)?;
    if sensing.b_s_star == 0.0 {
        return Err(Error::NoThreshold(
            "the operator does not sense, so every slot matches the baseline".into(),
        ));
    }
    let base = baseline_outcome(scenario)?.profit;
    let gap = |alpha: f64| {
        realized_profit(scenario, sensing.b_s_star, alpha).map_or(f64::NAN, |p| p - base)
    };
    let (at_zero, at_one) = (gap(0.0), gap(1.0));
    if !(at_zero < 0.0 && at_one > 0.0) {
        return Err(Error::NoThreshold(format!(
            "realized profit does not cross the baseline (gaps {at_zero} and {at_one})"
        )));
    }
    bisect(gap, 0.0, 1.0, 1e-14)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub alpha: f64,
    pub b_l: f64,
    pub pi: f64,
    pub profit_realized: f64,
    pub profit_baseline: f64,
    pub user_payoffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub records: Vec<SlotRecord>,
    pub mean_profit: f64,
    pub mean_profit_baseline: f64,
    pub price_change_slots: usize,
    pub seed: u64,
    pub sensing: SensingDecision,
    pub baseline: Baseline,
}

impl SimulationTrace {
    pub fn price_change_fraction(&self) -> f64 {
        self.price_change_slots as f64 / self.records.len() as f64
    }

    /// Sample standard error of the per-slot realized profit.
    pub fn profit_standard_error(&self) -> f64 {
        let n = self.records.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let var = self
            .records
            .iter()
            .map(|r| (r.profit_realized - self.mean_profit).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.slot.to_string(),
                fmt_sig(r.alpha),
                fmt_sig(r.b_l),
                fmt_sig(r.pi),
                fmt_sig(r.profit_realized),
                fmt_sig(r.profit_baseline),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Plays `slots` slots with realizations drawn from the scenario's law.
pub fn run(scenario: &Scenario, slots: u64, seed: u64) -> Result<SimulationTrace> {
    if slots == 0 {
        return Err(Error::Domain("need at least one slot".into()));
    }
    let sensing = stage1_sense(scenario)?;
    let baseline = baseline_outcome(scenario)?;
    let records = (0..slots)
        .into_par_iter()
        .map(|slot| {
            let alpha = scenario.alpha().sample(&mut rng::stream(seed, slot));
            let o = equilibrium_given_sensing(scenario, &sensing, alpha)?;
            Ok(SlotRecord {
                slot,
                alpha,
                b_l: o.b_l,
                pi: o.pi,
                profit_realized: o.operator_profit_realized,
                profit_baseline: baseline.profit,
                user_payoffs: o.per_user.iter().map(|u| u.payoff).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = records.len() as f64;
    let mean_profit = records.iter().map(|r| r.profit_realized).sum::<f64>() / n;
    let price_change_slots = records
        .iter()
        .filter(|r| (r.pi - baseline.pi).abs() > PRICE_CHANGE_TOL)
        .count();
    Ok(SimulationTrace {
        records,
        mean_profit,
        mean_profit_baseline: baseline.profit,
        price_change_slots,
        seed,
        sensing,
        baseline,
    })
}

/// Parameter swept by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SweepAxis {
    SensingCost,
    LeasingCost,
    Alpha,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SensingCost => "cs",
            SweepAxis::LeasingCost => "cl",
            SweepAxis::Alpha => "alpha",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.trim() {
            "cs" | "c_s" => Ok(SweepAxis::SensingCost),
            "cl" | "c_l" => Ok(SweepAxis::LeasingCost),
            "alpha" => Ok(SweepAxis::Alpha),
            other => Err(Error::InvalidRange(format!("unknown axis '{other}'"))),
        }
    }
}

/// One axis with its grid of values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisGrid {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Largest grid a range specification may expand to.
pub const MAX_GRID_POINTS: usize = 1_000_000;

impl AxisGrid {
    /// Parses `axis=lo:hi:step`, inclusive of `hi` up to rounding.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, range) = spec.split_once('=').ok_or_else(|| {
            Error::InvalidRange(format!("expected axis=lo:hi:step, got '{spec}'"))
        })?;
        let axis = SweepAxis::parse(name)?;
        let parts: Vec<&str> = range.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(Error::InvalidRange(format!(
                "expected lo:hi:step, got '{range}'"
            )));
        };
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidRange(format!("'{s}' is not a finite number")))
        };
        let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
        Self::from_range(axis, lo, hi, step)
    }

    pub fn from_range(axis: SweepAxis, lo: f64, hi: f64, step: f64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidRange(format!("empty range {lo} > {hi}")));
        }
        if step.is_nan() || step <= 0.0 {
            return Err(Error::InvalidRange(format!(
                "step must be positive, got {step}"
            )));
        }
        let span = (hi - lo) / step;
        if !span.is_finite() || span >= MAX_GRID_POINTS as f64 {
            return Err(Error::InvalidRange(format!(
                "range expands to more than {MAX_GRID_POINTS} points"
            )));
        }
        let count = (span + 1e-9).floor() as usize + 1;
        let values = (0..count).map(|i| lo + i as f64 * step).collect();
        let grid = AxisGrid { axis, values };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        for v in &self.values {
            let ok = match self.axis {
                SweepAxis::SensingCost | SweepAxis::LeasingCost => *v >= 0.0,
                SweepAxis::Alpha => (0.0..=1.0 + 1e-12).contains(v),
            };
            if !ok {
                return Err(Error::InvalidRange(format!(
                    "{} value {v} outside its valid range",
                    self.axis.name()
                )));
            }
        }
        Ok(())
    }
}

/// One row of a sweep, normalized by `G` (payoff by the user's `g`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub bs_over_g: f64,
    pub bl_over_g: f64,
    pub pi: f64,
    pub eprofit_over_g: f64,
    pub baseline_over_g: f64,
    pub payoff_over_g: f64,
}

#[derive(Debug, Clone, Copy)]
struct Point {
    c_s: f64,
    c_l: f64,
    alpha: Option<f64>,
}

fn sweep_point(base: &Scenario, p: Point) -> Result<(f64, f64, f64, f64, f64, f64)> {
    let scenario = base.with_costs(CostParams::new(p.c_s, p.c_l)?);
    let g = scenario.total_g();
    let sensing = stage1_sense(&scenario)?;
    let baseline = baseline_outcome(&scenario)?;
    let alpha = p.alpha.unwrap_or_else(|| scenario.alpha().mean()).min(1.0);
    let o = equilibrium_given_sensing(&scenario, &sensing, alpha)?;
    // Payoff is linear in g, so any user gives the same ratio.
    let payoff_over_g = o.per_user[0].payoff / scenario.users()[0].g();
    Ok((
        sensing.b_s_star / g,
        o.b_l / g,
        o.pi,
        sensing.expected_profit / g,
        baseline.profit / g,
        payoff_over_g,
    ))
}

fn apply(point: &mut Point, axis: SweepAxis, v: f64) {
    match axis {
        SweepAxis::SensingCost => point.c_s = v,
        SweepAxis::LeasingCost => point.c_l = v,
        SweepAxis::Alpha => point.alpha = Some(v),
    }
}

/// Sweeps one or two axes (cartesian product, first axis outermost).
///
/// Realized quantities use the swept realization on the `alpha` axis and the
/// law's mean otherwise.
pub fn sweep(base: &Scenario, axes: &[AxisGrid]) -> Result<Vec<SweepRow>> {
    match axes {
        [] => return Err(Error::InvalidRange("no axis to sweep".into())),
        [a] if a.values.is_empty() => return Err(Error::InvalidRange("empty grid".into())),
        [a, b] if a.axis == b.axis => {
            return Err(Error::InvalidRange(format!(
                "axis {} given twice",
                a.axis.name()
            )))
        }
        [_] | [_, _] => {}
        _ => return Err(Error::InvalidRange("at most two axes".into())),
    }
    let start = Point {
        c_s: base.costs().sensing(),
        c_l: base.costs().leasing(),
        alpha: None,
    };
    let mut points: Vec<(String, String, Point)> = vec![(String::new(), String::new(), start)];
    for grid in axes {
        if grid.values.is_empty() {
            return Err(Error::InvalidRange("empty grid".into()));
        }
        points = points
            .into_iter()
            .flat_map(|(label, value, p)| {
                grid.values.iter().map(move |v| {
                    let mut q = p;
                    apply(&mut q, grid.axis, *v);
                    let join = |a: &str, b: &str| {
                        if a.is_empty() {
                            b.to_string()
                        } else {
                            format!("{a};{b}")
                        }
                    };
                    (
                        join(&label, grid.axis.name()),
                        join(&value, &fmt_sig(*v)),
                        q,
                    )
                })
            })
            .collect();
    }
    points
        .into_par_iter()
        .map(|(axis, value, p)| {
            let (bs, bl, pi, ep, bp, pay) = sweep_point(base, p)?;
            Ok(SweepRow {
                axis,
                value,
                bs_over_g: bs,
                bl_over_g: bl,
                pi,
                eprofit_over_g: ep,
                baseline_over_g: bp,
                payoff_over_g: pay,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.axis.clone(),
            r.value.clone(),
            fmt_sig(r.bs_over_g),
            fmt_sig(r.bl_over_g),
            fmt_sig(r.pi),
            fmt_sig(r.eprofit_over_g),
            fmt_sig(r.baseline_over_g),
            fmt_sig(r.payoff_over_g),
        ])?;
    }
    w.flush()?;
    Ok(())
}
