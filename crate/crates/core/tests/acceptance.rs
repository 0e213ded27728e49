//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectrum_market::demand::{
    general_revenue_peak, optimal_demand, snr_price_sensitivity, solve_q,
};
use spectrum_market::equilibrium::{
    b_th1, equilibrium_at, expected_profit, first_order_sensing_root, golden_section_sensing,
    stage1_sense, stage2_lease, stage3_price, SupplyRegime,
};
use spectrum_market::model::sensing_cost_floor;
use spectrum_market::oracle::{self, BackwardInduction, Budgets};
use spectrum_market::simulator::{baseline_outcome, find_alpha_th, realized_profit, run};
use spectrum_market::{AlphaDistribution, CostParams, Scenario, SnrModel, UserProfile};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn e(err: spectrum_market::Error) -> String {
    err.to_string()
}

fn general_constants() -> Outcome {
    let peak = general_revenue_peak();
    let b1 = b_th1(1.0).map_err(e)?;
    ensure((peak.price - 0.468).abs() <= 1e-3, || {
        format!("price {}", peak.price)
    })?;
    ensure((peak.snr - 2.163).abs() <= 1e-3, || {
        format!("Q {}", peak.snr)
    })?;
    ensure((b1 - 0.462).abs() <= 1e-3, || format!("b_th1/G {b1}"))?;
    Ok(format!(
        "price {:.6}, Q {:.6}, b_th1/G {:.6}",
        peak.price, peak.snr, b1
    ))
}

fn threshold_policy() -> Outcome {
    let g = 3.0;
    let costly = Scenario::single_user(g, 1.2, 2.0).map_err(e)?;
    let none = stage1_sense(&costly).map_err(e)?.b_s_star;
    ensure(none == 0.0, || format!("C_s = 1.2 senses {none}"))?;
    let cheap = Scenario::single_user(g, 0.8, 2.0).map_err(e)?;
    let b = stage1_sense(&cheap).map_err(e)?.b_s_star / g;
    ensure(rel(b, 0.0407137870) <= 1e-3, || format!("b_s/G {b}"))?;
    let root = first_order_sensing_root(&cheap).map_err(e)?;
    let (golden, _) = golden_section_sensing(&cheap).map_err(e)?;
    ensure(rel(root, golden) <= 1e-4, || {
        format!("bisection {root} vs golden {golden}")
    })?;
    Ok(format!(
        "b_s/G {b:.7}, bisection vs golden rel {:.1e}",
        rel(root, golden)
    ))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let base = Scenario::single_user(1.0, 0.5, 1.0).map_err(e)?;
    let batch = oracle::random_scenarios(&base, 20, 2024).map_err(e)?;
    let budgets = Budgets {
        grid_density: 10_000,
        mc_samples: 100_000,
        seed: 2024,
        profit_rel_tol: 0.01,
    };
    let reports = oracle::end_to_end_check(&BackwardInduction, &batch, &budgets);
    let elapsed = start.elapsed();
    ensure(reports.len() == 80, || format!("{} reports", reports.len()))?;
    if let Some(bad) = reports.iter().find(|r| !r.passed) {
        return Err(bad.to_json_line());
    }
    ensure(elapsed <= Duration::from_secs(300), || {
        format!("took {elapsed:?}")
    })?;
    let worst = reports.iter().map(|r| r.rel_dev).fold(0.0, f64::max);
    Ok(format!(
        "80 reports, worst rel_dev {worst:.2e}, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn equilibrium_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut leased = 0;
    for _ in 0..50 {
        let users: Vec<UserProfile> = (0..rng.random_range(1..5))
            .map(|_| {
                UserProfile::new(
                    rng.random_range(0.5..3.0),
                    rng.random_range(0.1..2.0),
                    rng.random_range(0.1..1.0),
                )
            })
            .collect::<Result<_, _>>()
            .map_err(e)?;
        let c_l: f64 = rng.random_range(0.5..3.0);
        let c_s = rng.random_range(sensing_cost_floor(c_l)..c_l);
        let s = Scenario::new(
            users,
            CostParams::new(c_s, c_l).map_err(e)?,
            AlphaDistribution::uniform(),
            SnrModel::HighSnr,
        )
        .map_err(e)?;
        let alpha: f64 = rng.random_range(0.0..1.0);
        let o = equilibrium_at(&s, alpha).map_err(e)?;
        if o.b_l == 0.0 {
            continue;
        }
        leased += 1;
        let target = (2.0 + c_l).exp();
        for u in &o.per_user {
            ensure(rel(u.snr, target) <= 1e-9, || {
                format!("snr {} vs {target}", u.snr)
            })?;
        }
        for (u, d) in s.users().iter().zip(&o.per_user) {
            let doubled = optimal_demand(2.0 * u.g(), o.pi, SnrModel::HighSnr).map_err(e)?;
            ensure(rel(doubled.payoff, 2.0 * d.payoff) <= 1e-12, || {
                "payoff not linear in g".into()
            })?;
        }
        let scaled = equilibrium_at(&s.with_power_scaled(10.0).map_err(e)?, alpha).map_err(e)?;
        ensure(rel(scaled.pi, o.pi) <= 1e-9, || {
            format!("pi {} vs {}", scaled.pi, o.pi)
        })?;
    }
    ensure(leased >= 10, || format!("only {leased} scenarios leased"))?;
    Ok(format!("{leased} leasing equilibria checked"))
}

fn sensing_impact() -> Outcome {
    let s = Scenario::single_user(1.0, 0.25, 2.0).map_err(e)?;
    let with = stage1_sense(&s).map_err(e)?.expected_profit;
    let without = baseline_outcome(&s).map_err(e)?.profit;
    let gain = (with - without) / without;
    ensure((1.5..=3.5).contains(&gain), || {
        format!("gain {:.2}%", 100.0 * gain)
    })?;
    Ok(format!("gain {:.2}%", 100.0 * gain))
}

fn profit_threshold() -> Outcome {
    let s = Scenario::single_user(1.0, 0.8, 2.0).map_err(e)?;
    let th = find_alpha_th(&s).map_err(e)?;
    ensure((th - 0.40).abs() <= 0.01, || format!("alpha_th {th}"))?;
    let b_s = stage1_sense(&s).map_err(e)?.b_s_star;
    let profits = (0..1000)
        .map(|i| realized_profit(&s, b_s, i as f64 / 999.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(e)?;
    ensure(profits.windows(2).all(|w| w[1] > w[0]), || {
        "realized profit not increasing".into()
    })?;
    let base = baseline_outcome(&s).map_err(e)?.profit;
    ensure(profits[999] > base, || {
        "alpha = 1 does not beat the baseline".into()
    })?;
    Ok(format!("alpha_th {th:.6}"))
}

fn price_dynamics() -> Outcome {
    let mut parts = Vec::new();
    for (c_s, expected) in [(0.48, 0.20), (0.35, 0.49)] {
        let s = Scenario::single_user(1.0, c_s, 1.0).map_err(e)?;
        let trace = run(&s, 10_000, 11).map_err(e)?;
        let f = trace.price_change_fraction();
        ensure((f - expected).abs() <= 0.02, || {
            format!("C_s {c_s}: fraction {f}")
        })?;
        parts.push(format!("C_s {c_s}: {f:.4}"));
    }
    Ok(parts.join(", "))
}

fn random_high_snr(rng: &mut ChaCha8Rng) -> Result<Scenario, String> {
    let g = rng.random_range(0.2..20.0);
    let c_l: f64 = rng.random_range(0.5..3.0);
    let c_s = rng.random_range(sensing_cost_floor(c_l)..c_l / 2.0);
    Scenario::single_user(g, c_s, c_l).map_err(e)
}

fn property_suite() -> Outcome {
    const CASES: usize = 50;
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    // Expected profit is continuous where the realized case changes.
    for _ in 0..CASES {
        let s = random_high_snr(&mut rng)?;
        let g = s.total_g();
        let c_l = s.costs().leasing();
        for bp in [g * (-(2.0 + c_l)).exp(), g * (-2.0f64).exp()] {
            let left = expected_profit(bp * (1.0 - 1e-12), &s).map_err(e)?;
            let right = expected_profit(bp * (1.0 + 1e-12), &s).map_err(e)?;
            ensure((left - right).abs() <= 1e-9, || {
                format!("jump {} at {bp}", left - right)
            })?;
        }
    }

    // Concavity: expected profit on the middle segment, conservative revenue.
    for _ in 0..CASES {
        let s = random_high_snr(&mut rng)?;
        let g = s.total_g();
        let (lo, hi) = (
            g * (-(2.0 + s.costs().leasing())).exp(),
            g * (-2.0f64).exp(),
        );
        let h = (hi - lo) / 200.0;
        for i in 1..200 {
            let x = lo + i as f64 * h;
            let f = |b: f64| expected_profit(b, &s).unwrap();
            let d2 = f(x + h) - 2.0 * f(x) + f(x - h);
            ensure(d2 <= 1e-12 * g, || {
                format!("expected profit convex at {x}: {d2}")
            })?;
            let r = |b: f64| stage3_price(g, b, 0.0, SnrModel::HighSnr).unwrap().revenue;
            let d2 = r(x + h) - 2.0 * r(x) + r(x - h);
            ensure(d2 <= 1e-12 * g, || format!("revenue convex at {x}: {d2}"))?;
        }
    }

    // Q'(pi) against central differences.
    for _ in 0..CASES {
        let pi: f64 = rng.random_range(0.05..5.0);
        let h = 1e-6 * pi;
        let q = |p: f64| solve_q(p).unwrap().q;
        let fd = (q(pi + h) - q(pi - h)) / (2.0 * h);
        let exact = snr_price_sensitivity(q(pi));
        ensure(rel(fd, exact) <= 1e-4, || {
            format!("Q' at {pi}: {fd} vs {exact}")
        })?;
    }

    // Market clears in the conservative regime, both models.
    for i in 0..CASES {
        let model = if i % 2 == 0 {
            SnrModel::HighSnr
        } else {
            SnrModel::General
        };
        let users: Vec<UserProfile> = (0..rng.random_range(1..6))
            .map(|_| UserProfile::from_g(rng.random_range(0.1..5.0)))
            .collect::<Result<_, _>>()
            .map_err(e)?;
        let g: f64 = users.iter().map(|u| u.g()).sum();
        let supply = g * rng.random_range(0.001..0.12);
        let d = stage3_price(g, supply, 0.0, model).map_err(e)?;
        ensure(d.regime == SupplyRegime::ConservativeSupply, || {
            "expected conservative".into()
        })?;
        let pi = d.pi_star.ok_or("no price")?;
        let used: f64 = users
            .iter()
            .map(|u| optimal_demand(u.g(), pi, model).map(|r| r.w))
            .sum::<Result<f64, _>>()
            .map_err(e)?;
        ensure(rel(used, supply) <= 1e-9, || {
            format!("demand {used} vs supply {supply}")
        })?;
    }

    // Price is non-increasing in the realization.
    for _ in 0..CASES {
        let s = random_high_snr(&mut rng)?;
        let g = s.total_g();
        let b_s = stage1_sense(&s).map_err(e)?.b_s_star;
        let mut last = f64::INFINITY;
        for i in 0..=100 {
            let l =
                stage2_lease(g, b_s, i as f64 / 100.0, s.costs(), SnrModel::HighSnr).map_err(e)?;
            let pi = stage3_price(g, l.supply, 0.0, SnrModel::HighSnr)
                .map_err(e)?
                .pi_star
                .ok_or("no price")?;
            ensure(pi <= last * (1.0 + 1e-12), || {
                format!("price rose to {pi} from {last}")
            })?;
            last = pi;
        }
    }

    // Simulated prices never exceed the no-sensing price.
    for k in 0..CASES {
        let s = random_high_snr(&mut rng)?;
        let cap = 1.0 + s.costs().leasing();
        let trace = run(&s, 200, k as u64).map_err(e)?;
        ensure(
            trace.records.iter().all(|r| r.pi <= cap * (1.0 + 1e-12)),
            || "price above 1 + C_l".into(),
        )?;
    }
    Ok(format!("6 properties x {CASES} scenarios"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 general-SNR constants", general_constants),
        ("2 threshold policy", threshold_policy),
        ("3 oracle equivalence", oracle_equivalence),
        ("4 equilibrium structure", equilibrium_structure),
        ("5 sensing impact", sensing_impact),
        ("6 profit threshold in alpha", profit_threshold),
        ("7 price dynamics", price_dynamics),
        ("8 property suite", property_suite),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<30} {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<30} {detail} ({secs:.1}s)");
            }
        }
    }
    println!("acceptance: {}/8 passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
