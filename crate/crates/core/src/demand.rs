//! Price-taking users: rates, payoffs, optimal bandwidth demand and the
//! common equilibrium SNR.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SnrModel;
use crate::numeric::bisect;

/// A user's best response to a price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemandResult {
    /// Bandwidth demanded.
    pub w: f64,
    /// Rate minus payment, in nats.
    pub payoff: f64,
    /// Achieved SNR, `g / w`.
    pub snr: f64,
}

/// Root `q` of `ln(1 + q) - q / (1 + q) = pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QSolution {
    pub q: f64,
    pub pi: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn check_price(pi: f64) -> Result<()> {
    if pi.is_finite() && pi >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "price must be finite and non-negative, got {pi}"
        )))
    }
}

/// Achievable rate of a user with characteristic `g` on bandwidth `w`.
pub fn rate(g: f64, w: f64, model: SnrModel) -> Result<f64> {
    check_positive("g", g)?;
    check_positive("w", w)?;
    Ok(match model {
        SnrModel::General => w * (g / w).ln_1p(),
        SnrModel::HighSnr => w * (g / w).ln(),
    })
}

/// Rate minus payment `pi * w`.
pub fn payoff(g: f64, w: f64, pi: f64, model: SnrModel) -> Result<f64> {
    check_price(pi)?;
    Ok(rate(g, w, model)? - pi * w)
}

/// Price at which a general-SNR user settles on SNR `q`:
/// `ln(1 + q) - q / (1 + q)`.
pub fn price_of_snr(q: f64) -> f64 {
    if q < 1e-3 {
        // sum_{n>=2} (-1)^n (n-1)/n q^n; the closed form cancels catastrophically.
        let mut term = q * q;
        let mut acc = 0.0;
        for n in 2..12 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * (n as f64 - 1.0) / n as f64 * term;
            term *= q;
        }
        acc
    } else {
        q.ln_1p() - q / (1.0 + q)
    }
}

/// `dQ/dpi = (1 + Q)^2 / Q`.
pub fn snr_price_sensitivity(q: f64) -> f64 {
    (1.0 + q).powi(2) / q
}

/// Solves for the general-SNR equilibrium SNR at price `pi`.
pub fn solve_q(pi: f64) -> Result<QSolution> {
    if !pi.is_finite() {
        return Err(Error::BracketFailure(format!("price {pi} is not finite")));
    }
    check_price(pi)?;
    if pi == 0.0 {
        return Ok(QSolution { q: 0.0, pi });
    }
    let f = |q: f64| price_of_snr(q) - pi;
    let mut hi = 1.0;
    let mut doublings = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 1000 || !hi.is_finite() {
            return Err(Error::BracketFailure(format!(
                "no upper bracket for pi = {pi}"
            )));
        }
    }
    let lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    let mut q = bisect(f, lo, hi, 1e-12 * hi.max(1e-300))?;
    // Newton polish; F'(q) = q / (1 + q)^2.
    for _ in 0..3 {
        let slope = q / (1.0 + q).powi(2);
        if slope <= 0.0 {
            break;
        }
        let next = q - f(q) / slope;
        if !(next.is_finite() && next > 0.0) || f(next).abs() > f(q).abs() {
            break;
        }
        q = next;
    }
    Ok(QSolution { q, pi })
}

/// Bandwidth demand, payoff and SNR of a user with characteristic `g` at
/// price `pi`.
pub fn optimal_demand(g: f64, pi: f64, model: SnrModel) -> Result<DemandResult> {
    check_positive("g", g)?;
    check_price(pi)?;
    match model {
        SnrModel::HighSnr => {
            let w = g * (-(1.0 + pi)).exp();
            Ok(DemandResult {
                w,
                payoff: w,
                snr: g / w,
            })
        }
        SnrModel::General => {
            let q = solve_q(pi)?.q;
            if q <= 0.0 {
                return Err(Error::UnboundedDemand { price: pi });
            }
            let w = g / q;
            Ok(DemandResult {
                w,
                payoff: w * (q.ln_1p() - pi),
                snr: g / w,
            })
        }
    }
}

/// Aggregate demand of a population with total characteristic `g_total`.
pub fn total_demand(g_total: f64, pi: f64, model: SnrModel) -> Result<f64> {
    Ok(optimal_demand(g_total, pi, model)?.w)
}

/// Revenue `pi * total_demand` when every request is served.
pub fn revenue_at_price(g_total: f64, pi: f64, model: SnrModel) -> Result<f64> {
    Ok(pi * total_demand(g_total, pi, model)?)
}

/// Marginal general-SNR revenue of the `b`-th unit of bandwidth sold at the
/// market-clearing price.
pub fn marginal_revenue_of_bandwidth(g_total: f64, b: f64) -> Result<f64> {
    check_positive("g", g_total)?;
    check_positive("b", b)?;
    Ok(marginal_revenue_normalized(b / g_total))
}

/// Marginal revenue as a function of `x = b / G`.
pub(crate) fn marginal_revenue_normalized(x: f64) -> f64 {
    let inv = 1.0 / (1.0 + x);
    (1.0 / x).ln_1p() - inv - inv * inv
}

/// General-SNR revenue peak: the price maximizing `pi * G / Q(pi)`, the SNR
/// there, and the supply per unit `G` that clears the market at that price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RevenuePeak {
    pub price: f64,
    pub snr: f64,
    pub supply_per_g: f64,
}

/// Computed once per process.
pub fn general_revenue_peak() -> RevenuePeak {
    static PEAK: OnceLock<RevenuePeak> = OnceLock::new();
    *PEAK.get_or_init(|| {
        // Stationarity of pi(Q) / Q: 2Q^2 + Q - (1 + Q)^2 ln(1 + Q) = 0, Q > 0.
        let stationarity = |q: f64| 2.0 * q * q + q - (1.0 + q).powi(2) * q.ln_1p();
        let snr = bisect(stationarity, 1.0, 10.0, 1e-14).expect("bracket [1, 10] holds the peak");
        RevenuePeak {
            price: price_of_snr(snr),
            snr,
            supply_per_g: 1.0 / snr,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn rate_examples() {
        assert_relative_eq!(
            rate(1.0, 1.0, SnrModel::General).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );
        assert_eq!(rate(1.0, 1.0, SnrModel::HighSnr).unwrap(), 0.0);
        let w = 1.0;
        let g = E * E;
        let ratio = rate(g, w, SnrModel::HighSnr).unwrap() / rate(g, w, SnrModel::General).unwrap();
        assert!((ratio - 0.94).abs() < 0.005, "{ratio}");
        assert!(matches!(
            rate(1.0, 0.0, SnrModel::General),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            rate(-1.0, 1.0, SnrModel::HighSnr),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn solve_q_examples() {
        assert_eq!(solve_q(0.0).unwrap().q, 0.0);
        let peak = solve_q(0.468).unwrap();
        assert!((peak.q - 2.163).abs() < 2e-3, "{}", peak.q);
        // Reference root of pi(Q) = 1 from an independent 30-digit solve:
        // Q = 5.305395279...
        let one = solve_q(1.0).unwrap();
        assert!((one.q - 5.305).abs() < 1e-3, "{}", one.q);
        assert!((price_of_snr(one.q) - 1.0).abs() < 1e-10);
        for pi in [1e-12, 1e-6, 0.01, 0.3, 2.0, 10.0, 50.0] {
            let s = solve_q(pi).unwrap();
            assert!((price_of_snr(s.q) - pi).abs() < 1e-10, "pi {pi}");
        }
        assert!(matches!(
            solve_q(f64::INFINITY),
            Err(Error::BracketFailure(_))
        ));
        assert!(solve_q(-1.0).is_err());
    }

    #[test]
    fn small_q_price_series_matches_closed_form() {
        for q in [2e-3f64, 5e-3, 1e-2] {
            let closed = q.ln_1p() - q / (1.0 + q);
            let mut term = q * q;
            let mut acc = 0.0;
            for n in 2..30 {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * (n as f64 - 1.0) / n as f64 * term;
                term *= q;
            }
            assert_relative_eq!(closed, acc, max_relative = 1e-9);
        }
        assert_relative_eq!(price_of_snr(1e-4), 0.5e-8, max_relative = 1e-3);
    }

    #[test]
    fn demand_examples() {
        let d = optimal_demand(1.0, 1.0, SnrModel::HighSnr).unwrap();
        let e2 = (-2.0f64).exp();
        assert_relative_eq!(d.w, e2, max_relative = 1e-15);
        assert_relative_eq!(d.payoff, e2, max_relative = 1e-15);
        assert_relative_eq!(d.snr, E * E, max_relative = 1e-14);
        let d2 = optimal_demand(2.0, 1.0, SnrModel::HighSnr).unwrap();
        assert_relative_eq!(d2.w, 2.0 * e2, max_relative = 1e-15);

        let g = optimal_demand(1.0, 0.468, SnrModel::General).unwrap();
        assert!((g.w - 0.4623).abs() < 1e-3);
        assert!((g.snr - 2.163).abs() < 2e-3);
        assert!(matches!(
            optimal_demand(1.0, 0.0, SnrModel::General),
            Err(Error::UnboundedDemand { .. })
        ));
        assert!(optimal_demand(0.0, 1.0, SnrModel::HighSnr).is_err());
    }

    #[test]
    fn total_demand_and_revenue_examples() {
        assert_relative_eq!(
            total_demand(1.0, 1.0, SnrModel::HighSnr).unwrap(),
            (-2.0f64).exp()
        );
        assert_relative_eq!(
            total_demand(5.0, 0.0, SnrModel::HighSnr).unwrap(),
            5.0 * (-1.0f64).exp(),
            max_relative = 1e-15
        );
        let q = solve_q(0.468).unwrap().q;
        assert_relative_eq!(
            total_demand(1.0, 0.468, SnrModel::General).unwrap(),
            1.0 / q
        );
        assert_relative_eq!(
            revenue_at_price(1.0, 1.0, SnrModel::HighSnr).unwrap(),
            (-2.0f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            revenue_at_price(1.0, 3.0, SnrModel::HighSnr).unwrap(),
            3.0 * (-4.0f64).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn general_revenue_argmax_on_price_grid() {
        let best = (1..=20_000)
            .map(|i| i as f64 * 1e-4)
            .map(|pi| (pi, revenue_at_price(1.0, pi, SnrModel::General).unwrap()))
            .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((best.0 - 0.468).abs() < 1e-3, "{best:?}");
    }

    #[test]
    fn revenue_peak_constants() {
        let peak = general_revenue_peak();
        assert!((peak.price - 0.468).abs() < 1e-3);
        assert!((peak.snr - 2.163).abs() < 1e-3);
        assert!((peak.supply_per_g - 0.462).abs() < 1e-3);
        assert!(marginal_revenue_normalized(peak.supply_per_g).abs() < 1e-12);
    }

    #[test]
    fn marginal_revenue_examples() {
        let v = marginal_revenue_of_bandwidth(1.0, 0.063).unwrap();
        assert!((v - 1.0).abs() < 1e-3, "{v}");
        assert!(marginal_revenue_of_bandwidth(1.0, 0.4623).unwrap().abs() < 1e-3);
        assert_eq!(
            marginal_revenue_of_bandwidth(2.0, 0.126).unwrap(),
            marginal_revenue_of_bandwidth(1.0, 0.063).unwrap()
        );
        assert!(marginal_revenue_of_bandwidth(1.0, 0.0).is_err());
        let xs: Vec<f64> = (1..460).map(|i| i as f64 * 1e-3).collect();
        for pair in xs.windows(2) {
            let (a, b) = (
                marginal_revenue_normalized(pair[0]),
                marginal_revenue_normalized(pair[1]),
            );
            assert!(b < a && b > 0.0);
        }
    }

    #[test]
    fn derivative_of_q_matches_finite_differences() {
        let eps = 1e-6;
        for pi in [0.1, 0.468, 1.0, 3.0] {
            let fd = (solve_q(pi + eps).unwrap().q - solve_q(pi - eps).unwrap().q) / (2.0 * eps);
            let exact = snr_price_sensitivity(solve_q(pi).unwrap().q);
            assert_relative_eq!(fd, exact, max_relative = 1e-4);
        }
    }

    #[test]
    fn demand_is_brute_force_optimal() {
        for model in [SnrModel::HighSnr, SnrModel::General] {
            for pi in [0.2, 1.0, 2.5] {
                let g = 1.7;
                let best = optimal_demand(g, pi, model).unwrap();
                let u_star = payoff(g, best.w, pi, model).unwrap();
                assert_relative_eq!(u_star, best.payoff, max_relative = 1e-9);
                for k in 1..400 {
                    let w = best.w * k as f64 / 200.0;
                    assert!(payoff(g, w, pi, model).unwrap() <= u_star + 1e-14);
                }
            }
        }
    }

    #[test]
    fn high_snr_rate_converges_to_general() {
        let g = 1e4;
        let r = rate(g, 1.0, SnrModel::HighSnr).unwrap() / rate(g, 1.0, SnrModel::General).unwrap();
        assert!((1.0 - r).abs() < 0.01);
    }
}
