//! Market instance: users, costs, the law of the sensing realization factor
//! and the rate model.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompositeRule;

/// How user rates are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SnrModel {
    /// `w ln(g / w)`, the closed-form regime.
    HighSnr,
    /// `w ln(1 + g / w)`.
    General,
}

/// One secondary user's transmit power, channel gain and noise density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UserProfile {
    p_max: f64,
    h: f64,
    n0: f64,
}

impl UserProfile {
    pub fn new(p_max: f64, h: f64, n0: f64) -> Result<Self> {
        Self::checked(0, p_max, h, n0)
    }

    /// Shorthand profile with unit gain and unit noise, so that `g = p_max`.
    pub fn from_g(g: f64) -> Result<Self> {
        Self::new(g, 1.0, 1.0)
    }

    fn checked(index: usize, p_max: f64, h: f64, n0: f64) -> Result<Self> {
        for (name, v) in [("p_max", p_max), ("h", h), ("n0", n0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidProfile {
                    index,
                    reason: format!("{name} must be positive and finite, got {v}"),
                });
            }
        }
        let profile = UserProfile { p_max, h, n0 };
        if !(profile.g().is_finite() && profile.g() > 0.0) {
            return Err(Error::InvalidProfile {
                index,
                reason: "characteristic p_max*h/n0 is not a positive finite number".into(),
            });
        }
        Ok(profile)
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    /// Wireless characteristic `p_max * h / n0`.
    pub fn g(&self) -> f64 {
        self.p_max * self.h / self.n0
    }

    fn with_power_scaled(&self, k: f64) -> Result<Self> {
        UserProfile::new(self.p_max * k, self.h, self.n0)
    }
}

/// Sum of the users' characteristics.
pub fn aggregate_g(users: &[UserProfile]) -> Result<f64> {
    if users.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    for (i, u) in users.iter().enumerate() {
        UserProfile::checked(i, u.p_max, u.h, u.n0)?;
    }
    let total: f64 = users.iter().map(UserProfile::g).sum();
    if !total.is_finite() {
        return Err(Error::InvalidProfile {
            index: users.len() - 1,
            reason: "aggregate characteristic overflows".into(),
        });
    }
    Ok(total)
}

/// Unit sensing and leasing costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostParams {
    c_s: f64,
    c_l: f64,
}

impl CostParams {
    pub fn new(c_s: f64, c_l: f64) -> Result<Self> {
        for (name, v) in [("c_s", c_s), ("c_l", c_l)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidCosts(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(CostParams { c_s, c_l })
    }

    pub fn sensing(&self) -> f64 {
        self.c_s
    }

    pub fn leasing(&self) -> f64 {
        self.c_l
    }

    /// Smallest sensing cost for which the closed-form sensing policy applies:
    /// `(1 - e^{-2 c_l}) / 4`.
    pub fn sensing_cost_floor(&self) -> f64 {
        sensing_cost_floor(self.c_l)
    }

    pub fn low_bound_ok(&self) -> bool {
        self.c_s >= self.sensing_cost_floor()
    }
}

pub fn sensing_cost_floor(c_l: f64) -> f64 {
    -(-2.0 * c_l).exp_m1() / 4.0
}

/// Law of the sensing realization factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AlphaLaw {
    Uniform01,
    Beta { a: f64, b: f64 },
    Discrete { points: Vec<f64>, probs: Vec<f64> },
}

/// Validated distribution of the realization factor on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaDistribution {
    law: AlphaLaw,
    #[serde(skip)]
    rule: CompositeRule,
}

impl AlphaDistribution {
    pub fn new(law: AlphaLaw) -> Result<Self> {
        match &law {
            AlphaLaw::Uniform01 => {}
            AlphaLaw::Beta { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "beta shapes must be positive, got ({a}, {b})"
                    )));
                }
            }
            AlphaLaw::Discrete { points, probs } => {
                if points.is_empty() || points.len() != probs.len() {
                    return Err(Error::InvalidDistribution(format!(
                        "need matching non-empty points/probs, got {} and {}",
                        points.len(),
                        probs.len()
                    )));
                }
                if let Some(x) = points.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                    return Err(Error::InvalidDistribution(format!(
                        "support point {x} outside [0, 1]"
                    )));
                }
                if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                    return Err(Error::InvalidDistribution(format!("bad probability {p}")));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidDistribution(format!(
                        "probabilities sum to {total}, not 1"
                    )));
                }
            }
        }
        Ok(AlphaDistribution {
            law,
            rule: CompositeRule::default(),
        })
    }

    pub fn uniform() -> Self {
        AlphaDistribution {
            law: AlphaLaw::Uniform01,
            rule: CompositeRule::default(),
        }
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::new(AlphaLaw::Beta { a, b })
    }

    pub fn discrete(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        Self::new(AlphaLaw::Discrete { points, probs })
    }

    pub fn point_mass(x: f64) -> Result<Self> {
        Self::discrete(vec![x], vec![1.0])
    }

    /// Replaces the quadrature node count used for continuous laws.
    pub fn with_quadrature_nodes(mut self, nodes: usize) -> Self {
        self.rule = CompositeRule::with_nodes(nodes);
        self
    }

    pub fn law(&self) -> &AlphaLaw {
        &self.law
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.law, AlphaLaw::Uniform01)
    }

    pub fn mean(&self) -> f64 {
        match &self.law {
            AlphaLaw::Uniform01 => 0.5,
            AlphaLaw::Beta { a, b } => a / (a + b),
            AlphaLaw::Discrete { points, probs } => {
                points.iter().zip(probs).map(|(x, p)| x * p).sum()
            }
        }
    }

    /// `E[f(alpha)]`.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        self.expectation_split(f, &[])
    }

    /// `E[f(alpha)]` with the continuous laws integrated piecewise between
    /// `breakpoints`, so kinks of `f` at those points cost no accuracy.
    pub fn expectation_split(&self, f: impl Fn(f64) -> f64, breakpoints: &[f64]) -> Result<f64> {
        let value = match &self.law {
            AlphaLaw::Discrete { points, probs } => {
                points.iter().zip(probs).map(|(x, p)| p * f(*x)).sum()
            }
            AlphaLaw::Uniform01 => {
                let mut acc = 0.0;
                for (a, b) in segments(breakpoints) {
                    self.rule.for_each_node(a, b, |x, w| acc += w * f(x));
                }
                acc
            }
            AlphaLaw::Beta { a, b } => {
                // Self-normalised: the density is only known up to B(a, b).
                let (mut acc, mut mass) = (0.0, 0.0);
                for (lo, hi) in segments(breakpoints) {
                    self.rule.for_each_node(lo, hi, |x, w| {
                        let dens = w * (a - 1.0).mul_add(x.ln(), (b - 1.0) * (-x).ln_1p()).exp();
                        acc += dens * f(x);
                        mass += dens;
                    });
                }
                acc / mass
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::QuadratureFailure)
        }
    }

    /// Draws one realization from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.law {
            AlphaLaw::Uniform01 => rng.random::<f64>(),
            AlphaLaw::Beta { a, b } => {
                // Shapes are validated, so construction cannot fail.
                let beta = rand_distr::Beta::new(*a, *b).expect("validated beta shapes");
                beta.sample(rng).clamp(0.0, 1.0)
            }
            AlphaLaw::Discrete { points, probs } => {
                let u = rng.random::<f64>();
                let mut cumulative = 0.0;
                for (x, p) in points.iter().zip(probs) {
                    cumulative += p;
                    if u < cumulative {
                        return *x;
                    }
                }
                // Rounding can leave the cumulative sum just below 1.
                let last = probs
                    .iter()
                    .rposition(|p| *p > 0.0)
                    .unwrap_or(points.len() - 1);
                points[last]
            }
        }
    }
}

fn segments(breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > 0.0 && *x < 1.0)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut lo = 0.0;
    for c in cuts {
        out.push((lo, c));
        lo = c;
    }
    out.push((lo, 1.0));
    out
}

/// A complete, validated market instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    users: Vec<UserProfile>,
    costs: CostParams,
    alpha: AlphaDistribution,
    snr_model: SnrModel,
    total_g: f64,
}

impl Scenario {
    pub fn new(
        users: Vec<UserProfile>,
        costs: CostParams,
        alpha: AlphaDistribution,
        snr_model: SnrModel,
    ) -> Result<Self> {
        let total_g = aggregate_g(&users)?;
        Ok(Scenario {
            users,
            costs,
            alpha,
            snr_model,
            total_g,
        })
    }

    /// Single-user high-SNR scenario with uniform realizations; handy in tests
    /// and examples.
    pub fn single_user(g: f64, c_s: f64, c_l: f64) -> Result<Self> {
        Scenario::new(
            vec![UserProfile::from_g(g)?],
            CostParams::new(c_s, c_l)?,
            AlphaDistribution::uniform(),
            SnrModel::HighSnr,
        )
    }

    pub fn users(&self) -> &[UserProfile] {
        &self.users
    }

    pub fn costs(&self) -> CostParams {
        self.costs
    }

    pub fn alpha(&self) -> &AlphaDistribution {
        &self.alpha
    }

    pub fn snr_model(&self) -> SnrModel {
        self.snr_model
    }

    /// Aggregate characteristic `G`.
    pub fn total_g(&self) -> f64 {
        self.total_g
    }

    pub fn with_costs(&self, costs: CostParams) -> Scenario {
        Scenario {
            costs,
            ..self.clone()
        }
    }

    pub fn with_alpha(&self, alpha: AlphaDistribution) -> Scenario {
        Scenario {
            alpha,
            ..self.clone()
        }
    }

    pub fn with_snr_model(&self, snr_model: SnrModel) -> Scenario {
        Scenario {
            snr_model,
            ..self.clone()
        }
    }

    /// Multiplies every user's transmit power by `k`.
    pub fn with_power_scaled(&self, k: f64) -> Result<Scenario> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Domain(format!(
                "power scale must be positive, got {k}"
            )));
        }
        let users = self
            .users
            .iter()
            .map(|u| u.with_power_scaled(k))
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(users, self.costs, self.alpha.clone(), self.snr_model)
    }
}
