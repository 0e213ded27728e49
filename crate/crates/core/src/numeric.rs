//! Scalar root finding, unimodal maximization and composite quadrature.

use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 400;

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `x_tol`. Either endpoint may be
/// the exact root.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::BracketFailure(format!("bad bracket [{lo}, {hi}]")));
    }
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if !(f_lo.is_finite() && f_hi.is_finite()) {
        return Err(Error::BracketFailure(
            "non-finite value at bracket end".into(),
        ));
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::BracketFailure(format!(
            "no sign change on [{lo}, {hi}] ({f_lo}, {f_hi})"
        )));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if !f_mid.is_finite() {
            return Err(Error::BracketFailure(format!("non-finite value at {mid}")));
        }
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// The endpoints are compared against the interior estimate, so monotone
/// functions return the better endpoint exactly.
pub fn golden_section_max<F>(f: F, lo: f64, hi: f64, x_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::OptimizerStall(format!(
                "objective is not finite at {x}"
            )))
        }
    };
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::OptimizerStall(format!("bad interval [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for _ in 0..MAX_BISECTIONS {
        if b - a <= x_tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, eval(mid)?);
    for x in [lo, hi] {
        let v = eval(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Number of Gauss-Legendre points per panel.
pub const POINTS_PER_PANEL: usize = 8;

/// Composite 8-point Gauss-Legendre rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompositeRule {
    panels: usize,
}

impl CompositeRule {
    /// Rule with `nodes` total points; rounded up to a whole number of panels.
    pub fn with_nodes(nodes: usize) -> Self {
        let panels = nodes.div_ceil(POINTS_PER_PANEL).max(1);
        CompositeRule { panels }
    }

    pub fn nodes(&self) -> usize {
        self.panels * POINTS_PER_PANEL
    }

    /// Visits every `(node, weight)` pair on `[a, b]`; weights sum to `b - a`.
    pub fn for_each_node(&self, a: f64, b: f64, mut visit: impl FnMut(f64, f64)) {
        if b <= a {
            return;
        }
        let width = (b - a) / self.panels as f64;
        let half = 0.5 * width;
        for p in 0..self.panels {
            let centre = a + (p as f64 + 0.5) * width;
            for (&x, &w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
                visit(centre - half * x, half * w);
                visit(centre + half * x, half * w);
            }
        }
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        self.for_each_node(a, b, |x, w| acc += w * f(x));
        acc
    }
}

impl Default for CompositeRule {
    fn default() -> Self {
        CompositeRule::with_nodes(64)
    }
}
