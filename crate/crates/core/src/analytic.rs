//! Closed-form results: optimal rules under independent costs, the regime
//! map, and FGM thresholds and performance levels.

use serde::Serialize;

use crate::copulas::{fgm_surplus_shift, FgmParameter};
use crate::error::{Error, Result};
use crate::model::{
    performance_iid, surplus_uniform, uniform_cdf, Budget, Interval, RewardRule, SchemeEvaluation,
};

/// Budget where a positive second-performance reward starts to pay: the
/// root of [`g_fn`], `2 − √2`.
pub const SUFFICIENT_BOUNDARY: f64 = 2.0 - std::f64::consts::SQRT_2;

/// Root of [`h_fn`], `√2`.
pub const H_ROOT: f64 = std::f64::consts::SQRT_2;

/// Budget at which full performance becomes attainable under independent
/// costs.
pub const TRIVIAL_BUDGET: f64 = 1.5;

const DOMAIN_SLACK: f64 = 1e-12;

/// Optimal second-performance reward on the partially sufficient branch,
/// `(w + 1 − 2√(w² − 2.5w + 1.75)) / 3` for `w ∈ [2 − √2, 1]`.
pub fn g_fn(w: f64) -> Result<f64> {
    if !(SUFFICIENT_BOUNDARY - DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&w) {
        return Err(Error::Domain(format!(
            "g is defined on [2 - sqrt(2), 1], got {w}"
        )));
    }
    Ok((w + 1.0 - 2.0 * (w * w - 2.5 * w + 1.75).sqrt()) / 3.0)
}

/// `(w + 1 − 2√(w² + 0.5w − 1.25)) / 3` for `w ∈ [1, √2]`.
///
/// This is the stationary point in `y` of the objective when the
/// `w <= 1` expressions (`F(z) = z`, threshold `(2x − y² + z²)/2`) are
/// applied unchanged with `z = w > 1`. With the cost CDF clamped at one the
/// optimal `y` for `w > 1` is [`sustained_y_star`] instead; the two agree
/// only at `w = 1`.
pub fn h_fn(w: f64) -> Result<f64> {
    if !(1.0 - DOMAIN_SLACK..=H_ROOT + DOMAIN_SLACK).contains(&w) {
        return Err(Error::Domain(format!(
            "h is defined on [1, sqrt(2)], got {w}"
        )));
    }
    Ok((w + 1.0 - 2.0 * (w * w + 0.5 * w - 1.25).max(0.0).sqrt()) / 3.0)
}

/// Optimal skip-then-perform reward `y*` for `w ∈ [1, 3/2]`.
///
/// With `z >= 1` every period-1 performer also performs in period 2, the
/// threshold is `w − 1/2 − y²/2` and the objective `2c̄ + (1 − c̄)y` is
/// maximised at the root of `3y² − 4y + 3 − 2w = 0` in `[0, 1/3]`.
pub fn sustained_y_star(w: f64) -> Result<f64> {
    if !(1.0 - DOMAIN_SLACK..=TRIVIAL_BUDGET + DOMAIN_SLACK).contains(&w) {
        return Err(Error::Domain(format!("y* is defined on [1, 3/2], got {w}")));
    }
    Ok(((2.0 - (6.0 * w - 5.0).max(0.0).sqrt()) / 3.0).max(0.0))
}

/// Which reward structure is optimal under independent costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `(w, w, 0)`: only the first performance is rewarded.
    PurelySufficient,
    /// `(w − g, w, g)`: mostly the first performance, some second.
    PartiallySufficient,
    /// `(w − z, y*, z)` with `z >= 1`: mostly the second performance.
    PartiallySustained,
    /// `(0, 0, w)`: only the second performance.
    PurelySustained,
}

impl Regime {
    /// Boundaries `(2 − √2, 1, 3/2)` between consecutive regimes.
    pub const fn boundaries() -> (f64, f64, f64) {
        (SUFFICIENT_BOUNDARY, 1.0, TRIVIAL_BUDGET)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::PurelySufficient => "purely_sufficient",
            Self::PartiallySufficient => "partially_sufficient",
            Self::PartiallySustained => "partially_sustained",
            Self::PurelySustained => "purely_sustained",
        }
    }
}

pub fn regime(w: Budget) -> Regime {
    let w = w.value();
    if w <= SUFFICIENT_BOUNDARY {
        Regime::PurelySufficient
    } else if w <= 1.0 {
        Regime::PartiallySufficient
    } else if w < TRIVIAL_BUDGET {
        Regime::PartiallySustained
    } else {
        Regime::PurelySustained
    }
}

/// Optimal rules under independent costs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IidOptimum {
    pub w: f64,
    /// All returned optima, ordered by `(z, y)`. Two entries at `w = 1`.
    pub rules: Vec<RewardRule>,
    pub performance: f64,
    pub regime: Regime,
    /// For `w > 1`, any `(w − z, y*, z)` with `z ∈ [1, w]` is optimal; the
    /// representative returned has `z = w`.
    pub any_z_at_least_one: bool,
}

impl IidOptimum {
    /// Lexicographically smallest `(z, y)`.
    pub fn canonical(&self) -> RewardRule {
        self.rules[0]
    }
}

/// Optimal rule(s) for `0 <= w < 3/2` under independent uniform costs.
pub fn optimal_rule_iid(w: Budget) -> Result<IidOptimum> {
    if w.is_trivial() {
        return Err(Error::Regime(format!(
            "w = {} >= 3/2: (0, 0, w) already yields performance 2",
            w.value()
        )));
    }
    let wv = w.value();
    let regime = regime(w);
    let (rules, any_z) = if wv <= SUFFICIENT_BOUNDARY {
        (vec![RewardRule::new(wv, wv, 0.0, w)?], false)
    } else if wv < 1.0 {
        let g = g_fn(wv)?;
        (vec![RewardRule::new(wv - g, wv, g, w)?], false)
    } else if wv == 1.0 {
        (
            vec![
                RewardRule::new(2.0 / 3.0, 1.0, 1.0 / 3.0, w)?,
                RewardRule::new(0.0, 1.0 / 3.0, 1.0, w)?,
            ],
            true,
        )
    } else {
        (
            vec![RewardRule::new(0.0, sustained_y_star(wv)?, wv, w)?],
            true,
        )
    };
    let performance = performance_iid(&rules[0]).performance;
    Ok(IidOptimum {
        w: wv,
        rules,
        performance,
        regime,
        any_z_at_least_one: any_z,
    })
}

/// Partial derivatives of the independent-cost objective in `y` and in `z`
/// (the latter along `x = w − z`), valid for `y, z <= 1`.
///
/// Their sum is `(z − y)²`.
pub fn objective_partials(rule: &RewardRule) -> Result<(f64, f64)> {
    let (x, y, z) = (rule.x(), rule.y(), rule.z());
    if y > 1.0 || z > 1.0 {
        return Err(Error::Domain(format!(
            "partials need y, z <= 1, got y = {y}, z = {z}"
        )));
    }
    let c = (2.0 * x - y * y + z * z) / 2.0;
    let dy = 1.0 - c - y * (1.0 + z - y);
    let dz = c - (1.0 - z) * (1.0 + z - y);
    Ok((dy, dz))
}

/// Threshold and performance for a fixed rule under FGM costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FgmOutcome {
    pub threshold: f64,
    pub performance: f64,
}

fn check_fgm_budget(w: f64) -> Result<()> {
    if !(w > 0.0 && w < TRIVIAL_BUDGET) {
        return Err(Error::Domain(format!(
            "FGM closed forms need 0 < w < 3/2, got {w}"
        )));
    }
    Ok(())
}

/// Rule `(w, w, 0)` under FGM costs.
///
/// The agent performs in period 1 iff `w − c >= u_np(c)`, where `u_np` is the
/// value of waiting; the crossing is linear in `c` and never exceeds 1/2.
pub fn fgm_sufficient_performance(w: f64, theta: FgmParameter) -> Result<FgmOutcome> {
    check_fgm_budget(w)?;
    let th = theta.value();
    let threshold = if w < 1.0 {
        // u_np = (2w²/3)(3/4 + (1/2 − c)(3/2 − w)θ) = a + s(1/2 − c)
        let a = w * w / 2.0;
        let s = 2.0 * w * w / 3.0 * (1.5 - w) * th;
        ((w - a - s / 2.0) / (1.0 - s)).clamp(0.0, 0.5)
    } else {
        // u_np = (1/2 − c)θ/3 + w − 1/2 crosses w − c exactly at c = 1/2.
        0.5
    };
    let f = uniform_cdf(w);
    let dep = th * f * (1.0 - f);
    let performance = threshold + (1.0 - threshold) * f + dep * (threshold * threshold - threshold);
    Ok(FgmOutcome {
        threshold,
        performance,
    })
}

/// Rule `(0, 0, w)` under FGM costs.
pub fn fgm_sustained_performance(w: f64, theta: FgmParameter) -> Result<FgmOutcome> {
    check_fgm_budget(w)?;
    let th = theta.value();
    if w < 1.0 {
        let w2 = w * w;
        let w3 = w2 * w;
        let threshold = 0.5 * (3.0 * w2 + 3.0 * th * w2 - 2.0 * th * w3)
            / (3.0 + 3.0 * th * w2 - 2.0 * th * w3);
        let performance =
            threshold + threshold * w + th * w * (1.0 - w) * (threshold - threshold * threshold);
        Ok(FgmOutcome {
            threshold,
            performance,
        })
    } else {
        // Every cost is at most 1 <= w, so period-1 performers always repeat.
        let threshold = (0.5 * (th + 6.0 * w - 3.0) / (th + 3.0)).min(1.0);
        Ok(FgmOutcome {
            threshold,
            performance: 2.0 * threshold,
        })
    }
}

/// Period-1 threshold for an arbitrary rule under FGM costs, unclamped.
///
/// The advantage of performing is affine in `c`:
/// `x + φ(z) − φ(y) + θΔψ − c(1 + 2θΔψ)` with `Δψ = ψ(z) − ψ(y)`, and
/// `|2θΔψ| <= 1/3` keeps the slope negative.
#[inline]
pub fn fgm_threshold_value(x: f64, y: f64, z: f64, theta: f64) -> f64 {
    let dpsi = fgm_surplus_shift(z) - fgm_surplus_shift(y);
    (x + surplus_uniform(z) - surplus_uniform(y) + theta * dpsi) / (1.0 + 2.0 * theta * dpsi)
}

/// Closed-form performance of any rule under FGM costs, unchecked.
#[inline]
pub fn fgm_performance_value(x: f64, y: f64, z: f64, theta: f64) -> f64 {
    fgm_parts(x, y, z, theta).0
}

fn fgm_parts(x: f64, y: f64, z: f64, theta: f64) -> (f64, f64, f64, f64) {
    let raw = fgm_threshold_value(x, y, z, theta);
    let c = uniform_cdf(raw);
    let (fz, fy) = (uniform_cdf(z), uniform_cdf(y));
    // ∫₀^c (1 − 2s) ds = c − c²
    let tilt = c - c * c;
    let period2 =
        c * fz + theta * fz * (1.0 - fz) * tilt + (1.0 - c) * fy - theta * fy * (1.0 - fy) * tilt;
    (c + period2, c, period2, raw)
}

/// Closed-form evaluation of a rule under FGM costs.
pub fn fgm_performance(rule: &RewardRule, theta: FgmParameter) -> SchemeEvaluation {
    let (performance, mass, period2, raw) = fgm_parts(rule.x(), rule.y(), rule.z(), theta.value());
    SchemeEvaluation {
        performance,
        period1_mass: mass,
        period2_mass: period2,
        participation_set: if raw >= 0.0 {
            vec![Interval { lo: 0.0, hi: mass }]
        } else {
            Vec::new()
        },
    }
}
