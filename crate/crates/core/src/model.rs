//! Domain types, the agent's sequential best response, and scheme
//! evaluation.
//!
//! The agent learns `A = c`, compares the value of performing now against
//! waiting, then learns `B` and performs in period 2 iff `B` does not
//! exceed the reward on offer (`z` after a period-1 performance, `y`
//! otherwise). Indifference resolves to performing at both decision points.

use serde::Serialize;

use crate::copulas::CostKernel;
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, bisect_switch, BISECTION_TOLERANCE, DEFAULT_TOLERANCE};

/// Slack allowed on the budget constraints (`y <= w`, `x + z <= w`).
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// Decision values within this distance of zero count as indifference.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Scan points per smooth segment when looking for decision switches.
const DECISION_SCAN: usize = 64;

/// Uniform CDF on `[0, 1]`.
#[inline]
pub fn uniform_cdf(t: f64) -> f64 {
    t.clamp(0.0, 1.0)
}

/// Total reward budget `w`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Budget(f64);

impl Budget {
    pub fn new(w: f64) -> Result<Self> {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Domain(format!(
                "budget must be finite and non-negative, got {w}"
            )));
        }
        Ok(Self(w))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Budgets of at least 3/2 admit full performance in both periods.
    pub fn is_trivial(self) -> bool {
        self.0 >= 1.5
    }
}

/// A reward rule `(x, y, z)` under budget `w`.
///
/// `x` pays a period-1 performance, `y` a period-2 performance after a
/// period-1 skip, and `z` is the increment for a second performance, so an
/// agent performing twice receives `x + z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardRule {
    x: f64,
    y: f64,
    z: f64,
    w: f64,
}

impl RewardRule {
    /// Build a rule, checking `0 <= x`, `0 <= y <= w`, `0 <= z`, `x + z <= w`.
    pub fn new(x: f64, y: f64, z: f64, w: Budget) -> Result<Self> {
        let w = w.value();
        let finite = x.is_finite() && y.is_finite() && z.is_finite();
        if !finite || x < 0.0 || y < 0.0 || z < 0.0 {
            return Err(Error::Domain(format!(
                "rewards must be finite and non-negative, got ({x}, {y}, {z})"
            )));
        }
        if y > w + FEASIBILITY_SLACK || x + z > w + FEASIBILITY_SLACK {
            return Err(Error::Domain(format!(
                "rule ({x}, {y}, {z}) violates the budget w = {w}"
            )));
        }
        Ok(Self { x, y, z, w })
    }

    /// The rule `(w - z, y, z)` that spends the whole budget on two performances.
    pub fn full_budget(y: f64, z: f64, w: Budget) -> Result<Self> {
        Self::new((w.value() - z).max(0.0), y, z, w)
    }

    pub fn zero() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: 0.0,
            w: 0.0,
        }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }

    #[inline]
    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn budget(&self) -> Budget {
        Budget(self.w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Period {
    First,
    Second,
}

/// What the agent knows at a decision point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub period: Period,
    pub performed1: bool,
    cost: f64,
}

impl AgentState {
    pub fn new(period: Period, performed1: bool, cost: f64) -> Result<Self> {
        check_cost(cost)?;
        Ok(Self {
            period,
            performed1,
            cost,
        })
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Best response at this state.
    pub fn decide(&self, kernel: &CostKernel, rule: &RewardRule) -> Result<bool> {
        match self.period {
            Period::First => agent_period1_decision(kernel, rule, self.cost),
            Period::Second => agent_period2_decision(rule, self.performed1, self.cost),
        }
    }
}

fn check_cost(c: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::Domain(format!("cost must lie in [0, 1], got {c}")));
    }
    Ok(())
}

/// Closed sub-interval of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }
}

/// Expected performance of a scheme and its breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeEvaluation {
    pub performance: f64,
    pub period1_mass: f64,
    pub period2_mass: f64,
    /// Period-1 costs at which the agent performs.
    pub participation_set: Vec<Interval>,
}

impl SchemeEvaluation {
    fn zero() -> Self {
        Self {
            performance: 0.0,
            period1_mass: 0.0,
            period2_mass: 0.0,
            participation_set: Vec::new(),
        }
    }
}

/// `E[(t - B)+]` for `B` uniform on `[0, 1]`.
pub fn expected_surplus_uniform(t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("surplus needs t >= 0, got {t}")));
    }
    Ok(surplus_uniform(t))
}

#[inline]
pub(crate) fn surplus_uniform(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t <= 1.0 {
        0.5 * t * t
    } else {
        t - 0.5
    }
}

/// Period-1 cost threshold under independent costs, unclamped.
///
/// The agent with cost `c` performs iff `c <= x + phi(z) - phi(y)`.
pub fn period1_threshold_iid(rule: &RewardRule) -> f64 {
    iid_threshold(rule.x, rule.y, rule.z)
}

#[inline]
pub(crate) fn iid_threshold(x: f64, y: f64, z: f64) -> f64 {
    x + surplus_uniform(z) - surplus_uniform(y)
}

/// Expected number of performances under independent costs, without the
/// feasibility check. Used by searches and finite differences.
#[inline]
pub fn iid_performance_value(x: f64, y: f64, z: f64) -> f64 {
    let mass = uniform_cdf(iid_threshold(x, y, z));
    mass * (1.0 + uniform_cdf(z)) + (1.0 - mass) * uniform_cdf(y)
}

/// Closed-form scheme evaluation under independent costs.
pub fn performance_iid(rule: &RewardRule) -> SchemeEvaluation {
    let threshold = period1_threshold_iid(rule);
    let mass = uniform_cdf(threshold);
    let period2 = mass * uniform_cdf(rule.z) + (1.0 - mass) * uniform_cdf(rule.y);
    let participation_set = if threshold >= 0.0 {
        vec![Interval { lo: 0.0, hi: mass }]
    } else {
        Vec::new()
    };
    SchemeEvaluation {
        performance: mass + period2,
        period1_mass: mass,
        period2_mass: period2,
        participation_set,
    }
}

/// Net value of performing in period 1 at cost `c`, relative to waiting.
#[inline]
fn period1_advantage(kernel: &CostKernel, rule: &RewardRule, c: f64) -> f64 {
    rule.x - c + kernel.expected_surplus(c, rule.z) - kernel.expected_surplus(c, rule.y)
}

#[inline]
fn performs_first(kernel: &CostKernel, rule: &RewardRule, c: f64) -> bool {
    period1_advantage(kernel, rule, c) >= -TIE_TOLERANCE
}

/// Period-1 best response at cost `c`.
///
/// Performs iff `x - c + E[(z - B_c)+] >= E[(y - B_c)+]`, with both
/// expectations under the kernel's conditional law given `A = c`.
pub fn agent_period1_decision(kernel: &CostKernel, rule: &RewardRule, c: f64) -> Result<bool> {
    check_cost(c)?;
    let advantage = period1_advantage(kernel, rule, c);
    if advantage.is_nan() {
        return Err(Error::Kernel(format!(
            "{} produced NaN expectations at c = {c}",
            kernel.description()
        )));
    }
    Ok(advantage >= -TIE_TOLERANCE)
}

/// Period-2 best response at cost `b`.
pub fn agent_period2_decision(rule: &RewardRule, performed1: bool, b: f64) -> Result<bool> {
    check_cost(b)?;
    Ok(performs_second(rule, performed1, b))
}

#[inline]
pub(crate) fn performs_second(rule: &RewardRule, performed1: bool, b: f64) -> bool {
    if performed1 {
        b <= rule.z
    } else {
        b <= rule.y
    }
}

/// Ceiling on performance: each period contributes at most
/// `F(w)`.
pub fn upper_bound(w: Budget) -> f64 {
    2.0 * w.value().min(1.0)
}

/// Evaluate a scheme under an arbitrary cost kernel.
///
/// The period-1 axis is split at the kernel's structural breakpoints and at
/// every switch of the agent's period-1 decision (located by bisection),
/// and each piece is integrated by adaptive Simpson.
pub fn evaluate_scheme(kernel: &CostKernel, rule: &RewardRule) -> Result<SchemeEvaluation> {
    if rule.w == 0.0 {
        return Ok(SchemeEvaluation::zero());
    }

    let mut cuts = vec![0.0, 1.0];
    cuts.extend(
        kernel
            .c_breakpoints(&[rule.y, rule.z])
            .into_iter()
            .filter(|c| *c > 0.0 && *c < 1.0),
    );
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    // Sub-segments with a constant period-1 decision.
    let mut pieces: Vec<(f64, f64, bool)> = Vec::new();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let inset = (b - a) * 1e-9;
        let probe = |k: usize| {
            let t = k as f64 / DECISION_SCAN as f64;
            (a + inset + t * (b - a - 2.0 * inset)).clamp(a, b)
        };
        let mut start = a;
        let mut prev_c = probe(0);
        let mut prev = performs_first(kernel, rule, prev_c);
        for k in 1..=DECISION_SCAN {
            let c = probe(k);
            let cur = performs_first(kernel, rule, c);
            if cur != prev {
                let switch = bisect_switch(
                    |s| performs_first(kernel, rule, s),
                    prev_c,
                    c,
                    BISECTION_TOLERANCE,
                );
                pieces.push((start, switch, prev));
                start = switch;
                prev = cur;
            }
            prev_c = c;
        }
        pieces.push((start, b, prev));
    }

    let mut period1_mass = 0.0;
    let mut period2_mass = 0.0;
    let mut participation_set: Vec<Interval> = Vec::new();
    for &(lo, hi, performs) in &pieces {
        if hi <= lo {
            continue;
        }
        let threshold = if performs { rule.z } else { rule.y };
        period2_mass += adaptive_simpson(
            |c| kernel.conditional_cdf(c, threshold),
            lo,
            hi,
            DEFAULT_TOLERANCE,
        )?;
        if performs {
            period1_mass += hi - lo;
            match participation_set.last_mut() {
                Some(last) if (last.hi - lo).abs() < 1e-15 => last.hi = hi,
                _ => participation_set.push(Interval { lo, hi }),
            }
        }
    }

    Ok(SchemeEvaluation {
        performance: period1_mass + period2_mass,
        period1_mass,
        period2_mass,
        participation_set,
    })
}
