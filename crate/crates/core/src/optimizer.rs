//! Numerical search over reward rules and the FGM parameter.
//!
//! Two phases: an exhaustive coarse grid, then coordinate-wise golden-section
//! refinement in a one-step bracket around the incumbent. Only the budget
//! split `x = w − z` is searched, so the free coordinates are `(z, y)` and,
//! for FGM, `θ`. Grid ties go to the lexicographically smallest `(z, y, θ)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{fgm_performance_value, TRIVIAL_BUDGET};
use crate::copulas::FgmParameter;
use crate::error::{Error, Result};
use crate::model::{iid_performance_value, upper_bound, Budget, RewardRule};

/// Values closer than this on the coarse grid count as a tie.
const GRID_TIE: f64 = 1e-12;
/// Minimum gain for a refinement step to be accepted.
const REFINE_GAIN: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Coarse grid spacing for `y` and `z`.
    pub reward_step: f64,
    /// Coarse grid spacing for `θ`.
    pub theta_step: f64,
    /// Refinement stops once no coordinate moves by more than this.
    pub refine_tolerance: f64,
    pub max_refine_sweeps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            reward_step: 0.01,
            theta_step: 0.05,
            refine_tolerance: 1e-6,
            max_refine_sweeps: 50,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.reward_step) || !positive(self.theta_step) {
            return Err(Error::Parameter("coarse steps must be positive".into()));
        }
        if !positive(self.refine_tolerance) {
            return Err(Error::Parameter("refine tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub rule: RewardRule,
    pub theta: Option<FgmParameter>,
    pub performance: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    step: f64,
}

impl Axis {
    fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        let mut pts: Vec<f64> = (0..=n)
            .map(|i| (self.lo + i as f64 * self.step).min(self.hi))
            .collect();
        if pts.last().is_some_and(|&p| p < self.hi - 1e-12) {
            pts.push(self.hi);
        }
        pts
    }
}

struct Counted<F> {
    f: F,
    calls: std::cell::Cell<usize>,
}

impl<F: Fn(&[f64]) -> f64> Counted<F> {
    fn eval(&self, p: &[f64]) -> f64 {
        self.calls.set(self.calls.get() + 1);
        (self.f)(p)
    }
}

struct SearchOutcome {
    point: Vec<f64>,
    value: f64,
    evaluations: usize,
    converged: bool,
}

/// Maximise `f` over `[lo, hi]`, returning the best of the golden-section
/// estimate and both endpoints.
fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (a0, b0) = (lo, hi);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    [(mid, f(mid)), (a0, f(a0)), (b0, f(b0))].into_iter().fold(
        (f64::NAN, f64::NEG_INFINITY),
        |best, cand| if cand.1 > best.1 { cand } else { best },
    )
}

fn search<F: Fn(&[f64]) -> f64>(f: F, axes: &[Axis], config: &SearchConfig) -> SearchOutcome {
    let f = Counted {
        f,
        calls: std::cell::Cell::new(0),
    };
    let grids: Vec<Vec<f64>> = axes.iter().map(Axis::points).collect();

    // Odometer over the grid, first axis slowest.
    let mut idx = vec![0usize; axes.len()];
    let mut point: Vec<f64> = grids.iter().map(|g| g[0]).collect();
    let mut best_point = point.clone();
    let mut best = f64::NEG_INFINITY;
    'grid: loop {
        for (k, g) in grids.iter().enumerate() {
            point[k] = g[idx[k]];
        }
        let v = f.eval(&point);
        if v > best + GRID_TIE {
            best = v;
            best_point.copy_from_slice(&point);
        }
        let mut k = axes.len();
        loop {
            if k == 0 {
                break 'grid;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < grids[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }

    let mut p = best_point;
    let mut converged = false;
    let line_tol = config.refine_tolerance * 1e-2;
    for _ in 0..config.max_refine_sweeps {
        let mut moved = 0.0f64;
        for k in 0..axes.len() {
            let ax = axes[k];
            let lo = (p[k] - ax.step).max(ax.lo);
            let hi = (p[k] + ax.step).min(ax.hi);
            if hi <= lo {
                continue;
            }
            let mut trial = p.clone();
            let (t, v) = golden_section_max(
                |s| {
                    trial[k] = s;
                    f.eval(&trial)
                },
                lo,
                hi,
                line_tol,
            );
            if v > best + REFINE_GAIN {
                moved = moved.max((t - p[k]).abs());
                p[k] = t;
                best = v;
            }
        }
        if moved < config.refine_tolerance {
            converged = true;
            break;
        }
    }

    SearchOutcome {
        point: p,
        value: best,
        evaluations: f.calls.get(),
        converged,
    }
}

fn check_budget(w: f64) -> Result<Budget> {
    let b = Budget::new(w)?;
    if b.is_trivial() {
        return Err(Error::Regime(format!(
            "w = {w} >= 3/2: (0, 0, w) already yields performance 2"
        )));
    }
    Ok(b)
}

/// For `w > 1` every `z >= 1` with `x = w − z` is equivalent; report the
/// representative with `z = w`.
fn canonicalize<F: Fn(&[f64]) -> f64>(w: f64, out: &mut SearchOutcome, f: F, tol: f64) {
    if w > 1.0 && out.point[0] > 1.0 - tol && out.point[0] < w {
        let mut cand = out.point.clone();
        cand[0] = w;
        let v = f(&cand);
        out.evaluations += 1;
        if v >= out.value - 1e-12 {
            out.point = cand;
            out.value = v;
        }
    }
}

/// Best rule under independent costs.
pub fn optimize_rule_iid(w: f64, config: &SearchConfig) -> Result<OptimizationResult> {
    config.validate()?;
    let budget = check_budget(w)?;
    if w == 0.0 {
        return Ok(OptimizationResult {
            rule: RewardRule::zero(),
            theta: None,
            performance: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    let objective = |p: &[f64]| iid_performance_value((w - p[0]).max(0.0), p[1], p[0]);
    let axes = [
        Axis {
            lo: 0.0,
            hi: w,
            step: config.reward_step,
        },
        Axis {
            lo: 0.0,
            hi: w,
            step: config.reward_step,
        },
    ];
    let mut out = search(objective, &axes, config);
    canonicalize(w, &mut out, objective, config.refine_tolerance);
    let rule = RewardRule::full_budget(out.point[1], out.point[0], budget)?;
    Ok(OptimizationResult {
        rule,
        theta: None,
        performance: out.value.min(upper_bound(budget)),
        evaluations: out.evaluations,
        converged: out.converged,
    })
}

/// Best rule for FGM costs with `θ` fixed.
pub fn optimize_rule_fgm_fixed(
    w: f64,
    theta: FgmParameter,
    config: &SearchConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    let budget = check_budget(w)?;
    let t = theta.value();
    if w == 0.0 {
        return Ok(OptimizationResult {
            rule: RewardRule::zero(),
            theta: Some(theta),
            performance: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    let objective = |p: &[f64]| fgm_performance_value((w - p[0]).max(0.0), p[1], p[0], t);
    let axes = [
        Axis {
            lo: 0.0,
            hi: w,
            step: config.reward_step,
        },
        Axis {
            lo: 0.0,
            hi: w,
            step: config.reward_step,
        },
    ];
    let mut out = search(objective, &axes, config);
    canonicalize(w, &mut out, objective, config.refine_tolerance);
    Ok(OptimizationResult {
        rule: RewardRule::full_budget(out.point[1], out.point[0], budget)?,
        theta: Some(theta),
        performance: out.value,
        evaluations: out.evaluations,
        converged: out.converged,
    })
}

/// Joint search over `(y, z, θ)` for FGM costs.
pub fn optimize_fgm(w: f64, config: &SearchConfig) -> Result<OptimizationResult> {
    config.validate()?;
    let budget = check_budget(w)?;
    if w == 0.0 {
        // Every θ ties at zero; the smallest wins.
        return Ok(OptimizationResult {
            rule: RewardRule::zero(),
            theta: Some(FgmParameter::new(-1.0)?),
            performance: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    let objective = |p: &[f64]| fgm_performance_value((w - p[0]).max(0.0), p[1], p[0], p[2]);
    let axes = [
        Axis {
            lo: 0.0,
            hi: w,
            step: config.reward_step,
        },
        Axis {
            lo: 0.0,
            hi: w,
            step: config.reward_step,
        },
        Axis {
            lo: -1.0,
            hi: 1.0,
            step: config.theta_step,
        },
    ];
    let mut out = search(objective, &axes, config);
    canonicalize(w, &mut out, objective, config.refine_tolerance);
    Ok(OptimizationResult {
        rule: RewardRule::full_budget(out.point[1], out.point[0], budget)?,
        theta: Some(FgmParameter::new(out.point[2].clamp(-1.0, 1.0))?),
        performance: out.value.min(upper_bound(budget)),
        evaluations: out.evaluations,
        converged: out.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Iid,
    Fgm,
    FgmThetaZero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: Option<f64>,
    pub performance: f64,
}

/// Budgets `w_min, w_min + step, …` strictly below `w_max`.
pub fn sweep_budgets(w_min: f64, w_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Parameter(format!(
            "sweep step must be positive, got {step}"
        )));
    }
    // The range is half-open, so w_max = 3/2 still keeps every budget below it.
    if !(w_min >= 0.0 && w_min < w_max && w_max <= TRIVIAL_BUDGET) {
        return Err(Error::Parameter(format!(
            "sweep needs 0 <= w_min < w_max <= 3/2, got [{w_min}, {w_max})"
        )));
    }
    let count = ((w_max - w_min) / step - 1e-9).ceil() as usize;
    Ok((0..count)
        .map(|i| ((w_min + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// One optimisation per budget; rows come back in budget order.
pub fn sweep(
    w_min: f64,
    w_max: f64,
    step: f64,
    mode: SweepMode,
    config: &SearchConfig,
) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let budgets = sweep_budgets(w_min, w_max, step)?;
    budgets
        .par_iter()
        .map(|&w| {
            let r = match mode {
                SweepMode::Iid => optimize_rule_iid(w, config)?,
                SweepMode::Fgm => optimize_fgm(w, config)?,
                SweepMode::FgmThetaZero => {
                    optimize_rule_fgm_fixed(w, FgmParameter::new(0.0)?, config)?
                }
            };
            Ok(SweepRow {
                w,
                x: r.rule.x(),
                y: r.rule.y(),
                z: r.rule.z(),
                theta: r.theta.map(FgmParameter::value),
                performance: r.performance,
            })
        })
        .collect()
}
