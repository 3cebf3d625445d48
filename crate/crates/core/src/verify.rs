//! Self-checks run by `scheme-lab verify`.
//!
//! Each suite is a list of named checks against independent oracles: a
//! brute-force grid for the independent-cost optimum, a θ grid for the FGM
//! closed forms, and quadrature plus simulation for the constructed kernels.

use serde::Serialize;

use crate::analytic::{
    fgm_sufficient_performance, fgm_sustained_performance, objective_partials, optimal_rule_iid,
};
use crate::copulas::{CostKernel, FgmParameter};
use crate::error::{Error, Result};
use crate::model::{evaluate_scheme, iid_performance_value, Budget, RewardRule};
use crate::montecarlo::simulate;
use crate::output::fmt_sig;

const GRID_POINTS: usize = 201;
const DRAWS: usize = 200_000;
const SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    All,
    Iid,
    Fgm,
    Schemes,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "iid" => Ok(Self::Iid),
            "fgm" => Ok(Self::Fgm),
            "schemes" => Ok(Self::Schemes),
            other => Err(Error::Parameter(format!("unknown suite '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

pub fn run_suite(suite: Suite) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::All | Suite::Iid) {
        out.extend(iid_checks()?);
    }
    if matches!(suite, Suite::All | Suite::Fgm) {
        out.extend(fgm_checks()?);
    }
    if matches!(suite, Suite::All | Suite::Schemes) {
        out.extend(scheme_checks()?);
    }
    Ok(out)
}

/// Best value of the independent-cost objective over a `(y, z)` grid with
/// `x = w − z`.
pub fn brute_force_iid(w: f64, points: usize) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..points {
        let z = w * i as f64 / (points - 1) as f64;
        for j in 0..points {
            let y = w * j as f64 / (points - 1) as f64;
            let v = iid_performance_value(w - z, y, z);
            if v > best.0 {
                best = (v, y, z);
            }
        }
    }
    best
}

fn iid_checks() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for w in [0.2, 0.5, 0.8, 1.0, 1.2, 1.45] {
        let opt = optimal_rule_iid(Budget::new(w)?)?;
        let (grid, _, _) = brute_force_iid(w, GRID_POINTS);
        let gap = opt.performance - grid;
        out.push(CheckOutcome::new(
            format!("iid optimum vs grid, w={}", fmt_sig(w)),
            (-1e-12..=1e-3).contains(&gap),
            format!(
                "closed form {}, grid {}",
                fmt_sig(opt.performance),
                fmt_sig(grid)
            ),
        ));
    }
    let mut worst: f64 = 0.0;
    for (w, y, z) in [
        (0.5, 0.3, 0.2),
        (0.8, 0.6, 0.4),
        (0.9, 0.7, 0.5),
        (1.0, 0.5, 0.6),
    ] {
        let rule = RewardRule::new(w - z, y, z, Budget::new(w)?)?;
        let (dy, dz) = objective_partials(&rule)?;
        worst = worst.max((dy + dz - (z - y) * (z - y)).abs());
    }
    out.push(CheckOutcome::new(
        "partials sum to (z - y)^2",
        worst <= 1e-12,
        format!("max error {}", fmt_sig(worst)),
    ));
    Ok(out)
}

fn fgm_checks() -> Result<Vec<CheckOutcome>> {
    let thetas: Vec<FgmParameter> = (0..=20)
        .map(|i| FgmParameter::new((-1.0 + 0.1 * i as f64).clamp(-1.0, 1.0)))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for w in [0.3, 0.5, 0.7, 0.9, 1.2] {
        let vals = thetas
            .iter()
            .map(|&t| Ok(fgm_sufficient_performance(w, t)?.performance))
            .collect::<Result<Vec<_>>>()?;
        let rise = largest_step(&vals);
        let (passed, shape) = if w < 1.0 {
            (rise < 0.0, "decreasing")
        } else {
            (rise <= 1e-12, "non-increasing")
        };
        out.push(CheckOutcome::new(
            format!("sufficient performance {shape} in theta, w={}", fmt_sig(w)),
            passed,
            format!("largest step {}", fmt_sig(rise)),
        ));
    }
    for (w, sign) in [(0.5, 1.0), (0.8, 1.0), (1.0, 0.0), (1.1, -1.0), (1.3, -1.0)] {
        let vals = thetas
            .iter()
            .map(|&t| Ok(fgm_sustained_performance(w, t)?.performance))
            .collect::<Result<Vec<_>>>()?;
        let (passed, shape, detail) = if sign == 0.0 {
            let spread = vals.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
            (
                spread <= 1e-12,
                "constant",
                format!("max deviation from 1 {}", fmt_sig(spread)),
            )
        } else {
            let smallest = vals
                .windows(2)
                .map(|p| sign * (p[1] - p[0]))
                .fold(f64::INFINITY, f64::min);
            let shape = if sign > 0.0 {
                "increasing"
            } else {
                "decreasing"
            };
            (
                smallest > 0.0,
                shape,
                format!("smallest step {}", fmt_sig(smallest)),
            )
        };
        out.push(CheckOutcome::new(
            format!("sustained performance {shape} in theta, w={}", fmt_sig(w)),
            passed,
            detail,
        ));
    }
    Ok(out)
}

fn largest_step(vals: &[f64]) -> f64 {
    vals.windows(2)
        .map(|p| p[1] - p[0])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn scheme_checks() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let cases = [
        ("sufficient", 0.1),
        ("sufficient", 0.3),
        ("sufficient", 0.5),
        ("sustained", 0.3),
        ("sustained", 0.6),
        ("sustained", 0.9),
        ("sustained", 1.0),
    ];
    for (name, w) in cases {
        let budget = Budget::new(w)?;
        let (kernel, rule) = if name == "sufficient" {
            (
                CostKernel::purely_sufficient(w)?,
                RewardRule::new(w, w, 0.0, budget)?,
            )
        } else {
            (
                CostKernel::purely_sustained(w)?,
                RewardRule::new(0.0, 0.0, w, budget)?,
            )
        };
        let exact = evaluate_scheme(&kernel, &rule)?.performance;
        out.push(CheckOutcome::new(
            format!("{name} kernel attains 2w by quadrature, w={}", fmt_sig(w)),
            (exact - 2.0 * w).abs() <= 1e-6,
            format!("performance {}", fmt_sig(exact)),
        ));
        let mc = simulate(&kernel, &rule, DRAWS, SEED)?;
        let dev = (mc.estimate - 2.0 * w).abs();
        out.push(CheckOutcome::new(
            format!("{name} kernel attains 2w by simulation, w={}", fmt_sig(w)),
            dev <= 3.0 * mc.stderr.max(1e-12),
            format!(
                "estimate {} stderr {}",
                fmt_sig(mc.estimate),
                fmt_sig(mc.stderr)
            ),
        ));
    }
    Ok(out)
}
