//! Seeded simulation of the two-period game.
//!
//! Each draw samples `A`, lets the agent decide using only the conditional
//! law of `B` (never the realisation), then samples `B` and applies the
//! period-2 rule. Draw `i` always uses keyed stream `i`, so the result is
//! the same for any thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::copulas::{dependence_summary, CostKernel, DependenceSummary};
use crate::error::{Error, Result};
use crate::model::{agent_period1_decision, evaluate_scheme, performs_second, RewardRule};
use crate::rng::KeyedStreams;

pub const DEFAULT_DRAWS: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Draws per parallel work unit.
const CHUNK: u64 = 8192;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub neither: u64,
    pub period1_only: u64,
    pub period2_only: u64,
    pub both: u64,
}

impl OutcomeCounts {
    fn merge(self, o: Self) -> Self {
        Self {
            neither: self.neither + o.neither,
            period1_only: self.period1_only + o.period1_only,
            period2_only: self.period2_only + o.period2_only,
            both: self.both + o.both,
        }
    }

    pub fn total(&self) -> u64 {
        self.neither + self.period1_only + self.period2_only + self.both
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
    pub counts: OutcomeCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dependence: Option<DependenceSummary>,
}

impl SimulationReport {
    /// Attach Monte Carlo dependence diagnostics from the same seed.
    pub fn with_dependence(mut self, kernel: &CostKernel) -> Result<Self> {
        self.dependence = Some(dependence_summary(kernel, self.n, self.seed)?);
        Ok(self)
    }
}

/// One simulated agent: `(A, B, performed1, performed2)`.
pub fn simulate_draw(
    kernel: &CostKernel,
    rule: &RewardRule,
    streams: &KeyedStreams,
    index: u64,
) -> Result<(f64, f64, bool, bool)> {
    let mut rng = streams.draw(index);
    let (a, b) = kernel.sample_pair(&mut rng);
    let first = agent_period1_decision(kernel, rule, a)?;
    let second = performs_second(rule, first, b);
    Ok((a, b, first, second))
}

/// Estimate expected performance from `n` simulated agents.
pub fn simulate(
    kernel: &CostKernel,
    rule: &RewardRule,
    n: usize,
    seed: u64,
) -> Result<SimulationReport> {
    if n == 0 {
        return Err(Error::Parameter("simulation needs n >= 1".into()));
    }
    let streams = KeyedStreams::new(seed);
    let n64 = n as u64;
    let chunks = n64.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut c = OutcomeCounts::default();
            for i in chunk * CHUNK..((chunk + 1) * CHUNK).min(n64) {
                let (_, _, p1, p2) = simulate_draw(kernel, rule, &streams, i)?;
                match (p1, p2) {
                    (false, false) => c.neither += 1,
                    (true, false) => c.period1_only += 1,
                    (false, true) => c.period2_only += 1,
                    (true, true) => c.both += 1,
                }
            }
            Ok::<_, Error>(c)
        })
        .try_reduce(OutcomeCounts::default, |a, b| Ok(a.merge(b)))?;

    let nf = n as f64;
    let singles = (counts.period1_only + counts.period2_only) as f64;
    let doubles = counts.both as f64;
    let estimate = (singles + 2.0 * doubles) / nf;
    let stderr = if n > 1 {
        let second_moment = singles + 4.0 * doubles;
        let var = ((second_moment - nf * estimate * estimate) / (nf - 1.0)).max(0.0);
        (var / nf).sqrt()
    } else {
        0.0
    };
    Ok(SimulationReport {
        estimate,
        stderr,
        n,
        seed,
        counts,
        dependence: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticComparison {
    pub analytic: f64,
    pub mc: SimulationReport,
    pub z_score: f64,
}

/// Quadrature against simulation at the default sample size.
pub fn compare_to_analytic(kernel: &CostKernel, rule: &RewardRule) -> Result<AnalyticComparison> {
    compare_to_analytic_with(kernel, rule, DEFAULT_DRAWS, DEFAULT_SEED)
}

pub fn compare_to_analytic_with(
    kernel: &CostKernel,
    rule: &RewardRule,
    n: usize,
    seed: u64,
) -> Result<AnalyticComparison> {
    let analytic = evaluate_scheme(kernel, rule)?.performance;
    let mc = simulate(kernel, rule, n, seed)?;
    let diff = mc.estimate - analytic;
    let z_score = if mc.stderr > 0.0 {
        diff / mc.stderr
    } else if diff.abs() < 1e-12 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(AnalyticComparison {
        analytic,
        mc,
        z_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Budget;

    fn rule(x: f64, y: f64, z: f64, w: f64) -> RewardRule {
        RewardRule::new(x, y, z, Budget::new(w).unwrap()).unwrap()
    }

    #[test]
    fn zero_rule_never_performs() {
        for k in [
            CostKernel::Iid,
            CostKernel::fgm(0.4).unwrap(),
            CostKernel::purely_sustained(0.5).unwrap(),
        ] {
            let r = simulate(&k, &RewardRule::zero(), 10_000, 3).unwrap();
            assert_eq!(r.estimate, 0.0);
            assert_eq!(r.counts.neither, 10_000);
        }
    }

    #[test]
    fn counts_are_consistent() {
        let r = simulate(&CostKernel::Iid, &rule(0.4, 0.4, 0.0, 0.4), 50_000, 11).unwrap();
        assert_eq!(r.counts.total(), 50_000);
        let est =
            (r.counts.period1_only + r.counts.period2_only + 2 * r.counts.both) as f64 / 50_000.0;
        assert_eq!(r.estimate, est);
        assert!((r.estimate - 0.592).abs() < 4.0 * r.stderr);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let k = CostKernel::fgm(-0.7).unwrap();
        let r = rule(0.3, 0.5, 0.2, 0.5);
        assert_eq!(
            simulate(&k, &r, 30_001, 9).unwrap(),
            simulate(&k, &r, 30_001, 9).unwrap()
        );
        assert_ne!(
            simulate(&k, &r, 30_001, 9).unwrap(),
            simulate(&k, &r, 30_001, 10).unwrap()
        );
    }

    #[test]
    fn shard_layout_does_not_matter() {
        let k = CostKernel::purely_sufficient(0.3).unwrap();
        let r = rule(0.3, 0.3, 0.0, 0.3);
        let a = simulate(&k, &r, 20_000, 5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| simulate(&k, &r, 20_000, 5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_empty_run() {
        assert!(simulate(&CostKernel::Iid, &RewardRule::zero(), 0, 1).is_err());
    }
}
