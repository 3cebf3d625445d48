//! Cost kernels: joint laws of `(A, B)` on `[0, 1]²` with uniform
//! marginals, represented through the conditional law of `B` given `A = c`.
//!
//! Shipped kernels:
//! - independent costs,
//! - the FGM family `C(a, b) = ab(1 + θ(1 − a)(1 − b))`, `|θ| <= 1`,
//! - the purely sufficient kernel: costs below `w` in period 1 are followed
//!   by costs above `w` in period 2 (needs `w <= 1/2`),
//! - the purely sustained kernel: `B = w − A` whenever `A <= w`,
//! - piecewise-constant grid densities with both marginals rescaled to
//!   uniform.
//!
//! Conditional laws may have atoms (the sustained kernel). CDFs are
//! right-continuous and `E[(t − B)+]` is computed exactly for atoms.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{surplus_uniform, uniform_cdf};
use crate::quadrature::adaptive_simpson;
use crate::rng::KeyedStreams;

/// Default resolution for discretised densities.
pub const DEFAULT_GRID_SIZE: usize = 200;

/// Sup-norm tolerance on the recovered marginal of `B`.
pub const MARGINAL_TOLERANCE: f64 = 1e-6;
pub const GRID_MARGINAL_TOLERANCE: f64 = 1e-3;

/// Smallest sample size accepted by [`dependence_summary`].
pub const MIN_DEPENDENCE_SAMPLES: usize = 10_000;

const SINKHORN_MAX_ITERS: usize = 20_000;
const SINKHORN_TOLERANCE: f64 = 1e-13;

/// FGM dependence parameter, `θ ∈ [−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct FgmParameter(f64);

impl FgmParameter {
    pub fn new(theta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&theta) {
            return Err(Error::Domain(format!(
                "FGM parameter must lie in [-1, 1], got {theta}"
            )));
        }
        Ok(Self(theta))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

/// Joint FGM CDF `P(A <= a, B <= b)`.
pub fn fgm_cdf(a: f64, b: f64, theta: FgmParameter) -> Result<f64> {
    check_unit("a", a)?;
    check_unit("b", b)?;
    Ok(a * b * (1.0 + theta.0 * (1.0 - a) * (1.0 - b)))
}

/// `P(B <= b | A = c) = b + θ(1 − 2c) b(1 − b)`.
pub fn fgm_conditional_cdf(c: f64, b: f64, theta: FgmParameter) -> Result<f64> {
    check_unit("c", c)?;
    check_unit("b", b)?;
    Ok(fgm_cond_cdf(c, b, theta.0))
}

#[inline]
fn fgm_cond_cdf(c: f64, b: f64, theta: f64) -> f64 {
    let b = uniform_cdf(b);
    b + theta * (1.0 - 2.0 * c) * b * (1.0 - b)
}

/// Conditional density `1 + θ(1 − 2c)(1 − 2b)`.
pub fn fgm_conditional_density(c: f64, b: f64, theta: FgmParameter) -> f64 {
    1.0 + theta.0 * (1.0 - 2.0 * c) * (1.0 - 2.0 * b)
}

/// Inverse of [`fgm_conditional_cdf`] in `b`.
pub fn fgm_conditional_quantile(c: f64, u: f64, theta: FgmParameter) -> Result<f64> {
    check_unit("c", c)?;
    check_unit("u", u)?;
    Ok(fgm_cond_quantile(c, u, theta.0))
}

#[inline]
fn fgm_cond_quantile(c: f64, u: f64, theta: f64) -> f64 {
    // Root in [0, 1] of k b² − (1 + k) b + u = 0, written in the
    // cancellation-free form that also covers k = 0.
    let k = theta * (1.0 - 2.0 * c);
    let disc = ((1.0 + k) * (1.0 + k) - 4.0 * k * u).max(0.0);
    (2.0 * u / ((1.0 + k) + disc.sqrt())).clamp(0.0, 1.0)
}

/// `E[B | A = c] = 1/2 + (2c − 1)θ/6`.
pub fn fgm_conditional_mean(c: f64, theta: FgmParameter) -> Result<f64> {
    check_unit("c", c)?;
    Ok(0.5 + (2.0 * c - 1.0) * theta.0 / 6.0)
}

/// `∫₀^min(t,1) b(1 − b) db`, the dependence part of the FGM surplus.
#[inline]
pub(crate) fn fgm_surplus_shift(t: f64) -> f64 {
    let m = uniform_cdf(t);
    m * m / 2.0 - m * m * m / 3.0
}

#[inline]
fn fgm_surplus(c: f64, t: f64, theta: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    surplus_uniform(t) + theta * (1.0 - 2.0 * c) * fgm_surplus_shift(t)
}

/// CDF of the uniform law on `(lo, hi]`.
#[inline]
fn interval_cdf(lo: f64, hi: f64, t: f64) -> f64 {
    ((t - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// `E[(t − U)+]` for `U` uniform on `(lo, hi]`.
#[inline]
fn interval_surplus(lo: f64, hi: f64, t: f64) -> f64 {
    if t <= lo {
        0.0
    } else if t >= hi {
        t - 0.5 * (lo + hi)
    } else {
        (t - lo) * (t - lo) / (2.0 * (hi - lo))
    }
}

/// Piecewise-constant density on an `n × n` grid with uniform marginals.
///
/// Row `i` covers `A ∈ [i/n, (i+1)/n)`; within a row the conditional law of
/// `B` is piecewise uniform over the columns.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    n: usize,
    /// Row-conditional cell probabilities, row-major.
    probs: Vec<f64>,
    /// Per-row cumulative probabilities, `n + 1` entries per row.
    cum: Vec<f64>,
    /// Per-row cumulative first moments, `n + 1` entries per row.
    moments: Vec<f64>,
}

impl GridDensity {
    /// Build from non-negative cell masses. The total is normalised to one
    /// and rows and columns are rescaled (Sinkhorn) to uniform marginals.
    pub fn from_masses(masses: &[Vec<f64>]) -> Result<Self> {
        let n = masses.len();
        if n == 0 {
            return Err(Error::GridFormat("empty matrix".into()));
        }
        let mut m = Vec::with_capacity(n * n);
        for (i, row) in masses.iter().enumerate() {
            if row.len() != n {
                return Err(Error::GridFormat(format!(
                    "row {i} has {} columns, expected {n}",
                    row.len()
                )));
            }
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::GridFormat(format!("row {i} has invalid entry {v}")));
                }
                m.push(v);
            }
        }
        let total: f64 = m.iter().sum();
        if total <= 0.0 {
            return Err(Error::GridFormat("matrix has zero total mass".into()));
        }
        m.iter_mut().for_each(|v| *v /= total);
        sinkhorn_uniform(&mut m, n)?;

        let mut probs = vec![0.0; n * n];
        let mut cum = vec![0.0; n * (n + 1)];
        let mut moments = vec![0.0; n * (n + 1)];
        let nf = n as f64;
        for i in 0..n {
            let row = &m[i * n..(i + 1) * n];
            let row_total: f64 = row.iter().sum();
            for j in 0..n {
                let p = row[j] / row_total;
                probs[i * n + j] = p;
                cum[i * (n + 1) + j + 1] = cum[i * (n + 1) + j] + p;
                moments[i * (n + 1) + j + 1] = moments[i * (n + 1) + j] + p * (j as f64 + 0.5) / nf;
            }
        }
        Ok(Self {
            n,
            probs,
            cum,
            moments,
        })
    }

    /// Discretise a density on `[0, 1]²` by the midpoint rule.
    pub fn from_density_fn<F>(n: usize, density: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64,
    {
        if n == 0 {
            return Err(Error::Parameter("grid size must be positive".into()));
        }
        let h = 1.0 / n as f64;
        let masses: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| density((i as f64 + 0.5) * h, (j as f64 + 0.5) * h) * h * h)
                    .collect()
            })
            .collect();
        Self::from_masses(&masses)
    }

    /// Load an `n × n` matrix of non-negative reals from a headerless CSV.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::GridFormat(format!("row {i}: cannot parse {s:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let grid = Self::from_masses(&rows)?;
        let kernel = CostKernel::Grid(grid);
        let dev = marginal_deviation(&kernel);
        if dev > GRID_MARGINAL_TOLERANCE {
            return Err(Error::Infeasible(format!(
                "grid marginals deviate from uniform by {dev:e}"
            )));
        }
        match kernel {
            CostKernel::Grid(g) => Ok(g),
            _ => unreachable!(),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn row(&self, c: f64) -> usize {
        ((c * self.n as f64) as usize).min(self.n - 1)
    }

    fn conditional_cdf(&self, c: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let i = self.row(c);
        let n = self.n;
        let scaled = t * n as f64;
        let k = (scaled as usize).min(n - 1);
        self.cum[i * (n + 1) + k] + self.probs[i * n + k] * (scaled - k as f64)
    }

    fn expected_surplus(&self, c: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let i = self.row(c);
        let n = self.n;
        if t >= 1.0 {
            return t - self.moments[i * (n + 1) + n];
        }
        let nf = n as f64;
        let k = ((t * nf) as usize).min(n - 1);
        let left = k as f64 / nf;
        let p = self.probs[i * n + k];
        let cdf = self.cum[i * (n + 1) + k] + p * (t * nf - k as f64);
        let partial_moment = p * nf * (t * t - left * left) / 2.0;
        t * cdf - (self.moments[i * (n + 1) + k] + partial_moment)
    }

    fn sample(&self, c: f64, u: f64) -> f64 {
        let i = self.row(c);
        let n = self.n;
        let cum = &self.cum[i * (n + 1)..(i + 1) * (n + 1)];
        // Last j with cum[j] <= u, skipping empty cells.
        let j = cum
            .partition_point(|&v| v <= u)
            .saturating_sub(1)
            .min(n - 1);
        let p = self.probs[i * n + j];
        let within = if p > 0.0 {
            ((u - cum[j]) / p).clamp(0.0, 1.0)
        } else {
            0.5
        };
        (j as f64 + within) / n as f64
    }

    fn mean(&self) -> f64 {
        let n = self.n;
        (0..n).map(|i| self.moments[i * (n + 1) + n]).sum::<f64>() / n as f64
    }
}

/// Alternately rescale rows and columns until each sums to `1/n`.
fn sinkhorn_uniform(m: &mut [f64], n: usize) -> Result<()> {
    let target = 1.0 / n as f64;
    for _ in 0..SINKHORN_MAX_ITERS {
        for i in 0..n {
            let s: f64 = m[i * n..(i + 1) * n].iter().sum();
            if s <= 0.0 {
                return Err(Error::Infeasible(format!("grid row {i} has no mass")));
            }
            m[i * n..(i + 1) * n]
                .iter_mut()
                .for_each(|v| *v *= target / s);
        }
        let mut worst = 0.0f64;
        for j in 0..n {
            let s: f64 = (0..n).map(|i| m[i * n + j]).sum();
            if s <= 0.0 {
                return Err(Error::Infeasible(format!("grid column {j} has no mass")));
            }
            worst = worst.max((s / target - 1.0).abs());
            (0..n).for_each(|i| m[i * n + j] *= target / s);
        }
        if worst < SINKHORN_TOLERANCE {
            return Ok(());
        }
    }
    Err(Error::Infeasible(
        "grid cannot be rescaled to uniform marginals (no total support)".into(),
    ))
}

/// A joint law of period costs, exposed through `B | A = c`.
#[derive(Debug, Clone, PartialEq)]
pub enum CostKernel {
    Iid,
    Fgm(FgmParameter),
    /// Period-1 costs at or below `w` are followed by costs uniform on
    /// `(w, 1]`; higher costs are followed by `U[0, w]` with probability
    /// `w / (1 − w)` and `U(w, 1]` otherwise.
    PurelySufficient {
        w: f64,
    },
    /// `B = w − A` when `A <= w`, else `B` uniform on `(w, 1]`.
    PurelySustained {
        w: f64,
    },
    Grid(GridDensity),
}

impl CostKernel {
    pub fn fgm(theta: f64) -> Result<Self> {
        Ok(Self::Fgm(FgmParameter::new(theta)?))
    }

    /// Requires `0 < w <= 1/2`; above that no law keeps both marginals
    /// uniform while sending every low period-1 type high.
    pub fn purely_sufficient(w: f64) -> Result<Self> {
        if w.is_nan() || w <= 0.0 {
            return Err(Error::Parameter(format!(
                "sufficient kernel needs w > 0, got {w}"
            )));
        }
        if w > 0.5 {
            return Err(Error::Infeasible(format!(
                "sufficient kernel is feasible only for w <= 1/2, got {w}"
            )));
        }
        Ok(Self::PurelySufficient { w })
    }

    /// Requires `0 < w <= 1`.
    pub fn purely_sustained(w: f64) -> Result<Self> {
        if w.is_nan() || w <= 0.0 || w > 1.0 {
            return Err(Error::Parameter(format!(
                "sustained kernel needs 0 < w <= 1, got {w}"
            )));
        }
        Ok(Self::PurelySustained { w })
    }

    /// Probability that a high period-1 type draws a low period-2 cost.
    pub fn mixing_probability(&self) -> Option<f64> {
        match *self {
            Self::PurelySufficient { w } => Some(w / (1.0 - w)),
            _ => None,
        }
    }

    /// The budget a constructed kernel was built for.
    pub fn budget(&self) -> Option<f64> {
        match *self {
            Self::PurelySufficient { w } | Self::PurelySustained { w } => Some(w),
            _ => None,
        }
    }

    pub fn description(&self) -> String {
        match self {
            Self::Iid => "iid".to_string(),
            Self::Fgm(t) => format!("fgm(theta={})", t.value()),
            Self::PurelySufficient { w } => format!("sufficient(w={w})"),
            Self::PurelySustained { w } => format!("sustained(w={w})"),
            Self::Grid(g) => format!("grid({0}x{0})", g.size()),
        }
    }

    /// `P(B <= t | A = c)`, right-continuous in `t`.
    pub fn conditional_cdf(&self, c: f64, t: f64) -> f64 {
        match self {
            Self::Iid => uniform_cdf(t),
            Self::Fgm(theta) => fgm_cond_cdf(c, t, theta.value()),
            &Self::PurelySufficient { w } => {
                if c <= w {
                    interval_cdf(w, 1.0, t)
                } else {
                    let p = w / (1.0 - w);
                    p * interval_cdf(0.0, w, t) + (1.0 - p) * interval_cdf(w, 1.0, t)
                }
            }
            &Self::PurelySustained { w } => {
                if c <= w {
                    if t >= w - c {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    interval_cdf(w, 1.0, t)
                }
            }
            Self::Grid(g) => g.conditional_cdf(c, t),
        }
    }

    /// `E[(t − B)+ | A = c]` for `t >= 0`.
    pub fn expected_surplus(&self, c: f64, t: f64) -> f64 {
        match self {
            Self::Iid => surplus_uniform(t),
            Self::Fgm(theta) => fgm_surplus(c, t, theta.value()),
            &Self::PurelySufficient { w } => {
                if c <= w {
                    interval_surplus(w, 1.0, t)
                } else {
                    let p = w / (1.0 - w);
                    p * interval_surplus(0.0, w, t) + (1.0 - p) * interval_surplus(w, 1.0, t)
                }
            }
            &Self::PurelySustained { w } => {
                if c <= w {
                    (t - (w - c)).max(0.0)
                } else {
                    interval_surplus(w, 1.0, t)
                }
            }
            Self::Grid(g) => g.expected_surplus(c, t),
        }
    }

    /// `E[B | A = c]`.
    pub fn conditional_mean(&self, c: f64) -> f64 {
        // E[(t − B)+] = t − E[B] once t >= 1.
        1.0 - self.expected_surplus(c, 1.0)
    }

    /// Period-1 costs where `c ↦ P(B_c <= t)` may jump for some `t` in
    /// `thresholds`. Callers integrating over `c` split there.
    pub fn c_breakpoints(&self, thresholds: &[f64]) -> Vec<f64> {
        match self {
            Self::Iid | Self::Fgm(_) => Vec::new(),
            &Self::PurelySufficient { w } => vec![w],
            &Self::PurelySustained { w } => {
                let mut cuts = vec![w];
                cuts.extend(
                    thresholds
                        .iter()
                        .map(|t| w - t)
                        .filter(|c| *c > 0.0 && *c < w),
                );
                cuts
            }
            Self::Grid(g) => (1..g.size()).map(|i| i as f64 / g.size() as f64).collect(),
        }
    }

    /// Draw `B` given `A = c` from an external random stream.
    pub fn sample_conditional<R: Rng + ?Sized>(&self, c: f64, rng: &mut R) -> f64 {
        match self {
            Self::Iid => rng.random::<f64>(),
            Self::Fgm(theta) => fgm_cond_quantile(c, rng.random::<f64>(), theta.value()),
            &Self::PurelySufficient { w } => {
                // 1 − U lies in (0, 1], matching the open lower end of (w, 1].
                let above = |rng: &mut R| w + (1.0 - w) * (1.0 - rng.random::<f64>());
                if c <= w {
                    above(rng)
                } else if rng.random::<f64>() < w / (1.0 - w) {
                    w * rng.random::<f64>()
                } else {
                    above(rng)
                }
            }
            &Self::PurelySustained { w } => {
                if c <= w {
                    w - c
                } else {
                    w + (1.0 - w) * (1.0 - rng.random::<f64>())
                }
            }
            Self::Grid(g) => g.sample(c, rng.random::<f64>()),
        }
    }

    /// Draw `(A, B)`.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let a = rng.random::<f64>();
        let b = self.sample_conditional(a, rng);
        (a, b)
    }

    /// Unconditional `E[B]`; one half for every valid kernel.
    pub fn marginal_mean(&self) -> f64 {
        match self {
            Self::Grid(g) => g.mean(),
            _ => 0.5,
        }
    }
}

/// `sup_t |∫₀¹ P(B <= t | A = c) dc − t|` over 1001 equally spaced `t`.
pub fn marginal_deviation(kernel: &CostKernel) -> f64 {
    (0..=1000usize)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 / 1000.0;
            let mut cuts = vec![0.0, 1.0];
            cuts.extend(
                kernel
                    .c_breakpoints(&[t])
                    .into_iter()
                    .filter(|c| *c > 0.0 && *c < 1.0),
            );
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let mut marginal = 0.0;
            for pair in cuts.windows(2) {
                match adaptive_simpson(|c| kernel.conditional_cdf(c, t), pair[0], pair[1], 1e-12) {
                    Ok(v) => marginal += v,
                    Err(_) => return f64::INFINITY,
                }
            }
            (marginal - t).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Monte Carlo dependence diagnostics for a kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceSummary {
    pub n: usize,
    pub seed: u64,
    pub spearman: f64,
    /// Cutoff used for the conditional statistics: the kernel budget, else 1.
    pub cutoff: f64,
    pub conditional_count: usize,
    pub pearson_conditional_below_w: f64,
    pub covariance_conditional_below_w: f64,
    pub covariance_stderr: f64,
}

/// Spearman correlation of `(A, B)` and Pearson correlation / covariance on
/// the event `A <= w`.
pub fn dependence_summary(kernel: &CostKernel, n: usize, seed: u64) -> Result<DependenceSummary> {
    if n < MIN_DEPENDENCE_SAMPLES {
        return Err(Error::Parameter(format!(
            "dependence summary needs at least {MIN_DEPENDENCE_SAMPLES} samples, got {n}"
        )));
    }
    let streams = KeyedStreams::new(seed);
    let pairs: Vec<(f64, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| kernel.sample_pair(&mut streams.draw(i)))
        .collect();
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let spearman = pearson(&ranks(&a), &ranks(&b));

    let cutoff = kernel.budget().unwrap_or(1.0);
    let (ca, cb): (Vec<f64>, Vec<f64>) = pairs.iter().copied().filter(|p| p.0 <= cutoff).unzip();
    let (cov, cov_se) = covariance_with_stderr(&ca, &cb);
    Ok(DependenceSummary {
        n,
        seed,
        spearman,
        cutoff,
        conditional_count: ca.len(),
        pearson_conditional_below_w: pearson(&ca, &cb),
        covariance_conditional_below_w: cov,
        covariance_stderr: cov_se,
    })
}

/// Average ranks (ties share the mean rank).
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let rank = 0.5 * (start + end - 1) as f64 + 1.0;
        for &i in &idx[start..end] {
            out[i] = rank;
        }
        start = end;
    }
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < 2 {
        return f64::NAN;
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

/// Sample covariance and the standard error of the mean cross-product.
fn covariance_with_stderr(a: &[f64], b: &[f64]) -> (f64, f64) {
    let m = a.len();
    if m < 2 {
        return (f64::NAN, f64::NAN);
    }
    let (ma, mb) = (mean(a), mean(b));
    let products: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let cov = products.iter().sum::<f64>() / (m - 1) as f64;
    let pm = mean(&products);
    let var = products.iter().map(|p| (p - pm) * (p - pm)).sum::<f64>() / (m - 1) as f64;
    (cov, (var / m as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta(t: f64) -> FgmParameter {
        FgmParameter::new(t).unwrap()
    }

    #[test]
    fn fgm_cdf_values() {
        assert_eq!(fgm_cdf(0.5, 0.5, theta(0.0)).unwrap(), 0.25);
        assert!((fgm_cdf(0.5, 0.5, theta(1.0)).unwrap() - 0.3125).abs() < 1e-15);
        for t in [-1.0, 0.3, 1.0] {
            assert!((fgm_cdf(1.0, 0.37, theta(t)).unwrap() - 0.37).abs() < 1e-15);
        }
        assert!(fgm_cdf(1.2, 0.5, theta(0.0)).is_err());
        assert!(FgmParameter::new(1.01).is_err());
    }

    #[test]
    fn fgm_conditional_values() {
        for t in [-1.0, 0.0, 0.7] {
            assert!((fgm_conditional_cdf(0.5, 0.42, theta(t)).unwrap() - 0.42).abs() < 1e-15);
            assert_eq!(fgm_conditional_cdf(0.3, 1.0, theta(t)).unwrap(), 1.0);
        }
        assert!((fgm_conditional_cdf(0.25, 0.5, theta(1.0)).unwrap() - 0.625).abs() < 1e-15);
        assert!((fgm_conditional_quantile(0.5, 0.3, theta(-0.6)).unwrap() - 0.3).abs() < 1e-15);
        assert!((fgm_conditional_quantile(0.25, 0.625, theta(1.0)).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fgm_mean_values() {
        assert_eq!(fgm_conditional_mean(0.8, theta(0.0)).unwrap(), 0.5);
        assert!((fgm_conditional_mean(0.0, theta(-1.0)).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((fgm_conditional_mean(1.0, theta(-1.0)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let k = CostKernel::fgm(-1.0).unwrap();
        assert!((k.conditional_mean(0.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fgm_surplus_matches_integral_of_cdf() {
        for &(c, t, th) in &[(0.1, 0.4_f64, -1.0_f64), (0.8, 0.9, 0.5), (0.3, 1.3, 1.0)] {
            let direct = adaptive_simpson(|b| fgm_cond_cdf(c, b, th), 0.0, t.min(1.0), 1e-13)
                .unwrap()
                + (t - 1.0f64).max(0.0);
            assert!((fgm_surplus(c, t, th) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn fgm_density_nonnegative() {
        for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            for i in 0..=50 {
                for j in 0..=50 {
                    let d = fgm_conditional_density(i as f64 / 50.0, j as f64 / 50.0, theta(t));
                    assert!(d >= -1e-15);
                }
            }
        }
    }

    #[test]
    fn sufficient_kernel() {
        let k = CostKernel::purely_sufficient(0.4).unwrap();
        assert!((k.mixing_probability().unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let k = CostKernel::purely_sufficient(0.25).unwrap();
        assert!((k.mixing_probability().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(marginal_deviation(&k) < 1e-9);
        assert!(matches!(
            CostKernel::purely_sufficient(0.6),
            Err(Error::Infeasible(_))
        ));
        assert!(CostKernel::purely_sufficient(0.0).is_err());
    }

    #[test]
    fn sustained_kernel() {
        let k = CostKernel::purely_sustained(0.9).unwrap();
        let mut rng = KeyedStreams::new(1).draw(0);
        let b = k.sample_conditional(0.3, &mut rng);
        assert!((b - 0.6).abs() < 1e-15);
        assert_eq!(k.conditional_cdf(0.3, b), 1.0);
        assert_eq!(k.conditional_cdf(0.3, 0.5999), 0.0);
        // Uniform on (0.9, 1] for high period-1 types.
        assert!((k.conditional_cdf(0.95, 0.95) - 0.5).abs() < 1e-12);
        assert_eq!(k.conditional_cdf(0.95, 0.9), 0.0);
        for _ in 0..100 {
            let b = k.sample_conditional(0.95, &mut rng);
            assert!(b > 0.9 && b <= 1.0);
        }
        let k1 = CostKernel::purely_sustained(1.0).unwrap();
        assert_eq!(k1.sample_conditional(0.25, &mut rng), 0.75);
        assert!(CostKernel::purely_sustained(1.1).is_err());
        assert!(marginal_deviation(&k) < 1e-6);
    }

    #[test]
    fn analytic_kernels_have_uniform_marginals() {
        assert!(marginal_deviation(&CostKernel::Iid) < 1e-9);
        assert!(marginal_deviation(&CostKernel::fgm(1.0).unwrap()) < 1e-9);
    }

    #[test]
    fn grid_density_fgm_discretisation() {
        let th = 0.8;
        let g =
            GridDensity::from_density_fn(50, |a, b| 1.0 + th * (1.0 - 2.0 * a) * (1.0 - 2.0 * b))
                .unwrap();
        let k = CostKernel::Grid(g);
        assert!(marginal_deviation(&k) < GRID_MARGINAL_TOLERANCE);
        let exact = CostKernel::fgm(th).unwrap();
        for &(c, t) in &[(0.1, 0.3), (0.7, 0.55), (0.5, 1.2)] {
            assert!((k.conditional_cdf(c, t) - exact.conditional_cdf(c, t)).abs() < 0.03);
            assert!((k.expected_surplus(c, t) - exact.expected_surplus(c, t)).abs() < 0.02);
        }
        assert!((k.marginal_mean() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn grid_surplus_is_integral_of_cdf() {
        let g = GridDensity::from_masses(&[
            vec![1.0, 2.0, 0.5],
            vec![0.3, 0.3, 3.0],
            vec![2.0, 1.0, 1.0],
        ])
        .unwrap();
        let k = CostKernel::Grid(g);
        for &c in &[0.1, 0.5, 0.9] {
            for &t in &[0.2, 0.5, 0.95, 1.4] {
                let mut direct = 0.0;
                for w in [0.0_f64, 1.0 / 3.0, 2.0 / 3.0, 1.0].windows(2) {
                    let hi = w[1].min(t);
                    if hi > w[0] {
                        direct +=
                            adaptive_simpson(|b| k.conditional_cdf(c, b), w[0], hi, 1e-13).unwrap();
                    }
                }
                direct += (t - 1.0f64).max(0.0);
                assert!(
                    (k.expected_surplus(c, t) - direct).abs() < 1e-12,
                    "c={c} t={t}"
                );
            }
        }
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(GridDensity::from_masses(&[]).is_err());
        assert!(GridDensity::from_masses(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(GridDensity::from_masses(&[vec![1.0, -2.0], vec![1.0, 1.0]]).is_err());
        assert!(GridDensity::from_masses(&[vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
        // Zero row: no rescaling reaches uniform marginals.
        assert!(matches!(
            GridDensity::from_masses(&[vec![0.0, 0.0], vec![1.0, 1.0]]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[0.3, 0.1, 0.3, 0.2]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn dependence_needs_samples() {
        assert!(matches!(
            dependence_summary(&CostKernel::Iid, 100, 1),
            Err(Error::Parameter(_))
        ));
    }
}
