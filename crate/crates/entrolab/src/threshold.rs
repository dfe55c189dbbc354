//! Monte Carlo experiments around the incompressibility threshold for
//! uniformly random strings: birthday-regime entropy collapse, the
//! counting-argument incompressibility bound, follower-count tails with their
//! Chernoff bound, dominance of the dependent occurrence process by an
//! independent one, and achieved compressed sizes across the density
//! boundary.

use crate::codec::{compress, Mode};
use crate::entropy::{count_contexts, empirical_entropy, zeroth_order_entropy, EntropyError};
use crate::sequence::Sequence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const REPORT_SCHEMA_VERSION: &str = "entrolab-report-v1";

/// Compression is skipped (and marked) at points whose alphabet the coder
/// cannot span.
const MAX_COMPRESSIBLE_N: u64 = 1 << 22;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config invalid: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

/// Substream RNG keyed by (seed, point, trial); trials stay deterministic
/// under any worker count.
fn trial_rng(seed: u64, point: u64, trial: u64) -> ChaCha8Rng {
    fn splitmix(mut x: u64) -> u64 {
        x = x.wrapping_add(0x9e3779b97f4a7c15);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
        x ^ (x >> 31)
    }
    let mut key = [0u8; 32];
    let mut state = splitmix(seed ^ splitmix(point.wrapping_mul(0xa076_1d64_78bd_642f)))
        ^ splitmix(trial.wrapping_mul(0xe703_7ed1_a0b4_28db));
    for chunk in key.chunks_mut(8) {
        state = splitmix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Birthday approximation `1 - exp(-m(m-1)/(2n))` for the probability that
/// m draws from n values collide.
pub fn birthday_collision_prob(n: u64, m: u64) -> f64 {
    assert!(n >= 1);
    if m < 2 {
        return 0.0;
    }
    1.0 - (-((m as f64) * (m as f64 - 1.0) / (2.0 * n as f64))).exp()
}

/// Counting-argument lower bound `max(0, 1 - 2 / n^(eps m / 3))` on the
/// probability a uniformly random string has no description shorter than
/// `(1 - eps/3) m log2 n` bits.
pub fn incompressible_fraction_bound(n: u64, m: u64, eps: f64) -> f64 {
    assert!(n >= 2 && m >= 1 && eps > 0.0);
    (1.0 - 2.0 * (n as f64).powf(-eps * m as f64 / 3.0)).max(0.0)
}

/// Max over occurring contexts of the number of distinct followers; with the
/// flag set, followers that are symbols of the context itself are ignored.
pub fn max_distinct_followers(
    seq: &Sequence,
    order: usize,
    exclude_context_symbols: bool,
) -> Result<u64, ExperimentError> {
    if seq.m() < order + 1 {
        return Err(EntropyError::SequenceTooShort { m: seq.m(), order: order + 1 }.into());
    }
    let table = count_contexts(seq, order)?;
    let mut best = 0u64;
    for (context, histogram) in table.entries() {
        let count = histogram
            .keys()
            .filter(|&&a| !(exclude_context_symbols && context.contains(&a)))
            .count() as u64;
        best = best.max(count);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChernoffBound {
    /// `2^(-q * trials)`, valid when `q >= 6p`.
    Bound(f64),
    /// The simple bound needs `q >= 6p`.
    Inapplicable,
}

pub fn chernoff_tail_bound(p: f64, q: f64, trials: u64) -> ChernoffBound {
    assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q) && p <= q);
    if q < 6.0 * p {
        ChernoffBound::Inapplicable
    } else {
        ChernoffBound::Bound((-(q * trials as f64)).exp2())
    }
}

/// 95% Wilson score interval for `successes / trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0);
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominanceConfig {
    /// The watched `l`-tuple.
    pub pattern: Vec<u32>,
    pub n: u32,
    pub m: usize,
    pub trials: u64,
    pub seed: u64,
    /// Tail thresholds as counts; defaults to `1..=12` when empty.
    #[serde(default)]
    pub thresholds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominanceRow {
    pub threshold: u64,
    pub q: f64,
    pub x_tail: f64,
    pub y_tail: f64,
    pub x_interval: (f64, f64),
    pub y_interval: (f64, f64),
    /// X tail above Y tail beyond interval overlap.
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominanceReport {
    pub schema_version: String,
    pub config: DominanceConfig,
    /// `1 / (n^l - l)`, the conditional occurrence bound.
    pub p: f64,
    pub rows: Vec<DominanceRow>,
    pub violations: u64,
}

/// Compares the tail of the overlap-suppressed occurrence count (window
/// matches the pattern, next symbol outside it) against the tail of an
/// independent Bernoulli sum at the bounding rate.
pub fn dominance_experiment(config: &DominanceConfig) -> Result<DominanceReport, ExperimentError> {
    let order = config.pattern.len();
    if order == 0 || config.m <= order || config.trials == 0 {
        return Err(ExperimentError::InvalidConfig(
            "pattern nonempty, m > pattern length and trials >= 1 required".into(),
        ));
    }
    if config.pattern.iter().any(|&s| s >= config.n) {
        return Err(ExperimentError::InvalidConfig("pattern symbol outside alphabet".into()));
    }
    let indicators = config.m - order;
    let n_pow = (config.n as f64).powi(order as i32);
    let p = if n_pow > order as f64 { 1.0 / (n_pow - order as f64) } else { 1.0 };
    let thresholds: Vec<u64> = if config.thresholds.is_empty() {
        (1..=12.min(indicators as u64)).collect()
    } else {
        config.thresholds.clone()
    };

    let counts: Vec<(u64, u64)> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(config.seed, 0, trial);
            let symbols: Vec<u32> = (0..config.m).map(|_| rng.gen_range(0..config.n)).collect();
            let mut x = 0u64;
            for i in 0..indicators {
                if symbols[i..i + order] == config.pattern[..]
                    && !config.pattern.contains(&symbols[i + order])
                {
                    x += 1;
                }
            }
            let y = (0..indicators).filter(|_| rng.gen_bool(p.min(1.0))).count() as u64;
            (x, y)
        })
        .collect();

    let mut rows = Vec::new();
    let mut violations = 0;
    for &threshold in &thresholds {
        let x_hits = counts.iter().filter(|&&(x, _)| x >= threshold).count() as u64;
        let y_hits = counts.iter().filter(|&&(_, y)| y >= threshold).count() as u64;
        let x_interval = wilson_interval(x_hits, config.trials);
        let y_interval = wilson_interval(y_hits, config.trials);
        let violation = x_interval.0 > y_interval.1;
        violations += u64::from(violation);
        rows.push(DominanceRow {
            threshold,
            q: threshold as f64 / indicators as f64,
            x_tail: x_hits as f64 / config.trials as f64,
            y_tail: y_hits as f64 / config.trials as f64,
            x_interval,
            y_interval,
            violation,
        });
    }
    Ok(DominanceReport {
        schema_version: REPORT_SCHEMA_VERSION.to_string(),
        config: config.clone(),
        p,
        rows,
        violations,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum AlphabetSchedule {
    /// Explicit alphabet sizes, crossed with every m.
    Explicit(Vec<u64>),
    /// `n = ceil(m^(1/(l + 1/c - eps)))`, one point per m; requires
    /// `0 < eps < 1/c`.
    DensityRule,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub n_schedule: AlphabetSchedule,
    pub m_schedule: Vec<u64>,
    pub order: usize,
    pub c: f64,
    pub eps: f64,
    pub trials: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: &str| Err(ExperimentError::InvalidConfig(msg.into()));
        if self.trials < 1 {
            return fail("trials must be >= 1");
        }
        if self.m_schedule.is_empty() {
            return fail("m_schedule must be nonempty");
        }
        if let AlphabetSchedule::Explicit(ns) = &self.n_schedule {
            if ns.is_empty() {
                return fail("n_schedule must be nonempty");
            }
            if ns.iter().any(|&n| n < 2) {
                return fail("alphabet sizes must be >= 2");
            }
        } else if !(self.eps > 0.0 && self.eps < 1.0 / self.c) {
            return fail("density rule requires 0 < eps < 1/c");
        }
        if self.order < 1 {
            return fail("order must be >= 1");
        }
        if !(self.c >= 1.0) || !(self.eps > 0.0) {
            return fail("need c >= 1 and eps > 0");
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<(u64, u64)> {
        match &self.n_schedule {
            AlphabetSchedule::Explicit(ns) => self
                .m_schedule
                .iter()
                .flat_map(|&m| ns.iter().map(move |&n| (n, m)))
                .collect(),
            AlphabetSchedule::DensityRule => {
                let exponent = 1.0 / (self.order as f64 + 1.0 / self.c - self.eps);
                self.m_schedule
                    .iter()
                    .map(|&m| (((m as f64).powf(exponent)).ceil().max(2.0) as u64, m))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PointReport {
    pub n: u64,
    pub m: u64,
    pub trials: u64,
    /// `n^(l + 1/c) / m`; above 1 is the provably incompressible side.
    pub density_ratio: f64,
    pub mean_entropy: f64,
    pub max_entropy: f64,
    pub fraction_zero_entropy: f64,
    /// Fraction of trials with `c H_l(S) < (1 - 2 eps / 3) log2 n`.
    pub fraction_entropy_below_threshold: f64,
    pub mean_max_distinct_followers: f64,
    pub max_max_distinct_followers: u64,
    /// `n^(1/c - 2 eps / 3) - l`, the follower-count threshold.
    pub follower_threshold: f64,
    pub fraction_followers_at_or_above_threshold: f64,
    /// `n^l / 2^(n^(eps/3) - l)`, the union-bound tail probability.
    pub follower_tail_bound: f64,
    /// `1 - exp(-m(m-1)/(2n))`.
    pub birthday_collision_prob: f64,
    /// `max(0, 1 - 2 n^(-eps m / 3))`.
    pub incompressible_fraction_bound: f64,
    /// `(1 - eps/3) m log2 n`, the counting-argument complexity budget.
    pub incompressible_bits_budget: f64,
    pub mean_compressed_bits: Option<f64>,
    pub max_compressed_bits: Option<u64>,
    /// Mean compressed bits over the budget above; crosses 1 near the
    /// threshold.
    pub compressed_to_budget_ratio: Option<f64>,
    pub compression_skipped: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentReport {
    pub schema_version: String,
    pub config: ExperimentConfig,
    /// Formula behind every theoretical-bound column.
    pub bound_formulas: BTreeMap<String, String>,
    pub points: Vec<PointReport>,
}

struct TrialOutcome {
    entropy: f64,
    entropy_below_threshold: bool,
    max_followers: u64,
    compressed_bits: Option<u64>,
}

/// Runs the threshold experiment on a worker pool of the given size
/// (0 = rayon default). Identical (config, seed) gives identical reports for
/// any worker count.
pub fn threshold_experiment(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
    pool.install(|| threshold_experiment_inner(config))
}

fn threshold_experiment_inner(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let order = config.order;
    let (c, eps) = (config.c, config.eps);
    let mut points = Vec::new();
    for (point_index, (n, m)) in config.points().into_iter().enumerate() {
        if m < order as u64 + 1 {
            return Err(ExperimentError::InvalidConfig(format!(
                "point (n={n}, m={m}) shorter than order + 1"
            )));
        }
        let log_n = (n as f64).log2();
        let entropy_threshold = (1.0 - 2.0 * eps / 3.0) * log_n;
        let follower_threshold = (n as f64).powf(1.0 / c - 2.0 * eps / 3.0) - order as f64;
        let compressible = n <= MAX_COMPRESSIBLE_N;
        let outcomes: Vec<TrialOutcome> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(config.seed, point_index as u64, trial);
                let symbols: Vec<u32> =
                    (0..m).map(|_| rng.gen_range(0..u32::try_from(n).unwrap_or(u32::MAX))).collect();
                let seq = Sequence::new(symbols, u32::try_from(n).unwrap_or(u32::MAX))
                    .expect("sampled in range");
                let entropy = empirical_entropy(&seq, order).expect("m > order");
                let max_followers =
                    max_distinct_followers(&seq, order, true).expect("m > order");
                let compressed_bits = compressible.then(|| {
                    compress(&seq, order, c, eps, Mode::Quantized)
                        .expect("feasible point compresses")
                        .total_bits()
                });
                TrialOutcome {
                    entropy,
                    entropy_below_threshold: c * entropy < entropy_threshold,
                    max_followers,
                    compressed_bits,
                }
            })
            .collect();

        let trials_f = config.trials as f64;
        let mean_entropy = outcomes.iter().map(|o| o.entropy).sum::<f64>() / trials_f;
        let max_entropy = outcomes.iter().map(|o| o.entropy).fold(0.0, f64::max);
        let zero = outcomes.iter().filter(|o| o.entropy == 0.0).count() as f64;
        let below = outcomes.iter().filter(|o| o.entropy_below_threshold).count() as f64;
        let mean_followers =
            outcomes.iter().map(|o| o.max_followers as f64).sum::<f64>() / trials_f;
        let max_followers = outcomes.iter().map(|o| o.max_followers).max().unwrap_or(0);
        let followers_over = outcomes
            .iter()
            .filter(|o| o.max_followers as f64 >= follower_threshold)
            .count() as f64;
        let compressed: Vec<u64> = outcomes.iter().filter_map(|o| o.compressed_bits).collect();
        let budget = (1.0 - eps / 3.0) * m as f64 * log_n;
        let mean_compressed = (!compressed.is_empty())
            .then(|| compressed.iter().sum::<u64>() as f64 / compressed.len() as f64);
        points.push(PointReport {
            n,
            m,
            trials: config.trials,
            density_ratio: (n as f64).powf(order as f64 + 1.0 / c) / m as f64,
            mean_entropy,
            max_entropy,
            fraction_zero_entropy: zero / trials_f,
            fraction_entropy_below_threshold: below / trials_f,
            mean_max_distinct_followers: mean_followers,
            max_max_distinct_followers: max_followers,
            follower_threshold,
            fraction_followers_at_or_above_threshold: followers_over / trials_f,
            follower_tail_bound: (n as f64).powi(order as i32)
                / ((n as f64).powf(eps / 3.0) - order as f64).exp2(),
            birthday_collision_prob: birthday_collision_prob(n, m),
            incompressible_fraction_bound: incompressible_fraction_bound(n, m, eps),
            incompressible_bits_budget: budget,
            mean_compressed_bits: mean_compressed,
            max_compressed_bits: compressed.iter().max().copied(),
            compressed_to_budget_ratio: mean_compressed.map(|b| b / budget),
            compression_skipped: !compressible,
        });
    }
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION.to_string(),
        config: config.clone(),
        bound_formulas: bound_formulas(),
        points,
    })
}

fn bound_formulas() -> BTreeMap<String, String> {
    [
        ("birthday_collision_prob", "1 - exp(-m(m-1)/(2n))"),
        ("incompressible_fraction_bound", "max(0, 1 - 2 n^(-eps m / 3))"),
        ("incompressible_bits_budget", "(1 - eps/3) m log2 n"),
        ("follower_threshold", "n^(1/c - 2 eps / 3) - l"),
        ("follower_tail_bound", "n^l / 2^(n^(eps/3) - l)"),
        ("density_ratio", "n^(l + 1/c) / m"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

impl DominanceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "threshold,q,x_tail,y_tail,x_lo,x_hi,y_lo,y_hi,violation,seed\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.threshold,
                r.q,
                r.x_tail,
                r.y_tail,
                r.x_interval.0,
                r.x_interval.1,
                r.y_interval.0,
                r.y_interval.1,
                r.violation,
                self.config.seed,
            ));
        }
        out
    }
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per (n, m) point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,m,trials,density_ratio,mean_entropy,max_entropy,fraction_zero_entropy,\
             fraction_entropy_below_threshold,mean_max_distinct_followers,\
             max_max_distinct_followers,follower_threshold,\
             fraction_followers_at_or_above_threshold,follower_tail_bound,\
             birthday_collision_prob,incompressible_fraction_bound,\
             incompressible_bits_budget,mean_compressed_bits,max_compressed_bits,\
             compressed_to_budget_ratio,compression_skipped,seed\n",
        );
        for p in &self.points {
            let opt_f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
            let opt_u = |v: Option<u64>| v.map_or(String::new(), |x| format!("{x}"));
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                p.n,
                p.m,
                p.trials,
                p.density_ratio,
                p.mean_entropy,
                p.max_entropy,
                p.fraction_zero_entropy,
                p.fraction_entropy_below_threshold,
                p.mean_max_distinct_followers,
                p.max_max_distinct_followers,
                p.follower_threshold,
                p.fraction_followers_at_or_above_threshold,
                p.follower_tail_bound,
                p.birthday_collision_prob,
                p.incompressible_fraction_bound,
                p.incompressible_bits_budget,
                opt_f(p.mean_compressed_bits),
                opt_u(p.max_compressed_bits),
                opt_f(p.compressed_to_budget_ratio),
                p.compression_skipped,
                self.config.seed,
            ));
        }
        out
    }
}

/// Spearman rank correlation; ranks tie-broken by index (inputs here are
/// strictly monotone columns, so ties do not arise in practice).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rank = |vals: &[f64]| -> Vec<f64> {
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap().then(a.cmp(&b)));
        let mut ranks = vec![0.0; vals.len()];
        for (r, &i) in order.iter().enumerate() {
            ranks[i] = r as f64;
        }
        ranks
    };
    let (rx, ry) = (rank(xs), rank(ys));
    let len = xs.len() as f64;
    let mean = (len - 1.0) / 2.0;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        num += (a - mean) * (b - mean);
        dx += (a - mean).powi(2);
        dy += (b - mean).powi(2);
    }
    num / (dx * dy).sqrt()
}

/// Measured quantizer sizes for distributions built to keep roughly
/// `r n^(1/c)` entries above the recording threshold; the scaling evidence
/// behind the storage lower bound.
pub fn quantizer_scaling_table(
    c: f64,
    eps: f64,
    alphabet_sizes: &[u32],
) -> Result<Vec<(u32, u64)>, ExperimentError> {
    use crate::quantize::{quantize_sparse, storage_bits, QuantizerParams};
    let mut rows = Vec::new();
    for &n in alphabet_sizes {
        let params = QuantizerParams::new(c, eps, n)
            .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        // Half the recordable count keeps each probability safely above the
        // recording threshold while still scaling like n^(1/c).
        let heavy = ((params.max_recorded() / 2) as u32).min(n).max(1);
        let probs: Vec<(u32, f64)> =
            (0..heavy).map(|i| (i, 1.0 / f64::from(heavy))).collect();
        let qd = quantize_sparse(&probs, params)
            .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        rows.push((n, storage_bits(&qd)));
    }
    Ok(rows)
}

/// `H_0(S_alpha) <= log2 |{a in S_alpha}|` chain check used by the proof:
/// `H_l(S) <= max_alpha H_0(S_alpha) <= max_alpha log2(distinct followers)`.
pub fn entropy_chain_holds(seq: &Sequence, order: usize) -> Result<bool, ExperimentError> {
    let h = empirical_entropy(seq, order)?;
    let table = count_contexts(seq, order)?;
    let mut max_h0: f64 = 0.0;
    let mut max_log: f64 = 0.0;
    for histogram in table.entries().values() {
        max_h0 = max_h0.max(zeroth_order_entropy(histogram)?);
        max_log = max_log.max((histogram.len() as f64).log2());
    }
    Ok(h <= max_h0 + 1e-9 && max_h0 <= max_log + 1e-9)
}

/// Convenience wrapper used by experiments and tests.
pub fn random_sequence(n: u64, m: u64, rng: &mut ChaCha8Rng) -> Sequence {
    let n32 = u32::try_from(n).expect("alphabet fits u32");
    let symbols: Vec<u32> = (0..m).map(|_| rng.gen_range(0..n32)).collect();
    Sequence::new(symbols, n32).expect("in range")
}
