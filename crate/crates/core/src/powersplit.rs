//! Inner optimization: allocate a total power budget across sub-carriers and
//! materialize the best reward c*(x, channel state) for every integer budget
//! as a [`RewardTable`].
//!
//! Full channel knowledge admits a closed-form water-filling split with a
//! single scalar Lagrange parameter found by bisection. Partial and
//! statistical knowledge use equal-marginal water-filling on numerically
//! differentiated expected rewards, with an exhaustive grid refinement as a
//! fallback when the concavity check fails.
//!
//! # Table cache format
//!
//! `RewardTable::write_cache` emits a little-endian binary file:
//!
//! | offset | size                    | content                                     |
//! |--------|-------------------------|---------------------------------------------|
//! | 0      | 8                       | magic `OSPTBL01`                            |
//! | 8      | 64                      | ASCII hex SHA-256 cache key                 |
//! | 72     | 4                       | u32 rows (e_max + 1)                        |
//! | 76     | 4                       | u32 cols (channel states)                   |
//! | 80     | 4                       | u32 carriers (N)                            |
//! | 84     | 4                       | u32 reserved, zero                          |
//! | 88     | rows\*cols\*8           | values, row-major, f64                      |
//! | ...    | rows\*cols\*(N+3)\*8    | per entry: rho[N], eta, unallocated, reward |
//!
//! `eta` is NaN when the entry has no Lagrange parameter. The cache key is
//! the SHA-256 of the configuration's canonical string plus the splitter tag,
//! so a stale file can never be loaded against the wrong problem.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::models::{ChannelStateSet, Csi, SystemConfig};
use crate::numerics::{self, NumericsError, Tolerance};
use crate::reward::{self, RewardError, RewardKernel};

/// Grid resolution for water-filling on expected rewards.
const WATERFILL_STEPS: usize = 1024;

/// Tolerance on positive second differences before a reward profile is
/// declared non-concave and the grid fallback engages.
const CONCAVITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum SplitError {
    Internal { what: String },
    OptimizationFailed { what: String },
    Dimension { expected: usize, got: usize },
    Numerics(NumericsError),
    Reward(RewardError),
}

impl fmt::Display for SplitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Internal { what } => write!(f, "internal power-split error: {what}"),
            Self::OptimizationFailed { what } => write!(f, "power-split optimization failed: {what}"),
            Self::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Self::Numerics(e) => write!(f, "{e}"),
            Self::Reward(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SplitError {}

impl From<NumericsError> for SplitError {
    fn from(e: NumericsError) -> Self {
        Self::Numerics(e)
    }
}

impl From<RewardError> for SplitError {
    fn from(e: RewardError) -> Self {
        Self::Reward(e)
    }
}

/// One resolved power allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    /// Per-carrier powers, all nonnegative.
    pub rho: Vec<f64>,
    /// Reward achieved by this allocation.
    pub reward: f64,
    /// Lagrange parameter of the closed-form split, when one exists.
    pub eta: Option<f64>,
    /// Budget that could not be allocated because no carrier can use it.
    pub unallocated: f64,
}

impl SplitResult {
    fn zeros(n: usize, unallocated: f64) -> Self {
        Self { rho: vec![0.0; n], reward: 0.0, eta: None, unallocated }
    }

    pub fn total(&self) -> f64 {
        self.rho.iter().sum()
    }
}

/// Uniform baseline: every carrier gets x/N.
pub fn split_uniform(x: f64, n: usize) -> Vec<f64> {
    vec![x / n as f64; n]
}

// ---------------------------------------------------------------------------
// Full channel knowledge
// ---------------------------------------------------------------------------

/// Closed-form per-carrier power at Lagrange level `eta`:
/// rho_r = [sqrt(alpha^2/4 + alpha/eta) - beta/2]^+ with
/// alpha = 1/h - 1/g and beta = 1/h + 1/g. Carriers with g <= h stay silent.
fn rho_at_eta(g: f64, h: f64, eta: f64) -> f64 {
    if g <= h {
        return 0.0;
    }
    let alpha = 1.0 / h - 1.0 / g;
    let beta = 1.0 / h + 1.0 / g;
    let arg = 0.25 * alpha * alpha + alpha / eta;
    (arg.sqrt() - 0.5 * beta).max(0.0)
}

/// Optimal split of total power `x` with both channel vectors known.
///
/// The sum of the closed-form powers is continuous and strictly decreasing in
/// eta, so a bracketing bisection always lands the budget. If every carrier
/// has g <= h the budget is useless: the split is all-zero with the reward
/// pinned at zero and the power flagged as unallocated.
pub fn split_full_csi(x: f64, g: &[f64], h: &[f64], tol: &Tolerance) -> Result<SplitResult, SplitError> {
    let n = g.len();
    if h.len() != n {
        return Err(SplitError::Dimension { expected: n, got: h.len() });
    }
    if !(x >= 0.0) {
        return Err(SplitError::Internal { what: format!("negative budget {x}") });
    }
    if x == 0.0 {
        return Ok(SplitResult::zeros(n, 0.0));
    }
    let active: Vec<usize> = (0..n).filter(|&r| g[r] > h[r]).collect();
    if active.is_empty() {
        return Ok(SplitResult::zeros(n, x));
    }
    if active.len() == 1 {
        let r = active[0];
        let mut rho = vec![0.0; n];
        rho[r] = x;
        let reward = reward::rate_pair(g[r], h[r], x, crate::models::Coding::Variable);
        // The marginal rate at the allocation doubles as the Lagrange level
        // the multi-carrier formula would have produced.
        let eta = g[r] / (1.0 + g[r] * x) - h[r] / (1.0 + h[r] * x);
        return Ok(SplitResult { rho, reward, eta: Some(eta), unallocated: 0.0 });
    }
    let total_at = |eta: f64| -> f64 { active.iter().map(|&r| rho_at_eta(g[r], h[r], eta)).sum() };
    // Every carrier shuts off at eta = max(g - h), so [lo, hi] brackets once
    // lo is small enough for the sum to exceed the budget.
    let hi = active.iter().map(|&r| g[r] - h[r]).fold(0.0_f64, f64::max);
    let mut lo = hi.min(1.0);
    let mut guard = 0;
    while total_at(lo) < x {
        lo *= 0.5;
        guard += 1;
        if guard > 4000 {
            return Err(SplitError::Internal { what: format!("eta bracket failed for budget {x}") });
        }
    }
    let sum_tol = Tolerance { rel: 1e-15, abs: 1e-10 * x.max(1.0), max_iter: tol.max_iter.max(200) };
    let eta = numerics::bisect(|e| total_at(e) - x, lo, hi, &sum_tol)
        .map_err(|e| SplitError::Internal { what: format!("eta bisection failed: {e}") })?;
    let rho: Vec<f64> = (0..n).map(|r| rho_at_eta(g[r], h[r], eta)).collect();
    let total: f64 = rho.iter().sum();
    if (total - x).abs() > 1e-9 * x.max(1.0) {
        return Err(SplitError::Internal { what: format!("allocated {total} instead of {x} at eta {eta}") });
    }
    let reward = reward::c_total(&rho, g, h, crate::models::Coding::Variable)?;
    Ok(SplitResult { rho, reward, eta: Some(eta), unallocated: 0.0 })
}

// ---------------------------------------------------------------------------
// Partial / statistical knowledge
// ---------------------------------------------------------------------------

/// Expected-reward profile of one carrier, tabulated on a power grid.
struct CarrierProfile {
    carrier: usize,
    grid: Vec<f64>,
}

/// Splits a budget across carriers by maximizing a sum of per-carrier
/// expected rewards T_r(rho), given an evaluator for T_r.
fn split_expected<F>(x: f64, n: usize, eval: F) -> Result<SplitResult, SplitError>
where
    F: Fn(usize, f64) -> Result<f64, SplitError>,
{
    if !(x >= 0.0) {
        return Err(SplitError::Internal { what: format!("negative budget {x}") });
    }
    if x == 0.0 {
        return Ok(SplitResult::zeros(n, 0.0));
    }
    if n == 1 {
        let reward = eval(0, x)?;
        return Ok(SplitResult { rho: vec![x], reward, eta: None, unallocated: 0.0 });
    }
    // A carrier whose expected reward already falls at the first sliver of
    // power can only drag the sum down; it stays silent.
    let probe = 1e-5;
    let mut active = Vec::new();
    for r in 0..n {
        if eval(r, probe)? > 0.0 {
            active.push(r);
        }
    }
    if active.is_empty() {
        return Ok(SplitResult::zeros(n, x));
    }
    if active.len() == 1 {
        let r = active[0];
        let mut rho = vec![0.0; n];
        rho[r] = x;
        let reward = eval(r, x)?;
        return Ok(SplitResult { rho, reward, eta: None, unallocated: 0.0 });
    }
    let step = x / WATERFILL_STEPS as f64;
    let mut profiles = Vec::with_capacity(active.len());
    for &r in &active {
        let mut grid = Vec::with_capacity(WATERFILL_STEPS + 1);
        grid.push(0.0);
        for j in 1..=WATERFILL_STEPS {
            grid.push(eval(r, j as f64 * step)?);
        }
        profiles.push(CarrierProfile { carrier: r, grid });
    }
    let concave = profiles
        .iter()
        .all(|p| p.grid.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] <= CONCAVITY_SLACK));
    if !concave {
        return grid_refine(x, n, &active, &eval);
    }
    let chunks = waterfill_greedy(&profiles);
    let mut rho = vec![0.0; n];
    let mut reward = 0.0;
    for (p, &k) in profiles.iter().zip(&chunks) {
        rho[p.carrier] = k as f64 * step;
        reward += p.grid[k];
    }
    Ok(SplitResult { rho, reward, eta: None, unallocated: 0.0 })
}

/// Greedy equal-marginal water-filling: hand the next power quantum to the
/// carrier with the largest reward increment. Optimal for concave profiles.
fn waterfill_greedy(profiles: &[CarrierProfile]) -> Vec<usize> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Slot(f64, Reverse<usize>);
    impl Eq for Slot {}
    impl PartialOrd for Slot {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Slot {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
        }
    }

    let mut chunks = vec![0usize; profiles.len()];
    let mut heap = BinaryHeap::new();
    for (i, p) in profiles.iter().enumerate() {
        heap.push(Slot(p.grid[1] - p.grid[0], Reverse(i)));
    }
    for _ in 0..WATERFILL_STEPS {
        let Slot(_, Reverse(i)) = heap.pop().expect("heap never empties");
        chunks[i] += 1;
        let j = chunks[i];
        if j < WATERFILL_STEPS {
            heap.push(Slot(profiles[i].grid[j + 1] - profiles[i].grid[j], Reverse(i)));
        }
    }
    chunks
}

/// Exhaustive simplex search with refinement rounds, used when a reward
/// profile fails the concavity check.
fn grid_refine<F>(x: f64, n: usize, active: &[usize], eval: &F) -> Result<SplitResult, SplitError>
where
    F: Fn(usize, f64) -> Result<f64, SplitError>,
{
    let k = active.len();
    if k > 4 {
        return Err(SplitError::OptimizationFailed {
            what: format!("non-concave profile with {k} active carriers exceeds the grid fallback"),
        });
    }
    let mut memo: HashMap<(usize, u64), f64> = HashMap::new();
    let mut eval_memo = |r: usize, rho: f64| -> Result<f64, SplitError> {
        if rho == 0.0 {
            return Ok(0.0);
        }
        if let Some(&v) = memo.get(&(r, rho.to_bits())) {
            return Ok(v);
        }
        let v = eval(r, rho)?;
        memo.insert((r, rho.to_bits()), v);
        Ok(v)
    };

    // Round 0 scans the whole simplex at the base resolution; each later
    // round multiplies the resolution by 8 and searches a window around the
    // incumbent composition.
    let mut resolution: u64 = 64;
    let mut best: Vec<u64> = vec![0; k];
    best[0] = resolution;
    let mut best_reward = f64::NEG_INFINITY;
    for round in 0..3 {
        let window = 12u64;
        let center: Vec<u64> = best.iter().map(|&c| c * 8).collect();
        if round > 0 {
            resolution *= 8;
        }
        let mut round_best = best.clone();
        best_reward = f64::NEG_INFINITY;
        let mut stack = vec![(0usize, resolution, Vec::<u64>::with_capacity(k))];
        while let Some((dim, left, partial)) = stack.pop() {
            if dim + 1 == k {
                let mut comp = partial;
                comp.push(left);
                if round > 0 {
                    let ok = comp
                        .iter()
                        .zip(&center)
                        .all(|(&c, &m)| c + window >= m && c <= m + window);
                    if !ok {
                        continue;
                    }
                }
                let mut total = 0.0;
                for (i, &c) in comp.iter().enumerate() {
                    let rho = c as f64 / resolution as f64 * x;
                    total += eval_memo(active[i], rho)?;
                }
                if total > best_reward {
                    best_reward = total;
                    round_best = comp;
                }
                continue;
            }
            let (lo, hi) = if round == 0 {
                (0u64, left)
            } else {
                let m = center[dim];
                (m.saturating_sub(window), (m + window).min(left))
            };
            for c in lo..=hi {
                let mut next = partial.clone();
                next.push(c);
                stack.push((dim + 1, left - c, next));
            }
        }
        best = round_best;
    }
    let mut rho = vec![0.0; n];
    for (i, &c) in best.iter().enumerate() {
        rho[active[i]] = c as f64 / resolution as f64 * x;
    }
    Ok(SplitResult { rho, reward: best_reward, eta: None, unallocated: 0.0 })
}

/// Optimal split of `x` when only the legitimate gains are known.
pub fn split_partial_csi(x: f64, g: &[f64], kernel: &RewardKernel) -> Result<SplitResult, SplitError> {
    split_expected(x, g.len(), |r, rho| Ok(kernel.expected_reward(r, g[r], rho)?))
}

/// Optimal split of `x` with statistical knowledge only.
pub fn split_statistical(x: f64, n: usize, kernel: &RewardKernel) -> Result<SplitResult, SplitError> {
    split_expected(x, n, |r, rho| Ok(kernel.statistical_reward(r, rho)?))
}

// ---------------------------------------------------------------------------
// Reward tables
// ---------------------------------------------------------------------------

/// Which splitting rule a table was built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitter {
    Optimal,
    Uniform,
}

impl fmt::Display for Splitter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Optimal => write!(f, "optimal"),
            Self::Uniform => write!(f, "uniform"),
        }
    }
}

/// Precomputed best reward and split for every total power and channel state.
#[derive(Debug, Clone)]
pub struct RewardTable {
    pub e_max: u32,
    pub n_states: usize,
    pub n_carriers: usize,
    values: Vec<f64>,
    splits: Vec<SplitResult>,
    cache_key: String,
}

impl RewardTable {
    pub fn value(&self, x: u32, state: usize) -> f64 {
        self.values[x as usize * self.n_states + state]
    }

    pub fn split(&self, x: u32, state: usize) -> &SplitResult {
        &self.splits[x as usize * self.n_states + state]
    }

    pub fn cache_key(&self) -> &str {
        &self.cache_key
    }
}

/// Cache key binding a table to its configuration and splitter.
pub fn table_cache_key(cfg: &SystemConfig, splitter: Splitter) -> String {
    let mut hasher = Sha256::new();
    hasher.update(cfg.canonical_string().as_bytes());
    hasher.update(splitter.to_string().as_bytes());
    hasher.update(b"osp-table-v1");
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Builds the step-one table: for every budget x in {0..e_max} and channel
/// state, the splitter's allocation and achieved reward.
///
/// Construction parallelizes over channel states; the finished table is
/// immutable.
pub fn build_reward_table(
    cfg: &SystemConfig,
    states: &ChannelStateSet,
    kernel: &RewardKernel,
    splitter: Splitter,
    tol: &Tolerance,
) -> Result<RewardTable, SplitError> {
    let rows = cfg.e_max as usize + 1;
    let cols = states.len();
    let n = cfg.n_carriers;
    let columns: Vec<Vec<SplitResult>> = states
        .states
        .par_iter()
        .map(|state| -> Result<Vec<SplitResult>, SplitError> {
            let mut col = Vec::with_capacity(rows);
            for x in 0..rows {
                let budget = x as f64;
                let entry = if x == 0 {
                    SplitResult::zeros(n, 0.0)
                } else {
                    match (cfg.csi, splitter) {
                        (Csi::Full, Splitter::Optimal) => split_full_csi(budget, &state.g, &state.h, tol)?,
                        (Csi::Full, Splitter::Uniform) => {
                            let rho = split_uniform(budget, n);
                            let reward = reward::c_total(&rho, &state.g, &state.h, cfg.coding)?;
                            SplitResult { rho, reward, eta: None, unallocated: 0.0 }
                        }
                        (Csi::Partial, Splitter::Optimal) => split_partial_csi(budget, &state.g, kernel)?,
                        (Csi::Partial, Splitter::Uniform) => {
                            let rho = split_uniform(budget, n);
                            let mut reward = 0.0;
                            for (r, &p) in rho.iter().enumerate() {
                                reward += kernel.expected_reward(r, state.g[r], p)?;
                            }
                            SplitResult { rho, reward, eta: None, unallocated: 0.0 }
                        }
                        (Csi::Statistical, Splitter::Optimal) => split_statistical(budget, n, kernel)?,
                        (Csi::Statistical, Splitter::Uniform) => {
                            let rho = split_uniform(budget, n);
                            let mut reward = 0.0;
                            for (r, &p) in rho.iter().enumerate() {
                                reward += kernel.statistical_reward(r, p)?;
                            }
                            SplitResult { rho, reward, eta: None, unallocated: 0.0 }
                        }
                    }
                };
                col.push(entry);
            }
            if cfg.csi == Csi::Full && splitter == Splitter::Optimal {
                debug_assert!(
                    col.windows(2).all(|w| w[1].reward >= w[0].reward - 1e-12),
                    "optimal full-knowledge rewards must be nondecreasing in the budget"
                );
            }
            Ok(col)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut splits = Vec::with_capacity(rows * cols);
    for x in 0..rows {
        for col in columns.iter() {
            splits.push(col[x].clone());
        }
    }
    let values = splits.iter().map(|s| s.reward).collect();
    Ok(RewardTable {
        e_max: cfg.e_max,
        n_states: cols,
        n_carriers: n,
        values,
        splits,
        cache_key: table_cache_key(cfg, splitter),
    })
}

#[cfg(test)]
impl RewardTable {
    /// Hand-built table for solver unit tests: one row of values per budget.
    pub(crate) fn from_rows_for_tests(e_max: u32, n_states: usize, rows: Vec<Vec<f64>>) -> Self {
        assert_eq!(rows.len(), e_max as usize + 1);
        let mut values = Vec::with_capacity(rows.len() * n_states);
        let mut splits = Vec::with_capacity(rows.len() * n_states);
        for (x, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n_states);
            for &v in row {
                values.push(v);
                splits.push(SplitResult { rho: vec![x as f64], reward: v, eta: None, unallocated: 0.0 });
            }
        }
        Self { e_max, n_states, n_carriers: 1, values, splits, cache_key: "test".repeat(16) }
    }

    pub(crate) fn constant_for_tests(e_max: u32, n_states: usize, value: f64) -> Self {
        let rows = vec![vec![value; n_states]; e_max as usize + 1];
        Self::from_rows_for_tests(e_max, n_states, rows)
    }
}

const CACHE_MAGIC: &[u8; 8] = b"OSPTBL01";

#[derive(Debug)]
pub enum TableCacheError {
    Io(io::Error),
    Format { what: String },
    KeyMismatch { expected: String, found: String },
}

impl fmt::Display for TableCacheError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "table cache i/o error: {e}"),
            Self::Format { what } => write!(f, "table cache format error: {what}"),
            Self::KeyMismatch { expected, found } => {
                write!(f, "table cache key mismatch: expected {expected}, found {found}")
            }
        }
    }
}

impl std::error::Error for TableCacheError {}

impl From<io::Error> for TableCacheError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl RewardTable {
    pub fn write_cache(&self, path: &Path) -> Result<(), TableCacheError> {
        let mut buf = Vec::with_capacity(88 + self.values.len() * 8);
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(self.cache_key.as_bytes());
        buf.extend_from_slice(&(self.e_max + 1).to_le_bytes());
        buf.extend_from_slice(&(self.n_states as u32).to_le_bytes());
        buf.extend_from_slice(&(self.n_carriers as u32).to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for s in &self.splits {
            for r in &s.rho {
                buf.extend_from_slice(&r.to_le_bytes());
            }
            buf.extend_from_slice(&s.eta.unwrap_or(f64::NAN).to_le_bytes());
            buf.extend_from_slice(&s.unallocated.to_le_bytes());
            buf.extend_from_slice(&s.reward.to_le_bytes());
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&buf)?;
        Ok(())
    }

    pub fn read_cache(path: &Path, expected_key: &str) -> Result<Self, TableCacheError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 88 || &bytes[..8] != CACHE_MAGIC {
            return Err(TableCacheError::Format { what: "bad magic or truncated header".into() });
        }
        let found = String::from_utf8(bytes[8..72].to_vec())
            .map_err(|_| TableCacheError::Format { what: "non-utf8 cache key".into() })?;
        if found != expected_key {
            return Err(TableCacheError::KeyMismatch { expected: expected_key.into(), found });
        }
        let read_u32 = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let rows = read_u32(72) as usize;
        let cols = read_u32(76) as usize;
        let carriers = read_u32(80) as usize;
        if rows == 0 || cols == 0 {
            return Err(TableCacheError::Format { what: "empty table".into() });
        }
        let want = 88 + rows * cols * 8 + rows * cols * (carriers + 3) * 8;
        if bytes.len() != want {
            return Err(TableCacheError::Format {
                what: format!("expected {want} bytes for {rows}x{cols}x{carriers}, got {}", bytes.len()),
            });
        }
        let read_f64 = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let mut at = 88;
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            values.push(read_f64(at));
            at += 8;
        }
        let mut splits = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let mut rho = Vec::with_capacity(carriers);
            for _ in 0..carriers {
                rho.push(read_f64(at));
                at += 8;
            }
            let eta = read_f64(at);
            at += 8;
            let unallocated = read_f64(at);
            at += 8;
            let reward = read_f64(at);
            at += 8;
            splits.push(SplitResult {
                rho,
                reward,
                eta: if eta.is_nan() { None } else { Some(eta) },
                unallocated,
            });
        }
        Ok(Self {
            e_max: rows as u32 - 1,
            n_states: cols,
            n_carriers: carriers,
            values,
            splits,
            cache_key: expected_key.into(),
        })
    }
}
