//! Monte Carlo validation: slot-by-slot battery and channel trajectories
//! under a fixed policy, with batch-means error bars.
//!
//! The simulator draws from the same quantized joint channel distribution
//! the solver models, so for full channel knowledge the empirical rate is an
//! unbiased estimate of the analytic gain. With partial or statistical
//! knowledge the policy sees only its projection of the drawn state while
//! the realized reward uses the full draw.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::mdp::Policy;
use crate::models::{Coding, Csi, ModelError, QuantizedChannels, SystemConfig};
use crate::reward;
use crate::reward::RewardError;

#[derive(Debug)]
pub enum SimError {
    BadOptions { what: String },
    InfeasibleAction { e: u32, channel: usize, action: u32 },
    Model(ModelError),
    Reward(RewardError),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadOptions { what } => write!(f, "bad simulation options: {what}"),
            Self::InfeasibleAction { e, channel, action } => {
                write!(f, "policy transmits {action} with only {e} stored (channel state {channel})")
            }
            Self::Model(e) => write!(f, "{e}"),
            Self::Reward(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<ModelError> for SimError {
    fn from(e: ModelError) -> Self {
        Self::Model(e)
    }
}

impl From<RewardError> for SimError {
    fn from(e: RewardError) -> Self {
        Self::Reward(e)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub slots: u64,
    pub seed: u64,
    /// Battery level at slot zero. The long-run rate of a unichain policy is
    /// start-independent; nonzero starts matter for multichain policies.
    pub initial_battery: u32,
    /// Number of batches for the batch-means standard error.
    pub batch_count: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { slots: 1_000_000, seed: 0, initial_battery: 0, batch_count: 100 }
    }
}

/// Outcome of one simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Empirical secrecy rate in bits per slot.
    pub rate: f64,
    /// Batch-means standard error of the rate.
    pub std_err: f64,
    /// Occupancy of each battery level at slot starts; sums to one.
    pub battery_hist: Vec<f64>,
    /// Slots actually simulated (rounded down to a multiple of the batches).
    pub slots: u64,
    pub seed: u64,
}

/// Total variation distance between two distributions on the same support.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(probs.len());
    for &p in probs {
        acc += p;
        out.push(acc);
    }
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

fn draw(cum: &[f64], u: f64) -> usize {
    cum.partition_point(|&c| c < u).min(cum.len() - 1)
}

/// Simulates `opts.slots` slots of the battery recursion under `policy`,
/// accumulating the per-slot secrecy reward of the policy's splits.
///
/// Identical seeds give bit-identical results. Energy causality is asserted
/// exactly along the trajectory: total consumption never exceeds the initial
/// charge plus everything harvested so far.
pub fn simulate(cfg: &SystemConfig, policy: &Policy, opts: &SimOptions) -> Result<SimResult, SimError> {
    cfg.validate()?;
    if opts.slots == 0 || opts.batch_count == 0 {
        return Err(SimError::BadOptions { what: "slots and batch_count must be positive".into() });
    }
    if opts.initial_battery > cfg.e_max {
        return Err(SimError::BadOptions {
            what: format!("initial battery {} exceeds capacity {}", opts.initial_battery, cfg.e_max),
        });
    }
    let quantized = QuantizedChannels::for_config(cfg)?;
    let full = quantized.full_joint()?;
    let policy_of_full: Vec<usize> =
        (0..full.len()).map(|i| quantized.policy_index(cfg.csi, i)).collect();
    let channel_cum = cumulative(&full.probs());
    let arrival_cum = cumulative(cfg.arrivals.pmf());
    // Statistical knowledge cannot match the code rate to the unknown
    // legitimate channel.
    let coding = match cfg.csi {
        Csi::Statistical => Coding::Constant,
        _ => cfg.coding,
    };

    let batch_count = opts.batch_count.min(opts.slots);
    let batch_size = opts.slots / batch_count;
    let slots = batch_size * batch_count;

    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    let mut battery = opts.initial_battery;
    let mut harvested: u64 = 0;
    let mut consumed: u64 = 0;
    let mut hist = vec![0u64; cfg.e_max as usize + 1];
    let mut total = 0.0;
    let mut batch_sum = 0.0;
    let mut batch_means = Vec::with_capacity(batch_count as usize);
    for slot in 0..slots {
        hist[battery as usize] += 1;
        let full_idx = draw(&channel_cum, rng.gen::<f64>());
        let pol_idx = policy_of_full[full_idx];
        let action = policy.total.action(battery, pol_idx);
        if action > battery {
            return Err(SimError::InfeasibleAction { e: battery, channel: pol_idx, action });
        }
        let state = &full.states[full_idx];
        let split = policy.split_for(battery, pol_idx);
        let slot_reward = if action == 0 {
            0.0
        } else {
            reward::c_total(&split.rho, &state.g, &state.h, coding)?
        };
        total += slot_reward;
        batch_sum += slot_reward;
        if (slot + 1) % batch_size == 0 {
            batch_means.push(batch_sum / batch_size as f64);
            batch_sum = 0.0;
        }
        let arrival = draw(&arrival_cum, rng.gen::<f64>()) as u32;
        consumed += u64::from(action);
        harvested += u64::from(arrival);
        assert!(
            consumed <= u64::from(opts.initial_battery) + harvested,
            "energy causality violated: consumed {consumed} of {harvested} harvested"
        );
        battery = (battery - action + arrival).min(cfg.e_max);
    }
    let rate = total / slots as f64;
    let std_err = if batch_means.len() > 1 {
        let mean = batch_means.iter().sum::<f64>() / batch_means.len() as f64;
        let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>()
            / (batch_means.len() - 1) as f64;
        (var / batch_means.len() as f64).sqrt()
    } else {
        0.0
    };
    let battery_hist = hist.into_iter().map(|c| c as f64 / slots as f64).collect();
    Ok(SimResult { rate, std_err, battery_hist, slots, seed: opts.seed })
}
