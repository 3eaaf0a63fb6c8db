//! Average-reward Markov decision process over (battery, channel) states.
//!
//! The state is the battery level plus the channel condition the policy can
//! observe. Channel draws are i.i.d. across slots, which keeps the chain
//! analysis one-dimensional: the battery process alone is Markov once the
//! channel is averaged out, so policy evaluation, chain classification and
//! steady states all run on the (e_max + 1)-level battery chain while
//! rewards and actions stay fully state-dependent.
//!
//! Policy iteration alternates exact evaluation with greedy improvement,
//! restoring the single-recurrent-class property after every improvement by
//! shifting the best recurrent class to the top of the battery and silencing
//! every other level.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, Write};
use std::path::PathBuf;

use crate::models::{
    ArrivalProcess, ChannelStateSet, Csi, ModelError, QuantizedChannels, SystemConfig,
};
use crate::numerics::{self, NumericsError, Tolerance};
use crate::powersplit::{
    build_reward_table, table_cache_key, RewardTable, SplitError, SplitResult, Splitter,
};
use crate::reward::{self, RewardError, RewardKernel};

/// Gains are allowed to dip by this much between iterations before the
/// solver declares the monotonicity of policy iteration broken.
const GAIN_SLACK: f64 = 1e-9;

/// Two recurrent classes whose gains differ by less than this tie on gain.
const CLASS_GAIN_TIE: f64 = 1e-12;

#[derive(Debug)]
pub enum SolverError {
    InfeasibleAction { e: u32, channel: usize, action: u32 },
    MultichainEvaluation { recurrent_classes: usize },
    IterationCap { cap: usize },
    GainDecreased { at_iteration: usize, from: f64, to: f64 },
    Residual { what: &'static str, residual: f64 },
    BadClass { what: String },
    Model(ModelError),
    Reward(RewardError),
    Split(SplitError),
    Numerics(NumericsError),
    TableCache(String),
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InfeasibleAction { e, channel, action } => {
                write!(f, "action {action} exceeds battery {e} in channel state {channel}")
            }
            Self::MultichainEvaluation { recurrent_classes } => {
                write!(f, "evaluation requires a unichain policy, found {recurrent_classes} recurrent classes")
            }
            Self::IterationCap { cap } => write!(f, "policy iteration exceeded {cap} iterations"),
            Self::GainDecreased { at_iteration, from, to } => {
                write!(f, "gain decreased at iteration {at_iteration}: {from} -> {to}")
            }
            Self::Residual { what, residual } => write!(f, "{what} residual too large: {residual:e}"),
            Self::BadClass { what } => write!(f, "bad recurrent class: {what}"),
            Self::Model(e) => write!(f, "{e}"),
            Self::Reward(e) => write!(f, "{e}"),
            Self::Split(e) => write!(f, "{e}"),
            Self::Numerics(e) => write!(f, "{e}"),
            Self::TableCache(e) => write!(f, "table cache: {e}"),
        }
    }
}

impl std::error::Error for SolverError {}

impl From<ModelError> for SolverError {
    fn from(e: ModelError) -> Self {
        Self::Model(e)
    }
}
impl From<RewardError> for SolverError {
    fn from(e: RewardError) -> Self {
        Self::Reward(e)
    }
}
impl From<SplitError> for SolverError {
    fn from(e: SplitError) -> Self {
        Self::Split(e)
    }
}
impl From<NumericsError> for SolverError {
    fn from(e: NumericsError) -> Self {
        Self::Numerics(e)
    }
}

// ---------------------------------------------------------------------------
// States and policies
// ---------------------------------------------------------------------------

/// The solver's state space: battery levels crossed with channel states.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub e_max: u32,
    pub channel: ChannelStateSet,
}

impl StateSpace {
    pub fn new(e_max: u32, channel: ChannelStateSet) -> Self {
        Self { e_max, channel }
    }

    pub fn state_count(&self) -> usize {
        (self.e_max as usize + 1) * self.channel.len()
    }
}

/// Deterministic map from (battery, channel state) to total transmit power.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TotalPowerPolicy {
    e_max: u32,
    n_channel: usize,
    actions: Vec<u32>,
}

impl TotalPowerPolicy {
    pub fn zeros(e_max: u32, n_channel: usize) -> Self {
        Self { e_max, n_channel, actions: vec![0; (e_max as usize + 1) * n_channel] }
    }

    /// Builds a policy from a rule; every action must satisfy a <= e.
    pub fn from_fn(
        e_max: u32,
        n_channel: usize,
        rule: impl Fn(u32, usize) -> u32,
    ) -> Result<Self, SolverError> {
        let mut p = Self::zeros(e_max, n_channel);
        for e in 0..=e_max {
            for c in 0..n_channel {
                let a = rule(e, c);
                if a > e {
                    return Err(SolverError::InfeasibleAction { e, channel: c, action: a });
                }
                p.actions[e as usize * n_channel + c] = a;
            }
        }
        Ok(p)
    }

    pub fn action(&self, e: u32, c: usize) -> u32 {
        self.actions[e as usize * self.n_channel + c]
    }

    pub fn e_max(&self) -> u32 {
        self.e_max
    }

    pub fn n_channel(&self) -> usize {
        self.n_channel
    }
}

/// A total-power policy expanded with its per-state carrier splits.
#[derive(Debug, Clone)]
pub struct Policy {
    pub total: TotalPowerPolicy,
    splits: Vec<SplitResult>,
}

impl Policy {
    /// Resolves each state's split from the reward table, keeping the policy
    /// and its splits consistent by construction.
    pub fn from_total(total: TotalPowerPolicy, table: &RewardTable) -> Self {
        let nc = total.n_channel;
        let mut splits = Vec::with_capacity((total.e_max as usize + 1) * nc);
        for e in 0..=total.e_max {
            for c in 0..nc {
                splits.push(table.split(total.action(e, c), c).clone());
            }
        }
        Self { total, splits }
    }

    pub fn split_for(&self, e: u32, c: usize) -> &SplitResult {
        &self.splits[e as usize * self.total.n_channel + c]
    }
}

// ---------------------------------------------------------------------------
// Transition kernel
// ---------------------------------------------------------------------------

/// Stochastic kernel of a fixed policy: per (battery, channel) state the
/// distribution of the next battery level; the next channel state is an
/// independent draw from `channel_probs`.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    pub e_max: u32,
    pub n_channel: usize,
    channel_probs: Vec<f64>,
    rows: Vec<f64>,
}

/// Builds the kernel from the battery recursion
/// e' = min(e - a + b, e_max) with b drawn from the arrival pmf.
pub fn build_transition_kernel(
    arrivals: &ArrivalProcess,
    channel_probs: &[f64],
    policy: &TotalPowerPolicy,
) -> Result<TransitionKernel, SolverError> {
    let e_max = policy.e_max;
    let nc = policy.n_channel;
    if nc != channel_probs.len() {
        return Err(SolverError::BadClass {
            what: format!("channel distribution has {} entries, policy expects {nc}", channel_probs.len()),
        });
    }
    let levels = e_max as usize + 1;
    let pmf = arrivals.pmf();
    let mut rows = vec![0.0; levels * nc * levels];
    for e in 0..=e_max {
        for c in 0..nc {
            let a = policy.action(e, c);
            if a > e {
                return Err(SolverError::InfeasibleAction { e, channel: c, action: a });
            }
            let base = (e as usize * nc + c) * levels;
            let rest = e - a;
            for (b, &p) in pmf.iter().enumerate() {
                let next = (rest as usize + b).min(e_max as usize);
                rows[base + next] += p;
            }
        }
    }
    Ok(TransitionKernel { e_max, n_channel: nc, channel_probs: channel_probs.to_vec(), rows })
}

impl TransitionKernel {
    pub fn battery_row(&self, e: u32, c: usize) -> &[f64] {
        let levels = self.e_max as usize + 1;
        let base = (e as usize * self.n_channel + c) * levels;
        &self.rows[base..base + levels]
    }

    pub fn channel_probs(&self) -> &[f64] {
        &self.channel_probs
    }

    /// Battery chain with the channel averaged out:
    /// P(e' | e) = sum_c p(c) P(e' | e, c).
    pub fn battery_marginal(&self) -> Vec<f64> {
        let levels = self.e_max as usize + 1;
        let mut out = vec![0.0; levels * levels];
        for e in 0..levels {
            for (c, &pc) in self.channel_probs.iter().enumerate() {
                let row = self.battery_row(e as u32, c);
                for (next, &p) in row.iter().enumerate() {
                    out[e * levels + next] += pc * p;
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Chain structure
// ---------------------------------------------------------------------------

/// Recurrent classes (battery-level sets) and transient levels of a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainClasses {
    pub recurrent: Vec<Vec<u32>>,
    pub transient: Vec<u32>,
}

/// Classifies the battery chain of a kernel into recurrent classes and
/// transient levels. The channel dimension always mixes on its own, so the
/// battery chain carries the whole recurrence structure.
pub fn classify_chains(kernel: &TransitionKernel) -> ChainClasses {
    let marginal = kernel.battery_marginal();
    classify_battery_matrix(&marginal, kernel.e_max)
}

fn classify_battery_matrix(marginal: &[f64], e_max: u32) -> ChainClasses {
    let n = e_max as usize + 1;
    let mut reach = vec![false; n * n];
    for i in 0..n {
        reach[i * n + i] = true;
        for j in 0..n {
            if marginal[i * n + j] > 0.0 {
                reach[i * n + j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i * n + k] {
                for j in 0..n {
                    if reach[k * n + j] {
                        reach[i * n + j] = true;
                    }
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut recurrent = Vec::new();
    let mut transient = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let is_recurrent = (0..n).all(|j| !reach[i * n + j] || reach[j * n + i]);
        if is_recurrent {
            let mut class = Vec::new();
            for j in i..n {
                if reach[i * n + j] && reach[j * n + i] {
                    class.push(j as u32);
                    assigned[j] = true;
                }
            }
            recurrent.push(class);
        } else {
            assigned[i] = true;
            transient.push(i as u32);
        }
    }
    ChainClasses { recurrent, transient }
}

// ---------------------------------------------------------------------------
// Steady states
// ---------------------------------------------------------------------------

/// Stationary distribution over battery levels for a unichain kernel given
/// its recurrent class; transient levels get probability zero.
pub fn steady_state(kernel: &TransitionKernel, class: &[u32]) -> Result<Vec<f64>, SolverError> {
    let marginal = kernel.battery_marginal();
    let levels = kernel.e_max as usize + 1;
    let pi_class = restricted_steady_state(&marginal, levels, class)?;
    let mut out = vec![0.0; levels];
    for (i, &e) in class.iter().enumerate() {
        out[e as usize] = pi_class[i];
    }
    // Sanity on the full chain: stationarity residual.
    let mut residual = 0.0_f64;
    for j in 0..levels {
        let replay: f64 = (0..levels).map(|i| out[i] * marginal[i * levels + j]).sum();
        residual = residual.max((replay - out[j]).abs());
    }
    if residual > 1e-10 {
        return Err(SolverError::Residual { what: "steady state", residual });
    }
    Ok(out)
}

/// Stationary law of the battery chain restricted to a closed class.
fn restricted_steady_state(marginal: &[f64], levels: usize, class: &[u32]) -> Result<Vec<f64>, SolverError> {
    let k = class.len();
    if k == 0 {
        return Err(SolverError::BadClass { what: "empty class".into() });
    }
    // The class must be closed: rows may not leak probability outside it.
    for &e in class {
        let in_class: f64 = class.iter().map(|&j| marginal[e as usize * levels + j as usize]).sum();
        if (in_class - 1.0).abs() > 1e-9 {
            return Err(SolverError::BadClass {
                what: format!("level {e} keeps only {in_class} of its mass inside the class"),
            });
        }
    }
    if k == 1 {
        return Ok(vec![1.0]);
    }
    // Solve pi P = pi with the last equation replaced by normalization.
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for (col, &j) in class.iter().enumerate() {
        if col + 1 == k {
            for row in 0..k {
                a[col * k + row] = 1.0;
            }
            b[col] = 1.0;
        } else {
            for (row, &i) in class.iter().enumerate() {
                a[col * k + row] = marginal[i as usize * levels + j as usize];
            }
            a[col * k + col] -= 1.0;
        }
    }
    let pi = numerics::solve_linear(&a, &b)?;
    Ok(pi)
}

// ---------------------------------------------------------------------------
// Unichain repair
// ---------------------------------------------------------------------------

/// Long-run reward of one recurrent class under a fixed policy.
fn class_gain(
    class: &[u32],
    marginal: &[f64],
    levels: usize,
    policy: &TotalPowerPolicy,
    channel_probs: &[f64],
    table: &RewardTable,
) -> Result<f64, SolverError> {
    let pi = restricted_steady_state(marginal, levels, class)?;
    let mut gain = 0.0;
    for (i, &e) in class.iter().enumerate() {
        let mut r = 0.0;
        for (c, &pc) in channel_probs.iter().enumerate() {
            r += pc * table.value(policy.action(e, c), c);
        }
        gain += pi[i] * r;
    }
    Ok(gain)
}

/// Turns a possibly multichain policy into a unichain one with the same
/// maximum gain.
///
/// The recurrent class with the highest class-conditional gain is shifted
/// upward so its top level sits at e_max, copying each class level's actions
/// to its shifted image; every other level transmits nothing. Harvesting
/// then drifts every level outside the class up into it (the clamp at e_max
/// lands inside the class), so exactly one recurrent class remains and its
/// internal dynamics, hence its gain, are untouched. Ties between classes go
/// to the one with the larger top battery level. Policies that are already
/// unichain are returned unchanged.
pub fn repair_unichain(
    policy: &TotalPowerPolicy,
    kernel: &TransitionKernel,
    table: &RewardTable,
) -> Result<TotalPowerPolicy, SolverError> {
    let classes = classify_chains(kernel);
    if classes.recurrent.len() <= 1 {
        return Ok(policy.clone());
    }
    let marginal = kernel.battery_marginal();
    let levels = kernel.e_max as usize + 1;
    let mut best: Option<(f64, u32, &Vec<u32>)> = None;
    for class in &classes.recurrent {
        let gain = class_gain(class, &marginal, levels, policy, kernel.channel_probs(), table)?;
        let top = *class.last().expect("classes are nonempty");
        let better = match &best {
            None => true,
            Some((g, t, _)) => gain > g + CLASS_GAIN_TIE || (gain >= g - CLASS_GAIN_TIE && top > *t),
        };
        if better {
            best = Some((gain, top, class));
        }
    }
    let (_, top, class) = best.expect("at least one recurrent class");
    let shift = kernel.e_max - top;
    let mut repaired = TotalPowerPolicy::zeros(policy.e_max, policy.n_channel);
    for &e in class {
        for c in 0..policy.n_channel {
            let idx = (e + shift) as usize * policy.n_channel + c;
            repaired.actions[idx] = policy.action(e, c);
        }
    }
    Ok(repaired)
}

// ---------------------------------------------------------------------------
// Policy evaluation
// ---------------------------------------------------------------------------

/// Gain and bias of a unichain policy.
#[derive(Debug, Clone)]
pub struct PolicyEvaluation {
    pub gain: f64,
    /// Relative value per (battery, channel) state, pinned to zero at
    /// (e = 0, channel 0).
    pub bias: Vec<f64>,
    /// Channel-averaged bias per battery level; what improvement backs up.
    pub battery_bias: Vec<f64>,
}

/// Solves the average-reward evaluation equations
/// gain + bias = reward + P bias for a unichain policy.
///
/// Because channel draws are i.i.d., the expected next bias depends only on
/// the battery transition, so the linear solve runs on the channel-averaged
/// battery bias; per-state bias is recovered by one backup afterwards.
pub fn evaluate_policy(
    policy: &TotalPowerPolicy,
    kernel: &TransitionKernel,
    table: &RewardTable,
) -> Result<PolicyEvaluation, SolverError> {
    let levels = kernel.e_max as usize + 1;
    let nc = kernel.n_channel;
    let pc = kernel.channel_probs();
    let marginal = kernel.battery_marginal();
    let mut rbar = vec![0.0; levels];
    for e in 0..levels {
        for c in 0..nc {
            rbar[e] += pc[c] * table.value(policy.action(e as u32, c), c);
        }
    }
    // Unknowns: battery bias per level plus the gain; the extra equation
    // pins the bias at level zero.
    let n = levels + 1;
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for e in 0..levels {
        a[e * n + e] += 1.0;
        for next in 0..levels {
            a[e * n + next] -= marginal[e * levels + next];
        }
        a[e * n + levels] = 1.0;
        b[e] = rbar[e];
    }
    a[levels * n] = 1.0;
    let sol = match numerics::solve_linear(&a, &b) {
        Ok(sol) => sol,
        Err(NumericsError::Singular { .. }) => {
            let classes = classify_chains(kernel);
            return Err(SolverError::MultichainEvaluation {
                recurrent_classes: classes.recurrent.len(),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let gain = sol[levels];
    let hbar = &sol[..levels];
    let mut residual = 0.0_f64;
    for e in 0..levels {
        let backed: f64 = (0..levels).map(|j| marginal[e * levels + j] * hbar[j]).sum();
        residual = residual.max((gain + hbar[e] - rbar[e] - backed).abs());
    }
    if residual > 1e-9 {
        return Err(SolverError::Residual { what: "policy evaluation", residual });
    }
    // Per-state bias, then shift everything so bias(0, 0) = 0.
    let mut bias = vec![0.0; levels * nc];
    for e in 0..levels {
        for c in 0..nc {
            let row = kernel.battery_row(e as u32, c);
            let backed: f64 = row.iter().zip(hbar).map(|(p, h)| p * h).sum();
            bias[e * nc + c] = table.value(policy.action(e as u32, c), c) - gain + backed;
        }
    }
    let delta = bias[0];
    for v in &mut bias {
        *v -= delta;
    }
    let battery_bias: Vec<f64> = hbar.iter().map(|h| h - delta).collect();
    Ok(PolicyEvaluation { gain, bias, battery_bias })
}

// ---------------------------------------------------------------------------
// Policy improvement
// ---------------------------------------------------------------------------

/// Channel-state layout that makes the single-carrier monotonicity usable
/// for pruning: index = g_index * n_h + h_index.
#[derive(Debug, Clone, Copy)]
pub struct MonotoneLayout {
    pub n_g: usize,
    pub n_h: usize,
}

/// Greedy improvement against a battery bias: for every state pick the total
/// power maximizing immediate reward plus expected next bias; ties break
/// toward the smallest power.
///
/// With `layout` set (single-carrier problems), already-chosen actions at
/// the neighboring better/worse channel states bound the scan; the bounds
/// never change the argmax and debug builds assert that.
pub fn improve_policy(
    battery_bias: &[f64],
    table: &RewardTable,
    arrivals: &ArrivalProcess,
    layout: Option<MonotoneLayout>,
) -> TotalPowerPolicy {
    let e_max = table.e_max;
    let levels = e_max as usize + 1;
    let nc = table.n_states;
    debug_assert_eq!(battery_bias.len(), levels);
    let pmf = arrivals.pmf();
    // w[d] = E_b[bias(min(d + b, e_max))]: expected next bias when d quanta
    // stay in the battery. Independent of the channel state.
    let mut w = vec![0.0; levels];
    for (d, slot) in w.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (b, &p) in pmf.iter().enumerate() {
            acc += p * battery_bias[(d + b).min(e_max as usize)];
        }
        *slot = acc;
    }
    let argmax = |e: u32, c: usize, lo: u32, hi: u32| -> u32 {
        let mut best_a = lo;
        let mut best_q = f64::NEG_INFINITY;
        for a in lo..=hi {
            let q = table.value(a, c) + w[(e - a) as usize];
            if q > best_q {
                best_q = q;
                best_a = a;
            }
        }
        best_a
    };
    let mut policy = TotalPowerPolicy::zeros(e_max, nc);
    match layout {
        None => {
            for e in 0..=e_max {
                for c in 0..nc {
                    policy.actions[e as usize * nc + c] = argmax(e, c, 0, e);
                }
            }
        }
        Some(MonotoneLayout { n_g, n_h }) => {
            debug_assert_eq!(n_g * n_h, nc);
            for e in 0..=e_max {
                for h_idx in 0..n_h {
                    for g_idx in 0..n_g {
                        let c = g_idx * n_h + h_idx;
                        // Power grows with the legitimate gain and shrinks
                        // with the eavesdropper gain.
                        let lo = if g_idx > 0 { policy.action(e, c - n_h) } else { 0 };
                        let hi = if h_idx > 0 { policy.action(e, c - 1) } else { e };
                        let a = argmax(e, c, lo.min(e), hi.min(e).max(lo.min(e)));
                        debug_assert_eq!(
                            a,
                            argmax(e, c, 0, e),
                            "monotone pruning changed the argmax at e={e}, c={c}"
                        );
                        policy.actions[e as usize * nc + c] = a;
                    }
                }
            }
        }
    }
    policy
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub splitter: Splitter,
    pub max_iterations: usize,
    pub quad_tol: Tolerance,
    /// Use the monotone bounds while scanning actions (single carrier only).
    pub monotone_pruning: bool,
    /// Directory for reward-table cache files.
    pub table_cache_dir: Option<PathBuf>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            splitter: Splitter::Optimal,
            max_iterations: 100,
            quad_tol: Tolerance { rel: 1e-11, abs: 1e-14, max_iter: 400_000 },
            monotone_pruning: false,
            table_cache_dir: None,
        }
    }
}

/// Converged policy with its long-run behavior and solver diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub policy: Policy,
    /// Long-run secrecy rate in bits per slot, clamped at zero.
    pub gain: f64,
    pub battery_steady_state: Vec<f64>,
    pub iterations: usize,
    pub recurrent_class: Vec<u32>,
    /// Gain after each evaluation, in iteration order.
    pub iteration_gains: Vec<f64>,
    /// Sufficient unichain conditions: some state transmits below the
    /// arrival maximum / above the arrival minimum at every level.
    pub unichain_condition_down: bool,
    pub unichain_condition_up: bool,
    pub channel_states: ChannelStateSet,
    pub csi: Csi,
    pub e_max: u32,
}

/// Long-run energy bookkeeping under the solved policy's steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowBalance {
    /// Expected transmitted quanta per slot.
    pub consumed: f64,
    /// Expected harvested quanta per slot that fit into the battery.
    pub admitted: f64,
}

impl SolveReport {
    /// Steady-state energy flow: consumption must match the post-overflow
    /// harvest exactly, and can never exceed the raw harvest rate.
    pub fn flow_balance(&self, arrivals: &ArrivalProcess) -> FlowBalance {
        let pmf = arrivals.pmf();
        let e_max = self.e_max;
        let mut consumed = 0.0;
        let mut admitted = 0.0;
        for (e, &pi) in self.battery_steady_state.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for (c, state) in self.channel_states.states.iter().enumerate() {
                let a = self.policy.total.action(e as u32, c);
                let w = pi * state.prob;
                consumed += w * a as f64;
                let rest = e as u32 - a;
                for (b, &pb) in pmf.iter().enumerate() {
                    let next = (rest as usize + b).min(e_max as usize);
                    admitted += w * pb * (next as f64 - rest as f64);
                }
            }
        }
        FlowBalance { consumed, admitted }
    }

    /// Writes the report as a structured plain-text document.
    pub fn write_text(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "osp solve report")?;
        writeln!(out, "gain_bits_per_slot = {}", self.gain)?;
        writeln!(out, "iterations = {}", self.iterations)?;
        writeln!(out, "iteration_gains = {:?}", self.iteration_gains)?;
        let class: Vec<String> = self.recurrent_class.iter().map(|e| e.to_string()).collect();
        writeln!(out, "recurrent_class = {{{}}}", class.join(", "))?;
        writeln!(out, "unichain_condition_down = {}", self.unichain_condition_down)?;
        writeln!(out, "unichain_condition_up = {}", self.unichain_condition_up)?;
        writeln!(out)?;
        writeln!(out, "[steady_state]")?;
        for (e, p) in self.battery_steady_state.iter().enumerate() {
            writeln!(out, "e={e} probability={p}")?;
        }
        writeln!(out)?;
        writeln!(out, "[policy]")?;
        for e in 0..=self.e_max {
            for (c, state) in self.channel_states.states.iter().enumerate() {
                let a = self.policy.total.action(e, c);
                let split = self.policy.split_for(e, c);
                let rho: Vec<String> = split.rho.iter().map(|r| format!("{r:.6}")).collect();
                let g: Vec<String> = state.g.iter().map(|v| format!("{v:.6}")).collect();
                let h: Vec<String> = state.h.iter().map(|v| format!("{v:.6}")).collect();
                writeln!(
                    out,
                    "e={e} channel={c} g=({}) h=({}) rho_tot={a} rho=({})",
                    g.join(","),
                    h.join(","),
                    rho.join(",")
                )?;
            }
        }
        Ok(())
    }
}

/// Checks the two sufficient unichain conditions on a policy.
pub fn unichain_sufficient_conditions(
    policy: &TotalPowerPolicy,
    arrivals: &ArrivalProcess,
) -> (bool, bool) {
    let e_max = policy.e_max;
    let nc = policy.n_channel;
    let b_max = arrivals.b_max();
    let b_min = arrivals.b_min();
    let down = (0..e_max).all(|e| (0..nc).any(|c| policy.action(e, c) < b_max));
    let up = (1..=e_max).all(|e| (0..nc).any(|c| policy.action(e, c) > b_min));
    (down, up)
}

/// Single-carrier trend diagnostic: derivative in the total power of the
/// optimally split reward difference between two channel conditions. A sign
/// that holds for every power forces the order of the optimal powers.
pub fn d_function_n1(rho_tot: f64, g_a: f64, h_a: f64, g_b: f64, h_b: f64) -> f64 {
    let step = 1e-6 * (1.0 + rho_tot);
    let lo = (rho_tot - step).max(0.0);
    let hi = rho_tot + step;
    let diff = |rho: f64| {
        reward::rate_pair(g_b, h_b, rho, crate::models::Coding::Variable)
            - reward::rate_pair(g_a, h_a, rho, crate::models::Coding::Variable)
    };
    (diff(hi) - diff(lo)) / (hi - lo)
}

/// Computes the optimal secrecy policy for a configuration.
///
/// Policy iteration starts from the all-silent policy, repairs the chain
/// structure after every improvement, and stops when the policy repeats.
/// The reported gain is clamped at zero; the unclamped optimum is never
/// negative anyway because staying silent is always feasible.
pub fn solve(cfg: &SystemConfig, opts: &SolveOptions) -> Result<SolveReport, SolverError> {
    cfg.validate()?;
    let quantized = QuantizedChannels::for_config(cfg)?;
    let channel = quantized.policy_states(cfg.csi)?;
    let kernel = RewardKernel::for_config(cfg)?.with_tolerance(opts.quad_tol);
    let table = load_or_build_table(cfg, &channel, &kernel, opts)?;
    solve_with_table(cfg, &quantized, channel, table, opts)
}

fn load_or_build_table(
    cfg: &SystemConfig,
    channel: &ChannelStateSet,
    kernel: &RewardKernel,
    opts: &SolveOptions,
) -> Result<RewardTable, SolverError> {
    if let Some(dir) = &opts.table_cache_dir {
        let key = table_cache_key(cfg, opts.splitter);
        let path = dir.join(format!("{key}.tbl"));
        if path.is_file() {
            return RewardTable::read_cache(&path, &key)
                .map_err(|e| SolverError::TableCache(e.to_string()));
        }
        let table = build_reward_table(cfg, channel, kernel, opts.splitter, &opts.quad_tol)?;
        std::fs::create_dir_all(dir).map_err(|e| SolverError::TableCache(e.to_string()))?;
        table.write_cache(&path).map_err(|e| SolverError::TableCache(e.to_string()))?;
        Ok(table)
    } else {
        Ok(build_reward_table(cfg, channel, kernel, opts.splitter, &opts.quad_tol)?)
    }
}

/// Policy iteration against a prebuilt reward table.
pub fn solve_with_table(
    cfg: &SystemConfig,
    quantized: &QuantizedChannels,
    channel: ChannelStateSet,
    table: RewardTable,
    opts: &SolveOptions,
) -> Result<SolveReport, SolverError> {
    let probs = channel.probs();
    let layout = if opts.monotone_pruning && cfg.n_carriers == 1 {
        match cfg.csi {
            Csi::Full => Some(MonotoneLayout {
                n_g: quantized.legit[0].levels(),
                n_h: quantized.eave[0].levels(),
            }),
            Csi::Partial => Some(MonotoneLayout { n_g: quantized.legit[0].levels(), n_h: 1 }),
            Csi::Statistical => None,
        }
    } else {
        None
    };

    let mut policy = TotalPowerPolicy::zeros(cfg.e_max, channel.len());
    let mut iteration_gains = Vec::new();
    let mut seen: HashSet<TotalPowerPolicy> = HashSet::new();
    let mut converged = false;
    let mut final_kernel = None;
    for iter in 0..opts.max_iterations {
        let mut kernel_t = build_transition_kernel(&cfg.arrivals, &probs, &policy)?;
        let repaired = repair_unichain(&policy, &kernel_t, &table)?;
        if repaired != policy {
            policy = repaired;
            kernel_t = build_transition_kernel(&cfg.arrivals, &probs, &policy)?;
        }
        let eval = evaluate_policy(&policy, &kernel_t, &table)?;
        if let Some(&prev) = iteration_gains.last() {
            if eval.gain < prev - GAIN_SLACK {
                return Err(SolverError::GainDecreased {
                    at_iteration: iter,
                    from: prev,
                    to: eval.gain,
                });
            }
        }
        iteration_gains.push(eval.gain);
        let improved = improve_policy(&eval.battery_bias, &table, &cfg.arrivals, layout);
        if improved == policy {
            converged = true;
            final_kernel = Some(kernel_t);
            break;
        }
        // A repeat of an older policy means the remaining candidates tie on
        // gain; the current policy is already optimal.
        if !seen.insert(improved.clone()) {
            converged = true;
            final_kernel = Some(kernel_t);
            break;
        }
        policy = improved;
    }
    if !converged {
        return Err(SolverError::IterationCap { cap: opts.max_iterations });
    }
    let kernel_t = final_kernel.expect("set on convergence");
    let classes = classify_chains(&kernel_t);
    if classes.recurrent.len() != 1 {
        return Err(SolverError::MultichainEvaluation { recurrent_classes: classes.recurrent.len() });
    }
    let recurrent_class = classes.recurrent.into_iter().next().expect("one class");
    let battery_steady_state = steady_state(&kernel_t, &recurrent_class)?;
    let gain = iteration_gains.last().copied().unwrap_or(0.0);
    let (down, up) = unichain_sufficient_conditions(&policy, &cfg.arrivals);
    Ok(SolveReport {
        policy: Policy::from_total(policy, &table),
        gain: gain.max(0.0),
        battery_steady_state,
        iterations: iteration_gains.len(),
        recurrent_class,
        iteration_gains,
        unichain_condition_down: down,
        unichain_condition_up: up,
        channel_states: channel,
        csi: cfg.csi,
        e_max: cfg.e_max,
    })
}
