//! Stochastic models: fading distributions, equally-likely channel
//! quantization with conditional-mean centroids, energy arrival processes and
//! the overall system configuration.
//!
//! Everything here is immutable after construction; constructors validate all
//! invariants so downstream code can rely on them.

use std::fmt;

use sha2::{Digest, Sha256};

use crate::numerics::{self, NumericsError, Tolerance};

/// Default cap on enumerated joint channel states.
pub const JOINT_STATE_CAP: usize = 10_000_000;

/// Mass kept when truncating an unbounded gamma tail.
const TAIL_MASS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    InvalidParameter { what: String },
    InfeasibleMean { target: f64, b_max: u32 },
    SizeExceeded { size: usize, cap: usize },
    UnsupportedModel { op: &'static str, what: String },
    Numerics(NumericsError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidParameter { what } => write!(f, "invalid parameter: {what}"),
            Self::InfeasibleMean { target, b_max } => {
                write!(f, "arrival mean {target} not in (0, {b_max})")
            }
            Self::SizeExceeded { size, cap } => {
                write!(f, "joint state space of size {size} exceeds cap {cap}")
            }
            Self::UnsupportedModel { op, what } => write!(f, "{op}: unsupported model: {what}"),
            Self::Numerics(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ModelError {}

impl From<NumericsError> for ModelError {
    fn from(e: NumericsError) -> Self {
        Self::Numerics(e)
    }
}

// ---------------------------------------------------------------------------
// Fading models
// ---------------------------------------------------------------------------

/// Per-carrier fading model for a channel power gain.
///
/// The gamma variant is the power gain of Nakagami-m amplitude fading: shape
/// `m >= 1` and mean gain `mean > 0` (m = 1 is Rayleigh). The discrete
/// variant lists an explicit gain support with probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum FadingModel {
    Gamma { shape: f64, mean: f64 },
    Discrete { gains: Vec<f64>, probs: Vec<f64> },
}

impl FadingModel {
    pub fn gamma(shape: f64, mean: f64) -> Result<Self, ModelError> {
        if !(shape >= 1.0) || !shape.is_finite() {
            return Err(ModelError::InvalidParameter { what: format!("gamma shape {shape} < 1") });
        }
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(ModelError::InvalidParameter { what: format!("gamma mean {mean} <= 0") });
        }
        Ok(Self::Gamma { shape, mean })
    }

    /// Builds a discrete model; zero-probability support points are dropped.
    pub fn discrete(gains: Vec<f64>, probs: Vec<f64>) -> Result<Self, ModelError> {
        if gains.len() != probs.len() || gains.is_empty() {
            return Err(ModelError::InvalidParameter {
                what: format!("discrete support/probs length mismatch ({} vs {})", gains.len(), probs.len()),
            });
        }
        let mut kept_g = Vec::new();
        let mut kept_p = Vec::new();
        for (&g, &p) in gains.iter().zip(&probs) {
            if !(g >= 0.0) || !g.is_finite() {
                return Err(ModelError::InvalidParameter { what: format!("negative or non-finite gain {g}") });
            }
            if !(p >= 0.0) || !p.is_finite() {
                return Err(ModelError::InvalidParameter { what: format!("bad probability {p}") });
            }
            if p > 0.0 {
                kept_g.push(g);
                kept_p.push(p);
            }
        }
        if kept_g.is_empty() {
            return Err(ModelError::InvalidParameter { what: "discrete model has no positive-probability points".into() });
        }
        for w in kept_g.windows(2) {
            if w[1] <= w[0] {
                return Err(ModelError::InvalidParameter {
                    what: format!("discrete gains must be strictly ascending, got {} then {}", w[0], w[1]),
                });
            }
        }
        let total: f64 = kept_p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ModelError::InvalidParameter { what: format!("discrete probs sum to {total}, not 1") });
        }
        Ok(Self::Discrete { gains: kept_g, probs: kept_p })
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Gamma { mean, .. } => *mean,
            Self::Discrete { gains, probs } => gains.iter().zip(probs).map(|(g, p)| g * p).sum(),
        }
    }

    /// Density of the gamma variant.
    pub fn pdf(&self, x: f64) -> Result<f64, ModelError> {
        match self {
            Self::Gamma { shape, mean } => {
                if x < 0.0 {
                    return Ok(0.0);
                }
                let rate = shape / mean;
                if x == 0.0 {
                    // Finite only in the Rayleigh case.
                    return Ok(if *shape == 1.0 { rate } else { 0.0 });
                }
                let log_pdf =
                    shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - numerics::ln_gamma(*shape);
                Ok(log_pdf.exp())
            }
            Self::Discrete { .. } => Err(ModelError::UnsupportedModel {
                op: "pdf",
                what: "discrete models have no density".into(),
            }),
        }
    }

    /// Distribution function of the gamma variant.
    pub fn cdf(&self, x: f64) -> Result<f64, ModelError> {
        match self {
            Self::Gamma { shape, mean } => {
                if x <= 0.0 {
                    return Ok(0.0);
                }
                Ok(numerics::gamma_lower_regularized(*shape, shape / mean * x)?)
            }
            Self::Discrete { .. } => Err(ModelError::UnsupportedModel {
                op: "cdf",
                what: "use the discrete probs directly".into(),
            }),
        }
    }

    /// Quantile of the gamma variant, found by bisection on the CDF.
    pub fn quantile(&self, p: f64) -> Result<f64, ModelError> {
        match self {
            Self::Gamma { mean, .. } => {
                if !(0.0..1.0).contains(&p) {
                    return Err(ModelError::InvalidParameter { what: format!("quantile level {p}") });
                }
                if p == 0.0 {
                    return Ok(0.0);
                }
                let mut hi = mean * 2.0;
                while self.cdf(hi)? < p {
                    hi *= 2.0;
                    if hi > 1e300 {
                        return Err(ModelError::InvalidParameter { what: format!("quantile bracket blew up at p={p}") });
                    }
                }
                let tol = Tolerance { rel: 1e-12, abs: 1e-14, max_iter: 400 };
                let cdf = |x: f64| self.cdf(x).unwrap_or(f64::NAN) - p;
                Ok(numerics::bisect(cdf, 0.0, hi, &tol)?)
            }
            Self::Discrete { .. } => Err(ModelError::UnsupportedModel {
                op: "quantile",
                what: "discrete models are already finite".into(),
            }),
        }
    }

    /// Upper integration limit holding all but `TAIL_MASS` of the mass.
    pub fn tail_cutoff(&self) -> Result<f64, ModelError> {
        self.quantile(1.0 - TAIL_MASS)
    }
}

// ---------------------------------------------------------------------------
// Channel quantization
// ---------------------------------------------------------------------------

/// Discretized gain support of one fading channel.
///
/// Gamma models are cut into `n` equally likely intervals and represented by
/// the conditional mean of each interval; discrete models pass through with
/// their native support and probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelQuantization {
    /// n+1 ascending boundaries; the last one is +inf for gamma models.
    pub boundaries: Vec<f64>,
    /// n representative gains, one strictly inside each interval.
    pub centroids: Vec<f64>,
    /// n interval probabilities.
    pub probs: Vec<f64>,
}

impl ChannelQuantization {
    pub fn levels(&self) -> usize {
        self.centroids.len()
    }
}

/// Quantizes a fading model into `n` levels.
pub fn quantize(model: &FadingModel, n: usize) -> Result<ChannelQuantization, ModelError> {
    if n == 0 {
        return Err(ModelError::InvalidParameter { what: "quantization levels must be >= 1".into() });
    }
    match model {
        FadingModel::Discrete { gains, probs } => {
            // Pass through: synthesize boundaries at midpoints so each gain
            // sits strictly inside its interval.
            let k = gains.len();
            let mut boundaries = Vec::with_capacity(k + 1);
            let pad = if k > 1 { 0.5 * (gains[1] - gains[0]) } else { 0.5 * gains[0].max(1.0) };
            boundaries.push(gains[0] - pad);
            for w in gains.windows(2) {
                boundaries.push(0.5 * (w[0] + w[1]));
            }
            let last_pad = if k > 1 { 0.5 * (gains[k - 1] - gains[k - 2]) } else { pad };
            boundaries.push(gains[k - 1] + last_pad);
            Ok(ChannelQuantization { boundaries, centroids: gains.clone(), probs: probs.clone() })
        }
        FadingModel::Gamma { .. } => {
            let tol = Tolerance { rel: 1e-11, abs: 1e-16, max_iter: 400_000 };
            let cutoff = model.tail_cutoff()?;
            let mut boundaries = Vec::with_capacity(n + 1);
            boundaries.push(0.0);
            for i in 1..n {
                boundaries.push(model.quantile(i as f64 / n as f64)?);
            }
            boundaries.push(f64::INFINITY);
            let mut centroids = Vec::with_capacity(n);
            for i in 0..n {
                let lo = boundaries[i];
                let hi = if boundaries[i + 1].is_finite() { boundaries[i + 1] } else { cutoff };
                let moment = numerics::integrate(|x| x * model.pdf(x).unwrap_or(0.0), lo, hi, &tol)?;
                centroids.push(moment * n as f64);
            }
            Ok(ChannelQuantization { boundaries, centroids, probs: vec![1.0 / n as f64; n] })
        }
    }
}

// ---------------------------------------------------------------------------
// Energy arrivals
// ---------------------------------------------------------------------------

/// Shape of the energy arrival process.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalKind {
    Deterministic { amount: u32 },
    Bernoulli { p: f64, amount: u32 },
    TruncatedGeometric { q: f64, b_max: u32 },
}

/// Per-slot harvested energy quanta.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalProcess {
    kind: ArrivalKind,
    /// pmf over {0, ..., b_max}.
    pmf: Vec<f64>,
}

impl ArrivalProcess {
    pub fn deterministic(amount: u32) -> Self {
        let mut pmf = vec![0.0; amount as usize + 1];
        pmf[amount as usize] = 1.0;
        Self { kind: ArrivalKind::Deterministic { amount }, pmf }
    }

    pub fn bernoulli(p: f64, amount: u32) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::InvalidParameter { what: format!("bernoulli p {p}") });
        }
        if amount == 0 {
            return Err(ModelError::InvalidParameter { what: "bernoulli amount must be >= 1".into() });
        }
        let mut pmf = vec![0.0; amount as usize + 1];
        pmf[0] = 1.0 - p;
        pmf[amount as usize] = p;
        Ok(Self { kind: ArrivalKind::Bernoulli { p, amount }, pmf })
    }

    /// Truncated geometric arrivals pmf(b) ∝ q^b on {0, ..., b_max}, with q
    /// calibrated by bisection so the mean hits `target_mean`.
    pub fn truncated_geometric(b_max: u32, target_mean: f64) -> Result<Self, ModelError> {
        if !(target_mean > 0.0) || !(target_mean < b_max as f64) {
            return Err(ModelError::InfeasibleMean { target: target_mean, b_max });
        }
        let mean_of = |q: f64| -> f64 {
            let mut norm = 0.0;
            let mut first = 0.0;
            let mut w = 1.0;
            for b in 0..=b_max {
                norm += w;
                first += b as f64 * w;
                w *= q;
            }
            first / norm
        };
        // The truncated mean is strictly increasing in q, from 0 toward b_max.
        let mut hi = 1.0;
        while mean_of(hi) < target_mean {
            hi *= 2.0;
            if hi > 1e40 {
                return Err(ModelError::InvalidParameter { what: format!("geometric calibration bracket blew up for mean {target_mean}") });
            }
        }
        let tol = Tolerance { rel: 1e-14, abs: 1e-12, max_iter: 400 };
        let q = numerics::bisect(|q| mean_of(q) - target_mean, 1e-14, hi, &tol)?;
        let mut pmf = Vec::with_capacity(b_max as usize + 1);
        let mut w = 1.0;
        for _ in 0..=b_max {
            pmf.push(w);
            w *= q;
        }
        let norm: f64 = pmf.iter().sum();
        for v in &mut pmf {
            *v /= norm;
        }
        Ok(Self { kind: ArrivalKind::TruncatedGeometric { q, b_max }, pmf })
    }

    pub fn kind(&self) -> &ArrivalKind {
        &self.kind
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(b, p)| b as f64 * p).sum()
    }

    /// Largest support point with positive mass.
    pub fn b_max(&self) -> u32 {
        self.pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u32
    }

    /// Smallest support point with positive mass.
    pub fn b_min(&self) -> u32 {
        self.pmf.iter().position(|&p| p > 0.0).unwrap_or(0) as u32
    }

    /// Lumps all mass above `cap` onto `cap`.
    ///
    /// Arrivals beyond the battery capacity act exactly like an arrival of
    /// the capacity itself, so this transformation leaves the battery
    /// dynamics untouched while keeping the support inside {0, ..., cap}.
    pub fn lump_to_capacity(&self, cap: u32) -> Self {
        if self.b_max() <= cap {
            return self.clone();
        }
        let mut pmf = self.pmf[..=cap as usize].to_vec();
        let tail: f64 = self.pmf[cap as usize + 1..].iter().sum();
        pmf[cap as usize] += tail;
        Self { kind: self.kind.clone(), pmf }
    }
}

// ---------------------------------------------------------------------------
// System configuration
// ---------------------------------------------------------------------------

/// Wiretap code rate adaptation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coding {
    Constant,
    Variable,
}

impl fmt::Display for Coding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant => write!(f, "constant"),
            Self::Variable => write!(f, "variable"),
        }
    }
}

/// Channel knowledge available at the transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Csi {
    Full,
    Partial,
    Statistical,
}

impl fmt::Display for Csi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Full => write!(f, "full"),
            Self::Partial => write!(f, "partial"),
            Self::Statistical => write!(f, "statistical"),
        }
    }
}

/// Full description of one solvable problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Battery capacity in energy quanta.
    pub e_max: u32,
    pub arrivals: ArrivalProcess,
    /// Number of parallel sub-carriers.
    pub n_carriers: usize,
    /// Legitimate-link fading model per carrier.
    pub legit: Vec<FadingModel>,
    /// Eavesdropper-link fading model per carrier.
    pub eave: Vec<FadingModel>,
    /// Quantization levels per continuous channel.
    pub quant_levels: usize,
    pub coding: Coding,
    pub csi: Csi,
    /// Informational only; all rates are per slot.
    pub slot_duration: f64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.e_max < 1 {
            return Err(ModelError::InvalidParameter { what: "e_max must be >= 1".into() });
        }
        if self.n_carriers < 1 {
            return Err(ModelError::InvalidParameter { what: "carrier count must be >= 1".into() });
        }
        if self.quant_levels < 1 {
            return Err(ModelError::InvalidParameter { what: "quantization levels must be >= 1".into() });
        }
        if self.legit.len() != self.n_carriers || self.eave.len() != self.n_carriers {
            return Err(ModelError::InvalidParameter {
                what: format!(
                    "expected {} per-carrier models, got {} legitimate / {} eavesdropper",
                    self.n_carriers,
                    self.legit.len(),
                    self.eave.len()
                ),
            });
        }
        if self.arrivals.b_max() > self.e_max {
            return Err(ModelError::InvalidParameter {
                what: format!("arrival maximum {} exceeds battery capacity {}", self.arrivals.b_max(), self.e_max),
            });
        }
        if self.arrivals.mean() <= 0.0 {
            return Err(ModelError::InvalidParameter { what: "arrival process must harvest a positive mean".into() });
        }
        if !(self.slot_duration > 0.0) {
            return Err(ModelError::InvalidParameter { what: "slot duration must be positive".into() });
        }
        if matches!(self.csi, Csi::Partial | Csi::Statistical) {
            for m in &self.eave {
                if !matches!(m, FadingModel::Gamma { .. }) {
                    return Err(ModelError::InvalidParameter {
                        what: "partial/statistical channel knowledge needs gamma eavesdropper models".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Stable textual form used for hashing and cache keys.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("e_max={};", self.e_max));
        s.push_str(&format!("arrivals={:?};", self.arrivals.kind));
        s.push_str(&format!("pmf={:?};", self.arrivals.pmf));
        s.push_str(&format!("N={};", self.n_carriers));
        for (i, m) in self.legit.iter().enumerate() {
            s.push_str(&format!("legit[{i}]={m:?};"));
        }
        for (i, m) in self.eave.iter().enumerate() {
            s.push_str(&format!("eave[{i}]={m:?};"));
        }
        s.push_str(&format!(
            "n={};coding={};csi={};slot={:?};",
            self.quant_levels, self.coding, self.csi, self.slot_duration
        ));
        s
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_string().as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Joint channel states
// ---------------------------------------------------------------------------

/// One joint channel condition with its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    /// Legitimate gains, one per carrier (empty when unknown to the policy).
    pub g: Vec<f64>,
    /// Eavesdropper gains (empty when unknown to the policy).
    pub h: Vec<f64>,
    pub prob: f64,
}

/// Indexed list of joint channel conditions the policy distinguishes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStateSet {
    pub states: Vec<ChannelState>,
}

impl ChannelStateSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.prob).collect()
    }
}

/// Cartesian product of per-carrier quantizations, first factor most
/// significant in the resulting index.
fn cartesian(quants: &[ChannelQuantization], cap: usize) -> Result<Vec<(Vec<f64>, f64)>, ModelError> {
    let mut size: usize = 1;
    for q in quants {
        size = size
            .checked_mul(q.levels())
            .filter(|&s| s <= cap)
            .ok_or(ModelError::SizeExceeded { size: usize::MAX, cap })?;
    }
    if size > cap {
        return Err(ModelError::SizeExceeded { size, cap });
    }
    let mut out = Vec::with_capacity(size);
    let mut idx = vec![0usize; quants.len()];
    loop {
        let mut gains = Vec::with_capacity(quants.len());
        let mut prob = 1.0;
        for (q, &i) in quants.iter().zip(&idx) {
            gains.push(q.centroids[i]);
            prob *= q.probs[i];
        }
        out.push((gains, prob));
        // Mixed-radix increment, last digit fastest.
        let mut d = quants.len();
        loop {
            if d == 0 {
                return Ok(out);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < quants[d].levels() {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Enumerates the joint states of 2N quantized channels (N legitimate
/// followed by N eavesdropper channels). Components are independent, so
/// probabilities multiply; every listed state has positive probability.
pub fn enumerate_joint_states(quants: &[ChannelQuantization]) -> Result<Vec<ChannelState>, ModelError> {
    enumerate_joint_states_with_cap(quants, JOINT_STATE_CAP)
}

pub fn enumerate_joint_states_with_cap(
    quants: &[ChannelQuantization],
    cap: usize,
) -> Result<Vec<ChannelState>, ModelError> {
    if quants.len() % 2 != 0 || quants.is_empty() {
        return Err(ModelError::InvalidParameter {
            what: format!("expected 2N quantizations, got {}", quants.len()),
        });
    }
    let n = quants.len() / 2;
    let raw = cartesian(quants, cap)?;
    Ok(raw
        .into_iter()
        .map(|(gains, prob)| {
            let h = gains[n..].to_vec();
            let mut g = gains;
            g.truncate(n);
            ChannelState { g, h, prob }
        })
        .collect())
}

/// Quantized channels of a configuration, for both links.
#[derive(Debug, Clone)]
pub struct QuantizedChannels {
    pub legit: Vec<ChannelQuantization>,
    pub eave: Vec<ChannelQuantization>,
}

impl QuantizedChannels {
    pub fn for_config(cfg: &SystemConfig) -> Result<Self, ModelError> {
        let legit = cfg.legit.iter().map(|m| quantize(m, cfg.quant_levels)).collect::<Result<Vec<_>, _>>()?;
        let eave = cfg.eave.iter().map(|m| quantize(m, cfg.quant_levels)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { legit, eave })
    }

    /// Number of joint eavesdropper-side states.
    pub fn eave_state_count(&self) -> usize {
        self.eave.iter().map(ChannelQuantization::levels).product()
    }

    /// Full joint (g, h) enumeration; this is what nature draws each slot.
    pub fn full_joint(&self) -> Result<ChannelStateSet, ModelError> {
        let mut quants = self.legit.clone();
        quants.extend(self.eave.iter().cloned());
        Ok(ChannelStateSet { states: enumerate_joint_states(&quants)? })
    }

    /// Channel states distinguishable by the policy under the given CSI mode.
    pub fn policy_states(&self, csi: Csi) -> Result<ChannelStateSet, ModelError> {
        match csi {
            Csi::Full => self.full_joint(),
            Csi::Partial => {
                let raw = cartesian(&self.legit, JOINT_STATE_CAP)?;
                Ok(ChannelStateSet {
                    states: raw
                        .into_iter()
                        .map(|(g, prob)| ChannelState { g, h: Vec::new(), prob })
                        .collect(),
                })
            }
            Csi::Statistical => Ok(ChannelStateSet {
                states: vec![ChannelState { g: Vec::new(), h: Vec::new(), prob: 1.0 }],
            }),
        }
    }

    /// Maps an index into `full_joint` onto the policy's channel index.
    pub fn policy_index(&self, csi: Csi, full_index: usize) -> usize {
        match csi {
            Csi::Full => full_index,
            Csi::Partial => full_index / self.eave_state_count(),
            Csi::Statistical => 0,
        }
    }
}
