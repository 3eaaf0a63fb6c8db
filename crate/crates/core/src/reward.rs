//! Secrecy-rate reward functions for every channel-knowledge and coding mode.
//!
//! With full knowledge the per-carrier reward is deterministic in the gains;
//! with partial knowledge the eavesdropper gain is averaged out (`t_con`,
//! `t_var`); with statistical knowledge the legitimate gain is averaged out as
//! well (`t_stat`). All rates are base-2 logarithms, bits per slot.

use std::f64::consts::LN_2;
use std::fmt;

use crate::models::{Csi, Coding, FadingModel, ModelError, SystemConfig};
use crate::numerics::{self, NumericsError, Tolerance};

#[derive(Debug, Clone, PartialEq)]
pub enum RewardError {
    Dimension { expected: usize, got: usize },
    UnsupportedModel { op: &'static str, what: String },
    Numerics(NumericsError),
    Model(ModelError),
}

impl fmt::Display for RewardError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dimension { expected, got } => {
                write!(f, "vector length mismatch: expected {expected}, got {got}")
            }
            Self::UnsupportedModel { op, what } => write!(f, "{op}: {what}"),
            Self::Numerics(e) => write!(f, "{e}"),
            Self::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RewardError {}

impl From<NumericsError> for RewardError {
    fn from(e: NumericsError) -> Self {
        Self::Numerics(e)
    }
}

impl From<ModelError> for RewardError {
    fn from(e: ModelError) -> Self {
        Self::Model(e)
    }
}

/// Per-carrier secrecy rate for known gains g (legitimate) and h
/// (eavesdropper) at transmit power `rho`.
///
/// Variable-rate coding matches the code rate to the legitimate channel, so
/// the eavesdropper never learns more than the legitimate receiver and the
/// rate is clamped through min{g, h}. Constant-rate coding can go negative
/// when the eavesdropper has the better channel.
pub fn rate_pair(g: f64, h: f64, rho: f64, coding: Coding) -> f64 {
    debug_assert!(g >= 0.0 && h >= 0.0 && rho >= 0.0);
    let eff_h = match coding {
        Coding::Variable => h.min(g),
        Coding::Constant => h,
    };
    ((g * rho).ln_1p() - (eff_h * rho).ln_1p()) / LN_2
}

/// Multi-carrier secrecy rate: sum of per-carrier terms.
pub fn c_total(rho: &[f64], g: &[f64], h: &[f64], coding: Coding) -> Result<f64, RewardError> {
    if g.len() != rho.len() {
        return Err(RewardError::Dimension { expected: rho.len(), got: g.len() });
    }
    if h.len() != rho.len() {
        return Err(RewardError::Dimension { expected: rho.len(), got: h.len() });
    }
    Ok(rho
        .iter()
        .zip(g.iter().zip(h))
        .map(|(&r, (&gi, &hi))| rate_pair(gi, hi, r, coding))
        .sum())
}

/// Expected per-carrier reward under constant-rate coding when only the
/// legitimate gain g is known: E_H[log2((1+g rho)/(1+H rho))].
///
/// Negative contributions from H > g are integrated as-is.
pub fn t_con(g: f64, rho: f64, eave: &FadingModel, tol: &Tolerance) -> Result<f64, RewardError> {
    if rho == 0.0 {
        return Ok(0.0);
    }
    require_gamma("t_con", eave)?;
    let cutoff = eave.tail_cutoff()?;
    let top = (g * rho).ln_1p();
    let value = numerics::integrate(
        |h| (top - (h * rho).ln_1p()) * eave.pdf(h).unwrap_or(0.0),
        0.0,
        cutoff,
        tol,
    )?;
    Ok(value / LN_2)
}

/// Expected per-carrier reward under variable-rate coding: the integrand is
/// clipped at zero, which reduces the integration range to h in [0, g].
pub fn t_var(g: f64, rho: f64, eave: &FadingModel, tol: &Tolerance) -> Result<f64, RewardError> {
    if rho == 0.0 || g == 0.0 {
        return Ok(0.0);
    }
    require_gamma("t_var", eave)?;
    let cutoff = eave.tail_cutoff()?.min(g);
    let top = (g * rho).ln_1p();
    let value = numerics::integrate(
        |h| (top - (h * rho).ln_1p()) * eave.pdf(h).unwrap_or(0.0),
        0.0,
        cutoff,
        tol,
    )?;
    Ok(value / LN_2)
}

/// Expected reward when neither gain is known: E_G[t_con(G, rho)].
///
/// Power cannot ride the instantaneous channel here, and the code rate cannot
/// be matched to an unknown legitimate gain, so constant-rate coding applies.
pub fn t_stat(rho: f64, legit: &FadingModel, eave: &FadingModel, tol: &Tolerance) -> Result<f64, RewardError> {
    if rho == 0.0 {
        return Ok(0.0);
    }
    require_gamma("t_stat", eave)?;
    // The h-expectation inside t_con does not depend on g, so the double
    // integral splits into two one-dimensional quadratures:
    // E_G[t_con(G, rho)] = E_G[log2(1 + G rho)] - E_H[log2(1 + H rho)].
    let eave_cutoff = eave.tail_cutoff()?;
    let eave_log = numerics::integrate(
        |h| (h * rho).ln_1p() * eave.pdf(h).unwrap_or(0.0),
        0.0,
        eave_cutoff,
        tol,
    )?;
    let legit_log = match legit {
        FadingModel::Gamma { .. } => {
            let cutoff = legit.tail_cutoff()?;
            numerics::integrate(
                |g| (g * rho).ln_1p() * legit.pdf(g).unwrap_or(0.0),
                0.0,
                cutoff,
                tol,
            )?
        }
        FadingModel::Discrete { gains, probs } => {
            gains.iter().zip(probs).map(|(&g, &p)| p * (g * rho).ln_1p()).sum()
        }
    };
    Ok((legit_log - eave_log) / LN_2)
}

/// Closed form of `t_con` for Rayleigh eavesdropper fading (shape 1):
/// log2(1+g rho) + e^{1/(rho h_mean)} Ei(-1/(rho h_mean)) / ln 2.
pub fn t_con_closed_form_m1(g: f64, rho: f64, mean_h: f64) -> Result<f64, RewardError> {
    if rho == 0.0 {
        return Ok(0.0);
    }
    let x = 1.0 / (rho * mean_h);
    let scaled = numerics::ei_exp_scaled(x)?;
    Ok((g * rho).ln_1p() / LN_2 + scaled / LN_2)
}

/// Mixed derivative d^2 t_con / (d rho d g) = 1 / (ln2 (1+g rho)^2).
pub fn d2_t_con(g: f64, rho: f64) -> f64 {
    1.0 / (LN_2 * (1.0 + g * rho).powi(2))
}

/// Mixed derivative of t_var; the constant-coding expression scaled by the
/// eavesdropper CDF at g, expressed through the incomplete gamma function.
pub fn d2_t_var(g: f64, rho: f64, eave: &FadingModel) -> Result<f64, RewardError> {
    match eave {
        FadingModel::Gamma { shape, mean } => {
            let m = *shape;
            let z = m * g / mean;
            let gm = numerics::gamma(m);
            let upper = numerics::gamma_upper(m, z)?;
            Ok((gm - upper) / (LN_2 * (1.0 + g * rho).powi(2) * gm))
        }
        FadingModel::Discrete { .. } => Err(RewardError::UnsupportedModel {
            op: "d2_t_var",
            what: "needs a gamma eavesdropper model".into(),
        }),
    }
}

fn require_gamma(op: &'static str, model: &FadingModel) -> Result<(), RewardError> {
    match model {
        FadingModel::Gamma { .. } => Ok(()),
        FadingModel::Discrete { .. } => Err(RewardError::UnsupportedModel {
            op,
            what: "needs a gamma eavesdropper model".into(),
        }),
    }
}

/// Reward evaluator bound to one configuration.
///
/// Immutable and cheap to share across workers; partial and statistical modes
/// carry the fading models needed for their expectations.
#[derive(Debug, Clone)]
pub struct RewardKernel {
    pub coding: Coding,
    pub csi: Csi,
    legit: Vec<FadingModel>,
    eave: Vec<FadingModel>,
    tol: Tolerance,
}

impl RewardKernel {
    pub fn for_config(cfg: &SystemConfig) -> Result<Self, RewardError> {
        if matches!(cfg.csi, Csi::Partial | Csi::Statistical) {
            for m in &cfg.eave {
                require_gamma("RewardKernel::for_config", m)?;
            }
        }
        Ok(Self {
            coding: cfg.coding,
            csi: cfg.csi,
            legit: cfg.legit.clone(),
            eave: cfg.eave.clone(),
            tol: Tolerance { rel: 1e-11, abs: 1e-14, max_iter: 400_000 },
        })
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn quad_tolerance(&self) -> &Tolerance {
        &self.tol
    }

    /// Expected reward of carrier `r` at known legitimate gain `g` under the
    /// kernel's coding mode (partial channel knowledge).
    pub fn expected_reward(&self, r: usize, g: f64, rho: f64) -> Result<f64, RewardError> {
        match self.coding {
            Coding::Constant => t_con(g, rho, &self.eave[r], &self.tol),
            Coding::Variable => t_var(g, rho, &self.eave[r], &self.tol),
        }
    }

    /// Expected reward of carrier `r` with no channel knowledge at all.
    pub fn statistical_reward(&self, r: usize, rho: f64) -> Result<f64, RewardError> {
        let outer = Tolerance { rel: 1e-9, abs: 1e-12, max_iter: self.tol.max_iter };
        t_stat(rho, &self.legit[r], &self.eave[r], &outer)
    }

    pub fn carrier_count(&self) -> usize {
        self.eave.len()
    }
}
