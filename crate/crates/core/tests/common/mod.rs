//! Shared fixtures for the integration suites.
#![allow(dead_code)] // each test binary uses a different subset

use osp_core::models::{ArrivalProcess, Coding, Csi, FadingModel, SystemConfig};

pub fn assert_close(got: f64, want: f64, rel: f64, abs: f64) {
    let err = (got - want).abs();
    let bound = abs.max(rel * want.abs());
    assert!(err <= bound, "got {got}, want {want} (err {err:e} > bound {bound:e})");
}

/// The reference scenario: 30-quanta battery, truncated geometric arrivals
/// with cap 6 and mean 1, 15 quantization levels, symmetric Rayleigh links.
pub fn default_config() -> SystemConfig {
    SystemConfig {
        e_max: 30,
        arrivals: ArrivalProcess::truncated_geometric(6, 1.0).expect("calibrates"),
        n_carriers: 1,
        legit: vec![FadingModel::gamma(1.0, 1.0).expect("valid")],
        eave: vec![FadingModel::gamma(1.0, 1.0).expect("valid")],
        quant_levels: 15,
        coding: Coding::Variable,
        csi: Csi::Full,
        slot_duration: 1.0,
    }
}

/// Constant-channel scenario: one discrete gain point on each link.
pub fn constant_channel_config(e_max: u32, arrivals: ArrivalProcess, g: f64, h: f64) -> SystemConfig {
    SystemConfig {
        e_max,
        arrivals,
        n_carriers: 1,
        legit: vec![FadingModel::discrete(vec![g], vec![1.0]).expect("valid")],
        eave: vec![FadingModel::discrete(vec![h], vec![1.0]).expect("valid")],
        quant_levels: 1,
        coding: Coding::Variable,
        csi: Csi::Full,
        slot_duration: 1.0,
    }
}

/// Two-state GOOD-BAD channel (-15 dB / -10 dB, probabilities 0.7 / 0.3) on
/// both links of every carrier.
pub fn good_bad_config(n_carriers: usize, e_max: u32) -> SystemConfig {
    let model = || FadingModel::discrete(vec![1.0 / 30.0, 3.0 / 30.0], vec![0.7, 0.3]).expect("valid");
    SystemConfig {
        e_max,
        arrivals: ArrivalProcess::truncated_geometric(6, 1.0).expect("calibrates"),
        n_carriers,
        legit: (0..n_carriers).map(|_| model()).collect(),
        eave: (0..n_carriers).map(|_| model()).collect(),
        quant_levels: 2,
        coding: Coding::Variable,
        csi: Csi::Full,
        slot_duration: 1.0,
    }
}
