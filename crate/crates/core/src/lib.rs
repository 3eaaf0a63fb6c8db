//! Solver library for secrecy-rate-optimal transmission policies of an
//! energy-harvesting transmitter that sends over `N` parallel fading wiretap
//! sub-carriers.
//!
//! The transmitter owns a finite battery of discrete energy quanta, harvests a
//! random number of quanta per slot, and in every slot decides how much energy
//! to spend and how to split it across sub-carriers so that the long-run
//! average secrecy rate (bits per slot kept from the eavesdropper) is
//! maximized. The stack is layered bottom-up:
//!
//! - [`numerics`]: special functions, adaptive quadrature, bisection, dense
//!   linear solves.
//! - [`models`]: fading models, equally-likely channel quantization, energy
//!   arrival processes, system configuration.
//! - [`reward`]: per-carrier secrecy rates for full, partial and statistical
//!   channel knowledge under constant/variable rate coding.
//! - [`powersplit`]: optimal and uniform allocation of a total power budget
//!   across sub-carriers, plus precomputed reward tables.
//! - [`mdp`]: the average-reward Markov decision process over (battery,
//!   channel) states, policy iteration with unichain repair, steady states.
//! - [`sim`]: Monte Carlo validation of solved policies.
//! - [`experiment`]: config parsing, experiment sweeps and CSV emission used
//!   by the `osp` command line tool.

pub mod experiment;
pub mod mdp;
pub mod models;
pub mod numerics;
pub mod powersplit;
pub mod reward;
pub mod sim;
