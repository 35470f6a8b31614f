//! Simulator for learning hidden-matching measurements on phase states.
//!
//! A concept `pi_x` maps copies of `|psi_f> = N^{-1/2} sum_i (-1)^{f(i)} |i>`
//! to a uniform sample `(x, y, b)` with `b = f(y) xor f(y xor x)`. A fully
//! quantum learner ([`fqlearner`]) realizes it exactly with one copy per
//! sample; measure-first learners ([`mflearner`]) must first compress the
//! copies into `m` classical bits and degrade as `n` grows. [`hmgame`] reduces
//! the latter to the Hidden Matching game, and [`prf`] swaps uniform functions
//! for pseudorandom ones.

pub mod concepts;
pub mod error;
pub mod evaluation;
pub mod fqlearner;
pub mod gf2;
pub mod hmgame;
pub mod mflearner;
pub mod prf;
pub mod plot;
pub mod qsim;
pub mod runner;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
