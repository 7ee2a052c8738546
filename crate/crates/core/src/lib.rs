//! Exhaustive search for solutions of `a⁶+b⁶ = c⁶+d⁶+e⁶+f⁶+g⁶`.
//!
//! The search fixes a sieve prime `p` and splits the work by the residue
//! `r_p` of the reduced triple sum modulo `p`. Every residue class is an
//! independent job, which is what [`engine::search`] parallelizes, what
//! [`engine::checkpoint`] resumes, and what [`worknet`] distributes.

pub mod catalog;
pub mod cli;
pub mod engine;
pub mod numthy;
pub mod oracle;
pub mod selftest;
pub mod sievetab;
pub mod worknet;
