//! Stationary solutions of the radial (4+1)-dimensional Yang–Mills equation,
//! written as the weighted planar Allen–Cahn equation
//! `−Δu = (2/|x|²) u (1 − u²)`.
//!
//! Under `t = ln r` the equation becomes `−v_tt − v_θθ = 2v(1 − v²)` on the
//! cylinder; radial solutions satisfy the ODE `−v_tt = 2v(1 − v²)` whose first
//! integral `c = v_t² − (v² − 1)²` sorts them into the zero solution, the
//! constants `±1`, the soliton family `±(a² − r²)/(a² + r²)` and a family of
//! periodic (in `t`) solutions indexed by their amplitude.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod classify;
pub mod cli;
pub mod closedform;
pub mod cylinder;
pub mod error;
pub mod geometry;
pub mod io;
pub mod orbit;
pub mod period;

pub use error::{Error, Result};
