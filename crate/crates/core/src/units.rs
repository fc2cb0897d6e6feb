// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Unit helpers. Internally every frequency is an angular frequency in rad/s
//! and every time is in seconds.

use std::f64::consts::TAU;

pub const NS: f64 = 1e-9;
pub const US: f64 = 1e-6;

/// Cyclic frequency in Hz to angular frequency in rad/s.
pub fn hz(f: f64) -> f64 {
    TAU * f
}

pub fn khz(f: f64) -> f64 {
    TAU * f * 1e3
}

pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

/// Angular frequency in rad/s back to Hz.
pub fn to_hz(w: f64) -> f64 {
    w / TAU
}
