// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Pulse CSV files: a `#` header with dt and the drift hash, then one row per
//! segment with the start time and the four channel amplitudes in rad/s.

use std::io::{BufRead, Write};

use sha2::{Digest, Sha256};

use crate::dynamics::{Channel, PiecewisePulse};
use crate::quantum::CMatrix;
use crate::{Error, Result};

/// SHA-256 of the drift matrix entries (little-endian re, im, column-major).
pub fn drift_hash(h0: &CMatrix) -> String {
    let mut hasher = Sha256::new();
    hasher.update((h0.nrows() as u64).to_le_bytes());
    for z in h0.iter() {
        hasher.update(z.re.to_le_bytes());
        hasher.update(z.im.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Write a pulse in the shortest round-trip notation, so reloading is bit-exact.
pub fn write_pulse_csv(mut w: impl Write, pulse: &PiecewisePulse, drift: &str) -> Result<()> {
    writeln!(w, "# dt={:e}", pulse.dt())?;
    writeln!(w, "# drift={drift}")?;
    write!(w, "time")?;
    for ch in Channel::ALL {
        write!(w, ",{}", ch.name())?;
    }
    writeln!(w)?;
    for k in 0..pulse.n_segments() {
        write!(w, "{:e}", k as f64 * pulse.dt())?;
        for ch in Channel::ALL {
            write!(w, ",{:e}", pulse.channel(ch)[k])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Read a pulse and the drift hash recorded in its header.
pub fn read_pulse_csv(r: impl BufRead) -> Result<(PiecewisePulse, Option<String>)> {
    let mut dt = None;
    let mut drift = None;
    let mut samples: [Vec<f64>; 4] = Default::default();
    let mut header_seen = false;
    for (no, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let meta = meta.trim();
            if let Some(v) = meta.strip_prefix("dt=") {
                dt = Some(v.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: dt: {e}", no + 1)))?);
            } else if let Some(v) = meta.strip_prefix("drift=") {
                drift = Some(v.to_string());
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let want: Vec<&str> = std::iter::once("time").chain(Channel::ALL.iter().map(|c| c.name())).collect();
            if cols != want {
                return Err(Error::Parse(format!("line {}: expected columns {}", no + 1, want.join(","))));
            }
            header_seen = true;
            continue;
        }
        let vals = line
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", no + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != 5 {
            return Err(Error::Parse(format!("line {}: expected 5 values, got {}", no + 1, vals.len())));
        }
        for c in 0..4 {
            samples[c].push(vals[c + 1]);
        }
    }
    let dt = dt.ok_or_else(|| Error::Parse("missing '# dt=' header".into()))?;
    Ok((PiecewisePulse::new(dt, samples)?, drift))
}
