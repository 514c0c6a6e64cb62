//! Pathwise super-replication of the digital option on the terminal
//! supremum: buy `1/x` shares at time 0, liquidate at the first passage above
//! `x`. The portfolio dominates the strict payoff `1{L*_inf > x}` on every
//! path; on max-continuous paths it replicates exactly, because the crossing
//! value is `x` itself and the position expires worthless when the level is
//! never reached.
//!
//! Crossing values come from the segment closed forms, not from sample
//! lookups: a rising exponential segment crosses at exactly `x`, a jump
//! crossing carries its overshoot, and on grid-sampled paths of the
//! continuous model the crossing value is `x` by continuity (the time is
//! resolved only to the step where the crossing was first seen).

use serde::{Deserialize, Serialize};

use crate::models::{batch_map, ModelSpec};
use crate::paths::{CadlagPath, Interp};
use crate::{Error, Result};

/// Outcome of the super-replication strategy on one path at strike `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HedgeResult {
    pub x: f64,
    /// First passage time above `x`; `+inf` when the level is never exceeded.
    pub tau_x: f64,
    pub payoff_ge: bool,
    pub payoff_gt: bool,
    /// Terminal portfolio value `L_{tau_x} / x` (or `L_inf / x` if no
    /// crossing).
    pub portfolio: f64,
    /// `portfolio - payoff_gt`; nonnegative pathwise.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub time: f64,
    pub value: f64,
}

fn check_strike(x: f64) -> Result<()> {
    if !(x > 1.0) {
        return Err(Error::Parameter(format!("strike must lie in (1, inf), got {x}")));
    }
    Ok(())
}

/// First time the path exceeds `x`, with the crossing value resolved through
/// the segment closed form.
pub fn first_passage_crossing(path: &CadlagPath, x: f64) -> Result<Option<Crossing>> {
    check_strike(x)?;
    let samples = path.samples();
    if samples[0].right > x {
        return Ok(Some(Crossing { time: 0.0, value: samples[0].right }));
    }
    match path.interp() {
        Interp::Exponential => {
            for i in 0..samples.len() - 1 {
                let a = samples[i];
                let b = samples[i + 1];
                // Rising segment reaching above x: continuous crossing at
                // exactly x.
                if b.left > x && a.right <= x && b.left > a.right {
                    let theta = (x / a.right).ln() / (b.left / a.right).ln();
                    let time = a.time + theta * (b.time - a.time);
                    return Ok(Some(Crossing { time, value: x }));
                }
                // Jump overshooting x.
                if b.right > x {
                    return Ok(Some(Crossing { time: b.time, value: b.right }));
                }
            }
            Ok(None)
        }
        Interp::PiecewiseConstant => Ok(samples
            .iter()
            .find(|s| s.right > x)
            .map(|s| Crossing { time: s.time, value: s.right })),
        Interp::GridSampled => {
            if let Some(bridge) = path.bridge_max() {
                for (j, &m) in bridge.iter().enumerate() {
                    if m > x {
                        return Ok(Some(Crossing { time: samples[j + 1].time, value: x }));
                    }
                }
                Ok(None)
            } else {
                Ok(samples
                    .iter()
                    .find(|s| s.right > x)
                    .map(|s| Crossing { time: s.time, value: x }))
            }
        }
    }
}

/// First passage time above `x` (`+inf` when never).
pub fn first_passage(path: &CadlagPath, x: f64) -> Result<f64> {
    Ok(first_passage_crossing(path, x)?.map_or(f64::INFINITY, |c| c.time))
}

/// Run the strategy on one path: both payoff variants, terminal portfolio
/// value, and the replication gap against the strict payoff.
pub fn super_replicate(path: &CadlagPath, x: f64) -> Result<HedgeResult> {
    let crossing = first_passage_crossing(path, x)?;
    let sup_inf = path.running_sup().sup_infinity();
    let payoff_ge = sup_inf >= x;
    let payoff_gt = sup_inf > x;
    let (tau_x, portfolio) = match crossing {
        Some(c) => (c.time, c.value / x),
        None => (f64::INFINITY, path.terminal_value() / x),
    };
    let gap = portfolio - if payoff_gt { 1.0 } else { 0.0 };
    Ok(HedgeResult { x, tau_x, payoff_ge, payoff_gt, portfolio, gap })
}

/// Monte Carlo estimate of the digital price `P[L*_inf >= x]` (and the strict
/// variant), with the no-arbitrage bound `1/x` it is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DigitalPrice {
    pub x: f64,
    pub n: usize,
    pub p_ge: f64,
    pub p_gt: f64,
    pub stderr_ge: f64,
    pub stderr_gt: f64,
    /// Initial capital of the super-replicating strategy.
    pub bound: f64,
    /// Certified one-sided simulation bias on the supremum law.
    pub truncation_bias: f64,
}

pub fn digital_price(spec: &ModelSpec, x: f64, n: usize, master_seed: u64) -> Result<DigitalPrice> {
    check_strike(x)?;
    if n < 1000 {
        return Err(Error::Parameter(format!("digital price requires n >= 1000, got {n}")));
    }
    let hits = batch_map(spec, n, master_seed, |_, path| {
        let sup = path.running_sup().sup_infinity();
        (u32::from(sup >= x), u32::from(sup > x))
    })?;
    let (mut n_ge, mut n_gt) = (0u64, 0u64);
    for (ge, gt) in hits {
        n_ge += u64::from(ge);
        n_gt += u64::from(gt);
    }
    let nf = n as f64;
    let p_ge = n_ge as f64 / nf;
    let p_gt = n_gt as f64 / nf;
    Ok(DigitalPrice {
        x,
        n,
        p_ge,
        p_gt,
        stderr_ge: (p_ge * (1.0 - p_ge) / nf).sqrt(),
        stderr_gt: (p_gt * (1.0 - p_gt) / nf).sqrt(),
        bound: 1.0 / x,
        truncation_bias: spec.truncation_bias(),
    })
}
