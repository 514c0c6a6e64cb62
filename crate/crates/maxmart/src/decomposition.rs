//! The multiplicative pair `(L, D)` with `D = 1/L*`, the Stieltjes form of
//! the dual predictable projection, and the exact laws attached to them.
//!
//! For max-continuous paths the candidate `D = 1/L*` is continuous and
//! nonincreasing with `D_0 = 1`, the product `L D` reproduces the ratio
//! `L/L*`, and the accumulated integral `-∫ L_{s-} dD_s` over the increase
//! set of `L*` equals `log L*_t`: on the increase set the path rides its
//! supremum, so each increase contributes the log increment of the recorded
//! supremum — the closed form of the integral under the declared interpolant,
//! not a first-order Riemann sum. Supremum jumps (reachable only on paths
//! outside the class) contribute their atom `-L_{s-} (D_s - D_{s-})`.

use serde::{Deserialize, Serialize};

use crate::maxtime::MaxRecord;
use crate::paths::{CadlagPath, Interp};
use crate::stats::mean_ci;
use crate::{Error, Result};

/// Per-sample decomposition table for one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub rows: Vec<DecompRow>,
    /// `D_rho = 1/L*_inf`; standard uniform across paths of a max-continuous
    /// model.
    pub d_at_rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompRow {
    pub t: f64,
    pub l: f64,
    pub lstar: f64,
    pub d: f64,
    pub a_stieltjes: f64,
}

/// `D_t = 1/L*_t` at the sample times. Nonincreasing with `D_0 = 1`;
/// continuous exactly when the running supremum is.
pub fn d_process(path: &CadlagPath) -> Result<Vec<(f64, f64)>> {
    let sup = path.running_sup();
    Ok(sup.samples().iter().map(|m| (m.time, 1.0 / m.right)).collect())
}

/// Accumulated `-∫ L_{s-} dD_s` at the sample times, with `L_{0-} := 1`.
pub fn stieltjes_a(path: &CadlagPath) -> Result<Vec<(f64, f64)>> {
    let sup = path.running_sup();
    let sup_samples = sup.samples();
    let samples = path.samples();
    let mut acc = 0.0f64;
    // Atom at zero under the L_{0-} := 1 convention; zero for unit starts.
    if sup_samples[0].right != 1.0 {
        acc += 1.0 - 1.0 / sup_samples[0].right;
    }
    let mut table = Vec::with_capacity(samples.len());
    table.push((0.0, acc));
    for i in 1..samples.len() {
        // Continuous increase across the segment: the path rides the
        // supremum, so -∫ L* d(1/L*) = Δ log L*.
        if sup_samples[i].left > sup_samples[i - 1].right {
            acc += sup_samples[i].left.ln() - sup_samples[i - 1].right.ln();
        }
        // Supremum jump at t_i: atom -L_{t_i-} ΔD.
        if sup_samples[i].right > sup_samples[i].left {
            acc += samples[i].left * (1.0 / sup_samples[i].left - 1.0 / sup_samples[i].right);
        }
        table.push((samples[i].time, acc));
    }
    Ok(table)
}

/// Full table for one path: `t, L, L*, D, a`.
pub fn decomposition_record(path: &CadlagPath) -> Result<DecompositionRecord> {
    let sup = path.running_sup();
    let a = stieltjes_a(path)?;
    let rows = path
        .samples()
        .iter()
        .zip(sup.samples())
        .zip(&a)
        .map(|((s, m), &(_, a_t))| DecompRow {
            t: s.time,
            l: s.right,
            lstar: m.right,
            d: 1.0 / m.right,
            a_stieltjes: a_t,
        })
        .collect();
    Ok(DecompositionRecord { rows, d_at_rho: 1.0 / sup.sup_infinity() })
}

/// Closed-form compensator of the death model: `a_t = lambda (t ∧ tau)` and
/// `Y_t = -a_t`, verified pointwise against `L_t = e^{-Y_t} 1{t < tau}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonDeathCompensator {
    pub lambda: f64,
    pub tau: f64,
}

impl PoissonDeathCompensator {
    pub fn a_at(&self, t: f64) -> f64 {
        self.lambda * t.min(self.tau)
    }

    pub fn y_at(&self, t: f64) -> f64 {
        -self.a_at(t)
    }

    /// `(t, a_t, Y_t)` at the path's sample times.
    pub fn table(&self) -> Vec<(f64, f64, f64)> {
        [0.0, self.tau].iter().map(|&t| (t, self.a_at(t), self.y_at(t))).collect()
    }
}

pub fn compensator_poisson_death(
    path: &CadlagPath,
    lambda: f64,
) -> Result<PoissonDeathCompensator> {
    let samples = path.samples();
    let shape_ok = path.interp() == Interp::Exponential
        && samples.len() == 2
        && samples[1].is_jump()
        && samples[1].right == 0.0
        && path.terminal_value() == 0.0;
    if !shape_ok {
        return Err(Error::Model("not a death-model path (rise, one fatal jump)".into()));
    }
    let comp = PoissonDeathCompensator { lambda, tau: path.horizon() };
    // Pointwise verification of L_t = e^{-Y_t} 1{t < tau} at the samples and
    // one interior point.
    let mid = 0.5 * comp.tau;
    for (t, expect_alive) in [(0.0, true), (mid, true), (comp.tau, false)] {
        let lhs = path.value_at(t)?;
        let rhs = if expect_alive { (-comp.y_at(t)).exp() } else { 0.0 };
        if (lhs - rhs).abs() > 1e-12 * (1.0 + rhs) {
            return Err(Error::Model(format!(
                "path disagrees with exp(-Y) at t={t}: {lhs} vs {rhs}"
            )));
        }
    }
    Ok(comp)
}

/// `D_rho = 1/L*_inf` across records, excluding paths whose maximum time is a
/// truncation artifact.
pub fn d_at_rho_samples(records: &[MaxRecord]) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::Parameter("no records".into()));
    }
    Ok(records
        .iter()
        .filter(|r| !r.rho_at_origin && !r.truncated_before_jump)
        .map(|r| 1.0 / r.l_star_inf)
        .collect())
}

/// Mean of `log L*_inf` with a 3-sigma halfwidth; the additive decomposition
/// at time zero pins the target at 1. A single record yields the point
/// estimate with zero halfwidth.
pub fn log_lstar_mean(records: &[MaxRecord]) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(Error::Parameter("no records".into()));
    }
    let logs: Vec<f64> = records.iter().map(|r| r.l_star_inf.ln()).collect();
    if logs.len() == 1 {
        return Ok((logs[0], 0.0));
    }
    mean_ci(&logs, 3.0)
}
