//! Times of maximum and their identities.
//!
//! `rho_left` is the last time the left limit of the path touches the left
//! limit of its running supremum; `rho_right` drops the left limits. For
//! max-continuous paths the two agree almost surely and the left limit at
//! that time equals the terminal supremum; the counterexample model separates
//! them, which is exactly what the identity checks are for.
//!
//! Equality of floats is structural on the jump models: sample values are
//! constructed by the generators, and the running supremum is a max-fold over
//! those same floats, so "touches the supremum" is bit-exact. On grid-sampled
//! paths the maximum is located only up to the step containing it; the
//! winning bridge refinement (when present) supplies the value and both rho
//! variants are reported as the right endpoint of that step, so every
//! comparison on grid paths carries a `dt` tolerance on the time axis.

use serde::{Deserialize, Serialize};

use crate::paths::{CadlagPath, Interp};
use crate::{Error, Result};

/// Per-path summary of the time of maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxRecord {
    pub rho_left: f64,
    pub rho_right: f64,
    /// Terminal supremum, bridge-refined on grid paths.
    pub l_star_inf: f64,
    pub left_at_rho: f64,
    pub right_at_rho: f64,
    pub jumped_at_max: bool,
    /// Counterexample paths truncated before their first jump: the supremum
    /// was never touched after time 0 and rho is a truncation artifact.
    pub truncated_before_jump: bool,
    /// The equality set was empty, so rho is reported as 0. Such paths are
    /// excluded from distributional statistics.
    pub rho_at_origin: bool,
}

fn require_nondegenerate(path: &CadlagPath) -> Result<()> {
    if path.samples().len() < 2 {
        return Err(Error::Structural(
            "path records no samples beyond time 0; no maximum candidate".into(),
        ));
    }
    Ok(())
}

/// Last sample time whose left limit equals the left limit of the running
/// supremum, or `None` when the equality set is empty.
fn scan_rho_left(path: &CadlagPath) -> Option<f64> {
    let sup = path.running_sup();
    let mut last = None;
    for (s, m) in path.samples().iter().zip(sup.samples()).skip(1) {
        if s.left == m.left {
            last = Some(s.time);
        }
    }
    last
}

/// Last time the right-continuous value touches the running supremum. The
/// equality set can end in an open interval — a segment riding the supremum
/// into its right endpoint contributes that endpoint as its supremum.
fn scan_rho_right(path: &CadlagPath) -> Option<f64> {
    let sup = path.running_sup();
    let samples = path.samples();
    let sup_samples = sup.samples();
    let mut last = None;
    for i in 1..samples.len() {
        // Either the sample itself attains the supremum, or the preceding
        // segment rides the supremum into t_i.
        let attains = samples[i].right == sup_samples[i].right;
        let rides_in =
            samples[i].left >= samples[i - 1].right && samples[i].left == sup_samples[i].left;
        if attains || rides_in {
            last = Some(samples[i].time);
        }
    }
    last
}

/// Maximum entity of a grid path: (time, value, sample index or step).
fn grid_argmax(path: &CadlagPath) -> (f64, f64, bool) {
    if let Some(bridge) = path.bridge_max() {
        // Step maxima dominate both of their endpoints, so the global
        // supremum is attained by some step refinement. Earliest step wins
        // ties; the step's right grid endpoint stands in for the (unknown)
        // position of the maximum inside it.
        let mut best = 0usize;
        for (j, &m) in bridge.iter().enumerate() {
            if m > bridge[best] {
                best = j;
            }
        }
        (path.samples()[best + 1].time, bridge[best], false)
    } else {
        let samples = path.samples();
        let mut best = 0usize;
        for (i, s) in samples.iter().enumerate() {
            if s.right > samples[best].right {
                best = i;
            }
        }
        (samples[best].time, samples[best].right, best == 0)
    }
}

/// Last time the left limits of the path and of its running supremum agree.
pub fn rho_left(path: &CadlagPath) -> Result<f64> {
    require_nondegenerate(path)?;
    match path.interp() {
        Interp::GridSampled => Ok(grid_argmax(path).0),
        _ => Ok(scan_rho_left(path).unwrap_or(0.0)),
    }
}

/// Last time the path touches its running supremum (no left limits).
pub fn rho_right(path: &CadlagPath) -> Result<f64> {
    require_nondegenerate(path)?;
    match path.interp() {
        Interp::GridSampled => Ok(grid_argmax(path).0),
        _ => Ok(scan_rho_right(path).unwrap_or(0.0)),
    }
}

/// Full per-path summary. On paths whose running supremum jumps (the
/// counterexample model) only the right form is defined and `rho_left`
/// mirrors it.
pub fn max_record(path: &CadlagPath) -> Result<MaxRecord> {
    require_nondegenerate(path)?;
    let sup = path.running_sup();
    let l_star_inf;
    let (rl, rr, at_origin);
    let (left_at_rho, right_at_rho);

    if path.interp() == Interp::GridSampled {
        let (t, v, origin) = grid_argmax(path);
        l_star_inf = v;
        debug_assert_eq!(v, sup.sup_infinity());
        rl = t;
        rr = t;
        at_origin = origin;
        left_at_rho = v;
        right_at_rho = v;
    } else {
        l_star_inf = sup.sup_infinity();
        let scan_left = scan_rho_left(path);
        let scan_right = scan_rho_right(path);
        if sup.is_continuous() {
            rl = scan_left.unwrap_or(0.0);
            rr = scan_right.unwrap_or(0.0);
            at_origin = scan_left.is_none() || scan_right.is_none();
        } else {
            // Supremum reached by jumps: only the right form is meaningful.
            rr = scan_right.unwrap_or(0.0);
            rl = rr;
            at_origin = scan_right.is_none();
        }
        let rho = if sup.is_continuous() { rl } else { rr };
        if at_origin || rho == 0.0 {
            left_at_rho = path.initial_value();
            right_at_rho = path.initial_value();
        } else {
            left_at_rho = path.left_limit_at(rho)?;
            right_at_rho = path.value_at(rho)?;
        }
    }

    let truncated_before_jump = path.certificate().is_some()
        && path.interp() == Interp::Exponential
        && path.jump_list().is_empty();

    Ok(MaxRecord {
        rho_left: rl,
        rho_right: rr,
        l_star_inf,
        left_at_rho,
        right_at_rho,
        jumped_at_max: left_at_rho != right_at_rho,
        truncated_before_jump,
        rho_at_origin: at_origin,
    })
}

/// `|rho_left - rho_right| <= tol` (tol 0 on jump models, dt on grid models).
pub fn check_rho_identity(record: &MaxRecord, tol: f64) -> bool {
    (record.rho_left - record.rho_right).abs() <= tol
}

/// Whether the maximum is actually attained (right value at rho equals the
/// terminal supremum) — true for continuous paths, generally false with a
/// down jump at the maximum.
pub fn max_attained(record: &MaxRecord) -> bool {
    record.right_at_rho == record.l_star_inf
}

/// Number of connected runs of the set where the recorded structure touches
/// the terminal supremum within `tol`, plus the time the last run ends at.
/// Uniqueness of the time of maximum predicts exactly one run, ending at rho.
pub fn max_component_count(path: &CadlagPath, tol: f64) -> Result<(usize, f64)> {
    require_nondegenerate(path)?;
    let sup_inf = path.running_sup().sup_infinity();
    let mut values: Vec<(f64, f64)> = Vec::new();
    match path.interp() {
        Interp::GridSampled => {
            let samples = path.samples();
            if let Some(bridge) = path.bridge_max() {
                for (j, &m) in bridge.iter().enumerate() {
                    values.push((samples[j + 1].time, m));
                }
            } else {
                values.extend(samples.iter().map(|s| (s.time, s.right)));
            }
        }
        _ => values.extend(path.samples().iter().skip(1).map(|s| (s.time, s.left))),
    }
    let mut runs = 0usize;
    let mut in_run = false;
    let mut last_end = 0.0;
    for (t, v) in values {
        if (v - sup_inf).abs() <= tol {
            if !in_run {
                runs += 1;
                in_run = true;
            }
            last_end = t;
        } else {
            in_run = false;
        }
    }
    Ok((runs, last_end))
}
