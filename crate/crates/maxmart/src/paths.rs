//! Immutable càdlàg sample paths with exact left limits, jump extraction and
//! running-supremum computation.
//!
//! A path is a strictly increasing sequence of samples `(time, left, right)`
//! where `left != right` exactly at jumps, together with a terminal value at
//! `+inf` and an interpolation rule for the open segments between samples:
//!
//! * `Exponential` — the value moves geometrically from `right_i` to
//!   `left_{i+1}` over the segment, so the per-segment rate is implied by the
//!   stored endpoints. This reproduces the jump models' closed forms exactly.
//! * `PiecewiseConstant` — the value holds at `right_i` until the next sample.
//! * `GridSampled` — samples are exact marginals of a diffusion on a grid;
//!   between grid points the last value is carried, and optional per-segment
//!   bridge maxima refine the supremum (the value, not its position in time).
//!
//! Paths are immutable after construction; every operation is a pure function
//! of its inputs.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One path sample: left limit and right-continuous value at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub left: f64,
    pub right: f64,
}

impl Sample {
    /// A continuity point: left limit equals the value.
    pub fn continuous(time: f64, value: f64) -> Self {
        Sample { time, left: value, right: value }
    }

    pub fn jump(time: f64, left: f64, right: f64) -> Self {
        Sample { time, left, right }
    }

    pub fn is_jump(&self) -> bool {
        self.left != self.right
    }
}

/// Interpolation rule for the open segments between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interp {
    /// Geometric motion from `right_i` to `left_{i+1}` (exponential in time).
    #[serde(rename = "exponential-in-time")]
    Exponential,
    #[serde(rename = "piecewise-constant")]
    PiecewiseConstant,
    #[serde(rename = "grid-sampled")]
    GridSampled,
}

/// Truncation certificate attached by generators that stop a path once the
/// conditional probability of a future new maximum is below `bias_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopCertificate {
    /// The stop gap `C`: simulation halts once `value <= e^{-C} * runsup`.
    pub stop_gap: f64,
    /// One-sided bias bound `e^{-C}` on every supremum-dependent statistic.
    pub bias_bound: f64,
}

impl StopCertificate {
    pub fn from_gap(stop_gap: f64) -> Self {
        StopCertificate { stop_gap, bias_bound: (-stop_gap).exp() }
    }
}

/// A right-continuous sample path with explicit jumps and left limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CadlagPath {
    samples: Vec<Sample>,
    horizon: f64,
    terminal_value: f64,
    interp: Interp,
    /// Per-segment supremum refinements (bridge maxima), `len = samples - 1`.
    bridge_max: Option<Vec<f64>>,
    certificate: Option<StopCertificate>,
    /// Computed on first use; everything else is immutable.
    #[serde(skip)]
    sup_cache: OnceLock<SupPath>,
}

impl PartialEq for CadlagPath {
    fn eq(&self, other: &Self) -> bool {
        self.samples == other.samples
            && self.horizon == other.horizon
            && self.terminal_value == other.terminal_value
            && self.interp == other.interp
            && self.bridge_max == other.bridge_max
            && self.certificate == other.certificate
    }
}

impl CadlagPath {
    /// Validates the path invariants: strictly increasing times starting at 0,
    /// first sample a continuity point, all values nonnegative, and (for
    /// exponential segments) no decay from a positive value to zero without a
    /// jump.
    pub fn new(samples: Vec<Sample>, terminal_value: f64, interp: Interp) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Structural("path has no samples".into()));
        }
        let first = samples[0];
        if first.time != 0.0 {
            return Err(Error::Structural(format!(
                "first sample must be at time 0, got {}",
                first.time
            )));
        }
        if first.is_jump() {
            return Err(Error::Structural("initial sample must be a continuity point".into()));
        }
        if !(terminal_value >= 0.0) {
            return Err(Error::Structural("terminal value must be nonnegative".into()));
        }
        for pair in samples.windows(2) {
            if !(pair[1].time > pair[0].time) {
                return Err(Error::Structural(format!(
                    "sample times must be strictly increasing: {} then {}",
                    pair[0].time, pair[1].time
                )));
            }
        }
        for s in &samples {
            if !(s.left >= 0.0 && s.right >= 0.0) || !s.left.is_finite() || !s.right.is_finite() {
                return Err(Error::Structural(format!(
                    "values must be finite and nonnegative at t={}",
                    s.time
                )));
            }
        }
        if interp == Interp::Exponential {
            for pair in samples.windows(2) {
                let from = pair[0].right;
                let to = pair[1].left;
                if (from == 0.0) != (to == 0.0) {
                    return Err(Error::Structural(format!(
                        "exponential segment cannot connect {from} to {to} without a jump"
                    )));
                }
            }
        }
        let horizon = samples.last().unwrap().time;
        Ok(CadlagPath {
            samples,
            horizon,
            terminal_value,
            interp,
            bridge_max: None,
            certificate: None,
            sup_cache: OnceLock::new(),
        })
    }

    /// Attach per-segment bridge maxima (grid-sampled paths only). Each entry
    /// must dominate its segment's endpoints.
    pub fn with_bridge_max(mut self, refinements: Vec<f64>) -> Result<Self> {
        if refinements.len() + 1 != self.samples.len() {
            return Err(Error::Structural(format!(
                "expected {} bridge refinements, got {}",
                self.samples.len() - 1,
                refinements.len()
            )));
        }
        for (i, &m) in refinements.iter().enumerate() {
            let lo = self.samples[i].right.max(self.samples[i + 1].left);
            if !(m >= lo) {
                return Err(Error::Structural(format!(
                    "bridge maximum {m} below segment endpoints at index {i}"
                )));
            }
        }
        self.bridge_max = Some(refinements);
        self.sup_cache = OnceLock::new();
        Ok(self)
    }

    pub fn with_certificate(mut self, certificate: StopCertificate) -> Self {
        self.certificate = Some(certificate);
        self
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Last explicit sample time.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Value assigned at `+inf`.
    pub fn terminal_value(&self) -> f64 {
        self.terminal_value
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn bridge_max(&self) -> Option<&[f64]> {
        self.bridge_max.as_deref()
    }

    pub fn certificate(&self) -> Option<StopCertificate> {
        self.certificate
    }

    pub fn initial_value(&self) -> f64 {
        self.samples[0].right
    }

    /// Index of the segment containing `t`: the largest `i` with
    /// `time_i <= t`. Sample times are compared exactly — they are
    /// constructed, not searched.
    fn segment_index(&self, t: f64) -> usize {
        match self.samples.binary_search_by(|s| s.time.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    fn interpolate(&self, i: usize, t: f64) -> f64 {
        let a = self.samples[i];
        if t == a.time {
            return a.right;
        }
        match self.interp {
            Interp::Exponential => {
                let b = self.samples[i + 1];
                if a.right == 0.0 {
                    return 0.0;
                }
                let theta = (t - a.time) / (b.time - a.time);
                a.right * (theta * (b.left / a.right).ln()).exp()
            }
            Interp::PiecewiseConstant | Interp::GridSampled => a.right,
        }
    }

    /// Right-continuous evaluation; `+inf` returns the terminal value.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("time {t} is negative")));
        }
        if t == f64::INFINITY {
            return Ok(self.terminal_value);
        }
        if t > self.horizon {
            return Err(Error::Domain(format!(
                "time {t} lies in ({}, +inf), where the path is undefined",
                self.horizon
            )));
        }
        let i = self.segment_index(t);
        Ok(self.interpolate(i, t))
    }

    /// Left limit at `t in (0, horizon]`. The limit at 0 is a convention of
    /// the decomposition integrator, not a path value.
    pub fn left_limit_at(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::Domain(format!("left limit requires t > 0, got {t}")));
        }
        if !(t <= self.horizon) {
            return Err(Error::Domain(format!("time {t} beyond horizon {}", self.horizon)));
        }
        match self.samples.binary_search_by(|s| s.time.partial_cmp(&t).unwrap()) {
            Ok(i) => Ok(self.samples[i].left),
            // Interior of a segment: the interpolant is continuous there.
            Err(i) => Ok(self.interpolate(i - 1, t)),
        }
    }

    /// Exactly the samples where the left limit differs from the value.
    pub fn jump_list(&self) -> Vec<Sample> {
        self.samples.iter().copied().filter(Sample::is_jump).collect()
    }

    /// Pointwise supremum over `[0, t]`, exact on the jump models. On
    /// grid-sampled segments stored bridge maxima enter at the right endpoint
    /// of their step. Computed once and cached.
    pub fn running_sup(&self) -> &SupPath {
        self.sup_cache.get_or_init(|| self.compute_running_sup())
    }

    fn compute_running_sup(&self) -> SupPath {
        let n = self.samples.len();
        let mut sup_samples = Vec::with_capacity(n);
        let mut continuous = true;
        let first = self.samples[0];
        let mut sup_right = first.right;
        sup_samples.push(Sample { time: first.time, left: first.right, right: first.right });
        for i in 1..n {
            let s = self.samples[i];
            // Supremum over [0, t_i): previous sup joined with the segment's
            // interior, whose extremes sit at its endpoints (monotone rules).
            let mut sup_left = sup_right.max(self.samples[i - 1].right).max(s.left);
            if let Some(br) = &self.bridge_max {
                sup_left = sup_left.max(br[i - 1]);
            }
            let new_sup_right = sup_left.max(s.right);
            if s.right > sup_left {
                continuous = false;
            }
            sup_samples.push(Sample { time: s.time, left: sup_left, right: new_sup_right });
            sup_right = new_sup_right;
        }
        let sup_infinity = sup_right.max(self.terminal_value);
        SupPath { samples: sup_samples, sup_infinity, continuous }
    }

    /// True iff no jump lands strictly above the supremum of prior left
    /// limits, i.e. the running supremum never jumps.
    pub fn sup_is_continuous(&self) -> bool {
        self.running_sup().continuous
    }
}

/// Running supremum of a base path, sampled at the base path's times.
/// Nondecreasing; continuous whenever the base path never jumps above its
/// prior supremum.
#[derive(Debug, Clone, PartialEq)]
pub struct SupPath {
    samples: Vec<Sample>,
    sup_infinity: f64,
    continuous: bool,
}

impl SupPath {
    /// Supremum samples; `left` is the supremum over `[0, t)`, `right` over
    /// `[0, t]`.
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Terminal supremum, including bridge refinements when present.
    pub fn sup_infinity(&self) -> f64 {
        self.sup_infinity
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    /// Supremum over `[0, t]`, evaluated against the base path the supremum
    /// was computed from. Exact on monotone segments; on grid segments the
    /// current step's refinement is excluded (it has no position in time).
    pub fn value_at(&self, base: &CadlagPath, t: f64) -> Result<f64> {
        if t == f64::INFINITY {
            return Ok(self.sup_infinity);
        }
        let v = base.value_at(t)?;
        let i = base.segment_index(t);
        Ok(self.samples[i].right.max(v))
    }
}

// ---------------------------------------------------------------------------
// CSV serialization: one JSON header line carrying horizon, terminal value,
// interpolation tag and optional refinements/certificate, then a column
// header, then one row per sample. Floats print in shortest round-trip form,
// so decode reproduces samples bit-exactly.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CsvHeader {
    horizon: f64,
    terminal_value: f64,
    interpolation: Interp,
    #[serde(skip_serializing_if = "Option::is_none")]
    bridge_max: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<StopCertificate>,
}

pub const PATH_CSV_COLUMNS: &str = "time,left_value,right_value,is_jump";

pub fn path_to_csv(path: &CadlagPath) -> String {
    let header = CsvHeader {
        horizon: path.horizon,
        terminal_value: path.terminal_value,
        interpolation: path.interp,
        bridge_max: path.bridge_max.clone(),
        certificate: path.certificate,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    out.push_str(PATH_CSV_COLUMNS);
    out.push('\n');
    for s in &path.samples {
        out.push_str(&format!("{},{},{},{}\n", s.time, s.left, s.right, s.is_jump()));
    }
    out
}

/// Concatenated per-path CSV blocks; each block starts with its JSON header
/// line.
pub fn batch_paths_to_csv(paths: &[CadlagPath]) -> String {
    paths.iter().map(path_to_csv).collect()
}

pub fn batch_paths_from_csv(text: &str) -> Result<Vec<CadlagPath>> {
    let mut blocks: Vec<String> = Vec::new();
    for line in text.lines() {
        if line.starts_with('{') {
            blocks.push(String::new());
        }
        match blocks.last_mut() {
            Some(block) => {
                block.push_str(line);
                block.push('\n');
            }
            None => return Err(Error::Decode("text does not start with a JSON header".into())),
        }
    }
    blocks.iter().map(|b| path_from_csv(b)).collect()
}

pub fn path_from_csv(text: &str) -> Result<CadlagPath> {
    let mut lines = text.lines();
    let header_line =
        lines.next().ok_or_else(|| Error::Decode("missing JSON header line".into()))?;
    let header: CsvHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::Decode(format!("bad JSON header: {e}")))?;
    let columns = lines.next().ok_or_else(|| Error::Decode("missing column header".into()))?;
    if columns != PATH_CSV_COLUMNS {
        return Err(Error::Decode(format!("unexpected columns: {columns}")));
    }
    let mut samples = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Decode(format!("row {}: expected 4 fields", lineno + 3)));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Decode(format!("row {}: {e}", lineno + 3)))
        };
        let sample =
            Sample { time: parse(fields[0])?, left: parse(fields[1])?, right: parse(fields[2])? };
        let is_jump: bool = fields[3]
            .parse()
            .map_err(|e| Error::Decode(format!("row {}: bad is_jump: {e}", lineno + 3)))?;
        if is_jump != sample.is_jump() {
            return Err(Error::Decode(format!(
                "row {}: is_jump flag inconsistent with values",
                lineno + 3
            )));
        }
        samples.push(sample);
    }
    let mut path = CadlagPath::new(samples, header.terminal_value, header.interpolation)?;
    if let Some(br) = header.bridge_max {
        path = path.with_bridge_max(br)?;
    }
    if let Some(cert) = header.certificate {
        path = path.with_certificate(cert);
    }
    if path.horizon != header.horizon {
        return Err(Error::Decode("horizon disagrees with last sample time".into()));
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_path() -> CadlagPath {
        CadlagPath::new(
            vec![Sample::continuous(0.0, 1.0), Sample::continuous(1.0, 1.0)],
            1.0,
            Interp::PiecewiseConstant,
        )
        .unwrap()
    }

    /// Poisson-death shape: e^{lambda t} until tau, then dead.
    fn death_path(lambda: f64, tau: f64) -> CadlagPath {
        let peak = (lambda * tau).exp();
        CadlagPath::new(
            vec![Sample::continuous(0.0, 1.0), Sample::jump(tau, peak, 0.0)],
            0.0,
            Interp::Exponential,
        )
        .unwrap()
    }

    #[test]
    fn constant_path_evaluates_to_one() {
        let p = constant_path();
        assert_eq!(p.value_at(0.5).unwrap(), 1.0);
        assert_eq!(p.left_limit_at(0.7).unwrap(), 1.0);
        assert!(p.jump_list().is_empty());
        assert!(p.sup_is_continuous());
    }

    #[test]
    fn death_path_closed_form_evaluation() {
        let p = death_path(1.0, 0.7);
        // e^{0.5} ~ 1.64872 strictly before the death jump.
        assert!((p.value_at(0.5).unwrap() - 0.5f64.exp()).abs() < 1e-12);
        // Right continuity across the jump.
        assert_eq!(p.value_at(0.7).unwrap(), 0.0);
        assert_eq!(p.value_at(f64::INFINITY).unwrap(), 0.0);
        // Left limit at the jump is the stored peak, e^{0.7} ~ 2.01375.
        assert_eq!(p.left_limit_at(0.7).unwrap(), 0.7f64.exp());
        assert!((p.left_limit_at(0.35).unwrap() - 0.35f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let p = death_path(1.0, 0.7);
        assert!(matches!(p.value_at(-0.1), Err(Error::Domain(_))));
        assert!(matches!(p.value_at(0.8), Err(Error::Domain(_))));
        assert!(matches!(p.left_limit_at(0.0), Err(Error::Domain(_))));
        assert!(matches!(p.left_limit_at(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn death_path_running_sup_is_continuous_exponential() {
        let p = death_path(1.0, 0.7);
        let sup = p.running_sup();
        assert!(sup.is_continuous());
        assert_eq!(sup.sup_infinity(), 0.7f64.exp());
        // Sup over [0, 0.7) and [0, 0.7] agree: the down jump does not move it.
        let last = sup.samples()[1];
        assert_eq!(last.left, 0.7f64.exp());
        assert_eq!(last.right, 0.7f64.exp());
        // Between samples the sup rides the rising path: e^{min(t, 0.7)}.
        assert!((sup.value_at(&p, 0.5).unwrap() - 0.5f64.exp()).abs() < 1e-12);
        assert_eq!(sup.value_at(&p, f64::INFINITY).unwrap(), 0.7f64.exp());
    }

    #[test]
    fn death_path_jump_list() {
        let p = death_path(1.0, 0.7);
        let jumps = p.jump_list();
        assert_eq!(jumps.len(), 1);
        assert_eq!(jumps[0].time, 0.7);
        assert_eq!(jumps[0].left, 0.7f64.exp());
        assert_eq!(jumps[0].right, 0.0);
    }

    /// Poisson-up shape: decay e^{-lambda t}, doubling jumps.
    fn up_path() -> CadlagPath {
        let s_pre = (-0.3f64).exp();
        let s_post = 2.0 * s_pre;
        let s_end = s_post * (-0.7f64).exp();
        CadlagPath::new(
            vec![
                Sample::continuous(0.0, 1.0),
                Sample::jump(0.3, s_pre, s_post),
                Sample::continuous(1.0, s_end),
            ],
            0.0,
            Interp::Exponential,
        )
        .unwrap()
    }

    #[test]
    fn up_path_sup_jumps_at_record_jump() {
        let p = up_path();
        // Left limit at the first jump: e^{-0.3} ~ 0.74082.
        assert_eq!(p.left_limit_at(0.3).unwrap(), (-0.3f64).exp());
        let sup = p.running_sup();
        assert!(!sup.is_continuous());
        assert!(!p.sup_is_continuous());
        // Sup moves 1 -> 2 e^{-0.3} ~ 1.48164 discontinuously at 0.3.
        let at_jump = sup.samples()[1];
        assert_eq!(at_jump.left, 1.0);
        assert_eq!(at_jump.right, 2.0 * (-0.3f64).exp());
        // Every jump doubles the left limit.
        for j in p.jump_list() {
            assert_eq!(j.right, 2.0 * j.left);
        }
    }

    #[test]
    fn exponential_decay_interpolates_between_jumps() {
        let p = up_path();
        let expected = 2.0 * (-0.3f64).exp() * (-0.2f64).exp();
        assert!((p.value_at(0.5).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn value_never_exceeds_running_sup_at_samples() {
        for p in [constant_path(), death_path(1.0, 0.7), up_path()] {
            let sup = p.running_sup();
            for (s, m) in p.samples().iter().zip(sup.samples()) {
                assert!(s.right <= m.right);
                assert!(s.left <= m.left.max(m.right));
                assert!(m.right <= sup.sup_infinity());
            }
            // Nondecreasing.
            for w in sup.samples().windows(2) {
                assert!(w[1].right >= w[0].right);
            }
        }
    }

    #[test]
    fn left_limit_equals_value_at_non_jump_samples() {
        let p = up_path();
        assert_eq!(p.left_limit_at(1.0).unwrap(), p.value_at(1.0).unwrap());
    }

    #[test]
    fn structural_validation_rejects_bad_paths() {
        assert!(CadlagPath::new(vec![], 0.0, Interp::Exponential).is_err());
        // Does not start at zero.
        assert!(CadlagPath::new(vec![Sample::continuous(0.5, 1.0)], 0.0, Interp::Exponential)
            .is_err());
        // Initial jump.
        assert!(
            CadlagPath::new(vec![Sample::jump(0.0, 1.0, 2.0)], 0.0, Interp::Exponential).is_err()
        );
        // Non-increasing times.
        assert!(CadlagPath::new(
            vec![Sample::continuous(0.0, 1.0), Sample::continuous(0.0, 2.0)],
            0.0,
            Interp::Exponential
        )
        .is_err());
        // Negative value.
        assert!(CadlagPath::new(
            vec![Sample::continuous(0.0, 1.0), Sample::continuous(1.0, -1.0)],
            0.0,
            Interp::Exponential
        )
        .is_err());
        // Exponential decay to exact zero without a jump.
        assert!(CadlagPath::new(
            vec![Sample::continuous(0.0, 1.0), Sample::continuous(1.0, 0.0)],
            0.0,
            Interp::Exponential
        )
        .is_err());
    }

    #[test]
    fn bridge_refinements_enter_the_sup_at_step_ends() {
        let p = CadlagPath::new(
            vec![
                Sample::continuous(0.0, 1.0),
                Sample::continuous(0.5, 1.1),
                Sample::continuous(1.0, 0.9),
            ],
            0.0,
            Interp::GridSampled,
        )
        .unwrap()
        .with_bridge_max(vec![1.15, 1.3])
        .unwrap();
        let sup = p.running_sup();
        assert_eq!(sup.samples()[1].right, 1.15);
        assert_eq!(sup.sup_infinity(), 1.3);
        assert!(sup.is_continuous());
        // Refinements must dominate their endpoints.
        let bad = CadlagPath::new(
            vec![Sample::continuous(0.0, 1.0), Sample::continuous(0.5, 1.1)],
            0.0,
            Interp::GridSampled,
        )
        .unwrap()
        .with_bridge_max(vec![1.05]);
        assert!(bad.is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let paths = vec![
            death_path(1.0, 0.7351298117365),
            up_path(),
            CadlagPath::new(
                vec![
                    Sample::continuous(0.0, 1.0),
                    Sample::continuous(1e-3, 1.000481726),
                    Sample::continuous(2e-3, 0.99923),
                ],
                0.0,
                Interp::GridSampled,
            )
            .unwrap()
            .with_bridge_max(vec![1.0061231231239, 1.0004817263251])
            .unwrap()
            .with_certificate(StopCertificate::from_gap(9.0)),
        ];
        for p in paths {
            let text = path_to_csv(&p);
            let back = path_from_csv(&text).unwrap();
            assert_eq!(p, back);
        }
    }

    #[test]
    fn csv_decode_rejects_inconsistent_jump_flag() {
        let p = death_path(1.0, 0.7);
        let text = path_to_csv(&p).replace("true", "false");
        assert!(matches!(path_from_csv(&text), Err(Error::Decode(_))));
    }
}
