//! Configuration-driven experiment runner: wires the generators to the
//! identity checks and writes per-check CSVs plus a summary JSON.
//!
//! The summary JSON is a pure function of `(config, seed)` — reruns and
//! different `--jobs` values produce byte-identical files. Wall time is
//! printed in the human-readable table only, never serialized.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::azema::{conditional_doob_check, nested_z_estimate, MarkovState};
use crate::decomposition::{compensator_poisson_death, d_process, stieltjes_a};
use crate::hedging::{super_replicate, HedgeResult};
use crate::maxtime::{max_record, MaxRecord};
use crate::models::{batch_map, state_at, ModelSpec, Seed};
use crate::paths::CadlagPath;
use crate::stats::{ks_critical, ks_uniform_with_bias, mean_ci};
use crate::{Error, Result};

/// Offset of the time of maximum used by the before-rho probe.
pub const BEFORE_RHO_EPS: f64 = 0.05;
/// Outer states of the conditional maximal-inequality check.
pub const CONDITIONAL_DOOB_OUTER: usize = 100;
/// States probed by the Azéma ratio check (doubled for the counterexample).
pub const AZEMA_STATES: usize = 5;
/// Outer replicas per checkpoint for the additive check.
pub const ADDITIVE_REPLICAS: usize = 3;
/// Per-path CSV reports are capped at this many rows; summary metrics always
/// use the full batch.
pub const CSV_ROW_CAP: usize = 10_000;

const STATE_SALT: u64 = 0xa7e;
const ADDITIVE_SALT: u64 = 0xadd17;

/// The verification checks the runner knows how to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Doob,
    RhoIdentity,
    Azema,
    AzemaBeforeRho,
    ConditionalDoob,
    Decomposition,
    DUniform,
    Hedge,
    Kardaras,
    Additive,
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Doob => "doob",
            CheckKind::RhoIdentity => "rho-identity",
            CheckKind::Azema => "azema",
            CheckKind::AzemaBeforeRho => "azema-before-rho",
            CheckKind::ConditionalDoob => "conditional-doob",
            CheckKind::Decomposition => "decomposition",
            CheckKind::DUniform => "d-uniform",
            CheckKind::Hedge => "hedge",
            CheckKind::Kardaras => "kardaras",
            CheckKind::Additive => "additive",
        }
    }

    /// Checks whose statement only holds for max-continuous models.
    fn requires_max_continuous(&self) -> bool {
        matches!(
            self,
            CheckKind::RhoIdentity
                | CheckKind::Decomposition
                | CheckKind::DUniform
                | CheckKind::Additive
        )
    }

    fn uses_nested_estimation(&self) -> bool {
        matches!(
            self,
            CheckKind::Azema
                | CheckKind::AzemaBeforeRho
                | CheckKind::ConditionalDoob
                | CheckKind::Additive
        )
    }
}

fn default_strikes() -> Vec<f64> {
    vec![2.0, 5.0, 10.0]
}

fn default_checkpoints() -> Vec<f64> {
    vec![0.5]
}

fn default_n_inner() -> usize {
    2000
}

fn default_alpha() -> f64 {
    0.01
}

fn default_output_dir() -> String {
    "out".into()
}

/// One experiment: a model, a batch size, a seed, and the checks to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub n_paths: usize,
    pub master_seed: u64,
    pub checks: Vec<CheckKind>,
    #[serde(default = "default_strikes")]
    pub strikes: Vec<f64>,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<f64>,
    #[serde(default = "default_n_inner")]
    pub n_inner: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be >= 1".into()));
        }
        if self.checks.is_empty() {
            return Err(Error::Config("checks must name at least one check".into()));
        }
        for x in &self.strikes {
            if !(*x > 1.0) {
                return Err(Error::Config(format!(
                    "strikes must all lie in (1, inf); offending entry {x}"
                )));
            }
        }
        for t in &self.checkpoints {
            if !(*t > 0.0) {
                return Err(Error::Config(format!(
                    "checkpoints must all be > 0; offending entry {t}"
                )));
            }
        }
        ks_critical(self.alpha).map_err(|_| {
            Error::Config(format!("alpha must be 0.01 or 0.05, got {}", self.alpha))
        })?;
        if self.checks.iter().any(CheckKind::uses_nested_estimation) && self.n_inner < 100 {
            return Err(Error::Config(format!(
                "n_inner must be >= 100 for nested checks, got {}",
                self.n_inner
            )));
        }
        if self.checks.contains(&CheckKind::Additive) && self.n_inner < 1000 {
            return Err(Error::Config(format!(
                "n_inner must be >= 1000 for the additive check, got {}",
                self.n_inner
            )));
        }
        if !self.model.is_max_continuous() {
            if let Some(bad) = self.checks.iter().find(|c| c.requires_max_continuous()) {
                return Err(Error::Config(format!(
                    "check {} applies to max-continuous models only, not {}",
                    bad.name(),
                    self.model.name()
                )));
            }
        }
        Ok(())
    }

    /// The default suite for one model: every applicable check at sizes that
    /// keep the whole three-model suite inside the desk-scale budget.
    pub fn default_for(model: ModelSpec) -> RunConfig {
        let checks = match model {
            ModelSpec::PoissonUp { .. } => vec![
                CheckKind::Doob,
                CheckKind::Azema,
                CheckKind::AzemaBeforeRho,
                CheckKind::ConditionalDoob,
                CheckKind::Hedge,
                CheckKind::Kardaras,
            ],
            _ => vec![
                CheckKind::Doob,
                CheckKind::RhoIdentity,
                CheckKind::Azema,
                CheckKind::AzemaBeforeRho,
                CheckKind::ConditionalDoob,
                CheckKind::Decomposition,
                CheckKind::DUniform,
                CheckKind::Hedge,
                CheckKind::Kardaras,
                CheckKind::Additive,
            ],
        };
        let (n_paths, n_inner) = match model {
            ModelSpec::ContinuousExp { .. } => (20_000, 1000),
            _ => (200_000, 2000),
        };
        let strikes = match model {
            ModelSpec::PoissonUp { .. } => vec![2.0, 3.0, 5.0],
            _ => default_strikes(),
        };
        RunConfig {
            model,
            n_paths,
            master_seed: 42,
            checks,
            strikes,
            checkpoints: default_checkpoints(),
            n_inner,
            alpha: default_alpha(),
            output_dir: default_output_dir(),
        }
    }

    /// The three default experiments.
    pub fn default_suite() -> Vec<RunConfig> {
        vec![
            RunConfig::default_for(ModelSpec::PoissonDeath { lambda: 1.0 }),
            RunConfig::default_for(ModelSpec::ContinuousExp {
                sigma: 1.0,
                dt: 0.01,
                stop_gap_c: 9.0,
                bridge_max: true,
            }),
            RunConfig::default_for(ModelSpec::PoissonUp { lambda: 1.0, stop_gap_c: 9.0 }),
        ]
    }
}

/// One verdict row of the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub metric: String,
    pub value: f64,
    pub target: String,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    fn new(
        check: CheckKind,
        metric: impl Into<String>,
        value: f64,
        target: impl Into<String>,
        tolerance: f64,
        pass: bool,
    ) -> CheckRow {
        CheckRow {
            name: check.name().into(),
            metric: metric.into(),
            value,
            target: target.into(),
            tolerance,
            pass,
        }
    }

    fn reported(check: CheckKind, metric: impl Into<String>, value: f64) -> CheckRow {
        CheckRow::new(check, metric, value, "reported", 0.0, true)
    }
}

/// Deterministic run summary; the exit status is a pure function of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub model: ModelSpec,
    pub n_paths: usize,
    pub seed: u64,
    pub checks: Vec<CheckRow>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|row| row.pass)
    }
}

/// Everything a run produces: the summary, the mirrored table (which also
/// carries the wall time), and the files written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: Summary,
    pub table: String,
    pub wall_time_s: f64,
    pub files: Vec<PathBuf>,
}

/// Per-path digest shared by all path-based checks; one simulation pass
/// powers the whole run.
struct PathStats {
    rec: MaxRecord,
    kardaras: bool,
    jump_count: usize,
    jumps_below_sup: bool,
    hedges: Vec<HedgeResult>,
    ratio_before_rho: Option<f64>,
    state_before_rho: Option<MarkovState>,
    d0: f64,
    d_monotone: bool,
    ld_ratio_err: f64,
    stieltjes_rel_err: f64,
    stieltjes_vs_closed: f64,
}

fn digest_path(
    index: u64,
    path: &CadlagPath,
    config: &RunConfig,
    max_continuous: bool,
) -> Result<PathStats> {
    let rec = max_record(path)?;
    let sup = path.running_sup();
    let kardaras = crate::models::kardaras_condition(path, 0.0);
    let jumps = path.jump_list();
    let jumps_below_sup = path
        .samples()
        .iter()
        .zip(sup.samples())
        .skip(1)
        .all(|(s, m)| !s.is_jump() || s.left < m.left);

    let hedges =
        config.strikes.iter().map(|&x| super_replicate(path, x)).collect::<Result<Vec<_>>>()?;

    let t_eval = rec.rho_right - BEFORE_RHO_EPS;
    let mut ratio_before_rho = None;
    let mut state_before_rho = None;
    if !rec.rho_at_origin && t_eval >= 0.0 {
        let current = path.value_at(t_eval)?;
        let runsup = sup.value_at(path, t_eval)?;
        ratio_before_rho = Some(current / runsup);
        if (index as usize) < CSV_ROW_CAP.min(100) {
            state_before_rho = Some(MarkovState {
                model: config.model,
                t: t_eval,
                current,
                runsup,
                alive: current > 0.0,
            });
        }
    }

    // Decomposition digests are only meaningful (and only checked) for
    // max-continuous models.
    let (mut d0, mut d_monotone, mut ld_ratio_err) = (1.0f64, true, 0.0f64);
    let (mut stieltjes_rel_err, mut stieltjes_vs_closed) = (0.0f64, 0.0f64);
    if max_continuous {
        let d = d_process(path)?;
        d0 = d[0].1;
        d_monotone = d.windows(2).all(|w| w[1].1 <= w[0].1);
        for ((s, m), &(_, dv)) in path.samples().iter().zip(sup.samples()).zip(&d) {
            let err = (s.right * dv - s.right / m.right).abs();
            ld_ratio_err = ld_ratio_err.max(err);
        }
        let a = stieltjes_a(path)?;
        let a_end = a.last().unwrap().1;
        let target = sup.samples().last().unwrap().right.ln();
        stieltjes_rel_err = (a_end - target).abs() / (1.0 + target.abs());
        if let ModelSpec::PoissonDeath { lambda } = config.model {
            let comp = compensator_poisson_death(path, lambda)?;
            let closed = comp.a_at(path.horizon());
            stieltjes_vs_closed = (a_end - closed).abs() / (1.0 + closed.abs());
        }
    }

    Ok(PathStats {
        rec,
        kardaras,
        jump_count: jumps.len(),
        jumps_below_sup,
        hedges,
        ratio_before_rho,
        state_before_rho,
        d0,
        d_monotone,
        ld_ratio_err,
        stieltjes_rel_err,
        stieltjes_vs_closed,
    })
}

fn fmt_strike(x: f64) -> String {
    if x == x.trunc() {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// Time-axis tolerance for rho comparisons: exact on the jump models, one
/// grid step on grid models.
fn rho_time_tol(model: &ModelSpec) -> f64 {
    match model {
        ModelSpec::ContinuousExp { dt, .. } => *dt,
        _ => 0.0,
    }
}

/// Value tolerance for "touches the supremum" comparisons.
fn rho_value_rel_tol(model: &ModelSpec) -> f64 {
    match model {
        ModelSpec::ContinuousExp { .. } => 1e-12,
        _ => 0.0,
    }
}

struct CheckContext<'a> {
    config: &'a RunConfig,
    stats: &'a [PathStats],
    rows: Vec<CheckRow>,
    csv_files: Vec<(String, String)>,
}

impl CheckContext<'_> {
    fn push(&mut self, row: CheckRow) {
        self.rows.push(row);
    }

    fn csv(&mut self, name: &str, content: String) {
        self.csv_files.push((name.to_string(), content));
    }
}

fn check_doob(ctx: &mut CheckContext) -> Result<()> {
    let config = ctx.config;
    let bias = config.model.truncation_bias();
    let n = ctx.stats.len() as f64;
    if config.model.is_max_continuous() {
        let samples: Vec<f64> = ctx.stats.iter().map(|s| 1.0 / s.rec.l_star_inf).collect();
        let verdict = ks_uniform_with_bias(&samples, config.alpha, bias)?;
        ctx.push(CheckRow::new(
            CheckKind::Doob,
            "ks_d_inv_lstar",
            verdict.d_stat,
            format!("<{:.6}", verdict.threshold),
            verdict.threshold,
            verdict.pass,
        ));
        for &x in &config.strikes {
            let p = ctx.stats.iter().filter(|s| s.rec.l_star_inf >= x).count() as f64 / n;
            let se = (p * (1.0 - p) / n).sqrt();
            let tol = 3.0 * se + bias;
            ctx.push(CheckRow::new(
                CheckKind::Doob,
                format!("tail_p_ge_x{}", fmt_strike(x)),
                p,
                format!("={:.6}", 1.0 / x),
                tol,
                (p - 1.0 / x).abs() <= tol,
            ));
        }
    } else {
        for &x in &config.strikes {
            let p = ctx.stats.iter().filter(|s| s.rec.l_star_inf >= x).count() as f64 / n;
            let se = (p * (1.0 - p) / n).sqrt();
            ctx.push(CheckRow::new(
                CheckKind::Doob,
                format!("tail_bound_x{}", fmt_strike(x)),
                p + 3.0 * se,
                format!("<={:.6}", 1.0 / x),
                0.0,
                p + 3.0 * se <= 1.0 / x,
            ));
            // The strict deficiency itself: measured, not asserted.
            ctx.push(CheckRow::reported(
                CheckKind::Doob,
                format!("tail_gap_x{}", fmt_strike(x)),
                1.0 / x - p,
            ));
        }
    }
    Ok(())
}

fn check_rho_identity(ctx: &mut CheckContext) -> Result<()> {
    let time_tol = rho_time_tol(&ctx.config.model);
    let value_tol = rho_value_rel_tol(&ctx.config.model);
    let mut used = 0usize;
    let mut identity_ok = 0usize;
    let mut value_ok = 0usize;
    let mut excluded = 0usize;
    for s in ctx.stats {
        if s.rec.rho_at_origin {
            excluded += 1;
            continue;
        }
        used += 1;
        if (s.rec.rho_left - s.rec.rho_right).abs() <= time_tol {
            identity_ok += 1;
        }
        if (s.rec.left_at_rho - s.rec.l_star_inf).abs() <= value_tol * s.rec.l_star_inf {
            value_ok += 1;
        }
    }
    let frac = |k: usize| if used == 0 { 0.0 } else { k as f64 / used as f64 };
    ctx.push(CheckRow::new(
        CheckKind::RhoIdentity,
        "frac_rho_left_eq_rho_right",
        frac(identity_ok),
        "=1",
        0.0,
        identity_ok == used && used > 0,
    ));
    ctx.push(CheckRow::new(
        CheckKind::RhoIdentity,
        "frac_left_at_rho_eq_lstar",
        frac(value_ok),
        "=1",
        0.0,
        value_ok == used && used > 0,
    ));
    ctx.push(CheckRow::reported(CheckKind::RhoIdentity, "excluded_paths", excluded as f64));

    let mut csv = String::from(
        "rho_left,rho_right,l_star_inf,left_at_rho,right_at_rho,jumped_at_max,truncated_before_jump,rho_at_origin\n",
    );
    for s in ctx.stats.iter().take(CSV_ROW_CAP) {
        let r = &s.rec;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.rho_left,
            r.rho_right,
            r.l_star_inf,
            r.left_at_rho,
            r.right_at_rho,
            r.jumped_at_max,
            r.truncated_before_jump,
            r.rho_at_origin
        );
    }
    ctx.csv("maxrecords.csv", csv);
    Ok(())
}

fn check_d_uniform(ctx: &mut CheckContext) -> Result<()> {
    let config = ctx.config;
    let recs: Vec<MaxRecord> = ctx.stats.iter().map(|s| s.rec).collect();
    let samples = crate::decomposition::d_at_rho_samples(&recs)?;
    let verdict = ks_uniform_with_bias(&samples, config.alpha, config.model.truncation_bias())?;
    ctx.push(CheckRow::new(
        CheckKind::DUniform,
        "ks_d_d_rho",
        verdict.d_stat,
        format!("<{:.6}", verdict.threshold),
        verdict.threshold,
        verdict.pass,
    ));
    let mut csv = String::from("d_rho\n");
    for v in samples.iter().take(CSV_ROW_CAP) {
        let _ = writeln!(csv, "{v}");
    }
    ctx.csv("d_rho.csv", csv);
    Ok(())
}

fn check_decomposition(ctx: &mut CheckContext, first_path: &CadlagPath) -> Result<()> {
    let config = ctx.config;
    let n = ctx.stats.len();
    let d0_ok = ctx.stats.iter().filter(|s| s.d0 == 1.0).count();
    let mono_ok = ctx.stats.iter().filter(|s| s.d_monotone).count();
    let ld_err = ctx.stats.iter().fold(0.0f64, |m, s| m.max(s.ld_ratio_err));
    let stieltjes_err = ctx.stats.iter().fold(0.0f64, |m, s| m.max(s.stieltjes_rel_err));
    ctx.push(CheckRow::new(
        CheckKind::Decomposition,
        "frac_d0_eq_1",
        d0_ok as f64 / n as f64,
        "=1",
        0.0,
        d0_ok == n,
    ));
    ctx.push(CheckRow::new(
        CheckKind::Decomposition,
        "frac_d_nonincreasing",
        mono_ok as f64 / n as f64,
        "=1",
        0.0,
        mono_ok == n,
    ));
    ctx.push(CheckRow::new(
        CheckKind::Decomposition,
        "max_ld_vs_ratio_err",
        ld_err,
        "<=1e-14",
        1e-14,
        ld_err <= 1e-14,
    ));
    let stieltjes_tol = match config.model {
        ModelSpec::PoissonDeath { .. } => 0.0,
        _ => 1e-6,
    };
    ctx.push(CheckRow::new(
        CheckKind::Decomposition,
        "max_stieltjes_vs_log_lstar",
        stieltjes_err,
        format!("<={stieltjes_tol:e}"),
        stieltjes_tol,
        stieltjes_err <= stieltjes_tol,
    ));
    if matches!(config.model, ModelSpec::PoissonDeath { .. }) {
        let closed_err = ctx.stats.iter().fold(0.0f64, |m, s| m.max(s.stieltjes_vs_closed));
        ctx.push(CheckRow::new(
            CheckKind::Decomposition,
            "max_stieltjes_vs_closed_form",
            closed_err,
            "<=1e-12",
            1e-12,
            closed_err <= 1e-12,
        ));
    }

    // Mean of log L*_inf: the additive decomposition at time 0 targets 1.
    let logs: Vec<f64> = ctx.stats.iter().map(|s| s.rec.l_star_inf.ln()).collect();
    let (mean, hw) = mean_ci(&logs, 3.0)?;
    let tol = hw + 2.0 * config.model.truncation_bias();
    ctx.push(CheckRow::new(
        CheckKind::Decomposition,
        "mean_log_lstar",
        mean,
        "=1",
        tol,
        (mean - 1.0).abs() <= tol,
    ));

    // Full table for the first path of the batch.
    let mut csv = String::from("t,L,Lstar,D,a_stieltjes,a_closed_form\n");
    let record = crate::decomposition::decomposition_record(first_path)?;
    let closed = match config.model {
        ModelSpec::PoissonDeath { lambda } => {
            Some(compensator_poisson_death(first_path, lambda)?)
        }
        _ => None,
    };
    for row in record.rows.iter().take(CSV_ROW_CAP) {
        let closed_cell = closed.map_or(String::new(), |c| c.a_at(row.t).to_string());
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            row.t, row.l, row.lstar, row.d, row.a_stieltjes, closed_cell
        );
    }
    ctx.csv("decomposition.csv", csv);
    Ok(())
}

fn check_hedge(ctx: &mut CheckContext) -> Result<()> {
    let config = ctx.config;
    let mut min_gap = f64::INFINITY;
    let mut max_abs_gap = 0.0f64;
    for s in ctx.stats {
        for h in &s.hedges {
            min_gap = min_gap.min(h.gap);
            max_abs_gap = max_abs_gap.max(h.gap.abs());
        }
    }
    ctx.push(CheckRow::new(
        CheckKind::Hedge,
        "min_pathwise_gap",
        min_gap,
        ">=-1e-9",
        1e-9,
        min_gap >= -1e-9,
    ));
    if config.model.is_max_continuous() {
        ctx.push(CheckRow::new(
            CheckKind::Hedge,
            "max_abs_gap",
            max_abs_gap,
            "<=1e-9",
            1e-9,
            max_abs_gap <= 1e-9,
        ));
    }
    let n = ctx.stats.len() as f64;
    let bias = config.model.truncation_bias();
    for (k, &x) in config.strikes.iter().enumerate() {
        let p = ctx.stats.iter().filter(|s| s.hedges[k].payoff_ge).count() as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        ctx.push(CheckRow::new(
            CheckKind::Hedge,
            format!("price_bounded_by_capital_x{}", fmt_strike(x)),
            p,
            format!("<={:.6}", 1.0 / x),
            3.0 * se + bias,
            p <= 1.0 / x + 3.0 * se + bias,
        ));
    }
    let mut csv = String::from("x,tau_x,payoff_ge,payoff_gt,portfolio,gap\n");
    let mut rows = 0usize;
    'outer: for s in ctx.stats.iter() {
        for h in &s.hedges {
            if rows >= CSV_ROW_CAP {
                break 'outer;
            }
            rows += 1;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                h.x,
                h.tau_x,
                u8::from(h.payoff_ge),
                u8::from(h.payoff_gt),
                h.portfolio,
                h.gap
            );
        }
    }
    ctx.csv("hedge.csv", csv);
    Ok(())
}

fn check_kardaras(ctx: &mut CheckContext) -> Result<()> {
    // Expected verdict: the death model jumps exactly where it touches its
    // supremum; the other two never jump there.
    let expected = !matches!(ctx.config.model, ModelSpec::PoissonDeath { .. });
    let ok = ctx.stats.iter().filter(|s| s.kardaras == expected).count();
    let n = ctx.stats.len();
    ctx.push(CheckRow::new(
        CheckKind::Kardaras,
        if expected { "frac_condition_true" } else { "frac_condition_false" },
        ok as f64 / n as f64,
        "=1",
        0.0,
        ok == n,
    ));
    // Structural side fact for the counterexample: jumps happen strictly
    // below the supremum's left limit on every path that jumps at all.
    if !ctx.config.model.is_max_continuous() {
        let jumpy: Vec<_> = ctx.stats.iter().filter(|s| s.jump_count > 0).collect();
        let below = jumpy.iter().filter(|s| s.jumps_below_sup).count();
        ctx.push(CheckRow::new(
            CheckKind::Kardaras,
            "frac_jumps_below_sup",
            if jumpy.is_empty() { 1.0 } else { below as f64 / jumpy.len() as f64 },
            "=1",
            0.0,
            below == jumpy.len(),
        ));
    }
    Ok(())
}

fn state_csv_header() -> String {
    "t,current,runsup,z_hat,stderr,z_ratio,violation_flag\n".to_string()
}

fn check_azema(ctx: &mut CheckContext) -> Result<()> {
    let config = ctx.config;
    let n_states =
        if config.model.is_max_continuous() { AZEMA_STATES } else { 2 * AZEMA_STATES };
    let estimates: Vec<crate::azema::AzemaEstimate> = (0..n_states as u64)
        .into_par_iter()
        .map(|j| {
            let t = config.checkpoints[(j as usize) % config.checkpoints.len()];
            let state = state_at(
                &config.model,
                t,
                Seed::new(Seed::derive_master(config.master_seed, STATE_SALT), j),
            )?;
            nested_z_estimate(
                &state,
                config.n_inner,
                Seed::new(Seed::derive_master(config.master_seed, STATE_SALT ^ 1), j),
            )
        })
        .collect::<Result<_>>()?;

    let mut csv = state_csv_header();
    for e in &estimates {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            e.state.t,
            e.state.current,
            e.state.runsup,
            e.z_hat,
            e.stderr,
            e.z_ratio,
            u8::from(e.z_hat > e.z_ratio + 3.0 * e.stderr)
        );
    }
    ctx.csv("azema_states.csv", csv);

    if config.model.is_max_continuous() {
        let ok = estimates
            .iter()
            .filter(|e| (e.z_hat - e.z_ratio).abs() <= 3.0 * e.stderr + e.state.model.truncation_bias())
            .count();
        ctx.push(CheckRow::new(
            CheckKind::Azema,
            "states_ratio_within_3se",
            ok as f64,
            format!("={n_states}"),
            0.0,
            ok == n_states,
        ));
        if matches!(config.model, ModelSpec::PoissonDeath { .. }) {
            let exact = estimates
                .iter()
                .filter(|e| e.z_hat == if e.state.alive { 1.0 } else { 0.0 })
                .count();
            ctx.push(CheckRow::new(
                CheckKind::Azema,
                "states_z_matches_alive_exactly",
                exact as f64,
                format!("={n_states}"),
                0.0,
                exact == n_states,
            ));
        }
    } else {
        let ok = estimates.iter().filter(|e| e.z_hat <= e.z_ratio + 3.0 * e.stderr).count();
        ctx.push(CheckRow::new(
            CheckKind::Azema,
            "states_obey_chin_inequality",
            ok as f64,
            format!("={n_states}"),
            0.0,
            ok == n_states,
        ));
    }
    Ok(())
}

fn check_azema_before_rho(ctx: &mut CheckContext) -> Result<()> {
    let config = ctx.config;
    let used: Vec<f64> = ctx.stats.iter().filter_map(|s| s.ratio_before_rho).collect();
    let skipped = ctx.stats.len() - used.len();
    if used.is_empty() {
        return Err(Error::Structural("every path was skipped by the before-rho probe".into()));
    }
    let mean_ratio = used.iter().sum::<f64>() / used.len() as f64;
    let states: Vec<MarkovState> =
        ctx.stats.iter().filter_map(|s| s.state_before_rho).collect();
    let nested: Vec<f64> = states
        .par_iter()
        .enumerate()
        .map(|(j, st)| {
            let seed =
                Seed::new(Seed::derive_master(config.master_seed, STATE_SALT ^ 2), j as u64);
            Ok(nested_z_estimate(st, config.n_inner, seed)?.z_hat)
        })
        .collect::<Result<_>>()?;
    let mean_z = nested.iter().sum::<f64>() / nested.len().max(1) as f64;

    match config.model {
        ModelSpec::PoissonDeath { .. } => {
            let ones = used.iter().filter(|&&r| r == 1.0).count();
            ctx.push(CheckRow::new(
                CheckKind::AzemaBeforeRho,
                "frac_ratio_one_before_rho",
                ones as f64 / used.len() as f64,
                "=1",
                0.0,
                ones == used.len(),
            ));
            let z_ones = nested.iter().filter(|&&z| z == 1.0).count();
            ctx.push(CheckRow::new(
                CheckKind::AzemaBeforeRho,
                "frac_nested_z_one_before_rho",
                z_ones as f64 / nested.len().max(1) as f64,
                "=1",
                0.0,
                z_ones == nested.len() && !nested.is_empty(),
            ));
        }
        ModelSpec::ContinuousExp { .. } => {
            // eps -> 0 behavior is reported, not asserted, on the grid model.
            ctx.push(CheckRow::reported(
                CheckKind::AzemaBeforeRho,
                "mean_ratio_before_rho",
                mean_ratio,
            ));
            ctx.push(CheckRow::reported(
                CheckKind::AzemaBeforeRho,
                "mean_nested_z_before_rho",
                mean_z,
            ));
        }
        ModelSpec::PoissonUp { .. } => {
            let below = used.iter().filter(|&&r| r < 1.0).count();
            ctx.push(CheckRow::new(
                CheckKind::AzemaBeforeRho,
                "frac_ratio_below_one",
                below as f64 / used.len() as f64,
                "=1",
                0.0,
                below == used.len(),
            ));
            ctx.push(CheckRow::reported(CheckKind::AzemaBeforeRho, "mean_ratio_before_rho", mean_ratio));
        }
    }
    ctx.push(CheckRow::reported(CheckKind::AzemaBeforeRho, "skipped_paths", skipped as f64));
    Ok(())
}

fn check_conditional_doob(ctx: &mut CheckContext) -> Result<()> {
    let config = ctx.config;
    let mut csv = state_csv_header();
    for (k, &t) in config.checkpoints.iter().enumerate() {
        let report = conditional_doob_check(
            &config.model,
            t,
            CONDITIONAL_DOOB_OUTER,
            config.n_inner,
            Seed::derive_master(config.master_seed, 0xcd00 + k as u64),
        )?;
        for row in &report.rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                row.t,
                row.current,
                row.runsup,
                row.z_hat,
                row.stderr,
                row.z_ratio,
                u8::from(row.violation)
            );
        }
        let budget = report.state_budget();
        ctx.push(CheckRow::new(
            CheckKind::ConditionalDoob,
            format!("violations_t{t}"),
            report.violations as f64,
            format!("<={budget}"),
            budget as f64,
            report.violations_ok(),
        ));
        if config.model.is_max_continuous() {
            let frac = report.equality_within_3se as f64 / report.n_outer as f64;
            ctx.push(CheckRow::new(
                CheckKind::ConditionalDoob,
                format!("equality_frac_t{t}"),
                frac,
                ">=0.99",
                0.0,
                report.equality_ok(),
            ));
            let strict = report.strict_equality_within_3se as f64 / report.n_outer as f64;
            ctx.push(CheckRow::new(
                CheckKind::ConditionalDoob,
                format!("strict_equality_frac_t{t}"),
                strict,
                ">=0.99",
                0.0,
                report.strict_equality_ok(),
            ));
        }
    }
    ctx.csv("conditional_doob.csv", csv);
    Ok(())
}

fn check_additive(ctx: &mut CheckContext) -> Result<()> {
    let config = ctx.config;
    for &t in &config.checkpoints {
        let mut passes = 0usize;
        for r in 0..ADDITIVE_REPLICAS as u64 {
            let report = crate::azema::additive_check(
                &config.model,
                t,
                config.n_inner,
                Seed::new(Seed::derive_master(config.master_seed, ADDITIVE_SALT), r),
            )?;
            passes += usize::from(report.pass);
        }
        ctx.push(CheckRow::new(
            CheckKind::Additive,
            format!("states_within_3se_t{t}"),
            passes as f64,
            format!("={ADDITIVE_REPLICAS}"),
            0.0,
            passes == ADDITIVE_REPLICAS,
        ));
    }
    Ok(())
}

/// Execute a config. `jobs` pins the rayon pool size (None = library
/// default); it cannot change any result, only the wall time.
pub fn run(config: &RunConfig, jobs: Option<usize>, out_dir: &Path) -> Result<RunOutput> {
    config.validate()?;
    let started = std::time::Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let (summary, csv_files) = pool.install(|| run_checks(config))?;

    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let json = serde_json::to_string_pretty(&summary)? + "\n";
    let summary_path = out_dir.join("summary.json");
    fs::write(&summary_path, &json)?;
    files.push(summary_path);
    for (name, content) in &csv_files {
        let path = out_dir.join(name);
        fs::write(&path, content)?;
        files.push(path);
    }
    let wall_time_s = started.elapsed().as_secs_f64();
    let table = render_table(&summary, wall_time_s);
    Ok(RunOutput { summary, table, wall_time_s, files })
}

fn run_checks(config: &RunConfig) -> Result<(Summary, Vec<(String, String)>)> {
    let max_continuous = config.model.is_max_continuous();
    // One simulation pass feeds every path-based check; the first path is
    // kept for the per-sample decomposition table.
    let digests = batch_map(&config.model, config.n_paths, config.master_seed, |i, path| {
        let digest = digest_path(i, path, config, max_continuous);
        let keep = (i == 0).then(|| path.clone());
        (digest, keep)
    })?;
    let mut stats: Vec<PathStats> = Vec::with_capacity(digests.len());
    let mut first_path: Option<CadlagPath> = None;
    for (digest, keep) in digests {
        if let Some(p) = keep {
            first_path = Some(p);
        }
        stats.push(digest?);
    }
    let first_path = first_path.expect("n_paths >= 1");

    let mut ctx = CheckContext { config, stats: &stats, rows: Vec::new(), csv_files: Vec::new() };
    for check in &config.checks {
        match check {
            CheckKind::Doob => check_doob(&mut ctx)?,
            CheckKind::RhoIdentity => check_rho_identity(&mut ctx)?,
            CheckKind::Azema => check_azema(&mut ctx)?,
            CheckKind::AzemaBeforeRho => check_azema_before_rho(&mut ctx)?,
            CheckKind::ConditionalDoob => check_conditional_doob(&mut ctx)?,
            CheckKind::Decomposition => check_decomposition(&mut ctx, &first_path)?,
            CheckKind::DUniform => check_d_uniform(&mut ctx)?,
            CheckKind::Hedge => check_hedge(&mut ctx)?,
            CheckKind::Kardaras => check_kardaras(&mut ctx)?,
            CheckKind::Additive => check_additive(&mut ctx)?,
        }
    }
    let summary = Summary {
        model: config.model,
        n_paths: config.n_paths,
        seed: config.master_seed,
        checks: ctx.rows,
    };
    Ok((summary, ctx.csv_files))
}

/// Human-readable mirror of the summary; carries the wall time, which the
/// summary JSON deliberately omits to stay byte-reproducible.
pub fn render_table(summary: &Summary, wall_time_s: f64) -> String {
    let mut out = format!(
        "model={} n_paths={} seed={}\n",
        summary.model.name(),
        summary.n_paths,
        summary.seed
    );
    let _ = writeln!(
        out,
        "{:<18} {:<34} {:>14}  {:<14} {:>10}  pass",
        "check", "metric", "value", "target", "tolerance"
    );
    for row in &summary.checks {
        let _ = writeln!(
            out,
            "{:<18} {:<34} {:>14.8} {:<15} {:>10.3e}  {}",
            row.name,
            row.metric,
            row.value,
            row.target,
            row.tolerance,
            if row.pass { "yes" } else { "NO" }
        );
    }
    let _ = writeln!(out, "wall_time_s={wall_time_s:.3}");
    out
}

/// Serialize results exactly as `run` writes them: the deterministic summary
/// JSON and the mirrored table.
pub fn emit_report(summary: &Summary, wall_time_s: f64) -> Result<(String, String)> {
    if summary.checks.is_empty() {
        return Err(Error::Structural("no checks were executed".into()));
    }
    let json = serde_json::to_string_pretty(summary)? + "\n";
    Ok((json, render_table(summary, wall_time_s)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_and_validates() {
        let text = r#"{
            "model": {"variant": "poisson-death", "lambda": 1.0},
            "n_paths": 1000,
            "master_seed": 42,
            "checks": ["doob", "d-uniform"]
        }"#;
        let config = RunConfig::from_json(text).unwrap();
        assert_eq!(config.strikes, vec![2.0, 5.0, 10.0]);
        assert_eq!(config.alpha, 0.01);
        assert_eq!(config.checks.len(), 2);
    }

    #[test]
    fn config_rejects_bad_strike() {
        let text = r#"{
            "model": {"variant": "poisson-death", "lambda": 1.0},
            "n_paths": 1000,
            "master_seed": 42,
            "checks": ["doob"],
            "strikes": [0.5]
        }"#;
        let err = RunConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("strikes"), "{err}");
        assert!(err.to_string().contains("0.5"), "{err}");
    }

    #[test]
    fn config_rejects_unknown_check_and_model() {
        let text = r#"{
            "model": {"variant": "poisson-death", "lambda": 1.0},
            "n_paths": 1000,
            "master_seed": 42,
            "checks": ["doobie"]
        }"#;
        let err = RunConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("doobie"), "{err}");
        let text = r#"{
            "model": {"variant": "brownian", "lambda": 1.0},
            "n_paths": 1000,
            "master_seed": 42,
            "checks": ["doob"]
        }"#;
        let err = RunConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("brownian"), "{err}");
    }

    #[test]
    fn config_rejects_inapplicable_checks_for_counterexample() {
        let text = r#"{
            "model": {"variant": "poisson-up", "lambda": 1.0, "stop_gap_c": 9.0},
            "n_paths": 1000,
            "master_seed": 42,
            "checks": ["d-uniform"]
        }"#;
        let err = RunConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("d-uniform"), "{err}");
    }

    #[test]
    fn default_suite_configs_validate() {
        for config in RunConfig::default_suite() {
            config.validate().unwrap();
        }
    }

    #[test]
    fn emit_report_rejects_empty_results() {
        let summary = Summary {
            model: ModelSpec::PoissonDeath { lambda: 1.0 },
            n_paths: 1,
            seed: 0,
            checks: vec![],
        };
        assert!(emit_report(&summary, 0.0).is_err());
    }

    #[test]
    fn small_run_produces_deterministic_summary() {
        let mut config = RunConfig::default_for(ModelSpec::PoissonDeath { lambda: 1.0 });
        config.n_paths = 2000;
        config.n_inner = 1000;
        config.checks = vec![CheckKind::Doob, CheckKind::Hedge, CheckKind::Kardaras];
        let dir_a = std::env::temp_dir().join("maxmart_report_test_a");
        let dir_b = std::env::temp_dir().join("maxmart_report_test_b");
        let out_a = run(&config, Some(1), &dir_a).unwrap();
        let out_b = run(&config, Some(3), &dir_b).unwrap();
        assert_eq!(out_a.summary, out_b.summary);
        let json_a = fs::read(dir_a.join("summary.json")).unwrap();
        let json_b = fs::read(dir_b.join("summary.json")).unwrap();
        assert_eq!(json_a, json_b);
        let _ = fs::remove_dir_all(&dir_a);
        let _ = fs::remove_dir_all(&dir_b);
    }
}
