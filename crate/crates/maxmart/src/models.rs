//! Generators for the three canonical processes, with reproducible seeding
//! and a per-path diagnostic for the no-jump-at-the-maximum condition.
//!
//! * `PoissonDeath` — `L_t = e^{lambda t}` while a rate-`lambda` exponential
//!   clock is alive, then 0. Exact: two samples, one down jump, no truncation.
//! * `ContinuousExp` — `log L_t = sigma W_t - sigma^2 t / 2` sampled with
//!   exact Gaussian increments on a grid; optional per-step Brownian-bridge
//!   maxima make the recorded supremum exact in distribution at any step
//!   size. Stopped once `log L <= log L* - C`, which certifies that a future
//!   new maximum has conditional probability at most `e^{-C}`.
//! * `PoissonUp` — the counterexample `S_t = e^{-lambda t} 2^{N_t}`: doubles
//!   at Poisson jump times, decays in between, and its running supremum jumps.
//!   Stopped exactly when `S = e^{-C} S*` between jumps.
//!
//! All randomness flows through [`Seed`]; path `i` of a batch uses stream
//! `i`, so batches are reproducible bit-for-bit regardless of the
//! parallelism degree.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::rng::Seed;

use crate::paths::{CadlagPath, Interp, Sample, StopCertificate};
use crate::{Error, Result};

/// Minimum admissible stop gap; `e^{-5} ~ 6.7e-3` is the largest truncation
/// bias the statistical tolerances can absorb.
pub const MIN_STOP_GAP: f64 = 5.0;

/// Default stop gap: bias `e^{-9} ~ 1.23e-4`, below every tolerance used by
/// the verification suites.
pub const DEFAULT_STOP_GAP: f64 = 9.0;

/// Parameters of one of the three path generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", deny_unknown_fields)]
pub enum ModelSpec {
    #[serde(rename = "poisson-death")]
    PoissonDeath { lambda: f64 },
    #[serde(rename = "continuous-exp")]
    ContinuousExp { sigma: f64, dt: f64, stop_gap_c: f64, bridge_max: bool },
    #[serde(rename = "poisson-up")]
    PoissonUp { lambda: f64, stop_gap_c: f64 },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::PoissonDeath { lambda } => {
                if !(lambda > 0.0) {
                    return Err(Error::Parameter(format!("lambda must be > 0, got {lambda}")));
                }
            }
            ModelSpec::ContinuousExp { sigma, dt, stop_gap_c, .. } => {
                if !(sigma > 0.0) {
                    return Err(Error::Parameter(format!("sigma must be > 0, got {sigma}")));
                }
                if !(dt > 0.0) {
                    return Err(Error::Parameter(format!("dt must be > 0, got {dt}")));
                }
                check_stop_gap(stop_gap_c)?;
            }
            ModelSpec::PoissonUp { lambda, stop_gap_c } => {
                if !(lambda > 0.0) {
                    return Err(Error::Parameter(format!("lambda must be > 0, got {lambda}")));
                }
                check_stop_gap(stop_gap_c)?;
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::PoissonDeath { .. } => "poisson-death",
            ModelSpec::ContinuousExp { .. } => "continuous-exp",
            ModelSpec::PoissonUp { .. } => "poisson-up",
        }
    }

    /// Whether the generator produces members of the max-continuous class
    /// (nonnegative, unit start, vanishing, continuous running supremum).
    pub fn is_max_continuous(&self) -> bool {
        !matches!(self, ModelSpec::PoissonUp { .. })
    }

    /// Certified one-sided truncation bias of the recorded supremum.
    pub fn truncation_bias(&self) -> f64 {
        match *self {
            ModelSpec::PoissonDeath { .. } => 0.0,
            ModelSpec::ContinuousExp { stop_gap_c, .. }
            | ModelSpec::PoissonUp { stop_gap_c, .. } => (-stop_gap_c).exp(),
        }
    }
}

fn check_stop_gap(c: f64) -> Result<()> {
    if !(c >= MIN_STOP_GAP) {
        return Err(Error::Parameter(format!("stop gap C must be >= {MIN_STOP_GAP}, got {c}")));
    }
    Ok(())
}

fn exp_draw(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.sample(Open01);
    -u.ln() / rate
}

/// One death path: `e^{lambda t}` on `[0, tau)`, 0 from `tau` on. The path is
/// the stochastic exponential of the compensated single-jump martingale, and
/// its maximum sits at the death time.
pub fn simulate_poisson_death(lambda: f64, seed: Seed) -> Result<CadlagPath> {
    ModelSpec::PoissonDeath { lambda }.validate()?;
    let mut rng = seed.rng();
    let tau = exp_draw(&mut rng, lambda);
    let peak = (lambda * tau).exp();
    CadlagPath::new(
        vec![Sample::continuous(0.0, 1.0), Sample::jump(tau, peak, 0.0)],
        0.0,
        Interp::Exponential,
    )
}

/// Log-scale Brownian-bridge maximum over one step: endpoints `a`, `b`,
/// variance `var`, uniform draw `u`. Inverse of
/// `P[M >= m | a, b] = exp(-2 (m-a)(m-b) / var)` for `m >= max(a, b)`.
pub fn bridge_max_log(a: f64, b: f64, var: f64, u: f64) -> f64 {
    bridge_max_log_from_exp(a, b, var, -u.ln())
}

/// Same sampler fed with a standard exponential draw `e = -ln(u)`; the
/// generators use this form (a ziggurat exponential beats a log).
pub fn bridge_max_log_from_exp(a: f64, b: f64, var: f64, e: f64) -> f64 {
    let d = b - a;
    let m = 0.5 * (a + b + (d * d + 2.0 * var * e).sqrt());
    m.max(a.max(b))
}

/// One continuous exponential-martingale path on a grid of step `dt`,
/// stopped at the first grid time with `log L <= log L* - c`.
pub fn simulate_continuous_exp(
    sigma: f64,
    dt: f64,
    c: f64,
    bridge: bool,
    seed: Seed,
) -> Result<CadlagPath> {
    ModelSpec::ContinuousExp { sigma, dt, stop_gap_c: c, bridge_max: bridge }.validate()?;
    let mut rng = seed.rng();
    let drift = -0.5 * sigma * sigma * dt;
    let step_sd = sigma * dt.sqrt();
    let var = sigma * sigma * dt;

    // Mean stopped length of the reflected gap walk is ~2c/(sigma^2 dt).
    let expect_steps = (2.2 * c / (sigma * sigma * dt)) as usize;
    let mut samples = Vec::with_capacity(expect_steps.clamp(64, 1 << 22));
    samples.push(Sample::continuous(0.0, 1.0));
    let mut refinements =
        bridge.then(|| Vec::with_capacity(expect_steps.clamp(64, 1 << 22)));
    let mut log_l = 0.0f64;
    let mut log_sup = 0.0f64;
    let mut k = 0u64;
    loop {
        k += 1;
        let z: f64 = rng.sample(StandardNormal);
        let log_next = log_l + drift + step_sd * z;
        if let Some(refs) = refinements.as_mut() {
            let e: f64 = rng.sample(Exp1);
            let m = bridge_max_log_from_exp(log_l, log_next, var, e);
            refs.push(m.exp());
            log_sup = log_sup.max(m);
        } else {
            log_sup = log_sup.max(log_next);
        }
        samples.push(Sample::continuous(k as f64 * dt, log_next.exp()));
        log_l = log_next;
        if log_l <= log_sup - c {
            break;
        }
    }
    let mut path = CadlagPath::new(samples, 0.0, Interp::GridSampled)?;
    if let Some(refs) = refinements {
        path = path.with_bridge_max(refs)?;
    }
    Ok(path.with_certificate(StopCertificate::from_gap(c)))
}

/// One counterexample path: exact Poisson jump times, doubling at each jump,
/// exponential decay in between, stopped exactly when `S = e^{-c} S*`.
pub fn simulate_poisson_up(lambda: f64, c: f64, seed: Seed) -> Result<CadlagPath> {
    ModelSpec::PoissonUp { lambda, stop_gap_c: c }.validate()?;
    let mut rng = seed.rng();
    let mut samples = vec![Sample::continuous(0.0, 1.0)];
    let mut t = 0.0f64;
    let mut s = 1.0f64;
    let mut sup = 1.0f64;
    loop {
        let wait = exp_draw(&mut rng, lambda);
        // Decay from s hits the stop boundary e^{-c} sup at t + time_to_stop.
        let time_to_stop = (c + (s / sup).ln()) / lambda;
        if wait < time_to_stop {
            t += wait;
            let left = s * (-lambda * wait).exp();
            let right = 2.0 * left;
            samples.push(Sample::jump(t, left, right));
            s = right;
            sup = sup.max(right);
        } else {
            t += time_to_stop;
            let v = s * (-lambda * time_to_stop).exp();
            samples.push(Sample::continuous(t, v));
            break;
        }
    }
    Ok(CadlagPath::new(samples, 0.0, Interp::Exponential)?
        .with_certificate(StopCertificate::from_gap(c)))
}

/// Dispatch on the model variant.
pub fn simulate(spec: &ModelSpec, seed: Seed) -> Result<CadlagPath> {
    match *spec {
        ModelSpec::PoissonDeath { lambda } => simulate_poisson_death(lambda, seed),
        ModelSpec::ContinuousExp { sigma, dt, stop_gap_c, bridge_max } => {
            simulate_continuous_exp(sigma, dt, stop_gap_c, bridge_max, seed)
        }
        ModelSpec::PoissonUp { lambda, stop_gap_c } => {
            simulate_poisson_up(lambda, stop_gap_c, seed)
        }
    }
}

/// Per-path diagnostic for the condition "no jump on the set where the left
/// limit touches the running supremum's left limit".
pub fn kardaras_condition(path: &CadlagPath, tol: f64) -> bool {
    let sup = path.running_sup();
    for (s, m) in path.samples().iter().zip(sup.samples()).skip(1) {
        if s.is_jump() && (s.left - m.left).abs() <= tol {
            return false;
        }
    }
    true
}

/// `n` independent paths; path `i` uses stream `i` of the master seed, so the
/// result is a pure function of `(spec, n, master_seed)`.
pub fn batch_simulate(spec: &ModelSpec, n: usize, master_seed: u64) -> Result<Vec<CadlagPath>> {
    batch_map(spec, n, master_seed, |_, path| path.clone())
}

/// Streaming variant of [`batch_simulate`]: maps each freshly generated path
/// through `f` and drops it, keeping memory flat for large grids. The output
/// order is the path index order regardless of the worker count.
pub fn batch_map<T, F>(spec: &ModelSpec, n: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &CadlagPath) -> T + Sync,
{
    if n == 0 {
        return Err(Error::Parameter("batch size must be >= 1".into()));
    }
    spec.validate()?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let path = simulate(spec, Seed::new(master_seed, i))?;
            Ok(f(i, &path))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Markov states and model continuations. All three models are Markov in
// (current value, running supremum, alive flag), which is what makes nested
// conditioning on F_t computable.
// ---------------------------------------------------------------------------

/// The conditioning information carried by `F_t` for the three models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovState {
    pub model: ModelSpec,
    pub t: f64,
    pub current: f64,
    pub runsup: f64,
    /// PoissonDeath only; the other models are always alive.
    pub alive: bool,
}

impl MarkovState {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.current >= 0.0 && self.current <= self.runsup) {
            return Err(Error::Structural(format!(
                "state requires 0 <= current <= runsup, got {} > {}",
                self.current, self.runsup
            )));
        }
        if !(self.runsup >= 1.0) {
            return Err(Error::Structural(format!(
                "runsup must be >= 1 (paths start at 1), got {}",
                self.runsup
            )));
        }
        if matches!(self.model, ModelSpec::PoissonDeath { .. }) && self.alive != (self.current > 0.0)
        {
            return Err(Error::Structural("dead iff current = 0 for the death model".into()));
        }
        Ok(())
    }
}

/// Exact state of the model at a fixed time `t`, simulated without any stop
/// rule (the horizon is finite, so no truncation is needed).
pub fn state_at(spec: &ModelSpec, t: f64, seed: Seed) -> Result<MarkovState> {
    spec.validate()?;
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("state time must be >= 0, got {t}")));
    }
    let mut rng = seed.rng();
    let state = match *spec {
        ModelSpec::PoissonDeath { lambda } => {
            let tau = exp_draw(&mut rng, lambda);
            if tau > t {
                let v = (lambda * t).exp();
                MarkovState { model: *spec, t, current: v, runsup: v, alive: true }
            } else {
                let peak = (lambda * tau).exp();
                MarkovState { model: *spec, t, current: 0.0, runsup: peak, alive: false }
            }
        }
        ModelSpec::ContinuousExp { sigma, dt, bridge_max, .. } => {
            let var_full = sigma * sigma * dt;
            let mut log_l = 0.0f64;
            let mut log_sup = 0.0f64;
            let mut elapsed = 0.0f64;
            let full_steps = (t / dt).floor() as u64;
            for _ in 0..full_steps {
                step_log_walk(&mut rng, &mut log_l, &mut log_sup, sigma, dt, var_full, bridge_max);
                elapsed += dt;
            }
            let rem = t - elapsed;
            if rem > 0.0 {
                let var = sigma * sigma * rem;
                step_log_walk(&mut rng, &mut log_l, &mut log_sup, sigma, rem, var, bridge_max);
            }
            MarkovState {
                model: *spec,
                t,
                current: log_l.exp(),
                runsup: log_sup.exp(),
                alive: true,
            }
        }
        ModelSpec::PoissonUp { lambda, .. } => {
            let mut clock = 0.0f64;
            let mut s = 1.0f64;
            let mut sup = 1.0f64;
            loop {
                let wait = exp_draw(&mut rng, lambda);
                if clock + wait > t {
                    break;
                }
                clock += wait;
                s *= 2.0 * (-lambda * wait).exp();
                sup = sup.max(s);
            }
            let current = s * (-lambda * (t - clock)).exp();
            MarkovState { model: *spec, t, current, runsup: sup, alive: true }
        }
    };
    Ok(state)
}

fn step_log_walk(
    rng: &mut ChaCha8Rng,
    log_l: &mut f64,
    log_sup: &mut f64,
    sigma: f64,
    step: f64,
    var: f64,
    bridge: bool,
) {
    let z: f64 = rng.sample(StandardNormal);
    let next = *log_l - 0.5 * sigma * sigma * step + sigma * step.sqrt() * z;
    if bridge {
        let e: f64 = rng.sample(Exp1);
        *log_sup = (*log_sup).max(bridge_max_log_from_exp(*log_l, next, var, e));
    } else {
        *log_sup = (*log_sup).max(next);
    }
    *log_l = next;
}

/// One model continuation from `state`: does the future supremum reach
/// `threshold`? The event includes the present (`sup_{s >= t}`), and the
/// continuation stops — counting a miss — once the conditional probability of
/// still reaching the threshold drops below the model's certified bias.
pub fn continuation_reaches(
    state: &MarkovState,
    threshold: f64,
    strict: bool,
    rng: &mut ChaCha8Rng,
) -> bool {
    let hit = |v: f64| if strict { v > threshold } else { v >= threshold };
    if hit(state.current) {
        return true;
    }
    match state.model {
        ModelSpec::PoissonDeath { lambda } => {
            if !state.alive || state.current == 0.0 {
                return false;
            }
            let wait = exp_draw(rng, lambda);
            hit(state.current * (lambda * wait).exp())
        }
        ModelSpec::ContinuousExp { sigma, dt, stop_gap_c, bridge_max } => {
            if state.current == 0.0 {
                return false;
            }
            let log_thr = threshold.ln();
            let floor = log_thr - stop_gap_c;
            let var = sigma * sigma * dt;
            let mut log_l = state.current.ln();
            let mut log_sup = f64::NEG_INFINITY;
            loop {
                step_log_walk(rng, &mut log_l, &mut log_sup, sigma, dt, var, bridge_max);
                if if strict { log_sup > log_thr } else { log_sup >= log_thr } {
                    return true;
                }
                if log_l <= floor {
                    return false;
                }
            }
        }
        ModelSpec::PoissonUp { lambda, stop_gap_c } => {
            let stop_level = (-stop_gap_c).exp() * threshold;
            let mut s = state.current;
            if s <= stop_level {
                return false;
            }
            loop {
                let wait = exp_draw(rng, lambda);
                let time_to_stop = (s / stop_level).ln() / lambda;
                if wait >= time_to_stop {
                    return false;
                }
                s *= 2.0 * (-lambda * wait).exp();
                if hit(s) {
                    return true;
                }
            }
        }
    }
}

/// One model continuation from `state`: the log of the terminal supremum
/// `max(runsup, future supremum)`, truncated by the model's stop rule.
pub fn continuation_log_sup(state: &MarkovState, rng: &mut ChaCha8Rng) -> Result<f64> {
    match state.model {
        ModelSpec::PoissonDeath { lambda } => {
            if !state.alive || state.current == 0.0 {
                return Ok(state.runsup.ln());
            }
            let wait = exp_draw(rng, lambda);
            Ok(state.runsup.ln().max(state.current.ln() + lambda * wait))
        }
        ModelSpec::ContinuousExp { sigma, dt, stop_gap_c, bridge_max } => {
            let var = sigma * sigma * dt;
            let mut log_l = state.current.ln();
            let mut log_sup = state.runsup.ln();
            loop {
                step_log_walk(rng, &mut log_l, &mut log_sup, sigma, dt, var, bridge_max);
                if log_l <= log_sup - stop_gap_c {
                    return Ok(log_sup);
                }
            }
        }
        ModelSpec::PoissonUp { .. } => Err(Error::Model(
            "the log-supremum additive identity requires a max-continuous model".into(),
        )),
    }
}
