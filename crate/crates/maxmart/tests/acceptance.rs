//! Acceptance suite: every exact law the laboratory exists to verify, run at
//! desk scale with pinned seeds and tolerances. Prints one pass/fail line per
//! criterion and exits nonzero if any fails.
//!
//! Run via `cargo test --workspace` (this target has no harness) or directly:
//! `cargo test --test acceptance`.

use std::time::Instant;

use maxmart::azema::{nested_z_estimate, z_ratio};
use maxmart::decomposition::{
    compensator_poisson_death, d_at_rho_samples, d_process, log_lstar_mean, stieltjes_a,
};
use maxmart::hedging::super_replicate;
use maxmart::maxtime::{max_record, MaxRecord};
use maxmart::models::{batch_map, kardaras_condition, state_at, ModelSpec, Seed};
use maxmart::report::{run, RunConfig};
use maxmart::stats::{ks_uniform, ks_uniform_with_bias};

const STRIKES: [f64; 3] = [2.0, 5.0, 10.0];
const BIAS_C9: f64 = 1.2340980408667956e-4; // e^{-9}

fn death_spec() -> ModelSpec {
    ModelSpec::PoissonDeath { lambda: 1.0 }
}

fn cont_spec_fine() -> ModelSpec {
    ModelSpec::ContinuousExp { sigma: 1.0, dt: 1e-3, stop_gap_c: 9.0, bridge_max: true }
}

fn cont_spec_coarse() -> ModelSpec {
    ModelSpec::ContinuousExp { sigma: 1.0, dt: 0.02, stop_gap_c: 9.0, bridge_max: true }
}

fn cont_spec_states() -> ModelSpec {
    ModelSpec::ContinuousExp { sigma: 1.0, dt: 0.01, stop_gap_c: 9.0, bridge_max: true }
}

fn up_spec() -> ModelSpec {
    ModelSpec::PoissonUp { lambda: 1.0, stop_gap_c: 9.0 }
}

/// Everything the shared criteria need from one max-continuous path.
struct M0Digest {
    rec: MaxRecord,
    kardaras: bool,
    min_gap: f64,
    max_abs_gap: f64,
    /// (accumulated integral at the horizon, log of recorded supremum)
    a_end: f64,
    log_sup_end: f64,
    /// Death model only: relative error against lambda * tau.
    closed_rel_err: f64,
    d0: f64,
    d_monotone: bool,
}

fn m0_digest(spec: &ModelSpec, path: &maxmart::paths::CadlagPath) -> M0Digest {
    let rec = max_record(path).unwrap();
    let kardaras = kardaras_condition(path, 0.0);
    let (mut min_gap, mut max_abs_gap) = (f64::INFINITY, 0.0f64);
    for x in STRIKES {
        let h = super_replicate(path, x).unwrap();
        min_gap = min_gap.min(h.gap);
        max_abs_gap = max_abs_gap.max(h.gap.abs());
    }
    let a = stieltjes_a(path).unwrap();
    let a_end = a.last().unwrap().1;
    let sup = path.running_sup();
    let log_sup_end = sup.samples().last().unwrap().right.ln();
    let closed_rel_err = match spec {
        ModelSpec::PoissonDeath { lambda } => {
            let closed = compensator_poisson_death(path, *lambda).unwrap().a_at(path.horizon());
            (a_end - closed).abs() / (1.0 + closed.abs())
        }
        _ => 0.0,
    };
    let d = d_process(path).unwrap();
    M0Digest {
        rec,
        kardaras,
        min_gap,
        max_abs_gap,
        a_end,
        log_sup_end,
        closed_rel_err,
        d0: d[0].1,
        d_monotone: d.windows(2).all(|w| w[1].1 <= w[0].1),
    }
}

struct UpDigest {
    sup_inf: f64,
    has_jumps: bool,
    jumps_below_sup: bool,
    min_gap: f64,
}

fn up_digest(path: &maxmart::paths::CadlagPath) -> UpDigest {
    let sup = path.running_sup();
    let jumps_below_sup = path
        .samples()
        .iter()
        .zip(sup.samples())
        .skip(1)
        .all(|(s, m)| !s.is_jump() || s.left < m.left);
    let mut min_gap = f64::INFINITY;
    for x in [2.0, 3.0, 5.0, 10.0] {
        min_gap = min_gap.min(super_replicate(path, x).unwrap().gap);
    }
    UpDigest {
        sup_inf: sup.sup_infinity(),
        has_jumps: !path.jump_list().is_empty(),
        jumps_below_sup,
        min_gap,
    }
}

struct Outcome {
    pass: bool,
    detail: String,
    secs: f64,
}

fn tail_check(l_stars: &[f64], x: f64, bias: f64) -> (bool, String) {
    let n = l_stars.len() as f64;
    let p = l_stars.iter().filter(|&&v| v >= x).count() as f64 / n;
    let se = (p * (1.0 - p) / n).sqrt();
    let tol = 3.0 * se + bias;
    let ok = (p - 1.0 / x).abs() <= tol;
    (ok, format!("x={x}: |{p:.5}-{:.5}|<={tol:.5}", 1.0 / x))
}

fn main() {
    let suite_started = Instant::now();
    let mut results: Vec<(String, Outcome)> = Vec::new();

    // Shared batches, generated inside the criterion that owns the runtime
    // budget and reused by the later ones.
    let death: Vec<M0Digest>;
    let cont: Vec<M0Digest>;
    let up: Vec<UpDigest>;

    macro_rules! criterion {
        ($name:expr, $body:expr) => {{
            let started = Instant::now();
            let (pass, detail): (bool, String) = $body;
            let outcome = Outcome { pass, detail, secs: started.elapsed().as_secs_f64() };
            println!(
                "criterion {:>2} {}  ({:6.2}s)  {} — {}",
                results.len() + 1,
                if outcome.pass { "PASS" } else { "FAIL" },
                outcome.secs,
                $name,
                outcome.detail
            );
            results.push(($name.to_string(), outcome));
        }};
    }

    // 1. Doob maximal identity, death model: 1/L*_inf is standard uniform.
    criterion!("doob-maximal-identity death n=200k", {
        let spec = death_spec();
        death = batch_map(&spec, 200_000, 1001, |_, p| m0_digest(&spec, p)).unwrap();
        let us: Vec<f64> = death.iter().map(|d| 1.0 / d.rec.l_star_inf).collect();
        let v = ks_uniform(&us, 0.01).unwrap();
        (v.pass, format!("KS d={:.5} < {:.5}", v.d_stat, v.threshold))
    });
    let death_time = results[0].1.secs;

    // 2. Same identity on the continuous model at dt=1e-3 with bridge maxima,
    //    threshold relaxed by the certified truncation bias e^{-9}.
    criterion!("doob-maximal-identity continuous n=50k dt=1e-3", {
        let spec = cont_spec_fine();
        cont = batch_map(&spec, 50_000, 1002, |_, p| m0_digest(&spec, p)).unwrap();
        let us: Vec<f64> = cont.iter().map(|d| 1.0 / d.rec.l_star_inf).collect();
        let v = ks_uniform_with_bias(&us, 0.01, BIAS_C9).unwrap();
        (v.pass, format!("KS d={:.5} < {:.5}", v.d_stat, v.threshold))
    });
    let cont_time = results[1].1.secs;

    // 3. Tail law P[L*_inf >= x] = 1/x at x in {2, 5, 10}, both models.
    criterion!("tail-law x in {2,5,10} both max-continuous models", {
        let death_sup: Vec<f64> = death.iter().map(|d| d.rec.l_star_inf).collect();
        let cont_sup: Vec<f64> = cont.iter().map(|d| d.rec.l_star_inf).collect();
        let mut pass = true;
        let mut details = Vec::new();
        for x in STRIKES {
            let (ok, msg) = tail_check(&death_sup, x, 0.0);
            pass &= ok;
            details.push(format!("death {msg}"));
            let (ok, msg) = tail_check(&cont_sup, x, BIAS_C9);
            pass &= ok;
            details.push(format!("cont {msg}"));
        }
        (pass, details.join("; "))
    });

    // 4. Strict deficiency of the counterexample at x=3.
    criterion!("counterexample strict tail deficiency x=3 n=200k", {
        up = batch_map(&up_spec(), 200_000, 1003, |_, p| up_digest(p)).unwrap();
        let n = up.len() as f64;
        let p = up.iter().filter(|d| d.sup_inf >= 3.0).count() as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        let bound = 1.0 / 3.0;
        (
            p + 3.0 * se <= bound,
            format!(
                "p={p:.5}, p+3se={:.5} <= {bound:.5}; measured gap {:.5}",
                p + 3.0 * se,
                bound - p
            ),
        )
    });

    // 5. The two forms of the time of maximum agree.
    criterion!("rho_left = rho_right (exact death, within dt grid)", {
        let death_ok =
            death.iter().all(|d| !d.rec.rho_at_origin && d.rec.rho_left == d.rec.rho_right);
        let cont_ok = cont.iter().all(|d| (d.rec.rho_left - d.rec.rho_right).abs() <= 1e-3);
        (death_ok && cont_ok, format!("death exact {death_ok}, grid within dt {cont_ok}"))
    });

    // 6. The left limit at the time of maximum equals the terminal supremum.
    criterion!("left limit at rho equals L*_inf", {
        let death_ok = death.iter().all(|d| d.rec.left_at_rho == d.rec.l_star_inf);
        let cont_ok = cont
            .iter()
            .all(|d| (d.rec.left_at_rho - d.rec.l_star_inf).abs() <= 1e-12 * d.rec.l_star_inf);
        (death_ok && cont_ok, format!("death exact {death_ok}, grid 1e-12 rel {cont_ok}"))
    });

    // 7. D_rho = 1/L*_inf is standard uniform for both models.
    criterion!("D_rho uniform (KS alpha=0.01, n>=50k)", {
        let death_recs: Vec<MaxRecord> = death.iter().map(|d| d.rec).collect();
        let cont_recs: Vec<MaxRecord> = cont.iter().map(|d| d.rec).collect();
        let d_death = d_at_rho_samples(&death_recs).unwrap();
        let d_cont = d_at_rho_samples(&cont_recs).unwrap();
        let va = ks_uniform(&d_death, 0.01).unwrap();
        let vb = ks_uniform_with_bias(&d_cont, 0.01, BIAS_C9).unwrap();
        (
            va.pass && vb.pass && d_death.len() >= 50_000 && d_cont.len() >= 50_000,
            format!(
                "death d={:.5}<{:.5} (n={}), cont d={:.5}<{:.5} (n={})",
                va.d_stat,
                va.threshold,
                d_death.len(),
                vb.d_stat,
                vb.threshold,
                d_cont.len()
            ),
        )
    });

    // 8. E[log L*_inf] = 1 for both models.
    criterion!("mean log L*_inf = 1 within 3 SE", {
        let death_recs: Vec<MaxRecord> = death.iter().map(|d| d.rec).collect();
        let cont_recs: Vec<MaxRecord> = cont.iter().map(|d| d.rec).collect();
        let (ma, ha) = log_lstar_mean(&death_recs).unwrap();
        let (mb, hb) = log_lstar_mean(&cont_recs).unwrap();
        let ok_a = (ma - 1.0).abs() <= ha;
        let ok_b = (mb - 1.0).abs() <= hb + 2.0 * BIAS_C9;
        (ok_a && ok_b, format!("death {ma:.4}+-{ha:.4}, cont {mb:.4}+-{hb:.4}"))
    });

    // 9. Azéma ratio at states: nested Z within 3 stderr of L/L* on the
    //    continuous model; exact alive indicator on the death model.
    criterion!("Azema ratio Z = L/L* at states (n_inner=1e4)", {
        let mut pass = true;
        let mut details = Vec::new();
        for j in 0..5u64 {
            let st = state_at(&cont_spec_states(), 0.5, Seed::new(1005, j)).unwrap();
            let est = nested_z_estimate(&st, 10_000, Seed::new(1006, j)).unwrap();
            let tol = 3.0 * est.stderr + 2.0 * BIAS_C9;
            let ok = (est.z_hat - est.z_ratio).abs() <= tol;
            pass &= ok;
            details.push(format!("|{:.4}-{:.4}|<={tol:.4}", est.z_hat, est.z_ratio));
        }
        let mut death_ok = true;
        for j in 0..5u64 {
            let st = state_at(&death_spec(), 0.5, Seed::new(1007, j)).unwrap();
            let est = nested_z_estimate(&st, 10_000, Seed::new(1008, j)).unwrap();
            death_ok &= est.z_hat == if st.alive { 1.0 } else { 0.0 };
        }
        pass &= death_ok;
        (pass, format!("cont states {}; death exact {death_ok}", details.join(", ")))
    });

    // 10. The conditional-probability inequality for the counterexample, and
    //     jumps strictly below the supremum pathwise.
    criterion!("counterexample: Z <= S/S* at states; jumps below sup", {
        let mut pass = true;
        let mut worst = f64::NEG_INFINITY;
        for j in 0..10u64 {
            let st = state_at(&up_spec(), 0.5, Seed::new(1009, j)).unwrap();
            let est = nested_z_estimate(&st, 10_000, Seed::new(1010, j)).unwrap();
            let slack = est.z_hat - z_ratio(&st) - 3.0 * est.stderr;
            worst = worst.max(slack);
            pass &= slack <= 0.0;
        }
        let jumpy = up.iter().filter(|d| d.has_jumps).count();
        let below = up.iter().filter(|d| d.has_jumps && d.jumps_below_sup).count();
        pass &= jumpy == below && jumpy > 0;
        (pass, format!("worst state slack {worst:.5} <= 0; jumps below sup {below}/{jumpy}"))
    });

    // 11. Super-replication: no pathwise gap violations anywhere; exact
    //     replication on max-continuous paths. 200k paths per model (the
    //     continuous batch uses a coarser bridged grid; the supremum law is
    //     step-size invariant).
    criterion!("super-replication gap >= -1e-9 all models; |gap| <= 1e-9 on M0", {
        let spec = cont_spec_coarse();
        let coarse: Vec<(f64, f64)> = batch_map(&spec, 200_000, 1004, |_, p| {
            let (mut min_gap, mut max_abs) = (f64::INFINITY, 0.0f64);
            for x in STRIKES {
                let h = super_replicate(p, x).unwrap();
                min_gap = min_gap.min(h.gap);
                max_abs = max_abs.max(h.gap.abs());
            }
            (min_gap, max_abs)
        })
        .unwrap();
        let death_min = death.iter().fold(f64::INFINITY, |m, d| m.min(d.min_gap));
        let death_max_abs = death.iter().fold(0.0f64, |m, d| m.max(d.max_abs_gap));
        let cont_min = coarse.iter().fold(f64::INFINITY, |m, c| m.min(c.0));
        let cont_max_abs = coarse.iter().fold(0.0f64, |m, c| m.max(c.1));
        let up_min = up.iter().fold(f64::INFINITY, |m, d| m.min(d.min_gap));
        let pass = death_min >= -1e-9
            && cont_min >= -1e-9
            && up_min >= -1e-9
            && death_max_abs <= 1e-9
            && cont_max_abs <= 1e-9;
        (
            pass,
            format!(
                "min gaps: death {death_min:.2e}, cont {cont_min:.2e}, up {up_min:.2e}; max |gap| M0: {:.2e}",
                death_max_abs.max(cont_max_abs)
            ),
        )
    });

    // 12. Decomposition: the Stieltjes route reproduces log L* (exactly on
    //     the death model, 1e-6 relative on the grid), D_0 = 1, D
    //     nonincreasing on every path.
    criterion!("stieltjes a = log L*; D nonincreasing, D_0 = 1", {
        let death_exact = death.iter().all(|d| d.a_end == d.log_sup_end);
        let death_closed = death.iter().all(|d| d.closed_rel_err <= 1e-12);
        let cont_close = cont
            .iter()
            .all(|d| (d.a_end - d.log_sup_end).abs() <= 1e-6 * (1.0 + d.log_sup_end.abs()));
        let d_ok = death.iter().chain(cont.iter()).all(|d| d.d0 == 1.0 && d.d_monotone);
        (
            death_exact && death_closed && cont_close && d_ok,
            format!(
                "death bit-exact {death_exact}, death vs lambda*tau {death_closed}, grid 1e-6 {cont_close}, D {d_ok}"
            ),
        )
    });

    // 13. The no-jump-at-the-maximum diagnostic separates the two models.
    criterion!("kardaras diagnostic: false on death, true on continuous", {
        let death_ok = death.iter().all(|d| !d.kardaras);
        let cont_ok = cont.iter().all(|d| d.kardaras);
        (death_ok && cont_ok, format!("death all-false {death_ok}, cont all-true {cont_ok}"))
    });

    // 14. Determinism: the default three-model suite, rerun with different
    //     worker counts, produces byte-identical summary JSON and passes.
    criterion!("determinism: default suite, jobs=1 vs jobs=2, byte-identical", {
        let base = std::env::temp_dir().join(format!("maxmart_acceptance_{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&base);
        let mut pass = true;
        let mut details = Vec::new();
        for (idx, config) in RunConfig::default_suite().iter().enumerate() {
            let dir_a = base.join(format!("{idx}_a"));
            let dir_b = base.join(format!("{idx}_b"));
            let out_a = run(config, Some(1), &dir_a).unwrap();
            let out_b = run(config, Some(2), &dir_b).unwrap();
            let bytes_a = std::fs::read(dir_a.join("summary.json")).unwrap();
            let bytes_b = std::fs::read(dir_b.join("summary.json")).unwrap();
            let identical = bytes_a == bytes_b;
            let all_pass = out_a.summary.all_pass() && out_b.summary.all_pass();
            if !all_pass {
                for row in out_a.summary.checks.iter().filter(|r| !r.pass) {
                    details.push(format!(
                        "{} {}.{} value={}",
                        config.model.name(),
                        row.name,
                        row.metric,
                        row.value
                    ));
                }
            }
            pass &= identical && all_pass;
            details.push(format!(
                "{}: identical={identical}, all-pass={all_pass}",
                config.model.name()
            ));
        }
        let _ = std::fs::remove_dir_all(&base);
        (pass, details.join("; "))
    });

    // Runtime budgets are acceptance criteria of their own.
    let total = suite_started.elapsed().as_secs_f64();
    let budget_1 = death_time <= 10.0;
    let budget_2 = cont_time <= 60.0;
    let budget_total = total <= 120.0;
    println!(
        "runtime     {}  criterion 1: {death_time:.1}s <= 10s; criterion 2: {cont_time:.1}s <= 60s; total {total:.1}s <= 120s",
        if budget_1 && budget_2 && budget_total { "PASS" } else { "FAIL" },
    );

    let failed: Vec<&str> =
        results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| n.as_str()).collect();
    let budgets_ok = budget_1 && budget_2 && budget_total;
    if failed.is_empty() && budgets_ok {
        println!("acceptance: {}/{} criteria passed in {total:.1}s", results.len(), results.len());
    } else {
        println!("acceptance: FAILED criteria: {failed:?}; budgets ok: {budgets_ok}");
        std::process::exit(1);
    }
}
