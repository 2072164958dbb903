//! Acceptance checks. Run with `cargo test --test acceptance`; prints one
//! PASS/FAIL line per criterion and exits nonzero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phack::diagnostics::{
    azuma_bound, azuma_check, base_drift_extremes, classify_convergence, clt_probe, doob_decompose,
    empirical_policy_range, epsilon_threshold, escape_threshold, increment_bound, martingale_rows,
    variance_bound, DoobDecomposition, Label,
};
use phack::dynamics::{drift, drift_direct, map_ensemble, run_ensemble, Trajectory};
use phack::experiment::csvio::trajectory_digest;
use phack::experiment::ScenarioFile;
use phack::model::{information, information_derivative, update_on_success, BeliefState};
use phack::optimizer::optimal_project_belief;
use phack::payoff::PayoffSpec;
use phack::success::SuccessModel;

struct Rng(ChaCha8Rng);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
    fn range(&mut self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.uniform()
    }
    /// Uniform on the open interval (0, 1).
    fn open(&mut self) -> f64 {
        loop {
            let x = self.uniform();
            if x > 0.0 {
                return x;
            }
        }
    }
}

// Direct transcriptions used as oracles, kept independent of the library's
// log-space evaluation.

fn naive_pa(sm: &SuccessModel, l: f64) -> f64 {
    sm.kappa * l.powf(sm.alpha) / (1.0 + l).powf(sm.alpha + sm.beta)
}

fn naive_pb(sm: &SuccessModel, l: f64) -> f64 {
    sm.kappa * l.powf(sm.alpha + 1.0) / (1.0 + l).powf(sm.alpha + sm.beta)
}

/// KL divergence of the posterior after a success from the prior.
fn naive_info(u: f64, l: f64) -> f64 {
    let post = u / (u + (1.0 - u) * l);
    let mut i = 0.0;
    if post > 0.0 {
        i += post * (post / u).ln();
    }
    if post < 1.0 {
        i += (1.0 - post) * ((1.0 - post) / (1.0 - u)).ln();
    }
    i
}

fn naive_payoff(ps: &PayoffSpec, sm: &SuccessModel, i: f64) -> f64 {
    match *ps {
        PayoffSpec::BoundedExp { c, gamma } => c + gamma * (1.0 - (-i).exp()),
        PayoffSpec::FastReciprocal { c, d, .. } => {
            c + d * (1.0 / naive_pa(sm, 4.0 * (2.0 * i).exp()) - 1.0 / naive_pa(sm, 4.0))
        }
    }
}

fn naive_ep(ps: &PayoffSpec, sm: &SuccessModel, u: f64, l: f64) -> f64 {
    let mix = u * naive_pa(sm, l) + (1.0 - u) * naive_pb(sm, l);
    naive_payoff(ps, sm, naive_info(u, l)) * mix
}

type Outcome = std::result::Result<String, String>;

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let t0 = Instant::now();
        let out = f();
        let dt = t0.elapsed();
        let (ok, detail) = match out {
            Ok(d) => match limit {
                Some(lim) if dt > lim => (false, format!("{d}; runtime {dt:.2?} exceeds {lim:?}")),
                _ => (true, d),
            },
            Err(d) => (false, d),
        };
        if !ok {
            self.failures += 1;
        }
        println!("{} {name} [{dt:.2?}] {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scenario(name: &str) -> ScenarioFile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"));
    ScenarioFile::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn closed_form_identities() -> Outcome {
    let sm = SuccessModel::default();
    let mut rng = Rng::new(1);
    let mut worst_pb: f64 = 0.0;
    for _ in 0..10_000 {
        let u = rng.open();
        let i = information(u, 1.0).map_err(|e| e.to_string())?.value();
        ensure(i.abs() <= 1e-12, || format!("I({u}, 1) = {i}"))?;
        let l = rng.range(-12.0, 12.0).exp();
        let (pa, pb) = sm.success_probs(l).map_err(|e| e.to_string())?;
        let rel = (pb - l * pa).abs() / (l * pa);
        let rel_naive = (pb - naive_pb(&sm, l)).abs() / naive_pb(&sm, l);
        worst_pb = worst_pb.max(rel).max(rel_naive);
    }
    ensure(worst_pb <= 1e-12, || format!("p_B vs l p_A relative error {worst_pb:e}"))?;
    let mut worst_d: f64 = 0.0;
    for i in 0..50 {
        let u = 0.01 + 0.98 * i as f64 / 49.0;
        for j in 0..50 {
            let l = 10f64.powf(-3.0 + 6.0 * j as f64 / 49.0);
            let h = 1e-3 * l;
            let fd = (-naive_info(u, l + 2.0 * h) + 8.0 * naive_info(u, l + h) - 8.0 * naive_info(u, l - h)
                + naive_info(u, l - 2.0 * h))
                / (12.0 * h);
            let d = information_derivative(u, l).map_err(|e| e.to_string())?;
            worst_d = worst_d.max((d - fd).abs() / fd.abs());
        }
    }
    ensure(worst_d <= 1e-6, || format!("dI/dl vs finite differences relative error {worst_d:e}"))?;
    Ok(format!("max rel err p_B {worst_pb:.1e}, dI/dl {worst_d:.1e}"))
}

fn worked_update_examples() -> Outcome {
    let mut parts = Vec::new();
    for (u, want) in [(0.9, 0.474), (0.999, 0.990)] {
        let b = BeliefState::from_prob(u).map_err(|e| e.to_string())?;
        let post = update_on_success(&b, 10.0).map_err(|e| e.to_string())?.u();
        ensure((post - want).abs() <= 0.0005, || format!("u={u}: posterior {post}, want {want}"))?;
        parts.push(format!("u={u} -> {:.3}%", 100.0 * post));
    }
    Ok(parts.join(", "))
}

fn information_bound() -> Outcome {
    let mut rng = Rng::new(3);
    let mut closest = f64::INFINITY;
    for _ in 0..100_000 {
        let u = rng.open();
        let l = rng.range(-30.0, 30.0).exp();
        let i = information(u, l).map_err(|e| e.to_string())?.value();
        let bound = (-u.ln()).max(-(-u).ln_1p());
        ensure(i < bound, || format!("I({u}, {l}) = {i} is not below {bound}"))?;
        closest = closest.min(bound - i);
    }
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u = rng.open();
        let i = information(u, 1e-9).map_err(|e| e.to_string())?.value();
        worst = worst.max((i + u.ln()).abs());
    }
    ensure(worst <= 1e-3, || format!("|I(u, 1e-9) + ln u| reaches {worst:e}"))?;
    Ok(format!("smallest slack {closest:.2e}; |I(u,1e-9) + ln u| <= {worst:.2e}"))
}

/// Brute-force argmax of the directly evaluated expected payoff: a 1e5-point
/// log grid over [1e-12, 1e12], then a 1e5-point zoom around each of the three
/// best local maxima.
fn brute_force(ps: &PayoffSpec, sm: &SuccessModel, u: f64) -> (f64, f64) {
    const N: usize = 100_000;
    let (x0, x1) = (-12.0 * std::f64::consts::LN_10, 12.0 * std::f64::consts::LN_10);
    let dx = (x1 - x0) / (N - 1) as f64;
    let vals: Vec<f64> = (0..N).map(|k| naive_ep(ps, sm, u, (x0 + dx * k as f64).exp())).collect();
    let mut peaks: Vec<usize> = (0..N)
        .filter(|&k| (k == 0 || vals[k] >= vals[k - 1]) && (k == N - 1 || vals[k] >= vals[k + 1]))
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    peaks.truncate(3);
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for k in peaks {
        let (a, b) = (x0 + dx * (k as f64 - 2.0), x0 + dx * (k as f64 + 2.0));
        let h = (b - a) / (N - 1) as f64;
        for j in 0..N {
            let l = (a + h * j as f64).exp();
            let v = naive_ep(ps, sm, u, l);
            if v > best.1 {
                best = (l, v);
            }
        }
    }
    best
}

fn optimizer_oracle() -> Outcome {
    let sm = SuccessModel::default();
    let mut rng = Rng::new(4);
    let (mut worst_l, mut worst_v, mut worst_foc, mut worst_fd): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for case in 0..200 {
        let c = rng.range(0.5, 2.0);
        let ps = if case % 2 == 0 {
            PayoffSpec::bounded_exp(c, rng.range(4.0, 16.0))
        } else {
            PayoffSpec::fast_reciprocal(c, c * rng.range(1.5, 4.0), sm)
        }
        .map_err(|e| e.to_string())?;
        let b = BeliefState::from_log_ratio(rng.range(-8.0, 8.0)).map_err(|e| e.to_string())?;
        let u = b.u();
        let pt = optimal_project_belief(&ps, &sm, &b).map_err(|e| format!("case {case}: {e}"))?;
        let (l_or, v_or) = brute_force(&ps, &sm, u);
        let v_opt = naive_ep(&ps, &sm, u, pt.l_star);
        let rel_l = (pt.l_star - l_or).abs() / l_or;
        let rel_v = (v_opt - v_or).abs() / v_or;
        worst_l = worst_l.max(rel_l);
        worst_v = worst_v.max(rel_v);
        ensure(rel_l <= 1e-6 && rel_v <= 1e-9, || {
            format!(
                "case {case} ({ps:?}, u={u}): l* {} vs oracle {l_or} (rel {rel_l:e}), EP rel {rel_v:e}",
                pt.l_star
            )
        })?;
        let interior = pt.l_star > pt.bracket.l_lo * (1.0 + 1e-9) && pt.l_star < pt.bracket.l_hi * (1.0 - 1e-9);
        if interior {
            worst_foc = worst_foc.max(pt.foc_scaled);
            let h = 1e-5;
            let x = pt.l_star.ln();
            let g = (naive_ep(&ps, &sm, u, (x + h).exp()).ln() - naive_ep(&ps, &sm, u, (x - h).exp()).ln()) / (2.0 * h);
            worst_fd = worst_fd.max(g.abs());
            ensure(pt.foc_scaled < 1e-4 && g.abs() < 1e-4, || {
                format!("case {case}: FOC residual {} (finite-difference {g:e})", pt.foc_scaled)
            })?;
        }
    }
    Ok(format!(
        "max rel err l* {worst_l:.1e}, EP {worst_v:.1e}; FOC residual {worst_foc:.1e} (finite-difference {worst_fd:.1e})"
    ))
}

fn drift_identities() -> Outcome {
    let sm = SuccessModel::default();
    let mut worst: f64 = 0.0;
    for (p, eps) in [(0.5, 0.01), (0.5, 0.05), (0.3, 0.0), (0.9, 0.02)] {
        for k in 0..1000 {
            let l = 10f64.powf(-4.0 + 8.0 * k as f64 / 999.0);
            let d = drift(&sm, p, eps, l).map_err(|e| e.to_string())?;
            let direct = drift_direct(&sm, p, eps, l).map_err(|e| e.to_string())?;
            let err = (direct - (d.base + d.distortion)).abs();
            worst = worst.max(err);
            ensure(err <= 1e-12, || format!("p={p} eps={eps} l={l}: direct {direct} vs split {}", d.base + d.distortion))?;
            ensure(d.base < 0.0, || format!("p={p} l={l}: base drift {} is not negative", d.base))?;
        }
        let d1 = drift(&sm, p, eps, 1.0).map_err(|e| e.to_string())?;
        ensure(d1.total == 0.0 && d1.base == 0.0, || format!("drift at l=1 is {d1:?}"))?;
    }
    Ok(format!("max |direct - split| {worst:.1e}"))
}

struct SlowSetup {
    file: ScenarioFile,
    range: phack::diagnostics::PolicyRange,
    delta: f64,
}

fn slow_setup() -> SlowSetup {
    let file = scenario("slow_payoff_small_eps");
    let cfg = file.scenario().unwrap();
    let d = &file.diagnostics;
    let (range, _) =
        empirical_policy_range(&cfg.ps, &cfg.sm, d.policy_lambda_min, d.policy_lambda_max, d.policy_lambda_step)
            .unwrap();
    let (_, sup_base) = base_drift_extremes(&cfg.sm, cfg.p, &range, 2000).unwrap();
    SlowSetup {
        delta: sup_base.abs() / 2.0,
        file,
        range,
    }
}

fn supermartingale_threshold(s: &SlowSetup) -> Outcome {
    let cfg = s.file.scenario().map_err(|e| e.to_string())?;
    let th = epsilon_threshold(&cfg.sm, cfg.p, &s.range, s.delta).map_err(|e| e.to_string())?;
    ensure(th.eps_bar > 0.0, || format!("eps_bar = {}", th.eps_bar))?;
    let eps = th.eps_bar / 2.0;
    let grid = s.range.grid(2000);
    let mut worst = f64::NEG_INFINITY;
    for &l in &grid {
        let d = drift(&cfg.sm, cfg.p, eps, l).map_err(|e| e.to_string())?.total;
        worst = worst.max(d);
    }
    ensure(worst <= -s.delta, || format!("max drift {worst} at eps_bar/2 exceeds -delta = {}", -s.delta))?;
    Ok(format!(
        "delta {:.4e}, eps_bar {:.4e}, max drift at eps_bar/2 {worst:.4e} on {} points",
        s.delta,
        th.eps_bar,
        grid.len()
    ))
}

fn learned_fraction(file: &ScenarioFile, ens: &[Trajectory]) -> f64 {
    let cut = file.diagnostics.learned_cut;
    let w = file.window();
    ens.iter()
        .filter(|t| classify_convergence(t, cut, w).label == Label::Learned)
        .count() as f64
        / ens.len() as f64
}

fn slow_learning(file: &ScenarioFile, ens: &[Trajectory]) -> Outcome {
    ensure(file.dynamics.horizon == 20_000 && ens.len() == 400, || "scenario is not T=2e4 with 400 seeds".into())?;
    ensure(file.dynamics.eps == 0.01 && file.dynamics.p == 0.5 && file.dynamics.lambda0 == 0.0, || {
        "scenario parameters differ from p=0.5, eps=0.01, lambda0=0".into()
    })?;
    let frac = learned_fraction(file, ens);
    let steps: usize = ens.iter().map(|t| t.steps()).sum();
    let drift_sum: f64 = ens.iter().map(|t| (0..t.steps()).map(|k| t.drift_total(k)).sum::<f64>()).sum();
    let mean_drift = drift_sum / steps as f64;
    let mean_final = ens.iter().map(|t| t.lambda_final()).sum::<f64>() / ens.len() as f64;
    let predicted = file.dynamics.horizon as f64 * mean_drift;
    let gap = (mean_final - predicted).abs() / predicted.abs();
    ensure(frac >= 0.95, || format!("learned fraction {frac}"))?;
    ensure(gap <= 0.10, || format!("mean lambda_T {mean_final} vs T x mean drift {predicted} (gap {gap})"))?;
    Ok(format!(
        "learned fraction {frac:.4}; mean lambda_T {mean_final:.2} vs T x mean drift {predicted:.2} (gap {:.2}%)",
        100.0 * gap
    ))
}

fn fast_non_learning() -> Outcome {
    let file = scenario("fast_payoff_eps005");
    let cfg = file.scenario().map_err(|e| e.to_string())?;
    match file.payoff {
        phack::experiment::PayoffConfig::FastReciprocal { c, d } if d == 2.0 * c => {}
        ref other => return Err(format!("scenario payoff is {other:?}, not fast with d = 2c")),
    }
    ensure(cfg.eps == 0.05 && cfg.horizon == 20_000 && file.dynamics.trajectories == 400, || {
        "scenario is not eps=0.05, T=2e4, 400 seeds".into()
    })?;
    let cut = file.diagnostics.learned_cut;
    let w = file.window();
    let labels = map_ensemble(&cfg, 0..file.dynamics.trajectories, 1, |t| {
        classify_convergence(&t, cut, w).label
    })
    .map_err(|e| e.to_string())?;
    let frac = labels.iter().filter(|&&l| l == Label::Learned).count() as f64 / labels.len() as f64;
    ensure(frac <= 0.01, || format!("learned fraction {frac}"))?;

    let mut ls = Vec::new();
    for k in 2..=8 {
        let b = BeliefState::from_prob(1.0 - 10f64.powi(-k)).map_err(|e| e.to_string())?;
        ls.push(optimal_project_belief(&cfg.ps, &cfg.sm, &b).map_err(|e| e.to_string())?.l_star);
    }
    ensure(ls.windows(2).all(|w| w[1] > w[0]), || format!("l* near u=1 not increasing: {ls:?}"))?;

    let delta = cfg.eps * cfg.p / 4.0;
    let esc = escape_threshold(&cfg.ps, &cfg.sm, cfg.p, cfg.eps, delta).map_err(|e| e.to_string())?;
    ensure(esc.lambda_bar.is_finite() && esc.l_bar.is_finite(), || format!("{esc:?}"))?;
    ensure(esc.min_drift_below > 0.0, || format!("drift below lambda_bar reaches {}", esc.min_drift_below))?;
    Ok(format!(
        "learned fraction {frac:.4}; l*(1-1e-2..1-1e-8) {:.3e}..{:.3e} increasing; lambda_bar {}, l_bar {:.3}, min drift below {:.3e}",
        ls[0],
        ls[6],
        esc.lambda_bar,
        esc.l_bar,
        esc.min_drift_below
    ))
}

fn martingale_diagnostics(s: &SlowSetup, ens: &[Trajectory]) -> Outcome {
    let cfg = s.file.scenario().map_err(|e| e.to_string())?;
    let decomps: Vec<DoobDecomposition> = ens
        .iter()
        .map(doob_decompose)
        .collect::<phack::Result<_>>()
        .map_err(|e| e.to_string())?;
    let rec = decomps.iter().map(|d| d.reconstruction_error).fold(0.0, f64::max);
    ensure(rec <= 1e-10, || format!("Doob reconstruction error {rec:e}"))?;

    let rows = martingale_rows(&decomps, &[100, 1000, 10_000]);
    for r in &rows {
        ensure(r.n == ens.len() && r.z.abs() <= 4.0, || format!("mean M at t={} is {} SE from 0", r.t, r.z))?;
    }

    let d = increment_bound(&cfg.sm, cfg.p, &s.range, 2000).map_err(|e| e.to_string())?;
    let az = azuma_check(ens, s.delta, d, &[1000, 5000]);
    ensure(az.applicable, || format!("Azuma check not applicable: {:?}", az.reason))?;
    for r in &az.rows {
        ensure(r.frequency <= r.bound + 3.0 * r.std_error, || {
            format!("t={}: exceedance {} > bound {} + 3 SE", r.t, r.frequency, r.bound)
        })?;
        ensure((r.bound - azuma_bound(s.delta, d, r.t)).abs() == 0.0, || "bound mismatch".into())?;
    }

    let recorded = ens.iter().flat_map(|t| t.sigma_sq.iter().copied()).fold(0.0, f64::max);
    let s_bound = variance_bound(&cfg.sm, cfg.p, cfg.eps, &s.range, 2000)
        .map_err(|e| e.to_string())?
        .max(recorded);
    let clt = clt_probe(&decomps, &[50.0, 100.0, 200.0], s_bound);
    for r in &clt {
        ensure(r.tau_bound_holds, || format!("tau_nu below nu/S - 1 at nu={}", r.nu))?;
        ensure(r.reached == ens.len(), || format!("only {} trajectories reached nu={}", r.reached, r.nu))?;
    }
    let ks = clt.last().and_then(|r| r.ks).ok_or("no KS statistic at nu=200")?;
    ensure(ks <= 0.08, || format!("KS distance {ks} at nu=200"))?;
    Ok(format!(
        "reconstruction {rec:.1e}; |z| {:?}; Azuma freq {:?} vs bound {:?}; S {s_bound:.4}; KS(200) {ks:.4}",
        rows.iter().map(|r| (r.z.abs() * 100.0).round() / 100.0).collect::<Vec<_>>(),
        az.rows.iter().map(|r| r.frequency).collect::<Vec<_>>(),
        az.rows.iter().map(|r| (r.bound * 1e4).round() / 1e4).collect::<Vec<_>>(),
    ))
}

fn determinism(file: &ScenarioFile, ens: &[Trajectory]) -> Outcome {
    let cfg = file.scenario().map_err(|e| e.to_string())?;
    let base: Vec<String> = ens.iter().map(trajectory_digest).collect();
    let n = file.dynamics.trajectories;
    for workers in [2, 4] {
        let again = map_ensemble(&cfg, 0..n, workers, |t| trajectory_digest(&t)).map_err(|e| e.to_string())?;
        if let Some(i) = (0..base.len()).find(|&i| base[i] != again[i]) {
            return Err(format!("workers={workers}: trajectory {i} differs"));
        }
    }
    Ok(format!("{} trajectory CSV digests identical for 1, 2 and 4 workers", base.len()))
}

fn main() -> ExitCode {
    let mut r = Report { failures: 0 };
    r.check("1 closed-form identities", Some(Duration::from_secs(1)), closed_form_identities);
    r.check("2 worked update examples", Some(Duration::from_millis(1)), worked_update_examples);
    r.check("3 information bound", Some(Duration::from_secs(1)), information_bound);
    r.check("4 optimizer oracle equivalence", Some(Duration::from_secs(30)), optimizer_oracle);
    r.check("5 drift identities", Some(Duration::from_secs(1)), drift_identities);

    let mut setup = None;
    r.check("6 supermartingale threshold", Some(Duration::from_secs(5)), || {
        let s = slow_setup();
        let out = supermartingale_threshold(&s);
        setup = Some(s);
        out
    });
    let setup = setup.expect("setup ran");

    let cfg = setup.file.scenario().expect("bundled scenario is valid");
    let mut ensemble = Vec::new();
    r.check("7 slow payoff learns", Some(Duration::from_secs(60)), || {
        ensemble = run_ensemble(&cfg, 0..setup.file.dynamics.trajectories, 1).map_err(|e| e.to_string())?;
        slow_learning(&setup.file, &ensemble)
    });
    r.check("8 fast payoff does not learn", Some(Duration::from_secs(120)), fast_non_learning);
    r.check("9 martingale diagnostics", Some(Duration::from_secs(60)), || {
        martingale_diagnostics(&setup, &ensemble)
    });
    r.check("10 determinism across worker counts", None, || determinism(&setup.file, &ensemble));

    println!("{} of 10 criteria failed", r.failures);
    if r.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
