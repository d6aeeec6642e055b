//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use multilift::controller::Mode;
use multilift::dynamics::{allocate_cable_forces, allocation_matrix, QuadrotorParams, SystemParams};
use multilift::geometry::{exp_so3, hat, Mat3, Vec3};
use multilift::harness::diagnostics::max_increase_after;
use multilift::harness::scenario::{default_system_params, reference_inertia, ScenarioFile};
use multilift::harness::{compare, run, Comparison, RunResult, Scenario, ORDERING_MARGIN};
use multilift::disturbances::{DisturbanceProfile, SignalSpec};
use multilift::integrator::rk3_step;
use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn rand_vec(rng: &mut StdRng, scale: f64) -> Vec3 {
    Vec3::from_fn(|_, _| rng.random_range(-scale..=scale))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let (mut worst_oracle, mut worst_wrench) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let n = rng.random_range(3..=6);
        let quads: Vec<QuadrotorParams> = (0..n)
            .map(|_| QuadrotorParams {
                mass: 1.0,
                inertia: Mat3::from_diagonal(&Vec3::new(0.02, 0.02, 0.04)),
                cable_length: 1.0,
                attachment: rand_vec(&mut rng, 0.8),
            })
            .collect();
        let reference = default_system_params(1.0, reference_inertia()).reference;
        let Ok(params) = SystemParams::new(1.0, reference_inertia(), quads, reference, 9.81) else {
            continue;
        };
        let f_d = rand_vec(&mut rng, 50.0);
        let m_d = rand_vec(&mut rng, 10.0);
        let r0 = exp_so3(&rand_vec(&mut rng, 3.0));
        let mu = allocate_cable_forces(&f_d, &m_d, &r0, &params);

        // minimum-norm oracle on the inertial-frame map via Householder QR of Aᵀ:
        // x = Q R⁻ᵀ b
        let attachments: Vec<Vec3> = params.quadrotors.iter().map(|q| r0 * q.attachment).collect();
        let a = allocation_matrix(&attachments);
        let m_inertial = r0 * m_d;
        let b = DVector::from_column_slice(&[f_d.x, f_d.y, f_d.z, m_inertial.x, m_inertial.y, m_inertial.z]);
        let qr = a.transpose().qr();
        let oracle = qr.q() * qr.r().transpose().solve_lower_triangular(&b).expect("full row rank");
        let ours = DVector::from_iterator(3 * n, mu.iter().flat_map(|v| v.iter().copied()));
        let gap = (&ours - &oracle).amax() / (1.0 + oracle.amax());
        worst_oracle = worst_oracle.max(gap);

        let mut force = Vec3::zeros();
        let mut moment = Vec3::zeros();
        for (q, mu_i) in params.quadrotors.iter().zip(&mu) {
            force += mu_i;
            moment += hat(&q.attachment) * (r0.transpose() * mu_i);
        }
        worst_wrench = worst_wrench.max((force - f_d).amax()).max((moment - m_d).amax());
    }
    let elapsed = start.elapsed();
    outcome(
        worst_oracle <= 1e-9 && worst_wrench <= 1e-9 && elapsed < Duration::from_secs(5),
        format!("oracle gap {worst_oracle:.2e}, wrench residual {worst_wrench:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let error = |steps: usize| {
        let dt = 1.0 / steps as f64;
        let mut y = vec![1.0];
        for k in 0..steps {
            y = rk3_step(|_, y| vec![-y[0]], &y, k as f64 * dt, dt).unwrap();
        }
        (y[0] - (-1.0f64).exp()).abs()
    };
    let errors: Vec<f64> = [10, 20, 40, 80, 160].iter().map(|&s| error(s)).collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let elapsed = start.elapsed();
    outcome(
        ratios.iter().all(|r| (7.0..=9.0).contains(r)) && elapsed < Duration::from_secs(1),
        format!("error ratios {ratios:.3?}, {elapsed:.2?}"),
    )
}

fn quiet_group_a() -> ScenarioFile {
    let mut file = ScenarioFile::group_a();
    file.disturbances = DisturbanceProfile::zero(file.quadrotors.len());
    file
}

fn criterion_3(runs: &mut Vec<RunResult>) -> Outcome {
    let start = Instant::now();
    let mut file = quiet_group_a();
    file.mode = Mode::Baseline;
    file.integrator.duration_s = 10.0;
    let result = run(&file.build().expect("valid scenario"));
    let x_start = result.sim.records[0].state.x0;
    let drift = result.sim.records.iter().map(|r| (r.state.x0 - x_start).norm()).fold(0.0, f64::max);
    let e_r = result.sim.records.iter().map(|r| r.errors.e_r.norm()).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let ok = !result.diverged() && drift <= 1e-4 && e_r <= 1e-6 && elapsed < Duration::from_secs(30);
    runs.push(result);
    outcome(ok, format!("drift {drift:.2e} m, max |e_R0| {e_r:.2e}, {elapsed:.2?}"))
}

fn criterion_4(runs: &mut Vec<RunResult>) -> Outcome {
    let mut file = quiet_group_a();
    // vertical offsets beyond g/k_p3 ≈ 1 cm ask for negative cable tension
    file.initial.payload_position_m = [0.3, -0.2, 0.0];
    file.initial.payload_attitude_rad = [0.2, 0.0, 0.0];
    let result = run(&file.build().expect("valid scenario"));
    let times: Vec<f64> = result.sim.records.iter().map(|r| r.t).collect();
    let increase = max_increase_after(&times, &result.lyapunov, 5.0);
    let ok = !result.diverged() && increase <= 1e-6;
    let detail = format!(
        "V(0) = {:.3e}, V(30 s) = {:.3e}, largest increase after 5 s {increase:.2e}",
        result.lyapunov[0].total,
        result.lyapunov.last().map_or(f64::NAN, |v| v.total)
    );
    runs.push(result);
    outcome(ok, detail)
}

/// Checks one estimate trace against its cap and floor. Above the cap the
/// trace must be falling unless the step that crossed the cap is the
/// current one. Returns (ok, overshoot, crossing increment).
fn check_trace(trace: &[f64], cap: f64, floor: f64) -> (bool, f64, f64) {
    let mut ok = trace.iter().all(|v| *v >= floor && v.is_finite());
    let (mut overshoot, mut slack) = (0.0f64, 0.0f64);
    for w in trace.windows(2) {
        if w[1] > cap {
            overshoot = overshoot.max(w[1] - cap);
            if w[0] <= cap {
                slack = slack.max(w[1] - w[0]);
            } else if w[1] >= w[0] {
                ok = false;
            }
        }
    }
    (ok && overshoot <= slack, overshoot, slack)
}

fn criterion_5(runs: &mut Vec<RunResult>) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for file in [ScenarioFile::group_b(), ScenarioFile::group_c()] {
        let mut file = file;
        file.integrator.log_interval_s = file.integrator.dt_s;
        let scenario = file.build().expect("valid scenario");
        let result = run(&scenario);
        ok &= !result.diverged();
        let gains = &file.gains;
        let reference = &scenario.params.reference;
        let (mut worst_over, mut worst_slack) = (0.0f64, 0.0f64);
        for j in 0..3 {
            let mass: Vec<f64> = result.sim.records.iter().map(|r| r.estimates.mass[j]).collect();
            let inertia: Vec<f64> = result.sim.records.iter().map(|r| r.estimates.inertia[j]).collect();
            for (trace, cap, floor) in [
                (&mass, reference.max_mass, gains.mass_floor_kg),
                (&inertia, reference.max_inertia[(j, j)], gains.inertia_floor_kg_m2),
            ] {
                let (good, over, slack) = check_trace(trace, cap, floor);
                ok &= good;
                worst_over = worst_over.max(over);
                worst_slack = worst_slack.max(slack);
            }
        }
        details.push(format!("{}: overshoot {worst_over:.2e} within one-step {worst_slack:.2e}", file.label));
        runs.push(result);
    }
    outcome(ok, details.join("; "))
}

fn timed_compare(name: &str) -> (Comparison, Duration) {
    let start = Instant::now();
    let scenario: Scenario = ScenarioFile::builtin(name).expect("builtin").build().expect("valid scenario");
    let cmp = compare(&scenario);
    (cmp, start.elapsed())
}

fn criterion_6(b: &(Comparison, Duration), c: &(Comparison, Duration)) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for (cmp, elapsed) in [b, c] {
        let (a, base) = cmp.deciding_values();
        ok &= cmp.passed() && a < (1.0 - ORDERING_MARGIN) * base && *elapsed < Duration::from_secs(120);
        let metric = if cmp.label == "groupB" { "|e_x0|" } else { "|e_R0|" };
        details.push(format!("{} rms {metric} {a:.3e} vs {base:.3e} ({elapsed:.2?})", cmp.label));
    }
    outcome(ok, details.join("; "))
}

fn criterion_7(a: &(Comparison, Duration)) -> Outcome {
    let (cmp, _) = a;
    let (ad, base) = cmp.deciding_values();
    outcome(cmp.passed(), format!("rms |e_x0| {ad:.3e} vs {base:.3e}, ratio {:.3}", ad / base))
}

fn criterion_8(runs: &[&RunResult]) -> Outcome {
    let worst = runs.iter().map(|r| r.sim.max_residual).fold(0.0, f64::max);
    let diverged = runs.iter().filter(|r| r.diverged()).count();
    outcome(worst <= 1e-9 && diverged == 0, format!("{} runs, max residual {worst:.2e}", runs.len()))
}

fn criterion_9() -> Outcome {
    let b = ScenarioFile::group_b().disturbances.payload_force;
    let c = ScenarioFile::group_c().disturbances.payload_moment;
    let at_zero = b.eval(0.0);
    let b_ok = (at_zero - Vec3::new(1.0, 5.0, 1.0)).amax() <= 1e-12;
    let before = (0..5000).map(|k| c.eval(k as f64 * 1e-3).norm()).fold(0.0, f64::max);
    let after = (5000..=30000).map(|k| c.eval(k as f64 * 1e-3).x.abs()).fold(0.0, f64::max);
    let shape_ok = matches!(c, SignalSpec::Sinusoid { amplitude, .. } if amplitude == [10.0, 0.0, 0.0]);
    outcome(
        b_ok && before == 0.0 && (after - 10.0).abs() <= 1e-3 && shape_ok,
        format!("B at t=0 {:?} N; C max before 5 s {before:.1e}, peak after {after:.4} N m", at_zero.as_slice()),
    )
}

fn collect_files(dir: &Path, base: &Path, out: &mut Vec<(String, Vec<u8>)>) {
    let mut entries: Vec<_> = fs::read_dir(dir).expect("readable output").map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect_files(&path, base, out);
        } else {
            let rel = path.strip_prefix(base).unwrap().display().to_string();
            out.push((rel, fs::read(&path).unwrap()));
        }
    }
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut snapshots = Vec::new();
    for k in 0..2 {
        let dir = tmp.path().join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_multilift"))
            .args(["compare", "groupB", "--out"])
            .arg(&dir)
            .output()
            .expect("binary runs");
        if !status.status.success() {
            return outcome(false, format!("compare exited with {}", status.status));
        }
        let mut files = Vec::new();
        collect_files(&dir, &dir, &mut files);
        snapshots.push(files);
    }
    let identical = snapshots[0] == snapshots[1];
    let bytes: usize = snapshots[0].iter().map(|(_, b)| b.len()).sum();
    outcome(identical && !snapshots[0].is_empty(), format!("{} files, {bytes} bytes", snapshots[0].len()))
}

fn main() {
    let mut runs = Vec::new();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "allocation matches least-squares oracle", criterion_1()));
    results.push((2, "integrator is third order", criterion_2()));
    results.push((3, "equilibrium hold", criterion_3(&mut runs)));
    results.push((4, "Lyapunov function non-increasing after 5 s", criterion_4(&mut runs)));
    results.push((5, "estimate bounds and floors", criterion_5(&mut runs)));

    let (a, b, c) = std::thread::scope(|s| {
        let a = s.spawn(|| timed_compare("groupA"));
        let b = s.spawn(|| timed_compare("groupB"));
        let c = timed_compare("groupC");
        (a.join().unwrap(), b.join().unwrap(), c)
    });
    results.push((6, "robustness ordering in groups B and C", criterion_6(&b, &c)));
    results.push((7, "group A parity", criterion_7(&a)));

    let mut all: Vec<&RunResult> = runs.iter().collect();
    for (cmp, _) in [&a, &b, &c] {
        all.push(&cmp.adaptive);
        all.push(&cmp.baseline);
    }
    results.push((8, "manifold preservation", criterion_8(&all)));
    results.push((9, "disturbance waveforms", criterion_9()));
    results.push((10, "determinism of compare groupB", criterion_10()));

    let mut failed = 0;
    for (k, name, o) in &results {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {k:>2} {verdict}: {name} ({})", o.detail);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
