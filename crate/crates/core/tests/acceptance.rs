//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::Instant;

use compacton::conserved::{check_relations, conserved_report, integral_set, log_log_slope, speed_for_momentum, DEFAULT_TOL};
use compacton::numerics::integrate_endpoints;
use compacton::specfun::{complete_elliptic_k, jacobi_cn};
use compacton::params::{classify, scaling_exponents, ModelParams};
use compacton::profile::{build_profile, first_integral_residual, y_of_z, CompactonProfile, ProfileFamily};
use compacton::stability::{build_l, dpdc_criterion, goldstone_residual, lc_derivative_identity, lyapunov_bound, phi2_rho_half};
use compacton::variational::{compare_profiles, compare_trials, optimize_cos_power, optimize_post_gaussian};

type Outcome = Result<String, String>;

const GRID: [(f64, f64, u32); 7] =
    [(3.0, 1.0, 2), (4.0, 1.0, 2), (5.0, 1.0, 4), (6.0, 2.0, 4), (8.0, 2.0, 4), (4.0, 1.0, 6), (5.0, 2.0, 6)];
const SPEEDS: [f64; 3] = [0.5, 1.0, 2.0];

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn mp(l: f64, p: f64, m: u32, c: f64) -> Result<ModelParams<f64>, String> {
    ModelParams::new(l, p, m, c).map_err(|e| e.to_string())
}

fn exact(params: &ModelParams<f64>, n: usize) -> Result<CompactonProfile<f64>, String> {
    build_profile(params, ProfileFamily::default_for(params), n).map_err(|e| e.to_string())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn within(got: f64, want: f64, frac: f64, name: &str) -> Result<(), String> {
    ensure(rel(got, want) <= frac, format!("{name} = {got}, expected {want}"))
}

fn criterion_1() -> Outcome {
    let mut detail = Vec::new();
    for (tau, m, want, name) in [(2.0, 4u32, PI * 2f64.sqrt() / 4.0, "f1"), (3.0, 6, PI / 3.0, "f2")] {
        let series = y_of_z(tau, m, 1.0).map_err(|e| e.to_string())?;
        let quad = integrate_endpoints(
            |_, _, dr: f64| (-(2.0 * tau * (-dr).ln_1p()).exp_m1()).powf(-1.0 / m as f64),
            0.0,
            1.0,
            1e-14,
        )
        .map_err(|e| e.to_string())?
        .value;
        ensure((series - want).abs() < 1e-8, format!("{name} via 2F1 = {series}"))?;
        ensure((quad - want).abs() < 1e-8, format!("{name} via quadrature = {quad}"))?;
        detail.push(format!("{name}={series:.9} (quad diff {:.1e})", (quad - want).abs()));
    }
    Ok(detail.join(", "))
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for c in SPEEDS {
        let params = mp(3.0, 1.0, 2, c)?;
        for family in [ProfileFamily::ClosedSin2, ProfileFamily::Hyperelliptic] {
            let prof = build_profile(&params, family, 512).map_err(|e| e.to_string())?;
            for s in &prof.grid {
                let want = 3.0 * c * (s.y / (2.0 * 6f64.sqrt())).cos().powi(2);
                worst = worst.max((s.f - want).abs());
            }
        }
    }
    ensure(worst < 1e-8, format!("(3,1,2) sup error {worst:.2e}"))?;
    let mut res: f64 = 0.0;
    for c in SPEEDS {
        let prof = build_profile(&mp(4.0, 1.0, 2, c)?, ProfileFamily::ClosedCn2, 512).map_err(|e| e.to_string())?;
        within(prof.amplitude, (6.0 * c).sqrt(), 1e-14, "cn2 amplitude")?;
        let (beta, k) = ((c / 96.0).powf(0.25), 0.5f64.sqrt());
        within(prof.y_half, complete_elliptic_k(k).map_err(|e| e.to_string())? / beta, 1e-13, "cn2 half-width")?;
        for s in prof.grid.iter().step_by(16) {
            let cn = jacobi_cn(beta * s.y, k).map_err(|e| e.to_string())?;
            ensure((s.f - (6.0 * c).sqrt() * cn * cn).abs() < 1e-10, format!("cn2 value at y = {}", s.y))?;
        }
        res = res.max(first_integral_residual(&prof));
    }
    ensure(res < 1e-8, format!("(4,1,2) first-integral residual {res:.2e}"))?;
    Ok(format!("cos2 sup error {worst:.1e}, cn2 residual {res:.1e}"))
}

fn criterion_3() -> Outcome {
    let (mut worst, mut worst_slope): (f64, f64) = (0.0, 0.0);
    for (l, p, m) in GRID {
        for c in SPEEDS {
            let rep = conserved_report(&exact(&mp(l, p, m, c)?, 128)?, DEFAULT_TOL).map_err(|e| e.to_string())?;
            let err = rel(rep.energy, rep.energy_theorem);
            ensure(err < 1e-6, format!("({l},{p},{m}) c={c}: H={} vs Pc/r={}", rep.energy, rep.energy_theorem))?;
            worst = worst.max(err);
        }
        let (mut ps, mut es) = (Vec::new(), Vec::new());
        for c in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let rep = conserved_report(&exact(&mp(l, p, m, c)?, 128)?, DEFAULT_TOL).map_err(|e| e.to_string())?;
            ps.push(rep.momentum);
            es.push(rep.energy);
        }
        let r = scaling_exponents(&mp(l, p, m, 1.0)?).r.ok_or("r undefined")?;
        let slope = log_log_slope(&ps, &es);
        ensure((slope + r).abs() < 1e-4, format!("({l},{p},{m}): slope {slope} vs -r = {}", -r))?;
        worst_slope = worst_slope.max((slope + r).abs());
    }
    Ok(format!("max rel error {worst:.1e}, max slope error {worst_slope:.1e}"))
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    for (l, p, m) in GRID {
        for c in SPEEDS {
            let params = mp(l, p, m, c)?;
            let ints = integral_set(&exact(&params, 128)?, DEFAULT_TOL).map_err(|e| e.to_string())?;
            let r = check_relations(&params, &ints).max();
            ensure(r < 1e-6, format!("({l},{p},{m}) c={c}: residual {r:.2e}"))?;
            worst = worst.max(r);
        }
    }
    let params = mp(3.0, 1.0, 2, 1.0)?;
    let control = CompactonProfile::sampled(&params, 5.0, 512, |u| {
        let x = u / 5.0;
        (3.0 * (1.0 - x * x).powi(2), -12.0 * x * (1.0 - x * x) / 5.0)
    })
    .map_err(|e| e.to_string())?;
    let ints = integral_set(&control, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let bad = check_relations(&params, &ints).max();
    ensure(bad > 0.1, format!("control residual only {bad:.2e}"))?;
    Ok(format!("max residual {worst:.1e}, control {bad:.2}"))
}

fn criterion_5() -> Outcome {
    let m2 = mp(3.0, 1.0, 2, 1.0)?;
    let m4 = mp(3.0, 1.0, 4, 1.0)?;
    let pg = optimize_post_gaussian(&m2, 1.0).map_err(|e| e.to_string())?;
    within(pg.amplitude, 0.583578, 0.01, "m=2 A")?;
    within(pg.coefficient.unwrap_or(f64::NAN), 0.0314705, 0.01, "m=2 coefficient")?;
    within(pg.exponent.unwrap_or(f64::NAN), 2.308, 0.01, "m=2 2n")?;
    let pg4 = optimize_post_gaussian(&m4, 1.0).map_err(|e| e.to_string())?;
    within(pg4.amplitude, 0.995936, 0.01, "m=4 A")?;
    within(pg4.coefficient.unwrap_or(f64::NAN), 0.396108, 0.01, "m=4 coefficient")?;
    within(pg4.exponent.unwrap_or(f64::NAN), 1.84131, 0.01, "m=4 2n")?;
    let cp4 = optimize_cos_power(&m4, 1.0).map_err(|e| e.to_string())?;
    within(cp4.beta, 0.342787, 0.01, "m=4 cos beta")?;
    within(cp4.shape, 5.67846, 0.01, "m=4 gamma")?;
    within(cp4.amplitude, 0.97067, 0.01, "m=4 cos A")?;
    let cp2 = optimize_cos_power(&m2, 1.0).map_err(|e| e.to_string())?;
    let c = speed_for_momentum(&m2, 1.0).map_err(|e| e.to_string())?;
    let ex = build_profile(&m2.with_speed(c).map_err(|e| e.to_string())?, ProfileFamily::ClosedSin2, 512)
        .map_err(|e| e.to_string())?;
    let d = compare_profiles(&ex, &cp2).map_err(|e| e.to_string())?;
    ensure((cp2.shape - 2.0).abs() < 1e-5, format!("m=2 gamma = {}", cp2.shape))?;
    within(cp2.beta, 1.0 / (2.0 * 6f64.sqrt()), 1e-5, "m=2 cos beta")?;
    ensure(d.sup < 1e-5, format!("m=2 cos-power vs exact sup {:.2e}", d.sup))?;
    ensure(cp2.energy <= pg.energy, "cos-power energy above post-Gaussian for m=2")?;
    let between = compare_trials(&pg4, &cp4, 4001);
    Ok(format!(
        "PG m=2 A={:.6} coef={:.7} 2n={:.4}; PG m=4 A={:.6} coef={:.6} 2n={:.5}; cos m=4 beta={:.6} gamma={:.5} A={:.5}; m=2 exact sup {:.1e}; m=4 trial sup {:.3}",
        pg.amplitude,
        pg.coefficient.unwrap_or(f64::NAN),
        pg.exponent.unwrap_or(f64::NAN),
        pg4.amplitude,
        pg4.coefficient.unwrap_or(f64::NAN),
        pg4.exponent.unwrap_or(f64::NAN),
        cp4.beta,
        cp4.shape,
        cp4.amplitude,
        d.sup,
        between.sup
    ))
}

fn criterion_6() -> Outcome {
    let mut points: Vec<(f64, f64, u32)> = GRID.to_vec();
    points.extend([(20.0, 1.0, 2), (7.0, 1.0, 2), (13.0, 1.0, 4)]);
    let mut count = 0;
    for (l, p, m) in points {
        for c in SPEEDS {
            let params = mp(l, p, m, c)?;
            let ints = integral_set(&exact(&params, 128)?, DEFAULT_TOL).map_err(|e| e.to_string())?;
            let momentum = ints.i2 / 2.0;
            let phi2 = phi2_rho_half(&params, momentum, &ints).numeric;
            let regime = classify(&params);
            let dpdc = dpdc_criterion(&params);
            if regime.marginal {
                ensure(phi2.abs() < 1e-8 * momentum * c, format!("({l},{p},{m}) marginal phi2 = {phi2:.2e}"))?;
                ensure(dpdc.exponent == 0.0 && !regime.stable_window, format!("({l},{p},{m}) marginal flags"))?;
            } else {
                let signs = [dpdc.exponent > 0.0, phi2 > 0.0, regime.stable_window];
                ensure(signs.iter().all(|&s| s == signs[0]), format!("({l},{p},{m}) c={c}: {signs:?}"))?;
            }
            count += 1;
        }
    }
    Ok(format!("{count} points agree, marginal lines (7,1,2) and (13,1,4) vanish"))
}

fn criterion_7() -> Outcome {
    let params = mp(3.0, 1.0, 2, 1.0)?;
    let mut g = Vec::new();
    for n in [256, 512] {
        let prof = build_profile(&params, ProfileFamily::ClosedSin2, n).map_err(|e| e.to_string())?;
        let l_op = build_l(&prof).map_err(|e| e.to_string())?;
        g.push(goldstone_residual(&prof, &l_op).map_err(|e| e.to_string())?);
    }
    ensure(g[0] < 1e-3, format!("Goldstone residual {:.2e} at 512 points", g[0]))?;
    ensure(g[1] < g[0], format!("Goldstone residual not decreasing: {g:?}"))?;
    let lc = lc_derivative_identity(&params, ProfileFamily::ClosedSin2, 1e-3, 256).map_err(|e| e.to_string())?;
    ensure(lc < 1e-3, format!("L df/dc residual {lc:.2e}"))?;
    let cn = mp(4.0, 1.0, 2, 1.0)?;
    let a = lc_derivative_identity(&cn, ProfileFamily::ClosedCn2, 2e-3, 256).map_err(|e| e.to_string())?;
    let b = lc_derivative_identity(&cn, ProfileFamily::ClosedCn2, 1e-3, 256).map_err(|e| e.to_string())?;
    ensure(b < 1e-3, format!("(4,1,2) L df/dc residual {b:.2e}"))?;
    let order = (a / b).log2();
    ensure((1.7..2.3).contains(&order), format!("dc convergence order {order:.2}"))?;
    Ok(format!(
        "Goldstone {:.1e} -> {:.1e}; (3,1,2) L df/dc {lc:.1e}; (4,1,2) {b:.1e}, order {order:.2}",
        g[0], g[1]
    ))
}

fn criterion_8() -> Outcome {
    let mut worst: f64 = 0.0;
    for (l, p, m) in GRID {
        for c in SPEEDS {
            let params = mp(l, p, m, c)?;
            let ints = integral_set(&exact(&params, 128)?, DEFAULT_TOL).map_err(|e| e.to_string())?;
            let b = lyapunov_bound(&params, &ints);
            let h = b.gap + b.h_min;
            ensure(b.gap.abs() <= 1e-6 * h.abs(), format!("({l},{p},{m}) c={c}: gap {:.2e}", b.gap))?;
            worst = worst.max(b.gap.abs() / h.abs());
        }
    }
    Ok(format!("max relative gap {worst:.1e}"))
}

fn cli_csv(args: &[&str]) -> Result<Vec<Vec<f64>>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("fig.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_compacton"))
        .args(args)
        .args(["--format", "csv", "--out"])
        .arg(&out)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), format!("{args:?} exited with {status}"))?;
    let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with(|c: char| c.is_ascii_alphabetic()))
        .map(|l| l.split(',').map(|x| x.parse::<f64>().map_err(|e| format!("{x}: {e}"))).collect())
        .collect()
}

/// Monotone halves with the maximum at `y = 0`; returns the half-width.
fn bell_shaped(rows: &[Vec<f64>]) -> Result<f64, String> {
    let mid = rows.len() / 2;
    ensure(rows[mid][0].abs() < 1e-12, "grid not centered")?;
    for w in rows.windows(2) {
        let rising = w[1][0] <= 0.0;
        let ok = if rising { w[1][1] >= w[0][1] } else { w[1][1] <= w[0][1] };
        ensure(ok, format!("not monotone near y = {}", w[1][0]))?;
    }
    let peak = rows.iter().map(|r| r[1]).fold(f64::MIN, f64::max);
    ensure(rows[mid][1] == peak, "maximum not at y = 0")?;
    Ok(rows[rows.len() - 1][0])
}

fn criterion_9() -> Outcome {
    let fig1 = cli_csv(&["profile", "--l", "3", "--p", "1", "--m", "4", "--c", "1", "--grid-points", "512"])?;
    let y1 = bell_shaped(&fig1)?;
    ensure((fig1[fig1.len() / 2][1] / 3.0 - 1.0).abs() < 1e-12, "Fig. 1 peak f/(3c) != 1")?;
    ensure(fig1[0][1] == 0.0 && fig1[fig1.len() - 1][1] == 0.0, "Fig. 1 edges not zero")?;
    let fig2 = cli_csv(&["profile", "--l", "5", "--p", "1", "--m", "4", "--z-curve", "--grid-points", "512"])?;
    let y2 = bell_shaped(&fig2)?;
    ensure((y2 - PI * 2f64.sqrt() / 4.0).abs() < 1e-8, format!("Fig. 2 half-width {y2}"))?;
    let fig3 = cli_csv(&["variational", "--l", "3", "--p", "1", "--m", "2", "--momentum", "1", "--family", "post_gaussian"])?;
    ensure(fig3[0].len() == 3, "Fig. 3 needs exact and post-Gaussian columns")?;
    let fig4 = cli_csv(&["variational", "--l", "3", "--p", "1", "--m", "4", "--momentum", "1"])?;
    ensure(fig4[0].len() == 4, "Fig. 4/5 need exact and both trial columns")?;
    Ok(format!("Fig. 1 half-width {y1:.6}, Fig. 2 half-width {y2:.6}; Figs. 3-5 CSVs emitted"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("special-case constants", criterion_1),
        ("exact m=2 compactons", criterion_2),
        ("energy-momentum theorem", criterion_3),
        ("integral relations", criterion_4),
        ("variational reproduction", criterion_5),
        ("stability consistency", criterion_6),
        ("Goldstone and L df/dc", criterion_7),
        ("Lyapunov equality", criterion_8),
        ("figure CSVs", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS [{secs:.2}s] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL [{secs:.2}s] {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
