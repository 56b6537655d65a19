//! Acceptance run: one line per criterion.
//!
//! `cargo test -p quadric-asym --test acceptance`
//!
//! Two criteria state targets that the integrals do not actually reach (the
//! sphere coefficient and the linear-divisor limit). Each is run twice: once
//! against the stated target, which fails and is listed in [`EXPECTED_RED`],
//! and once against the value the integral converges to. The process exits
//! non-zero only when some line disagrees with its expectation.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::time::Instant;

use quadric_asym::asymptotics::{default_sweep, leading_coefficient, verify_theorem, VerifyOptions};
use quadric_asym::fields::{
    bump_annulus, catalog_lookup, gaussian, poly_growth, ProblemSpec, ScalarField, WeightField,
};
use quadric_asym::geometry::{identity_suite, volume_element_suite};
use quadric_asym::integrator::{evaluate_i_nu, fiber_grid_check, IntegratorOptions};
use quadric_asym::measure::{integrate_measure, weak_convergence_check, WeightedSurfaceMeasure};
use quadric_asym::stationary_phase::{gaussian_problem, leading_error_fit, resolvent_bound_check, Phase};
use quadric_asym::variants::{d1_contour, linear_divisor, sphere_quadric, LinearOptions, SphereOptions};
use quadric_asym::Result;

const SEED: u64 = 20_240_601;

const C1_NU: f64 = 1e-3;
const C1_BUDGET: u64 = 100_000_000;
const C1_SURFACE_BUDGET: u64 = 100_000_000;
const C1_REL: f64 = 0.01;
const C1_SECONDS: f64 = 600.0;
const C2_SLACK: f64 = 3.0;
const C3_CASES: usize = 10_000;
const C4_TOL: f64 = 1e-8;
const C5_REL: f64 = 0.005;
const C7_MASS_REL: f64 = 0.01;
const C7_WEAK_REL: f64 = 0.05;
const C8_REL: f64 = 1e-3;
const C8_SECONDS: f64 = 60.0;
const C10_REL: f64 = 0.05;
const C11_SLOPE_TOL: f64 = 0.15;
const C11_LAMBDAS: [f64; 4] = [20.0, 40.0, 80.0, 160.0];

/// Lines whose stated target is known to be wrong.
const EXPECTED_RED: [&str; 2] = ["8 literal", "10 literal"];

struct Line {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn line(id: &'static str, passed: bool, detail: String) -> Line {
    Line { id, passed, detail }
}

fn failed(id: &'static str, e: quadric_asym::Error) -> Line {
    line(id, false, format!("error: {e}"))
}

/// `exp(−|z|²)`, `Γ ≡ 1`; declared decay `M = 8` so the exponent conditions
/// hold for `d = 3` as well.
fn gauss_spec(d: usize) -> ProblemSpec {
    let f = catalog_scalar("gaussian", &[("M", 8.0)], 2 * d);
    ProblemSpec::new(f, WeightField::constant(2 * d, 1.0), d).unwrap()
}

fn catalog_scalar(name: &str, params: &[(&str, f64)], dim: usize) -> ScalarField {
    let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    catalog_lookup(name, &p, dim).unwrap().into_scalar().unwrap()
}

fn c1() -> Result<Line> {
    let t = Instant::now();
    let spec = gauss_spec(2);
    let a = leading_coefficient(&spec, C1_SURFACE_BUDGET, SEED)?;
    let est = evaluate_i_nu(&spec, C1_NU, IntegratorOptions::new(C1_BUDGET, SEED))?;
    let secs = t.elapsed().as_secs_f64();
    let target = PI.powi(3);
    let (v, s) = (C1_NU * est.value, C1_NU * est.std_error);
    let dev = (v - target).abs();
    let ok = dev <= C1_REL * target + 3.0 * s && secs <= C1_SECONDS;
    Ok(line(
        "1",
        ok,
        format!(
            "d=2 gaussian: ν·I_ν(1e-3) = {v:.4} ± {s:.4} vs π³ = {target:.4} (dev {:.3}%, allowed 1% + 3σ); A = {:.6} vs π²; {secs:.0}s",
            100.0 * dev / target,
            a.value
        ),
    ))
}

fn c2(d: usize, id: &'static str, budget: u64) -> Result<Line> {
    let spec = gauss_spec(d);
    let mut opts = VerifyOptions::new(budget, SEED);
    opts.surface_budget = 20_000_000;
    let sweep = default_sweep(d);
    let rep = verify_theorem(&spec, &sweep, opts)?;
    let first = rep.rows.first().unwrap();
    let last = rep.rows.last().unwrap();
    let ok = last.ratio <= C2_SLACK * first.ratio;
    Ok(line(
        id,
        ok,
        format!(
            "d={d}: |I^Δ|/χ_d = {:.4} at ν={:.0e}, {:.4} at ν={:.0e} (limit {C2_SLACK}×); max ratio {:.4}",
            first.ratio,
            first.nu,
            last.ratio,
            last.nu,
            rep.max_ratio()
        ),
    ))
}

fn c3() -> Result<Line> {
    let mut worst = Vec::new();
    let mut ok = true;
    for d in [2usize, 3] {
        for c in identity_suite(d, C3_CASES, SEED)? {
            ok &= c.passed && c.cases == C3_CASES;
            worst.push(format!("d={d} {} {:.1e}/{:.0e}", c.name, c.max_rel_error, c.tolerance));
        }
    }
    Ok(line("3", ok, format!("{C3_CASES} cases each: {}", worst.join(", "))))
}

fn c4() -> Result<Line> {
    let mut parts = Vec::new();
    let mut ok = true;
    for d in [2usize, 3] {
        let v = volume_element_suite(d, 10, 10, SEED)?;
        ok &= v.at_zero <= C4_TOL && v.t_spread <= C4_TOL;
        parts.push(format!(
            "d={d}: |μ(η,0)−1| ≤ {:.1e}, t-spread {:.1e}, vs (1−θ²)^(d−1) {:.1e}",
            v.at_zero, v.t_spread, v.vs_closed_form
        ));
    }
    Ok(line(
        "4",
        ok,
        format!("10×10 grid, tol {C4_TOL:e}: {}", parts.join("; ")),
    ))
}

fn c5() -> Line {
    let mut parts = Vec::new();
    let mut ok = true;
    for d in [2usize, 3] {
        let n = 2 * d;
        let cases: Vec<(&str, ScalarField, WeightField)> = vec![
            ("gaussian", gaussian(n), WeightField::constant(n, 1.0)),
            (
                "gaussian a=1/2, Γ=⟨z⟩",
                catalog_scalar("gaussian", &[("a", 0.5)], n),
                poly_growth(n, 1.0),
            ),
            (
                "poly_decay p=8",
                catalog_scalar("poly_decay", &[("p", 8.0)], n),
                WeightField::constant(n, 1.0),
            ),
            (
                "bump_annulus",
                bump_annulus(n, 0.5, 2.0).unwrap(),
                WeightField::constant(n, 1.0),
            ),
            ("gaussian, Γ=2", gaussian(n), WeightField::constant(n, 2.0)),
        ];
        for (name, f, g) in cases {
            let spec = ProblemSpec::new(f, g, d).unwrap();
            match leading_coefficient(&spec, 20_000_000, SEED) {
                Ok(a) => {
                    let sigma = a.charts.std_error.hypot(a.thin_slab.std_error);
                    let diff = (a.charts.value - a.thin_slab.value).abs();
                    let pass = diff <= (3.0 * sigma).max(C5_REL * a.value.abs());
                    ok &= pass;
                    parts.push(format!("d={d} {name}: {:.3}%", 100.0 * a.method_agreement));
                }
                Err(e) => {
                    ok = false;
                    parts.push(format!("d={d} {name}: {e}"));
                }
            }
        }
    }
    line(
        "5",
        ok,
        format!("charts vs thin slab, max(3σ, 0.5%): {}", parts.join(", ")),
    )
}

fn c6() -> Result<Line> {
    // M = 4: t = 1 maximises e^{−t²}(1+t)^M, where C is fitted.
    let spec = ProblemSpec::new(gaussian(4), WeightField::constant(4, 1.0), 2)?;
    let ts: Vec<f64> = (0..10).map(|i| 0.3 * (4.0f64 / 0.3).powf(i as f64 / 9.0)).collect();
    let rep = fiber_grid_check(&spec, &[1e-1, 1e-2], 10, &ts, 0.1, 1.0, 1.5, SEED)?;
    Ok(line(
        "6",
        rep.passed(),
        format!(
            "10×10 (η,t) grid, ν ∈ {{1e-1, 1e-2}}: trivial {}, two-sided gap {} on {} points, decay bound {} (C = {:.3e} fitted at t = 1, worst ratio {:.3})",
            rep.trivial_ok, rep.leading_gap_ok, rep.checked, rep.decay_ok, rep.c_fit, rep.worst_ratio
        ),
    ))
}

fn c7() -> Result<Line> {
    let d = 2;
    let n = 2 * d;
    let m = WeightedSurfaceMeasure::new(d)?;
    let (a, b, whole) = (m.ball_mass(0.0, 1.0)?, m.ball_mass(1.0, 2.5)?, m.ball_mass(0.0, 2.5)?);
    let additive = (a + b - whole).abs() <= 4.0 * f64::EPSILON * whole;
    let mc = m.ball_mass_mc(1.0, 20_000_000, SEED)?;
    let unit_ok = (mc.value / (PI * PI) - 1.0).abs() <= C7_MASS_REL && (a - PI * PI).abs() <= 1e-12 * a;

    let fields = [
        gaussian(n),
        catalog_scalar("gaussian", &[("a", 2.0)], n),
        catalog_scalar("poly_decay", &[("p", 5.0)], n),
        bump_annulus(n, 0.5, 2.0)?,
        catalog_scalar("poly_decay", &[("p", 8.0)], n),
    ];
    let mut bound_ok = true;
    let mut ratios = Vec::new();
    for f in &fields {
        match integrate_measure(d, f, 3.0, 4_000_000, SEED) {
            Ok(r) => ratios.push(format!("{:.2}", r.value.value.abs() / r.bound)),
            Err(e) => {
                bound_ok = false;
                ratios.push(e.to_string());
            }
        }
    }

    let weak = weak_convergence_check(
        d,
        &WeightField::constant(n, 1.0),
        &bump_annulus(n, 0.5, 2.0)?,
        &[1e-1, 1e-2, 1e-3],
        4_000_000,
        SEED,
    )?;
    let last = weak.rows.last().unwrap();
    let weak_ok = last.gap <= C7_WEAK_REL * last.limit.abs();
    Ok(line(
        "7",
        additive && unit_ok && bound_ok && weak_ok,
        format!(
            "additivity {additive}; unit-ball mass MC {:.4} ± {:.4} vs π² (1%) {unit_ok}; |∫f dμ|/(C₃|f|_3) = [{}] {bound_ok}; weak gap at 1e-3 {:.2}% {weak_ok}",
            mc.value,
            mc.std_error,
            ratios.join(", "),
            100.0 * last.gap / last.limit.abs()
        ),
    ))
}

fn c8() -> Result<(Line, Line)> {
    let t = Instant::now();
    let mut got = Vec::new();
    for d in [2usize, 3] {
        let rep = sphere_quadric(
            &gaussian(d),
            &WeightField::constant(d, 1.0),
            2.0,
            &[1e-2, 1e-3],
            SphereOptions::default(),
        )?;
        got.push(rep.nu_i_limit());
    }
    let secs = t.elapsed().as_secs_f64();
    let stated = [2.0 * PI * PI / E, 4.0 * PI * PI / E];
    let actual = [PI * PI / E, 2.0 * PI * PI / E];
    let check = |targets: [f64; 2]| {
        let devs: Vec<f64> = got.iter().zip(targets).map(|(g, t)| (g / t - 1.0).abs()).collect();
        (devs.iter().all(|&x| x <= C8_REL) && secs <= C8_SECONDS, devs)
    };
    let (lit_ok, lit_dev) = check(stated);
    let (cor_ok, cor_dev) = check(actual);
    Ok((
        line(
            "8 literal",
            lit_ok,
            format!(
                "|k|=2: ν·I'_ν → {:.5} (d=2), {:.5} (d=3) vs 2π²/e = {:.5}, 4π²/e = {:.5}; dev {:.1}%, {:.1}%",
                got[0],
                got[1],
                stated[0],
                stated[1],
                100.0 * lit_dev[0],
                100.0 * lit_dev[1]
            ),
        ),
        line(
            "8 corrected",
            cor_ok,
            format!(
                "π∫_Σ F/(Γ|∇ω|) = π²/e = {:.5} (d=2), 2π²/e = {:.5} (d=3); dev {:.1e}, {:.1e} (allowed 0.1%); {secs:.1}s",
                actual[0], actual[1], cor_dev[0], cor_dev[1]
            ),
        ),
    ))
}

fn c9() -> Result<Line> {
    let f = bump_annulus(2, 0.5, 2.0)?;
    let sweep: Vec<f64> = (0..=10).map(|k| 0.1 * 10f64.powf(-(k as f64) / 5.0)).collect();
    let rep = d1_contour(&f, &WeightField::constant(2, 1.0), &sweep)?;
    // Independent pin: composite Simpson on each ray.
    let n = 20_000;
    let (a, b) = (0.5, 2.0);
    let h = (b - a) / n as f64;
    let mut pin = 0.0;
    for (ex, ey) in [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)] {
        let g = |r: f64| f.eval(&[r * ex, r * ey]) / r;
        let mut s = g(a) + g(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(a + i as f64 * h);
        }
        pin += s * h / 3.0;
    }
    let pinned = (rep.contour.value / pin - 1.0).abs() <= 1e-9;
    let first = rep.rows.first().unwrap().remainder.abs();
    let last = rep.rows.last().unwrap().remainder.abs();
    Ok(line(
        "9",
        rep.bounded && pinned,
        format!(
            "contour {:.10} vs Simpson {pin:.10} ({pinned}); |I'_ν − πν⁻¹·contour| = {first:.3e} at 1e-1, {last:.3e} at 1e-3, bounded {}",
            rep.contour.value, rep.bounded
        ),
    ))
}

fn c10() -> Result<(Line, Line)> {
    let spec = gauss_spec(2);
    let rep = linear_divisor(&spec, &[1e-1, 1e-2, 1e-3], LinearOptions::new(4_000_000, SEED))?;
    let last = rep.rows.last().unwrap().value;
    let im_zero = last.im.abs() <= 3.0 * last.im_se;
    let lit = rep.real_limit;
    let cor = rep.limit;
    Ok((
        line(
            "10 literal",
            rep.real_limit_converged && im_zero,
            format!(
                "I'(1e-3) = {:.4} {:+.4}i vs πS + PV_ext = {:.4} (within max(3σ, 5%): {}); Im ≈ 0: {im_zero}",
                last.re, last.im, lit.re, rep.real_limit_converged
            ),
        ),
        line(
            "10 corrected",
            rep.converged,
            format!(
                "limit PV∫F/(x·y) − iπS = {:.4} {:+.4}i (−π³ = {:.4}); I'(1e-3) within max(3σ, {:.0}%): {}",
                cor.re,
                cor.im,
                -PI.powi(3),
                100.0 * C10_REL,
                rep.converged
            ),
        ),
    ))
}

fn c11() -> Result<Line> {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [1usize, 2] {
        let fit = leading_error_fit(&gaussian_problem(n)?, &C11_LAMBDAS)?;
        let pass = (fit.slope - fit.expected_slope).abs() <= C11_SLOPE_TOL;
        ok &= pass;
        parts.push(format!("n={n} slope {:.3} vs {:.1}", fit.slope, fit.expected_slope));
    }
    let sweep = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    for n in [2usize, 3] {
        let p = gaussian_problem(n)?;
        let rep = resolvent_bound_check(&p.phi, &Phase::quadratic(n, -0.1), &vec![0.0; n], 1.0, &sweep, false)?;
        ok &= rep.bounded;
        let r0 = rep.rows.first().unwrap().bound_ratio;
        let r1 = rep.rows.last().unwrap().bound_ratio;
        parts.push(format!("n={n} |𝓘|/(νχ) {r0:.3} → {r1:.3} bounded {}", rep.bounded));
    }
    Ok(line("11", ok, parts.join("; ")))
}

fn c12() -> Result<Line> {
    let spec = gauss_spec(2);
    let run = |workers: usize| -> Result<String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        pool.install(|| {
            let mut opts = VerifyOptions::new(1_000_000, SEED);
            opts.surface_budget = 4_000_000;
            let rep = verify_theorem(&spec, &[1e-1, 1e-2], opts)?;
            let lin = linear_divisor(&spec, &[1e-2], LinearOptions::new(500_000, SEED))?;
            Ok(format!("{rep:?}{lin:?}"))
        })
    };
    let mut same = true;
    let mut outs = Vec::new();
    for w in [1usize, 2] {
        let a = run(w)?;
        same &= a == run(w)?;
        outs.push(a);
    }
    let across = outs[0] == outs[1];
    Ok(line(
        "12",
        same,
        format!(
            "repeat with identical (config, seed, workers) byte-identical: {same}; across 1 vs 2 workers: {across}"
        ),
    ))
}

fn main() {
    let started = Instant::now();
    let mut lines = Vec::new();
    let mut push = |r: Result<Line>, id: &'static str| lines.push(r.unwrap_or_else(|e| failed(id, e)));
    push(c1(), "1");
    push(c2(2, "2 d=2", 4_000_000), "2 d=2");
    push(c2(3, "2 d=3", 4_000_000), "2 d=3");
    push(c3(), "3");
    push(c4(), "4");
    push(Ok(c5()), "5");
    push(c6(), "6");
    push(c7(), "7");
    match c8() {
        Ok((a, b)) => {
            push(Ok(a), "8 literal");
            push(Ok(b), "8 corrected");
        }
        Err(e) => {
            push(Err(e.clone()), "8 literal");
            push(Err(e), "8 corrected");
        }
    }
    push(c9(), "9");
    match c10() {
        Ok((a, b)) => {
            push(Ok(a), "10 literal");
            push(Ok(b), "10 corrected");
        }
        Err(e) => {
            push(Err(e.clone()), "10 literal");
            push(Err(e), "10 corrected");
        }
    }
    push(c11(), "11");
    push(c12(), "12");

    let mut surprises = Vec::new();
    for l in &lines {
        let red = EXPECTED_RED.contains(&l.id);
        let tag = if l.passed { "PASS" } else { "FAIL" };
        let note = if red { " [stated target is wrong]" } else { "" };
        println!("{tag} {:<12} {}{note}", l.id, l.detail);
        if l.passed == red {
            surprises.push(l.id);
        }
    }
    let passed = lines.iter().filter(|l| l.passed).count();
    println!(
        "acceptance: {passed}/{} lines pass, {} expected red, {:.0}s",
        lines.len(),
        EXPECTED_RED.len(),
        started.elapsed().as_secs_f64()
    );
    if !surprises.is_empty() {
        println!("unexpected outcome: {}", surprises.join(", "));
        std::process::exit(1);
    }
}
