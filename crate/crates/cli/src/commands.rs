use quadric_asym::asymptotics::{leading_coefficient, verify_theorem, VerifyOptions};
use quadric_asym::fields::ProblemSpec;
use quadric_asym::geometry::{identity_suite, volume_element_suite};
use quadric_asym::measure::{integrate_measure, weak_convergence_check, WeightedSurfaceMeasure};
use quadric_asym::stationary_phase::{
    decay_constant_fit, gaussian_problem, leading_error_fit, resolvent_bound_check, Phase,
};
use quadric_asym::variants::{
    d1_contour, kinetic_kernel_demo, linear_divisor, sphere_quadric, LinearOptions, SphereOptions,
};
use quadric_asym::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CliError, Command, RunConfig, VariantKind};
use crate::output::{Cell, Series, Table};

/// Volume-element tolerance.
const VOLUME_TOL: f64 = 1e-8;
/// Allowed deviation of the stationary-phase error slope.
const SLOPE_TOL: f64 = 0.15;

/// What a command produced, before anything touches the disk.
#[derive(Debug, Default)]
pub struct Outcome {
    pub table: Table,
    pub series: Vec<Series>,
    pub payload: Value,
    pub passed: bool,
    /// Why the assertion failed, when it did.
    pub failure: Option<String>,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(v)?)
}

/// Errors that mean "the check ran and failed" rather than "could not run".
pub fn is_assertion(e: &CliError) -> bool {
    matches!(
        e,
        CliError::Library(
            Error::RemainderUnbounded { .. } | Error::MethodsDisagree { .. } | Error::BoundViolated { .. }
        )
    )
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::VerifyAsymptotic => verify_asymptotic(cfg),
        Command::SurfaceIntegral => surface_integral(cfg),
        Command::GeometryCheck => geometry_check(cfg),
        Command::MeasureCheck => measure_check(cfg),
        Command::Variants => variants(cfg),
        Command::StationaryPhase => stationary_phase(cfg),
    }
}

fn spec(cfg: &RunConfig) -> Result<ProblemSpec, CliError> {
    let dim = 2 * cfg.d;
    Ok(ProblemSpec::new(
        cfg.f.scalar("f", dim)?,
        cfg.gamma.weight("gamma", dim)?,
        cfg.d,
    )?)
}

fn verify_asymptotic(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = spec(cfg)?;
    let opts = VerifyOptions {
        budget: cfg.budget,
        surface_budget: cfg.surface.budget,
        seed: cfg.seed,
        theta0: cfg.theta0,
    };
    let report = verify_theorem(&spec, &cfg.nu_sweep, opts)?;
    let mut table = Table::new(&["nu", "I_nu", "stderr", "leading", "remainder", "chi_d", "ratio"]);
    for r in &report.rows {
        table.push(vec![
            r.nu.into(),
            r.i_nu.value.into(),
            r.i_nu.std_error.into(),
            r.leading.into(),
            r.remainder.into(),
            r.chi_d.into(),
            r.ratio.into(),
        ]);
    }
    let series = vec![
        Series::new(
            "nu nu*I_nu",
            report.rows.iter().map(|r| (r.nu, r.nu * r.i_nu.value)).collect(),
        ),
        Series::new("nu ratio", report.rows.iter().map(|r| (r.nu, r.ratio)).collect()),
    ];
    let failure = report.certify().err().map(|e| e.to_string());
    Ok(Outcome {
        table,
        series,
        payload: to_value(&report)?,
        passed: failure.is_none(),
        failure,
    })
}

fn surface_integral(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = spec(cfg)?;
    let a = leading_coefficient(&spec, cfg.surface.budget, cfg.seed)?;
    let mut table = Table::new(&["method", "value", "stderr", "n_samples"]);
    for (name, est) in [("charts", &a.charts), ("thin_slab", &a.thin_slab)] {
        table.push(vec![
            name.into(),
            est.value.into(),
            est.std_error.into(),
            est.n_samples.into(),
        ]);
    }
    table.push(vec!["combined".into(), a.value.into(), a.std_error.into(), 0u64.into()]);
    Ok(Outcome {
        table,
        series: Vec::new(),
        payload: to_value(&a)?,
        passed: true,
        failure: None,
    })
}

fn geometry_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = cfg.budget.min(1_000_000) as usize;
    let ids = identity_suite(cfg.d, n, cfg.seed)?;
    let vol = volume_element_suite(cfg.d, 10, 10, cfg.seed)?;
    let mut table = Table::new(&["check", "cases", "max_error", "tolerance", "passed"]);
    for c in &ids {
        table.push(vec![
            c.name.clone().into(),
            c.cases.into(),
            c.max_rel_error.into(),
            c.tolerance.into(),
            c.passed.into(),
        ]);
    }
    let vol_rows = [
        ("mu_at_zero", vol.at_zero),
        ("mu_vs_closed_form", vol.vs_closed_form),
        ("mu_t_spread", vol.t_spread),
    ];
    for (name, err) in vol_rows {
        table.push(vec![
            name.into(),
            100usize.into(),
            err.into(),
            VOLUME_TOL.into(),
            (err <= VOLUME_TOL).into(),
        ]);
    }
    let bad: Vec<&str> = ids
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .chain(vol_rows.iter().filter(|(_, e)| *e > VOLUME_TOL).map(|(n, _)| *n))
        .collect();
    Ok(Outcome {
        table,
        series: Vec::new(),
        payload: json!({ "identities": ids, "volume_element": vol }),
        passed: bad.is_empty(),
        failure: (!bad.is_empty()).then(|| format!("failed: {}", bad.join(", "))),
    })
}

fn measure_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.d;
    let dim = 2 * d;
    let measure = WeightedSurfaceMeasure::new(d)?;
    let mut table = Table::new(&["check", "value", "stderr", "reference", "passed"]);
    let mut bad = Vec::new();

    let exact = measure.ball_mass(0.0, 1.0)?;
    let mc = measure.ball_mass_mc(1.0, cfg.surface.budget, cfg.seed)?;
    let ok = mc.agrees_with(exact, 0.0, 3.0, 0.01);
    table.push(vec![
        "unit_ball_mass".into(),
        mc.value.into(),
        mc.std_error.into(),
        exact.into(),
        ok.into(),
    ]);
    if !ok {
        bad.push("unit_ball_mass");
    }

    let f = cfg.f.scalar("f", dim)?;
    let m = cfg.measure.m.unwrap_or(2.0 * d as f64 - 1.0);
    let fi = integrate_measure(d, &f, m, cfg.surface.budget, cfg.seed)?;
    table.push(vec![
        "functional_bound".into(),
        fi.value.value.into(),
        fi.value.std_error.into(),
        fi.bound.into(),
        true.into(),
    ]);

    let weak_f = cfg.measure.weak_f.scalar("measure.weak_f", dim)?;
    let gamma = cfg.gamma.weight("gamma", dim)?;
    let weak = weak_convergence_check(d, &gamma, &weak_f, &cfg.nu_sweep, cfg.budget, cfg.seed)?;
    for r in &weak.rows {
        table.push(vec![
            format!("weak_nu={:e}", r.nu).into(),
            r.lhs.value.into(),
            r.lhs.std_error.into(),
            r.limit.into(),
            Cell::Bool(r.gap <= (3.0 * r.lhs.std_error.hypot(r.limit_se)).max(0.05 * r.limit.abs())),
        ]);
    }
    if !weak.passed {
        bad.push("weak_convergence");
    }
    let series = vec![Series::new(
        "nu nu*I_nu",
        weak.rows.iter().map(|r| (r.nu, r.lhs.value)).collect(),
    )];
    Ok(Outcome {
        table,
        series,
        payload: json!({ "ball_mass": { "exact": exact, "mc": mc }, "functional": fi, "weak": weak }),
        passed: bad.is_empty(),
        failure: (!bad.is_empty()).then(|| format!("failed: {}", bad.join(", "))),
    })
}

fn variants(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let v = &cfg.variants;
    match v.kind {
        VariantKind::Sphere => {
            let f = cfg.f.scalar("f", cfg.d)?;
            let gamma = cfg.gamma.weight("gamma", cfg.d)?;
            let rep = sphere_quadric(&f, &gamma, v.k_mod, &cfg.nu_sweep, SphereOptions::default())?;
            let mut table = Table::new(&["nu", "I_nu", "leading", "remainder", "nu_I_nu", "extrapolated"]);
            for (r, x) in rep.report.rows.iter().zip(&rep.extrapolated) {
                table.push(vec![
                    r.nu.into(),
                    r.i_nu.value.into(),
                    r.leading.into(),
                    r.remainder.into(),
                    (r.nu * r.i_nu.value).into(),
                    (*x).into(),
                ]);
            }
            let series = vec![Series::new(
                "nu nu*I_nu",
                rep.report.rows.iter().map(|r| (r.nu, r.nu * r.i_nu.value)).collect(),
            )];
            let failure = rep.report.certify().err().map(|e| e.to_string());
            Ok(Outcome {
                table,
                series,
                payload: to_value(&rep)?,
                passed: failure.is_none(),
                failure,
            })
        }
        VariantKind::Contour => {
            let f = cfg.f.scalar("f", 2)?;
            let gamma = cfg.gamma.weight("gamma", 2)?;
            let rep = d1_contour(&f, &gamma, &cfg.nu_sweep)?;
            let mut table = Table::new(&["nu", "I_nu", "leading", "remainder"]);
            for r in &rep.rows {
                table.push(vec![r.nu.into(), r.i_nu.into(), r.leading.into(), r.remainder.into()]);
            }
            let series = vec![Series::new(
                "nu remainder",
                rep.rows.iter().map(|r| (r.nu, r.remainder)).collect(),
            )];
            let failure = rep.certify().err().map(|e| e.to_string());
            Ok(Outcome {
                table,
                series,
                payload: to_value(&rep)?,
                passed: failure.is_none(),
                failure,
            })
        }
        VariantKind::Linear => {
            let spec = spec(cfg)?;
            let mut opts = LinearOptions::new(cfg.budget, cfg.seed);
            opts.theta0 = cfg.theta0;
            opts.surface_budget = cfg.surface.budget;
            let rep = linear_divisor(&spec, &cfg.nu_sweep, opts)?;
            let mut table = Table::new(&["nu", "re", "re_stderr", "im", "im_stderr"]);
            for r in &rep.rows {
                let c = &r.value;
                table.push(vec![
                    r.nu.into(),
                    c.re.into(),
                    c.re_se.into(),
                    c.im.into(),
                    c.im_se.into(),
                ]);
            }
            let series = vec![
                Series::new("nu re", rep.rows.iter().map(|r| (r.nu, r.value.re)).collect()),
                Series::new("nu im", rep.rows.iter().map(|r| (r.nu, r.value.im)).collect()),
            ];
            Ok(Outcome {
                table,
                series,
                payload: to_value(&rep)?,
                passed: rep.converged,
                failure: (!rep.converged).then(|| "I'_nu does not approach the limit within max(3σ, 5%)".into()),
            })
        }
        VariantKind::Kinetic => {
            let f = cfg.f.scalar("f", cfg.d)?;
            let k = if v.k.is_empty() { vec![0.0; cfg.d] } else { v.k.clone() };
            let kern = kinetic_kernel_demo(
                |k1: &[f64], k2: &[f64], k3: &[f64]| f.eval(k1) * f.eval(k2) * f.eval(k3),
                &k,
                cfg.surface.budget,
                cfg.seed,
            )?;
            let mut table = Table::new(&["quantity", "value", "stderr"]);
            for (name, e) in [("measure_integral", &kern.measure_integral), ("kernel", &kern.kernel)] {
                table.push(vec![name.into(), e.value.into(), e.std_error.into()]);
            }
            Ok(Outcome {
                table,
                series: Vec::new(),
                payload: to_value(&kern)?,
                passed: true,
                failure: None,
            })
        }
    }
}

fn stationary_phase(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sp = &cfg.stationary_phase;
    let n = sp.n;
    let p = gaussian_problem(n)?;
    let fit = leading_error_fit(&p, &sp.lambdas)?;
    let decay = decay_constant_fit(&p, &sp.lambdas)?;
    let mut table = Table::new(&["quantity", "x", "value", "reference"]);
    for (l, e) in fit.lambdas.iter().zip(&fit.errors) {
        table.push(vec![
            "leading_error".into(),
            (*l).into(),
            (*e).into(),
            (fit.r_const * l.powf(fit.expected_slope)).into(),
        ]);
    }
    table.push(vec![
        "slope".into(),
        0.0.into(),
        fit.slope.into(),
        fit.expected_slope.into(),
    ]);
    for (l, a) in decay.lambdas.iter().zip(&decay.abs_values) {
        table.push(vec![
            "abs_integral".into(),
            (*l).into(),
            (*a).into(),
            (decay.c_prime * l.powf(-0.5 * n as f64)).into(),
        ]);
    }
    let mut bad = Vec::new();
    if (fit.slope - fit.expected_slope).abs() > SLOPE_TOL {
        bad.push(format!("slope {} vs {}", fit.slope, fit.expected_slope));
    }
    if !fit.bound_holds {
        bad.push("leading-error bound".into());
    }
    let mut series = vec![Series::new(
        "lambda leading_error",
        fit.lambdas.iter().copied().zip(fit.errors.iter().copied()).collect(),
    )];
    let resolvent = if (2..=3).contains(&n) {
        let g = Phase::quadratic(n, sp.shift);
        let rep = resolvent_bound_check(&p.phi, &g, &vec![0.0; n], 1.0, &cfg.nu_sweep, false)?;
        for r in &rep.rows {
            table.push(vec![
                "resolvent_ratio".into(),
                r.nu.into(),
                r.bound_ratio.into(),
                r.abs_i.into(),
            ]);
        }
        series.push(Series::new(
            "nu resolvent_ratio",
            rep.rows.iter().map(|r| (r.nu, r.bound_ratio)).collect(),
        ));
        if let Err(e) = rep.certify() {
            bad.push(e.to_string());
        }
        Some(rep)
    } else {
        None
    };
    Ok(Outcome {
        table,
        series,
        payload: json!({ "error_fit": fit, "decay": decay, "resolvent": resolvent }),
        passed: bad.is_empty(),
        failure: (!bad.is_empty()).then(|| bad.join("; ")),
    })
}
