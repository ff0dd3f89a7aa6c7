//! Subcommand implementations. Each command reads its blocks from one config
//! file, writes `report.json` (plus CSVs where the contract names them) into
//! the output directory, prints a one-line summary, and returns the exit
//! code: 0 pass, 1 property violation, 2 config or I/O error.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::config::{self, LemmasConfig, RunConfig, ShiftConfig};
use crate::error::{Error, Result};
use crate::exec;
use crate::lemmas::{self, ScalingFit};
use crate::manifold::{self, AssumptionReport, ManifoldModel};
use crate::operator::{self, OperatorDiagnostics, QuadratureScheme, SpectralOperator};
use crate::report::{self, Report, Violation};
use crate::solver::{self, BlowupSignal, FieldState, NonlinearitySpec, SimThresholds};
use crate::weight::{self, FracBoundReport, WeightParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CheckManifold,
    VerifyLemmas,
    VerifyWeight,
    Simulate,
    Lifespan,
    Sweep,
}

/// Runs a subcommand end to end, mapping every error to the exit contract.
pub fn run_command(cmd: Command, config_path: &Path, out_dir: &Path) -> i32 {
    match dispatch(cmd, config_path, out_dir) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fraclab: {e}");
            2
        }
    }
}

fn dispatch(cmd: Command, config_path: &Path, out_dir: &Path) -> Result<i32> {
    let cfg = config::load_config(config_path)?;
    match cmd {
        Command::CheckManifold => cmd_check_manifold(&cfg, out_dir),
        Command::VerifyLemmas => cmd_verify_lemmas(&cfg, out_dir),
        Command::VerifyWeight => cmd_verify_weight(&cfg, out_dir),
        Command::Simulate => cmd_simulate(&cfg, out_dir),
        Command::Lifespan => cmd_lifespan(&cfg, out_dir),
        Command::Sweep => cmd_sweep(&cfg, out_dir),
    }
}

fn build_model(cfg: &RunConfig) -> Result<Arc<ManifoldModel>> {
    let warping = cfg.manifold.warping.build()?;
    let grid = cfg.manifold.grid.unwrap_or(manifold::GridKind::Uniform);
    Ok(Arc::new(manifold::make_model_with_grid(
        cfg.manifold.n,
        warping,
        cfg.manifold.r_max,
        cfg.manifold.nodes,
        grid,
    )?))
}

fn build_operator(cfg: &RunConfig, model: Arc<ManifoldModel>) -> Result<SpectralOperator> {
    operator::assemble(model, cfg.operator.bc)
}

fn quadrature_for(cfg: &RunConfig, op: &SpectralOperator) -> Result<QuadratureScheme> {
    let mut scheme = QuadratureScheme::default_for(op);
    if let Some(q) = cfg.operator.quadrature {
        if let Some(v) = q.s_min {
            scheme.s_min = v;
        }
        if let Some(v) = q.s_max {
            scheme.s_max = v;
        }
        if let Some(v) = q.panels {
            scheme.panels = v;
        }
        if let Some(v) = q.rule {
            scheme.rule = v;
        }
    }
    scheme.validate()?;
    Ok(scheme)
}

// ---------------------------------------------------------------- manifold

#[derive(Serialize)]
struct CheckManifoldPayload<'a> {
    manifold: &'a config::ManifoldConfig,
    thresholds: &'a manifold::AssumptionThresholds,
    report: AssumptionReport,
}

fn cmd_check_manifold(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let model = build_model(cfg)?;
    let rep = model.check_assumptions(&cfg.assumptions);
    let violation = model
        .first_violation(&cfg.assumptions)
        .map(|detail| Violation { module: "manifold".into(), detail });
    let passes = rep.passes;
    let payload =
        CheckManifoldPayload { manifold: &cfg.manifold, thresholds: &cfg.assumptions, report: rep };
    let report = Report::new("check-manifold", payload).with_violation(violation.clone());
    report::write_report(out_dir, &report)?;
    if passes {
        println!("check-manifold: PASS");
        Ok(0)
    } else {
        println!("check-manifold: FAIL ({})", violation.map(|v| v.detail).unwrap_or_default());
        Ok(1)
    }
}

// ------------------------------------------------------------------ lemmas

#[derive(Serialize)]
struct MinwedgeSummary {
    points: usize,
    ok: bool,
}

#[derive(Serialize)]
struct VerifyLemmasPayload<'a> {
    manifold: &'a config::ManifoldConfig,
    tolerance: f64,
    minwedge: MinwedgeSummary,
    fits: Vec<ScalingFit>,
}

fn cmd_verify_lemmas(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let lm: &LemmasConfig = cfg
        .lemmas
        .as_ref()
        .ok_or_else(|| Error::Config("verify-lemmas needs a lemmas block".into()))?;
    if lm.bulk.is_empty() && lm.ball.is_empty() && lm.complement.is_empty() {
        return Err(Error::Config("lemmas block declares no cases".into()));
    }
    let model = build_model(cfg)?;

    let mut minwedge_ok = true;
    for k in 0..lm.minwedge_points.max(2) {
        let y = 10f64.powf(-6.0 + 12.0 * k as f64 / (lm.minwedge_points.max(2) - 1) as f64);
        let (lhs, rhs) = lemmas::minwedge_check(y)?;
        if !(lhs / 2.0 <= rhs && rhs <= lhs) {
            minwedge_ok = false;
        }
    }

    let mut fits = Vec::new();
    for case in &lm.bulk {
        fits.push(lemmas::integral_case1(&model, case.gamma, case.alpha, &case.t_values)?);
    }
    for case in &lm.ball {
        fits.push(lemmas::integral_case2(&model, case.gamma, &case.r_values)?);
    }
    for case in &lm.complement {
        fits.push(lemmas::integral_case3(&model, case.gamma, &case.r_values)?);
    }

    let mut violation = None;
    if !minwedge_ok {
        violation = Some(Violation {
            module: "lemmas".into(),
            detail: "two-sided min comparison violated".into(),
        });
    }
    for fit in &fits {
        if (fit.fitted_exponent - fit.predicted_exponent).abs() > lm.tolerance {
            violation.get_or_insert(Violation {
                module: "lemmas".into(),
                detail: format!(
                    "case {} gamma {}: fitted exponent {:.4} misses predicted {:.4} beyond {}",
                    fit.case_id, fit.gamma, fit.fitted_exponent, fit.predicted_exponent, lm.tolerance
                ),
            });
        }
    }

    report::write_scaling_samples_csv(out_dir, &fits)?;
    let pass = violation.is_none();
    let payload = VerifyLemmasPayload {
        manifold: &cfg.manifold,
        tolerance: lm.tolerance,
        minwedge: MinwedgeSummary { points: lm.minwedge_points, ok: minwedge_ok },
        fits,
    };
    let report = Report::new("verify-lemmas", payload).with_violation(violation.clone());
    report::write_report(out_dir, &report)?;
    if pass {
        println!("verify-lemmas: PASS");
        Ok(0)
    } else {
        println!("verify-lemmas: FAIL ({})", violation.map(|v| v.detail).unwrap_or_default());
        Ok(1)
    }
}

// ------------------------------------------------------------------ weight

#[derive(Serialize)]
struct GoldIdentitySummary {
    t: f64,
    deviation: f64,
    tolerance: f64,
    ok: bool,
}

#[derive(Serialize)]
struct L2SlopeSummary {
    fitted_slope: f64,
    predicted_slope: f64,
    t_inverse_consistent: bool,
    note: &'static str,
}

#[derive(Serialize)]
struct SubordinationCheck {
    alpha: f64,
    t: f64,
    relative_l2_discrepancy: f64,
}

#[derive(Serialize)]
struct VerifyWeightPayload<'a> {
    manifold: &'a config::ManifoldConfig,
    alpha: f64,
    spread_tolerance: f64,
    report: FracBoundReport,
    diagnostic_alpha2_sup_ratio: Vec<f64>,
    gold_identity: Option<Vec<GoldIdentitySummary>>,
    l2_norm_exponent: L2SlopeSummary,
    subordination_check: SubordinationCheck,
    operator: OperatorDiagnostics,
}

fn cmd_verify_weight(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let model = build_model(cfg)?;
    let op = build_operator(cfg, model.clone())?;
    let wcfg = &cfg.weight;
    let wp = WeightParams::new(wcfg.alpha, model.n, 1.0)?;

    let (frac, samples) = weight::verify_frac_bound_detailed(&op, &wp, &wcfg.t_values)?;
    report::write_ratios_csv(out_dir, &samples)?;

    let diag2: Vec<f64> = wcfg
        .t_values
        .iter()
        .map(|&t| weight::sup_ratio_at(&op, &wp, t, 2.0))
        .collect::<Result<_>>()?;

    // exact flat-line identity, in scope for the n = 1, α = 1 oracle
    let gold_in_scope =
        model.n == 1 && matches!(model.warping, manifold::Warping::Flat) && wcfg.alpha == 1.0;
    let mut gold_ok = true;
    let gold_identity = if gold_in_scope {
        let mut rows = Vec::new();
        for &t in &wcfg.t_values {
            let deviation = weight::line_gold_identity_deviation(&op, t, 0.7)?;
            let ok = deviation < 1e-3;
            gold_ok &= ok;
            rows.push(GoldIdentitySummary { t, deviation, tolerance: 1e-3, ok });
        }
        Some(rows)
    } else {
        None
    };

    let (slope, _) = weight::h_l2_norm_slope(&model, &wp, 1.0, 100.0, 12)?;
    let predicted = model.n as f64 / (2.0 * wcfg.alpha);
    let l2_summary = L2SlopeSummary {
        fitted_slope: slope,
        predicted_slope: predicted,
        t_inverse_consistent: (slope - (-1.0)).abs() <= 0.05,
        note: "the weight's L2 norm grows like T^(n/(2 alpha)); a T^-1 decay \
               claim is inconsistent with the measured slope",
    };

    // cross-oracle spot check: resolvent quadrature vs spectral power
    let scheme = quadrature_for(cfg, &op)?;
    let t_mid = wcfg.t_values[wcfg.t_values.len() / 2];
    let h = weight::h_field(&model, &wp, t_mid)?;
    let a = op.subordination_apply(wcfg.alpha, &h, &scheme)?;
    let b = op.apply_fractional(wcfg.alpha, &h)?;
    let num = model.integrate(&a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).collect::<Vec<_>>());
    let den = model.integrate(&b.iter().map(|y| y * y).collect::<Vec<_>>()).max(1e-300);
    let sub_check = SubordinationCheck {
        alpha: wcfg.alpha,
        t: t_mid,
        relative_l2_discrepancy: (num / den).sqrt(),
    };

    let mut violation = None;
    if frac.spread > wcfg.spread_tolerance {
        violation = Some(Violation {
            module: "weight".into(),
            detail: format!(
                "sup-ratio spread {:.4} exceeds tolerance {} across t = {:?}",
                frac.spread, wcfg.spread_tolerance, frac.t_values
            ),
        });
    } else if !gold_ok {
        violation = Some(Violation {
            module: "weight".into(),
            detail: "flat-line gold identity deviates beyond 1e-3".into(),
        });
    }

    let pass = violation.is_none();
    let payload = VerifyWeightPayload {
        manifold: &cfg.manifold,
        alpha: wcfg.alpha,
        spread_tolerance: wcfg.spread_tolerance,
        report: frac,
        diagnostic_alpha2_sup_ratio: diag2,
        gold_identity,
        l2_norm_exponent: l2_summary,
        subordination_check: sub_check,
        operator: op.diagnostics(),
    };
    let report = Report::new("verify-weight", payload).with_violation(violation.clone());
    report::write_report(out_dir, &report)?;
    if pass {
        println!("verify-weight: PASS");
        Ok(0)
    } else {
        println!("verify-weight: FAIL ({})", violation.map(|v| v.detail).unwrap_or_default());
        Ok(1)
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct ShiftSelection {
    mode: &'static str,
    value: f64,
    /// (candidate N, retained mass fraction) pairs from the doubling sweep.
    trace: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct SimulateChecks {
    holder_lower_bound_ok: bool,
    phi_monotone: Option<bool>,
}

#[derive(Serialize)]
struct SimulateSummary {
    rows: usize,
    phi_first: f64,
    phi_last: f64,
    t_last: f64,
    signal: Option<BlowupSignal>,
    t_blow_observed: Option<f64>,
    t_blow_fitted: Option<f64>,
    t_star_theory: Option<f64>,
    /// t_blow_fitted / t_star_theory, informational only.
    blowup_to_theory_ratio: Option<f64>,
    c_emp: Option<f64>,
    inequality_margin: Option<f64>,
    phi0_integral: f64,
    truncated_by_step_budget: bool,
}

#[derive(Serialize)]
struct SimulatePayload<'a> {
    manifold: &'a config::ManifoldConfig,
    nonlinearity: &'a config::NonlinearityConfig,
    simulation: &'a config::SimulationConfig,
    alpha: f64,
    beta: f64,
    shift_selection: ShiftSelection,
    summary: SimulateSummary,
    checks: SimulateChecks,
    operator: OperatorDiagnostics,
}

struct PreparedRun {
    model: Arc<ManifoldModel>,
    nl: NonlinearitySpec,
    wp: WeightParams,
    u0: FieldState,
    shift: ShiftSelection,
    thresholds: SimThresholds,
    dt: f64,
    t_end: f64,
}

fn prepare_run(
    cfg: &RunConfig,
    model: &Arc<ManifoldModel>,
    p: f64,
    alpha: f64,
    amplitude: f64,
    shift_cfg: ShiftConfig,
) -> Result<PreparedRun> {
    let nl_cfg = cfg
        .nonlinearity
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs a nonlinearity block".into()))?;
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs a simulation block".into()))?;
    let nl = NonlinearitySpec::new(p, nl_cfg.form)?;
    let mut f0 = solver::bump_profile(model, amplitude, sim.radius);
    if let Some(target) = sim.normalize_mass {
        solver::normalize_mass(model, &mut f0, target)?;
    }
    let (shift_value, shift) = match shift_cfg {
        ShiftConfig::Auto => {
            let (value, trace) = solver::auto_shift_n(model, alpha, model.n, &f0)?;
            (value, ShiftSelection { mode: "auto", value, trace })
        }
        ShiftConfig::Value(v) => {
            (v, ShiftSelection { mode: "fixed", value: v, trace: Vec::new() })
        }
    };
    let wp = WeightParams::new(alpha, model.n, shift_value)?;
    let thresholds = SimThresholds {
        linf_blowup_factor: sim.linf_blowup_factor,
        sample_every: sim.sample_every,
        enforce_preconditions: sim.enforce_preconditions,
        ..Default::default()
    };
    Ok(PreparedRun {
        model: model.clone(),
        nl,
        wp,
        u0: FieldState::from_real(&f0),
        shift,
        thresholds,
        dt: sim.dt,
        t_end: sim.t_end,
    })
}

fn run_checks(
    run: &PreparedRun,
    report: &solver::BlowupReport,
) -> Result<(SimulateChecks, Option<Violation>)> {
    let holder = solver::l2_lower_bound_check(report, &run.model, &run.wp)?;
    let forcing_real_data = run.nl.form == solver::NonlinearityForm::Forcing
        && run.u0.u.iter().all(|z| z.im == 0.0 && z.re >= 0.0);
    let phi_monotone = if forcing_real_data {
        let scale = report.series.iter().map(|r| r.phi.abs()).fold(1e-300, f64::max);
        Some(
            report
                .series
                .windows(2)
                .all(|w| w[1].phi >= w[0].phi - 1e-12 * scale),
        )
    } else {
        None
    };
    let mut violation = None;
    if !holder {
        violation = Some(Violation {
            module: "solver".into(),
            detail: "Hoelder lower bound ||Re u|| >= phi/||h|| violated at a sample".into(),
        });
    } else if phi_monotone == Some(false) {
        violation = Some(Violation {
            module: "solver".into(),
            detail: "phi(t) decreased along a forcing run with nonnegative real data".into(),
        });
    }
    Ok((SimulateChecks { holder_lower_bound_ok: holder, phi_monotone }, violation))
}

fn summarize(report: &solver::BlowupReport) -> SimulateSummary {
    let ratio = match (report.t_blow_fitted, report.t_star_theory) {
        (Some(f), Some(t)) if t > 0.0 => Some(f / t),
        _ => None,
    };
    SimulateSummary {
        rows: report.series.len(),
        phi_first: report.series.first().map(|r| r.phi).unwrap_or(0.0),
        phi_last: report.series.last().map(|r| r.phi).unwrap_or(0.0),
        t_last: report.series.last().map(|r| r.t).unwrap_or(0.0),
        signal: report.signal,
        t_blow_observed: report.t_blow_observed,
        t_blow_fitted: report.t_blow_fitted,
        t_star_theory: report.t_star_theory,
        blowup_to_theory_ratio: ratio,
        c_emp: report.c_emp,
        inequality_margin: report.inequality_margin,
        phi0_integral: report.phi0_integral,
        truncated_by_step_budget: report.truncated_by_step_budget,
    }
}

fn cmd_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let model = build_model(cfg)?;
    let op = build_operator(cfg, model.clone())?;
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| Error::Config("simulate needs a simulation block".into()))?;
    let nl_cfg = cfg
        .nonlinearity
        .as_ref()
        .ok_or_else(|| Error::Config("simulate needs a nonlinearity block".into()))?;
    let run = prepare_run(cfg, &model, nl_cfg.p, cfg.weight.alpha, sim.amplitude, cfg.weight.shift_n)?;
    let blowup =
        solver::run_simulation(&op, &run.nl, &run.wp, &run.u0, run.dt, run.t_end, &run.thresholds)?;
    let (checks, violation) = run_checks(&run, &blowup)?;

    report::write_series_csv(out_dir, &blowup.series)?;
    let pass = violation.is_none();
    let payload = SimulatePayload {
        manifold: &cfg.manifold,
        nonlinearity: nl_cfg,
        simulation: sim,
        alpha: run.wp.alpha,
        beta: blowup.beta,
        shift_selection: run.shift,
        summary: summarize(&blowup),
        checks,
        operator: op.diagnostics(),
    };
    let report = Report::new("simulate", payload).with_violation(violation.clone());
    report::write_report(out_dir, &report)?;
    if pass {
        let what = match blowup.signal {
            Some(_) => format!(
                "blow-up at t = {:.4} (fitted {:?}, theory {:?})",
                blowup.t_blow_observed.unwrap_or(f64::NAN),
                blowup.t_blow_fitted,
                blowup.t_star_theory
            ),
            None => format!("reached t_end = {}", run.t_end),
        };
        println!("simulate: PASS ({what})");
        Ok(0)
    } else {
        println!("simulate: FAIL ({})", violation.map(|v| v.detail).unwrap_or_default());
        Ok(1)
    }
}

// ---------------------------------------------------------------- lifespan

#[derive(Serialize)]
struct LifespanPayload {
    estimate: solver::LifespanEstimate,
    ode_constant: f64,
    ode_blowup_time: f64,
    /// ODE-oracle time over closed-form t*.
    ratio: f64,
}

fn cmd_lifespan(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let ls = cfg
        .lifespan
        .as_ref()
        .ok_or_else(|| Error::Config("lifespan needs a lifespan block".into()))?;
    let nl = cfg
        .nonlinearity
        .as_ref()
        .ok_or_else(|| Error::Config("lifespan needs a nonlinearity block".into()))?;
    let shift = match cfg.weight.shift_n {
        ShiftConfig::Value(v) => v,
        ShiftConfig::Auto => {
            return Err(Error::Config(
                "lifespan needs a numeric weight.shift_n (auto selection needs a simulation)".into(),
            ))
        }
    };
    let estimate =
        solver::lifespan_upper_bound(shift, ls.phi0, nl.p, cfg.weight.alpha, cfg.manifold.n)?;
    let c = ls
        .ode_constant
        .unwrap_or_else(|| (1.0 - estimate.beta) / (estimate.p - 1.0));
    let ode_time =
        solver::ode_blowup_oracle(shift, ls.phi0, nl.p, cfg.weight.alpha, cfg.manifold.n, c)?;
    let ratio = ode_time / estimate.t_star;
    println!(
        "lifespan: closed form t* = {:.6}, ODE oracle = {:.6}, ratio = {:.4}",
        estimate.t_star, ode_time, ratio
    );
    let payload = LifespanPayload { estimate, ode_constant: c, ode_blowup_time: ode_time, ratio };
    let report = Report::new("lifespan", payload);
    report::write_report(out_dir, &report)?;
    Ok(0)
}

// ------------------------------------------------------------------- sweep

#[derive(Serialize)]
struct SweepRunSummary {
    p: f64,
    alpha: f64,
    amplitude: f64,
    shift_n: ShiftConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<SimulateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    checks: Option<SimulateChecks>,
}

#[derive(Serialize)]
struct SweepPayload<'a> {
    manifold: &'a config::ManifoldConfig,
    grid: &'a config::SweepConfig,
    runs: Vec<SweepRunSummary>,
}

fn cmd_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep needs a sweep block".into()))?;
    let nl_cfg = cfg
        .nonlinearity
        .as_ref()
        .ok_or_else(|| Error::Config("sweep needs a nonlinearity block".into()))?;
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| Error::Config("sweep needs a simulation block".into()))?;
    let model = build_model(cfg)?;
    // the operator depends only on (model, bc): assemble once, share
    let op = Arc::new(build_operator(cfg, model.clone())?);

    let ps = nonempty(&sweep.p, nl_cfg.p);
    let alphas = nonempty(&sweep.alpha, cfg.weight.alpha);
    let amplitudes = nonempty(&sweep.amplitude, sim.amplitude);
    let shifts: Vec<ShiftConfig> = if sweep.shift_n.is_empty() {
        vec![cfg.weight.shift_n]
    } else {
        sweep.shift_n.iter().map(|&v| ShiftConfig::Value(v)).collect()
    };

    let mut combos = Vec::new();
    for &p in &ps {
        for &alpha in &alphas {
            for &amplitude in &amplitudes {
                for &shift in &shifts {
                    combos.push((p, alpha, amplitude, shift));
                }
            }
        }
    }

    let threads = std::env::var("FRACLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    let runs: Vec<SweepRunSummary> = exec::with_thread_cap(threads, || {
        exec::map(&combos, |&(p, alpha, amplitude, shift)| {
            let outcome = prepare_run(cfg, &model, p, alpha, amplitude, shift).and_then(|run| {
                let rep = solver::run_simulation(
                    &op,
                    &run.nl,
                    &run.wp,
                    &run.u0,
                    run.dt,
                    run.t_end,
                    &run.thresholds,
                )?;
                let (checks, violation) = run_checks(&run, &rep)?;
                Ok((summarize(&rep), checks, violation))
            });
            match outcome {
                Ok((summary, checks, violation)) => SweepRunSummary {
                    p,
                    alpha,
                    amplitude,
                    shift_n: shift,
                    error: violation.map(|v| format!("{}: {}", v.module, v.detail)),
                    summary: Some(summary),
                    checks: Some(checks),
                },
                Err(e) => SweepRunSummary {
                    p,
                    alpha,
                    amplitude,
                    shift_n: shift,
                    error: Some(e.to_string()),
                    summary: None,
                    checks: None,
                },
            }
        })
    });

    let violation = runs.iter().find_map(|r| {
        r.error.as_ref().map(|e| Violation {
            module: "sweep".into(),
            detail: format!("run (p={}, alpha={}, A={}): {e}", r.p, r.alpha, r.amplitude),
        })
    });
    let pass = violation.is_none();
    let total = runs.len();
    let payload = SweepPayload { manifold: &cfg.manifold, grid: sweep, runs };
    let report = Report::new("sweep", payload).with_violation(violation.clone());
    report::write_report(out_dir, &report)?;
    if pass {
        println!("sweep: PASS ({total} runs)");
        Ok(0)
    } else {
        println!("sweep: FAIL ({})", violation.map(|v| v.detail).unwrap_or_default());
        Ok(1)
    }
}

fn nonempty(values: &[f64], fallback: f64) -> Vec<f64> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values.to_vec()
    }
}
