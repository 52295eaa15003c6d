use cloak_core::export::{
    coefficients_csv, csv_header, field_csv, format_float, json_document, materials_csv, sweep_csv,
};
use cloak_core::field::{sample_limit, sample_solution, LimitField, LimitMode, ModeTerm};
use cloak_core::geometry::{sample_materials, CloakGeometry, Region};
use cloak_core::limit_study::{run_sweep, ModeSweep};
use cloak_core::mode_solver::{
    mode_inputs, solve_mode_closed, solve_mode_direct, solve_modes, CloakParams, Interface, ModeInput,
    ModeSolution,
};
use cloak_core::ode_oracle::{coefficient_gap, convergence_order, oracle_solve, oracle_solve_interface};
use cloak_core::resonance::{check_nonresonant, find_resonances, NonresonanceCheck, Violation};
use cloak_core::specfun::bessel_j;
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    pub allow_near_resonance: bool,
}

/// Rendered document, plus an error to report once it has been written.
pub struct Outcome {
    pub text: String,
    pub failure: Option<CliError>,
}

impl From<String> for Outcome {
    fn from(text: String) -> Self {
        Outcome { text, failure: None }
    }
}

fn export_err(e: cloak_core::Error) -> CliError {
    CliError::math("export", e)
}

fn header(config: &RunConfig) -> Result<String, CliError> {
    csv_header(config).map_err(export_err)
}

fn document<T: Serialize>(config: &RunConfig, body: &T) -> Result<String, CliError> {
    json_document(config, body).map_err(export_err)
}

fn table(config: &RunConfig, columns: &[&str], rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut out = header(config)?;
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn complex_cells(z: Complex64) -> [String; 2] {
    [format_float(z.re), format_float(z.im)]
}

fn guard_resonance(params: &CloakParams, opts: Options) -> Result<NonresonanceCheck, CliError> {
    let check = check_nonresonant(params).map_err(|e| CliError::math("resonance", e))?;
    if let (Some(kind), false) = (check.violation, opts.allow_near_resonance) {
        let what = match kind {
            Violation::Resonance => "interior resonance",
            Violation::OuterDirichlet => "Dirichlet eigenvalue of the outer disc",
        };
        return Err(CliError {
            code: 2,
            message: format!(
                "resonance: omega = {} is an {what} for mode {} (margin {:e}); rerun with --allow-near-resonance",
                params.omega, check.worst_mode, check.min_margin
            ),
        });
    }
    Ok(check)
}

fn solve_all(config: &RunConfig, params: &CloakParams) -> Result<Vec<ModeSolution>, CliError> {
    let inputs = mode_inputs(params.max_mode, &config.boundary_data(), &config.sources());
    solve_modes(&inputs, params)
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::math("mode_solver", e))
}

fn limit_modes(config: &RunConfig) -> Result<LimitField, CliError> {
    let sources: Vec<(i32, Complex64)> = (-(config.max_mode as i32)..=config.max_mode as i32)
        .map(|n| {
            let p = config.sources().iter().find(|s| s.0 == n).map_or(Complex64::new(0.0, 0.0), |s| s.1);
            (n, p)
        })
        .collect();
    LimitField::new(config.kappa, config.omega, &sources).map_err(|e| CliError::math("field_eval", e))
}

pub fn solve(config: &RunConfig, opts: Options) -> Result<Outcome, CliError> {
    match config.truncation {
        Some(_) => {
            let params = config.params()?;
            let nonresonance = guard_resonance(&params, opts)?;
            let modes = solve_all(config, &params)?;
            let text = match config.format {
                Format::Csv => coefficients_csv(header(config)?, &modes).map_err(export_err)?,
                Format::Json => {
                    #[derive(Serialize)]
                    struct Body<'a> {
                        rho: f64,
                        nonresonance: NonresonanceCheck,
                        modes: &'a [ModeSolution],
                    }
                    document(config, &Body { rho: params.rho(), nonresonance, modes: &modes })?
                }
            };
            Ok(text.into())
        }
        None => {
            let limit = limit_modes(config)?;
            let text = match config.format {
                Format::Csv => {
                    let rows = limit
                        .modes
                        .iter()
                        .map(|m| {
                            let mut row = vec![m.n.to_string()];
                            row.extend(complex_cells(m.p));
                            row.extend(complex_cells(m.a_tilde));
                            row
                        })
                        .collect();
                    table(config, &["n", "re_p", "im_p", "re_a_tilde", "im_a_tilde"], rows)?
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct Body<'a> {
                        ideal_limit: &'a [LimitMode],
                    }
                    document(config, &Body { ideal_limit: &limit.modes })?
                }
            };
            Ok(text.into())
        }
    }
}

pub fn field(config: &RunConfig, opts: Options) -> Result<Outcome, CliError> {
    let grid = config.grid.polar();
    let sampled = match config.truncation {
        Some(_) => {
            let params = config.params()?;
            guard_resonance(&params, opts)?;
            let terms: Vec<ModeTerm> = solve_all(config, &params)?.iter().map(ModeTerm::from).collect();
            sample_solution(&terms, &params, &grid)
        }
        None => sample_limit(&limit_modes(config)?, &grid),
    }
    .map_err(|e| CliError::math("field_eval", e))?;
    let text = match config.format {
        Format::Csv => field_csv(header(config)?, &sampled).map_err(export_err)?,
        Format::Json => {
            #[derive(Serialize)]
            struct Sample {
                r: f64,
                theta: f64,
                u: Complex64,
                region: Region,
            }
            #[derive(Serialize)]
            struct Body {
                samples: Vec<Sample>,
            }
            let samples = sampled
                .points
                .iter()
                .zip(&sampled.values)
                .zip(&sampled.region_tags)
                .map(|((p, u), region)| Sample { r: p.r, theta: p.theta, u: *u, region: *region })
                .collect();
            document(config, &Body { samples })?
        }
    };
    Ok(text.into())
}

pub fn resonances(config: &RunConfig) -> Result<Outcome, CliError> {
    let range = [config.resonances.omega_min, config.resonances.omega_max];
    let reports = (0..=config.max_mode as i32)
        .map(|n| find_resonances(n, config.kappa, range, config.resonances.scan_step))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::math("resonance", e))?;
    let text = match config.format {
        Format::Csv => {
            let rows = reports
                .iter()
                .flat_map(|r| {
                    r.roots.iter().map(move |root| {
                        vec![r.n.to_string(), format_float(root.omega), format_float(root.g_abs), format_float(root.h_abs)]
                    })
                })
                .collect();
            table(config, &["n", "omega", "g_abs", "h_abs"], rows)?
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                reports: &'a [cloak_core::resonance::ResonanceReport],
            }
            document(config, &Body { reports: &reports })?
        }
    };
    Ok(text.into())
}

pub fn limit(config: &RunConfig) -> Result<Outcome, CliError> {
    let modes: Vec<i32> = (0..=config.max_mode as i32).collect();
    let report = run_sweep(config.kappa, config.omega, [config.sweep.k_min, config.sweep.k_max], &modes)
        .map_err(|e| CliError::math("limit_study", e))?;
    let text = match config.format {
        Format::Csv => sweep_csv(header(config)?, &report).map_err(export_err)?,
        Format::Json => {
            #[derive(Serialize)]
            struct Params {
                kappa: f64,
                omega: f64,
            }
            #[derive(Serialize)]
            struct Body<'a> {
                params: Params,
                k_range: [u32; 2],
                truncations: &'a [f64],
                per_mode: &'a [ModeSweep],
            }
            document(
                config,
                &Body {
                    params: Params { kappa: report.kappa, omega: report.omega },
                    k_range: report.k_range,
                    truncations: &report.truncations,
                    per_mode: &report.per_mode,
                },
            )?
        }
    };
    Ok(text.into())
}

pub fn materials(config: &RunConfig) -> Result<Outcome, CliError> {
    let geometry = config
        .truncation
        .map(CloakGeometry::new)
        .transpose()
        .map_err(|e| CliError::math("geometry_materials", e))?;
    let samples = sample_materials(&config.grid.polar(), geometry.as_ref(), config.sigma_a, config.lambda_a());
    let text = match config.format {
        Format::Csv => materials_csv(header(config)?, &samples).map_err(export_err)?,
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                x: f64,
                y: f64,
                sigma_rr: f64,
                sigma_tt: f64,
                lambda: f64,
                region: Region,
            }
            #[derive(Serialize)]
            struct Body {
                materials: Vec<Row>,
            }
            let materials = samples
                .iter()
                .map(|(p, m)| {
                    let [x, y] = p.to_cartesian();
                    Row {
                        x,
                        y,
                        sigma_rr: m.sigma_radial,
                        sigma_tt: m.sigma_tangential,
                        lambda: m.lambda,
                        region: m.region,
                    }
                })
                .collect();
            document(config, &Body { materials })?
        }
    };
    Ok(text.into())
}

/// Oracle suite radii; the config's own R is appended when present.
pub const CHECK_TRUNCATIONS: [f64; 3] = [1.05, 1.2, 1.5];
const CHECK_MAX_MODE: i32 = 3;
const ORACLE_TOL: f64 = 1e-4;
const VACUUM_TOL: f64 = 1e-6;
const EQUIVALENCE_TOL: f64 = 1e-10;
const ORDER_TARGET: f64 = 2.0;
const ORDER_TOL: f64 = 0.2;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check: &'static str,
    pub n: i32,
    pub truncation: f64,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn row(check: &'static str, n: i32, truncation: f64, value: f64, tolerance: f64) -> CheckRow {
    CheckRow { check, n, truncation, value, tolerance, pass: value <= tolerance }
}

/// Oracle against closed form for |n| ≤ 3, the vacuum control, the
/// oracle's own order, and closed form against the direct solve.
pub fn check(config: &RunConfig) -> Result<Outcome, CliError> {
    let mut radii = CHECK_TRUNCATIONS.to_vec();
    if let Some(r) = config.truncation {
        if !radii.contains(&r) {
            radii.push(r);
        }
    }
    let max_mode = config.max_mode.max(CHECK_MAX_MODE as u32);
    let math = |e| CliError::math("ode_oracle", e);
    let suite_input = |n| ModeInput::new(n, Complex64::new(0.4, -0.2), Complex64::new(1.0, 0.5));
    let mut rows = Vec::new();
    for &r in &radii {
        let params = CloakParams::new(config.kappa, config.omega, r, max_mode).map_err(math)?;
        for n in -CHECK_MAX_MODE..=CHECK_MAX_MODE {
            let input = suite_input(n);
            let closed = solve_mode_closed(&input, &params).map_err(|e| CliError::math("mode_solver", e))?;
            let oracle = oracle_solve(&input, &params, &config.oracle).map_err(math)?;
            rows.push(row("oracle_vs_closed", n, r, coefficient_gap(&oracle.coeffs, &closed), ORACLE_TOL));
            let direct = match solve_mode_direct(&input, &params) {
                Ok(d) => coefficient_gap(&d, &closed),
                Err(_) => f64::INFINITY,
            };
            rows.push(row("direct_vs_closed", n, r, direct, EQUIVALENCE_TOL));
        }
    }
    let outer = bessel_j(0, 3.0 * config.omega).map_err(math)?;
    for &r in &radii {
        let input = ModeInput::boundary(0, Complex64::new(1.0, 0.0));
        let sol = oracle_solve_interface(&input, config.omega, &Interface::vacuum(r), &config.oracle).map_err(math)?;
        let mut worst = 0.0f64;
        for s in sol.interior.iter().chain(&sol.exterior) {
            let want = bessel_j(0, config.omega * s.r).map_err(math)? / outer;
            worst = worst.max((s.value - want).norm());
        }
        rows.push(row("vacuum_control", 0, r, worst, VACUUM_TOL));
    }
    let params = CloakParams::new(config.kappa, config.omega, 1.2, max_mode).map_err(math)?;
    for n in [0, 1, 2] {
        let input = suite_input(n);
        let closed = solve_mode_closed(&input, &params).map_err(|e| CliError::math("mode_solver", e))?;
        let order = convergence_order(&input, &params, 400, &closed).map_err(math)?;
        rows.push(CheckRow {
            check: "oracle_order",
            n,
            truncation: 1.2,
            value: order,
            tolerance: ORDER_TOL,
            pass: (order - ORDER_TARGET).abs() <= ORDER_TOL,
        });
    }

    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} n={} R={}: {:e}", r.check, r.n, r.truncation, r.value))
        .collect();
    let text = match config.format {
        Format::Csv => {
            let cells = rows
                .iter()
                .map(|r| {
                    vec![
                        r.check.to_string(),
                        r.n.to_string(),
                        format_float(r.truncation),
                        format_float(r.value),
                        format_float(r.tolerance),
                        r.pass.to_string(),
                    ]
                })
                .collect();
            table(config, &["check", "n", "R", "value", "tolerance", "pass"], cells)?
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                checks: &'a [CheckRow],
                passed: bool,
            }
            document(config, &Body { checks: &rows, passed: failed.is_empty() })?
        }
    };
    let failure =
        (!failed.is_empty()).then(|| CliError::verification(format!("ode_oracle: {} check(s) failed: {}", failed.len(), failed.join("; "))));
    Ok(Outcome { text, failure })
}
