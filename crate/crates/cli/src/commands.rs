use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wssus_core::optimizer::{self, DesignResult, DesignSummary, Method};
use wssus_core::sim::{self, FidelityReport};
use wssus_core::{cp_map, io, signal, LatticeParams, Moments, ScatteringGrid, Signal, TimeGrid};

use crate::config::{Resolved, RunConfig, SweepConfig, SweepParameter};
use crate::error::{CliError, CliResult};

pub const GAMMA_FILE: &str = "gamma.csv";
pub const G_FILE: &str = "g.csv";
pub const RESULT_FILE: &str = "result.json";
pub const REPORT_FILE: &str = "report.json";
pub const SIMULATION_FILE: &str = "simulation.json";
pub const TRACES_FILE: &str = "traces.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_SUMMARY_FILE: &str = "sweep.json";
pub const LOG_FILE: &str = "run.log";

#[derive(Debug, Serialize)]
struct DesignOutput<'a> {
    config: &'a RunConfig,
    design: DesignSummary,
    moments: Moments,
}

#[derive(Debug, Serialize)]
struct EvaluationOutput<'a> {
    config: &'a RunConfig,
    gamma_path: Option<PathBuf>,
    g_path: Option<PathBuf>,
    /// Averaged gain from the scattering quadrature.
    quadrature_gain: f64,
    lower_bound: f64,
    monte_carlo: FidelityReport,
    /// `|E_a(MC) - quadrature_gain| / mc_stderr`
    agreement_z: f64,
}

#[derive(Debug, Serialize)]
struct SweepOutput<'a> {
    config: &'a RunConfig,
    parameter: SweepParameter,
    values: Vec<f64>,
    /// Sweep value with the largest quadrature gain.
    argmax: f64,
}

fn create_out_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

/// Run the configured design method.
pub fn run_design(res: &Resolved) -> CliResult<DesignResult> {
    let cfg = &res.config;
    let (grid, c) = (&res.grid, &res.scattering);
    log::info!("design: method {}, {}", cfg.method.as_str(), grid.describe());
    let out = match cfg.method {
        Method::GaussianAnsatz => optimizer::gaussian_ansatz(grid, c)?,
        Method::LocalEigen => optimizer::local_eigen_design(grid, c)?,
        Method::ExactOscillator => optimizer::exact_operator_design(grid, c)?,
        Method::Alternating => {
            let init = match cfg.optimizer.init_hermite {
                Some(n) => signal::hermite(grid, n)?,
                None => optimizer::gaussian_ansatz(grid, c)?.gamma_opt,
            };
            optimizer::alternating_maximize(c, &init, cfg.optimizer.max_iters, cfg.optimizer.tol)?
        }
    };
    if !out.gain.is_finite() {
        return Err(wssus_core::Error::Numerical(format!("design produced gain {}", out.gain)).into());
    }
    Ok(out)
}

fn monte_carlo(res: &Resolved, c: &ScatteringGrid, g: &Signal, gamma: &Signal, lattice: &LatticeParams, n: usize) -> CliResult<FidelityReport> {
    let mc = &res.config.monte_carlo;
    Ok(sim::estimate_sinr(c, g, gamma, lattice, mc.sigma2, n, mc.seed)?)
}

fn agreement_z(report: &FidelityReport, quadrature: f64) -> f64 {
    let d = (report.e_a - quadrature).abs();
    if report.mc_stderr > 0.0 {
        d / report.mc_stderr
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn cmd_design(res: &Resolved, out_dir: &Path) -> CliResult<()> {
    let result = run_design(res)?;
    create_out_dir(out_dir)?;
    io::write_signal_csv(&out_dir.join(GAMMA_FILE), &result.gamma_opt)?;
    io::write_signal_csv(&out_dir.join(G_FILE), &result.g_opt)?;
    let output = DesignOutput {
        config: &res.config,
        design: result.summary(),
        moments: res.moments,
    };
    io::write_json(&out_dir.join(RESULT_FILE), &output)?;
    println!("{}: gain {} (lower bound {})", result.method.as_str(), result.gain, result.lower_bound);
    Ok(())
}

fn read_pulse(path: &Path, grid: &TimeGrid) -> CliResult<Signal> {
    let s = io::read_signal_csv(path)?;
    if s.grid() != grid {
        return Err(wssus_core::Error::GridMismatch {
            left: s.grid().describe(),
            right: grid.describe(),
        }
        .into());
    }
    Ok(s)
}

pub fn cmd_evaluate(res: &Resolved, gamma_path: &Path, g_path: &Path, out_dir: &Path) -> CliResult<()> {
    let gamma = read_pulse(gamma_path, &res.grid)?;
    let g = read_pulse(g_path, &res.grid)?;
    let c = &res.scattering;
    let quadrature_gain = cp_map::fidelity(c, &g, &gamma)?;
    let lower_bound = optimizer::lower_bound(c, &g, &gamma)?;
    let report = monte_carlo(res, c, &g, &gamma, &res.lattice, res.config.monte_carlo.n_realizations)?;
    let output = EvaluationOutput {
        config: &res.config,
        gamma_path: Some(gamma_path.to_path_buf()),
        g_path: Some(g_path.to_path_buf()),
        quadrature_gain,
        lower_bound,
        monte_carlo: report,
        agreement_z: agreement_z(&report, quadrature_gain),
    };
    create_out_dir(out_dir)?;
    io::write_json(&out_dir.join(REPORT_FILE), &output)?;
    println!(
        "gain {} (MC {} +- {}), SINR {}",
        quadrature_gain, report.e_a, report.mc_stderr, report.sinr
    );
    Ok(())
}

pub fn cmd_simulate(res: &Resolved, out_dir: &Path) -> CliResult<()> {
    let design = run_design(res)?;
    let mc = &res.config.monte_carlo;
    let (report, traces) = sim::estimate_sinr_with_traces(
        &res.scattering,
        &design.g_opt,
        &design.gamma_opt,
        &res.lattice,
        mc.sigma2,
        mc.n_realizations,
        mc.seed,
    )?;
    let output = EvaluationOutput {
        config: &res.config,
        gamma_path: None,
        g_path: None,
        quadrature_gain: design.gain,
        lower_bound: design.lower_bound,
        monte_carlo: report,
        agreement_z: agreement_z(&report, design.gain),
    };
    create_out_dir(out_dir)?;
    io::write_json(&out_dir.join(SIMULATION_FILE), &output)?;
    if mc.write_traces {
        io::write_traces_csv(&out_dir.join(TRACES_FILE), &traces)?;
    }
    println!(
        "E_a {} +- {}, E_b {}, SINR {}",
        report.e_a, report.mc_stderr, report.e_b, report.sinr
    );
    Ok(())
}

struct SweepRow {
    value: f64,
    gain: f64,
    lower_bound: f64,
    report: FidelityReport,
}

fn integer_value(parameter: &str, v: f64) -> CliResult<usize> {
    if v.fract() != 0.0 || v < 1.0 || v > u32::MAX as f64 {
        return Err(CliError::Config(format!("{parameter} sweep values must be positive integers, got {v}")));
    }
    Ok(v as usize)
}

/// Validate all sweep values before running any of them.
fn check_sweep(res: &Resolved, sweep: &SweepConfig) -> CliResult<()> {
    if sweep.values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    if let Some(v) = sweep.values.iter().find(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("sweep value {v} is not finite")));
    }
    let lat = &res.config.lattice;
    for &v in &sweep.values {
        match sweep.parameter {
            SweepParameter::Alpha => {
                if !(v > 0.0) {
                    return Err(CliError::Config(format!("alpha must be positive, got {v}")));
                }
            }
            SweepParameter::T => {
                LatticeParams::square(v, lat.f_hertz, lat.index_radius)?.check_guard(&res.grid)?;
            }
            SweepParameter::F => {
                LatticeParams::square(lat.t_seconds, v, lat.index_radius)?.check_guard(&res.grid)?;
            }
            SweepParameter::NRealizations => {
                let n = integer_value("n_realizations", v)?;
                if n < sim::MIN_REALIZATIONS {
                    return Err(CliError::Config(format!(
                        "n_realizations must be at least {}, got {n}",
                        sim::MIN_REALIZATIONS
                    )));
                }
            }
            SweepParameter::Resolution => {
                let r = integer_value("resolution", v)?;
                res.config.scattering.with_resolution(r)?.build()?.check_guard(&res.grid)?;
            }
        }
    }
    Ok(())
}

fn sweep_row(res: &Resolved, parameter: SweepParameter, value: f64, fixed: Option<&DesignResult>) -> CliResult<SweepRow> {
    let n_mc = res.config.monte_carlo.n_realizations;
    let evaluate = |c: &ScatteringGrid, g: &Signal, gamma: &Signal, lattice: &LatticeParams, n: usize| -> CliResult<SweepRow> {
        Ok(SweepRow {
            value,
            gain: cp_map::fidelity(c, g, gamma)?,
            lower_bound: optimizer::lower_bound(c, g, gamma)?,
            report: monte_carlo(res, c, g, gamma, lattice, n)?,
        })
    };
    let c = &res.scattering;
    match parameter {
        SweepParameter::Alpha => {
            let (g, gamma) = optimizer::ansatz_pair(&res.grid, &res.moments, value)?;
            evaluate(c, &g, &gamma, &res.lattice, n_mc)
        }
        SweepParameter::T | SweepParameter::F | SweepParameter::NRealizations => {
            let d = fixed.expect("fixed design for lattice sweeps");
            let lat = &res.config.lattice;
            let (t, f, n) = match parameter {
                SweepParameter::T => (value, lat.f_hertz, n_mc),
                SweepParameter::F => (lat.t_seconds, value, n_mc),
                _ => (lat.t_seconds, lat.f_hertz, value as usize),
            };
            let lattice = LatticeParams::square(t, f, lat.index_radius)?;
            evaluate(c, &d.g_opt, &d.gamma_opt, &lattice, n)
        }
        SweepParameter::Resolution => {
            let mut cfg = res.config.clone();
            cfg.scattering = cfg.scattering.with_resolution(value as usize)?;
            let sub = cfg.resolve()?;
            let d = run_design(&sub)?;
            evaluate(&sub.scattering, &d.g_opt, &d.gamma_opt, &sub.lattice, n_mc)
        }
    }
}

pub fn cmd_sweep(res: &Resolved, sweep: &SweepConfig, out_dir: &Path) -> CliResult<()> {
    check_sweep(res, sweep)?;
    let fixed = match sweep.parameter {
        SweepParameter::T | SweepParameter::F | SweepParameter::NRealizations => Some(run_design(res)?),
        _ => None,
    };
    let mut rows = Vec::with_capacity(sweep.values.len());
    for &v in &sweep.values {
        log::info!("sweep {:?} = {v}", sweep.parameter);
        rows.push(sweep_row(res, sweep.parameter, v, fixed.as_ref())?);
    }
    create_out_dir(out_dir)?;
    let path = out_dir.join(SWEEP_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(wssus_core::Error::from)?;
    let header = [
        "value", "quadrature_gain", "lower_bound", "E_a", "E_b", "sinr", "bessel_bound", "mc_stderr", "mc_stderr_b",
        "n_realizations",
    ];
    w.write_record(header).map_err(wssus_core::Error::from)?;
    for r in &rows {
        let m = &r.report;
        let rec = [
            io::fmt_f64(r.value),
            io::fmt_f64(r.gain),
            io::fmt_f64(r.lower_bound),
            io::fmt_f64(m.e_a),
            io::fmt_f64(m.e_b),
            io::fmt_f64(m.sinr),
            io::fmt_f64(m.bessel_bound),
            io::fmt_f64(m.mc_stderr),
            io::fmt_f64(m.mc_stderr_b),
            m.n_realizations.to_string(),
        ];
        w.write_record(&rec).map_err(wssus_core::Error::from)?;
    }
    w.flush().map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;

    // first maximum wins on ties
    let best = rows
        .iter()
        .fold(None::<&SweepRow>, |acc, r| match acc {
            Some(a) if a.gain >= r.gain => Some(a),
            _ => Some(r),
        })
        .expect("nonempty sweep");
    let summary = SweepOutput {
        config: &res.config,
        parameter: sweep.parameter,
        values: sweep.values.clone(),
        argmax: best.value,
    };
    io::write_json(&out_dir.join(SWEEP_SUMMARY_FILE), &summary)?;
    println!("sweep over {} values, best gain {} at {}", rows.len(), best.gain, best.value);
    Ok(())
}

/// Append a timestamped line to the run log. Timestamps stay out of the
/// result files so reruns produce identical outputs.
pub fn append_log(out_dir: &Path, line: &str) {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let res = create_out_dir(out_dir).and_then(|_| {
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(out_dir.join(LOG_FILE))
            .and_then(|mut f| writeln!(f, "{stamp} {line}"))
            .map_err(|e| CliError::io("writing run log", e))
    });
    if let Err(e) = res {
        log::warn!("{e}");
    }
}
