//! The five subcommands.

use std::sync::Arc;

use serde_json::{json, Value};

use prandtl_core::calibration::LAMBDA_CAL;
use prandtl_core::fields::{make_initial_data, State};
use prandtl_core::functionals::{find_critical_curve, EnergyFamilies, EnergyReport};
use prandtl_core::gevrey::GevreyWeight;
use prandtl_core::grid::stencil::{fornberg, window_start};
use prandtl_core::linstab::{conclusive_rates, fit_growth_exponent, growth_sweep, ShearProfile};
use prandtl_core::monitor::{bound_margins, decay_trace, two_run_divergence, BoundMargins, FamilyRecorder, MarginRecorder};
use prandtl_core::solver::{wall_residuals, Integrator, Observer};
use prandtl_core::verify::{verify_suite, VerifyConfig};
use prandtl_core::SpectralGrid;

use crate::config::{Command, Format, Invocation, ProfileChoice, RunConfig};
use crate::output::{atomic_write, csv_row, decode_snapshot, encode_snapshot, json_num};
use crate::CliError;

/// Trace columns of `simulate` and `diagnose`.
pub const TRACE_HEADER: [&str; 15] = [
    "t",
    "tau",
    "E_omega",
    "E_dot_omega",
    "E_h",
    "E_g1",
    "E_g2",
    "calE",
    "dtau_calE",
    "D_dot_omega",
    "D_h",
    "D_g1",
    "D_g2",
    "lower_margin",
    "upper_margin_max",
];

/// Result of a completed subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub summary: Value,
}

/// Validates the configuration, runs the subcommand and writes its outputs.
pub fn dispatch(inv: &Invocation) -> Result<Outcome, CliError> {
    let cfg = &inv.config;
    cfg.validate()?;
    let out = match inv.command {
        Command::Simulate => simulate(cfg)?,
        Command::Linstab => linstab(cfg)?,
        Command::Verify => verify(cfg)?,
        Command::Diagnose => diagnose(cfg)?,
        Command::Divergence => divergence(cfg)?,
    };
    let mut text = serde_json::to_string_pretty(&out.summary).expect("summary serializes");
    text.push('\n');
    atomic_write(&cfg.output_dir.join("summary.json"), text.as_bytes())?;
    Ok(out)
}

fn base_weight(cfg: &RunConfig) -> Result<GevreyWeight, CliError> {
    Ok(GevreyWeight::new(cfg.tau0, cfg.gevrey_m, cfg.p_corr)?)
}

fn trace_values(r: &EnergyReport, m: Option<&BoundMargins>) -> Vec<Option<f64>> {
    let mut v: Vec<Option<f64>> = [
        r.t,
        r.tau,
        r.e_omega,
        r.e_dot_omega,
        r.e_h,
        r.e_g1,
        r.e_g2,
        r.cal_e,
        r.dtau_cal_e,
        r.d_dot_omega,
        r.d_h,
        r.d_g1,
        r.d_g2,
    ]
    .into_iter()
    .map(Some)
    .collect();
    v.push(m.map(|m| m.lower_margin));
    v.push(m.map(BoundMargins::min_upper));
    v
}

/// Writes rows as `run.csv` or `run.json` according to `format`.
fn write_trace(cfg: &RunConfig, header: &[&str], rows: &[Vec<Option<f64>>]) -> Result<(), CliError> {
    match cfg.format {
        Format::Csv => {
            let mut s = header.join(",");
            s.push('\n');
            for r in rows {
                s.push_str(&csv_row(r));
                s.push('\n');
            }
            atomic_write(&cfg.output_dir.join("run.csv"), s.as_bytes())
        }
        Format::Json => {
            let arr: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let obj = header
                        .iter()
                        .zip(r)
                        .map(|(k, v)| (k.to_string(), v.map_or(Value::Null, json_num)))
                        .collect::<serde_json::Map<_, _>>();
                    Value::Object(obj)
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&arr).expect("rows serialize");
            s.push('\n');
            atomic_write(&cfg.output_dir.join("run.json"), s.as_bytes())
        }
    }
}

#[derive(Default)]
struct SnapshotCollector(Vec<Vec<u8>>);

impl Observer for SnapshotCollector {
    fn observe(&mut self, state: &State) -> prandtl_core::Result<()> {
        self.0.push(encode_snapshot(state));
        Ok(())
    }
}

fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = Arc::new(SpectralGrid::new(&cfg.grid)?);
    let state0 = make_initial_data(grid.clone(), &cfg.data)?;
    let mut families = FamilyRecorder::new(cfg.cutoffs.clone(), cfg.energy);
    let mut margins = MarginRecorder::new(cfg.data.delta, cfg.data.sigma, cfg.cutoffs.y_split, cfg.energy.y_window);
    let mut snaps = SnapshotCollector::default();
    let mut integ = Integrator::new(grid, &cfg.solver)?;
    let run = integ.run(&state0, &mut [&mut families, &mut margins, &mut snaps])?;

    let snap_dir = cfg.output_dir.join("snapshots");
    for (k, bytes) in snaps.0.iter().enumerate() {
        atomic_write(&snap_dir.join(format!("snap_{k:04}.snap")), bytes)?;
    }

    let trace = decay_trace(&families.families, cfg.tau0, &base_weight(cfg)?, cfg.alpha)?;
    let rows: Vec<Vec<Option<f64>>> = trace
        .series
        .iter()
        .map(|r| {
            let m = margins.margins.iter().find(|(t, _)| *t == r.t).map(|(_, m)| m);
            trace_values(r, m)
        })
        .collect();
    write_trace(cfg, &TRACE_HEADER, &rows)?;

    let margins_ok = margins.all_positive();
    let (slope, div_ok, final_gap) = if cfg.eta > 0.0 {
        let d = two_run_divergence(&state0, cfg.eta, &cfg.solver)?;
        (d.slope, d.within(LAMBDA_CAL), Some(d.final_gap()))
    } else {
        (None, true, None)
    };
    let (wall1, wall3) = wall_residuals(&run.final_state)?;
    let summary = json!({
        "command": "simulate",
        "verdicts": {
            "minimal_C": trace.minimal_c.map(json_num),
            "decay_ok": trace.decay_ok(),
            "margins_ok": margins_ok,
            "divergence_slope": slope.map(json_num),
        },
        "divergence_within_bound": div_ok,
        "divergence_final_gap": final_gap.map(json_num),
        "lambda_cal": json_num(LAMBDA_CAL),
        "final_time": json_num(run.final_state.t),
        "steps": run.steps,
        "samples": run.samples,
        "wall_residuals": { "dy_omega": json_num(wall1), "d3y_omega_minus_omega_dx_omega": json_num(wall3) },
    });
    Ok(Outcome {
        passed: trace.decay_ok() && margins_ok && div_ok,
        summary,
    })
}

/// `(y, U)` pairs from a whitespace-separated table; `#` starts a comment.
pub fn read_profile_table(body: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut pts = Vec::new();
    for (n, raw) in body.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Config {
                line: Some(n + 1),
                msg: format!("profile row `{line}` is not numeric"),
            })?;
        if cols.len() != 2 {
            return Err(CliError::Config {
                line: Some(n + 1),
                msg: "profile rows need exactly two columns: y U".into(),
            });
        }
        pts.push((cols[0], cols[1]));
    }
    if pts.len() < 6 {
        return Err(CliError::Config {
            line: None,
            msg: format!("profile table needs at least 6 rows, got {}", pts.len()),
        });
    }
    if pts.windows(2).any(|w| !(w[1].0 > w[0].0)) || pts[0].0 != 0.0 {
        return Err(CliError::Config {
            line: None,
            msg: "profile table must start at y = 0 and increase strictly".into(),
        });
    }
    Ok(pts)
}

/// Value and first two derivatives of the degree-5 local interpolant at `y`.
fn table_eval(pts: &[(f64, f64)], y: f64) -> [f64; 3] {
    let n = pts.len();
    let last = pts[n - 1].0;
    if y > last {
        return [pts[n - 1].1, 0.0, 0.0];
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let p = xs.partition_point(|&v| v <= y).saturating_sub(1);
    let start = window_start(p, 6, 0, n - 1).min(n - 6);
    let w = fornberg(y, &xs[start..start + 6], 2);
    let mut out = [0.0; 3];
    for (d, o) in out.iter_mut().enumerate() {
        *o = (0..6).map(|k| w[d][k] * pts[start + k].1).sum();
    }
    out
}

fn profile(cfg: &RunConfig, grid: &SpectralGrid) -> Result<ShearProfile, CliError> {
    Ok(match &cfg.profile {
        ProfileChoice::Reference => ShearProfile::reference(grid)?,
        ProfileChoice::Monotone => ShearProfile::monotone_contrast(grid)?,
        ProfileChoice::Table(path) => {
            let body = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let pts = read_profile_table(&body)?;
            ShearProfile::from_fn(
                grid,
                |y| table_eval(&pts, y)[0],
                |y| table_eval(&pts, y)[1],
                |y| table_eval(&pts, y)[2],
            )?
        }
    })
}

/// Lowest `r²` accepted by the `linstab` verdict.
pub const LINSTAB_MIN_R2: f64 = 0.95;

fn linstab(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate_kx()?;
    let grid = SpectralGrid::new(&cfg.grid)?;
    let prof = profile(cfg, &grid)?;
    let sweep = growth_sweep(&grid, &prof, &cfg.kx_list, &cfg.growth);
    let rows: Vec<Vec<Option<f64>>> = sweep
        .iter()
        .map(|(&k, r)| {
            let (rate, r2) = r.as_ref().map_or((None, None), |e| (Some(e.rate), Some(e.r2)));
            vec![Some(k as f64), rate, r2]
        })
        .collect();
    write_trace(cfg, &["kx", "rate", "r2"], &rows)?;
    let rates = conclusive_rates(&sweep);
    let fit = fit_growth_exponent(&rates)?;
    let inconclusive: Vec<usize> = sweep.iter().filter(|(_, r)| r.is_err()).map(|(&k, _)| k).collect();
    let passed = fit.r2 >= LINSTAB_MIN_R2;
    let summary = json!({
        "command": "linstab",
        "profile": cfg.get("profile"),
        "monotone": prof.monotone,
        "verdicts": {
            "slope": json_num(fit.slope),
            "r2": json_num(fit.r2),
            "fit_ok": passed,
        },
        "delta": json_num(fit.intercept.exp()),
        "used_kx": fit.used,
        "inconclusive_kx": inconclusive,
    });
    Ok(Outcome { passed, summary })
}

fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let vcfg = VerifyConfig {
        data: cfg.data.clone(),
        cutoffs: cfg.cutoffs.clone(),
        energy: cfg.energy,
        seed: cfg.seed,
        ..VerifyConfig::default()
    };
    let verdicts = verify_suite(&vcfg)?;
    let passed = verdicts.iter().all(|v| v.passed);
    let mut csv = String::from("check,passed,detail\n");
    for v in &verdicts {
        csv.push_str(&format!("{},{},\"{}\"\n", v.name, v.passed, v.detail.replace('"', "'")));
    }
    atomic_write(&cfg.output_dir.join("run.csv"), csv.as_bytes())?;
    let summary = json!({
        "command": "verify",
        "seed": cfg.seed,
        "verdicts": verdicts
            .iter()
            .map(|v| (v.name.clone(), json!({ "passed": v.passed, "detail": v.detail })))
            .collect::<serde_json::Map<_, _>>(),
    });
    Ok(Outcome { passed, summary })
}

fn diagnose(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let path = cfg
        .snapshot
        .as_ref()
        .ok_or_else(|| CliError::Config {
            line: None,
            msg: "diagnose needs `snapshot = FILE`".into(),
        })?;
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let state = decode_snapshot(&bytes, &cfg.grid)?;
    let curve = find_critical_curve(&state.grid, &state.omega, cfg.cutoffs.y_split)?;
    let fam = EnergyFamilies::compute(&state, &curve, &cfg.cutoffs, &cfg.energy)?;
    let report = EnergyReport::from_families(&fam, &base_weight(cfg)?, cfg.alpha)?;
    let m = bound_margins(&state, cfg.data.delta, cfg.data.sigma, cfg.cutoffs.y_split, cfg.energy.y_window)?;
    write_trace(cfg, &TRACE_HEADER, &[trace_values(&report, Some(&m))])?;
    let (wall1, wall3) = wall_residuals(&state)?;
    let d = state.diagnostics()?;
    let summary = json!({
        "command": "diagnose",
        "snapshot": path.display().to_string(),
        "t": json_num(state.t),
        "verdicts": { "margins_ok": m.all_positive() },
        "critical_curve": curve.valid,
        "lower_margin": json_num(m.lower_margin),
        "upper_margin_max": json_num(m.min_upper()),
        "wall_residuals": { "dy_omega": json_num(wall1), "d3y_omega_minus_omega_dx_omega": json_num(wall3) },
        "invariants": {
            "wall_u": json_num(d.wall_u),
            "wall_v": json_num(d.wall_v),
            "top_u": json_num(d.top_u),
        },
    });
    Ok(Outcome {
        passed: m.all_positive(),
        summary,
    })
}

fn divergence(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = Arc::new(SpectralGrid::new(&cfg.grid)?);
    let state0 = make_initial_data(grid, &cfg.data)?;
    let d = two_run_divergence(&state0, cfg.eta, &cfg.solver)?;
    let rows: Vec<Vec<Option<f64>>> = d
        .times
        .iter()
        .zip(&d.gaps)
        .map(|(&t, &g)| vec![Some(t), Some(g), Some(d.bound(LAMBDA_CAL, t))])
        .collect();
    write_trace(cfg, &["t", "gap", "bound"], &rows)?;
    let within = d.within(LAMBDA_CAL);
    let summary = json!({
        "command": "divergence",
        "eta": json_num(cfg.eta),
        "verdicts": {
            "divergence_slope": d.slope.map(json_num),
            "within_bound": within,
        },
        "lambda_cal": json_num(LAMBDA_CAL),
        "final_gap": json_num(d.final_gap()),
    });
    Ok(Outcome {
        passed: within,
        summary,
    })
}
