use paramp::analytic::{band_limited_correlations, correlations_lyapunov, cross_quadrature_stats, MeanAmplitudes};
use paramp::estimators::{phase_space_summary, Histogram2D, PrincipalAxes};
use paramp::sde::{max_euler_step, run_ensemble, Scheme, SimPlan};
use paramp::SystemConfig;
use serde_json::json;

use super::{check_mu_list, check_positive, to_json, CommandOutput};
use crate::args::{SchemeArg, SqueezeArgs};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, CsvTable, OutputSet};

const QUADRATURES: [&str; 4] = ["x_a", "x_b", "y_a", "y_b"];

/// Default exact-propagator step in units of the faster membrane decay time.
const EXACT_STEP_GAMMA: f64 = 0.1;

pub fn plan_for(config: &SystemConfig, args: &SqueezeArgs) -> CliResult<SimPlan> {
    let scheme = match args.scheme {
        SchemeArg::Exact => Scheme::ExactPropagator,
        SchemeArg::Euler => Scheme::EulerMaruyama,
    };
    let dt = match (args.dt, scheme) {
        (Some(dt), _) => check_positive("--dt", dt)?,
        (None, Scheme::ExactPropagator) => EXACT_STEP_GAMMA / config.mode_i().gamma().max(config.mode_j().gamma()),
        (None, Scheme::EulerMaruyama) => max_euler_step(config),
    };
    if args.ntraj == 0 {
        return Err(CliError::config("--ntraj: must be >= 1"));
    }
    check_positive("--duration", args.duration)?;
    Ok(SimPlan::new(dt, args.duration, args.ntraj, args.common.seed).with_scheme(scheme))
}

pub fn run(config: &SystemConfig, args: &SqueezeArgs, out: &mut OutputSet) -> CliResult<CommandOutput> {
    check_mu_list(&args.mu_list)?;
    let mode = args.mode.mode();
    let bandwidth = args
        .bandwidth_hz
        .map(|b| check_positive("--bandwidth-hz", b))
        .transpose()?;
    if args.bins == 0 {
        return Err(CliError::config("--bins: must be >= 1"));
    }
    let plan = if mode.sde() {
        Some(plan_for(config, args)?)
    } else {
        None
    };

    let mut header = vec!["mu", "quadrature"];
    if mode.analytic() {
        header.extend(["std_analytic", "squeezing_db_analytic"]);
        if bandwidth.is_some() {
            header.push("std_band_limited");
        }
    }
    if mode.sde() {
        header.extend(["std_sde", "std_sde_error", "squeezing_db_sde"]);
    }
    let mut table = CsvTable::new(&header);
    let mut hist = CsvTable::new(&["mu", "plane", "u_center", "v_center", "count"]);
    let mut axes = CsvTable::new(&["mu", "plane", "angle_rad", "std_major", "std_minor", "ratio"]);
    let mut summary = Vec::new();
    let mut warnings = Vec::new();

    for &mu in &args.mu_list {
        let c = config.with_mu(mu)?;
        let mut columns: Vec<[f64; 4]> = Vec::new();
        if mode.analytic() {
            let stats = cross_quadrature_stats(&correlations_lyapunov(&c, &MeanAmplitudes::squeezing(&c))?);
            columns.push([stats.std_xa, stats.std_xb, stats.std_ya, stats.std_yb]);
            columns.push(stats.squeezing_db());
            if let Some(bw) = bandwidth {
                let b = cross_quadrature_stats(&band_limited_correlations(&c, bw)?);
                columns.push([b.std_xa, b.std_xb, b.std_ya, b.std_yb]);
            }
        }
        if let Some(plan) = &plan {
            let result = run_ensemble(&c, plan)?;
            warnings.extend(result.warnings.iter().cloned());
            let est = result.cross_quadratures();
            let std = est.variance.map(|v| v.max(0.0).sqrt());
            let mut err = [0.0; 4];
            for q in 0..4 {
                err[q] = est.std_error[q] / (2.0 * std[q]);
            }
            columns.push(std);
            columns.push(err);
            columns.push(est.variance.map(|v| -10.0 * v.log10()));

            let ps = phase_space_summary(&result.final_states, &result.correlations.x_th, args.bins)?;
            for (name, h) in [
                ("alpha", &ps.alpha),
                ("beta", &ps.beta),
                ("cross_x", &ps.cross_x),
                ("cross_y", &ps.cross_y),
            ] {
                push_histogram(&mut hist, mu, name, h);
            }
            for (name, a) in [("alpha", &ps.alpha_axes), ("beta", &ps.beta_axes)] {
                push_axes(&mut axes, mu, name, a);
            }
            summary.push(format!(
                "mu = {mu}: simulated std x_a {:.4}, x_b {:.4}, y_a {:.4}, y_b {:.4} (± {:.4})",
                std[0], std[1], std[2], std[3], err[1]
            ));
        } else if let Some(first) = columns.first() {
            summary.push(format!(
                "mu = {mu}: std x_a {:.4}, x_b {:.4}, y_a {:.4}, y_b {:.4}",
                first[0], first[1], first[2], first[3]
            ));
        }
        for (q, name) in QUADRATURES.iter().enumerate() {
            let mut row: Vec<Cell> = vec![mu.into(), (*name).into()];
            row.extend(columns.iter().map(|col| Cell::Num(col[q])));
            table.push(row);
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    out.write_table("squeeze.csv", &table)?;
    if mode.sde() {
        out.write_table("squeeze_phase_space.csv", &hist)?;
        out.write_table("squeeze_axes.csv", &axes)?;
    }
    Ok(CommandOutput {
        plan: json!({ "sim": to_json(&plan), "bandwidth_hz": bandwidth }),
        summary,
    })
}

fn push_histogram(table: &mut CsvTable, mu: f64, plane: &str, h: &Histogram2D) {
    for ix in 0..h.nx {
        for iy in 0..h.ny {
            let (u, v) = h.bin_center(ix, iy);
            table.push(vec![
                mu.into(),
                plane.into(),
                u.into(),
                v.into(),
                Cell::Int(h.count(ix, iy)),
            ]);
        }
    }
}

fn push_axes(table: &mut CsvTable, mu: f64, plane: &str, a: &PrincipalAxes) {
    table.push(vec![
        mu.into(),
        plane.into(),
        a.angle.into(),
        a.std_major.into(),
        a.std_minor.into(),
        a.ratio().into(),
    ]);
}
