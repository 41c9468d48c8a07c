use paramp::analytic::nonlinear_linewidth_for;
use paramp::estimators::{fit_dissipation_curve, fit_ringdown_log, DissipationModel};
use paramp::model::xi_scale_for;
use paramp::sde::{run_ringdown_with, RingdownPlan};
use paramp::{Membrane, SystemConfig};
use serde_json::json;

use super::{check_positive, to_json, CommandOutput};
use crate::args::RingdownArgs;
use crate::error::{CliError, CliResult};
use crate::output::{CsvTable, OutputSet};

/// Starting amplitude of the ringing mode, m. The equations are linear in it.
const INITIAL_AMPLITUDE: f64 = 1e-12;
/// Samples kept per trace in `ringdown_traces.csv`.
const TRACE_POINTS: usize = 2000;
/// Fewer hold amplitudes than this leave the damping length unconstrained.
const MIN_FIT_POINTS: usize = 6;

pub fn run(config: &SystemConfig, args: &RingdownArgs, out: &mut OutputSet) -> CliResult<CommandOutput> {
    if args.hold_list.is_empty() {
        return Err(CliError::config("--hold-list: at least one value required"));
    }
    if let Some(bad) = args.hold_list.iter().find(|h| !(h.is_finite() && **h >= 0.0)) {
        return Err(CliError::config(format!("--hold-list: {bad} is not an amplitude >= 0")));
    }
    let dt = args.dt.map(|v| check_positive("--dt", v)).transpose()?;
    let duration = args.duration.map(|v| check_positive("--duration", v)).transpose()?;
    let damped: Membrane = args.damped.into();
    let mode = args.mode.mode();
    let gamma = config.membrane(damped).gamma();
    let xi = xi_scale_for(config, damped)?;

    let mut header = vec!["x_hold_m", "x_hold_over_xi"];
    if mode.analytic() {
        header.extend(["gamma_analytic_per_s", "q_ratio_analytic"]);
    }
    if mode.sde() {
        header.extend(["gamma_sde_per_s", "gamma_sde_std_error", "q_ratio_sde"]);
    }
    let mut table = CsvTable::new(&header);
    let mut traces = CsvTable::new(&["x_hold_m", "t_s", "log_envelope"]);
    let mut plans = Vec::new();
    let mut sweep = (Vec::new(), Vec::new());

    for &h in &args.hold_list {
        let x = h * xi;
        let mut row = vec![x, h];
        if mode.analytic() {
            let w = nonlinear_linewidth_for(config, damped, x)?.gamma;
            row.extend([w, gamma / w]);
        }
        if mode.sde() {
            let mut plan = RingdownPlan::for_hold(config, damped, x)?;
            if let Some(dt) = dt {
                plan.dt = dt;
            }
            if let Some(t) = duration {
                plan.duration = t;
            }
            if dt.is_some() || duration.is_some() {
                let steps = (plan.duration / plan.dt).ceil() as usize;
                plan.record_stride = (steps / 20_000).max(1);
            }
            let rec = run_ringdown_with(config, damped, x, INITIAL_AMPLITUDE, &plan)?;
            let fit = fit_ringdown_log(&rec.times, &rec.log_envelope)?;
            if !fit.converged {
                return Err(CliError::numeric(format!(
                    "ring-down fit at x_hold = {x:e} m did not converge: {}",
                    fit.message
                )));
            }
            let w = fit.value("gamma_eff");
            row.extend([w, fit.std_error("gamma_eff"), gamma / w]);
            sweep.0.push(x);
            sweep.1.push(gamma / w);
            let stride = rec.times.len().div_ceil(TRACE_POINTS).max(1);
            for (t, l) in rec.times.iter().zip(&rec.log_envelope).step_by(stride) {
                traces.push_numbers(&[x, *t, *l]);
            }
            plans.push(plan);
        }
        table.push_numbers(&row);
    }
    out.write_table("ringdown.csv", &table)?;

    let mut summary = vec![format!("damping length xi = {xi:.6e} m ({damped:?} rings down)")];
    if mode.sde() {
        out.write_table("ringdown_traces.csv", &traces)?;
        if sweep.0.len() >= MIN_FIT_POINTS {
            let fit = fit_dissipation_curve(&sweep.0, &sweep.1, gamma, DissipationModel::Exact)?;
            let mut t = CsvTable::new(&["param", "value", "std_error", "model_value"]);
            let expected = [xi, config.substrate().gamma()];
            for (p, e) in fit.params.iter().zip(expected) {
                t.push(vec![
                    p.name.as_str().into(),
                    p.value.into(),
                    p.std_error.into(),
                    e.into(),
                ]);
            }
            out.write_table("ringdown_fit.csv", &t)?;
            summary.push(if fit.converged {
                format!(
                    "fitted xi = {:.6e} m ({:+.3}% vs model)",
                    fit.value("xi"),
                    100.0 * (fit.value("xi") / xi - 1.0)
                )
            } else {
                format!("dissipation fit not converged: {}", fit.message)
            });
        } else {
            log::warn!("fewer than {MIN_FIT_POINTS} hold amplitudes, skipping the damping-length fit");
        }
    }
    Ok(CommandOutput {
        plan: json!({
            "damped": to_json(&damped),
            "xi": xi,
            "initial_amplitude": INITIAL_AMPLITUDE,
            "ringdown": to_json(&plans),
        }),
        summary,
    })
}
