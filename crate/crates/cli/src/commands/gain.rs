use paramp::analytic::{eta_from_drives, measured_drives, phase_gain};
use paramp::sde::{phase_grid, run_gain_sweep, GainSweepPlan};
use paramp::SystemConfig;
use serde_json::json;

use super::{check_mu_list, check_positive, to_json, CommandOutput};
use crate::args::GainArgs;
use crate::error::{CliError, CliResult};
use crate::output::{CsvTable, OutputSet};

pub fn run(config: &SystemConfig, args: &GainArgs, out: &mut OutputSet) -> CliResult<CommandOutput> {
    check_mu_list(&args.mu_list)?;
    if args.phase_points == 0 {
        return Err(CliError::config("--phase-points: must be >= 1"));
    }
    let plan = GainSweepPlan {
        dt: args.dt.map(|dt| check_positive("--dt", dt)).transpose()?,
        ..GainSweepPlan::default()
    };
    let mode = args.mode.mode();
    let (fi, fj) = measured_drives(config);
    let eta = eta_from_drives(config, &fi, &fj)?;
    let phi = phase_grid(args.phase_points);

    let mut header = vec!["phi_rad", "mu"];
    if mode.analytic() {
        header.push("G_analytic");
    }
    if mode.sde() {
        header.push("G_sde");
    }
    let mut table = CsvTable::new(&header);
    let mut summary = vec![format!("eta = {eta:.6}")];
    for &mu in &args.mu_list {
        let analytic = if mode.analytic() {
            phi.iter()
                .map(|&p| phase_gain(mu, eta, p))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        };
        let simulated = if mode.sde() {
            run_gain_sweep(&config.with_mu(mu)?, &fi, &fj, &phi, &plan)?
                .iter()
                .map(|s| s.gain_signal)
                .collect()
        } else {
            Vec::new()
        };
        for (k, &p) in phi.iter().enumerate() {
            let mut row = vec![p, mu];
            row.extend(analytic.get(k));
            row.extend(simulated.get(k));
            table.push_numbers(&row);
        }
        let curve = if simulated.is_empty() { &analytic } else { &simulated };
        let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
        let max = curve.iter().copied().fold(0.0, f64::max);
        summary.push(format!(
            "mu = {mu}: gain {min:.4} .. {max:.4} ({:.1} dB deamplification)",
            -20.0 * min.log10()
        ));
    }
    out.write_table("gain_vs_phase.csv", &table)?;
    Ok(CommandOutput {
        plan: json!({
            "eta": eta,
            "drive_i": to_json(&fi),
            "drive_j": to_json(&fj),
            "sweep": to_json(&plan),
        }),
        summary,
    })
}
