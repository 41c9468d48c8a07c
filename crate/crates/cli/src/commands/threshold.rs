use paramp::analytic::instability_growth_rate;
use paramp::model::DerivedQuantities;
use paramp::SystemConfig;

use super::{check_mu_list, to_json, CommandOutput};
use crate::args::ThresholdArgs;
use crate::error::CliResult;
use crate::output::{CsvTable, OutputSet};

pub fn run(config: &SystemConfig, args: &ThresholdArgs, out: &mut OutputSet) -> CliResult<CommandOutput> {
    check_mu_list(&args.mu_list)?;
    let d = DerivedQuantities::compute(config)?;
    let mut table = CsvTable::new(&["quantity", "value", "unit"]);
    let rows: [(&str, f64, &str); 12] = [
        ("threshold", d.threshold, "m"),
        ("xi_i", d.xi, "m"),
        ("xi_j", d.xi_j, "m"),
        ("chi_i", d.chi_i, "m/N"),
        ("chi_j", d.chi_j, "m/N"),
        ("chi_s", d.chi_s, "m/N"),
        ("x_th_i", d.x_th_i, "m"),
        ("x_th_j", d.x_th_j, "m"),
        ("x_th_s", d.x_th_s, "m"),
        ("mu", d.mu, "1"),
        ("delta", d.delta, "1"),
        ("gamma_bar", d.gamma_bar, "rad/s"),
    ];
    for (name, value, unit) in rows {
        table.push(vec![name.into(), value.into(), unit.into()]);
    }
    out.write_table("threshold.csv", &table)?;

    let mut growth = CsvTable::new(&["mu", "growth_rate_per_s", "growth_rate_over_gamma_bar"]);
    for &mu in &args.mu_list {
        let rate = instability_growth_rate(&config.with_mu(mu)?)?;
        growth.push_numbers(&[mu, rate, rate / d.gamma_bar]);
    }
    out.write_table("threshold_growth.csv", &growth)?;

    Ok(CommandOutput {
        plan: to_json(&d),
        summary: vec![
            format!("threshold X_S,th = {:.6e} m", d.threshold),
            format!("damping lengths xi_i = {:.6e} m, xi_j = {:.6e} m", d.xi, d.xi_j),
            format!("thermal amplitudes {:.4e} m (i), {:.4e} m (j)", d.x_th_i, d.x_th_j),
        ],
    })
}
