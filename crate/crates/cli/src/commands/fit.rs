use std::path::Path;

use paramp::estimators::{
    fit_dissipation_curve, fit_gain_curve, fit_ringdown, fit_ringdown_log, quality_factor, xi_vs_threshold_regression,
    Branch, DissipationModel, FitParam, FitResult, GainFitOptions,
};
use paramp::model::{threshold, xi_scale_for};
use paramp::{Membrane, SystemConfig};
use serde_json::json;

use super::CommandOutput;
use crate::args::{BranchArg, FitArgs, FitKind, ModelArg};
use crate::error::{CliError, CliResult};
use crate::output::{CsvTable, OutputSet};

/// Numeric columns of a CSV table, looked up by header name.
pub struct InputTable {
    header: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl InputTable {
    pub fn read(path: &Path) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut columns = vec![Vec::new(); header.len()];
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            for (c, field) in record.iter().enumerate() {
                let v = field.parse::<f64>().map_err(|_| {
                    CliError::config(format!(
                        "{}: row {}, column `{}`: {field:?} is not a number",
                        path.display(),
                        line + 2,
                        header[c]
                    ))
                })?;
                columns[c].push(v);
            }
        }
        Ok(Self { header, columns })
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header
            .iter()
            .position(|h| h == name)
            .map(|k| self.columns[k].as_slice())
    }

    fn require(&self, name: &str) -> CliResult<&[f64]> {
        self.column(name)
            .ok_or_else(|| CliError::config(format!("input has no column `{name}` (found {:?})", self.header)))
    }
}

pub fn run(config: &SystemConfig, args: &FitArgs, out: &mut OutputSet) -> CliResult<CommandOutput> {
    let input = InputTable::read(&args.input)?;
    let damped: Membrane = args.damped.into();
    let mut extra: Vec<FitParam> = Vec::new();
    let fit = match args.kind {
        FitKind::Gain => {
            let mut opts = match args.eta {
                Some(eta) => GainFitOptions::fixed_eta(eta),
                None => GainFitOptions::free_eta(match args.branch {
                    BranchArg::Below => Branch::Below,
                    BranchArg::Above => Branch::Above,
                }),
            };
            if args.phase_offset {
                opts = opts.with_phase_offset();
            }
            fit_gain_curve(input.require("phi_rad")?, input.require("G")?, &opts)?
        }
        FitKind::Dissipation => {
            let model = match args.model {
                ModelArg::Exact => DissipationModel::Exact,
                ModelArg::Approx => DissipationModel::Approx,
            };
            let gamma = config.membrane(damped).gamma();
            fit_dissipation_curve(input.require("x_m")?, input.require("q_ratio")?, gamma, model)?
        }
        FitKind::Ringdown => {
            let t = input.require("t_s")?;
            let fit = match (input.column("log_envelope"), input.column("envelope")) {
                (Some(l), _) => fit_ringdown_log(t, l)?,
                (None, Some(e)) => fit_ringdown(t, e)?,
                (None, None) => return Err(CliError::config("input needs a column `envelope` or `log_envelope`")),
            };
            let g = fit.value("gamma_eff");
            let omega = config.membrane(damped).omega();
            extra.push(FitParam {
                name: "q_eff".into(),
                value: quality_factor(omega, g),
                std_error: omega / (g * g) * fit.std_error("gamma_eff"),
            });
            fit
        }
        FitKind::Xi => {
            let x = input.require("x_th_m")?;
            let xi = input.require("xi_m")?;
            let pairs: Vec<(f64, f64)> = x.iter().copied().zip(xi.iter().copied()).collect();
            let fit = xi_vs_threshold_regression(&pairs, input.column("weight"))?;
            let expected = xi_scale_for(config, Membrane::I)? / threshold(config)?;
            extra.push(FitParam {
                name: "model_slope".into(),
                value: expected,
                std_error: 0.0,
            });
            fit
        }
    };
    if !fit.converged {
        return Err(CliError::numeric(format!("fit did not converge: {}", fit.message)));
    }
    let name = match args.kind {
        FitKind::Gain => "fit_gain.csv",
        FitKind::Dissipation => "fit_dissipation.csv",
        FitKind::Ringdown => "fit_ringdown.csv",
        FitKind::Xi => "fit_xi.csv",
    };
    let mut table = CsvTable::new(&["param", "value", "std_error"]);
    for p in fit.params.iter().chain(&extra) {
        table.push(vec![p.name.as_str().into(), p.value.into(), p.std_error.into()]);
    }
    out.write_table(name, &table)?;
    Ok(CommandOutput {
        plan: json!({
            "kind": args.kind,
            "n_points": fit.n_points,
            "residual_norm": fit.residual_norm,
            "message": fit.message,
        }),
        summary: describe(&fit, &extra),
    })
}

fn describe(fit: &FitResult, extra: &[FitParam]) -> Vec<String> {
    let mut lines = vec![format!(
        "{} points, residual norm {:.4e}",
        fit.n_points, fit.residual_norm
    )];
    for p in fit.params.iter().chain(extra) {
        lines.push(format!("{} = {:.8e} ± {:.2e}", p.name, p.value, p.std_error));
    }
    lines
}
