use std::f64::consts::PI;

use paramp::analytic::{spectrum, MeanAmplitudes};
use paramp::sde::{run_ensemble, EnsembleResult, Scheme, SimPlan};
use paramp::SystemConfig;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde_json::json;

use super::{check_mu_list, check_positive, to_json, CommandOutput};
use crate::args::SpectrumArgs;
use crate::error::{CliError, CliResult};
use crate::output::{CsvTable, OutputSet};

/// Default span in linewidths (Hz) of the broader membrane.
const DEFAULT_SPAN_LINEWIDTHS: f64 = 20.0;

/// Diagonal membrane entries and the α cross term, two-sided, m²/Hz.
const COLUMNS: [&str; 5] = ["S_alpha_ii", "S_alpha_jj", "S_beta_ii", "S_beta_jj", "S_alpha_ij_re"];

pub fn run(config: &SystemConfig, args: &SpectrumArgs, out: &mut OutputSet) -> CliResult<CommandOutput> {
    check_mu_list(&args.mu_list)?;
    let mode = args.mode.mode();
    let broad_hz = config.mode_i().gamma_hz().max(config.mode_j().gamma_hz());
    let span = match args.bandwidth_hz {
        Some(b) => check_positive("--bandwidth-hz", b)?,
        None => DEFAULT_SPAN_LINEWIDTHS * broad_hz,
    };
    let plan = if mode.sde() {
        if args.ntraj == 0 {
            return Err(CliError::config("--ntraj: must be >= 1"));
        }
        let dt = match args.dt {
            Some(dt) => check_positive("--dt", dt)?,
            None => 0.25 / span,
        };
        check_positive("--duration", args.duration)?;
        let plan = SimPlan::new(dt, args.duration, args.ntraj, args.common.seed)
            .with_scheme(Scheme::ExactPropagator)
            .with_records(args.ntraj, 1);
        let samples = plan.n_steps().saturating_sub(plan.warmup_steps(config));
        if samples < 16 {
            return Err(CliError::config(format!(
                "--duration: only {samples} samples remain after the {:.3e} s warm-up",
                plan.warmup_time(config)
            )));
        }
        Some(plan)
    } else {
        if args.points < 2 {
            return Err(CliError::config("--points: must be >= 2"));
        }
        None
    };

    let mut header = vec!["freq_hz".to_string(), "mu".to_string()];
    if mode.analytic() {
        header.extend(COLUMNS.iter().map(|c| c.to_string()));
        header.extend(["lorentzian_ii".to_string(), "lorentzian_jj".to_string()]);
    }
    if mode.sde() {
        header.extend(COLUMNS.iter().map(|c| format!("{c}_sde")));
    }
    let mut table = CsvTable::new(&header);
    let mut summary = Vec::new();

    for &mu in &args.mu_list {
        let c = config.with_mu(mu)?;
        let (freqs, simulated) = match &plan {
            Some(p) => {
                let result = run_ensemble(&c, p)?;
                let skip = p.warmup_steps(&c).min(p.n_steps());
                periodogram(&result, skip, span)
            }
            None => {
                let n = args.points;
                let f = (0..n).map(|k| -0.5 * span + span * k as f64 / (n - 1) as f64).collect();
                (f, Vec::new())
            }
        };
        let mean = MeanAmplitudes::squeezing(&c);
        let (gi, gj) = (c.mode_i().gamma(), c.mode_j().gamma());
        let zero = if mode.analytic() {
            Some(spectrum(&c, &mean, 0.0)?)
        } else {
            None
        };
        for (k, &f) in freqs.iter().enumerate() {
            let mut row = vec![f, mu];
            if let Some(s0) = &zero {
                let w = 2.0 * PI * f;
                let s = spectrum(&c, &mean, w)?;
                // m²/(rad/s) → m²/Hz
                let hz = 2.0 * PI;
                row.extend([
                    hz * s.alpha[(0, 0)].re,
                    hz * s.alpha[(1, 1)].re,
                    hz * s.beta[(0, 0)].re,
                    hz * s.beta[(1, 1)].re,
                    hz * s.alpha[(0, 1)].re,
                ]);
                let lorentz = |g: f64, s0: f64| hz * s0 * (0.5 * g).powi(2) / ((0.5 * g).powi(2) + w * w);
                row.extend([lorentz(gi, s0.alpha[(0, 0)].re), lorentz(gj, s0.alpha[(1, 1)].re)]);
            }
            if let Some(s) = simulated.get(k) {
                row.extend(s);
            }
            table.push_numbers(&row);
        }
        summary.push(format!(
            "mu = {mu}: {} frequencies over ±{:.4e} Hz, Lorentzian half-widths {:.4e} Hz (i), {:.4e} Hz (j)",
            freqs.len(),
            0.5 * span,
            gi / (4.0 * PI),
            gj / (4.0 * PI)
        ));
    }
    out.write_table("spectrum.csv", &table)?;
    Ok(CommandOutput {
        plan: json!({ "span_hz": span, "sim": to_json(&plan) }),
        summary,
    })
}

/// Trajectory-averaged periodograms `Δ/N |Σ x_n e^{−2πi mn/N}|²` of the
/// recorded membrane quadratures after `skip` warm-up samples, at the
/// frequencies `m/(NΔ)` within the span, in ascending order.
fn periodogram(result: &EnsembleResult, skip: usize, span: f64) -> (Vec<f64>, Vec<[f64; 5]>) {
    let interval = result.records[0].interval;
    let n = result.records[0].samples.len() - skip;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut acc = vec![[0.0; 5]; n];
    let mut buffers = vec![vec![Complex64::new(0.0, 0.0); n]; 4];
    for record in &result.records {
        for (b, buf) in buffers.iter_mut().enumerate() {
            for (slot, s) in buf.iter_mut().zip(&record.samples[skip..]) {
                let v = if b < 2 { s.alpha[b] } else { s.beta[b - 2] };
                *slot = Complex64::new(v, 0.0);
            }
            fft.process(buf);
        }
        for (m, a) in acc.iter_mut().enumerate() {
            for b in 0..4 {
                a[b] += buffers[b][m].norm_sqr();
            }
            a[4] += (buffers[0][m] * buffers[1][m].conj()).re;
        }
    }
    let scale = interval / (n as f64 * result.records.len() as f64);
    let df = 1.0 / (n as f64 * interval);
    let mut rows: Vec<(f64, [f64; 5])> = (0..n)
        .map(|m| {
            let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            (signed * df, acc[m].map(|v| v * scale))
        })
        .filter(|(f, _)| f.abs() <= 0.5 * span)
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows.into_iter().unzip()
}
