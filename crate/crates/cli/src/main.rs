mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mzqkd::bb84::{default_baseline, detection_table, g_term_analysis};
use mzqkd::compensation::{dcf_preset, plan, precompensate_input, Cancellation};
use mzqkd::config::{OutputFormat, RunConfig};
use mzqkd::design::{linspace, sweep, sweep_to_csv, DesignReport, RateMode};
use mzqkd::spectra::{eval_analytic, eval_analytic_with_stage, eval_oracle, OracleOptions, Placement, SpectrumCurve};
use mzqkd::svg::{Chart, Series};
use mzqkd::{Error, KappaConvention};

use output::{envelope, write_output};

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "mzqkd", version, about = "Dispersion-limited design of two-interferometer phase-encoded QKD links")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, env = "MZQKD_CONFIG")]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// Link fiber length, km.
    #[arg(long, global = true)]
    length_km: Option<f64>,
    /// Dispersion coefficient, ps/(km·nm).
    #[arg(long, global = true)]
    dispersion: Option<f64>,
    /// Central wavelength, nm
    #[arg(long, global = true)]
    wavelength_nm: Option<f64>,
    /// Source spectral width, nm
    #[arg(long, global = true)]
    linewidth_nm: Option<f64>,
    /// Fiber in each interferometer arm before the link, m
    #[arg(long, global = true)]
    leg_length_m: Option<f64>,
    /// first-principles | calibrated
    #[arg(long, global = true)]
    convention: Option<KappaConvention>,
    /// Gaussian tail half-width in units of sigma
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// linear | nonlinear | general
    #[arg(long, global = true)]
    mode: Option<RateMode>,
    /// Multiplier on the minimum phase sum
    #[arg(long, global = true)]
    safety: Option<f64>,
    /// Δ_d, m.
    #[arg(long, global = true)]
    delta_d_m: Option<f64>,
    /// Δ_m, m.
    #[arg(long, global = true)]
    delta_m_m: Option<f64>,
    /// Δ_c, m.
    #[arg(long, global = true)]
    delta_c_m: Option<f64>,
    /// Detector rise time, ns
    #[arg(long, global = true)]
    t_rising_ns: Option<f64>,
    /// Detector fall time, ns
    #[arg(long, global = true)]
    t_falling_ns: Option<f64>,
    /// csv | json | svg | text
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    /// Output file; stdout when absent.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Phase-shifter, rate and gate-window bounds at one length.
    Design {
        /// Actual Δ_d + Δ_m for the gate window, m.
        #[arg(long)]
        sum_m: Option<f64>,
    },
    /// Bounds over a range of fiber lengths.
    Sweep {
        #[arg(long)]
        start_km: Option<f64>,
        #[arg(long)]
        stop_km: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Position spectra at both exits.
    Spectra {
        #[arg(long, value_enum, default_value_t = Source::Analytic)]
        source: Source,
        #[arg(long)]
        points: Option<usize>,
        /// Positions relative to the middle pulse.
        #[arg(long)]
        centered: bool,
        /// Divide both exits by their joint maximum.
        #[arg(long)]
        peak: bool,
        /// Cancel all accumulated dispersion with a compensating stage.
        #[arg(long)]
        compensated: bool,
    },
    /// Detection shares for all basis and bit combinations.
    Bb84 {
        /// Δ̃, m.
        #[arg(long)]
        baseline_m: Option<f64>,
        #[arg(long)]
        window_sigmas: Option<f64>,
    },
    /// Chromatic correction to the middle-pulse phase over a length range.
    Gterm {
        #[arg(long)]
        start_km: Option<f64>,
        #[arg(long)]
        stop_km: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Active length and DCF needed for a clock rate.
    Compensate {
        #[arg(long)]
        clock_ghz: Option<f64>,
        /// Compensating dispersion, ps/(km·nm).
        #[arg(long, conflicts_with = "dcf")]
        dcf_dispersion: Option<f64>,
        /// Named DCF preset (dcf-80, dcf-100, dcf-160, dcf-250).
        #[arg(long)]
        dcf: Option<String>,
    },
    /// Compares the closed-form spectra with numeric propagation.
    OracleCheck {
        /// Largest tolerated deviation of the peak-normalized curves.
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
        #[arg(long)]
        points: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Source {
    Analytic,
    Oracle,
}

/// A failure with its process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::Infeasible(_)) => EXIT_INFEASIBLE,
            Some(Error::InsufficientResolution(_)) => EXIT_VERIFICATION,
            Some(_) => EXIT_CONFIG,
            None => 1,
        };
        Self { code, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))
                .map_err(|e| Failure {
                    code: EXIT_CONFIG,
                    error: e,
                })?;
            RunConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut cfg.link.length_km, o.length_km);
    set(&mut cfg.link.dispersion_ps_per_km_nm, o.dispersion);
    set(&mut cfg.link.wavelength_nm, o.wavelength_nm);
    set(&mut cfg.link.linewidth_nm, o.linewidth_nm);
    set(&mut cfg.link.leg_length_m, o.leg_length_m);
    set(&mut cfg.design.rho, o.rho);
    set(&mut cfg.design.safety_factor, o.safety);
    set(&mut cfg.interferometer.delta_d_m, o.delta_d_m);
    set(&mut cfg.interferometer.delta_m_m, o.delta_m_m);
    set(&mut cfg.interferometer.delta_c_m, o.delta_c_m);
    set(&mut cfg.interferometer.t_rising_ns, o.t_rising_ns);
    set(&mut cfg.interferometer.t_falling_ns, o.t_falling_ns);
    if let Some(c) = o.convention {
        cfg.link.kappa_convention = c;
    }
    if let Some(m) = o.mode {
        cfg.design.mode = m;
    }
    if let Some(f) = o.format {
        cfg.output.format = f;
    }
    if let Some(p) = &o.output {
        cfg.output.path = Some(p.display().to_string());
    }

    match &cli.command {
        Command::Design { sum_m } => {
            if sum_m.is_some() {
                cfg.design.sum_m = *sum_m;
            }
        }
        Command::Sweep { start_km, stop_km, points } => {
            set(&mut cfg.sweep.start_km, *start_km);
            set(&mut cfg.sweep.stop_km, *stop_km);
            if let Some(n) = points {
                cfg.sweep.points = *n;
            }
        }
        Command::Spectra {
            points, centered, peak, ..
        } => {
            if let Some(n) = points {
                cfg.spectra.points = *n;
            }
            if *centered {
                cfg.spectra.coordinates = mzqkd::spectra::Coordinates::Centered;
            }
            if *peak {
                cfg.spectra.normalization = mzqkd::spectra::Normalization::Peak;
            }
        }
        Command::Bb84 {
            baseline_m,
            window_sigmas,
        } => {
            if baseline_m.is_some() {
                cfg.bb84.baseline_m = *baseline_m;
            }
            set(&mut cfg.bb84.window_sigmas, *window_sigmas);
        }
        Command::Gterm { start_km, stop_km, points } => {
            set(&mut cfg.bb84.gterm_start_km, *start_km);
            set(&mut cfg.bb84.gterm_stop_km, *stop_km);
            if let Some(n) = points {
                cfg.bb84.gterm_points = *n;
            }
        }
        Command::Compensate {
            clock_ghz,
            dcf_dispersion,
            dcf,
        } => {
            set(&mut cfg.compensation.clock_ghz, *clock_ghz);
            set(&mut cfg.compensation.dcf_dispersion_ps_per_km_nm, *dcf_dispersion);
            if let Some(name) = dcf {
                cfg.compensation.dcf_dispersion_ps_per_km_nm = dcf_preset(name)? / mzqkd::physics::PS_PER_KM_NM;
            }
        }
        Command::OracleCheck { points, .. } => {
            if let Some(n) = points {
                cfg.spectra.points = *n;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn unsupported(command: &str, format: OutputFormat) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        error: anyhow!("output.format: `{command}` does not emit {format}"),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    let params = cfg.link_params();
    let mz = cfg.mz_config();
    let format = cfg.output.format;

    let body = match &cli.command {
        Command::Design { .. } => {
            let report = DesignReport::compute(
                &params,
                cfg.design.rho,
                cfg.timing(),
                cfg.design.safety_factor,
                cfg.design.sum_m,
            )?;
            match format {
                OutputFormat::Text => report.to_text(),
                OutputFormat::Json => envelope(&cfg, &report),
                OutputFormat::Csv => sweep_to_csv(&sweep(
                    &params,
                    &[params.fiber_length],
                    cfg.design.rho,
                    cfg.timing(),
                    cfg.design.safety_factor,
                )?),
                f => return Err(unsupported("design", f)),
            }
        }
        Command::Sweep { .. } => {
            let lengths: Vec<f64> = linspace(cfg.sweep.start_km, cfg.sweep.stop_km, cfg.sweep.points)?
                .into_iter()
                .map(|km| km * 1e3)
                .collect();
            let rows = sweep(&params, &lengths, cfg.design.rho, cfg.timing(), cfg.design.safety_factor)?;
            match format {
                OutputFormat::Csv | OutputFormat::Text => sweep_to_csv(&rows),
                OutputFormat::Json => envelope(&cfg, &rows),
                OutputFormat::Svg => {
                    let x: Vec<f64> = rows.iter().map(|r| r.length_km).collect();
                    let y: Vec<f64> = rows.iter().map(|r| r.min_phase_sum_m).collect();
                    Chart {
                        title: "Minimum phase-shifter sum",
                        x_label: "fiber length (km)",
                        y_label: "Δd + Δm (m)",
                        series: vec![Series {
                            name: "min sum",
                            x: &x,
                            y: &y,
                        }],
                    }
                    .render()
                }
            }
        }
        Command::Spectra {
            source, compensated, ..
        } => {
            let grid = cfg.grid();
            let stage = if *compensated {
                Some(precompensate_input(
                    &params,
                    Cancellation::Full,
                    cfg.dcf_dispersion(),
                    cfg.compensation.dcf_transmission,
                )?)
            } else {
                None
            };
            let curve = match source {
                Source::Analytic => eval_analytic_with_stage(&params, &mz, &grid, stage.as_ref())?,
                Source::Oracle => {
                    let options = OracleOptions {
                        stage: stage.map(|s| (s, Placement::Pre)),
                        ..OracleOptions::default()
                    };
                    eval_oracle(&params, &mz, &grid, &options)?.curve
                }
            };
            match format {
                OutputFormat::Csv => curve.to_csv(),
                OutputFormat::Json => envelope(&cfg, &curve),
                OutputFormat::Svg => spectrum_chart(&curve),
                f => return Err(unsupported("spectra", f)),
            }
        }
        Command::Bb84 { .. } => {
            let baseline = match cfg.bb84.baseline_m {
                Some(b) => b,
                None => default_baseline(&params)?,
            };
            let table = detection_table(&params, baseline, &cfg.table_options())?;
            if let mzqkd::bb84::TableStatus::Warning(w) = &table.status {
                eprintln!("warning: {w}");
            }
            match format {
                OutputFormat::Csv | OutputFormat::Text => table.to_csv(),
                OutputFormat::Json => envelope(&cfg, &table),
                f => return Err(unsupported("bb84", f)),
            }
        }
        Command::Gterm { .. } => {
            let lengths: Vec<f64> = linspace(cfg.bb84.gterm_start_km, cfg.bb84.gterm_stop_km, cfg.bb84.gterm_points)?
                .into_iter()
                .map(|km| km * 1e3)
                .collect();
            let analysis = g_term_analysis(&params, &lengths, mz.delta_c)?;
            match format {
                OutputFormat::Csv => analysis.to_csv(),
                OutputFormat::Json => envelope(&cfg, &analysis),
                OutputFormat::Text => format!(
                    "argmax |G|            {:.3} km\nanalytic argmax       {:.3} km\nargmax second term    {:.3} km\n",
                    analysis.argmax_g / 1e3,
                    analysis.analytic_argmax / 1e3,
                    analysis.argmax_second_term / 1e3
                ),
                OutputFormat::Svg => {
                    let x: Vec<f64> = analysis.rows.iter().map(|r| r.length / 1e3).collect();
                    let y: Vec<f64> = analysis.rows.iter().map(|r| r.second_term).collect();
                    Chart {
                        title: "Chromatic phase correction at 3σ",
                        x_label: "fiber length (km)",
                        y_label: "|G·(3σ − Δc)|",
                        series: vec![Series {
                            name: "second term",
                            x: &x,
                            y: &y,
                        }],
                    }
                    .render()
                }
            }
        }
        Command::Compensate { .. } => {
            let p = plan(&params, cfg.compensation.clock_ghz * 1e9, cfg.design.rho, cfg.design.mode)?;
            match format {
                OutputFormat::Text => p.to_text(),
                OutputFormat::Json => envelope(&cfg, &p),
                f => return Err(unsupported("compensate", f)),
            }
        }
        Command::OracleCheck { threshold, .. } => {
            let grid = cfg.grid().peak_normalized();
            let analytic = eval_analytic(&params, &mz, &grid)?;
            let oracle = eval_oracle(&params, &mz, &grid, &OracleOptions::default())?;
            let deviation = max_deviation(&analytic, &oracle.curve);
            let passed = deviation <= *threshold;
            let text = match format {
                OutputFormat::Json => envelope(
                    &cfg,
                    &serde_json::json!({
                        "max_deviation": deviation,
                        "threshold": threshold,
                        "passed": passed,
                        "k_samples": oracle.k_samples,
                        "input_norm": oracle.input_norm,
                        "exit_h_remainder": oracle.exit_h_remainder,
                    }),
                ),
                OutputFormat::Text => format!(
                    "max deviation   {deviation:.3e}\nthreshold       {threshold:.3e}\nk samples       {}\nresult          {}\n",
                    oracle.k_samples,
                    if passed { "pass" } else { "FAIL" }
                ),
                f => return Err(unsupported("oracle-check", f)),
            };
            write_output(cfg.output.path.as_deref(), &text).map_err(Failure::from)?;
            if !passed {
                return Err(Failure {
                    code: EXIT_VERIFICATION,
                    error: anyhow!("analytic and oracle spectra differ by {deviation:.3e} > {threshold:.3e}"),
                });
            }
            return Ok(());
        }
    };
    write_output(cfg.output.path.as_deref(), &body)?;
    Ok(())
}

/// Largest pointwise difference between two peak-normalized curves.
fn max_deviation(a: &SpectrumCurve, b: &SpectrumCurve) -> f64 {
    a.intensity_o
        .iter()
        .zip(&b.intensity_o)
        .chain(a.intensity_p.iter().zip(&b.intensity_p))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn spectrum_chart(curve: &SpectrumCurve) -> String {
    Chart {
        title: "Position spectra at the second interferometer",
        x_label: "x (m)",
        y_label: "|ψ|²",
        series: vec![
            Series {
                name: "exit o",
                x: &curve.x,
                y: &curve.intensity_o,
            },
            Series {
                name: "exit p",
                x: &curve.x,
                y: &curve.intensity_p,
            },
        ],
    }
    .render()
}
