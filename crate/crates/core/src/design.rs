//! Visibility, phase-shifter, rate and gate-window bounds.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_non_negative, require_positive, Error, Result};
use crate::physics::{derive, x_rho, KappaConvention, LinkParams, MzConfig, SPEED_OF_LIGHT};

/// Inter-symbol spacing rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// Consecutive symbols may touch but not overlap the middle pulse:
    /// spacing 4·X_ρ.
    #[default]
    Linear,
    /// No shared part between consecutive symbols (photon-photon
    /// non-linearity considered): spacing 6·X_ρ.
    Nonlinear,
    /// Any protocol that only needs symbol discrimination: spacing 2·X_ρ.
    General,
}

impl RateMode {
    pub const ALL: [RateMode; 3] = [RateMode::Linear, RateMode::Nonlinear, RateMode::General];

    /// Symbol spacing in units of X_ρ.
    pub fn spacing_factor(self) -> f64 {
        match self {
            RateMode::Linear => 4.0,
            RateMode::Nonlinear => 6.0,
            RateMode::General => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RateMode::Linear => "linear",
            RateMode::Nonlinear => "nonlinear",
            RateMode::General => "general",
        }
    }
}

impl fmt::Display for RateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(RateMode::Linear),
            "nonlinear" => Ok(RateMode::Nonlinear),
            "general" => Ok(RateMode::General),
            other => Err(invalid("mode", format!("expected linear|nonlinear|general, got `{other}`"))),
        }
    }
}

/// Detector gate edge times.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorTiming {
    /// s
    pub t_rising: f64,
    /// s
    pub t_falling: f64,
}

impl DetectorTiming {
    pub const IDEAL: DetectorTiming = DetectorTiming {
        t_rising: 0.0,
        t_falling: 0.0,
    };

    /// Superconducting nanowire detector with a 5 ns response split evenly
    /// between rise and fall.
    pub const SNSPD: DetectorTiming = DetectorTiming {
        t_rising: 2.5e-9,
        t_falling: 2.5e-9,
    };

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "ideal" => Ok(Self::IDEAL),
            "snspd" => Ok(Self::SNSPD),
            other => Err(invalid("detector", format!("unknown profile `{other}` (ideal|snspd)"))),
        }
    }

    pub fn from_config(config: &MzConfig) -> Self {
        Self {
            t_rising: config.t_rising,
            t_falling: config.t_falling,
        }
    }

    /// Gate edges expressed as a length, c₀·(t_rise + t_fall).
    pub fn edge_length(&self) -> f64 {
        SPEED_OF_LIGHT * (self.t_rising + self.t_falling)
    }
}

/// Mass of a standard normal within ±ρ·√2 standard deviations, i.e. the
/// share of a pulse inside ±X_ρ of its mean: erf(ρ).
pub fn visibility_of_rho(rho: f64) -> Result<f64> {
    require_positive("rho", rho)?;
    Ok(statrs::function::erf::erf(rho))
}

fn x_rho_at(params: &LinkParams, rho: f64) -> Result<f64> {
    let derived = derive(params, &MzConfig::default())?;
    x_rho(&derived, rho)
}

/// Lower bound on Δ_d + Δ_m: `(4·X_ρ + c₀·(t_rise + t_fall))·safety`.
pub fn min_phase_sum(params: &LinkParams, rho: f64, timing: DetectorTiming, safety_factor: f64) -> Result<f64> {
    require_non_negative("t_rising", timing.t_rising)?;
    require_non_negative("t_falling", timing.t_falling)?;
    require_positive("safety_factor", safety_factor)?;
    let x = x_rho_at(params, rho)?;
    Ok((4.0 * x + timing.edge_length()) * safety_factor)
}

/// Upper bound on the detection (or clock) rate: `c₀/(k·X_ρ)`.
pub fn max_rate(params: &LinkParams, rho: f64, mode: RateMode) -> Result<f64> {
    let x = x_rho_at(params, rho)?;
    Ok(SPEED_OF_LIGHT / (mode.spacing_factor() * x))
}

/// Longest detector gate for a given shifter sum: `(Δ_d + Δ_m − 2·X_ρ)/c₀`.
pub fn gate_window(actual_phase_sum: f64, params: &LinkParams, rho: f64) -> Result<f64> {
    require_non_negative("actual_phase_sum", actual_phase_sum)?;
    let x = x_rho_at(params, rho)?;
    let window = (actual_phase_sum - 2.0 * x) / SPEED_OF_LIGHT;
    if window < 0.0 {
        return Err(Error::Infeasible(format!(
            "shifter sum {actual_phase_sum} m is below 2·X_ρ = {:.6} m; no gate fits",
            2.0 * x
        )));
    }
    Ok(window)
}

/// All design bounds for one link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub convention: KappaConvention,
    pub fiber_length: f64,
    pub rho: f64,
    pub visibility: f64,
    pub sigma: f64,
    pub fwhm: f64,
    pub x_rho: f64,
    pub timing: DetectorTiming,
    pub safety_factor: f64,
    pub min_phase_sum: f64,
    pub max_rate_linear: f64,
    pub max_rate_nonlinear: f64,
    pub max_rate_general: f64,
    /// Shifter sum the gate window was evaluated for, m.
    pub actual_phase_sum: Option<f64>,
    /// s
    pub gate_window: Option<f64>,
}

impl DesignReport {
    /// Computes every bound. When `actual_phase_sum` is given the gate
    /// window is evaluated for it, and a sum below 2·X_ρ is infeasible.
    pub fn compute(
        params: &LinkParams,
        rho: f64,
        timing: DetectorTiming,
        safety_factor: f64,
        actual_phase_sum: Option<f64>,
    ) -> Result<Self> {
        let derived = derive(params, &MzConfig::default())?;
        let x = x_rho(&derived, rho)?;
        let gate = actual_phase_sum.map(|s| gate_window(s, params, rho)).transpose()?;
        Ok(Self {
            convention: params.kappa_convention,
            fiber_length: params.fiber_length,
            rho,
            visibility: visibility_of_rho(rho)?,
            sigma: derived.sigma,
            fwhm: derived.fwhm,
            x_rho: x,
            timing,
            safety_factor,
            min_phase_sum: min_phase_sum(params, rho, timing, safety_factor)?,
            max_rate_linear: max_rate(params, rho, RateMode::Linear)?,
            max_rate_nonlinear: max_rate(params, rho, RateMode::Nonlinear)?,
            max_rate_general: max_rate(params, rho, RateMode::General)?,
            actual_phase_sum,
            gate_window: gate,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned two-column text rendering.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(&str, String)> = vec![
            ("kappa convention", self.convention.to_string()),
            ("fiber length", format!("{:.6} km", self.fiber_length / 1e3)),
            ("rho", format!("{}", self.rho)),
            ("visibility", format!("{:.6}", self.visibility)),
            ("sigma", format!("{:.6e} m", self.sigma)),
            ("FWHM", format!("{:.6e} m", self.fwhm)),
            ("X_rho", format!("{:.6e} m", self.x_rho)),
            ("rise + fall", format!("{:.3} ns", (self.timing.t_rising + self.timing.t_falling) * 1e9)),
            ("safety factor", format!("{}", self.safety_factor)),
            ("min phase sum", format!("{:.6} m", self.min_phase_sum)),
            ("max rate (linear)", format!("{:.6} Mbps", self.max_rate_linear / 1e6)),
            ("max rate (nonlinear)", format!("{:.6} Mbps", self.max_rate_nonlinear / 1e6)),
            ("max rate (general)", format!("{:.6} Mbps", self.max_rate_general / 1e6)),
        ];
        if let (Some(s), Some(g)) = (self.actual_phase_sum, self.gate_window) {
            rows.push(("actual phase sum", format!("{s:.6} m")));
            rows.push(("gate window", format!("{:.6} ns", g * 1e9)));
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
    }
}

/// One row of a length sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub length_km: f64,
    pub min_phase_sum_m: f64,
    pub max_rate_linear_hz: f64,
    pub max_rate_nonlinear_hz: f64,
    pub max_rate_general_hz: f64,
    /// Linear-mode rate times length, Hz·km.
    pub rate_length_hz_km: f64,
}

pub const SWEEP_CSV_HEADER: &str =
    "length_km,min_phase_sum_m,max_rate_linear_hz,max_rate_nonlinear_hz,max_rate_general_hz,rate_length_hz_km";

/// Evaluates the bounds over a list of fiber lengths (m). Rows come back in
/// input order.
pub fn sweep(
    params: &LinkParams,
    lengths: &[f64],
    rho: f64,
    timing: DetectorTiming,
    safety_factor: f64,
) -> Result<Vec<SweepRow>> {
    if lengths.is_empty() {
        return Err(invalid("lengths", "sweep range is empty"));
    }
    lengths
        .par_iter()
        .map(|&l| {
            let p = params.with_fiber_length(l);
            let linear = max_rate(&p, rho, RateMode::Linear)?;
            Ok(SweepRow {
                length_km: l / 1e3,
                min_phase_sum_m: min_phase_sum(&p, rho, timing, safety_factor)?,
                max_rate_linear_hz: linear,
                max_rate_nonlinear_hz: max_rate(&p, rho, RateMode::Nonlinear)?,
                max_rate_general_hz: max_rate(&p, rho, RateMode::General)?,
                rate_length_hz_km: linear * l / 1e3,
            })
        })
        .collect()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e}\n",
            r.length_km,
            r.min_phase_sum_m,
            r.max_rate_linear_hz,
            r.max_rate_nonlinear_hz,
            r.max_rate_general_hz,
            r.rate_length_hz_km
        ));
    }
    out
}

/// Evenly spaced lengths from `start` to `stop` inclusive, m.
pub fn linspace(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 || !(start.is_finite() && stop.is_finite()) || stop < start {
        return Err(invalid("range", format!("need finite start <= stop and count > 0, got {start}..{stop} x{count}")));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count).map(|i| if i == count - 1 { stop } else { start + step * i as f64 }).collect())
}
