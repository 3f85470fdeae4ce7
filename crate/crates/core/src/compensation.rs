//! Dispersion-compensating fiber planning: how much of a link must be
//! cancelled to run at a given clock rate, and the lumped stage that does it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::design::{max_rate, min_phase_sum, DetectorTiming, RateMode};
use crate::error::{invalid, require_non_negative, require_positive, Error, Result};
use crate::physics::{LinkParams, PS_PER_KM_NM};
use crate::spectra::DispersionStage;

/// Tolerance of the active-length search, m. Near the interferometer-only
/// bound the rate moves by about 0.1 % per meter, so a meter is too coarse.
pub const ACTIVE_LENGTH_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// The whole link already supports the clock rate.
    NoDcf,
    /// Part of the link has to be cancelled.
    PartialDcf,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::NoDcf => "no_dcf",
            Regime::PartialDcf => "partial_dcf",
        })
    }
}

/// A span of compensating fiber.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcfSpan {
    /// Dispersion coefficient, s/m²; must oppose the link fiber's.
    pub dispersion: f64,
    /// l_cp, m.
    pub length: f64,
    /// T_cp.
    pub transmission: f64,
}

/// Common compensating-fiber dispersion coefficients, ps/(km·nm).
pub const DCF_PRESETS: &[(&str, f64)] = &[("dcf-80", -80.0), ("dcf-100", -100.0), ("dcf-160", -160.0), ("dcf-250", -250.0)];

/// Dispersion coefficient (s/m²) of a named preset.
pub fn dcf_preset(name: &str) -> Result<f64> {
    DCF_PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, d)| d * PS_PER_KM_NM)
        .ok_or_else(|| {
            let names: Vec<&str> = DCF_PRESETS.iter().map(|(n, _)| *n).collect();
            invalid("dcf", format!("unknown preset `{name}` ({})", names.join("|")))
        })
}

/// The lumped stage of a compensating span, with `B_cp = κ_cp·l_cp` and the
/// span's group delay. A non-empty span whose dispersion has the same sign
/// as the link fiber's adds to the broadening and is rejected.
pub fn stage_for_span(params: &LinkParams, span: &DcfSpan) -> Result<DispersionStage> {
    params.validate()?;
    require_non_negative("dcf_length", span.length)?;
    if !span.dispersion.is_finite() {
        return Err(Error::NonFinite("dcf_dispersion"));
    }
    if span.length > 0.0 && span.dispersion * params.dispersion >= 0.0 {
        return Err(invalid(
            "dcf_dispersion",
            format!(
                "compensating dispersion {} ps/(km·nm) must oppose the link's {} ps/(km·nm)",
                span.dispersion / PS_PER_KM_NM,
                params.dispersion / PS_PER_KM_NM
            ),
        ));
    }
    let stage = DispersionStage {
        transmission: span.transmission,
        delay: params.group_index * span.length,
        chirp: params.chirp_per_meter(span.dispersion) * span.length,
    };
    stage.validate()?;
    Ok(stage)
}

/// How much accumulated dispersion to remove.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cancellation {
    /// Remove everything, including the interferometer legs.
    Full,
    /// Leave the dispersion of `active_length` of link fiber (plus legs).
    Partial { active_length: f64 },
}

/// The span of compensating fiber (with the given dispersion and
/// transmission) that achieves the requested cancellation.
pub fn span_for(params: &LinkParams, target: Cancellation, dcf_dispersion: f64, transmission: f64) -> Result<DcfSpan> {
    params.validate()?;
    let per_meter = params.chirp_per_meter(params.dispersion);
    let needed = match target {
        Cancellation::Full => -params.delta1_for_length(params.fiber_length),
        Cancellation::Partial { active_length } => {
            require_non_negative("active_length", active_length)?;
            if active_length > params.fiber_length {
                return Err(invalid(
                    "active_length",
                    format!("{active_length} m exceeds the link length {} m", params.fiber_length),
                ));
            }
            -per_meter * (params.fiber_length - active_length)
        }
    };
    if needed == 0.0 {
        return Ok(DcfSpan {
            dispersion: dcf_dispersion,
            length: 0.0,
            transmission,
        });
    }
    let dcf_per_meter = params.chirp_per_meter(dcf_dispersion);
    if dcf_per_meter == 0.0 || dcf_per_meter.signum() != needed.signum() {
        return Err(invalid(
            "dcf_dispersion",
            format!(
                "compensating dispersion {} ps/(km·nm) must oppose the link's {} ps/(km·nm)",
                dcf_dispersion / PS_PER_KM_NM,
                params.dispersion / PS_PER_KM_NM
            ),
        ));
    }
    Ok(DcfSpan {
        dispersion: dcf_dispersion,
        length: needed / dcf_per_meter,
        transmission,
    })
}

/// Input-side multiplier `√T_cp·exp(−i·k·A_cp − i·k²·B_cp)` for the
/// requested cancellation.
pub fn precompensate_input(
    params: &LinkParams,
    target: Cancellation,
    dcf_dispersion: f64,
    transmission: f64,
) -> Result<DispersionStage> {
    let span = span_for(params, target, dcf_dispersion, transmission)?;
    stage_for_span(params, &span)
}

/// Result of the active-length search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompensationPlan {
    pub params: LinkParams,
    pub regime: Regime,
    /// Hz
    pub clock_rate: f64,
    pub rho: f64,
    pub mode: RateMode,
    /// m
    pub link_length: f64,
    /// Longest uncompensated length that still supports the clock, m.
    pub active_length: f64,
    /// Link fiber whose dispersion the DCF has to cancel, m.
    pub dcf_equivalent_length: f64,
    /// Bound on Δ_d + Δ_m at the active length (ideal detector), m.
    pub min_phase_sum: f64,
    /// Rate bound at the active length, Hz.
    pub max_rate_at_active: f64,
}

impl CompensationPlan {
    /// Physical DCF length for a given compensating dispersion, m.
    pub fn dcf_length(&self, dcf_dispersion: f64) -> Result<f64> {
        let span = span_for(
            &self.params,
            Cancellation::Partial {
                active_length: self.active_length,
            },
            dcf_dispersion,
            1.0,
        )?;
        Ok(span.length)
    }

    /// The input-side stage realizing this plan.
    pub fn stage(&self, dcf_dispersion: f64, transmission: f64) -> Result<DispersionStage> {
        precompensate_input(
            &self.params,
            Cancellation::Partial {
                active_length: self.active_length,
            },
            dcf_dispersion,
            transmission,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        plan.params.validate()?;
        require_positive("clock_rate", plan.clock_rate)?;
        require_positive("rho", plan.rho)?;
        for (field, v) in [
            ("link_length", plan.link_length),
            ("active_length", plan.active_length),
            ("dcf_equivalent_length", plan.dcf_equivalent_length),
        ] {
            require_non_negative(field, v)?;
        }
        if plan.active_length > plan.link_length {
            return Err(invalid("active_length", "exceeds link_length"));
        }
        Ok(plan)
    }

    pub fn to_text(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("regime".into(), self.regime.to_string()),
            ("kappa convention".into(), self.params.kappa_convention.to_string()),
            ("clock rate".into(), format!("{:.6} GHz", self.clock_rate / 1e9)),
            ("rate mode".into(), self.mode.to_string()),
            ("rho".into(), format!("{}", self.rho)),
            ("link length".into(), format!("{:.3} km", self.link_length / 1e3)),
            ("active length".into(), format!("{:.3} km", self.active_length / 1e3)),
            ("DCF-equivalent length".into(), format!("{:.3} km", self.dcf_equivalent_length / 1e3)),
            ("min phase sum at active".into(), format!("{:.6} m", self.min_phase_sum)),
            ("max rate at active".into(), format!("{:.6} GHz", self.max_rate_at_active / 1e9)),
        ];
        if self.regime == Regime::PartialDcf {
            for (name, d) in DCF_PRESETS {
                if let Ok(l) = self.dcf_length(d * PS_PER_KM_NM) {
                    rows.push((format!("DCF length ({name})"), format!("{:.3} km", l / 1e3)));
                }
            }
        }
        let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
    }
}

/// Finds the longest uncompensated length whose rate bound still reaches
/// `clock_rate`.
///
/// The search bisects `[0, L]` for a fixed number of halvings, so the result
/// is the largest feasible point of a grid that depends only on L; this
/// keeps the active length monotone in the clock rate.
pub fn plan(params: &LinkParams, clock_rate: f64, rho: f64, mode: RateMode) -> Result<CompensationPlan> {
    params.validate()?;
    require_positive("clock_rate", clock_rate)?;
    require_positive("rho", rho)?;
    let link = params.fiber_length;
    let rate_at = |l: f64| max_rate(&params.with_fiber_length(l), rho, mode);

    let active = if rate_at(link)? >= clock_rate {
        link
    } else {
        let at_zero = rate_at(0.0)?;
        if at_zero < clock_rate {
            return Err(Error::Infeasible(format!(
                "clock rate {:.6} GHz exceeds the {:.6} GHz bound of the interferometers alone",
                clock_rate / 1e9,
                at_zero / 1e9
            )));
        }
        let steps = (link / ACTIVE_LENGTH_TOLERANCE).log2().ceil().max(0.0) as u32;
        let (mut lo, mut hi) = (0.0, link);
        for _ in 0..steps {
            let mid = 0.5 * (lo + hi);
            if rate_at(mid)? >= clock_rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let at_active = params.with_fiber_length(active);
    Ok(CompensationPlan {
        params: *params,
        regime: if active < link { Regime::PartialDcf } else { Regime::NoDcf },
        clock_rate,
        rho,
        mode,
        link_length: link,
        active_length: active,
        dcf_equivalent_length: link - active,
        min_phase_sum: min_phase_sum(&at_active, rho, DetectorTiming::IDEAL, 1.0)?,
        max_rate_at_active: rate_at(active)?,
    })
}
