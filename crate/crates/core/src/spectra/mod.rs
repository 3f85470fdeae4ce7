//! Output position spectra of the two-interferometer link.
//!
//! [`eval_analytic`] evaluates the closed-form spectra; [`eval_oracle`]
//! integrates the wavenumber-domain transfer function numerically and serves
//! as an independent check of the closed form.
//!
//! All evaluation happens relative to the common delay `N₀·(l_g + 2l)` so the
//! large absolute propagation distance never enters a phase.

mod analytic;
mod curve;
mod oracle;

pub use analytic::{ComponentTerms, SignSet};
pub use curve::{CurveSamples, SpectrumCurve, CSV_HEADER, CSV_HEADER_RELATIVE};
pub use oracle::{eval_oracle, OracleOptions, OracleOutput, MIN_K_SAMPLES};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_non_negative, require_positive, Error, Result};
use crate::physics::{derive, DerivedQuantities, LinkParams, MzConfig};

use analytic::AnalyticLink;

/// Default number of position samples.
pub const DEFAULT_POINTS: usize = 4096;
/// Default grid margin beyond the outermost pulse means, in σ.
pub const DEFAULT_MARGIN_SIGMAS: f64 = 6.0;
/// Minimum margin the grid must cover beyond the outermost means, in σ.
pub const REQUIRED_MARGIN_SIGMAS: f64 = 5.0;

/// Coordinate system of an emitted curve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coordinates {
    /// Vacuum-equivalent propagation distance `x`.
    #[default]
    Absolute,
    /// `x` minus the middle-pulse center `(μ_cm + μ_dc)/2`.
    Centered,
}

/// Vertical scale of an emitted curve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Probability density, 1/m.
    #[default]
    Absolute,
    /// Both exits divided by their joint maximum.
    Peak,
}

/// Position grid request.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    /// Margin beyond the outermost pulse means, in σ. Ignored when `span`
    /// is set.
    pub margin_sigmas: f64,
    /// Explicit `[lo, hi]` relative to the middle-pulse center, m.
    pub span: Option<(f64, f64)>,
    pub coordinates: Coordinates,
    pub normalization: Normalization,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: DEFAULT_POINTS,
            margin_sigmas: DEFAULT_MARGIN_SIGMAS,
            span: None,
            coordinates: Coordinates::Absolute,
            normalization: Normalization::Absolute,
        }
    }
}

impl GridSpec {
    pub fn centered(mut self) -> Self {
        self.coordinates = Coordinates::Centered;
        self
    }

    pub fn peak_normalized(mut self) -> Self {
        self.normalization = Normalization::Peak;
        self
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    /// Offsets (relative to the reference delay) of every grid point.
    pub(crate) fn offsets(&self, derived: &DerivedQuantities) -> Result<Vec<f64>> {
        if self.points < 2 {
            return Err(invalid("points", format!("need at least 2 grid points, got {}", self.points)));
        }
        let (mu_lo, mu_hi) = derived.mu_offset_range();
        let center = derived.middle_offset();
        let (lo, hi) = match self.span {
            Some((a, b)) => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(invalid("span", format!("need finite lo < hi, got [{a}, {b}]")));
                }
                (center + a, center + b)
            }
            None => {
                require_non_negative("margin_sigmas", self.margin_sigmas)?;
                let m = self.margin_sigmas * derived.sigma;
                (mu_lo - m, mu_hi + m)
            }
        };
        let need = REQUIRED_MARGIN_SIGMAS * derived.sigma;
        let (need_lo, need_hi) = (mu_lo - need, mu_hi + need);
        if lo > need_lo || hi < need_hi {
            let shift = match self.coordinates {
                Coordinates::Absolute => derived.reference,
                Coordinates::Centered => -center,
            };
            return Err(Error::GridTooNarrow {
                lo: lo + shift,
                hi: hi + shift,
                need_lo: need_lo + shift,
                need_hi: need_hi + shift,
            });
        }
        let n = self.points;
        let step = (hi - lo) / (n - 1) as f64;
        Ok((0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect())
    }
}

/// A lumped dispersive element in the link, such as a span of
/// dispersion-compensating fiber. Acts on the wavenumber spectrum as
/// `√T·exp(−i·k·delay − i·k²·chirp)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionStage {
    pub transmission: f64,
    /// Group delay A, m.
    pub delay: f64,
    /// Signed chirp B, m².
    pub chirp: f64,
}

impl DispersionStage {
    pub const IDENTITY: DispersionStage = DispersionStage {
        transmission: 1.0,
        delay: 0.0,
        chirp: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.transmission > 0.0 && self.transmission <= 1.0) {
            return Err(invalid(
                "transmission",
                format!("stage transmission must lie in (0, 1], got {}", self.transmission),
            ));
        }
        require_non_negative("delay", self.delay)?;
        if !self.chirp.is_finite() {
            return Err(Error::NonFinite("stage chirp"));
        }
        Ok(())
    }
}

/// Where a lumped stage sits relative to the link.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// At the transmitter, before the first interferometer.
    #[default]
    Pre,
    /// At the receiver, after the second interferometer.
    Post,
    /// Half before, half after.
    Symmetric,
}

/// Which model produced a curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveSource {
    Analytic,
    Oracle,
    /// Closed form for a link whose accumulated dispersion is fully cancelled.
    Compensated,
}

/// Everything a curve was computed from, in SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveMetadata {
    pub source: CurveSource,
    pub params: LinkParams,
    pub config: MzConfig,
    /// Derived chain of the effective link (including any lumped stage).
    pub derived: DerivedQuantities,
    pub stage: Option<DispersionStage>,
    pub placement: Option<Placement>,
}

/// Effective derived chain and transmission once a lumped stage is folded
/// into the link fiber.
pub(crate) fn effective_link(
    params: &LinkParams,
    config: &MzConfig,
    stage: Option<&DispersionStage>,
) -> Result<(DerivedQuantities, f64)> {
    let base = derive(params, config)?;
    match stage {
        None => Ok((base, params.fiber_transmission)),
        Some(s) => {
            s.validate()?;
            let d = DerivedQuantities::with_delta1(params, config, base.delta1 + s.chirp, base.reference + s.delay);
            Ok((d, params.fiber_transmission * s.transmission))
        }
    }
}

/// Evaluates the closed-form spectra at both exits.
pub fn eval_analytic(params: &LinkParams, config: &MzConfig, grid: &GridSpec) -> Result<SpectrumCurve> {
    eval_analytic_with_stage(params, config, grid, None)
}

/// As [`eval_analytic`], with a lumped dispersion stage folded into the
/// link fiber (its chirp adds to δ₁, its delay to the reference position and
/// its transmission multiplies T_g).
pub fn eval_analytic_with_stage(
    params: &LinkParams,
    config: &MzConfig,
    grid: &GridSpec,
    stage: Option<&DispersionStage>,
) -> Result<SpectrumCurve> {
    let (derived, fiber_t) = effective_link(params, config, stage)?;
    let offsets = grid.offsets(&derived)?;
    let link = AnalyticLink {
        derived: &derived,
        config,
        fiber_transmission: fiber_t,
        leg_transmission: params.leg_transmission,
    };
    let values: Vec<(f64, f64)> = offsets.par_iter().map(|&u| link.intensities(u)).collect();
    let (o, p): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
    let meta = CurveMetadata {
        source: CurveSource::Analytic,
        params: *params,
        config: *config,
        derived,
        stage: stage.copied(),
        placement: None,
    };
    SpectrumCurve::assemble(offsets, o, p, grid, meta)
}

/// Per-path terms at one absolute position `x`.
pub fn component_terms(params: &LinkParams, config: &MzConfig, x: f64) -> Result<ComponentTerms> {
    let derived = derive(params, config)?;
    let link = AnalyticLink {
        derived: &derived,
        config,
        fiber_transmission: params.fiber_transmission,
        leg_transmission: params.leg_transmission,
    };
    Ok(link.terms(x - derived.reference))
}

/// Probability mass of each exit within `[μ_mid − X_ρ, μ_mid + X_ρ]`.
pub fn middle_window_masses(curve: &SpectrumCurve, rho_window: f64) -> Result<(f64, f64)> {
    let half = crate::physics::x_rho(&curve.metadata.derived, rho_window)?;
    curve.masses_within(curve.window_center, half)
}

/// Probability mass of each exit within a window of the given half-width
/// (m) around the middle-pulse center.
pub fn middle_window_masses_half_width(curve: &SpectrumCurve, half_width: f64) -> Result<(f64, f64)> {
    require_positive("half_width", half_width)?;
    curve.masses_within(curve.window_center, half_width)
}
