//! Run configuration in human units (km, nm, ps/(km·nm), ns, GHz), read
//! from a sectioned TOML file.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bb84::TableOptions;
use crate::design::{DetectorTiming, RateMode};
use crate::error::{Error, Result};
use crate::physics::{KappaConvention, LinkParams, MzConfig, PS_PER_KM_NM};
use crate::spectra::{Coordinates, GridSpec, Normalization};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
    #[default]
    Text,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Svg => "svg",
            OutputFormat::Text => "text",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "svg" => Ok(OutputFormat::Svg),
            "text" => Ok(OutputFormat::Text),
            other => Err(Error::Config(format!("output.format: expected csv|json|svg|text, got `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub wavelength_nm: f64,
    pub linewidth_nm: f64,
    pub dispersion_ps_per_km_nm: f64,
    pub group_index: f64,
    pub length_km: f64,
    pub leg_length_m: f64,
    pub fiber_transmission: f64,
    pub leg_transmission: f64,
    pub kappa_convention: KappaConvention,
}

impl Default for LinkSection {
    fn default() -> Self {
        let p = LinkParams::default();
        Self {
            wavelength_nm: p.lambda0 * 1e9,
            linewidth_nm: p.delta_lambda * 1e9,
            dispersion_ps_per_km_nm: 17.0,
            group_index: p.group_index,
            length_km: p.fiber_length / 1e3,
            leg_length_m: p.leg_length,
            fiber_transmission: p.fiber_transmission,
            leg_transmission: p.leg_transmission,
            kappa_convention: p.kappa_convention,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferometerSection {
    pub delta_d_m: f64,
    pub delta_m_m: f64,
    pub delta_c_m: f64,
    pub t_rising_ns: f64,
    pub t_falling_ns: f64,
}

impl Default for InterferometerSection {
    fn default() -> Self {
        let c = MzConfig::default();
        Self {
            delta_d_m: c.delta_d,
            delta_m_m: c.delta_m,
            delta_c_m: c.delta_c,
            t_rising_ns: c.t_rising * 1e9,
            t_falling_ns: c.t_falling * 1e9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSection {
    pub rho: f64,
    pub mode: RateMode,
    pub safety_factor: f64,
    /// Actual Δ_d + Δ_m for the gate window, m.
    pub sum_m: Option<f64>,
}

impl Default for DesignSection {
    fn default() -> Self {
        Self {
            rho: 3.0,
            mode: RateMode::Linear,
            safety_factor: 1.0,
            sum_m: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub start_km: f64,
    pub stop_km: f64,
    pub points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            start_km: 50.0,
            stop_km: 500.0,
            points: 46,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraSection {
    pub points: usize,
    pub margin_sigmas: f64,
    pub coordinates: Coordinates,
    pub normalization: Normalization,
}

impl Default for SpectraSection {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            points: g.points,
            margin_sigmas: g.margin_sigmas,
            coordinates: g.coordinates,
            normalization: g.normalization,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bb84Section {
    /// Δ̃, m; the ρ = 3 default when absent.
    pub baseline_m: Option<f64>,
    pub window_sigmas: f64,
    /// Lengths of the G-term sweep.
    pub gterm_start_km: f64,
    pub gterm_stop_km: f64,
    pub gterm_points: usize,
}

impl Default for Bb84Section {
    fn default() -> Self {
        Self {
            baseline_m: None,
            window_sigmas: 3.0,
            gterm_start_km: 0.01,
            gterm_stop_km: 20.0,
            gterm_points: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompensationSection {
    pub clock_ghz: f64,
    pub dcf_dispersion_ps_per_km_nm: f64,
    pub dcf_transmission: f64,
}

impl Default for CompensationSection {
    fn default() -> Self {
        Self {
            clock_ghz: 2.5,
            dcf_dispersion_ps_per_km_nm: -100.0,
            dcf_transmission: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub format: OutputFormat,
    /// Written to stdout when absent.
    pub path: Option<String>,
}

/// Everything a command can be configured with.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub link: LinkSection,
    pub interferometer: InterferometerSection,
    pub design: DesignSection,
    pub sweep: SweepSection,
    pub spectra: SpectraSection,
    pub bb84: Bb84Section,
    pub compensation: CompensationSection,
    pub output: OutputSection,
}

/// Upper bound on any requested sample count.
pub const MAX_POINTS: usize = 1 << 22;

fn config_error(field: &str, reason: impl fmt::Display) -> Error {
    Error::Config(format!("{field}: {reason}"))
}

fn check(field: &str, value: f64, ok: bool, want: &str) -> Result<()> {
    if !value.is_finite() || !ok {
        return Err(config_error(field, format!("{want}, got {value}")));
    }
    Ok(())
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every field, naming the offending one as `section.key`.
    pub fn validate(&self) -> Result<()> {
        let l = &self.link;
        check("link.wavelength_nm", l.wavelength_nm, l.wavelength_nm > 0.0, "must be positive")?;
        check("link.linewidth_nm", l.linewidth_nm, l.linewidth_nm > 0.0, "must be positive")?;
        check(
            "link.linewidth_nm",
            l.linewidth_nm,
            l.linewidth_nm < 1e-2 * l.wavelength_nm,
            "must be below 1% of the wavelength",
        )?;
        check(
            "link.dispersion_ps_per_km_nm",
            l.dispersion_ps_per_km_nm,
            l.dispersion_ps_per_km_nm >= 0.0,
            "must be non-negative",
        )?;
        check("link.group_index", l.group_index, l.group_index > 0.0, "must be positive")?;
        check("link.length_km", l.length_km, l.length_km >= 0.0, "must be non-negative")?;
        check("link.leg_length_m", l.leg_length_m, l.leg_length_m >= 0.0, "must be non-negative")?;
        for (field, t) in [
            ("link.fiber_transmission", l.fiber_transmission),
            ("link.leg_transmission", l.leg_transmission),
        ] {
            check(field, t, t > 0.0 && t <= 1.0, "must lie in (0, 1]")?;
        }

        let i = &self.interferometer;
        for (field, v) in [
            ("interferometer.delta_d_m", i.delta_d_m),
            ("interferometer.delta_m_m", i.delta_m_m),
            ("interferometer.delta_c_m", i.delta_c_m),
            ("interferometer.t_rising_ns", i.t_rising_ns),
            ("interferometer.t_falling_ns", i.t_falling_ns),
        ] {
            check(field, v, v >= 0.0, "must be non-negative")?;
        }

        let d = &self.design;
        check("design.rho", d.rho, d.rho > 0.0, "must be positive")?;
        check("design.safety_factor", d.safety_factor, d.safety_factor >= 1.0, "must be at least 1")?;
        if let Some(s) = d.sum_m {
            check("design.sum_m", s, s >= 0.0, "must be non-negative")?;
        }

        let s = &self.sweep;
        check("sweep.start_km", s.start_km, s.start_km >= 0.0, "must be non-negative")?;
        check("sweep.stop_km", s.stop_km, s.stop_km >= s.start_km, "must not be below sweep.start_km")?;
        if s.points == 0 || s.points > MAX_POINTS {
            return Err(config_error("sweep.points", format!("must lie in 1..={MAX_POINTS}, got {}", s.points)));
        }

        let g = &self.spectra;
        if g.points < 2 || g.points > MAX_POINTS {
            return Err(config_error("spectra.points", format!("must lie in 2..={MAX_POINTS}, got {}", g.points)));
        }
        check(
            "spectra.margin_sigmas",
            g.margin_sigmas,
            g.margin_sigmas >= crate::spectra::REQUIRED_MARGIN_SIGMAS,
            &format!("must be at least {}", crate::spectra::REQUIRED_MARGIN_SIGMAS),
        )?;

        let b = &self.bb84;
        if let Some(v) = b.baseline_m {
            check("bb84.baseline_m", v, v > 0.0, "must be positive")?;
        }
        check("bb84.window_sigmas", b.window_sigmas, b.window_sigmas > 0.0, "must be positive")?;
        check("bb84.gterm_start_km", b.gterm_start_km, b.gterm_start_km > 0.0, "must be positive")?;
        check(
            "bb84.gterm_stop_km",
            b.gterm_stop_km,
            b.gterm_stop_km >= b.gterm_start_km,
            "must not be below bb84.gterm_start_km",
        )?;
        if b.gterm_points == 0 || b.gterm_points > MAX_POINTS {
            return Err(config_error(
                "bb84.gterm_points",
                format!("must lie in 1..={MAX_POINTS}, got {}", b.gterm_points),
            ));
        }

        let c = &self.compensation;
        check("compensation.clock_ghz", c.clock_ghz, c.clock_ghz > 0.0, "must be positive")?;
        check(
            "compensation.dcf_dispersion_ps_per_km_nm",
            c.dcf_dispersion_ps_per_km_nm,
            c.dcf_dispersion_ps_per_km_nm * l.dispersion_ps_per_km_nm <= 0.0,
            "must oppose link.dispersion_ps_per_km_nm",
        )?;
        check(
            "compensation.dcf_transmission",
            c.dcf_transmission,
            c.dcf_transmission > 0.0 && c.dcf_transmission <= 1.0,
            "must lie in (0, 1]",
        )?;
        // Unit conversion can still overflow a finite input.
        self.link_params()
            .validate()
            .and_then(|_| self.mz_config().validate())
            .map_err(|e| Error::Config(format!("after unit conversion: {e}")))
    }

    /// Link parameters in SI units.
    pub fn link_params(&self) -> LinkParams {
        let l = &self.link;
        LinkParams {
            lambda0: l.wavelength_nm * 1e-9,
            delta_lambda: l.linewidth_nm * 1e-9,
            dispersion: l.dispersion_ps_per_km_nm * PS_PER_KM_NM,
            group_index: l.group_index,
            fiber_length: l.length_km * 1e3,
            leg_length: l.leg_length_m,
            fiber_transmission: l.fiber_transmission,
            leg_transmission: l.leg_transmission,
            kappa_convention: l.kappa_convention,
        }
    }

    pub fn mz_config(&self) -> MzConfig {
        let i = &self.interferometer;
        MzConfig {
            delta_d: i.delta_d_m,
            delta_m: i.delta_m_m,
            delta_c: i.delta_c_m,
            t_rising: i.t_rising_ns * 1e-9,
            t_falling: i.t_falling_ns * 1e-9,
        }
    }

    pub fn timing(&self) -> DetectorTiming {
        DetectorTiming::from_config(&self.mz_config())
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            points: self.spectra.points,
            margin_sigmas: self.spectra.margin_sigmas,
            span: None,
            coordinates: self.spectra.coordinates,
            normalization: self.spectra.normalization,
        }
    }

    pub fn table_options(&self) -> TableOptions {
        TableOptions {
            window_sigmas: self.bb84.window_sigmas,
            grid: self.grid(),
        }
    }

    /// s/m²
    pub fn dcf_dispersion(&self) -> f64 {
        self.compensation.dcf_dispersion_ps_per_km_nm * PS_PER_KM_NM
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let p = cfg.link_params();
        let d = LinkParams::default();
        assert!((p.lambda0 / d.lambda0 - 1.0).abs() < 1e-15);
        assert!((p.dispersion / d.dispersion - 1.0).abs() < 1e-15);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.link.length_km = 50.0;
        cfg.link.kappa_convention = KappaConvention::Calibrated;
        cfg.design.sum_m = Some(0.5);
        cfg.output.path = Some("out.csv".into());
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_field() {
        for (doc, field) in [
            ("[design]\nrho = 0\n", "design.rho"),
            ("[link]\nlength_km = -1\n", "link.length_km"),
            ("[link]\nfiber_transmission = 1.5\n", "link.fiber_transmission"),
            ("[compensation]\ndcf_dispersion_ps_per_km_nm = 20\n", "compensation.dcf_dispersion_ps_per_km_nm"),
            ("[link]\nlenght_km = 3\n", "lenght_km"),
            ("[link]\nkappa_convention = \"other\"\n", "kappa_convention"),
            ("[design]\nmode = \"fast\"\n", "mode"),
        ] {
            let err = RunConfig::from_toml(doc).unwrap_err().to_string();
            assert!(err.contains(field), "{doc:?} -> {err}");
        }
    }
}
