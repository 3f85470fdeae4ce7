//! Link parameters and the closed-form quantities derived from them.
//!
//! Everything is SI internally: meters, seconds, 1/m. Positions follow the
//! vacuum-equivalent propagation distance `x` of the two-interferometer model.
//!
//! Sign convention: [`DerivedQuantities::kappa`] is stored as a positive
//! magnitude `D·λ₀²·c₀/(4π)` (divided by the convention's divisor), while
//! the accumulated dispersion [`DerivedQuantities::delta1`] carries the sign
//! of the model's `κ = −D·λ₀²·c₀/(4π)`, so `delta1 = −kappa·(l_g + 2l)`.
//! Every observable depends on `delta1²` or on `delta1·k₀` as written in the
//! model, so the sign only shows up as the direction of the `2·δ₁·k₀` shift
//! of the pulse means.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_finite, require_non_negative, require_positive, Result};

/// Vacuum speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Divisor applied to κ by [`KappaConvention::Calibrated`].
///
/// Fitted so that the asymptotic slope of `4·X₃` against fiber length is
/// 0.8454 m per 100 km at λ₀ = 1550 nm, δλ = 0.31 nm, D = 17 ps/(km·nm).
/// The same divisor then lands 4·X₃(50 km) on 0.423 m, the rate-length
/// product on 35.46 Gbps·km and the G-term maximum near 1.24 km.
pub const CALIBRATED_KAPPA_DIVISOR: f64 = 3.1715;

/// Converts ps/(km·nm) to s/m².
pub const PS_PER_KM_NM: f64 = 1e-12 / (1e3 * 1e-9);

/// Which κ normalization the model uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaConvention {
    /// `κ = D·λ₀²·c₀/(4π)` evaluated directly.
    #[default]
    FirstPrinciples,
    /// `κ = D·λ₀²·c₀/(4π) / CALIBRATED_KAPPA_DIVISOR`, which reproduces the
    /// published design figures.
    Calibrated,
}

impl KappaConvention {
    pub fn divisor(self) -> f64 {
        match self {
            KappaConvention::FirstPrinciples => 1.0,
            KappaConvention::Calibrated => CALIBRATED_KAPPA_DIVISOR,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KappaConvention::FirstPrinciples => "first-principles",
            KappaConvention::Calibrated => "calibrated",
        }
    }
}

impl fmt::Display for KappaConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for KappaConvention {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-principles" => Ok(KappaConvention::FirstPrinciples),
            "calibrated" => Ok(KappaConvention::Calibrated),
            other => Err(invalid(
                "kappa_convention",
                format!("expected `first-principles` or `calibrated`, got `{other}`"),
            )),
        }
    }
}

/// Source, fiber and interferometer geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkParams {
    /// Central wavelength λ₀, m.
    pub lambda0: f64,
    /// Wavelength spread δλ, m.
    pub delta_lambda: f64,
    /// Dispersion coefficient D, s/m².
    pub dispersion: f64,
    /// Group index N₀ at λ₀.
    pub group_index: f64,
    /// Transmission fiber length l_g, m.
    pub fiber_length: f64,
    /// Common interferometer leg length l, m.
    pub leg_length: f64,
    /// Transmission of the link fiber, T_g.
    pub fiber_transmission: f64,
    /// Transmission of each interferometer leg, T.
    pub leg_transmission: f64,
    pub kappa_convention: KappaConvention,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            lambda0: 1550e-9,
            delta_lambda: 0.31e-9,
            dispersion: 17.0 * PS_PER_KM_NM,
            group_index: 1.4682,
            fiber_length: 0.0,
            leg_length: 1.0,
            fiber_transmission: 1.0,
            leg_transmission: 1.0,
            kappa_convention: KappaConvention::FirstPrinciples,
        }
    }
}

impl LinkParams {
    pub fn with_fiber_length(mut self, meters: f64) -> Self {
        self.fiber_length = meters;
        self
    }

    pub fn with_convention(mut self, convention: KappaConvention) -> Self {
        self.kappa_convention = convention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("lambda0", self.lambda0)?;
        require_positive("delta_lambda", self.delta_lambda)?;
        if self.delta_lambda / self.lambda0 >= 1e-2 {
            return Err(invalid(
                "delta_lambda",
                format!(
                    "must be much smaller than lambda0 (ratio {:.3e} >= 1e-2)",
                    self.delta_lambda / self.lambda0
                ),
            ));
        }
        require_non_negative("dispersion", self.dispersion)?;
        require_positive("group_index", self.group_index)?;
        require_non_negative("fiber_length", self.fiber_length)?;
        require_non_negative("leg_length", self.leg_length)?;
        for (field, t) in [
            ("fiber_transmission", self.fiber_transmission),
            ("leg_transmission", self.leg_transmission),
        ] {
            require_finite(field, t)?;
            if !(t > 0.0 && t <= 1.0) {
                return Err(invalid(field, format!("must lie in (0, 1], got {t}")));
            }
        }
        Ok(())
    }

    /// δk = 2π·δλ/λ₀².
    pub fn delta_k(&self) -> f64 {
        2.0 * PI * self.delta_lambda / (self.lambda0 * self.lambda0)
    }

    /// k₀ = 2π/λ₀.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.lambda0
    }

    /// |κ| under the configured convention, m.
    pub fn kappa(&self) -> f64 {
        self.kappa_for(self.dispersion)
    }

    /// |κ| for an arbitrary dispersion coefficient (e.g. a DCF), keeping the
    /// sign of `dispersion`.
    pub fn kappa_for(&self, dispersion: f64) -> f64 {
        dispersion * self.lambda0 * self.lambda0 * SPEED_OF_LIGHT
            / (4.0 * PI * self.kappa_convention.divisor())
    }

    /// Signed chirp per meter of fiber with the given dispersion; this is the
    /// model's `κ` including its leading minus sign.
    pub fn chirp_per_meter(&self, dispersion: f64) -> f64 {
        -self.kappa_for(dispersion)
    }

    /// Signed accumulated dispersion for an uncompensated fiber of `length`
    /// plus both interferometer legs.
    pub fn delta1_for_length(&self, length: f64) -> f64 {
        self.chirp_per_meter(self.dispersion) * (length + 2.0 * self.leg_length)
    }

    /// Pulse σ for an accumulated dispersion `delta1`.
    pub fn sigma_for_delta1(&self, delta1: f64) -> f64 {
        gamma_of(self.delta_k(), delta1).sqrt() / (2.0 * self.delta_k())
    }

    /// Pulse σ with the fiber length replaced by `length`.
    pub fn sigma_at(&self, length: f64) -> f64 {
        self.sigma_for_delta1(self.delta1_for_length(length))
    }

    /// Position of the common propagation delay `N₀·(l_g + 2l)`; spectra are
    /// evaluated relative to it.
    pub fn reference_position(&self) -> f64 {
        self.group_index * (self.fiber_length + 2.0 * self.leg_length)
    }
}

/// γ = 1 + 16·δk⁴·δ₁².
pub fn gamma_of(delta_k: f64, delta1: f64) -> f64 {
    let dk2 = delta_k * delta_k;
    1.0 + 16.0 * dk2 * dk2 * delta1 * delta1
}

/// Phase-shifter settings and detector timing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MzConfig {
    /// Long-arm shifter Δ_d of the first interferometer, m.
    pub delta_d: f64,
    /// Long-arm shifter Δ_m of the second interferometer, m.
    pub delta_m: f64,
    /// Short-arm shifter Δ_c (= Δ_n), m.
    pub delta_c: f64,
    /// Detector rise time, s.
    pub t_rising: f64,
    /// Detector fall time, s.
    pub t_falling: f64,
}

impl Default for MzConfig {
    fn default() -> Self {
        Self {
            delta_d: 0.25,
            delta_m: 0.25,
            delta_c: 0.0,
            t_rising: 0.0,
            t_falling: 0.0,
        }
    }
}

impl MzConfig {
    pub fn with_shifters(delta_d: f64, delta_m: f64) -> Self {
        Self {
            delta_d,
            delta_m,
            ..Self::default()
        }
    }

    /// Δ_g; the link-fiber shifter is fixed at zero.
    pub const fn delta_g(&self) -> f64 {
        0.0
    }

    pub fn phase_sum(&self) -> f64 {
        self.delta_d + self.delta_m
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("delta_d", self.delta_d)?;
        require_non_negative("delta_m", self.delta_m)?;
        require_non_negative("delta_c", self.delta_c)?;
        require_non_negative("t_rising", self.t_rising)?;
        require_non_negative("t_falling", self.t_falling)?;
        Ok(())
    }

    /// Shifter of the first-interferometer leg.
    pub fn first_leg(&self, leg: FirstLeg) -> f64 {
        match leg {
            FirstLeg::C => self.delta_c,
            FirstLeg::D => self.delta_d,
        }
    }

    /// Shifter of the second-interferometer leg; `n` mirrors `c`.
    pub fn second_leg(&self, leg: SecondLeg) -> f64 {
        match leg {
            SecondLeg::N => self.delta_c,
            SecondLeg::M => self.delta_m,
        }
    }

    /// Δ_i + Δ_j for a path pair.
    pub fn pair_shift(&self, pair: Pair) -> f64 {
        self.first_leg(pair.first()) + self.second_leg(pair.second())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FirstLeg {
    C,
    D,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SecondLeg {
    N,
    M,
}

/// One of the four paths through the two interferometers. The short leg of
/// the second interferometer is written `c` in the pair names (`n ≡ c`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pair {
    Cc,
    Cm,
    Dc,
    Dm,
}

impl Pair {
    pub const ALL: [Pair; 4] = [Pair::Cc, Pair::Cm, Pair::Dc, Pair::Dm];

    pub fn first(self) -> FirstLeg {
        match self {
            Pair::Cc | Pair::Cm => FirstLeg::C,
            Pair::Dc | Pair::Dm => FirstLeg::D,
        }
    }

    pub fn second(self) -> SecondLeg {
        match self {
            Pair::Cc | Pair::Dc => SecondLeg::N,
            Pair::Cm | Pair::Dm => SecondLeg::M,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pair::Cc => "cc",
            Pair::Cm => "cm",
            Pair::Dc => "dc",
            Pair::Dm => "dm",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Pair {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cc" => Ok(Pair::Cc),
            "cm" => Ok(Pair::Cm),
            "dc" => Ok(Pair::Dc),
            "dm" => Ok(Pair::Dm),
            other => Err(invalid("pair", format!("expected cc|cm|dc|dm, got `{other}`"))),
        }
    }
}

/// A value per path pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairValues<T> {
    pub cc: T,
    pub cm: T,
    pub dc: T,
    pub dm: T,
}

impl<T: Copy> PairValues<T> {
    pub fn from_fn(mut f: impl FnMut(Pair) -> T) -> Self {
        Self {
            cc: f(Pair::Cc),
            cm: f(Pair::Cm),
            dc: f(Pair::Dc),
            dm: f(Pair::Dm),
        }
    }

    pub fn get(&self, pair: Pair) -> T {
        [self.cc, self.cm, self.dc, self.dm][pair.index()]
    }
}

/// The dispersion chain for one link instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    /// δk, 1/m.
    pub delta_k: f64,
    /// k₀, 1/m.
    pub k0: f64,
    /// |κ|, m.
    pub kappa: f64,
    /// Signed accumulated dispersion δ₁, m².
    pub delta1: f64,
    pub gamma: f64,
    /// Pulse standard deviation, m.
    pub sigma: f64,
    /// Full width at half maximum, m.
    pub fwhm: f64,
    /// Mean position of each path's pulse, m (absolute).
    pub mu: PairValues<f64>,
    /// `N₀·(l_g + 2l)`, the common part of every mean, m.
    pub reference: f64,
    /// Mean positions relative to `reference`, m.
    pub mu_offset: PairValues<f64>,
}

impl DerivedQuantities {
    /// Builds the chain for an explicit accumulated dispersion. Used when a
    /// compensation stage modifies δ₁.
    pub fn with_delta1(params: &LinkParams, config: &MzConfig, delta1: f64, reference: f64) -> Self {
        let delta_k = params.delta_k();
        let k0 = params.k0();
        let gamma = gamma_of(delta_k, delta1);
        let sigma = gamma.sqrt() / (2.0 * delta_k);
        let shift = 2.0 * delta1 * k0;
        let mu_offset = PairValues::from_fn(|p| config.pair_shift(p) + shift);
        let mu = PairValues::from_fn(|p| reference + mu_offset.get(p));
        Self {
            delta_k,
            k0,
            kappa: params.kappa(),
            delta1,
            gamma,
            sigma,
            fwhm: (8.0 * LN_2).sqrt() * sigma,
            mu,
            reference,
            mu_offset,
        }
    }

    /// X_ρ = ρ·√2·σ.
    pub fn x_rho(&self, rho: f64) -> Result<f64> {
        x_rho(self, rho)
    }

    /// Center of the middle pulse relative to `reference`.
    pub fn middle_offset(&self) -> f64 {
        0.5 * (self.mu_offset.cm + self.mu_offset.dc)
    }

    /// `x'_ij` for a position given relative to `reference`.
    pub fn x_prime(&self, config: &MzConfig, pair: Pair, offset: f64) -> f64 {
        offset - config.pair_shift(pair)
    }

    pub fn mu_offset_range(&self) -> (f64, f64) {
        Pair::ALL.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
            let m = self.mu_offset.get(p);
            (lo.min(m), hi.max(m))
        })
    }
}

/// Computes the full derived chain.
pub fn derive(params: &LinkParams, config: &MzConfig) -> Result<DerivedQuantities> {
    params.validate()?;
    config.validate()?;
    let delta1 = params.delta1_for_length(params.fiber_length);
    let d = DerivedQuantities::with_delta1(params, config, delta1, params.reference_position());
    if !(d.sigma.is_finite() && d.gamma.is_finite() && d.mu.dm.is_finite()) {
        return Err(crate::Error::NonFinite("derived quantities"));
    }
    Ok(d)
}

/// Half-width at which the pulse energy falls to `e^{-ρ²}` of its peak.
pub fn x_rho(derived: &DerivedQuantities, rho: f64) -> Result<f64> {
    require_positive("rho", rho)?;
    Ok(rho * SQRT_2 * derived.sigma)
}
