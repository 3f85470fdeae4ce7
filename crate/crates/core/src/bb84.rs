//! Phase-basis tables, the chromatic correction to the middle-pulse phase,
//! and end-to-end detection tables.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{min_phase_sum, DetectorTiming};
use crate::error::{invalid, require_non_negative, require_positive, Error, Result};
use crate::physics::{derive, gamma_of, x_rho, LinkParams, MzConfig, Pair};
use crate::spectra::{eval_analytic, middle_window_masses_half_width, GridSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Alice,
    Bob,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::X => "X",
            Basis::Z => "Z",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub fn value(self) -> u8 {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }
}

/// Output port of the second interferometer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exit {
    O,
    P,
}

/// A table-driven shifter setting. The phase offset is an exact number of
/// quarter wavelengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseChoice {
    pub role: Role,
    pub basis: Basis,
    pub bit: Option<Bit>,
    /// φ in units of λ₀/4 (0..=3).
    pub quarter_waves: u8,
}

impl PhaseChoice {
    /// φ, m.
    pub fn phase_offset(&self, lambda0: f64) -> f64 {
        f64::from(self.quarter_waves) * lambda0 / 4.0
    }

    /// Total shifter value Δ = Δ̃ + φ, m.
    pub fn shifter(&self, baseline: f64, lambda0: f64) -> f64 {
        baseline + self.phase_offset(lambda0)
    }
}

/// Alice: X → {0, λ₀/2}, Z → {λ₀/4, 3λ₀/4} for bits {0, 1}.
/// Bob: X → 0, Z → λ₀/4.
pub fn phase_for(role: Role, basis: Basis, bit: Option<Bit>) -> Result<PhaseChoice> {
    let quarter_waves = match (role, basis, bit) {
        (Role::Alice, Basis::X, Some(Bit::Zero)) => 0,
        (Role::Alice, Basis::X, Some(Bit::One)) => 2,
        (Role::Alice, Basis::Z, Some(Bit::Zero)) => 1,
        (Role::Alice, Basis::Z, Some(Bit::One)) => 3,
        (Role::Bob, Basis::X, None) => 0,
        (Role::Bob, Basis::Z, None) => 1,
        (Role::Alice, _, None) => return Err(Error::InvalidPhase("Alice needs a bit value".into())),
        (Role::Bob, _, Some(_)) => return Err(Error::InvalidPhase("Bob does not choose a bit".into())),
    };
    Ok(PhaseChoice {
        role,
        basis,
        bit,
        quarter_waves,
    })
}

/// The chromatic correction factor `G = λ₀·(1 − 1/γ)/(4π·δ₁)`, 1/m, written
/// as `4·λ₀·δk⁴·δ₁/(π·γ)` so it stays accurate as δ₁ → 0.
pub fn g_factor(params: &LinkParams) -> Result<f64> {
    params.validate()?;
    let dk = params.delta_k();
    let delta1 = params.delta1_for_length(params.fiber_length);
    let gamma = gamma_of(dk, delta1);
    Ok(4.0 * params.lambda0 * dk.powi(4) * delta1 / (PI * gamma))
}

/// Both evaluations of `z_a − z_b` at a point of the symbol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZDifference {
    /// From the per-path phase expressions.
    pub exact: f64,
    /// `(2π/λ₀)(ΣΔ_a − ΣΔ_b)·{1 + G·[δx + (Δ_d + Δ_m − ΣΔ_a − ΣΔ_b)/2]}`.
    pub factored: f64,
    pub g: f64,
}

/// Phase difference between two path pairs at `δx` from the symbol center.
///
/// The center is `2·δ₁·k₀ + (Δ_d + Δ_m)/2` past the common delay, which is
/// the midpoint of the exterior pulses when Δ_c = 0; with Δ_c ≠ 0 the
/// correction term picks up `−Δ_c` for the middle pair.
pub fn z_difference(params: &LinkParams, config: &MzConfig, delta_x: f64, a: Pair, b: Pair) -> Result<ZDifference> {
    let d = derive(params, config)?;
    if !delta_x.is_finite() || delta_x.abs() > 5.0 * d.sigma {
        return Err(invalid("delta_x", format!("must lie within ±5σ = ±{:.4e} m", 5.0 * d.sigma)));
    }
    let offset = 2.0 * d.delta1 * d.k0 + 0.5 * config.phase_sum() + delta_x;
    let (sa, sb) = (config.pair_shift(a), config.pair_shift(b));
    let xa = offset - sa;
    let xb = offset - sb;
    let dk2 = d.delta_k * d.delta_k;
    let diff = sa - sb;
    let exact = (d.k0 * diff + 4.0 * dk2 * dk2 * d.delta1 * diff * (xa + xb)) / d.gamma;

    let g = g_factor(params)?;
    let factored = 2.0 * PI / params.lambda0 * diff * (1.0 + g * (delta_x + 0.5 * (config.phase_sum() - sa - sb)));
    Ok(ZDifference { exact, factored, g })
}

/// G-term values at one fiber length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GTermAnalysis {
    /// m
    pub length: f64,
    /// 1/m
    pub g: f64,
    /// |G·(δx − Δ_c)| at δx = 3σ.
    pub second_term: f64,
    /// m
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GTermSweep {
    pub rows: Vec<GTermAnalysis>,
    /// Sweep length with the largest |G|, m.
    pub argmax_g: f64,
    /// Sweep length with the largest second term, m.
    pub argmax_second_term: f64,
    /// `1/(4·δk²·κ) − 2l`, where |G| peaks, m.
    pub analytic_argmax: f64,
}

pub const GTERM_CSV_HEADER: &str = "length_km,g_per_m,second_term,sigma_m";

impl GTermSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(GTERM_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{:e},{:e},{:e}\n", r.length / 1e3, r.g, r.second_term, r.sigma));
        }
        out
    }
}

/// Evaluates G and its δx = 3σ contribution over a set of fiber lengths.
pub fn g_term_analysis(params: &LinkParams, lengths: &[f64], delta_c: f64) -> Result<GTermSweep> {
    if lengths.is_empty() {
        return Err(invalid("lengths", "G-term sweep needs at least one length"));
    }
    require_non_negative("delta_c", delta_c)?;
    for &l in lengths {
        require_positive("length", l)?;
    }
    let rows: Vec<GTermAnalysis> = lengths
        .par_iter()
        .map(|&l| {
            let p = params.with_fiber_length(l);
            let g = g_factor(&p)?;
            let sigma = p.sigma_at(l);
            Ok(GTermAnalysis {
                length: l,
                g,
                second_term: (g * (3.0 * sigma - delta_c)).abs(),
                sigma,
            })
        })
        .collect::<Result<_>>()?;
    let argmax = |key: fn(&GTermAnalysis) -> f64| {
        rows.iter()
            .max_by(|a, b| key(a).total_cmp(&key(b)))
            .map(|r| r.length)
            .unwrap_or(0.0)
    };
    let dk = params.delta_k();
    Ok(GTermSweep {
        argmax_g: argmax(|r| r.g.abs()),
        argmax_second_term: argmax(|r| r.second_term),
        analytic_argmax: 1.0 / (4.0 * dk * dk * params.kappa()) - 2.0 * params.leg_length,
        rows,
    })
}

/// One cell of the truth table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub alice_basis: Basis,
    pub alice_bit: Bit,
    pub bob_basis: Basis,
    /// φ_d, φ_m, m.
    pub phi_d: f64,
    pub phi_m: f64,
    /// Δ_d, Δ_m, m.
    pub delta_d: f64,
    pub delta_m: f64,
    /// Middle-window probability mass per exit.
    pub mass_o: f64,
    pub mass_p: f64,
    /// Normalized shares, `share_o + share_p = 1`.
    pub share_o: f64,
    pub share_p: f64,
    /// The exit a matched basis sends the bit to.
    pub expected_exit: Option<Exit>,
}

impl DetectionRow {
    pub fn matched(&self) -> bool {
        self.alice_basis == self.bob_basis
    }

    /// Share at the expected exit, for matched bases.
    pub fn correct_share(&self) -> Option<f64> {
        self.expected_exit.map(|e| match e {
            Exit::O => self.share_o,
            Exit::P => self.share_p,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "message")]
pub enum TableStatus {
    Ok,
    /// The baseline separates the pulses but is below the ρ = 3 bound.
    Warning(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionTable {
    pub params: LinkParams,
    /// Δ̃, m.
    pub baseline: f64,
    /// Half-width of the integration window, m.
    pub window_half_width: f64,
    pub status: TableStatus,
    pub rows: Vec<DetectionRow>,
}

pub const TABLE_CSV_HEADER: &str =
    "alice_basis,alice_bit,bob_basis,phi_d_m,phi_m_m,delta_d_m,delta_m_m,mass_o,mass_p,share_o,share_p";

impl DetectionTable {
    pub fn row(&self, alice: Basis, bit: Bit, bob: Basis) -> &DetectionRow {
        self.rows
            .iter()
            .find(|r| r.alice_basis == alice && r.alice_bit == bit && r.bob_basis == bob)
            .expect("table holds all eight combinations")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TABLE_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                r.alice_basis,
                r.alice_bit.value(),
                r.bob_basis,
                r.phi_d,
                r.phi_m,
                r.delta_d,
                r.delta_m,
                r.mass_o,
                r.mass_p,
                r.share_o,
                r.share_p
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableOptions {
    /// Integration half-width in σ.
    pub window_sigmas: f64,
    pub grid: GridSpec,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            window_sigmas: 3.0,
            grid: GridSpec::default(),
        }
    }
}

/// Default baseline: half the ρ = 3 shifter bound, rounded up to the next
/// centimeter.
pub fn default_baseline(params: &LinkParams) -> Result<f64> {
    let sum = min_phase_sum(params, 3.0, DetectorTiming::IDEAL, 1.0)?;
    Ok((sum / 2.0 * 100.0).ceil() / 100.0)
}

/// The shifter settings used for one cell.
pub fn cell_config(params: &LinkParams, baseline: f64, alice: PhaseChoice, bob: PhaseChoice) -> MzConfig {
    MzConfig {
        delta_d: alice.shifter(baseline, params.lambda0),
        delta_m: bob.shifter(baseline, params.lambda0),
        delta_c: 0.0,
        ..MzConfig::default()
    }
}

/// Runs all eight (Alice basis, bit, Bob basis) combinations.
pub fn detection_table(params: &LinkParams, baseline: f64, options: &TableOptions) -> Result<DetectionTable> {
    require_positive("baseline", baseline)?;
    require_positive("window_sigmas", options.window_sigmas)?;
    let derived = derive(params, &MzConfig::default())?;
    let x1 = x_rho(&derived, 1.0)?;
    let x3 = x_rho(&derived, 3.0)?;
    let sum = 2.0 * baseline;
    if sum < 4.0 * x1 {
        return Err(Error::Infeasible(format!(
            "baseline sum {sum:.6} m is below 4·X₁ = {:.6} m; the pulses overlap",
            4.0 * x1
        )));
    }
    let status = if sum < 4.0 * x3 {
        TableStatus::Warning(format!(
            "baseline sum {sum:.6} m is below 4·X₃ = {:.6} m; visibility is reduced",
            4.0 * x3
        ))
    } else {
        TableStatus::Ok
    };

    let mut cells = Vec::with_capacity(8);
    for alice_basis in [Basis::X, Basis::Z] {
        for bit in [Bit::Zero, Bit::One] {
            for bob_basis in [Basis::X, Basis::Z] {
                cells.push((alice_basis, bit, bob_basis));
            }
        }
    }
    let half_width = options.window_sigmas * derived.sigma;
    let rows = cells
        .par_iter()
        .map(|&(ab, bit, bb)| {
            let alice = phase_for(Role::Alice, ab, Some(bit))?;
            let bob = phase_for(Role::Bob, bb, None)?;
            let cfg = cell_config(params, baseline, alice, bob);
            let curve = eval_analytic(params, &cfg, &options.grid)?;
            let (mass_o, mass_p) = middle_window_masses_half_width(&curve, half_width)?;
            let total = mass_o + mass_p;
            let expected_exit = (ab == bb).then(|| {
                // Equal phases interfere constructively at o; a half-wave
                // offset moves the middle pulse to p.
                if (alice.quarter_waves + 4 - bob.quarter_waves) % 4 == 0 {
                    Exit::O
                } else {
                    Exit::P
                }
            });
            Ok(DetectionRow {
                alice_basis: ab,
                alice_bit: bit,
                bob_basis: bb,
                phi_d: alice.phase_offset(params.lambda0),
                phi_m: bob.phase_offset(params.lambda0),
                delta_d: cfg.delta_d,
                delta_m: cfg.delta_m,
                mass_o,
                mass_p,
                share_o: mass_o / total,
                share_p: mass_p / total,
                expected_exit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectionTable {
        params: *params,
        baseline,
        window_half_width: half_width,
        status,
        rows,
    })
}
