//! Numeric propagation through the wavenumber-domain transfer function.
//!
//! The input pulse `α_a(k) = [2π·δk²]^{-1/4}·exp{−(k−k₀)²/(4δk²)}` is
//! multiplied by the transfer function of the link fiber and the two
//! interferometers and brought back to position space with
//! `ψ(x) = (2π)^{-1/2} ∫ α(k)·e^{+ikx} dk`, evaluated by a direct trapezoid
//! sum on a uniform grid `k = k₀ + q`. This Fourier sign convention makes
//! `|ψ(x)|²` peak at `x = A + 2·δ₁·k₀`, matching the closed form; the phases
//! `z_ij` of the closed form are then the negated arguments of the path
//! amplitudes, which leaves every `cos(z_ij − z_kl)` unchanged.
//!
//! Terms that multiply every path by the same factor are dropped:
//! the common delay `N₀·(l_g + 2l)` (positions are offsets from it), the
//! carrier `e^{ik₀x}` of the inverse transform and the constant phase
//! `e^{−ik₀²·B}` of the link fiber and of any lumped stage.
//!
//! The `m − n` combination of the second interferometer yields exit `o`, the
//! `m + n` combination exit `p`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{effective_link, CurveMetadata, CurveSource, DispersionStage, GridSpec, Placement, SpectrumCurve};
use crate::error::{Error, Result};
use crate::physics::{LinkParams, MzConfig};

/// Minimum number of wavenumber samples.
pub const MIN_K_SAMPLES: usize = 1 << 14;
/// Tolerated deviation of the sampled input norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    /// Number of wavenumber samples; chosen automatically when `None`.
    pub k_samples: Option<usize>,
    /// Half-span of the wavenumber grid, in δk.
    pub k_half_span: f64,
    /// Optional lumped stage and its placement.
    pub stage: Option<(DispersionStage, Placement)>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            k_samples: None,
            k_half_span: 8.0,
            stage: None,
        }
    }
}

/// Oracle curve plus its norm bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    pub curve: SpectrumCurve,
    pub k_samples: usize,
    /// `∫|α_a|² dk` on the sampled grid; 1 up to truncation.
    pub input_norm: f64,
    /// `∫|α_o|² dk` and `∫|α_p|² dk`, the output norms by Parseval.
    pub norm_o: f64,
    pub norm_p: f64,
    /// Input norm scaled by all transmissions, minus both exits: the share
    /// that leaves through the unmodeled third port.
    pub exit_h_remainder: f64,
}

struct Grid {
    q0: f64,
    step: f64,
    n: usize,
}

impl Grid {
    fn q(&self, i: usize) -> f64 {
        self.q0 + self.step * i as f64
    }

    fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.step
        } else {
            self.step
        }
    }

    fn alias_period(&self) -> f64 {
        TAU / self.step
    }
}

/// `exp{−i·(k·a + k²·b)}` with `k = k₀ + q`, where `k₀·a` is reduced modulo
/// 2π through `a/λ₀` before it is formed.
fn propagator(lambda0: f64, k0: f64, q: f64, a: f64, b: f64) -> Complex64 {
    let carrier = TAU * (a / lambda0).fract();
    let k = k0 + q;
    Complex64::from_polar(1.0, -(carrier + q * a + k * k * b))
}

/// `exp{−i·(2k₀q + q²)·b}`: a chirp with its constant `k₀²·b` phase removed.
fn chirp(k0: f64, q: f64, b: f64) -> Complex64 {
    Complex64::from_polar(1.0, -(2.0 * k0 * q + q * q) * b)
}

/// Evaluates the spectra by numeric inverse transform of the output
/// wavenumber functions.
pub fn eval_oracle(
    params: &LinkParams,
    config: &MzConfig,
    grid: &GridSpec,
    options: &OracleOptions,
) -> Result<OracleOutput> {
    let stage = options.stage.map(|(s, _)| s);
    let (derived, _) = effective_link(params, config, stage.as_ref())?;
    let offsets = grid.offsets(&derived)?;

    let dk = derived.delta_k;
    let k0 = derived.k0;
    if !(options.k_half_span > 0.0 && options.k_half_span.is_finite()) {
        return Err(crate::error::invalid("k_half_span", "must be a positive finite multiple of δk"));
    }
    let half = options.k_half_span * dk;

    // Images of the output repeat every 2π/step in position; keep them well
    // clear of both the pulses and the evaluation grid.
    let (mu_lo, mu_hi) = derived.mu_offset_range();
    let support_lo = offsets[0].min(mu_lo - 16.0 * derived.sigma);
    let support_hi = offsets[offsets.len() - 1].max(mu_hi + 16.0 * derived.sigma);
    let needed_period = 2.0 * (support_hi - support_lo);
    let n = match options.k_samples {
        Some(n) => n,
        None => {
            let min_n = (2.0 * half * needed_period / TAU).ceil() as usize + 1;
            min_n.max(MIN_K_SAMPLES).next_power_of_two()
        }
    };
    if n < MIN_K_SAMPLES {
        return Err(Error::InsufficientResolution(format!(
            "{n} wavenumber samples requested, need at least {MIN_K_SAMPLES}"
        )));
    }
    let kgrid = Grid {
        q0: -half,
        step: 2.0 * half / (n - 1) as f64,
        n,
    };
    if kgrid.alias_period() < needed_period {
        return Err(Error::InsufficientResolution(format!(
            "alias period {:.4e} m is shorter than the required {:.4e} m; increase k_samples",
            kgrid.alias_period(),
            needed_period
        )));
    }

    let input_amp = (TAU * dk * dk).powf(-0.25);
    let alpha_in = |q: f64| input_amp * (-q * q / (4.0 * dk * dk)).exp();
    let input_norm: f64 = (0..n).map(|i| kgrid.weight(i) * alpha_in(kgrid.q(i)).powi(2)).sum();
    if (input_norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::InsufficientResolution(format!(
            "sampled input norm deviates from 1 by {:.3e}",
            input_norm - 1.0
        )));
    }

    let lambda0 = params.lambda0;
    let b_leg = params.chirp_per_meter(params.dispersion) * params.leg_length;
    let b_fiber = params.chirp_per_meter(params.dispersion) * params.fiber_length;
    let sqrt_t = params.leg_transmission.sqrt();
    let sqrt_tg = params.fiber_transmission.sqrt();

    let stage_factor = |q: f64, fraction: f64, s: &DispersionStage| {
        s.transmission.powf(0.5 * fraction) * chirp(k0, q, fraction * s.chirp)
    };

    // Output wavenumber functions, already weighted for the trapezoid sum.
    let (weights_o, weights_p): (Vec<Complex64>, Vec<Complex64>) = (0..n)
        .into_par_iter()
        .map(|i| {
            let q = kgrid.q(i);
            let mut input = Complex64::new(alpha_in(q), 0.0);
            let mut output = Complex64::new(1.0, 0.0);
            if let Some((s, placement)) = &options.stage {
                match placement {
                    Placement::Pre => input *= stage_factor(q, 1.0, s),
                    Placement::Post => output *= stage_factor(q, 1.0, s),
                    Placement::Symmetric => {
                        input *= stage_factor(q, 0.5, s);
                        output *= stage_factor(q, 0.5, s);
                    }
                }
            }
            let fiber = sqrt_tg * chirp(k0, q, b_fiber);
            let leg = |shift: f64| sqrt_t * propagator(lambda0, k0, q, shift, b_leg);
            let first = leg(config.delta_d) - leg(config.delta_c);
            let m = leg(config.delta_m);
            let n_leg = leg(config.delta_c);
            let common = 0.25 * fiber * first * input * output * (kgrid.weight(i) / TAU.sqrt());
            (common * (m - n_leg), common * (m + n_leg))
        })
        .unzip();

    let norm_of = |w: &[Complex64]| -> f64 {
        w.iter()
            .enumerate()
            .map(|(i, c)| {
                let wi = kgrid.weight(i);
                // Undo the weight and 1/√(2π) folded into w.
                let a = c * (TAU.sqrt() / wi);
                wi * a.norm_sqr()
            })
            .sum()
    };
    let norm_o = norm_of(&weights_o);
    let norm_p = norm_of(&weights_p);

    let psi_sq = |w: &[Complex64], u: f64| -> f64 {
        let rot = Complex64::from_polar(1.0, kgrid.step * u);
        let mut phase = Complex64::from_polar(1.0, kgrid.q0 * u);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in w.iter().enumerate() {
            if i % 1024 == 0 {
                phase = Complex64::from_polar(1.0, kgrid.q(i) * u);
            }
            acc += c * phase;
            phase *= rot;
        }
        acc.norm_sqr()
    };
    let values: Vec<(f64, f64)> = offsets
        .par_iter()
        .map(|&u| (psi_sq(&weights_o, u), psi_sq(&weights_p, u)))
        .collect();
    let (o, p): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();

    let stage_t = stage.map_or(1.0, |s| s.transmission);
    let transmitted = input_norm * params.fiber_transmission * stage_t * params.leg_transmission.powi(2);
    let meta = CurveMetadata {
        source: CurveSource::Oracle,
        params: *params,
        config: *config,
        derived,
        stage,
        placement: options.stage.map(|(_, p)| p),
    };
    let curve = SpectrumCurve::assemble(offsets, o, p, grid, meta)?;
    Ok(OracleOutput {
        curve,
        k_samples: n,
        input_norm,
        norm_o,
        norm_p,
        exit_h_remainder: transmitted - norm_o - norm_p,
    })
}
