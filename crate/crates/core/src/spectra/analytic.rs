//! Closed-form position spectra at the two outputs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::physics::{DerivedQuantities, MzConfig, Pair, PairValues};

/// Which sign pattern of the interference sum is used. `Upper` gives exit
/// `o`, `Lower` gives exit `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignSet {
    Upper,
    Lower,
}

impl SignSet {
    fn sign(self) -> f64 {
        match self {
            SignSet::Upper => 1.0,
            SignSet::Lower => -1.0,
        }
    }
}

/// The six cross pairs of the interference sum, with the sign each carries
/// for `SignSet::Upper` and whether that sign flips for `SignSet::Lower`.
const CROSS_PAIRS: [(Pair, Pair, f64, bool); 6] = [
    (Pair::Dm, Pair::Cm, -1.0, false),
    (Pair::Dm, Pair::Dc, -1.0, true),
    (Pair::Cm, Pair::Dc, 1.0, true),
    (Pair::Dm, Pair::Cc, 1.0, true),
    (Pair::Cm, Pair::Cc, -1.0, true),
    (Pair::Dc, Pair::Cc, -1.0, false),
];

/// Per-path quantities at one position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentTerms {
    /// |J_ij|².
    pub j_sq: PairValues<f64>,
    /// c′_ij.
    pub amplitude: PairValues<f64>,
    /// z_ij, rad.
    pub phase: PairValues<f64>,
    /// Re[J_ij·J*_kl] for the six cross pairs, in the order of the
    /// interference sum.
    pub cross: [(Pair, Pair, f64); 6],
}

/// The parts of a link the analytic spectrum needs beyond the derived chain.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AnalyticLink<'a> {
    pub derived: &'a DerivedQuantities,
    pub config: &'a MzConfig,
    /// Effective link-fiber transmission (T_g, times any lumped stage).
    pub fiber_transmission: f64,
    /// Leg transmission T.
    pub leg_transmission: f64,
}

impl AnalyticLink<'_> {
    pub fn prefactor(&self) -> f64 {
        self.fiber_transmission / (32.0 * PI * (2.0 * PI).sqrt() * self.derived.delta_k)
    }

    /// `z_ij − z_kl` at a position relative to the reference, computed from
    /// the difference of the two phase expressions so that the large common
    /// parts cancel exactly.
    pub fn phase_difference(&self, a: Pair, b: Pair, offset: f64) -> f64 {
        let d = self.derived;
        let xa = d.x_prime(self.config, a, offset);
        let xb = d.x_prime(self.config, b, offset);
        let diff = self.config.pair_shift(a) - self.config.pair_shift(b);
        let dk2 = d.delta_k * d.delta_k;
        (d.k0 * diff + 4.0 * dk2 * dk2 * d.delta1 * diff * (xb + xa)) / d.gamma
    }

    pub fn terms(&self, offset: f64) -> ComponentTerms {
        let d = self.derived;
        let dk2 = d.delta_k * d.delta_k;
        let t2 = self.leg_transmission * self.leg_transmission;
        let shift = 2.0 * d.delta1 * d.k0;
        let arg = |p: Pair| {
            let r = d.x_prime(self.config, p, offset) - shift;
            dk2 * r * r / d.gamma
        };
        let j_sq = PairValues::from_fn(|p| 4.0 * PI * dk2 * t2 / d.gamma.sqrt() * (-2.0 * arg(p)).exp());
        let amplitude = PairValues::from_fn(|p| {
            2.0 * d.delta_k * PI.sqrt() * self.leg_transmission * d.gamma.powf(-0.25) * (-arg(p)).exp()
        });
        let chirp_phase = 0.5 * (4.0 * d.delta1 * dk2).atan();
        let phase = PairValues::from_fn(|p| {
            let x = d.x_prime(self.config, p, offset);
            chirp_phase
                + (d.k0 * d.k0 * d.delta1 - d.k0 * x - 4.0 * dk2 * dk2 * d.delta1 * x * x) / d.gamma
        });
        let cross = CROSS_PAIRS.map(|(a, b, _, _)| {
            let re = amplitude.get(a) * amplitude.get(b) * self.phase_difference(a, b, offset).cos();
            (a, b, re)
        });
        ComponentTerms {
            j_sq,
            amplitude,
            phase,
            cross,
        }
    }

    /// |ψ(x)|² at an offset position for the given sign set.
    #[cfg(test)]
    pub fn intensity(&self, offset: f64, signs: SignSet) -> f64 {
        let terms = self.terms(offset);
        self.prefactor() * (terms.direct_sum() + 2.0 * terms.interference(signs))
    }

    /// Both exits at once, sharing the term evaluation.
    pub fn intensities(&self, offset: f64) -> (f64, f64) {
        let terms = self.terms(offset);
        let pre = self.prefactor();
        let direct = terms.direct_sum();
        let o = pre * (direct + 2.0 * terms.interference(SignSet::Upper));
        let p = pre * (direct + 2.0 * terms.interference(SignSet::Lower));
        // Rounding can push a fully destructive point a few ulps below zero.
        (o.max(0.0), p.max(0.0))
    }
}

impl ComponentTerms {
    pub fn direct_sum(&self) -> f64 {
        self.j_sq.dm + self.j_sq.cm + self.j_sq.dc + self.j_sq.cc
    }

    /// II_{o,p}(x) for the chosen sign set.
    pub fn interference(&self, signs: SignSet) -> f64 {
        CROSS_PAIRS
            .iter()
            .zip(self.cross.iter())
            .map(|(&(_, _, sign, flips), &(_, _, re))| {
                let s = if flips { sign * signs.sign() } else { sign };
                s * re
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{derive, LinkParams};

    fn link_fixture(length: f64) -> (DerivedQuantities, MzConfig) {
        let cfg = MzConfig {
            delta_d: 0.25 + 1550e-9 / 4.0,
            delta_m: 0.25,
            delta_c: 0.0,
            ..MzConfig::default()
        };
        let params = LinkParams::default().with_fiber_length(length);
        (derive(&params, &cfg).unwrap(), cfg)
    }

    #[test]
    fn cosine_bound_and_direct_term_identity() {
        let (d, cfg) = link_fixture(30e3);
        let link = AnalyticLink {
            derived: &d,
            config: &cfg,
            fiber_transmission: 1.0,
            leg_transmission: 0.9,
        };
        let (lo, hi) = d.mu_offset_range();
        for i in 0..200 {
            let u = lo - 3.0 * d.sigma + (hi - lo + 6.0 * d.sigma) * i as f64 / 199.0;
            let t = link.terms(u);
            for p in Pair::ALL {
                let a = t.amplitude.get(p);
                assert!((t.j_sq.get(p) - a * a).abs() <= 1e-12 * t.j_sq.get(p).max(1e-300));
            }
            for (a, b, re) in t.cross {
                assert!(re.abs() <= t.amplitude.get(a) * t.amplitude.get(b) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn phase_difference_matches_direct_subtraction_at_short_range() {
        // With little dispersion the individual phases are small enough to
        // subtract directly without losing precision.
        let (d, cfg) = link_fixture(0.0);
        let link = AnalyticLink {
            derived: &d,
            config: &cfg,
            fiber_transmission: 1.0,
            leg_transmission: 1.0,
        };
        let u = d.middle_offset() + 0.3 * d.sigma;
        let t = link.terms(u);
        for (a, b) in [(Pair::Cm, Pair::Dc), (Pair::Dm, Pair::Cc), (Pair::Dm, Pair::Cm)] {
            let direct = t.phase.get(a) - t.phase.get(b);
            let stable = link.phase_difference(a, b, u);
            assert!((direct - stable).abs() < 1e-6 * stable.abs().max(1.0), "{a}{b}: {direct} vs {stable}");
        }
    }

    #[test]
    fn swapping_sign_sets_swaps_exits() {
        let (d, cfg) = link_fixture(5e3);
        let link = AnalyticLink {
            derived: &d,
            config: &cfg,
            fiber_transmission: 1.0,
            leg_transmission: 1.0,
        };
        for i in 0..50 {
            let u = d.mu_offset.cc + i as f64 * 0.01;
            let (o, p) = link.intensities(u);
            assert_eq!(o, link.intensity(u, SignSet::Upper).max(0.0));
            assert_eq!(p, link.intensity(u, SignSet::Lower).max(0.0));
        }
    }
}
