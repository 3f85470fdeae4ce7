use serde::{Deserialize, Serialize};

use super::{Coordinates, CurveMetadata, GridSpec, Normalization};
use crate::error::{Error, Result};

/// Header of the spectrum CSV format for probability densities.
pub const CSV_HEADER: &str = "x_m,intensity_o_per_m,intensity_p_per_m";
/// Header for peak-normalized curves.
pub const CSV_HEADER_RELATIVE: &str = "x_m,intensity_o_rel,intensity_p_rel";

/// Sampled intensities at both exits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCurve {
    /// Positions in the chosen coordinates, m; strictly increasing.
    pub x: Vec<f64>,
    pub intensity_o: Vec<f64>,
    pub intensity_p: Vec<f64>,
    pub coordinates: Coordinates,
    pub normalization: Normalization,
    /// Joint maximum the intensities were divided by (1 for absolute curves).
    pub scale: f64,
    /// Middle-pulse center in the curve's coordinates, m.
    pub window_center: f64,
    pub metadata: CurveMetadata,
}

impl SpectrumCurve {
    pub(crate) fn assemble(
        offsets: Vec<f64>,
        mut o: Vec<f64>,
        mut p: Vec<f64>,
        grid: &GridSpec,
        metadata: CurveMetadata,
    ) -> Result<Self> {
        if o.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spectrum intensities"));
        }
        let d = &metadata.derived;
        let shift = match grid.coordinates {
            Coordinates::Absolute => d.reference,
            Coordinates::Centered => -d.middle_offset(),
        };
        let x = offsets.iter().map(|u| u + shift).collect();
        let window_center = d.middle_offset() + shift;
        let scale = match grid.normalization {
            Normalization::Absolute => 1.0,
            Normalization::Peak => {
                let peak = o.iter().chain(&p).fold(0.0f64, |m, &v| m.max(v));
                if peak > 0.0 {
                    for v in o.iter_mut().chain(p.iter_mut()) {
                        *v /= peak;
                    }
                    peak
                } else {
                    1.0
                }
            }
        };
        Ok(Self {
            x,
            intensity_o: o,
            intensity_p: p,
            coordinates: grid.coordinates,
            normalization: grid.normalization,
            scale,
            window_center,
            metadata,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Trapezoid integral of each exit over the whole grid.
    pub fn total_masses(&self) -> (f64, f64) {
        (trapezoid(&self.x, &self.intensity_o), trapezoid(&self.x, &self.intensity_p))
    }

    /// Trapezoid integral of each exit over `[center − half, center + half]`,
    /// interpolating linearly at the window edges.
    pub fn masses_within(&self, center: f64, half_width: f64) -> Result<(f64, f64)> {
        let lo = center - half_width;
        let hi = center + half_width;
        let first = self.x[0];
        let last = self.x[self.x.len() - 1];
        if lo < first || hi > last || !(lo < hi) {
            return Err(Error::WindowOutsideGrid { lo, hi });
        }
        Ok((
            window_integral(&self.x, &self.intensity_o, lo, hi),
            window_integral(&self.x, &self.intensity_p, lo, hi),
        ))
    }

    pub fn samples(&self) -> CurveSamples {
        CurveSamples {
            x: self.x.clone(),
            intensity_o: self.intensity_o.clone(),
            intensity_p: self.intensity_p.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        let header = match self.normalization {
            Normalization::Absolute => CSV_HEADER,
            Normalization::Peak => CSV_HEADER_RELATIVE,
        };
        self.samples().write_csv(header)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve serializes")
    }
}

/// Bare curve samples, as stored in the CSV format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSamples {
    pub x: Vec<f64>,
    pub intensity_o: Vec<f64>,
    pub intensity_p: Vec<f64>,
}

impl CurveSamples {
    pub fn to_csv(&self) -> String {
        self.write_csv(CSV_HEADER)
    }

    fn write_csv(&self, header: &str) -> String {
        let mut out = String::with_capacity(self.x.len() * 64);
        out.push_str(header);
        out.push('\n');
        for ((x, o), p) in self.x.iter().zip(&self.intensity_o).zip(&self.intensity_p) {
            out.push_str(&format!("{x:e},{o:e},{p:e}\n"));
        }
        out
    }

    /// Parses the spectrum CSV format and checks the curve invariants:
    /// at least two rows, strictly increasing finite positions and finite
    /// non-negative intensities.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER || h.trim() == CSV_HEADER_RELATIVE => {}
            Some((_, h)) => return Err(Error::Parse(format!("expected header `{CSV_HEADER}`, got `{}`", h.trim()))),
            None => return Err(Error::Parse("empty spectrum file".into())),
        }
        let mut s = CurveSamples {
            x: Vec::new(),
            intensity_o: Vec::new(),
            intensity_p: Vec::new(),
        };
        for (n, line) in lines {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 columns, got {}", n + 1, cols.len())));
            }
            let mut vals = [0.0; 3];
            for (v, c) in vals.iter_mut().zip(&cols) {
                *v = c
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: `{c}`: {e}", n + 1)))?;
                if !v.is_finite() {
                    return Err(Error::Parse(format!("line {}: non-finite value `{c}`", n + 1)));
                }
            }
            if vals[1] < 0.0 || vals[2] < 0.0 {
                return Err(Error::Parse(format!("line {}: negative intensity", n + 1)));
            }
            if let Some(&prev) = s.x.last() {
                if vals[0] <= prev {
                    return Err(Error::Parse(format!("line {}: x not strictly increasing", n + 1)));
                }
            }
            s.x.push(vals[0]);
            s.intensity_o.push(vals[1]);
            s.intensity_p.push(vals[2]);
        }
        if s.x.len() < 2 {
            return Err(Error::Parse(format!("need at least 2 samples, got {}", s.x.len())));
        }
        Ok(s)
    }
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

fn window_integral(x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    let lerp = |i: usize, t: f64| {
        let f = (t - x[i]) / (x[i + 1] - x[i]);
        y[i] + f * (y[i + 1] - y[i])
    };
    let mut total = 0.0;
    for i in 0..x.len() - 1 {
        let (a, b) = (x[i], x[i + 1]);
        if b <= lo || a >= hi {
            continue;
        }
        let s = a.max(lo);
        let e = b.min(hi);
        total += 0.5 * (e - s) * (lerp(i, s) + lerp(i, e));
    }
    total
}
