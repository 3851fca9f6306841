//! Periodic time codings and their harmonic spectra.
//!
//! Step `n = 1..L` occupies `[(n-1) T0 / L, n T0 / L)`. Internally steps are
//! indexed from zero, so the closed-form coefficient reads
//!
//! ```text
//! a^m = sinc(pi m / L) exp(-j pi m / L) (1/L) sum_i Gamma_i exp(-j 2 pi m i / L)
//! ```
//!
//! A circular shift by `n` steps delays the waveform by `n T0 / L` and
//! multiplies `a^m` by `exp(-j 2 pi m n / L)`.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use crate::aperture::{pattern_from_weights, ApertureGeometry, DirectionGrid, FarFieldGrid};
use crate::math::{sinc, wrap_phase, TWO_PI};
use crate::rng::{seeded, Stream};
use crate::{Error, Result};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct CodingSequence {
    /// Modulation period in seconds.
    pub t0: f64,
    pub values: Vec<Complex64>,
}

impl CodingSequence {
    pub fn new(values: Vec<Complex64>, t0: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("a coding sequence needs at least one step".into()));
        }
        if !(t0 > 0.0) {
            return Err(Error::Config(format!("modulation period must be positive, got {t0}")));
        }
        if let Some(v) = values.iter().find(|v| v.norm() > 1.0 + 1e-12) {
            return Err(Error::Config(format!("reflection {v} has magnitude above one")));
        }
        Ok(Self { t0, values })
    }

    /// Unit-period sequence, the usual case when only spectra matter.
    pub fn unit(values: Vec<Complex64>) -> Result<Self> {
        Self::new(values, 1.0)
    }

    pub fn from_phases(phases: &[f64]) -> Result<Self> {
        Self::unit(phases.iter().map(|&p| Complex64::cis(p)).collect())
    }

    pub fn steps(&self) -> usize {
        self.values.len()
    }

    /// Harmonic spacing `f0 = 1 / T0`.
    pub fn f0(&self) -> f64 {
        1.0 / self.t0
    }

    /// Zero-order-hold value at time `t` (periodic).
    pub fn at_time(&self, t: f64) -> Complex64 {
        let l = self.steps();
        let frac = (t / self.t0).rem_euclid(1.0);
        self.values[((frac * l as f64) as usize).min(l - 1)]
    }

    /// CSV `step,phase_deg,mag` with steps numbered from 1.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,phase_deg,mag")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{:.4},{:.6}", i + 1, wrap_phase(v.arg()).to_degrees(), v.norm())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HarmonicSpectrum {
    pub coefficients: BTreeMap<i32, Complex64>,
}

impl HarmonicSpectrum {
    pub fn get(&self, m: i32) -> Complex64 {
        self.coefficients.get(&m).copied().unwrap_or_default()
    }

    /// Index of the largest coefficient; lower index wins ties.
    pub fn dominant(&self) -> i32 {
        let mut best = (0, f64::NEG_INFINITY);
        for (&m, a) in &self.coefficients {
            if a.norm() > best.1 + 1e-12 {
                best = (m, a.norm());
            }
        }
        best.0
    }

    pub fn power(&self) -> f64 {
        self.coefficients.values().map(|a| a.norm_sqr()).sum()
    }

    /// CSV `m,mag_db,phase_deg`; magnitudes are absolute (`20 log10 |a^m|`).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "m,mag_db,phase_deg")?;
        for (m, a) in &self.coefficients {
            let db = (20.0 * a.norm().log10()).max(-300.0);
            writeln!(w, "{m},{db:.4},{:.4}", a.arg().to_degrees())?;
        }
        Ok(())
    }
}

/// Single coefficient `a^m` of a sequence.
pub fn harmonic_coefficient(values: &[Complex64], m: i32) -> Complex64 {
    let l = values.len() as f64;
    let mf = f64::from(m);
    let sum: Complex64 = values
        .iter()
        .enumerate()
        .map(|(i, g)| g * Complex64::cis(-PI * mf * (2.0 * i as f64 + 1.0) / l))
        .sum();
    sum * (sinc(PI * mf / l) / l)
}

pub fn harmonic_coefficients(seq: &CodingSequence, m_range: impl IntoIterator<Item = i32>) -> HarmonicSpectrum {
    HarmonicSpectrum {
        coefficients: m_range
            .into_iter()
            .map(|m| (m, harmonic_coefficient(&seq.values, m)))
            .collect(),
    }
}

/// Default reporting window `|m| <= L`.
pub fn default_range(steps: usize) -> std::ops::RangeInclusive<i32> {
    let l = steps as i32;
    -l..=l
}

fn check_nyquist(m: i32, steps: usize) -> Result<()> {
    if 2 * m.unsigned_abs() as usize >= steps {
        return Err(Error::Aliasing { m, steps });
    }
    Ok(())
}

/// Linear phase ramp `Gamma^n = exp(j 2 pi m n / L)`, `n = 1..L`.
pub fn synthesize_single_harmonic(m: i32, steps: usize) -> Result<CodingSequence> {
    if steps == 0 {
        return Err(Error::Config("L must be at least 1".into()));
    }
    check_nyquist(m, steps)?;
    let l = steps as f64;
    CodingSequence::unit(
        (1..=steps)
            .map(|n| Complex64::cis(TWO_PI * f64::from(m) * n as f64 / l))
            .collect(),
    )
}

/// Rotates the step order so that step `i` of the result holds step `i - n_shift`
/// of the input. Shifts are taken modulo `L`.
pub fn phase_shift_harmonic(seq: &CodingSequence, n_shift: usize) -> CodingSequence {
    let mut values = seq.values.clone();
    let l = values.len();
    values.rotate_right(n_shift % l);
    CodingSequence { t0: seq.t0, values }
}

/// Circular shift of `|phi| L / 360` steps, taken in the direction that turns
/// harmonic +1 by `+phi` (harmonic `m` turns by `m phi`).
pub fn shift_for_phase(phase_deg: f64, steps: usize) -> Result<usize> {
    let n = phase_deg * steps as f64 / 360.0;
    if (n - n.round()).abs() > 1e-9 {
        return Err(Error::FractionalShift(n));
    }
    Ok((-(n.round() as i64)).rem_euclid(steps as i64) as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiHarmonic {
    pub sequence: CodingSequence,
    /// `sqrt(sum |a^m - w_m|^2)` over the targets.
    pub residual: f64,
    pub iterations: usize,
}

pub const MULTI_HARMONIC_ITERATIONS: usize = 200;
pub const MULTI_HARMONIC_TOLERANCE: f64 = 1e-3;

/// Phase-only sequence whose harmonics approximate `targets` (alternating projection
/// between the sequences carrying exactly the target harmonics and the unit-modulus set).
/// A sample that lands on zero keeps its previous value, seeded from random phases.
pub fn synthesize_multi_harmonic(targets: &[(i32, Complex64)], steps: usize, seed: u64) -> Result<MultiHarmonic> {
    if steps == 0 {
        return Err(Error::Config("L must be at least 1".into()));
    }
    for (i, &(m, _)) in targets.iter().enumerate() {
        check_nyquist(m, steps)?;
        if targets[..i].iter().any(|t| t.0 == m) {
            return Err(Error::Config(format!("harmonic {m} is listed twice")));
        }
    }
    let budget: f64 = targets.iter().map(|t| t.1.norm_sqr()).sum();
    if budget > 1.0 + 1e-12 {
        return Err(Error::Infeasible(format!(
            "target power {budget:.4} exceeds the unit-modulus budget of 1"
        )));
    }
    if targets.is_empty() {
        return Ok(MultiHarmonic {
            sequence: CodingSequence::unit(vec![Complex64::new(1.0, 0.0); steps])?,
            residual: 0.0,
            iterations: 0,
        });
    }

    let l = steps as f64;
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(steps);
    // DFT-bin values that realise each target coefficient.
    let bins: Vec<(usize, Complex64)> = targets
        .iter()
        .map(|&(m, w)| {
            let mf = f64::from(m);
            let c = w * Complex64::cis(PI * mf / l) / sinc(PI * mf / l);
            ((m.rem_euclid(steps as i32)) as usize, c)
        })
        .collect();

    let mut rng = seeded(seed, Stream::Aux);
    let mut current: Vec<Complex64> = (0..steps).map(|_| Complex64::cis(rng.gen_range(0.0..TWO_PI))).collect();
    let residual_of = |values: &[Complex64]| -> f64 {
        targets
            .iter()
            .map(|&(m, w)| (harmonic_coefficient(values, m) - w).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };

    let mut residual = residual_of(&current);
    let mut iterations = 0;
    let mut buf = vec![Complex64::default(); steps];
    while iterations < MULTI_HARMONIC_ITERATIONS && residual >= MULTI_HARMONIC_TOLERANCE {
        // Project onto sequences whose spectrum is exactly the target set.
        for b in buf.iter_mut() {
            *b = Complex64::default();
        }
        for &(k, c) in &bins {
            buf[k] = c;
        }
        ifft.process(&mut buf);
        for (cur, v) in current.iter_mut().zip(&buf) {
            if v.norm() > 1e-12 {
                *cur = v / v.norm();
            }
        }
        residual = residual_of(&current);
        iterations += 1;
    }
    Ok(MultiHarmonic {
        sequence: CodingSequence::unit(current)?,
        residual,
        iterations,
    })
}

/// Far field at harmonic `m`: the aperture sum with `a^m` in place of `Gamma`.
/// `sequences` is row-major with `p` as the slow index.
pub fn harmonic_pattern(
    sequences: &[CodingSequence],
    m: i32,
    geom: &ApertureGeometry,
    grid: &DirectionGrid,
    element_exponent: f64,
) -> Result<FarFieldGrid> {
    let first = sequences
        .first()
        .ok_or_else(|| Error::Shape("no element sequences".into()))?;
    if let Some(s) = sequences
        .iter()
        .find(|s| s.steps() != first.steps() || (s.t0 - first.t0).abs() > 1e-12 * first.t0)
    {
        return Err(Error::Shape(format!(
            "element sequences disagree: L = {} / T0 = {} versus L = {} / T0 = {}",
            s.steps(),
            s.t0,
            first.steps(),
            first.t0
        )));
    }
    let weights: Vec<Complex64> = sequences
        .iter()
        .map(|s| harmonic_coefficient(&s.values, m))
        .collect();
    pattern_from_weights(&weights, geom, grid, element_exponent)
}
