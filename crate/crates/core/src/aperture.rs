//! Aperture phase codings, far-field patterns and beam steering.
//!
//! Element `(p, q)` sits at `((p-1) dx, (q-1) dy)`; `p` runs along x over
//! `nx` elements and `q` along y over `ny` elements. Codings are stored
//! row-major with `p` as the slow index. The reflected field is
//!
//! ```text
//! f(theta, phi) = sum_pq E(theta) a_pq exp(j phi_pq) exp(j k [(p-1) dx u + (q-1) dy v])
//! ```
//!
//! with `u = sin(theta) cos(phi)`, `v = sin(theta) sin(phi)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::math::{wrap_phase, TWO_PI};
use crate::metaatom::{DiodeState, ResponseTable};
use crate::rng::{StreamKey, Stream};
use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureGeometry {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    /// Carrier frequency in Hz.
    pub fc: f64,
}

impl ApertureGeometry {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, fc: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config("aperture needs at least one element per axis".into()));
        }
        if !(dx > 0.0 && dy > 0.0 && fc > 0.0) {
            return Err(Error::Config(format!(
                "spacing and frequency must be positive (dx = {dx}, dy = {dy}, fc = {fc})"
            )));
        }
        Ok(Self { nx, ny, dx, dy, fc })
    }

    /// The 20 x 20, 2.8 mm, 28 GHz surface used throughout the examples.
    pub fn reference() -> Self {
        Self::new(20, 20, 2.8e-3, 2.8e-3, 28e9).unwrap()
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.fc
    }

    pub fn wavenumber(&self) -> f64 {
        TWO_PI / self.wavelength()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-element amplitude and phase of one aperture state.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCoding {
    pub nx: usize,
    pub ny: usize,
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
}

impl PhaseCoding {
    pub fn new(nx: usize, ny: usize, amplitude: Vec<f64>, phase: Vec<f64>) -> Result<Self> {
        if amplitude.len() != nx * ny || phase.len() != nx * ny {
            return Err(Error::Shape(format!(
                "coding of {nx}x{ny} needs {} entries, got {} amplitudes and {} phases",
                nx * ny,
                amplitude.len(),
                phase.len()
            )));
        }
        if let Some(a) = amplitude.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(Error::Config(format!("element amplitude {a} outside (0, 1]")));
        }
        Ok(Self { nx, ny, amplitude, phase })
    }

    pub fn uniform(geom: &ApertureGeometry, amplitude: f64, phase: f64) -> Result<Self> {
        Self::new(geom.nx, geom.ny, vec![amplitude; geom.len()], vec![phase; geom.len()])
    }

    pub fn from_phases(geom: &ApertureGeometry, phase: Vec<f64>) -> Result<Self> {
        Self::new(geom.nx, geom.ny, vec![1.0; geom.len()], phase)
    }

    pub fn at(&self, p: usize, q: usize) -> (f64, f64) {
        let i = p * self.ny + q;
        (self.amplitude[i], self.phase[i])
    }

    /// Complex reflection weights `a exp(j phi)`.
    pub fn weights(&self) -> Vec<Complex64> {
        self.amplitude
            .iter()
            .zip(&self.phase)
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect()
    }

    fn check(&self, geom: &ApertureGeometry) -> Result<()> {
        if self.nx != geom.nx || self.ny != geom.ny {
            return Err(Error::Shape(format!(
                "coding is {}x{} but the aperture is {}x{}",
                self.nx, self.ny, geom.nx, geom.ny
            )));
        }
        Ok(())
    }

    /// Replaces every amplitude by the meta-atom table amplitude of the state
    /// whose phase is closest to the element's phase (the `couple-atom-loss` switch).
    pub fn with_atom_loss(&self, table: &ResponseTable, freq_ghz: f64, resistance_ohm: f64) -> Result<Self> {
        let mut out = self.clone();
        for (a, &p) in out.amplitude.iter_mut().zip(&self.phase) {
            let c = table.capacitance_for_phase(freq_ghz, resistance_ohm, p)?;
            *a = table
                .lookup(freq_ghz, DiodeState { capacitance_pf: c, resistance_ohm })?
                .amplitude;
        }
        Ok(out)
    }

    /// Rounds every phase to the nearest of `2^bits` uniform levels.
    pub fn quantized(&self, bits: u32) -> Self {
        let mut out = self.clone();
        for p in &mut out.phase {
            *p = quantize_phase(*p, bits);
        }
        out
    }

    /// CSV matrix of phases in degrees, one line per `p`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in 0..self.nx {
            let row: Vec<String> = (0..self.ny)
                .map(|q| format!("{:.4}", wrap_phase(self.at(p, q).1).to_degrees()))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Nearest of `2^bits` uniform phase levels starting at 0, wrapped to `[-pi, pi)`.
pub fn quantize_phase(phase: f64, bits: u32) -> f64 {
    let levels = (1u64 << bits) as f64;
    let step = TWO_PI / levels;
    wrap_phase((phase / step).round() * step)
}

/// How the per-column steering phase is built from `(Q, delta_phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SteeringLaw {
    /// Progressive gradient `p * delta_phi / Q`, reduced modulo 2 pi.
    #[default]
    Gradient,
    /// Literal sawtooth `mod(p, Q) * delta_phi / Q`. Identical to `Gradient`
    /// when `delta_phi = 2 pi`; for smaller ranges the reset every `Q` cells
    /// adds a phase jump that moves the beam away from the scan angle.
    Sawtooth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringSpec {
    /// Supercell period `Q` in cells.
    pub period: usize,
    /// Phase accumulated over one period, radians.
    pub phase_range: f64,
    /// Cell spacing along the steering axis, metres.
    pub spacing: f64,
    pub law: SteeringLaw,
}

impl SteeringSpec {
    pub fn new(period: usize, phase_range: f64, spacing: f64) -> Result<Self> {
        if period == 0 {
            return Err(Error::Config("steering period Q must be at least 1".into()));
        }
        if !(0.0..=TWO_PI + 1e-12).contains(&phase_range) {
            return Err(Error::Config(format!(
                "phase range {phase_range} rad outside [0, 2 pi]"
            )));
        }
        if !(spacing > 0.0) {
            return Err(Error::Config(format!("cell spacing must be positive, got {spacing}")));
        }
        Ok(Self {
            period,
            phase_range,
            spacing,
            law: SteeringLaw::Gradient,
        })
    }

    /// Spec that steers to `theta` with the given period: `delta_phi = Q k d sin(theta)`.
    pub fn toward(theta: f64, period: usize, spacing: f64, wavelength: f64) -> Result<Self> {
        let per_cell = TWO_PI * spacing * theta.sin() / wavelength;
        Self::new(period, per_cell * period as f64, spacing)
    }

    pub fn with_law(mut self, law: SteeringLaw) -> Self {
        self.law = law;
        self
    }

    /// Phase step between neighbouring cells.
    pub fn gradient(&self) -> f64 {
        self.phase_range / self.period as f64
    }
}

/// Reflected beam angle `asin(lambda0 / (2 pi) * delta_phi / (Q d))` for normal incidence.
pub fn scan_angle(spec: &SteeringSpec, lambda0: f64) -> Result<f64> {
    let s = lambda0 / TWO_PI * spec.phase_range / (spec.period as f64 * spec.spacing);
    if s.abs() > 1.0 {
        return Err(Error::Unsteerable(s));
    }
    Ok(s.asin())
}

/// Steering phase of each column `p = 0..nx`, in `[0, 2 pi)`.
pub fn steering_phase(geom: &ApertureGeometry, spec: &SteeringSpec) -> Vec<f64> {
    let step = spec.gradient();
    (0..geom.nx)
        .map(|p| {
            let raw = match spec.law {
                SteeringLaw::Gradient => p as f64 * step,
                SteeringLaw::Sawtooth => (p % spec.period) as f64 * step,
            };
            raw.rem_euclid(TWO_PI)
        })
        .collect()
}

/// Far-field phase `k sin(theta) ((p-1) dx cos(phi) + (q-1) dy sin(phi))` of every element.
pub fn far_field_phase(geom: &ApertureGeometry, theta: f64, phi: f64) -> Vec<f64> {
    let k = geom.wavenumber();
    let (u, v) = (theta.sin() * phi.cos(), theta.sin() * phi.sin());
    let mut out = Vec::with_capacity(geom.len());
    for p in 0..geom.nx {
        for q in 0..geom.ny {
            out.push(k * (p as f64 * geom.dx * u + q as f64 * geom.dy * v));
        }
    }
    out
}

/// `phi_e = phi_mod + phi_steer(p) + phi_ff(p, q)`, wrapped; amplitudes come from `modulation`.
pub fn compose_phase(modulation: &PhaseCoding, steer: &[f64], far_field: &[f64]) -> Result<PhaseCoding> {
    let (nx, ny) = (modulation.nx, modulation.ny);
    if steer.len() != nx {
        return Err(Error::Shape(format!(
            "steering vector has {} columns, coding has {nx}",
            steer.len()
        )));
    }
    if far_field.len() != nx * ny {
        return Err(Error::Shape(format!(
            "far-field matrix has {} entries, coding has {}",
            far_field.len(),
            nx * ny
        )));
    }
    let phase = (0..nx * ny)
        .map(|i| wrap_phase(modulation.phase[i] + steer[i / ny] + far_field[i]))
        .collect();
    Ok(PhaseCoding {
        nx,
        ny,
        amplitude: modulation.amplitude.clone(),
        phase,
    })
}

/// Regular sampling of the upper hemisphere.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionGrid {
    /// `[0, pi/2]`, both ends included.
    pub theta: Vec<f64>,
    /// `[0, 2 pi)`, uniformly spaced.
    pub phi: Vec<f64>,
}

impl DirectionGrid {
    pub fn hemisphere(step_deg: f64) -> Result<Self> {
        let n_theta = (90.0 / step_deg).round() as usize;
        let n_phi = (360.0 / step_deg).round() as usize;
        if !(step_deg > 0.0) || n_theta == 0 || ((n_theta as f64) * step_deg - 90.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "grid step {step_deg} deg must divide 90 deg"
            )));
        }
        let theta = (0..=n_theta).map(|i| i as f64 * FRAC_PI_2 / n_theta as f64).collect();
        let phi = (0..n_phi).map(|i| i as f64 * TWO_PI / n_phi as f64).collect();
        Ok(Self { theta, phi })
    }

    /// Single azimuth cut `phi` over `[0, pi/2]`.
    pub fn elevation_cut(step_deg: f64, phi: f64) -> Self {
        let n = (90.0 / step_deg).round() as usize;
        Self {
            theta: (0..=n).map(|i| i as f64 * FRAC_PI_2 / n as f64).collect(),
            phi: vec![phi],
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len() * self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Complex far field sampled on a [`DirectionGrid`], theta-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldGrid {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl FarFieldGrid {
    pub fn value(&self, it: usize, ip: usize) -> Complex64 {
        self.values[it * self.phi.len() + ip]
    }

    /// `(theta, phi, |f|)` of the strongest sample; first index wins ties.
    pub fn peak(&self) -> (f64, f64, f64) {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, v) in self.values.iter().enumerate() {
            let m = v.norm();
            if m > best.1 {
                best = (i, m);
            }
        }
        let np = self.phi.len();
        (self.theta[best.0 / np], self.phi[best.0 % np], best.1)
    }

    /// Normalised inner product `|<f, g>| / (|f| |g|)` over all samples.
    pub fn correlation(&self, other: &FarFieldGrid) -> f64 {
        let dot: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        let na: f64 = self.values.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let nb: f64 = other.values.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        dot.norm() / (na * nb)
    }

    /// CSV `theta_deg,phi_deg,mag_db,phase_deg`, magnitude normalised to the peak.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let peak = self.peak().2.max(f64::MIN_POSITIVE);
        writeln!(w, "theta_deg,phi_deg,mag_db,phase_deg")?;
        for (it, th) in self.theta.iter().enumerate() {
            for (ip, ph) in self.phi.iter().enumerate() {
                let v = self.value(it, ip);
                writeln!(
                    w,
                    "{:.4},{:.4},{:.4},{:.4}",
                    th.to_degrees(),
                    ph.to_degrees(),
                    mag_db(v.norm(), peak),
                    v.arg().to_degrees()
                )?;
            }
        }
        Ok(())
    }
}

fn mag_db(mag: f64, peak: f64) -> f64 {
    (20.0 * (mag / peak).log10()).max(-200.0)
}

fn element_factor(theta: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else {
        theta.cos().max(0.0).powf(exponent)
    }
}

/// Array sum for arbitrary complex element weights (row-major, `p` slow).
pub fn pattern_from_weights(
    weights: &[Complex64],
    geom: &ApertureGeometry,
    grid: &DirectionGrid,
    element_exponent: f64,
) -> Result<FarFieldGrid> {
    if weights.len() != geom.len() {
        return Err(Error::Shape(format!(
            "{} weights for a {}-element aperture",
            weights.len(),
            geom.len()
        )));
    }
    let k = geom.wavenumber();
    let np = grid.phi.len();
    let values: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let theta = grid.theta[i / np];
            let phi = grid.phi[i % np];
            let (u, v) = (theta.sin() * phi.cos(), theta.sin() * phi.sin());
            let col: Vec<Complex64> = (0..geom.ny)
                .map(|q| Complex64::cis(k * q as f64 * geom.dy * v))
                .collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..geom.nx {
                let row = &weights[p * geom.ny..(p + 1) * geom.ny];
                let inner: Complex64 = row.iter().zip(&col).map(|(w, c)| w * c).sum();
                acc += inner * Complex64::cis(k * p as f64 * geom.dx * u);
            }
            acc * element_factor(theta, element_exponent)
        })
        .collect();
    Ok(FarFieldGrid {
        theta: grid.theta.clone(),
        phi: grid.phi.clone(),
        values,
    })
}

/// Reflected far field of a coding; `element_exponent` is `q` in `E = cos^q(theta)`.
pub fn radiation_pattern(
    coding: &PhaseCoding,
    geom: &ApertureGeometry,
    grid: &DirectionGrid,
    element_exponent: f64,
) -> Result<FarFieldGrid> {
    coding.check(geom)?;
    pattern_from_weights(&coding.weights(), geom, grid, element_exponent)
}

/// Pattern sampled on a `(u, v)` grid over the unit disk; rows are `(u, v, f)`.
pub fn radiation_pattern_uv(
    coding: &PhaseCoding,
    geom: &ApertureGeometry,
    samples: usize,
    element_exponent: f64,
) -> Result<Vec<(f64, f64, Complex64)>> {
    coding.check(geom)?;
    let weights = coding.weights();
    let mut out = Vec::new();
    for iu in 0..samples {
        for iv in 0..samples {
            let u = -1.0 + 2.0 * iu as f64 / (samples - 1).max(1) as f64;
            let v = -1.0 + 2.0 * iv as f64 / (samples - 1).max(1) as f64;
            let r = (u * u + v * v).sqrt();
            if r > 1.0 {
                continue;
            }
            let grid = DirectionGrid {
                theta: vec![r.asin()],
                phi: vec![v.atan2(u)],
            };
            let f = pattern_from_weights(&weights, geom, &grid, element_exponent)?;
            out.push((u, v, f.values[0]));
        }
    }
    Ok(out)
}

pub fn write_uv_csv<W: Write>(rows: &[(f64, f64, Complex64)], mut w: W) -> std::io::Result<()> {
    let peak = rows.iter().map(|r| r.2.norm()).fold(f64::MIN_POSITIVE, f64::max);
    writeln!(w, "u,v,mag_db")?;
    for (u, v, f) in rows {
        writeln!(w, "{u:.4},{v:.4},{:.4}", mag_db(f.norm(), peak))?;
    }
    Ok(())
}

/// Peak directivity of a hemisphere pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Directivity {
    pub linear: f64,
    pub dbi: f64,
    pub theta: f64,
    pub phi: f64,
}

fn trapezoid_weights(theta: &[f64]) -> Vec<f64> {
    let n = theta.len();
    let h = theta[1] - theta[0];
    (0..n)
        .map(|i| if i == 0 || i == n - 1 { h / 2.0 } else { h })
        .collect()
}

fn check_hemisphere(grid: &FarFieldGrid) -> Result<()> {
    let t = &grid.theta;
    let p = &grid.phi;
    let ok_theta = t.len() >= 3
        && t[0].abs() < 1e-12
        && (t[t.len() - 1] - FRAC_PI_2).abs() < 1e-9
        && t.windows(2).all(|w| ((w[1] - w[0]) - (t[1] - t[0])).abs() < 1e-9);
    let dphi = TWO_PI / p.len().max(1) as f64;
    let ok_phi = p.len() >= 4
        && p[0].abs() < 1e-12
        && p.iter().enumerate().all(|(i, v)| (v - i as f64 * dphi).abs() < 1e-9);
    if !(ok_theta && ok_phi) {
        return Err(Error::Config(
            "directivity needs a regular grid covering theta in [0, pi/2] and phi in [0, 2 pi)".into(),
        ));
    }
    Ok(())
}

/// `int int |f|^2 sin(theta) dtheta dphi` over the hemisphere (trapezoid in theta,
/// periodic rectangle rule in phi).
pub fn radiated_power(grid: &FarFieldGrid) -> Result<f64> {
    check_hemisphere(grid)?;
    let wt = trapezoid_weights(&grid.theta);
    let dphi = TWO_PI / grid.phi.len() as f64;
    let np = grid.phi.len();
    let mut total = 0.0;
    for (it, th) in grid.theta.iter().enumerate() {
        let ring: f64 = grid.values[it * np..(it + 1) * np].iter().map(|v| v.norm_sqr()).sum();
        total += ring * th.sin() * wt[it] * dphi;
    }
    Ok(total)
}

/// Directivity `4 pi |f|^2 / P` at every grid sample.
pub fn directivity_map(grid: &FarFieldGrid) -> Result<Vec<f64>> {
    let power = radiated_power(grid)?;
    if power <= 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(grid.values.iter().map(|v| 4.0 * PI * v.norm_sqr() / power).collect())
}

pub fn directivity(grid: &FarFieldGrid) -> Result<Directivity> {
    let map = directivity_map(grid)?;
    let (i, &linear) = map
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    let np = grid.phi.len();
    Ok(Directivity {
        linear,
        dbi: 10.0 * linear.log10(),
        theta: grid.theta[i / np],
        phi: grid.phi[i % np],
    })
}

/// `int int Dir sin(theta) / (4 pi)` with the same quadrature; 1 for a consistent map.
pub fn directivity_normalization(grid: &FarFieldGrid) -> Result<f64> {
    let map = directivity_map(grid)?;
    let weighted = FarFieldGrid {
        theta: grid.theta.clone(),
        phi: grid.phi.clone(),
        values: map.iter().map(|d| Complex64::new(d.sqrt(), 0.0)).collect(),
    };
    Ok(radiated_power(&weighted)? / (4.0 * PI))
}

/// `n` reproducible codings with i.i.d. phases drawn from `2^phase_bits` levels.
pub fn pseudo_random_codings(n: usize, geom: &ApertureGeometry, seed: u64, phase_bits: u32) -> Result<Vec<PhaseCoding>> {
    if n == 0 {
        return Err(Error::Config("need at least one coding".into()));
    }
    if phase_bits == 0 || phase_bits > 8 {
        return Err(Error::Config(format!("phase_bits must be in 1..=8, got {phase_bits}")));
    }
    let levels = 1u32 << phase_bits;
    let key = StreamKey::new(seed, 0x5EED_C0DE);
    let mut out: Vec<PhaseCoding> = Vec::with_capacity(n);
    let mut attempt = 0u64;
    while out.len() < n {
        let mut rng = key.rng(out.len() as u64 + (attempt << 32), Stream::Aux);
        let phase: Vec<f64> = (0..geom.len())
            .map(|_| wrap_phase(TWO_PI * f64::from(rng.gen_range(0..levels)) / f64::from(levels)))
            .collect();
        let coding = PhaseCoding::from_phases(geom, phase)?;
        if out.iter().any(|c| c.phase == coding.phase) {
            attempt += 1;
            continue;
        }
        out.push(coding);
    }
    Ok(out)
}
