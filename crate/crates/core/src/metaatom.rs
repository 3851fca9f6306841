//! Meta-atom reflection models.
//!
//! A meta-atom is described either by its equivalent surface admittance
//! (`Gamma = (Y0 - Ys) / (Y0 + Ys)`) or by a [`ResponseTable`] of tabulated
//! full-wave results indexed by frequency and the varactor's series `C`/`R`.
//!
//! Angles in the API are radians; angles in table files are degrees.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::math::{angular_distance, exact_log2, wrap_phase, TWO_PI};
use crate::{Error, Result};

/// Free-space admittance `Y0 = 1 / (120 pi)` in siemens.
pub const FREE_SPACE_ADMITTANCE: f64 = 1.0 / (120.0 * PI);

/// Default table shipped with the crate (synthetic, see `examples/gen_response_table.rs`).
pub const DEFAULT_TABLE_CSV: &str = include_str!("../data/meta_atom_response.csv");

/// Surface admittance of a passive sheet.
///
/// `PecLimit` stands in for `|Ys| -> inf` so downstream arithmetic stays finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceAdmittance {
    Finite(Complex64),
    PecLimit,
}

impl SurfaceAdmittance {
    pub fn new(value: Complex64) -> Result<Self> {
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::Config(format!(
                "surface admittance {value} is not finite; use the PEC limit instead"
            )));
        }
        if value.re < 0.0 {
            return Err(Error::Config(format!(
                "surface admittance {value} is active (negative conductance)"
            )));
        }
        Ok(Self::Finite(value))
    }
}

/// Complex reflection coefficient in polar form, phase on `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionState {
    pub amplitude: f64,
    pub phase: f64,
}

impl ReflectionState {
    pub fn new(amplitude: f64, phase: f64) -> Self {
        Self {
            amplitude,
            phase: wrap_phase(phase),
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        let amplitude = z.norm();
        let phase = if amplitude == 0.0 { 0.0 } else { z.arg() };
        Self::new(amplitude, phase)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    /// Reflection loss in dB (positive number).
    pub fn loss_db(self) -> f64 {
        -20.0 * self.amplitude.log10()
    }
}

/// `Gamma = (Y0 - Ys) / (Y0 + Ys)`.
pub fn reflection_from_admittance(ys: SurfaceAdmittance) -> ReflectionState {
    match ys {
        SurfaceAdmittance::PecLimit => ReflectionState::new(1.0, PI),
        SurfaceAdmittance::Finite(y) => {
            let y0 = Complex64::new(FREE_SPACE_ADMITTANCE, 0.0);
            ReflectionState::from_complex((y0 - y) / (y0 + y))
        }
    }
}

/// Time-varying admittance `Ys(t) = -j Y0 tan(omega_m t / 2)` that yields the
/// serrodyne reflection `Gamma(t) = exp(j omega_m t)`.
pub fn serrodyne_admittance(t: f64, omega_m: f64) -> Result<SurfaceAdmittance> {
    if !(omega_m > 0.0) || !omega_m.is_finite() {
        return Err(Error::Config(format!(
            "modulation frequency must be positive, got {omega_m}"
        )));
    }
    let theta = wrap_phase(omega_m * t);
    if PI - theta.abs() < 1e-9 {
        return Ok(SurfaceAdmittance::PecLimit);
    }
    let b = -FREE_SPACE_ADMITTANCE * (theta / 2.0).tan();
    Ok(SurfaceAdmittance::Finite(Complex64::new(0.0, b)))
}

/// Varactor operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiodeState {
    pub capacitance_pf: f64,
    pub resistance_ohm: f64,
}

impl DiodeState {
    pub const CAPACITANCE_RANGE_PF: (f64, f64) = (0.01, 1.50);
    pub const RESISTANCE_RANGE_OHM: (f64, f64) = (0.1, 4.0);

    pub fn new(capacitance_pf: f64, resistance_ohm: f64) -> Result<Self> {
        let (cl, ch) = Self::CAPACITANCE_RANGE_PF;
        let (rl, rh) = Self::RESISTANCE_RANGE_OHM;
        if !(cl..=ch).contains(&capacitance_pf) {
            return Err(Error::OutOfRange {
                axis: "capacitance_pf",
                value: capacitance_pf,
                min: cl,
                max: ch,
            });
        }
        if !(rl..=rh).contains(&resistance_ohm) {
            return Err(Error::OutOfRange {
                axis: "resistance_ohm",
                value: resistance_ohm,
                min: rl,
                max: rh,
            });
        }
        Ok(Self {
            capacitance_pf,
            resistance_ohm,
        })
    }
}

#[derive(Debug, Deserialize)]
struct TableRow {
    freq_ghz: f64,
    c_pf: f64,
    r_ohm: f64,
    mag_linear: f64,
    phase_deg: f64,
}

/// Tabulated reflection response on a regular `(f, C, R)` grid.
///
/// Interpolation is polar: magnitude is interpolated linearly and phase is
/// interpolated along the shortest arc around the dominant corner. Both are
/// exact at grid nodes and the magnitude never leaves the range spanned by the
/// bracketing nodes.
#[derive(Debug, Clone)]
pub struct ResponseTable {
    freq_ghz: Vec<f64>,
    c_pf: Vec<f64>,
    r_ohm: Vec<f64>,
    // indexed [f][c][r], flattened
    values: Vec<ReflectionState>,
}

impl ResponseTable {
    /// Loads the CSV with header `freq_ghz,c_pf,r_ohm,mag_linear,phase_deg`.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let expected = ["freq_ghz", "c_pf", "r_ohm", "mag_linear", "phase_deg"];
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Table(format!(
                "expected header {:?}, found {:?}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for (i, row) in rdr.deserialize::<TableRow>().enumerate() {
            let row = row?;
            let line = i + 2;
            for (name, v) in [
                ("freq_ghz", row.freq_ghz),
                ("c_pf", row.c_pf),
                ("r_ohm", row.r_ohm),
                ("mag_linear", row.mag_linear),
                ("phase_deg", row.phase_deg),
            ] {
                if !v.is_finite() {
                    return Err(Error::Table(format!("line {line}: {name} is not finite")));
                }
            }
            if row.mag_linear > 1.0 {
                return Err(Error::Table(format!(
                    "line {line}: |Gamma| = {} exceeds 1 (passive surface)",
                    row.mag_linear
                )));
            }
            if row.mag_linear < 0.0 {
                return Err(Error::Table(format!("line {line}: negative magnitude")));
            }
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    /// The synthetic dataset shipped with the crate.
    pub fn shipped() -> Self {
        Self::from_reader(DEFAULT_TABLE_CSV.as_bytes()).expect("shipped table is valid")
    }

    fn from_rows(rows: Vec<TableRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Table("no data rows".into()));
        }
        let axis = |get: fn(&TableRow) -> f64| {
            let mut v: Vec<f64> = rows.iter().map(get).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let freq_ghz = axis(|r| r.freq_ghz);
        let c_pf = axis(|r| r.c_pf);
        let r_ohm = axis(|r| r.r_ohm);
        let n = freq_ghz.len() * c_pf.len() * r_ohm.len();
        if rows.len() != n {
            return Err(Error::Table(format!(
                "{} rows do not fill a {}x{}x{} grid",
                rows.len(),
                freq_ghz.len(),
                c_pf.len(),
                r_ohm.len()
            )));
        }
        let mut values = vec![None; n];
        let pos = |g: &[f64], x: f64| g.binary_search_by(|v| v.total_cmp(&x)).unwrap();
        for row in &rows {
            let fi = pos(&freq_ghz, row.freq_ghz);
            let ci = pos(&c_pf, row.c_pf);
            let ri = pos(&r_ohm, row.r_ohm);
            let idx = (fi * c_pf.len() + ci) * r_ohm.len() + ri;
            if values[idx].is_some() {
                return Err(Error::Table(format!(
                    "duplicate node f = {}, C = {}, R = {}",
                    row.freq_ghz, row.c_pf, row.r_ohm
                )));
            }
            values[idx] = Some(ReflectionState::new(
                row.mag_linear,
                row.phase_deg.to_radians(),
            ));
        }
        Ok(Self {
            freq_ghz,
            c_pf,
            r_ohm,
            values: values.into_iter().map(Option::unwrap).collect(),
        })
    }

    pub fn frequencies_ghz(&self) -> &[f64] {
        &self.freq_ghz
    }

    pub fn capacitances_pf(&self) -> &[f64] {
        &self.c_pf
    }

    pub fn resistances_ohm(&self) -> &[f64] {
        &self.r_ohm
    }

    fn node(&self, fi: usize, ci: usize, ri: usize) -> ReflectionState {
        self.values[(fi * self.c_pf.len() + ci) * self.r_ohm.len() + ri]
    }

    /// Interpolated reflection at `(f, C, R)`.
    pub fn lookup(&self, freq_ghz: f64, diode: DiodeState) -> Result<ReflectionState> {
        let (f0, wf) = bracket(&self.freq_ghz, freq_ghz, "freq_ghz")?;
        let (c0, wc) = bracket(&self.c_pf, diode.capacitance_pf, "capacitance_pf")?;
        let (r0, wr) = bracket(&self.r_ohm, diode.resistance_ohm, "resistance_ohm")?;

        let mut corners = [(0.0, ReflectionState::new(0.0, 0.0)); 8];
        let mut n = 0;
        for (df, w_f) in [(0, 1.0 - wf), (1, wf)] {
            for (dc, w_c) in [(0, 1.0 - wc), (1, wc)] {
                for (dr, w_r) in [(0, 1.0 - wr), (1, wr)] {
                    let w = w_f * w_c * w_r;
                    if w == 0.0 {
                        continue;
                    }
                    corners[n] = (w, self.node(f0 + df, c0 + dc, r0 + dr));
                    n += 1;
                }
            }
        }
        let corners = &corners[..n];
        let reference = corners
            .iter()
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .expect("at least one corner has positive weight")
            .1
            .phase;
        let amplitude = corners.iter().map(|(w, s)| w * s.amplitude).sum();
        let phase = reference
            + corners
                .iter()
                .map(|(w, s)| w * wrap_phase(s.phase - reference))
                .sum::<f64>();
        Ok(ReflectionState::new(amplitude, phase))
    }

    /// Unwrapped phase excursion (radians) over the capacitance axis at a table
    /// frequency and resistance.
    pub fn phase_span(&self, freq_ghz: f64, resistance_ohm: f64) -> Result<f64> {
        let mut prev: Option<f64> = None;
        let mut unwrapped = 0.0;
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for &c in &self.c_pf {
            let s = self.lookup(freq_ghz, DiodeState { capacitance_pf: c, resistance_ohm })?;
            if let Some(p) = prev {
                unwrapped += wrap_phase(s.phase - p);
                lo = lo.min(unwrapped);
                hi = hi.max(unwrapped);
            }
            prev = Some(s.phase);
        }
        Ok(hi - lo)
    }

    /// Largest reflection loss (dB) over the capacitance axis.
    pub fn max_loss_db(&self, freq_ghz: f64, resistance_ohm: f64) -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for &c in &self.c_pf {
            let s = self.lookup(freq_ghz, DiodeState { capacitance_pf: c, resistance_ohm })?;
            worst = worst.max(s.loss_db());
        }
        Ok(worst)
    }

    /// Capacitance whose reflection phase is closest to `phase` (wrapped distance).
    pub fn capacitance_for_phase(&self, freq_ghz: f64, resistance_ohm: f64, phase: f64) -> Result<f64> {
        let mut best = (f64::INFINITY, self.c_pf[0]);
        for &c in &self.c_pf {
            let s = self.lookup(freq_ghz, DiodeState { capacitance_pf: c, resistance_ohm })?;
            let d = angular_distance(s.phase, phase);
            if d < best.0 {
                best = (d, c);
            }
        }
        Ok(best.1)
    }
}

/// Lower node index and fractional weight of `x` on grid `g`.
fn bracket(g: &[f64], x: f64, axis: &'static str) -> Result<(usize, f64)> {
    let (min, max) = (g[0], g[g.len() - 1]);
    if !(x >= min && x <= max) {
        return Err(Error::OutOfRange {
            axis,
            value: x,
            min,
            max,
        });
    }
    if g.len() == 1 {
        return Ok((0, 0.0));
    }
    let i = g.partition_point(|&v| v <= x).saturating_sub(1).min(g.len() - 2);
    let w = (x - g[i]) / (g[i + 1] - g[i]);
    Ok((i, w))
}

/// `M`-ary PSK reflection states `A exp(j 2 pi m / M)`, `m = 0..M-1`.
pub fn psk_constellation(order: usize, amplitude: f64) -> Result<Vec<ReflectionState>> {
    if order < 2 || exact_log2(order).is_none() {
        return Err(Error::Config(format!(
            "PSK order must be a power of two >= 2, got {order}"
        )));
    }
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return Err(Error::Config(format!(
            "PSK amplitude must lie in (0, 1], got {amplitude}"
        )));
    }
    Ok((0..order)
        .map(|m| ReflectionState::new(amplitude, TWO_PI * m as f64 / order as f64))
        .collect())
}
