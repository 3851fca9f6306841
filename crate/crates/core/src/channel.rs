//! Fading channels, noise and RIS link budgets.
//!
//! `N0` is the total variance of one complex noise sample; SNR is `Es / N0`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::math::TWO_PI;
use crate::{Error, Result};

/// Dense `nr x nt` complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub nr: usize,
    pub nt: usize,
    pub entries: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn zeros(nr: usize, nt: usize) -> Self {
        Self {
            nr,
            nt,
            entries: vec![Complex64::default(); nr * nt],
        }
    }

    pub fn from_fn(nr: usize, nt: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(nr * nt);
        for l in 0..nr {
            for i in 0..nt {
                entries.push(f(l, i));
            }
        }
        Self { nr, nt, entries }
    }

    #[inline]
    pub fn get(&self, l: usize, i: usize) -> Complex64 {
        self.entries[l * self.nt + i]
    }

    pub fn set(&mut self, l: usize, i: usize, v: Complex64) {
        self.entries[l * self.nt + i] = v;
    }

    pub fn column(&self, i: usize) -> Vec<Complex64> {
        (0..self.nr).map(|l| self.get(l, i)).collect()
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.entries.iter().map(|h| h.norm_sqr()).sum()
    }
}

/// Free-space direct path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LosLinkSpec {
    pub wavelength: f64,
    pub gain_tx: f64,
    pub gain_rx: f64,
    pub distance: f64,
}

/// `(lambda / 4 pi) sqrt(Gt Gr) exp(-j 2 pi d / lambda) / d`.
pub fn los_gain(spec: &LosLinkSpec) -> Result<Complex64> {
    if !(spec.distance > 0.0) {
        return Err(Error::Config(format!("LoS distance must be positive, got {}", spec.distance)));
    }
    if !(spec.wavelength > 0.0 && spec.gain_tx > 0.0 && spec.gain_rx > 0.0) {
        return Err(Error::Config("wavelength and antenna gains must be positive".into()));
    }
    let mag = spec.wavelength / (4.0 * std::f64::consts::PI) * (spec.gain_tx * spec.gain_rx).sqrt() / spec.distance;
    Ok(Complex64::from_polar(mag, -TWO_PI * spec.distance / spec.wavelength))
}

/// One `CN(0, variance)` sample.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn fill_complex_gaussian<R: Rng + ?Sized>(out: &mut [Complex64], variance: f64, rng: &mut R) {
    for v in out {
        *v = complex_gaussian(rng, variance);
    }
}

/// I.i.d. `CN(0, 1)` entries.
pub fn rayleigh<R: Rng + ?Sized>(nr: usize, nt: usize, rng: &mut R) -> ChannelMatrix {
    let mut h = ChannelMatrix::zeros(nr, nt);
    fill_complex_gaussian(&mut h.entries, 1.0, rng);
    h
}

/// `sqrt(K/(K+1)) H_los + sqrt(1/(K+1)) H_nlos`.
pub fn rician(k: f64, los: &ChannelMatrix, nlos: &ChannelMatrix) -> Result<ChannelMatrix> {
    check_k(k)?;
    if los.nr != nlos.nr || los.nt != nlos.nt {
        return Err(Error::Shape(format!(
            "LoS matrix is {}x{} but the scattered part is {}x{}",
            los.nr, los.nt, nlos.nr, nlos.nt
        )));
    }
    if k == 0.0 {
        return Ok(nlos.clone());
    }
    let a = (k / (k + 1.0)).sqrt();
    let b = (1.0 / (k + 1.0)).sqrt();
    Ok(ChannelMatrix {
        nr: los.nr,
        nt: los.nt,
        entries: los.entries.iter().zip(&nlos.entries).map(|(l, n)| l * a + n * b).collect(),
    })
}

fn check_k(k: f64) -> Result<()> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::Config(format!("Rician K must be a finite non-negative number, got {k}")));
    }
    Ok(())
}

/// I.i.d. `CN(0, N0)` samples.
pub fn awgn<R: Rng + ?Sized>(len: usize, n0: f64, rng: &mut R) -> Vec<Complex64> {
    let mut v = vec![Complex64::default(); len];
    if n0 > 0.0 {
        fill_complex_gaussian(&mut v, n0, rng);
    }
    v
}

/// Deterministic unit-modulus matrices used as the specular component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LosMatrix {
    /// `exp(-j 2 pi l i / Nr)`: columns are orthogonal when `Nt <= Nr`.
    #[default]
    Dft,
    /// All ones (rank one).
    Ones,
    /// Half-wavelength ULAs at both ends, plane wave with the given angles in degrees.
    Ula { aod_deg: f64, aoa_deg: f64 },
}

impl LosMatrix {
    pub fn matrix(&self, nr: usize, nt: usize) -> ChannelMatrix {
        ChannelMatrix::from_fn(nr, nt, |l, i| los_entry(self, nr, l, i))
    }
}

/// Small-scale fading law of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelModel {
    /// No fading: the channel is the LoS matrix itself (1 for a single link).
    Awgn {
        #[serde(default)]
        los: LosMatrix,
    },
    Rayleigh {},
    Rician {
        #[serde(rename = "K")]
        k: f64,
        #[serde(default)]
        los: LosMatrix,
    },
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        if let ChannelModel::Rician { k, .. } = self {
            check_k(*k)?;
        }
        Ok(())
    }

    pub fn is_fading(&self) -> bool {
        !matches!(self, ChannelModel::Awgn { .. })
    }

    /// Draws one realisation into `out` (shape is taken from `out`).
    pub fn draw_into<R: Rng + ?Sized>(&self, out: &mut ChannelMatrix, rng: &mut R) {
        match self {
            ChannelModel::Awgn { los } => *out = los.matrix(out.nr, out.nt),
            ChannelModel::Rayleigh {} => fill_complex_gaussian(&mut out.entries, 1.0, rng),
            ChannelModel::Rician { k, los } => {
                fill_complex_gaussian(&mut out.entries, 1.0, rng);
                if *k > 0.0 {
                    let a = (k / (k + 1.0)).sqrt();
                    let b = (1.0 / (k + 1.0)).sqrt();
                    let nt = out.nt;
                    let nr = out.nr;
                    for l in 0..nr {
                        for i in 0..nt {
                            let spec = los_entry(los, nr, l, i);
                            let e = &mut out.entries[l * nt + i];
                            *e = spec * a + *e * b;
                        }
                    }
                }
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, nr: usize, nt: usize, rng: &mut R) -> ChannelMatrix {
        let mut h = ChannelMatrix::zeros(nr, nt);
        self.draw_into(&mut h, rng);
        h
    }
}

fn los_entry(los: &LosMatrix, nr: usize, l: usize, i: usize) -> Complex64 {
    match *los {
        LosMatrix::Dft => Complex64::cis(-TWO_PI * (l * i) as f64 / nr as f64),
        LosMatrix::Ones => Complex64::new(1.0, 0.0),
        LosMatrix::Ula { aod_deg, aoa_deg } => {
            let (st, sr) = (aod_deg.to_radians().sin(), aoa_deg.to_radians().sin());
            Complex64::cis(std::f64::consts::PI * (l as f64 * sr - i as f64 * st))
        }
    }
}

/// Reflection from an `N`-element surface to `Nr` receive antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct RisLink {
    /// `beta[l][i]`, linear.
    pub beta: Vec<Vec<f64>>,
    /// `psi[l][i]`, radians.
    pub psi: Vec<Vec<f64>>,
    /// Element phases, radians.
    pub phi: Vec<f64>,
    pub es: f64,
    pub n0: f64,
}

impl RisLink {
    pub fn new(beta: Vec<Vec<f64>>, psi: Vec<Vec<f64>>, phi: Vec<f64>, es: f64, n0: f64) -> Result<Self> {
        let n = phi.len();
        if beta.is_empty() || beta.len() != psi.len() {
            return Err(Error::Shape("beta and psi need the same non-zero number of receive rows".into()));
        }
        if beta.iter().chain(&psi).any(|row| row.len() != n) {
            return Err(Error::Shape(format!("every row must have {n} elements")));
        }
        if beta.iter().flatten().any(|b| !(*b >= 0.0)) {
            return Err(Error::Config("path gains must be non-negative".into()));
        }
        if !(es > 0.0 && n0 > 0.0) {
            return Err(Error::Config(format!("Es and N0 must be positive (Es = {es}, N0 = {n0})")));
        }
        Ok(Self { beta, psi, phi, es, n0 })
    }

    pub fn elements(&self) -> usize {
        self.phi.len()
    }

    pub fn receivers(&self) -> usize {
        self.beta.len()
    }

    /// Noise-free `sqrt(Es) sum_i beta_li exp(j (phi_i - psi_li))`.
    pub fn received_signal(&self, l: usize) -> Complex64 {
        let sum: Complex64 = self.beta[l]
            .iter()
            .zip(&self.psi[l])
            .zip(&self.phi)
            .map(|((b, psi), phi)| Complex64::from_polar(*b, phi - psi))
            .sum();
        sum * self.es.sqrt()
    }

    /// Instantaneous SNR at receiver `l` for the current phases.
    pub fn snr(&self, l: usize) -> f64 {
        self.received_signal(l).norm_sqr() / self.n0
    }

    /// Sets `phi = psi_l` and returns `(sum beta_l)^2 Es / N0`.
    pub fn align_and_snr(&mut self, l: usize) -> f64 {
        self.phi.clone_from(&self.psi[l]);
        let s: f64 = self.beta[l].iter().sum();
        s * s * self.es / self.n0
    }

    /// Effective `Nr x Nt` channel when consecutive groups of
    /// `elements_per_subaperture` elements act as one transmit branch.
    pub fn subaperture_channel(&self, elements_per_subaperture: usize) -> Result<ChannelMatrix> {
        let g = elements_per_subaperture;
        if g == 0 || self.elements() % g != 0 {
            return Err(Error::Config(format!(
                "{} elements cannot be split into sub-apertures of {g}",
                self.elements()
            )));
        }
        let nt = self.elements() / g;
        Ok(ChannelMatrix::from_fn(self.receivers(), nt, |l, s| {
            (s * g..(s + 1) * g)
                .map(|i| Complex64::from_polar(self.beta[l][i], self.phi[i] - self.psi[l][i]))
                .sum()
        }))
    }
}
