//! Bit-to-codeword mappers for index-modulation schemes.
//!
//! Bits are MSB-first and index bits come before symbol bits. Active subsets
//! are numbered with the combinatorial number system. Every codebook is scaled
//! to unit average transmit energy per channel use (per subcarrier for
//! OFDM-IM, per slot for SC-IM).

pub mod combinadic;
mod config;
mod constellation;

use std::io::Write;

use num_complex::Complex64;

pub use config::{default_harmonics, MbmStates, SchemeConfig};
pub use constellation::{Constellation, ConstellationKind, Labeling};

use crate::aperture::{far_field_phase, pseudo_random_codings, ApertureGeometry};
use crate::channel::{complex_gaussian, ChannelMatrix};
use crate::detection::CandidateSet;
use crate::math::{bits_to_u64, u64_to_bits, wrap_phase, TWO_PI};
use crate::rng::{Stream, StreamKey};
use crate::spacetime::{harmonic_coefficient, phase_shift_harmonic, synthesize_single_harmonic, CodingSequence, HarmonicSpectrum};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Plain constellation symbol, no index.
    Signal,
    Spatial,
    Frequency,
    Time,
    Dispersion,
    ChannelState,
}

/// One codeword before it is laid out on antennas, subcarriers or slots.
#[derive(Debug, Clone, PartialEq)]
pub struct IMSymbol {
    pub domain: Domain,
    /// Active indices. Sorted for subset schemes; `[i_I, i_Q]` for QSM.
    pub indices: Vec<usize>,
    pub symbols: Vec<Complex64>,
}

/// How a codeword meets the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelLayout {
    /// One `nr x nt` matrix shared by all rows of the codeword.
    Flat { nt: usize },
    /// `n` independently faded resources (subcarriers, harmonics), one column each.
    PerResource { n: usize },
}

/// State of a scheme ready for mapping.
#[derive(Debug, Clone)]
pub struct Scheme {
    config: SchemeConfig,
    constellation: Constellation,
    index_bits: u32,
    symbol_bits: u32,
    harmonics: Vec<i32>,
    dispersion: Vec<Vec<Complex64>>,
    dispersion_gain: f64,
    state_matrix: Option<ChannelMatrix>,
}

/// Smallest circular shift that puts phase `v / order` of a turn on harmonic `m`.
pub(crate) fn sim_shift(m: i32, v: usize, order: usize, steps: usize) -> Option<usize> {
    let (m, v, order, steps) = (i64::from(m), v as i64, order as i64, steps as i64);
    (0..steps).find(|n| (m * n * order + v * steps).rem_euclid(order * steps) == 0).map(|n| n as usize)
}

/// `q` complex Gaussian `nt x nns` matrices, each scaled to `||A||_F^2 = nns`.
pub fn dispersion_set(q: usize, nt: usize, nns: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let key = StreamKey::new(seed, 0xD15_9E25);
    (0..q)
        .map(|i| {
            let mut rng = key.rng(i as u64, Stream::Aux);
            let a: Vec<Complex64> = (0..nt * nns).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let norm = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let scale = (nns as f64).sqrt() / norm;
            a.into_iter().map(|x| x * scale).collect()
        })
        .collect()
}

/// Channel states of pattern-mode MBM: `nr x S`, each column scaled to `||h||^2 = nr`.
pub fn pattern_states(states: usize, source: &MbmStates) -> Result<ChannelMatrix> {
    let MbmStates::Pattern { nx, ny, spacing, fc, phase_bits, seed, directions } = source else {
        return Err(Error::Config("state matrix requested for abstract MBM".into()));
    };
    let geom = ApertureGeometry::new(*nx, *ny, *spacing, *spacing, *fc)?;
    let codings = pseudo_random_codings(states, &geom, *seed, *phase_bits)?;
    let nr = directions.len();
    let mut h = ChannelMatrix::zeros(nr, states);
    for (s, coding) in codings.iter().enumerate() {
        let w = coding.weights();
        for (l, d) in directions.iter().enumerate() {
            let ff = far_field_phase(&geom, d[0].to_radians(), d[1].to_radians());
            let f: Complex64 = w.iter().zip(&ff).map(|(a, p)| a * Complex64::cis(*p)).sum();
            h.set(l, s, f);
        }
        let norm: f64 = (0..nr).map(|l| h.get(l, s).norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroField);
        }
        let scale = (nr as f64).sqrt() / norm;
        for l in 0..nr {
            h.set(l, s, h.get(l, s) * scale);
        }
    }
    Ok(h)
}

impl Scheme {
    pub fn new(config: SchemeConfig) -> Result<Self> {
        let (index_bits, symbol_bits) = config.bit_split()?;
        config.bits_per_codeword()?;
        let constellation = match &config {
            SchemeConfig::Psk { order } => Constellation::psk(*order, Labeling::Gray)?,
            SchemeConfig::Ssk { .. } => Constellation::psk(1, Labeling::Gray)?,
            SchemeConfig::Qam { order } => Constellation::qam(*order)?,
            SchemeConfig::Sm { order, constellation, .. }
            | SchemeConfig::Gsm { order, constellation, .. }
            | SchemeConfig::OfdmIm { order, constellation, .. }
            | SchemeConfig::ScIm { order, constellation, .. } => Constellation::build(*constellation, *order)?,
            SchemeConfig::Qsm { order, .. } => Constellation::quadrature_safe_psk(*order)?,
            SchemeConfig::SimOok { order, .. } => Constellation::psk(*order, Labeling::Natural)?,
            SchemeConfig::Stsk { order, .. } | SchemeConfig::Mbm { order, .. } => {
                Constellation::psk(*order, Labeling::Gray)?
            }
            SchemeConfig::RaSsk { .. } => unreachable!("rejected by bit_split"),
        };
        let harmonics = match &config {
            SchemeConfig::SimOok { n_sim, harmonics, .. } => {
                harmonics.clone().unwrap_or_else(|| default_harmonics(*n_sim))
            }
            _ => Vec::new(),
        };
        let mut scheme = Self {
            config,
            constellation,
            index_bits,
            symbol_bits,
            harmonics,
            dispersion: Vec::new(),
            dispersion_gain: 1.0,
            state_matrix: None,
        };
        if let SchemeConfig::Stsk { q, p, nt, nns, seed, .. } = scheme.config {
            scheme.dispersion = dispersion_set(q, nt, nns, seed);
            let mean = scheme.mean_dispersion_energy(p);
            scheme.dispersion_gain = (p as f64 * nns as f64 / mean).sqrt();
        }
        if let SchemeConfig::Mbm { states, state_source: source @ MbmStates::Pattern { .. }, .. } = &scheme.config {
            scheme.state_matrix = Some(pattern_states(*states, source)?);
        }
        Ok(scheme)
    }

    /// Average `||sum_j A_j s_j||_F^2` over the valid subsets and symbol tuples.
    fn mean_dispersion_energy(&self, p: usize) -> f64 {
        let points = self.constellation.points();
        let es = self.constellation.average_energy();
        let mu: Complex64 = points.iter().sum::<Complex64>() / points.len() as f64;
        let subsets = 1u64 << self.index_bits;
        let q = self.dispersion.len();
        let mut total = 0.0;
        for r in 0..subsets {
            let set = combinadic::unrank(r, q, p).expect("rank below 2^index_bits");
            for &a in &set {
                let ea: f64 = self.dispersion[a].iter().map(|x| x.norm_sqr()).sum();
                total += ea * es;
                for &b in &set {
                    if a != b {
                        let ip: Complex64 = self.dispersion[a]
                            .iter()
                            .zip(&self.dispersion[b])
                            .map(|(x, y)| x.conj() * y)
                            .sum();
                        total += ip.re * mu.norm_sqr();
                    }
                }
            }
        }
        total / subsets as f64
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn harmonics(&self) -> &[i32] {
        &self.harmonics
    }

    pub fn dispersion(&self) -> &[Vec<Complex64>] {
        &self.dispersion
    }

    /// Fixed `nr x S` state matrix of pattern-mode MBM.
    pub fn state_matrix(&self) -> Option<&ChannelMatrix> {
        self.state_matrix.as_ref()
    }

    pub fn index_bits(&self) -> u32 {
        self.index_bits
    }

    pub fn symbol_bits(&self) -> u32 {
        self.symbol_bits
    }

    pub fn bits(&self) -> u32 {
        self.index_bits + self.symbol_bits
    }

    pub fn codebook_size(&self) -> u64 {
        1u64 << self.bits()
    }

    pub fn rate(&self) -> f64 {
        self.config.rate().expect("validated at construction")
    }

    pub fn layout(&self) -> ChannelLayout {
        match &self.config {
            SchemeConfig::Psk { .. } | SchemeConfig::Qam { .. } | SchemeConfig::ScIm { .. } => ChannelLayout::Flat { nt: 1 },
            SchemeConfig::Sm { nt, .. }
            | SchemeConfig::Ssk { nt }
            | SchemeConfig::Gsm { nt, .. }
            | SchemeConfig::Qsm { nt, .. }
            | SchemeConfig::Stsk { nt, .. } => ChannelLayout::Flat { nt: *nt },
            SchemeConfig::Mbm { states, .. } => ChannelLayout::Flat { nt: *states },
            SchemeConfig::SimOok { n_sim, .. } => ChannelLayout::PerResource { n: *n_sim },
            SchemeConfig::OfdmIm { n, .. } => ChannelLayout::PerResource { n: *n },
            SchemeConfig::RaSsk { .. } => unreachable!(),
        }
    }

    /// Rows of the transmit matrix (antennas, virtual states or resources).
    pub fn transmit_rows(&self) -> usize {
        match self.layout() {
            ChannelLayout::Flat { nt } => nt,
            ChannelLayout::PerResource { n } => n,
        }
    }

    /// Columns of the transmit matrix (time slots).
    pub fn time_slots(&self) -> usize {
        match &self.config {
            SchemeConfig::ScIm { ls, .. } => *ls,
            SchemeConfig::Stsk { nns, .. } => *nns,
            _ => 1,
        }
    }

    /// Channel uses spanned by one codeword: subcarriers for OFDM-IM, time slots otherwise.
    pub fn channel_uses(&self) -> usize {
        match &self.config {
            SchemeConfig::OfdmIm { n, .. } => *n,
            _ => self.time_slots(),
        }
    }

    fn domain(&self) -> Domain {
        match &self.config {
            SchemeConfig::Psk { .. } | SchemeConfig::Qam { .. } => Domain::Signal,
            SchemeConfig::Sm { .. } | SchemeConfig::Ssk { .. } | SchemeConfig::Gsm { .. } | SchemeConfig::Qsm { .. } => {
                Domain::Spatial
            }
            SchemeConfig::SimOok { .. } | SchemeConfig::OfdmIm { .. } => Domain::Frequency,
            SchemeConfig::ScIm { .. } => Domain::Time,
            SchemeConfig::Stsk { .. } => Domain::Dispersion,
            SchemeConfig::Mbm { .. } => Domain::ChannelState,
            SchemeConfig::RaSsk { .. } => unreachable!(),
        }
    }

    fn subset_shape(&self) -> Option<(usize, usize)> {
        match self.config {
            SchemeConfig::Gsm { nt, na, .. } => Some((nt, na)),
            SchemeConfig::OfdmIm { n, k, .. } => Some((n, k)),
            SchemeConfig::ScIm { ls, k, .. } => Some((ls, k)),
            SchemeConfig::Stsk { q, p, .. } => Some((q, p)),
            _ => None,
        }
    }

    /// Number of symbols carried per codeword.
    fn symbol_count(&self) -> usize {
        match &self.config {
            SchemeConfig::Ssk { .. } => 0,
            SchemeConfig::OfdmIm { k, .. } | SchemeConfig::ScIm { k, .. } => *k,
            SchemeConfig::Stsk { p, .. } => *p,
            _ => 1,
        }
    }

    fn per_symbol_bits(&self) -> u32 {
        self.constellation.bits()
    }

    pub fn map(&self, bits: &[u8]) -> Result<IMSymbol> {
        if bits.len() != self.bits() as usize {
            return Err(Error::BitLength {
                expected: self.bits() as usize,
                got: bits.len(),
            });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidCodeword("bits must be 0 or 1".into()));
        }
        Ok(self.map_label(bits_to_u64(bits)))
    }

    /// Codeword for the bit label `v` (bits read MSB-first).
    pub fn map_label(&self, label: u64) -> IMSymbol {
        let sb = self.symbol_bits;
        let index = label >> sb;
        let sym_field = label & ((1u64 << sb) - 1);
        let b = self.per_symbol_bits();
        let n_sym = self.symbol_count();
        let symbols: Vec<Complex64> = (0..n_sym)
            .map(|j| {
                let shift = b * (n_sym - 1 - j) as u32;
                let v = (sym_field >> shift) & ((1u64 << b) - 1);
                self.constellation.point(v)
            })
            .collect();
        let indices = match (&self.config, self.subset_shape()) {
            (_, Some((n, k))) => combinadic::unrank(index, n, k).expect("rank below 2^index_bits"),
            (SchemeConfig::Qsm { nt, .. }, None) => {
                let w = crate::math::exact_log2(*nt).unwrap();
                vec![(index >> w) as usize, (index & ((1u64 << w) - 1)) as usize]
            }
            (SchemeConfig::Psk { .. } | SchemeConfig::Qam { .. }, None) => Vec::new(),
            _ => vec![index as usize],
        };
        IMSymbol {
            domain: self.domain(),
            indices,
            symbols,
        }
    }

    pub fn demap(&self, sym: &IMSymbol) -> Result<Vec<u8>> {
        Ok(u64_to_bits(self.demap_label(sym)?, self.bits() as usize))
    }

    pub fn demap_label(&self, sym: &IMSymbol) -> Result<u64> {
        if sym.symbols.len() != self.symbol_count() {
            return Err(Error::InvalidCodeword(format!(
                "expected {} symbols, got {}",
                self.symbol_count(),
                sym.symbols.len()
            )));
        }
        let index = match (&self.config, self.subset_shape()) {
            (_, Some((n, k))) => {
                if sym.indices.len() != k {
                    return Err(Error::InvalidCodeword(format!("expected {k} active indices")));
                }
                combinadic::validate(&sym.indices, n)?;
                let r = combinadic::rank(&sym.indices);
                if r >= 1u64 << self.index_bits {
                    return Err(Error::InvalidCodeword(format!(
                        "active set {:?} is not in the codebook",
                        sym.indices
                    )));
                }
                r
            }
            (SchemeConfig::Qsm { nt, .. }, None) => {
                let w = crate::math::exact_log2(*nt).unwrap();
                self.check_indices(&sym.indices, 2, *nt)?;
                ((sym.indices[0] as u64) << w) | sym.indices[1] as u64
            }
            (SchemeConfig::Psk { .. } | SchemeConfig::Qam { .. }, None) => {
                self.check_indices(&sym.indices, 0, 1)?;
                0
            }
            _ => {
                let range = 1usize << self.index_bits;
                self.check_indices(&sym.indices, 1, range)?;
                sym.indices[0] as u64
            }
        };
        let b = self.per_symbol_bits();
        let sym_field = sym
            .symbols
            .iter()
            .fold(0u64, |acc, s| (acc << b) | self.constellation.nearest(*s));
        Ok((index << self.symbol_bits) | sym_field)
    }

    fn check_indices(&self, idx: &[usize], count: usize, bound: usize) -> Result<()> {
        if idx.len() != count || idx.iter().any(|&i| i >= bound) {
            return Err(Error::InvalidCodeword(format!(
                "indices {idx:?} do not fit {count} values below {bound}"
            )));
        }
        Ok(())
    }

    /// Transmit matrix, `transmit_rows() x time_slots()` row-major.
    pub fn transmit(&self, sym: &IMSymbol) -> Vec<Complex64> {
        let rows = self.transmit_rows();
        let t = self.time_slots();
        let mut x = vec![Complex64::default(); rows * t];
        match &self.config {
            SchemeConfig::Psk { .. } | SchemeConfig::Qam { .. } => x[0] = sym.symbols[0],
            SchemeConfig::Sm { .. } | SchemeConfig::Mbm { .. } | SchemeConfig::SimOok { .. } => {
                x[sym.indices[0]] = sym.symbols[0];
            }
            SchemeConfig::Ssk { .. } => x[sym.indices[0]] = Complex64::new(1.0, 0.0),
            SchemeConfig::Gsm { na, .. } => {
                let s = sym.symbols[0] / (*na as f64).sqrt();
                for &i in &sym.indices {
                    x[i] = s;
                }
            }
            SchemeConfig::Qsm { .. } => {
                let s = sym.symbols[0];
                x[sym.indices[0]] += Complex64::new(s.re, 0.0);
                x[sym.indices[1]] += Complex64::new(0.0, s.im);
            }
            SchemeConfig::OfdmIm { n, k, .. } | SchemeConfig::ScIm { ls: n, k, .. } => {
                let g = (*n as f64 / *k as f64).sqrt();
                for (&i, s) in sym.indices.iter().zip(&sym.symbols) {
                    x[i] = s * g;
                }
            }
            SchemeConfig::Stsk { p, .. } => {
                let g = self.dispersion_gain / (*p as f64).sqrt();
                for (&q, s) in sym.indices.iter().zip(&sym.symbols) {
                    for (xe, a) in x.iter_mut().zip(&self.dispersion[q]) {
                        *xe += a * s * g;
                    }
                }
            }
            SchemeConfig::RaSsk { .. } => unreachable!(),
        }
        x
    }

    /// Every codeword in label order.
    pub fn candidates(&self) -> CandidateSet {
        let rows = self.transmit_rows();
        let t = self.time_slots();
        let n = self.codebook_size();
        let mut x = Vec::with_capacity(n as usize * rows * t);
        for label in 0..n {
            x.extend(self.transmit(&self.map_label(label)));
        }
        CandidateSet::new(rows, t, (0..n).collect(), x).expect("codebook is well formed")
    }

    /// Harmonic and phase-shift realisation of a SIM-OOK codeword.
    pub fn sim_ook_sequence(&self, sym: &IMSymbol) -> Result<CodingSequence> {
        let SchemeConfig::SimOok { order, steps, .. } = self.config else {
            return Err(Error::Config("not a SIM-OOK scheme".into()));
        };
        let m = self.harmonics[sym.indices[0]];
        let v = self.constellation.nearest(sym.symbols[0]) as usize;
        let base = synthesize_single_harmonic(m, steps)?;
        let shift = sim_shift(m, v, order, steps).expect("checked at construction");
        Ok(phase_shift_harmonic(&base, shift))
    }

    /// Reads the strongest alphabet harmonic of a received sequence and its phase.
    pub fn sim_ook_detect(&self, seq: &CodingSequence) -> Result<IMSymbol> {
        let SchemeConfig::SimOok { steps, .. } = self.config else {
            return Err(Error::Config("not a SIM-OOK scheme".into()));
        };
        let spectrum = HarmonicSpectrum {
            coefficients: self.harmonics.iter().map(|&m| (m, harmonic_coefficient(&seq.values, m))).collect(),
        };
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, &m) in self.harmonics.iter().enumerate() {
            let a = spectrum.get(m).norm();
            if a > best.1 + 1e-12 {
                best = (i, a);
            }
        }
        let m = self.harmonics[best.0];
        let phase = wrap_phase(spectrum.get(m).arg() - std::f64::consts::PI * f64::from(m) / steps as f64);
        let order = self.constellation.order();
        let v = ((phase / TWO_PI * order as f64).round() as i64).rem_euclid(order as i64) as u64;
        Ok(IMSymbol {
            domain: Domain::Frequency,
            indices: vec![best.0],
            symbols: vec![self.constellation.point(v)],
        })
    }

    /// CSV `bits,indices,symbols` listing of the whole codebook.
    pub fn write_codebook_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bits,indices,symbols")?;
        for label in 0..self.codebook_size() {
            let sym = self.map_label(label);
            let bits: String = u64_to_bits(label, self.bits() as usize).iter().map(|b| char::from(b'0' + b)).collect();
            let idx: Vec<String> = sym.indices.iter().map(|i| i.to_string()).collect();
            let syms: Vec<String> = sym.symbols.iter().map(|s| format!("{:.6}{:+.6}j", s.re, s.im)).collect();
            writeln!(w, "{bits},{},{}", idx.join(" "), syms.join(" "))?;
        }
        Ok(())
    }
}

/// Time-domain OFDM block `x[t] = (1/sqrt N) sum_a X_a exp(j 2 pi a t / N)`.
pub fn ofdm_modulate(symbols: &[Complex64]) -> Vec<Complex64> {
    let n = symbols.len();
    let mut buf = symbols.to_vec();
    if n == 0 {
        return buf;
    }
    rustfft::FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

/// Inverse of [`ofdm_modulate`].
pub fn ofdm_demodulate(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    if n == 0 {
        return buf;
    }
    rustfft::FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}
