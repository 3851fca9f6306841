//! Maximum-likelihood detection and ergodic capacity.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{ChannelMatrix, ChannelModel};
use crate::im_schemes::{combinadic, Scheme, SchemeConfig};
use crate::rng::{Stream, StreamKey};
use crate::{Error, Result};

/// Labelled transmit matrices (`nt x t`, row-major), sorted by label.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    nt: usize,
    t: usize,
    labels: Vec<u64>,
    x: Vec<Complex64>,
}

impl CandidateSet {
    pub fn new(nt: usize, t: usize, labels: Vec<u64>, x: Vec<Complex64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        if nt == 0 || t == 0 || x.len() != labels.len() * nt * t {
            return Err(Error::Shape(format!(
                "{} candidates of {nt}x{t} need {} entries, got {}",
                labels.len(),
                labels.len() * nt * t,
                x.len()
            )));
        }
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by_key(|&i| labels[i]);
        if order.windows(2).any(|w| labels[w[0]] == labels[w[1]]) {
            return Err(Error::Config("candidate labels must be unique".into()));
        }
        let size = nt * t;
        let mut sorted_x = Vec::with_capacity(x.len());
        for &i in &order {
            sorted_x.extend_from_slice(&x[i * size..(i + 1) * size]);
        }
        Ok(Self {
            nt,
            t,
            labels: order.iter().map(|&i| labels[i]).collect(),
            x: sorted_x,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn time_slots(&self) -> usize {
        self.t
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn codeword(&self, i: usize) -> &[Complex64] {
        let size = self.nt * self.t;
        &self.x[i * size..(i + 1) * size]
    }

    pub fn codeword_for(&self, label: u64) -> Option<&[Complex64]> {
        self.labels.binary_search(&label).ok().map(|i| self.codeword(i))
    }

    /// Mean of `||X||_F^2 / t` over the set (compensated sum).
    pub fn mean_energy(&self) -> f64 {
        let (mut sum, mut carry) = (0.0f64, 0.0f64);
        for v in &self.x {
            let e = v.norm_sqr();
            let t = sum + e;
            carry += if sum.abs() >= e { (sum - t) + e } else { (e - t) + sum };
            sum = t;
        }
        (sum + carry) / (self.len() * self.t) as f64
    }
}

/// `Y = H X` for an `nr x nt` channel and an `nt x t` codeword.
pub fn apply_channel(h: &ChannelMatrix, x: &[Complex64], t: usize) -> Vec<Complex64> {
    let mut y = vec![Complex64::default(); h.nr * t];
    for l in 0..h.nr {
        for i in 0..h.nt {
            let hv = h.get(l, i);
            if hv == Complex64::default() {
                continue;
            }
            for tau in 0..t {
                y[l * t + tau] += hv * x[i * t + tau];
            }
        }
    }
    y
}

/// Label minimising `||Y - H X||_F^2`; the lowest label wins ties.
pub fn mld(y: &[Complex64], h: &ChannelMatrix, cands: &CandidateSet) -> Result<u64> {
    let t = cands.t;
    if h.nt != cands.nt || y.len() != h.nr * t {
        return Err(Error::Shape(format!(
            "y has {} samples, H is {}x{}, codewords are {}x{}",
            y.len(),
            h.nr,
            h.nt,
            cands.nt,
            t
        )));
    }
    let mut best = (0usize, f64::INFINITY);
    'cand: for c in 0..cands.len() {
        let x = cands.codeword(c);
        let mut metric = 0.0;
        for l in 0..h.nr {
            let row = &h.entries[l * h.nt..(l + 1) * h.nt];
            for tau in 0..t {
                let mut acc = y[l * t + tau];
                for (i, hv) in row.iter().enumerate() {
                    acc -= hv * x[i * t + tau];
                }
                metric += acc.norm_sqr();
            }
            if metric >= best.1 {
                continue 'cand;
            }
        }
        best = (c, metric);
    }
    Ok(cands.labels[best.0])
}

/// Joint index and symbol ML for schemes with independently faded resources
/// (OFDM-IM subblocks, SIM-OOK harmonics). `y[a * nr + l]` and `h[a * nr + l]`
/// hold receive antenna `l` on resource `a`. Returns the codeword label.
pub fn detect_ofdm_im(y: &[Complex64], h: &[Complex64], nr: usize, scheme: &Scheme) -> Result<u64> {
    let (n, k, gain) = match *scheme.config() {
        SchemeConfig::OfdmIm { n, k, .. } => (n, k, (n as f64 / k as f64).sqrt()),
        SchemeConfig::SimOok { n_sim, .. } => (n_sim, 1, 1.0),
        _ => return Err(Error::Config("per-resource detection needs an OFDM-IM or SIM-OOK scheme".into())),
    };
    if nr == 0 || y.len() != n * nr || h.len() != n * nr {
        return Err(Error::Shape(format!("expected {} samples and gains", n * nr)));
    }
    let points = scheme.constellation().points();
    let b = scheme.constellation().bits();
    // Best symbol and metric per resource when active; energy when idle.
    let mut best_sym = vec![0u64; n];
    let mut active_metric = vec![0.0; n];
    let mut idle_metric = vec![0.0; n];
    for a in 0..n {
        let ya = &y[a * nr..(a + 1) * nr];
        let ha = &h[a * nr..(a + 1) * nr];
        idle_metric[a] = ya.iter().map(|v| v.norm_sqr()).sum();
        let mut best = (0u64, f64::INFINITY);
        for (v, s) in points.iter().enumerate() {
            let xs = s * gain;
            let d: f64 = ya.iter().zip(ha).map(|(yv, hv)| (yv - hv * xs).norm_sqr()).sum();
            if d < best.1 {
                best = (v as u64, d);
            }
        }
        best_sym[a] = best.0;
        active_metric[a] = best.1;
    }
    let total_idle: f64 = idle_metric.iter().sum();
    let sets = 1u64 << scheme.index_bits();
    let mut best = (0u64, f64::INFINITY);
    let mut active = vec![0usize; k];
    for r in 0..sets {
        if let SchemeConfig::SimOok { .. } = scheme.config() {
            active[0] = r as usize;
        } else {
            active.copy_from_slice(&combinadic::unrank(r, n, k)?);
        }
        let metric = total_idle + active.iter().map(|&a| active_metric[a] - idle_metric[a]).sum::<f64>();
        if metric < best.1 {
            let syms = active.iter().fold(0u64, |acc, &a| (acc << b) | best_sym[a]);
            best = ((r << scheme.symbol_bits()) | syms, metric);
        }
    }
    Ok(best.0)
}

/// `log2 det(I + (snr / nt) H H^H)`.
pub fn instantaneous_capacity(h: &ChannelMatrix, snr: f64) -> f64 {
    let hm = DMatrix::from_row_slice(h.nr, h.nt, &h.entries);
    let scale = Complex64::new(snr / h.nt as f64, 0.0);
    let m = DMatrix::<Complex64>::identity(h.nr, h.nr) + hm.clone() * hm.adjoint() * scale;
    let chol = m.cholesky().expect("I + a H H^H is positive definite");
    2.0 * chol.l().diagonal().iter().map(|d| d.re.log2()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: u64,
}

/// Monte Carlo ergodic capacity in bit/s/Hz. Trial `i` always uses the same
/// channel draw for a given seed, so curves over SNR share realisations.
pub fn ergodic_capacity(nt: usize, nr: usize, snr: f64, model: &ChannelModel, trials: u64, seed: u64) -> Result<CapacityEstimate> {
    if nt == 0 || nr == 0 {
        return Err(Error::Config("antenna counts must be positive".into()));
    }
    if trials == 0 {
        return Err(Error::Config("capacity needs at least one trial".into()));
    }
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(Error::Config(format!("SNR must be finite and non-negative, got {snr}")));
    }
    model.validate()?;
    let key = StreamKey::new(seed, (nt as u64) << 32 | nr as u64);
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = key.rng(i, Stream::Channel);
            instantaneous_capacity(&model.draw(nr, nt, &mut rng), snr)
        })
        .collect();
    let n = trials as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if trials > 1 {
        samples.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(CapacityEstimate {
        mean,
        std_err: (var / n).sqrt(),
        trials,
    })
}
