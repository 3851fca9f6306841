use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::config::BerConfig;
use crate::channel::{complex_gaussian, ChannelMatrix, ChannelModel};
use crate::detection::{detect_ofdm_im, mld, CandidateSet};
use crate::im_schemes::{ChannelLayout, Scheme};
use crate::math::db_to_linear;
use crate::rng::{Stream, StreamKey};
use crate::Result;

/// Trials per work item. Results depend on this value, never on the thread count.
pub const BLOCK_TRIALS: u64 = 2_000;
const MAX_BLOCKS_PER_ROUND: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BerPoint {
    pub fn new(snr_db: f64, trials: u64, bit_errors: u64, bits_per_trial: u32) -> Self {
        let n = trials as f64 * f64::from(bits_per_trial);
        let ber = bit_errors as f64 / n;
        let half = 1.96 * (ber * (1.0 - ber) / n).sqrt();
        Self {
            snr_db,
            trials,
            bit_errors,
            ber,
            ci_low: (ber - half).max(0.0),
            ci_high: (ber + half).min(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub bits_per_trial: u32,
    /// Information bits per channel use, used for the Eb/N0 conversion.
    pub bits_per_channel_use: f64,
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "snr_db,trials,bit_errors,ber,ci_low,ci_high")?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{:.6e},{:.6e},{:.6e}",
                p.snr_db, p.trials, p.bit_errors, p.ber, p.ci_low, p.ci_high
            )?;
        }
        Ok(())
    }

    pub fn eb_n0_db(&self, snr_db: f64) -> f64 {
        snr_db - 10.0 * self.bits_per_channel_use.log10()
    }
}

/// Read-only state shared by all workers of one SNR point.
struct Link<'a> {
    scheme: &'a Scheme,
    cands: &'a CandidateSet,
    model: &'a ChannelModel,
    nr: usize,
    n0: f64,
}

struct Buffers {
    h: ChannelMatrix,
    res: ChannelMatrix,
    y: Vec<Complex64>,
    hr: Vec<Complex64>,
}

impl Link<'_> {
    fn buffers(&self) -> Buffers {
        let rows = self.scheme.transmit_rows();
        let t = self.scheme.time_slots();
        Buffers {
            h: match self.scheme.state_matrix() {
                Some(m) => m.clone(),
                None => ChannelMatrix::zeros(self.nr, rows),
            },
            res: ChannelMatrix::zeros(self.nr, 1),
            y: vec![Complex64::default(); self.nr * t.max(rows)],
            hr: vec![Complex64::default(); self.nr * rows],
        }
    }

    /// Bit errors of trial `trial`.
    fn trial(&self, key: &StreamKey, trial: u64, buf: &mut Buffers) -> Result<u32> {
        let mut bit_rng = key.rng(trial, Stream::Bits);
        let mut ch_rng = key.rng(trial, Stream::Channel);
        let mut noise_rng = key.rng(trial, Stream::Noise);
        let label = bit_rng.gen_range(0..self.scheme.codebook_size());
        let x = self.cands.codeword_for(label).expect("every label has a codeword");
        let nr = self.nr;
        let detected = match self.scheme.layout() {
            ChannelLayout::Flat { .. } => {
                if self.scheme.state_matrix().is_none() {
                    self.model.draw_into(&mut buf.h, &mut ch_rng);
                }
                let t = self.scheme.time_slots();
                let y = &mut buf.y[..nr * t];
                for v in y.iter_mut() {
                    *v = Complex64::default();
                }
                let h = &buf.h;
                for l in 0..nr {
                    for i in 0..h.nt {
                        let hv = h.get(l, i);
                        for tau in 0..t {
                            y[l * t + tau] += hv * x[i * t + tau];
                        }
                    }
                }
                for v in y.iter_mut() {
                    *v += complex_gaussian(&mut noise_rng, self.n0);
                }
                mld(y, h, self.cands)?
            }
            ChannelLayout::PerResource { n } => {
                for a in 0..n {
                    self.model.draw_into(&mut buf.res, &mut ch_rng);
                    for l in 0..nr {
                        let hv = buf.res.get(l, 0);
                        buf.hr[a * nr + l] = hv;
                        buf.y[a * nr + l] = hv * x[a] + complex_gaussian(&mut noise_rng, self.n0);
                    }
                }
                detect_ofdm_im(&buf.y[..n * nr], &buf.hr[..n * nr], nr, self.scheme)?
            }
        };
        Ok((label ^ detected).count_ones())
    }
}

/// Trial counts of the fixed round schedule: 1, 2, 4, .. blocks, capped.
fn round_sizes(limit: u64) -> impl Iterator<Item = u64> {
    let mut done = 0u64;
    let mut blocks = 1u64;
    std::iter::from_fn(move || {
        if done >= limit {
            return None;
        }
        let size = (blocks * BLOCK_TRIALS).min(limit - done);
        done += size;
        blocks = (blocks * 2).min(MAX_BLOCKS_PER_ROUND);
        Some(size)
    })
}

fn run_range(link: &Link<'_>, key: &StreamKey, start: u64, len: u64) -> Result<u64> {
    let blocks = len.div_ceil(BLOCK_TRIALS);
    let per_block: Vec<Result<u64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut buf = link.buffers();
            let lo = start + b * BLOCK_TRIALS;
            let hi = (lo + BLOCK_TRIALS).min(start + len);
            let mut errors = 0u64;
            for t in lo..hi {
                errors += u64::from(link.trial(key, t, &mut buf)?);
            }
            Ok(errors)
        })
        .collect();
    per_block.into_iter().sum()
}

/// Simulates one SNR point; `index` keys the random streams.
pub fn simulate_point(cfg: &BerConfig, scheme: &Scheme, cands: &CandidateSet, index: usize) -> Result<BerPoint> {
    let snr_db = cfg.snr_db[index];
    let link = Link {
        scheme,
        cands,
        model: &cfg.channel,
        nr: cfg.nr,
        n0: 1.0 / db_to_linear(snr_db),
    };
    let key = StreamKey::new(cfg.seed, index as u64);
    let (limit, min_errors) = match cfg.trials {
        Some(n) => (n, u64::MAX),
        None => (cfg.stop.max_trials, cfg.stop.min_errors),
    };
    let mut trials = 0u64;
    let mut errors = 0u64;
    for size in round_sizes(limit) {
        errors += run_range(&link, &key, trials, size)?;
        trials += size;
        if errors >= min_errors {
            break;
        }
    }
    Ok(BerPoint::new(snr_db, trials, errors, scheme.bits()))
}

pub fn run_ber(cfg: &BerConfig) -> Result<BerCurve> {
    let scheme = cfg.validate()?;
    let cands = scheme.candidates();
    let points = (0..cfg.snr_db.len())
        .map(|i| simulate_point(cfg, &scheme, &cands, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(BerCurve {
        bits_per_trial: scheme.bits(),
        bits_per_channel_use: f64::from(scheme.bits()) / scheme.channel_uses() as f64,
        points,
    })
}
