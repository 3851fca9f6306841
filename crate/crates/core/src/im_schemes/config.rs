use serde::{Deserialize, Serialize};

use super::ConstellationKind;
use crate::math::{binomial, exact_log2, floor_log2};
use crate::{Error, Result};

fn one() -> usize {
    1
}

fn default_steps() -> usize {
    16
}

/// Where MBM channel states come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum MbmStates {
    /// Each state is an independent draw from the experiment's fading model.
    #[default]
    Abstract,
    /// States are far-field responses of pseudo-random surface codings, observed
    /// at one direction per receive antenna.
    Pattern {
        nx: usize,
        ny: usize,
        /// Element spacing in metres.
        spacing: f64,
        /// Carrier in Hz.
        fc: f64,
        #[serde(default = "one_u32")]
        phase_bits: u32,
        #[serde(default)]
        seed: u64,
        /// `[theta_deg, phi_deg]` per receive antenna.
        directions: Vec<[f64; 2]>,
    },
}

fn one_u32() -> u32 {
    1
}

/// Scheme parameters. `order` is the constellation size `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeConfig {
    Psk {
        order: usize,
    },
    Qam {
        order: usize,
    },
    Sm {
        nt: usize,
        order: usize,
        #[serde(default)]
        constellation: ConstellationKind,
    },
    Ssk {
        nt: usize,
    },
    Gsm {
        nt: usize,
        na: usize,
        order: usize,
        #[serde(default)]
        constellation: ConstellationKind,
    },
    Qsm {
        nt: usize,
        order: usize,
    },
    SimOok {
        n_sim: usize,
        order: usize,
        /// Harmonic alphabet; defaults to the `n_sim` non-zero harmonics closest to 0.
        #[serde(default)]
        harmonics: Option<Vec<i32>>,
        /// Steps per modulation period used for the physical realisation.
        #[serde(default = "default_steps")]
        steps: usize,
    },
    OfdmIm {
        n: usize,
        k: usize,
        order: usize,
        #[serde(default)]
        constellation: ConstellationKind,
    },
    ScIm {
        ls: usize,
        k: usize,
        order: usize,
        ns: usize,
        lcp: usize,
        #[serde(default)]
        constellation: ConstellationKind,
    },
    Stsk {
        q: usize,
        #[serde(default = "one")]
        p: usize,
        order: usize,
        nt: usize,
        nns: usize,
        #[serde(default)]
        seed: u64,
    },
    Mbm {
        states: usize,
        order: usize,
        #[serde(default)]
        state_source: MbmStates,
    },
    RaSsk {
        nt: usize,
        states: Vec<usize>,
    },
}

fn pow2(name: &str, v: usize) -> Result<u32> {
    exact_log2(v).ok_or_else(|| Error::Config(format!("{name} must be a power of two, got {v}")))
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::Config(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn choose(name: &str, n: usize, k: usize) -> Result<u32> {
    positive(name, n)?;
    if k == 0 || k > n {
        return Err(Error::Config(format!("{name}: need 1 <= {k} <= {n} active out of {n}")));
    }
    Ok(floor_log2(binomial(n, k)))
}

/// Default SIM alphabet: `{-n/2, .., -1, 1, .., n/2}`, or `{1}` for a single harmonic.
pub fn default_harmonics(n_sim: usize) -> Vec<i32> {
    if n_sim <= 1 {
        return vec![1];
    }
    let h = (n_sim / 2) as i32;
    (-h..=h).filter(|&m| m != 0).collect()
}

impl SchemeConfig {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeConfig::Psk { .. } => "psk",
            SchemeConfig::Qam { .. } => "qam",
            SchemeConfig::Sm { .. } => "sm",
            SchemeConfig::Ssk { .. } => "ssk",
            SchemeConfig::Gsm { .. } => "gsm",
            SchemeConfig::Qsm { .. } => "qsm",
            SchemeConfig::SimOok { .. } => "sim_ook",
            SchemeConfig::OfdmIm { .. } => "ofdm_im",
            SchemeConfig::ScIm { .. } => "sc_im",
            SchemeConfig::Stsk { .. } => "stsk",
            SchemeConfig::Mbm { .. } => "mbm",
            SchemeConfig::RaSsk { .. } => "ra_ssk",
        }
    }

    /// Checks feasibility and returns `(index bits, symbol bits)` per codeword.
    pub fn bit_split(&self) -> Result<(u32, u32)> {
        Ok(match self {
            SchemeConfig::Psk { order } => (0, pow2("order", *order)?),
            SchemeConfig::Qam { order } => {
                let b = pow2("order", *order)?;
                if b == 0 || b % 2 == 1 {
                    return Err(Error::Config(format!("QAM order must be 4, 16, 64, ...; got {order}")));
                }
                (0, b)
            }
            SchemeConfig::Sm { nt, order, constellation } => {
                let b = pow2("order", *order)?;
                if *constellation == ConstellationKind::Qam && (b == 0 || b % 2 == 1) {
                    return Err(Error::Config(format!("QAM order must be 4, 16, 64, ...; got {order}")));
                }
                (pow2("nt", *nt)?, b)
            }
            SchemeConfig::Ssk { nt } => (pow2("nt", *nt)?, 0),
            SchemeConfig::Gsm { nt, na, order, .. } => (choose("gsm", *nt, *na)?, pow2("order", *order)?),
            SchemeConfig::Qsm { nt, order } => (2 * pow2("nt", *nt)?, pow2("order", *order)?),
            SchemeConfig::SimOok { n_sim, order, harmonics, steps } => {
                let idx = pow2("n_sim", *n_sim)?;
                let b = pow2("order", *order)?;
                let alphabet = harmonics.clone().unwrap_or_else(|| default_harmonics(*n_sim));
                if alphabet.len() != *n_sim {
                    return Err(Error::Config(format!(
                        "harmonic alphabet has {} entries but n_sim = {n_sim}",
                        alphabet.len()
                    )));
                }
                for (i, &m) in alphabet.iter().enumerate() {
                    if alphabet[..i].contains(&m) {
                        return Err(Error::Config(format!("harmonic {m} is listed twice")));
                    }
                    if m == 0 {
                        return Err(Error::Config("harmonic 0 cannot carry an index".into()));
                    }
                    if 2 * m.unsigned_abs() as usize >= *steps {
                        return Err(Error::Aliasing { m, steps: *steps });
                    }
                    for v in 0..*order {
                        if super::sim_shift(m, v, *order, *steps).is_none() {
                            return Err(Error::Config(format!(
                                "phase {v}/{order} of a turn is not reachable on harmonic {m} with {steps} steps"
                            )));
                        }
                    }
                }
                (idx, b)
            }
            SchemeConfig::OfdmIm { n, k, order, constellation } => {
                let b = pow2("order", *order)?;
                if *constellation == ConstellationKind::Qam && (b == 0 || b % 2 == 1) {
                    return Err(Error::Config(format!("QAM order must be 4, 16, 64, ...; got {order}")));
                }
                (choose("ofdm_im", *n, *k)?, *k as u32 * b)
            }
            SchemeConfig::ScIm { ls, k, order, ns, constellation, .. } => {
                positive("ns", *ns)?;
                let b = pow2("order", *order)?;
                if *constellation == ConstellationKind::Qam && (b == 0 || b % 2 == 1) {
                    return Err(Error::Config(format!("QAM order must be 4, 16, 64, ...; got {order}")));
                }
                (choose("sc_im", *ls, *k)?, *k as u32 * b)
            }
            SchemeConfig::Stsk { q, p, order, nt, nns, .. } => {
                positive("nt", *nt)?;
                positive("nns", *nns)?;
                (choose("stsk", *q, *p)?, *p as u32 * pow2("order", *order)?)
            }
            SchemeConfig::Mbm { states, order, state_source } => {
                if let MbmStates::Pattern { directions, .. } = state_source {
                    if directions.is_empty() {
                        return Err(Error::Config("pattern MBM needs at least one receive direction".into()));
                    }
                }
                (pow2("states", *states)?, pow2("order", *order)?)
            }
            SchemeConfig::RaSsk { .. } => {
                return Err(Error::Config(
                    "ra_ssk is available for rate evaluation only".into(),
                ))
            }
        })
    }

    pub fn bits_per_codeword(&self) -> Result<u32> {
        let (i, s) = self.bit_split()?;
        let total = i + s;
        if total == 0 {
            return Err(Error::Config("configuration carries no information".into()));
        }
        if total > 24 {
            return Err(Error::Config(format!("{total} bits per codeword is too many to enumerate")));
        }
        Ok(total)
    }

    /// Throughput by the scheme's own formula: bits per channel use, per subcarrier
    /// (OFDM-IM) or per frame slot (SC-IM).
    pub fn rate(&self) -> Result<f64> {
        if let SchemeConfig::RaSsk { nt, states } = self {
            positive("nt", *nt)?;
            if states.len() != *nt || states.contains(&0) {
                return Err(Error::Config(format!(
                    "ra_ssk needs one positive state count per antenna ({nt})"
                )));
            }
            let mean = states.iter().map(|&s| (s as f64).log2()).sum::<f64>() / *nt as f64;
            return Ok((*nt as f64).log2() + mean);
        }
        let bits = f64::from(self.bits_per_codeword()?);
        Ok(match self {
            SchemeConfig::OfdmIm { n, .. } => bits / *n as f64,
            SchemeConfig::ScIm { ls, ns, lcp, .. } => {
                *ns as f64 * bits / ((*ns + *lcp) as f64 * *ls as f64)
            }
            SchemeConfig::Stsk { nns, .. } => bits / *nns as f64,
            _ => bits,
        })
    }
}
