use std::io::Write;

use super::config::CapacityConfig;
use crate::detection::ergodic_capacity;
use crate::math::db_to_linear;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityPoint {
    pub nt: usize,
    pub nr: usize,
    pub snr_db: f64,
    pub trials: u64,
    pub capacity: f64,
    pub std_err: f64,
}

pub fn run_capacity(cfg: &CapacityConfig) -> Result<Vec<CapacityPoint>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &[nt, nr] in &cfg.antennas {
        for &snr_db in &cfg.snr_db {
            let est = ergodic_capacity(nt, nr, db_to_linear(snr_db), &cfg.channel, cfg.trials, cfg.seed)?;
            out.push(CapacityPoint {
                nt,
                nr,
                snr_db,
                trials: est.trials,
                capacity: est.mean,
                std_err: est.std_err,
            });
        }
    }
    Ok(out)
}

pub fn write_capacity_csv<W: Write>(points: &[CapacityPoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "nt,nr,snr_db,trials,capacity,std_err")?;
    for p in points {
        writeln!(w, "{},{},{},{},{:.6},{:.6}", p.nt, p.nr, p.snr_db, p.trials, p.capacity, p.std_err)?;
    }
    Ok(())
}
