//! Config-driven experiments: BER and capacity sweeps, pattern and harmonic exports.
//!
//! Work is split into fixed-size blocks of trials keyed by `(seed, point, trial)`,
//! so results are byte-identical for any thread count.

mod ber;
mod capacity;
mod config;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

pub use ber::{run_ber, simulate_point, BerCurve, BerPoint, BLOCK_TRIALS};
pub use capacity::{run_capacity, write_capacity_csv, CapacityPoint};
pub use config::*;

use crate::aperture::{
    compose_phase, directivity, directivity_normalization, radiation_pattern, radiation_pattern_uv,
    scan_angle, steering_phase, write_uv_csv, ApertureGeometry, DirectionGrid, PhaseCoding,
};
use crate::metaatom::ResponseTable;
use crate::spacetime::{
    harmonic_coefficients, harmonic_pattern, phase_shift_harmonic, shift_for_phase, synthesize_multi_harmonic,
    synthesize_single_harmonic, CodingSequence,
};
use crate::{Error, Result};

/// Files written by an experiment and a human-readable summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

fn create(dir: &Path, file: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(file);
    let f = File::create(&path)?;
    Ok((path, BufWriter::new(f)))
}

fn write_with<F>(dir: &Path, file: &str, report: &mut Report, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let (path, mut w) = create(dir, file)?;
    f(&mut w)?;
    std::io::Write::flush(&mut w)?;
    report.files.push(path);
    Ok(())
}

/// Runs any experiment and writes its CSVs into `out_dir`.
pub fn execute(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    let name = cfg.name().to_string();
    match cfg {
        ExperimentConfig::Ber(c) => execute_ber(c, &name, out_dir),
        ExperimentConfig::Capacity(c) => execute_capacity(c, &name, out_dir),
        ExperimentConfig::Pattern(c) => execute_pattern(c, &name, out_dir),
        ExperimentConfig::Harmonics(c) => execute_harmonics(c, &name, out_dir),
    }
}

fn execute_ber(cfg: &BerConfig, name: &str, out_dir: &Path) -> Result<Report> {
    let curve = run_ber(cfg)?;
    let mut report = Report::default();
    write_with(out_dir, &format!("{name}.csv"), &mut report, |w| curve.write_csv(w))?;
    report.lines.push(format!(
        "{} bits per codeword, {:.4} bits per channel use",
        curve.bits_per_trial, curve.bits_per_channel_use
    ));
    for p in &curve.points {
        report.lines.push(format!(
            "Es/N0 {:>6.2} dB  Eb/N0 {:>6.2} dB  BER {:.3e}  ({} errors / {} trials)",
            p.snr_db,
            curve.eb_n0_db(p.snr_db),
            p.ber,
            p.bit_errors,
            p.trials
        ));
    }
    Ok(report)
}

fn execute_capacity(cfg: &CapacityConfig, name: &str, out_dir: &Path) -> Result<Report> {
    let points = run_capacity(cfg)?;
    let mut report = Report::default();
    write_with(out_dir, &format!("{name}.csv"), &mut report, |w| write_capacity_csv(&points, w))?;
    for p in &points {
        report.lines.push(format!(
            "{}x{} at {:>6.2} dB: {:.4} +/- {:.4} bit/s/Hz",
            p.nt, p.nr, p.snr_db, p.capacity, p.std_err
        ));
    }
    Ok(report)
}

/// Steering, modulation, quantisation and optional atom loss of a pattern config.
pub fn build_coding(cfg: &PatternConfig) -> Result<(ApertureGeometry, PhaseCoding, Option<f64>)> {
    let geom = cfg.geometry.build()?;
    let base = PhaseCoding::uniform(&geom, 1.0, cfg.modulation_phase_deg.to_radians())?;
    let (steer, predicted) = match &cfg.steering {
        Some(s) => {
            let spec = s.build(&geom)?;
            (steering_phase(&geom, &spec), Some(scan_angle(&spec, geom.wavelength())?))
        }
        None => (vec![0.0; geom.nx], None),
    };
    let mut coding = compose_phase(&base, &steer, &vec![0.0; geom.len()])?;
    if let Some(bits) = cfg.quantize_bits {
        coding = coding.quantized(bits);
    }
    if cfg.couple_atom_loss {
        let table = match &cfg.table {
            Some(p) => ResponseTable::from_path(p)?,
            None => ResponseTable::shipped(),
        };
        coding = coding.with_atom_loss(&table, cfg.geometry.fc_ghz, cfg.resistance_ohm)?;
    }
    Ok((geom, coding, predicted))
}

fn execute_pattern(cfg: &PatternConfig, name: &str, out_dir: &Path) -> Result<Report> {
    let (geom, coding, predicted) = build_coding(cfg)?;
    let grid = DirectionGrid::hemisphere(cfg.grid_step_deg)?;
    let field = radiation_pattern(&coding, &geom, &grid, cfg.element_exponent)?;
    let dir = directivity(&field)?;
    let norm = directivity_normalization(&field)?;
    let mut report = Report::default();
    write_with(out_dir, &format!("{name}.csv"), &mut report, |w| field.write_csv(w))?;
    write_with(out_dir, &format!("{name}_coding.csv"), &mut report, |w| coding.write_csv(w))?;
    if cfg.uv_samples > 1 {
        let rows = radiation_pattern_uv(&coding, &geom, cfg.uv_samples, cfg.element_exponent)?;
        write_with(out_dir, &format!("{name}_uv.csv"), &mut report, |w| write_uv_csv(&rows, w))?;
    }
    if let Some(theta) = predicted {
        report.lines.push(format!("predicted scan angle {:.2} deg", theta.to_degrees()));
    }
    report.lines.push(format!(
        "peak at theta {:.1} deg, phi {:.1} deg; directivity {:.2} dBi; normalisation {:.4}",
        dir.theta.to_degrees(),
        dir.phi.to_degrees(),
        dir.dbi,
        norm
    ));
    Ok(report)
}

/// Builds the `i`-th configured sequence; also returns the synthesis residual if any.
pub fn build_sequence(cfg: &HarmonicsConfig, seq: &SequenceConfig) -> Result<(CodingSequence, Option<f64>)> {
    match seq {
        SequenceConfig::Single { m, shift_deg } => {
            let base = synthesize_single_harmonic(*m, cfg.steps)?;
            let n = shift_for_phase(*shift_deg, cfg.steps)?;
            Ok((phase_shift_harmonic(&base, n), None))
        }
        SequenceConfig::Multi { targets } => {
            let t: Vec<(i32, Complex64)> = targets.iter().map(|&(m, w)| (m, Complex64::new(w, 0.0))).collect();
            let r = synthesize_multi_harmonic(&t, cfg.steps, cfg.seed)?;
            Ok((r.sequence, Some(r.residual)))
        }
        SequenceConfig::Phases { phases_deg } => {
            let p: Vec<f64> = phases_deg.iter().map(|d| d.to_radians()).collect();
            Ok((CodingSequence::from_phases(&p)?, None))
        }
    }
}

fn execute_harmonics(cfg: &HarmonicsConfig, name: &str, out_dir: &Path) -> Result<Report> {
    cfg.validate()?;
    let m_max = cfg.m_max.unwrap_or(cfg.steps as i32);
    if m_max < 0 {
        return Err(Error::Config("m_max must be non-negative".into()));
    }
    let mut report = Report::default();
    let mut first = None;
    for (i, s) in cfg.sequences.iter().enumerate() {
        let (seq, residual) = build_sequence(cfg, s)?;
        let spectrum = harmonic_coefficients(&seq, -m_max..=m_max);
        write_with(out_dir, &format!("{name}_sequence_{i}.csv"), &mut report, |w| seq.write_csv(w))?;
        write_with(out_dir, &format!("{name}_spectrum_{i}.csv"), &mut report, |w| spectrum.write_csv(w))?;
        let m = spectrum.dominant();
        let a = spectrum.get(m);
        let mut line = format!(
            "sequence {i}: dominant m = {m}, |a| = {:.5}, arg = {:.2} deg",
            a.norm(),
            a.arg().to_degrees()
        );
        if let Some(r) = residual {
            line.push_str(&format!(", residual {r:.4}"));
        }
        report.lines.push(line);
        if first.is_none() {
            first = Some(seq);
        }
    }
    if let (Some(p), Some(seq)) = (&cfg.pattern, first) {
        let geom = p.geometry.build()?;
        let steer = match &p.steering {
            Some(s) => steering_phase(&geom, &s.build(&geom)?),
            None => vec![0.0; geom.nx],
        };
        let sequences: Vec<CodingSequence> = (0..geom.len())
            .map(|e| {
                let rot = Complex64::cis(steer[e / geom.ny]);
                CodingSequence {
                    t0: seq.t0,
                    values: seq.values.iter().map(|v| v * rot).collect(),
                }
            })
            .collect();
        let grid = DirectionGrid::hemisphere(p.grid_step_deg)?;
        for &m in &p.harmonics {
            let field = harmonic_pattern(&sequences, m, &geom, &grid, p.element_exponent)?;
            let (theta, phi, peak) = field.peak();
            write_with(out_dir, &format!("{name}_pattern_m{m}.csv"), &mut report, |w| field.write_csv(w))?;
            report.lines.push(format!(
                "harmonic {m}: peak |f| = {peak:.3} at theta {:.1} deg, phi {:.1} deg",
                theta.to_degrees(),
                phi.to_degrees()
            ));
        }
    }
    Ok(report)
}
