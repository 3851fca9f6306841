//! Regenerates `data/meta_atom_response.csv`.
//!
//! The table is synthetic: a smooth resonant model tuned so that, at
//! R = 0.5 ohm, the capacitance sweep spans 310 deg at 28 GHz, stays above
//! 270 deg over 26.8-30.1 GHz and loses at most 2.1 dB at 28 GHz. Amplitude is
//! set by the series resistance (0.91 .. 0.61 at 28 GHz for R = 0.1 .. 4 ohm),
//! with a deeper absorption notch near 27.3 GHz.
//!
//! ```text
//! cargo run -p risim-core --example gen_response_table > crates/core/data/meta_atom_response.csv
//! ```

use std::io::Write;

const C_CENTER_PF: f64 = 0.3;
const C_WIDTH: f64 = 0.95;

fn tuning_coordinate(c_pf: f64) -> f64 {
    (c_pf / C_CENTER_PF).ln() / C_WIDTH
}

/// Normalised tuning curve, -1 at 0.01 pF and +1 at 1.50 pF.
fn tuning_shape(c_pf: f64) -> f64 {
    let lo = tuning_coordinate(0.01).tanh();
    let hi = tuning_coordinate(1.50).tanh();
    2.0 * (tuning_coordinate(c_pf).tanh() - lo) / (hi - lo) - 1.0
}

fn phase_span_deg(f_ghz: f64) -> f64 {
    let peak = 28.1;
    let curvature = if f_ghz < peak { 22.0 } else { 9.5 };
    310.1 - curvature * (f_ghz - peak).powi(2)
}

/// Worst-case loss at 28 GHz as a function of R (piecewise linear in ln R).
fn loss_28ghz_db(r_ohm: f64) -> f64 {
    let knots = [(0.1f64, 0.82f64), (0.5, 2.1), (4.0, 4.29)];
    let x = r_ohm.ln();
    let (a, b) = if r_ohm <= 0.5 { (knots[0], knots[1]) } else { (knots[1], knots[2]) };
    let t = (x - a.0.ln()) / (b.0.ln() - a.0.ln());
    a.1 + t * (b.1 - a.1)
}

fn notch(f_ghz: f64) -> f64 {
    1.0 + 4.0 * (-((f_ghz - 27.3) / 0.3).powi(2)).exp()
}

fn wrap_deg(x: f64) -> f64 {
    let r = x - 360.0 * ((x + 180.0) / 360.0).floor();
    if r >= 180.0 {
        r - 360.0
    } else {
        r
    }
}

fn main() {
    let freqs: Vec<f64> = (0..=50).map(|i| 26.0 + 0.1 * i as f64).collect();
    let mut caps: Vec<f64> = Vec::new();
    caps.extend((1..=20).map(|i| 0.01 * i as f64));
    caps.extend((1..=40).map(|i| 0.20 + 0.02 * i as f64));
    caps.extend((1..=10).map(|i| 1.00 + 0.05 * i as f64));
    let res = [0.1, 0.5, 1.0, 2.0, 4.0];

    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    writeln!(out, "freq_ghz,c_pf,r_ohm,mag_linear,phase_deg").unwrap();
    for &f in &freqs {
        let centre = 20.0 - 35.0 * (f - 28.0);
        let span = phase_span_deg(f);
        for &c in &caps {
            let phase = centre - 0.5 * span * tuning_shape(c);
            let u = tuning_coordinate(c);
            let bump = 0.25 + 0.75 / u.cosh().powi(2);
            for &r in &res {
                let loss = loss_28ghz_db(r) * notch(f) / notch(28.0) * bump;
                let mag = 10f64.powf(-loss / 20.0);
                writeln!(out, "{f:.1},{c:.2},{r:.1},{mag:.6},{:.4}", wrap_deg(phase)).unwrap();
            }
        }
    }
}
