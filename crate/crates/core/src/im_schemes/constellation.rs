use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::math::{exact_log2, TWO_PI};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ConstellationKind {
    #[default]
    Psk,
    Qam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labeling {
    Gray,
    /// Label `v` sits at angle `2 pi v / M`.
    Natural,
}

fn gray(i: u64) -> u64 {
    i ^ (i >> 1)
}

/// Unit-average-energy point set indexed by bit label.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn psk(order: usize, labeling: Labeling) -> Result<Self> {
        let bits = order_bits(order)?;
        let mut points = vec![Complex64::default(); order];
        for pos in 0..order as u64 {
            let label = match labeling {
                Labeling::Gray => gray(pos),
                Labeling::Natural => pos,
            };
            points[label as usize] = Complex64::cis(TWO_PI * pos as f64 / order as f64);
        }
        let _ = bits;
        Ok(Self { points })
    }

    /// Square Gray-labelled QAM; the first half of the label drives I, the second Q.
    pub fn qam(order: usize) -> Result<Self> {
        let bits = order_bits(order)?;
        if bits == 0 || bits % 2 != 0 {
            return Err(Error::Config(format!("QAM order must be 4, 16, 64, ...; got {order}")));
        }
        let half = bits / 2;
        let side = 1u64 << half;
        let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let level = |g: u64| {
            let pos = (0..side).find(|&i| gray(i) == g).expect("gray code is a bijection");
            (2.0 * pos as f64 - (side as f64 - 1.0)) / scale
        };
        let mask = side - 1;
        let points = (0..order as u64)
            .map(|v| Complex64::new(level(v >> half), level(v & mask)))
            .collect();
        Ok(Self { points })
    }

    pub fn build(kind: ConstellationKind, order: usize) -> Result<Self> {
        match kind {
            ConstellationKind::Psk => Self::psk(order, Labeling::Gray),
            ConstellationKind::Qam => Self::qam(order),
        }
    }

    pub fn rotated(mut self, angle: f64) -> Self {
        let r = Complex64::cis(angle);
        for p in &mut self.points {
            *p *= r;
        }
        self
    }

    /// PSK rotated so that no point has a zero I or Q part.
    pub fn quadrature_safe_psk(order: usize) -> Result<Self> {
        let c = Self::psk(order, Labeling::Gray)?;
        let angle = if order <= 2 { PI / 4.0 } else { PI / order as f64 };
        Ok(c.rotated(angle))
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits(&self) -> u32 {
        exact_log2(self.points.len()).expect("order is a power of two")
    }

    pub fn point(&self, label: u64) -> Complex64 {
        self.points[label as usize]
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Label of the closest point; lower label wins ties.
    pub fn nearest(&self, z: Complex64) -> u64 {
        let mut best = (0u64, f64::INFINITY);
        for (v, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best.1 {
                best = (v as u64, d);
            }
        }
        best.0
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }
}

fn order_bits(order: usize) -> Result<u32> {
    exact_log2(order).ok_or_else(|| {
        Error::Config(format!("constellation order must be a power of two, got {order}"))
    })
}
