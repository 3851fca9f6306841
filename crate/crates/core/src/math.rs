//! Small numeric helpers shared across modules.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Wraps an angle to the principal branch `[-pi, pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x - TWO_PI * ((x + PI) / TWO_PI).floor();
    if r >= PI {
        r - TWO_PI
    } else if r < -PI {
        r + TWO_PI
    } else {
        r
    }
}

/// Absolute wrapped distance between two angles, in `[0, pi]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// Unnormalised sinc, `sin(x) / x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Binomial coefficient `C(n, k)`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = (u128::from(acc) * (n - i) as u128 / (i + 1) as u128) as u64;
    }
    acc
}

/// `floor(log2(x))` for `x >= 1`.
pub fn floor_log2(x: u64) -> u32 {
    assert!(x >= 1);
    63 - x.leading_zeros()
}

/// Exact `log2` of a power of two, `None` otherwise.
pub fn exact_log2(x: usize) -> Option<u32> {
    (x >= 1 && x.is_power_of_two()).then(|| x.trailing_zeros())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Interprets `bits` (each 0 or 1) as an unsigned integer, most significant bit first.
pub fn bits_to_u64(bits: &[u8]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b & 1))
}

/// Writes the `width` low bits of `value`, most significant first.
pub fn u64_to_bits(value: u64, width: usize) -> Vec<u8> {
    (0..width)
        .rev()
        .map(|i| ((value >> i) & 1) as u8)
        .collect()
}
