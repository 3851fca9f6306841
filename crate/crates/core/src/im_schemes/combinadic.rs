//! Combinatorial number system in colexicographic order:
//! `rank({c_1 < ... < c_k}) = sum_i C(c_i, i)`.

use crate::math::binomial;
use crate::{Error, Result};

pub fn rank(subset: &[usize]) -> u64 {
    subset
        .iter()
        .enumerate()
        .map(|(i, &c)| binomial(c, i + 1))
        .sum()
}

/// Sorted `k`-subset of `0..n` with the given rank.
pub fn unrank(mut r: u64, n: usize, k: usize) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::Config(format!("cannot choose {k} of {n}")));
    }
    if r >= binomial(n, k) {
        return Err(Error::InvalidCodeword(format!("rank {r} is not below C({n}, {k})")));
    }
    let mut out = vec![0; k];
    let mut top = n;
    for i in (1..=k).rev() {
        let mut c = top - 1;
        while binomial(c, i) > r {
            c -= 1;
        }
        out[i - 1] = c;
        r -= binomial(c, i);
        top = c;
    }
    Ok(out)
}

/// Checks that `subset` is a strictly increasing subset of `0..n`.
pub fn validate(subset: &[usize], n: usize) -> Result<()> {
    if subset.windows(2).any(|w| w[0] >= w[1]) || subset.last().is_some_and(|&c| c >= n) {
        return Err(Error::InvalidCodeword(format!(
            "{subset:?} is not an increasing subset of 0..{n}"
        )));
    }
    Ok(())
}
