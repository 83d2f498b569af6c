//! Exact binomial coefficients from a Pascal table.

use std::sync::LazyLock;

use crate::error::{Error, Result};

/// Largest row of the exact table. `C(128, 64)` still fits in a `u128`.
pub const MAX_BINOM_INDEX: u64 = 128;

static PASCAL: LazyLock<Vec<Vec<u128>>> = LazyLock::new(|| {
    let rows = MAX_BINOM_INDEX as usize + 1;
    let mut table: Vec<Vec<u128>> = Vec::with_capacity(rows);
    for n in 0..rows {
        let mut row = vec![1u128; n + 1];
        for k in 1..n {
            row[k] = table[n - 1][k - 1] + table[n - 1][k];
        }
        table.push(row);
    }
    table
});

/// `C(n, k)` with the convention `C(n, k) = 0` for `k < 0`, `k > n` or `n < 0`.
pub fn binom(n: i64, k: i64) -> Result<u128> {
    if n < 0 || k < 0 || k > n {
        return Ok(0);
    }
    if n as u64 > MAX_BINOM_INDEX {
        return Err(Error::BinomialOverflow {
            index: n as u64,
            limit: MAX_BINOM_INDEX,
        });
    }
    Ok(PASCAL[n as usize][k as usize])
}

/// [`binom`] converted to `f64` (rounded above 2^53).
pub fn binom_f64(n: i64, k: i64) -> Result<f64> {
    binom(n, k).map(|b| b as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rows() {
        assert_eq!(binom(4, 2).unwrap(), 6);
        assert_eq!(binom(0, 0).unwrap(), 1);
        assert_eq!(binom(3, 5).unwrap(), 0);
        assert_eq!(binom(3, -1).unwrap(), 0);
        assert_eq!(binom(-2, 0).unwrap(), 0);
    }

    #[test]
    fn largest_rows_are_exact() {
        let total: u128 = (0..=127).map(|k| binom(127, k).unwrap()).sum();
        assert_eq!(total, 1u128 << 127);
        assert_eq!(binom(128, 64).unwrap(), 2 * binom(127, 63).unwrap());
    }

    #[test]
    fn beyond_table_is_rejected() {
        assert!(matches!(
            binom(129, 3),
            Err(Error::BinomialOverflow { index: 129, .. })
        ));
    }
}
