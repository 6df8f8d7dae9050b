//! Pairwise summation.
//!
//! Every reduction in the crate goes through these helpers so that results
//! do not depend on loop order.

const BASE: usize = 16;

/// Pairwise sum of a slice.
pub fn pairwise(values: &[f64]) -> f64 {
    if values.len() <= BASE {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise(&values[..mid]) + pairwise(&values[mid..])
}

/// Pairwise sum of `term(k)` for `k in 0..n`, without materializing the terms.
pub fn pairwise_by<F: Fn(usize) -> f64>(n: usize, term: F) -> f64 {
    fn go<F: Fn(usize) -> f64>(lo: usize, hi: usize, term: &F) -> f64 {
        if hi - lo <= BASE {
            return (lo..hi).fold(0.0, |acc, k| acc + term(k));
        }
        let mid = lo + (hi - lo) / 2;
        go(lo, mid, term) + go(mid, hi, term)
    }
    go(0, n, &term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|k| k as f64).collect();
        assert_eq!(pairwise(&v), 499_500.0);
        assert_eq!(pairwise_by(1000, |k| k as f64), 499_500.0);
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(pairwise(&[]), 0.0);
        assert_eq!(pairwise_by(0, |_| 1.0), 0.0);
    }

    #[test]
    fn both_forms_agree_bitwise() {
        let v: Vec<f64> = (0..777).map(|k| libm::sin(k as f64 * 0.37)).collect();
        assert_eq!(pairwise(&v), pairwise_by(v.len(), |k| v[k]));
    }
}
