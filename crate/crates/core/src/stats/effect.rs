use std::cmp::Ordering;

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Bessel-corrected sample variance (two-pass).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standardized mean difference using the pooled sample standard deviation.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "cohen's d needs at least 2 values per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0);
    if pooled.is_nan() || pooled <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((mean(a) - mean(b)) / pooled.sqrt())
}

/// Probability that a random `pos` value exceeds a random `neg` value, ties
/// counting one half (the Mann-Whitney U statistic over `|pos| * |neg|`).
///
/// Uses mid-ranks in O((p + n) log(p + n)). Doubled ranks keep every
/// intermediate an exact integer.
pub fn auroc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() {
        return Err(Error::Empty("positive sample"));
    }
    if neg.is_empty() {
        return Err(Error::Empty("negative sample"));
    }
    if pos.iter().chain(neg).any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("NaN in AUROC input".into()));
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&v| (v, true))
        .chain(neg.iter().map(|&v| (v, false)))
        .collect();
    all.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

    // Sum over positives of 2 * mid-rank (1-based).
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < all.len() {
        let mut end = start + 1;
        while end < all.len() && all[end].0 == all[start].0 {
            end += 1;
        }
        let doubled_mid = (start + 1 + end) as u128;
        let positives = all[start..end].iter().filter(|e| e.1).count() as u128;
        doubled_rank_sum += doubled_mid * positives;
        start = end;
    }
    let p = pos.len() as u128;
    let doubled_u = doubled_rank_sum - p * (p + 1);
    let pairs = 2 * p * neg.len() as u128;
    Ok(doubled_u as f64 / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cohens_d_worked_example() {
        assert_eq!(cohens_d(&[3.0, 4.0, 5.0], &[1.0, 2.0, 3.0]).unwrap(), 2.0);
    }

    #[test]
    fn cohens_d_same_sample_is_zero() {
        let a = [1.0, 5.0, 2.5, 9.0];
        assert_eq!(cohens_d(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn cohens_d_errors() {
        assert!(matches!(cohens_d(&[1.0, 1.0], &[1.0, 1.0]), Err(Error::ZeroVariance)));
        assert!(cohens_d(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[3.0, 4.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(auroc(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.5);
        assert_eq!(auroc(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 0.0);
        assert_eq!(auroc(&[2.0], &[1.0, 2.0, 3.0]).unwrap(), 0.5);
    }

    #[test]
    fn auroc_empty() {
        assert!(matches!(auroc(&[], &[1.0]), Err(Error::Empty(_))));
        assert!(matches!(auroc(&[1.0], &[]), Err(Error::Empty(_))));
    }
}
