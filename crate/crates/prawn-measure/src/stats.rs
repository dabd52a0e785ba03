//! Order statistics shared by ranging, tracking, and analytics.

/// Median of a slice (not required to be sorted). NaN for empty input.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    median_sorted(&sorted)
}

pub fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Linear-interpolation quantile over sorted data (the R-7 convention):
/// h = (n - 1) p, interpolate between the straddling order statistics.
pub fn quantile_r7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0 && (0.0..=1.0).contains(&p));
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[n - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_of_one_to_five() {
        // R-7 by hand: h = 4·0.25 = 1 → q1 = 2; h = 2 → median 3; h = 3 → q3 = 4.
        let data = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_r7(&data, 0.25), 2.0);
        assert_eq!(quantile_r7(&data, 0.5), 3.0);
        assert_eq!(quantile_r7(&data, 0.75), 4.0);
    }

    #[test]
    fn quartiles_interpolate() {
        // h = 3·0.25 = 0.75 → 1 + 0.75·1 = 1.75.
        let data = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_r7(&data, 0.25), 1.75);
        assert_eq!(quantile_r7(&data, 0.75), 3.25);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
