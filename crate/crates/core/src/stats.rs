//! Small summary statistics shared by the experiment harnesses.

use statrs::statistics::Statistics;

/// Sample mean; NaN for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().mean()
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    values.iter().std_dev()
}

/// `sqrt((s_a^2 + s_b^2) / 2)`, the pooled standard deviation of two equally
/// sized samples.
pub fn pooled_std(a: &[f64], b: &[f64]) -> f64 {
    let (sa, sb) = (sample_std(a), sample_std(b));
    ((sa * sa + sb * sb) / 2.0).sqrt()
}

/// Standard error of the difference of two sample means.
pub fn pooled_standard_error(a: &[f64], b: &[f64]) -> f64 {
    let (sa, sb) = (sample_std(a), sample_std(b));
    (sa * sa / a.len() as f64 + sb * sb / b.len() as f64).sqrt()
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let (num, den) = xs
        .iter()
        .zip(ys)
        .fold((0.0, 0.0), |(num, den), (x, y)| {
            (num + (x - mx) * (y - my), den + (x - mx) * (x - mx))
        });
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| -0.5 * x + 3.0).collect();
        assert!((ols_slope(&xs, &ys) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn std_matches_hand_value() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert!((mean(&v) - 2.5).abs() < 1e-15);
        assert!((sample_std(&v) - (5.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert_eq!(sample_std(&[3.0]), 0.0);
        assert!((pooled_std(&v, &v) - sample_std(&v)).abs() < 1e-15);
    }
}
