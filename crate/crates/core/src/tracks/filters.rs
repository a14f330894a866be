//! Series filters used on track segments.

/// Consistency constant relating MAD to the standard deviation of a normal
/// distribution.
pub const MAD_SCALE: f64 = 1.4826;

/// Median by selection; `None` for an empty slice. Even lengths average the
/// two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    let n = v.len();
    let mid = n / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        return Some(upper);
    }
    let lower = v[..mid].iter().copied().max_by(f64::total_cmp).expect("mid > 0");
    Some((lower + upper) / 2.0)
}

/// Flags `x[i]` when `|x[i] - median| > threshold * 1.4826 * MAD`.
///
/// Series shorter than 3 are never flagged. When the MAD is zero, only points
/// deviating from the median by more than `zero_mad_floor` are flagged.
pub fn mad_outliers_with_floor(series: &[f64], threshold: f64, zero_mad_floor: f64) -> Vec<bool> {
    if series.len() < 3 {
        return vec![false; series.len()];
    }
    let med = median(series).expect("non-empty");
    let dev: Vec<f64> = series.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&dev).expect("non-empty");
    if mad == 0.0 {
        return dev.iter().map(|&d| d > zero_mad_floor).collect();
    }
    let bound = threshold * MAD_SCALE * mad;
    dev.iter().map(|&d| d > bound).collect()
}

/// [`mad_outliers_with_floor`] with a zero floor.
pub fn mad_outliers(series: &[f64], threshold: f64) -> Vec<bool> {
    mad_outliers_with_floor(series, threshold, 0.0)
}

/// Gaussian-weighted moving average over samples within `window / 2` of each
/// time, with `sigma = window / 5`.
pub fn gaussian_smooth(series: &[f64], times: &[f64], window: f64) -> Vec<f64> {
    gaussian_smooth_sigma(series, times, window, window / 5.0)
}

pub fn gaussian_smooth_sigma(series: &[f64], times: &[f64], window: f64, sigma: f64) -> Vec<f64> {
    assert_eq!(series.len(), times.len(), "series and times differ in length");
    let n = series.len();
    if n < 2 || window <= 0.0 || sigma <= 0.0 {
        return series.to_vec();
    }
    let half = window / 2.0;
    let denom = 2.0 * sigma * sigma;
    let mut out = Vec::with_capacity(n);
    let mut lo = 0;
    let mut hi = 0;
    for i in 0..n {
        let t = times[i];
        while times[lo] < t - half {
            lo += 1;
        }
        while hi + 1 < n && times[hi + 1] <= t + half {
            hi += 1;
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for j in lo..=hi {
            let d = times[j] - t;
            let w = (-(d * d) / denom).exp();
            num += w * series[j];
            den += w;
        }
        // Guards against rounding nudging the mean outside the window range.
        let (mn, mx) = series[lo..=hi]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        out.push((num / den).clamp(mn, mx));
    }
    out
}

/// Central differences inside, one-sided differences at both ends.
pub fn numerical_gradient(series: &[f64], times: &[f64]) -> Vec<f64> {
    assert_eq!(series.len(), times.len(), "series and times differ in length");
    let n = series.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (series[b] - series[a]) / (times[b] - times[a])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
    }

    #[test]
    fn worked_example() {
        let s = [100.0, 102.0, 98.0, 101.0, 99.0, 500.0];
        assert_eq!(mad_outliers(&s, 1.5), vec![false, false, false, false, false, true]);
    }

    #[test]
    fn constant_and_short_series() {
        assert!(mad_outliers(&[7.0; 20], 1.5).iter().all(|f| !f));
        assert_eq!(mad_outliers(&[1.0, 100.0], 1.5), vec![false, false]);
    }

    #[test]
    fn zero_mad_floor() {
        let mut s = vec![1000.0; 10];
        s[3] = 1010.0;
        s[7] = 1100.0;
        let m = mad_outliers_with_floor(&s, 1.5, 25.0);
        assert_eq!(m.iter().filter(|f| **f).count(), 1);
        assert!(m[7]);
    }

    #[test]
    fn smoothing_basics() {
        assert_eq!(gaussian_smooth(&[5.0], &[0.0], 30.0), vec![5.0]);
        let t: Vec<f64> = (0..50).map(f64::from).collect();
        let out = gaussian_smooth(&[3.25; 50], &t, 30.0);
        assert!(out.iter().all(|v| (v - 3.25).abs() <= 1e-12));
    }

    #[test]
    fn three_sample_direct_sum() {
        let x = [0.0, 10.0, 20.0];
        let t = [0.0, 10.0, 20.0];
        let out = gaussian_smooth(&x, &t, 30.0);
        // sigma 6: neighbours 10 s away weigh exp(-100/72) each, symmetric.
        let w = (-100.0f64 / 72.0).exp();
        let expected_mid = (w * 0.0 + 10.0 + w * 20.0) / (1.0 + 2.0 * w);
        assert!((out[1] - expected_mid).abs() < 1e-12);
        let expected_first = (0.0 + w * 10.0) / (1.0 + w);
        assert!((out[0] - expected_first).abs() < 1e-12);
    }

    #[test]
    fn gradients() {
        let t = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(numerical_gradient(&[4.0; 4], &t), vec![0.0; 4]);
        let lin: Vec<f64> = t.iter().map(|v| 10.0 * v).collect();
        assert_eq!(numerical_gradient(&lin, &t), vec![10.0; 4]);
        let sq: Vec<f64> = t.iter().map(|v| v * v).collect();
        let g = numerical_gradient(&sq, &t);
        assert_eq!(g[1], 2.0);
        assert_eq!(g[2], 4.0);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[3], 5.0);
    }
}
