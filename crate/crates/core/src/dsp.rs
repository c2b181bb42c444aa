//! Small signal helpers shared by the EMA pipeline and the smoothing layer.

/// Mirror an out-of-range index back into `0..len` without repeating the edge
/// sample (`-1 → 1`, `len → len-2`). Works for offsets larger than `len`.
pub fn reflect_index(i: isize, len: usize) -> usize {
    debug_assert!(len > 0);
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Left padding used by same-length filtering with an `n_taps` kernel.
pub fn left_pad(n_taps: usize) -> usize {
    n_taps / 2
}

/// Same-length filtering with reflect padding:
/// `y[t] = Σ_k taps[k] · x[reflect(t + k - n_taps/2)]`.
pub fn filter_same_reflect(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let len = x.len();
    let pad = left_pad(taps.len()) as isize;
    (0..len)
        .map(|t| {
            taps.iter()
                .enumerate()
                .map(|(k, w)| w * x[reflect_index(t as isize + k as isize - pad, len)])
                .sum()
        })
        .collect()
}

/// Mean of the squared second difference, a roughness measure.
pub fn mean_sq_second_difference(x: &[f64]) -> f64 {
    if x.len() < 3 {
        return 0.0;
    }
    let n = x.len() - 2;
    x.windows(3)
        .map(|w| {
            let d = w[2] - 2.0 * w[1] + w[0];
            d * d
        })
        .sum::<f64>()
        / n as f64
}
