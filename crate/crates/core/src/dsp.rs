//! Shared FFT helpers and the DFT-based Hilbert transform.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Forward DFT of a real sequence zero-padded to `n` points.
pub fn rfft_padded(x: &[f64], n: usize) -> Vec<Complex64> {
    assert!(x.len() <= n, "input longer than transform size");
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// Hilbert transform of `x` computed over an `n`-point DFT (`n >= x.len()`).
///
/// The spectrum is rotated by `-j` on bins `0..n/2` and by `+j` on bins
/// `n/2..n`. For real input the DC and Nyquist bins then map to a purely
/// imaginary residue, which is discarded with the imaginary part of the
/// inverse transform.
pub fn hilbert_transform(x: &[f64], n: usize) -> Vec<f64> {
    let mut spec = rfft_padded(x, n);
    let half = n / 2;
    let minus_j = Complex64::new(0.0, -1.0);
    let plus_j = Complex64::new(0.0, 1.0);
    for (k, bin) in spec.iter_mut().enumerate() {
        *bin *= if k < half { minus_j } else { plus_j };
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    let scale = 1.0 / n as f64;
    spec.iter().take(x.len()).map(|c| c.re * scale).collect()
}

/// Magnitude of the analytic signal, `sqrt(x^2 + H{x}^2)`.
pub fn analytic_envelope(x: &[f64], n: usize) -> Vec<f64> {
    let h = hilbert_transform(x, n);
    x.iter().zip(&h).map(|(a, b)| a.hypot(*b)).collect()
}

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn mean_square(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        energy(x) / x.len() as f64
    }
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Median of a slice (empty input gives NaN).
pub fn median(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Symmetric Hamming taper of length `n`.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let d = (n - 1) as f64;
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / d).cos())
        .collect()
}
