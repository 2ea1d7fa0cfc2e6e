//! Excitation-source evidence: LP residual, its Hilbert envelope, and the
//! peak-to-sidelobe ratio around each epoch.

use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::epoch::EpochTrain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpFrameConfig {
    pub frame_ms: f64,
    pub shift_ms: f64,
    pub order: usize,
    pub fs: u32,
}

impl Default for LpFrameConfig {
    fn default() -> Self {
        LpFrameConfig {
            frame_ms: 25.0,
            shift_ms: 5.0,
            order: 10,
            fs: 8000,
        }
    }
}

impl LpFrameConfig {
    pub fn frame_len(&self) -> usize {
        (self.frame_ms * 1e-3 * self.fs as f64).round() as usize
    }

    pub fn shift_len(&self) -> usize {
        (self.shift_ms * 1e-3 * self.fs as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let (frame, shift) = (self.frame_len(), self.shift_len());
        if shift == 0 || shift > frame {
            return Err(Error::InvalidArgument(format!(
                "LP shift {shift} must be in 1..={frame}"
            )));
        }
        if self.order >= frame {
            return Err(Error::InvalidArgument(format!(
                "LP order {} must be below frame length {frame}",
                self.order
            )));
        }
        Ok(())
    }
}

/// Hamming-tapered autocorrelation LP via Levinson-Durbin.
///
/// Returns predictor coefficients `a` with `s[n] ≈ Σ a[k] s[n-1-k]`. Frames
/// without AC content (silent or constant) are rejected as singular.
pub fn lp_coefficients(frame: &[f64], order: usize) -> Result<Vec<f64>> {
    if order == 0 {
        return Ok(Vec::new());
    }
    if frame.len() <= order {
        return Err(Error::TooShort {
            needed: order + 1,
            actual: frame.len(),
        });
    }
    let mean = dsp::mean(frame);
    let spread = frame.iter().fold(0.0_f64, |m, v| m.max((v - mean).abs()));
    if spread <= 1e-12 * dsp::max_abs(frame) {
        return Err(Error::SingularAutocorrelation);
    }
    let win = dsp::hamming(frame.len());
    let x: Vec<f64> = frame.iter().zip(&win).map(|(s, w)| s * w).collect();
    let r: Vec<f64> = (0..=order)
        .map(|lag| x[lag..].iter().zip(&x).map(|(a, b)| a * b).sum())
        .collect();
    levinson_durbin(&r, order)
}

/// Solve the normal equations for autocorrelation `r[0..=order]`.
pub fn levinson_durbin(r: &[f64], order: usize) -> Result<Vec<f64>> {
    if r[0] <= 0.0 {
        return Err(Error::SingularAutocorrelation);
    }
    let mut a = vec![0.0; order];
    let mut prev = vec![0.0; order];
    let mut err = r[0];
    for i in 0..order {
        let mut acc = r[i + 1];
        for j in 0..i {
            acc -= a[j] * r[i - j];
        }
        let k = acc / err;
        if !k.is_finite() || k.abs() >= 1.0 {
            return Err(Error::SingularAutocorrelation);
        }
        prev[..i].copy_from_slice(&a[..i]);
        a[i] = k;
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        err *= 1.0 - k * k;
        if err <= r[0] * 1e-14 {
            return Err(Error::SingularAutocorrelation);
        }
    }
    Ok(a)
}

fn inverse_filter_at(s: &[f64], n: usize, a: &[f64]) -> f64 {
    let mut e = s[n];
    for (k, c) in a.iter().enumerate() {
        if n > k {
            e -= c * s[n - 1 - k];
        }
    }
    e
}

/// LP residual with per-frame coefficients. Between the centres of
/// consecutive frames the two frames' residuals are cross-faded linearly;
/// before the first and after the last centre a single frame applies.
/// Singular frames pass the signal through unfiltered.
pub fn lp_residual(samples: &[f64], cfg: &LpFrameConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = samples.len();
    if cfg.order == 0 || n == 0 {
        return Ok(samples.to_vec());
    }
    let frame = cfg.frame_len().min(n);
    let shift = cfg.shift_len();
    if frame <= cfg.order {
        return Err(Error::TooShort {
            needed: cfg.order + 1,
            actual: n,
        });
    }
    let starts: Vec<usize> = (0..).map(|j| j * shift).take_while(|&s| s + frame <= n).collect();
    let coeffs: Vec<Vec<f64>> = starts
        .iter()
        .map(|&s| lp_coefficients(&samples[s..s + frame], cfg.order).unwrap_or_default())
        .collect();
    let centre = |j: usize| starts[j] + frame / 2;
    let last = starts.len() - 1;

    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        while j < last && centre(j + 1) <= i {
            j += 1;
        }
        let e = if i <= centre(0) || j == last {
            inverse_filter_at(samples, i, &coeffs[j])
        } else {
            let t = (i - centre(j)) as f64 / (centre(j + 1) - centre(j)) as f64;
            let e0 = inverse_filter_at(samples, i, &coeffs[j]);
            let e1 = inverse_filter_at(samples, i, &coeffs[j + 1]);
            (1.0 - t) * e0 + t * e1
        };
        out.push(e);
    }
    Ok(out)
}

/// Nonnegative Hilbert envelope of a residual.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertEnvelope {
    pub values: Vec<f64>,
    pub fs: u32,
}

/// `sqrt(e^2 + e_h^2)` with the transform taken over the next power of two.
pub fn hilbert_envelope(e: &[f64], fs: u32) -> HilbertEnvelope {
    HilbertEnvelope {
        values: dsp::analytic_envelope(e, dsp::next_pow2(e.len())),
        fs,
    }
}

/// Which samples of the 3 ms segment form the sidelobe mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SidelobeRegion {
    /// The final millisecond (about +0.5 to +1.5 ms after the epoch).
    #[default]
    Trailing,
    /// First and last millisecond pooled.
    BothOuter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoeConfig {
    pub half_span_ms: f64,
    pub sidelobe_ms: f64,
    pub region: SidelobeRegion,
    /// Value reported when the sidelobe mean is zero.
    pub cap: f64,
}

impl Default for SoeConfig {
    fn default() -> Self {
        SoeConfig {
            half_span_ms: 1.5,
            sidelobe_ms: 1.0,
            region: SidelobeRegion::Trailing,
            cap: 1e3,
        }
    }
}

/// Peak-to-sidelobe outcome for one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SoeValue {
    Value(f64),
    /// The sidelobe mean was zero; holds the capped value.
    Capped(f64),
    OutOfBounds,
}

impl SoeValue {
    pub fn value(self) -> Option<f64> {
        match self {
            SoeValue::Value(v) | SoeValue::Capped(v) => Some(v),
            SoeValue::OutOfBounds => None,
        }
    }
}

/// `P / mu` for one epoch of the envelope.
pub fn soe_at(he: &[f64], epoch: usize, fs: u32, cfg: &SoeConfig) -> SoeValue {
    let half = (cfg.half_span_ms * 1e-3 * fs as f64).round() as usize;
    let tail = ((cfg.sidelobe_ms * 1e-3 * fs as f64).round() as usize).clamp(1, half);
    if epoch < half || epoch + half >= he.len() {
        return SoeValue::OutOfBounds;
    }
    let seg = &he[epoch - half..=epoch + half];
    let peak = seg.iter().fold(0.0_f64, |m, &v| m.max(v));
    if peak <= 0.0 {
        return SoeValue::Capped(cfg.cap);
    }
    let p = seg[half] / peak;
    let sum: f64 = match cfg.region {
        SidelobeRegion::Trailing => seg[seg.len() - tail..].iter().sum(),
        SidelobeRegion::BothOuter => seg[..tail].iter().sum::<f64>() + seg[seg.len() - tail..].iter().sum::<f64>(),
    };
    let count = match cfg.region {
        SidelobeRegion::Trailing => tail,
        SidelobeRegion::BothOuter => 2 * tail,
    };
    let mu = sum / peak / count as f64;
    if mu <= 0.0 {
        SoeValue::Capped(cfg.cap)
    } else {
        SoeValue::Value((p / mu).min(cfg.cap))
    }
}

/// Raw f6 for every epoch.
pub fn soe_f6(he: &HilbertEnvelope, epochs: &EpochTrain, cfg: &SoeConfig) -> Vec<SoeValue> {
    epochs
        .indices()
        .iter()
        .map(|&e| soe_at(&he.values, e, he.fs, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    #[test]
    fn ar2_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = vec![0.0; 10_000];
        for n in 2..x.len() {
            let w: f64 = StandardNormal.sample(&mut rng);
            x[n] = 1.2 * x[n - 1] - 0.72 * x[n - 2] + w;
        }
        let a = lp_coefficients(&x, 2).unwrap();
        assert!((a[0] - 1.2).abs() < 0.05 && (a[1] + 0.72).abs() < 0.05, "{a:?}");
    }

    #[test]
    fn degenerate_frames() {
        assert!(matches!(
            lp_coefficients(&[0.7; 200], 10),
            Err(Error::SingularAutocorrelation)
        ));
        assert!(matches!(
            lp_coefficients(&[0.0; 200], 10),
            Err(Error::SingularAutocorrelation)
        ));
        assert!(lp_coefficients(&[0.3; 50], 0).unwrap().is_empty());
        let s: Vec<f64> = (0..300).map(|n| (n as f64 * 0.3).sin()).collect();
        let cfg = LpFrameConfig {
            order: 0,
            ..Default::default()
        };
        assert_eq!(lp_residual(&s, &cfg).unwrap(), s);
    }

    #[test]
    fn reflection_coefficients_bounded() {
        let s: Vec<f64> = (0..200)
            .map(|n| (n as f64 * 0.4).sin() + 0.5 * (n as f64 * 1.3).cos() + 0.01 * ((n * 37 % 11) as f64))
            .collect();
        let a = lp_coefficients(&s, 10).unwrap();
        // step-down recursion recovers reflection coefficients
        let mut cur = a.clone();
        for m in (0..cur.len()).rev() {
            let k = cur[m];
            assert!(k.abs() < 1.0);
            let prev: Vec<f64> = (0..m).map(|j| (cur[j] + k * cur[m - 1 - j]) / (1.0 - k * k)).collect();
            cur = prev;
        }
    }

    #[test]
    fn residual_of_silence_is_silent() {
        let r = lp_residual(&vec![0.0; 1000], &LpFrameConfig::default()).unwrap();
        assert_eq!(r.len(), 1000);
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cosine_envelope() {
        let e: Vec<f64> = (0..8000)
            .map(|n| (2.0 * PI * 500.0 * n as f64 / 8000.0).cos())
            .collect();
        let he = hilbert_envelope(&e, 8000);
        let guard = 400;
        let worst = he.values[guard..8000 - guard]
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "{worst}");
        let flipped: Vec<f64> = e.iter().map(|v| -v).collect();
        assert_eq!(hilbert_envelope(&flipped, 8000).values, he.values);
        assert!(hilbert_envelope(&[0.0; 10], 8000).values.iter().all(|&v| v == 0.0));
        assert!(he.values.iter().zip(&e).all(|(h, x)| *h >= x.abs() - 1e-12));
    }

    #[test]
    fn soe_arithmetic() {
        let cfg = SoeConfig::default();
        // 25-sample segment at 8 kHz: centre 12, last 8 samples the tail
        let mut he = vec![0.2; 25];
        he[12] = 1.0;
        assert!((soe_at(&he, 12, 8000, &cfg).value().unwrap() - 5.0).abs() < 1e-12);
        let flat = vec![0.4; 25];
        assert!((soe_at(&flat, 12, 8000, &cfg).value().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(soe_at(&he, 5, 8000, &cfg), SoeValue::OutOfBounds);
        assert_eq!(soe_at(&he, 13, 8000, &cfg), SoeValue::OutOfBounds);
        let mut spike = vec![0.0; 25];
        spike[12] = 1.0;
        assert_eq!(soe_at(&spike, 12, 8000, &cfg), SoeValue::Capped(1e3));
    }

    #[test]
    fn soe_both_outer_region() {
        let cfg = SoeConfig {
            region: SidelobeRegion::BothOuter,
            ..Default::default()
        };
        let mut he = vec![0.0; 25];
        he[..8].iter_mut().for_each(|v| *v = 0.1);
        he[17..].iter_mut().for_each(|v| *v = 0.3);
        he[12] = 1.0;
        assert!((soe_at(&he, 12, 8000, &cfg).value().unwrap() - 5.0).abs() < 1e-12);
    }
}
