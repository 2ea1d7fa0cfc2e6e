//! Zero-frequency filtering and glottal closure instant (epoch) extraction.

use serde::{Deserialize, Serialize};

use crate::corpus::Utterance;
use crate::error::{Error, Result};

/// Ordered glottal closure instants, in samples at `fs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochTrain {
    indices: Vec<usize>,
    pub fs: u32,
}

impl EpochTrain {
    /// Build a train from strictly increasing indices.
    pub fn new(indices: Vec<usize>, fs: u32) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "epoch indices must be strictly increasing".into(),
            ));
        }
        Ok(EpochTrain { indices, fs })
    }

    pub fn empty(fs: u32) -> Self {
        EpochTrain {
            indices: Vec::new(),
            fs,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Gaps between consecutive epochs, in samples.
    pub fn gaps(&self) -> Vec<usize> {
        self.indices.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Epochs falling in `[start, end)`.
    pub fn restrict(&self, start: usize, end: usize) -> EpochTrain {
        EpochTrain {
            indices: self
                .indices
                .iter()
                .copied()
                .filter(|&i| i >= start && i < end)
                .collect(),
            fs: self.fs,
        }
    }

    pub fn to_ascii(&self) -> String {
        self.indices.iter().map(|i| format!("{i}\n")).collect()
    }

    pub fn from_ascii(text: &str, fs: u32) -> Result<Self> {
        let indices = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad epoch index '{l}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        EpochTrain::new(indices, fs)
    }

    pub fn to_json(&self) -> Result<String> {
        let entries: Vec<EpochJson> = self
            .indices
            .iter()
            .map(|&sample| EpochJson {
                sample,
                seconds: sample as f64 / self.fs as f64,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&entries)?)
    }
}

#[derive(Serialize, Deserialize)]
struct EpochJson {
    sample: usize,
    seconds: f64,
}

/// Which zero crossings of the filtered signal mark epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Polarity {
    /// Negative-to-positive crossings.
    #[default]
    Normal,
    /// Positive-to-negative crossings, for polarity-reversed recordings.
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZffConfig {
    /// Trend window length as a multiple of the average pitch period.
    pub trend_window_periods: f64,
    pub trend_passes: usize,
    pub min_pitch_lag_ms: f64,
    pub max_pitch_lag_ms: f64,
    /// Pitch period assumed when the signal has no usable periodicity.
    pub fallback_period_ms: f64,
}

impl Default for ZffConfig {
    fn default() -> Self {
        ZffConfig {
            trend_window_periods: 1.5,
            trend_passes: 3,
            min_pitch_lag_ms: 2.0,
            max_pitch_lag_ms: 20.0,
            fallback_period_ms: 8.0,
        }
    }
}

/// Trend-removed zero-frequency filter output.
#[derive(Debug, Clone, PartialEq)]
pub struct ZffSignal {
    pub values: Vec<f64>,
    /// Length of the trend-removal window, in samples.
    pub trend_window: usize,
    pub fs: u32,
}

/// Average pitch period in samples, from the autocorrelation peak of the
/// mean-removed signal within the configured lag range.
pub fn estimate_pitch_period(samples: &[f64], fs: u32, cfg: &ZffConfig) -> usize {
    let ms = |v: f64| (v * 1e-3 * fs as f64).round() as usize;
    let fallback = ms(cfg.fallback_period_ms).max(1);
    let lo = ms(cfg.min_pitch_lag_ms).max(1);
    let hi = ms(cfg.max_pitch_lag_ms).min(samples.len().saturating_sub(1));
    if lo >= hi {
        return fallback;
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let x: Vec<f64> = samples.iter().map(|v| v - mean).collect();
    let r0: f64 = x.iter().map(|v| v * v).sum();
    if r0 <= 1e-20 * samples.iter().map(|v| v * v).sum::<f64>() {
        return fallback;
    }
    let mut best = (lo, f64::NEG_INFINITY);
    for lag in lo..=hi {
        let r: f64 = x[lag..].iter().zip(&x).map(|(a, b)| a * b).sum();
        if r > best.1 {
            best = (lag, r);
        }
    }
    if best.1 <= 0.0 {
        fallback
    } else {
        best.0
    }
}

fn resonate(x: &[f64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len());
    let (mut y1, mut y2) = (0.0, 0.0);
    for &v in x {
        let out = 2.0 * y1 - y2 + v;
        y.push(out);
        y2 = y1;
        y1 = out;
    }
    y
}

/// Subtract the centred moving average over `window` samples. Near the
/// edges the average covers only the samples that exist.
pub fn remove_trend(x: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in x {
        acc += v;
        prefix.push(acc);
    }
    (0..x.len())
        .map(|n| {
            let lo = n.saturating_sub(half);
            let hi = (n + half + 1).min(x.len());
            x[n] - (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Difference the signal, pass it through two ideal zero-frequency
/// resonators and remove the trend.
pub fn zff_filter(u: &Utterance, cfg: &ZffConfig) -> Result<ZffSignal> {
    let period = estimate_pitch_period(&u.samples, u.fs, cfg);
    zff_filter_with_period(u, period, cfg)
}

/// As [`zff_filter`], with the average pitch period supplied.
pub fn zff_filter_with_period(u: &Utterance, period: usize, cfg: &ZffConfig) -> Result<ZffSignal> {
    let mut window = ((cfg.trend_window_periods * period as f64).round() as usize).max(3);
    if window.is_multiple_of(2) {
        window += 1;
    }
    let needed = 2 * window + 1;
    if u.len() < needed {
        return Err(Error::TooShort {
            needed,
            actual: u.len(),
        });
    }
    let s = &u.samples;
    let mut diff = Vec::with_capacity(s.len());
    diff.push(0.0);
    diff.extend(s.windows(2).map(|w| w[1] - w[0]));

    let stage1 = remove_trend(&resonate(&diff), window);
    let mut y = resonate(&stage1);
    for _ in 0..cfg.trend_passes {
        y = remove_trend(&y, window);
    }
    Ok(ZffSignal {
        values: y,
        trend_window: window,
        fs: u.fs,
    })
}

/// Zero crossings of the ZFF signal, with one trend window at each end excluded.
/// A signal without crossings yields an empty train.
pub fn detect_epochs(zff: &ZffSignal, polarity: Polarity) -> EpochTrain {
    let v = &zff.values;
    let lo = zff.trend_window.max(1);
    let hi = v.len().saturating_sub(zff.trend_window);
    let indices = (lo..hi)
        .filter(|&n| match polarity {
            Polarity::Normal => v[n - 1] < 0.0 && v[n] >= 0.0,
            Polarity::Reversed => v[n - 1] > 0.0 && v[n] <= 0.0,
        })
        .collect();
    EpochTrain { indices, fs: zff.fs }
}

/// Move each epoch to the largest local maximum of `he` within `±radius`
/// samples. Collisions keep the earlier epoch.
pub fn refine_epochs_to_he_peaks(e: &EpochTrain, he: &[f64], radius: usize) -> EpochTrain {
    let mut out: Vec<usize> = Vec::with_capacity(e.len());
    for &idx in e.indices() {
        let lo = idx.saturating_sub(radius).max(1);
        let hi = (idx + radius).min(he.len().saturating_sub(2));
        let mut best: Option<usize> = None;
        for k in lo..=hi {
            if he[k] >= he[k - 1] && he[k] >= he[k + 1] && best.is_none_or(|b| he[k] > he[b]) {
                best = Some(k);
            }
        }
        let moved = best.unwrap_or(idx);
        if out.last().is_none_or(|&last| moved > last) {
            out.push(moved);
        }
    }
    EpochTrain { indices: out, fs: e.fs }
}

/// Refinement radius for `fs`: 1 ms.
pub fn refine_radius(fs: u32) -> usize {
    (fs as f64 * 1e-3).round() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn utt(samples: Vec<f64>) -> Utterance {
        Utterance::new(samples, 8000).unwrap()
    }

    #[test]
    fn ideal_resonator_response() {
        // |H(w)| = 1 / (4 sin^2(w/2)) evaluated at w = pi
        let w = PI;
        assert!((1.0 / (4.0 * (w / 2.0).sin().powi(2)) - 0.25).abs() < 1e-15);
        // impulse response of 1/(1 - z^-1)^2 is n + 1
        let mut x = vec![0.0; 6];
        x[0] = 1.0;
        assert_eq!(resonate(&x), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn dc_input_filters_to_zero() {
        let z = zff_filter(&utt(vec![0.5; 4000]), &ZffConfig::default()).unwrap();
        let w = z.trend_window;
        assert!(z.values[w..z.values.len() - w].iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn sine_crossings_every_period() {
        let values: Vec<f64> = (0..4000)
            .map(|n| (2.0 * PI * 100.0 * n as f64 / 8000.0).sin())
            .collect();
        let z = ZffSignal {
            values,
            trend_window: 81,
            fs: 8000,
        };
        let e = detect_epochs(&z, Polarity::Normal);
        assert!(!e.is_empty());
        assert!(e.gaps().iter().all(|&g| (79..=81).contains(&g)));
    }

    #[test]
    fn all_positive_gives_empty_train() {
        let z = ZffSignal {
            values: vec![1.0; 1000],
            trend_window: 50,
            fs: 8000,
        };
        assert!(detect_epochs(&z, Polarity::Normal).is_empty());
    }

    #[test]
    fn polarity_duality() {
        let values: Vec<f64> = (0..3000)
            .map(|n| (2.0 * PI * 130.0 * n as f64 / 8000.0).sin() + 0.3 * (2.0 * PI * 390.0 * n as f64 / 8000.0).cos())
            .collect();
        let z = ZffSignal {
            values: values.clone(),
            trend_window: 60,
            fs: 8000,
        };
        let neg = ZffSignal {
            values: values.iter().map(|v| -v).collect(),
            ..z.clone()
        };
        assert_eq!(
            detect_epochs(&neg, Polarity::Normal),
            detect_epochs(&z, Polarity::Reversed)
        );
    }

    #[test]
    fn zff_is_linear() {
        let s: Vec<f64> = (0..4000).map(|n| ((n * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let cfg = ZffConfig::default();
        let a = zff_filter_with_period(&utt(s.clone()), 60, &cfg).unwrap();
        let b = zff_filter_with_period(&utt(s.iter().map(|v| 3.5 * v).collect()), 60, &cfg).unwrap();
        let scale = a.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((3.5 * x - y).abs() <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn too_short_for_window() {
        let r = zff_filter_with_period(&utt(vec![0.1; 50]), 80, &ZffConfig::default());
        assert!(matches!(r, Err(Error::TooShort { .. })));
    }

    #[test]
    fn pitch_estimate_for_pulse_train() {
        let mut s = vec![0.0; 8000];
        for k in (0..8000).step_by(64) {
            s[k] = -1.0;
            if k + 1 < 8000 {
                s[k + 1] = -0.5;
            }
        }
        assert_eq!(estimate_pitch_period(&s, 8000, &ZffConfig::default()), 64);
        assert_eq!(estimate_pitch_period(&[0.3; 500], 8000, &ZffConfig::default()), 64);
    }

    #[test]
    fn refine_fixed_point_and_shift() {
        let mut he = vec![0.0; 400];
        for &p in &[50usize, 130, 210, 290] {
            he[p] = 1.0;
            he[p - 1] = 0.5;
            he[p + 1] = 0.5;
        }
        let e = EpochTrain::new(vec![50, 130, 210, 290], 8000).unwrap();
        assert_eq!(refine_epochs_to_he_peaks(&e, &he, 8), e);
        let off = EpochTrain::new(vec![47, 130, 210, 290], 8000).unwrap();
        assert_eq!(refine_epochs_to_he_peaks(&off, &he, 8).indices()[0], 50);
    }

    #[test]
    fn refine_drops_collisions() {
        let mut he = vec![0.0; 200];
        he[100] = 1.0;
        let e = EpochTrain::new(vec![96, 103], 8000).unwrap();
        assert_eq!(refine_epochs_to_he_peaks(&e, &he, 8).indices(), &[100]);
    }

    #[test]
    fn train_validation_and_export() {
        assert!(EpochTrain::new(vec![3, 3], 8000).is_err());
        let e = EpochTrain::new(vec![80, 160], 8000).unwrap();
        assert_eq!(e.to_ascii(), "80\n160\n");
        assert_eq!(EpochTrain::from_ascii("80\n160\n", 8000).unwrap(), e);
        let json: serde_json::Value = serde_json::from_str(&e.to_json().unwrap()).unwrap();
        assert_eq!(json[1]["sample"], 160);
        assert_eq!(json[1]["seconds"], 0.02);
        assert_eq!(e.restrict(100, 200).indices(), &[160]);
    }
}
