//! Zero-time windowing and the Hilbert envelope of the numerator of the
//! group-delay function (HNGD spectrum).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dsp;
use crate::error::{Error, Result};

/// Heavily tapering window `w[0] = 0`, `w[n] = 1 / (4 sin^2(pi n / 2N))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZtwWindow {
    weights: Vec<f64>,
}

impl ZtwWindow {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::WindowTooSmall(n));
        }
        let weights = (0..n)
            .map(|i| {
                if i == 0 {
                    0.0
                } else {
                    let s = (PI * i as f64 / (2.0 * n as f64)).sin();
                    1.0 / (4.0 * s * s)
                }
            })
            .collect();
        Ok(ZtwWindow { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn make_ztw_window(n: usize) -> Result<ZtwWindow> {
    ZtwWindow::new(n)
}

/// `4 cos^2(pi n / 2N)`, applied on top of the ZTW window to suppress the
/// ripple from truncating the segment at `n = N - 1`.
pub fn truncation_taper(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 4.0 * (PI * i as f64 / (2.0 * n as f64)).cos().powi(2))
        .collect()
}

/// Multiply a windowed segment by [`truncation_taper`].
pub fn apply_taper(x: &[f64]) -> Vec<f64> {
    x.iter().zip(truncation_taper(x.len())).map(|(v, t)| v * t).collect()
}

/// `s[epoch..epoch + N]` multiplied by the window.
pub fn window_segment(samples: &[f64], epoch: usize, window: &ZtwWindow) -> Result<Vec<f64>> {
    let n = window.len();
    if epoch + n > samples.len() {
        return Err(Error::SegmentOutOfBounds {
            epoch,
            len: n,
            end: samples.len(),
        });
    }
    Ok(samples[epoch..epoch + n]
        .iter()
        .zip(window.weights())
        .map(|(s, w)| s * w)
        .collect())
}

/// NGD `g(w) = X_R Y_R + X_I Y_I` over all `nfft` bins, with `Y` the DFT of `n x[n]`.
pub fn ngd_spectrum(x: &[f64], nfft: usize) -> Vec<f64> {
    let y: Vec<f64> = x.iter().enumerate().map(|(n, v)| n as f64 * v).collect();
    let xs = dsp::rfft_padded(x, nfft);
    let ys = dsp::rfft_padded(&y, nfft);
    xs.iter().zip(&ys).map(|(a, b)| a.re * b.re + a.im * b.im).collect()
}

/// Negated second difference across bins; endpoints copy their neighbours.
pub fn dngd(g: &[f64]) -> Vec<f64> {
    let n = g.len();
    assert!(n >= 3, "dngd needs at least three bins");
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        d[k] = -(g[k + 1] - 2.0 * g[k] + g[k - 1]);
    }
    d[0] = d[1];
    d[n - 1] = d[n - 2];
    d
}

/// Analytic-signal magnitude of `d`, with a DFT the size of `d`.
pub fn envelope_of_sequence(d: &[f64]) -> Vec<f64> {
    dsp::analytic_envelope(d, d.len())
}

/// HNGD magnitudes over bins `0..=nfft/2` for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct HngdSpectrum {
    pub magnitudes: Vec<f64>,
    pub fs: u32,
    pub nfft: usize,
    pub epoch_index: usize,
}

impl HngdSpectrum {
    pub fn bin_hz(&self) -> f64 {
        self.fs as f64 / self.nfft as f64
    }

    pub fn freq_of(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz()
    }

    pub fn bin_of(&self, hz: f64) -> usize {
        ((hz / self.bin_hz()).round() as usize).min(self.magnitudes.len() - 1)
    }

    pub fn argmax(&self) -> usize {
        self.magnitudes
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
            .0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HngdConfig {
    /// Window length in milliseconds.
    pub window_ms: f64,
    pub nfft: usize,
    /// Apply [`truncation_taper`] after the ZTW window.
    pub taper: bool,
}

impl Default for HngdConfig {
    fn default() -> Self {
        HngdConfig {
            window_ms: 5.0,
            nfft: 2048,
            taper: true,
        }
    }
}

/// Precomputed window and FFT plans, shared read-only across epochs.
#[derive(Clone)]
pub struct HngdAnalyzer {
    window: ZtwWindow,
    effective: Vec<f64>,
    nfft: usize,
    fs: u32,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for HngdAnalyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HngdAnalyzer")
            .field("window_len", &self.window.len())
            .field("nfft", &self.nfft)
            .field("fs", &self.fs)
            .finish()
    }
}

impl HngdAnalyzer {
    pub fn new(fs: u32, cfg: &HngdConfig) -> Result<Self> {
        let n = (cfg.window_ms * 1e-3 * fs as f64).round() as usize;
        let window = ZtwWindow::new(n)?;
        if cfg.nfft < n || cfg.nfft < 4 {
            return Err(Error::InvalidArgument(format!(
                "nfft {} shorter than window {n}",
                cfg.nfft
            )));
        }
        let effective = if cfg.taper {
            apply_taper(window.weights())
        } else {
            window.weights().to_vec()
        };
        let mut planner = FftPlanner::new();
        Ok(HngdAnalyzer {
            effective,
            forward: planner.plan_fft_forward(cfg.nfft),
            inverse: planner.plan_fft_inverse(cfg.nfft),
            window,
            nfft: cfg.nfft,
            fs,
        })
    }

    pub fn window(&self) -> &ZtwWindow {
        &self.window
    }

    pub fn nfft(&self) -> usize {
        self.nfft
    }

    fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        buf.resize(self.nfft, Complex64::new(0.0, 0.0));
        self.forward.process(&mut buf);
        buf
    }

    fn envelope(&self, d: &[f64]) -> Vec<f64> {
        let mut spec = self.forward(d);
        let half = self.nfft / 2;
        for (k, bin) in spec.iter_mut().enumerate() {
            *bin *= if k < half {
                Complex64::new(0.0, -1.0)
            } else {
                Complex64::new(0.0, 1.0)
            };
        }
        self.inverse.process(&mut spec);
        let scale = 1.0 / self.nfft as f64;
        d.iter().zip(&spec).map(|(a, h)| a.hypot(h.re * scale)).collect()
    }

    /// Window, NGD, DNGD and envelope for the segment starting at `epoch`.
    pub fn spectrum_at(&self, samples: &[f64], epoch: usize) -> Result<HngdSpectrum> {
        let n = self.effective.len();
        if epoch + n > samples.len() {
            return Err(Error::SegmentOutOfBounds {
                epoch,
                len: n,
                end: samples.len(),
            });
        }
        let x: Vec<f64> = samples[epoch..epoch + n]
            .iter()
            .zip(&self.effective)
            .map(|(s, w)| s * w)
            .collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(n, v)| n as f64 * v).collect();
        let xs = self.forward(&x);
        let ys = self.forward(&y);
        let g: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| a.re * b.re + a.im * b.im).collect();
        let env = self.envelope(&dngd(&g));
        Ok(HngdSpectrum {
            magnitudes: env[..=self.nfft / 2].to_vec(),
            fs: self.fs,
            nfft: self.nfft,
            epoch_index: epoch,
        })
    }
}

/// One-shot HNGD at an epoch with the default 5 ms window and 2048-point DFT.
pub fn hngd_at_epoch(samples: &[f64], fs: u32, epoch: usize) -> Result<HngdSpectrum> {
    HngdAnalyzer::new(fs, &HngdConfig::default())?.spectrum_at(samples, epoch)
}

/// CSV rows `epoch_sample,bin_hz,magnitude` with a header line.
pub fn spectra_to_csv(spectra: &[HngdSpectrum]) -> String {
    let mut out = String::from("epoch_sample,bin_hz,magnitude\n");
    for s in spectra {
        for (k, m) in s.magnitudes.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", s.epoch_index, s.freq_of(k), m);
        }
    }
    out
}

const DUMP_MAGIC: &[u8; 4] = b"HNGD";
const DUMP_VERSION: u32 = 1;

/// Binary columnar dump, little endian: magic `HNGD`, u32 version, u32 fs,
/// u32 nfft, u32 count, `count` u64 epoch indices, then `count` blocks of
/// `nfft/2 + 1` f64 magnitudes.
pub fn write_spectra_binary(w: &mut impl Write, spectra: &[HngdSpectrum]) -> Result<()> {
    let (fs, nfft) = spectra.first().map_or((0, 0), |s| (s.fs, s.nfft));
    if spectra.iter().any(|s| s.fs != fs || s.nfft != nfft) {
        return Err(Error::InvalidArgument("spectra differ in fs or nfft".into()));
    }
    let io_err = |e: io::Error| Error::io("<hngd dump>", e);
    let mut buf = Vec::new();
    buf.extend_from_slice(DUMP_MAGIC);
    for v in [DUMP_VERSION, fs, nfft as u32, spectra.len() as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for s in spectra {
        buf.extend_from_slice(&(s.epoch_index as u64).to_le_bytes());
    }
    for s in spectra {
        for m in &s.magnitudes {
            buf.extend_from_slice(&m.to_le_bytes());
        }
    }
    w.write_all(&buf).map_err(io_err)
}

pub fn read_spectra_binary(r: &mut impl Read) -> Result<Vec<HngdSpectrum>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io("<hngd dump>", e))?;
    let bad = || Error::UnsupportedFormat("truncated or invalid HNGD dump".into());
    if bytes.len() < 20 || &bytes[..4] != DUMP_MAGIC {
        return Err(bad());
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    if u32_at(4) != DUMP_VERSION {
        return Err(bad());
    }
    let fs = u32_at(8);
    let nfft = u32_at(12) as usize;
    let count = u32_at(16) as usize;
    let bins = nfft / 2 + 1;
    let need = 20 + count * 8 + count * bins * 8;
    if bytes.len() != need {
        return Err(bad());
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let o = 20 + i * 8;
        let epoch = u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
        let base = 20 + count * 8 + i * bins * 8;
        let magnitudes = (0..bins)
            .map(|k| f64::from_le_bytes(bytes[base + k * 8..base + k * 8 + 8].try_into().unwrap()))
            .collect();
        out.push(HngdSpectrum {
            magnitudes,
            fs,
            nfft,
            epoch_index: epoch,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form(n: usize, i: usize) -> f64 {
        1.0 / (4.0 * (PI * i as f64 / (2.0 * n as f64)).sin().powi(2))
    }

    #[test]
    fn window_n4_values() {
        let w = make_ztw_window(4).unwrap();
        let want = [0.0, 1.7071067811865475, 0.5, 0.2928932188134524];
        for (a, b) in w.weights().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(make_ztw_window(3).is_err());
    }

    #[test]
    fn window_n40_first_weight() {
        let w = make_ztw_window(40).unwrap();
        assert!((w.weights()[1] - 162.197_252_869).abs() < 1e-6);
        assert!((w.weights()[1] - closed_form(40, 1)).abs() < 1e-12);
        assert!(w.weights()[1..].windows(2).all(|p| p[0] > p[1]));
    }

    #[test]
    fn window_segment_cases() {
        let w = make_ztw_window(8).unwrap();
        let ones = vec![1.0; 20];
        assert_eq!(window_segment(&ones, 3, &w).unwrap(), w.weights());
        assert!(window_segment(&[0.0; 20], 3, &w).unwrap().iter().all(|&v| v == 0.0));
        let mut imp = vec![0.0; 20];
        imp[5] = 1.0;
        assert!(window_segment(&imp, 5, &w).unwrap().iter().all(|&v| v == 0.0));
        assert!(matches!(
            window_segment(&ones, 13, &w),
            Err(Error::SegmentOutOfBounds { .. })
        ));
    }

    #[test]
    fn ngd_of_shifted_impulses() {
        for m in 0..6 {
            let mut x = vec![0.0; 8];
            x[m] = 1.0;
            let g = ngd_spectrum(&x, 64);
            assert!(g.iter().all(|v| (v - m as f64).abs() < 1e-9), "m = {m}");
        }
    }

    #[test]
    fn dngd_cases() {
        assert!(dngd(&[3.0; 10]).iter().all(|&v| v == 0.0));
        let lin: Vec<f64> = (0..10).map(|k| 2.0 * k as f64 + 1.0).collect();
        assert!(dngd(&lin).iter().all(|v| v.abs() < 1e-12));
        let par: Vec<f64> = (0..10).map(|k| -((k * k) as f64)).collect();
        assert!(dngd(&par).iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn envelope_of_cosine_is_one() {
        let n = 2048;
        let d: Vec<f64> = (0..n).map(|k| (2.0 * PI * k as f64 * 8.0 / n as f64).cos()).collect();
        let e = envelope_of_sequence(&d);
        assert!(e.iter().all(|v| (v - 1.0).abs() < 1e-6));
        assert!(envelope_of_sequence(&[0.0; 16]).iter().all(|&v| v == 0.0));
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        assert_eq!(envelope_of_sequence(&neg), e);
    }

    #[test]
    fn analyzer_matches_composition() {
        let s: Vec<f64> = (0..200)
            .map(|n| ((n as f64) * 0.37).sin() * (-(n as f64) / 90.0).exp())
            .collect();
        let a = HngdAnalyzer::new(8000, &HngdConfig::default()).unwrap();
        let fast = a.spectrum_at(&s, 10).unwrap();
        let x = apply_taper(&window_segment(&s, 10, a.window()).unwrap());
        let slow = envelope_of_sequence(&dngd(&ngd_spectrum(&x, 2048)));
        assert_eq!(fast.magnitudes.len(), 1025);
        for (p, q) in fast.magnitudes.iter().zip(&slow) {
            assert!((p - q).abs() <= 1e-9 * q.abs().max(1.0));
        }

        let cfg = HngdConfig {
            taper: false,
            ..HngdConfig::default()
        };
        let plain = HngdAnalyzer::new(8000, &cfg).unwrap().spectrum_at(&s, 10).unwrap();
        let x = window_segment(&s, 10, a.window()).unwrap();
        let slow = envelope_of_sequence(&dngd(&ngd_spectrum(&x, 2048)));
        for (p, q) in plain.magnitudes.iter().zip(&slow) {
            assert!((p - q).abs() <= 1e-9 * q.abs().max(1.0));
        }
    }

    #[test]
    fn taper_values() {
        let t = truncation_taper(4);
        assert!((t[0] - 4.0).abs() < 1e-12);
        assert!((t[2] - 2.0).abs() < 1e-12);
        assert!(t.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn silence_gives_zero_spectrum() {
        let s = vec![0.0; 400];
        let spec = hngd_at_epoch(&s, 8000, 100).unwrap();
        assert!(spec.magnitudes.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn binary_dump_round_trip() {
        let spectra = vec![
            HngdSpectrum {
                magnitudes: vec![0.5; 5],
                fs: 8000,
                nfft: 8,
                epoch_index: 7,
            },
            HngdSpectrum {
                magnitudes: vec![1.5, 2.0, 0.0, 1.0, 3.0],
                fs: 8000,
                nfft: 8,
                epoch_index: 99,
            },
        ];
        let mut buf = Vec::new();
        write_spectra_binary(&mut buf, &spectra).unwrap();
        assert_eq!(read_spectra_binary(&mut buf.as_slice()).unwrap(), spectra);
        buf.pop();
        assert!(read_spectra_binary(&mut buf.as_slice()).is_err());
        let csv = spectra_to_csv(&spectra[..1]);
        assert!(csv.starts_with("epoch_sample,bin_hz,magnitude\n7,0,0.5\n7,1000,0.5\n"));
    }
}
