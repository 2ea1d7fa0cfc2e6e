//! Vocal-tract features f1-f5 from the first three HNGD formant peaks,
//! min-max normalisation, and pairwise feature correlation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ztw::HngdSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakSearchConfig {
    pub min_hz: f64,
    pub max_hz: f64,
    pub min_separation_hz: f64,
}

impl Default for PeakSearchConfig {
    fn default() -> Self {
        PeakSearchConfig {
            min_hz: 90.0,
            max_hz: 4000.0,
            min_separation_hz: 150.0,
        }
    }
}

/// Measurements for one formant peak and its preceding valley.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormantPeak {
    pub bin: usize,
    /// F_i, Hz.
    pub freq: f64,
    /// P_i.
    pub magnitude: f64,
    pub valley_bin: usize,
    /// V_i, Hz.
    pub valley_freq: f64,
    /// Q_i.
    pub valley_magnitude: f64,
    /// B_i, Hz.
    pub bandwidth: f64,
}

impl FormantPeak {
    /// SP_i = (P_i - Q_i) / (F_i - V_i).
    pub fn slope(&self) -> Result<f64> {
        let df = self.freq - self.valley_freq;
        if df == 0.0 {
            return Err(Error::CoincidentPeakValley(self.freq));
        }
        Ok((self.magnitude - self.valley_magnitude) / df)
    }
}

/// The first three formant peaks, ascending in frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormantSet {
    pub peaks: [FormantPeak; 3],
}

impl FormantSet {
    pub fn freqs(&self) -> [f64; 3] {
        self.peaks.map(|p| p.freq)
    }
}

/// Prominence of the local maximum at `k`: its height above the higher of
/// the two bases reached before a taller sample or the spectrum edge.
fn prominence(m: &[f64], k: usize) -> f64 {
    let h = m[k];
    let mut left_min = h;
    for &v in m[..k].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &m[k + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

fn argmin(m: &[f64], lo: usize, hi: usize) -> usize {
    (lo..hi).fold(lo, |b, k| if m[k] < m[b] { k } else { b })
}

/// Edge of the 3 dB region walking from `peak` in direction `step`, in
/// fractional bins. Stops at a local minimum if the spectrum re-rises first.
fn half_power_edge(db: &[f64], peak: usize, step: isize) -> f64 {
    let thr = db[peak] - 3.0;
    let mut prev = peak;
    loop {
        let next = prev as isize + step;
        if next < 0 || next as usize >= db.len() {
            return prev as f64;
        }
        let next = next as usize;
        if db[next] < thr {
            let t = (db[prev] - thr) / (db[prev] - db[next]);
            return prev as f64 + step as f64 * t;
        }
        if db[next] > db[prev] {
            return prev as f64;
        }
        prev = next;
    }
}

fn to_db(m: &[f64]) -> Vec<f64> {
    m.iter().map(|&v| 10.0 * v.max(1e-300).log10()).collect()
}

/// 3 dB bandwidth (Hz) of the peak at `bin`, on `10 log10(magnitude)`.
pub fn three_db_bandwidth(spec: &HngdSpectrum, bin: usize) -> Result<f64> {
    if spec.magnitudes[bin] <= 0.0 {
        return Err(Error::ZeroPeak(bin));
    }
    let db = to_db(&spec.magnitudes);
    let left = half_power_edge(&db, bin, -1);
    let right = half_power_edge(&db, bin, 1);
    Ok((right - left) * spec.bin_hz())
}

/// Three most prominent peaks in the search band, at least
/// `min_separation_hz` apart, and the minimum preceding each one.
pub fn find_peaks_valleys(spec: &HngdSpectrum, cfg: &PeakSearchConfig) -> Result<FormantSet> {
    let m = &spec.magnitudes;
    if m.len() < 3 || m.iter().all(|&v| v <= 0.0) {
        return Err(Error::TooFewPeaks(0));
    }
    let bin_hz = spec.bin_hz();
    let lo = ((cfg.min_hz / bin_hz).ceil() as usize).max(1);
    let hi = ((cfg.max_hz / bin_hz).floor() as usize).min(m.len() - 2);
    let mut candidates: Vec<(usize, f64)> = (lo..=hi)
        .filter(|&k| m[k] > m[k - 1] && m[k] >= m[k + 1])
        .map(|k| (k, prominence(m, k)))
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let min_sep = cfg.min_separation_hz / bin_hz;
    let mut picked: Vec<usize> = Vec::with_capacity(3);
    for &(k, _) in &candidates {
        if picked.iter().all(|&p| (p as f64 - k as f64).abs() >= min_sep) {
            picked.push(k);
            if picked.len() == 3 {
                break;
            }
        }
    }
    if picked.len() < 3 {
        return Err(Error::TooFewPeaks(picked.len()));
    }
    picked.sort_unstable();

    let db = to_db(m);
    let mut prev = 0;
    let mut peaks = [None; 3];
    for (slot, &bin) in peaks.iter_mut().zip(&picked) {
        let valley = argmin(m, prev, bin);
        let left = half_power_edge(&db, bin, -1);
        let right = half_power_edge(&db, bin, 1);
        *slot = Some(FormantPeak {
            bin,
            freq: spec.freq_of(bin),
            magnitude: m[bin],
            valley_bin: valley,
            valley_freq: spec.freq_of(valley),
            valley_magnitude: m[valley],
            bandwidth: (right - left) * bin_hz,
        });
        prev = bin;
    }
    Ok(FormantSet {
        peaks: peaks.map(|p| p.expect("three peaks assigned")),
    })
}

/// Mean of the three peak magnitudes.
pub fn compute_f1(fs: &FormantSet) -> f64 {
    fs.peaks.iter().map(|p| p.magnitude).sum::<f64>() / 3.0
}

/// Mean of the consecutive peak differences `P1 - P2` and `P2 - P3`.
pub fn compute_f2(fs: &FormantSet) -> f64 {
    let p = fs.peaks.map(|p| p.magnitude);
    ((p[0] - p[1]) + (p[1] - p[2])) / 2.0
}

/// Mean of the three valley magnitudes.
pub fn compute_f3(fs: &FormantSet) -> f64 {
    fs.peaks.iter().map(|p| p.valley_magnitude).sum::<f64>() / 3.0
}

/// Mean peak slope.
pub fn compute_f4(fs: &FormantSet) -> Result<f64> {
    let mut sum = 0.0;
    for p in &fs.peaks {
        sum += p.slope()?;
    }
    Ok(sum / 3.0)
}

/// Mean 3 dB bandwidth of the three peaks, measured on `spec`.
pub fn compute_f5(spec: &HngdSpectrum, fs: &FormantSet) -> Result<f64> {
    let mut sum = 0.0;
    for p in &fs.peaks {
        sum += three_db_bandwidth(spec, p.bin)?;
    }
    Ok(sum / 3.0)
}

/// Raw f1..f5 for one spectrum.
pub fn vts_features(spec: &HngdSpectrum, cfg: &PeakSearchConfig) -> Result<([f64; 5], FormantSet)> {
    let set = find_peaks_valleys(spec, cfg)?;
    let f = [
        compute_f1(&set),
        compute_f2(&set),
        compute_f3(&set),
        compute_f4(&set)?,
        compute_f5(spec, &set)?,
    ];
    Ok((f, set))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimRange {
    pub dim: usize,
    pub min: f64,
    pub max: f64,
}

/// Per-dimension min/max fitted on a reference corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormStats {
    pub dims: Vec<DimRange>,
}

/// Normalised row plus whether any value had to be clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    pub clamped: bool,
}

impl NormStats {
    /// Identity scaling for `n` dimensions.
    pub fn unit(n: usize) -> Self {
        NormStats {
            dims: (0..n)
                .map(|dim| DimRange {
                    dim,
                    min: 0.0,
                    max: 1.0,
                })
                .collect(),
        }
    }

    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::NotEnoughRows { needed: 2, actual: 0 })?;
        let n = first.as_ref().len();
        let mut dims: Vec<DimRange> = (0..n)
            .map(|dim| DimRange {
                dim,
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            })
            .collect();
        for row in rows {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::InvalidArgument("rows differ in length".into()));
            }
            for (d, &v) in dims.iter_mut().zip(row) {
                d.min = d.min.min(v);
                d.max = d.max.max(v);
            }
        }
        if let Some(d) = dims.iter().find(|d| !(d.max > d.min)) {
            return Err(Error::ConstantDimension(d.dim));
        }
        Ok(NormStats { dims })
    }

    pub fn apply(&self, row: &[f64]) -> Normalized {
        let mut clamped = false;
        let values = row
            .iter()
            .zip(&self.dims)
            .map(|(&v, d)| {
                let x = (v - d.min) / (d.max - d.min);
                if !(0.0..=1.0).contains(&x) {
                    clamped = true;
                }
                x.clamp(0.0, 1.0)
            })
            .collect();
        Normalized { values, clamped }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn fit_normalizer<R: AsRef<[f64]>>(rows: &[R]) -> Result<NormStats> {
    NormStats::fit(rows)
}

pub fn apply_normalizer(row: &[f64], stats: &NormStats) -> Normalized {
    stats.apply(row)
}

/// Minimum row count for [`pairwise_correlation`].
pub const MIN_CORRELATION_ROWS: usize = 30;

/// Absolute Pearson correlation between every pair of columns. For scalar
/// features this equals the first canonical correlation.
pub fn pairwise_correlation<R: AsRef<[f64]>>(rows: &[R]) -> Result<Vec<Vec<f64>>> {
    if rows.len() < MIN_CORRELATION_ROWS {
        return Err(Error::NotEnoughRows {
            needed: MIN_CORRELATION_ROWS,
            actual: rows.len(),
        });
    }
    let d = rows[0].as_ref().len();
    let n = rows.len() as f64;
    let mut means = vec![0.0; d];
    for r in rows {
        for (m, v) in means.iter_mut().zip(r.as_ref()) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        let r = r.as_ref();
        for i in 0..d {
            for j in i..d {
                cov[i][j] += (r[i] - means[i]) * (r[j] - means[j]);
            }
        }
    }
    for (i, row) in cov.iter().enumerate() {
        if row[i] <= 0.0 {
            return Err(Error::ConstantDimension(i));
        }
    }
    let mut out = vec![vec![1.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            let c = (cov[i][j] / (cov[i][i] * cov[j][j]).sqrt()).abs().min(1.0);
            out[i][j] = c;
            out[j][i] = c;
        }
    }
    Ok(out)
}
