//! Per-class Gaussian statistics, symmetric KLD, KLD-derived feature weights
//! and epoch-to-frame aggregation of the weighted 7-D sonority vector.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::SonorantClass;
use crate::error::{Error, Result};

pub const DIMS: usize = 7;
pub const DIM_NAMES: [&str; DIMS] = ["f1", "f2", "f3", "f4", "f5", "f6", "f7"];

/// Smallest standard deviation accepted for a Gaussian entering the KLD.
pub const SIGMA_FLOOR: f64 = 1e-9;

/// Average KLDs of the reference corpus, used when no labelled data is
/// available for fitting weights.
pub const REFERENCE_AVG_KLD: [f64; DIMS] = [1.14, 0.95, 1.10, 1.09, 1.62, 2.02, 2.95];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl Gaussian {
    /// Sample mean and `n - 1` standard deviation.
    pub fn fit(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::NotEnoughRows { needed: 2, actual: n });
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Gaussian {
            mean,
            sd: var.sqrt(),
            n,
        })
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        -0.5 * z * z - self.sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Symmetric KLD between two univariate Gaussians given as `(mean, sd)`.
pub fn kld_symmetric(a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    let (ma, sa) = a;
    let (mb, sb) = b;
    for s in [sa, sb] {
        if !(s > SIGMA_FLOOR) {
            return Err(Error::SigmaBelowFloor(s));
        }
    }
    let (va, vb) = (sa * sa, sb * sb);
    let d = ma - mb;
    Ok(0.5 * (va / vb + vb / va) - 1.0 + 0.5 * d * d * (1.0 / va + 1.0 / vb))
}

/// Gaussian fits per class and feature dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub per_class: BTreeMap<SonorantClass, Vec<Gaussian>>,
}

impl ClassStats {
    pub fn get(&self, class: SonorantClass, dim: usize) -> Result<Gaussian> {
        self.per_class
            .get(&class)
            .and_then(|g| g.get(dim).copied())
            .ok_or_else(|| Error::MissingClass(class.name().into()))
    }

    pub fn classes(&self) -> Vec<SonorantClass> {
        self.per_class.keys().copied().collect()
    }

    pub fn dims(&self) -> usize {
        self.per_class.values().next().map_or(0, Vec::len)
    }
}

/// Fit a Gaussian to every (class, dimension) present in `rows`.
pub fn fit_class_gaussians<R: AsRef<[f64]>>(rows: &[(SonorantClass, R)]) -> Result<ClassStats> {
    let mut grouped: BTreeMap<SonorantClass, Vec<&[f64]>> = BTreeMap::new();
    for (c, r) in rows {
        grouped.entry(*c).or_default().push(r.as_ref());
    }
    let dims = rows.first().map_or(0, |(_, r)| r.as_ref().len());
    let mut per_class = BTreeMap::new();
    for (class, members) in grouped {
        let mut fits = Vec::with_capacity(dims);
        for dim in 0..dims {
            let col: Vec<f64> = members.iter().map(|r| r[dim]).collect();
            let g = Gaussian::fit(&col).map_err(|_| Error::NotEnoughRows {
                needed: 2,
                actual: col.len(),
            })?;
            if !(g.sd > SIGMA_FLOOR) {
                return Err(Error::DegenerateVariance {
                    class: class.name().into(),
                    dim,
                    sigma: g.sd,
                    floor: SIGMA_FLOOR,
                });
            }
            fits.push(g);
        }
        per_class.insert(class, fits);
    }
    Ok(ClassStats { per_class })
}

/// Mean symmetric KLD over the 15 unordered pairs of sonorant classes.
pub fn average_kld(stats: &ClassStats, dim: usize) -> Result<f64> {
    let classes = SonorantClass::SONORANT;
    let mut fits = Vec::with_capacity(classes.len());
    for c in classes {
        let g = stats.get(c, dim)?;
        fits.push((g.mean, g.sd));
    }
    let mut sum = 0.0;
    let mut pairs = 0;
    for i in 0..fits.len() {
        for j in i + 1..fits.len() {
            sum += kld_symmetric(fits[i], fits[j])?;
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

/// Fusion weights, one per feature dimension, summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector {
    pub w: [f64; DIMS],
    pub avg_kld: [f64; DIMS],
}

/// `w_i = kld_i / sum(kld)`.
pub fn compute_weights(avg_klds: &[f64]) -> Result<WeightVector> {
    if avg_klds.len() != DIMS {
        return Err(Error::InvalidArgument(format!(
            "expected {DIMS} average KLDs, got {}",
            avg_klds.len()
        )));
    }
    if let Some(&bad) = avg_klds.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NonPositiveKld(bad));
    }
    let total: f64 = avg_klds.iter().sum();
    let mut w = [0.0; DIMS];
    let mut kld = [0.0; DIMS];
    for i in 0..DIMS {
        w[i] = avg_klds[i] / total;
        kld[i] = avg_klds[i];
    }
    Ok(WeightVector { w, avg_kld: kld })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub dim_name: String,
    pub avg_kld: f64,
    pub weight: f64,
}

impl WeightVector {
    pub fn reference() -> Self {
        compute_weights(&REFERENCE_AVG_KLD).expect("reference KLDs are positive")
    }

    /// Weights from the 7 per-dimension average KLDs of `stats`.
    pub fn fit(stats: &ClassStats) -> Result<Self> {
        let klds = (0..DIMS).map(|d| average_kld(stats, d)).collect::<Result<Vec<_>>>()?;
        compute_weights(&klds)
    }

    pub fn entries(&self) -> Vec<WeightEntry> {
        (0..DIMS)
            .map(|i| WeightEntry {
                dim_name: DIM_NAMES[i].into(),
                avg_kld: self.avg_kld[i],
                weight: self.w[i],
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.entries())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<WeightEntry> = serde_json::from_str(text)?;
        if entries.len() != DIMS {
            return Err(Error::InvalidArgument(format!(
                "weights file has {} entries, expected {DIMS}",
                entries.len()
            )));
        }
        let mut w = [0.0; DIMS];
        let mut kld = [0.0; DIMS];
        for e in &entries {
            let i = DIM_NAMES
                .iter()
                .position(|n| *n == e.dim_name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown dimension '{}'", e.dim_name)))?;
            w[i] = e.weight;
            kld[i] = e.avg_kld;
        }
        let sum: f64 = w.iter().sum();
        if w.iter().any(|&v| !(v > 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("weights must be positive and sum to one".into()));
        }
        Ok(WeightVector { w, avg_kld: kld })
    }
}

/// `w_i * f_i` for each dimension.
pub fn assemble_weighted(row: &[f64], w: &WeightVector) -> [f64; DIMS] {
    let mut out = [0.0; DIMS];
    for i in 0..DIMS {
        out[i] = w.w[i] * row[i];
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub frame_ms: f64,
    pub shift_ms: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            frame_ms: 25.0,
            shift_ms: 10.0,
        }
    }
}

impl FrameConfig {
    pub fn frame_len(&self, fs: u32) -> usize {
        ((self.frame_ms * 1e-3 * fs as f64).round() as usize).max(1)
    }

    pub fn shift_len(&self, fs: u32) -> usize {
        ((self.shift_ms * 1e-3 * fs as f64).round() as usize).max(1)
    }

    /// Frame count for a signal of `len` samples; a signal shorter than one
    /// frame still gets one.
    pub fn frame_count(&self, len: usize, fs: u32) -> usize {
        let (frame, shift) = (self.frame_len(fs), self.shift_len(fs));
        if len <= frame {
            1
        } else {
            1 + (len - frame) / shift
        }
    }
}

/// Mean of the epoch vectors inside one frame, `None` if it holds no epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameVector {
    pub index: usize,
    pub start_sample: usize,
    pub values: Option<Vec<f64>>,
}

/// Average the rows whose epoch lies in each frame. `epochs` must be sorted.
pub fn frame_aggregate<R: AsRef<[f64]>>(
    epochs: &[usize],
    rows: &[R],
    len: usize,
    fs: u32,
    cfg: &FrameConfig,
) -> Vec<FrameVector> {
    let (frame, shift) = (cfg.frame_len(fs), cfg.shift_len(fs));
    let dims = rows.first().map_or(0, |r| r.as_ref().len());
    (0..cfg.frame_count(len, fs))
        .map(|index| {
            let start = index * shift;
            let lo = epochs.partition_point(|&e| e < start);
            let hi = epochs.partition_point(|&e| e < start + frame);
            let values = (hi > lo).then(|| {
                let mut acc = vec![0.0; dims];
                for r in &rows[lo..hi] {
                    for (a, v) in acc.iter_mut().zip(r.as_ref()) {
                        *a += v;
                    }
                }
                acc.iter_mut().for_each(|a| *a /= (hi - lo) as f64);
                acc
            });
            FrameVector {
                index,
                start_sample: start,
                values,
            }
        })
        .collect()
}
