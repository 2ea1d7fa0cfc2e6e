//! Suprasegmental periodicity feature f7: mean normalised cross-correlation
//! of each pitch cycle with the following K cycles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::SonorantClass;
use crate::epoch::EpochTrain;
use crate::error::{Error, Result};
use crate::fusion;

/// Default number of following cycles.
pub const DEFAULT_K: usize = 10;

/// Consecutive epoch-to-epoch segments of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchCycleSet {
    /// Sample index where each cycle starts.
    pub starts: Vec<usize>,
    pub cycles: Vec<Vec<f64>>,
}

impl PitchCycleSet {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.cycles.iter().map(Vec::len).collect()
    }
}

/// Cycle `i` spans `[e_i, e_{i+1})`.
pub fn extract_cycles(samples: &[f64], epochs: &EpochTrain) -> Result<PitchCycleSet> {
    let idx = epochs.indices();
    if idx.len() < 2 {
        return Err(Error::TooFewEpochs(idx.len()));
    }
    if let Some(&last) = idx.last() {
        if last > samples.len() {
            return Err(Error::InvalidArgument(format!(
                "epoch {last} beyond signal length {}",
                samples.len()
            )));
        }
    }
    Ok(PitchCycleSet {
        starts: idx[..idx.len() - 1].to_vec(),
        cycles: idx.windows(2).map(|w| samples[w[0]..w[1]].to_vec()).collect(),
    })
}

/// Denominator of the cycle correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NccDenominator {
    /// `sqrt(E_i E_j)`, bounded by one.
    #[default]
    Normalized,
    /// `E_i E_j`, without the square root.
    EnergyProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F7Config {
    pub k: usize,
    pub denominator: NccDenominator,
}

impl Default for F7Config {
    fn default() -> Self {
        F7Config {
            k: DEFAULT_K,
            denominator: NccDenominator::Normalized,
        }
    }
}

/// Correlation of two cycles, the shorter one right-padded with zeros.
/// Returns `None` when either cycle has zero energy.
pub fn ncc(a: &[f64], b: &[f64], denom: NccDenominator) -> Option<f64> {
    let ea: f64 = a.iter().map(|v| v * v).sum();
    let eb: f64 = b.iter().map(|v| v * v).sum();
    if ea <= 0.0 || eb <= 0.0 {
        return None;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Some(match denom {
        NccDenominator::Normalized => (dot / (ea * eb).sqrt()).clamp(-1.0, 1.0),
        NccDenominator::EnergyProduct => dot / (ea * eb),
    })
}

/// Per-cycle f7 values and how they were obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct F7Values {
    /// One value per cycle; the last `k_used` are copies of the last computed value.
    pub per_cycle: Vec<f64>,
    pub k_used: usize,
    /// Some correlation involved a silent cycle and was counted as zero.
    pub zero_energy: bool,
}

impl F7Values {
    /// One value per epoch: cycle `i` goes to epoch `i` and the final epoch
    /// repeats the last value.
    pub fn per_epoch(&self) -> Vec<f64> {
        let mut v = self.per_cycle.clone();
        if let Some(&last) = v.last() {
            v.push(last);
        }
        v
    }
}

/// Effective K for `cycles` cycles: reduced to two less than the cycle count
/// when fewer than `k + 2` cycles exist, and never below one.
pub fn effective_k(k: usize, cycles: usize) -> usize {
    if cycles < k + 2 {
        cycles.saturating_sub(2).max(1)
    } else {
        k
    }
}

pub fn f7_correlation(cycles: &PitchCycleSet, cfg: &F7Config) -> Result<F7Values> {
    if cfg.k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let c = cycles.len();
    if c < 2 {
        return Err(Error::TooFewEpochs(c + 1));
    }
    let k = effective_k(cfg.k, c);
    let x = &cycles.cycles;
    let mut zero_energy = false;
    let mut per_cycle: Vec<f64> = (0..c - k)
        .map(|i| {
            let sum: f64 = (i + 1..=i + k)
                .map(|j| {
                    ncc(&x[i], &x[j], cfg.denominator).unwrap_or_else(|| {
                        zero_energy = true;
                        0.0
                    })
                })
                .sum();
            sum / k as f64
        })
        .collect();
    let last = *per_cycle.last().expect("at least one computed value");
    per_cycle.resize(c, last);
    Ok(F7Values {
        per_cycle,
        k_used: k,
        zero_energy,
    })
}

/// f7 for every epoch of `samples`.
pub fn f7_at_epochs(samples: &[f64], epochs: &EpochTrain, cfg: &F7Config) -> Result<Vec<f64>> {
    let cycles = extract_cycles(samples, epochs)?;
    Ok(f7_correlation(&cycles, cfg)?.per_epoch())
}

/// Cycles of one segment with the class of each cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCycles {
    pub cycles: PitchCycleSet,
    pub classes: Vec<Option<SonorantClass>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KldPoint {
    pub k: usize,
    pub avg_kld: f64,
}

/// Average six-class KLD of f7 for each K in `ks`.
pub fn sweep_k(items: &[LabeledCycles], ks: &[usize], denominator: NccDenominator) -> Result<Vec<KldPoint>> {
    ks.par_iter()
        .map(|&k| {
            let cfg = F7Config { k, denominator };
            let mut rows: Vec<(SonorantClass, [f64; 1])> = Vec::new();
            for item in items {
                if item.cycles.len() < 2 {
                    continue;
                }
                let f7 = f7_correlation(&item.cycles, &cfg)?;
                for (v, c) in f7.per_cycle.iter().zip(&item.classes) {
                    if let Some(c) = c.filter(|c| c.is_sonorant()) {
                        rows.push((c, [*v]));
                    }
                }
            }
            let stats = fusion::fit_class_gaussians(&rows)?;
            Ok(KldPoint {
                k,
                avg_kld: fusion::average_kld(&stats, 0)?,
            })
        })
        .collect()
}

/// K with the largest average KLD; ties go to the smaller K.
pub fn best_k(points: &[KldPoint]) -> Option<usize> {
    points
        .iter()
        .fold(None::<KldPoint>, |best, p| match best {
            Some(b) if b.avg_kld > p.avg_kld || (b.avg_kld == p.avg_kld && b.k < p.k) => Some(b),
            _ => Some(*p),
        })
        .map(|p| p.k)
}
