//! Diagonal-Gaussian classifier over weighted sonority vectors, confusion
//! matrices, and sonorant/non-sonorant detection metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::SonorantClass;
use crate::error::{Error, Result};
use crate::fusion::{self, ClassStats, WeightEntry};

/// Equal-prior, diagonal-covariance Gaussian scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianClassifier {
    stats: ClassStats,
}

impl GaussianClassifier {
    pub fn fit<R: AsRef<[f64]>>(rows: &[(SonorantClass, R)]) -> Result<Self> {
        let stats = fusion::fit_class_gaussians(rows)?;
        if stats.per_class.len() < 2 {
            return Err(Error::InvalidArgument(
                "training data must contain at least two classes".into(),
            ));
        }
        Ok(GaussianClassifier { stats })
    }

    pub fn classes(&self) -> Vec<SonorantClass> {
        self.stats.classes()
    }

    pub fn stats(&self) -> &ClassStats {
        &self.stats
    }

    /// Log-likelihood of `row` under each class, in [`Self::classes`] order.
    pub fn log_likelihoods(&self, row: &[f64]) -> Vec<f64> {
        self.stats
            .per_class
            .values()
            .map(|gs| gs.iter().zip(row).map(|(g, &x)| g.log_pdf(x)).sum())
            .collect()
    }

    /// Normalised class posteriors under equal priors.
    pub fn posteriors(&self, row: &[f64]) -> Vec<f64> {
        let ll = self.log_likelihoods(row);
        let max = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = ll.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = e.iter().sum();
        e.iter().map(|v| v / sum).collect()
    }

    pub fn predict(&self, row: &[f64]) -> SonorantClass {
        let ll = self.log_likelihoods(row);
        let best = (0..ll.len()).fold(0, |b, i| if ll[i] > ll[b] { i } else { b });
        self.classes()[best]
    }
}

/// Counts of (true, predicted) class pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<SonorantClass>,
    /// `counts[true][predicted]`.
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<SonorantClass>) -> Self {
        let n = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn add(&mut self, truth: SonorantClass, predicted: SonorantClass) {
        let t = self.classes.iter().position(|&c| c == truth);
        let p = self.classes.iter().position(|&c| c == predicted);
        if let (Some(t), Some(p)) = (t, p) {
            self.counts[t][p] += 1;
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Row percentages; rows without samples are all zero.
    pub fn percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let n: usize = row.iter().sum();
                row.iter()
                    .map(|&c| if n == 0 { 0.0 } else { 100.0 * c as f64 / n as f64 })
                    .collect()
            })
            .collect()
    }

    /// Percentage of all samples on the diagonal.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let diag: usize = (0..self.classes.len()).map(|i| self.counts[i][i]).sum();
        100.0 * diag as f64 / total as f64
    }

    /// Share of off-diagonal mass whose prediction is one step away from
    /// the truth in class order.
    pub fn adjacent_error_share(&self) -> f64 {
        let n = self.classes.len();
        let mut off = 0;
        let mut adjacent = 0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += self.counts[i][j];
                    if i.abs_diff(j) == 1 {
                        adjacent += self.counts[i][j];
                    }
                }
            }
        }
        if off == 0 {
            1.0
        } else {
            adjacent as f64 / off as f64
        }
    }
}

/// Train on `train`, score `test`.
pub fn gaussian_classify<R: AsRef<[f64]>, S: AsRef<[f64]>>(
    train: &[(SonorantClass, R)],
    test: &[(SonorantClass, S)],
) -> Result<ConfusionMatrix> {
    let clf = GaussianClassifier::fit(train)?;
    let mut cm = ConfusionMatrix::new(clf.classes());
    for (truth, row) in test {
        cm.add(*truth, clf.predict(row.as_ref()));
    }
    Ok(cm)
}

/// Accuracy, true-positive rate on sonorant samples and false-alarm rate on
/// non-sonorant samples, all in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub acc: f64,
    pub tpr: f64,
    pub far: f64,
    pub n_sonorant: usize,
    pub n_non_sonorant: usize,
}

/// Metrics from `(is_sonorant, predicted_sonorant)` pairs.
pub fn detection_metrics(pairs: &[(bool, bool)]) -> Result<DetectionMetrics> {
    let pos = pairs.iter().filter(|p| p.0).count();
    let neg = pairs.len() - pos;
    if neg == 0 {
        return Err(Error::NoNonSonorant);
    }
    if pos == 0 {
        return Err(Error::InvalidArgument("no sonorant samples".into()));
    }
    let tp = pairs.iter().filter(|p| p.0 && p.1).count();
    let fp = pairs.iter().filter(|p| !p.0 && p.1).count();
    let tn = neg - fp;
    Ok(DetectionMetrics {
        acc: 100.0 * (tp + tn) as f64 / pairs.len() as f64,
        tpr: 100.0 * tp as f64 / pos as f64,
        far: 100.0 * fp as f64 / neg as f64,
        n_sonorant: pos,
        n_non_sonorant: neg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    /// Two-class diagonal Gaussian.
    #[default]
    Gaussian,
    /// Threshold on the sum of the weighted features.
    Threshold,
}

/// Sonorant/non-sonorant decision rule fitted on labelled rows.
#[derive(Debug, Clone, PartialEq)]
pub enum SonorantDetector {
    Gaussian(GaussianClassifier),
    Threshold(f64),
}

impl SonorantDetector {
    pub fn fit<R: AsRef<[f64]>>(rows: &[(bool, R)], kind: DetectorKind) -> Result<Self> {
        let label = |s: bool| {
            if s {
                SonorantClass::LowVowel
            } else {
                SonorantClass::NonSonorant
            }
        };
        match kind {
            DetectorKind::Gaussian => {
                let labelled: Vec<(SonorantClass, &[f64])> =
                    rows.iter().map(|(s, r)| (label(*s), r.as_ref())).collect();
                Ok(SonorantDetector::Gaussian(GaussianClassifier::fit(&labelled)?))
            }
            DetectorKind::Threshold => {
                let mut scored: Vec<(f64, bool)> = rows.iter().map(|(s, r)| (r.as_ref().iter().sum(), *s)).collect();
                if !scored.iter().any(|p| !p.1) {
                    return Err(Error::NoNonSonorant);
                }
                scored.sort_by(|a, b| a.0.total_cmp(&b.0));
                // threshold below index i: everything from i upward is sonorant
                let total_pos = scored.iter().filter(|p| p.1).count();
                let mut best = (total_pos, f64::NEG_INFINITY);
                let mut neg_below = 0;
                let mut pos_below = 0;
                for i in 1..=scored.len() {
                    if scored[i - 1].1 {
                        pos_below += 1;
                    } else {
                        neg_below += 1;
                    }
                    if i < scored.len() && scored[i].0 == scored[i - 1].0 {
                        continue;
                    }
                    let correct = neg_below + (total_pos - pos_below);
                    if correct > best.0 {
                        let thr = if i < scored.len() {
                            0.5 * (scored[i - 1].0 + scored[i].0)
                        } else {
                            f64::INFINITY
                        };
                        best = (correct, thr);
                    }
                }
                Ok(SonorantDetector::Threshold(best.1))
            }
        }
    }

    pub fn is_sonorant(&self, row: &[f64]) -> bool {
        match self {
            SonorantDetector::Gaussian(c) => c.predict(row).is_sonorant(),
            SonorantDetector::Threshold(t) => row.iter().sum::<f64>() >= *t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub version: String,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl RunInfo {
    pub fn new(n_train: usize, n_test: usize, seed: u64) -> Self {
        RunInfo {
            version: env!("CARGO_PKG_VERSION").into(),
            n_train,
            n_test,
            seed,
        }
    }
}

/// Classification and detection results with the weights that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<String>,
    pub confusion_pct: Vec<Vec<f64>>,
    pub accuracy: Option<f64>,
    pub adjacent_error_share: Option<f64>,
    pub epoch_detection: Option<DetectionMetrics>,
    pub frame_detection: Option<DetectionMetrics>,
    pub weights: Vec<WeightEntry>,
    pub run: RunInfo,
}

impl EvalReport {
    pub fn from_confusion(cm: &ConfusionMatrix, weights: Vec<WeightEntry>, run: RunInfo) -> Self {
        EvalReport {
            classes: cm.classes.iter().map(|c| c.name().to_string()).collect(),
            confusion_pct: cm.percentages(),
            accuracy: Some(cm.accuracy()),
            adjacent_error_share: Some(cm.adjacent_error_share()),
            epoch_detection: None,
            frame_detection: None,
            weights,
            run,
        }
    }

    pub fn from_detection(
        epoch: DetectionMetrics,
        frame: Option<DetectionMetrics>,
        weights: Vec<WeightEntry>,
        run: RunInfo,
    ) -> Self {
        EvalReport {
            classes: vec![],
            confusion_pct: vec![],
            accuracy: None,
            adjacent_error_share: None,
            epoch_detection: Some(epoch),
            frame_detection: frame,
            weights,
            run,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text rendering for terminals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.classes.is_empty() {
            let _ = write!(out, "{:>14}", "");
            for c in &self.classes {
                let _ = write!(out, " {:>12}", c);
            }
            out.push('\n');
            for (c, row) in self.classes.iter().zip(&self.confusion_pct) {
                let _ = write!(out, "{:>14}", c);
                for v in row {
                    let _ = write!(out, " {:>12.2}", v);
                }
                out.push('\n');
            }
        }
        if let Some(a) = self.accuracy {
            let _ = writeln!(out, "accuracy: {a:.2}%");
        }
        if let Some(a) = self.adjacent_error_share {
            let _ = writeln!(out, "adjacent-class share of errors: {:.1}%", 100.0 * a);
        }
        for (name, m) in [("epoch", self.epoch_detection), ("frame", self.frame_detection)] {
            if let Some(m) = m {
                let _ = writeln!(
                    out,
                    "{name} level: Acc {:.2}  TPR {:.2}  FAR {:.2}  (sonorant {}, non-sonorant {})",
                    m.acc, m.tpr, m.far, m.n_sonorant, m.n_non_sonorant
                );
            }
        }
        if !self.weights.is_empty() {
            out.push_str("weights:");
            for w in &self.weights {
                let _ = write!(out, " {}={:.4}", w.dim_name, w.weight);
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn cluster(rng: &mut ChaCha8Rng, centre: f64, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                (0..3)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        centre + 0.05 * z
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn separable_classes_are_perfect() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut rows = Vec::new();
        for r in cluster(&mut rng, 0.2, 50) {
            rows.push((SonorantClass::LowVowel, r));
        }
        for r in cluster(&mut rng, 0.8, 50) {
            rows.push((SonorantClass::Nasal, r));
        }
        let cm = gaussian_classify(&rows, &rows).unwrap();
        assert_eq!(cm.accuracy(), 100.0);
        for row in cm.percentages() {
            assert!((row.iter().sum::<f64>() - 100.0).abs() < 0.1);
        }
    }

    #[test]
    fn shuffled_labels_give_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut acc = 0.0;
        let trials = 1000;
        for _ in 0..trials {
            let mut train = Vec::new();
            let mut test = Vec::new();
            for c in SonorantClass::SONORANT {
                for i in 0..10 {
                    let r: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
                    if i < 7 {
                        train.push((c, r));
                    } else {
                        test.push((c, r));
                    }
                }
            }
            acc += gaussian_classify(&train, &test).unwrap().accuracy() / 100.0;
        }
        let mean = acc / trials as f64;
        assert!((mean - 1.0 / 6.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn single_class_rejected() {
        let rows = vec![(SonorantClass::Nasal, vec![0.1]), (SonorantClass::Nasal, vec![0.2])];
        assert!(GaussianClassifier::fit(&rows).is_err());
    }

    #[test]
    fn detection_definitions() {
        let truth = [true, true, false, false, true];
        let perfect: Vec<(bool, bool)> = truth.iter().map(|&t| (t, t)).collect();
        let m = detection_metrics(&perfect).unwrap();
        assert_eq!((m.acc, m.tpr, m.far), (100.0, 100.0, 0.0));
        let all: Vec<(bool, bool)> = truth.iter().map(|&t| (t, true)).collect();
        let m = detection_metrics(&all).unwrap();
        assert_eq!((m.tpr, m.far), (100.0, 100.0));
        assert!((m.acc - 60.0).abs() < 1e-12);
        assert!(matches!(detection_metrics(&[(true, true)]), Err(Error::NoNonSonorant)));
    }

    #[test]
    fn threshold_detector_separates() {
        let rows: Vec<(bool, Vec<f64>)> = (0..40).map(|i| (i >= 20, vec![i as f64 / 40.0, 0.1])).collect();
        let det = SonorantDetector::fit(&rows, DetectorKind::Threshold).unwrap();
        for (s, r) in &rows {
            assert_eq!(det.is_sonorant(r), *s);
        }
        let gauss = SonorantDetector::fit(
            &rows
                .iter()
                .map(|(s, r)| (*s, vec![r[0], r[0] * 0.5 + (r[0] * 7.0).sin() * 0.01]))
                .collect::<Vec<_>>(),
            DetectorKind::Gaussian,
        )
        .unwrap();
        assert!(gauss.is_sonorant(&[0.95, 0.475]));
        assert!(!gauss.is_sonorant(&[0.05, 0.025]));
    }

    #[test]
    fn adjacent_share() {
        let mut cm = ConfusionMatrix::new(SonorantClass::SONORANT.to_vec());
        cm.add(SonorantClass::LowVowel, SonorantClass::MidVowel);
        cm.add(SonorantClass::LowVowel, SonorantClass::MidVowel);
        cm.add(SonorantClass::LowVowel, SonorantClass::Nasal);
        cm.add(SonorantClass::Glide, SonorantClass::Glide);
        assert!((cm.adjacent_error_share() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(cm.total(), 4);
        assert_eq!(cm.accuracy(), 25.0);
    }

    #[test]
    fn posteriors_sum_to_one() {
        let rows = vec![
            (SonorantClass::LowVowel, vec![0.1, 0.2]),
            (SonorantClass::LowVowel, vec![0.2, 0.1]),
            (SonorantClass::Nasal, vec![0.8, 0.9]),
            (SonorantClass::Nasal, vec![0.9, 0.7]),
        ];
        let clf = GaussianClassifier::fit(&rows).unwrap();
        let p = clf.posteriors(&[0.5, 0.5]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_renders() {
        let mut cm = ConfusionMatrix::new(vec![SonorantClass::LowVowel, SonorantClass::Nasal]);
        cm.add(SonorantClass::LowVowel, SonorantClass::LowVowel);
        cm.add(SonorantClass::Nasal, SonorantClass::LowVowel);
        let r = EvalReport::from_confusion(&cm, fusion::WeightVector::reference().entries(), RunInfo::new(2, 2, 0));
        let text = r.to_text();
        assert!(text.contains("accuracy: 50.00%"));
        assert!(r.to_json().unwrap().contains("\"confusion_pct\""));
    }
}
