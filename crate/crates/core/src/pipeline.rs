//! End-to-end feature extraction over a corpus of WAV (+ PHN) files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, PhoneMap, SonorantClass, Utterance, ANALYSIS_RATE};
use crate::epoch::{self, EpochTrain, ZffConfig};
use crate::error::{Error, Result};
use crate::fusion::{self, FrameConfig, WeightVector, DIMS};
use crate::source::{self, HilbertEnvelope, LpFrameConfig, SoeConfig, SoeValue};
use crate::supra::{self, F7Config, LabeledCycles};
use crate::vts::{self, NormStats, PeakSearchConfig};
use crate::ztw::{HngdAnalyzer, HngdConfig};

/// How input sampling rates other than 8 kHz are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FsPolicy {
    #[default]
    Resample,
    Strict,
}

impl std::str::FromStr for FsPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "resample" => Ok(FsPolicy::Resample),
            "strict" => Ok(FsPolicy::Strict),
            other => Err(Error::InvalidArgument(format!("unknown fs policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExtractConfig {
    pub fs_policy: FsPolicy,
    pub zff: ZffConfig,
    /// Snap ZFF epochs to Hilbert-envelope peaks of the LP residual.
    pub refine: bool,
    pub hngd: HngdConfig,
    pub peaks: PeakSearchConfig,
    pub lp: LpFrameConfig,
    pub soe: SoeConfig,
    pub f7: F7Config,
    pub frame: FrameConfig,
    pub snr_db: Option<f64>,
    pub noise_wav: Option<PathBuf>,
    pub seed: u64,
    pub phone_map: PhoneMap,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            fs_policy: FsPolicy::Resample,
            zff: ZffConfig::default(),
            refine: true,
            hngd: HngdConfig::default(),
            peaks: PeakSearchConfig::default(),
            lp: LpFrameConfig::default(),
            soe: SoeConfig::default(),
            f7: F7Config::default(),
            frame: FrameConfig::default(),
            snr_db: None,
            noise_wav: None,
            seed: 0,
            phone_map: PhoneMap::default(),
        }
    }
}

/// One input file and its optional label file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusItem {
    pub id: String,
    pub wav: PathBuf,
    pub phn: Option<PathBuf>,
}

fn has_ext(p: &Path, exts: &[&str]) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

fn sibling_phn(wav: &Path) -> Option<PathBuf> {
    ["phn", "PHN"]
        .iter()
        .map(|e| wav.with_extension(e))
        .find(|p| p.is_file())
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            walk(&p, out)?;
        } else if has_ext(&p, &["wav", "sph"]) {
            out.push(p);
        }
    }
    Ok(())
}

/// Expand files and directories into corpus items, sorted within each
/// directory. Directory members are named by their relative path.
pub fn discover_corpus(paths: &[PathBuf]) -> Result<Vec<CorpusItem>> {
    let mut items = Vec::new();
    for root in paths {
        if root.is_dir() {
            let mut found = Vec::new();
            walk(root, &mut found)?;
            for wav in found {
                let rel = wav.strip_prefix(root).unwrap_or(&wav).with_extension("");
                let id = rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/");
                items.push(CorpusItem {
                    id,
                    phn: sibling_phn(&wav),
                    wav,
                });
            }
        } else if root.is_file() {
            let id = root
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            items.push(CorpusItem {
                id,
                phn: sibling_phn(root),
                wav: root.clone(),
            });
        } else {
            return Err(Error::io(
                root,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
            ));
        }
    }
    Ok(items)
}

/// Bring an utterance to the analysis rate under `policy` and peak-normalise it.
pub fn conform(u: Utterance, policy: FsPolicy) -> Result<Utterance> {
    let u = match policy {
        FsPolicy::Resample => corpus::resample_to_8k(u)?,
        FsPolicy::Strict if u.fs == ANALYSIS_RATE => u,
        FsPolicy::Strict => return Err(Error::UnsupportedRate(u.fs)),
    };
    Ok(u.peak_normalized())
}

/// Load, label, conform and optionally add noise to one corpus item.
pub fn prepare(item: &CorpusItem, cfg: &ExtractConfig, noise: Option<&Utterance>, index: usize) -> Result<Utterance> {
    let mut u = corpus::load_utterance(&item.wav)?;
    if let Some(phn) = &item.phn {
        u = corpus::attach_phn(u, phn)?;
    }
    let u = conform(u, cfg.fs_policy)?;
    match cfg.snr_db {
        Some(snr) if snr.is_finite() => {
            let white;
            let n = match noise {
                Some(n) => n,
                None => {
                    white = corpus::white_noise(u.len(), u.fs, cfg.seed.wrapping_add(index as u64))?;
                    &white
                }
            };
            corpus::mix_noise(&u, n, snr)
        }
        _ => Ok(u),
    }
}

/// Epochs of `u` plus the Hilbert envelope of its LP residual.
pub fn detect(u: &Utterance, cfg: &ExtractConfig) -> Result<(EpochTrain, HilbertEnvelope)> {
    let zff = epoch::zff_filter(u, &cfg.zff)?;
    let raw = epoch::detect_epochs(&zff, epoch::Polarity::Normal);
    let residual = source::lp_residual(&u.samples, &cfg.lp)?;
    let he = source::hilbert_envelope(&residual, u.fs);
    let epochs = if cfg.refine {
        epoch::refine_epochs_to_he_peaks(&raw, &he.values, epoch::refine_radius(u.fs))
    } else {
        raw
    };
    Ok((epochs, he))
}

/// Indices of `epochs` grouped by the labelled span (or unlabelled gap)
/// they fall in. Without labels everything is one group.
pub fn segment_groups(u: &Utterance, epochs: &[usize]) -> Vec<Vec<usize>> {
    let Some(labels) = &u.labels else {
        return vec![(0..epochs.len()).collect()];
    };
    let key = |e: usize| {
        let i = labels.partition_point(|s| s.end <= e);
        match labels.get(i) {
            Some(s) if s.start <= e => 2 * i + 1,
            _ => 2 * i,
        }
    };
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last = None;
    for (i, &e) in epochs.iter().enumerate() {
        let k = key(e);
        if last != Some(k) {
            groups.push(Vec::new());
            last = Some(k);
        }
        groups.last_mut().expect("group pushed").push(i);
    }
    groups
}

/// Raw measurements at one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMeasurement {
    pub epoch_sample: usize,
    pub class: Option<SonorantClass>,
    /// f1..f7 before normalisation; NaN where a feature could not be measured.
    pub raw: [f64; DIMS],
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceAnalysis {
    pub epochs: EpochTrain,
    pub rows: Vec<EpochMeasurement>,
    /// Epochs dropped because a window ran past the signal edge.
    pub skipped: usize,
}

/// Measure f1..f7 at every usable epoch of `u`.
pub fn analyze_utterance(u: &Utterance, cfg: &ExtractConfig) -> Result<UtteranceAnalysis> {
    let (epochs, he) = detect(u, cfg)?;
    analyze_with_epochs(u, &epochs, &he, cfg)
}

/// As [`analyze_utterance`] with epochs and residual envelope supplied.
pub fn analyze_with_epochs(
    u: &Utterance,
    epochs: &EpochTrain,
    he: &HilbertEnvelope,
    cfg: &ExtractConfig,
) -> Result<UtteranceAnalysis> {
    let analyzer = HngdAnalyzer::new(u.fs, &cfg.hngd)?;
    let normalized = u.segment_normalized_samples();
    let idx = epochs.indices();

    let mut f7 = vec![f64::NAN; idx.len()];
    for group in segment_groups(u, idx) {
        let sub: Vec<usize> = group.iter().map(|&i| idx[i]).collect();
        if sub.len() < 3 {
            continue;
        }
        let train = EpochTrain::new(sub, u.fs)?;
        let values = supra::f7_at_epochs(&u.samples, &train, &cfg.f7)?;
        for (&i, v) in group.iter().zip(values) {
            f7[i] = v;
        }
    }

    let mut rows = Vec::with_capacity(idx.len());
    let mut skipped = 0;
    for (i, &e) in idx.iter().enumerate() {
        let spectrum = match analyzer.spectrum_at(&normalized, e) {
            Ok(s) => s,
            Err(Error::SegmentOutOfBounds { .. }) => {
                skipped += 1;
                continue;
            }
            Err(err) => return Err(err),
        };
        let f6 = match source::soe_at(&he.values, e, u.fs, &cfg.soe) {
            SoeValue::OutOfBounds => {
                skipped += 1;
                continue;
            }
            v => v.value().unwrap_or(f64::NAN),
        };
        let mut raw = [f64::NAN; DIMS];
        if let Ok((f, _)) = vts::vts_features(&spectrum, &cfg.peaks) {
            raw[..5].copy_from_slice(&f);
        }
        raw[5] = f6;
        raw[6] = f7[i];
        rows.push(EpochMeasurement {
            epoch_sample: e,
            class: u.class_at(e, &cfg.phone_map),
            valid: raw.iter().all(|v| v.is_finite()),
            raw,
        });
    }
    Ok(UtteranceAnalysis {
        epochs: epochs.clone(),
        rows,
        skipped,
    })
}

/// One output row of the per-epoch feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub utt_id: String,
    pub epoch_sample: usize,
    pub class: Option<SonorantClass>,
    pub raw: [f64; DIMS],
    pub norm: [f64; DIMS],
    pub weighted: [f64; DIMS],
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRow {
    pub utt_id: String,
    pub frame_index: usize,
    pub start_sample: usize,
    /// Mean weighted vector of the frame's epochs, `None` for empty frames.
    pub weighted: Option<[f64; DIMS]>,
    pub class: Option<SonorantClass>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    Supplied,
    Fitted,
    Reference,
}

#[derive(Debug, Clone)]
pub struct ExtractOutput {
    pub rows: Vec<FeatureRow>,
    pub frames: Vec<FrameRow>,
    pub norm: NormStats,
    pub weights: WeightVector,
    pub weight_source: WeightSource,
    pub failures: Vec<(String, String)>,
}

struct Analyzed {
    id: String,
    len: usize,
    fs: u32,
    labels: Option<Vec<corpus::LabelSpan>>,
    rows: Vec<EpochMeasurement>,
}

fn load_noise(cfg: &ExtractConfig) -> Result<Option<Utterance>> {
    match (&cfg.noise_wav, cfg.snr_db) {
        (Some(path), Some(_)) => Ok(Some(conform(corpus::load_utterance(path)?, FsPolicy::Resample)?)),
        _ => Ok(None),
    }
}

/// Run the whole pipeline. Normalisation statistics and weights are fitted
/// on the corpus unless supplied.
pub fn extract(
    items: &[CorpusItem],
    cfg: &ExtractConfig,
    norm: Option<NormStats>,
    weights: Option<WeightVector>,
) -> Result<ExtractOutput> {
    if items.is_empty() {
        return Err(Error::InvalidArgument("empty corpus".into()));
    }
    let noise = load_noise(cfg)?;
    let results: Vec<Result<Analyzed>> = items
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let u = prepare(item, cfg, noise.as_ref(), i)?;
            let a = analyze_utterance(&u, cfg)?;
            Ok(Analyzed {
                id: item.id.clone(),
                len: u.len(),
                fs: u.fs,
                labels: u.labels,
                rows: a.rows,
            })
        })
        .collect();

    let mut analyzed = Vec::new();
    let mut failures = Vec::new();
    for (item, r) in items.iter().zip(results) {
        match r {
            Ok(a) => analyzed.push(a),
            Err(e) => {
                warn!("{}: {e}", item.wav.display());
                failures.push((item.id.clone(), e.to_string()));
            }
        }
    }
    if analyzed.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "all {} input files failed",
            items.len()
        )));
    }

    let all: Vec<&EpochMeasurement> = analyzed.iter().flat_map(|a| &a.rows).filter(|r| r.valid).collect();
    let norm = match norm {
        Some(n) => n,
        None => {
            let sonorant: Vec<[f64; DIMS]> = all
                .iter()
                .filter(|r| r.class.is_some_and(SonorantClass::is_sonorant))
                .map(|r| r.raw)
                .collect();
            let basis: Vec<[f64; DIMS]> = if sonorant.len() >= 2 {
                sonorant
            } else {
                all.iter().map(|r| r.raw).collect()
            };
            NormStats::fit(&basis)?
        }
    };

    let normalize = |r: &EpochMeasurement| -> [f64; DIMS] {
        if !r.valid {
            return [f64::NAN; DIMS];
        }
        let n = norm.apply(&r.raw);
        let mut out = [0.0; DIMS];
        out.copy_from_slice(&n.values);
        out
    };

    let (weights, weight_source) = match weights {
        Some(w) => (w, WeightSource::Supplied),
        None => {
            let labelled: Vec<(SonorantClass, [f64; DIMS])> = all
                .iter()
                .filter_map(|r| r.class.filter(|c| c.is_sonorant()).map(|c| (c, normalize(r))))
                .collect();
            match fusion::fit_class_gaussians(&labelled).and_then(|s| WeightVector::fit(&s)) {
                Ok(w) => (w, WeightSource::Fitted),
                Err(e) => {
                    if !labelled.is_empty() {
                        warn!("weights not fitted ({e}); using reference weights");
                    }
                    (WeightVector::reference(), WeightSource::Reference)
                }
            }
        }
    };

    let mut rows = Vec::new();
    let mut frames = Vec::new();
    for a in &analyzed {
        let start = rows.len();
        for r in &a.rows {
            let norm_row = normalize(r);
            rows.push(FeatureRow {
                utt_id: a.id.clone(),
                epoch_sample: r.epoch_sample,
                class: r.class,
                raw: r.raw,
                norm: norm_row,
                weighted: if r.valid {
                    fusion::assemble_weighted(&norm_row, &weights)
                } else {
                    [f64::NAN; DIMS]
                },
                valid: r.valid,
            });
        }
        let valid: Vec<&FeatureRow> = rows[start..].iter().filter(|r| r.valid).collect();
        let epochs: Vec<usize> = valid.iter().map(|r| r.epoch_sample).collect();
        let weighted: Vec<[f64; DIMS]> = valid.iter().map(|r| r.weighted).collect();
        let half = cfg.frame.frame_len(a.fs) / 2;
        for f in fusion::frame_aggregate(&epochs, &weighted, a.len, a.fs, &cfg.frame) {
            let centre = (f.start_sample + half).min(a.len - 1);
            let class = a.labels.as_ref().map(|labels| {
                let i = labels.partition_point(|s| s.end <= centre);
                match labels.get(i) {
                    Some(s) if s.start <= centre => cfg.phone_map.class_of(&s.phone),
                    _ => SonorantClass::NonSonorant,
                }
            });
            frames.push(FrameRow {
                utt_id: a.id.clone(),
                frame_index: f.index,
                start_sample: f.start_sample,
                weighted: f.values.map(|v| {
                    let mut out = [0.0; DIMS];
                    out.copy_from_slice(&v);
                    out
                }),
                class,
            });
        }
    }
    info!(
        "{} utterances, {} epoch rows ({} valid), {} frames, weights {:?}",
        analyzed.len(),
        rows.len(),
        rows.iter().filter(|r| r.valid).count(),
        frames.len(),
        weight_source
    );
    Ok(ExtractOutput {
        rows,
        frames,
        norm,
        weights,
        weight_source,
        failures,
    })
}

/// Labelled pitch cycles of every utterance, grouped per labelled span.
pub fn labeled_cycles(items: &[CorpusItem], cfg: &ExtractConfig) -> Result<Vec<LabeledCycles>> {
    let noise = load_noise(cfg)?;
    let per_item: Vec<Result<Vec<LabeledCycles>>> = items
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let u = prepare(item, cfg, noise.as_ref(), i)?;
            let (epochs, _) = detect(&u, cfg)?;
            let idx = epochs.indices();
            let mut out = Vec::new();
            for group in segment_groups(&u, idx) {
                let sub: Vec<usize> = group.iter().map(|&i| idx[i]).collect();
                if sub.len() < 3 {
                    continue;
                }
                let class = u.class_at(sub[0], &cfg.phone_map);
                let cycles = supra::extract_cycles(&u.samples, &EpochTrain::new(sub, u.fs)?)?;
                let classes = vec![class; cycles.len()];
                out.push(LabeledCycles { cycles, classes });
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for (item, r) in items.iter().zip(per_item) {
        match r {
            Ok(v) => all.extend(v),
            Err(e) => warn!("{}: {e}", item.wav.display()),
        }
    }
    Ok(all)
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

fn class_str(c: Option<SonorantClass>) -> &'static str {
    c.map_or("", SonorantClass::name)
}

pub fn feature_header() -> Vec<String> {
    let mut h = vec!["utt_id".to_string(), "epoch_sample".into(), "class".into()];
    h.extend((1..=DIMS).map(|i| format!("f{i}_raw")));
    h.extend((1..=DIMS).map(|i| format!("f{i}")));
    h.extend((1..=DIMS).map(|i| format!("w{i}")));
    h.push("valid".into());
    h
}

pub fn write_features_csv(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(feature_header())?;
    for r in rows {
        let mut rec = vec![r.utt_id.clone(), r.epoch_sample.to_string(), class_str(r.class).into()];
        rec.extend(r.raw.iter().map(|&v| fmt_f64(v)));
        rec.extend(r.norm.iter().map(|&v| fmt_f64(v)));
        rec.extend(r.weighted.iter().map(|&v| fmt_f64(v)));
        rec.push(if r.valid { "1" } else { "0" }.into());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::UnsupportedFormat(format!("bad {what} '{s}'")))
}

fn parse_class(s: &str) -> Result<Option<SonorantClass>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

pub fn read_features_csv(path: &Path) -> Result<Vec<FeatureRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != feature_header() {
        return Err(Error::UnsupportedFormat(format!(
            "{}: not a feature table",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut arr = [[0.0; DIMS]; 3];
        for (block, a) in arr.iter_mut().enumerate() {
            for (i, v) in a.iter_mut().enumerate() {
                *v = parse_num(&rec[3 + block * DIMS + i], "feature value")?;
            }
        }
        rows.push(FeatureRow {
            utt_id: rec[0].to_string(),
            epoch_sample: parse_num(&rec[1], "epoch sample")?,
            class: parse_class(&rec[2])?,
            raw: arr[0],
            norm: arr[1],
            weighted: arr[2],
            valid: &rec[3 + 3 * DIMS] == "1",
        });
    }
    Ok(rows)
}

pub fn frame_header() -> Vec<String> {
    let mut h = vec!["utt_id".to_string(), "frame_index".into(), "start_sample".into()];
    h.extend((1..=DIMS).map(|i| format!("f{i}")));
    h.push("class".into());
    h
}

pub fn write_frames_csv(path: &Path, frames: &[FrameRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(frame_header())?;
    for f in frames {
        let mut rec = vec![f.utt_id.clone(), f.frame_index.to_string(), f.start_sample.to_string()];
        match &f.weighted {
            Some(v) => rec.extend(v.iter().map(|&x| fmt_f64(x))),
            None => rec.extend(std::iter::repeat_n(String::new(), DIMS)),
        }
        rec.push(class_str(f.class).into());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_frames_csv(path: &Path) -> Result<Vec<FrameRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != frame_header() {
        return Err(Error::UnsupportedFormat(format!(
            "{}: not a frame table",
            path.display()
        )));
    }
    let mut frames = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let weighted = if rec[3].is_empty() {
            None
        } else {
            let mut v = [0.0; DIMS];
            for (i, x) in v.iter_mut().enumerate() {
                *x = parse_num(&rec[3 + i], "feature value")?;
            }
            Some(v)
        };
        frames.push(FrameRow {
            utt_id: rec[0].to_string(),
            frame_index: parse_num(&rec[1], "frame index")?,
            start_sample: parse_num(&rec[2], "start sample")?,
            weighted,
            class: parse_class(&rec[3 + DIMS])?,
        });
    }
    Ok(frames)
}

/// Write `features.csv`, `frames.csv`, `norm_stats.json` and `weights.json`
/// into `dir`.
pub fn write_outputs(dir: &Path, out: &ExtractOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_features_csv(&dir.join("features.csv"), &out.rows)?;
    write_frames_csv(&dir.join("frames.csv"), &out.frames)?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text + "\n").map_err(|e| Error::io(p, e))
    };
    write("norm_stats.json", out.norm.to_json()?)?;
    write("weights.json", out.weights.to_json()?)?;
    Ok(())
}

/// `K,avg_kld` lines.
pub fn sweep_csv(points: &[supra::KldPoint]) -> String {
    let mut s = String::from("K,avg_kld\n");
    for p in points {
        let _ = writeln!(s, "{},{}", p.k, fmt_f64(p.avg_kld));
    }
    s
}

/// Absolute correlation matrix as CSV with feature names on both axes.
pub fn correlation_csv(matrix: &[Vec<f64>]) -> String {
    let names: Vec<String> = (1..=matrix.len()).map(|i| format!("f{i}")).collect();
    let mut s = format!(",{}\n", names.join(","));
    for (name, row) in names.iter().zip(matrix) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
        let _ = writeln!(s, "{name},{}", cells.join(","));
    }
    s
}
