use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sonority::classify::{self, DetectorKind, EvalReport, RunInfo, SonorantDetector};
use sonority::config::Settings;
use sonority::corpus::{self, SonorantClass};
use sonority::fusion::{self, WeightVector};
use sonority::pipeline::{self, FeatureRow, FsPolicy};
use sonority::supra;
use sonority::synth::{self, SynthSpec};
use sonority::vts::{self, NormStats};
use sonority::ztw::{self, HngdAnalyzer};
use sonority::{Error, Result};

#[derive(Parser)]
#[command(name = "sonority", version, about = "Sonority feature extraction and evaluation")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct GlobalArgs {
    /// Settings file of `key = value` lines; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// `resample` (convert to 8 kHz) or `strict` (reject other rates).
    #[arg(long, global = true)]
    fs_policy: Option<FsPolicy>,
    #[arg(long, global = true)]
    nfft: Option<usize>,
    /// Zero-time window length in milliseconds.
    #[arg(long, global = true)]
    ztw_ms: Option<f64>,
    /// Number of following pitch cycles for f7.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Mix noise at this SNR (dB) before analysis.
    #[arg(long, global = true)]
    snr: Option<f64>,
    /// Noise recording to mix instead of white noise.
    #[arg(long, global = true)]
    noise_wav: Option<PathBuf>,
    /// Use these normalisation statistics instead of fitting them.
    #[arg(long, global = true)]
    norm_stats: Option<PathBuf>,
    /// Use these fusion weights instead of fitting them.
    #[arg(long, global = true)]
    weights_json: Option<PathBuf>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl GlobalArgs {
    fn settings(&self) -> Result<Settings> {
        let file = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        Ok(file.overridden_by(Settings {
            fs_policy: self.fs_policy,
            nfft: self.nfft,
            ztw_ms: self.ztw_ms,
            k: self.k,
            seed: self.seed,
            snr: self.snr,
            noise_wav: self.noise_wav.clone(),
            norm_stats: self.norm_stats.clone(),
            weights_json: self.weights_json.clone(),
            ..Settings::default()
        }))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WavFormat {
    Pcm16,
    Float,
}

#[derive(Clone, Copy, ValueEnum)]
enum EpochFormat {
    Ascii,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Detector {
    Gaussian,
    Threshold,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic vowel and its true excitation instants.
    Synth {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 120.0)]
        pitch: f64,
        /// `freq:bandwidth[:gain],...` in Hz.
        #[arg(long, default_value = "700:130:1,1220:70:0.6,2600:160:0.3")]
        formants: String,
        #[arg(long, default_value_t = 0.5)]
        duration: f64,
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[arg(long, default_value_t = 0.0)]
        noise_floor: f64,
        #[arg(long, default_value_t = 0.0)]
        pulse_width_ms: f64,
        /// Excitation noise late in each cycle, relative to the pulse.
        #[arg(long, default_value_t = 0.0)]
        aspiration: f64,
        #[arg(long, value_enum, default_value = "pcm16")]
        format: WavFormat,
        /// Also write the true epoch sample indices, one per line.
        #[arg(long)]
        epochs_out: Option<PathBuf>,
    },
    /// Detect epochs in a recording.
    Epochs {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "ascii")]
        format: EpochFormat,
        /// Keep the raw zero-crossing positions.
        #[arg(long)]
        no_refine: bool,
    },
    /// HNGD spectrum at one detected epoch, or all of them.
    Hngd {
        input: PathBuf,
        /// Index into the detected epoch list.
        #[arg(long)]
        epoch: Option<usize>,
        /// Binary dump of every epoch's spectrum.
        #[arg(long)]
        binary: Option<PathBuf>,
    },
    /// Full pipeline: per-epoch and per-frame features, statistics, weights.
    Extract {
        /// WAV/SPHERE files or directories; `.phn` siblings are used as labels.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fusion weights from a feature table or from average KLDs.
    Weights {
        #[arg(long, conflicts_with = "klds")]
        features: Option<PathBuf>,
        /// Seven comma-separated average KLDs.
        #[arg(long)]
        klds: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Average six-class KLD of f7 for a range of K.
    SweepK {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = 4)]
        k_min: usize,
        #[arg(long, default_value_t = 19)]
        k_max: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Six-class Gaussian classification of weighted features.
    Classify {
        #[arg(long)]
        train: PathBuf,
        /// Held-out table; without it a seeded 80/20 split of `--train` is used.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Per-row class posteriors for the test set.
        #[arg(long)]
        posteriors: Option<PathBuf>,
    },
    /// Sonorant/non-sonorant detection at epoch and frame level.
    Detect {
        /// Directory written by `extract`.
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "gaussian")]
        detector: Detector,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Absolute correlation between normalised feature dimensions.
    Corr {
        features: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| Error::InvalidArgument(format!("stdout: {e}")))
        }
    }
}

fn load_weights(settings: &Settings) -> Result<Option<WeightVector>> {
    settings
        .weights_json
        .as_ref()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display())))?;
            WeightVector::from_json(&text)
        })
        .transpose()
}

fn load_norm(settings: &Settings) -> Result<Option<NormStats>> {
    settings
        .norm_stats
        .as_ref()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display())))?;
            NormStats::from_json(&text)
        })
        .transpose()
}

fn load_conformed(path: &Path, settings: &Settings) -> Result<corpus::Utterance> {
    let cfg = settings.extract_config()?;
    let item = pipeline::discover_corpus(&[path.to_path_buf()])?
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidArgument(format!("{}: no audio", path.display())))?;
    pipeline::prepare(&item, &cfg, None, 0)
}

fn labelled_weighted(rows: &[FeatureRow]) -> Vec<(SonorantClass, [f64; fusion::DIMS])> {
    rows.iter()
        .filter(|r| r.valid)
        .filter_map(|r| r.class.filter(|c| c.is_sonorant()).map(|c| (c, r.weighted)))
        .collect()
}

fn split<T: Clone>(mut rows: Vec<T>, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rows.shuffle(&mut rng);
    let cut = (rows.len() * 4).div_ceil(5);
    let test = rows.split_off(cut);
    (rows, test)
}

fn run(cli: Cli) -> Result<()> {
    let settings = cli.global.settings()?;
    let seed = settings.seed.unwrap_or(0);
    match cli.cmd {
        Command::Synth {
            output,
            pitch,
            formants,
            duration,
            jitter,
            noise_floor,
            pulse_width_ms,
            aspiration,
            format,
            epochs_out,
        } => {
            let spec = SynthSpec {
                pitch,
                formants: synth::parse_formants(&formants)?,
                duration,
                jitter,
                noise_floor,
                pulse_width_ms,
                aspiration,
                ..SynthSpec::default()
            };
            let s = synth::synth(&spec, seed)?;
            match format {
                WavFormat::Pcm16 => corpus::save_wav_pcm16(&output, &s.utterance)?,
                WavFormat::Float => corpus::save_wav_f32(&output, &s.utterance.samples, s.utterance.fs)?,
            }
            if let Some(p) = epochs_out {
                let e = sonority::epoch::EpochTrain::new(s.epochs, s.utterance.fs)?;
                write_or_print(Some(&p), &e.to_ascii())?;
            }
        }
        Command::Epochs {
            input,
            format,
            no_refine,
        } => {
            let mut cfg = settings.extract_config()?;
            cfg.refine = !no_refine;
            let u = load_conformed(&input, &settings)?;
            let (e, _) = pipeline::detect(&u, &cfg)?;
            let text = match format {
                EpochFormat::Ascii => e.to_ascii(),
                EpochFormat::Json => e.to_json()? + "\n",
            };
            write_or_print(None, &text)?;
        }
        Command::Hngd { input, epoch, binary } => {
            let cfg = settings.extract_config()?;
            let u = load_conformed(&input, &settings)?;
            let (e, _) = pipeline::detect(&u, &cfg)?;
            let analyzer = HngdAnalyzer::new(u.fs, &cfg.hngd)?;
            let samples = u.segment_normalized_samples();
            if let Some(path) = binary {
                let spectra: Vec<_> = e
                    .indices()
                    .iter()
                    .filter_map(|&i| analyzer.spectrum_at(&samples, i).ok())
                    .collect();
                let mut f = fs::File::create(&path)
                    .map_err(|err| Error::InvalidArgument(format!("{}: {err}", path.display())))?;
                ztw::write_spectra_binary(&mut f, &spectra)?;
            }
            if let Some(k) = epoch {
                let &at = e
                    .indices()
                    .get(k)
                    .ok_or_else(|| Error::InvalidArgument(format!("epoch {k} of {} requested", e.len())))?;
                let s = analyzer.spectrum_at(&samples, at)?;
                write_or_print(None, &ztw::spectra_to_csv(&[s]))?;
            }
        }
        Command::Extract { inputs, output } => {
            let cfg = settings.extract_config()?;
            let items = pipeline::discover_corpus(&inputs)?;
            let out = pipeline::extract(&items, &cfg, load_norm(&settings)?, load_weights(&settings)?)?;
            pipeline::write_outputs(&output, &out)?;
            for (id, err) in &out.failures {
                eprintln!("skipped {id}: {err}");
            }
        }
        Command::Weights { features, klds, output } => {
            let w = match (features, klds) {
                (Some(p), _) => {
                    let rows = pipeline::read_features_csv(&p)?;
                    let labelled: Vec<(SonorantClass, [f64; fusion::DIMS])> = rows
                        .iter()
                        .filter(|r| r.valid)
                        .filter_map(|r| r.class.filter(|c| c.is_sonorant()).map(|c| (c, r.norm)))
                        .collect();
                    WeightVector::fit(&fusion::fit_class_gaussians(&labelled)?)?
                }
                (None, Some(list)) => {
                    let v: Vec<f64> = list
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Error::InvalidArgument(format!("bad KLD list '{list}'")))?;
                    fusion::compute_weights(&v)?
                }
                (None, None) => return Err(Error::InvalidArgument("give --features or --klds".into())),
            };
            write_or_print(output.as_deref(), &(w.to_json()? + "\n"))?;
        }
        Command::SweepK {
            inputs,
            k_min,
            k_max,
            output,
        } => {
            if k_min == 0 || k_max < k_min {
                return Err(Error::InvalidArgument(format!("bad K range {k_min}..{k_max}")));
            }
            let cfg = settings.extract_config()?;
            let items = pipeline::discover_corpus(&inputs)?;
            let cycles = pipeline::labeled_cycles(&items, &cfg)?;
            let ks: Vec<usize> = (k_min..=k_max).collect();
            let points = supra::sweep_k(&cycles, &ks, cfg.f7.denominator)?;
            write_or_print(output.as_deref(), &pipeline::sweep_csv(&points))?;
            if let Some(k) = supra::best_k(&points) {
                eprintln!("best K: {k}");
            }
        }
        Command::Classify {
            train,
            test,
            json,
            posteriors,
        } => {
            let train_rows = labelled_weighted(&pipeline::read_features_csv(&train)?);
            let (train_rows, test_rows) = match test {
                Some(p) => (train_rows, labelled_weighted(&pipeline::read_features_csv(&p)?)),
                None => split(train_rows, seed),
            };
            let clf = classify::GaussianClassifier::fit(&train_rows)?;
            let mut cm = classify::ConfusionMatrix::new(clf.classes());
            for (c, r) in &test_rows {
                cm.add(*c, clf.predict(r));
            }
            let weights = match load_weights(&settings)? {
                Some(w) => w.entries(),
                None => Vec::new(),
            };
            let report =
                EvalReport::from_confusion(&cm, weights, RunInfo::new(train_rows.len(), test_rows.len(), seed));
            write_or_print(None, &report.to_text())?;
            if let Some(p) = json {
                write_or_print(Some(&p), &(report.to_json()? + "\n"))?;
            }
            if let Some(p) = posteriors {
                let mut text = String::from("class");
                for c in clf.classes() {
                    text.push(',');
                    text.push_str(c.name());
                }
                text.push('\n');
                for (c, r) in &test_rows {
                    text.push_str(c.name());
                    for v in clf.posteriors(r) {
                        text.push_str(&format!(",{v}"));
                    }
                    text.push('\n');
                }
                write_or_print(Some(&p), &text)?;
            }
        }
        Command::Detect {
            train,
            test,
            detector,
            json,
        } => {
            let kind = match detector {
                Detector::Gaussian => DetectorKind::Gaussian,
                Detector::Threshold => DetectorKind::Threshold,
            };
            let epoch_rows = |dir: &Path| -> Result<Vec<(bool, [f64; fusion::DIMS])>> {
                Ok(pipeline::read_features_csv(&dir.join("features.csv"))?
                    .into_iter()
                    .filter(|r| r.valid)
                    .filter_map(|r| r.class.map(|c| (c.is_sonorant(), r.weighted)))
                    .collect())
            };
            let frame_rows = |dir: &Path| -> Result<Vec<(bool, Option<[f64; fusion::DIMS]>)>> {
                Ok(pipeline::read_frames_csv(&dir.join("frames.csv"))?
                    .into_iter()
                    .filter_map(|f| f.class.map(|c| (c.is_sonorant(), f.weighted)))
                    .collect())
            };
            let (tr_e, te_e, tr_f, te_f) = match &test {
                Some(t) => (epoch_rows(&train)?, epoch_rows(t)?, frame_rows(&train)?, frame_rows(t)?),
                None => {
                    let (a, b) = split(epoch_rows(&train)?, seed);
                    let (c, d) = split(frame_rows(&train)?, seed);
                    (a, b, c, d)
                }
            };
            let det = SonorantDetector::fit(&tr_e, kind)?;
            let epoch_pairs: Vec<(bool, bool)> = te_e.iter().map(|(s, r)| (*s, det.is_sonorant(r))).collect();
            let epoch_m = classify::detection_metrics(&epoch_pairs)?;
            let frame_train: Vec<(bool, [f64; fusion::DIMS])> =
                tr_f.iter().filter_map(|(s, r)| r.map(|r| (*s, r))).collect();
            let frame_m = SonorantDetector::fit(&frame_train, kind).ok().and_then(|fd| {
                let pairs: Vec<(bool, bool)> = te_f
                    .iter()
                    .map(|(s, r)| (*s, r.is_some_and(|r| fd.is_sonorant(&r))))
                    .collect();
                classify::detection_metrics(&pairs).ok()
            });
            let weights = match load_weights(&settings)? {
                Some(w) => w.entries(),
                None => Vec::new(),
            };
            let report =
                EvalReport::from_detection(epoch_m, frame_m, weights, RunInfo::new(tr_e.len(), te_e.len(), seed));
            write_or_print(None, &report.to_text())?;
            if let Some(p) = json {
                write_or_print(Some(&p), &(report.to_json()? + "\n"))?;
            }
        }
        Command::Corr { features, output } => {
            let rows: Vec<[f64; fusion::DIMS]> = pipeline::read_features_csv(&features)?
                .into_iter()
                .filter(|r| r.valid)
                .map(|r| r.norm)
                .collect();
            let m = vts::pairwise_correlation(&rows)?;
            write_or_print(output.as_deref(), &pipeline::correlation_csv(&m))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
