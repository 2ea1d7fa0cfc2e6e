//! Audio and label I/O, phone classes, resampling and noise mixing.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};

/// Rate at which every downstream analysis runs.
pub const ANALYSIS_RATE: u32 = 8000;

const PCM16_SCALE: f64 = 32768.0;

/// One labelled phone span, in samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpan {
    pub start: usize,
    pub end: usize,
    pub phone: String,
}

/// A sampled speech signal with optional phone labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub samples: Vec<f64>,
    pub fs: u32,
    pub labels: Option<Vec<LabelSpan>>,
}

impl Utterance {
    pub fn new(samples: Vec<f64>, fs: u32) -> Result<Self> {
        if fs == 0 {
            return Err(Error::InvalidArgument("sampling rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::EmptyAudio);
        }
        Ok(Utterance {
            samples,
            fs,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<LabelSpan>) -> Result<Self> {
        validate_labels(&labels, self.samples.len())?;
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs as f64
    }

    /// Scale so that the largest magnitude is one. All-zero input is left alone.
    pub fn peak_normalized(mut self) -> Self {
        let peak = dsp::max_abs(&self.samples);
        if peak > 0.0 {
            self.samples.iter_mut().for_each(|s| *s /= peak);
        }
        self
    }

    /// Samples with every labelled span scaled by its own peak magnitude.
    /// Samples outside any span are copied unchanged.
    pub fn segment_normalized_samples(&self) -> Vec<f64> {
        let mut out = self.samples.clone();
        if let Some(labels) = &self.labels {
            for span in labels {
                let seg = &mut out[span.start..span.end];
                let peak = dsp::max_abs(seg);
                if peak > 0.0 {
                    seg.iter_mut().for_each(|s| *s /= peak);
                }
            }
        }
        out
    }

    /// Class of the span containing `sample`, if labels are present.
    pub fn class_at(&self, sample: usize, map: &PhoneMap) -> Option<SonorantClass> {
        let labels = self.labels.as_ref()?;
        let idx = labels.partition_point(|s| s.end <= sample);
        match labels.get(idx) {
            Some(span) if span.start <= sample => Some(map.class_of(&span.phone)),
            _ => Some(SonorantClass::NonSonorant),
        }
    }
}

fn validate_labels(labels: &[LabelSpan], len: usize) -> Result<()> {
    let mut prev_end = 0;
    for (i, span) in labels.iter().enumerate() {
        if span.start >= span.end {
            return Err(Error::InvalidLabels(format!(
                "span {i} ({} {} {}) is empty or reversed",
                span.start, span.end, span.phone
            )));
        }
        if span.end > len {
            return Err(Error::InvalidLabels(format!(
                "span {i} ends at {} beyond signal length {len}",
                span.end
            )));
        }
        if span.start < prev_end {
            return Err(Error::InvalidLabels(format!(
                "span {i} starts at {} before previous end {prev_end}",
                span.start
            )));
        }
        prev_end = span.end;
    }
    Ok(())
}

/// Sonorant categories, plus a catch-all for everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SonorantClass {
    LowVowel,
    MidVowel,
    HighVowel,
    Glide,
    Liquid,
    Nasal,
    NonSonorant,
}

impl SonorantClass {
    /// The six sonorant classes, most to least sonorous.
    pub const SONORANT: [SonorantClass; 6] = [
        SonorantClass::LowVowel,
        SonorantClass::MidVowel,
        SonorantClass::HighVowel,
        SonorantClass::Glide,
        SonorantClass::Liquid,
        SonorantClass::Nasal,
    ];

    pub fn is_sonorant(self) -> bool {
        self != SonorantClass::NonSonorant
    }

    pub fn name(self) -> &'static str {
        match self {
            SonorantClass::LowVowel => "low_vowel",
            SonorantClass::MidVowel => "mid_vowel",
            SonorantClass::HighVowel => "high_vowel",
            SonorantClass::Glide => "glide",
            SonorantClass::Liquid => "liquid",
            SonorantClass::Nasal => "nasal",
            SonorantClass::NonSonorant => "non_sonorant",
        }
    }

    /// Position in [`SonorantClass::SONORANT`]; `None` for non-sonorants.
    pub fn sonorant_index(self) -> Option<usize> {
        SonorantClass::SONORANT.iter().position(|&c| c == self)
    }
}

impl fmt::Display for SonorantClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SonorantClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Ok(match key.as_str() {
            "lowvowel" => SonorantClass::LowVowel,
            "midvowel" => SonorantClass::MidVowel,
            "highvowel" => SonorantClass::HighVowel,
            "glide" | "glides" => SonorantClass::Glide,
            "liquid" | "liquids" => SonorantClass::Liquid,
            "nasal" | "nasals" => SonorantClass::Nasal,
            "nonsonorant" => SonorantClass::NonSonorant,
            _ => return Err(Error::InvalidArgument(format!("unknown class name '{s}'"))),
        })
    }
}

/// Phone label to class table. Phones not in the table are non-sonorant.
#[derive(Debug, Clone, PartialEq)]
pub struct PhoneMap {
    table: HashMap<String, SonorantClass>,
}

impl Default for PhoneMap {
    fn default() -> Self {
        use SonorantClass::*;
        let entries: [(&str, SonorantClass); 18] = [
            ("m", Nasal),
            ("n", Nasal),
            ("ng", Nasal),
            ("r", Liquid),
            ("l", Liquid),
            ("w", Glide),
            ("y", Glide),
            ("ih", HighVowel),
            ("iy", HighVowel),
            ("uh", HighVowel),
            ("uy", HighVowel),
            ("eh", MidVowel),
            ("ey", MidVowel),
            ("oy", MidVowel),
            ("ow", MidVowel),
            ("aa", LowVowel),
            ("ah", LowVowel),
            ("ae", LowVowel),
        ];
        let table = entries.iter().map(|(p, c)| (p.to_string(), *c)).collect();
        PhoneMap { table }
    }
}

impl PhoneMap {
    pub fn class_of(&self, phone: &str) -> SonorantClass {
        self.table
            .get(&phone.trim().to_ascii_lowercase())
            .copied()
            .unwrap_or(SonorantClass::NonSonorant)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn insert(&mut self, phone: &str, class: SonorantClass) {
        self.table.insert(phone.trim().to_ascii_lowercase(), class);
    }

    /// Merge `phone class` lines over the current table. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            let (Some(phone), Some(class)) = (cols.next(), cols.next()) else {
                return Err(Error::InvalidLabels(format!(
                    "phone map line {}: expected 'phone class'",
                    lineno + 1
                )));
            };
            self.insert(phone, class.parse()?);
        }
        Ok(())
    }

    pub fn load_overrides(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map = PhoneMap::default();
        map.apply_overrides(&text)?;
        Ok(map)
    }
}

/// Map one phone through the built-in table.
pub fn phone_to_class(phone: &str) -> SonorantClass {
    PhoneMap::default().class_of(phone)
}

/// Read a PCM16 (or float32) mono WAV, or an uncompressed NIST SPHERE file.
/// Samples are scaled by 1/32768; no peak normalisation is applied.
pub fn load_utterance(path: &Path) -> Result<Utterance> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 8];
    let n = read_up_to(&mut file, &mut magic).map_err(|e| Error::io(path, e))?;
    drop(file);
    if n >= 7 && &magic[..7] == b"NIST_1A" {
        return load_sphere(path);
    }
    if n >= 4 && &magic[..4] == b"RIFF" {
        return load_wav(path);
    }
    Err(Error::UnsupportedFormat(format!(
        "{}: neither RIFF/WAVE nor NIST SPHERE",
        path.display()
    )))
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

fn load_wav(path: &Path) -> Result<Utterance> {
    let reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "{} channels (mono required)",
            spec.channels
        )));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
            .collect::<std::result::Result<_, _>>()?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat(format!("{bits}-bit {fmt:?} WAV")));
        }
    };
    Utterance::new(samples, spec.sample_rate)
}

fn load_sphere(path: &Path) -> Result<Utterance> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let head = String::from_utf8_lossy(&bytes[..bytes.len().min(4096)]);
    let mut lines = head.lines();
    lines.next();
    let header_len: usize = lines
        .next()
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| Error::UnsupportedFormat("SPHERE header size missing".into()))?;
    let mut fields: HashMap<&str, &str> = HashMap::new();
    for line in lines {
        let line = line.trim();
        if line == "end_head" {
            break;
        }
        let mut parts = line.splitn(3, ' ');
        if let (Some(k), Some(_ty), Some(v)) = (parts.next(), parts.next(), parts.next()) {
            fields.insert(k, v.trim());
        }
    }
    let get = |k: &str| fields.get(k).copied();
    let fs: u32 = get("sample_rate")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::UnsupportedFormat("SPHERE sample_rate missing".into()))?;
    if get("channel_count").unwrap_or("1") != "1" {
        return Err(Error::UnsupportedFormat("multichannel SPHERE".into()));
    }
    if get("sample_n_bytes").unwrap_or("2") != "2" {
        return Err(Error::UnsupportedFormat("SPHERE sample width is not 16 bits".into()));
    }
    if let Some(coding) = get("sample_coding") {
        if !coding.starts_with("pcm") {
            return Err(Error::UnsupportedFormat(format!("SPHERE coding '{coding}'")));
        }
    }
    let big_endian = matches!(get("sample_byte_format"), Some("10"));
    let data = bytes
        .get(header_len..)
        .ok_or_else(|| Error::UnsupportedFormat("SPHERE file shorter than header".into()))?;
    let count = get("sample_count")
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(data.len() / 2)
        .min(data.len() / 2);
    let samples = data
        .chunks_exact(2)
        .take(count)
        .map(|b| {
            let v = if big_endian {
                i16::from_be_bytes([b[0], b[1]])
            } else {
                i16::from_le_bytes([b[0], b[1]])
            };
            v as f64 / PCM16_SCALE
        })
        .collect();
    Utterance::new(samples, fs)
}

fn quantize_pcm16(x: f64) -> i16 {
    (x * PCM16_SCALE).round().clamp(-32768.0, 32767.0) as i16
}

/// Write PCM16 mono. Values are scaled by 32768, rounded and clipped.
pub fn save_wav_pcm16(path: &Path, u: &Utterance) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: u.fs,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &s in &u.samples {
        w.write_sample(quantize_pcm16(s))?;
    }
    w.finalize()?;
    Ok(())
}

/// Write float32 mono, for inspecting intermediate signals.
pub fn save_wav_f32(path: &Path, samples: &[f64], fs: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: fs,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &s in samples {
        w.write_sample(s as f32)?;
    }
    w.finalize()?;
    Ok(())
}

/// Parse TIMIT `.PHN` text: one `start end phone` triple per line.
pub fn parse_phn(text: &str) -> Result<Vec<LabelSpan>> {
    let mut spans = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::InvalidLabels(format!("line {}: '{line}'", lineno + 1));
        if cols.len() != 3 {
            return Err(bad());
        }
        let start = cols[0].parse().map_err(|_| bad())?;
        let end = cols[1].parse().map_err(|_| bad())?;
        spans.push(LabelSpan {
            start,
            end,
            phone: cols[2].to_string(),
        });
    }
    Ok(spans)
}

pub fn load_phn(path: &Path) -> Result<Vec<LabelSpan>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    for line in BufReader::new(f).lines() {
        text.push_str(&line.map_err(|e| Error::io(path, e))?);
        text.push('\n');
    }
    parse_phn(&text)
}

pub fn format_phn(spans: &[LabelSpan]) -> String {
    spans
        .iter()
        .map(|s| format!("{} {} {}\n", s.start, s.end, s.phone))
        .collect()
}

/// Attach labels read from a `.PHN` file. Label ends that overrun the audio
/// by a few samples (common in TIMIT) are clipped to the signal length.
pub fn attach_phn(u: Utterance, path: &Path) -> Result<Utterance> {
    let len = u.len();
    let spans = load_phn(path)?
        .into_iter()
        .filter(|s| s.start < len)
        .map(|mut s| {
            s.end = s.end.min(len);
            s
        })
        .collect();
    u.with_labels(spans)
}

const RESAMPLE_CUTOFF_HZ: f64 = 3800.0;
const RESAMPLE_ZERO_CROSSINGS: f64 = 64.0;
const RESAMPLE_KAISER_BETA: f64 = 8.0;

/// Convert to the 8 kHz analysis rate with a Kaiser-windowed sinc
/// interpolator (cutoff 3.8 kHz). Labels are rescaled to the new rate.
pub fn resample_to_8k(u: Utterance) -> Result<Utterance> {
    if !matches!(u.fs, 8000 | 16000 | 44100 | 48000) {
        return Err(Error::UnsupportedRate(u.fs));
    }
    if u.fs == ANALYSIS_RATE {
        return Ok(u);
    }
    let fs_in = u.fs as u64;
    let fs_out = ANALYSIS_RATE as u64;
    let n_in = u.len();
    let n_out = ((n_in as u64 * fs_out + fs_in / 2) / fs_in) as usize;

    let rho = 2.0 * RESAMPLE_CUTOFF_HZ / fs_in as f64;
    let half_width = RESAMPLE_ZERO_CROSSINGS / rho;
    let i0_beta = bessel_i0(RESAMPLE_KAISER_BETA);
    let kernel = |tau: f64| -> f64 {
        let r = tau / half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let arg = std::f64::consts::PI * rho * tau;
        let sinc = if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
        let win = bessel_i0(RESAMPLE_KAISER_BETA * (1.0 - r * r).sqrt()) / i0_beta;
        rho * sinc * win
    };

    let mut out = Vec::with_capacity(n_out);
    for m in 0..n_out {
        let t = (m as u64 * fs_in) as f64 / fs_out as f64;
        let lo = (t - half_width).ceil().max(0.0) as usize;
        let hi = ((t + half_width).floor() as usize).min(n_in - 1);
        let mut acc = 0.0;
        for n in lo..=hi {
            acc += u.samples[n] * kernel(t - n as f64);
        }
        out.push(acc);
    }

    let labels = u.labels.map(|spans| {
        let scale = |i: usize| ((i as u64 * fs_out + fs_in / 2) / fs_in) as usize;
        spans
            .into_iter()
            .map(|s| LabelSpan {
                start: scale(s.start),
                end: scale(s.end).min(n_out),
                phone: s.phone,
            })
            .filter(|s| s.start < s.end)
            .collect::<Vec<_>>()
    });
    let mut res = Utterance::new(out, ANALYSIS_RATE)?;
    if let Some(l) = labels {
        res = res.with_labels(l)?;
    }
    Ok(res)
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Seeded unit-variance white Gaussian noise.
pub fn white_noise(len: usize, fs: u32, seed: u64) -> Result<Utterance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
    Utterance::new(samples, fs)
}

/// Gain that brings noise of power `noise_power` to `snr_db` below `signal_power`.
pub fn noise_gain(signal_power: f64, noise_power: f64, snr_db: f64) -> f64 {
    (signal_power / (noise_power * 10f64.powf(snr_db / 10.0))).sqrt()
}

/// Loop `noise` until it covers `len` samples, then truncate.
pub fn tile_noise(noise: &[f64], len: usize) -> Vec<f64> {
    noise.iter().copied().cycle().take(len).collect()
}

/// Add noise at `snr_db` (measured over the whole utterance) and re-peak-normalise.
/// `f64::INFINITY` returns the signal untouched.
pub fn mix_noise(u: &Utterance, noise: &Utterance, snr_db: f64) -> Result<Utterance> {
    if u.fs != noise.fs {
        return Err(Error::RateMismatch(u.fs, noise.fs));
    }
    if snr_db == f64::INFINITY {
        return Ok(u.clone());
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidArgument("SNR is NaN".into()));
    }
    let noise = tile_noise(&noise.samples, u.len());
    let p_noise = dsp::mean_square(&noise);
    if p_noise == 0.0 {
        return Err(Error::SilentNoise);
    }
    let alpha = noise_gain(dsp::mean_square(&u.samples), p_noise, snr_db);
    let samples = u.samples.iter().zip(&noise).map(|(s, n)| s + alpha * n).collect();
    Ok(Utterance {
        samples,
        fs: u.fs,
        labels: u.labels.clone(),
    }
    .peak_normalized())
}
