//! Ground-truth test signals: a jittered pulse train through cascaded
//! second-order formant resonators, plus a white noise floor.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Utterance, ANALYSIS_RATE};
use crate::dsp;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Formant {
    pub freq: f64,
    pub bandwidth: f64,
    /// Stage gain. In a cascade only the product of gains matters, and the
    /// output is peak normalised, so this does not change spectral shape.
    pub gain: f64,
}

impl Formant {
    pub fn new(freq: f64, bandwidth: f64, gain: f64) -> Self {
        Formant { freq, bandwidth, gain }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub pitch: f64,
    pub formants: Vec<Formant>,
    pub duration: f64,
    /// Each period is perturbed uniformly within `±jitter` of the nominal period.
    pub jitter: f64,
    /// Standard deviation of the additive noise, relative to a unit-peak voiced signal.
    pub noise_floor: f64,
    /// Width of the Hann-shaped excitation pulse; 0 gives a unit impulse.
    #[serde(default)]
    pub pulse_width_ms: f64,
    /// Standard deviation of white noise added to the excitation late in each
    /// cycle (from `ASPIRATION_ONSET` of the period onward), relative to the
    /// unit pulse.
    #[serde(default)]
    pub aspiration: f64,
    #[serde(default = "default_fs")]
    pub fs: u32,
}

fn default_fs() -> u32 {
    ANALYSIS_RATE
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            pitch: 120.0,
            formants: vec![
                Formant::new(700.0, 130.0, 1.0),
                Formant::new(1220.0, 70.0, 0.6),
                Formant::new(2600.0, 160.0, 0.3),
            ],
            duration: 0.5,
            jitter: 0.0,
            noise_floor: 0.0,
            pulse_width_ms: 0.0,
            aspiration: 0.0,
            fs: ANALYSIS_RATE,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSynthSpec(m));
        if self.fs == 0 {
            return bad("fs must be positive".into());
        }
        if !(50.0..=500.0).contains(&self.pitch) {
            return bad(format!("pitch {} Hz outside 50..500", self.pitch));
        }
        if !(self.duration * self.pitch > 3.0) {
            return bad("duration must exceed three pitch periods".into());
        }
        let nyquist = self.fs as f64 / 2.0;
        for f in &self.formants {
            if !(f.freq > 0.0 && f.freq < nyquist) {
                return bad(format!("formant {} Hz not below {nyquist} Hz", f.freq));
            }
            if !(f.bandwidth > 0.0) {
                return bad(format!("bandwidth {} must be positive", f.bandwidth));
            }
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return bad(format!("jitter {} outside [0, 0.5)", self.jitter));
        }
        if !(self.noise_floor >= 0.0) {
            return bad("noise floor must be nonnegative".into());
        }
        if !(self.pulse_width_ms >= 0.0) {
            return bad("pulse width must be nonnegative".into());
        }
        if !(self.aspiration >= 0.0) {
            return bad("aspiration must be nonnegative".into());
        }
        Ok(())
    }
}

/// Synthesised utterance together with its true excitation instants.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesized {
    pub utterance: Utterance,
    pub epochs: Vec<usize>,
}

/// Second-order resonator with unit DC gain.
fn resonator(x: &[f64], f: &Formant, fs: f64) -> Vec<f64> {
    let c = -(-2.0 * PI * f.bandwidth / fs).exp();
    let b = 2.0 * (-PI * f.bandwidth / fs).exp() * (2.0 * PI * f.freq / fs).cos();
    let a = 1.0 - b - c;
    let mut y = Vec::with_capacity(x.len());
    let (mut y1, mut y2) = (0.0, 0.0);
    for &v in x {
        let out = f.gain * a * v + b * y1 + c * y2;
        y.push(out);
        y2 = y1;
        y1 = out;
    }
    y
}

/// Fraction of the period after which aspiration noise starts.
pub const ASPIRATION_ONSET: f64 = 0.7;

/// Generate the signal described by `spec`. The excitation is negative-going,
/// like the glottal-flow derivative at closure.
pub fn synth(spec: &SynthSpec, seed: u64) -> Result<Synthesized> {
    spec.validate()?;
    let fs = spec.fs as f64;
    let len = (spec.duration * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let period = fs / spec.pitch;
    let mut epochs = Vec::new();
    let mut t = period;
    while (t.round() as usize) < len {
        epochs.push(t.round() as usize);
        let perturb = if spec.jitter > 0.0 {
            rng.random_range(-spec.jitter..=spec.jitter)
        } else {
            0.0
        };
        t += period * (1.0 + perturb);
    }

    let mut excitation = vec![0.0; len];
    let half = (spec.pulse_width_ms * 1e-3 * fs / 2.0).round() as isize;
    for &e in &epochs {
        if half == 0 {
            excitation[e] -= 1.0;
            continue;
        }
        for k in -half..=half {
            let idx = e as isize + k;
            if idx >= 0 && (idx as usize) < len {
                let w = 0.5 * (1.0 + (PI * k as f64 / (half + 1) as f64).cos());
                excitation[idx as usize] -= w;
            }
        }
    }

    if spec.aspiration > 0.0 {
        // Late open phase only, up to closure.
        for w in epochs.windows(2) {
            let start = w[0] + (ASPIRATION_ONSET * (w[1] - w[0]) as f64).round() as usize;
            for x in &mut excitation[start..w[1]] {
                let n: f64 = StandardNormal.sample(&mut rng);
                *x += spec.aspiration * n;
            }
        }
    }

    let mut signal = excitation;
    for f in &spec.formants {
        signal = resonator(&signal, f, fs);
    }
    let peak = dsp::max_abs(&signal);
    if peak > 0.0 {
        signal.iter_mut().for_each(|s| *s /= peak);
    }
    if spec.noise_floor > 0.0 {
        for s in &mut signal {
            let n: f64 = StandardNormal.sample(&mut rng);
            *s += spec.noise_floor * n;
        }
    }
    let utterance = Utterance::new(signal, spec.fs)?.peak_normalized();
    Ok(Synthesized { utterance, epochs })
}

/// Parse `freq:bandwidth[:gain]` triples separated by commas.
pub fn parse_formants(text: &str) -> Result<Vec<Formant>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidSynthSpec(format!("bad formant '{item}'")))
            };
            match parts.as_slice() {
                [f, b] => Ok(Formant::new(num(f)?, num(b)?, 1.0)),
                [f, b, g] => Ok(Formant::new(num(f)?, num(b)?, num(g)?)),
                _ => Err(Error::InvalidSynthSpec(format!("bad formant '{item}'"))),
            }
        })
        .collect()
}
