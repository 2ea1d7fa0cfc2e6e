#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sonority::corpus::{self, LabelSpan, SonorantClass};
use sonority::synth::{synth, Formant, SynthSpec, Synthesized};

/// Representative phone for each sonorant class, ordered low vowel to nasal.
pub const CLASS_PHONES: [&str; 6] = ["aa", "eh", "iy", "w", "l", "n"];

/// Three formants drawn from the low/mid/high bands with at least 300 Hz
/// between neighbours, plus bandwidths in 60..200 Hz.
pub fn random_vowel(seed: u64) -> (SynthSpec, [f64; 3]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let f = [
            rng.random_range(250.0..900.0),
            rng.random_range(900.0..2200.0),
            rng.random_range(2200.0..3200.0),
        ];
        if f[1] - f[0] < 300.0 || f[2] - f[1] < 300.0 {
            continue;
        }
        let formants = f
            .iter()
            .map(|&freq| Formant::new(freq, rng.random_range(60.0..200.0), 1.0))
            .collect();
        let spec = SynthSpec {
            pitch: rng.random_range(100.0..200.0),
            formants,
            ..SynthSpec::default()
        };
        return (spec, f);
    }
}

/// Synthesis settings for class `c` (0 = low vowel ... 5 = nasal): formant
/// bandwidth, excitation pulse width, jitter and aspiration noise all grow with `c`
/// while F1 falls.
pub fn continuum_spec(c: usize, seed: u64) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(6364136223846793005).wrapping_add(c as u64));
    let t = c as f64 / 5.0;
    let vary = |rng: &mut ChaCha8Rng, v: f64, r: f64| v * (1.0 + rng.random_range(-r..r));
    let bw = 60.0 + 340.0 * t;
    SynthSpec {
        pitch: rng.random_range(110.0..150.0),
        formants: vec![
            Formant::new(vary(&mut rng, 700.0 - 300.0 * t, 0.05), vary(&mut rng, bw, 0.1), 1.0),
            Formant::new(vary(&mut rng, 1600.0, 0.05), vary(&mut rng, bw, 0.1), 1.0),
            Formant::new(vary(&mut rng, 2700.0, 0.05), vary(&mut rng, bw, 0.1), 1.0),
        ],
        duration: 0.5,
        jitter: 0.01 + 0.05 * t,
        noise_floor: 0.002,
        aspiration: 0.2 * t,
        pulse_width_ms: 0.25 * t,
        ..SynthSpec::default()
    }
}

pub fn continuum_utterance(c: usize, seed: u64) -> Synthesized {
    synth(&continuum_spec(c, seed), seed).expect("valid continuum spec")
}

/// Write `count` utterances per class as WAV + PHN pairs; the middle 80% of
/// each file is labelled with the class phone, the rest as silence.
pub fn write_continuum_corpus(dir: &Path, count: usize, seed: u64) -> Vec<PathBuf> {
    let mut paths = Vec::new();
    for (c, phone) in CLASS_PHONES.iter().enumerate() {
        for i in 0..count {
            let s = continuum_utterance(c, seed + i as u64 * 7919);
            let n = s.utterance.len();
            let wav = dir.join(format!("c{c}_{i:03}.wav"));
            corpus::save_wav_pcm16(&wav, &s.utterance).unwrap();
            let spans = vec![
                LabelSpan {
                    start: 0,
                    end: n / 10,
                    phone: "h#".into(),
                },
                LabelSpan {
                    start: n / 10,
                    end: n - n / 10,
                    phone: phone.to_string(),
                },
                LabelSpan {
                    start: n - n / 10,
                    end: n,
                    phone: "h#".into(),
                },
            ];
            std::fs::write(wav.with_extension("phn"), corpus::format_phn(&spans)).unwrap();
            paths.push(wav);
        }
    }
    paths
}

pub fn class_of(c: usize) -> SonorantClass {
    SonorantClass::SONORANT[c]
}
