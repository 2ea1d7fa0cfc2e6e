//! `key = value` settings files mirroring the command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::classify::DetectorKind;
use crate::error::{Error, Result};
use crate::pipeline::{ExtractConfig, FsPolicy};
use crate::supra::NccDenominator;

/// Every tunable; `None` means "not given here".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub fs_policy: Option<FsPolicy>,
    pub nfft: Option<usize>,
    pub ztw_ms: Option<f64>,
    pub taper: Option<bool>,
    pub k: Option<usize>,
    pub ncc: Option<NccDenominator>,
    pub seed: Option<u64>,
    pub snr: Option<f64>,
    pub noise_wav: Option<PathBuf>,
    pub norm_stats: Option<PathBuf>,
    pub weights_json: Option<PathBuf>,
    pub frame_ms: Option<f64>,
    pub frame_shift_ms: Option<f64>,
    pub refine: Option<bool>,
    pub detector: Option<DetectorKind>,
    pub phone_map: Option<PathBuf>,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("config key '{key}': cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::InvalidArgument(format!(
            "config key '{key}': expected a boolean, got '{v}'"
        ))),
    }
}

impl Settings {
    pub fn from_ini_str(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        let mut s = Settings::default();
        for (_, props) in ini.iter() {
            for (key, v) in props.iter() {
                let norm = key.trim().to_ascii_lowercase().replace('-', "_");
                match norm.as_str() {
                    "fs_policy" => s.fs_policy = Some(v.parse()?),
                    "nfft" => s.nfft = Some(parse(key, v)?),
                    "ztw_ms" => s.ztw_ms = Some(parse(key, v)?),
                    "taper" => s.taper = Some(parse_bool(key, v)?),
                    "k" => s.k = Some(parse(key, v)?),
                    "ncc" => {
                        s.ncc = Some(match v.trim() {
                            "normalized" => NccDenominator::Normalized,
                            "energy_product" => NccDenominator::EnergyProduct,
                            other => return Err(Error::InvalidArgument(format!("config key 'ncc': '{other}'"))),
                        })
                    }
                    "seed" => s.seed = Some(parse(key, v)?),
                    "snr" => s.snr = Some(parse(key, v)?),
                    "noise_wav" => s.noise_wav = Some(PathBuf::from(v.trim())),
                    "norm_stats" => s.norm_stats = Some(PathBuf::from(v.trim())),
                    "weights_json" => s.weights_json = Some(PathBuf::from(v.trim())),
                    "frame_ms" => s.frame_ms = Some(parse(key, v)?),
                    "frame_shift_ms" => s.frame_shift_ms = Some(parse(key, v)?),
                    "refine" => s.refine = Some(parse_bool(key, v)?),
                    "detector" => {
                        s.detector = Some(match v.trim() {
                            "gaussian" => DetectorKind::Gaussian,
                            "threshold" => DetectorKind::Threshold,
                            other => return Err(Error::InvalidArgument(format!("config key 'detector': '{other}'"))),
                        })
                    }
                    "phone_map" => s.phone_map = Some(PathBuf::from(v.trim())),
                    _ => return Err(Error::InvalidArgument(format!("unknown config key '{key}'"))),
                }
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_ini_str(&text)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overridden_by(self, over: Settings) -> Settings {
        Settings {
            fs_policy: over.fs_policy.or(self.fs_policy),
            nfft: over.nfft.or(self.nfft),
            ztw_ms: over.ztw_ms.or(self.ztw_ms),
            taper: over.taper.or(self.taper),
            k: over.k.or(self.k),
            ncc: over.ncc.or(self.ncc),
            seed: over.seed.or(self.seed),
            snr: over.snr.or(self.snr),
            noise_wav: over.noise_wav.or(self.noise_wav),
            norm_stats: over.norm_stats.or(self.norm_stats),
            weights_json: over.weights_json.or(self.weights_json),
            frame_ms: over.frame_ms.or(self.frame_ms),
            frame_shift_ms: over.frame_shift_ms.or(self.frame_shift_ms),
            refine: over.refine.or(self.refine),
            detector: over.detector.or(self.detector),
            phone_map: over.phone_map.or(self.phone_map),
        }
    }

    pub fn extract_config(&self) -> Result<ExtractConfig> {
        let mut c = ExtractConfig::default();
        if let Some(v) = self.fs_policy {
            c.fs_policy = v;
        }
        if let Some(v) = self.nfft {
            if !v.is_power_of_two() {
                return Err(Error::InvalidArgument(format!("nfft {v} is not a power of two")));
            }
            c.hngd.nfft = v;
        }
        if let Some(v) = self.ztw_ms {
            c.hngd.window_ms = v;
        }
        if let Some(v) = self.taper {
            c.hngd.taper = v;
        }
        if let Some(v) = self.k {
            c.f7.k = v;
        }
        if let Some(v) = self.ncc {
            c.f7.denominator = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.snr_db = self.snr;
        c.noise_wav = self.noise_wav.clone();
        if let Some(v) = self.frame_ms {
            c.frame.frame_ms = v;
        }
        if let Some(v) = self.frame_shift_ms {
            c.frame.shift_ms = v;
        }
        if let Some(v) = self.refine {
            c.refine = v;
        }
        if let Some(p) = &self.phone_map {
            c.phone_map = crate::corpus::PhoneMap::load_overrides(p)?;
        }
        Ok(c)
    }
}
