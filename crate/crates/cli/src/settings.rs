//! Flat `name = value` configuration with typed accessors.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use unfold_core::fit::FitConfig;
use unfold_core::model::Group;
use unfold_core::objective::{ObjectiveConfig, RecReduction, SsecConfig};
use unfold_core::synth::{Rect, SynthSpec};

use crate::UsageError;

/// Every recognised key with its default.
const DEFAULTS: &[(&str, &str)] = &[
    ("channels", "4"),
    ("height", "32"),
    ("width", "32"),
    ("patch_side", "8"),
    ("rects", "8:8:8:8,16:24:8:8"),
    ("change_amp", "1"),
    ("nuisance_amp", "0.5"),
    ("noise", "0.05"),
    ("offset", "0.3"),
    ("steps", "3"),
    ("threshold", "0.4"),
    ("margin", "0.3"),
    ("tau_lo", "0.05"),
    ("tau_hi", "0.4"),
    ("lambda_e", "0.5"),
    ("lambda_c", "1"),
    ("ssec", "true"),
    ("lambda_rec", "1"),
    ("rec_reduction", "mean"),
    ("iterations", "40"),
    ("lr", "0.05"),
    ("fd_step", "0.0001"),
    ("batch", "4"),
    ("groups", "steps,psi,mapper,head"),
    ("init_seed", "1"),
    ("seeds", ""),
    ("eval_offset", "10000"),
    ("k_max", "5"),
    ("sens_iterations", "10"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
    pub seed: Option<u64>,
}

impl Settings {
    pub fn defaults() -> Self {
        Self {
            values: DEFAULTS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            seed: None,
        }
    }

    /// Defaults, then the config file, then explicit overrides.
    pub fn load(config: Option<&Path>, seed: Option<u64>) -> Result<Self, UsageError> {
        let mut s = Self::defaults();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
            s.merge_text(&text)?;
        }
        if seed.is_some() {
            s.seed = seed;
        }
        Ok(s)
    }

    pub fn merge_text(&mut self, text: &str) -> Result<(), UsageError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| UsageError(format!("config line {}: expected name=value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "seed" {
                self.seed = Some(parse_value(k, v)?);
            } else {
                self.set(k, v)?;
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), UsageError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.into();
                Ok(())
            }
            None => Err(UsageError(format!("unknown config key '{key}'"))),
        }
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, UsageError> {
        parse_value(key, self.raw(key))
    }

    /// `seeds` when set, otherwise the command's default.
    pub fn seeds_or(&self, default: usize) -> Result<usize, UsageError> {
        if self.raw("seeds").is_empty() {
            Ok(default)
        } else {
            self.get("seeds")
        }
    }

    pub fn require_seed(&self) -> Result<u64, UsageError> {
        self.seed
            .ok_or_else(|| UsageError("this command needs --seed (or seed= in the config file)".into()))
    }

    /// First 16 hex digits of SHA-256 over the sorted effective settings.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.values {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn rects(&self) -> Result<Vec<Rect>, UsageError> {
        let raw = self.raw("rects");
        if raw.is_empty() || raw == "none" {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|r| {
                let v: Vec<usize> = r
                    .split(':')
                    .map(|t| t.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| UsageError(format!("bad rectangle '{r}', expected y:x:h:w")))?;
                match v[..] {
                    [y, x, h, w] => Ok(Rect::new(y, x, h, w)),
                    _ => Err(UsageError(format!("bad rectangle '{r}', expected y:x:h:w"))),
                }
            })
            .collect()
    }

    pub fn spec(&self, seed: u64) -> Result<SynthSpec, UsageError> {
        let spec = SynthSpec {
            seed,
            channels: self.get("channels")?,
            height: self.get("height")?,
            width: self.get("width")?,
            patch_side: self.get("patch_side")?,
            rects: self.rects()?,
            change_amp: self.get("change_amp")?,
            nuisance_amp: self.get("nuisance_amp")?,
            noise: self.get("noise")?,
            offset: self.get("offset")?,
        };
        spec.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(spec)
    }

    pub fn objective(&self, steps: usize) -> Result<ObjectiveConfig, UsageError> {
        let mut ssec = SsecConfig::for_steps(steps);
        ssec.margin = self.get("margin")?;
        ssec.tau_lo = self.get("tau_lo")?;
        ssec.tau_hi = self.get("tau_hi")?;
        ssec.lambda_e = self.get("lambda_e")?;
        ssec.lambda_c = self.get("lambda_c")?;
        if !self.get::<bool>("ssec")? {
            ssec.lambda_e = 0.0;
            ssec.lambda_c = 0.0;
        }
        ssec.validate(steps).map_err(|e| UsageError(e.to_string()))?;
        let reduction: RecReduction = self
            .raw("rec_reduction")
            .parse()
            .map_err(|e: unfold_core::Error| UsageError(e.to_string()))?;
        Ok(ObjectiveConfig {
            ssec,
            lambda_rec: self.get("lambda_rec")?,
            rec_reduction: reduction,
            lambda_aux: 0.0,
        })
    }

    /// Training batch `seed, seed+1, …` under the configured instance spec.
    pub fn fit_config(&self, seed: u64, steps: usize) -> Result<FitConfig, UsageError> {
        let batch: usize = self.get("batch")?;
        let mut cfg = FitConfig::new(seed, batch, steps);
        cfg.batch = (0..batch as u64)
            .map(|i| self.spec(seed + i))
            .collect::<Result<_, _>>()?;
        cfg.learning_rate = self.get("lr")?;
        cfg.iterations = self.get("iterations")?;
        cfg.fd_step = self.get("fd_step")?;
        cfg.groups = Group::parse_list(self.raw("groups")).map_err(|e| UsageError(e.to_string()))?;
        cfg.seed = self.get("init_seed")?;
        cfg.objective = self.objective(steps)?;
        cfg.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(cfg)
    }

    /// Seeds of held-out evaluation instances.
    pub fn eval_seeds(&self, seed: u64, count: usize) -> Result<Vec<u64>, UsageError> {
        let offset: u64 = self.get("eval_offset")?;
        Ok((0..count as u64).map(|i| seed + offset + i).collect())
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, UsageError> {
    raw.parse()
        .map_err(|_| UsageError(format!("config key '{key}' has invalid value '{raw}'")))
}
