//! Experiments behind a common trait, registered by subcommand name.

mod ablation;
mod check;
mod contraction;
mod fit;
mod gen;
mod k_sweep;
mod sensitivity;
mod sve_prior;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use unfold_core::fit::{fit, FitResult};
use unfold_core::model::{f1_score, Model, Sample};
use unfold_core::objective::{nuisance_mean, separation, LossReport, ObjectiveConfig};
use unfold_core::synth::gen_instance;

use crate::settings::Settings;
use crate::UsageError;

/// Command-specific options not covered by the flat config.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub params: Option<PathBuf>,
    pub replay: Option<Vec<f64>>,
    pub null_params: bool,
    pub timing: bool,
}

pub struct Context {
    pub settings: Settings,
    pub out: Option<PathBuf>,
    pub options: Options,
}

impl Context {
    pub fn load_params(&self) -> Result<Model> {
        let path = self
            .options
            .params
            .as_ref()
            .ok_or_else(|| UsageError("missing --params (a fitted parameter file from `unfold fit`)".into()))?;
        if !path.exists() {
            return Err(UsageError(format!("parameter file {} does not exist", path.display())).into());
        }
        Ok(Model::load(path)?)
    }

    pub fn require_out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| UsageError("this command writes files and needs --out DIR".into()).into())
    }

    /// Fresh model fitted under the current settings.
    pub fn fit_model(&self, seed: u64, steps: usize, tweak: impl FnOnce(&mut Model)) -> Result<FitResult> {
        let cfg = self.settings.fit_config(seed, steps)?;
        let mut model = Model::seeded(self.settings.get("channels")?, steps, cfg.seed)?;
        model.tau = self.settings.get("threshold")?;
        tweak(&mut model);
        Ok(fit(&cfg, &model)?)
    }
}

/// Output of one experiment.
pub struct Report {
    pub csv: String,
    /// Extra files written next to the CSV when an output directory is set.
    pub files: Vec<(String, Vec<u8>)>,
    /// Set by self-checking commands when a check did not hold.
    pub failed: bool,
}

impl Report {
    pub fn csv(csv: String) -> Self {
        Self {
            csv,
            files: Vec::new(),
            failed: false,
        }
    }
}

pub trait Experiment {
    fn name(&self) -> &'static str;
    fn needs_seed(&self, _options: &Options) -> bool {
        true
    }
    fn run(&self, ctx: &Context) -> Result<Report>;
}

pub struct Registry {
    entries: BTreeMap<&'static str, Box<dyn Experiment>>,
}

impl Registry {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, e: Box<dyn Experiment>) {
        self.entries.insert(e.name(), e);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Experiment> {
        self.entries.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &&'static str> {
        self.entries.keys()
    }
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Self::new();
        r.register(Box::new(sve_prior::SvePrior));
        r.register(Box::new(contraction::Contraction));
        r.register(Box::new(ablation::Ablation));
        r.register(Box::new(k_sweep::KSweep));
        r.register(Box::new(sensitivity::Sensitivity));
        r.register(Box::new(fit::Fit));
        r.register(Box::new(gen::Gen));
        r.register(Box::new(check::Check));
        r
    }
}

/// Held-out evaluation summary of a model.
#[derive(Clone, Copy, Debug, Default)]
pub struct Evaluation {
    pub loss: LossReport,
    pub f1: f64,
    pub mu_n: f64,
    pub separation: f64,
    pub sve_gap: Option<f64>,
    pub frac_below: f64,
    pub frac_outside: f64,
}

pub fn evaluate_model(
    model: &Model,
    samples: &[Sample],
    obj: &ObjectiveConfig,
) -> Result<Evaluation> {
    let n = samples.len().max(1) as f64;
    let mut ev = Evaluation::default();
    let mut losses = Vec::new();
    let (mut gap_sum, mut gap_n) = (0.0, 0usize);
    for s in samples {
        let f = model.forward(s, true)?;
        losses.push(model.loss_of(&f, s, obj)?);
        ev.f1 += f1_score(&f.pred.mask, &s.y) / n;
        let mu = nuisance_mean(&f.run.n);
        ev.mu_n += mu / n;
        ev.separation += separation(&f.run.c, &f.run.n, obj.ssec.epsilon) / n;
        if mu < obj.ssec.tau_lo {
            ev.frac_below += 1.0 / n;
        }
        if mu < obj.ssec.tau_lo || mu > obj.ssec.tau_hi {
            ev.frac_outside += 1.0 / n;
        }
        if let Some(g) = f.run.trace.records.last().and_then(|r| r.sve_gap()) {
            gap_sum += g;
            gap_n += 1;
        }
    }
    ev.loss = LossReport::mean(&losses);
    ev.sve_gap = (gap_n > 0).then(|| gap_sum / gap_n as f64);
    Ok(ev)
}

/// Difference-field samples for the given seeds.
pub fn instance_samples(settings: &Settings, seeds: &[u64]) -> Result<Vec<Sample>> {
    seeds
        .iter()
        .map(|&s| Ok(Sample::from_instance(&gen_instance(&settings.spec(s)?)?)))
        .collect()
}

/// Bi-temporal samples for the given seeds.
pub fn bitemporal_samples(settings: &Settings, seeds: &[u64]) -> Result<Vec<Sample>> {
    seeds
        .iter()
        .map(|&s| Ok(Sample::bitemporal(&settings.spec(s)?)?))
        .collect()
}
