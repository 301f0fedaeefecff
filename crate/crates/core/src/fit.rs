//! Finite-difference gradient descent for desk-scale parameter counts.

use crate::error::{config_err, Error, Result};
use crate::model::{Forward, Group, Model, Sample};
use crate::objective::{LossReport, ObjectiveConfig};
use crate::report::fmt_g6;
use crate::synth::{gen_instance, SynthSpec};

pub const DEFAULT_LEARNING_RATE: f64 = 0.05;
pub const DEFAULT_ITERATIONS: usize = 300;
pub const DEFAULT_FD_STEP: f64 = 1e-4;
pub const MAX_PARAMS: usize = 2000;
/// A single iteration may not multiply the loss by more than this.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

/// Central differences `(f(θ+h·eᵢ) − f(θ−h·eᵢ)) / 2h`.
pub fn fd_gradient(f: &mut dyn FnMut(&[f64]) -> Result<f64>, theta: &[f64], h: f64) -> Result<Vec<f64>> {
    check_step(h)?;
    let mut x = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        x[i] = theta[i] + h;
        let up = finite(f(&x)?, i, "+h")?;
        x[i] = theta[i] - h;
        let down = finite(f(&x)?, i, "-h")?;
        x[i] = theta[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Forward differences `(f(θ+h·eᵢ) − f(θ)) / h`.
pub fn forward_gradient(f: &mut dyn FnMut(&[f64]) -> Result<f64>, theta: &[f64], h: f64) -> Result<Vec<f64>> {
    check_step(h)?;
    let base = finite(f(theta)?, 0, "base")?;
    let mut x = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        x[i] = theta[i] + h;
        let up = finite(f(&x)?, i, "+h")?;
        x[i] = theta[i];
        grad.push((up - base) / h);
    }
    Ok(grad)
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return config_err(format!("finite-difference step {h} must be positive"));
    }
    Ok(())
}

fn finite(v: f64, coordinate: usize, direction: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { coordinate, direction })
    }
}

/// Plain gradient descent on a scalar function; returns the final point
/// and the loss at every visited point (`iterations + 1` entries).
pub fn descend(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    theta: &[f64],
    lr: f64,
    iterations: usize,
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(lr > 0.0) {
        return config_err(format!("learning rate {lr} must be positive"));
    }
    let mut x = theta.to_vec();
    let mut curve = vec![finite(f(&x)?, 0, "base")?];
    for it in 0..iterations {
        let g = fd_gradient(f, &x, h)?;
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= lr * gi;
        }
        let loss = finite(f(&x)?, 0, "base")?;
        check_divergence(it + 1, *curve.last().unwrap(), loss)?;
        curve.push(loss);
    }
    Ok((x, curve))
}

fn check_divergence(iteration: usize, previous: f64, current: f64) -> Result<()> {
    if previous > 0.0 && current > DIVERGENCE_FACTOR * previous {
        return Err(Error::Divergence {
            iteration,
            previous,
            current,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub fd_step: f64,
    pub groups: Vec<Group>,
    /// Initialisation seed of the model when fitting from scratch.
    pub seed: u64,
    pub batch: Vec<SynthSpec>,
    /// Use bi-temporal pairs (alignment stage active) instead of direct
    /// difference fields.
    pub bitemporal: bool,
    pub objective: ObjectiveConfig,
    pub max_params: usize,
}

impl FitConfig {
    /// Defaults over `batch_size` default specs with seeds `seed, seed+1, …`.
    pub fn new(seed: u64, batch_size: usize, steps: usize) -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            iterations: DEFAULT_ITERATIONS,
            fd_step: DEFAULT_FD_STEP,
            groups: Group::default_trainable(),
            seed,
            batch: (0..batch_size as u64).map(|i| SynthSpec::new(seed + i)).collect(),
            bitemporal: false,
            objective: ObjectiveConfig::for_steps(steps),
            max_params: MAX_PARAMS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_step(self.fd_step)?;
        if !(self.learning_rate > 0.0) {
            return config_err(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.batch.is_empty() {
            return config_err("fit batch is empty");
        }
        Ok(())
    }

    pub fn samples(&self) -> Result<Vec<Sample>> {
        self.batch
            .iter()
            .map(|spec| {
                if self.bitemporal {
                    Sample::bitemporal(spec)
                } else {
                    gen_instance(spec).map(|i| Sample::from_instance(&i))
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub model: Model,
    /// Batch-mean loss before the first update and after each update.
    pub curve: Vec<LossReport>,
}

impl FitResult {
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("iteration,seg,rec,ssec,total\n");
        for (i, r) in self.curve.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{},{},{}\n",
                fmt_g6(r.seg),
                fmt_g6(r.rec),
                fmt_g6(r.ssec),
                fmt_g6(r.total)
            ));
        }
        out
    }
}

/// Batch-mean loss of `model`.
pub fn batch_loss(model: &Model, samples: &[Sample], obj: &ObjectiveConfig) -> Result<LossReport> {
    let reports = samples
        .iter()
        .map(|s| model.loss(s, obj))
        .collect::<Result<Vec<_>>>()?;
    Ok(LossReport::mean(&reports))
}

fn forwards(model: &Model, samples: &[Sample]) -> Result<Vec<Forward>> {
    samples.iter().map(|s| model.forward(s, false)).collect()
}

fn head_loss(model: &Model, cache: &[Forward], samples: &[Sample], obj: &ObjectiveConfig) -> Result<f64> {
    let mut total = 0.0;
    for (f, s) in cache.iter().zip(samples) {
        total += model.loss_with_head(f, s, obj)?.total;
    }
    Ok(total / samples.len() as f64)
}

/// Central-difference gradient of the batch-mean total loss over the
/// selected groups. Head coordinates reuse the cached solver outputs.
pub fn model_gradient(
    model: &Model,
    groups: &[Group],
    samples: &[Sample],
    obj: &ObjectiveConfig,
    h: f64,
) -> Result<Vec<f64>> {
    check_step(h)?;
    let theta = model.flatten(groups);
    let head = model.group_range(groups, Group::Head);
    let cache = if head.is_empty() { Vec::new() } else { forwards(model, samples)? };
    let mut grad = Vec::with_capacity(theta.len());
    let mut x = theta.clone();
    for i in 0..theta.len() {
        let mut eval = |v: f64| -> Result<f64> {
            x[i] = v;
            let m = model.with_flat(groups, &x)?;
            let loss = if head.contains(&i) {
                head_loss(&m, &cache, samples, obj)
            } else {
                batch_loss(&m, samples, obj).map(|r| r.total)
            };
            x[i] = theta[i];
            loss
        };
        let up = finite(eval(theta[i] + h)?, i, "+h")?;
        let down = finite(eval(theta[i] - h)?, i, "-h")?;
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Gradient descent on the batch-mean total loss.
pub fn fit(config: &FitConfig, model: &Model) -> Result<FitResult> {
    config.validate()?;
    config.objective.ssec.validate(model.steps())?;
    model.validate()?;
    let n = model.param_count(&config.groups);
    if n > config.max_params {
        return config_err(format!(
            "{n} trainable parameters exceed the finite-difference limit of {}",
            config.max_params
        ));
    }
    let samples = config.samples()?;
    let obj = &config.objective;
    let mut current = model.clone();
    let mut curve = vec![checked(batch_loss(&current, &samples, obj)?)?];
    for it in 0..config.iterations {
        let g = model_gradient(&current, &config.groups, &samples, obj, config.fd_step)?;
        let mut theta = current.flatten(&config.groups);
        for (t, gi) in theta.iter_mut().zip(&g) {
            *t -= config.learning_rate * gi;
        }
        current = current.with_flat(&config.groups, &theta)?;
        current.project();
        let report = checked(batch_loss(&current, &samples, obj)?)?;
        check_divergence(it + 1, curve.last().unwrap().total, report.total)?;
        curve.push(report);
    }
    Ok(FitResult { model: current, curve })
}

fn checked(r: LossReport) -> Result<LossReport> {
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonFinite {
            coordinate: 0,
            direction: "base",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient() {
        let g = fd_gradient(&mut |t| Ok(t[0] * t[0]), &[3.0], 1e-4).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
        let g = fd_gradient(&mut |t| Ok(t[0].abs()), &[2.0], 1e-4).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn non_finite_names_coordinate() {
        let err = fd_gradient(&mut |t| Ok(if t[1] > 1.0 { f64::NAN } else { 0.0 }), &[0.0, 1.0], 1e-3).unwrap_err();
        assert!(matches!(err, Error::NonFinite { coordinate: 1, direction: "+h" }));
    }

    #[test]
    fn descend_quadratic() {
        let mut f = |t: &[f64]| Ok((t[0] - 1.5).powi(2) + 2.0 * (t[1] + 0.5).powi(2));
        let (x, curve) = descend(&mut f, &[0.0, 0.0], 0.1, 200, 1e-4).unwrap();
        assert!((x[0] - 1.5).abs() < 1e-3 && (x[1] + 0.5).abs() < 1e-3);
        assert_eq!(curve.len(), 201);
        let (y, c) = descend(&mut f, &[0.3, 0.2], 0.1, 0, 1e-4).unwrap();
        assert_eq!((y, c.len()), (vec![0.3, 0.2], 1));
    }

    #[test]
    fn descend_divergence_alarm() {
        let mut f = |t: &[f64]| Ok(t[0] * t[0]);
        assert!(matches!(
            descend(&mut f, &[1.0], 10.0, 3, 1e-4),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn zero_iterations_keep_params() {
        let m = Model::seeded(4, 2, 3).unwrap();
        let mut cfg = FitConfig::new(1, 1, 2);
        cfg.iterations = 0;
        let r = fit(&cfg, &m).unwrap();
        assert_eq!(r.model, m);
        assert_eq!(r.curve.len(), 1);
    }

    #[test]
    fn parameter_cap() {
        let m = Model::seeded(4, 2, 3).unwrap();
        let mut cfg = FitConfig::new(1, 1, 2);
        cfg.groups = Group::ALL.to_vec();
        cfg.max_params = 100;
        assert!(matches!(fit(&cfg, &m), Err(Error::Config(_))));
    }
}
