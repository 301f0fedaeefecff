use crate::error::{Error, Result};
use crate::field::{FeatureField, PlaneField};
use crate::sve::sigmoid;

use super::params::HeadParams;

/// Default decision threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.4;

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub logits: PlaneField,
    pub probs: PlaneField,
    pub mask: PlaneField,
}

/// Logits `Z = w·C + b`, probabilities `σ(Z)`, mask `[P > τ]`.
pub fn predict_head(c_k: &FeatureField, head: &HeadParams, tau: f64) -> Result<Prediction> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("threshold {tau} outside (0, 1)")));
    }
    if head.weights.len() != c_k.channels() {
        return Err(Error::Config(format!(
            "head has {} weights for {} channels",
            head.weights.len(),
            c_k.channels()
        )));
    }
    let mut logits = PlaneField::filled(c_k.height(), c_k.width(), head.bias);
    for (c, &w) in head.weights.iter().enumerate() {
        for (z, v) in logits.data_mut().iter_mut().zip(c_k.channel(c)) {
            *z += w * v;
        }
    }
    let probs = logits.map(sigmoid);
    let mask = probs.map(|p| if p > tau { 1.0 } else { 0.0 });
    Ok(Prediction {
        logits,
        probs,
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_logits_pass_threshold() {
        let c = FeatureField::zeros(2, 3, 3);
        let p = predict_head(&c, &HeadParams { weights: vec![0.0; 2], bias: 0.0 }, 0.4).unwrap();
        assert!(p.probs.data().iter().all(|&v| v == 0.5));
        assert!(p.mask.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn very_negative_logits() {
        let c = FeatureField::zeros(1, 2, 2);
        let p = predict_head(&c, &HeadParams { weights: vec![1.0], bias: -20.0 }, 0.4).unwrap();
        assert!(p.probs.data().iter().all(|&v| v < 1e-8));
        assert!(p.mask.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn threshold_straddle() {
        let logit = |p: f64| (p / (1.0 - p)).ln();
        let c = FeatureField::new(1, 1, 2, vec![logit(0.39), logit(0.41)]).unwrap();
        let p = predict_head(&c, &HeadParams { weights: vec![1.0], bias: 0.0 }, 0.4).unwrap();
        assert_eq!(p.mask.data(), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_threshold() {
        let c = FeatureField::zeros(1, 1, 1);
        assert!(predict_head(&c, &HeadParams::new(1), 1.0).is_err());
    }
}
