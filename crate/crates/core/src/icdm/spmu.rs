//! Shared-parameter memory unit: a convolutional GRU with 1×1 state
//! transitions.
//!
//! ```text
//! z  = σ(W_z·[x, h] + b_z)
//! r  = σ(W_r·[x, h] + b_r)
//! h̃  = tanh(W_c·[x, r⊙h] + b_c)
//! h' = (1 − z)⊙h + z⊙h̃
//! ```
//!
//! One cell is shared by every unrolled step of a branch.

use crate::field::{FeatureField, Matrix};
use crate::rng::Stream;
use crate::sve::sigmoid;

#[derive(Clone, Debug, PartialEq)]
pub struct GruCell {
    /// `d × 2d` update-gate weights over `[x, h]`.
    pub w_update: Matrix,
    pub b_update: Vec<f64>,
    /// `d × 2d` reset-gate weights over `[x, h]`.
    pub w_reset: Matrix,
    pub b_reset: Vec<f64>,
    /// `d × 2d` candidate weights over `[x, r⊙h]`.
    pub w_cand: Matrix,
    pub b_cand: Vec<f64>,
}

impl GruCell {
    pub fn zeros(channels: usize) -> Self {
        let d = channels;
        Self {
            w_update: Matrix::zeros(d, 2 * d),
            b_update: vec![0.0; d],
            w_reset: Matrix::zeros(d, 2 * d),
            b_reset: vec![0.0; d],
            w_cand: Matrix::zeros(d, 2 * d),
            b_cand: vec![0.0; d],
        }
    }

    /// Small random gate weights, identity candidate path on `x`, update
    /// gate biased open by `update_bias`.
    pub fn seeded(channels: usize, update_bias: f64, scale: f64, rng: &mut Stream) -> Self {
        let d = channels;
        let mut cell = Self::zeros(d);
        let bound = scale / ((2 * d) as f64).sqrt();
        for m in [&mut cell.w_update, &mut cell.w_reset, &mut cell.w_cand] {
            rng.fill_uniform(m.data_mut(), -bound, bound);
        }
        for o in 0..d {
            let v = cell.w_cand.get(o, o);
            cell.w_cand.set(o, o, v + 1.0);
        }
        cell.b_update.fill(update_bias);
        cell
    }

    pub fn channels(&self) -> usize {
        self.b_update.len()
    }

    pub fn param_count(&self) -> usize {
        let d = self.channels();
        3 * (2 * d * d + d)
    }

    pub fn update(&self, x: &FeatureField, h: &FeatureField) -> FeatureField {
        let z = pair_affine(&self.w_update, &self.b_update, x, h).map(sigmoid);
        let r = pair_affine(&self.w_reset, &self.b_reset, x, h).map(sigmoid);
        let rh = r.zip_map(h, |a, b| a * b);
        let cand = pair_affine(&self.w_cand, &self.b_cand, x, &rh).map(f64::tanh);
        let mut out = h.clone();
        for ((o, zv), cv) in out.data_mut().iter_mut().zip(z.data()).zip(cand.data()) {
            *o = (1.0 - zv) * *o + zv * cv;
        }
        out
    }
}

/// `W·[a, b] + bias` per pixel, `W` is `d × 2d`.
fn pair_affine(w: &Matrix, bias: &[f64], a: &FeatureField, b: &FeatureField) -> FeatureField {
    let d = a.channels();
    debug_assert_eq!(w.cols(), 2 * d);
    let n = a.plane_len();
    let mut out = FeatureField::zeros(w.rows(), a.height(), a.width());
    for o in 0..w.rows() {
        let dst = out.channel_mut(o);
        dst.fill(bias[o]);
        for (i, src) in (0..d).map(|i| (i, a.channel(i))).chain((0..d).map(|i| (d + i, b.channel(i)))) {
            let wv = w.get(o, i);
            if wv == 0.0 {
                continue;
            }
            for (v, s) in dst.iter_mut().zip(src) {
                *v += wv * s;
            }
        }
        debug_assert_eq!(dst.len(), n);
    }
    out
}
