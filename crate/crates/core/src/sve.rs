//! Patch-wise singular-value entropy (SVE) and the entropy-driven gate.
//!
//! Each `p × p` patch of a `d`-channel field is reshaped to a `d × p²`
//! matrix; the Shannon entropy (natural log) of its normalised singular
//! spectrum is written back to every pixel of the patch. Rank-deficient,
//! smooth patches score low; structurally rich patches score high.

use crate::error::{config_err, Result};
use crate::field::{patch_matrix, FeatureField, Matrix, PatchLayout, PlaneField};
use crate::rng::Stream;
use crate::svd::singular_values;

pub const DEFAULT_PATCH_SIDE: usize = 8;
pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_REDUCED_CHANNELS: usize = 4;

/// Affine map `a·S + b` applied to the entropy map before the sigmoid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateMapper {
    pub scale: f64,
    pub bias: f64,
}

impl Default for GateMapper {
    fn default() -> Self {
        Self {
            scale: 1.0,
            bias: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SveParams {
    pub patch_side: usize,
    pub epsilon: f64,
    /// `d_sve × d` channel reduction applied to `|R|` before entropy estimation.
    pub reducer: Matrix,
    pub mapper: GateMapper,
}

impl SveParams {
    /// Reducer entries drawn uniform in `(−1/√d, 1/√d)` from the seeded
    /// `"sve.reducer"` stream; mapper starts at `a = 1, b = 0`.
    pub fn seeded(channels: usize, reduced_channels: usize, seed: u64) -> Result<Self> {
        if reduced_channels == 0 || reduced_channels > channels {
            return config_err(format!(
                "reduced channels {reduced_channels} must lie in 1..={channels}"
            ));
        }
        let bound = 1.0 / (channels as f64).sqrt();
        let mut rng = Stream::named(seed, "sve.reducer");
        let mut reducer = Matrix::zeros(reduced_channels, channels);
        rng.fill_uniform(reducer.data_mut(), -bound, bound);
        Ok(Self {
            patch_side: DEFAULT_PATCH_SIDE,
            epsilon: DEFAULT_EPSILON,
            reducer,
            mapper: GateMapper::default(),
        })
    }

    /// Parameters with an identity reducer (no channel reduction).
    pub fn identity(channels: usize) -> Self {
        Self {
            patch_side: DEFAULT_PATCH_SIDE,
            epsilon: DEFAULT_EPSILON,
            reducer: Matrix::identity(channels),
            mapper: GateMapper::default(),
        }
    }

    pub fn reduced_channels(&self) -> usize {
        self.reducer.rows()
    }

    pub fn validate(&self, channels: usize) -> Result<()> {
        if self.patch_side == 0 {
            return config_err("SVE patch side must be positive");
        }
        if !(self.epsilon > 0.0) {
            return config_err("SVE epsilon must be positive");
        }
        let r = self.reducer.rows();
        if self.reducer.cols() != channels || r == 0 || r > channels {
            return config_err(format!(
                "reducer is {}x{}, expected d_sve x {channels} with 1 <= d_sve <= {channels}",
                r,
                self.reducer.cols()
            ));
        }
        Ok(())
    }
}

/// Normalises a nonnegative spectrum to sum 1.
///
/// A spectrum whose sum is at most `eps` (an effectively all-zero patch)
/// maps to the uniform distribution.
pub fn normalized_spectrum(sigma: &[f64], eps: f64) -> Vec<f64> {
    let total: f64 = sigma.iter().sum();
    if total <= eps {
        let n = sigma.len().max(1) as f64;
        return vec![1.0 / n; sigma.len()];
    }
    sigma.iter().map(|s| s / total).collect()
}

/// `−Σ pᵢ · ln(pᵢ + ε)`.
pub fn patch_sve(p: &[f64], eps: f64) -> f64 {
    -p.iter().map(|&pi| pi * (pi + eps).ln()).sum::<f64>()
}

/// Per-patch entropies of `x`, patches enumerated row-major.
pub fn patch_entropies(x: &FeatureField, patch_side: usize, eps: f64) -> Result<Vec<f64>> {
    let layout = PatchLayout::for_field(x, patch_side)?;
    (0..layout.len())
        .map(|j| {
            let m = patch_matrix(x, &layout, j)?;
            let sigma = singular_values(&m);
            Ok(patch_sve(&normalized_spectrum(&sigma, eps), eps))
        })
        .collect()
}

/// Expands per-patch values into a dense, piecewise-constant plane.
pub fn broadcast_patches(values: &[f64], layout: &PatchLayout) -> PlaneField {
    let p = layout.patch_side();
    PlaneField::from_fn(layout.rows() * p, layout.cols() * p, |y, x| {
        values[layout.patch_of(y, x)]
    })
}

/// Dense SVE map of `x`.
pub fn sve_map(x: &FeatureField, params: &SveParams) -> Result<PlaneField> {
    let layout = PatchLayout::for_field(x, params.patch_side)?;
    let values = patch_entropies(x, params.patch_side, params.epsilon)?;
    Ok(broadcast_patches(&values, &layout))
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Gate `sigmoid(a · SVE(Π|R|) + b)` for residual reinjection.
///
/// The result lies strictly inside `(0, 1)` whenever `a·S + b` stays within
/// about ±36; saturated values are clamped one ulp away from the bounds.
pub fn sve_gate(residual: &FeatureField, params: &SveParams) -> Result<PlaneField> {
    params.validate(residual.channels())?;
    let magnitude = residual.map(f64::abs);
    let reduced = params.reducer.apply_channels(&magnitude);
    let entropy = sve_map(&reduced, params)?;
    let GateMapper { scale, bias } = params.mapper;
    Ok(entropy.map(|s| clamp_open_unit(sigmoid(scale * s + bias))))
}

/// Patch indices split by majority ground-truth label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchGroups {
    pub changed: Vec<usize>,
    pub unchanged: Vec<usize>,
}

impl PatchGroups {
    pub fn mean_changed(&self, values: &[f64]) -> Option<f64> {
        group_mean(&self.changed, values)
    }

    pub fn mean_unchanged(&self, values: &[f64]) -> Option<f64> {
        group_mean(&self.unchanged, values)
    }
}

fn group_mean(idx: &[usize], values: &[f64]) -> Option<f64> {
    if idx.is_empty() {
        return None;
    }
    Some(idx.iter().map(|&j| values[j]).sum::<f64>() / idx.len() as f64)
}

/// A patch is "changed" when at least half of its pixels carry label 1.
pub fn patch_groups(labels: &PlaneField, patch_side: usize) -> Result<PatchGroups> {
    let layout = PatchLayout::new(labels.height(), labels.width(), patch_side)?;
    let area = (patch_side * patch_side) as f64;
    let mut groups = PatchGroups {
        changed: Vec::new(),
        unchanged: Vec::new(),
    };
    for j in 0..layout.len() {
        let (y0, x0) = layout.origin(j);
        let mut ones = 0.0;
        for y in y0..y0 + patch_side {
            for x in x0..x0 + patch_side {
                ones += labels.get(y, x);
            }
        }
        if ones >= 0.5 * area {
            groups.changed.push(j);
        } else {
            groups.unchanged.push(j);
        }
    }
    Ok(groups)
}

#[inline]
fn clamp_open_unit(g: f64) -> f64 {
    const LO: f64 = f64::MIN_POSITIVE;
    const HI: f64 = 1.0 - f64::EPSILON / 2.0;
    g.clamp(LO, HI)
}
