//! Single-level orthonormal 2-D Haar transform and cross-temporal subband
//! suppression.
//!
//! For every 2×2 block `[a b; c d]`:
//!
//! ```text
//! A = (a + b + c + d) / 2      H = (a + b − c − d) / 2
//! V = (a − b + c − d) / 2      D = (a − b − c + d) / 2
//! ```
//!
//! The transform is its own inverse on each block, so energy is preserved.

use crate::error::{config_err, Result};
use crate::field::{FeatureField, Matrix};

/// Subband names in storage order.
pub const SUBBANDS: [&str; 4] = ["A", "H", "V", "D"];

/// Approximation and detail subbands of one field.
#[derive(Clone, Debug, PartialEq)]
pub struct SubbandSet {
    pub approx: FeatureField,
    pub horizontal: FeatureField,
    pub vertical: FeatureField,
    pub diagonal: FeatureField,
}

impl SubbandSet {
    pub fn bands(&self) -> [&FeatureField; 4] {
        [&self.approx, &self.horizontal, &self.vertical, &self.diagonal]
    }

    fn from_bands([approx, horizontal, vertical, diagonal]: [FeatureField; 4]) -> Self {
        Self {
            approx,
            horizontal,
            vertical,
            diagonal,
        }
    }

    fn check_consistent(&self) -> Result<()> {
        let s = self.approx.shape();
        if self.bands().iter().any(|b| b.shape() != s) {
            return config_err("subbands have inconsistent dimensions");
        }
        Ok(())
    }
}

pub fn dwt2_haar(x: &FeatureField) -> Result<SubbandSet> {
    let (d, h, w) = x.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return config_err(format!("Haar transform needs even dimensions, got {h}x{w}"));
    }
    let (hh, hw) = (h / 2, w / 2);
    let mut bands = [(); 4].map(|_| FeatureField::zeros(d, hh, hw));
    for c in 0..d {
        let src = x.channel(c);
        for i in 0..hh {
            let top = &src[2 * i * w..(2 * i + 1) * w];
            let bot = &src[(2 * i + 1) * w..(2 * i + 2) * w];
            for j in 0..hw {
                let (a, b, cc, dd) = (top[2 * j], top[2 * j + 1], bot[2 * j], bot[2 * j + 1]);
                let k = i * hw + j;
                bands[0].channel_mut(c)[k] = 0.5 * ((a + b) + (cc + dd));
                bands[1].channel_mut(c)[k] = 0.5 * ((a + b) - (cc + dd));
                bands[2].channel_mut(c)[k] = 0.5 * ((a - b) + (cc - dd));
                bands[3].channel_mut(c)[k] = 0.5 * ((a - b) - (cc - dd));
            }
        }
    }
    Ok(SubbandSet::from_bands(bands))
}

pub fn idwt2_haar(s: &SubbandSet) -> Result<FeatureField> {
    s.check_consistent()?;
    let (d, hh, hw) = s.approx.shape();
    let (h, w) = (2 * hh, 2 * hw);
    let mut out = FeatureField::zeros(d, h, w);
    for c in 0..d {
        let (ba, bh, bv, bd) = (
            s.approx.channel(c),
            s.horizontal.channel(c),
            s.vertical.channel(c),
            s.diagonal.channel(c),
        );
        let dst = out.channel_mut(c);
        for i in 0..hh {
            for j in 0..hw {
                let k = i * hw + j;
                let (a, hz, v, dg) = (ba[k], bh[k], bv[k], bd[k]);
                dst[2 * i * w + 2 * j] = 0.5 * ((a + hz) + (v + dg));
                dst[2 * i * w + 2 * j + 1] = 0.5 * ((a + hz) - (v + dg));
                dst[(2 * i + 1) * w + 2 * j] = 0.5 * ((a - hz) + (v - dg));
                dst[(2 * i + 1) * w + 2 * j + 1] = 0.5 * ((a - hz) - (v - dg));
            }
        }
    }
    Ok(out)
}

pub const DEFAULT_ETA_APPROX: f64 = 0.5;
pub const DEFAULT_ETA_DETAIL: f64 = 0.1;

/// Per-subband suppression strengths and `d × d` projections, in
/// `A, H, V, D` order.
#[derive(Clone, Debug, PartialEq)]
pub struct WssmParams {
    pub eta: [f64; 4],
    pub psi: [Matrix; 4],
}

impl WssmParams {
    /// Identity projections, `η_A = 0.5`, detail `η = 0.1`.
    pub fn new(channels: usize) -> Self {
        Self {
            eta: [
                DEFAULT_ETA_APPROX,
                DEFAULT_ETA_DETAIL,
                DEFAULT_ETA_DETAIL,
                DEFAULT_ETA_DETAIL,
            ],
            psi: [(); 4].map(|_| Matrix::identity(channels)),
        }
    }

    /// Suppression disabled.
    pub fn disabled(channels: usize) -> Self {
        Self {
            eta: [0.0; 4],
            ..Self::new(channels)
        }
    }

    pub fn validate(&self, channels: usize) -> Result<()> {
        if let Some(e) = self.eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return config_err(format!("suppression strength {e} outside [0, 1]"));
        }
        if self
            .psi
            .iter()
            .any(|m| m.rows() != channels || m.cols() != channels)
        {
            return config_err(format!("subband projections must be {channels}x{channels}"));
        }
        Ok(())
    }
}

/// Moves each branch toward the other by `η_S · Ψ_S(S₁ − S₂)`.
///
/// `Ŝ₁ = S₁ − η·Ψ(S₁−S₂)`, `Ŝ₂ = S₂ + η·Ψ(S₁−S₂)`; the per-entry sum is
/// preserved up to the rounding of the two additions.
pub fn wssm_align(
    s1: &SubbandSet,
    s2: &SubbandSet,
    params: &WssmParams,
) -> Result<(SubbandSet, SubbandSet)> {
    s1.check_consistent()?;
    s2.check_consistent()?;
    if s1.approx.shape() != s2.approx.shape() {
        return config_err("subband sets of the two branches differ in shape");
    }
    params.validate(s1.approx.channels())?;
    let mut out1 = Vec::with_capacity(4);
    let mut out2 = Vec::with_capacity(4);
    for (k, (b1, b2)) in s1.bands().into_iter().zip(s2.bands()).enumerate() {
        let eta = params.eta[k];
        if eta == 0.0 {
            out1.push(b1.clone());
            out2.push(b2.clone());
            continue;
        }
        let shift = params.psi[k].apply_channels(&b1.sub(b2)).scale(eta);
        out1.push(b1.sub(&shift));
        out2.push(b2.add(&shift));
    }
    let into_set = |v: Vec<FeatureField>| {
        SubbandSet::from_bands(v.try_into().expect("four subbands"))
    };
    Ok((into_set(out1), into_set(out2)))
}

/// Transform both branches, align every subband, transform back.
pub fn wssm_apply(
    f1: &FeatureField,
    f2: &FeatureField,
    params: &WssmParams,
) -> Result<(FeatureField, FeatureField)> {
    f1.check_same_shape(f2, "wssm_apply")?;
    let (a1, a2) = wssm_align(&dwt2_haar(f1)?, &dwt2_haar(f2)?, params)?;
    Ok((idwt2_haar(&a1)?, idwt2_haar(&a2)?))
}
