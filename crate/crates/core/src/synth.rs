//! Seeded synthetic instances with known change and nuisance structure.
//!
//! The change component is an independent per-channel texture with a
//! positive mean, masked to a set of rectangles; the nuisance component is
//! a smooth rank-1 raised-cosine pattern shared by every channel plus small
//! i.i.d. noise. Every draw comes from a named [`Stream`], so an instance is
//! a pure function of its spec.

use crate::error::{config_err, Result};
use crate::field::{FeatureField, PlaneField};
use crate::rng::Stream;
use crate::sve::{patch_groups, PatchGroups, DEFAULT_PATCH_SIDE};

/// Relative spread of the change texture around its mean.
pub const TEXTURE_SPREAD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub y: usize,
    pub x: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn new(y: usize, x: usize, height: usize, width: usize) -> Self {
        Self { y, x, height, width }
    }

    pub fn contains(&self, y: usize, x: usize) -> bool {
        y >= self.y && y < self.y + self.height && x >= self.x && x < self.x + self.width
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub patch_side: usize,
    pub rects: Vec<Rect>,
    pub change_amp: f64,
    pub nuisance_amp: f64,
    pub noise: f64,
    /// Illumination offset added to the second date in bi-temporal mode.
    pub offset: f64,
}

impl SynthSpec {
    /// `4 × 32 × 32`, two disjoint patch-aligned `8 × 8` changes.
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            channels: 4,
            height: 32,
            width: 32,
            patch_side: DEFAULT_PATCH_SIDE,
            rects: vec![Rect::new(8, 8, 8, 8), Rect::new(16, 24, 8, 8)],
            change_amp: 1.0,
            nuisance_amp: 0.5,
            noise: 0.05,
            offset: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.height == 0 || self.width == 0 {
            return config_err("synthetic dimensions must be positive");
        }
        if self.patch_side == 0 || self.height % self.patch_side != 0 || self.width % self.patch_side != 0 {
            return config_err(format!(
                "{}x{} plane does not tile into {} x {} patches",
                self.height, self.width, self.patch_side, self.patch_side
            ));
        }
        for r in &self.rects {
            if r.height == 0 || r.width == 0 || r.y + r.height > self.height || r.x + r.width > self.width {
                return config_err(format!("rectangle {r:?} outside the {}x{} plane", self.height, self.width));
            }
        }
        for (name, v) in [
            ("change_amp", self.change_amp),
            ("nuisance_amp", self.nuisance_amp),
            ("noise", self.noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return config_err(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        if !self.offset.is_finite() {
            return config_err("offset must be finite");
        }
        Ok(())
    }

    /// One-line text record sufficient to regenerate the instance.
    pub fn record(&self) -> String {
        let rects: Vec<String> = self
            .rects
            .iter()
            .map(|r| format!("{}:{}:{}:{}", r.y, r.x, r.height, r.width))
            .collect();
        format!(
            "seed={} channels={} height={} width={} patch_side={} rects={} change_amp={} nuisance_amp={} noise={} offset={}",
            self.seed,
            self.channels,
            self.height,
            self.width,
            self.patch_side,
            if rects.is_empty() { "-".to_string() } else { rects.join(",") },
            self.change_amp,
            self.nuisance_amp,
            self.noise,
            self.offset
        )
    }

    fn labels(&self) -> PlaneField {
        PlaneField::from_fn(self.height, self.width, |y, x| {
            if self.rects.iter().any(|r| r.contains(y, x)) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Change texture masked to the labels.
    fn change(&self, y: &PlaneField) -> FeatureField {
        let mut rng = Stream::named(self.seed, "synth.change");
        let (d, h, w) = (self.channels, self.height, self.width);
        let mut c = FeatureField::zeros(d, h, w);
        for ch in 0..d {
            for py in 0..h {
                for px in 0..w {
                    let t = 1.0 + TEXTURE_SPREAD * rng.normal();
                    if y.get(py, px) != 0.0 {
                        c.set(ch, py, px, self.change_amp * t);
                    }
                }
            }
        }
        c
    }

    /// Rank-1 raised-cosine pattern, identical across channels, plus noise.
    fn nuisance(&self, label: &str) -> FeatureField {
        let mut shape = Stream::named(self.seed, &format!("{label}.profile"));
        let mut noise = Stream::named(self.seed, &format!("{label}.noise"));
        let (d, h, w) = (self.channels, self.height, self.width);
        let profile = |n: usize, rng: &mut Stream| -> Vec<f64> {
            let phase = rng.uniform();
            let cycles = rng.uniform_in(0.5, 1.5);
            (0..n)
                .map(|i| {
                    let t = i as f64 / n as f64;
                    0.75 + 0.25 * (std::f64::consts::TAU * (cycles * t + phase)).cos()
                })
                .collect()
        };
        let u = profile(h, &mut shape);
        let v = profile(w, &mut shape);
        FeatureField::from_fn(d, h, w, |_, py, px| {
            self.nuisance_amp * u[py] * v[px] + self.noise * noise.normal()
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthInstance {
    pub spec: SynthSpec,
    pub d: FeatureField,
    pub c_star: FeatureField,
    pub n_star: FeatureField,
    pub y: PlaneField,
    pub groups: PatchGroups,
}

/// `D = C* + N*` with planted change rectangles.
pub fn gen_instance(spec: &SynthSpec) -> Result<SynthInstance> {
    spec.validate()?;
    let y = spec.labels();
    let c_star = spec.change(&y);
    let n_star = spec.nuisance("synth.nuisance");
    let d = c_star.add(&n_star);
    let groups = patch_groups(&y, spec.patch_side)?;
    Ok(SynthInstance {
        spec: spec.clone(),
        d,
        c_star,
        n_star,
        y,
        groups,
    })
}

/// Bi-temporal pair: `F1` is a smooth base scene, `F2 = F1 + offset +` change.
pub fn gen_bitemporal(spec: &SynthSpec) -> Result<(FeatureField, FeatureField, PlaneField)> {
    spec.validate()?;
    let y = spec.labels();
    let change = spec.change(&y);
    let f1 = spec.nuisance("synth.base");
    let offset = spec.offset;
    let f2 = f1.zip_map(&change, |b, c| b + offset + c);
    Ok((f1, f2, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additivity_and_support() {
        let inst = gen_instance(&SynthSpec::new(3)).unwrap();
        assert_eq!(inst.d, inst.c_star.add(&inst.n_star));
        for ch in 0..4 {
            for y in 0..32 {
                for x in 0..32 {
                    if inst.c_star.get(ch, y, x) != 0.0 {
                        assert_eq!(inst.y.get(y, x), 1.0);
                    }
                }
            }
        }
        assert_eq!(inst.groups.changed.len() + inst.groups.unchanged.len(), 16);
        assert_eq!(inst.groups.changed.len(), 2);
    }

    #[test]
    fn pure_nuisance() {
        let mut spec = SynthSpec::new(1);
        spec.rects.clear();
        let inst = gen_instance(&spec).unwrap();
        assert_eq!(inst.c_star.max_abs(), 0.0);
        assert_eq!(inst.y.max(), 0.0);
        assert_eq!(inst.d, inst.n_star);
    }

    #[test]
    fn pure_change() {
        let mut spec = SynthSpec::new(1);
        spec.rects = vec![Rect::new(0, 0, 8, 8)];
        spec.noise = 0.0;
        spec.nuisance_amp = 0.0;
        let inst = gen_instance(&spec).unwrap();
        assert_eq!(inst.d, inst.c_star);
    }

    #[test]
    fn rejects_out_of_bounds() {
        let mut spec = SynthSpec::new(1);
        spec.rects = vec![Rect::new(30, 0, 8, 8)];
        assert!(gen_instance(&spec).is_err());
        assert!(gen_bitemporal(&spec).is_err());
    }

    #[test]
    fn bitemporal_identity_without_change_or_offset() {
        let mut spec = SynthSpec::new(5);
        spec.rects.clear();
        spec.offset = 0.0;
        let (f1, f2, _) = gen_bitemporal(&spec).unwrap();
        assert_eq!(f1, f2);
    }
}
