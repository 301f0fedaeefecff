//! Straight-line reference implementations written with plain loops over
//! flat `c·h·w` arrays, sharing no code with the library kernels.

#![allow(dead_code)]

use nalgebra::DMatrix;

pub struct Dims {
    pub d: usize,
    pub h: usize,
    pub w: usize,
}

impl Dims {
    pub fn at(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.h + y) * self.w + x
    }
}

pub struct Gru<'a> {
    pub wz: &'a [f64],
    pub bz: &'a [f64],
    pub wr: &'a [f64],
    pub br: &'a [f64],
    pub wc: &'a [f64],
    pub bc: &'a [f64],
}

pub struct StepInputs<'a> {
    pub dims: Dims,
    pub diff: &'a [f64],
    pub c: &'a [f64],
    pub n: &'a [f64],
    pub h_c: &'a [f64],
    pub h_n: &'a [f64],
    /// `d × 3d × 3 × 3` row-major.
    pub phi_c: &'a [f64],
    pub phi_n: &'a [f64],
    /// `d × d` row-major.
    pub psi_c: &'a [f64],
    pub psi_n: &'a [f64],
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mem: Option<(Gru<'a>, Gru<'a>)>,
    /// `r × d` row-major.
    pub reducer: &'a [f64],
    pub reduced: usize,
    pub patch: usize,
    pub eps: f64,
    pub gate_scale: f64,
    pub gate_bias: f64,
}

pub struct StepOutputs {
    pub c: Vec<f64>,
    pub n: Vec<f64>,
    pub h_c: Vec<f64>,
    pub h_n: Vec<f64>,
    pub gate: Vec<f64>,
}

fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 { -i } else if i >= n { 2 * n - 2 - i } else { i };
    j.max(0).min(n - 1) as usize
}

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn conv3x3(dims: &Dims, input: &[f64], in_ch: usize, wts: &[f64]) -> Vec<f64> {
    let Dims { d, h, w } = *dims;
    let mut out = vec![0.0; d * h * w];
    for o in 0..d {
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for i in 0..in_ch {
                    for ky in 0..3 {
                        for kx in 0..3 {
                            let yy = mirror(y as isize + ky as isize - 1, h);
                            let xx = mirror(x as isize + kx as isize - 1, w);
                            acc += wts[((o * in_ch + i) * 3 + ky) * 3 + kx] * input[(i * h + yy) * w + xx];
                        }
                    }
                }
                out[(o * h + y) * w + x] = acc;
            }
        }
    }
    out
}

pub fn channel_mix(dims: &Dims, m: &[f64], rows: usize, x: &[f64]) -> Vec<f64> {
    let plane = dims.h * dims.w;
    let mut out = vec![0.0; rows * plane];
    for o in 0..rows {
        for p in 0..plane {
            let mut acc = 0.0;
            for i in 0..dims.d {
                acc += m[o * dims.d + i] * x[i * plane + p];
            }
            out[o * plane + p] = acc;
        }
    }
    out
}

pub fn gru(dims: &Dims, g: &Gru, x: &[f64], h: &[f64]) -> Vec<f64> {
    let d = dims.d;
    let plane = dims.h * dims.w;
    let mut out = vec![0.0; d * plane];
    for p in 0..plane {
        let xs: Vec<f64> = (0..d).map(|i| x[i * plane + p]).collect();
        let hs: Vec<f64> = (0..d).map(|i| h[i * plane + p]).collect();
        let aff = |wm: &[f64], b: &[f64], o: usize, second: &[f64]| {
            let mut acc = b[o];
            for i in 0..d {
                acc += wm[o * 2 * d + i] * xs[i] + wm[o * 2 * d + d + i] * second[i];
            }
            acc
        };
        let r: Vec<f64> = (0..d).map(|o| sig(aff(g.wr, g.br, o, &hs))).collect();
        let rh: Vec<f64> = (0..d).map(|i| r[i] * hs[i]).collect();
        for o in 0..d {
            let z = sig(aff(g.wz, g.bz, o, &hs));
            let cand = aff(g.wc, g.bc, o, &rh).tanh();
            out[o * plane + p] = (1.0 - z) * hs[o] + z * cand;
        }
    }
    out
}

/// Entropy of the normalised singular spectrum of every patch, via a
/// general-purpose SVD.
pub fn patch_entropies(channels: usize, h: usize, w: usize, x: &[f64], patch: usize, eps: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for py in 0..h / patch {
        for px in 0..w / patch {
            let m = DMatrix::from_fn(channels, patch * patch, |c, j| {
                let (a, b) = (j / patch, j % patch);
                x[(c * h + py * patch + a) * w + px * patch + b]
            });
            let s = m.singular_values();
            let total: f64 = s.iter().sum();
            let k = s.len() as f64;
            let ent: f64 = s
                .iter()
                .map(|&v| {
                    let p = if total <= eps { 1.0 / k } else { v / total };
                    -p * (p + eps).ln()
                })
                .sum();
            out.push(ent);
        }
    }
    out
}

pub fn step(s: &StepInputs) -> StepOutputs {
    let dims = &s.dims;
    let Dims { d, h, w } = *dims;
    let len = d * h * w;
    let r: Vec<f64> = (0..len).map(|i| s.diff[i] - s.c[i] - s.n[i]).collect();

    let mut stacked = Vec::with_capacity(3 * len);
    stacked.extend_from_slice(s.c);
    stacked.extend_from_slice(s.n);
    stacked.extend_from_slice(&r);
    let dc = conv3x3(dims, &stacked, 3 * d, s.phi_c);
    let dn = conv3x3(dims, &stacked, 3 * d, s.phi_n);

    let prov_c: Vec<f64> = (0..len).map(|i| s.c[i] + s.alpha * dc[i]).collect();
    let prov_n: Vec<f64> = (0..len).map(|i| s.n[i] + s.beta * dn[i]).collect();
    let (h_c, h_n) = match &s.mem {
        Some((gc, gn)) => (gru(dims, gc, &prov_c, s.h_c), gru(dims, gn, &prov_n, s.h_n)),
        None => (prov_c, prov_n),
    };

    let inj_c = channel_mix(dims, s.psi_c, d, &r);
    let inj_n = channel_mix(dims, s.psi_n, d, &r);

    let abs_r: Vec<f64> = r.iter().map(|v| v.abs()).collect();
    let reduced = channel_mix(dims, s.reducer, s.reduced, &abs_r);
    let ent = patch_entropies(s.reduced, h, w, &reduced, s.patch, s.eps);
    let cols = w / s.patch;
    let gate: Vec<f64> = (0..h * w)
        .map(|p| {
            let (y, x) = (p / w, p % w);
            sig(s.gate_scale * ent[(y / s.patch) * cols + x / s.patch] + s.gate_bias)
        })
        .collect();

    let plane = h * w;
    let c = (0..len).map(|i| h_c[i] + s.gamma * gate[i % plane] * inj_c[i]).collect();
    let n = (0..len).map(|i| h_n[i] + s.gamma * gate[i % plane] * inj_n[i]).collect();
    StepOutputs { c, n, h_c, h_n, gate }
}

/// `min (c−c')² + (n−(d−c'))²` over `c'`, by golden-section search.
fn line_distance_sq(c: f64, n: f64, d: f64) -> f64 {
    let f = |t: f64| (c - t).powi(2) + (n - (d - t)).powi(2);
    let span = c.abs() + n.abs() + d.abs() + 1.0;
    let (mut a, mut b) = (-span, span);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if f(x1) < f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    f(0.5 * (a + b))
}

/// Euclidean distance from `(c, n)` to `{(c', n') : c' + n' = d}`, found by
/// searching each entry's feasible line.
pub fn consistency_brute_force(d: &[f64], c: &[f64], n: &[f64]) -> f64 {
    (0..d.len()).map(|i| line_distance_sq(c[i], n[i], d[i])).sum::<f64>().sqrt()
}
