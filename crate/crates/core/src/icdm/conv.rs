//! 3×3 convolution with reflective padding over stacked input fields.

use crate::field::FeatureField;
use crate::rng::Stream;

/// `out × in × 3 × 3` kernel, no bias. Weight `(o, i, ky, kx)` is stored at
/// `((o·in + i)·3 + ky)·3 + kx` and multiplies input pixel `(y+ky−1, x+kx−1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv3x3 {
    pub out_channels: usize,
    pub in_channels: usize,
    pub weights: Vec<f64>,
}

impl Conv3x3 {
    pub fn zeros(out_channels: usize, in_channels: usize) -> Self {
        Self {
            out_channels,
            in_channels,
            weights: vec![0.0; out_channels * in_channels * 9],
        }
    }

    /// Uniform in `(−s/√fan_in, s/√fan_in)`, `fan_in = 9·in`.
    pub fn seeded(out_channels: usize, in_channels: usize, scale: f64, rng: &mut Stream) -> Self {
        let mut conv = Self::zeros(out_channels, in_channels);
        let bound = scale / ((9 * in_channels) as f64).sqrt();
        rng.fill_uniform(&mut conv.weights, -bound, bound);
        conv
    }

    #[inline]
    pub fn index(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_channels + i) * 3 + ky) * 3 + kx
    }

    /// Convolves the channel-wise concatenation of `inputs`.
    pub fn apply(&self, inputs: &[&FeatureField]) -> FeatureField {
        let (h, w) = (inputs[0].height(), inputs[0].width());
        debug_assert!(inputs.iter().all(|f| f.height() == h && f.width() == w));
        let total_in: usize = inputs.iter().map(|f| f.channels()).sum();
        assert_eq!(total_in, self.in_channels, "conv input channel mismatch");

        let (ph, pw) = (h + 2, w + 2);
        let mut padded = vec![0.0; total_in * ph * pw];
        let mut i = 0;
        for f in inputs {
            for c in 0..f.channels() {
                pad_reflect(f.channel(c), h, w, &mut padded[i * ph * pw..(i + 1) * ph * pw]);
                i += 1;
            }
        }

        let mut out = FeatureField::zeros(self.out_channels, h, w);
        for o in 0..self.out_channels {
            let dst = out.channel_mut(o);
            for i in 0..total_in {
                let src = &padded[i * ph * pw..(i + 1) * ph * pw];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let wgt = self.weights[self.index(o, i, ky, kx)];
                        if wgt == 0.0 {
                            continue;
                        }
                        for y in 0..h {
                            let s = &src[(y + ky) * pw + kx..(y + ky) * pw + kx + w];
                            for (d, v) in dst[y * w..(y + 1) * w].iter_mut().zip(s) {
                                *d += wgt * v;
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Reflect index `i ∈ [−1, n]` into `[0, n)` without repeating the edge.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * n - 2 - i
    } else {
        i
    };
    r.clamp(0, n - 1) as usize
}

fn pad_reflect(src: &[f64], h: usize, w: usize, dst: &mut [f64]) {
    let pw = w + 2;
    for py in 0..h + 2 {
        let y = reflect(py as isize - 1, h);
        for px in 0..w + 2 {
            let x = reflect(px as isize - 1, w);
            dst[py * pw + px] = src[y * w + x];
        }
    }
}
