//! Singular values of small dense matrices by one-sided (Hestenes) Jacobi.

use crate::field::Matrix;

/// Relative off-diagonal threshold below which a pair counts as orthogonal.
pub const JACOBI_TOL: f64 = 1e-12;
/// Upper bound on full sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 60;

/// Singular values of `m`, sorted descending, length `min(rows, cols)`.
///
/// The shorter dimension is orthogonalised: for a `d × L` input with
/// `d ≤ L` the `d` rows are rotated pairwise until mutually orthogonal, and
/// their norms are the singular values. Pair order within a sweep is the
/// fixed cyclic order `(0,1), (0,2), …, (n−2, n−1)`.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let (n, len, mut vecs) = if m.rows() <= m.cols() {
        (m.rows(), m.cols(), m.data().to_vec())
    } else {
        (m.cols(), m.rows(), m.transpose().data().to_vec())
    };
    if n == 0 {
        return Vec::new();
    }

    let mut norms: Vec<f64> = (0..n).map(|i| sq_norm(&vecs[i * len..(i + 1) * len])).collect();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let (alpha, beta) = (norms[i], norms[j]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (head, tail) = vecs.split_at_mut(j * len);
                let vi = &mut head[i * len..(i + 1) * len];
                let vj = &mut tail[..len];
                let gamma: f64 = vi.iter().zip(vj.iter()).map(|(a, b)| a * b).sum();
                if gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (a, b) in vi.iter_mut().zip(vj.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
                norms[i] = sq_norm(vi);
                norms[j] = sq_norm(vj);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = norms.into_iter().map(f64::sqrt).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

#[inline]
fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}
