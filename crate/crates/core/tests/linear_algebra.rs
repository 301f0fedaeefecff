use nalgebra::DMatrix;
use unfold_core::field::patch_matrix;
use unfold_core::rng::Stream;
use unfold_core::svd::singular_values;
use unfold_core::{FeatureField, Matrix, PatchLayout};

/// Singular values as square roots of the eigenvalues of `M·Mᵀ`.
fn gram_oracle(m: &Matrix) -> Vec<f64> {
    let a = DMatrix::from_row_slice(m.rows(), m.cols(), m.data());
    let gram = &a * a.transpose();
    let mut ev: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

#[test]
fn svd_matches_gram_eigenvalues() {
    let mut rng = Stream::named(7, "svd.oracle");
    for case in 0..100 {
        let d = 1 + case % 8;
        let m = Matrix::from_fn(d, 64, |_, _| rng.normal());
        let got = singular_values(&m);
        let want = gram_oracle(&m);
        assert_eq!(got.len(), d);
        let top = want[0];
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9 * top, "case {case}: {g} vs {w}");
        }
    }
}

#[test]
fn svd_rank_deficient_and_tall() {
    let mut rng = Stream::new(3, 3);
    let u: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
    let v: Vec<f64> = (0..16).map(|_| rng.normal()).collect();
    let outer = Matrix::from_fn(4, 16, |i, j| u[i] * v[j]);
    let s = singular_values(&outer);
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((s[0] - nu * nv).abs() < 1e-10 * nu * nv);
    assert!(s[1..].iter().all(|&x| x < 1e-10 * nu * nv));

    let tall = Matrix::from_fn(10, 3, |_, _| rng.normal());
    let got = singular_values(&tall);
    let mut want: Vec<f64> = DMatrix::from_row_slice(10, 3, tall.data()).singular_values().iter().copied().collect();
    want.sort_by(|x, y| y.total_cmp(x));
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12 * want[0]);
    }
}

#[test]
fn patch_matrix_matches_loops() {
    let x = FeatureField::from_fn(3, 16, 24, |c, y, x| (c * 1000 + y * 24 + x) as f64);
    let layout = PatchLayout::for_field(&x, 8).unwrap();
    assert_eq!(layout.len(), 6);
    for j in 0..layout.len() {
        let m = patch_matrix(&x, &layout, j).unwrap();
        let (py, px) = (j / 3, j % 3);
        for c in 0..3 {
            for a in 0..8 {
                for b in 0..8 {
                    assert_eq!(m.get(c, a * 8 + b), x.get(c, py * 8 + a, px * 8 + b));
                }
            }
        }
    }
    assert!(patch_matrix(&x, &layout, 6).is_err());
}
