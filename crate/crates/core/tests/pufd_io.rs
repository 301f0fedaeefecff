use proptest::prelude::*;
use unfold_core::pufd::Tensor;
use unfold_core::{FeatureField, PlaneField};

proptest! {
    #[test]
    fn tensor_round_trip(dims in prop::collection::vec(1usize..5, 0..4), seed in any::<u64>()) {
        let count: usize = dims.iter().product();
        let data: Vec<f64> = (0..count).map(|i| f64::from_bits(seed.wrapping_mul(i as u64 + 1) >> 2)).collect();
        let t = Tensor { dims, data };
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        prop_assert_eq!(buf.len(), 7 + 4 * t.dims.len() + 8 * count);
        let back = Tensor::read_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back.dims, t.dims);
        prop_assert!(back.data.iter().zip(&t.data).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn truncated_input_is_rejected(cut in 0usize..39) {
        let t = Tensor { dims: vec![2, 2], data: vec![1.0, 2.0, 3.0, 4.0] };
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        prop_assert!(Tensor::read_from(&buf[..cut]).is_err());
    }
}

#[test]
fn fields_survive_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = FeatureField::from_fn(2, 3, 4, |c, y, x| (c as f64 - y as f64) * 0.1 + x as f64);
    let p = PlaneField::from_fn(3, 4, |y, x| (y * x) as f64);
    Tensor::from(&f).save(dir.path().join("f.pufd")).unwrap();
    Tensor::from(&p).save(dir.path().join("p.pufd")).unwrap();
    assert_eq!(FeatureField::try_from(Tensor::load(dir.path().join("f.pufd")).unwrap()).unwrap(), f);
    assert_eq!(PlaneField::try_from(Tensor::load(dir.path().join("p.pufd")).unwrap()).unwrap(), p);
}
