use centaur::embedding::{
    apply_scaler, fit_scaler, read_store, synth_embeddings, write_store, EmbeddingStore, Generator,
};
use centaur::Error;
use proptest::prelude::*;

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn store(values: Vec<f32>, dim: usize, provenance: &str) -> EmbeddingStore {
    let n = values.len() / dim;
    EmbeddingStore::new(dim, ids("trial-", n), values, provenance).unwrap()
}

#[test]
fn small_store_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.cntr");
    let values = vec![
        0.0, -0.0, 1.5, f32::MIN_POSITIVE, f32::MAX, -3.25, 1e-40, 7.0, 0.1, 0.2, 0.3, -1.0,
    ];
    let s = store(values, 4, "model=x layer=final");
    write_store(&s, &path).unwrap();
    let back = read_store(&path).unwrap();
    assert_eq!(back, s);
    for (a, b) in back.values().iter().zip(s.values()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert_eq!(back.provenance(), "model=x layer=final");
}

#[test]
fn wrong_magic_is_an_integrity_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.cntr");
    write_store(&store(vec![1.0; 8], 4, ""), &path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[..4].copy_from_slice(b"NOPE");
    std::fs::write(&path, bytes).unwrap();
    assert!(matches!(read_store(&path), Err(Error::Integrity(_))));
}

#[test]
fn flipped_value_byte_fails_the_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.cntr");
    write_store(&store(vec![1.0; 8], 4, ""), &path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    let n = bytes.len();
    bytes[n - 6] ^= 0x40;
    std::fs::write(&path, bytes).unwrap();
    assert!(matches!(read_store(&path), Err(Error::Integrity(_))));
}

#[test]
fn truncated_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.cntr");
    write_store(&store(vec![1.0; 8], 4, ""), &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
    assert!(read_store(&path).is_err());
}

#[test]
fn invalid_stores_are_refused() {
    assert!(EmbeddingStore::new(2, ids("t", 2), vec![1.0, f32::NAN, 0.0, 0.0], String::new()).is_err());
    assert!(EmbeddingStore::new(2, vec!["a".into(), "a".into()], vec![0.0; 4], String::new()).is_err());
    assert!(EmbeddingStore::new(3, ids("t", 2), vec![0.0; 4], String::new()).is_err());
}

#[test]
fn large_store_size_matches_layout_arithmetic() {
    let (rows, dim) = (10_000usize, 8192usize);
    let names = ids("choices13k-", rows);
    let values: Vec<f32> = (0..rows * dim).map(|i| (i % 9973) as f32 * 0.5 - 100.0).collect();
    let provenance = "synthetic 10k x 8192";
    let s = EmbeddingStore::new(dim, names.clone(), values, provenance).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.cntr");
    write_store(&s, &path).unwrap();

    let header = 4 + 2 + 4 + 8 + 4 + provenance.len() as u64;
    let index: u64 = names.iter().map(|n| 4 + n.len() as u64).sum();
    let payload = (rows * dim * 4) as u64;
    let checksum = 4;
    let size = std::fs::metadata(&path).unwrap().len();
    assert_eq!(size, header + index + payload + checksum);
    assert_eq!(read_store(&path).unwrap(), s);
}

#[test]
fn constant_dimension_is_flagged_and_zeroed() {
    let s = store(vec![2.0, 1.0, 2.0, 3.0, 2.0, 5.0], 2, "");
    let scaler = fit_scaler(&s, s.ids()).unwrap();
    assert_eq!(scaler.constant_dimensions, vec![0]);
    assert_eq!(scaler.standard_deviations[0], 1.0);
    let out = apply_scaler(&scaler, &s).unwrap();
    for i in 0..3 {
        assert_eq!(out.row_at(i)[0], 0.0);
    }
}

#[test]
fn two_point_dimension_maps_to_unit_values() {
    let s = store(vec![1.0, 3.0, 1.0, 3.0], 1, "");
    let scaler = fit_scaler(&s, s.ids()).unwrap();
    let out = apply_scaler(&scaler, &s).unwrap();
    assert_eq!(out.values(), &[-1.0, 1.0, -1.0, 1.0]);
}

#[test]
fn empty_fitting_subset_is_a_configuration_error() {
    let s = store(vec![1.0, 3.0], 1, "");
    let none: Vec<String> = Vec::new();
    assert!(matches!(fit_scaler(&s, &none), Err(Error::Config(_))));
}

#[test]
fn standardized_columns_have_zero_mean_unit_variance() {
    let names = ids("r", 500);
    let (s, _) = synth_embeddings(&names, 16, 8, &Generator::GaussianNoise).unwrap();
    let shifted: Vec<f32> = s.values().iter().enumerate().map(|(i, v)| v * 3.0 + (i % 16) as f32).collect();
    let s = EmbeddingStore::new(16, names, shifted, String::new()).unwrap();
    let out = apply_scaler(&fit_scaler(&s, s.ids()).unwrap(), &s).unwrap();
    for k in 0..16 {
        let col: Vec<f64> = (0..500).map(|i| f64::from(out.row_at(i)[k])).collect();
        let mean = col.iter().sum::<f64>() / 500.0;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 500.0;
        assert!(mean.abs() < 1e-6, "mean {mean}");
        assert!((var - 1.0).abs() < 1e-6, "variance {var}");
    }
}

proptest! {
    #[test]
    fn any_store_round_trips(
        dim in 1usize..6,
        rows in 0usize..12,
        seed in any::<u64>(),
        provenance in "[a-z =0-9]{0,20}",
    ) {
        let names = ids("id", rows);
        let (s, _) = synth_embeddings(&names, dim, seed, &Generator::GaussianNoise).unwrap();
        let s = EmbeddingStore::new(dim, names, s.values().to_vec(), provenance).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.cntr");
        write_store(&s, &path).unwrap();
        prop_assert_eq!(read_store(&path).unwrap(), s);
    }

    #[test]
    fn standardizing_twice_changes_nothing(seed in any::<u64>(), rows in 3usize..40) {
        let names = ids("r", rows);
        let (s, _) = synth_embeddings(&names, 4, seed, &Generator::GaussianNoise).unwrap();
        let once = apply_scaler(&fit_scaler(&s, s.ids()).unwrap(), &s).unwrap();
        let twice = apply_scaler(&fit_scaler(&once, once.ids()).unwrap(), &once).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }
}
