use cadpu_data::fixtures::{fixture, plane};
use cadpu_data::{make_train_pairs, read_dataset, write_dataset, Manifest, PairConfig};

#[test]
fn sphere_patches_have_requested_sizes() {
    let cfg = PairConfig::default();
    let pairs = make_train_pairs(&fixture("sphere").unwrap(), "sphere", &cfg, 3).unwrap();
    assert_eq!(pairs.len(), 8);
    for p in &pairs {
        assert_eq!(p.input.len(), 256);
        assert_eq!(p.target.len(), 1024);
        assert!(p.target.normals().is_some());
        let max = p.input.points().iter().map(|q| q.norm()).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-9);
        assert!(p.input.centroid().unwrap().norm() < 1e-9);
    }
}

#[test]
fn plane_targets_are_flat() {
    let cfg = PairConfig {
        num_patches: 3,
        n_in: 64,
        ..PairConfig::default()
    };
    for p in make_train_pairs(&plane(6), "plane", &cfg, 1).unwrap() {
        assert_eq!(p.target.len(), 4 * p.input.len());
        assert!(p.target.curvatures().unwrap().iter().all(|&k| k.abs() < 1e-12));
    }
}

#[test]
fn dataset_files_are_byte_identical_across_runs() {
    let cfg = PairConfig {
        num_patches: 3,
        n_in: 32,
        ..PairConfig::default()
    };
    let mesh = fixture("cube").unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let pairs = make_train_pairs(&mesh, "cube", &cfg, 17).unwrap();
        let manifest = Manifest {
            n_in: 32,
            r: 4,
            seed: 17,
            sources: vec!["cube".into()],
            pairs: Vec::new(),
        };
        write_dataset(d.path(), &pairs, manifest).unwrap();
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for n in names {
        let a = std::fs::read(dirs[0].path().join(&n)).unwrap();
        let b = std::fs::read(dirs[1].path().join(&n)).unwrap();
        assert_eq!(a, b, "{n:?}");
    }
    let (manifest, pairs) = read_dataset(dirs[0].path()).unwrap();
    assert_eq!(manifest.pairs.len(), 3);
    assert_eq!(pairs[1].input.len(), 32);
}
