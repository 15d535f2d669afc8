use std::io::Write;

use quillen_core::geometry::VolumeForm;
use quillen_core::grid::{load_grid, sidecar_path};
use quillen_core::metrics::{canonical, MetricFamilyParams};
use quillen_core::quadrature::Tolerance;
use quillen_core::torsion::torsion_with;

fn write_grid(dir: &std::path::Path, rows: &[(f64, f64)], meta: &str) -> std::path::PathBuf {
    let path = dir.join("pot.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "t,phi").unwrap();
    for (t, y) in rows {
        writeln!(f, "{t},{y}").unwrap();
    }
    std::fs::write(sidecar_path(&path), meta).unwrap();
    path
}

#[test]
fn sampled_canonical_metric_has_canonical_torsion() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<(f64, f64)> = (-8..=8)
        .map(|i| (i as f64 * 0.5, 1.0 * (i as f64 * 0.5).max(0.0)))
        .collect();
    let path = write_grid(
        dir.path(),
        &rows,
        r#"{"degree":1,"regularity":"continuous-piecewise","positive":true,"kinks":[0.0]}"#,
    );
    let p = load_grid(&path).unwrap();
    let w = VolumeForm::canonical();
    let tol = Tolerance::default();
    let a = torsion_with(&p, &w, None, &tol).unwrap().value;
    let b = torsion_with(&canonical(1), &w, None, &tol).unwrap().value;
    assert!((a - b).abs() < 1e-9);
    let spec: MetricFamilyParams = format!("grid:{}", path.display()).parse().unwrap();
    assert_eq!(spec.build().unwrap().phi(2.0), 2.0);
}

#[test]
fn malformed_files_are_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "x,y\n0,0\n1,1\n").unwrap();
    std::fs::write(
        sidecar_path(&path),
        r#"{"degree":1,"regularity":"smooth","positive":false}"#,
    )
    .unwrap();
    assert!(load_grid(&path).is_err());
    let path = write_grid(dir.path(), &[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)], r#"{"degree":"one"}"#);
    assert!(load_grid(&path).is_err());
    assert!(load_grid(&dir.path().join("missing.csv")).is_err());
}
