mod common;

use std::fs;
use std::path::Path;

use common::{random_instance, Shape};
use imreg_core::io::{
    boxplot_csv, coefficient_rows, cv_matrix_csv, load_dataset, read_json, read_table, standardize, write_atomic,
    write_json, BlockPaths, SavedModel,
};
use imreg_core::selection::{select, CvGrid};
use imreg_core::sim::study::BoxplotRow;
use imreg_core::{fit, objective, DMatrix, Error, HyperParams, SolverOptions};

fn write(dir: &Path, name: &str, text: &str) {
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join(name), text).unwrap();
}

fn block(dir: &Path, x_header: &str, with_z: bool) -> BlockPaths {
    write(dir, "y.csv", "y1,y2\n1,2\n3,4.5\n-1,0\n");
    write(dir, "x.csv", &format!("{x_header}\n0.5,1\n1.5,-2\n2,0.25\n"));
    if with_z {
        write(dir, "z.csv", "s\n1e-1\n2\n3\n");
    }
    BlockPaths::from_dir(dir)
}

#[test]
fn loads_blocks_with_shared_header() {
    let tmp = tempfile::tempdir().unwrap();
    let a = block(&tmp.path().join("a"), "a,b", true);
    let b = block(&tmp.path().join("b"), "a,b", false);
    let loaded = load_dataset(&[a, b]).unwrap();
    assert_eq!(loaded.data.p(), 2);
    assert_eq!(loaded.data.q(), 2);
    assert_eq!(loaded.data.r(), vec![1, 0]);
    assert_eq!(loaded.names[0].x, vec!["a", "b"]);
    assert_eq!(loaded.names[0].z, vec!["s"]);
    assert!(loaded.names[1].z.is_empty());
    assert_eq!(loaded.data.block(0).z()[(0, 0)], 0.1);
    assert_eq!(loaded.data.block(0).y()[(1, 1)], 4.5);
}

#[test]
fn reordered_header_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let a = block(&tmp.path().join("a"), "a,b", false);
    let b = block(&tmp.path().join("b"), "b,a", false);
    match load_dataset(&[a, b]) {
        Err(Error::HeaderMismatch { block, expected, found }) => {
            assert_eq!(block, 1);
            assert_eq!(expected, vec!["a", "b"]);
            assert_eq!(found, vec!["b", "a"]);
        }
        other => panic!("expected header mismatch, got {other:?}"),
    }
}

#[test]
fn malformed_files_have_distinct_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "ragged.csv", "a,b\n1,2\n3\n");
    assert!(matches!(read_table(d.join("ragged.csv")), Err(Error::RaggedRow { row: 2, found: 1, expected: 2, .. })));
    write(d, "text.csv", "a,b\n1,2\n3,abc\n");
    assert!(matches!(
        read_table(d.join("text.csv")),
        Err(Error::NonNumeric { row: 2, column: 2, .. })
    ));
    assert!(matches!(read_table(d.join("missing.csv")), Err(Error::Io { .. })));

    let blk = d.join("short");
    write(&blk, "y.csv", "y\n1\n2\n3\n");
    write(&blk, "x.csv", "a\n1\n2\n");
    let err = load_dataset(&[BlockPaths::from_dir(&blk)]).unwrap_err();
    assert!(matches!(err, Error::RowCountMismatch { block: 0, .. }), "{err}");
    assert_eq!(err.kind(), "row_count_mismatch");
}

#[test]
fn standardizing_a_short_column() {
    let y = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 2.0]);
    let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
    let data =
        imreg_core::IntegratedDataset::new(vec![imreg_core::DatasetBlock::without_specific(y.clone(), x).unwrap()])
            .unwrap();
    let (std_data, scaling) = standardize(&data).unwrap();
    let col = std_data.block(0).x().column(0).into_owned();
    assert!(col.mean().abs() < 1e-15);
    assert!((col.norm_squared() / 2.0 - 1.0).abs() < 1e-15);
    assert_eq!(scaling.x_mean[0], vec![2.0]);
    assert_eq!(scaling.x_sd[0], vec![1.0]);
    assert_eq!(std_data.block(0).y(), &y);
}

#[test]
fn standardizing_is_idempotent() {
    let data = random_instance(&Shape { m: 2, n: 20, p: 3, q: 2, r: 2 }, 4);
    let (once, _) = standardize(&data).unwrap();
    let (twice, _) = standardize(&once).unwrap();
    for (a, b) in once.blocks().iter().zip(twice.blocks()) {
        assert!((a.x() - b.x()).amax() <= 1e-12);
        assert!((a.z() - b.z()).amax() <= 1e-12);
    }
}

#[test]
fn back_transformed_fit_predicts_raw_data() {
    let data = random_instance(&Shape { m: 2, n: 25, p: 4, q: 2, r: 3 }, 5);
    let (std_data, scaling) = standardize(&data).unwrap();
    let rep = fit(&std_data, &HyperParams::new(0.05, 0.05).unwrap(), &SolverOptions::default(), None).unwrap();
    let original = scaling.to_original(&rep.fit).unwrap();
    for m in 0..2 {
        let on_std = rep.fit.predict(m, std_data.block(m).x(), std_data.block(m).z()).unwrap();
        let on_raw = original.predict(m, data.block(m).x(), data.block(m).z()).unwrap();
        assert!((on_std - on_raw).amax() <= 1e-10);
    }
    assert_eq!(original.support_b(), rep.fit.support_b());
    let reapplied = scaling.apply(&data).unwrap();
    assert!((reapplied.block(1).x() - std_data.block(1).x()).amax() <= 1e-15);
    let again = scaling.to_standardized(&original).unwrap();
    for m in 0..2 {
        assert!((&again.b()[m] - &rep.fit.b()[m]).amax() <= 1e-12);
        assert!((&again.alpha()[m] - &rep.fit.alpha()[m]).amax() <= 1e-10);
    }
}

#[test]
fn constant_column_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("a");
    write(&dir, "y.csv", "y\n1\n2\n3\n");
    write(&dir, "x.csv", "good,flat\n1,0.1\n2,0.1\n4,0.1\n");
    let loaded = load_dataset(&[BlockPaths::from_dir(&dir)]).unwrap();
    match loaded.standardized() {
        Err(Error::ZeroVariance(cols)) => {
            assert_eq!(cols.len(), 1);
            assert!(cols[0].contains("flat"), "{cols:?}");
        }
        other => panic!("expected zero-variance error, got {other:?}"),
    }
}

#[test]
fn model_json_round_trip_preserves_objective() {
    let data = random_instance(&Shape { m: 2, n: 30, p: 4, q: 2, r: 2 }, 6);
    let hp = HyperParams::new(0.3, 0.3).unwrap();
    let rep = fit(&data, &hp, &SolverOptions::default(), None).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("model.json");
    write_json(&path, &SavedModel::new(&rep.fit, hp)).unwrap();
    let back: SavedModel = read_json(&path).unwrap();
    let reloaded = back.to_fit().unwrap();
    let before = objective(&data, &rep.fit, &hp).unwrap();
    let after = objective(&data, &reloaded, &back.hyper).unwrap();
    assert!((before - after).abs() <= 1e-12, "{before} vs {after}");
    assert_eq!(reloaded, rep.fit);
}

#[test]
fn atomic_write_leaves_only_the_target() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("out").join("file.txt");
    write_atomic(&path, b"first").unwrap();
    write_atomic(&path, b"second").unwrap();
    assert_eq!(fs::read(&path).unwrap(), b"second");
    let entries: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn csv_emitters_have_fixed_headers() {
    let rows = vec![BoxplotRow {
        scenario: "M2_n15_s5_rx01_ry01".into(),
        method: "MR".into(),
        dataset: 1,
        response: 2,
        replicate: 0,
        mse: 1.25,
        fpr: 0.5,
        fnr: 0.0,
    }];
    let text = String::from_utf8(boxplot_csv(&rows).unwrap()).unwrap();
    assert_eq!(text, "scenario,method,dataset,response,replicate,mse,fpr,fnr\nM2_n15_s5_rx01_ry01,MR,1,2,0,1.25,0.5,0.0\n");
    let empty = String::from_utf8(boxplot_csv(&[]).unwrap()).unwrap();
    assert_eq!(empty, "scenario,method,dataset,response,replicate,mse,fpr,fnr\n");

    let data = random_instance(&Shape { m: 2, n: 12, p: 2, q: 1, r: 1 }, 7);
    let res = select(&data, &CvGrid::new(vec![0.5, 0.1], vec![0.2]).unwrap(), 3, 0, &SolverOptions::default()).unwrap();
    let text = String::from_utf8(cv_matrix_csv(&res).unwrap()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,gamma,cv_score");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.5,0.2,"));
}

#[test]
fn coefficient_table_uses_names() {
    let tmp = tempfile::tempdir().unwrap();
    let a = block(&tmp.path().join("a"), "a,b", true);
    let loaded = load_dataset(&[a]).unwrap();
    let fit = imreg_core::ModelFit::zeros(&loaded.data);
    let rows = coefficient_rows(&fit, Some(&loaded.names));
    assert_eq!(rows.len(), 2 + 4 + 2);
    assert_eq!(rows[2].covariate, "a");
    assert_eq!(rows[3].response, "y2");
    assert_eq!(rows[7].kind, "c");
    assert!(!rows[7].nonzero);
}
