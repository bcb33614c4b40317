mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use topocrop::imagecore::{decode_image, encode_rgb_jpeg, encode_rgb_png};
use topocrop::{GrayImage, RgbImage};

fn topocrop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topocrop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_png(path: &Path, img: &RgbImage) {
    fs::write(path, encode_rgb_png(img).unwrap()).unwrap();
}

fn worked_fixture() -> RgbImage {
    let g = GrayImage::from_rows(&[[9, 9, 9], [1, 9, 2], [9, 9, 9]]).unwrap();
    common::gray_to_rgb(&g)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn diagram_of_constant_image() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("flat.png");
    write_png(&p, &RgbImage::filled(6, 6, [100, 100, 100]).unwrap());
    let o = topocrop(&["diagram", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "birth,death,lifetime\n100,inf,inf\n");
}

#[test]
fn diagram_of_worked_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("w.png");
    write_png(&p, &worked_fixture());
    let out = tmp.path().join("nested/d.csv");
    let o = topocrop(&[
        "diagram",
        p.to_str().unwrap(),
        "--smooth",
        "0",
        "--border",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(
        fs::read_to_string(out).unwrap(),
        "birth,death,lifetime\n1,inf,inf\n2,9,7\n"
    );
}

#[test]
fn diagram_error_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = topocrop(&["diagram", tmp.path().join("nope.png").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(!missing.stderr.is_empty());

    let junk = tmp.path().join("junk.jpg");
    fs::write(&junk, b"definitely not a jpeg").unwrap();
    assert_eq!(
        topocrop(&["diagram", junk.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn invalid_flags_exit_one() {
    for args in [
        vec!["diagram", "x.png", "--connectivity", "6"],
        vec!["diagram", "x.png", "--border", "wide"],
        vec!["process", "x.png", "out", "--emit", "everything"],
        vec!["batch", "in", "out", "--ratio", "1.5"],
        vec!["batch", "in", "out", "--jobs", "0"],
        vec!["frobnicate"],
    ] {
        let o = topocrop(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
    assert!(!Path::new("out").exists());
    assert_eq!(topocrop(&["--help"]).status.code(), Some(0));
}

#[test]
fn process_blob_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let img = RgbImage::from_fn(64, 64, |r, c| {
        if (10..30).contains(&r) && (20..32).contains(&c) {
            [40, 25, 20]
        } else {
            [210, 190, 180]
        }
    })
    .unwrap();
    let p = tmp.path().join("lesion.png");
    write_png(&p, &img);
    let out_dir = tmp.path().join("out");
    let o = topocrop(&[
        "process",
        p.to_str().unwrap(),
        out_dir.to_str().unwrap(),
        "--smooth",
        "0",
        "--emit",
        "mask,gray,diagram",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let line = stdout(&o);
    assert!(line.contains("processed"), "{line}");
    assert!(line.contains("top=10 bottom=30 left=20 right=32"), "{line}");
    let cropped = decode_image(&fs::read(out_dir.join("lesion.cropped.jpg")).unwrap()).unwrap();
    assert_eq!((cropped.width(), cropped.height()), (12, 20));
    for f in ["lesion.mask.png", "lesion.gray.png", "lesion.diagram.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let mask = decode_image(&fs::read(out_dir.join("lesion.mask.png")).unwrap()).unwrap();
    assert_eq!(mask.get(15, 25), [255; 3]);
    assert_eq!(mask.get(0, 0), [0; 3]);
}

#[test]
fn process_constant_image_falls_back() {
    let tmp = tempfile::tempdir().unwrap();
    let bytes = encode_rgb_jpeg(&RgbImage::filled(24, 24, [150, 120, 100]).unwrap()).unwrap();
    let p = tmp.path().join("flat.jpg");
    fs::write(&p, &bytes).unwrap();
    let out_dir = tmp.path().join("o");
    let o = topocrop(&["process", p.to_str().unwrap(), out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("fallback_original"));
    assert_eq!(fs::read(out_dir.join("flat.cropped.jpg")).unwrap(), bytes);
}

#[test]
fn process_unwritable_out_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("w.png");
    write_png(&p, &worked_fixture());
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = topocrop(&[
        "process",
        p.to_str().unwrap(),
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn batch_counts_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    common::write_lesion_dir(&input, 10, 55);
    let out = tmp.path().join("out");
    let o = topocrop(&[
        "batch",
        input.to_str().unwrap(),
        out.to_str().unwrap(),
        "--jobs",
        "2",
        "--seed",
        "9",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let counts: Vec<usize> = ["train_dir", "train_dir_TIP", "test_dir", "test_dir_TIP"]
        .iter()
        .map(|d| common::dir_names(&out.join(d)).len())
        .collect();
    assert_eq!(counts, vec![9, 9, 1, 1]);

    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let o = topocrop(&["batch", empty.to_str().unwrap(), out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("EmptyInput"));

    fs::write(input.join("zz_corrupt.png"), b"\x89PNG\r\n\x1a\nbroken").unwrap();
    let o = topocrop(&[
        "batch",
        input.to_str().unwrap(),
        tmp.path().join("o2").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = topocrop(&[
        "batch",
        input.to_str().unwrap(),
        tmp.path().join("o3").to_str().unwrap(),
        "--strict",
    ]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn config_file_merges_with_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("w.png");
    write_png(&p, &worked_fixture());
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"smooth": 0, "border": 1, "connectivity": "4"}"#).unwrap();

    let via_file = topocrop(&[
        "diagram",
        p.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--border",
        "0",
    ]);
    let direct = topocrop(&[
        "diagram",
        p.to_str().unwrap(),
        "--smooth",
        "0",
        "--border",
        "0",
        "--connectivity",
        "4",
    ]);
    assert_eq!(via_file.status.code(), Some(0));
    assert_eq!(stdout(&via_file), stdout(&direct));
    assert_eq!(stdout(&direct), "birth,death,lifetime\n1,inf,inf\n2,9,7\n");

    fs::write(&cfg, r#"{"smoothing": 0}"#).unwrap();
    let bad = topocrop(&[
        "diagram",
        p.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn split_lists_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    let names = common::write_lesion_dir(tmp.path(), 10, 3);
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = topocrop::cli::run(
        [
            "topocrop",
            "split",
            tmp.path().to_str().unwrap(),
            "--seed",
            "4",
        ],
        &mut out,
        &mut err,
    );
    assert_eq!(code, 0);
    let text = String::from_utf8(out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), names.len());
    assert_eq!(rows.iter().filter(|r| r.ends_with(",test")).count(), 1);
}
