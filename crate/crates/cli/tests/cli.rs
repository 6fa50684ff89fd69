use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pfe_core::imgio::{load_labels, save_ppm, RgbImage};
use pfe_core::metrics::evaluate;
use pfe_core::Segmentation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const COLORS: [[f64; 3]; 4] = [[0.9, 0.1, 0.1], [0.1, 0.8, 0.2], [0.15, 0.2, 0.9], [0.9, 0.85, 0.1]];

fn pfe(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfe"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn pfe")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = pfe(args, cwd);
    assert!(
        out.status.success(),
        "pfe {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str], cwd: &Path) -> i32 {
    pfe(args, cwd).status.code().unwrap()
}

/// Noisy four-quadrant image; `split` moves the quadrant boundary.
fn quadrant_image(size: usize, split: usize, seed: u64) -> (RgbImage, Vec<usize>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let label = |row: usize, col: usize| usize::from(col >= split) + 2 * usize::from(row >= split);
    let img = RgbImage::from_fn(size, size, |row, col| {
        COLORS[label(row, col)].map(|c| (c + r.random_range(-0.03..0.03)).clamp(0.0, 1.0))
    })
    .unwrap();
    let gt = (0..size * size).map(|i| label(i / size, i % size)).collect();
    (img, gt)
}

fn write_csv_labels(path: &Path, labels: &[usize], width: usize) {
    let text: String = labels
        .chunks(width)
        .map(|row| row.iter().map(usize::to_string).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    std::fs::write(path, text).unwrap();
}

fn dataset(dir: &Path, count: usize) -> (PathBuf, PathBuf) {
    let (imgs, gts) = (dir.join("images"), dir.join("gt"));
    std::fs::create_dir_all(&imgs).unwrap();
    std::fs::create_dir_all(&gts).unwrap();
    for i in 0..count {
        let (img, gt) = quadrant_image(24, 8 + 2 * i, 100 + i as u64);
        save_ppm(&img, imgs.join(format!("im{i}.ppm"))).unwrap();
        write_csv_labels(&gts.join(format!("im{i}.csv")), &gt, 24);
        let other: Vec<usize> = gt.iter().map(|&l| l % 2).collect();
        write_csv_labels(&gts.join(format!("im{i}_b.csv")), &other, 24);
    }
    (imgs, gts)
}

fn parse_metrics(line: &str) -> [f64; 3] {
    let mut out = [f64::NAN; 3];
    for tok in line.split_whitespace() {
        for (i, key) in ["covering=", "pri=", "vi="].iter().enumerate() {
            if let Some(v) = tok.strip_prefix(key) {
                out[i] = v.parse().unwrap();
            }
        }
    }
    out
}

#[test]
fn embed_writes_header_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = quadrant_image(32, 16, 1);
    save_ppm(&img, dir.path().join("img.ppm")).unwrap();
    let args = |out: &'static str| ["embed", "--input", "img.ppm", "--dim", "5", "--out", out];
    let stdout = ok(&args("a.csv"), dir.path());
    assert!(stdout.contains("solve_seconds="), "{stdout}");
    ok(&args("b.csv"), dir.path());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next(), Some("64 5"));
    assert_eq!(text.lines().count(), 65);
}

#[test]
fn embed_emits_resolved_config_and_timing_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = quadrant_image(16, 8, 2);
    save_ppm(&img, dir.path().join("img.ppm")).unwrap();
    let out = pfe(
        &["embed", "--input", "img.ppm", "--out", "e.csv", "--timing-csv", "t.csv", "--downsample", "2"],
        dir.path(),
    );
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    for field in ["lambda: 100.0", "r: 1.0", "seed: 0", "soc_max: 10", "sb_max1: 5", "sb_max2: 100", "sigma: None"] {
        assert!(err.contains(field), "missing {field} in {err}");
    }
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "filename,d,seconds");
    assert!(lines[1].starts_with("img.ppm,5,"));
}

#[test]
fn embed_accepts_edge_lists() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("# two triangles joined by a weak edge\n");
    for (i, j, w) in [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0), (2, 3, 0.01)] {
        text.push_str(&format!("{i} {j} {w}\n"));
    }
    std::fs::write(dir.path().join("g.txt"), text).unwrap();
    ok(&["embed", "--input", "g.txt", "--dim", "2", "--out", "e.csv"], dir.path());
    ok(&["segment", "--input", "e.csv", "--k", "2", "--out", "s.csv"], dir.path());
    let seg = load_labels(dir.path().join("s.csv")).unwrap();
    let l = seg.labels();
    assert!(l[0] == l[1] && l[1] == l[2] && l[3] == l[4] && l[4] == l[5] && l[0] != l[3], "{l:?}");
}

#[test]
fn segment_with_one_cluster_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("e.csv"), "6 2\n1,2\n3,4\n5,6\n7,8\n9,10\n11,12\n").unwrap();
    ok(&["segment", "--input", "e.csv", "--k", "1", "--shape", "2x3", "--out", "s.csv"], dir.path());
    assert_eq!(std::fs::read_to_string(dir.path().join("s.csv")).unwrap(), "0,0,0\n0,0,0\n");
    ok(&["segment", "--input", "e.csv", "--k", "1", "--shape", "2x3", "--out", "s.pgm"], dir.path());
    assert!(load_labels(dir.path().join("s.pgm")).unwrap().labels().iter().all(|&l| l == 0));
}

#[test]
fn segment_recovers_quadrants() {
    let dir = tempfile::tempdir().unwrap();
    let (img, gt) = quadrant_image(32, 16, 3);
    save_ppm(&img, dir.path().join("q.ppm")).unwrap();
    write_csv_labels(&dir.path().join("gt.csv"), &gt, 32);
    ok(&["embed", "--input", "q.ppm", "--out", "e.csv", "--downsample", "1"], dir.path());
    ok(&["segment", "--input", "e.csv", "--k", "4", "--shape", "32x32", "--out", "s.pgm"], dir.path());
    let seg = load_labels(dir.path().join("s.pgm")).unwrap();
    let mut used = seg.labels().to_vec();
    used.sort_unstable();
    used.dedup();
    assert_eq!(used.len(), 4);
    let stdout = ok(&["evaluate", "--input", "s.pgm", "--gt", "gt.csv"], dir.path());
    assert_eq!(stdout.trim(), "covering=1.0000 pri=1.0000 vi=0.0000");
}

#[test]
fn evaluate_reference_outputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), "0,0\n1,1\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "0,1\n0,1\n").unwrap();
    let same = ok(&["evaluate", "--input", "a.csv", "--gt", "a.csv"], dir.path());
    assert_eq!(same, "covering=1.0000 pri=1.0000 vi=0.0000\n");
    let halves = ok(&["evaluate", "--input", "a.csv", "--gt", "b.csv"], dir.path());
    assert!(halves.trim_end().ends_with("vi=1.3863"), "{halves}");
}

#[test]
fn evaluate_directory_reports_rows_and_mean() {
    let dir = tempfile::tempdir().unwrap();
    let (preds, gts) = (dir.path().join("pred"), dir.path().join("gt"));
    std::fs::create_dir_all(&preds).unwrap();
    std::fs::create_dir_all(gts.join("c")).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let mut random = |k: usize| -> Vec<usize> { (0..20).map(|_| r.random_range(0..k)).collect() };
    let mut expected = Vec::new();
    for (name, gt_paths) in [("a", vec!["a.csv"]), ("b", vec!["b_1.csv", "b_2.csv"]), ("c", vec!["c/x.csv", "c/y.csv"])] {
        let pred = random(3);
        write_csv_labels(&preds.join(format!("{name}.csv")), &pred, 5);
        let mut segs = Vec::new();
        for g in gt_paths {
            let labels = random(4);
            write_csv_labels(&gts.join(g), &labels, 5);
            segs.push(Segmentation::from_labels(labels).unwrap());
        }
        expected.push(evaluate(&Segmentation::from_labels(pred).unwrap(), &segs).unwrap());
    }
    let stdout = ok(
        &["evaluate", "--input", "pred", "--gt-dir", "gt", "--append-csv", "m.csv"],
        dir.path(),
    );
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 4);
    for (line, (name, e)) in lines.iter().zip(["a.csv", "b.csv", "c.csv"].iter().zip(&expected)) {
        assert!(line.starts_with(name));
        let got = parse_metrics(line);
        for (g, want) in got.iter().zip([e.covering, e.pri, e.vi]) {
            assert!((g - want).abs() <= 5e-5, "{line} vs {e:?}");
        }
    }
    assert!(lines[3].starts_with("mean "));
    let mean = parse_metrics(lines[3]);
    let want = [
        expected.iter().map(|e| e.covering).sum::<f64>() / 3.0,
        expected.iter().map(|e| e.pri).sum::<f64>() / 3.0,
        expected.iter().map(|e| e.vi).sum::<f64>() / 3.0,
    ];
    for (g, w) in mean.iter().zip(want) {
        assert!((g - w).abs() <= 5e-5);
    }
    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("file,covering,pri,vi"));
    assert_eq!(csv.lines().count(), 5);
}

fn best_row(stdout: &str) -> (String, [f64; 3]) {
    let line = stdout.lines().next().unwrap();
    (line.split_whitespace().nth(1).unwrap().to_string(), parse_metrics(line))
}

#[test]
fn benchmark_single_image_equals_fixed_run() {
    let dir = tempfile::tempdir().unwrap();
    let (imgs, _) = dataset(dir.path(), 1);
    let stdout = ok(
        &["benchmark", "--input", "images", "--gt-dir", "gt", "--dims", "5", "--k", "4", "--downsample", "2"],
        dir.path(),
    );
    let (d, row) = best_row(&stdout);
    assert_eq!(d, "d=5");
    let mean_line = stdout.lines().find(|l| l.starts_with("mean ")).unwrap();
    assert_eq!(parse_metrics(mean_line), row);
    assert!(mean_line.ends_with("images=1"));
    assert!(stdout.lines().any(|l| l.starts_with("timing d=5 min=")));

    let img = imgs.join("im0.ppm");
    let img = img.to_str().unwrap();
    ok(&["embed", "--input", img, "--dim", "5", "--downsample", "2", "--out", "e.csv"], dir.path());
    ok(&["segment", "--input", "e.csv", "--k", "4", "--shape", "12x12", "--out", "im0.csv"], dir.path());
    let fixed = ok(&["evaluate", "--input", "im0.csv", "--gt-dir", "gt"], dir.path());
    assert_eq!(parse_metrics(&fixed), row);
}

#[test]
fn benchmark_means_match_hand_aggregation() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path(), 5);
    std::fs::write(dir.path().join("images/broken.ppm"), b"P6\n4 4\n255\nshort").unwrap();
    let stdout = ok(
        &[
            "benchmark", "--input", "images", "--gt-dir", "gt", "--dims", "5,10", "--k", "4", "--downsample", "2",
            "--out", "summary.csv", "--timing-csv", "t.csv",
        ],
        dir.path(),
    );
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6, "{csv}");
    let names: Vec<&str> = rows[..5].iter().map(|r| r[0]).collect();
    assert_eq!(names, ["im0.ppm", "im1.ppm", "im2.ppm", "im3.ppm", "im4.ppm"]);
    for col in 2..5 {
        let hand = rows[..5].iter().map(|r| r[col].parse::<f64>().unwrap()).sum::<f64>() / 5.0;
        let reported: f64 = rows[5][col].parse().unwrap();
        assert!((hand - reported).abs() <= 2e-6, "column {col}: {hand} vs {reported}");
    }
    assert!(rows[..5].iter().all(|r| r[1] == "5" || r[1] == "10"));
    assert!(stdout.contains("images=5"));
    let timing = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(timing.lines().count(), 1 + 5 * 2);
}

#[test]
fn benchmark_with_no_usable_images_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("images")).unwrap();
    std::fs::create_dir_all(dir.path().join("gt")).unwrap();
    std::fs::write(dir.path().join("images/bad.ppm"), b"not an image").unwrap();
    assert_eq!(code(&["benchmark", "--input", "images", "--gt-dir", "gt"], dir.path()), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("e.csv"), "3 1\n1\n2\n3\n").unwrap();
    std::fs::write(p.join("bad.txt"), "0 1 x\n").unwrap();
    let (img, _) = quadrant_image(8, 4, 4);
    save_ppm(&img, p.join("img.ppm")).unwrap();
    assert_eq!(code(&["segment", "--input", "e.csv", "--k", "4", "--out", "s.csv"], p), 3);
    assert_eq!(code(&["segment", "--input", "e.csv", "--k", "2", "--out", "s.pgm"], p), 3);
    assert_eq!(code(&["segment", "--input", "missing.csv", "--k", "2", "--out", "s.csv"], p), 1);
    assert_eq!(code(&["embed", "--input", "missing.ppm", "--out", "o.csv"], p), 1);
    assert_eq!(code(&["embed", "--input", "bad.txt", "--out", "o.csv"], p), 1);
    assert_eq!(code(&["embed", "--input", "img.ppm", "--out", "o.csv", "--lambda", "-1"], p), 3);
    assert_eq!(code(&["embed", "--input", "img.ppm", "--out", "o.csv", "--dim", "0"], p), 3);
    assert_eq!(code(&["embed", "--input", "img.ppm", "--out", "o.csv", "--sigma", "0"], p), 3);
    assert_eq!(code(&["embed", "--input", "img.ppm", "--out", "o.csv", "--downsample", "0"], p), 3);
    assert_eq!(code(&["evaluate", "--input", "e.csv"], p), 3);
    assert_eq!(code(&["embed", "--no-such-flag"], p), 3);
    assert_eq!(code(&["--help"], p), 0);
}
