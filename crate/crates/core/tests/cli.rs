mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use common::*;
use geodist::cli::{run_with_env, BENCH_CSV_HEADER};
use geodist::io::{read_grid_fgd1, write_grid_fgd1};
use geodist::{ScalarGrid, INF_SENTINEL};
use tempfile::TempDir;

struct Outcome {
    code: i32,
    out: String,
    err: String,
}

fn geodist(args: &[&str]) -> Outcome {
    geodist_env(args, None)
}

fn geodist_env(args: &[&str], threads_env: Option<&str>) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("geodist").chain(args.iter().copied());
    let code = run_with_env(argv, threads_env, &mut out, &mut err);
    Outcome {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn write_pgm(dir: &TempDir, name: &str, (h, w): (usize, usize), pixels: &[u8]) -> PathBuf {
    let mut bytes = format!("P5\n# test\n{w} {h}\n255\n").into_bytes();
    bytes.extend_from_slice(pixels);
    let path = dir.path().join(name);
    std::fs::write(&path, bytes).unwrap();
    path
}

fn write_fgd1(dir: &TempDir, name: &str, grid: &ScalarGrid) -> PathBuf {
    let path = dir.path().join(name);
    write_grid_fgd1(grid, std::fs::File::create(&path).unwrap()).unwrap();
    path
}

fn read(path: &Path) -> ScalarGrid {
    read_grid_fgd1(std::fs::File::open(path).unwrap()).unwrap()
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn euclidean_on_center_seed_pgm_gives_chamfer_ring() {
    let dir = TempDir::new().unwrap();
    let image = write_pgm(&dir, "image.pgm", (3, 3), &[0; 9]);
    let seeds = write_pgm(&dir, "seeds.pgm", (3, 3), &[0, 0, 0, 0, 255, 0, 0, 0, 0]);
    let output = dir.path().join("out.fgd");
    let preview = dir.path().join("out.pgm");
    let r = geodist(&[
        "compute", "--input", s(&image), "--seeds", s(&seeds), "--mode", "euclidean",
        "--output", s(&output), "--preview", s(&preview), "--threads", "2",
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.starts_with("mode=euclidean size=3x3 engine=parallel threads=2 "), "{}", r.out);
    assert!(r.out.contains("rounds=2"));
    let d = 2f32.sqrt();
    assert_eq!(read(&output).data(), &[d, 1.0, d, 1.0, 0.0, 1.0, d, 1.0, d]);
    let pgm = std::fs::read(&preview).unwrap();
    assert!(pgm.starts_with(b"P5"));
    assert_eq!(pgm[pgm.len() - 9..], [255, 180, 255, 180, 0, 180, 255, 180, 255]);
}

#[test]
fn oracle_and_parallel_fixpoint_agree_through_compare() {
    let dir = TempDir::new().unwrap();
    let mut rng = rng(301);
    let image = random_image(&mut rng, &[8, 8]);
    let mask = random_binary_mask(&mut rng, &image, 0.1);
    let image_path = write_fgd1(&dir, "image.fgd", &image);
    let seeds_path = write_fgd1(&dir, "seeds.fgd", &mask);
    let mut outputs = Vec::new();
    for (engine, extra) in [("oracle", vec![]), ("parallel", vec!["--fixpoint", "--threads", "3"])] {
        let output = dir.path().join(format!("{engine}.fgd"));
        let mut args = vec![
            "compute", "--input", s(&image_path), "--seeds", s(&seeds_path), "--mode", "geodesic",
            "--lambda", "0.8", "--engine", engine, "--output", s(&output),
        ];
        args.extend(extra);
        let r = geodist(&args);
        assert_eq!(r.code, 0, "{}", r.err);
        outputs.push(output);
    }
    let r = geodist(&["compare", "--a", s(&outputs[0]), "--b", s(&outputs[1]), "--tol", "1e-4"]);
    assert_eq!(r.code, 0, "{}", r.out);
    assert!(r.out.starts_with("max_abs_diff="));
}

#[test]
fn mismatched_shapes_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let image = write_pgm(&dir, "image.pgm", (3, 3), &[0; 9]);
    let seeds = write_pgm(&dir, "seeds.pgm", (3, 4), &[255; 12]);
    let output = dir.path().join("out.fgd");
    let r = geodist(&["compute", "--input", s(&image), "--seeds", s(&seeds), "--mode", "geodesic", "--output", s(&output)]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("shape mismatch"), "{}", r.err);
    assert_eq!(r.err.lines().count(), 1);
    assert!(!output.exists());
}

#[test]
fn compare_exit_codes() {
    let dir = TempDir::new().unwrap();
    let base = ScalarGrid::from_vec(&[2, 3], &[1.0, 1.0], vec![0.0, 1.0, 2.0, 3.0, 4.0, INF_SENTINEL]).unwrap();
    let mut shifted = base.clone();
    shifted.set(&[1, 1], 4.0005);
    let a = write_fgd1(&dir, "a.fgd", &base);
    let a2 = write_fgd1(&dir, "a2.fgd", &base);
    let b = write_fgd1(&dir, "b.fgd", &shifted);
    let c = write_fgd1(&dir, "c.fgd", &ScalarGrid::new(2, &[3, 2], &[1.0, 1.0], 0.0).unwrap());

    let same = geodist(&["compare", "--a", s(&a), "--b", s(&a2), "--tol", "0"]);
    assert_eq!(same.code, 0);
    assert!(same.out.contains("max_abs_diff=0 ") && same.out.contains("differing=0"), "{}", same.out);

    let off = geodist(&["compare", "--a", s(&a), "--b", s(&b), "--tol", "1e-4"]);
    assert_eq!(off.code, 1);
    assert!(off.out.contains("at=[1, 1]") && off.out.contains("differing=1"), "{}", off.out);
    assert_eq!(geodist(&["compare", "--a", s(&a), "--b", s(&b), "--tol", "1e-3"]).code, 0);

    let shape = geodist(&["compare", "--a", s(&a), "--b", s(&c)]);
    assert_eq!(shape.code, 2);
    assert!(shape.err.contains("shape mismatch"));
}

#[test]
fn io_and_compute_failures_have_their_own_codes() {
    let dir = TempDir::new().unwrap();
    let image = write_pgm(&dir, "image.pgm", (2, 2), &[0; 4]);
    let empty = write_pgm(&dir, "empty.pgm", (2, 2), &[0; 4]);
    let output = dir.path().join("out.fgd");
    let missing = dir.path().join("missing.fgd");
    let garbage = dir.path().join("garbage.fgd");
    std::fs::write(&garbage, b"FGD1\x02\x00").unwrap();

    let r = geodist(&["compute", "--input", s(&missing), "--seeds", s(&image), "--mode", "geodesic", "--output", s(&output)]);
    assert_eq!(r.code, 3);
    let r = geodist(&["compute", "--input", s(&garbage), "--seeds", s(&image), "--mode", "geodesic", "--output", s(&output)]);
    assert_eq!(r.code, 3);
    let r = geodist(&["compute", "--input", s(&image), "--seeds", s(&empty), "--mode", "geodesic", "--output", s(&output)]);
    assert_eq!(r.code, 4, "{}", r.err);
    assert_eq!(r.err.lines().count(), 1);
    let r = geodist(&["compute", "--input", s(&image), "--seeds", s(&image), "--mode", "gsf", "--output", s(&output)]);
    assert_eq!(r.code, 2);
    let r = geodist(&["compute", "--input", s(&image), "--seeds", s(&image), "--mode", "bogus", "--output", s(&output)]);
    assert_eq!(r.code, 2);
    let r = geodist(&["compute", "--input", s(&image), "--seeds", s(&image), "--mode", "geodesic", "--lambda", "1.5", "--output", s(&output)]);
    assert_eq!(r.code, 2);
}

#[test]
fn gsf_fills_a_one_cell_gap() {
    let dir = TempDir::new().unwrap();
    let image = write_pgm(&dir, "image.pgm", (1, 5), &[0; 5]);
    let mask = write_pgm(&dir, "mask.pgm", (1, 5), &[255, 255, 0, 255, 255]);
    let output = dir.path().join("out.fgd");
    let r = geodist(&[
        "compute", "--input", s(&image), "--seeds", s(&mask), "--mode", "gsf", "--lambda", "0",
        "--theta", "1.0", "--engine", "serial", "--output", s(&output),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(read(&output).data(), &[1.0; 5]);
}

#[test]
fn volume_preview_uses_requested_slice() {
    let dir = TempDir::new().unwrap();
    let mut rng = rng(302);
    let image = random_image(&mut rng, &[3, 4, 5]);
    let mut mask = image.filled_like(0.0);
    mask.set(&[0, 0, 0], 1.0);
    let image_path = write_fgd1(&dir, "image.fgd", &image);
    let mask_path = write_fgd1(&dir, "mask.fgd", &mask);
    let output = dir.path().join("out.fgd");
    let preview = dir.path().join("slice.pgm");
    let base = [
        "compute", "--input", s(&image_path), "--seeds", s(&mask_path), "--mode", "signed",
        "--output", s(&output), "--preview", s(&preview),
    ];
    let mut args = base.to_vec();
    args.extend(["--slice", "2"]);
    assert_eq!(geodist(&args).code, 0);
    let pgm = std::fs::read(&preview).unwrap();
    assert!(pgm.starts_with(b"P5\n5 4\n255\n"));
    let mut args = base.to_vec();
    args.extend(["--slice", "3"]);
    assert_eq!(geodist(&args).code, 2);
}

#[test]
fn benchmark_writes_expected_csv() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("bench.csv");
    let r = geodist(&[
        "benchmark", "--dims", "2", "--sizes", "64", "--threads-list", "1,2", "--repeats", "1",
        "--seed", "17", "--csv", s(&csv_path),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(header, BENCH_CSV_HEADER);
    assert_eq!(
        header.join(","),
        "ndim,size,engine,threads,iterations,wall_ms,speedup_vs_serial,max_dev_vs_serial,rng_seed"
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][2], "serial");
    assert_eq!(rows[0][6].parse::<f64>().unwrap(), 1.0);
    for row in &rows {
        assert_eq!(&row[0], "2");
        assert_eq!(&row[1], "64");
        assert_eq!(&row[4], "2");
        assert_eq!(&row[8], "17");
        assert!(row[7].parse::<f64>().unwrap() <= 1e-3);
    }
    assert_eq!((&rows[1][2], &rows[1][3]), ("parallel", "1"));
    assert_eq!((&rows[2][2], &rows[2][3]), ("parallel", "2"));

    let r = geodist(&["benchmark", "--dims", "4", "--sizes", "8"]);
    assert_eq!(r.code, 2);
}

#[test]
fn thread_count_comes_from_flag_then_environment() {
    let dir = TempDir::new().unwrap();
    let image = write_pgm(&dir, "image.pgm", (4, 4), &[0; 16]);
    let mut seeds = [0u8; 16];
    seeds[5] = 255;
    let seeds = write_pgm(&dir, "seeds.pgm", (4, 4), &seeds);
    let output = dir.path().join("out.fgd");
    let args = ["compute", "--input", s(&image), "--seeds", s(&seeds), "--mode", "geodesic", "--output", s(&output)];

    assert!(geodist_env(&args, Some("3")).out.contains(" threads=3 "));
    let mut with_flag = args.to_vec();
    with_flag.extend(["--threads", "2"]);
    assert!(geodist_env(&with_flag, Some("3")).out.contains(" threads=2 "));
    assert_eq!(geodist_env(&args, Some("lots")).code, 2);
    assert_eq!(geodist_env(&args, Some("0")).code, 2);

    // Same through the real binary and process environment.
    let bin = env!("CARGO_BIN_EXE_geodist");
    let run = Command::new(bin).args(args).env("GEODIST_THREADS", "5").output().unwrap();
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stdout).contains(" threads=5 "));
    let run = Command::new(bin).args(with_flag).env("GEODIST_THREADS", "5").output().unwrap();
    assert!(String::from_utf8_lossy(&run.stdout).contains(" threads=2 "));
    let run = Command::new(bin).args(args).env("GEODIST_THREADS", "x").output().unwrap();
    assert_eq!(run.status.code(), Some(2));
    assert!(run.stdout.is_empty());
}
