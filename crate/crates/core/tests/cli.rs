mod common;

use std::fs;
use std::path::{Path, PathBuf};

use glyphforge::fixtures;
use glyphforge::format6::{parse_trajectory, serialize_trajectory};
use glyphforge::gmm::{serialize_gmm, RawGmmOutput};
use glyphforge::image::PgmEncoding;
use glyphforge::{Control, GlyphImage, Point6, Trajectory};
use tempfile::TempDir;

fn write(dir: &Path, name: &str, body: impl AsRef<[u8]>) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn traj_file(dir: &Path, name: &str, t: &Trajectory) -> PathBuf {
    write(dir, name, serialize_trajectory(t))
}

#[test]
fn validate_reports_per_file() {
    let dir = TempDir::new().unwrap();
    let good = traj_file(dir.path(), "good.traj", &fixtures::midline());
    let ok = cli!("validate", good);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).starts_with("OK "));

    let bad = write(
        dir.path(),
        "bad.traj",
        "#glyphforge-traj v1\n0 0 1 0 0 0\n0.5 zero 0 0 0 1\n",
    );
    let res = cli!("validate", good, bad);
    assert_eq!(res.status.code(), Some(1));
    let text = stdout(&res);
    assert!(text.contains("ERROR") && text.contains("line 3"), "{text}");

    let empty = TempDir::new().unwrap();
    let res = cli!("validate", empty.path());
    assert_eq!(res.status.code(), Some(0));
    assert!(res.stdout.is_empty());
}

#[test]
fn rasterize_blank_and_defaults() {
    let dir = TempDir::new().unwrap();
    let pen_up = Trajectory::new(vec![
        Point6::new(-0.5, 0.0, Control::EndStroke),
        Point6::new(0.5, 0.0, Control::EndWriting),
    ])
    .unwrap();
    let t = traj_file(dir.path(), "up.traj", &pen_up);
    let out = dir.path().join("up.pgm");
    assert!(cli!("rasterize", t, out, "--height", "16", "--width", "24")
        .status
        .success());
    let img = GlyphImage::read_pgm(&out).unwrap();
    assert_eq!(img.dims(), (16, 24));
    assert!(img.pixels().iter().all(|p| *p == 0.0));

    let mid = common::golden_path("midline.traj");
    let (a, b) = (dir.path().join("a.pgm"), dir.path().join("b.pgm"));
    assert!(cli!("rasterize", mid, a).status.success());
    assert!(cli!("rasterize", mid, b, "--theta", "100", "--w", "2")
        .status
        .success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let ascii = dir.path().join("a.p2.pgm");
    assert!(cli!("rasterize", mid, ascii, "--encoding", "p2")
        .status
        .success());
    assert!(fs::read(&ascii).unwrap().starts_with(b"P2"));
    assert_eq!(
        GlyphImage::read_pgm(&ascii).unwrap(),
        GlyphImage::read_pgm(&a).unwrap()
    );
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = TempDir::new().unwrap();
    let mid = common::golden_path("midline.traj");
    let cfg = write(dir.path(), "run.cfg", "# softer edges\ntheta = 5\nw = 3\n");
    let outs: Vec<Vec<u8>> = [
        vec!["--config", cfg.to_str().unwrap()],
        vec!["--theta", "5", "--w", "3"],
        vec![
            "--config",
            cfg.to_str().unwrap(),
            "--theta",
            "100",
            "--w",
            "2",
        ],
        vec![],
    ]
    .iter()
    .enumerate()
    .map(|(k, extra)| {
        let out = dir.path().join(format!("{k}.pgm"));
        let mut args = vec![
            "rasterize".to_string(),
            mid.display().to_string(),
            out.display().to_string(),
        ];
        args.extend(extra.iter().map(|s| s.to_string()));
        let res = common::cli(&args.iter().map(std::ffi::OsStr::new).collect::<Vec<_>>());
        assert!(res.status.success());
        fs::read(out).unwrap()
    })
    .collect();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[2], outs[3]);
    assert_ne!(outs[0], outs[3]);

    let bad = cli!("rasterize", mid, dir.path().join("x.pgm"), "--theta=-1");
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn udf_export_marks_unreachable_pixels() {
    let dir = TempDir::new().unwrap();
    let pen_up = Trajectory::new(vec![Point6::new(0.0, 0.0, Control::EndWriting)]).unwrap();
    let t = traj_file(dir.path(), "dot.traj", &pen_up);
    let out = dir.path().join("dot.udf");
    assert!(cli!("udf", t, out, "--height", "2", "--width", "3")
        .status
        .success());
    assert_eq!(
        fs::read_to_string(out).unwrap(),
        "inf inf inf\ninf inf inf\n"
    );
}

#[test]
fn loss_values() {
    let dir = TempDir::new().unwrap();
    let strokes = traj_file(dir.path(), "two.traj", &fixtures::two_strokes());
    let rendered = dir.path().join("two.pgm");
    assert!(cli!("rasterize", strokes, rendered).status.success());

    // the written PGM is the exact render rounded to 8 bits
    let img = GlyphImage::read_pgm(&rendered).unwrap();
    let exact = glyphforge::config::RunConfig::default()
        .rasterizer()
        .unwrap()
        .render(&fixtures::two_strokes());
    assert!(img
        .pixels()
        .iter()
        .zip(exact.pixels())
        .all(|(a, b)| (a - b).abs() <= 0.5 / 255.0 + 1e-12));

    let blank = write(
        dir.path(),
        "blank.pgm",
        GlyphImage::filled(128, 128, 0.0)
            .unwrap()
            .encode_pgm(PgmEncoding::Binary)
            .unwrap(),
    );
    let res = cli!("loss", strokes, blank);
    assert!(res.status.success());
    let value: f64 = stdout(&res).trim().parse().unwrap();
    assert!(value > 0.0);

    let full = write(
        dir.path(),
        "full.pgm",
        GlyphImage::filled(128, 128, 1.0)
            .unwrap()
            .encode_pgm(PgmEncoding::Binary)
            .unwrap(),
    );
    let grad = dir.path().join("grad.txt");
    let res = cli!("loss", strokes, full, "--grad", grad);
    assert_eq!(stdout(&res).trim().parse::<f64>().unwrap(), 0.0);
    let lines = fs::read_to_string(&grad).unwrap();
    assert_eq!(lines.lines().count(), 5);

    let small = write(
        dir.path(),
        "small.pgm",
        GlyphImage::filled(8, 8, 0.0)
            .unwrap()
            .encode_pgm(PgmEncoding::Binary)
            .unwrap(),
    );
    let res = cli!("loss", strokes, small);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("dimension mismatch"));

    // regression value: the two-stroke glyph against the midline target
    if common::blessing() {
        common::golden_bytes(
            "two_strokes.traj",
            serialize_trajectory(&fixtures::two_strokes()).as_bytes(),
        )
        .unwrap();
    }
    let res = cli!(
        "loss",
        common::golden_path("two_strokes.traj"),
        common::golden_path("midline.pgm")
    );
    assert!(res.status.success());
    common::golden_bytes("two_strokes_vs_midline.loss", &res.stdout).unwrap();
}

#[test]
fn self_rendered_target_has_zero_loss() {
    // targets written in P2 and P5 both carry 8-bit values; a trajectory whose
    // rendered ink is exactly representable loses nothing to quantization
    let dir = TempDir::new().unwrap();
    let pen_up = Trajectory::new(vec![
        Point6::new(-0.5, 0.0, Control::EndStroke),
        Point6::new(0.5, 0.0, Control::EndWriting),
    ])
    .unwrap();
    let t = traj_file(dir.path(), "up.traj", &pen_up);
    let target = dir.path().join("up.pgm");
    assert!(cli!("rasterize", t, target).status.success());
    let res = cli!("loss", t, target);
    assert_eq!(stdout(&res).trim().parse::<f64>().unwrap(), 0.0);

    let strokes = traj_file(dir.path(), "mid.traj", &fixtures::midline());
    let res = cli!("loss", strokes, common::golden_path("midline.pgm"));
    let v: f64 = stdout(&res).trim().parse().unwrap();
    // round-to-nearest leaves at most half a grey level of excess per pixel
    assert!(v <= 128.0 * 128.0 * (0.5f64 / 255.0).powi(2));
}

#[test]
fn snap_writes_trace_and_fit() {
    let dir = TempDir::new().unwrap();
    let fx = fixtures::bar_offset();
    let t = traj_file(dir.path(), "start.traj", &fx.start);
    let target = write(
        dir.path(),
        "bar.pgm",
        fx.target.encode_pgm(PgmEncoding::Binary).unwrap(),
    );
    let (out, trace) = (dir.path().join("fit.traj"), dir.path().join("trace.csv"));
    let res = cli!(
        "snap", t, target, out, "--trace", trace, "--height", "32", "--width", "32", "--theta",
        "0.5", "--steps", "200", "--lr", "0.003"
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let csv = fs::read_to_string(&trace).unwrap();
    let losses: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(losses.len(), 201);
    assert!(losses[200] < 0.01 * losses[0]);
    let fitted = parse_trajectory(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(fitted.len(), 2);

    let res = cli!(
        "snap", t, target, out, "--trace", trace, "--height", "32", "--width", "32", "--steps",
        "1", "--lr", "0"
    );
    assert!(res.status.success());
    assert_eq!(
        parse_trajectory(&fs::read_to_string(&out).unwrap()).unwrap(),
        fx.start
    );
}

#[test]
fn annotate_directory() {
    let dir = TempDir::new().unwrap();
    let (glyphs, means, out) = (
        dir.path().join("g"),
        dir.path().join("m"),
        dir.path().join("o"),
    );
    fs::create_dir_all(&glyphs).unwrap();
    fs::create_dir_all(&means).unwrap();
    let three = |g1: f64, g2: f64| {
        Trajectory::new(vec![
            Point6::new(-0.8, 0.0, Control::Draw),
            Point6::new(-0.4, 0.0, Control::EndStroke),
            Point6::new(-0.4 + g1, 0.0, Control::Draw),
            Point6::new(-0.2, 0.3, Control::EndStroke),
            Point6::new(-0.2 + g2, 0.3, Control::Draw),
            Point6::new(0.6, 0.3, Control::EndWriting),
        ])
        .unwrap()
    };
    traj_file(&glyphs, "a.traj", &three(0.05, 0.5));
    traj_file(&means, "a.traj", &three(0.5, 0.5));
    let res = cli!("annotate", glyphs, means, out);
    assert!(res.status.success());
    let got = parse_trajectory(&fs::read_to_string(out.join("a.traj")).unwrap()).unwrap();
    let labels: Vec<Control> = got.points().iter().map(|p| p.control).collect();
    assert_eq!(labels[1], Control::EndStrokeConnected);
    assert_eq!(labels[3], Control::EndStroke);

    // a missing mean skeleton fails that file only
    traj_file(&glyphs, "b.traj", &three(0.05, 0.05));
    let res = cli!("annotate", glyphs, means, out);
    assert_eq!(res.status.code(), Some(1));
    let text = stdout(&res);
    assert!(text.contains("OK") && text.contains("ERROR"), "{text}");
}

#[test]
fn metrics_manifest() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "a.pgm",
        GlyphImage::filled(4, 4, 0.0)
            .unwrap()
            .encode_pgm(PgmEncoding::Binary)
            .unwrap(),
    );
    write(
        dir.path(),
        "b.pgm",
        GlyphImage::filled(4, 4, 1.0)
            .unwrap()
            .encode_pgm(PgmEncoding::Ascii)
            .unwrap(),
    );
    traj_file(dir.path(), "s.traj", &fixtures::midline());
    traj_file(dir.path(), "t.traj", &fixtures::two_strokes());
    let manifest = write(
        dir.path(),
        "pairs.txt",
        "# id gt fake gt fake\nsame a.pgm a.pgm s.traj s.traj\ndiff a.pgm b.pgm s.traj t.traj\n",
    );
    let res = cli!("metrics", manifest);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = stdout(&res);
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["id", "mae", "dtw", "dtw_normalized"]);
    assert_eq!(rows[1][0], "same");
    assert_eq!(
        rows[1][1..]
            .iter()
            .map(|v| v.parse::<f64>().unwrap())
            .collect::<Vec<_>>(),
        [0.0; 3]
    );
    assert_eq!(rows[2][1].parse::<f64>().unwrap(), 1.0);
    assert!(rows[2][2].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn gmm_eval_standard_component() {
    let dir = TempDir::new().unwrap();
    let gmm = write(
        dir.path(),
        "head.gmm",
        serialize_gmm(&[RawGmmOutput::new(vec![0.0; 6]).unwrap()]),
    );
    let t = traj_file(
        dir.path(),
        "p.traj",
        &Trajectory::new(vec![Point6::new(0.0, 0.0, Control::EndWriting)]).unwrap(),
    );
    let grad = dir.path().join("g.txt");
    let res = cli!("gmm-eval", gmm, t, "--grad", grad);
    assert!(res.status.success());
    assert_eq!(stdout(&res).trim(), "1.83787706641e0");
    let g: Vec<f64> = fs::read_to_string(grad)
        .unwrap()
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect();
    // at the mean: no pull on the mean, unit pull on each log-scale
    assert_eq!(g.len(), 6);
    assert_eq!(&g[..3], &[0.0; 3]);
    assert!((g[3] - 1.0).abs() < 1e-12 && (g[4] - 1.0).abs() < 1e-12);
}

#[test]
fn gradcheck_modes() {
    let res = cli!("gradcheck", "--instances", "5");
    assert!(res.status.success(), "{}", stdout(&res));
    assert_eq!(
        stdout(&res)
            .lines()
            .filter(|l| l.starts_with("PASS"))
            .count(),
        3
    );

    let res = cli!(
        "gradcheck",
        "--module",
        "nce",
        "--instances",
        "5",
        "--corrupt"
    );
    assert_eq!(res.status.code(), Some(1));
    assert!(stdout(&res).starts_with("FAIL nce"));

    let res = cli!("gradcheck", "--module", "everything");
    assert_eq!(res.status.code(), Some(2));
}
