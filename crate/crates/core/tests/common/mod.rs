#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use glyphforge::format6::visible_segments;
use glyphforge::{Grid, Trajectory};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const BRUTE_SAMPLES: usize = 10_000;

pub fn rng(seed: u64, tag: u32, index: u32) -> ChaCha8Rng {
    glyphforge::rng::stream(seed, glyphforge::rng::stream_id(tag, index))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn lerp(a: [f64; 2], b: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

/// Distance from `x` to segment `a-b` by sampling `BRUTE_SAMPLES` evenly
/// spaced points (end points included).
pub fn sampled_distance(x: [f64; 2], a: [f64; 2], b: [f64; 2]) -> (f64, usize) {
    let last = (BRUTE_SAMPLES - 1) as f64;
    (0..BRUTE_SAMPLES)
        .map(|k| (dist(x, lerp(a, b, k as f64 / last)), k))
        .fold(
            (f64::INFINITY, 0),
            |best, c| if c.0 < best.0 { c } else { best },
        )
}

/// Sampled distance, then golden-section search inside the two sample
/// intervals around the best sample. Distance along a segment is convex in
/// the parameter, so the true minimum lies in that bracket.
pub fn brute_distance(x: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (best, k) = sampled_distance(x, a, b);
    let last = (BRUTE_SAMPLES - 1) as f64;
    let mut lo = (k.saturating_sub(1)) as f64 / last;
    let mut hi = ((k + 1).min(BRUTE_SAMPLES - 1)) as f64 / last;
    let f = |s: f64| dist(x, lerp(a, b, s));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.min(f(0.5 * (lo + hi)))
}

/// Per-pixel distance field in pixel units, independent of the library's
/// closed-form segment distance.
pub fn brute_udf(t: &Trajectory, grid: &Grid, include_connections: bool, refine: bool) -> Vec<f64> {
    let segs: Vec<([f64; 2], [f64; 2])> = visible_segments(t, include_connections)
        .into_iter()
        .filter(|s| s.visible)
        .map(|s| (grid.to_pixel(s.start), grid.to_pixel(s.end)))
        .collect();
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.height() {
        for j in 0..grid.width() {
            let x = [j as f64, i as f64];
            let d = segs
                .iter()
                .map(|&(a, b)| {
                    if refine {
                        brute_distance(x, a, b)
                    } else {
                        sampled_distance(x, a, b).0
                    }
                })
                .fold(f64::INFINITY, f64::min);
            out.push(d);
        }
    }
    out
}

/// Haar-random orthogonal matrix from the QR factorization of a Gaussian one.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let signs = DMatrix::from_diagonal(&r.diagonal().map(|v| v.signum()));
    q * signs
}

/// Minimum over every monotone alignment path, summed from the start of the
/// path in order.
pub fn brute_dtw(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    fn walk(a: &[[f64; 2]], b: &[[f64; 2]], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + dist(a[i], b[j]);
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

pub fn blessing() -> bool {
    std::env::var_os("GLYPHFORGE_BLESS").is_some_and(|v| v == "1")
}

/// Compare against a committed golden file, or rewrite it when
/// `GLYPHFORGE_BLESS=1`.
pub fn golden_bytes(name: &str, actual: &[u8]) -> Result<(), String> {
    let path = golden_path(name);
    if blessing() {
        std::fs::write(&path, actual).map_err(|e| format!("{}: {e}", path.display()))?;
        return Ok(());
    }
    let expected = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!("{} differs from the golden copy", path.display()))
    }
}

pub fn cli(args: &[&std::ffi::OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glyphforge"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[macro_export]
macro_rules! cli {
    ($($arg:expr),* $(,)?) => {
        common::cli(&[$(std::ffi::OsStr::new(&$arg)),*])
    };
}
