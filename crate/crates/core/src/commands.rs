//! Batch operations behind the `glyphforge` binary.
//!
//! Each function writes its report to `out` and returns whether the run
//! succeeded. Output files are written to a temporary sibling and renamed
//! into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::annotate::pseudo_annotate;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::format6::{parse_trajectory, serialize_trajectory, Trajectory};
use crate::gmm::{loss_point_grad, loss_point_raw, parse_gmm};
use crate::gradcheck::{run_suite, GradCheckOptions, Suite};
use crate::image::{GlyphImage, PgmEncoding};
use crate::metrics::{dtw, mae};

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text).map_err(|e| Error::in_file(path, e))
}

/// Twelve significant digits.
pub fn format_scalar(v: f64) -> String {
    format!("{v:.11e}")
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<output>", e)
}

fn list_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

/// Parse every file (directories are expanded one level). Returns `true`
/// when all files are valid.
pub fn validate(paths: &[PathBuf], out: &mut dyn Write) -> Result<bool> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            files.extend(list_files(p)?);
        } else {
            files.push(p.clone());
        }
    }
    let mut ok = true;
    for f in &files {
        match read_trajectory(f) {
            Ok(t) => writeln!(out, "OK {} ({} points)", f.display(), t.len()).map_err(io_err)?,
            Err(e) => {
                ok = false;
                writeln!(out, "ERROR {e}").map_err(io_err)?;
            }
        }
    }
    Ok(ok)
}

pub fn rasterize(
    traj: &Path,
    out_pgm: &Path,
    cfg: &RunConfig,
    encoding: PgmEncoding,
) -> Result<()> {
    let t = read_trajectory(traj)?;
    let img = cfg.rasterizer()?.render(&t);
    write_atomic(out_pgm, &img.encode_pgm(encoding)?)
}

pub fn udf(traj: &Path, out_path: &Path, cfg: &RunConfig) -> Result<()> {
    let t = read_trajectory(traj)?;
    let field = cfg.rasterizer()?.udf(&t);
    write_atomic(out_path, field.to_ascii().as_bytes())
}

fn gradient_lines(grad: &[f64], width: usize) -> String {
    grad.chunks(width)
        .map(|c| {
            c.iter()
                .map(|v| format_scalar(*v))
                .collect::<Vec<_>>()
                .join(" ")
                + "\n"
        })
        .collect()
}

pub fn loss(
    traj: &Path,
    target: &Path,
    cfg: &RunConfig,
    grad_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<f64> {
    let t = read_trajectory(traj)?;
    let img = GlyphImage::read_pgm(target)?;
    let lg = cfg.rasterizer()?.loss_diff(&t, &img)?;
    writeln!(out, "{}", format_scalar(lg.loss)).map_err(io_err)?;
    if let Some(path) = grad_out {
        write_atomic(path, gradient_lines(&lg.grad, 2).as_bytes())?;
    }
    Ok(lg.loss)
}

/// Fit the trajectory to the target; writes the fitted trajectory and a
/// `step,loss` trace.
pub fn snap(
    traj: &Path,
    target: &Path,
    cfg: &RunConfig,
    out_traj: &Path,
    trace_csv: &Path,
) -> Result<Vec<f64>> {
    let t = read_trajectory(traj)?;
    let img = GlyphImage::read_pgm(target)?;
    let (fitted, trace) = cfg.rasterizer()?.snap_fit(&t, &img, cfg.steps, cfg.lr)?;
    write_atomic(out_traj, serialize_trajectory(&fitted).as_bytes())?;
    let mut csv = String::from("step,loss\n");
    for (i, l) in trace.iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", format_scalar(*l)));
    }
    write_atomic(trace_csv, csv.as_bytes())?;
    Ok(trace)
}

/// Annotate every trajectory in `traj_dir` against the same-named file in
/// `mean_dir`, writing results under the same name in `out_dir`.
pub fn annotate(
    traj_dir: &Path,
    mean_dir: &Path,
    out_dir: &Path,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<bool> {
    let acfg = cfg.annotate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = list_files(traj_dir)?;
    let results: Vec<(PathBuf, Result<()>)> = files
        .par_iter()
        .map(|f| {
            let name = f.file_name().expect("listed files have names");
            let run = || -> Result<()> {
                let t = read_trajectory(f)?;
                let m = read_trajectory(&mean_dir.join(name))?;
                let labeled = pseudo_annotate(&t, &m, &acfg).map_err(|e| Error::in_file(f, e))?;
                write_atomic(
                    &out_dir.join(name),
                    serialize_trajectory(&labeled).as_bytes(),
                )
            };
            (f.clone(), run())
        })
        .collect();
    let mut ok = true;
    for (f, r) in results {
        match r {
            Ok(()) => writeln!(out, "OK {}", f.display()).map_err(io_err)?,
            Err(e) => {
                ok = false;
                writeln!(out, "ERROR {e}").map_err(io_err)?;
            }
        }
    }
    Ok(ok)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub id: String,
    pub mae: f64,
    pub dtw: f64,
    pub dtw_normalized: f64,
}

/// Manifest lines: `id gt.pgm fake.pgm gt.traj fake.traj`, paths relative
/// to the manifest's directory. Emits `id,mae,dtw,dtw_normalized`.
pub fn metrics(manifest: &Path, out: &mut dyn Write) -> Result<Vec<MetricsRow>> {
    let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut jobs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(Error::in_file(
                manifest,
                Error::MalformedLine {
                    line: i + 1,
                    reason: "expected: id gt.pgm fake.pgm gt.traj fake.traj".into(),
                },
            ));
        }
        jobs.push((
            f[0].to_string(),
            [f[1], f[2], f[3], f[4]].map(|p| base.join(p)),
        ));
    }
    let rows: Vec<MetricsRow> = jobs
        .par_iter()
        .map(
            |(id, [gt_img, fake_img, gt_traj, fake_traj])| -> Result<MetricsRow> {
                let m = mae(
                    &GlyphImage::read_pgm(gt_img)?,
                    &GlyphImage::read_pgm(fake_img)?,
                )?;
                let d = dtw(&read_trajectory(gt_traj)?, &read_trajectory(fake_traj)?)?;
                Ok(MetricsRow {
                    id: id.clone(),
                    mae: m,
                    dtw: d.cost,
                    dtw_normalized: d.normalized(),
                })
            },
        )
        .collect::<Result<_>>()?;
    writeln!(out, "id,mae,dtw,dtw_normalized").map_err(io_err)?;
    for r in &rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.id,
            format_scalar(r.mae),
            format_scalar(r.dtw),
            format_scalar(r.dtw_normalized)
        )
        .map_err(io_err)?;
    }
    Ok(rows)
}

/// Mean negative log-likelihood of a trajectory under per-step raw GMM outputs.
pub fn gmm_eval(
    gmm: &Path,
    traj: &Path,
    grad_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<f64> {
    let text = fs::read_to_string(gmm).map_err(|e| Error::io(gmm, e))?;
    let raw = parse_gmm(&text).map_err(|e| Error::in_file(gmm, e))?;
    let t = read_trajectory(traj)?;
    let loss = loss_point_raw(&raw, &t)?;
    writeln!(out, "{}", format_scalar(loss)).map_err(io_err)?;
    if let Some(path) = grad_out {
        let grad = loss_point_grad(&raw, &t)?;
        let body: String = grad.iter().map(|g| gradient_lines(g, g.len())).collect();
        write_atomic(path, body.as_bytes())?;
    }
    Ok(loss)
}

pub fn gradcheck(suites: &[Suite], opts: &GradCheckOptions, out: &mut dyn Write) -> Result<bool> {
    let mut ok = true;
    for &s in suites {
        let report = run_suite(s, opts)?;
        ok &= report.passed();
        writeln!(out, "{report}").map_err(io_err)?;
    }
    Ok(ok)
}
