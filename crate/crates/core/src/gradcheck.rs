//! Finite-difference checks of the analytic gradients.
//!
//! Each suite draws seeded random instances, differentiates the forward loss
//! numerically with central differences, and compares against the analytic
//! gradient. The error of an instance is
//! `max_k |a_k - n_k| / max(|a|_inf, |n|_inf, floor)`.
//!
//! The rasterizer loss is only piecewise smooth: a probe that changes any
//! pixel's nearest segment, distance branch, or loss activity is dropped
//! from the comparison.

use std::fmt;

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::format6::{Control, Point6, Trajectory};
use crate::gmm::{activate, loss_point_grad, loss_point_raw, sample_with, RawGmmOutput};
use crate::image::GlyphImage;
use crate::rasterizer::{Grid, Rasterizer, RenderParams};
use crate::reprlearn::loss_nce_vectors;
use crate::rng::{stream, stream_id};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Rasterizer,
    Gmm,
    Nce,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Rasterizer, Suite::Gmm, Suite::Nce];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Rasterizer => "rasterizer",
            Suite::Gmm => "gmm",
            Suite::Nce => "nce",
        }
    }

    /// Probe step, relative-error tolerance and denominator floor.
    pub fn settings(self) -> (f64, f64, f64) {
        match self {
            Suite::Rasterizer => (1e-5, 1e-4, 1e-4),
            Suite::Gmm => (1e-6, 1e-5, 1e-6),
            Suite::Nce => (1e-6, 1e-5, 1e-6),
        }
    }

    fn tag(self) -> u32 {
        match self {
            Suite::Rasterizer => 1,
            Suite::Gmm => 2,
            Suite::Nce => 3,
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown gradient suite {s:?}")))
    }
}

/// Central differences of `f` at `x`.
pub fn central_difference<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let up = f(&probe)?;
        probe[k] = x[k] - h;
        let down = f(&probe)?;
        probe[k] = x[k];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Max-norm relative error between two gradients, restricted to `mask`.
pub fn relative_error(analytic: &[f64], numeric: &[f64], mask: &[bool], floor: f64) -> f64 {
    let mut diff: f64 = 0.0;
    let mut scale = floor;
    for ((a, n), keep) in analytic.iter().zip(numeric).zip(mask) {
        if *keep {
            diff = diff.max((a - n).abs());
            scale = scale.max(a.abs()).max(n.abs());
        }
    }
    diff / scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceReport {
    pub index: u32,
    pub error: f64,
    pub checked: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub tolerance: f64,
    pub instances: Vec<InstanceReport>,
}

impl SuiteReport {
    pub fn max_error(&self) -> f64 {
        self.instances.iter().map(|r| r.error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        !self.instances.is_empty() && self.instances.iter().all(|r| r.error < self.tolerance)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let skipped: usize = self.instances.iter().map(|r| r.skipped).sum();
        write!(
            f,
            "{} {}: {} instances, max relative error {:.3e} (tolerance {:.0e}), {} non-smooth probes skipped",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite.name(),
            self.instances.len(),
            self.max_error(),
            self.tolerance,
            skipped
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub seed: u64,
    pub instances: usize,
    /// Perturb the analytic gradient before comparing; a negative control.
    pub corrupt: bool,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 50,
            corrupt: false,
        }
    }
}

fn corrupt(grad: &mut [f64]) {
    for g in grad {
        *g = 1.1 * *g + 1e-2;
    }
}

pub fn run_suite(suite: Suite, opts: &GradCheckOptions) -> Result<SuiteReport> {
    let (h, tolerance, floor) = suite.settings();
    let mut instances = Vec::with_capacity(opts.instances);
    let max_attempts = 4 * opts.instances.max(1);
    let mut index = 0u32;
    while instances.len() < opts.instances && (index as usize) < max_attempts {
        let mut rng = stream(opts.seed, stream_id(suite.tag(), index));
        let report = match suite {
            Suite::Rasterizer => raster_instance(&mut rng, h, floor, opts.corrupt)?,
            Suite::Gmm => gmm_instance(&mut rng, h, floor, opts.corrupt)?,
            Suite::Nce => nce_instance(&mut rng, h, floor, opts.corrupt)?,
        };
        if let Some(mut r) = report {
            r.index = index;
            instances.push(r);
        }
        index += 1;
    }
    Ok(SuiteReport {
        suite,
        tolerance,
        instances,
    })
}

pub fn random_trajectory(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> Trajectory {
    let points = (0..n)
        .map(|i| {
            let control = if i + 1 == n {
                Control::EndWriting
            } else {
                match rng.random_range(0..10) {
                    0 => Control::EndStroke,
                    1 => Control::EndStrokeConnected,
                    _ => Control::Draw,
                }
            };
            Point6::new(
                rng.random_range(-extent..extent),
                rng.random_range(-extent..extent),
                control,
            )
        })
        .collect();
    Trajectory::new(points).expect("generated trajectory is valid")
}

fn raster_instance(
    rng: &mut ChaCha8Rng,
    h: f64,
    floor: f64,
    bad: bool,
) -> Result<Option<InstanceReport>> {
    let grid = Grid::new(16, 16)?;
    let theta = 10f64.powf(rng.random_range(0.0..2.0));
    let w = rng.random_range(0.5..3.0);
    let raster =
        Rasterizer::new(grid, RenderParams::new(theta, w)?).with_connections(rng.random_bool(0.5));
    let t = random_trajectory(rng, 8, 0.9);
    let target = GlyphImage::new(
        16,
        16,
        (0..256).map(|_| rng.random_range(0.0..1.0)).collect(),
    )?;

    let mut analytic = raster.loss_diff(&t, &target)?.grad;
    if bad {
        corrupt(&mut analytic);
    }
    let base_state = raster.pixel_states(&t, &target)?;
    let x = t.coords();
    let mut numeric = Vec::with_capacity(x.len());
    let mut mask = Vec::with_capacity(x.len());
    let mut probe = x.clone();
    for k in 0..x.len() {
        let mut values = [0.0; 2];
        let mut smooth = true;
        for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
            probe[k] = x[k] + sign * h;
            // probing past the coordinate box would clamp, which is a kink too
            let inside = probe[k].abs() <= 1.0;
            let moved = Trajectory::new(
                t.points()
                    .iter()
                    .zip(probe.chunks_exact(2))
                    .map(|(p, c)| {
                        Point6::new(c[0].clamp(-1.0, 1.0), c[1].clamp(-1.0, 1.0), p.control)
                    })
                    .collect(),
            )?;
            values[slot] = raster.loss(&moved, &target)?;
            smooth &= inside && raster.pixel_states(&moved, &target)? == base_state;
        }
        probe[k] = x[k];
        numeric.push((values[0] - values[1]) / (2.0 * h));
        mask.push(smooth);
    }
    let checked = mask.iter().filter(|m| **m).count();
    if checked == 0 {
        return Ok(None);
    }
    Ok(Some(InstanceReport {
        index: 0,
        error: relative_error(&analytic, &numeric, &mask, floor),
        checked,
        skipped: mask.len() - checked,
    }))
}

fn gmm_instance(
    rng: &mut ChaCha8Rng,
    h: f64,
    floor: f64,
    bad: bool,
) -> Result<Option<InstanceReport>> {
    let steps = rng.random_range(1..=5);
    let m = if rng.random_bool(0.2) {
        20
    } else {
        rng.random_range(1..=6)
    };
    let mean = Normal::new(0.0, 0.4).expect("valid normal");
    let corr = Normal::new(0.0, 0.7).expect("valid normal");
    let mut raws = Vec::with_capacity(steps);
    let mut points = Vec::with_capacity(steps);
    for s in 0..steps {
        let mut v = Vec::with_capacity(6 * m);
        v.extend((0..m).map(|_| rng.sample::<f64, _>(StandardNormal)));
        v.extend((0..2 * m).map(|_| mean.sample(rng)));
        v.extend((0..2 * m).map(|_| rng.random_range(-2.0..0.0)));
        v.extend((0..m).map(|_| corr.sample(rng)));
        let raw = RawGmmOutput::new(v)?;
        let (x, y) = sample_with(&activate(&raw)?, rng);
        let control = if s + 1 == steps {
            Control::EndWriting
        } else {
            Control::Draw
        };
        points.push(Point6::new(x.clamp(-1.0, 1.0), y.clamp(-1.0, 1.0), control));
        raws.push(raw);
    }
    let targets = Trajectory::new(points)?;

    let mut analytic: Vec<f64> = loss_point_grad(&raws, &targets)?.concat();
    if bad {
        corrupt(&mut analytic);
    }
    let x: Vec<f64> = raws.iter().flat_map(|r| r.values().to_vec()).collect();
    let numeric = central_difference(
        |flat| {
            let seq = flat
                .chunks_exact(6 * m)
                .map(|c| RawGmmOutput::new(c.to_vec()))
                .collect::<Result<Vec<_>>>()?;
            loss_point_raw(&seq, &targets)
        },
        &x,
        h,
    )?;
    let mask = vec![true; x.len()];
    Ok(Some(InstanceReport {
        index: 0,
        error: relative_error(&analytic, &numeric, &mask, floor),
        checked: x.len(),
        skipped: 0,
    }))
}

fn unit_tangent(g: &[f64], u: &[f64]) -> Vec<f64> {
    let along: f64 = g.iter().zip(u).map(|(a, b)| a * b).sum();
    g.iter().zip(u).map(|(a, b)| a - along * b).collect()
}

fn nce_instance(
    rng: &mut ChaCha8Rng,
    h: f64,
    floor: f64,
    bad: bool,
) -> Result<Option<InstanceReport>> {
    let b = rng.random_range(2..=6);
    let dim = rng.random_range(2..=8);
    let tau = rng.random_range(0.5..10.0);
    let mut draw = || {
        let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        v / n
    };
    let img: Vec<DVector<f64>> = (0..b).map(|_| draw()).collect();
    let seq: Vec<DVector<f64>> = (0..b).map(|_| draw()).collect();

    let out = loss_nce_vectors(&img, &seq, tau)?;
    let x: Vec<f64> = img
        .iter()
        .chain(&seq)
        .flat_map(|v| v.iter().copied())
        .collect();
    let mut analytic: Vec<f64> = out
        .grad_img
        .iter()
        .chain(&out.grad_seq)
        .flat_map(|v| v.iter().copied())
        .collect();
    if bad {
        corrupt(&mut analytic);
    }
    let numeric = central_difference(
        |flat| {
            let vecs: Vec<DVector<f64>> = flat
                .chunks_exact(dim)
                .map(DVector::from_column_slice)
                .collect();
            Ok(loss_nce_vectors(&vecs[..b], &vecs[b..], tau)?.loss)
        },
        &x,
        h,
    )?;
    let project = |g: &[f64]| -> Vec<f64> {
        g.chunks_exact(dim)
            .zip(x.chunks_exact(dim))
            .flat_map(|(gc, u)| unit_tangent(gc, u))
            .collect()
    };
    let mask = vec![true; x.len()];
    Ok(Some(InstanceReport {
        index: 0,
        error: relative_error(&project(&analytic), &project(&numeric), &mask, floor),
        checked: x.len(),
        skipped: 0,
    }))
}
