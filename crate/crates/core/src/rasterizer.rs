//! Unsigned distance fields of trajectories and their sigmoid rendering.
//!
//! Distances are measured in pixel units on the integer grid
//! `{(i, j) : 0 <= i < H, 0 <= j < W}`. A trajectory coordinate `(x, y)` in
//! `[-1, 1]²` sits at column `(x + 1) W / 2 - 1/2` and row `(y + 1) H / 2 - 1/2`,
//! so pixel `(i, j)` is centred at `x = -1 + (2j + 1) / W`, `y = -1 + (2i + 1) / H`.
//! Rows grow with `y`.
//!
//! The rendered ink of a pixel is `1 - sigmoid(theta (d - w))`, with `w` the
//! line half-width in pixels. The loose loss `sum(max(ink - target, 0)^2)`
//! only penalizes ink that falls outside the target glyph.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format6::{visible_segments, Segment, Trajectory};
use crate::image::GlyphImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    height: usize,
    width: usize,
}

impl Grid {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter(
                "grid dimensions must be positive".into(),
            ));
        }
        Ok(Self { height, width })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Centre of pixel `(row, col)` in trajectory coordinates.
    pub fn pixel_center(&self, row: usize, col: usize) -> [f64; 2] {
        [
            -1.0 + (2 * col + 1) as f64 / self.width as f64,
            -1.0 + (2 * row + 1) as f64 / self.height as f64,
        ]
    }

    /// Trajectory coordinates to continuous `[col, row]` pixel coordinates.
    pub fn to_pixel(&self, p: [f64; 2]) -> [f64; 2] {
        [
            (p[0] + 1.0) * self.width as f64 / 2.0 - 0.5,
            (p[1] + 1.0) * self.height as f64 / 2.0 - 0.5,
        ]
    }

    /// Inverse of [`Grid::to_pixel`].
    pub fn from_pixel(&self, q: [f64; 2]) -> [f64; 2] {
        [
            (q[0] + 0.5) * 2.0 / self.width as f64 - 1.0,
            (q[1] + 0.5) * 2.0 / self.height as f64 - 1.0,
        ]
    }

    /// `d(col)/dx` and `d(row)/dy`.
    fn pixel_scale(&self) -> [f64; 2] {
        [self.width as f64 / 2.0, self.height as f64 / 2.0]
    }

    fn check_image(&self, img: &GlyphImage) -> Result<()> {
        if img.dims() != (self.height, self.width) {
            return Err(Error::DimensionMismatch {
                expected: (self.height, self.width),
                actual: img.dims(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderParams {
    pub theta: f64,
    /// Line half-width in pixels.
    pub w: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self {
            theta: 100.0,
            w: 2.0,
        }
    }
}

impl RenderParams {
    pub fn new(theta: f64, w: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "theta must be positive, got {theta}"
            )));
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "w must be non-negative, got {w}"
            )));
        }
        Ok(Self { theta, w })
    }
}

/// Per-pixel distances in pixel units; `+inf` where no visible segment exists.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Element-wise minimum of two fields of equal size.
    pub fn min(&self, other: &Self) -> Result<Self> {
        if (self.height, self.width) != (other.height, other.width) {
            return Err(Error::DimensionMismatch {
                expected: (self.height, self.width),
                actual: (other.height, other.width),
            });
        }
        Ok(Self {
            height: self.height,
            width: self.width,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.min(*b))
                .collect(),
        })
    }

    /// One row per line, space-separated, `inf` for unreachable pixels.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Which branch of the three-case distance was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceCase {
    Start,
    End,
    /// Perpendicular foot inside the segment; the flag is the side of the line.
    Interior(bool),
    Invisible,
}

#[derive(Debug, Clone, Copy)]
struct DistanceGrad {
    dist: f64,
    case: DistanceCase,
    d_start: [f64; 2],
    d_end: [f64; 2],
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

/// Gradient of `|p - x|` with respect to `p`.
fn radial(p: [f64; 2], x: [f64; 2], dist: f64) -> [f64; 2] {
    if dist > 0.0 {
        [(p[0] - x[0]) / dist, (p[1] - x[1]) / dist]
    } else {
        [0.0, 0.0]
    }
}

fn distance_with_grad(x: [f64; 2], start: [f64; 2], end: [f64; 2], visible: bool) -> DistanceGrad {
    if !visible {
        return DistanceGrad {
            dist: f64::INFINITY,
            case: DistanceCase::Invisible,
            d_start: [0.0; 2],
            d_end: [0.0; 2],
        };
    }
    let e = sub(end, start);
    let len = norm(e);
    if len == 0.0 || dot(e, sub(x, start)) < 0.0 {
        let dist = norm(sub(x, start));
        return DistanceGrad {
            dist,
            case: DistanceCase::Start,
            d_start: radial(start, x, dist),
            d_end: [0.0; 2],
        };
    }
    if dot(sub(start, end), sub(x, end)) < 0.0 {
        let dist = norm(sub(x, end));
        return DistanceGrad {
            dist,
            case: DistanceCase::End,
            d_start: [0.0; 2],
            d_end: radial(end, x, dist),
        };
    }
    let a = sub(start, x);
    let b = sub(end, x);
    let cross = a[0] * b[1] - a[1] * b[0];
    let sign = if cross >= 0.0 { 1.0 } else { -1.0 };
    let dist = cross.abs() / len;
    let k = dist / (len * len);
    DistanceGrad {
        dist,
        case: DistanceCase::Interior(cross >= 0.0),
        d_start: [sign * b[1] / len + k * e[0], -sign * b[0] / len + k * e[1]],
        d_end: [-sign * a[1] / len - k * e[0], sign * a[0] / len - k * e[1]],
    }
}

/// Distance from `x` to a segment: `+inf` if invisible, the endpoint distance
/// when the projection falls outside, the perpendicular distance otherwise.
pub fn segment_distance(x: [f64; 2], s: &Segment) -> f64 {
    distance_with_grad(x, s.start, s.end, s.visible).dist
}

fn pixel_segments(t: &Trajectory, grid: &Grid, include_connections: bool) -> Vec<Segment> {
    visible_segments(t, include_connections)
        .into_iter()
        .map(|s| Segment {
            start: grid.to_pixel(s.start),
            end: grid.to_pixel(s.end),
            visible: s.visible,
        })
        .collect()
}

/// Nearest visible segment of pixel `(row, col)`. Ties go to the lowest index.
fn nearest(row: usize, col: usize, segs: &[Segment]) -> Option<(usize, DistanceGrad)> {
    let x = [col as f64, row as f64];
    let mut best: Option<(usize, DistanceGrad)> = None;
    for (k, s) in segs.iter().enumerate() {
        if !s.visible {
            continue;
        }
        let g = distance_with_grad(x, s.start, s.end, true);
        if best.as_ref().is_none_or(|(_, b)| g.dist < b.dist) {
            best = Some((k, g));
        }
    }
    best
}

pub fn udf(t: &Trajectory, grid: &Grid, include_connections: bool) -> DistanceField {
    let segs = pixel_segments(t, grid, include_connections);
    let w = grid.width;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| nearest(idx / w, idx % w, &segs).map_or(f64::INFINITY, |(_, g)| g.dist))
        .collect();
    DistanceField {
        height: grid.height,
        width: grid.width,
        values,
    }
}

/// Numerically stable logistic function.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Ink value `1 - sigmoid(theta (d - w))`; exactly 0 for `d = +inf`.
pub fn ink(dist: f64, p: &RenderParams) -> f64 {
    sigmoid(-p.theta * (dist - p.w))
}

/// `d ink / d dist`.
fn ink_slope(dist: f64, p: &RenderParams) -> f64 {
    if dist.is_infinite() {
        return 0.0;
    }
    let z = p.theta * (dist - p.w);
    -p.theta * sigmoid(z) * sigmoid(-z)
}

pub fn render(f: &DistanceField, p: &RenderParams) -> GlyphImage {
    let pixels = f.values.iter().map(|&d| ink(d, p)).collect();
    GlyphImage::from_raw(f.height, f.width, pixels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    /// `[dL/dx0, dL/dy0, dL/dx1, ...]`, one pair per trajectory point.
    pub grad: Vec<f64>,
}

/// Local state of one pixel, used to detect non-smooth probes in gradient checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelState {
    pub nearest: Option<usize>,
    pub case: Option<DistanceCase>,
    pub active: bool,
}

/// Configured rasterization pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rasterizer {
    pub grid: Grid,
    pub params: RenderParams,
    pub include_connections: bool,
}

struct PixelTerm {
    loss: f64,
    grad: Option<(usize, [f64; 2], [f64; 2])>,
}

impl Rasterizer {
    pub fn new(grid: Grid, params: RenderParams) -> Self {
        Self {
            grid,
            params,
            include_connections: false,
        }
    }

    pub fn with_connections(mut self, include: bool) -> Self {
        self.include_connections = include;
        self
    }

    pub fn udf(&self, t: &Trajectory) -> DistanceField {
        udf(t, &self.grid, self.include_connections)
    }

    pub fn render(&self, t: &Trajectory) -> GlyphImage {
        render(&self.udf(t), &self.params)
    }

    pub fn loss(&self, t: &Trajectory, target: &GlyphImage) -> Result<f64> {
        self.grid.check_image(target)?;
        let field = self.udf(t);
        Ok(field
            .values
            .iter()
            .zip(target.pixels())
            .map(|(&d, &gt)| {
                let r = ink(d, &self.params) - gt;
                if r > 0.0 {
                    r * r
                } else {
                    0.0
                }
            })
            .sum())
    }

    /// Loose rasterization loss and its gradient with respect to every point
    /// coordinate. Only the nearest segment of each pixel receives gradient.
    pub fn loss_diff(&self, t: &Trajectory, target: &GlyphImage) -> Result<LossGrad> {
        self.grid.check_image(target)?;
        let segs = pixel_segments(t, &self.grid, self.include_connections);
        let w = self.grid.width;
        let gt = target.pixels();
        let terms: Vec<PixelTerm> = (0..self.grid.len())
            .into_par_iter()
            .map(|idx| {
                let Some((k, g)) = nearest(idx / w, idx % w, &segs) else {
                    return PixelTerm {
                        loss: 0.0,
                        grad: None,
                    };
                };
                let r = ink(g.dist, &self.params) - gt[idx];
                if r <= 0.0 {
                    return PixelTerm {
                        loss: 0.0,
                        grad: None,
                    };
                }
                let scale = 2.0 * r * ink_slope(g.dist, &self.params);
                PixelTerm {
                    loss: r * r,
                    grad: Some((
                        k,
                        [scale * g.d_start[0], scale * g.d_start[1]],
                        [scale * g.d_end[0], scale * g.d_end[1]],
                    )),
                }
            })
            .collect();

        let [sx, sy] = self.grid.pixel_scale();
        let mut loss = 0.0;
        let mut grad = vec![0.0; 2 * t.len()];
        for term in &terms {
            loss += term.loss;
            if let Some((k, ds, de)) = term.grad {
                grad[2 * k] += ds[0] * sx;
                grad[2 * k + 1] += ds[1] * sy;
                grad[2 * k + 2] += de[0] * sx;
                grad[2 * k + 3] += de[1] * sy;
            }
        }
        Ok(LossGrad { loss, grad })
    }

    pub fn pixel_states(&self, t: &Trajectory, target: &GlyphImage) -> Result<Vec<PixelState>> {
        self.grid.check_image(target)?;
        let segs = pixel_segments(t, &self.grid, self.include_connections);
        let w = self.grid.width;
        Ok((0..self.grid.len())
            .map(|idx| match nearest(idx / w, idx % w, &segs) {
                Some((k, g)) => PixelState {
                    nearest: Some(k),
                    case: Some(g.case),
                    active: ink(g.dist, &self.params) > target.pixels()[idx],
                },
                None => PixelState {
                    nearest: None,
                    case: None,
                    active: false,
                },
            })
            .collect())
    }

    /// Gradient descent on point coordinates, control labels fixed.
    ///
    /// The returned trace has `steps + 1` entries: the loss before the first
    /// update and after each update.
    pub fn snap_fit(
        &self,
        start: &Trajectory,
        target: &GlyphImage,
        steps: usize,
        step_size: f64,
    ) -> Result<(Trajectory, Vec<f64>)> {
        if steps == 0 {
            return Err(Error::InvalidParameter("steps must be at least 1".into()));
        }
        if !(step_size >= 0.0 && step_size.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step size must be non-negative, got {step_size}"
            )));
        }
        let mut current = start.clone();
        let mut trace = Vec::with_capacity(steps + 1);
        for _ in 0..steps {
            let LossGrad { loss, grad } = self.loss_diff(&current, target)?;
            trace.push(loss);
            if step_size == 0.0 || grad.iter().all(|g| *g == 0.0) {
                continue;
            }
            let coords: Vec<f64> = current
                .coords()
                .iter()
                .zip(&grad)
                .map(|(c, g)| c - step_size * g)
                .collect();
            current = current.with_coords(&coords)?;
        }
        trace.push(self.loss(&current, target)?);
        Ok((current, trace))
    }
}
