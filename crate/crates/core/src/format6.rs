//! Six-field key-point trajectories: `(x, y, p1, p2, p3, p4)`.
//!
//! Each point carries a coordinate in `[-1, 1]²` and a one-hot control label:
//!
//! | label | meaning |
//! |-------|---------|
//! | `p1`  | a visible line runs from this point to the next |
//! | `p2`  | end of a stroke, no link to the next stroke |
//! | `p3`  | end of a stroke that is visually connected to the next one |
//! | `p4`  | end of writing |
//!
//! The text form is a header line `#glyphforge-traj v1` followed by one
//! `x y p1 p2 p3 p4` line per point.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const TRAJ_HEADER: &str = "#glyphforge-traj v1";

/// Slack absorbed by clamping when a parsed coordinate sits just outside `[-1, 1]`.
const CLAMP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Control {
    Draw,
    EndStroke,
    EndStrokeConnected,
    EndWriting,
}

impl Control {
    pub fn one_hot(self) -> [u8; 4] {
        match self {
            Control::Draw => [1, 0, 0, 0],
            Control::EndStroke => [0, 1, 0, 0],
            Control::EndStrokeConnected => [0, 0, 1, 0],
            Control::EndWriting => [0, 0, 0, 1],
        }
    }

    pub fn index(self) -> usize {
        match self {
            Control::Draw => 0,
            Control::EndStroke => 1,
            Control::EndStrokeConnected => 2,
            Control::EndWriting => 3,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(Control::Draw),
            1 => Some(Control::EndStroke),
            2 => Some(Control::EndStrokeConnected),
            3 => Some(Control::EndWriting),
            _ => None,
        }
    }

    /// Decode a one-hot label. Returns `None` unless exactly one entry is set.
    pub fn from_one_hot(bits: [u8; 4]) -> Option<Self> {
        let mut found = None;
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 if found.is_none() => found = Some(i),
                _ => return None,
            }
        }
        found.and_then(Self::from_index)
    }

    pub fn is_stroke_end(self) -> bool {
        matches!(self, Control::EndStroke | Control::EndStrokeConnected)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point6 {
    pub x: f64,
    pub y: f64,
    pub control: Control,
}

impl Point6 {
    pub fn new(x: f64, y: f64, control: Control) -> Self {
        Self { x, y, control }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// A validated writing trajectory.
///
/// Non-empty, coordinates in `[-1, 1]`, and the final point (and only the
/// final point) is [`Control::EndWriting`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<Point6>,
}

impl Trajectory {
    pub fn new(points: Vec<Point6>) -> Result<Self> {
        let Some(last) = points.last() else {
            return Err(Error::BadTermination("trajectory has no points".into()));
        };
        if last.control != Control::EndWriting {
            return Err(Error::BadTermination(
                "last point is not end-of-writing".into(),
            ));
        }
        if let Some(i) = points[..points.len() - 1]
            .iter()
            .position(|p| p.control == Control::EndWriting)
        {
            return Err(Error::BadTermination(format!(
                "end-of-writing at point {} before the last point",
                i + 1
            )));
        }
        for (i, p) in points.iter().enumerate() {
            for v in [p.x, p.y] {
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange {
                        line: i + 1,
                        value: v,
                    });
                }
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point6] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat `[x0, y0, x1, y1, ...]` coordinate vector.
    pub fn coords(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    /// Replace coordinates from a flat `[x0, y0, ...]` vector, clamping to `[-1, 1]`.
    /// Control labels are kept.
    pub fn with_coords(&self, coords: &[f64]) -> Result<Self> {
        if coords.len() != 2 * self.points.len() {
            return Err(Error::LengthMismatch {
                expected: 2 * self.points.len(),
                actual: coords.len(),
            });
        }
        let points = self
            .points
            .iter()
            .zip(coords.chunks_exact(2))
            .map(|(p, c)| Point6::new(c[0].clamp(-1.0, 1.0), c[1].clamp(-1.0, 1.0), p.control))
            .collect();
        Ok(Self { points })
    }

    /// Indices of points that end a stroke (`p2` or `p3`).
    pub fn stroke_ends(&self) -> Vec<usize> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.control.is_stroke_end())
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub visible: bool,
}

fn parse_coord(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::MalformedLine {
        line,
        reason: format!("non-numeric coordinate {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::MalformedLine {
            line,
            reason: format!("non-finite coordinate {field:?}"),
        });
    }
    if v.abs() <= 1.0 {
        Ok(v)
    } else if v.abs() <= 1.0 + CLAMP_SLACK {
        Ok(v.clamp(-1.0, 1.0))
    } else {
        Err(Error::OutOfRange { line, value: v })
    }
}

fn parse_flag(field: &str, line: usize) -> Result<u8> {
    let v: f64 = field.parse().map_err(|_| Error::MalformedLine {
        line,
        reason: format!("non-numeric control field {field:?}"),
    })?;
    if v == 0.0 {
        Ok(0)
    } else if v == 1.0 {
        Ok(1)
    } else {
        Err(Error::InvalidControl { line })
    }
}

/// Parse the text trajectory format. Line numbers in errors are 1-based.
pub fn parse_trajectory(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim_end() == TRAJ_HEADER => {}
        _ => {
            return Err(Error::MalformedLine {
                line: 1,
                reason: format!("expected header {TRAJ_HEADER:?}"),
            })
        }
    }

    let mut points = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::MalformedLine {
                line,
                reason: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let x = parse_coord(fields[0], line)?;
        let y = parse_coord(fields[1], line)?;
        let mut bits = [0u8; 4];
        for (b, f) in bits.iter_mut().zip(&fields[2..]) {
            *b = parse_flag(f, line)?;
        }
        let control = Control::from_one_hot(bits).ok_or(Error::InvalidControl { line })?;
        points.push(Point6::new(x, y, control));
    }
    Trajectory::new(points)
}

/// Canonical text form. Coordinates use the shortest decimal that round-trips.
pub fn serialize_trajectory(t: &Trajectory) -> String {
    let mut out = String::with_capacity(24 * (t.len() + 1));
    out.push_str(TRAJ_HEADER);
    out.push('\n');
    for p in t.points() {
        let [a, b, c, d] = p.control.one_hot();
        let _ = writeln!(out, "{} {} {a} {b} {c} {d}", p.x, p.y);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format5Control {
    Draw,
    EndStroke,
    EndWriting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point5 {
    pub x: f64,
    pub y: f64,
    pub control: Format5Control,
}

/// Upgrade a format-5 sequence, marking each stroke end as connected or not.
///
/// `connected` holds one flag per end-stroke point, in order.
pub fn from_format5(points: &[Point5], connected: &[bool]) -> Result<Trajectory> {
    let ends = points
        .iter()
        .filter(|p| p.control == Format5Control::EndStroke)
        .count();
    if ends != connected.len() {
        return Err(Error::LengthMismatch {
            expected: ends,
            actual: connected.len(),
        });
    }
    let mut flags = connected.iter();
    let upgraded = points
        .iter()
        .map(|p| {
            let control = match p.control {
                Format5Control::Draw => Control::Draw,
                Format5Control::EndWriting => Control::EndWriting,
                Format5Control::EndStroke => match flags.next() {
                    Some(true) => Control::EndStrokeConnected,
                    _ => Control::EndStroke,
                },
            };
            Point6::new(p.x, p.y, control)
        })
        .collect();
    Trajectory::new(upgraded)
}

/// One segment per consecutive point pair. A segment is visible when its
/// start point draws (`p1`), or, with `include_connections`, when it is a
/// connected stroke end (`p3`).
pub fn visible_segments(t: &Trajectory, include_connections: bool) -> Vec<Segment> {
    t.points()
        .windows(2)
        .map(|w| {
            let visible = match w[0].control {
                Control::Draw => true,
                Control::EndStrokeConnected => include_connections,
                _ => false,
            };
            Segment {
                start: w[0].xy(),
                end: w[1].xy(),
                visible,
            }
        })
        .collect()
}
