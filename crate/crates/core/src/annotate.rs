//! Pseudo connected-stroke labels.
//!
//! Two consecutive strokes are marked connected when the gap between the end
//! of one and the start of the next is below the threshold in the glyph, but
//! above it in the per-character mean skeleton. Small gaps that every font
//! shares are structural, not a stylistic connection.

use crate::error::{Error, Result};
use crate::format6::{Control, Point6, Trajectory};

pub const DEFAULT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnotateConfig {
    pub threshold: f64,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl AnnotateConfig {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "threshold must be positive, got {threshold}"
            )));
        }
        Ok(Self { threshold })
    }
}

fn gap(a: &Point6, b: &Point6) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Relabel every stroke end of `t` as connected or not. `mean_ref` must have
/// the same length and stroke ends at the same indices.
pub fn pseudo_annotate(
    t: &Trajectory,
    mean_ref: &Trajectory,
    cfg: &AnnotateConfig,
) -> Result<Trajectory> {
    if t.len() != mean_ref.len() {
        return Err(Error::LengthMismatch {
            expected: t.len(),
            actual: mean_ref.len(),
        });
    }
    let pts = t.points();
    let refs = mean_ref.points();
    if let Some(index) =
        (0..pts.len()).find(|&i| pts[i].control.is_stroke_end() != refs[i].control.is_stroke_end())
    {
        return Err(Error::StrokeBoundaryMismatch { index });
    }

    let relabeled = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if !p.control.is_stroke_end() {
                return *p;
            }
            // a stroke end is never last, the final point ends the writing
            let close_here = gap(p, &pts[i + 1]) < cfg.threshold;
            let apart_in_mean = gap(&refs[i], &refs[i + 1]) > cfg.threshold;
            let control = if close_here && apart_in_mean {
                Control::EndStrokeConnected
            } else {
                Control::EndStroke
            };
            Point6 { control, ..*p }
        })
        .collect();
    Trajectory::new(relabeled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Control::*;

    fn traj(pts: &[(f64, f64, Control)]) -> Trajectory {
        Trajectory::new(pts.iter().map(|&(x, y, c)| Point6::new(x, y, c)).collect()).unwrap()
    }

    #[test]
    fn coincident_here_far_in_mean_connects() {
        let t = traj(&[
            (0.0, 0.0, Draw),
            (0.2, 0.0, EndStroke),
            (0.2, 0.0, Draw),
            (0.4, 0.0, EndWriting),
        ]);
        let m = traj(&[
            (0.0, 0.0, Draw),
            (0.2, 0.0, EndStroke),
            (0.2, 0.5, Draw),
            (0.4, 0.5, EndWriting),
        ]);
        let out = pseudo_annotate(&t, &m, &AnnotateConfig::default()).unwrap();
        assert_eq!(out.points()[1].control, EndStrokeConnected);
    }

    #[test]
    fn coincident_in_both_stays_plain() {
        let t = traj(&[
            (0.0, 0.0, Draw),
            (0.2, 0.0, EndStrokeConnected),
            (0.2, 0.0, Draw),
            (0.4, 0.0, EndWriting),
        ]);
        let out = pseudo_annotate(&t, &t, &AnnotateConfig::default()).unwrap();
        assert_eq!(out.points()[1].control, EndStroke);
    }

    #[test]
    fn three_strokes() {
        // gaps in t: 0.05 then 0.5; gaps in the mean: 0.5 and 0.5
        let t = traj(&[
            (-0.8, 0.0, Draw),
            (-0.5, 0.0, EndStroke),
            (-0.45, 0.0, Draw),
            (-0.2, 0.0, EndStroke),
            (0.3, 0.0, Draw),
            (0.6, 0.0, EndWriting),
        ]);
        let m = traj(&[
            (-0.8, 0.0, Draw),
            (-0.5, 0.0, EndStroke),
            (0.0, 0.0, Draw),
            (0.2, 0.0, EndStroke),
            (0.7, 0.0, Draw),
            (0.9, 0.0, EndWriting),
        ]);
        let out = pseudo_annotate(&t, &m, &AnnotateConfig::new(0.1).unwrap()).unwrap();
        let labels: Vec<Control> = out.points().iter().map(|p| p.control).collect();
        assert_eq!(
            labels,
            [Draw, EndStrokeConnected, Draw, EndStroke, Draw, EndWriting]
        );
        assert_eq!(out.coords(), t.coords());
    }

    #[test]
    fn mismatches() {
        let t = traj(&[
            (0.0, 0.0, Draw),
            (0.2, 0.0, EndStroke),
            (0.4, 0.0, EndWriting),
        ]);
        let short = traj(&[(0.0, 0.0, Draw), (0.4, 0.0, EndWriting)]);
        assert!(matches!(
            pseudo_annotate(&t, &short, &AnnotateConfig::default()),
            Err(Error::LengthMismatch { .. })
        ));
        let shifted = traj(&[
            (0.0, 0.0, EndStroke),
            (0.2, 0.0, Draw),
            (0.4, 0.0, EndWriting),
        ]);
        assert!(matches!(
            pseudo_annotate(&t, &shifted, &AnnotateConfig::default()),
            Err(Error::StrokeBoundaryMismatch { index: 0 })
        ));
        assert!(AnnotateConfig::new(0.0).is_err());
    }
}
