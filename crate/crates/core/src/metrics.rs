//! Evaluation metrics: image mean absolute error and trajectory DTW.

use crate::error::{Error, Result};
use crate::format6::Trajectory;
use crate::image::GlyphImage;

pub fn mae(a: &GlyphImage, b: &GlyphImage) -> Result<f64> {
    crate::losses::loss_pixel(a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    pub cost: f64,
    /// Zero-based index pairs from `(0, 0)` to `(n - 1, m - 1)`.
    pub path: Vec<(usize, usize)>,
}

impl DtwResult {
    /// Cost divided by the number of aligned pairs.
    pub fn normalized(&self) -> f64 {
        self.cost / self.path.len() as f64
    }
}

/// Classic dynamic time warping with Euclidean point cost. Control labels
/// are ignored and pen-up points take part in the alignment.
pub fn dtw(a: &Trajectory, b: &Trajectory) -> Result<DtwResult> {
    let pa: Vec<[f64; 2]> = a.points().iter().map(|p| p.xy()).collect();
    let pb: Vec<[f64; 2]> = b.points().iter().map(|p| p.xy()).collect();
    dtw_points(&pa, &pb)
}

pub fn dtw_points(a: &[[f64; 2]], b: &[[f64; 2]]) -> Result<DtwResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySequence);
    }
    let (n, m) = (a.len(), b.len());
    let dist = |i: usize, j: usize| (a[i][0] - b[j][0]).hypot(a[i][1] - b[j][1]);

    // acc[i][j]: cheapest alignment of a[..=i] with b[..=j]
    let mut acc = vec![vec![f64::INFINITY; m]; n];
    for i in 0..n {
        for j in 0..m {
            let best_prev = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 && j > 0 {
                    best = best.min(acc[i - 1][j - 1]);
                }
                if i > 0 {
                    best = best.min(acc[i - 1][j]);
                }
                if j > 0 {
                    best = best.min(acc[i][j - 1]);
                }
                best
            };
            acc[i][j] = best_prev + dist(i, j);
        }
    }

    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while (i, j) != (0, 0) {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[i - 1][j - 1];
            let up = acc[i - 1][j];
            let left = acc[i][j - 1];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        path.push((i, j));
    }
    path.reverse();
    Ok(DtwResult {
        cost: acc[n - 1][m - 1],
        path,
    })
}
