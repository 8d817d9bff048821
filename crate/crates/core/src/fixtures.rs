//! Small constructed inputs shared by the examples, the regression tests and
//! the command-line golden files.

use crate::format6::{Control, Point6, Trajectory};
use crate::image::GlyphImage;
use crate::rasterizer::{Grid, Rasterizer, RenderParams};

/// A straight full-width stroke sitting 4 pixels above a 16-row ink bar.
#[derive(Debug, Clone)]
pub struct BarOffset {
    pub rasterizer: Rasterizer,
    pub start: Trajectory,
    pub target: GlyphImage,
    pub steps: usize,
    pub step_size: f64,
}

pub const BAR_SIZE: usize = 32;
pub const BAR_ROWS: std::ops::Range<usize> = 12..28;
/// Pixel row of the starting stroke: the bar's top edge (row 11.5) minus 4.
pub const BAR_STROKE_ROW: f64 = 7.5;

/// Snap-fit fixture. A soft `theta` keeps the sigmoid's slope non-zero a few
/// pixels away from the stroke; at `theta = 100` the rendered band has no
/// gradient outside a 0.1 pixel shell.
pub fn bar_offset() -> BarOffset {
    let grid = Grid::new(BAR_SIZE, BAR_SIZE).expect("non-empty grid");
    let params = RenderParams::new(0.5, 2.0).expect("valid params");
    let target = GlyphImage::from_fn(BAR_SIZE, BAR_SIZE, |i, _| {
        if BAR_ROWS.contains(&i) {
            1.0
        } else {
            0.0
        }
    })
    .expect("binary image");
    let y = grid.from_pixel([0.0, BAR_STROKE_ROW])[1];
    let start = Trajectory::new(vec![
        Point6::new(-1.0, y, Control::Draw),
        Point6::new(1.0, y, Control::EndWriting),
    ])
    .expect("valid trajectory");
    BarOffset {
        rasterizer: Rasterizer::new(grid, params),
        start,
        target,
        steps: 200,
        step_size: 3e-3,
    }
}

/// Horizontal stroke through the middle of the canvas.
pub fn midline() -> Trajectory {
    Trajectory::new(vec![
        Point6::new(-0.5, 0.0, Control::Draw),
        Point6::new(0.5, 0.0, Control::EndWriting),
    ])
    .expect("valid trajectory")
}

/// Two strokes (an L and a short tick) joined by a connected stroke end.
pub fn two_strokes() -> Trajectory {
    Trajectory::new(vec![
        Point6::new(-0.6, -0.6, Control::Draw),
        Point6::new(-0.6, 0.5, Control::Draw),
        Point6::new(0.2, 0.5, Control::EndStrokeConnected),
        Point6::new(0.25, -0.2, Control::Draw),
        Point6::new(0.6, -0.5, Control::EndWriting),
    ])
    .expect("valid trajectory")
}
