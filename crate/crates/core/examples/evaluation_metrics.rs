//! Image MAE and trajectory DTW between a reference glyph and a perturbed
//! copy.
//!
//!     cargo run --example evaluation_metrics

use glyphforge::fixtures;
use glyphforge::metrics::{dtw, mae};
use glyphforge::{Grid, Point6, Rasterizer, RenderParams, Trajectory};

fn main() -> glyphforge::Result<()> {
    let gt = fixtures::two_strokes();
    let r = Rasterizer::new(Grid::new(64, 64)?, RenderParams::default());

    for shift in [0.0, 0.02, 0.1] {
        let moved = Trajectory::new(
            gt.points()
                .iter()
                .map(|p| Point6::new((p.x + shift).min(1.0), p.y, p.control))
                .collect(),
        )?;
        let d = dtw(&gt, &moved)?;
        println!(
            "shift {shift:<4}: MAE {:.5}, DTW {:.4} (normalized {:.4}, {} aligned pairs)",
            mae(&r.render(&gt), &r.render(&moved))?,
            d.cost,
            d.normalized(),
            d.path.len()
        );
    }

    // dropping a point forces a many-to-one alignment
    let mut pts = gt.points().to_vec();
    pts.remove(1);
    let shorter = Trajectory::new(pts)?;
    let d = dtw(&gt, &shorter)?;
    println!("one point removed: DTW {:.4}, path {:?}", d.cost, d.path);
    Ok(())
}
