//! Label connected strokes by comparing a glyph's stroke gaps with the
//! per-character mean skeleton.
//!
//!     cargo run --example pseudo_annotation

use glyphforge::annotate::{pseudo_annotate, AnnotateConfig};
use glyphforge::{Control, Point6, Trajectory};

fn three_strokes(gap1: f64, gap2: f64) -> glyphforge::Result<Trajectory> {
    Trajectory::new(vec![
        Point6::new(-0.8, 0.0, Control::Draw),
        Point6::new(-0.4, 0.0, Control::EndStroke),
        Point6::new(-0.4 + gap1, 0.0, Control::Draw),
        Point6::new(-0.2, 0.3, Control::EndStroke),
        Point6::new(-0.2 + gap2, 0.3, Control::Draw),
        Point6::new(0.6, 0.3, Control::EndWriting),
    ])
}

fn main() -> glyphforge::Result<()> {
    let mean = three_strokes(0.5, 0.5)?;
    for (g1, g2) in [(0.05, 0.5), (0.05, 0.02), (0.5, 0.5)] {
        let glyph = three_strokes(g1, g2)?;
        let out = pseudo_annotate(&glyph, &mean, &AnnotateConfig::default())?;
        let ends: Vec<Control> = out
            .stroke_ends()
            .iter()
            .map(|&i| out.points()[i].control)
            .collect();
        println!("gaps ({g1}, {g2}) vs mean (0.5, 0.5): {ends:?}");
    }

    // a gap every writer leaves small is structure, not style
    let tight = three_strokes(0.05, 0.5)?;
    let out = pseudo_annotate(&tight, &tight, &AnnotateConfig::default())?;
    println!(
        "same gaps in the mean skeleton: {:?}",
        out.points()[1].control
    );

    for thr in [0.01, 0.1, 0.3] {
        let out = pseudo_annotate(
            &three_strokes(0.05, 0.2)?,
            &mean,
            &AnnotateConfig::new(thr)?,
        )?;
        let n = out
            .points()
            .iter()
            .filter(|p| p.control == Control::EndStrokeConnected)
            .count();
        println!("threshold {thr}: {n} connected");
    }
    Ok(())
}
