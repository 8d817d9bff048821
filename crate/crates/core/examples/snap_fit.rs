//! Gradient descent on the loose rasterization loss: a stroke placed four
//! pixels above a thick bar slides into it.
//!
//!     cargo run --release --example snap_fit

use glyphforge::fixtures::{self, BAR_STROKE_ROW};

fn main() -> glyphforge::Result<()> {
    let fx = fixtures::bar_offset();
    let grid = fx.rasterizer.grid;

    let before = fx.rasterizer.loss_diff(&fx.start, &fx.target)?;
    println!(
        "initial loss {:.4}, gradient {:?}",
        before.loss, before.grad
    );

    let (fitted, trace) = fx
        .rasterizer
        .snap_fit(&fx.start, &fx.target, fx.steps, fx.step_size)?;
    for step in [0, 1, 2, 5, 10, 50, 100, 200] {
        println!("step {step:>3}: loss {:.6e}", trace[step]);
    }
    let row = |t: &glyphforge::Trajectory| grid.to_pixel(t.points()[0].xy())[1];
    println!(
        "stroke row {BAR_STROKE_ROW} -> {:.3} (bar spans rows {:?})",
        row(&fitted),
        fixtures::BAR_ROWS
    );
    println!(
        "final / initial = {:.4}%",
        100.0 * trace[fx.steps] / trace[0]
    );
    Ok(())
}
