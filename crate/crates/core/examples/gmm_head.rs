//! The mixture density head: activation of raw outputs, per-step negative
//! log-likelihood, its gradient, and sampling.
//!
//!     cargo run --example gmm_head

use glyphforge::gmm::{
    activate, density, loss_label, loss_point_grad, loss_point_raw, sample, ControlLogits,
    RawGmmOutput, DEFAULT_COMPONENTS,
};
use glyphforge::{Control, Point6, Trajectory};

fn main() -> glyphforge::Result<()> {
    let m = 3;
    // blocks: weight logits, mu_x, mu_y, log sigma_x, log sigma_y, pre-tanh rho
    let raw = RawGmmOutput::new(vec![
        0.0, 1.0, -1.0, //
        -0.3, 0.2, 0.5, //
        0.1, -0.4, 0.0, //
        -2.0, -1.5, -2.5, //
        -2.0, -1.0, -2.5, //
        0.0, 0.8, -0.3,
    ])?;
    let g = activate(&raw)?;
    println!("M = {m} (default head uses {DEFAULT_COMPONENTS})");
    println!("weights {:.3?}", g.pi);
    println!("sigma_x {:.3?}, rho {:.3?}", g.sigma_x, g.rho);
    println!(
        "density at first mean: {:.4}",
        density(&g, g.mu_x[0], g.mu_y[0])
    );

    let targets = Trajectory::new(vec![
        Point6::new(0.15, -0.35, Control::Draw),
        Point6::new(0.2, -0.3, Control::EndWriting),
    ])?;
    let steps = vec![raw.clone(), raw];
    println!(
        "mean NLL over 2 steps: {:.6}",
        loss_point_raw(&steps, &targets)?
    );
    let grad = loss_point_grad(&steps, &targets)?;
    println!("d loss / d weight logits (step 0): {:.4?}", &grad[0][..m]);

    let draws: Vec<(f64, f64)> = (0..5).map(|s| sample(&g, s)).collect();
    println!("samples: {draws:.3?}");

    let q = ControlLogits([2.0, 0.1, 0.3, -1.0]);
    println!(
        "label loss vs Draw {:.4}, vs EndWriting {:.4}",
        loss_label(&q, Control::Draw),
        loss_label(&q, Control::EndWriting)
    );
    Ok(())
}
