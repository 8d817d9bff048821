//! Compare every analytic gradient with central finite differences.
//!
//!     cargo run --release --example gradient_check [-- instances]

use glyphforge::gradcheck::{run_suite, GradCheckOptions, Suite};

fn main() -> glyphforge::Result<()> {
    let instances = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(20);
    for corrupt in [false, true] {
        let opts = GradCheckOptions {
            seed: 0,
            instances,
            corrupt,
        };
        println!(
            "{}",
            if corrupt {
                "perturbed gradients:"
            } else {
                "analytic gradients:"
            }
        );
        for suite in Suite::ALL {
            let report = run_suite(suite, &opts)?;
            println!("  {report}");
            let worst = report
                .instances
                .iter()
                .max_by(|a, b| a.error.total_cmp(&b.error));
            if let Some(w) = worst {
                println!(
                    "    worst instance #{}: {} components checked",
                    w.index, w.checked
                );
            }
        }
    }
    Ok(())
}
