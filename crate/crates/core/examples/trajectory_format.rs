//! Parse a format-6 trajectory, inspect its strokes, and upgrade a format-5
//! sequence with connected-stroke flags.
//!
//!     cargo run --example trajectory_format

use glyphforge::format6::{
    from_format5, parse_trajectory, serialize_trajectory, visible_segments, Format5Control, Point5,
};
use glyphforge::Control;

const GLYPH: &str = "\
#glyphforge-traj v1
# a horizontal stroke joined to a short vertical tick
-0.6 0.2 1 0 0 0
0.4 0.2 0 0 1 0
0.1 -0.1 1 0 0 0
0.1 0.7 0 0 0 1
";

fn main() -> glyphforge::Result<()> {
    let t = parse_trajectory(GLYPH)?;
    println!("{} points, stroke ends at {:?}", t.len(), t.stroke_ends());

    for include in [false, true] {
        let n = visible_segments(&t, include)
            .iter()
            .filter(|s| s.visible)
            .count();
        println!("visible segments (connections drawn: {include}): {n}");
    }

    print!("canonical form:\n{}", serialize_trajectory(&t));

    let f5 = [
        Point5 {
            x: -0.5,
            y: 0.0,
            control: Format5Control::Draw,
        },
        Point5 {
            x: 0.0,
            y: 0.0,
            control: Format5Control::EndStroke,
        },
        Point5 {
            x: 0.0,
            y: 0.5,
            control: Format5Control::Draw,
        },
        Point5 {
            x: 0.5,
            y: 0.5,
            control: Format5Control::EndStroke,
        },
        Point5 {
            x: 0.5,
            y: -0.5,
            control: Format5Control::EndWriting,
        },
    ];
    let up = from_format5(&f5, &[true, false])?;
    let labels: Vec<Control> = up.points().iter().map(|p| p.control).collect();
    println!("upgraded labels: {labels:?}");
    println!(
        "connected one-hot: {:?}",
        Control::EndStrokeConnected.one_hot()
    );

    match parse_trajectory("#glyphforge-traj v1\n0 0 1 1 0 0\n") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("two active control bits"),
    }
    Ok(())
}
