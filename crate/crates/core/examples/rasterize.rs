//! Distance field and sigmoid rendering of a two-stroke glyph, printed as
//! ASCII and optionally written as a PGM.
//!
//!     cargo run --example rasterize [-- out.pgm]

use glyphforge::fixtures;
use glyphforge::image::PgmEncoding;
use glyphforge::{Grid, Rasterizer, RenderParams};

fn shade(v: f64) -> char {
    const RAMP: &[u8] = b" .:-=+*#%@";
    RAMP[((v * (RAMP.len() - 1) as f64).round() as usize).min(RAMP.len() - 1)] as char
}

fn main() -> glyphforge::Result<()> {
    let t = fixtures::two_strokes();
    let grid = Grid::new(24, 48)?;

    for include in [false, true] {
        let r = Rasterizer::new(grid, RenderParams::new(100.0, 1.0)?).with_connections(include);
        println!("connections drawn: {include}");
        let img = r.render(&t);
        // rows grow with y, so print the last row first
        for i in (0..grid.height()).rev() {
            let row: String = (0..grid.width()).map(|j| shade(img.get(i, j))).collect();
            println!("|{row}|");
        }
    }

    let soft = Rasterizer::new(grid, RenderParams::new(2.0, 1.0)?);
    let field = soft.udf(&t);
    let (i, j) = (12, 24);
    println!(
        "pixel ({i}, {j}): distance {:.3} px, ink {:.4} at theta 2",
        field.get(i, j),
        soft.render(&t).get(i, j)
    );

    if let Some(path) = std::env::args().nth(1) {
        let img = Rasterizer::new(Grid::new(128, 128)?, RenderParams::default()).render(&t);
        std::fs::write(&path, img.encode_pgm(PgmEncoding::Binary)?).map_err(|e| {
            glyphforge::Error::Io {
                path: path.clone().into(),
                source: e,
            }
        })?;
        println!("wrote {path}");
    }
    Ok(())
}
