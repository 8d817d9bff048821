//! Image feature recombination: two attention products re-weight spatial
//! image features under sequence guidance. Each output row is a convex
//! combination of the input rows.
//!
//!     cargo run --example feature_recombination

use glyphforge::ifr::{ifr_forward, IfrWeights, ImageFeatureMap, SequenceFeature};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> glyphforge::Result<()> {
    let mut rng = glyphforge::rng::stream(1, 0);
    let mut gauss =
        |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));

    let (h, w, c, l, ds, d) = (4, 4, 8, 3, 8, 8);
    let img = ImageFeatureMap::new(h, w, gauss(h * w, c))?;
    let seq = SequenceFeature::new(gauss(l, ds))?;
    let weights = IfrWeights::new(gauss(d, c), gauss(d, c), gauss(d, ds), gauss(d, ds))?;

    let out = ifr_forward(&img, &seq, &weights)?;
    println!(
        "attn1 {}x{}, attn2 {}x{}",
        out.attn1.nrows(),
        out.attn1.ncols(),
        out.attn2.nrows(),
        out.attn2.ncols()
    );
    let sums: Vec<f64> = out.attn2.row_iter().map(|r| r.sum()).collect();
    println!(
        "attn2 row sums within {:.1e} of 1",
        sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
    );

    for ch in 0..3 {
        let col = img.data().column(ch);
        let res = out.recombined.data().column(ch);
        println!(
            "channel {ch}: input [{:+.3}, {:+.3}], output [{:+.3}, {:+.3}]",
            col.min(),
            col.max(),
            res.min(),
            res.max()
        );
    }
    println!(
        "pooled sequence feature: {:.3?}",
        seq.mean_pool().as_slice()
    );
    Ok(())
}
