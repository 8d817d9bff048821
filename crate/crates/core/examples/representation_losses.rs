//! Distillation and restoration of style features, the contrastive loss
//! between modalities, reconstruction and metric-learning terms, and the
//! weighted total objective.
//!
//!     cargo run --example representation_losses

use glyphforge::losses::{
    combine_img, combine_seq, combine_total, gram, loss_gram, loss_pixel, LossWeights,
};
use glyphforge::reprlearn::{
    distill, loss_dml, loss_nce, loss_rec, restore, Affine, DistillWeights, DmlFeatures, NceConfig,
    StyleClassifier, StyleFeature,
};
use glyphforge::GlyphImage;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> glyphforge::Result<()> {
    let mut rng = glyphforge::rng::stream(3, 0);
    let mut gauss =
        |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));

    let dim = 8;
    let w = DistillWeights::new(gauss(dim / 2, dim), gauss(dim, dim / 2))?;
    let batch = 4;
    let feature = |m: DMatrix<f64>| StyleFeature::new(DVector::from_column_slice(m.as_slice()));
    let img: Vec<StyleFeature> = (0..batch)
        .map(|_| feature(gauss(dim, 1)))
        .collect::<Result<_, _>>()?;
    // sequence features: noisy copies of the image ones
    let seq: Vec<StyleFeature> = img
        .iter()
        .map(|f| StyleFeature::new(f.as_vector() + gauss(dim, 1).column(0) * 0.1))
        .collect::<Result<_, _>>()?;

    let img_d: Vec<_> = img
        .iter()
        .map(|f| distill(f, &w))
        .collect::<Result<_, _>>()?;
    let seq_d: Vec<_> = seq
        .iter()
        .map(|f| distill(f, &w))
        .collect::<Result<_, _>>()?;
    println!("distilled norm {:.6}", img_d[0].as_vector().norm());

    let nce = loss_nce(&img_d, &seq_d, &NceConfig::default())?;
    let shuffled: Vec<_> = seq_d.iter().cycle().skip(1).take(batch).cloned().collect();
    let nce_bad = loss_nce(&img_d, &shuffled, &NceConfig::default())?;
    println!(
        "contrastive loss: matched {:.4}, shifted pairs {:.4}",
        nce.loss, nce_bad.loss
    );

    let rec = loss_rec(
        &img[0],
        &restore(&img_d[0], &w)?,
        &seq[0],
        &restore(&seq_d[0], &w)?,
    )?;
    println!("reconstruction loss (untrained maps) {rec:.4}");

    let styles = 5;
    let heads = [dim, dim / 2, dim, dim / 2]
        .map(|n| Affine::without_bias(gauss(styles, n)).expect("bias matches"));
    let cls = StyleClassifier::new(heads)?;
    let feats = DmlFeatures {
        img_style: &img[0],
        img_distilled: &img_d[0],
        seq_style: &seq[0],
        seq_distilled: &seq_d[0],
    };
    let dml = loss_dml(feats, &cls, 2)?;
    println!("metric-learning loss for style 2: {dml:.4}");

    let gt = GlyphImage::from_fn(16, 16, |i, j| {
        if (4..12).contains(&i) && (6..10).contains(&j) {
            1.0
        } else {
            0.0
        }
    })?;
    let fake = GlyphImage::from_fn(16, 16, |i, j| {
        if (5..12).contains(&i) && (6..11).contains(&j) {
            0.9
        } else {
            0.0
        }
    })?;
    let layers_gt = vec![gauss(64, 4), gauss(16, 8)];
    let layers_fake: Vec<DMatrix<f64>> = layers_gt.iter().map(|f| f * 1.1).collect();
    println!(
        "gram of first layer is {}x{}",
        gram(&layers_gt[0])?.nrows(),
        gram(&layers_gt[0])?.ncols()
    );

    let lw = LossWeights::default();
    let img_loss = combine_img(
        loss_pixel(&gt, &fake)?,
        loss_gram(&layers_gt, &layers_fake)?,
        &lw,
    );
    let seq_loss = combine_seq(1.2, 0.4, 0.05, &lw);
    println!(
        "total objective {:.4}",
        combine_total(img_loss, seq_loss, nce.loss, rec, dml)
    );
    Ok(())
}
