//! Image-branch losses and the weighted objective.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::image::GlyphImage;

/// Weights of the sequence-branch (`lambda1..3`) and image-branch (`lambda4..5`) terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda: [f64; 5],
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda: [1.0; 5] }
    }
}

impl LossWeights {
    pub fn new(lambda: [f64; 5]) -> Result<Self> {
        if let Some((i, l)) = lambda
            .iter()
            .enumerate()
            .find(|(_, l)| !(**l >= 0.0 && l.is_finite()))
        {
            return Err(Error::InvalidParameter(format!(
                "lambda{} must be non-negative, got {l}",
                i + 1
            )));
        }
        Ok(Self { lambda })
    }
}

fn check_dims(gt: &GlyphImage, fake: &GlyphImage) -> Result<()> {
    if gt.dims() != fake.dims() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            actual: fake.dims(),
        });
    }
    Ok(())
}

/// Mean absolute pixel difference.
pub fn loss_pixel(gt: &GlyphImage, fake: &GlyphImage) -> Result<f64> {
    check_dims(gt, fake)?;
    let total: f64 = gt
        .pixels()
        .iter()
        .zip(fake.pixels())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(total / gt.pixels().len() as f64)
}

/// `F^T F / N` for an `N x C` feature matrix.
pub fn gram(features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if features.nrows() == 0 {
        return Err(Error::ShapeMismatch(
            "gram matrix needs at least one row".into(),
        ));
    }
    Ok(features.tr_mul(features) / features.nrows() as f64)
}

/// Sum over layers of the mean absolute Gram-matrix difference.
pub fn loss_gram(gt_stack: &[DMatrix<f64>], fake_stack: &[DMatrix<f64>]) -> Result<f64> {
    if gt_stack.len() != fake_stack.len() {
        return Err(Error::DimensionMismatch {
            expected: (gt_stack.len(), 0),
            actual: (fake_stack.len(), 0),
        });
    }
    let mut total = 0.0;
    for (a, b) in gt_stack.iter().zip(fake_stack) {
        if a.shape() != b.shape() {
            return Err(Error::DimensionMismatch {
                expected: a.shape(),
                actual: b.shape(),
            });
        }
        let diff = gram(a)? - gram(b)?;
        total += diff.iter().map(|v| v.abs()).sum::<f64>() / diff.len() as f64;
    }
    Ok(total)
}

pub fn combine_seq(loss_point: f64, loss_label: f64, loss_diff: f64, w: &LossWeights) -> f64 {
    w.lambda[0] * loss_point + w.lambda[1] * loss_label + w.lambda[2] * loss_diff
}

pub fn combine_img(loss_pixel: f64, loss_gram: f64, w: &LossWeights) -> f64 {
    w.lambda[3] * loss_pixel + w.lambda[4] * loss_gram
}

pub fn combine_total(
    loss_img: f64,
    loss_seq: f64,
    loss_nce: f64,
    loss_rec: f64,
    loss_dml: f64,
) -> f64 {
    loss_img + loss_seq + loss_nce + loss_rec + loss_dml
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_anchors() {
        let ones = GlyphImage::filled(3, 4, 1.0).unwrap();
        let zeros = GlyphImage::filled(3, 4, 0.0).unwrap();
        assert_eq!(loss_pixel(&ones, &ones).unwrap(), 0.0);
        assert_eq!(loss_pixel(&ones, &zeros).unwrap(), 1.0);
        let other = GlyphImage::filled(4, 3, 0.0).unwrap();
        assert!(matches!(
            loss_pixel(&ones, &other),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gram_anchors() {
        let n = 4.0_f64;
        // orthonormal columns scaled by sqrt(N)
        let f = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]) * n.sqrt();
        assert_eq!(gram(&f).unwrap(), DMatrix::identity(2, 2));
        let row = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        assert_eq!(gram(&row).unwrap(), row.transpose() * &row);
        assert!(gram(&DMatrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn gram_loss_anchors() {
        let a = vec![DMatrix::from_element(1, 1, 3.0)];
        let b = vec![DMatrix::from_element(1, 1, 2.0)];
        assert_eq!(loss_gram(&a, &a).unwrap(), 0.0);
        assert_eq!(loss_gram(&a, &b).unwrap(), 5.0);
        assert!(loss_gram(&a, &[]).is_err());
        assert!(loss_gram(&a, &[DMatrix::zeros(2, 1)]).is_err());
    }

    #[test]
    fn combinations() {
        let zero = LossWeights::new([0.0; 5]).unwrap();
        assert_eq!(combine_seq(1.0, 2.0, 3.0, &zero), 0.0);
        let one = LossWeights::default();
        assert_eq!(combine_seq(1.0, 2.0, 3.0, &one), 6.0);
        assert_eq!(combine_seq(2.0, 4.0, 6.0, &one), 12.0);
        assert_eq!(
            combine_img(
                0.5,
                0.25,
                &LossWeights::new([0.0, 0.0, 0.0, 2.0, 4.0]).unwrap()
            ),
            2.0
        );
        assert_eq!(combine_total(0.0, 0.0, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(combine_total(1.0, 1.0, 1.0, 1.0, 1.0), 5.0);
        assert!(LossWeights::new([1.0, -1.0, 0.0, 0.0, 0.0]).is_err());
    }
}
