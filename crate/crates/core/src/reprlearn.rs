//! Dual-modality representation learning.
//!
//! Style features from the image and sequence encoders are projected to a
//! unit-norm half-dimension space (distillation) and mapped back
//! (restoration). Three losses act on them: InfoNCE between paired distilled
//! features, squared reconstruction error, and style-classification
//! cross-entropies on original and distilled features.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MIN_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StyleFeature(DVector<f64>);

impl StyleFeature {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() || !v.len().is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!(
                "style feature dimension {} must be even and positive",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("style feature".into()));
        }
        Ok(Self(v))
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(v))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Unit-norm distilled feature.
#[derive(Debug, Clone, PartialEq)]
pub struct DistilledFeature(DVector<f64>);

impl DistilledFeature {
    /// Normalize `v`; fails on vectors shorter than `1e-12`.
    pub fn normalize(v: DVector<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n >= MIN_NORM) || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self(v / n))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// `down: D/2 x D`, `up: D x D/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillWeights {
    down: DMatrix<f64>,
    up: DMatrix<f64>,
}

impl DistillWeights {
    pub fn new(down: DMatrix<f64>, up: DMatrix<f64>) -> Result<Self> {
        let d = down.ncols();
        if d == 0 || !d.is_multiple_of(2) || down.nrows() != d / 2 {
            return Err(Error::ShapeMismatch(format!(
                "distillation map must be D/2 x D, got {}x{}",
                down.nrows(),
                down.ncols()
            )));
        }
        if up.shape() != (d, d / 2) {
            return Err(Error::ShapeMismatch(format!(
                "restoration map must be {d}x{}, got {}x{}",
                d / 2,
                up.nrows(),
                up.ncols()
            )));
        }
        Ok(Self { down, up })
    }

    pub fn down(&self) -> &DMatrix<f64> {
        &self.down
    }

    pub fn up(&self) -> &DMatrix<f64> {
        &self.up
    }
}

pub fn distill(f: &StyleFeature, w: &DistillWeights) -> Result<DistilledFeature> {
    if f.dim() != w.down.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "feature dimension {} vs distillation input {}",
            f.dim(),
            w.down.ncols()
        )));
    }
    DistilledFeature::normalize(&w.down * &f.0)
}

pub fn restore(fd: &DistilledFeature, w: &DistillWeights) -> Result<StyleFeature> {
    restore_vector(&fd.0, w).and_then(StyleFeature::new)
}

/// Restoration applied to an arbitrary half-dimension vector.
pub fn restore_vector(v: &DVector<f64>, w: &DistillWeights) -> Result<DVector<f64>> {
    if v.len() != w.up.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "distilled dimension {} vs restoration input {}",
            v.len(),
            w.up.ncols()
        )));
    }
    Ok(&w.up * v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NceConfig {
    pub tau: f64,
}

impl Default for NceConfig {
    fn default() -> Self {
        Self { tau: 10.0 }
    }
}

impl NceConfig {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {tau}"
            )));
        }
        Ok(Self { tau })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NceOutput {
    pub loss: f64,
    pub grad_img: Vec<DVector<f64>>,
    pub grad_seq: Vec<DVector<f64>>,
}

/// Cosine similarity and its gradients with respect to both arguments.
fn cosine_with_grad(a: &DVector<f64>, b: &DVector<f64>) -> (f64, DVector<f64>, DVector<f64>) {
    let na = a.norm();
    let nb = b.norm();
    let cos = a.dot(b) / (na * nb);
    let ga = b / (na * nb) - a * (cos / (na * na));
    let gb = a / (na * nb) - b * (cos / (nb * nb));
    (cos, ga, gb)
}

/// Image-anchored InfoNCE over raw vectors: row `i` of `img` is paired with
/// row `i` of `seq`, every other `seq` row is a negative. Similarities are
/// cosines, so inputs need not be normalized.
pub fn loss_nce_vectors(img: &[DVector<f64>], seq: &[DVector<f64>], tau: f64) -> Result<NceOutput> {
    if img.len() != seq.len() || img.is_empty() {
        return Err(Error::BatchMismatch {
            img: img.len(),
            seq: seq.len(),
        });
    }
    let dim = img[0].len();
    if img.iter().chain(seq).any(|v| v.len() != dim) {
        return Err(Error::ShapeMismatch(
            "features in a batch differ in dimension".into(),
        ));
    }
    if img.iter().chain(seq).any(|v| !(v.norm() >= MIN_NORM)) {
        return Err(Error::ZeroVector);
    }
    let b = img.len();
    let inv_b = 1.0 / b as f64;
    let mut loss = 0.0;
    let mut grad_img = vec![DVector::zeros(dim); b];
    let mut grad_seq = vec![DVector::zeros(dim); b];
    for i in 0..b {
        let sims: Vec<_> = seq.iter().map(|s| cosine_with_grad(&img[i], s)).collect();
        let logits: Vec<f64> = sims.iter().map(|(c, _, _)| tau * c).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        loss += inv_b * (max + total.ln() - logits[i]);
        for (j, (_, ga, gb)) in sims.iter().enumerate() {
            let p = (logits[j] - max).exp() / total;
            let coeff = inv_b * tau * (p - if i == j { 1.0 } else { 0.0 });
            grad_img[i] += ga * coeff;
            grad_seq[j] += gb * coeff;
        }
    }
    Ok(NceOutput {
        loss,
        grad_img,
        grad_seq,
    })
}

pub fn loss_nce(
    img_batch: &[DistilledFeature],
    seq_batch: &[DistilledFeature],
    cfg: &NceConfig,
) -> Result<NceOutput> {
    let img: Vec<DVector<f64>> = img_batch.iter().map(|f| f.0.clone()).collect();
    let seq: Vec<DVector<f64>> = seq_batch.iter().map(|f| f.0.clone()).collect();
    loss_nce_vectors(&img, &seq, cfg.tau)
}

fn squared_distance(a: &StyleFeature, b: &StyleFeature) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: (a.dim(), 1),
            actual: (b.dim(), 1),
        });
    }
    Ok((&a.0 - &b.0).norm_squared())
}

/// Squared reconstruction error of both modalities.
pub fn loss_rec(
    f_img_s: &StyleFeature,
    f_r_img: &StyleFeature,
    f_seq_s: &StyleFeature,
    f_r_seq: &StyleFeature,
) -> Result<f64> {
    Ok(squared_distance(f_img_s, f_r_img)? + squared_distance(f_seq_s, f_r_seq)?)
}

/// Affine classifier `weight * x + bias` over `K` styles.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Affine {
    pub fn new(weight: DMatrix<f64>, bias: DVector<f64>) -> Result<Self> {
        if weight.nrows() != bias.len() || weight.nrows() == 0 {
            return Err(Error::ShapeMismatch(
                "classifier bias must match its class count".into(),
            ));
        }
        Ok(Self { weight, bias })
    }

    pub fn without_bias(weight: DMatrix<f64>) -> Result<Self> {
        let k = weight.nrows();
        Self::new(weight, DVector::zeros(k))
    }

    pub fn classes(&self) -> usize {
        self.weight.nrows()
    }

    fn logits(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.weight.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "classifier expects {} inputs, got {}",
                self.weight.ncols(),
                x.len()
            )));
        }
        Ok(&self.weight * x + &self.bias)
    }
}

/// Softmax cross-entropy of one logit vector.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    Ok(lse - logits[label])
}

/// Four classifiers over `(f_img_s, f_d_img, f_seq_s, f_d_seq)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleClassifier {
    pub heads: [Affine; 4],
}

impl StyleClassifier {
    pub fn new(heads: [Affine; 4]) -> Result<Self> {
        let k = heads[0].classes();
        if heads.iter().any(|h| h.classes() != k) {
            return Err(Error::ShapeMismatch(
                "classifiers disagree on the style count".into(),
            ));
        }
        Ok(Self { heads })
    }

    pub fn classes(&self) -> usize {
        self.heads[0].classes()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DmlFeatures<'a> {
    pub img_style: &'a StyleFeature,
    pub img_distilled: &'a DistilledFeature,
    pub seq_style: &'a StyleFeature,
    pub seq_distilled: &'a DistilledFeature,
}

pub fn loss_dml(features: DmlFeatures<'_>, cls: &StyleClassifier, label: usize) -> Result<f64> {
    if label >= cls.classes() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: cls.classes(),
        });
    }
    let inputs = [
        &features.img_style.0,
        &features.img_distilled.0,
        &features.seq_style.0,
        &features.seq_distilled.0,
    ];
    let mut total = 0.0;
    for (head, x) in cls.heads.iter().zip(inputs) {
        total += cross_entropy(head.logits(x)?.as_slice(), label)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn block_weights() -> DistillWeights {
        let mut down = DMatrix::zeros(2, 4);
        down[(0, 0)] = 1.0;
        down[(1, 1)] = 1.0;
        DistillWeights::new(down.clone(), down.transpose()).unwrap()
    }

    #[test]
    fn distill_three_four_five() {
        let f = StyleFeature::from_slice(&[3.0, 4.0, 0.0, 0.0]).unwrap();
        let out = distill(&f, &block_weights()).unwrap();
        assert_eq!(out.as_vector().as_slice(), [0.6, 0.8]);
        let scaled = StyleFeature::from_slice(&[30.0, 40.0, 7.0, 7.0]).unwrap();
        assert_eq!(distill(&scaled, &block_weights()).unwrap(), out);
    }

    #[test]
    fn distill_rejects_null_projection() {
        let f = StyleFeature::from_slice(&[0.0, 0.0, 5.0, 1.0]).unwrap();
        assert!(matches!(
            distill(&f, &block_weights()),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn odd_dimensions_are_rejected() {
        assert!(StyleFeature::from_slice(&[1.0, 2.0, 3.0]).is_err());
        assert!(DistillWeights::new(DMatrix::zeros(1, 3), DMatrix::zeros(3, 1)).is_err());
        assert!(DistillWeights::new(DMatrix::zeros(2, 4), DMatrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn restore_is_linear_map() {
        let zero = DistillWeights::new(DMatrix::zeros(2, 4), DMatrix::zeros(4, 2)).unwrap();
        let fd = DistilledFeature::normalize(dv(&[0.6, 0.8])).unwrap();
        assert_eq!(
            restore(&fd, &zero).unwrap().as_vector().as_slice(),
            [0.0; 4]
        );

        let w = block_weights();
        let doubled = DistillWeights::new(w.down().clone(), w.up() * 2.0).unwrap();
        assert_eq!(
            restore(&fd, &doubled).unwrap().as_vector().as_slice(),
            [1.2, 1.6, 0.0, 0.0]
        );
    }

    #[test]
    fn nce_anchors() {
        let cfg = NceConfig::new(1.0).unwrap();
        let a = DistilledFeature::normalize(dv(&[0.3, -0.2, 0.9])).unwrap();
        let b = DistilledFeature::normalize(dv(&[-0.5, 0.1, 0.2])).unwrap();
        assert_eq!(
            loss_nce(&[a.clone()], &[b.clone()], &cfg).unwrap().loss,
            0.0
        );

        let e1 = DistilledFeature::normalize(dv(&[1.0, 0.0])).unwrap();
        let e2 = DistilledFeature::normalize(dv(&[0.0, 1.0])).unwrap();
        let out = loss_nce(&[e1.clone(), e2.clone()], &[e1, e2], &cfg).unwrap();
        let expect = (1.0 + (-1f64).exp()).ln();
        assert!((out.loss - expect).abs() < 1e-12);

        assert!(matches!(
            loss_nce(&[a.clone(), b], &[a], &cfg),
            Err(Error::BatchMismatch { img: 2, seq: 1 })
        ));
        assert!(NceConfig::new(0.0).is_err());
        assert_eq!(NceConfig::default().tau, 10.0);
    }

    #[test]
    fn nce_decreases_as_positive_pair_aligns() {
        let cfg = NceConfig::new(2.0).unwrap();
        let unit =
            |angle: f64| DistilledFeature::normalize(dv(&[angle.cos(), angle.sin(), 0.0])).unwrap();
        let anchor = unit(0.0);
        let other_img = DistilledFeature::normalize(dv(&[0.0, 0.0, 1.0])).unwrap();
        let negative = DistilledFeature::normalize(dv(&[0.0, 0.0, -1.0])).unwrap();
        // The anchor's negative stays orthogonal while the positive rotates toward it.
        let mut prev = f64::INFINITY;
        for k in (0..=6).rev() {
            let pos = unit(k as f64 * 0.25);
            let loss = loss_nce(
                &[anchor.clone(), other_img.clone()],
                &[pos, negative.clone()],
                &cfg,
            )
            .unwrap()
            .loss;
            assert!(loss < prev, "loss {loss} did not drop below {prev}");
            prev = loss;
        }
    }

    #[test]
    fn rec_anchors() {
        let a = StyleFeature::from_slice(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = StyleFeature::from_slice(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(loss_rec(&a, &a, &b, &b).unwrap(), 0.0);
        assert_eq!(loss_rec(&a, &b, &b, &b).unwrap(), 4.0);
        let short = StyleFeature::from_slice(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            loss_rec(&a, &short, &b, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn uniform_classifier(k: usize, d: usize) -> StyleClassifier {
        let big = Affine::without_bias(DMatrix::zeros(k, d)).unwrap();
        let small = Affine::without_bias(DMatrix::zeros(k, d / 2)).unwrap();
        StyleClassifier::new([big.clone(), small.clone(), big, small]).unwrap()
    }

    #[test]
    fn dml_anchors() {
        let f = StyleFeature::from_slice(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let fd = DistilledFeature::normalize(dv(&[0.6, 0.8])).unwrap();
        let feats = DmlFeatures {
            img_style: &f,
            img_distilled: &fd,
            seq_style: &f,
            seq_distilled: &fd,
        };
        let loss = loss_dml(feats, &uniform_classifier(5, 4), 2).unwrap();
        assert!((loss - 4.0 * 5f64.ln()).abs() < 1e-12);

        let sure = |d: usize| Affine::new(DMatrix::zeros(2, d), dv(&[0.0, 50.0])).unwrap();
        let cls = StyleClassifier::new([sure(4), sure(2), sure(4), sure(2)]).unwrap();
        assert!(loss_dml(feats, &cls, 1).unwrap() < 1e-9);
        assert!(matches!(
            loss_dml(feats, &cls, 2),
            Err(Error::LabelOutOfRange {
                label: 2,
                classes: 2
            })
        ));
    }
}
