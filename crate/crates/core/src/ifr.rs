//! Image feature recombination: two chained attention products that
//! re-weight spatial image features under guidance from sequence features.
//!
//! ```text
//! Q_img = f_img W_q^T      K_img = f_img W_k^T          (HW x d)
//! K_seq = f_seq W_ks^T     V_seq = f_seq W_vs^T         (L x d)
//! Q_seq = LayerNorm(softmax(Q_img K_seq^T / sqrt d) V_seq)
//! out   = softmax(Q_seq K_img^T / sqrt d) f_img         (HW x C)
//! ```
//!
//! Every output row is a convex combination of the rows of `f_img`, so the
//! recombined feature stays inside the per-channel range of the input.
//! The sequence feature is treated as a constant input.
//!
//! Linear maps are stored `out x in`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::textmat::{parse_blocks, write_block};

pub const IFR_HEADER: &str = "#glyphforge-ifr v1";
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Spatial-major `(H*W) x C` feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFeatureMap {
    height: usize,
    width: usize,
    data: DMatrix<f64>,
}

impl ImageFeatureMap {
    pub fn new(height: usize, width: usize, data: DMatrix<f64>) -> Result<Self> {
        if height * width == 0 || data.ncols() == 0 {
            return Err(Error::ShapeMismatch("feature map must be non-empty".into()));
        }
        if data.nrows() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} rows for a {height}x{width} map",
                data.nrows()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image feature".into()));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }
}

/// `L x D_s` sequence feature.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFeature(DMatrix<f64>);

impl SequenceFeature {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::ShapeMismatch(
                "sequence feature must be non-empty".into(),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sequence feature".into()));
        }
        Ok(Self(data))
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mean over the `L` steps.
    pub fn mean_pool(&self) -> DVector<f64> {
        self.0.row_mean().transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfrWeights {
    pub q_img: DMatrix<f64>,
    pub k_img: DMatrix<f64>,
    pub k_seq: DMatrix<f64>,
    pub v_seq: DMatrix<f64>,
    pub ln_gain: DVector<f64>,
    pub ln_bias: DVector<f64>,
}

impl IfrWeights {
    /// Layer-norm affine parameters default to gain 1, bias 0.
    pub fn new(
        q_img: DMatrix<f64>,
        k_img: DMatrix<f64>,
        k_seq: DMatrix<f64>,
        v_seq: DMatrix<f64>,
    ) -> Result<Self> {
        let d = q_img.nrows();
        Self::with_layer_norm(
            q_img,
            k_img,
            k_seq,
            v_seq,
            DVector::from_element(d, 1.0),
            DVector::zeros(d),
        )
    }

    pub fn with_layer_norm(
        q_img: DMatrix<f64>,
        k_img: DMatrix<f64>,
        k_seq: DMatrix<f64>,
        v_seq: DMatrix<f64>,
        ln_gain: DVector<f64>,
        ln_bias: DVector<f64>,
    ) -> Result<Self> {
        let d = q_img.nrows();
        if d == 0 {
            return Err(Error::ShapeMismatch(
                "attention size d must be positive".into(),
            ));
        }
        if k_img.nrows() != d || k_seq.nrows() != d || v_seq.nrows() != d {
            return Err(Error::ShapeMismatch(
                "all maps must project to the same d".into(),
            ));
        }
        if k_img.ncols() != q_img.ncols() {
            return Err(Error::ShapeMismatch(
                "image maps disagree on channel count".into(),
            ));
        }
        if k_seq.ncols() != v_seq.ncols() {
            return Err(Error::ShapeMismatch(
                "sequence maps disagree on channel count".into(),
            ));
        }
        if ln_gain.len() != d || ln_bias.len() != d {
            return Err(Error::ShapeMismatch(
                "layer-norm parameters must have size d".into(),
            ));
        }
        Ok(Self {
            q_img,
            k_img,
            k_seq,
            v_seq,
            ln_gain,
            ln_bias,
        })
    }

    pub fn d(&self) -> usize {
        self.q_img.nrows()
    }

    pub fn image_channels(&self) -> usize {
        self.q_img.ncols()
    }

    pub fn sequence_channels(&self) -> usize {
        self.k_seq.ncols()
    }

    /// Named blocks `q_img`, `k_img`, `k_seq`, `v_seq` and optional
    /// `ln_gain`, `ln_bias` (each `1 x d`).
    pub fn parse(text: &str) -> Result<Self> {
        let blocks = parse_blocks(text, IFR_HEADER, true)?;
        let find = |name: &str| {
            blocks
                .iter()
                .find(|b| b.name.as_deref() == Some(name))
                .map(|b| b.matrix.clone())
        };
        let need = |name: &str| {
            find(name).ok_or_else(|| Error::ShapeMismatch(format!("missing matrix {name:?}")))
        };
        let q_img = need("q_img")?;
        let d = q_img.nrows();
        let vector = |name: &str, default: f64| -> Result<DVector<f64>> {
            match find(name) {
                Some(m) if m.nrows() == 1 => Ok(m.row(0).transpose()),
                Some(_) => Err(Error::ShapeMismatch(format!("{name} must be a single row"))),
                None => Ok(DVector::from_element(d, default)),
            }
        };
        Self::with_layer_norm(
            q_img,
            need("k_img")?,
            need("k_seq")?,
            need("v_seq")?,
            vector("ln_gain", 1.0)?,
            vector("ln_bias", 0.0)?,
        )
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("{IFR_HEADER}\n");
        write_block(&mut out, Some("q_img"), &self.q_img);
        write_block(&mut out, Some("k_img"), &self.k_img);
        write_block(&mut out, Some("k_seq"), &self.k_seq);
        write_block(&mut out, Some("v_seq"), &self.v_seq);
        write_block(
            &mut out,
            Some("ln_gain"),
            &DMatrix::from_row_slice(1, self.d(), self.ln_gain.as_slice()),
        );
        write_block(
            &mut out,
            Some("ln_bias"),
            &DMatrix::from_row_slice(1, self.d(), self.ln_bias.as_slice()),
        );
        out
    }
}

/// `(v - mean) / sqrt(var + eps) * gain + bias` with population variance.
pub fn layer_norm(v: &[f64], gain: &[f64], bias: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
    v.iter()
        .zip(gain.iter().zip(bias))
        .map(|(x, (g, b))| (x - mean) * inv * g + b)
        .collect()
}

/// Row-wise softmax with max subtraction.
fn softmax_rows(mut m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what} logits")));
    }
    for mut row in m.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let total = row.sum();
        row /= total;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfrOutput {
    pub recombined: ImageFeatureMap,
    /// `(H*W) x L`
    pub attn1: DMatrix<f64>,
    /// `(H*W) x (H*W)`
    pub attn2: DMatrix<f64>,
}

pub fn ifr_forward(
    f_img: &ImageFeatureMap,
    f_seq: &SequenceFeature,
    w: &IfrWeights,
) -> Result<IfrOutput> {
    if f_img.channels() != w.image_channels() {
        return Err(Error::ShapeMismatch(format!(
            "image feature has {} channels, weights expect {}",
            f_img.channels(),
            w.image_channels()
        )));
    }
    if f_seq.data().ncols() != w.sequence_channels() {
        return Err(Error::ShapeMismatch(format!(
            "sequence feature has {} channels, weights expect {}",
            f_seq.data().ncols(),
            w.sequence_channels()
        )));
    }
    let scale = 1.0 / (w.d() as f64).sqrt();
    let img = f_img.data();
    let seq = f_seq.data();

    let q_img = img * w.q_img.transpose();
    let k_img = img * w.k_img.transpose();
    let k_seq = seq * w.k_seq.transpose();
    let v_seq = seq * w.v_seq.transpose();

    let attn1 = softmax_rows(&q_img * k_seq.transpose() * scale, "image-to-sequence")?;
    let mut q_seq = &attn1 * v_seq;
    let gain = w.ln_gain.as_slice();
    let bias = w.ln_bias.as_slice();
    for r in 0..q_seq.nrows() {
        let row: Vec<f64> = q_seq.row(r).iter().copied().collect();
        for (c, v) in layer_norm(&row, gain, bias).into_iter().enumerate() {
            q_seq[(r, c)] = v;
        }
    }
    let attn2 = softmax_rows(&q_seq * k_img.transpose() * scale, "sequence-to-image")?;
    let out = &attn2 * img;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("recombined feature".into()));
    }
    Ok(IfrOutput {
        recombined: ImageFeatureMap {
            height: f_img.height,
            width: f_img.width,
            data: out,
        },
        attn1,
        attn2,
    })
}
