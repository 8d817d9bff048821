//! Bivariate Gaussian mixture head over next-point coordinates, plus the
//! four-way control-label classifier loss.
//!
//! A raw output step is `6M` unconstrained reals laid out as six blocks of
//! `M`: mixture logits, `mu_x`, `mu_y`, `log sigma_x`, `log sigma_y`, and
//! pre-`tanh` correlations.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::format6::{Control, Trajectory};

pub const DEFAULT_COMPONENTS: usize = 20;
pub const GMM_HEADER: &str = "#glyphforge-gmm v1";

/// Densities below this are reported as [`Error::ZeroDensity`].
pub const DENSITY_FLOOR: f64 = 1e-12;
const RHO_LIMIT: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RawGmmOutput {
    values: Vec<f64>,
}

impl RawGmmOutput {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_multiple_of(6) {
            return Err(Error::ShapeMismatch(format!(
                "raw GMM output length {} is not a positive multiple of 6",
                values.len()
            )));
        }
        Ok(Self { values })
    }

    pub fn components(&self) -> usize {
        self.values.len() / 6
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn block(&self, b: usize) -> &[f64] {
        let m = self.components();
        &self.values[b * m..(b + 1) * m]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmParams {
    pub pi: Vec<f64>,
    pub mu_x: Vec<f64>,
    pub mu_y: Vec<f64>,
    pub sigma_x: Vec<f64>,
    pub sigma_y: Vec<f64>,
    pub rho: Vec<f64>,
}

impl GmmParams {
    pub fn new(
        pi: Vec<f64>,
        mu_x: Vec<f64>,
        mu_y: Vec<f64>,
        sigma_x: Vec<f64>,
        sigma_y: Vec<f64>,
        rho: Vec<f64>,
    ) -> Result<Self> {
        let m = pi.len();
        if m == 0
            || [&mu_x, &mu_y, &sigma_x, &sigma_y, &rho]
                .iter()
                .any(|v| v.len() != m)
        {
            return Err(Error::ShapeMismatch(
                "GMM parameter blocks differ in length".into(),
            ));
        }
        let total: f64 = pi.iter().sum();
        if pi.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(
                "mixture weights must be a distribution".into(),
            ));
        }
        if sigma_x
            .iter()
            .chain(&sigma_y)
            .any(|s| !(*s > 0.0 && s.is_finite()))
        {
            return Err(Error::InvalidParameter("scales must be positive".into()));
        }
        if rho.iter().any(|r| !(r.abs() < 1.0)) {
            return Err(Error::InvalidParameter(
                "correlations must lie in (-1, 1)".into(),
            ));
        }
        if mu_x.iter().chain(&mu_y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("GMM mean".into()));
        }
        Ok(Self {
            pi,
            mu_x,
            mu_y,
            sigma_x,
            sigma_y,
            rho,
        })
    }

    pub fn components(&self) -> usize {
        self.pi.len()
    }

    /// `log(pi_i N_i(x, y))` for every component.
    fn weighted_log_pdfs(&self, x: f64, y: f64) -> Vec<f64> {
        (0..self.components())
            .map(|i| self.pi[i].ln() + self.log_pdf(i, x, y))
            .collect()
    }

    fn log_pdf(&self, i: usize, x: f64, y: f64) -> f64 {
        let (sx, sy, r) = (self.sigma_x[i], self.sigma_y[i], self.rho[i]);
        let zx = (x - self.mu_x[i]) / sx;
        let zy = (y - self.mu_y[i]) / sy;
        let q = 1.0 - r * r;
        let z = zx * zx + zy * zy - 2.0 * r * zx * zy;
        -(2.0 * PI).ln() - sx.ln() - sy.ln() - 0.5 * q.ln() - z / (2.0 * q)
    }

    pub fn log_density(&self, x: f64, y: f64) -> f64 {
        log_sum_exp(&self.weighted_log_pdfs(x, y))
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|a| (a - max).exp()).sum::<f64>().ln()
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|a| (a - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|a| a / total).collect()
}

/// Map unconstrained outputs to mixture parameters:
/// softmax weights, identity means, `exp` scales, clamped `tanh` correlations.
pub fn activate(raw: &RawGmmOutput) -> Result<GmmParams> {
    if raw.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("raw GMM output".into()));
    }
    let exp_block = |b: usize| -> Vec<f64> {
        raw.block(b)
            .iter()
            .map(|s| s.exp().clamp(f64::MIN_POSITIVE, f64::MAX))
            .collect()
    };
    Ok(GmmParams {
        pi: softmax(raw.block(0)),
        mu_x: raw.block(1).to_vec(),
        mu_y: raw.block(2).to_vec(),
        sigma_x: exp_block(3),
        sigma_y: exp_block(4),
        rho: raw
            .block(5)
            .iter()
            .map(|r| r.tanh().clamp(-RHO_LIMIT, RHO_LIMIT))
            .collect(),
    })
}

pub fn density(params: &GmmParams, x: f64, y: f64) -> f64 {
    params.log_density(x, y).exp()
}

fn check_steps(steps: usize, targets: &Trajectory) -> Result<()> {
    if steps != targets.len() {
        return Err(Error::LengthMismatch {
            expected: targets.len(),
            actual: steps,
        });
    }
    Ok(())
}

/// Mean negative log-likelihood of the target coordinates.
pub fn loss_point(params_seq: &[GmmParams], targets: &Trajectory) -> Result<f64> {
    check_steps(params_seq.len(), targets)?;
    let mut total = 0.0;
    for (step, (params, p)) in params_seq.iter().zip(targets.points()).enumerate() {
        let log_p = params.log_density(p.x, p.y);
        if !(log_p >= DENSITY_FLOOR.ln()) {
            return Err(Error::ZeroDensity { step });
        }
        total -= log_p;
    }
    Ok(total / targets.len() as f64)
}

/// [`loss_point`] evaluated on raw outputs.
pub fn loss_point_raw(raw_seq: &[RawGmmOutput], targets: &Trajectory) -> Result<f64> {
    let params: Vec<GmmParams> = raw_seq.iter().map(activate).collect::<Result<_>>()?;
    loss_point(&params, targets)
}

/// Gradient of [`loss_point_raw`] with respect to every raw value, in the
/// same layout as the inputs (one `6M` vector per step).
pub fn loss_point_grad(raw_seq: &[RawGmmOutput], targets: &Trajectory) -> Result<Vec<Vec<f64>>> {
    check_steps(raw_seq.len(), targets)?;
    let scale = -1.0 / targets.len() as f64;
    let mut out = Vec::with_capacity(raw_seq.len());
    for (step, (raw, p)) in raw_seq.iter().zip(targets.points()).enumerate() {
        let params = activate(raw)?;
        let m = params.components();
        let logs = params.weighted_log_pdfs(p.x, p.y);
        let log_p = log_sum_exp(&logs);
        if !(log_p >= DENSITY_FLOOR.ln()) {
            return Err(Error::ZeroDensity { step });
        }
        let mut g = vec![0.0; 6 * m];
        for i in 0..m {
            let resp = (logs[i] - log_p).exp();
            let (sx, sy, r) = (params.sigma_x[i], params.sigma_y[i], params.rho[i]);
            let q = 1.0 - r * r;
            let zx = (p.x - params.mu_x[i]) / sx;
            let zy = (p.y - params.mu_y[i]) / sy;
            let z = zx * zx + zy * zy - 2.0 * r * zx * zy;

            let d_mu_x = (zx - r * zy) / (q * sx);
            let d_mu_y = (zy - r * zx) / (q * sy);
            let d_log_sx = -1.0 + zx * (zx - r * zy) / q;
            let d_log_sy = -1.0 + zy * (zy - r * zx) / q;
            let d_rho = r / q + zx * zy / q - r * z / (q * q);
            let raw_rho = raw.block(5)[i];
            let tanh = raw_rho.tanh();
            let d_raw_rho = if tanh.abs() > RHO_LIMIT {
                0.0
            } else {
                1.0 - tanh * tanh
            };

            g[i] = scale * (resp - params.pi[i]);
            g[m + i] = scale * resp * d_mu_x;
            g[2 * m + i] = scale * resp * d_mu_y;
            g[3 * m + i] = scale * resp * d_log_sx;
            g[4 * m + i] = scale * resp * d_log_sy;
            g[5 * m + i] = scale * resp * d_rho * d_raw_rho;
        }
        out.push(g);
    }
    Ok(out)
}

/// Draw one point: pick a component by weight, then a correlated normal.
pub fn sample(params: &GmmParams, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(params, &mut rng)
}

pub fn sample_with<R: Rng + ?Sized>(params: &GmmParams, rng: &mut R) -> (f64, f64) {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut pick = params.components() - 1;
    for (i, p) in params.pi.iter().enumerate() {
        acc += p;
        if u < acc {
            pick = i;
            break;
        }
    }
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    let r = params.rho[pick];
    (
        params.mu_x[pick] + params.sigma_x[pick] * z1,
        params.mu_y[pick] + params.sigma_y[pick] * (r * z1 + (1.0 - r * r).sqrt() * z2),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlLogits(pub [f64; 4]);

/// Softmax cross-entropy of the control logits against the target label.
pub fn loss_label(q: &ControlLogits, target: Control) -> f64 {
    log_sum_exp(&q.0) - q.0[target.index()]
}

/// Header line, then one step per line holding the `6M` raw values.
pub fn serialize_gmm(raw_seq: &[RawGmmOutput]) -> String {
    let mut out = format!("{GMM_HEADER}\n");
    for raw in raw_seq {
        let line: Vec<String> = raw.values.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn parse_gmm(text: &str) -> Result<Vec<RawGmmOutput>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim_end() == GMM_HEADER => {}
        _ => {
            return Err(Error::MalformedLine {
                line: 1,
                reason: format!("expected header {GMM_HEADER:?}"),
            })
        }
    }
    let mut steps: Vec<RawGmmOutput> = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let values = trimmed
            .split_whitespace()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::MalformedLine {
                    line,
                    reason: format!("non-numeric value {f:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let step = RawGmmOutput::new(values).map_err(|e| Error::MalformedLine {
            line,
            reason: e.to_string(),
        })?;
        if let Some(first) = steps.first() {
            if first.components() != step.components() {
                return Err(Error::MalformedLine {
                    line,
                    reason: "component count differs from the first step".into(),
                });
            }
        }
        steps.push(step);
    }
    Ok(steps)
}
