//! Epsilon-SVR with an RBF kernel, trained by sequential minimal optimization.
//!
//! The dual is solved in the usual doubled form: variables `beta = [alpha; alpha*]`
//! with signs `s = [+1; -1]`, minimizing `0.5 beta' Q beta + p' beta` subject to
//! `s' beta = 0` and `0 <= beta <= C`, where `Q_ts = s_t s_u K(x_t, x_u)` and
//! `p = [eps - y; eps + y]`. Each step updates the maximal violating pair.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{LABEL_MAX, LABEL_MIN};

pub const MODEL_MAGIC: &[u8; 4] = b"AVSR";
pub const FORMAT_VERSION: u32 = 1;
const TAU: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SvrError {
    #[error("invalid input: {0}")]
    InputError(String),
    #[error("SMO did not converge within {iterations} iterations (gap {gap:.3e})")]
    ConvergenceError { iterations: usize, gap: f64 },
    #[error("malformed model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    pub max_iter: usize,
}

impl SvrParams {
    /// Defaults for `dim` input features.
    pub fn for_dim(dim: usize) -> Self {
        SvrParams {
            c: 10.0,
            epsilon: 0.1,
            gamma: 1.0 / dim.max(1) as f64,
            tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

pub fn rbf_kernel(x: &[f64], z: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha - alpha*` per support vector.
    pub dual_coeffs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub epsilon: f64,
}

impl SvrModel {
    pub fn predict_raw(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coeffs)
            .map(|(sv, a)| a * rbf_kernel(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    /// Prediction clamped to the annotation range.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.predict_raw(x).clamp(LABEL_MIN, LABEL_MAX)
    }
}

pub fn predict_svr(model: &SvrModel, x: &[f64]) -> f64 {
    model.predict(x)
}

/// Solver output, including the full dual solution for diagnostics.
#[derive(Debug, Clone)]
pub struct SvrFit {
    pub model: SvrModel,
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    /// Dual objective (maximization form) after every SMO step, starting at 0.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

fn validate(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<(), SvrError> {
    if x.len() < 2 {
        return Err(SvrError::InputError(format!("need at least 2 samples, got {}", x.len())));
    }
    if x.len() != y.len() {
        return Err(SvrError::InputError("sample and target counts differ".into()));
    }
    let dim = x[0].len();
    if x.iter().any(|r| r.len() != dim) {
        return Err(SvrError::InputError("ragged sample matrix".into()));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(SvrError::InputError("non-finite value in training data".into()));
    }
    if !(params.c > 0.0 && params.epsilon >= 0.0 && params.gamma > 0.0 && params.tol > 0.0) {
        return Err(SvrError::InputError("need C > 0, epsilon >= 0, gamma > 0, tol > 0".into()));
    }
    Ok(())
}

/// Train one epsilon-SVR.
pub fn train_svr(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<SvrFit, SvrError> {
    validate(x, y, params)?;
    let l = x.len();
    let n = 2 * l;
    let c = params.c;
    let kernel: Vec<Vec<f64>> = (0..l)
        .map(|i| (0..l).map(|j| rbf_kernel(&x[i], &x[j], params.gamma)).collect())
        .collect();
    let sign = |t: usize| if t < l { 1.0 } else { -1.0 };
    let q = |t: usize, u: usize| sign(t) * sign(u) * kernel[t % l][u % l];
    let p: Vec<f64> = (0..n)
        .map(|t| if t < l { params.epsilon - y[t] } else { params.epsilon + y[t - l] })
        .collect();

    let mut beta = vec![0.0; n];
    let mut grad = p.clone();
    let objective = |beta: &[f64], grad: &[f64]| -> f64 {
        -0.5 * beta.iter().zip(grad.iter().zip(&p)).map(|(b, (g, pp))| b * (g + pp)).sum::<f64>()
    };
    let mut objective_trace = vec![0.0];

    let mut iterations = 0;
    loop {
        // Maximal violating pair, lowest index on ties.
        let mut i = None;
        let mut gmax = f64::NEG_INFINITY;
        let mut j = None;
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            let s = sign(t);
            let v = -s * grad[t];
            let up = if s > 0.0 { beta[t] < c } else { beta[t] > 0.0 };
            let low = if s > 0.0 { beta[t] > 0.0 } else { beta[t] < c };
            if up && v > gmax {
                gmax = v;
                i = Some(t);
            }
            if low && v < gmin {
                gmin = v;
                j = Some(t);
            }
        }
        let (Some(i), Some(j)) = (i, j) else { break };
        if gmax - gmin < params.tol {
            break;
        }
        if iterations >= params.max_iter {
            return Err(SvrError::ConvergenceError {
                iterations,
                gap: gmax - gmin,
            });
        }
        iterations += 1;

        let (old_i, old_j) = (beta[i], beta[j]);
        let q_ij = q(i, j);
        let (qd_i, qd_j) = (q(i, i), q(j, j));
        if sign(i) != sign(j) {
            let quad = (qd_i + qd_j + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > 0.0 {
                if beta[j] < 0.0 {
                    beta[j] = 0.0;
                    beta[i] = diff;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = -diff;
            }
            if diff > 0.0 {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else if beta[j] > c {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            let quad = (qd_i + qd_j - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > c {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = sum - c;
                }
            } else if beta[j] < 0.0 {
                beta[j] = 0.0;
                beta[i] = sum;
            }
            if sum > c {
                if beta[j] > c {
                    beta[j] = c;
                    beta[i] = sum - c;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = sum;
            }
        }

        let (d_i, d_j) = (beta[i] - old_i, beta[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * d_i + q(t, j) * d_j;
        }
        objective_trace.push(objective(&beta, &grad));
    }

    // Bias: average over free variables, else midpoint of the feasible interval.
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = sign(t) * grad[t];
        let at_upper = beta[t] >= c;
        let at_lower = beta[t] <= 0.0;
        if at_upper {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_n += 1;
        }
    }
    let rho = if free_n > 0 {
        free_sum / free_n as f64
    } else {
        0.5 * (ub + lb)
    };

    let alpha = beta[..l].to_vec();
    let alpha_star = beta[l..].to_vec();
    let mut support_vectors = Vec::new();
    let mut dual_coeffs = Vec::new();
    for k in 0..l {
        let nu = alpha[k] - alpha_star[k];
        if nu != 0.0 {
            support_vectors.push(x[k].clone());
            dual_coeffs.push(nu);
        }
    }
    Ok(SvrFit {
        model: SvrModel {
            support_vectors,
            dual_coeffs,
            bias: -rho,
            gamma: params.gamma,
            c,
            epsilon: params.epsilon,
        },
        alpha,
        alpha_star,
        objective_trace,
        iterations,
    })
}

/// Largest KKT violation of each training point under the fitted model.
pub fn kkt_residuals(fit: &SvrFit, x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let m = &fit.model;
    (0..x.len())
        .map(|k| {
            let e = y[k] - m.predict_raw(&x[k]);
            let (a, a_s) = (fit.alpha[k], fit.alpha_star[k]);
            let mut v: f64 = 0.0;
            if a < m.c {
                v = v.max(e - m.epsilon);
            }
            if a > 0.0 {
                v = v.max(m.epsilon - e);
            }
            if a_s < m.c {
                v = v.max(-m.epsilon - e);
            }
            if a_s > 0.0 {
                v = v.max(e + m.epsilon);
            }
            v
        })
        .collect()
}

/// Choose `C` from `c_grid` by validation MSE on a seeded hold-out of a quarter of
/// the data (first grid value wins ties), then refit on everything.
pub fn train_svr_with_grid(
    x: &[Vec<f64>],
    y: &[f64],
    base: &SvrParams,
    c_grid: &[f64],
    seed: u64,
) -> Result<(SvrFit, f64), SvrError> {
    let n = x.len();
    let n_val = n / 4;
    if c_grid.len() <= 1 || n_val == 0 || n - n_val < 2 {
        let c = c_grid.first().copied().unwrap_or(base.c);
        let params = SvrParams { c, ..*base };
        return Ok((train_svr(x, y, &params)?, c));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (val_idx, fit_idx) = order.split_at(n_val);
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        (idx.iter().map(|&i| x[i].clone()).collect(), idx.iter().map(|&i| y[i]).collect())
    };
    let (x_fit, y_fit) = pick(fit_idx);
    let (x_val, y_val) = pick(val_idx);

    let mut best: Option<(f64, f64)> = None;
    for &c in c_grid {
        let params = SvrParams { c, ..*base };
        let fit = train_svr(&x_fit, &y_fit, &params)?;
        let mse = x_val
            .iter()
            .zip(&y_val)
            .map(|(xv, yv)| (fit.model.predict_raw(xv) - yv).powi(2))
            .sum::<f64>()
            / n_val as f64;
        if best.is_none_or(|(b, _)| mse < b) {
            best = Some((mse, c));
        }
    }
    let c = best.expect("nonempty grid").1;
    Ok((train_svr(x, y, &SvrParams { c, ..*base })?, c))
}

impl SvrModel {
    /// `AVSR` framing: magic, format version, support-vector count and input
    /// width (u32 LE), then gamma, C, epsilon, bias, the support vectors
    /// row-major and the dual coefficients, all f64 LE.
    pub fn to_bytes(&self) -> Vec<u8> {
        let dim = self.support_vectors.first().map_or(0, Vec::len);
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.support_vectors.len() as u32).to_le_bytes());
        out.extend_from_slice(&(dim as u32).to_le_bytes());
        let scalars = [self.gamma, self.c, self.epsilon, self.bias];
        let values = scalars
            .iter()
            .chain(self.support_vectors.iter().flatten())
            .chain(&self.dual_coeffs);
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SvrError> {
        if bytes.len() < 16 || &bytes[..4] != MODEL_MAGIC {
            return Err(SvrError::Format("missing AVSR header".into()));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
        if word(4) != FORMAT_VERSION as usize {
            return Err(SvrError::Format(format!("unsupported format version {}", word(4))));
        }
        let (count, dim) = (word(8), word(12));
        let expected = 16 + 8 * (4 + count * dim + count);
        if bytes.len() != expected {
            return Err(SvrError::Format(format!("expected {expected} bytes, found {}", bytes.len())));
        }
        let values: Vec<f64> = bytes[16..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let svs = &values[4..4 + count * dim];
        Ok(SvrModel {
            gamma: values[0],
            c: values[1],
            epsilon: values[2],
            bias: values[3],
            support_vectors: (0..count).map(|k| svs[k * dim..(k + 1) * dim].to_vec()).collect(),
            dual_coeffs: values[4 + count * dim..].to_vec(),
        })
    }
}
