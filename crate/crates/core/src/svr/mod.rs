//! Epsilon-insensitive support vector regression trained with SMO.
//!
//! The dual is solved in the doubled form over `beta = [alpha; alpha*]`:
//! minimize `0.5 beta^T Q beta + p^T beta` with `0 <= beta <= C` and
//! `y^T beta = 0`, where `y = [+1; -1]`, `p = [eps - z; eps + z]` and
//! `Q_st = y_s y_t K(x_s, x_t)`. Working pairs use second-order selection.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::{parse_error, read_to_string, write_atomic};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    /// RBF with `gamma = 1 / dim`.
    pub fn rbf_for_dim(dim: usize) -> Self {
        Kernel::Rbf {
            gamma: 1.0 / dim.max(1) as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrConfig {
    /// `None` means RBF with `gamma = 1 / dim`.
    pub kernel: Option<Kernel>,
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            kernel: None,
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

impl SvrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!("SVR C must be positive, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("SVR epsilon must be non-negative, got {}", self.epsilon)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::invalid("SVR tolerance must be positive"));
        }
        if let Some(Kernel::Rbf { gamma }) = self.kernel {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::invalid(format!("RBF gamma must be positive, got {gamma}")));
            }
        }
        Ok(())
    }
}

/// `f(x) = sum_i coef_i K(sv_i, x) + bias`, with `coef_i = alpha_i - alpha*_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub kernel: Kernel,
    pub c: f64,
    pub epsilon: f64,
    pub support_vectors: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

#[derive(Clone, Debug)]
pub struct SvrTraining {
    pub model: SvrModel,
    /// `alpha - alpha*` for every training point, support or not.
    pub dual_coefficients: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
}

const TAU: f64 = 1e-12;

pub fn train_svr(features: &[Vec<f64>], targets: &[f64], config: &SvrConfig) -> Result<SvrTraining> {
    config.validate()?;
    let n = features.len();
    if n != targets.len() {
        return Err(Error::shape(
            "train_svr",
            format!("{n} feature rows but {} targets", targets.len()),
        ));
    }
    if n < 2 {
        return Err(Error::invalid("SVR needs at least two training points"));
    }
    let dim = features[0].len();
    if features.iter().any(|r| r.len() != dim) {
        return Err(Error::shape("train_svr", "ragged feature rows"));
    }
    if features.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("SVR training data"));
    }
    let kernel = config.kernel.unwrap_or_else(|| Kernel::rbf_for_dim(dim));
    let c = config.c;

    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&features[i], &features[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let l = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let point = |t: usize| if t < n { t } else { t - n };
    let q = |s: usize, t: usize| sign(s) * sign(t) * k[point(s) * n + point(t)];
    let qd = |t: usize| k[point(t) * n + point(t)];

    let mut beta = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| {
            if t < n {
                config.epsilon - targets[t]
            } else {
                config.epsilon + targets[t - n]
            }
        })
        .collect();

    let is_upper = |b: f64| b >= c;
    let is_lower = |b: f64| b <= 0.0;
    let mut iterations = 0;
    let gap = loop {
        // Working set selection, second-order variant.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            let in_up = if sign(t) > 0.0 { !is_upper(beta[t]) } else { !is_lower(beta[t]) };
            if in_up && -sign(t) * grad[t] >= gmax {
                gmax = -sign(t) * grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..l {
                let in_low = if sign(t) > 0.0 { !is_lower(beta[t]) } else { !is_upper(beta[t]) };
                if !in_low {
                    continue;
                }
                let yg = sign(t) * grad[t];
                gmax2 = gmax2.max(yg);
                let diff = gmax + yg;
                if diff > 0.0 {
                    let mut quad = qd(i) + qd(t) - 2.0 * sign(i) * sign(t) * q(i, t);
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -(diff * diff) / quad;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let gap = gmax + gmax2;
        let (Some(i), Some(j)) = (i_sel, j_sel) else { break gap.max(0.0) };
        if gap < config.tol {
            break gap;
        }
        if iterations >= config.max_iter {
            return Err(Error::NotConverged { iterations, gap });
        }
        iterations += 1;

        let (old_i, old_j) = (beta[i], beta[j]);
        let qij = q(i, j);
        if sign(i) != sign(j) {
            let mut quad = qd(i) + qd(j) + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
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
            let mut quad = qd(i) + qd(j) - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
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
        let (di, dj) = (beta[i] - old_i, beta[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(i, t) * di + q(j, t) * dj;
        }
    };

    // Bias: average over free variables, otherwise the midpoint of the
    // feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free) = (0.0, 0usize);
    for t in 0..l {
        let yg = sign(t) * grad[t];
        if is_upper(beta[t]) {
            if sign(t) < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if is_lower(beta[t]) {
            if sign(t) > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };

    let dual: Vec<f64> = (0..n).map(|i| beta[i] - beta[i + n]).collect();
    let (support_vectors, coefficients) = dual
        .iter()
        .enumerate()
        .filter(|(_, &d)| d != 0.0)
        .map(|(i, &d)| (features[i].clone(), d))
        .unzip();
    log::debug!("svr converged after {iterations} iterations (gap {gap:.2e}, {free} free)");
    Ok(SvrTraining {
        model: SvrModel {
            kernel,
            c,
            epsilon: config.epsilon,
            support_vectors,
            coefficients,
            bias: -rho,
        },
        dual_coefficients: dual,
        iterations,
        gap,
    })
}

impl SvrModel {
    pub fn num_support_vectors(&self) -> usize {
        self.support_vectors.len()
    }

    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    /// Raw decision value, not clamped.
    pub fn predict_one(&self, x: &[f64]) -> Result<f64> {
        if let Some(d) = self.dim() {
            if x.len() != d {
                return Err(Error::shape("svr predict", format!("expected {d} features, got {}", x.len())));
            }
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias)
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }

    /// Text export: a header, then one `coef<TAB>v1 v2 ...` line per
    /// support vector.
    pub fn to_text(&self) -> String {
        let mut s = String::from("knowattn-svr 1\n");
        match self.kernel {
            Kernel::Linear => s.push_str("kernel linear\n"),
            Kernel::Rbf { gamma } => writeln!(s, "kernel rbf {gamma}").unwrap(),
        }
        writeln!(s, "c {}\nepsilon {}\nbias {}\nsv {}", self.c, self.epsilon, self.bias, self.coefficients.len())
            .unwrap();
        for (sv, c) in self.support_vectors.iter().zip(&self.coefficients) {
            let vals: Vec<String> = sv.iter().map(|v| v.to_string()).collect();
            writeln!(s, "{c}\t{}", vals.join(" ")).unwrap();
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut next = |want: &str| -> Result<(usize, Vec<String>)> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| parse_error(path, 0, format!("missing `{want}` line")))?;
            let parts: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if parts.first().map(String::as_str) != Some(want) {
                return Err(parse_error(path, no + 1, format!("expected `{want}`")));
            }
            Ok((no + 1, parts))
        };
        let num = |no: usize, s: Option<&String>| -> Result<f64> {
            s.and_then(|v| v.parse().ok())
                .ok_or_else(|| parse_error(path, no, "bad number"))
        };
        let (no, header) = next("knowattn-svr")?;
        if header.get(1).map(String::as_str) != Some("1") {
            return Err(parse_error(path, no, "unsupported svr format version"));
        }
        let (no, kernel) = next("kernel")?;
        let kernel = match kernel.get(1).map(String::as_str) {
            Some("linear") => Kernel::Linear,
            Some("rbf") => Kernel::Rbf { gamma: num(no, kernel.get(2))? },
            _ => return Err(parse_error(path, no, "unknown kernel")),
        };
        let (no, c) = next("c")?;
        let c = num(no, c.get(1))?;
        let (no, e) = next("epsilon")?;
        let epsilon = num(no, e.get(1))?;
        let (no, b) = next("bias")?;
        let bias = num(no, b.get(1))?;
        let (no, sv) = next("sv")?;
        let count = num(no, sv.get(1))? as usize;
        let mut support_vectors = Vec::with_capacity(count);
        let mut coefficients = Vec::with_capacity(count);
        for (no, line) in text.lines().enumerate().skip(no) {
            let (coef, vals) = line
                .split_once('\t')
                .ok_or_else(|| parse_error(path, no + 1, "expected `coef<TAB>values`"))?;
            coefficients.push(
                coef.parse()
                    .map_err(|_| parse_error(path, no + 1, "bad coefficient"))?,
            );
            let row: std::result::Result<Vec<f64>, _> = vals.split_whitespace().map(str::parse).collect();
            support_vectors.push(row.map_err(|_| parse_error(path, no + 1, "bad support vector"))?);
        }
        if support_vectors.len() != count {
            return Err(parse_error(path, 0, format!("expected {count} support vectors, found {}", support_vectors.len())));
        }
        Ok(Self {
            kernel,
            c,
            epsilon,
            support_vectors,
            coefficients,
            bias,
        })
    }
}
