//! Bounded Levenberg–Marquardt with a central-difference Jacobian.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A fit parameter with its starting value and box bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Typical magnitude, used for finite-difference steps near zero.
    pub scale: f64,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            scale: value.abs().max(1e-300),
        }
    }

    pub fn bounded(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost reduction below which an accepted step ends the fit.
    pub cost_tolerance: f64,
    /// Scaled gradient norm below which the fit has converged.
    pub gradient_tolerance: f64,
    /// Relative parameter step below which the fit has converged.
    pub step_tolerance: f64,
    pub relative_step: f64,
    /// Damping of the first step; zero tries a Gauss–Newton step first.
    pub initial_damping: f64,
    /// Smallest eigenvalue of the column-normalized normal matrix, relative
    /// to the largest, that still counts as full rank.
    pub rank_tolerance: f64,
    /// A parameter whose full typical scale moves the weighted residuals by
    /// less than this (in units of σ) is unidentifiable.
    pub sensitivity_tolerance: f64,
    /// Scale the parameter covariance by the reduced χ² (for weights known
    /// only up to a common factor).
    pub scale_covariance: bool,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            cost_tolerance: 1e-12,
            gradient_tolerance: 1e-10,
            step_tolerance: 1e-12,
            relative_step: 1e-6,
            initial_damping: 0.0,
            rank_tolerance: 1e-12,
            sensitivity_tolerance: 1e-3,
            scale_covariance: true,
        }
    }
}

/// Named slice of the residual vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualTrace {
    pub name: String,
    pub residuals: Vec<f64>,
    pub whiteness: Option<Whiteness>,
}

/// Ljung–Box portmanteau statistic of a residual trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Whiteness {
    pub statistic: f64,
    pub lags: usize,
    /// 99% quantile of χ² with `lags` degrees of freedom.
    pub threshold: f64,
    pub white: bool,
}

/// Result of a least-squares fit. Values are authoritative only when
/// `converged` is true.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub uncertainties: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Σ r² of the weighted residuals at the solution.
    pub cost: f64,
    pub reduced_chi2: f64,
    pub n_data: usize,
    pub iterations: usize,
    pub converged: bool,
    pub message: String,
    pub gradient_norm: f64,
    /// Cost after every accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
    pub traces: Vec<ResidualTrace>,
}

impl FitReport {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.values[i])
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.uncertainties[i])
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Splits the single residual trace into consecutive named pieces.
    pub fn split_traces(&mut self, pieces: &[(String, usize)]) -> Result<()> {
        let all: Vec<f64> = self
            .traces
            .iter()
            .flat_map(|t| t.residuals.iter().copied())
            .collect();
        if pieces.iter().map(|p| p.1).sum::<usize>() != all.len() {
            return Err(Error::input(
                "trace lengths do not add up to the residual count",
            ));
        }
        let mut at = 0;
        self.traces = pieces
            .iter()
            .map(|(name, len)| {
                let r = all[at..at + len].to_vec();
                at += len;
                ResidualTrace {
                    name: name.clone(),
                    whiteness: ljung_box(&r),
                    residuals: r,
                }
            })
            .collect();
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Ljung–Box statistic with min(20, n/5) lags; `None` for traces too short
/// to test.
pub fn ljung_box(r: &[f64]) -> Option<Whiteness> {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let n = r.len();
    let lags = (n / 5).min(20);
    if lags < 1 {
        return None;
    }
    let mean = r.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = r.iter().map(|x| x - mean).collect();
    let c0: f64 = d.iter().map(|x| x * x).sum();
    if c0 == 0.0 {
        return None;
    }
    let nf = n as f64;
    let q = (1..=lags)
        .map(|k| {
            let ck: f64 = (0..n - k).map(|i| d[i] * d[i + k]).sum();
            (ck / c0).powi(2) / (nf - k as f64)
        })
        .sum::<f64>()
        * nf
        * (nf + 2.0);
    let threshold = ChiSquared::new(lags as f64).ok()?.inverse_cdf(0.99);
    Some(Whiteness {
        statistic: q,
        lags,
        threshold,
        white: q < threshold,
    })
}

fn evaluate(
    residuals: &(impl Fn(&[f64]) -> Result<Vec<f64>> + Sync),
    p: &[f64],
    n: usize,
) -> Result<DVector<f64>> {
    let r = residuals(p)?;
    if r.len() != n {
        return Err(Error::input(format!(
            "residual function returned {} values, expected {n}",
            r.len()
        )));
    }
    if let Some(i) = r.iter().position(|x| !x.is_finite()) {
        return Err(Error::Unphysical(format!(
            "residual {i} is not finite at {p:?}"
        )));
    }
    Ok(DVector::from_vec(r))
}

fn jacobian(
    residuals: &(impl Fn(&[f64]) -> Result<Vec<f64>> + Sync),
    params: &[Parameter],
    p: &[f64],
    n: usize,
    rel: f64,
) -> Result<DMatrix<f64>> {
    let cols: Vec<DVector<f64>> = (0..p.len())
        .into_par_iter()
        .map(|i| {
            let h = rel * p[i].abs().max(params[i].scale.abs());
            let mut hi = p.to_vec();
            let mut lo = p.to_vec();
            hi[i] += h;
            lo[i] -= h;
            let rh = evaluate(residuals, &hi, n)?;
            let rl = evaluate(residuals, &lo, n)?;
            Ok((rh - rl) / (2.0 * h))
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// Parameters spanning near-null directions of JᵀJ, or an empty list.
fn degenerate_directions(
    jtj: &DMatrix<f64>,
    params: &[Parameter],
    opts: &LmOptions,
) -> Vec<String> {
    let d: Vec<f64> = (0..jtj.nrows()).map(|i| jtj[(i, i)].sqrt()).collect();
    let tol = opts.rank_tolerance;
    let mut zero_cols = Vec::new();
    let mut norm = jtj.clone();
    for i in 0..norm.nrows() {
        for j in 0..norm.ncols() {
            if d[i] > 0.0 && d[j] > 0.0 {
                norm[(i, j)] /= d[i] * d[j];
            } else {
                norm[(i, j)] = 0.0;
            }
        }
        if d[i] * params[i].scale.abs() < opts.sensitivity_tolerance {
            zero_cols.push(i);
        }
    }
    let eig = SymmetricEigen::new(norm);
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut out: Vec<usize> = zero_cols;
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev <= tol * max {
            let v = eig.eigenvectors.column(k);
            for (i, &c) in v.iter().enumerate() {
                if c.abs() > 0.3 && !out.contains(&i) {
                    out.push(i);
                }
            }
        }
    }
    out.sort_unstable();
    out.into_iter().map(|i| params[i].name.clone()).collect()
}

/// Minimizes Σ r(p)² over the box defined by `params`. `residuals` returns
/// weighted residuals (model − data)/σ.
pub fn lm_fit(
    residuals: impl Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    params: &[Parameter],
    opts: &LmOptions,
) -> Result<FitReport> {
    if params.is_empty() {
        return Err(Error::input("no fit parameters"));
    }
    for q in params {
        if !q.value.is_finite() {
            return Err(Error::param(&q.name, "initial value is not finite"));
        }
        if !(q.lower <= q.value && q.value <= q.upper) {
            return Err(Error::param(
                &q.name,
                format!(
                    "initial value {} outside [{}, {}]",
                    q.value, q.lower, q.upper
                ),
            ));
        }
    }
    let names: Vec<String> = params.iter().map(|q| q.name.clone()).collect();
    let np = params.len();
    let mut p: Vec<f64> = params.iter().map(|q| q.value).collect();
    let n = residuals(&p)?.len();
    if n < np {
        return Err(Error::InsufficientSamples { needed: np, got: n });
    }
    let mut r = evaluate(&residuals, &p, n)?;
    let mut cost = r.norm_squared();
    let mut history = vec![cost];
    let mut lambda = opts.initial_damping;
    let mut iterations = 0;
    let mut converged = false;
    let mut message = String::from("maximum iterations reached");
    let mut j = jacobian(&residuals, params, &p, n, opts.relative_step)?;
    let mut gradient_norm;

    loop {
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        // Scale-free gradient test: cosine between r and each Jacobian column.
        // Parameters held at a bound by a gradient pointing outward.
        let pinned: Vec<bool> = (0..np)
            .map(|i| {
                (p[i] <= params[i].lower && g[i] > 0.0) || (p[i] >= params[i].upper && g[i] < 0.0)
            })
            .collect();
        gradient_norm = (0..np)
            .filter(|&i| !pinned[i])
            .map(|i| {
                let cn = j.column(i).norm();
                if cn == 0.0 || cost == 0.0 {
                    0.0
                } else {
                    g[i].abs() / (cn * cost.sqrt())
                }
            })
            .fold(0.0, f64::max);
        if cost == 0.0 || gradient_norm < opts.gradient_tolerance {
            converged = true;
            message = "gradient below tolerance".into();
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;
        let diag: Vec<f64> = (0..np).map(|i| jtj[(i, i)]).collect();
        if diag.contains(&0.0) {
            return Err(Error::RankDeficient {
                directions: degenerate_directions(&jtj, params, opts),
            });
        }
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            let mut rhs = -&g;
            for i in 0..np {
                a[(i, i)] += lambda * diag[i];
                if pinned[i] {
                    for k in 0..np {
                        a[(i, k)] = 0.0;
                        a[(k, i)] = 0.0;
                    }
                    a[(i, i)] = 1.0;
                    rhs[i] = 0.0;
                }
            }
            let Some(chol) = a.cholesky() else {
                lambda = if lambda == 0.0 { 1e-3 } else { lambda * 10.0 };
                continue;
            };
            let step = chol.solve(&rhs);
            let trial: Vec<f64> = (0..np).map(|i| params[i].clamp(p[i] + step[i])).collect();
            let rt = evaluate(&residuals, &trial, n)?;
            let ct = rt.norm_squared();
            if ct <= cost {
                let rel_step = (0..np)
                    .map(|i| (trial[i] - p[i]).abs() / p[i].abs().max(params[i].scale.abs()))
                    .fold(0.0, f64::max);
                let rel_cost = (cost - ct) / cost.max(f64::MIN_POSITIVE);
                p = trial;
                r = rt;
                cost = ct;
                history.push(cost);
                lambda = if lambda < 1e-9 { 0.0 } else { lambda / 3.0 };
                accepted = true;
                if rel_cost < opts.cost_tolerance || rel_step < opts.step_tolerance {
                    converged = true;
                    message = if rel_step < opts.step_tolerance {
                        "step below tolerance".into()
                    } else {
                        "cost reduction below tolerance".into()
                    };
                }
                break;
            }
            lambda = if lambda == 0.0 { 1e-3 } else { lambda * 4.0 };
        }
        if !accepted {
            // No downhill step even at heavy damping: at a (bounded) minimum.
            converged = true;
            message = "no further decrease possible".into();
            break;
        }
        j = jacobian(&residuals, params, &p, n, opts.relative_step)?;
        if converged {
            break;
        }
    }

    let jtj = j.transpose() * &j;
    let degenerate = degenerate_directions(&jtj, params, opts);
    if !degenerate.is_empty() {
        return Err(Error::RankDeficient {
            directions: degenerate,
        });
    }
    let dof = n.saturating_sub(np).max(1);
    let reduced_chi2 = cost / dof as f64;
    let inv = jtj
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient {
            directions: names.clone(),
        })?;
    let factor = if opts.scale_covariance {
        reduced_chi2
    } else {
        1.0
    };
    let cov = inv * factor;
    let uncertainties = (0..np).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    let covariance = (0..np)
        .map(|i| (0..np).map(|k| cov[(i, k)]).collect())
        .collect();
    let residuals: Vec<f64> = r.iter().copied().collect();
    Ok(FitReport {
        names,
        values: p,
        uncertainties,
        covariance,
        cost,
        reduced_chi2,
        n_data: n,
        iterations,
        converged,
        message,
        gradient_norm,
        cost_history: history,
        traces: vec![ResidualTrace {
            name: "data".into(),
            whiteness: ljung_box(&residuals),
            residuals,
        }],
    })
}
