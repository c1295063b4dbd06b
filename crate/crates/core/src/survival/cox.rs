//! Cox partial likelihood with Breslow tie handling: value, gradient, and
//! the per-coordinate quantities consumed by coordinate descent.

use crate::error::{Error, Result};
use crate::survival::SurvivalRecord;

/// Subjects at one distinct time, descending-time order. A walk over groups
/// maintains risk-set sums: every subject of a group joins the risk set
/// before its events contribute.
struct TieGroup {
    members: Vec<usize>,
    events: Vec<usize>,
}

/// Cohort prepared for repeated partial-likelihood evaluation.
pub(crate) struct CoxData {
    pub n: usize,
    pub p: usize,
    x: Vec<f64>, // n × p, row-major
    groups: Vec<TieGroup>,
}

impl CoxData {
    pub fn new(x: Vec<f64>, p: usize, records: &[SurvivalRecord]) -> Result<Self> {
        let n = records.len();
        if x.len() != n * p {
            return Err(Error::InvalidInput(format!(
                "design matrix has {} values, expected {n}×{p}",
                x.len()
            )));
        }
        let n_events = records.iter().filter(|r| r.event).count();
        if n_events == 0 {
            return Err(Error::Degenerate(
                "all subjects censored; the partial likelihood is constant".into(),
            ));
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            records[b]
                .time_days
                .total_cmp(&records[a].time_days)
                .then(a.cmp(&b))
        });

        let mut groups: Vec<TieGroup> = Vec::new();
        for &i in &order {
            let t = records[i].time_days;
            let start_new = match groups.last() {
                Some(g) => records[g.members[0]].time_days != t,
                None => true,
            };
            if start_new {
                groups.push(TieGroup {
                    members: Vec::new(),
                    events: Vec::new(),
                });
            }
            let g = groups.last_mut().unwrap();
            g.members.push(i);
            if records[i].event {
                g.events.push(i);
            }
        }

        Ok(CoxData { n, p, x, groups })
    }

    #[inline]
    pub fn x(&self, i: usize, g: usize) -> f64 {
        self.x[i * self.p + g]
    }

    pub fn eta(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (0..self.p)
                    .map(|g| self.x(i, g) * beta[g])
                    .sum::<f64>()
            })
            .collect()
    }

    /// Negative log partial likelihood (Breslow), shift-stabilized.
    pub fn neg_log_pl(&self, eta: &[f64]) -> f64 {
        let shift = max_eta(eta);
        let mut s0 = 0.0;
        let mut value = 0.0;
        for group in &self.groups {
            for &i in &group.members {
                s0 += (eta[i] - shift).exp();
            }
            if !group.events.is_empty() {
                value += group.events.len() as f64 * (s0.ln() + shift);
                for &i in &group.events {
                    value -= eta[i];
                }
            }
        }
        value
    }

    /// Value and full gradient of the negative log partial likelihood.
    pub fn value_and_gradient(&self, eta: &[f64]) -> (f64, Vec<f64>) {
        let shift = max_eta(eta);
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; self.p];
        let mut value = 0.0;
        let mut grad = vec![0.0; self.p];
        for group in &self.groups {
            for &i in &group.members {
                let w = (eta[i] - shift).exp();
                s0 += w;
                for g in 0..self.p {
                    s1[g] += w * self.x(i, g);
                }
            }
            if !group.events.is_empty() {
                let d = group.events.len() as f64;
                value += d * (s0.ln() + shift);
                for g in 0..self.p {
                    grad[g] += d * s1[g] / s0;
                }
                for &i in &group.events {
                    value -= eta[i];
                    for g in 0..self.p {
                        grad[g] -= self.x(i, g);
                    }
                }
            }
        }
        (value, grad)
    }

    /// Gradient and (diagonal) Hessian entry of the negative log partial
    /// likelihood along coordinate `g`.
    pub fn coord_grad_hess(&self, eta: &[f64], g: usize) -> (f64, f64) {
        let shift = max_eta(eta);
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let mut grad = 0.0;
        let mut hess = 0.0;
        for group in &self.groups {
            for &i in &group.members {
                let w = (eta[i] - shift).exp();
                let xg = self.x(i, g);
                s0 += w;
                s1 += w * xg;
                s2 += w * xg * xg;
            }
            if !group.events.is_empty() {
                let d = group.events.len() as f64;
                let mean = s1 / s0;
                grad += d * mean;
                hess += d * (s2 / s0 - mean * mean);
                for &i in &group.events {
                    grad -= self.x(i, g);
                }
            }
        }
        (grad, hess)
    }
}

fn max_eta(eta: &[f64]) -> f64 {
    eta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn validate_rows(x: &[Vec<f64>], records: &[SurvivalRecord]) -> Result<usize> {
    if x.len() != records.len() {
        return Err(Error::InvalidInput(format!(
            "{} covariate rows for {} survival records",
            x.len(),
            records.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::InvalidInput("empty cohort".into()));
    }
    let p = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != p {
            return Err(Error::InvalidInput(format!(
                "row {i} has {} covariates, expected {p}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite covariate in row {i}"
            )));
        }
    }
    Ok(p)
}

/// Negative log partial likelihood (Breslow ties) and its analytic gradient
/// at `beta`, for complete covariate rows aligned with `records`.
pub fn cox_objective(
    beta: &[f64],
    x: &[Vec<f64>],
    records: &[SurvivalRecord],
) -> Result<(f64, Vec<f64>)> {
    let p = validate_rows(x, records)?;
    if beta.len() != p {
        return Err(Error::InvalidInput(format!(
            "beta has {} entries, expected {p}",
            beta.len()
        )));
    }
    let flat: Vec<f64> = x.iter().flatten().copied().collect();
    let data = CoxData::new(flat, p, records)?;
    let eta = data.eta(beta);
    Ok(data.value_and_gradient(&eta))
}

/// Unpenalized Cox fit by Newton iteration on a single covariate; used for
/// the group hazard ratio. Returns (beta, standard error).
pub(crate) fn newton_univariate(
    x: &[f64],
    records: &[SurvivalRecord],
) -> Result<(f64, f64)> {
    let data = CoxData::new(x.to_vec(), 1, records)?;
    let mut beta = 0.0;
    for _ in 0..200 {
        let eta: Vec<f64> = x.iter().map(|&v| v * beta).collect();
        let (grad, hess) = data.coord_grad_hess(&eta, 0);
        if hess <= 0.0 || !hess.is_finite() {
            return Err(Error::Degenerate(
                "singular information in univariate Cox fit".into(),
            ));
        }
        let step = grad / hess;
        beta -= step.clamp(-2.0, 2.0);
        if step.abs() < 1e-12 {
            break;
        }
    }
    let eta: Vec<f64> = x.iter().map(|&v| v * beta).collect();
    let (_, hess) = data.coord_grad_hess(&eta, 0);
    if hess <= 0.0 || !hess.is_finite() {
        return Err(Error::Degenerate(
            "singular information in univariate Cox fit".into(),
        ));
    }
    Ok((beta, (1.0 / hess).sqrt()))
}
