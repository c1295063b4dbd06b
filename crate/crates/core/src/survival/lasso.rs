//! L1-penalized Cox fitting: cyclic coordinate descent on the penalized
//! partial likelihood over a descending lambda path, with stratified k-fold
//! cross-validated deviance for lambda selection.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::survival::cox::CoxData;
use crate::survival::metrics::{find_threshold, ThresholdSearch};
use crate::survival::{CoxModel, ModelFeature, SurvivalRecord};

#[derive(Debug, Clone)]
pub struct LassoCoxOptions {
    /// Explicit penalty grid (descending); `None` derives a log-spaced grid
    /// from the data.
    pub lambda_grid: Option<Vec<f64>>,
    pub lambda_count: usize,
    pub lambda_min_ratio: f64,
    pub folds: usize,
    pub seed: u64,
    /// Feature names exempt from the L1 penalty (clinical covariates).
    pub unpenalized: Vec<String>,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for LassoCoxOptions {
    fn default() -> Self {
        LassoCoxOptions {
            lambda_grid: None,
            lambda_count: 50,
            lambda_min_ratio: 1e-3,
            folds: 5,
            seed: 0,
            unpenalized: Vec::new(),
            max_sweeps: 10_000,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitDiagnostics {
    /// Features dropped before fitting (constant or entirely missing).
    pub dropped: Vec<String>,
    pub lambda_grid: Vec<f64>,
    /// Cross-validated deviance per grid value; empty when the grid has a
    /// single entry.
    pub cv_deviance: Vec<f64>,
    pub chosen_lambda: f64,
    pub n_nonzero: usize,
    /// Penalized objective after each sweep of the final refit.
    pub objective_trace: Vec<f64>,
    /// max over coordinates of the KKT residual at convergence.
    pub kkt_max_violation: f64,
    pub threshold: Option<ThresholdSearch>,
    pub warnings: Vec<String>,
}

/// Imputed, standardized design aligned with the table columns that
/// survived screening.
struct Design {
    names: Vec<String>,
    penalized: Vec<bool>,
    means: Vec<f64>,
    stds: Vec<f64>,
    medians: Vec<f64>,
    x: Vec<f64>, // n × p standardized, row-major
    p: usize,
}

fn median_of(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

fn prepare(table: &FeatureTable, unpenalized: &[String]) -> Result<(Design, Vec<String>)> {
    for name in unpenalized {
        if table.feature_index(name).is_none() {
            return Err(Error::InvalidInput(format!(
                "unpenalized covariate {name:?} is not a table column"
            )));
        }
    }
    let n = table.n_subjects();
    let mut names = Vec::new();
    let mut penalized = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    let mut medians = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut dropped = Vec::new();

    for (g, name) in table.names().iter().enumerate() {
        let present: Vec<f64> = table.column(g).flatten().collect();
        if present.is_empty() {
            dropped.push(name.clone());
            continue;
        }
        let median = median_of(present.clone());
        let column: Vec<f64> = table
            .column(g)
            .map(|v| v.unwrap_or(median))
            .collect();
        let mean = column.iter().sum::<f64>() / n as f64;
        let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if std == 0.0 {
            dropped.push(name.clone());
            continue;
        }
        names.push(name.clone());
        penalized.push(!unpenalized.contains(name));
        means.push(mean);
        stds.push(std);
        medians.push(median);
        columns.push(column.iter().map(|v| (v - mean) / std).collect());
    }

    if names.is_empty() {
        return Err(Error::Degenerate(
            "no usable features after dropping constant/empty columns".into(),
        ));
    }
    let p = names.len();
    let mut x = vec![0.0; n * p];
    for (g, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            x[i * p + g] = v;
        }
    }
    Ok((
        Design {
            names,
            penalized,
            means,
            stds,
            medians,
            x,
            p,
        },
        dropped,
    ))
}

fn soft_threshold(a: f64, lambda: f64) -> f64 {
    if a > lambda {
        a - lambda
    } else if a < -lambda {
        a + lambda
    } else {
        0.0
    }
}

/// Coordinate-descent state at a fixed lambda. Every coordinate update is
/// accepted only if it does not increase the penalized objective, so the
/// per-sweep objective trace is non-increasing by construction.
struct CdProblem<'a> {
    data: &'a CoxData,
    penalized: &'a [bool],
    lambda: f64,
    beta: Vec<f64>,
    eta: Vec<f64>,
    scratch: Vec<f64>,
    objective: f64,
}

impl<'a> CdProblem<'a> {
    fn new(data: &'a CoxData, penalized: &'a [bool], lambda: f64, beta: Vec<f64>) -> Self {
        let eta = data.eta(&beta);
        let objective = data.neg_log_pl(&eta) / data.n as f64 + penalty(&beta, penalized, lambda);
        CdProblem {
            data,
            penalized,
            lambda,
            beta,
            scratch: vec![0.0; eta.len()],
            eta,
            objective,
        }
    }

    /// One cyclic pass over all coordinates; returns the largest |Δβ|.
    fn sweep(&mut self) -> f64 {
        let n = self.data.n as f64;
        let mut max_delta: f64 = 0.0;
        for g in 0..self.data.p {
            let (grad_raw, hess_raw) = self.data.coord_grad_hess(&self.eta, g);
            let d = grad_raw / n;
            let h = hess_raw / n;
            if !(h > 0.0) || !h.is_finite() {
                continue;
            }
            let target = if self.penalized[g] {
                soft_threshold(h * self.beta[g] - d, self.lambda) / h
            } else {
                self.beta[g] - d / h
            };
            let mut delta = target - self.beta[g];
            if delta == 0.0 {
                continue;
            }
            // backtrack until the penalized objective does not increase
            let mut accepted = false;
            for _ in 0..50 {
                let candidate = self.try_objective(g, delta);
                if candidate <= self.objective + 1e-12 * (1.0 + self.objective.abs()) {
                    // scratch holds the candidate linear predictor
                    std::mem::swap(&mut self.eta, &mut self.scratch);
                    self.beta[g] += delta;
                    self.objective = candidate;
                    accepted = true;
                    break;
                }
                delta *= 0.5;
            }
            if accepted {
                max_delta = max_delta.max(delta.abs());
            }
        }
        max_delta
    }

    /// Penalized objective after moving coordinate `g` by `delta`; the
    /// candidate predictor is left in `scratch`.
    fn try_objective(&mut self, g: usize, delta: f64) -> f64 {
        for i in 0..self.data.n {
            self.scratch[i] = self.eta[i] + delta * self.data.x(i, g);
        }
        let mut pen_sum = 0.0;
        for (k, (&b, &p)) in self.beta.iter().zip(self.penalized).enumerate() {
            if p {
                pen_sum += if k == g { (b + delta).abs() } else { b.abs() };
            }
        }
        let pen = if pen_sum == 0.0 { 0.0 } else { self.lambda * pen_sum };
        self.data.neg_log_pl(&self.scratch) / self.data.n as f64 + pen
    }

    /// Run to convergence; returns the objective after each sweep.
    fn run(&mut self, max_sweeps: usize, tol: f64) -> Vec<f64> {
        let mut trace = Vec::new();
        for _ in 0..max_sweeps {
            let delta = self.sweep();
            trace.push(self.objective);
            if delta < tol {
                break;
            }
        }
        // drop accumulated increment drift before the state is read out
        self.eta = self.data.eta(&self.beta);
        self.objective = self.data.neg_log_pl(&self.eta) / self.data.n as f64
            + penalty(&self.beta, self.penalized, self.lambda);
        trace
    }
}

fn penalty(beta: &[f64], penalized: &[bool], lambda: f64) -> f64 {
    let sum: f64 = beta
        .iter()
        .zip(penalized)
        .filter(|(_, &p)| p)
        .map(|(b, _)| b.abs())
        .sum();
    if sum == 0.0 {
        0.0 // keeps lambda = ∞ well-defined
    } else {
        lambda * sum
    }
}

/// Fit the unpenalized coordinates only (the lambda = ∞ baseline), then
/// report the largest penalized-coordinate gradient: the smallest lambda
/// that keeps every penalized coefficient at zero.
fn lambda_max(data: &CoxData, penalized: &[bool], opts: &LassoCoxOptions) -> (f64, Vec<f64>) {
    let mut problem = CdProblem::new(data, penalized, f64::INFINITY, vec![0.0; data.p]);
    problem.run(opts.max_sweeps, opts.tol);
    let (_, grad) = {
        let eta = data.eta(&problem.beta);
        data.value_and_gradient(&eta)
    };
    let n = data.n as f64;
    let lmax = grad
        .iter()
        .zip(penalized)
        .filter(|(_, &p)| p)
        .map(|(g, _)| (g / n).abs())
        .fold(0.0f64, f64::max);
    (lmax, problem.beta)
}

fn build_grid(lmax: f64, opts: &LassoCoxOptions) -> Vec<f64> {
    if lmax <= 0.0 || !lmax.is_finite() {
        return vec![0.0];
    }
    let count = opts.lambda_count.max(2);
    (0..count)
        .map(|i| lmax * opts.lambda_min_ratio.powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Fit the full descending path, returning beta at every lambda.
fn fit_path(
    data: &CoxData,
    penalized: &[bool],
    grid: &[f64],
    beta0: Vec<f64>,
    opts: &LassoCoxOptions,
) -> Vec<Vec<f64>> {
    let mut betas = Vec::with_capacity(grid.len());
    let mut warm = beta0;
    for &lambda in grid {
        let mut problem = CdProblem::new(data, penalized, lambda, warm.clone());
        problem.run(opts.max_sweeps, opts.tol);
        warm = problem.beta.clone();
        betas.push(problem.beta);
    }
    betas
}

/// Event-stratified fold assignment, deterministic in the seed.
fn stratified_folds(records: &[SurvivalRecord], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events: Vec<usize> = (0..records.len()).filter(|&i| records[i].event).collect();
    let mut censored: Vec<usize> = (0..records.len()).filter(|&i| !records[i].event).collect();
    events.shuffle(&mut rng);
    censored.shuffle(&mut rng);
    let mut fold = vec![0usize; records.len()];
    for (pos, &i) in events.iter().chain(censored.iter()).enumerate() {
        fold[i] = pos % k;
    }
    fold
}

fn subset_data(
    design: &Design,
    records: &[SurvivalRecord],
    keep: &[usize],
) -> Result<(CoxData, Vec<SurvivalRecord>)> {
    let mut x = Vec::with_capacity(keep.len() * design.p);
    let mut recs = Vec::with_capacity(keep.len());
    for &i in keep {
        x.extend_from_slice(&design.x[i * design.p..(i + 1) * design.p]);
        recs.push(records[i].clone());
    }
    let data = CoxData::new(x, design.p, &recs)?;
    Ok((data, recs))
}

/// LASSO-Cox over a feature table. `records` must be row-aligned with the
/// table (see [`super::join_table`]). Features are imputed with training
/// medians and z-scored internally; the penalty is selected by k-fold
/// cross-validated partial-likelihood deviance unless a single-value grid
/// is forced.
pub fn fit_lasso_cox(
    table: &FeatureTable,
    records: &[SurvivalRecord],
    opts: &LassoCoxOptions,
) -> Result<(CoxModel, FitDiagnostics)> {
    if records.len() != table.n_subjects() {
        return Err(Error::InvalidInput(format!(
            "{} records for {} table rows",
            records.len(),
            table.n_subjects()
        )));
    }
    for (s, r) in table.subjects().iter().zip(records) {
        if *s != r.subject {
            return Err(Error::InvalidInput(format!(
                "row order mismatch: table {s:?} vs records {:?}",
                r.subject
            )));
        }
    }
    let n_events = records.iter().filter(|r| r.event).count();
    if n_events < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 events to fit, got {n_events}"
        )));
    }

    let (design, dropped) = prepare(table, &opts.unpenalized)?;
    let mut warnings: Vec<String> = dropped
        .iter()
        .map(|n| format!("dropped degenerate feature {n:?}"))
        .collect();

    let full = CoxData::new(design.x.clone(), design.p, records)?;

    let (grid, baseline) = match &opts.lambda_grid {
        Some(g) => {
            if g.is_empty() || g.iter().any(|&l| l < 0.0 || l.is_nan()) {
                return Err(Error::InvalidInput(
                    "lambda grid must be nonempty and nonnegative".into(),
                ));
            }
            let mut grid = g.clone();
            grid.sort_by(|a, b| b.total_cmp(a));
            grid.dedup();
            (grid, vec![0.0; design.p])
        }
        None => {
            let (lmax, baseline) = lambda_max(&full, &design.penalized, opts);
            (build_grid(lmax, opts), baseline)
        }
    };

    // lambda selection by cross-validated deviance
    let (chosen_lambda, cv_deviance) = if grid.len() == 1 {
        (grid[0], Vec::new())
    } else {
        let k = opts.folds;
        if k < 2 || k > table.n_subjects() {
            return Err(Error::InvalidInput(format!(
                "fold count {k} out of range for {} subjects",
                table.n_subjects()
            )));
        }
        let fold = stratified_folds(records, k, opts.seed);
        let per_fold: Vec<Result<Vec<f64>>> = (0..k)
            .into_par_iter()
            .map(|f| {
                let keep: Vec<usize> = (0..records.len()).filter(|&i| fold[i] != f).collect();
                let (train, _) = subset_data(&design, records, &keep)?;
                let betas = fit_path(&train, &design.penalized, &grid, baseline.clone(), opts);
                // Verweij & van Houwelingen deviance: full-likelihood minus
                // train-likelihood at the fold solution
                Ok(betas
                    .iter()
                    .map(|b| {
                        let dev_full = full.neg_log_pl(&full.eta(b));
                        let dev_train = train.neg_log_pl(&train.eta(b));
                        2.0 * (dev_full - dev_train)
                    })
                    .collect())
            })
            .collect();
        let mut total = vec![0.0; grid.len()];
        for fold_dev in per_fold {
            let fold_dev = fold_dev?;
            for (t, d) in total.iter_mut().zip(fold_dev) {
                *t += d;
            }
        }
        let mut best = 0;
        for i in 1..grid.len() {
            if total[i] < total[best] {
                best = i;
            }
        }
        (grid[best], total)
    };

    // final refit on the full cohort, warm-started down the path
    let upto: Vec<f64> = grid
        .iter()
        .copied()
        .take_while(|&l| l > chosen_lambda)
        .collect();
    let warm = if upto.is_empty() {
        baseline.clone()
    } else {
        fit_path(&full, &design.penalized, &upto, baseline.clone(), opts)
            .pop()
            .unwrap()
    };
    let mut problem = CdProblem::new(&full, &design.penalized, chosen_lambda, warm);
    let objective_trace = problem.run(opts.max_sweeps, opts.tol);
    let beta = problem.beta.clone();

    // KKT residuals of the smooth part against the chosen lambda
    let (_, grad) = full.value_and_gradient(&full.eta(&beta));
    let n = full.n as f64;
    let mut kkt_max_violation: f64 = 0.0;
    for g in 0..design.p {
        if !design.penalized[g] {
            kkt_max_violation = kkt_max_violation.max((grad[g] / n).abs());
        } else if beta[g] != 0.0 {
            kkt_max_violation = kkt_max_violation.max(((grad[g] / n).abs() - chosen_lambda).abs());
        } else {
            kkt_max_violation = kkt_max_violation.max(((grad[g] / n).abs() - chosen_lambda).max(0.0));
        }
    }

    let mut features = Vec::new();
    for g in 0..design.p {
        if beta[g] != 0.0 || !design.penalized[g] {
            features.push(ModelFeature {
                name: design.names[g].clone(),
                coef: beta[g],
                mean: design.means[g],
                std: design.stds[g],
                median: design.medians[g],
                penalized: design.penalized[g],
            });
        }
    }
    let n_nonzero = features.iter().filter(|f| f.coef != 0.0).count();
    if n_nonzero == 0 {
        warnings.push("penalty removed every feature; the model scores all subjects 0".into());
    }

    let mut model = CoxModel {
        features,
        lambda: chosen_lambda,
        threshold: 0.0,
        seed: opts.seed,
    };

    let risks = model.risk_scores(table)?;
    let threshold = match find_threshold(&risks, records) {
        Ok(t) => {
            model.threshold = t.threshold;
            Some(t)
        }
        Err(e) => {
            warnings.push(format!("risk threshold not set: {e}"));
            None
        }
    };

    Ok((
        model,
        FitDiagnostics {
            dropped,
            lambda_grid: grid,
            cv_deviance,
            chosen_lambda,
            n_nonzero,
            objective_trace,
            kkt_max_violation,
            threshold,
            warnings,
        },
    ))
}
