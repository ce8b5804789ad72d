//! L2-regularised logistic regression, optionally with a subgroup
//! mean-probability penalty.
//!
//! The objective is minimised by full-batch L-BFGS with an Armijo
//! backtracking line search, so every accepted step strictly lowers the
//! loss and a fit is bit-for-bit reproducible for the same input.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::data::{ClassLabel, Dataset, Instance, SubgroupKey};
use crate::error::{Error, Result};

const MODEL_SCHEMA_VERSION: u32 = 1;
const LBFGS_MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub l2_strength: f64,
    pub max_iterations: usize,
    /// Stop once the gradient infinity-norm falls below this.
    pub tolerance: f64,
    /// Unused by the deterministic full-batch solver; kept for cache keys.
    pub seed: u64,
    /// Weight each class by `n / (2 n_class)` so the loss targets balanced accuracy.
    pub balance_classes: bool,
    /// Append sensitive-attribute indicators to the features.
    pub sensitive_inputs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_strength: 1.0,
            max_iterations: 10_000,
            tolerance: 1e-6,
            seed: 0,
            balance_classes: true,
            sensitive_inputs: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.l2_strength >= 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bad training config: l2_strength={} tolerance={}",
                self.l2_strength, self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    pub fn identity(dim: usize) -> Self {
        Standardization { mean: vec![0.0; dim], scale: vec![1.0; dim] }
    }

    /// Column means and population standard deviations; constant columns get scale 1.
    pub fn fit(dataset: &Dataset) -> Self {
        let rows: Vec<&[f64]> = dataset.instances().iter().map(|i| &*i.features).collect();
        Self::fit_rows(&rows, dataset.feature_dim())
    }

    fn fit_rows<R: AsRef<[f64]>>(rows: &[R], d: usize) -> Self {
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for row in rows {
            for (m, x) in mean.iter_mut().zip(row.as_ref()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in rows {
            for ((v, x), m) in var.iter_mut().zip(row.as_ref()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardization { mean, scale }
    }

    #[inline]
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, &x), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.scale) {
            *o = (x - m) / s;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub standardization: Standardization,
    /// Indicator inputs `(attribute index, value)` appended after the features.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sensitive_inputs: Vec<(usize, String)>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    schema_version: u32,
    model: LogisticModel,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl LogisticModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Affine score on standardised features.
    #[inline]
    pub fn decision(&self, features: &[f64]) -> f64 {
        let st = &self.standardization;
        let mut z = self.bias;
        for (((&x, &w), &m), &s) in features.iter().zip(&self.weights).zip(&st.mean).zip(&st.scale) {
            z += w * (x - m) / s;
        }
        z
    }

    /// Favorable-class probability, kept strictly inside (0, 1).
    pub fn predict_proba(&self, instance: &Instance) -> Result<f64> {
        self.proba_features(&model_input(instance, &self.sensitive_inputs)?)
    }

    /// Probability for a raw input row (features then sensitive indicators).
    pub fn proba_features(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: features.len() });
        }
        let p = sigmoid(self.decision(features));
        Ok(p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
    }

    /// Favorable iff the probability is strictly above `cutoff`.
    pub fn predict(&self, instance: &Instance, cutoff: f64) -> Result<ClassLabel> {
        Ok(ClassLabel::from_favorable(self.predict_proba(instance)? > cutoff))
    }

    pub fn predict_proba_all(&self, dataset: &Dataset) -> Result<Vec<f64>> {
        dataset.instances().iter().map(|i| self.predict_proba(i)).collect()
    }

    pub fn predict_all(&self, dataset: &Dataset, cutoff: f64) -> Result<Vec<ClassLabel>> {
        dataset.instances().iter().map(|i| self.predict(i, cutoff)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument { schema_version: MODEL_SCHEMA_VERSION, model: self.clone() })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Config(format!("model schema version {} unsupported", doc.schema_version)));
        }
        Ok(doc.model)
    }
}

/// One indicator per sensitive value except each attribute's first.
fn sensitive_columns(dataset: &Dataset) -> Vec<(usize, String)> {
    dataset
        .sensitive_schema()
        .iter()
        .enumerate()
        .flat_map(|(a, attr)| attr.values.iter().skip(1).map(move |v| (a, v.clone())))
        .collect()
}

fn model_input<'a>(instance: &'a Instance, columns: &[(usize, String)]) -> Result<Cow<'a, [f64]>> {
    if columns.is_empty() {
        return Ok(Cow::Borrowed(&instance.features));
    }
    let mut row = instance.features.to_vec();
    for (a, v) in columns {
        let value =
            instance.sensitive.values().get(*a).ok_or_else(|| {
                Error::InvalidInput(format!("instance {} lacks sensitive attribute {a}", instance.id))
            })?;
        row.push(if value == v { 1.0 } else { 0.0 });
    }
    Ok(Cow::Owned(row))
}

/// Squared gap between the mean predicted probabilities of two groups.
struct FairnessTerm {
    weight: f64,
    /// `true` for members of the second group.
    second: Vec<bool>,
    sizes: [f64; 2],
}

/// Standardised design matrix plus everything the loss needs.
pub(crate) struct Problem {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Per-instance loss weight, already divided by n.
    c: Vec<f64>,
    n: usize,
    d: usize,
    l2: f64,
    fairness: Option<FairnessTerm>,
}

impl Problem {
    fn new(dataset: &Dataset, inputs: &[Cow<[f64]>], std: &Standardization, config: &TrainConfig) -> Self {
        let n = dataset.len();
        let d = std.mean.len();
        let mut x = vec![0.0; n * d];
        for (row, input) in x.chunks_mut(d.max(1)).zip(inputs) {
            std.apply_into(input, &mut row[..d]);
        }
        let y: Vec<f64> =
            dataset.instances().iter().map(|i| if i.true_class.is_favorable() { 1.0 } else { 0.0 }).collect();
        let pos = y.iter().sum::<f64>();
        let neg = n as f64 - pos;
        let c = y
            .iter()
            .map(|&yi| {
                let w = if config.balance_classes { n as f64 / (2.0 * if yi > 0.5 { pos } else { neg }) } else { 1.0 };
                w / n as f64
            })
            .collect();
        Problem { x, y, c, n, d, l2: config.l2_strength / n as f64, fairness: None }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    /// Loss at `theta = [w; b]`, writing the gradient into `grad`.
    pub(crate) fn loss_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.d;
        let (w, b) = (&theta[..d], theta[d]);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let mut fair_acc = self.fairness.as_ref().map(|_| {
            // [sum sigma; sum sigma' * x; sum sigma'] per group
            [(0.0, vec![0.0; d + 1]), (0.0, vec![0.0; d + 1])]
        });
        for i in 0..self.n {
            let xi = self.row(i);
            let z = b + xi.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
            let p = sigmoid(z);
            loss += self.c[i] * (softplus(z) - self.y[i] * z);
            let r = self.c[i] * (p - self.y[i]);
            for (g, &xv) in grad[..d].iter_mut().zip(xi) {
                *g += r * xv;
            }
            grad[d] += r;
            if let (Some(acc), Some(term)) = (fair_acc.as_mut(), self.fairness.as_ref()) {
                let slot = &mut acc[term.second[i] as usize];
                slot.0 += p;
                let dp = p * (1.0 - p);
                for (g, &xv) in slot.1[..d].iter_mut().zip(xi) {
                    *g += dp * xv;
                }
                slot.1[d] += dp;
            }
        }
        let mut reg = 0.0;
        for (g, &wj) in grad[..d].iter_mut().zip(w) {
            *g += self.l2 * wj;
            reg += wj * wj;
        }
        loss += 0.5 * self.l2 * reg;
        if let (Some(acc), Some(term)) = (fair_acc, self.fairness.as_ref()) {
            let gap = acc[0].0 / term.sizes[0] - acc[1].0 / term.sizes[1];
            loss += term.weight * gap * gap;
            let k = 2.0 * term.weight * gap;
            for (g, (a, b)) in grad.iter_mut().zip(acc[0].1.iter().zip(&acc[1].1)) {
                *g += k * (a / term.sizes[0] - b / term.sizes[1]);
            }
        }
        loss
    }
}

fn check_trainable(train: &Dataset) -> Result<()> {
    if !train.has_both_classes() {
        return Err(Error::SingleClass(format!("{} instances, {} favorable", train.len(), train.positive_count())));
    }
    Ok(())
}

pub fn fit(train: &Dataset, config: &TrainConfig) -> Result<LogisticModel> {
    config.validate()?;
    check_trainable(train)?;
    let (inputs, columns, std) = prepare(train, config)?;
    let problem = Problem::new(train, &inputs, &std, config);
    Ok(solve(&problem, std, columns, config, None))
}

/// [`fit`] that also returns the objective value at the start and after
/// every accepted step.
pub fn fit_with_trace(train: &Dataset, config: &TrainConfig) -> Result<(LogisticModel, Vec<f64>)> {
    config.validate()?;
    check_trainable(train)?;
    let (inputs, columns, std) = prepare(train, config)?;
    let problem = Problem::new(train, &inputs, &std, config);
    let mut trace = Vec::new();
    let model = solve(&problem, std, columns, config, Some(&mut trace));
    Ok((model, trace))
}

/// Logistic regression whose loss adds
/// `fairness_weight * (mean_p(first) - mean_p(second))^2`
/// over the two subgroups present in `train`.
pub fn fit_fair_regularized(train: &Dataset, config: &TrainConfig, fairness_weight: f64) -> Result<LogisticModel> {
    config.validate()?;
    if !(fairness_weight >= 0.0) {
        return Err(Error::InvalidInput(format!("fairness weight must be non-negative, got {fairness_weight}")));
    }
    let groups = crate::data::enumerate_subgroups(train);
    if groups.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "fairness-regularised fit needs exactly two subgroups, found {}",
            groups.len()
        )));
    }
    check_trainable(train)?;
    let (inputs, columns, std) = prepare(train, config)?;
    let mut problem = Problem::new(train, &inputs, &std, config);
    if fairness_weight > 0.0 {
        problem.fairness = Some(fairness_term(train, &groups[1], fairness_weight));
    }
    Ok(solve(&problem, std, columns, config, None))
}

type Prepared<'a> = (Vec<Cow<'a, [f64]>>, Vec<(usize, String)>, Standardization);

fn prepare<'a>(train: &'a Dataset, config: &TrainConfig) -> Result<Prepared<'a>> {
    let columns = if config.sensitive_inputs { sensitive_columns(train) } else { Vec::new() };
    let inputs = train.instances().iter().map(|i| model_input(i, &columns)).collect::<Result<Vec<_>>>()?;
    let std = Standardization::fit_rows(&inputs, train.feature_dim() + columns.len());
    Ok((inputs, columns, std))
}

fn fairness_term(train: &Dataset, second: &SubgroupKey, weight: f64) -> FairnessTerm {
    let second: Vec<bool> = train.instances().iter().map(|i| &i.sensitive == second).collect();
    let n2 = second.iter().filter(|&&s| s).count() as f64;
    FairnessTerm { weight, sizes: [second.len() as f64 - n2, n2], second }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn solve(
    problem: &Problem,
    standardization: Standardization,
    sensitive_inputs: Vec<(usize, String)>,
    config: &TrainConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> LogisticModel {
    let dim = problem.d + 1;
    let mut theta = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut loss = problem.loss_grad(&theta, &mut grad);
    if let Some(t) = trace.as_deref_mut() {
        t.push(loss);
    }
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(LBFGS_MEMORY);
    let mut trial = vec![0.0; dim];
    let mut trial_grad = vec![0.0; dim];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        if inf_norm(&grad) < config.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        // two-loop recursion
        let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &dir);
            dir.iter_mut().zip(y).for_each(|(d, yv)| *d -= a * yv);
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.last() {
            let gamma = dot(s, y) / dot(y, y);
            dir.iter_mut().for_each(|d| *d *= gamma);
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &dir);
            dir.iter_mut().zip(s).for_each(|(d, sv)| *d += (a - b) * sv);
        }
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            history.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
        }

        let mut step = if history.is_empty() { (1.0 / inf_norm(&grad)).min(1.0) } else { 1.0 };
        let accepted = loop {
            for ((t, th), d) in trial.iter_mut().zip(&theta).zip(&dir) {
                *t = th + step * d;
            }
            let trial_loss = problem.loss_grad(&trial, &mut trial_grad);
            if trial_loss <= loss + ARMIJO_C1 * step * slope && trial_loss < loss {
                break Some(trial_loss);
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some(new_loss) = accepted else {
            // no decrease representable in floating point
            break;
        };

        let s: Vec<f64> = trial.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 {
            if history.len() == LBFGS_MEMORY {
                history.remove(0);
            }
            history.push((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut theta, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        loss = new_loss;
        if let Some(t) = trace.as_deref_mut() {
            t.push(loss);
        }
    }
    if !converged && inf_norm(&grad) < config.tolerance {
        converged = true;
    }
    if !converged {
        log::debug!("logistic fit stopped after {iterations} iterations, |grad|_inf = {:.3e}", inf_norm(&grad));
    }

    let bias = theta[problem.d];
    theta.truncate(problem.d);
    LogisticModel { weights: theta, bias, standardization, sensitive_inputs, iterations, converged }
}
