use super::{complete_rows, FeatureStats, LearnerSpec, LogRegModel, TrainedModel};
use crate::dataset::{Sample, Schema};
use crate::error::{Error, Result};

/// Logistic function, evaluated without overflow for large |z|.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean negative log-likelihood plus `l2 * |w|^2 / 2`, with its gradient.
///
/// Returns `(loss, d_loss/d_w, d_loss/d_b)`. Rows of `x` must all have
/// `w.len()` columns; `y` holds 1.0 for positive and 0.0 for negative.
pub fn objective(x: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, l2: f64) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (row, &target) in x.iter().zip(y) {
        let z = b + row.iter().zip(w).map(|(xi, wi)| xi * wi).sum::<f64>();
        loss += softplus(z) - target * z;
        let residual = sigmoid(z) - target;
        for (g, xi) in grad_w.iter_mut().zip(row) {
            *g += residual * xi;
        }
        grad_b += residual;
    }
    loss /= n;
    grad_b /= n;
    let mut penalty = 0.0;
    for (g, wi) in grad_w.iter_mut().zip(w) {
        *g = *g / n + l2 * wi;
        penalty += wi * wi;
    }
    (loss + 0.5 * l2 * penalty, grad_w, grad_b)
}

/// A trained model together with the per-epoch training loss (loss before
/// each update, then the final loss).
#[derive(Debug, Clone)]
pub struct LogRegFit {
    pub model: TrainedModel,
    pub loss_history: Vec<f64>,
}

pub fn train_logreg(samples: &[&Sample], schema: &Schema, spec: &LearnerSpec) -> Result<TrainedModel> {
    train_logreg_traced(samples, schema, spec).map(|fit| fit.model)
}

/// Full-batch gradient descent from zero weights on standardized features.
pub fn train_logreg_traced(samples: &[&Sample], schema: &Schema, spec: &LearnerSpec) -> Result<LogRegFit> {
    spec.check(schema)?;
    let rows = complete_rows(samples, schema, &spec.features)?;
    let pos = rows.iter().filter(|s| s.label.is_positive()).count();
    if rows.len() < 2 || pos == 0 || pos == rows.len() {
        return Err(Error::DegenerateData("need at least two complete rows covering both classes".into()));
    }

    let mut stats = Vec::new();
    let mut dropped = Vec::new();
    for name in &spec.features {
        if stats.iter().any(|s: &FeatureStats| &s.feature == name) {
            continue;
        }
        let values: Vec<f64> =
            rows.iter().map(|s| schema.number(s, name).map(|v| v.expect("complete row"))).collect::<Result<_>>()?;
        let st = FeatureStats::from_values(name, &values);
        if st.std > 0.0 && st.std.is_finite() {
            stats.push(st);
        } else {
            dropped.push(name.clone());
        }
    }
    if stats.is_empty() {
        return Err(Error::DegenerateData("every subset feature is constant".into()));
    }

    let x: Vec<Vec<f64>> = rows
        .iter()
        .map(|s| {
            stats
                .iter()
                .map(|st| st.standardize(schema.number(s, &st.feature).ok().flatten().expect("complete row")))
                .collect()
        })
        .collect();
    let y: Vec<f64> = rows.iter().map(|s| if s.label.is_positive() { 1.0 } else { 0.0 }).collect();

    let mut w = vec![0.0; stats.len()];
    let mut b = 0.0;
    let mut history = Vec::with_capacity(spec.epochs + 1);
    for epoch in 0..=spec.epochs {
        let (loss, grad_w, grad_b) = objective(&x, &y, &w, b, spec.l2);
        let finite = loss.is_finite() && w.iter().all(|v| v.is_finite()) && b.is_finite();
        if !finite {
            return Err(Error::NonFiniteLoss { epoch });
        }
        history.push(loss);
        if epoch == spec.epochs {
            break;
        }
        for (wi, g) in w.iter_mut().zip(&grad_w) {
            *wi -= spec.learning_rate * g;
        }
        b -= spec.learning_rate * grad_b;
    }

    Ok(LogRegFit {
        model: TrainedModel::LogReg(LogRegModel {
            features: stats.iter().map(|s| s.feature.clone()).collect(),
            weights: w,
            bias: b,
            stats,
            dropped,
        }),
        loss_history: history,
    })
}
