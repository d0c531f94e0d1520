//! Separating directions: the mean-difference rule and distance weighted
//! discrimination (DWD).
//!
//! DWD is solved in its slack-eliminated form
//!
//! ```text
//! minimize  sum_i V_C(y_i (x_i . w + beta))   subject to ||w||_2 <= 1
//! V_C(u) = 1/u               for u >= 1/sqrt(C)
//!        = 2 sqrt(C) - C u   for u <  1/sqrt(C)
//! ```
//!
//! which is convex with a Lipschitz gradient, so an accelerated projected
//! gradient method with backtracking converges to the global minimum.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{DppError, Result};

/// Unit normal of a separating hyperplane `{x : x.w + beta = 0}`.
///
/// Oriented so the +1 class projects higher on average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub w: Vec<f64>,
    pub beta: f64,
}

impl Direction {
    /// Scales `(w, beta)` jointly so that `||w|| = 1`.
    pub fn normalized(w: Vec<f64>, beta: f64) -> Result<Self> {
        let norm = l2(&w);
        if !(norm > 1e-12) {
            return Err(DppError::ZeroDirection);
        }
        Ok(Direction {
            w: w.iter().map(|v| v / norm).collect(),
            beta: beta / norm,
        })
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        dot(x, &self.w) + self.beta
    }

    pub fn flipped(&self) -> Direction {
        Direction {
            w: self.w.iter().map(|v| -v).collect(),
            beta: -self.beta,
        }
    }

    /// Flips the direction if the -1 class projects higher than the +1 class.
    fn oriented(self, ds: &LabeledDataset) -> Direction {
        let (mut sum_pos, mut sum_neg) = (0.0, 0.0);
        let (neg, pos) = ds.class_counts();
        for (row, label) in ds.rows().zip(ds.labels()) {
            match label {
                Label::Positive => sum_pos += self.score(row),
                Label::Negative => sum_neg += self.score(row),
            }
        }
        if sum_pos / pos as f64 >= sum_neg / neg as f64 {
            self
        } else {
            self.flipped()
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// How the direction is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Dwd,
    Md,
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classifier::Dwd => "dwd",
            Classifier::Md => "md",
        })
    }
}

impl FromStr for Classifier {
    type Err = DppError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dwd" => Ok(Classifier::Dwd),
            "md" => Ok(Classifier::Md),
            other => Err(DppError::invalid(
                "classifier",
                format!("{other:?} (expected dwd or md)"),
            )),
        }
    }
}

/// Mean-difference direction: `w ∝ mean(+1) - mean(-1)`, hyperplane through
/// the midpoint of the two means.
pub fn md_direction(ds: &LabeledDataset) -> Result<Direction> {
    let p = ds.n_features();
    let (neg, pos) = ds.class_counts();
    let mut mean_pos = vec![0.0; p];
    let mut mean_neg = vec![0.0; p];
    for (row, label) in ds.rows().zip(ds.labels()) {
        let acc = match label {
            Label::Positive => &mut mean_pos,
            Label::Negative => &mut mean_neg,
        };
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    mean_pos.iter_mut().for_each(|v| *v /= pos as f64);
    mean_neg.iter_mut().for_each(|v| *v /= neg as f64);

    let diff: Vec<f64> = mean_pos.iter().zip(&mean_neg).map(|(a, b)| a - b).collect();
    let norm = l2(&diff);
    if norm < 1e-12 {
        return Err(DppError::ZeroDirection);
    }
    let w: Vec<f64> = diff.iter().map(|d| d / norm).collect();
    let mid: Vec<f64> = mean_pos.iter().zip(&mean_neg).map(|(a, b)| 0.5 * (a + b)).collect();
    let beta = -dot(&w, &mid);
    Ok(Direction { w, beta })
}

/// Default DWD penalty: `100 / d^2`, with `d` the median Euclidean distance
/// over all (+1, -1) sample pairs.
pub fn penalty_parameter(ds: &LabeledDataset) -> Result<f64> {
    let (pos_rows, neg_rows): (Vec<_>, Vec<_>) = ds.rows().zip(ds.labels()).partition(|(_, l)| **l == Label::Positive);
    let mut dists = Vec::with_capacity(pos_rows.len() * neg_rows.len());
    for (a, _) in &pos_rows {
        for (b, _) in &neg_rows {
            let d2: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
            dists.push(d2.sqrt());
        }
    }
    let median = crate::unistat::median(&mut dists);
    if !(median >= 1e-12) {
        return Err(DppError::DegenerateScale);
    }
    Ok(100.0 / (median * median))
}

/// The slack-eliminated DWD loss `V_C(u)`.
pub fn dwd_loss(u: f64, c: f64) -> f64 {
    let sqrt_c = c.sqrt();
    if u * sqrt_c >= 1.0 {
        1.0 / u
    } else {
        2.0 * sqrt_c - c * u
    }
}

/// `dV_C/du`.
pub fn dwd_loss_derivative(u: f64, c: f64) -> f64 {
    if u * c.sqrt() >= 1.0 {
        -1.0 / (u * u)
    } else {
        -c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once the unit-step projected gradient norm drops to this value.
    pub tol: f64,
    pub max_iter: usize,
    /// Keep the per-iteration objective values in [`DwdModel::objective_trace`].
    #[serde(default)]
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-5,
            max_iter: 5000,
            record_trace: false,
        }
    }
}

/// A fitted DWD classifier plus solver telemetry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DwdModel {
    pub direction: Direction,
    /// Penalty parameter C.
    pub penalty: f64,
    pub iterations: usize,
    pub objective: f64,
    pub kkt_residual: f64,
    pub training_error: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
}

/// Fraction of samples with `label * score <= 0` (zero scores count as errors).
pub fn training_error(ds: &LabeledDataset, dir: &Direction) -> f64 {
    let wrong = ds
        .rows()
        .zip(ds.labels())
        .filter(|(row, l)| l.sign() * dir.score(row) <= 0.0)
        .count();
    wrong as f64 / ds.n_samples() as f64
}

struct DwdProblem<'a> {
    ds: &'a LabeledDataset,
    signs: Vec<f64>,
    c: f64,
}

impl DwdProblem<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        let (w, beta) = z.split_at(z.len() - 1);
        self.ds
            .rows()
            .zip(&self.signs)
            .map(|(row, y)| dwd_loss(y * (dot(row, w) + beta[0]), self.c))
            .sum()
    }

    fn value_grad(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let (w, beta) = z.split_at(z.len() - 1);
        let p = w.len();
        grad.fill(0.0);
        let mut total = 0.0;
        for (row, y) in self.ds.rows().zip(&self.signs) {
            let u = y * (dot(row, w) + beta[0]);
            total += dwd_loss(u, self.c);
            let s = dwd_loss_derivative(u, self.c) * y;
            for (g, x) in grad[..p].iter_mut().zip(row) {
                *g += s * x;
            }
            grad[p] += s;
        }
        total
    }
}

/// Euclidean projection of the `w` block onto the unit ball; `beta` is free.
fn project(z: &mut [f64]) {
    let p = z.len() - 1;
    let norm = l2(&z[..p]);
    if norm > 1.0 {
        z[..p].iter_mut().for_each(|v| *v /= norm);
    }
}

/// `z_out = P(z - step * g)`.
fn gradient_step(z: &[f64], g: &[f64], step: f64, out: &mut [f64]) {
    for ((o, a), b) in out.iter_mut().zip(z).zip(g) {
        *o = a - step * b;
    }
    project(out);
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Fits DWD with penalty `c`.
///
/// Monotone accelerated projected gradient (momentum is discarded whenever
/// the extrapolated step does not decrease the objective) with a
/// backtracking estimate of the gradient's Lipschitz constant.
pub fn dwd_direction(ds: &LabeledDataset, c: f64, opts: &SolverOptions) -> Result<DwdModel> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(DppError::DegenerateScale);
    }
    if !(opts.tol > 0.0) {
        return Err(DppError::invalid("tol", "must be positive"));
    }
    let p = ds.n_features();
    let problem = DwdProblem {
        ds,
        signs: ds.labels().iter().map(|l| l.sign()).collect(),
        c,
    };

    let mut x = vec![0.0; p + 1];
    if let Ok(md) = md_direction(ds) {
        x[..p].copy_from_slice(&md.w);
        x[p] = md.beta;
    }
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut z = vec![0.0; p + 1];
    let mut gx = vec![0.0; p + 1];
    let mut gy = vec![0.0; p + 1];
    let mut probe = vec![0.0; p + 1];

    let mut fx = problem.value(&x);
    let mut lipschitz = 1.0f64;
    let mut momentum = 1.0f64;
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(fx);
    }

    let mut iterations = 0;
    let mut residual;
    loop {
        problem.value_grad(&x, &mut gx);
        gradient_step(&x, &gx, 1.0, &mut probe);
        residual = diff_norm(&x, &probe);
        if residual <= opts.tol || iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let fy = problem.value_grad(&y, &mut gy);
        let fz = backtrack(&problem, &y, fy, &gy, &mut lipschitz, &mut z);
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());

        if fz <= fx {
            x_prev.copy_from_slice(&x);
            x.copy_from_slice(&z);
            fx = fz;
            let beta = (momentum - 1.0) / next_momentum;
            for ((yi, xi), pi) in y.iter_mut().zip(&x).zip(&x_prev) {
                *yi = xi + beta * (xi - pi);
            }
            momentum = next_momentum;
        } else {
            // restart with a plain projected gradient step from x; the
            // backtracking bound already guarantees descent, so accept it even
            // when the change in f is lost to rounding
            momentum = 1.0;
            fx = backtrack(&problem, &x, fx, &gx, &mut lipschitz, &mut z);
            x.copy_from_slice(&z);
            y.copy_from_slice(&x);
        }
        if opts.record_trace {
            trace.push(fx);
        }
        lipschitz *= 0.9;
    }

    let direction = Direction::normalized(x[..p].to_vec(), x[p])?.oriented(ds);
    let model = DwdModel {
        training_error: training_error(ds, &direction),
        direction,
        penalty: c,
        iterations,
        objective: fx,
        kkt_residual: residual,
        objective_trace: trace,
    };
    if residual > opts.tol {
        return Err(DppError::NonConverged {
            iterations,
            kkt_residual: residual,
            model: Box::new(model),
        });
    }
    Ok(model)
}

/// Finds a step `1/L` satisfying the quadratic upper bound at `from`, writes
/// the projected point to `out` and returns its objective.
fn backtrack(
    problem: &DwdProblem<'_>,
    from: &[f64],
    f_from: f64,
    grad: &[f64],
    lipschitz: &mut f64,
    out: &mut [f64],
) -> f64 {
    loop {
        gradient_step(from, grad, 1.0 / *lipschitz, out);
        let mut lin = 0.0;
        let mut sq = 0.0;
        for ((o, f), g) in out.iter().zip(from).zip(grad) {
            let d = o - f;
            lin += g * d;
            sq += d * d;
        }
        let f_out = problem.value(out);
        let bound = f_from + lin + 0.5 * *lipschitz * sq;
        if f_out <= bound + 1e-12 * f_from.abs().max(1.0) || *lipschitz > 1e300 {
            return f_out;
        }
        *lipschitz *= 2.0;
    }
}

/// A direction together with the DWD fit that produced it, if any.
#[derive(Clone, Debug)]
pub struct Fit {
    pub direction: Direction,
    pub model: Option<DwdModel>,
}

/// Fits the requested classifier. `penalty` is required for DWD.
pub fn fit_direction(
    ds: &LabeledDataset,
    classifier: Classifier,
    penalty: Option<f64>,
    opts: &SolverOptions,
) -> Result<Fit> {
    match classifier {
        Classifier::Md => Ok(Fit {
            direction: md_direction(ds)?,
            model: None,
        }),
        Classifier::Dwd => {
            let c = match penalty {
                Some(c) => c,
                None => penalty_parameter(ds)?,
            };
            let model = dwd_direction(ds, c, opts)?;
            Ok(Fit {
                direction: model.direction.clone(),
                model: Some(model),
            })
        }
    }
}

/// One variable's entry in the direction vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loading {
    /// 1-based variable index.
    pub index: usize,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// The `loadnum` largest entries of `w` by magnitude, signs kept; ties go
/// to the lower index.
pub fn loadings_of(direction: &Direction, loadnum: usize, names: Option<&[String]>) -> Result<Vec<Loading>> {
    let p = direction.w.len();
    if loadnum == 0 {
        return Err(DppError::invalid("loadnum", "must be at least 1"));
    }
    if loadnum > p {
        return Err(DppError::Index {
            index: loadnum,
            limit: p,
        });
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| direction.w[b].abs().total_cmp(&direction.w[a].abs()).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(loadnum)
        .map(|j| Loading {
            index: j + 1,
            value: direction.w[j],
            name: names.map(|n| n[j].clone()),
        })
        .collect())
}
