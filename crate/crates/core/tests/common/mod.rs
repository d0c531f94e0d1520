//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use diproperm::dataset::load_names;
use diproperm::direction::{dwd_loss, md_direction};
use diproperm::unistat::project;
use diproperm::{Label, LabeledDataset, Statistic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

/// First 50 rows of the bundled mushrooms data, with variable names.
pub fn mushrooms50() -> LabeledDataset {
    let dir = data_dir();
    diproperm::dataset::load_sparse(&dir.join("mushrooms.svm"))
        .unwrap()
        .head(50)
        .unwrap()
        .with_feature_names(load_names(&dir.join("mushrooms.names")).unwrap())
        .unwrap()
}

/// DWD objective at an explicit `(w, beta)`.
pub fn dwd_objective(ds: &LabeledDataset, w: &[f64], beta: f64, c: f64) -> f64 {
    ds.rows()
        .zip(ds.labels())
        .map(|(x, l)| {
            let s: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + beta;
            dwd_loss(l.sign() * s, c)
        })
        .sum()
}

/// Minimises a convex function of one variable on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..iters {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Grid search over `angles` unit directions in the plane, each with a
/// golden-section search over the intercept. Returns (objective, w, beta).
pub fn dwd_grid_oracle(ds: &LabeledDataset, c: f64, angles: usize) -> (f64, [f64; 2], f64) {
    assert_eq!(ds.n_features(), 2);
    let reach = ds.rows().map(|x| x[0].hypot(x[1])).fold(0.0, f64::max) + 10.0 / c.sqrt();
    let mut best = (f64::INFINITY, [0.0; 2], 0.0);
    for k in 0..angles {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / angles as f64;
        let w = [theta.cos(), theta.sin()];
        let (beta, value) = golden_section(|b| dwd_objective(ds, &w, b, c), -reach, reach, 80);
        if value < best.0 {
            best = (value, w, beta);
        }
    }
    best
}

/// Two Gaussian clouds in the plane whose class centres are far enough
/// apart (relative to the spread) that the sample is almost surely
/// linearly separable; re-drawn until it is.
pub fn separable_2d(seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n_pos = rng.random_range(4..=15);
        let n_neg = rng.random_range(4..=15);
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let gap: f64 = rng.random_range(5.0..9.0);
        let scale: f64 = rng.random_range(0.5..3.0);
        let offset = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_pos + n_neg {
            let label = if i < n_pos { Label::Positive } else { Label::Negative };
            let half = 0.5 * gap * label.sign();
            let e0: f64 = StandardNormal.sample(&mut rng);
            let e1: f64 = StandardNormal.sample(&mut rng);
            rows.push(vec![
                scale * (offset[0] + half * angle.cos() + e0),
                scale * (offset[1] + half * angle.sin() + e1),
            ]);
            labels.push(label);
        }
        let ds = LabeledDataset::from_rows(&rows, labels).unwrap();
        if separated_by_md(&ds) {
            return ds;
        }
    }
}

fn separated_by_md(ds: &LabeledDataset) -> bool {
    let dir = md_direction(ds).unwrap();
    let ps = project(ds, &dir).unwrap();
    let (neg, pos) = ps.split();
    let max_neg = neg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_pos = pos.iter().copied().fold(f64::INFINITY, f64::min);
    min_pos > max_neg
}

/// Every subset of `k` indices out of `n`, in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Exact permutation p-value for the mean-difference classifier under the
/// unbalanced scheme: the share of all relabelings with the original class
/// sizes whose statistic is at least the observed one. Computed directly
/// from class means, independent of the engine.
pub fn exhaustive_md_p_value(ds: &LabeledDataset, statistic: Statistic) -> f64 {
    let n = ds.n_samples();
    let n_pos = ds.class_counts().1;
    let stat_for = |labels: &[Label]| -> f64 {
        let p = ds.n_features();
        let mut mp = vec![0.0; p];
        let mut mn = vec![0.0; p];
        let (mut cp, mut cn) = (0.0, 0.0);
        for (x, l) in ds.rows().zip(labels) {
            let (acc, cnt) = match l {
                Label::Positive => (&mut mp, &mut cp),
                Label::Negative => (&mut mn, &mut cn),
            };
            *cnt += 1.0;
            for (a, v) in acc.iter_mut().zip(x) {
                *a += v;
            }
        }
        let d: Vec<f64> = mp.iter().zip(&mn).map(|(a, b)| a / cp - b / cn).collect();
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scores: Vec<f64> = ds
            .rows()
            .map(|x| x.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / norm)
            .collect();
        let split = |which: Label| -> Vec<f64> {
            scores
                .iter()
                .zip(labels)
                .filter(|(_, l)| **l == which)
                .map(|(s, _)| *s)
                .collect()
        };
        let (pos, neg) = (split(Label::Positive), split(Label::Negative));
        match statistic {
            Statistic::Md => (mean(&pos) - mean(&neg)).abs(),
            Statistic::Med => (median(pos) - median(neg)).abs(),
            Statistic::T => {
                let se = (var(&pos) / pos.len() as f64 + var(&neg) / neg.len() as f64).sqrt();
                (mean(&pos) - mean(&neg)).abs() / se
            }
        }
    };
    let observed = stat_for(ds.labels());
    let all = combinations(n, n_pos);
    let hits = all
        .iter()
        .filter(|pos_set| {
            let mut labels = vec![Label::Negative; n];
            for &i in pos_set.iter() {
                labels[i] = Label::Positive;
            }
            // a relative slack absorbs rounding between algebraically equal statistics
            stat_for(&labels) >= observed * (1.0 - 1e-12)
        })
        .count();
    hits as f64 / all.len() as f64
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// A random small dataset with `n_pos` and `n_neg` rows of Gaussian noise.
pub fn gaussian(n_pos: usize, n_neg: usize, p: usize, shift: f64, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity((n_pos + n_neg) * p);
    let mut labels = Vec::new();
    for i in 0..n_pos + n_neg {
        let label = if i < n_pos { Label::Positive } else { Label::Negative };
        for j in 0..p {
            let e: f64 = StandardNormal.sample(&mut rng);
            x.push(e + if j == 0 { 0.5 * shift * label.sign() } else { 0.0 });
        }
        labels.push(label);
    }
    LabeledDataset::new(x, p, labels).unwrap()
}
