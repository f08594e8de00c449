use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Adam;
use crate::error::{Error, Result};

/// Default neighbour count.
pub const KNN_K: usize = 5;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Most frequent label; ties go to the smallest label.
fn majority(labels: impl Iterator<Item = usize>) -> usize {
    let mut counts: Vec<usize> = Vec::new();
    for l in labels {
        if l >= counts.len() {
            counts.resize(l + 1, 0);
        }
        counts[l] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    counts.iter().position(|&c| c == best).unwrap_or(0)
}

/// Euclidean `k`-nearest-neighbour vote with uniform weights. Distance ties
/// are broken by training index, vote ties by the smallest class.
pub fn knn_classify(train: &[Vec<f64>], labels: &[usize], test: &[Vec<f64>], k: usize) -> Result<Vec<usize>> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("k-NN needs a non-empty training set".into()));
    }
    if labels.len() != train.len() {
        return Err(Error::Shape(format!("{} training points, {} labels", train.len(), labels.len())));
    }
    if k == 0 || k > train.len() {
        return Err(Error::InvalidArgument(format!("k = {k} with {} training points", train.len())));
    }
    Ok(test
        .iter()
        .map(|q| {
            let mut d: Vec<(f64, usize)> = train.iter().enumerate().map(|(i, t)| (sq_dist(q, t), i)).collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            majority(d[..k].iter().map(|&(_, i)| labels[i]))
        })
        .collect())
}

/// Fraction of equal entries.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::InvalidArgument(format!("accuracy of {} predictions vs {} labels", pred.len(), truth.len())));
    }
    Ok(pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / pred.len() as f64)
}

/// Optimiser settings of the linear probe.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProbeConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Epochs without improvement before the rate drops tenfold.
    pub patience: usize,
    pub seed: u64,
}

impl Default for LinearProbeConfig {
    fn default() -> Self {
        Self { epochs: 250, batch_size: 100, lr: 0.01, patience: 10, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProbe {
    pub predictions: Vec<usize>,
    /// Set when the training labels contain a single class; predictions are
    /// then that class.
    pub degenerate: bool,
}

/// Softmax regression on (standardised) features trained with Adam and
/// cross-entropy, lowering the rate tenfold on a training-loss plateau.
pub fn linear_classify(
    train: &[Vec<f64>],
    labels: &[usize],
    test: &[Vec<f64>],
    n_classes: usize,
    cfg: &LinearProbeConfig,
) -> Result<LinearProbe> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("linear probe needs a non-empty training set".into()));
    }
    if labels.len() != train.len() {
        return Err(Error::Shape(format!("{} training points, {} labels", train.len(), labels.len())));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::InvalidArgument(format!("label {l} outside {n_classes} classes")));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Ok(LinearProbe { predictions: vec![labels[0]; test.len()], degenerate: true });
    }
    let d = train[0].len();
    if train.iter().chain(test).any(|x| x.len() != d) {
        return Err(Error::Shape("feature vectors of unequal length".into()));
    }
    let n = train.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| train.iter().map(|x| x[j]).sum::<f64>() / n).collect();
    let sd: Vec<f64> = (0..d)
        .map(|j| {
            let v = train.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
            if v > 1e-24 { v.sqrt() } else { 1.0 }
        })
        .collect();
    let norm = |x: &[f64]| -> Vec<f64> { (0..d).map(|j| (x[j] - mean[j]) / sd[j]).collect() };
    let xs: Vec<Vec<f64>> = train.iter().map(|x| norm(x)).collect();

    let c = n_classes;
    // params[0] = W (d x c, row-major), params[1] = bias
    let mut params = vec![vec![0.0; d * c], vec![0.0; c]];
    let mut adam = Adam::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut lr = cfg.lr;
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let logits = |p: &[Vec<f64>], x: &[f64]| -> Vec<f64> {
        (0..c).map(|k| p[1][k] + (0..d).map(|j| x[j] * p[0][j * c + k]).sum::<f64>()).collect()
    };
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            let mut gw = vec![0.0; d * c];
            let mut gb = vec![0.0; c];
            for &i in batch {
                let z = logits(&params, &xs[i]);
                let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = z.iter().map(|v| (v - zmax).exp()).collect();
                let s: f64 = e.iter().sum();
                epoch_loss += -(e[labels[i]] / s).ln();
                for k in 0..c {
                    let g = (e[k] / s - f64::from(u8::from(k == labels[i]))) / batch.len() as f64;
                    gb[k] += g;
                    for j in 0..d {
                        gw[j * c + k] += g * xs[i][j];
                    }
                }
            }
            adam.step(&mut params, &[Some(gw), Some(gb)], lr)?;
        }
        epoch_loss /= n;
        if epoch_loss < best * (1.0 - 1e-4) {
            best = epoch_loss;
            stale = 0;
        } else {
            stale += 1;
            if stale > cfg.patience {
                lr *= 0.1;
                stale = 0;
            }
        }
    }
    let predictions = test
        .iter()
        .map(|x| {
            let z = logits(&params, &norm(x));
            (0..c).fold(0, |b, k| if z[k] > z[b] { k } else { b })
        })
        .collect();
    Ok(LinearProbe { predictions, degenerate: false })
}
