use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::audit::{equivariance_audit, AuditReport};
use super::classify::{knn_classify, linear_classify, LinearProbeConfig, KNN_K};
use super::cluster::{kmeans, purity, v_measure};
use crate::error::{Error, Result};
use crate::model::{LatentCode, Network};
use crate::steerable::{cosine_loss, mse, per_degree_sq_error, SteerableTensor};

/// Mean squared error of each degree's coefficients, averaged over pairs.
pub fn per_degree_mse(xs: &[SteerableTensor<f64>], ys: &[SteerableTensor<f64>]) -> Result<Vec<(usize, f64)>> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!("{} tensors vs {} reconstructions", xs.len(), ys.len())));
    }
    let mut acc: Vec<(usize, f64, usize)> = Vec::new();
    for (x, y) in xs.iter().zip(ys) {
        let e = per_degree_sq_error(x, y)?;
        if acc.is_empty() {
            acc = e;
        } else {
            for (a, b) in acc.iter_mut().zip(e) {
                a.1 += b.1;
                a.2 += b.2;
            }
        }
    }
    Ok(acc.into_iter().map(|(l, s, n)| (l, if n == 0 { 0.0 } else { s / n as f64 })).collect())
}

/// Fold index of a sample from the SHA-256 of its id.
pub fn fold_of(id: &str, folds: usize) -> usize {
    let h = Sha256::digest(id.as_bytes());
    let mut b = [0u8; 8];
    b.copy_from_slice(&h[..8]);
    (u64::from_le_bytes(b) % folds.max(1) as u64) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub knn_k: usize,
    pub folds: usize,
    pub probe: LinearProbeConfig,
    /// `(trials, tolerance)` of the equivariance audit, if requested.
    pub audit: Option<(usize, f64)>,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { knn_k: KNN_K, folds: 5, probe: LinearProbeConfig::default(), audit: None, seed: 0 }
    }
}

/// Reconstruction, latent-space and audit metrics of a model on a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    pub cosine_mean: f64,
    pub cosine_sd: f64,
    pub mse: f64,
    pub per_degree_mse: Vec<(usize, f64)>,
    pub knn_accuracy: Option<f64>,
    pub linear_accuracy: Option<f64>,
    pub linear_degenerate: bool,
    pub purity: Option<f64>,
    pub v_measure: Option<f64>,
    pub audit: Option<AuditReport>,
}

impl EvalReport {
    /// Whether every reported number is finite.
    pub fn all_finite(&self) -> bool {
        let opt = |v: Option<f64>| v.is_none_or(f64::is_finite);
        self.cosine_mean.is_finite()
            && self.cosine_sd.is_finite()
            && self.mse.is_finite()
            && self.per_degree_mse.iter().all(|p| p.1.is_finite())
            && opt(self.knn_accuracy)
            && opt(self.linear_accuracy)
            && opt(self.purity)
            && opt(self.v_measure)
    }
}

/// Hash-fold cross validation: each fold is predicted by classifiers
/// trained on the others. Returns (k-NN accuracy, linear accuracy, degenerate).
fn cross_validate(ids: &[String], emb: &[Vec<f64>], labels: &[usize], opts: &EvalOptions) -> Result<(f64, f64, bool)> {
    let folds: Vec<usize> = ids.iter().map(|id| fold_of(id, opts.folds)).collect();
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let (mut knn_ok, mut lin_ok, mut total) = (0usize, 0usize, 0usize);
    let mut degenerate = false;
    for f in 0..opts.folds.max(1) {
        let (mut tr, mut trl, mut te, mut tel) = (vec![], vec![], vec![], vec![]);
        for i in 0..emb.len() {
            if folds[i] == f {
                te.push(emb[i].clone());
                tel.push(labels[i]);
            } else {
                tr.push(emb[i].clone());
                trl.push(labels[i]);
            }
        }
        if te.is_empty() || tr.is_empty() {
            continue;
        }
        let k = opts.knn_k.min(tr.len());
        let kp = knn_classify(&tr, &trl, &te, k)?;
        let probe = linear_classify(&tr, &trl, &te, n_classes, &opts.probe)?;
        degenerate |= probe.degenerate;
        knn_ok += kp.iter().zip(&tel).filter(|(a, b)| a == b).count();
        lin_ok += probe.predictions.iter().zip(&tel).filter(|(a, b)| a == b).count();
        total += te.len();
    }
    if total == 0 {
        return Err(Error::InvalidArgument("cross validation needs at least two samples in different folds".into()));
    }
    Ok((knn_ok as f64 / total as f64, lin_ok as f64 / total as f64, degenerate))
}

/// Report plus per-sample latent codes and reconstructions.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: EvalReport,
    pub codes: Vec<LatentCode>,
    pub reconstructions: Vec<SteerableTensor<f64>>,
}

/// Reconstruction metrics, hash-fold classification and clustering of the
/// mean embeddings (with labels), and optionally the equivariance audit.
pub fn evaluate(
    net: &Network,
    ids: &[String],
    xs: &[SteerableTensor<f64>],
    labels: Option<&[usize]>,
    opts: &EvalOptions,
) -> Result<Evaluation> {
    if xs.is_empty() || ids.len() != xs.len() {
        return Err(Error::InvalidArgument(format!("{} ids for {} tensors", ids.len(), xs.len())));
    }
    if let Some(x) = xs.iter().find(|x| x.signature() != &net.config.input_signature) {
        return Err(Error::Shape(format!(
            "dataset signature {} does not match the model input {}",
            x.signature(),
            net.config.input_signature
        )));
    }
    let codes = net.encode_batch(xs)?;
    let recon = net.decode_batch(&codes.iter().map(|c| (c.mean.clone(), c.frame)).collect::<Vec<_>>())?;
    let mut cos = Vec::with_capacity(xs.len());
    let mut err = 0.0;
    for (x, y) in xs.iter().zip(&recon) {
        cos.push(cosine_loss(x, y)?);
        err += mse(x, y)?;
    }
    let n = xs.len() as f64;
    let cosine_mean = cos.iter().sum::<f64>() / n;
    let cosine_sd = (cos.iter().map(|c| (c - cosine_mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut report = EvalReport {
        samples: xs.len(),
        cosine_mean,
        cosine_sd,
        mse: err / n,
        per_degree_mse: per_degree_mse(xs, &recon)?,
        knn_accuracy: None,
        linear_accuracy: None,
        linear_degenerate: false,
        purity: None,
        v_measure: None,
        audit: None,
    };
    if let Some(labels) = labels {
        if labels.len() != xs.len() {
            return Err(Error::Shape(format!("{} labels for {} samples", labels.len(), xs.len())));
        }
        let emb: Vec<Vec<f64>> = codes.iter().map(|c| c.mean.clone()).collect();
        let (knn, lin, deg) = cross_validate(ids, &emb, labels, opts)?;
        report.knn_accuracy = Some(knn);
        report.linear_accuracy = Some(lin);
        report.linear_degenerate = deg;
        let mut distinct = labels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let clusters = kmeans(&emb, distinct.len().min(emb.len()), opts.seed, 300)?;
        report.purity = Some(purity(&clusters, labels)?);
        report.v_measure = Some(v_measure(&clusters, labels)?);
    }
    if let Some((trials, tol)) = opts.audit {
        report.audit = Some(equivariance_audit(net, trials, tol, opts.seed)?);
    }
    if !report.all_finite() {
        return Err(Error::NonFinite("evaluation produced a non-finite metric".into()));
    }
    Ok(Evaluation { report, codes, reconstructions: recon })
}

/// `id,label,z0..,[logvar0..,]e1x..e3z` rows.
pub fn embeddings_csv(ids: &[String], labels: Option<&[usize]>, codes: &[LatentCode]) -> String {
    let mut s = String::from("id,label");
    if let Some(c) = codes.first() {
        for k in 0..c.mean.len() {
            let _ = write!(s, ",z{k}");
        }
        if let Some(lv) = &c.logvar {
            for k in 0..lv.len() {
                let _ = write!(s, ",logvar{k}");
            }
        }
        for e in ["e1", "e2", "e3"] {
            for ax in ["x", "y", "z"] {
                let _ = write!(s, ",{e}{ax}");
            }
        }
    }
    s.push('\n');
    for (i, (id, c)) in ids.iter().zip(codes).enumerate() {
        s.push_str(id);
        s.push(',');
        if let Some(l) = labels {
            let _ = write!(s, "{}", l[i]);
        }
        for v in c.mean.iter().chain(c.logvar.iter().flatten()) {
            let _ = write!(s, ",{v}");
        }
        for v in c.frame.e1.iter().chain(&c.frame.e2).chain(&c.frame.e3) {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}
