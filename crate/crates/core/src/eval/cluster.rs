use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means with k-means++ seeding; returns one cluster id per point.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<Vec<usize>> {
    if points.is_empty() || k == 0 || k > points.len() {
        return Err(Error::InvalidArgument(format!("k-means with k = {k} on {} points", points.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    while centers.len() < k {
        let d: Vec<f64> = points.iter().map(|p| centers.iter().map(|c| sq_dist(p, c)).fold(f64::INFINITY, f64::min)).collect();
        let total: f64 = d.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            d.iter().position(|&v| {
                u -= v;
                u <= 0.0
            })
            .unwrap_or(points.len() - 1)
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[next].clone());
    }
    let nearest = |p: &[f64], centers: &[Vec<f64>]| {
        (0..centers.len()).fold(0, |b, c| if sq_dist(p, &centers[c]) < sq_dist(p, &centers[b]) { c } else { b })
    };
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
    for _ in 0..max_iter {
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assign) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    Ok(assign)
}

fn contingency(clusters: &[usize], labels: &[usize]) -> Result<HashMap<(usize, usize), usize>> {
    if clusters.is_empty() {
        return Err(Error::InvalidArgument("clustering metric of an empty assignment".into()));
    }
    if clusters.len() != labels.len() {
        return Err(Error::Shape(format!("{} cluster ids, {} labels", clusters.len(), labels.len())));
    }
    let mut m = HashMap::new();
    for (&c, &l) in clusters.iter().zip(labels) {
        *m.entry((c, l)).or_insert(0) += 1;
    }
    Ok(m)
}

/// Fraction of points whose label equals the modal label of their cluster.
pub fn purity(clusters: &[usize], labels: &[usize]) -> Result<f64> {
    let m = contingency(clusters, labels)?;
    let mut best: HashMap<usize, usize> = HashMap::new();
    for (&(c, _), &n) in &m {
        let b = best.entry(c).or_insert(0);
        *b = (*b).max(n);
    }
    Ok(best.values().sum::<usize>() as f64 / clusters.len() as f64)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts.filter(|&c| c > 0).map(|c| {
        let p = c as f64 / n;
        -p * p.ln()
    }).sum()
}

/// Harmonic mean of homogeneity and completeness.
pub fn v_measure(clusters: &[usize], labels: &[usize]) -> Result<f64> {
    let m = contingency(clusters, labels)?;
    let n = clusters.len() as f64;
    let mut by_c: HashMap<usize, usize> = HashMap::new();
    let mut by_l: HashMap<usize, usize> = HashMap::new();
    for (&(c, l), &k) in &m {
        *by_c.entry(c).or_insert(0) += k;
        *by_l.entry(l).or_insert(0) += k;
    }
    let h_c = entropy(by_l.values().copied(), n);
    let h_k = entropy(by_c.values().copied(), n);
    // conditional entropies H(C|K) and H(K|C)
    let mut h_c_given_k = 0.0;
    let mut h_k_given_c = 0.0;
    for (&(c, l), &k) in &m {
        let p = k as f64 / n;
        h_c_given_k -= p * (k as f64 / by_c[&c] as f64).ln();
        h_k_given_c -= p * (k as f64 / by_l[&l] as f64).ln();
    }
    let hom = if h_c == 0.0 { 1.0 } else { 1.0 - h_c_given_k / h_c };
    let com = if h_k == 0.0 { 1.0 } else { 1.0 - h_k_given_c / h_k };
    Ok(if hom + com == 0.0 { 0.0 } else { (2.0 * hom * com / (hom + com)).clamp(0.0, 1.0) })
}

/// Ranks with ties replaced by their average rank (1-based).
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidArgument(format!("Spearman correlation of {} and {} values", a.len(), b.len())));
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return Err(Error::DegenerateInput("Spearman correlation of a constant sequence".into()));
    }
    Ok(cov / (va * vb).sqrt())
}
