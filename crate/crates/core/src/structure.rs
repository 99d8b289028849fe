//! Class separation, Ward clustering, partition agreement and accuracy-binned
//! summaries of per-network representations.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::ActivationSet;
use crate::diffusion::class_members;
use crate::error::{Error, Result};
use crate::format::serialize_rows;
use crate::linalg::{euclidean, mean, std_dev};

pub const DEFAULT_CLUSTERS: usize = 10;
pub const DEFAULT_BIN_WIDTH: f64 = 0.03;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStructure {
    #[serde(serialize_with = "serialize_rows")]
    pub centroids: Array2<f64>,
    #[serde(serialize_with = "serialize_rows")]
    pub centroid_distances: Array2<f64>,
    /// Mean distance of each class's members to the class centroid.
    pub within_class_variance: Vec<f64>,
    pub mean_centroid_distance: f64,
    pub mean_within_variance: f64,
}

pub fn class_structure(
    activations: &ActivationSet,
    labels: &[usize],
    class_count: usize,
) -> Result<ClassStructure> {
    let x = activations.matrix.view();
    if labels.len() != x.nrows() {
        return Err(Error::LengthMismatch(labels.len(), x.nrows()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} is not below class_count {class_count}"
        )));
    }
    let mut members = class_members(labels);
    members.resize(class_count, Vec::new());
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(Error::EmptyClass(empty));
    }

    let d = x.ncols();
    let mut centroids = Array2::zeros((class_count, d));
    let mut within = Vec::with_capacity(class_count);
    for (k, idx) in members.iter().enumerate() {
        let c = x
            .select(Axis(0), idx)
            .mean_axis(Axis(0))
            .expect("nonempty class");
        within.push(mean(
            &idx.iter()
                .map(|&i| euclidean(x.row(i), c.view()))
                .collect::<Vec<_>>(),
        ));
        centroids.row_mut(k).assign(&c);
    }

    let mut centroid_distances = Array2::zeros((class_count, class_count));
    let mut pair_dists = Vec::new();
    for a in 0..class_count {
        for b in (a + 1)..class_count {
            let v = euclidean(centroids.row(a), centroids.row(b));
            centroid_distances[[a, b]] = v;
            centroid_distances[[b, a]] = v;
            pair_dists.push(v);
        }
    }

    Ok(ClassStructure {
        mean_centroid_distance: mean(&pair_dists),
        mean_within_variance: mean(&within),
        centroids,
        centroid_distances,
        within_class_variance: within,
    })
}

/// One agglomeration step. Leaves are `0..n`; the cluster formed by merge `s` is `n + s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Leaves in left-to-right drawing order.
    pub fn leaf_order(&self) -> Vec<usize> {
        let n = self.n_leaves;
        if self.merges.is_empty() {
            return (0..n).collect();
        }
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![n + self.merges.len() - 1];
        while let Some(c) = stack.pop() {
            if c < n {
                order.push(c);
            } else {
                let m = &self.merges[c - n];
                stack.push(m.cluster_b);
                stack.push(m.cluster_a);
            }
        }
        order
    }
}

/// Ward agglomerative clustering of the rows of `activations`.
pub fn ward_dendrogram(activations: &ActivationSet) -> Result<Dendrogram> {
    ward_linkage(activations.matrix.view())
}

/// Ward linkage via the Lance–Williams recurrence on Euclidean-scale distances
/// (two singletons merge at their Euclidean distance; in general
/// `d(u, v) = √(2·ΔSSE)`). Ties go to the smallest `(a, b)` cluster-id pair.
pub fn ward_linkage(points: ArrayView2<'_, f64>) -> Result<Dendrogram> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "Ward clustering needs at least 2 points, got {n}"
        )));
    }
    let total = 2 * n - 1;
    // Squared distances between live clusters, indexed by cluster id.
    let mut d2 = vec![0.0f64; total * total];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = points
                .row(i)
                .iter()
                .zip(points.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            d2[i * total + j] = v;
            d2[j * total + i] = v;
        }
    }
    let mut size = vec![0usize; total];
    size[..n].fill(1);
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    while active.len() > 1 {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for (ia, &a) in active.iter().enumerate() {
            for &b in &active[ia + 1..] {
                let v = d2[a * total + b];
                if v < best.2 {
                    best = (a, b, v);
                }
            }
        }
        let (a, b, dab) = best;
        let new = n + merges.len();
        let (na, nb) = (size[a] as f64, size[b] as f64);
        size[new] = size[a] + size[b];
        for &k in &active {
            if k == a || k == b {
                continue;
            }
            let nk = size[k] as f64;
            let v = ((na + nk) * d2[a * total + k] + (nb + nk) * d2[b * total + k] - nk * dab)
                / (na + nb + nk);
            let v = v.max(0.0);
            d2[new * total + k] = v;
            d2[k * total + new] = v;
        }
        merges.push(Merge {
            cluster_a: a,
            cluster_b: b,
            distance: dab.max(0.0).sqrt(),
            size: size[new],
        });
        active.retain(|&c| c != a && c != b);
        active.push(new);
    }
    Ok(Dendrogram {
        n_leaves: n,
        merges,
    })
}

/// Relabels so cluster ids appear in order of first occurrence.
pub fn canonicalize(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Flat `k`-cluster partition obtained by undoing the last `k − 1` merges.
pub fn cut_dendrogram(d: &Dendrogram, k: usize) -> Result<Vec<usize>> {
    let n = d.n_leaves;
    if k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    // Representative leaf of every cluster id.
    let mut rep: Vec<usize> = (0..n).collect();
    for m in &d.merges[..n - k] {
        let (ra, rb) = (rep[m.cluster_a], rep[m.cluster_b]);
        let (ra, rb) = (find(&mut parent, ra), find(&mut parent, rb));
        parent[rb] = ra;
        rep.push(ra);
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(canonicalize(&roots))
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index from the contingency table of two partitions.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len() as u64;
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    let expected = if total > 0.0 {
        sum_a * sum_b / total
    } else {
        0.0
    };
    let max_index = 0.5 * (sum_a + sum_b);
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(if canonicalize(a) == canonicalize(b) {
            1.0
        } else {
            0.0
        });
    }
    Ok((index - expected) / denom)
}

/// Symmetric matrix of ARIs between every pair of partitions, unit diagonal.
pub fn pairwise_ari_matrix(partitions: &[Vec<usize>]) -> Result<Array2<f64>> {
    let m = partitions.len();
    if let Some(p) = partitions.iter().find(|p| p.len() != partitions[0].len()) {
        return Err(Error::LengthMismatch(partitions[0].len(), p.len()));
    }
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| adjusted_rand_index(&partitions[i], &partitions[j]))
        .collect::<Result<Vec<f64>>>()?;
    let mut out = Array2::eye(m);
    for (&(i, j), v) in pairs.iter().zip(values) {
        out[[i, j]] = v;
        out[[j, i]] = v;
    }
    Ok(out)
}

/// Per-network inputs to [`bin_by_accuracy`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStats {
    pub id: String,
    pub accuracy: f64,
    pub mean_within_variance: f64,
    /// Flat cluster partition from the network's dendrogram.
    pub partition: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyBin {
    pub low: f64,
    pub high: f64,
    pub member_ids: Vec<String>,
    pub mean_within_variance: f64,
    pub std_within_variance: f64,
    /// Mean ARI over member pairs; `None` for single-member bins.
    pub mean_pairwise_ari: Option<f64>,
}

impl AccuracyBin {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.low + self.high)
    }
}

/// Index `k` with `k·width ≤ accuracy < (k+1)·width`, robust to rounding in the division.
fn bin_index(accuracy: f64, width: f64) -> i64 {
    let mut k = (accuracy / width).floor() as i64;
    if (k + 1) as f64 * width <= accuracy {
        k += 1;
    }
    if k as f64 * width > accuracy {
        k -= 1;
    }
    k
}

/// Groups networks into half-open accuracy bins `[k·w, (k+1)·w)`; empty bins are omitted.
pub fn bin_by_accuracy(stats: &[NetworkStats], width: f64) -> Result<Vec<AccuracyBin>> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bin width must be positive, got {width}"
        )));
    }
    let mut groups: std::collections::BTreeMap<i64, Vec<&NetworkStats>> = Default::default();
    for s in stats {
        groups
            .entry(bin_index(s.accuracy, width))
            .or_default()
            .push(s);
    }
    groups
        .into_iter()
        .map(|(k, members)| {
            let variances: Vec<f64> = members.iter().map(|s| s.mean_within_variance).collect();
            let mut aris = Vec::new();
            for (i, a) in members.iter().enumerate() {
                for b in &members[i + 1..] {
                    aris.push(adjusted_rand_index(&a.partition, &b.partition)?);
                }
            }
            Ok(AccuracyBin {
                low: k as f64 * width,
                high: (k + 1) as f64 * width,
                member_ids: members.iter().map(|s| s.id.clone()).collect(),
                mean_within_variance: mean(&variances),
                std_within_variance: std_dev(&variances),
                mean_pairwise_ari: (!aris.is_empty()).then(|| mean(&aris)),
            })
        })
        .collect()
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::DegenerateInput(
            "correlation needs at least two observations".into(),
        ));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput("constant input vector".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Squared Pearson correlation.
pub fn r_squared(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(x, y).map(|r| r * r)
}
