//! Slow, obviously-correct reference computations.
//!
//! Nothing here depends on `netmanifold`; every routine recomputes its answer
//! from definitions so tests can compare the library against it.

use std::collections::{BTreeSet, HashMap};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n × d` matrix of uniform values in `[-scale, scale)`.
pub fn random_cloud(rng: &mut impl Rng, n: usize, d: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| scale * (2.0 * rng.random::<f64>() - 1.0))
}

/// Standard normal sample by Box–Muller.
pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn naive_distances(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..x.ncols() {
                let t = x[[i, k]] - x[[j, k]];
                s += t * t;
            }
            d[[i, j]] = s.sqrt();
        }
    }
    d
}

/// Plain matrix product by triple loop.
pub fn matmul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (n, k) = a.dim();
    let m = b.ncols();
    let mut c = Array2::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for l in 0..k {
                s += a[[i, l]] * b[[l, j]];
            }
            c[[i, j]] = s;
        }
    }
    c
}

/// `a^t` by `t` successive multiplications.
pub fn repeated_power(a: &Array2<f64>, t: u32) -> Array2<f64> {
    let mut r = Array2::eye(a.nrows());
    for _ in 0..t {
        r = matmul(&r, a);
    }
    r
}

/// Ward merges recomputed from scratch at every step: the pair minimising the
/// increase in within-cluster sum of squares, reported as `√(2·ΔSSE)`.
/// Cluster ids follow the usual convention (leaves `0..n`, merge `s` makes `n + s`);
/// ties go to the smallest `(a, b)`.
pub fn naive_ward(x: &Array2<f64>) -> Vec<(usize, usize, f64, usize)> {
    let n = x.nrows();
    let d = x.ncols();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    let centroid = |members: &[usize]| -> Vec<f64> {
        let mut c = vec![0.0; d];
        for &i in members {
            for k in 0..d {
                c[k] += x[[i, k]];
            }
        }
        c.iter().map(|v| v / members.len() as f64).collect()
    };
    let sse = |members: &[usize]| -> f64 {
        let c = centroid(members);
        members
            .iter()
            .map(|&i| (0..d).map(|k| (x[[i, k]] - c[k]).powi(2)).sum::<f64>())
            .sum()
    };
    while clusters.len() > 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let mut joined = clusters[a].1.clone();
                joined.extend(&clusters[b].1);
                let delta = sse(&joined) - sse(&clusters[a].1) - sse(&clusters[b].1);
                let (ida, idb) = (clusters[a].0, clusters[b].0);
                let key = (ida.min(idb), ida.max(idb));
                let better = match best {
                    None => true,
                    Some((ba, bb, bd)) => {
                        let bkey = (
                            clusters[ba].0.min(clusters[bb].0),
                            clusters[ba].0.max(clusters[bb].0),
                        );
                        delta < bd || (delta == bd && key < bkey)
                    }
                };
                if better {
                    best = Some((a, b, delta));
                }
            }
        }
        let (a, b, delta) = best.unwrap();
        let (ida, idb) = (clusters[a].0, clusters[b].0);
        let mut joined = clusters[a].1.clone();
        joined.extend(&clusters[b].1);
        let size = joined.len();
        merges.push((
            ida.min(idb),
            ida.max(idb),
            (2.0 * delta.max(0.0)).sqrt(),
            size,
        ));
        let new_id = n + merges.len() - 1;
        clusters.remove(b);
        clusters.remove(a);
        clusters.push((new_id, joined));
    }
    merges
}

/// ARI from explicit pair counting over all `C(n, 2)` pairs.
pub fn pair_counting_ari(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut neither) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => both += 1.0,
                (true, false) => only_a += 1.0,
                (false, true) => only_b += 1.0,
                (false, false) => neither += 1.0,
            }
        }
    }
    let denom = (both + only_a) * (only_a + neither) + (both + only_b) * (only_b + neither);
    if denom == 0.0 {
        return if only_a == 0.0 && only_b == 0.0 {
            1.0
        } else {
            0.0
        };
    }
    2.0 * (both * neither - only_a * only_b) / denom
}

pub fn random_partition(rng: &mut impl Rng, n: usize, max_clusters: usize) -> Vec<usize> {
    let k = rng.random_range(1..=max_clusters);
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// Diagram point as `(birth, death)`.
pub type Bar = (f64, f64);

fn linf(a: Bar, b: Bar) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

/// `W_p` by enumerating every partial matching between `a` and `b`.
pub fn brute_force_wasserstein(a: &[Bar], b: &[Bar], p: f64) -> f64 {
    fn go(i: usize, a: &[Bar], b: &[Bar], used: &mut Vec<bool>, p: f64) -> f64 {
        if i == a.len() {
            return b
                .iter()
                .zip(used.iter())
                .filter(|(_, &u)| !u)
                .map(|(q, _)| (0.5 * (q.1 - q.0)).powf(p))
                .sum();
        }
        let mut best = (0.5 * (a[i].1 - a[i].0)).powf(p) + go(i + 1, a, b, used, p);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(linf(a[i], b[j]).powf(p) + go(i + 1, a, b, used, p));
                used[j] = false;
            }
        }
        best
    }
    go(0, a, b, &mut vec![false; b.len()], p).powf(1.0 / p)
}

pub fn random_bars(rng: &mut impl Rng, max_points: usize) -> Vec<Bar> {
    let k = rng.random_range(0..=max_points);
    (0..k)
        .map(|_| {
            let b: f64 = rng.random::<f64>() * 2.0;
            (b, b + rng.random::<f64>() * 2.0 + 1e-3)
        })
        .collect()
}

/// Persistence pairs `(dim, birth, death)` from the textbook column reduction of
/// the full boundary matrix of the Rips filtration (all simplices up to
/// `max_dim + 1` within `threshold`). Simplices are ordered by diameter, then
/// dimension, then lexicographic vertices. Zero-length pairs above dimension 0
/// are dropped.
pub fn naive_rips_pairs(d: &Array2<f64>, max_dim: usize, threshold: f64) -> Vec<(usize, f64, f64)> {
    let mut simplices: Vec<(f64, Vec<usize>)> = Vec::new();
    fn rec(
        d: &Array2<f64>,
        start: usize,
        cur: &mut Vec<usize>,
        max_len: usize,
        threshold: f64,
        out: &mut Vec<(f64, Vec<usize>)>,
    ) {
        if !cur.is_empty() {
            let mut diam = 0.0f64;
            for i in 0..cur.len() {
                for j in (i + 1)..cur.len() {
                    diam = diam.max(d[[cur[i], cur[j]]]);
                }
            }
            if diam > threshold {
                return;
            }
            out.push((diam, cur.clone()));
        }
        if cur.len() == max_len {
            return;
        }
        for v in start..d.nrows() {
            cur.push(v);
            rec(d, v + 1, cur, max_len, threshold, out);
            cur.pop();
        }
    }
    rec(
        d,
        0,
        &mut Vec::new(),
        max_dim + 2,
        threshold,
        &mut simplices,
    );
    simplices.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.len().cmp(&b.1.len()))
            .then(a.1.cmp(&b.1))
    });
    let index: HashMap<Vec<usize>, usize> = simplices
        .iter()
        .enumerate()
        .map(|(i, s)| (s.1.clone(), i))
        .collect();

    let mut columns: Vec<BTreeSet<usize>> = simplices
        .iter()
        .map(|(_, verts)| {
            if verts.len() == 1 {
                return BTreeSet::new();
            }
            (0..verts.len())
                .map(|skip| {
                    let face: Vec<usize> = verts
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    index[&face]
                })
                .collect()
        })
        .collect();

    let mut low_owner: HashMap<usize, usize> = HashMap::new();
    let mut paired = vec![false; simplices.len()];
    let mut pairs = Vec::new();
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].iter().next_back() {
            match low_owner.get(&low) {
                Some(&k) => {
                    let other = columns[k].clone();
                    for x in other {
                        if !columns[j].remove(&x) {
                            columns[j].insert(x);
                        }
                    }
                }
                None => break,
            }
        }
        if let Some(&low) = columns[j].iter().next_back() {
            low_owner.insert(low, j);
            paired[low] = true;
            paired[j] = true;
            let dim = simplices[low].1.len() - 1;
            let (birth, death) = (simplices[low].0, simplices[j].0);
            if dim == 0 || death > birth {
                pairs.push((dim, birth, death));
            }
        }
    }
    for (i, (diam, verts)) in simplices.iter().enumerate() {
        let dim = verts.len() - 1;
        if !paired[i] && dim <= max_dim && columns[i].is_empty() {
            pairs.push((dim, *diam, f64::INFINITY));
        }
    }
    pairs.retain(|p| p.0 <= max_dim);
    pairs.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    });
    pairs
}

/// Median by full sort.
pub fn sorted_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Knee by projecting each curve point onto the chord and measuring the residual.
pub fn brute_force_knee(curve: &[(u32, f64)]) -> u32 {
    if curve.len() < 3 {
        return curve.first().map_or(1, |c| c.0);
    }
    let a = (curve[0].0 as f64, curve[0].1);
    let b = (curve[curve.len() - 1].0 as f64, curve[curve.len() - 1].1);
    let (ux, uy) = (b.0 - a.0, b.1 - a.1);
    let len2 = ux * ux + uy * uy;
    let mut best = (curve[0].0, 0.0);
    for &(t, h) in curve {
        let (px, py) = (t as f64 - a.0, h - a.1);
        let s = (px * ux + py * uy) / len2;
        let (rx, ry) = (px - s * ux, py - s * uy);
        let dist = (rx * rx + ry * ry).sqrt();
        if dist > best.1 + 1e-12 {
            best = (t, dist);
        }
    }
    best.0
}
