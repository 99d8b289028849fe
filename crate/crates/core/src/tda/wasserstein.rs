//! p-Wasserstein distance between persistence diagrams under the L∞ ground metric,
//! solved exactly as an assignment problem in which every point may instead be
//! matched to its projection on the diagonal.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DiagramPoint, PersistenceDiagram};
use crate::error::{Error, Result};
use crate::network_metric::{ManifoldMatrix, ManifoldSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "value", rename_all = "snake_case")]
pub enum InfinitePointPolicy {
    Drop,
    Cap(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramDistanceConfig {
    pub p: f64,
    pub infinite_points: InfinitePointPolicy,
}

impl Default for DiagramDistanceConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            infinite_points: InfinitePointPolicy::Drop,
        }
    }
}

impl DiagramDistanceConfig {
    fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "Wasserstein order p must be finite and >= 1, got {}",
                self.p
            )));
        }
        Ok(())
    }
}

/// Minimum-cost perfect assignment on a square cost matrix (shortest augmenting
/// paths with dual potentials, O(n³)). Returns `(total, column assigned to each row)`.
pub fn hungarian(cost: &Array2<f64>) -> (f64, Vec<usize>) {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "assignment needs a square cost matrix");
    if n == 0 {
        return (0.0, Vec::new());
    }
    let flat: Vec<f64> = cost.iter().copied().collect();
    // 1-based internally; index 0 is the virtual start column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            let row = &flat[(i0 - 1) * n..i0 * n];
            let ui = u[i0];
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - ui - v[j];
                if cur < min_to[j] {
                    min_to[j] = cur;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    let total = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[[i, j]])
        .sum();
    (total, assignment)
}

fn prepare(points: &[DiagramPoint], policy: InfinitePointPolicy) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        if p.death.is_finite() {
            out.push((p.birth, p.death));
            continue;
        }
        match policy {
            InfinitePointPolicy::Drop => {}
            InfinitePointPolicy::Cap(c) if c.is_finite() => out.push((p.birth, c.max(p.birth))),
            InfinitePointPolicy::Cap(_) => return Err(Error::InfinitePointMismatch),
        }
    }
    Ok(out)
}

fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

/// L∞ distance from a point to the diagonal.
fn to_diagonal(a: (f64, f64)) -> f64 {
    0.5 * (a.1 - a.0)
}

/// Optimal total `Σ cost^p` over partial matchings of two point sets.
fn matching_cost(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> f64 {
    let (na, nb) = (a.len(), b.len());
    let size = na + nb;
    if size == 0 {
        return 0.0;
    }
    match shared_birth(a, b) {
        Some(birth) => line_matching_cost(a, b, birth, p),
        None => assignment_cost(a, b, p),
    }
}

fn assignment_cost(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> f64 {
    let (na, nb) = (a.len(), b.len());
    let size = na + nb;
    let mut cost = Array2::zeros((size, size));
    for i in 0..size {
        for j in 0..size {
            cost[[i, j]] = match (i < na, j < nb) {
                (true, true) => linf(a[i], b[j]).powf(p),
                (true, false) => to_diagonal(a[i]).powf(p),
                (false, true) => to_diagonal(b[j]).powf(p),
                (false, false) => 0.0,
            };
        }
    }
    hungarian(&cost).0.max(0.0)
}

fn shared_birth(a: &[(f64, f64)], b: &[(f64, f64)]) -> Option<f64> {
    let birth = a.first().or(b.first())?.0;
    a.iter().chain(b).all(|q| q.0 == birth).then_some(birth)
}

/// Points with a common birth lie on a line, where `|x - y|^p` is convex and an
/// optimal partial matching pairs sorted deaths without crossings.
fn line_matching_cost(a: &[(f64, f64)], b: &[(f64, f64)], birth: f64, p: f64) -> f64 {
    let sorted = |s: &[(f64, f64)]| {
        let mut d: Vec<f64> = s.iter().map(|q| q.1).collect();
        d.sort_by(f64::total_cmp);
        d
    };
    let (x, y) = (sorted(a), sorted(b));
    let drop = |d: f64| (0.5 * (d - birth)).powf(p);
    let mut prev: Vec<f64> = std::iter::once(0.0)
        .chain(y.iter().scan(0.0, |acc, &d| {
            *acc += drop(d);
            Some(*acc)
        }))
        .collect();
    let mut cur = vec![0.0; y.len() + 1];
    for &xi in &x {
        cur[0] = prev[0] + drop(xi);
        for (j, &yj) in y.iter().enumerate() {
            cur[j + 1] = (prev[j + 1] + drop(xi))
                .min(cur[j] + drop(yj))
                .min(prev[j] + (xi - yj).abs().powf(p));
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[y.len()]
}

/// `W_p` between the points of `a` and `b`. Both are taken as they are, so callers
/// split diagrams by homology dimension first (see [`wasserstein_per_dimension`]).
pub fn wasserstein_distance(
    a: &[DiagramPoint],
    b: &[DiagramPoint],
    config: &DiagramDistanceConfig,
) -> Result<f64> {
    config.validate()?;
    let pa = prepare(a, config.infinite_points)?;
    let pb = prepare(b, config.infinite_points)?;
    Ok(matching_cost(&pa, &pb, config.p).powf(1.0 / config.p))
}

/// `W_p` for each homology dimension `0..=max_dim`.
pub fn wasserstein_per_dimension(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    max_dim: usize,
    config: &DiagramDistanceConfig,
) -> Result<Vec<f64>> {
    (0..=max_dim)
        .map(|dim| {
            let pa: Vec<DiagramPoint> = a.dimension(dim).copied().collect();
            let pb: Vec<DiagramPoint> = b.dimension(dim).copied().collect();
            wasserstein_distance(&pa, &pb, config)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramManifold {
    /// Entry `(Σ_dim W_p^p)^{1/p}`.
    pub combined: ManifoldMatrix,
    /// One `m × m` matrix of `W_p` per homology dimension.
    pub per_dimension: Vec<Array2<f64>>,
}

/// Pairwise diagram distances between networks.
pub fn diagram_manifold(
    diagrams: &[PersistenceDiagram],
    max_dim: usize,
    config: &DiagramDistanceConfig,
) -> Result<DiagramManifold> {
    config.validate()?;
    let m = diagrams.len();
    if m < 2 {
        return Err(Error::TooFewNetworks { needed: 2, got: m });
    }
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| wasserstein_per_dimension(&diagrams[i], &diagrams[j], max_dim, config))
        .collect::<Result<Vec<_>>>()?;
    let mut combined = Array2::zeros((m, m));
    let mut per_dimension = vec![Array2::zeros((m, m)); max_dim + 1];
    for (&(i, j), dims) in pairs.iter().zip(values) {
        let total = dims
            .iter()
            .map(|w| w.powf(config.p))
            .sum::<f64>()
            .powf(1.0 / config.p);
        combined[[i, j]] = total;
        combined[[j, i]] = total;
        for (k, w) in dims.into_iter().enumerate() {
            per_dimension[k][[i, j]] = w;
            per_dimension[k][[j, i]] = w;
        }
    }
    Ok(DiagramManifold {
        combined: ManifoldMatrix {
            matrix: combined,
            source: ManifoldSource::DiagramWasserstein { p: config.p },
            network_ids: diagrams.iter().map(|d| d.network_id.clone()).collect(),
        },
        per_dimension,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn pt(birth: f64, death: f64) -> DiagramPoint {
        DiagramPoint {
            dim: 1,
            birth,
            death,
        }
    }

    #[test]
    fn line_matching_agrees_with_assignment() {
        let mut state = 7u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for trial in 0..200 {
            let birth = if trial % 2 == 0 { 0.0 } else { next() };
            let mut cloud = |n: usize| -> Vec<(f64, f64)> {
                (0..n).map(|_| (birth, birth + 2.0 * next())).collect()
            };
            let a = cloud(trial % 9);
            let b = cloud((trial / 9) % 7);
            for p in [1.0, 1.5, 2.0, 3.0] {
                let line = line_matching_cost(&a, &b, birth, p);
                let full = if a.is_empty() && b.is_empty() {
                    0.0
                } else {
                    assignment_cost(&a, &b, p)
                };
                assert!((line - full).abs() < 1e-10, "{line} vs {full}");
            }
        }
    }

    #[test]
    fn hungarian_small() {
        let c = array![[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let (total, assign) = hungarian(&c);
        assert_eq!(total, 5.0);
        assert_eq!(assign, vec![1, 0, 2]);
    }

    #[test]
    fn diagram_hand_cases() {
        let cfg = DiagramDistanceConfig::default();
        let a = [pt(0.0, 1.0)];
        assert_eq!(wasserstein_distance(&a, &a, &cfg).unwrap(), 0.0);
        assert!((wasserstein_distance(&a, &[], &cfg).unwrap() - 0.5).abs() < 1e-15);
        let w = wasserstein_distance(&[pt(0.0, 2.0)], &a, &cfg).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn infinite_policies() {
        let a = [pt(0.0, 1.0), pt(0.0, f64::INFINITY)];
        let b = [pt(0.0, 1.0)];
        let drop = DiagramDistanceConfig::default();
        assert_eq!(wasserstein_distance(&a, &b, &drop).unwrap(), 0.0);
        let cap = DiagramDistanceConfig {
            infinite_points: InfinitePointPolicy::Cap(4.0),
            ..drop
        };
        assert!((wasserstein_distance(&a, &b, &cap).unwrap() - 2.0).abs() < 1e-15);
        let bad = DiagramDistanceConfig {
            infinite_points: InfinitePointPolicy::Cap(f64::INFINITY),
            ..drop
        };
        assert!(matches!(
            wasserstein_distance(&a, &b, &bad),
            Err(Error::InfinitePointMismatch)
        ));
        let p0 = DiagramDistanceConfig { p: 0.5, ..drop };
        assert!(wasserstein_distance(&a, &b, &p0).is_err());
    }

    #[test]
    fn manifold_only_h1_differs() {
        let d0 = DiagramPoint {
            dim: 0,
            birth: 0.0,
            death: 0.7,
        };
        let a = PersistenceDiagram::new("a", vec![d0, pt(0.2, 0.9)]);
        let b = PersistenceDiagram::new("b", vec![d0, pt(0.3, 0.6)]);
        let cfg = DiagramDistanceConfig::default();
        let man = diagram_manifold(&[a.clone(), b.clone()], 1, &cfg).unwrap();
        let h1 = wasserstein_distance(
            &a.dimension(1).copied().collect::<Vec<_>>(),
            &b.dimension(1).copied().collect::<Vec<_>>(),
            &cfg,
        )
        .unwrap();
        assert!((man.combined.matrix[[0, 1]] - h1).abs() < 1e-15);
        assert_eq!(man.per_dimension[0][[0, 1]], 0.0);

        let same = diagram_manifold(&[a.clone(), a.clone(), a], 1, &cfg).unwrap();
        assert!(same.combined.matrix.iter().all(|&v| v == 0.0));
    }
}
