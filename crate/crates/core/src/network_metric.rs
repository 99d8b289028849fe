//! Per-network signatures and the `m × m` distance matrix between networks.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::ActivationSet;
use crate::diffusion::{self, pairwise_distances};
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, euclidean, frobenius_distance};

/// How a single network is turned into a comparable matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignatureMethod {
    /// Gaussian-kernel diffusion operator over the test points.
    #[default]
    Diffusion,
    /// The raw pairwise Euclidean distance matrix.
    RawDistance,
    /// Binary, OR-symmetrised k-nearest-neighbour adjacency.
    KnnAdjacency { k: usize },
    /// A layer's weight matrix, read from the manifest's `weights` entry.
    WeightMatrix { layer: usize },
}

impl fmt::Display for SignatureMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignatureMethod::Diffusion => write!(f, "diffusion"),
            SignatureMethod::RawDistance => write!(f, "distance"),
            SignatureMethod::KnnAdjacency { k } => write!(f, "knn(k={k})"),
            SignatureMethod::WeightMatrix { layer } => write!(f, "weights(layer={layer})"),
        }
    }
}

impl FromStr for SignatureMethod {
    type Err = Error;

    /// Accepts `diffusion`, `distance`, `knn[:k]` and `weights[:layer]`; `knn` defaults to `k = 5`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let index = |default: usize| -> Result<usize> {
            arg.map_or(Ok(default), |a| {
                a.parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad parameter in method `{s}`")))
            })
        };
        match (name, arg) {
            ("diffusion", None) => Ok(SignatureMethod::Diffusion),
            ("distance", None) => Ok(SignatureMethod::RawDistance),
            ("knn", _) => Ok(SignatureMethod::KnnAdjacency { k: index(5)? }),
            ("weights", _) => Ok(SignatureMethod::WeightMatrix { layer: index(0)? }),
            _ => Err(Error::InvalidArgument(format!(
                "unknown signature method `{s}` (expected diffusion|distance|knn[:k]|weights[:layer])"
            ))),
        }
    }
}

/// What a signature is computed from.
#[derive(Debug, Clone, Copy)]
pub enum SignatureSource<'a> {
    Activations(&'a ActivationSet),
    Weights {
        network_id: &'a str,
        matrix: Option<&'a Array2<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSignature {
    pub network_id: String,
    pub method: SignatureMethod,
    pub matrix: Array2<f64>,
}

/// Where the entries of a [`ManifoldMatrix`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ManifoldSource {
    Signature { method: SignatureMethod },
    DiagramWasserstein { p: f64 },
    Precomputed,
}

/// Symmetric `m × m` distance matrix between networks.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldMatrix {
    pub matrix: Array2<f64>,
    pub source: ManifoldSource,
    pub network_ids: Vec<String>,
}

impl ManifoldMatrix {
    /// Wraps an externally computed matrix, checking the distance invariants.
    pub fn precomputed(matrix: Array2<f64>, network_ids: Vec<String>) -> Result<Self> {
        let m = matrix.nrows();
        if matrix.ncols() != m || network_ids.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} manifold matrix with {} ids",
                m,
                matrix.ncols(),
                network_ids.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite() || *v < 0.0)
            || (0..m).any(|i| matrix[[i, i]] != 0.0)
            || asymmetry(matrix.view()) > 1e-12
        {
            return Err(Error::InvalidArgument(
                "manifold matrix must be finite, non-negative, symmetric with zero diagonal".into(),
            ));
        }
        Ok(Self {
            matrix,
            source: ManifoldSource::Precomputed,
            network_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.network_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.network_ids.is_empty()
    }
}

pub fn signature(
    source: SignatureSource<'_>,
    method: SignatureMethod,
    sigma: f64,
) -> Result<NetworkSignature> {
    let (network_id, matrix) = match (method, source) {
        (SignatureMethod::WeightMatrix { .. }, SignatureSource::Weights { network_id, matrix }) => {
            let w = matrix.ok_or_else(|| Error::MissingWeights(network_id.to_string()))?;
            (network_id.to_string(), w.clone())
        }
        (SignatureMethod::WeightMatrix { .. }, SignatureSource::Activations(acts)) => {
            return Err(Error::MissingWeights(acts.network_id.clone()))
        }
        (_, SignatureSource::Weights { network_id, .. }) => {
            return Err(Error::InvalidArgument(format!(
                "method {method} needs activations for `{network_id}`, got weights"
            )))
        }
        (SignatureMethod::Diffusion, SignatureSource::Activations(acts)) => {
            let p = diffusion::diffusion_operator_from(acts, sigma)?;
            (acts.network_id.clone(), p.matrix().clone())
        }
        (SignatureMethod::RawDistance, SignatureSource::Activations(acts)) => (
            acts.network_id.clone(),
            pairwise_distances(acts).into_inner(),
        ),
        (SignatureMethod::KnnAdjacency { k }, SignatureSource::Activations(acts)) => (
            acts.network_id.clone(),
            knn_adjacency(acts.matrix.view(), k)?,
        ),
    };
    Ok(NetworkSignature {
        network_id,
        method,
        matrix,
    })
}

/// Binary k-NN graph, OR-symmetrised, self excluded, distance ties broken by lower index.
pub fn knn_adjacency(points: ArrayView2<'_, f64>, k: usize) -> Result<Array2<f64>> {
    let n = points.nrows();
    if k == 0 || k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    let mut adj = Array2::zeros((n, n));
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (euclidean(points.row(i), points.row(j)), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in others.iter().take(k) {
            adj[[i, j]] = 1.0;
            adj[[j, i]] = 1.0;
        }
    }
    Ok(adj)
}

/// `N_ij = ‖S_i − S_j‖_F` over all signature pairs.
pub fn manifold_matrix(signatures: &[NetworkSignature]) -> Result<ManifoldMatrix> {
    let m = signatures.len();
    if m < 2 {
        return Err(Error::TooFewNetworks { needed: 2, got: m });
    }
    let first = &signatures[0];
    for s in &signatures[1..] {
        if s.method != first.method {
            return Err(Error::MethodMismatch);
        }
        if s.matrix.dim() != first.matrix.dim() {
            return Err(Error::ShapeMismatch(format!(
                "signature `{}` is {:?}, `{}` is {:?}",
                first.network_id,
                first.matrix.dim(),
                s.network_id,
                s.matrix.dim()
            )));
        }
    }
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| frobenius_distance(signatures[i].matrix.view(), signatures[j].matrix.view()))
        .collect();
    let mut matrix = Array2::zeros((m, m));
    for (&(i, j), v) in pairs.iter().zip(values) {
        matrix[[i, j]] = v;
        matrix[[j, i]] = v;
    }
    Ok(ManifoldMatrix {
        matrix,
        source: ManifoldSource::Signature {
            method: first.method,
        },
        network_ids: signatures.iter().map(|s| s.network_id.clone()).collect(),
    })
}

/// Indices of the `n_top` most accurate networks: accuracy descending, then id ascending.
pub fn top_n_indices(accuracies: &[f64], ids: &[String], n_top: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..accuracies.len()).collect();
    order.sort_by(|&a, &b| {
        accuracies[b]
            .total_cmp(&accuracies[a])
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    order.truncate(n_top);
    order
}

fn mean_pairwise(embedding: ArrayView2<'_, f64>, idx: &[usize]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            sum += euclidean(embedding.row(i), embedding.row(j));
            count += 1;
        }
    }
    sum / count as f64
}

/// Mean pairwise embedding distance among the `n_top` most accurate networks,
/// normalised by the mean over all pairs.
pub fn topn_tightness(
    embedding: ArrayView2<'_, f64>,
    accuracies: &[f64],
    ids: &[String],
    n_top: usize,
) -> Result<f64> {
    let m = embedding.nrows();
    if accuracies.len() != m {
        return Err(Error::LengthMismatch(accuracies.len(), m));
    }
    if ids.len() != m {
        return Err(Error::LengthMismatch(ids.len(), m));
    }
    if n_top < 2 {
        return Err(Error::TooFewNetworks {
            needed: 2,
            got: n_top,
        });
    }
    if n_top > m {
        return Err(Error::TooFewNetworks {
            needed: n_top,
            got: m,
        });
    }
    let all: Vec<usize> = (0..m).collect();
    let overall = mean_pairwise(embedding, &all);
    if overall.is_nan() || overall <= 0.0 {
        return Err(Error::DegenerateInput(
            "all embedded networks coincide".into(),
        ));
    }
    let top = top_n_indices(accuracies, ids, n_top);
    Ok(mean_pairwise(embedding, &top) / overall)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n{i}")).collect()
    }

    #[test]
    fn knn_on_a_line() {
        let pts = array![[0.0], [1.0], [3.0]];
        let a = knn_adjacency(pts.view(), 1).unwrap();
        assert_eq!(a, array![[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]);
        assert!(matches!(
            knn_adjacency(pts.view(), 3),
            Err(Error::KTooLarge { k: 3, n: 3 })
        ));
        assert!(knn_adjacency(pts.view(), 0).is_err());
    }

    #[test]
    fn knn_ties_prefer_lower_index() {
        // Point 1 is equidistant from 0 and 2.
        let pts = array![[0.0], [1.0], [2.0], [10.0]];
        let a = knn_adjacency(pts.view(), 1).unwrap();
        assert_eq!(a[[1, 0]], 1.0);
        assert_eq!(a[[3, 2]], 1.0);
        assert_eq!(a[[1, 2]], 1.0); // 2's nearest is 1
    }

    #[test]
    fn missing_weights() {
        let src = SignatureSource::Weights {
            network_id: "x",
            matrix: None,
        };
        assert!(matches!(
            signature(src, SignatureMethod::WeightMatrix { layer: 0 }, 0.5),
            Err(Error::MissingWeights(_))
        ));
    }

    #[test]
    fn diffusion_signature_is_stochastic() {
        let acts = ActivationSet::new("a", array![[0.0, 0.1], [0.4, 0.3], [1.0, -0.2]]);
        let s = signature(
            SignatureSource::Activations(&acts),
            SignatureMethod::Diffusion,
            0.5,
        )
        .unwrap();
        for row in s.matrix.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    fn sig(id: &str, m: Array2<f64>) -> NetworkSignature {
        NetworkSignature {
            network_id: id.into(),
            method: SignatureMethod::RawDistance,
            matrix: m,
        }
    }

    #[test]
    fn frobenius_entries() {
        let n = manifold_matrix(&[
            sig("a", array![[1.0, 0.0], [0.0, 1.0]]),
            sig("b", array![[0.0, 0.0], [0.0, 0.0]]),
            sig("c", array![[1.0, 0.0], [0.0, 1.0]]),
        ])
        .unwrap();
        assert!((n.matrix[[0, 1]] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(n.matrix[[0, 2]], 0.0);
        assert_eq!(n.matrix[[1, 0]], n.matrix[[0, 1]]);
    }

    #[test]
    fn manifold_errors() {
        let a = sig("a", Array2::zeros((2, 2)));
        let b = sig("b", Array2::zeros((3, 3)));
        assert!(matches!(
            manifold_matrix(&[a.clone(), b]),
            Err(Error::ShapeMismatch(_))
        ));
        let mut c = sig("c", Array2::zeros((2, 2)));
        c.method = SignatureMethod::Diffusion;
        assert!(matches!(
            manifold_matrix(&[a.clone(), c]),
            Err(Error::MethodMismatch)
        ));
        assert!(matches!(
            manifold_matrix(&[a]),
            Err(Error::TooFewNetworks { .. })
        ));
    }

    #[test]
    fn tightness_unit_square() {
        let square = array![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let acc = [0.9, 0.95, 0.5, 0.4];
        let t = topn_tightness(square.view(), &acc, &ids(4), 2).unwrap();
        let expected = 1.0 / ((4.0 + 2.0 * 2f64.sqrt()) / 6.0);
        assert!((t - expected).abs() < 1e-12);
        assert!((t - 0.8787).abs() < 1e-4);
    }

    #[test]
    fn tightness_zero_when_top_coincide() {
        let pts = array![[1.0, 1.0], [1.0, 1.0], [5.0, 0.0], [-3.0, 2.0]];
        let t = topn_tightness(pts.view(), &[0.99, 0.98, 0.1, 0.2], &ids(4), 2).unwrap();
        assert_eq!(t, 0.0);
        assert!(matches!(
            topn_tightness(pts.view(), &[0.99, 0.98, 0.1, 0.2], &ids(4), 1),
            Err(Error::TooFewNetworks { .. })
        ));
    }

    #[test]
    fn top_n_ties_by_id() {
        let names: Vec<String> = vec!["b".into(), "a".into(), "c".into()];
        assert_eq!(top_n_indices(&[0.5, 0.5, 0.9], &names, 2), vec![2, 1]);
    }

    #[test]
    fn method_parsing() {
        assert_eq!(
            "knn".parse::<SignatureMethod>().unwrap(),
            SignatureMethod::KnnAdjacency { k: 5 }
        );
        assert_eq!(
            "knn:3".parse::<SignatureMethod>().unwrap(),
            SignatureMethod::KnnAdjacency { k: 3 }
        );
        assert!("knn:x".parse::<SignatureMethod>().is_err());
        assert!("bogus".parse::<SignatureMethod>().is_err());
    }
}
