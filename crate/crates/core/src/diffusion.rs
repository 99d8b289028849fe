//! Kernels, diffusion operators and their spectra.
//!
//! A point cloud becomes a Markov operator in three steps: Euclidean distances,
//! a Gaussian affinity `W`, and row normalisation `P = Q⁻¹W` with `Q` the degree
//! matrix. Because `W` is symmetric, `P` is similar to `Q^{-1/2} W Q^{-1/2}`; all
//! spectral quantities are computed from that symmetric conjugate so eigenvalues
//! are real by construction.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::corpus::ActivationSet;
use crate::error::{Error, Result};
use crate::linalg::{self, euclidean};

/// Cutoff below which an eigenvalue counts as numerically zero.
pub const RANK_CUTOFF: f64 = 1e-12;
pub const DEFAULT_SIGMA: f64 = 0.5;

/// Symmetric, non-negative, zero-diagonal matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    matrix: Array2<f64>,
}

impl DistanceMatrix {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "distance matrix must be square, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "distances must be finite and non-negative".into(),
            ));
        }
        if (0..n).any(|i| matrix[[i, i]] != 0.0) {
            return Err(Error::InvalidArgument(
                "distance matrix diagonal must be zero".into(),
            ));
        }
        if linalg::asymmetry(matrix.view()) > 1e-12 {
            return Err(Error::InvalidArgument(
                "distance matrix is not symmetric".into(),
            ));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[[i, j]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Gaussian { sigma: f64 },
    AlphaDecay { knn: usize, alpha: f64 },
}

/// Symmetric affinity matrix with unit diagonal and entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub matrix: Array2<f64>,
    pub kernel: Kernel,
}

/// Row-stochastic Markov operator `P = Q⁻¹W` together with the degrees `diag(Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionOperator {
    matrix: Array2<f64>,
    degree: Array1<f64>,
}

impl DiffusionOperator {
    /// Wraps an operator whose rows already sum to one. `degree` must be the row
    /// sums of the symmetric affinity it came from (it drives reversibility).
    pub fn new(matrix: Array2<f64>, degree: Array1<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || degree.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "operator {}x{} with {} degrees",
                n,
                matrix.ncols(),
                degree.len()
            )));
        }
        if degree.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidArgument("degrees must be positive".into()));
        }
        if matrix.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "operator entries must be finite and non-negative".into(),
            ));
        }
        let op = Self { matrix, degree };
        if op.row_sum_error() > 1e-10 {
            return Err(Error::InvalidArgument(
                "operator is not row-stochastic".into(),
            ));
        }
        Ok(op)
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn degree(&self) -> &Array1<f64> {
        &self.degree
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// `max_i |Σ_j P_ij − 1|`.
    pub fn row_sum_error(&self) -> f64 {
        self.matrix
            .sum_axis(Axis(1))
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `Q^{1/2} P Q^{-1/2}`, symmetric whenever the operator came from a symmetric
    /// affinity (and for all of its powers).
    pub fn symmetric_conjugate(&self) -> Array2<f64> {
        let sq: Array1<f64> = self.degree.mapv(f64::sqrt);
        let n = self.len();
        let mut s = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                s[[i, j]] = sq[i] * self.matrix[[i, j]] / sq[j];
            }
        }
        s
    }
}

/// Eigenvalues of a diffusion operator, sorted by descending magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSpectrum {
    pub eigenvalues: Vec<f64>,
}

impl DiffusionSpectrum {
    pub fn new(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        Self { eigenvalues }
    }
}

pub fn pairwise_distances(activations: &ActivationSet) -> DistanceMatrix {
    pairwise_distances_of(activations.matrix.view())
}

/// Euclidean distances between the rows of `points`.
pub fn pairwise_distances_of(points: ArrayView2<'_, f64>) -> DistanceMatrix {
    let n = points.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = euclidean(points.row(i), points.row(j));
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    DistanceMatrix { matrix: d }
}

/// `W_ij = exp(−D_ij² / 2σ²)`.
pub fn gaussian_affinity(d: &DistanceMatrix, sigma: f64) -> Result<AffinityMatrix> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidSigma(sigma));
    }
    let denom = 2.0 * sigma * sigma;
    let mut w = d.matrix.mapv(|x| (-(x * x) / denom).exp());
    w.diag_mut().fill(1.0);
    Ok(AffinityMatrix {
        matrix: w,
        kernel: Kernel::Gaussian { sigma },
    })
}

/// Row-normalises an affinity: `P_ij = W_ij / Σ_k W_ik`.
pub fn diffusion_operator(w: &AffinityMatrix) -> Result<DiffusionOperator> {
    let degree = w.matrix.sum_axis(Axis(1));
    if let Some(i) = degree.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::ZeroRow(i));
    }
    let mut p = w.matrix.clone();
    for (mut row, &deg) in p.rows_mut().into_iter().zip(degree.iter()) {
        row.mapv_inplace(|v| v / deg);
    }
    Ok(DiffusionOperator { matrix: p, degree })
}

/// Full chain from activations to the Gaussian diffusion operator.
pub fn diffusion_operator_from(
    activations: &ActivationSet,
    sigma: f64,
) -> Result<DiffusionOperator> {
    let d = pairwise_distances(activations);
    let w = gaussian_affinity(&d, sigma)?;
    diffusion_operator(&w)
}

/// `Pᵗ` by binary exponentiation; `t = 0` gives the identity.
pub fn diffusion_power(p: &DiffusionOperator, t: u32) -> DiffusionOperator {
    let n = p.len();
    let mut result = Array2::eye(n);
    let mut base = p.matrix.clone();
    let mut e = t;
    while e > 0 {
        if e & 1 == 1 {
            result = result.dot(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.dot(&base);
        }
    }
    DiffusionOperator {
        matrix: result,
        degree: p.degree.clone(),
    }
}

/// Degree-proportional stationary distribution `π_i = q_i / Σ q`.
pub fn stationary_distribution(p: &DiffusionOperator) -> Array1<f64> {
    let total = p.degree.sum();
    p.degree.mapv(|d| d / total)
}

pub fn spectrum(p: &DiffusionOperator) -> Result<DiffusionSpectrum> {
    let s = p.symmetric_conjugate();
    let eig = linalg::sym_eigen(s.view())?;
    Ok(DiffusionSpectrum::new(eig.values.to_vec()))
}

/// Normalised `|λ|ᵗ` weights. At `t = 0` we take `0⁰ = 0`, so the weights are
/// uniform over eigenvalues above [`RANK_CUTOFF`].
fn spectral_weights(eigenvalues: &[f64], t: u32) -> Result<Vec<f64>> {
    let powered: Vec<f64> = eigenvalues
        .iter()
        .map(|l| {
            if t == 0 {
                if l.abs() > RANK_CUTOFF {
                    1.0
                } else {
                    0.0
                }
            } else {
                l.abs().powi(t as i32)
            }
        })
        .collect();
    let total: f64 = powered.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(powered.into_iter().map(|v| v / total).collect())
}

/// Shannon entropy (nats) of a probability vector; zero entries contribute nothing.
pub(crate) fn entropy(probabilities: &[f64]) -> f64 {
    -probabilities
        .iter()
        .filter(|&&a| a > 0.0)
        .map(|&a| a * a.ln())
        .sum::<f64>()
}

/// Diffusion spectral entropy `−Σ α log α`, `α_i = |λ_i|ᵗ / Σ_j |λ_j|ᵗ`.
pub fn diffusion_spectral_entropy(s: &DiffusionSpectrum, t: u32) -> Result<f64> {
    if s.eigenvalues.is_empty() {
        return Err(Error::DegenerateSpectrum);
    }
    let alpha = spectral_weights(&s.eigenvalues, t)?;
    Ok(entropy(&alpha).max(0.0))
}

/// DSE of the whole cloud minus the label-frequency-weighted DSE of each class.
pub fn diffusion_spectral_mutual_information(
    activations: &ActivationSet,
    labels: &[usize],
    t: u32,
    sigma: f64,
) -> Result<f64> {
    let n = activations.n_points();
    if labels.len() != n {
        return Err(Error::LengthMismatch(labels.len(), n));
    }
    let dse_of = |acts: &ActivationSet| -> Result<f64> {
        let p = diffusion_operator_from(acts, sigma)?;
        diffusion_spectral_entropy(&spectrum(&p)?, t)
    };

    let classes = class_members(labels);
    for (class, members) in classes.iter().enumerate() {
        if !members.is_empty() && members.len() < 2 {
            return Err(Error::DegenerateClass(class));
        }
    }

    let total = dse_of(activations)?;
    let mut conditional = 0.0;
    for members in classes.iter().filter(|m| !m.is_empty()) {
        let subset = ActivationSet::new(
            activations.network_id.clone(),
            activations.matrix.select(Axis(0), members),
        );
        conditional += members.len() as f64 / n as f64 * dse_of(&subset)?;
    }
    Ok(total - conditional)
}

/// Indices of each class, indexed by label value.
pub(crate) fn class_members(labels: &[usize]) -> Vec<Vec<usize>> {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        out[l].push(i);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn acts(m: Array2<f64>) -> ActivationSet {
        ActivationSet::new("t", m)
    }

    #[test]
    fn three_four_five() {
        let d = pairwise_distances(&acts(array![[0.0, 0.0], [3.0, 4.0], [0.0, 0.0]]));
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(0, 2), 0.0);
        assert_eq!(d.get(1, 1), 0.0);
    }

    #[test]
    fn kernel_values() {
        let d = DistanceMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let w = gaussian_affinity(&d, 0.5).unwrap();
        assert_eq!(w.matrix[[0, 0]], 1.0);
        assert!((w.matrix[[0, 1]] - 0.1353352832366127).abs() < 1e-12);
        assert!(matches!(
            gaussian_affinity(&d, 0.0),
            Err(Error::InvalidSigma(_))
        ));
        assert!(matches!(
            gaussian_affinity(&d, f64::NAN),
            Err(Error::InvalidSigma(_))
        ));
    }

    #[test]
    fn two_point_operator() {
        let e2 = (-2.0f64).exp();
        let w = AffinityMatrix {
            matrix: array![[1.0, e2], [e2, 1.0]],
            kernel: Kernel::Gaussian { sigma: 0.5 },
        };
        let p = diffusion_operator(&w).unwrap();
        assert!((p.matrix()[[0, 0]] - 1.0 / (1.0 + e2)).abs() < 1e-15);
        assert!((p.matrix()[[0, 0]] - 0.8807970779778823).abs() < 1e-12);
        assert!(p.row_sum_error() < 1e-15);
    }

    #[test]
    fn far_apart_points_give_identity() {
        let d = pairwise_distances(&acts(array![[0.0], [100.0], [250.0]]));
        let p = diffusion_operator(&gaussian_affinity(&d, 0.5).unwrap()).unwrap();
        assert_eq!(p.matrix(), &Array2::<f64>::eye(3));
    }

    #[test]
    fn zero_row_is_rejected() {
        let w = AffinityMatrix {
            matrix: array![[0.0, 0.0], [0.0, 1.0]],
            kernel: Kernel::Gaussian { sigma: 1.0 },
        };
        assert!(matches!(diffusion_operator(&w), Err(Error::ZeroRow(0))));
    }

    fn two_state(a: f64) -> DiffusionOperator {
        DiffusionOperator::new(array![[1.0 - a, a], [a, 1.0 - a]], array![1.0, 1.0]).unwrap()
    }

    #[test]
    fn powers() {
        let p = two_state(0.3);
        assert_eq!(diffusion_power(&p, 0).matrix(), &Array2::<f64>::eye(2));
        assert_eq!(diffusion_power(&p, 1).matrix(), p.matrix());
    }

    #[test]
    fn stationary_by_degree() {
        let p =
            DiffusionOperator::new(array![[0.5, 0.5], [1.0 / 6.0, 5.0 / 6.0]], array![1.0, 3.0])
                .unwrap();
        let pi = stationary_distribution(&p);
        assert_eq!(pi.to_vec(), vec![0.25, 0.75]);
        let u = stationary_distribution(&two_state(0.2));
        assert_eq!(u.to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn two_state_spectrum() {
        let s = spectrum(&two_state(0.2)).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((s.eigenvalues[1] - 0.6).abs() < 1e-12);
        let id = DiffusionOperator::new(Array2::eye(4), Array1::ones(4)).unwrap();
        assert!(spectrum(&id)
            .unwrap()
            .eigenvalues
            .iter()
            .all(|l| (l - 1.0).abs() < 1e-12));
    }

    #[test]
    fn dse_hand_values() {
        let s = DiffusionSpectrum::new(vec![0.5, 1.0, 0.5]);
        let expected = -(0.5f64 * 0.5f64.ln() + 2.0 * 0.25 * 0.25f64.ln());
        let got = diffusion_spectral_entropy(&s, 1).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 1.0397207708399179).abs() < 1e-12);
        assert_eq!(
            diffusion_spectral_entropy(&DiffusionSpectrum::new(vec![1.0]), 3).unwrap(),
            0.0
        );
        let zero = DiffusionSpectrum::new(vec![0.0, 0.0]);
        assert!(matches!(
            diffusion_spectral_entropy(&zero, 1),
            Err(Error::DegenerateSpectrum)
        ));
    }

    #[test]
    fn dse_at_t0_counts_numerical_rank() {
        let s = DiffusionSpectrum::new(vec![1.0, 0.3, 1e-14, 0.0]);
        let h = diffusion_spectral_entropy(&s, 0).unwrap();
        assert!((h - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn dsmi_single_label_is_zero() {
        let m = array![[0.0, 0.1], [0.3, 0.2], [0.5, 0.9], [1.0, 0.4]];
        let i = diffusion_spectral_mutual_information(&acts(m), &[0, 0, 0, 0], 1, 0.5).unwrap();
        assert!(i.abs() < 1e-12);
    }

    #[test]
    fn dsmi_rejects_singleton_class() {
        let m = array![[0.0], [0.3], [0.5]];
        assert!(matches!(
            diffusion_spectral_mutual_information(&acts(m), &[0, 0, 1], 1, 0.5),
            Err(Error::DegenerateClass(1))
        ));
    }

    #[test]
    fn distance_matrix_validation() {
        assert!(DistanceMatrix::new(array![[0.0, 1.0], [2.0, 0.0]]).is_err());
        assert!(DistanceMatrix::new(array![[1.0, 1.0], [1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::new(array![[0.0, -1.0], [-1.0, 0.0]]).is_err());
    }
}
