//! Graph Fourier analysis of scalar signals (accuracy, hyperparameters, widths)
//! living on the vertices of the network manifold.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SymEigen};
use crate::network_metric::ManifoldMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// Median of the strictly-upper-triangular distances.
    Median,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    /// `I − D⁻¹W`
    RandomWalk,
    /// `I − D^{-1/2} W D^{-1/2}`
    SymmetricNormalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldGraph {
    pub affinity: Array2<f64>,
    pub degree: Array1<f64>,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSignal {
    pub name: String,
    pub values: Vec<f64>,
}

impl GraphSignal {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

/// One non-trivial harmonic and the magnitude of the signal's coefficient on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralComponent {
    pub eigenvalue: f64,
    pub abs_inner_product: f64,
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

/// Gaussian affinity `exp(−N²/2σ²)` over the network distances.
pub fn manifold_graph(n: &ManifoldMatrix, bandwidth: Bandwidth) -> Result<ManifoldGraph> {
    let m = n.len();
    if m < 3 {
        return Err(Error::TooFewNetworks { needed: 3, got: m });
    }
    let upper: Vec<f64> = (0..m)
        .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
        .map(|(i, j)| n.matrix[[i, j]])
        .collect();
    if upper.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateDistances);
    }
    let sigma = match bandwidth {
        Bandwidth::Median => {
            let nonzero: Vec<f64> = upper.into_iter().filter(|&v| v > 0.0).collect();
            median(nonzero)
        }
        Bandwidth::Fixed(s) if s.is_finite() && s > 0.0 => s,
        Bandwidth::Fixed(s) => return Err(Error::InvalidSigma(s)),
    };
    let mut affinity = n.matrix.mapv(|d| (-(d * d) / (2.0 * sigma * sigma)).exp());
    affinity.diag_mut().fill(1.0);
    let degree = affinity.sum_axis(Axis(1));
    Ok(ManifoldGraph {
        affinity,
        degree,
        sigma,
    })
}

impl ManifoldGraph {
    pub fn len(&self) -> usize {
        self.degree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degree.is_empty()
    }

    pub fn laplacian(&self, kind: LaplacianKind) -> Array2<f64> {
        let m = self.len();
        let mut l = Array2::eye(m);
        for i in 0..m {
            for j in 0..m {
                let w = self.affinity[[i, j]];
                l[[i, j]] -= match kind {
                    LaplacianKind::RandomWalk => w / self.degree[i],
                    LaplacianKind::SymmetricNormalized => {
                        w / (self.degree[i] * self.degree[j]).sqrt()
                    }
                };
            }
        }
        l
    }

    /// Orthonormal harmonics of `L_sym`, eigenvalues ascending.
    pub fn harmonics(&self) -> Result<SymEigen> {
        linalg::sym_eigen(self.laplacian(LaplacianKind::SymmetricNormalized).view())
    }

    fn check(&self, signal: &GraphSignal) -> Result<()> {
        if signal.values.len() != self.len() {
            return Err(Error::LengthMismatch(signal.values.len(), self.len()));
        }
        if signal.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "signal `{}` has non-finite values",
                signal.name
            )));
        }
        Ok(())
    }
}

/// Mean-centred, unit-norm copy of the signal; a constant signal maps to zero.
pub fn normalize_signal(values: &[f64]) -> Array1<f64> {
    let s = Array1::from(values.to_vec());
    let centred = &s - s.mean().unwrap_or(0.0);
    let norm = centred.dot(&centred).sqrt();
    if norm > 0.0 {
        centred / norm
    } else {
        centred
    }
}

/// `|⟨ŝ, φ_i⟩|` for every non-trivial harmonic of `L_sym`, where `ŝ` is the
/// normalised signal. The first (trivial) harmonic is omitted.
pub fn gft_spectrum(g: &ManifoldGraph, signal: &GraphSignal) -> Result<Vec<SpectralComponent>> {
    g.check(signal)?;
    let eig = g.harmonics()?;
    Ok(gft_with(&eig, signal).into_iter().skip(1).collect())
}

/// Coefficients on every harmonic, trivial one included.
pub fn gft_with(eig: &SymEigen, signal: &GraphSignal) -> Vec<SpectralComponent> {
    let s = normalize_signal(&signal.values);
    eig.values
        .iter()
        .zip(eig.vectors.columns())
        .map(|(&eigenvalue, phi)| SpectralComponent {
            eigenvalue,
            abs_inner_product: s.dot(&phi).abs(),
        })
        .collect()
}

/// `sᵀ L s` for the raw signal.
pub fn quadratic_smoothness(
    g: &ManifoldGraph,
    signal: &GraphSignal,
    kind: LaplacianKind,
) -> Result<f64> {
    g.check(signal)?;
    let s = Array1::from(signal.values.clone());
    Ok(s.dot(&g.laplacian(kind).dot(&s)))
}

/// `sᵀ L s / sᵀ s` for the mean-centred signal (0 for a constant signal).
pub fn normalized_smoothness(
    g: &ManifoldGraph,
    signal: &GraphSignal,
    kind: LaplacianKind,
) -> Result<f64> {
    g.check(signal)?;
    let s = normalize_signal(&signal.values);
    Ok(s.dot(&g.laplacian(kind).dot(&s)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub signal: String,
    pub raw_symmetric: f64,
    pub raw_random_walk: f64,
    pub normalized_symmetric: f64,
    pub normalized_random_walk: f64,
}

pub fn smoothness_report(g: &ManifoldGraph, signal: &GraphSignal) -> Result<SmoothnessReport> {
    use LaplacianKind::*;
    Ok(SmoothnessReport {
        signal: signal.name.clone(),
        raw_symmetric: quadratic_smoothness(g, signal, SymmetricNormalized)?,
        raw_random_walk: quadratic_smoothness(g, signal, RandomWalk)?,
        normalized_symmetric: normalized_smoothness(g, signal, SymmetricNormalized)?,
        normalized_random_walk: normalized_smoothness(g, signal, RandomWalk)?,
    })
}
