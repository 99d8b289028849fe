//! PHATE on a precomputed distance matrix.
//!
//! Pipeline: α-decay kernel → diffusion operator → diffusion time from the knee of
//! the von Neumann entropy curve → potential distances (Euclidean distances between
//! log-transformed rows of `Pᵗ`) → metric MDS. The MDS stage starts from classical
//! (Torgerson) MDS and refines it with SMACOF stress majorisation.

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{
    self, diffusion_operator, diffusion_power, AffinityMatrix, DiffusionOperator, DistanceMatrix,
    Kernel,
};
use crate::error::{Error, Result};
use crate::linalg::{self, euclidean};

/// Rows of `Pᵗ` are clamped to this before taking logs.
pub const LOG_FLOOR: f64 = 1e-12;
pub const DEFAULT_T_MAX: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionTime {
    Auto,
    Fixed(u32),
}

impl std::str::FromStr for DiffusionTime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(DiffusionTime::Auto);
        }
        match s.parse::<u32>() {
            Ok(t) if t >= 1 => Ok(DiffusionTime::Fixed(t)),
            _ => Err(Error::InvalidArgument(format!(
                "diffusion time must be `auto` or a positive integer, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhateConfig {
    pub knn: usize,
    pub decay_alpha: f64,
    pub t: DiffusionTime,
    pub n_components: usize,
    pub mds_max_iter: usize,
    pub mds_tol: f64,
    pub seed: u64,
}

impl Default for PhateConfig {
    fn default() -> Self {
        Self {
            knn: 5,
            decay_alpha: 40.0,
            t: DiffusionTime::Auto,
            n_components: 2,
            mds_max_iter: 500,
            mds_tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhateEmbedding {
    pub coordinates: Array2<f64>,
    pub t_used: u32,
    /// `(t, H(t))` pairs from the knee scan; empty when `t` was fixed.
    pub vne_curve: Vec<(u32, f64)>,
    pub final_stress: f64,
    /// Raw stress after initialisation and after every SMACOF iteration.
    pub stress_history: Vec<f64>,
    pub converged: bool,
}

/// Distance from each point to its `knn`-th nearest other point.
fn knn_bandwidths(d: &DistanceMatrix, knn: usize) -> Vec<f64> {
    let n = d.len();
    (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d.get(i, j)).collect();
            row.sort_by(f64::total_cmp);
            row[knn - 1]
        })
        .collect()
}

/// Adaptive-bandwidth kernel
/// `K_ij = ½[exp(−(d_ij/ε_i)^α) + exp(−(d_ij/ε_j)^α)]`, with `ε_i` the distance from
/// `i` to its `knn`-th neighbour.
///
/// Points whose `ε_i` is zero (at least `knn` exact duplicates) borrow the smallest
/// nonzero bandwidth in the cloud, or failing that the smallest nonzero distance.
pub fn alpha_decay_kernel(d: &DistanceMatrix, knn: usize, alpha: f64) -> Result<AffinityMatrix> {
    let n = d.len();
    if knn == 0 || knn >= n {
        return Err(Error::KTooLarge { k: knn, n });
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "decay alpha must be positive, got {alpha}"
        )));
    }
    let mut eps = knn_bandwidths(d, knn);
    if eps.contains(&0.0) {
        let fallback = eps
            .iter()
            .copied()
            .filter(|&e| e > 0.0)
            .min_by(f64::total_cmp)
            .or_else(|| {
                d.matrix()
                    .iter()
                    .copied()
                    .filter(|&v| v > 0.0)
                    .min_by(f64::total_cmp)
            })
            .ok_or(Error::DegenerateBandwidth)?;
        for e in eps.iter_mut().filter(|e| **e == 0.0) {
            *e = fallback;
        }
    }
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let dij = d.get(i, j);
            let v =
                0.5 * ((-(dij / eps[i]).powf(alpha)).exp() + (-(dij / eps[j]).powf(alpha)).exp());
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    Ok(AffinityMatrix {
        matrix: k,
        kernel: Kernel::AlphaDecay { knn, alpha },
    })
}

/// Entropy of the normalised `|λ|ᵗ` for `t = 1..=t_max`.
pub fn vne_curve(p: &DiffusionOperator, t_max: u32) -> Result<Vec<(u32, f64)>> {
    let spec = diffusion::spectrum(p)?;
    (1..=t_max.max(1))
        .map(|t| Ok((t, diffusion::diffusion_spectral_entropy(&spec, t)?)))
        .collect()
}

/// Knee of a curve: the point farthest (perpendicular) from the chord joining its
/// endpoints. Flat or too-short curves give the first `t`; ties keep the smallest `t`.
pub fn knee_point(curve: &[(u32, f64)]) -> u32 {
    if curve.len() < 3 {
        return curve.first().map_or(1, |c| c.0);
    }
    let (x0, y0) = (curve[0].0 as f64, curve[0].1);
    let (x1, y1) = {
        let last = curve[curve.len() - 1];
        (last.0 as f64, last.1)
    };
    let (dx, dy) = (x1 - x0, y1 - y0);
    let norm = (dx * dx + dy * dy).sqrt();
    let mut best = (curve[0].0, 0.0);
    for &(t, h) in curve {
        let dist = (dy * (t as f64 - x0) - dx * (h - y0)).abs() / norm;
        if dist > best.1 + 1e-12 {
            best = (t, dist);
        }
    }
    best.0
}

pub fn select_t_vne(p: &DiffusionOperator, t_max: u32) -> Result<u32> {
    Ok(knee_point(&vne_curve(p, t_max)?))
}

/// `U_ij = ‖log Pᵗ_i· − log Pᵗ_j·‖₂`, entries floored at [`LOG_FLOOR`].
pub fn potential_distances(p: &DiffusionOperator, t: u32) -> Result<DistanceMatrix> {
    if t == 0 {
        return Err(Error::InvalidArgument(
            "potential distances need t >= 1".into(),
        ));
    }
    let pt = diffusion_power(p, t);
    let logs = pt.matrix().mapv(|v| v.max(LOG_FLOOR).ln());
    Ok(diffusion::pairwise_distances_of(logs.view()))
}

/// Raw stress `Σ_{i<j} (u_ij − ‖x_i − x_j‖)²`.
pub fn raw_stress(u: ArrayView2<'_, f64>, x: ArrayView2<'_, f64>) -> f64 {
    let n = u.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let r = u[[i, j]] - euclidean(x.row(i), x.row(j));
            s += r * r;
        }
    }
    s
}

/// Torgerson scaling: top eigenvectors of the double-centred squared distances.
pub fn classical_mds(u: &DistanceMatrix, n_components: usize) -> Result<Array2<f64>> {
    let n = u.len();
    let sq = u.matrix().mapv(|v| v * v);
    let row_mean = sq.mean_axis(ndarray::Axis(1)).expect("nonempty");
    let grand = row_mean.mean().unwrap_or(0.0);
    let mut b = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            b[[i, j]] = -0.5 * (sq[[i, j]] - row_mean[i] - row_mean[j] + grand);
        }
    }
    let eig = linalg::sym_eigen(b.view())?;
    let mut x = Array2::zeros((n, n_components));
    for c in 0..n_components.min(n) {
        let k = n - 1 - c;
        let scale = eig.values[k].max(0.0).sqrt();
        for i in 0..n {
            x[[i, c]] = eig.vectors[[i, k]] * scale;
        }
    }
    Ok(x)
}

/// One Guttman transform `X ← (1/n) B(X) X` for unit weights.
fn guttman_transform(u: ArrayView2<'_, f64>, x: &Array2<f64>) -> Array2<f64> {
    let (n, dims) = x.dim();
    let rows: Vec<Array1<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Array1::zeros(dims);
            for j in 0..n {
                if i == j {
                    continue;
                }
                let dij = euclidean(x.row(i), x.row(j));
                if dij > 0.0 {
                    let ratio = u[[i, j]] / dij;
                    for c in 0..dims {
                        out[c] += ratio * (x[[i, c]] - x[[j, c]]);
                    }
                }
            }
            out / n as f64
        })
        .collect();
    let mut next = Array2::zeros((n, dims));
    for (i, r) in rows.into_iter().enumerate() {
        next.row_mut(i).assign(&r);
    }
    next
}

/// Metric MDS by SMACOF from a classical-MDS start.
pub fn mds_embed(u: &DistanceMatrix, config: &PhateConfig) -> Result<PhateEmbedding> {
    let dims = config.n_components;
    if !(1..=3).contains(&dims) {
        return Err(Error::InvalidArgument(format!(
            "n_components must be 1, 2 or 3, got {dims}"
        )));
    }
    let mut x = classical_mds(u, dims)?;
    let spread = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let target = u.matrix().iter().copied().fold(0.0, f64::max);
    if spread == 0.0 && target > 0.0 {
        // Classical MDS collapsed every point; SMACOF cannot move from there.
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let scale = 1e-3 * target;
        x.mapv_inplace(|_| scale * (rng.random::<f64>() - 0.5));
    }

    let uv = u.matrix().view();
    let mut stress = raw_stress(uv, x.view());
    let mut history = vec![stress];
    let mut converged = stress == 0.0;
    let mut iter = 0;
    while !converged && iter < config.mds_max_iter {
        let candidate = guttman_transform(uv, &x);
        let next = raw_stress(uv, candidate.view());
        iter += 1;
        if next > stress {
            // Majorisation never increases stress; anything else is rounding.
            converged = true;
            break;
        }
        let rel = (stress - next) / stress.max(f64::MIN_POSITIVE);
        x = candidate;
        stress = next;
        history.push(stress);
        if stress == 0.0 || rel < config.mds_tol {
            converged = true;
        }
    }

    Ok(PhateEmbedding {
        coordinates: x,
        t_used: 0,
        vne_curve: Vec::new(),
        final_stress: stress,
        stress_history: history,
        converged,
    })
}

/// Full PHATE embedding of the points described by `d`.
pub fn phate(d: &DistanceMatrix, config: &PhateConfig) -> Result<PhateEmbedding> {
    let n = d.len();
    if n < config.knn + 1 {
        return Err(Error::KTooLarge { k: config.knn, n });
    }
    let kernel = match alpha_decay_kernel(d, config.knn, config.decay_alpha) {
        Ok(k) => k,
        Err(Error::DegenerateBandwidth) => {
            return Ok(PhateEmbedding {
                coordinates: Array2::zeros((n, config.n_components)),
                t_used: match config.t {
                    DiffusionTime::Fixed(t) => t,
                    DiffusionTime::Auto => 1,
                },
                vne_curve: Vec::new(),
                final_stress: 0.0,
                stress_history: vec![0.0],
                converged: true,
            })
        }
        Err(e) => return Err(e),
    };
    let p = diffusion_operator(&kernel)?;
    let (t_used, curve) = match config.t {
        DiffusionTime::Fixed(t) => (t, Vec::new()),
        DiffusionTime::Auto => {
            let curve = vne_curve(&p, DEFAULT_T_MAX)?;
            (knee_point(&curve), curve)
        }
    };
    let u = potential_distances(&p, t_used)?;
    let mut emb = mds_embed(&u, config)?;
    emb.t_used = t_used;
    emb.vne_curve = curve;
    Ok(emb)
}
