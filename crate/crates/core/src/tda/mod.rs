//! Topological summaries: Vietoris–Rips persistence diagrams and Wasserstein
//! distances between them.

mod rips;
mod wasserstein;

pub use rips::{rips_persistence, RipsConfig, DEFAULT_POINT_CAP};
pub use wasserstein::{
    diagram_manifold, hungarian, wasserstein_distance, wasserstein_per_dimension,
    DiagramDistanceConfig, DiagramManifold, InfinitePointPolicy,
};

use serde::{Deserialize, Serialize};

use crate::format::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub dim: usize,
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
}

impl DiagramPoint {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub network_id: String,
    pub points: Vec<DiagramPoint>,
}

impl PersistenceDiagram {
    pub fn new(network_id: impl Into<String>, points: Vec<DiagramPoint>) -> Self {
        Self {
            network_id: network_id.into(),
            points,
        }
    }

    /// Points of one homology dimension.
    pub fn dimension(&self, dim: usize) -> impl Iterator<Item = &DiagramPoint> + '_ {
        self.points.iter().filter(move |p| p.dim == dim)
    }

    pub fn max_dim(&self) -> Option<usize> {
        self.points.iter().map(|p| p.dim).max()
    }

    /// `dim,birth,death` CSV with a header row and `inf` for essential classes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,birth,death\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{}\n",
                p.dim,
                fmt_f64(p.birth),
                fmt_f64(p.death)
            ));
        }
        out
    }
}
