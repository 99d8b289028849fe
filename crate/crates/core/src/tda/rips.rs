//! Vietoris–Rips persistence over Z/2.
//!
//! H0 comes from union-find over the sorted edges. Higher dimensions reduce the
//! anti-transposed boundary matrix (the coboundary matrix, columns in reverse
//! filtration order) with clearing: any simplex that already killed a class one
//! dimension down is skipped. Reduced columns are stored implicitly as the list of
//! simplices whose coboundaries they sum, so the `(d+1)`-simplices are enumerated
//! on demand and never materialised.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::{FxHashMap as HashMap, FxHashSet as HashSet};

use super::{DiagramPoint, PersistenceDiagram};
use crate::diffusion::DistanceMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_POINT_CAP: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipsConfig {
    /// Highest homology dimension reported (0, 1 or 2).
    pub max_dim: usize,
    /// Filtration threshold; `None` uses the enclosing radius (largest distance).
    pub max_radius: Option<f64>,
    pub point_cap: usize,
}

impl Default for RipsConfig {
    fn default() -> Self {
        Self {
            max_dim: 2,
            max_radius: None,
            point_cap: DEFAULT_POINT_CAP,
        }
    }
}

const NONE: u32 = u32::MAX;

/// A simplex with its filtration value. Within one dimension the derived order is
/// the filtration order: diameter, then lexicographic vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Simplex {
    /// Bit pattern of a non-negative finite `f64`, which orders like the value.
    diam: u64,
    verts: [u32; 4],
}

impl Simplex {
    fn new(diam: f64, verts: &[u32]) -> Self {
        let mut v = [NONE; 4];
        v[..verts.len()].copy_from_slice(verts);
        Self {
            // Adding 0.0 maps -0.0 to +0.0.
            diam: (diam + 0.0).to_bits(),
            verts: v,
        }
    }

    fn diameter(&self) -> f64 {
        f64::from_bits(self.diam)
    }

    fn vertices(&self) -> &[u32] {
        let len = self.verts.iter().position(|&v| v == NONE).unwrap_or(4);
        &self.verts[..len]
    }
}

struct Complex {
    /// Row-major distances.
    dist: Vec<f64>,
    n: usize,
    threshold: f64,
}

impl Complex {
    fn new(d: &DistanceMatrix, threshold: f64) -> Self {
        Self {
            dist: d.matrix().iter().copied().collect(),
            n: d.len(),
            threshold,
        }
    }

    #[inline]
    fn dist(&self, a: u32, b: u32) -> f64 {
        self.dist[a as usize * self.n + b as usize]
    }

    fn with_vertex(s: &Simplex, w: u32, diam: f64) -> Simplex {
        let verts = s.vertices();
        let mut buf = [0u32; 4];
        let pos = verts.iter().position(|&v| v > w).unwrap_or(verts.len());
        buf[..pos].copy_from_slice(&verts[..pos]);
        buf[pos] = w;
        buf[pos + 1..=verts.len()].copy_from_slice(&verts[pos..]);
        Simplex::new(diam, &buf[..=verts.len()])
    }

    /// Smallest cofacet in filtration order, without listing the others.
    fn min_cofacet(&self, s: &Simplex) -> Option<Simplex> {
        let verts = s.vertices();
        let base = s.diameter();
        let mut best: Option<Simplex> = None;
        for w in 0..self.n as u32 {
            let mut diam = base;
            let mut member = false;
            for &v in verts {
                if v == w {
                    member = true;
                    break;
                }
                diam = diam.max(self.dist(v, w));
            }
            if member || diam > self.threshold {
                continue;
            }
            match best {
                Some(b) if diam > b.diameter() => {}
                // Vertices are scanned in increasing order, so an equal
                // diameter can only tie or lose lexicographically.
                Some(b) if diam == b.diameter() => {}
                _ => best = Some(Self::with_vertex(s, w, diam)),
            }
        }
        best
    }

    /// All simplices with `dim + 1` vertices inside the threshold.
    fn simplices(&self, dim: usize) -> Vec<Simplex> {
        let mut out = Vec::new();
        let mut stack: Vec<u32> = Vec::with_capacity(dim + 1);
        self.extend(&mut stack, 0, 0.0, dim + 1, &mut out);
        out
    }

    fn extend(
        &self,
        stack: &mut Vec<u32>,
        start: u32,
        diam: f64,
        len: usize,
        out: &mut Vec<Simplex>,
    ) {
        if stack.len() == len {
            out.push(Simplex::new(diam, stack));
            return;
        }
        for v in start..self.n as u32 {
            let mut dv = diam;
            for &u in stack.iter() {
                dv = dv.max(self.dist(u, v));
            }
            if dv > self.threshold {
                continue;
            }
            stack.push(v);
            self.extend(stack, v + 1, dv, len, out);
            stack.pop();
        }
    }

    fn cofacets(&self, s: &Simplex, out: &mut Vec<Simplex>) {
        out.clear();
        let verts = s.vertices();
        let base = s.diameter();
        for w in 0..self.n as u32 {
            if verts.contains(&w) {
                continue;
            }
            let mut diam = base;
            for &v in verts {
                diam = diam.max(self.dist(v, w));
            }
            if diam > self.threshold {
                continue;
            }
            out.push(Self::with_vertex(s, w, diam));
        }
    }
}

/// Pops the smallest entry that survives mod-2 cancellation.
fn pop_pivot(heap: &mut BinaryHeap<Reverse<Simplex>>) -> Option<Simplex> {
    loop {
        let Reverse(top) = heap.pop()?;
        if heap.peek() == Some(&Reverse(top)) {
            heap.pop();
            continue;
        }
        return Some(top);
    }
}

/// Reduces the coboundary of `sigma` against the
/// columns in `owner`. Returns the pivot, if any, and the simplices whose
/// coboundaries sum to the reduced column.
fn reduce(
    complex: &Complex,
    sigma: &Simplex,
    owner: &HashMap<Simplex, Vec<Simplex>>,
) -> (Option<Simplex>, Vec<Simplex>) {
    let mut scratch = Vec::new();
    complex.cofacets(sigma, &mut scratch);
    let mut heap: BinaryHeap<Reverse<Simplex>> = scratch.iter().copied().map(Reverse).collect();
    let mut combination = vec![*sigma];
    let pivot = loop {
        let Some(pivot) = pop_pivot(&mut heap) else {
            break None;
        };
        let Some(reducer) = owner.get(&pivot) else {
            break Some(pivot);
        };
        heap.push(Reverse(pivot));
        for s in reducer {
            complex.cofacets(s, &mut scratch);
            heap.extend(scratch.iter().copied().map(Reverse));
        }
        combination.extend_from_slice(reducer);
    };
    (pivot, cancel_pairs(combination))
}

/// Keeps the simplices that occur an odd number of times.
fn cancel_pairs(mut v: Vec<Simplex>) -> Vec<Simplex> {
    v.sort_unstable();
    let mut out = Vec::with_capacity(v.len());
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(v[i]);
        }
        i = j;
    }
    out
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Persistence diagram of the Vietoris–Rips filtration on `d`, dimensions `0..=max_dim`.
///
/// Finite H0 pairs are always kept (so there are exactly `n − components` of them);
/// zero-length pairs in higher dimensions are dropped.
pub fn rips_persistence(
    network_id: &str,
    d: &DistanceMatrix,
    config: &RipsConfig,
) -> Result<PersistenceDiagram> {
    let n = d.len();
    if n > config.point_cap {
        return Err(Error::TooManyPoints {
            n,
            cap: config.point_cap,
        });
    }
    if config.max_dim > 2 {
        return Err(Error::InvalidArgument(format!(
            "max_dim must be 0, 1 or 2, got {}",
            config.max_dim
        )));
    }
    let threshold = match config.max_radius {
        Some(r) if r.is_nan() || r < 0.0 => return Err(Error::BadRadius(r)),
        Some(r) => r,
        None => d.matrix().iter().copied().fold(0.0, f64::max),
    };
    let complex = Complex::new(d, threshold);
    let mut points = Vec::new();

    // H0 by union-find; edges that merge components are the H0 deaths.
    let mut edges = complex.simplices(1);
    edges.sort();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut cleared: HashSet<Simplex> = HashSet::default();
    for e in &edges {
        let (a, b) = (e.verts[0] as usize, e.verts[1] as usize);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
            points.push(DiagramPoint {
                dim: 0,
                birth: 0.0,
                death: e.diameter(),
            });
            cleared.insert(*e);
        }
    }
    let components = (0..n).filter(|&i| find(&mut parent, i) == i).count();
    for _ in 0..components {
        points.push(DiagramPoint {
            dim: 0,
            birth: 0.0,
            death: f64::INFINITY,
        });
    }

    let mut columns = edges;
    for dim in 1..=config.max_dim {
        if dim > 1 {
            columns = complex.simplices(dim);
        }
        // Reverse filtration order.
        columns.sort_unstable_by(|a, b| b.cmp(a));
        let mut next_cleared = HashSet::default();
        // pivot cofacet -> simplices whose coboundaries sum to the owning column
        let mut owner: HashMap<Simplex, Vec<Simplex>> = HashMap::default();

        for sigma in columns.iter().filter(|s| !cleared.contains(s)) {
            // Most columns need no reduction: their smallest cofacet is still free.
            let (pivot, combination) = match complex.min_cofacet(sigma) {
                Some(p) if !owner.contains_key(&p) => (Some(p), vec![*sigma]),
                Some(_) => reduce(&complex, sigma, &owner),
                None => (None, Vec::new()),
            };
            match pivot {
                Some(pivot) => {
                    let (birth, death) = (sigma.diameter(), pivot.diameter());
                    if death > birth {
                        points.push(DiagramPoint { dim, birth, death });
                    }
                    next_cleared.insert(pivot);
                    owner.insert(pivot, combination);
                }
                None => points.push(DiagramPoint {
                    dim,
                    birth: sigma.diameter(),
                    death: f64::INFINITY,
                }),
            }
        }
        cleared = next_cleared;
    }

    points.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.total_cmp(&b.birth))
            .then(a.death.total_cmp(&b.death))
    });
    Ok(PersistenceDiagram::new(network_id, points))
}
