//! Hyperparameter recommendation from the most accurate networks of a corpus.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::network_metric::top_n_indices;

pub const DEFAULT_TOP_N: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    pub n_top: usize,
    pub provenance: Vec<String>,
    /// Only one (weight decay, momentum) combination existed under the modal
    /// learning rate, so it is returned unchanged.
    pub single_pair: bool,
}

/// Total-order key for grouping exact float values.
fn key(v: f64) -> u64 {
    (v + 0.0).to_bits()
}

/// Recommends `(lr, wd, momentum)`:
/// 1. take the `n_top` most accurate networks (ties by id);
/// 2. pick their most common learning rate (ties toward the smaller rate);
/// 3. among those networks, rank `(wd, momentum)` combinations by frequency
///    (ties toward the lexicographically smaller pair);
/// 4. average the two most frequent combinations.
pub fn recommend(corpus: &Corpus, n_top: usize) -> Result<Recommendation> {
    let m = corpus.len();
    if n_top == 0 || n_top > m {
        return Err(Error::TooFewNetworks {
            needed: n_top.max(1),
            got: m,
        });
    }
    let ids = corpus.ids();
    let top = top_n_indices(&corpus.accuracies(), &ids, n_top);
    let hps: Vec<_> = top
        .iter()
        .map(|&i| corpus.networks[i].hyperparameters)
        .collect();

    let mut lr_counts: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for h in &hps {
        lr_counts
            .entry(key(h.learning_rate))
            .or_insert((h.learning_rate, 0))
            .1 += 1;
    }
    // BTreeMap iterates by increasing bit pattern, i.e. increasing positive value,
    // so a strict comparison keeps the smaller rate on ties.
    let (learning_rate, _) =
        lr_counts.values().fold(
            (f64::NAN, 0usize),
            |best, &(lr, c)| {
                if c > best.1 {
                    (lr, c)
                } else {
                    best
                }
            },
        );

    let mut pair_counts: BTreeMap<(u64, u64), (f64, f64, usize)> = BTreeMap::new();
    for h in hps
        .iter()
        .filter(|h| key(h.learning_rate) == key(learning_rate))
    {
        pair_counts
            .entry((key(h.weight_decay), key(h.momentum)))
            .or_insert((h.weight_decay, h.momentum, 0))
            .2 += 1;
    }
    let mut ranked: Vec<(f64, f64, usize)> = pair_counts.into_values().collect();
    ranked.sort_by(|a, b| {
        b.2.cmp(&a.2)
            .then(a.0.total_cmp(&b.0))
            .then(a.1.total_cmp(&b.1))
    });

    let provenance = top.iter().map(|&i| ids[i].clone()).collect();
    match ranked.as_slice() {
        [] => Err(Error::InsufficientDiversity),
        [(wd, mom, _)] => Ok(Recommendation {
            learning_rate,
            weight_decay: *wd,
            momentum: *mom,
            n_top,
            provenance,
            single_pair: true,
        }),
        [(wd1, m1, _), (wd2, m2, _), ..] => Ok(Recommendation {
            learning_rate,
            weight_decay: 0.5 * (wd1 + wd2),
            momentum: 0.5 * (m1 + m2),
            n_top,
            provenance,
            single_pair: false,
        }),
    }
}
