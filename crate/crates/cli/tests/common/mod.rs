#![allow(dead_code)]

use std::path::{Path, PathBuf};

use ndarray::Array2;
use netmanifold::corpus::{write_corpus, NetworkEntry};
use netmanifold::{Hyperparameters, TestSetSpec};
use netmanifold_oracles as oracle;

pub const N_POINTS: usize = 24;
pub const CLASSES: usize = 3;

/// Five networks whose class blobs separate more as accuracy grows.
pub fn five_network_fixture(dir: &Path) -> PathBuf {
    let mut rng = oracle::rng(2024);
    let labels: Vec<usize> = (0..N_POINTS).map(|i| i % CLASSES).collect();
    let widths = [6, 8, 12, 8, 16];
    let accuracies = [0.52, 0.71, 0.84, 0.90, 0.95];
    let lrs = [0.3, 0.1, 0.05, 0.05, 0.05];
    let moms = [0.5, 0.6, 0.9, 0.9, 0.8];
    let wds = [0.1, 1e-2, 1e-4, 1e-3, 1e-4];
    let networks = (0..5)
        .map(|k| {
            let d = widths[k];
            let noise = oracle::random_cloud(&mut rng, N_POINTS, d, 0.15);
            let centres = oracle::random_cloud(&mut rng, CLASSES, d, 1.0);
            let spread = 0.2 + accuracies[k];
            let acts = Array2::from_shape_fn((N_POINTS, d), |(i, j)| {
                spread * centres[[labels[i], j]] + noise[[i, j]]
            });
            NetworkEntry {
                id: format!("mlp-{k:02}"),
                accuracy: accuracies[k],
                hyperparameters: Hyperparameters {
                    learning_rate: lrs[k],
                    momentum: moms[k],
                    weight_decay: wds[k],
                },
                architecture: serde_json::json!({"hidden": [d]}),
                activations: acts,
                weights: Some(oracle::random_cloud(&mut rng, 4, 3, 1.0)),
            }
        })
        .collect::<Vec<_>>();
    let test_set = TestSetSpec {
        n_points: N_POINTS,
        labels,
        class_count: CLASSES,
    };
    write_corpus(dir, "synthetic", &test_set, &networks).unwrap()
}

/// Relative path and bytes of every CSV/JSON under `root` except `run.json`.
pub fn data_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                let keep =
                    (rel.ends_with(".csv") || rel.ends_with(".json") || rel.ends_with(".svg"))
                        && rel != "run.json";
                if keep {
                    out.push((rel, std::fs::read(&path).unwrap()));
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}
