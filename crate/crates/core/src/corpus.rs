//! On-disk corpus: a JSON manifest naming every network plus one headerless
//! activation CSV per network, all registered against the same ordered test set.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_f64;

/// The ordered, labelled test points shared by every network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSetSpec {
    pub n_points: usize,
    pub labels: Vec<usize>,
    pub class_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Hyperparameters {
    fn validate(&self, id: &str) -> Result<()> {
        let Hyperparameters {
            learning_rate,
            momentum,
            weight_decay,
        } = *self;
        if !(learning_rate.is_finite() && momentum.is_finite() && weight_decay.is_finite()) {
            return Err(Error::SchemaViolation(format!(
                "network `{id}`: hyperparameters must be finite"
            )));
        }
        if learning_rate <= 0.0 {
            return Err(Error::SchemaViolation(format!(
                "network `{id}`: learning_rate must be positive"
            )));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::SchemaViolation(format!(
                "network `{id}`: momentum must lie in [0, 1)"
            )));
        }
        if weight_decay < 0.0 {
            return Err(Error::SchemaViolation(format!(
                "network `{id}`: weight_decay must be non-negative"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRecord {
    pub id: String,
    pub hyperparameters: Hyperparameters,
    pub accuracy: f64,
    /// Free-form descriptor copied from the manifest (e.g. `{"hidden": [50, 20]}`).
    pub architecture: serde_json::Value,
    pub activation_path: PathBuf,
    pub weights_path: Option<PathBuf>,
}

/// One network's `n_points × d` hidden-layer activations.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSet {
    pub network_id: String,
    pub matrix: Array2<f64>,
}

impl ActivationSet {
    pub fn new(network_id: impl Into<String>, matrix: Array2<f64>) -> Self {
        Self {
            network_id: network_id.into(),
            matrix,
        }
    }

    pub fn n_points(&self) -> usize {
        self.matrix.nrows()
    }

    /// Layer width.
    pub fn d(&self) -> usize {
        self.matrix.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub dataset_name: String,
    pub test_set: TestSetSpec,
    pub networks: Vec<NetworkRecord>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.networks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.networks.is_empty()
    }

    pub fn network(&self, id: &str) -> Result<&NetworkRecord> {
        self.networks
            .iter()
            .find(|n| n.id == id)
            .ok_or_else(|| Error::UnknownNetwork(id.to_string()))
    }

    pub fn ids(&self) -> Vec<String> {
        self.networks.iter().map(|n| n.id.clone()).collect()
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.networks.iter().map(|n| n.accuracy).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    dataset: String,
    n_points: usize,
    class_count: usize,
    labels: Vec<usize>,
    networks: Vec<ManifestNetwork>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestNetwork {
    id: String,
    activations: String,
    accuracy: f64,
    hyperparameters: Hyperparameters,
    #[serde(default)]
    architecture: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<String>,
}

/// Parses and validates a manifest. Activation files must exist but are not read.
pub fn load_corpus(manifest_path: impl AsRef<Path>) -> Result<Corpus> {
    let manifest_path = manifest_path.as_ref();
    if !manifest_path.is_file() {
        return Err(Error::MissingFile(manifest_path.to_path_buf()));
    }
    let text = fs::read_to_string(manifest_path)?;
    let manifest: ManifestFile = serde_json::from_str(&text)
        .map_err(|e| Error::SchemaViolation(format!("{}: {e}", manifest_path.display())))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    if manifest.n_points == 0 {
        return Err(Error::SchemaViolation("n_points must be positive".into()));
    }
    if manifest.class_count == 0 {
        return Err(Error::SchemaViolation(
            "class_count must be positive".into(),
        ));
    }
    if manifest.labels.len() != manifest.n_points {
        return Err(Error::LabelMismatch {
            expected: manifest.n_points,
            found: manifest.labels.len(),
        });
    }
    if let Some(&bad) = manifest.labels.iter().find(|&&l| l >= manifest.class_count) {
        return Err(Error::SchemaViolation(format!(
            "label {bad} is not below class_count {}",
            manifest.class_count
        )));
    }
    if manifest.networks.len() < 2 {
        return Err(Error::SchemaViolation(format!(
            "a corpus needs at least 2 networks, found {}",
            manifest.networks.len()
        )));
    }

    let mut seen = HashSet::new();
    let mut networks = Vec::with_capacity(manifest.networks.len());
    for net in manifest.networks {
        if !seen.insert(net.id.clone()) {
            return Err(Error::SchemaViolation(format!(
                "duplicate network id `{}`",
                net.id
            )));
        }
        if !(0.0..=1.0).contains(&net.accuracy) {
            return Err(Error::SchemaViolation(format!(
                "network `{}`: accuracy {} outside [0, 1]",
                net.id, net.accuracy
            )));
        }
        net.hyperparameters.validate(&net.id)?;
        let activation_path = base.join(&net.activations);
        if !activation_path.is_file() {
            return Err(Error::MissingFile(activation_path));
        }
        let weights_path = match net.weights {
            Some(w) => {
                let p = base.join(w);
                if !p.is_file() {
                    return Err(Error::MissingFile(p));
                }
                Some(p)
            }
            None => None,
        };
        networks.push(NetworkRecord {
            id: net.id,
            hyperparameters: net.hyperparameters,
            accuracy: net.accuracy,
            architecture: net.architecture,
            activation_path,
            weights_path,
        });
    }

    Ok(Corpus {
        dataset_name: manifest.dataset,
        test_set: TestSetSpec {
            n_points: manifest.n_points,
            labels: manifest.labels,
            class_count: manifest.class_count,
        },
        networks,
    })
}

/// Reads one network's activation CSV and checks it against the registered test set.
pub fn load_activations(corpus: &Corpus, network_id: &str) -> Result<ActivationSet> {
    let record = corpus.network(network_id)?;
    let matrix = read_matrix_csv(&record.activation_path)?;
    if matrix.nrows() != corpus.test_set.n_points {
        return Err(Error::RowCountMismatch {
            path: record.activation_path.display().to_string(),
            expected: corpus.test_set.n_points,
            found: matrix.nrows(),
        });
    }
    Ok(ActivationSet::new(network_id, matrix))
}

/// Reads the optional weight matrix referenced by the manifest.
pub fn load_weights(corpus: &Corpus, network_id: &str) -> Result<Array2<f64>> {
    let record = corpus.network(network_id)?;
    match &record.weights_path {
        Some(p) => read_matrix_csv(p),
        None => Err(Error::MissingWeights(network_id.to_string())),
    }
}

/// Parses a headerless, comma-separated matrix of finite reals.
pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    let shown = path.display().to_string();
    let mut values = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| Error::ParseError {
                path: shown.clone(),
                line: lineno + 1,
                message: format!("cannot parse `{field}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    path: shown.clone(),
                    line: lineno + 1,
                    value: field.to_string(),
                });
            }
            values.push(v);
            count += 1;
        }
        match ncols {
            None => ncols = Some(count),
            Some(c) if c != count => {
                return Err(Error::ParseError {
                    path: shown.clone(),
                    line: lineno + 1,
                    message: format!("expected {c} columns, found {count}"),
                })
            }
            _ => {}
        }
        nrows += 1;
    }
    let ncols = ncols.unwrap_or(0);
    Array2::from_shape_vec((nrows, ncols), values).map_err(|e| Error::ParseError {
        path: shown,
        line: 0,
        message: e.to_string(),
    })
}

/// Writes a headerless CSV with round-trip-safe float formatting.
pub fn write_matrix_csv(path: &Path, matrix: &Array2<f64>) -> Result<()> {
    let mut out = String::with_capacity(matrix.len() * 24);
    for row in matrix.rows() {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// A network to be written by [`write_corpus`].
#[derive(Debug, Clone)]
pub struct NetworkEntry {
    pub id: String,
    pub accuracy: f64,
    pub hyperparameters: Hyperparameters,
    pub architecture: serde_json::Value,
    pub activations: Array2<f64>,
    pub weights: Option<Array2<f64>>,
}

/// Writes a manifest plus `activations/<id>.csv` (and `weights/<id>.csv`) under `dir`.
/// Returns the manifest path.
pub fn write_corpus(
    dir: &Path,
    dataset: &str,
    test_set: &TestSetSpec,
    networks: &[NetworkEntry],
) -> Result<PathBuf> {
    fs::create_dir_all(dir.join("activations"))?;
    let mut entries = Vec::with_capacity(networks.len());
    for net in networks {
        let rel = format!("activations/{}.csv", net.id);
        write_matrix_csv(&dir.join(&rel), &net.activations)?;
        let weights = match &net.weights {
            Some(w) => {
                fs::create_dir_all(dir.join("weights"))?;
                let rel = format!("weights/{}.csv", net.id);
                write_matrix_csv(&dir.join(&rel), w)?;
                Some(rel)
            }
            None => None,
        };
        entries.push(ManifestNetwork {
            id: net.id.clone(),
            activations: rel,
            accuracy: net.accuracy,
            hyperparameters: net.hyperparameters,
            architecture: net.architecture.clone(),
            weights,
        });
    }
    let manifest = ManifestFile {
        dataset: dataset.to_string(),
        n_points: test_set.n_points,
        class_count: test_set.class_count,
        labels: test_set.labels.clone(),
        networks: entries,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use serde_json::json;

    fn hp() -> Hyperparameters {
        Hyperparameters {
            learning_rate: 0.05,
            momentum: 0.9,
            weight_decay: 1e-4,
        }
    }

    fn entry(id: &str, m: Array2<f64>) -> NetworkEntry {
        NetworkEntry {
            id: id.into(),
            accuracy: 0.9,
            hyperparameters: hp(),
            architecture: json!({"hidden": [2]}),
            activations: m,
            weights: None,
        }
    }

    fn four_point_set() -> TestSetSpec {
        TestSetSpec {
            n_points: 4,
            labels: vec![0, 0, 1, 1],
            class_count: 2,
        }
    }

    fn sample() -> Array2<f64> {
        array![[0.0, 1.0], [2.5, -1.0], [1e-7, 3.0], [4.0, 0.125]]
    }

    #[test]
    fn loads_three_networks() {
        let dir = tempfile::tempdir().unwrap();
        let nets: Vec<_> = ["a", "b", "c"]
            .iter()
            .map(|id| entry(id, sample()))
            .collect();
        let path = write_corpus(dir.path(), "toy", &four_point_set(), &nets).unwrap();
        let corpus = load_corpus(&path).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.test_set.labels, vec![0, 0, 1, 1]);
        let acts = load_activations(&corpus, "b").unwrap();
        assert_eq!(acts.d(), 2);
        assert_eq!(acts.matrix, sample());
    }

    fn write_raw_manifest(dir: &Path, value: serde_json::Value) -> PathBuf {
        let p = dir.join("manifest.json");
        fs::write(&p, serde_json::to_string(&value).unwrap()).unwrap();
        p
    }

    fn raw_net(id: &str, file: &str) -> serde_json::Value {
        json!({"id": id, "activations": file, "accuracy": 0.5,
               "hyperparameters": {"learning_rate": 0.1, "momentum": 0.5, "weight_decay": 0.0}})
    }

    #[test]
    fn duplicate_id_is_schema_violation() {
        let dir = tempfile::tempdir().unwrap();
        write_matrix_csv(&dir.path().join("a.csv"), &sample()).unwrap();
        let p = write_raw_manifest(
            dir.path(),
            json!({"dataset": "x", "n_points": 4, "class_count": 2, "labels": [0,0,1,1],
                   "networks": [raw_net("a", "a.csv"), raw_net("a", "a.csv")]}),
        );
        assert!(matches!(load_corpus(&p), Err(Error::SchemaViolation(_))));
    }

    #[test]
    fn missing_activation_file() {
        let dir = tempfile::tempdir().unwrap();
        write_matrix_csv(&dir.path().join("a.csv"), &sample()).unwrap();
        let p = write_raw_manifest(
            dir.path(),
            json!({"dataset": "x", "n_points": 4, "class_count": 2, "labels": [0,0,1,1],
                   "networks": [raw_net("a", "a.csv"), raw_net("b", "nope.csv")]}),
        );
        assert!(matches!(load_corpus(&p), Err(Error::MissingFile(_))));
        assert!(matches!(
            load_corpus(dir.path().join("absent.json")),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn label_count_and_schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        write_matrix_csv(&dir.path().join("a.csv"), &sample()).unwrap();
        let nets = json!([raw_net("a", "a.csv"), raw_net("b", "a.csv")]);
        let p = write_raw_manifest(
            dir.path(),
            json!({"dataset": "x", "n_points": 4, "class_count": 2, "labels": [0,1,1],
                   "networks": nets}),
        );
        assert!(matches!(
            load_corpus(&p),
            Err(Error::LabelMismatch {
                expected: 4,
                found: 3
            })
        ));
        let p = write_raw_manifest(
            dir.path(),
            json!({"dataset": "x", "n_points": "four", "class_count": 2, "labels": [0,1,1,0],
                   "networks": nets}),
        );
        assert!(matches!(load_corpus(&p), Err(Error::SchemaViolation(_))));
        let p = write_raw_manifest(
            dir.path(),
            json!({"dataset": "x", "n_points": 4, "labels": [0,1,1,0], "networks": nets}),
        );
        assert!(matches!(load_corpus(&p), Err(Error::SchemaViolation(_))));
    }

    #[test]
    fn row_count_and_non_finite() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("short.csv"), "1,2\n3,4\n5,6\n").unwrap();
        fs::write(dir.path().join("nan.csv"), "1,2\n3,nan\n5,6\n7,8\n").unwrap();
        fs::write(dir.path().join("junk.csv"), "1,2\n3,x\n5,6\n7,8\n").unwrap();
        let p = write_raw_manifest(
            dir.path(),
            json!({"dataset": "x", "n_points": 4, "class_count": 2, "labels": [0,0,1,1],
                   "networks": [raw_net("s", "short.csv"), raw_net("n", "nan.csv"),
                                raw_net("j", "junk.csv")]}),
        );
        let corpus = load_corpus(&p).unwrap();
        assert!(matches!(
            load_activations(&corpus, "s"),
            Err(Error::RowCountMismatch {
                expected: 4,
                found: 3,
                ..
            })
        ));
        assert!(matches!(
            load_activations(&corpus, "n"),
            Err(Error::NonFiniteValue { line: 2, .. })
        ));
        assert!(matches!(
            load_activations(&corpus, "j"),
            Err(Error::ParseError { line: 2, .. })
        ));
        assert!(matches!(
            load_activations(&corpus, "zz"),
            Err(Error::UnknownNetwork(_))
        ));
        assert!(matches!(
            load_weights(&corpus, "s"),
            Err(Error::MissingWeights(_))
        ));
    }
}
