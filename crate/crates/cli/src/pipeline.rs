//! Stage executor.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use netmanifold::corpus::{load_weights, write_matrix_csv};
use netmanifold::diffusion::{
    diffusion_operator_from, diffusion_spectral_entropy, diffusion_spectral_mutual_information,
    pairwise_distances, spectrum,
};
use netmanifold::format::fmt_f64;
use netmanifold::graph_signal::{
    gft_with, manifold_graph, smoothness_report, Bandwidth, GraphSignal,
};
use netmanifold::network_metric::{manifold_matrix, signature, topn_tightness, SignatureSource};
use netmanifold::phate::{phate, DiffusionTime};
use netmanifold::structure::{
    adjusted_rand_index, bin_by_accuracy, class_structure, cut_dendrogram, pairwise_ari_matrix,
    pearson, r_squared, ward_dendrogram, ClassStructure, Dendrogram, NetworkStats,
};
use netmanifold::tda::{
    diagram_manifold, rips_persistence, DiagramDistanceConfig, PersistenceDiagram, RipsConfig,
};
use netmanifold::{
    load_activations, load_corpus, ActivationSet, Corpus, DistanceMatrix, Error, NetworkSignature,
    PhateConfig, Result, SignatureMethod,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{
    read_embedding, read_manifold, write_csv, write_embedding, write_json, write_labelled_matrix,
};
use crate::svg::{emit_heatmap_svg, emit_scatter_svg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Signature,
    Manifold,
    Embed,
    Structure,
    Tda,
    Gft,
    Recommend,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Signature,
        Stage::Manifold,
        Stage::Embed,
        Stage::Structure,
        Stage::Tda,
        Stage::Gft,
        Stage::Recommend,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Signature => "signature",
            Stage::Manifold => "manifold",
            Stage::Embed => "embed",
            Stage::Structure => "structure",
            Stage::Tda => "tda",
            Stage::Gft => "gft",
            Stage::Recommend => "recommend",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub out: PathBuf,
    pub method: SignatureMethod,
    pub sigma: f64,
    pub phate: PhateConfig,
    pub clusters: usize,
    pub bin_width: f64,
    pub top_n: usize,
    pub tightness_top: usize,
    pub max_dim: usize,
    pub point_cap: usize,
    pub diagram: DiagramDistanceConfig,
    pub save_signatures: bool,
    pub stages: Vec<Stage>,
}

impl RunConfig {
    pub fn new(manifest: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            manifest: manifest.into(),
            out: out.into(),
            method: SignatureMethod::Diffusion,
            sigma: netmanifold::diffusion::DEFAULT_SIGMA,
            phate: PhateConfig::default(),
            clusters: netmanifold::structure::DEFAULT_CLUSTERS,
            bin_width: netmanifold::structure::DEFAULT_BIN_WIDTH,
            top_n: netmanifold::recommend::DEFAULT_TOP_N,
            tightness_top: 10,
            max_dim: 2,
            point_cap: netmanifold::tda::DEFAULT_POINT_CAP,
            diagram: DiagramDistanceConfig::default(),
            save_signatures: false,
            stages: Stage::ALL.to_vec(),
        }
    }
}

/// A failure tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: Option<Stage>,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(s) => write!(f, "stage `{s}` failed: {}", self.error),
            None => write!(f, "{}", self.error),
        }
    }
}

impl std::error::Error for StageError {}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub seconds: f64,
    pub ok: bool,
}

#[derive(Debug, Serialize)]
struct RunMetadata<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    stages: &'a [StageTiming],
    warnings: &'a [String],
    status: &'a str,
    error: Option<String>,
}

struct Context {
    config: RunConfig,
    corpus: Corpus,
    activations: Option<Vec<ActivationSet>>,
    signatures: Option<Vec<NetworkSignature>>,
    warnings: Vec<String>,
}

/// Runs the configured stages in pipeline order, writing artifacts into
/// `config.out`. `run.json` is always written; a `FAILED` marker is left when a
/// stage errors.
pub fn run(config: &RunConfig) -> std::result::Result<Vec<StageTiming>, StageError> {
    let untagged = |error| StageError { stage: None, error };
    if config.stages.is_empty() {
        return Err(untagged(Error::InvalidArgument(
            "no stages requested".into(),
        )));
    }
    let corpus = load_corpus(&config.manifest).map_err(untagged)?;
    fs::create_dir_all(&config.out).map_err(|e| untagged(e.into()))?;
    let failed_marker = config.out.join("FAILED");
    if failed_marker.exists() {
        fs::remove_file(&failed_marker).map_err(|e| untagged(e.into()))?;
    }

    let mut stages = config.stages.clone();
    stages.sort();
    stages.dedup();
    let mut ctx = Context {
        config: config.clone(),
        corpus,
        activations: None,
        signatures: None,
        warnings: Vec::new(),
    };
    let mut timings = Vec::new();
    let mut failure = None;
    for stage in stages {
        let start = Instant::now();
        let result = ctx.execute(stage);
        timings.push(StageTiming {
            stage,
            seconds: start.elapsed().as_secs_f64(),
            ok: result.is_ok(),
        });
        if let Err(error) = result {
            failure = Some(StageError {
                stage: Some(stage),
                error,
            });
            break;
        }
    }

    let meta = RunMetadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config,
        stages: &timings,
        warnings: &ctx.warnings,
        status: if failure.is_some() { "failed" } else { "ok" },
        error: failure.as_ref().map(|f| f.to_string()),
    };
    let meta_result = write_json(&config.out.join("run.json"), &meta);
    if let Some(f) = failure {
        let _ = fs::write(&failed_marker, format!("{f}\n"));
        return Err(f);
    }
    meta_result.map_err(untagged)?;
    Ok(timings)
}

fn subdir(out: &Path, name: &str) -> Result<PathBuf> {
    let dir = out.join(name);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Makes a network id safe to use as a file stem.
fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn opt(v: Result<f64>) -> Option<f64> {
    v.ok().filter(|x| x.is_finite())
}

#[derive(Serialize)]
struct EmbeddingInfo {
    knn: usize,
    t: u32,
    final_stress: f64,
    smacof_iterations: usize,
    converged: bool,
    tightness_top_n: usize,
    topn_tightness: Option<f64>,
}

struct PerNetwork {
    structure: ClassStructure,
    dendrogram: Dendrogram,
    partition: Vec<usize>,
    ground_truth_ari: f64,
    dse: f64,
    dsmi: Option<f64>,
}

impl Context {
    fn out(&self) -> &Path {
        &self.config.out
    }

    fn warn(&mut self, message: String) {
        eprintln!("warning: {message}");
        self.warnings.push(message);
    }

    fn execute(&mut self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Signature => self.signature_stage(),
            Stage::Manifold => self.manifold_stage(),
            Stage::Embed => self.embed_stage(),
            Stage::Structure => self.structure_stage(),
            Stage::Tda => self.tda_stage(),
            Stage::Gft => self.gft_stage(),
            Stage::Recommend => self.recommend_stage(),
            Stage::Report => self.report_stage(),
        }
    }

    fn activations(&mut self) -> Result<&[ActivationSet]> {
        if self.activations.is_none() {
            let corpus = &self.corpus;
            let loaded: Vec<Result<ActivationSet>> = corpus
                .networks
                .par_iter()
                .map(|n| load_activations(corpus, &n.id))
                .collect();
            self.activations = Some(loaded.into_iter().collect::<Result<_>>()?);
        }
        Ok(self.activations.as_deref().expect("loaded above"))
    }

    fn accuracy_of(&self, ids: &[String]) -> Result<Vec<f64>> {
        ids.iter()
            .map(|id| Ok(self.corpus.network(id)?.accuracy))
            .collect()
    }

    fn compute_signatures(&mut self) -> Result<Vec<NetworkSignature>> {
        let (method, sigma) = (self.config.method, self.config.sigma);
        let results: Vec<Result<NetworkSignature>> =
            if let SignatureMethod::WeightMatrix { .. } = method {
                let corpus = &self.corpus;
                corpus
                    .networks
                    .par_iter()
                    .map(|n| {
                        let w = load_weights(corpus, &n.id)?;
                        let source = SignatureSource::Weights {
                            network_id: &n.id,
                            matrix: Some(&w),
                        };
                        signature(source, method, sigma)
                    })
                    .collect()
            } else {
                self.activations()?
                    .par_iter()
                    .map(|a| signature(SignatureSource::Activations(a), method, sigma))
                    .collect()
            };
        results.into_iter().collect()
    }

    fn signature_stage(&mut self) -> Result<()> {
        let signatures = self.compute_signatures()?;
        if self.config.save_signatures {
            let dir = subdir(self.out(), "signatures")?;
            for s in &signatures {
                write_matrix_csv(
                    &dir.join(format!("{}.csv", file_stem(&s.network_id))),
                    &s.matrix,
                )?;
            }
        }
        self.signatures = Some(signatures);
        Ok(())
    }

    fn manifold_stage(&mut self) -> Result<()> {
        let signatures = match self.signatures.take() {
            Some(s) => s,
            None => self.compute_signatures()?,
        };
        let manifold = manifold_matrix(&signatures)?;
        self.signatures = Some(signatures);
        write_labelled_matrix(
            &self.out().join("manifold.csv"),
            &manifold.network_ids,
            &manifold.matrix,
        )
    }

    fn embed_stage(&mut self) -> Result<()> {
        let manifold = read_manifold(&self.out().join("manifold.csv"))?;
        let m = manifold.len();
        let mut config = self.config.phate.clone();
        if config.knn >= m {
            let knn = m.saturating_sub(1).max(1);
            self.warn(format!(
                "PHATE knn {} needs more than {m} networks; using knn = {knn}",
                config.knn
            ));
            config.knn = knn;
        }
        let distances = DistanceMatrix::new(manifold.matrix.clone())?;
        let embedding = phate(&distances, &config)?;
        write_embedding(
            &self.out().join("embedding.csv"),
            &manifold.network_ids,
            &embedding.coordinates,
        )?;
        if config.t == DiffusionTime::Auto {
            write_csv(
                &self.out().join("vne.csv"),
                &["t", "entropy"],
                embedding
                    .vne_curve
                    .iter()
                    .map(|(t, h)| vec![t.to_string(), fmt_f64(*h)]),
            )?;
        }

        let accuracy = self.accuracy_of(&manifold.network_ids)?;
        let n_top = self.config.tightness_top.min(m);
        let tightness = if n_top >= 2 {
            opt(topn_tightness(
                embedding.coordinates.view(),
                &accuracy,
                &manifold.network_ids,
                n_top,
            ))
        } else {
            None
        };
        let info = EmbeddingInfo {
            knn: config.knn,
            t: embedding.t_used,
            final_stress: embedding.final_stress,
            smacof_iterations: embedding.stress_history.len() - 1,
            converged: embedding.converged,
            tightness_top_n: n_top,
            topn_tightness: tightness,
        };
        write_json(&self.out().join("embedding.json"), &info)
    }

    fn structure_stage(&mut self) -> Result<()> {
        let labels = self.corpus.test_set.labels.clone();
        let class_count = self.corpus.test_set.class_count;
        let (clusters, sigma) = (self.config.clusters, self.config.sigma);
        let results: Vec<Result<PerNetwork>> = self
            .activations()?
            .par_iter()
            .map(|acts| {
                let structure = class_structure(acts, &labels, class_count)?;
                let dendrogram = ward_dendrogram(acts)?;
                let partition = cut_dendrogram(&dendrogram, clusters)?;
                let ground_truth_ari = adjusted_rand_index(&partition, &labels)?;
                let p = diffusion_operator_from(acts, sigma)?;
                let dse = diffusion_spectral_entropy(&spectrum(&p)?, 1)?;
                let dsmi = match diffusion_spectral_mutual_information(acts, &labels, 1, sigma) {
                    Ok(v) => Some(v),
                    Err(Error::DegenerateClass(_)) => None,
                    Err(e) => return Err(e),
                };
                Ok(PerNetwork {
                    structure,
                    dendrogram,
                    partition,
                    ground_truth_ari,
                    dse,
                    dsmi,
                })
            })
            .collect();
        let per: Vec<PerNetwork> = results.into_iter().collect::<Result<_>>()?;

        let out = self.out().to_path_buf();
        let cs_dir = subdir(&out, "structure/class_structure")?;
        let dendro_dir = subdir(&out, "structure/dendrograms")?;
        let ids = self.corpus.ids();
        for (id, p) in ids.iter().zip(&per) {
            let stem = file_stem(id);
            write_json(&cs_dir.join(format!("{stem}.json")), &p.structure)?;
            emit_heatmap_svg(
                &p.structure.centroid_distances,
                &cs_dir.join(format!("{stem}.svg")),
            )?;
            write_csv(
                &dendro_dir.join(format!("{stem}.csv")),
                &["cluster_a", "cluster_b", "distance", "size"],
                p.dendrogram.merges.iter().map(|m| {
                    vec![
                        m.cluster_a.to_string(),
                        m.cluster_b.to_string(),
                        fmt_f64(m.distance),
                        m.size.to_string(),
                    ]
                }),
            )?;
        }

        let accuracy = self.corpus.accuracies();
        write_csv(
            &out.join("structure/networks.csv"),
            &[
                "id",
                "accuracy",
                "mean_centroid_distance",
                "mean_within_variance",
                "ground_truth_ari",
                "dse",
                "dsmi",
            ],
            ids.iter().zip(&per).zip(&accuracy).map(|((id, p), &acc)| {
                vec![
                    id.clone(),
                    fmt_f64(acc),
                    fmt_f64(p.structure.mean_centroid_distance),
                    fmt_f64(p.structure.mean_within_variance),
                    fmt_f64(p.ground_truth_ari),
                    fmt_f64(p.dse),
                    p.dsmi.map_or_else(String::new, fmt_f64),
                ]
            }),
        )?;

        let partitions: Vec<Vec<usize>> = per.iter().map(|p| p.partition.clone()).collect();
        let ari = pairwise_ari_matrix(&partitions)?;
        write_labelled_matrix(&out.join("structure/ari_matrix.csv"), &ids, &ari)?;
        emit_heatmap_svg(&ari, &out.join("structure/ari_matrix.svg"))?;

        let stats: Vec<NetworkStats> = ids
            .iter()
            .zip(&per)
            .zip(&accuracy)
            .map(|((id, p), &acc)| NetworkStats {
                id: id.clone(),
                accuracy: acc,
                mean_within_variance: p.structure.mean_within_variance,
                partition: p.partition.clone(),
            })
            .collect();
        write_json(
            &out.join("structure/accuracy_bins.json"),
            &bin_by_accuracy(&stats, self.config.bin_width)?,
        )?;

        let metrics: [(&str, Vec<f64>); 4] = [
            (
                "mean_centroid_distance",
                per.iter()
                    .map(|p| p.structure.mean_centroid_distance)
                    .collect(),
            ),
            (
                "mean_within_variance",
                per.iter()
                    .map(|p| p.structure.mean_within_variance)
                    .collect(),
            ),
            (
                "ground_truth_ari",
                per.iter().map(|p| p.ground_truth_ari).collect(),
            ),
            ("dse", per.iter().map(|p| p.dse).collect()),
        ];
        let mut r2 = BTreeMap::new();
        let mut r = BTreeMap::new();
        for (name, values) in &metrics {
            r2.insert(*name, opt(r_squared(&accuracy, values)));
            r.insert(*name, opt(pearson(&accuracy, values)));
        }
        write_json(&out.join("structure/correlations.json"), &r2)?;
        write_json(&out.join("structure/pearson.json"), &r)
    }

    fn tda_stage(&mut self) -> Result<()> {
        let rips = RipsConfig {
            max_dim: self.config.max_dim,
            max_radius: None,
            point_cap: self.config.point_cap,
        };
        let results: Vec<Result<PersistenceDiagram>> = self
            .activations()?
            .par_iter()
            .map(|a| rips_persistence(&a.network_id, &pairwise_distances(a), &rips))
            .collect();
        let diagrams: Vec<PersistenceDiagram> = results.into_iter().collect::<Result<_>>()?;
        let out = self.out().to_path_buf();
        let dir = subdir(&out, "tda/diagrams")?;
        for d in &diagrams {
            fs::write(
                dir.join(format!("{}.csv", file_stem(&d.network_id))),
                d.to_csv(),
            )?;
        }
        let dm = diagram_manifold(&diagrams, self.config.max_dim, &self.config.diagram)?;
        let ids = &dm.combined.network_ids;
        write_labelled_matrix(&out.join("tda/wasserstein.csv"), ids, &dm.combined.matrix)?;
        emit_heatmap_svg(&dm.combined.matrix, &out.join("tda/wasserstein.svg"))?;
        for (dim, m) in dm.per_dimension.iter().enumerate() {
            write_labelled_matrix(&out.join(format!("tda/wasserstein_h{dim}.csv")), ids, m)?;
            emit_heatmap_svg(m, &out.join(format!("tda/wasserstein_h{dim}.svg")))?;
        }
        Ok(())
    }

    fn signals(&self, ids: &[String]) -> Result<Vec<GraphSignal>> {
        let records: Vec<_> = ids
            .iter()
            .map(|id| self.corpus.network(id))
            .collect::<Result<_>>()?;
        Ok(vec![
            GraphSignal::new("accuracy", records.iter().map(|r| r.accuracy).collect()),
            GraphSignal::new(
                "learning_rate",
                records
                    .iter()
                    .map(|r| r.hyperparameters.learning_rate)
                    .collect(),
            ),
            GraphSignal::new(
                "momentum",
                records.iter().map(|r| r.hyperparameters.momentum).collect(),
            ),
            GraphSignal::new(
                "weight_decay",
                records
                    .iter()
                    .map(|r| r.hyperparameters.weight_decay)
                    .collect(),
            ),
        ])
    }

    fn gft_stage(&mut self) -> Result<()> {
        let manifold = read_manifold(&self.out().join("manifold.csv"))?;
        let graph = manifold_graph(&manifold, Bandwidth::Median)?;
        let harmonics = graph.harmonics()?;
        let dir = subdir(self.out(), "gft")?;
        let mut reports = Vec::new();
        for signal in self.signals(&manifold.network_ids)? {
            write_csv(
                &dir.join(format!("{}.csv", signal.name)),
                &["eigenvalue", "abs_inner_product"],
                gft_with(&harmonics, &signal)
                    .into_iter()
                    .skip(1)
                    .map(|c| vec![fmt_f64(c.eigenvalue), fmt_f64(c.abs_inner_product)]),
            )?;
            reports.push(smoothness_report(&graph, &signal)?);
        }
        #[derive(Serialize)]
        struct Smoothness<'a> {
            sigma: f64,
            signals: &'a [netmanifold::graph_signal::SmoothnessReport],
        }
        write_json(
            &dir.join("smoothness.json"),
            &Smoothness {
                sigma: graph.sigma,
                signals: &reports,
            },
        )
    }

    fn recommend_stage(&mut self) -> Result<()> {
        let m = self.corpus.len();
        let mut n_top = self.config.top_n;
        if n_top > m {
            self.warn(format!(
                "top-n {n_top} exceeds the {m} networks in the corpus; using {m}"
            ));
            n_top = m;
        }
        let rec = netmanifold::recommend::recommend(&self.corpus, n_top)?;
        write_json(&self.out().join("recommendation.json"), &rec)
    }

    fn report_stage(&mut self) -> Result<()> {
        let out = self.out().to_path_buf();
        let dir = subdir(&out, "report")?;
        let (ids, coords) = read_embedding(&out.join("embedding.csv"))?;
        for signal in self.signals(&ids)? {
            emit_scatter_svg(
                coords.view(),
                &signal.values,
                &signal.name,
                &dir.join(format!("embedding_{}.svg", signal.name)),
            )?;
        }
        let manifold = read_manifold(&out.join("manifold.csv"))?;
        emit_heatmap_svg(&manifold.matrix, &dir.join("manifold.svg"))?;

        let mut artifacts = Vec::new();
        collect_files(&out, &out, &mut artifacts)?;
        artifacts.retain(|p| p != "run.json" && p != "report/summary.json" && p != "FAILED");
        artifacts.sort();
        #[derive(Serialize)]
        struct Summary<'a> {
            dataset: &'a str,
            networks: usize,
            n_points: usize,
            method: String,
            best_network: &'a str,
            best_accuracy: f64,
            artifacts: Vec<String>,
        }
        let accuracy = self.corpus.accuracies();
        let best = (0..accuracy.len())
            .max_by(|&a, &b| accuracy[a].total_cmp(&accuracy[b]).then(b.cmp(&a)))
            .expect("corpus has at least two networks");
        write_json(
            &dir.join("summary.json"),
            &Summary {
                dataset: &self.corpus.dataset_name,
                networks: self.corpus.len(),
                n_points: self.corpus.test_set.n_points,
                method: self.config.method.to_string(),
                best_network: &self.corpus.networks[best].id,
                best_accuracy: accuracy[best],
                artifacts,
            },
        )
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if let Ok(rel) = path.strip_prefix(root) {
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}
