//! Acceptance checks for the math core and the pipeline, one line per criterion.
//! Exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use ndarray::{array, Array1, Array2};
use netmanifold::diffusion::{
    diffusion_operator_from, diffusion_spectral_entropy, gaussian_affinity, pairwise_distances_of,
    spectrum, stationary_distribution, DiffusionOperator,
};
use netmanifold::graph_signal::{
    gft_with, manifold_graph, normalized_smoothness, Bandwidth, GraphSignal, LaplacianKind,
};
use netmanifold::network_metric::{manifold_matrix, signature, topn_tightness, SignatureSource};
use netmanifold::phate::{mds_embed, phate, PhateConfig};
use netmanifold::structure::{adjusted_rand_index, ward_linkage};
use netmanifold::tda::{
    rips_persistence, wasserstein_distance, DiagramDistanceConfig, DiagramPoint, RipsConfig,
};
use netmanifold::{ActivationSet, DistanceMatrix, ManifoldMatrix, SignatureMethod};
use netmanifold_cli::{run, RunConfig};
use netmanifold_oracles as oracle;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn diffusion() -> Outcome {
    let start = Instant::now();
    let mut rng = oracle::rng(101);
    let (mut worst_row, mut worst_pi) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(5..60);
        let d = rng.random_range(2..12);
        let acts = ActivationSet::new("a", oracle::random_cloud(&mut rng, n, d, 0.5));
        let p = diffusion_operator_from(&acts, 0.5).map_err(|e| e.to_string())?;
        worst_row = worst_row.max(p.row_sum_error());
        let pi = stationary_distribution(&p);
        let moved = pi.dot(p.matrix());
        worst_pi = worst_pi.max((&moved - &pi).iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let d = DistanceMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).map_err(|e| e.to_string())?;
    let w = gaussian_affinity(&d, 0.5).map_err(|e| e.to_string())?;
    let kernel_err = (w.matrix[[0, 1]] - (-2.0f64).exp()).abs();
    let secs = start.elapsed().as_secs_f64();
    check(worst_row < 1e-10, || format!("row-sum error {worst_row:e}"))?;
    check(worst_pi < 1e-8, || {
        format!("stationary residual {worst_pi:e}")
    })?;
    check(kernel_err < 1e-12, || {
        format!("kernel error {kernel_err:e}")
    })?;
    check(secs < 5.0, || format!("took {secs:.2}s"))?;
    Ok(format!(
        "row error {worst_row:.1e}, pi residual {worst_pi:.1e}, kernel error {kernel_err:.1e}, {secs:.2}s"
    ))
}

fn block_operator(k: usize, block: usize, rng: &mut impl Rng) -> Result<DiffusionOperator, String> {
    let n = k * block;
    let mut w = Array2::zeros((n, n));
    for b in 0..k {
        let x = oracle::random_cloud(rng, block, 2, 0.3);
        let dist = oracle::naive_distances(&x);
        for i in 0..block {
            for j in 0..block {
                w[[b * block + i, b * block + j]] = (-dist[[i, j]].powi(2) / 0.5).exp();
            }
        }
    }
    let degree: Array1<f64> = w.sum_axis(ndarray::Axis(1));
    let p = &w / &degree.view().insert_axis(ndarray::Axis(1));
    DiffusionOperator::new(p, degree).map_err(|e| e.to_string())
}

fn dse() -> Outcome {
    let mut rng = oracle::rng(102);
    let mut gaps = Vec::new();
    for k in [2usize, 3, 5] {
        let p = block_operator(k, 6, &mut rng)?;
        let h = diffusion_spectral_entropy(&spectrum(&p).map_err(|e| e.to_string())?, 512)
            .map_err(|e| e.to_string())?;
        let gap = (h - (k as f64).ln()).abs();
        check(gap < 1e-3, || {
            format!("k = {k}: entropy {h}, |gap| {gap:e}")
        })?;
        gaps.push(gap);
    }
    for _ in 0..100 {
        let n = rng.random_range(2..40);
        let acts = ActivationSet::new("a", oracle::random_cloud(&mut rng, n, 3, 0.6));
        let p = diffusion_operator_from(&acts, 0.5).map_err(|e| e.to_string())?;
        let s = spectrum(&p).map_err(|e| e.to_string())?;
        for t in [0u32, 1, 4, 64] {
            let h = diffusion_spectral_entropy(&s, t).map_err(|e| e.to_string())?;
            check(h >= 0.0 && h <= (n as f64).ln() + 1e-12, || {
                format!("entropy {h} outside [0, log {n}] at t = {t}")
            })?;
        }
    }
    Ok(format!(
        "block gaps {:.1e}/{:.1e}/{:.1e}; 100 operators in range",
        gaps[0], gaps[1], gaps[2]
    ))
}

fn ward_and_ari() -> Outcome {
    let mut rng = oracle::rng(103);
    for trial in 0..50 {
        let n = rng.random_range(2..=32);
        let x = oracle::random_cloud(&mut rng, n, 3, 2.0);
        let fast = ward_linkage(x.view()).map_err(|e| e.to_string())?;
        let slow = oracle::naive_ward(&x);
        for (m, s) in fast.merges.iter().zip(&slow) {
            let same = (m.cluster_a, m.cluster_b, m.size) == (s.0, s.1, s.3)
                && (m.distance - s.2).abs() <= 1e-9 * s.2.max(1.0);
            check(same, || format!("cloud {trial}: merge {m:?} vs {s:?}"))?;
        }
        check(fast.merges.len() == slow.len(), || {
            format!("cloud {trial}: merge count")
        })?;
    }
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = oracle::random_partition(&mut rng, 12, 5);
        let b = oracle::random_partition(&mut rng, 12, 5);
        let got = adjusted_rand_index(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max((got - oracle::pair_counting_ari(&a, &b)).abs());
        check(
            adjusted_rand_index(&a, &a).map_err(|e| e.to_string())? == 1.0,
            || format!("ARI of {a:?} with itself is not 1"),
        )?;
    }
    check(worst <= 1e-12, || format!("ARI deviation {worst:e}"))?;
    Ok(format!(
        "50 merge trees identical; ARI deviation {worst:.1e}"
    ))
}

fn bars(v: &[oracle::Bar]) -> Vec<DiagramPoint> {
    v.iter()
        .map(|&(birth, death)| DiagramPoint {
            dim: 1,
            birth,
            death,
        })
        .collect()
}

fn wasserstein_and_tda() -> Outcome {
    let mut rng = oracle::rng(104);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let a = oracle::random_bars(&mut rng, 4);
        let b = oracle::random_bars(&mut rng, 4);
        let p = [1.0, 2.0][i % 2];
        let config = DiagramDistanceConfig {
            p,
            ..Default::default()
        };
        let got = wasserstein_distance(&bars(&a), &bars(&b), &config).map_err(|e| e.to_string())?;
        worst = worst.max((got - oracle::brute_force_wasserstein(&a, &b, p)).abs());
    }
    check(worst < 1e-9, || format!("Hungarian deviation {worst:e}"))?;

    let square = array![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let diagram = rips_persistence(
        "square",
        &pairwise_distances_of(square.view()),
        &RipsConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let h1: Vec<_> = diagram.dimension(1).collect();
    check(
        h1.len() == 1 && h1[0].birth == 1.0 && h1[0].death == 2f64.sqrt(),
        || format!("unit square H1 {h1:?}"),
    )?;

    let config = DiagramDistanceConfig::default();
    for _ in 0..100 {
        let a = bars(&oracle::random_bars(&mut rng, 5));
        let b = bars(&oracle::random_bars(&mut rng, 5));
        let c = bars(&oracle::random_bars(&mut rng, 5));
        let w = |x: &[DiagramPoint], y: &[DiagramPoint]| {
            wasserstein_distance(x, y, &config).map_err(|e| e.to_string())
        };
        let (ab, ba, bc, ac, aa) = (w(&a, &b)?, w(&b, &a)?, w(&b, &c)?, w(&a, &c)?, w(&a, &a)?);
        check(aa < 1e-12 && ab >= 0.0, || {
            format!("identity: W(a,a) = {aa}")
        })?;
        check((ab - ba).abs() < 1e-12, || {
            format!("symmetry: {ab} vs {ba}")
        })?;
        check(ac <= ab + bc + 1e-9, || {
            format!("triangle: {ac} > {ab} + {bc}")
        })?;
    }
    Ok(format!(
        "Hungarian deviation {worst:.1e}; square H1 = (1, sqrt 2); 100 triples metric"
    ))
}

fn embedded_distance(x: &Array2<f64>, i: usize, j: usize) -> f64 {
    (&x.row(i) - &x.row(j)).mapv(|v| v * v).sum().sqrt()
}

fn phate_checks() -> Outcome {
    let tri = DistanceMatrix::new(array![[0.0, 3.0, 4.0], [3.0, 0.0, 5.0], [4.0, 5.0, 0.0]])
        .map_err(|e| e.to_string())?;
    let e = mds_embed(&tri, &PhateConfig::default()).map_err(|e| e.to_string())?;
    let tri_err = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| (embedded_distance(&e.coordinates, i, j) - tri.get(i, j)).abs())
        .fold(0.0, f64::max);
    check(tri_err < 1e-6, || format!("triangle error {tri_err:e}"))?;

    let mut rng = oracle::rng(105);
    for trial in 0..20 {
        let n = rng.random_range(4..25);
        let u = pairwise_distances_of(oracle::random_cloud(&mut rng, n, 5, 1.0).view());
        let e = mds_embed(&u, &PhateConfig::default()).map_err(|e| e.to_string())?;
        let monotone = e.stress_history.windows(2).all(|w| w[1] <= w[0]);
        check(monotone, || {
            format!("input {trial}: stress history {:?}", e.stress_history)
        })?;
    }

    let mut x = oracle::random_cloud(&mut rng, 20, 3, 0.01);
    for i in 10..20 {
        x[[i, 0]] += 1.0;
    }
    let blobs = phate(&pairwise_distances_of(x.view()), &PhateConfig::default())
        .map_err(|e| e.to_string())?;
    let (mut intra, mut inter) = (0.0f64, f64::INFINITY);
    for i in 0..20 {
        for j in (i + 1)..20 {
            let v = embedded_distance(&blobs.coordinates, i, j);
            if (i < 10) == (j < 10) {
                intra = intra.max(v);
            } else {
                inter = inter.min(v);
            }
        }
    }
    check(inter > intra, || {
        format!("blobs: inter {inter} <= intra {intra}")
    })?;
    Ok(format!("triangle error {tri_err:.1e}; 20 stress histories monotone; blobs inter {inter:.3} > intra {intra:.3}"))
}

fn manifold_metric() -> Outcome {
    let mut rng = oracle::rng(106);
    for trial in 0..50 {
        let sigs = (0..3)
            .map(|k| {
                let acts =
                    ActivationSet::new(format!("n{k}"), oracle::random_cloud(&mut rng, 12, 4, 0.5));
                signature(
                    SignatureSource::Activations(&acts),
                    SignatureMethod::Diffusion,
                    0.5,
                )
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let m = manifold_matrix(&sigs).map_err(|e| e.to_string())?.matrix;
        for i in 0..3 {
            check(m[[i, i]] == 0.0, || {
                format!("triple {trial}: nonzero diagonal")
            })?;
            for j in 0..3 {
                check(m[[i, j]] == m[[j, i]] && m[[i, j]] >= 0.0, || {
                    format!("triple {trial}: asymmetric")
                })?;
                for k in 0..3 {
                    check(m[[i, k]] <= m[[i, j]] + m[[j, k]] + 1e-12, || {
                        format!("triple {trial}: triangle")
                    })?;
                }
            }
        }
    }
    let square = array![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let ids: Vec<String> = (0..4).map(|i| format!("n{i}")).collect();
    let t = topn_tightness(square.view(), &[0.9, 0.95, 0.5, 0.4], &ids, 2)
        .map_err(|e| e.to_string())?;
    check((t - 0.8787).abs() < 1e-4, || {
        format!("unit-square tightness {t}")
    })?;
    Ok(format!("50 triples metric; unit-square tightness {t:.6}"))
}

fn gft() -> Outcome {
    let mut rng = oracle::rng(107);
    let mut worst_parseval = 0.0f64;
    let mut worst_const = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..20 {
        let m = rng.random_range(3..20);
        let d = oracle::naive_distances(&oracle::random_cloud(&mut rng, m, 3, 1.0));
        let manifold = ManifoldMatrix::precomputed(d, (0..m).map(|i| format!("n{i}")).collect())
            .map_err(|e| e.to_string())?;
        let g = manifold_graph(&manifold, Bandwidth::Median).map_err(|e| e.to_string())?;
        let eig = g.harmonics().map_err(|e| e.to_string())?;
        lo = lo.min(eig.values[0]);
        hi = hi.max(eig.values[m - 1]);
        let s = GraphSignal::new("s", (0..m).map(|_| oracle::normal(&mut rng)).collect());
        let energy: f64 = gft_with(&eig, &s)
            .iter()
            .map(|c| c.abs_inner_product.powi(2))
            .sum();
        worst_parseval = worst_parseval.max((energy - 1.0).abs());
        let constant = GraphSignal::new("c", vec![0.7; m]);
        let q = normalized_smoothness(&g, &constant, LaplacianKind::RandomWalk)
            .map_err(|e| e.to_string())?;
        let raw = netmanifold::graph_signal::quadratic_smoothness(
            &g,
            &constant,
            LaplacianKind::RandomWalk,
        )
        .map_err(|e| e.to_string())?;
        worst_const = worst_const.max(q.abs()).max(raw.abs());
    }
    check(worst_parseval < 1e-8, || {
        format!("Parseval deviation {worst_parseval:e}")
    })?;
    check(lo >= -1e-8 && hi <= 2.0 + 1e-8, || {
        format!("L_sym spectrum [{lo}, {hi}]")
    })?;
    check(worst_const < 1e-10, || {
        format!("constant-signal smoothness {worst_const:e}")
    })?;
    Ok(format!(
        "Parseval deviation {worst_parseval:.1e}; spectrum in [{lo:.2e}, {hi:.4}]; constant smoothness {worst_const:.1e}"
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = common::five_network_fixture(&dir.path().join("corpus"));
    let mut outputs = Vec::new();
    for name in ["first", "second"] {
        let config = RunConfig::new(&manifest, dir.path().join(name));
        run(&config).map_err(|e| e.to_string())?;
        outputs.push(common::data_files(&dir.path().join(name)));
    }
    check(!outputs[0].is_empty(), || "no artifacts written".into())?;
    let names: Vec<&String> = outputs[0].iter().map(|f| &f.0).collect();
    check(
        names == outputs[1].iter().map(|f| &f.0).collect::<Vec<_>>(),
        || "artifact sets differ".into(),
    )?;
    for (a, b) in outputs[0].iter().zip(&outputs[1]) {
        check(a.1 == b.1, || format!("{} differs between runs", a.0))?;
    }
    Ok(format!(
        "{} artifacts byte-identical across two runs",
        outputs[0].len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("diffusion operator", diffusion),
        ("diffusion spectral entropy", dse),
        ("Ward linkage and ARI", ward_and_ari),
        ("Wasserstein and persistence", wasserstein_and_tda),
        ("PHATE embedding", phate_checks),
        ("manifold metric", manifold_metric),
        ("graph Fourier transform", gft),
        ("pipeline determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
