use netmanifold::diffusion::pairwise_distances_of;
use netmanifold::tda::{rips_persistence, RipsConfig};
use netmanifold_oracles as oracle;

fn main() {
    let mut rng = oracle::rng(1);
    let n: usize = std::env::args().nth(1).map_or(100, |s| s.parse().unwrap());
    let x = oracle::random_cloud(&mut rng, n, 20, 1.0);
    let d = pairwise_distances_of(x.view());
    let start = std::time::Instant::now();
    let pd = rips_persistence("x", &d, &RipsConfig::default()).unwrap();
    println!(
        "{n} points: {} pairs in {:.2?}",
        pd.points.len(),
        start.elapsed()
    );
}
