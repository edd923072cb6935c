use bluerank::dataio::make_planted_dataset;
use bluerank::eval::{knn_classify_cv, neighbor_recovery};
use bluerank::{random_rank, rank_dimensions, Dataset, ScoringParams};
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn main() {
    // permuted-label null distribution
    let ds = make_planted_dataset(200, 2, 8, 5.0, 0.1, 3).unwrap();
    let labels: Vec<String> = ds.labels().unwrap().to_vec();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let mut f1s = Vec::new();
    for _ in 0..20 {
        let mut permuted = labels.clone();
        permuted.shuffle(&mut rng);
        let ds_p = Dataset::new(
            ds.values().clone(),
            ds.feature_names().to_vec(),
            Some(permuted),
        )
        .unwrap();
        f1s.push(knn_classify_cv(&ds_p, &[0, 1], 5, 5, 0).unwrap());
    }
    let mean: f64 = f1s.iter().sum::<f64>() / 20.0;
    let min = f1s.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = f1s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("permuted-label F1: mean {mean:.4} min {min:.4} max {max:.4}");

    // recovery informative vs noise on seed-7 instance
    let ds7 = make_planted_dataset(100, 1, 4, 5.0, 0.1, 7).unwrap();
    let ri = neighbor_recovery(&ds7, &[0], 20).unwrap();
    let rn = neighbor_recovery(&ds7, &[1], 20).unwrap();
    println!("recovery informative {ri:.4} noise {rn:.4}");

    // f1 blue vs random at count=1 over 20 seeds
    let mut ge = 0;
    for seed in 0..20u64 {
        let ds = make_planted_dataset(100, 1, 4, 5.0, 0.1, seed).unwrap();
        let blue = rank_dimensions(&ds, &ScoringParams::default(), 1).unwrap();
        let rnd = random_rank(&ds, 100 + seed);
        let f1b = knn_classify_cv(&ds, &blue.order[..1], 5, 5, 0).unwrap();
        let f1r = knn_classify_cv(&ds, &rnd.order[..1], 5, 5, 0).unwrap();
        if f1b >= f1r {
            ge += 1;
        }
        println!("seed {seed}: blue top {:?} f1 {f1b:.3} vs random top {:?} f1 {f1r:.3}", blue.order[0], rnd.order[0]);
    }
    println!("blue >= random: {ge}/20");
}
