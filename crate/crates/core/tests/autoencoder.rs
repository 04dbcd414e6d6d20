use envmap_core::archive::Candidate;
use envmap_core::autoencoder::{Mlp, TrainParams};
use envmap_core::config::RunConfig;
use envmap_core::rng::{stream, Stream};
use envmap_core::search::bootstrap_candidates;
use envmap_core::terrain::Terrain;
use ndarray::Array2;
use rand::Rng;

/// Central differences on every parameter of a tiny network.
#[test]
fn analytic_gradients_match_finite_differences() {
    let mut rng = stream(2, Stream::AutoencoderInit, 0, 0);
    let net = Mlp::with_sizes(&[6, 4, 3, 4, 6], &mut rng);
    let x = Array2::from_shape_fn((5, 6), |_| rng.random::<f64>());
    let (_, grads) = net.loss_and_gradients(x.view());
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for l in 0..net.weights().len() {
        for (idx, &analytic) in grads.weights[l].indexed_iter() {
            let mut plus = net.clone();
            plus.weights_mut()[l][idx] += h;
            let mut minus = net.clone();
            minus.weights_mut()[l][idx] -= h;
            let numeric = (plus.loss(x.view()) - minus.loss(x.view())) / (2.0 * h);
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7));
        }
        for (i, &analytic) in grads.biases[l].indexed_iter() {
            let mut plus = net.clone();
            plus.biases_mut()[l][i] += h;
            let mut minus = net.clone();
            minus.biases_mut()[l][i] -= h;
            let numeric = (plus.loss(x.view()) - minus.loss(x.view())) / (2.0 * h);
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7));
        }
    }
    assert!(worst < 1e-4, "worst relative gradient error {worst}");
}

fn bootstrap_terrains() -> Vec<Terrain> {
    bootstrap_candidates(&RunConfig::default())
        .into_iter()
        .map(|c: Candidate| c.terrain)
        .collect()
}

#[test]
fn bootstrap_training_halves_mse_within_100_epochs() {
    let terrains = bootstrap_terrains();
    assert_eq!(terrains.len(), 500);
    let mut net = Mlp::new(&mut stream(0, Stream::AutoencoderInit, 0, 0));
    let before = net.mse(&terrains);
    let params = TrainParams { epochs: 100, ..TrainParams::default() };
    let after = net
        .train(&terrains, &params, &mut stream(0, Stream::AutoencoderTrain, 0, 0))
        .unwrap();
    assert!(after <= 0.5 * before, "mse {before} -> {after}");
}

#[test]
fn training_rarely_increases_loss() {
    let terrains: Vec<Terrain> = bootstrap_terrains().into_iter().take(64).collect();
    let params = TrainParams { epochs: 5, ..TrainParams::default() };
    let improved = (0..20)
        .filter(|&seed| {
            let mut net = Mlp::new(&mut stream(seed, Stream::AutoencoderInit, 0, 0));
            let before = net.mse(&terrains);
            let after = net
                .train(&terrains, &params, &mut stream(seed, Stream::AutoencoderTrain, 0, 0))
                .unwrap();
            after <= before
        })
        .count();
    assert!(improved >= 19, "only {improved}/20 seeds improved");
}

#[test]
fn init_train_query_is_deterministic() {
    let terrains: Vec<Terrain> = bootstrap_terrains().into_iter().take(40).collect();
    let params = TrainParams { epochs: 3, ..TrainParams::default() };
    let go = || {
        let mut net = Mlp::new(&mut stream(8, Stream::AutoencoderInit, 0, 0));
        net.train(&terrains, &params, &mut stream(8, Stream::AutoencoderTrain, 0, 0))
            .unwrap();
        terrains
            .iter()
            .map(|t| net.reconstruction_error(t).to_bits())
            .collect::<Vec<_>>()
    };
    assert_eq!(go(), go());
}
