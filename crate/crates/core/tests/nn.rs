mod common;

use common::*;
use gpca_core::graph::normalize;
use gpca_core::nn::{
    accuracy, build_network, cross_entropy_masked, train, xavier_init, DecayMode, Init, Input,
    Mixing, ModelKind, TrainConfig,
};
use gpca_core::smoother::{Propagation, SmoothingOperator};
use gpca_core::DenseMatrix;
use rand::Rng;

fn dims(d: usize, hidden: usize, layers: usize, c: usize) -> Vec<usize> {
    let mut v = vec![d];
    v.extend(std::iter::repeat_n(hidden, layers - 1));
    v.push(c);
    v
}

#[test]
fn mlp_gradients_match_finite_differences() {
    for layers in 1..=5 {
        let ds = toy_dataset(9, 4, 3, layers as u64);
        let mut net = build_network(ModelKind::Mlp, Mixing::None, &dims(4, 5, layers, 3), &Init::Xavier, 7).unwrap();
        for l in &mut net.layers {
            let n = l.b.as_ref().unwrap().len();
            l.b = Some((0..n).map(|i| 0.1 * i as f64 - 0.2).collect());
        }
        let err = max_gradient_error(&mut net, &Input::Dense(ds.features.clone()), &ds.labels, &ds.masks.train);
        assert!(err <= 1e-5, "{layers} layers: {err:e}");
    }
}

#[test]
fn gcn_gradients_match_finite_differences() {
    for layers in 1..=5 {
        let ds = toy_dataset(10, 4, 3, 10 + layers as u64);
        let mix = Mixing::Adjacency(normalize(&ds.graph));
        let mut net = build_network(ModelKind::Gcn, mix, &dims(4, 5, layers, 3), &Init::Xavier, 3).unwrap();
        let input = Input::auto(&ds.features);
        let err = max_gradient_error(&mut net, &input, &ds.labels, &ds.masks.train);
        assert!(err <= 1e-5, "{layers} layers: {err:e}");
    }
}

#[test]
fn gpca_mixing_gradients_match_finite_differences() {
    for (layers, prop) in [(2, Propagation::Smooth(gpca_core::smoother::SmootherConfig::with_iterations(5))), (3, Propagation::FirstOrder)] {
        let ds = toy_dataset(10, 4, 2, 20 + layers as u64);
        let op = SmoothingOperator::unsupervised(normalize(&ds.graph), 2.0).unwrap();
        let mix = Mixing::Gpca { op, propagation: prop };
        let mut net = build_network(ModelKind::GpcaNet, mix, &dims(4, 4, layers, 2), &Init::Xavier, 1).unwrap();
        let err = max_gradient_error(&mut net, &Input::Dense(ds.features.clone()), &ds.labels, &ds.masks.train);
        assert!(err <= 1e-5, "{layers} layers: {err:e}");
    }
}

#[test]
fn xavier_moments() {
    let (r, c) = (200, 300);
    let w = xavier_init(r, c, 11);
    let bound = (6.0 / (r + c) as f64).sqrt();
    assert!(w.as_slice().iter().all(|v| v.abs() <= bound));
    let n = w.as_slice().len() as f64;
    let mean = w.as_slice().iter().sum::<f64>() / n;
    let var = w.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let want = 2.0 / (r + c) as f64;
    assert!((var / want - 1.0).abs() < 0.1, "{var} vs {want}");
    assert_eq!(w, xavier_init(r, c, 11));
    assert_ne!(w, xavier_init(r, c, 12));
}

#[test]
fn random_logits_score_chance() {
    let mut r = rng(5);
    let n = 4000;
    let logits = random_matrix(n, 4, &mut r);
    let labels: Vec<Option<usize>> = (0..n).map(|_| Some(r.gen_range(0..4))).collect();
    let acc = accuracy(&logits, &labels, &vec![true; n]).unwrap();
    assert!((acc - 0.25).abs() < 0.05, "{acc}");
}

#[test]
fn uniform_logits_give_log_c() {
    let c = 5;
    let logits = DenseMatrix::zeros(6, c);
    let labels: Vec<Option<usize>> = (0..6).map(|i| Some(i % c)).collect();
    let mask = vec![true, true, false, true, true, true];
    let (loss, grad) = cross_entropy_masked(&logits, &labels, &mask).unwrap();
    assert!((loss - (c as f64).ln()).abs() < 1e-12);
    assert!(grad.row(2).iter().all(|&g| g == 0.0));

    let mut r = rng(6);
    let z = random_matrix(6, c, &mut r);
    let (_, g) = cross_entropy_masked(&z, &labels, &mask).unwrap();
    let h = 1e-6;
    for k in 0..z.as_slice().len() {
        let mut up = z.clone();
        up.as_mut_slice()[k] += h;
        let mut down = z.clone();
        down.as_mut_slice()[k] -= h;
        let fd = (cross_entropy_masked(&up, &labels, &mask).unwrap().0
            - cross_entropy_masked(&down, &labels, &mask).unwrap().0)
            / (2.0 * h);
        assert!((fd - g.as_slice()[k]).abs() <= 1e-6);
    }
}

#[test]
fn empty_mask_is_an_error() {
    let logits = DenseMatrix::zeros(3, 2);
    let labels = vec![Some(0), None, Some(1)];
    assert!(cross_entropy_masked(&logits, &labels, &[false, true, false]).is_err());
    assert!(accuracy(&logits, &labels, &[false; 3]).is_err());
}

fn small_config(seed: u64, dropout: f64) -> TrainConfig {
    TrainConfig { epochs: 60, ..TrainConfig::new(0.01, 5e-4, dropout, seed) }
}

#[test]
fn training_is_node_permutation_equivariant() {
    let ds = toy_dataset(40, 6, 3, 30);
    let mut r = rng(31);
    let mut perm: Vec<usize> = (0..40).collect();
    for i in (1..40).rev() {
        perm.swap(i, r.gen_range(0..=i));
    }
    let pds = ds.permuted(&perm).unwrap();
    let cfg = small_config(0, 0.0);
    let fit = |d: &gpca_core::dataset::GraphDataset| {
        let mix = Mixing::Adjacency(normalize(&d.graph));
        let mut net = build_network(ModelKind::Gcn, mix, &[6, 8, 3], &Init::Xavier, 4).unwrap();
        train(&mut net, &Input::auto(&d.features), &d.labels, &d.masks, &cfg).unwrap()
    };
    let (a, b) = (fit(&ds), fit(&pds));
    assert_eq!(a.val_acc, b.val_acc);
    assert_eq!((a.best_epoch, a.train_acc, a.test_acc), (b.best_epoch, b.train_acc, b.test_acc));
    for (x, y) in a.train_loss.iter().zip(&b.train_loss) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn training_is_deterministic_and_seeded() {
    let ds = toy_dataset(30, 5, 2, 40);
    let run = |seed: u64| {
        let mut net = build_network(ModelKind::Mlp, Mixing::None, &[5, 8, 2], &Init::Xavier, seed).unwrap();
        let mut m = train(&mut net, &Input::Dense(ds.features.clone()), &ds.labels, &ds.masks, &small_config(seed, 0.5)).unwrap();
        m.wall_time_s = 0.0;
        (m, net.layers)
    };
    let (ma, la) = run(1);
    let (mb, lb) = run(1);
    assert_eq!(ma, mb);
    assert_eq!(la, lb);
    assert_ne!(run(2).0.train_loss, ma.train_loss);
}

#[test]
fn training_reduces_the_loss_under_both_decay_modes() {
    let ds = toy_dataset(30, 5, 2, 50);
    for mode in [DecayMode::Decoupled, DecayMode::L2] {
        let mix = Mixing::Adjacency(normalize(&ds.graph));
        let mut net = build_network(ModelKind::Gcn, mix, &[5, 8, 2], &Init::Xavier, 0).unwrap();
        let cfg = TrainConfig { decay_mode: mode, ..small_config(0, 0.0) };
        let m = train(&mut net, &Input::auto(&ds.features), &ds.labels, &ds.masks, &cfg).unwrap();
        assert_eq!(m.train_loss.len(), 60);
        assert!(m.train_loss[59] < m.train_loss[0], "{mode:?}");
        assert!(m.val_acc[m.best_epoch] == m.best_val_acc);
    }
}

#[test]
fn patience_stops_early() {
    let ds = toy_dataset(30, 5, 2, 60);
    let mut net = build_network(ModelKind::Mlp, Mixing::None, &[5, 2], &Init::Xavier, 0).unwrap();
    let cfg = TrainConfig { epochs: 1000, patience: Some(5), ..TrainConfig::new(0.05, 0.0, 0.0, 0) };
    let m = train(&mut net, &Input::Dense(ds.features.clone()), &ds.labels, &ds.masks, &cfg).unwrap();
    assert!(m.train_loss.len() < 1000);
    assert!(m.train_loss.len() <= m.best_epoch + 6);
}

#[test]
fn invalid_configs_are_rejected() {
    let ds = toy_dataset(12, 3, 2, 70);
    let mut net = build_network(ModelKind::Mlp, Mixing::None, &[3, 2], &Init::Xavier, 0).unwrap();
    let input = Input::Dense(ds.features.clone());
    for cfg in [TrainConfig::new(0.0, 0.0, 0.0, 0), TrainConfig::new(0.01, -1.0, 0.0, 0), TrainConfig::new(0.01, 0.0, 1.0, 0)] {
        assert!(train(&mut net, &input, &ds.labels, &ds.masks, &cfg).is_err());
    }
    assert!(build_network(ModelKind::Mlp, Mixing::None, &[4, 2], &Init::Xavier, 0).is_ok());
    let bad = build_network(ModelKind::Mlp, Mixing::None, &[4, 2], &Init::Xavier, 0).unwrap();
    assert!(bad.predict(&input).is_err());
}
