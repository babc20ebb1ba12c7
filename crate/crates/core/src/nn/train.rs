use std::time::Instant;

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::dataset::Masks;
use crate::error::{Error, Result};
use crate::gpcanet::{Activation, WeightFile};
use crate::nn::adam::{Adam, AdamParams, DecayMode};
use crate::nn::init::xavier_with;
use crate::nn::loss::{accuracy, cross_entropy_masked};
use crate::nn::network::{Input, Layer, Mixing, Network};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Mlp,
    Gcn,
    GpcaNet,
}

impl ModelKind {
    /// MLP heads carry biases; graph layers do not.
    pub fn has_bias(self) -> bool {
        self == ModelKind::Mlp
    }
}

#[derive(Clone, Debug)]
pub enum Init {
    Xavier,
    Imported(WeightFile),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub decay_mode: DecayMode,
    pub dropout: f64,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Stop after this many epochs without a new best validation accuracy.
    pub patience: Option<usize>,
}

pub const DEFAULT_EPOCHS: usize = 1000;

impl TrainConfig {
    pub fn new(learning_rate: f64, weight_decay: f64, dropout: f64, seed: u64) -> Self {
        TrainConfig {
            learning_rate,
            weight_decay,
            decay_mode: DecayMode::Decoupled,
            dropout,
            epochs: DEFAULT_EPOCHS,
            seed,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            patience: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && self.weight_decay.is_finite()
            && self.weight_decay >= 0.0
            && (0.0..1.0).contains(&self.dropout)
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.epochs > 0;
        if !ok {
            return Err(Error::InvalidConfig(format!("invalid training config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    /// Training loss of every epoch (with dropout when enabled).
    pub train_loss: Vec<f64>,
    /// Validation accuracy of the parameters each epoch started from.
    pub val_acc: Vec<f64>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub train_acc: f64,
    /// Test accuracy at `best_epoch`.
    pub test_acc: f64,
    pub seed: u64,
    pub wall_time_s: f64,
}

/// Network of kind `kind` with layer widths `dims` (input first). Hidden
/// layers use ReLU, the last layer is linear.
pub fn build_network(
    kind: ModelKind,
    mixing: Mixing,
    dims: &[usize],
    init: &Init,
    seed: u64,
) -> Result<Network> {
    match init {
        Init::Imported(wf) => {
            let shape: Vec<usize> = std::iter::once(wf.layers[0].in_dim)
                .chain(wf.layers.iter().map(|s| s.out_dim))
                .collect();
            if !dims.is_empty() && shape != dims {
                return Err(Error::InvalidConfig(format!(
                    "imported weights have shape {shape:?}, expected {dims:?}"
                )));
            }
            Network::from_weights(wf, mixing, kind.has_bias())
        }
        Init::Xavier => {
            if dims.len() < 2 {
                return Err(Error::InvalidConfig("need at least input and output widths".into()));
            }
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let layers = dims
                .windows(2)
                .enumerate()
                .map(|(l, p)| Layer {
                    w: xavier_with(p[0], p[1], &mut rng),
                    b: kind.has_bias().then(|| vec![0.0; p[1]]),
                    activation: if l + 2 == dims.len() {
                        Activation::Identity
                    } else {
                        Activation::Relu
                    },
                })
                .collect();
            Network::new(layers, mixing)
        }
    }
}

// Separates the dropout stream from the initialization stream of one seed.
const DROPOUT_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Full-batch Adam training with best-validation model selection.
pub fn train(
    net: &mut Network,
    input: &Input,
    labels: &[Option<usize>],
    masks: &Masks,
    cfg: &TrainConfig,
) -> Result<Metrics> {
    cfg.validate()?;
    let start = Instant::now();
    let sizes: Vec<usize> = net.buffers_mut().iter().map(|(b, _)| b.len()).collect();
    let decay: Vec<bool> = net.buffers_mut().iter().map(|(_, w)| *w).collect();
    let mut adam = Adam::new(
        AdamParams {
            learning_rate: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.eps,
            weight_decay: cfg.weight_decay,
            decay_mode: cfg.decay_mode,
        },
        &sizes,
    );
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed ^ DROPOUT_STREAM);
    let mut m = Metrics {
        train_loss: Vec::with_capacity(cfg.epochs),
        val_acc: Vec::with_capacity(cfg.epochs),
        best_epoch: 0,
        best_val_acc: f64::NEG_INFINITY,
        train_acc: 0.0,
        test_acc: 0.0,
        seed: cfg.seed,
        wall_time_s: 0.0,
    };

    for epoch in 0..cfg.epochs {
        let (logits, cache, eval) = if cfg.dropout > 0.0 {
            let eval = net.predict(input)?;
            let (z, c) = net.forward(input, Some((cfg.dropout, &mut rng)))?;
            (z, c, Some(eval))
        } else {
            let (z, c) = net.forward(input, None)?;
            (z, c, None)
        };
        let eval = eval.as_ref().unwrap_or(&logits);
        let val = accuracy(eval, labels, &masks.val)?;
        m.val_acc.push(val);
        if val > m.best_val_acc {
            m.best_val_acc = val;
            m.best_epoch = epoch;
            m.train_acc = accuracy(eval, labels, &masks.train)?;
            m.test_acc = accuracy(eval, labels, &masks.test)?;
        }

        let (loss, grad) = cross_entropy_masked(&logits, labels, &masks.train)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        m.train_loss.push(loss);
        if cfg.patience.is_some_and(|p| epoch - m.best_epoch >= p) {
            break;
        }
        let grads = net.backward(input, &cache, &grad)?;
        let mut flat: Vec<&[f64]> = Vec::with_capacity(sizes.len());
        for (w, b) in grads.w.iter().zip(&grads.b) {
            flat.push(w.as_slice());
            if let Some(b) = b {
                flat.push(b);
            }
        }
        let mut bufs: Vec<&mut [f64]> = net.buffers_mut().into_iter().map(|(b, _)| b).collect();
        adam.step(&mut bufs, &flat, &decay);
    }
    m.wall_time_s = start.elapsed().as_secs_f64();
    Ok(m)
}
