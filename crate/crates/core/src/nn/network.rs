use rand::Rng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::gpcanet::{Activation, WeightFile};
use crate::graph::NormalizedAdjacency;
use crate::linalg::{center_columns, CsrMatrix, DenseMatrix};
use crate::smoother::{Propagation, SmoothingOperator};

/// Node features fed to the first layer.
#[derive(Clone, Debug)]
pub enum Input {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

/// Inputs sparser than this are stored as CSR by [`Input::auto`].
const SPARSE_DENSITY: f64 = 0.1;

impl Input {
    /// CSR when `x` is mostly zeros, dense otherwise.
    pub fn auto(x: &DenseMatrix) -> Input {
        let s = CsrMatrix::from_dense(x);
        if s.density() < SPARSE_DENSITY {
            Input::Sparse(s)
        } else {
            Input::Dense(x.clone())
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Input::Dense(m) => m.rows(),
            Input::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Input::Dense(m) => m.cols(),
            Input::Sparse(m) => m.cols(),
        }
    }

    fn matmul(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            Input::Dense(m) => m.matmul(w),
            Input::Sparse(m) => m.matmul(w),
        }
    }

    fn t_matmul(&self, g: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            Input::Dense(m) => m.t_matmul(g),
            Input::Sparse(m) => m.t_matmul(g),
        }
    }

    fn dropped(&self, p: f64, rng: &mut Xoshiro256PlusPlus) -> Input {
        match self {
            Input::Dense(m) => Input::Dense(dropout_dense(m, p, rng).0),
            Input::Sparse(m) => {
                let keep = 1.0 / (1.0 - p);
                let v = m
                    .values()
                    .iter()
                    .map(|&v| if rng.gen::<f64>() < p { 0.0 } else { v * keep })
                    .collect();
                Input::Sparse(m.with_values(v).unwrap())
            }
        }
    }
}

/// Inverted dropout; returns the dropped matrix and the per-entry factors.
fn dropout_dense(m: &DenseMatrix, p: f64, rng: &mut Xoshiro256PlusPlus) -> (DenseMatrix, Vec<f64>) {
    let keep = 1.0 / (1.0 - p);
    let factors: Vec<f64> = (0..m.as_slice().len())
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect();
    let mut out = m.clone();
    for (v, f) in out.as_mut_slice().iter_mut().zip(&factors) {
        *v *= f;
    }
    (out, factors)
}

/// Node mixing applied after each weight product.
#[derive(Clone, Debug)]
pub enum Mixing {
    /// Rows are independent (MLP).
    None,
    /// `Ã_sym Z` (GCN).
    Adjacency(NormalizedAdjacency),
    /// `propagate(center(Z))` (GPCANet).
    Gpca {
        op: SmoothingOperator,
        propagation: Propagation,
    },
}

impl Mixing {
    pub fn apply(&self, z: DenseMatrix) -> Result<DenseMatrix> {
        match self {
            Mixing::None => Ok(z),
            Mixing::Adjacency(a) => a.spmm(&z),
            Mixing::Gpca { op, propagation } => op.propagate(propagation, &center_columns(&z)),
        }
    }

    /// Adjoint of [`apply`](Self::apply). Every mixing operator here is a
    /// product of symmetric factors, so the adjoint reverses their order.
    pub fn adjoint(&self, g: DenseMatrix) -> Result<DenseMatrix> {
        match self {
            Mixing::None => Ok(g),
            Mixing::Adjacency(a) => a.spmm(&g),
            Mixing::Gpca { op, propagation } => Ok(center_columns(&op.propagate(propagation, &g)?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub w: DenseMatrix,
    pub b: Option<Vec<f64>>,
    pub activation: Activation,
}

/// Layers sharing one mixing operator:
/// `H' = σ(mix(drop(H) W) + b)`.
#[derive(Clone, Debug)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub mixing: Mixing,
}

/// Activations kept by a training forward pass.
#[derive(Clone, Debug)]
pub struct Cache {
    input0: Option<Input>,
    /// Dropped inputs of layers `1..L`.
    hidden: Vec<DenseMatrix>,
    factors: Vec<Option<Vec<f64>>>,
    pre: Vec<DenseMatrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grads {
    pub w: Vec<DenseMatrix>,
    pub b: Vec<Option<Vec<f64>>>,
}

impl Network {
    pub fn new(layers: Vec<Layer>, mixing: Mixing) -> Result<Network> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("network needs at least one layer".into()));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[0].w.cols() != pair[1].w.rows() {
                return Err(Error::InvalidConfig(format!(
                    "layer {l} output {} does not feed layer {} input {}",
                    pair[0].w.cols(),
                    l + 1,
                    pair[1].w.rows()
                )));
            }
        }
        for (l, layer) in layers.iter().enumerate() {
            if let Some(b) = &layer.b {
                if b.len() != layer.w.cols() {
                    return Err(Error::shape("bias length", layer.w.cols(), b.len()));
                }
            }
            layer.w.check_finite("weights").map_err(|_| {
                Error::InvalidConfig(format!("layer {l} has non-finite weights"))
            })?;
        }
        Ok(Network { layers, mixing })
    }

    /// Layers from an exported weight list, with optional zero biases.
    pub fn from_weights(wf: &WeightFile, mixing: Mixing, bias: bool) -> Result<Network> {
        let layers = wf
            .layers
            .iter()
            .zip(&wf.weights)
            .map(|(spec, w)| Layer {
                w: w.clone(),
                b: bias.then(|| vec![0.0; spec.out_dim]),
                activation: spec.activation,
            })
            .collect();
        Network::new(layers, mixing)
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].w.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().w.cols()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.w.as_slice().len() + l.b.as_ref().map_or(0, Vec::len))
            .sum()
    }

    /// Parameter buffers in a fixed order (each layer's weights, then its
    /// bias), with whether each is a weight matrix.
    pub fn buffers_mut(&mut self) -> Vec<(&mut [f64], bool)> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push((l.w.as_mut_slice(), true));
            if let Some(b) = &mut l.b {
                out.push((b.as_mut_slice(), false));
            }
        }
        out
    }

    fn layer_pre(&self, l: usize, prod: DenseMatrix) -> Result<DenseMatrix> {
        let mut pre = self.mixing.apply(prod)?;
        if let Some(b) = &self.layers[l].b {
            let c = pre.cols();
            for row in pre.as_mut_slice().chunks_mut(c.max(1)) {
                for (v, bv) in row.iter_mut().zip(b) {
                    *v += bv;
                }
            }
        }
        Ok(pre)
    }

    fn check_input(&self, input: &Input) -> Result<()> {
        if input.cols() != self.in_dim() {
            return Err(Error::shape("network input", self.in_dim(), input.cols()));
        }
        Ok(())
    }

    /// Evaluation pass.
    pub fn predict(&self, input: &Input) -> Result<DenseMatrix> {
        self.check_input(input)?;
        let mut h = None::<DenseMatrix>;
        for (l, layer) in self.layers.iter().enumerate() {
            let prod = match &h {
                None => input.matmul(&layer.w)?,
                Some(h) => h.matmul(&layer.w)?,
            };
            let mut pre = self.layer_pre(l, prod)?;
            layer.activation.apply_in_place(&mut pre);
            h = Some(pre);
        }
        Ok(h.unwrap())
    }

    /// Training pass. With `dropout = Some((p, rng))` every layer input is
    /// dropped with probability `p` and rescaled by `1/(1−p)`.
    pub fn forward(
        &self,
        input: &Input,
        mut dropout: Option<(f64, &mut Xoshiro256PlusPlus)>,
    ) -> Result<(DenseMatrix, Cache)> {
        self.check_input(input)?;
        if let Some((p, _)) = &dropout {
            if !(0.0..1.0).contains(p) {
                return Err(Error::InvalidConfig(format!("dropout {p} must lie in [0, 1)")));
            }
        }
        let active = |d: &Option<(f64, &mut Xoshiro256PlusPlus)>| d.as_ref().is_some_and(|(p, _)| *p > 0.0);
        let mut cache = Cache {
            input0: None,
            hidden: Vec::new(),
            factors: Vec::new(),
            pre: Vec::new(),
        };
        let mut h: Option<DenseMatrix> = None;
        for (l, layer) in self.layers.iter().enumerate() {
            let prod = match h.take() {
                None => {
                    if active(&dropout) {
                        let (p, rng) = dropout.as_mut().unwrap();
                        let d = input.dropped(*p, rng);
                        let prod = d.matmul(&layer.w)?;
                        cache.input0 = Some(d);
                        prod
                    } else {
                        input.matmul(&layer.w)?
                    }
                }
                Some(x) => {
                    let (x, f) = if active(&dropout) {
                        let (p, rng) = dropout.as_mut().unwrap();
                        let (x, f) = dropout_dense(&x, *p, rng);
                        (x, Some(f))
                    } else {
                        (x, None)
                    };
                    let prod = x.matmul(&layer.w)?;
                    cache.hidden.push(x);
                    cache.factors.push(f);
                    prod
                }
            };
            let pre = self.layer_pre(l, prod)?;
            let mut out = pre.clone();
            layer.activation.apply_in_place(&mut out);
            cache.pre.push(pre);
            h = Some(out);
        }
        Ok((h.unwrap(), cache))
    }

    /// Gradients of a loss with respect to every parameter, given its
    /// gradient `grad` with respect to the output of [`forward`](Self::forward).
    pub fn backward(&self, input: &Input, cache: &Cache, grad: &DenseMatrix) -> Result<Grads> {
        let n_layers = self.layers.len();
        if cache.pre.len() != n_layers {
            return Err(Error::InvalidConfig("cache does not match the network".into()));
        }
        let last = &cache.pre[n_layers - 1];
        if grad.shape() != last.shape() {
            return Err(Error::shape(
                "backward gradient",
                format!("{}x{}", last.rows(), last.cols()),
                format!("{}x{}", grad.rows(), grad.cols()),
            ));
        }
        let mut gw = vec![DenseMatrix::zeros(0, 0); n_layers];
        let mut gb = vec![None; n_layers];
        let mut g = grad.clone();
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            if layer.activation == Activation::Relu {
                for (gv, &p) in g.as_mut_slice().iter_mut().zip(cache.pre[l].as_slice()) {
                    if p <= 0.0 {
                        *gv = 0.0;
                    }
                }
            }
            if layer.b.is_some() {
                let mut db = vec![0.0; g.cols()];
                for i in 0..g.rows() {
                    for (d, v) in db.iter_mut().zip(g.row(i)) {
                        *d += v;
                    }
                }
                gb[l] = Some(db);
            }
            let dz = self.mixing.adjoint(g)?;
            if l == 0 {
                gw[0] = cache.input0.as_ref().unwrap_or(input).t_matmul(&dz)?;
                break;
            }
            gw[l] = cache.hidden[l - 1].t_matmul(&dz)?;
            let mut dh = dz.matmul_t(&layer.w)?;
            if let Some(f) = &cache.factors[l - 1] {
                for (v, s) in dh.as_mut_slice().iter_mut().zip(f) {
                    *v *= s;
                }
            }
            g = dh;
        }
        Ok(Grads { w: gw, b: gb })
    }
}
