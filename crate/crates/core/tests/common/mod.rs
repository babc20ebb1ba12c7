#![allow(dead_code)]

use gpca_core::dataset::{GraphDataset, Masks};
use gpca_core::graph::Graph;
use gpca_core::DenseMatrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Erdős–Rényi graph with edge probability `p`.
pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Dense `D̃^{-1/2}(A+I)D̃^{-1/2}` built from the edge list.
pub fn dense_normalized(g: &Graph) -> DMatrix<f64> {
    let n = g.num_nodes();
    let mut a = DMatrix::<f64>::identity(n, n);
    for (u, v) in g.edges() {
        a[(u, v)] = 1.0;
        a[(v, u)] = 1.0;
    }
    let d: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (d[i] * d[j]).sqrt())
}

pub fn rel_frobenius(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let diff: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    diff / b.frobenius().max(1e-300)
}

/// Small labeled dataset with every node in the training mask.
pub fn toy_dataset(n: usize, d: usize, classes: usize, seed: u64) -> GraphDataset {
    let mut r = rng(seed);
    let g = random_graph(n, 0.3, &mut r);
    let x = random_matrix(n, d, &mut r);
    let labels = (0..n).map(|i| Some(i % classes)).collect();
    let mut masks = Masks::empty(n);
    for i in 0..n {
        match i % 4 {
            0 | 1 => masks.train[i] = true,
            2 => masks.val[i] = true,
            _ => masks.test[i] = true,
        }
    }
    GraphDataset::new(g, x, labels, classes, masks).unwrap()
}

/// Largest relative gap between analytic and central-difference gradients
/// of the masked training loss, over every weight and bias entry.
pub fn max_gradient_error(
    net: &mut gpca_core::nn::Network,
    input: &gpca_core::nn::Input,
    labels: &[Option<usize>],
    mask: &[bool],
) -> f64 {
    use gpca_core::nn::cross_entropy_masked;
    let loss = |net: &gpca_core::nn::Network| {
        let (out, _) = net.forward(input, None).unwrap();
        cross_entropy_masked(&out, labels, mask).unwrap().0
    };
    let (out, cache) = net.forward(input, None).unwrap();
    let (_, g) = cross_entropy_masked(&out, labels, mask).unwrap();
    let grads = net.backward(input, &cache, &g).unwrap();
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut check = |fd: f64, an: f64| {
        let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-4);
        worst = worst.max(err);
    };
    for l in 0..net.layers.len() {
        for k in 0..net.layers[l].w.as_slice().len() {
            let w0 = net.layers[l].w.as_slice()[k];
            net.layers[l].w.as_mut_slice()[k] = w0 + h;
            let up = loss(net);
            net.layers[l].w.as_mut_slice()[k] = w0 - h;
            let down = loss(net);
            net.layers[l].w.as_mut_slice()[k] = w0;
            check((up - down) / (2.0 * h), grads.w[l].as_slice()[k]);
        }
        let nb = net.layers[l].b.as_ref().map_or(0, |b| b.len());
        for k in 0..nb {
            let b0 = net.layers[l].b.as_ref().unwrap()[k];
            net.layers[l].b.as_mut().unwrap()[k] = b0 + h;
            let up = loss(net);
            net.layers[l].b.as_mut().unwrap()[k] = b0 - h;
            let down = loss(net);
            net.layers[l].b.as_mut().unwrap()[k] = b0;
            check((up - down) / (2.0 * h), grads.b[l].as_ref().unwrap()[k]);
        }
    }
    worst
}
