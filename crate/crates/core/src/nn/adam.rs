/// How weight decay enters the update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DecayMode {
    /// `w ← w − lr·wd·w` before each step, outside the moment estimates.
    #[default]
    Decoupled,
    /// `wd·w` added to the gradient, so it passes through the moments.
    L2,
}

/// Adam moment and step settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub decay_mode: DecayMode,
}

impl AdamParams {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        AdamParams {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            decay_mode: DecayMode::Decoupled,
        }
    }

    pub fn with_decay_mode(self, decay_mode: DecayMode) -> Self {
        AdamParams { decay_mode, ..self }
    }
}

/// Adam state for a fixed list of parameter buffers.
#[derive(Clone, Debug)]
pub struct Adam {
    params: AdamParams,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: AdamParams, sizes: &[usize]) -> Adam {
        Adam {
            params,
            t: 0,
            m: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    /// One update. `decay[i]` selects whether buffer `i` is shrunk.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], decay: &[bool]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let p = self.params;
        let c1 = 1.0 - p.beta1.powi(self.t);
        let c2 = 1.0 - p.beta2.powi(self.t);
        let shrink = 1.0 - p.learning_rate * p.weight_decay;
        for (b, (w, g)) in params.iter_mut().zip(grads).enumerate() {
            assert_eq!(w.len(), g.len());
            let (m, v) = (&mut self.m[b], &mut self.v[b]);
            let decayed = decay[b] && p.weight_decay != 0.0;
            let l2 = decayed && p.decay_mode == DecayMode::L2;
            let shrunk = decayed && p.decay_mode == DecayMode::Decoupled;
            for j in 0..w.len() {
                let gj = if l2 { g[j] + p.weight_decay * w[j] } else { g[j] };
                if shrunk {
                    w[j] *= shrink;
                }
                m[j] = p.beta1 * m[j] + (1.0 - p.beta1) * gj;
                v[j] = p.beta2 * v[j] + (1.0 - p.beta2) * gj * gj;
                let mh = m[j] / c1;
                let vh = v[j] / c2;
                w[j] -= p.learning_rate * mh / (vh.sqrt() + p.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = Adam::new(AdamParams::new(0.1, 0.0), &[2]);
        let mut w = vec![1.0, -1.0];
        adam.step(&mut [&mut w], &[&[3.0, -0.5]], &[true]);
        assert!((w[0] - 0.9).abs() < 1e-7);
        assert!((w[1] + 0.9).abs() < 1e-7);
    }

    #[test]
    fn decoupled_decay_shrinks_without_gradient() {
        let mut adam = Adam::new(AdamParams::new(0.1, 0.5), &[1, 1]);
        let (mut a, mut b) = (vec![2.0], vec![2.0]);
        adam.step(&mut [&mut a, &mut b], &[&[0.0], &[0.0]], &[true, false]);
        assert!((a[0] - 2.0 * 0.95).abs() < 1e-15);
        assert_eq!(b[0], 2.0);
    }

    #[test]
    fn l2_decay_enters_the_moments() {
        let params = AdamParams::new(0.1, 0.5).with_decay_mode(DecayMode::L2);
        let mut adam = Adam::new(params, &[1]);
        let mut w = vec![2.0];
        adam.step(&mut [&mut w], &[&[0.0]], &[true]);
        // gradient wd·w = 1, so the first step moves by lr
        assert!((w[0] - 1.9).abs() < 1e-7);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut adam = Adam::new(AdamParams::new(0.05, 0.0), &[1]);
        let mut w = vec![5.0];
        for _ in 0..2000 {
            let g = [2.0 * (w[0] - 1.5)];
            adam.step(&mut [&mut w], &[&g], &[true]);
        }
        assert!((w[0] - 1.5).abs() < 1e-3);
    }
}
