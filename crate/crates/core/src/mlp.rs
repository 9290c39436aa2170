//! Three-layer perceptron approximating `Q(state, action)` for one action.
//!
//! Hidden units are logistic, the output unit is linear so that negative
//! Q-values are representable. Biases are optional and off by default.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MlpConfig {
    pub hidden: usize,
    /// Backpropagation step size, independent of the Q-learning rate.
    pub learning_rate: f64,
    pub bias: bool,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 32,
            learning_rate: 0.01,
            bias: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bias {
    pub hidden: Vec<f64>,
    pub output: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Perceptron {
    n_in: usize,
    n_hidden: usize,
    /// Row-major, one row of `n_in` weights per hidden unit.
    w_ih: Vec<f64>,
    w_ho: Vec<f64>,
    bias: Option<Bias>,
    learning_rate: f64,
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Perceptron {
    /// Weights drawn uniformly from `[-0.5, 0.5]` by a ChaCha8 generator
    /// seeded with `seed`.
    pub fn init(n_in: usize, config: &MlpConfig, seed: u64) -> Result<Self> {
        if n_in == 0 || config.hidden == 0 {
            return Err(Error::Config(format!(
                "perceptron sizes must be positive (n_in={n_in}, n_hidden={})",
                config.hidden
            )));
        }
        if config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
            return Err(Error::Config(format!("learning rate must be > 0, got {}", config.learning_rate)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-0.5..=0.5)).collect() };
        let w_ih = draw(n_in * config.hidden);
        let w_ho = draw(config.hidden);
        let bias = config.bias.then(|| {
            let hidden = draw(config.hidden);
            let output = draw(1)[0];
            Bias { hidden, output }
        });
        Ok(Perceptron {
            n_in,
            n_hidden: config.hidden,
            w_ih,
            w_ho,
            bias,
            learning_rate: config.learning_rate,
        })
    }

    pub fn from_parts(
        n_in: usize,
        n_hidden: usize,
        w_ih: Vec<f64>,
        w_ho: Vec<f64>,
        bias: Option<Bias>,
        learning_rate: f64,
    ) -> Result<Self> {
        if w_ih.len() != n_in * n_hidden {
            return Err(Error::Dimension {
                expected: n_in * n_hidden,
                actual: w_ih.len(),
            });
        }
        if w_ho.len() != n_hidden {
            return Err(Error::Dimension {
                expected: n_hidden,
                actual: w_ho.len(),
            });
        }
        if let Some(b) = &bias {
            if b.hidden.len() != n_hidden {
                return Err(Error::Dimension {
                    expected: n_hidden,
                    actual: b.hidden.len(),
                });
            }
        }
        Ok(Perceptron {
            n_in,
            n_hidden,
            w_ih,
            w_ho,
            bias,
            learning_rate,
        })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn weights_ih(&self) -> &[f64] {
        &self.w_ih
    }

    pub fn weights_ho(&self) -> &[f64] {
        &self.w_ho
    }

    pub fn bias(&self) -> Option<&Bias> {
        self.bias.as_ref()
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_in {
            return Err(Error::Dimension {
                expected: self.n_in,
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        self.w_ih
            .chunks_exact(self.n_in)
            .enumerate()
            .map(|(j, row)| {
                let net: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
                let b = self.bias.as_ref().map_or(0.0, |b| b.hidden[j]);
                sigmoid(net + b)
            })
            .collect()
    }

    fn output(&self, hidden: &[f64]) -> f64 {
        let y: f64 = self.w_ho.iter().zip(hidden).map(|(w, h)| w * h).sum();
        y + self.bias.as_ref().map_or(0.0, |b| b.output)
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.output(&self.hidden(x)))
    }

    /// Flattened parameters: input weights, output weights, then (when
    /// present) hidden biases and the output bias.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.w_ih.clone();
        p.extend_from_slice(&self.w_ho);
        if let Some(b) = &self.bias {
            p.extend_from_slice(&b.hidden);
            p.push(b.output);
        }
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        let expected = self.params().len();
        if params.len() != expected {
            return Err(Error::Dimension {
                expected,
                actual: params.len(),
            });
        }
        let (ih, rest) = params.split_at(self.w_ih.len());
        let (ho, rest) = rest.split_at(self.w_ho.len());
        self.w_ih.copy_from_slice(ih);
        self.w_ho.copy_from_slice(ho);
        if let Some(b) = &mut self.bias {
            let (bh, bo) = rest.split_at(b.hidden.len());
            b.hidden.copy_from_slice(bh);
            b.output = bo[0];
        }
        Ok(())
    }

    /// Gradient of `error_sign * y` laid out like [`Perceptron::params`];
    /// `d(0.5 (t - y)^2)/dw = -(t - y) dy/dw`.
    fn backprop(&self, x: &[f64], hidden: &[f64], error: f64) -> Vec<f64> {
        let mut grad = Vec::with_capacity(self.params().len());
        let deltas: Vec<f64> = hidden
            .iter()
            .zip(&self.w_ho)
            .map(|(h, w)| -error * w * h * (1.0 - h))
            .collect();
        for d in &deltas {
            grad.extend(x.iter().map(|xi| d * xi));
        }
        grad.extend(hidden.iter().map(|h| -error * h));
        if self.bias.is_some() {
            grad.extend_from_slice(&deltas);
            grad.push(-error);
        }
        grad
    }

    /// Analytic gradient of the squared error `0.5 (target - forward(x))^2`.
    pub fn loss_gradient(&self, x: &[f64], target: f64) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let hidden = self.hidden(x);
        let y = self.output(&hidden);
        Ok(self.backprop(x, &hidden, target - y))
    }

    /// One backpropagation step toward `target`, where `predicted` is the
    /// network's current output for `x` (so `target - predicted` is the error).
    pub fn train_to_target(&mut self, x: &[f64], target: f64, predicted: f64) -> Result<()> {
        self.check_input(x)?;
        let error = target - predicted;
        if error == 0.0 {
            return Ok(());
        }
        let hidden = self.hidden(x);
        let lr = self.learning_rate;
        // hidden deltas use the output weights from before this step
        let deltas: Vec<f64> = hidden
            .iter()
            .zip(&self.w_ho)
            .map(|(h, w)| error * w * h * (1.0 - h))
            .collect();
        for (w, h) in self.w_ho.iter_mut().zip(&hidden) {
            *w += lr * error * h;
        }
        for (row, d) in self.w_ih.chunks_exact_mut(self.n_in).zip(&deltas) {
            if *d == 0.0 {
                continue;
            }
            for (w, xi) in row.iter_mut().zip(x) {
                *w += lr * d * xi;
            }
        }
        if let Some(b) = &mut self.bias {
            for (bh, d) in b.hidden.iter_mut().zip(&deltas) {
                *bh += lr * d;
            }
            b.output += lr * error;
        }
        Ok(())
    }
}
