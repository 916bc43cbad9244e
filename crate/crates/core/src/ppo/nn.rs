//! Fully connected tanh networks with hand-written backpropagation.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// `y = x · W + b` with `W` stored as `(inputs, outputs)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Orthogonal weights scaled by `gain`, zero bias.
    pub fn orthogonal<R: Rng + ?Sized>(inputs: usize, outputs: usize, gain: f64, rng: &mut R) -> Self {
        Self {
            weight: orthogonal_matrix(inputs, outputs, rng) * gain,
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }
}

/// A `rows × cols` matrix whose rows or columns (whichever are fewer) are
/// orthonormal, from Gram–Schmidt on a Gaussian matrix.
pub fn orthogonal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let (long, short) = (rows.max(cols), rows.min(cols));
    // Columns of `q` (long × short) are orthonormalised.
    let mut q = Array2::<f64>::zeros((long, short));
    for j in 0..short {
        loop {
            let mut v: Array1<f64> = (0..long).map(|_| StandardNormal.sample(rng)).collect();
            for k in 0..j {
                let basis = q.column(k);
                let proj = basis.dot(&v);
                v.scaled_add(-proj, &basis);
            }
            let norm = v.dot(&v).sqrt();
            if norm > 1e-8 {
                q.column_mut(j).assign(&(v / norm));
                break;
            }
        }
    }
    if rows >= cols {
        q
    } else {
        q.reversed_axes().to_owned()
    }
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input, `activations[k]` the output of layer `k`
    /// after its nonlinearity (the last entry is the linear output).
    pub activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("cache holds the input at least")
    }
}

/// Hidden layers use tanh, the output layer is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    /// `sizes = [input, hidden.., output]`; hidden layers get gain `√2`, the
    /// output layer `output_gain`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs an input and an output size");
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let gain = if i == last { output_gain } else { 2f64.sqrt() };
                Linear::orthogonal(w[0], w[1], gain, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Linear::zeros(l.inputs(), l.outputs()))
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").outputs()
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.input_dim(), "input width");
        let mut x = Array1::from(input.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            x = x.dot(&layer.weight) + &layer.bias;
            if i < last {
                x.mapv_inplace(f64::tanh);
            }
        }
        x.to_vec()
    }

    pub fn forward_batch(&self, input: ArrayView2<f64>) -> ForwardCache {
        assert_eq!(input.ncols(), self.input_dim(), "input width");
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_owned());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = activations[i].dot(&layer.weight) + &layer.bias;
            if i < last {
                z.mapv_inplace(f64::tanh);
            }
            activations.push(z);
        }
        ForwardCache { activations }
    }

    /// Gradients of a scalar loss with respect to every parameter, given the
    /// gradient with respect to the batch output.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &Array2<f64>) -> Mlp {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = grad_output.clone();
        for i in (0..self.layers.len()).rev() {
            let input = &cache.activations[i];
            grads.push(Linear {
                weight: input.t().dot(&delta),
                bias: delta.sum_axis(Axis(0)),
            });
            if i > 0 {
                let mut upstream = delta.dot(&self.layers[i].weight.t());
                upstream.zip_mut_with(input, |g, &h| *g *= 1.0 - h * h);
                delta = upstream;
            }
        }
        grads.reverse();
        Mlp { layers: grads }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weight.dim() == b.weight.dim() && a.bias.len() == b.bias.len())
    }
}
