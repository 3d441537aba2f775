//! Fully connected tanh networks with hand-written reverse-mode gradients.
//!
//! Parameters live in one flat vector, layer by layer: the weight matrix of
//! layer `l` (shape `out × in`, row-major) followed by its bias vector. Hidden
//! layers use tanh; the output layer is linear.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    /// Input width, hidden widths..., output width.
    pub layer_sizes: Vec<usize>,
}

/// One dense layer in unflattened form.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `out` rows of `in` weights each.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Activations recorded by a forward pass, consumed by [`MlpSpec::backward`].
#[derive(Clone, Debug)]
pub struct Tape {
    /// `inputs[l]` is the input to layer `l`; the last entry is the output.
    inputs: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().expect("tape always holds the output")
    }
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        let spec = MlpSpec { layer_sizes };
        spec.validate()?;
        Ok(spec)
    }

    /// `input → hidden... → output`.
    pub fn with_hidden(input: usize, hidden: &[usize], output: usize) -> Result<Self> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input);
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        MlpSpec::new(sizes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidParameter(
                "an MLP needs at least an input and an output layer".into(),
            ));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::InvalidParameter("layer sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    fn shapes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.layer_sizes.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn num_params(&self) -> usize {
        self.shapes().map(|(i, o)| i * o + o).sum()
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.num_params());
        for (fan_in, fan_out) in self.shapes() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..=limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        params
    }

    pub fn forward(&self, params: &[f64], input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_tape(params, input)?.inputs.pop().unwrap())
    }

    pub fn forward_tape(&self, params: &[f64], input: &[f64]) -> Result<Tape> {
        check_len(self.num_params(), params.len())?;
        check_len(self.input_dim(), input.len())?;
        let n_layers = self.layer_sizes.len() - 1;
        let mut inputs = Vec::with_capacity(n_layers + 1);
        inputs.push(input.to_vec());
        let mut offset = 0;
        for (l, (n_in, n_out)) in self.shapes().enumerate() {
            let x = &inputs[l];
            let w = &params[offset..offset + n_in * n_out];
            let b = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let hidden = l + 1 < n_layers;
            let y: Vec<f64> = w
                .chunks_exact(n_in)
                .zip(b)
                .map(|(row, b)| {
                    let z = row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b;
                    if hidden {
                        z.tanh()
                    } else {
                        z
                    }
                })
                .collect();
            inputs.push(y);
        }
        Ok(Tape { inputs })
    }

    /// Gradient of `⟨grad_output, output⟩` with respect to the parameters.
    pub fn backward(&self, params: &[f64], tape: &Tape, grad_output: &[f64]) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; params.len()];
        self.backward_add(params, tape, grad_output, &mut grad)?;
        Ok(grad)
    }

    /// Like [`MlpSpec::backward`], but adds into `acc`.
    pub fn backward_add(
        &self,
        params: &[f64],
        tape: &Tape,
        grad_output: &[f64],
        acc: &mut [f64],
    ) -> Result<()> {
        check_len(self.num_params(), params.len())?;
        check_len(self.num_params(), acc.len())?;
        check_len(self.output_dim(), grad_output.len())?;
        let shapes: Vec<(usize, usize)> = self.shapes().collect();
        let mut offsets = Vec::with_capacity(shapes.len());
        let mut offset = 0;
        for &(n_in, n_out) in &shapes {
            offsets.push(offset);
            offset += n_in * n_out + n_out;
        }

        let mut delta = grad_output.to_vec();
        for l in (0..shapes.len()).rev() {
            let (n_in, n_out) = shapes[l];
            let start = offsets[l];
            let x = &tape.inputs[l];
            {
                let (gw, gb) = acc[start..start + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for (o, d) in delta.iter().enumerate() {
                    let row = &mut gw[o * n_in..(o + 1) * n_in];
                    for (g, xi) in row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                    gb[o] += *d;
                }
            }
            if l > 0 {
                let w = &params[start..start + n_in * n_out];
                let mut prev = vec![0.0; n_in];
                for (o, d) in delta.iter().enumerate() {
                    for (p, wi) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *p += d * wi;
                    }
                }
                // x is the tanh output of the previous layer.
                for (p, a) in prev.iter_mut().zip(x) {
                    *p *= 1.0 - a * a;
                }
                delta = prev;
            }
        }
        Ok(())
    }

    pub fn unflatten(&self, params: &[f64]) -> Result<Vec<Layer>> {
        check_len(self.num_params(), params.len())?;
        let mut layers = Vec::new();
        let mut offset = 0;
        for (n_in, n_out) in self.shapes() {
            let weights = params[offset..offset + n_in * n_out]
                .chunks_exact(n_in)
                .map(<[f64]>::to_vec)
                .collect();
            offset += n_in * n_out;
            let bias = params[offset..offset + n_out].to_vec();
            offset += n_out;
            layers.push(Layer { weights, bias });
        }
        Ok(layers)
    }

    pub fn flatten(&self, layers: &[Layer]) -> Result<Vec<f64>> {
        let shapes: Vec<_> = self.shapes().collect();
        check_len(shapes.len(), layers.len())?;
        let mut out = Vec::with_capacity(self.num_params());
        for (layer, (n_in, n_out)) in layers.iter().zip(shapes) {
            check_len(n_out, layer.weights.len())?;
            check_len(n_out, layer.bias.len())?;
            for row in &layer.weights {
                check_len(n_in, row.len())?;
                out.extend_from_slice(row);
            }
            out.extend_from_slice(&layer.bias);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn param_count() {
        let spec = MlpSpec::new(vec![4, 8, 8, 2]).unwrap();
        assert_eq!(spec.num_params(), 4 * 8 + 8 + 8 * 8 + 8 + 8 * 2 + 2);
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(MlpSpec::new(vec![3]).is_err());
        assert!(MlpSpec::new(vec![3, 0, 1]).is_err());
    }

    #[test]
    fn linear_layer_is_affine() {
        let spec = MlpSpec::new(vec![2, 1]).unwrap();
        let out = spec.forward(&[2.0, -1.0, 0.5], &[3.0, 4.0]).unwrap();
        assert_eq!(out, vec![2.0 * 3.0 - 4.0 + 0.5]);
    }

    #[test]
    fn init_respects_glorot_bounds() {
        let spec = MlpSpec::new(vec![4, 8, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = spec.init(&mut rng);
        let layers = spec.unflatten(&p).unwrap();
        let lim0 = (6.0f64 / 12.0).sqrt();
        assert!(layers[0].weights.iter().flatten().all(|w| w.abs() <= lim0));
        assert!(layers.iter().all(|l| l.bias.iter().all(|b| *b == 0.0)));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let spec = MlpSpec::new(vec![3, 5, 4, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut params = spec.init(&mut rng);
        for p in params.iter_mut() {
            *p += rng.random_range(-0.3..0.3);
        }
        let x = [0.4, -1.1, 0.7];
        let g_out = [0.3, -2.0];
        let tape = spec.forward_tape(&params, &x).unwrap();
        let grad = spec.backward(&params, &tape, &g_out).unwrap();
        let f = |p: &[f64]| {
            let y = spec.forward(p, &x).unwrap();
            y[0] * g_out[0] + y[1] * g_out[1]
        };
        for i in 0..params.len() {
            let mut hi = params.clone();
            let mut lo = params.clone();
            hi[i] += 1e-6;
            lo[i] -= 1e-6;
            let fd = (f(&hi) - f(&lo)) / 2e-6;
            assert!((fd - grad[i]).abs() < 1e-7, "param {i}: {fd} vs {}", grad[i]);
        }
    }
}
