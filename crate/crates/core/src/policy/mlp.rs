use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DcplError, Result};

/// Fully connected network with tanh hidden layers and a linear output.
/// Parameters live in one flat vector, layer by layer: row-major weights
/// (`out × in`) followed by biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activations kept from a forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    activations: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDoc {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpDoc {
    pub layers: Vec<LayerDoc>,
}

impl Mlp {
    /// Glorot-uniform weights and zero biases.
    pub fn new(sizes: &[usize], seed: u64) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(Self::count(sizes));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)));
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Mlp {
            sizes: sizes.to_vec(),
            params,
        }
    }

    fn count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, MlpCache) {
        assert_eq!(x.len(), self.sizes[0], "input width");
        let mut activations = vec![x.to_vec()];
        let mut offset = 0;
        let last = self.sizes.len() - 2;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let bias = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            let input = activations.last().unwrap();
            let mut out = bias.to_vec();
            for (o, row) in out.iter_mut().zip(weights.chunks_exact(fan_in)) {
                *o += row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
            }
            if l < last {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            activations.push(out);
            offset += fan_in * fan_out + fan_out;
        }
        (activations.last().unwrap().clone(), MlpCache { activations })
    }

    /// Gradient with respect to the flat parameters and the input, given the
    /// gradient of a scalar objective with respect to the output.
    pub fn backward(&self, cache: &MlpCache, grad_out: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut grads = vec![0.0; self.params.len()];
        let mut delta = grad_out.to_vec();
        let mut offset = self.params.len();
        let n_layers = self.sizes.len() - 1;
        for l in (0..n_layers).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            offset -= fan_in * fan_out + fan_out;
            let input = &cache.activations[l];
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let (gw, gb) = grads[offset..offset + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
            let mut prev = vec![0.0; fan_in];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &weights[o * fan_in..(o + 1) * fan_in];
                let grow = &mut gw[o * fan_in..(o + 1) * fan_in];
                for k in 0..fan_in {
                    grow[k] += d * input[k];
                    prev[k] += d * row[k];
                }
            }
            if l > 0 {
                for (p, a) in prev.iter_mut().zip(input) {
                    *p *= 1.0 - a * a;
                }
            }
            delta = prev;
        }
        (grads, delta)
    }

    pub fn to_doc(&self) -> MlpDoc {
        let mut layers = Vec::new();
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + fan_in * fan_out];
            layers.push(LayerDoc {
                w: weights.chunks_exact(fan_in.max(1)).map(|r| r.to_vec()).collect(),
                b: self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out].to_vec(),
            });
            offset += fan_in * fan_out + fan_out;
        }
        MlpDoc { layers }
    }

    pub fn from_doc(doc: &MlpDoc) -> Result<Self> {
        if doc.layers.is_empty() {
            return Err(DcplError::invalid("network has no layers"));
        }
        let mut sizes = vec![doc.layers[0].w.first().map_or(0, |r| r.len())];
        let mut params = Vec::new();
        for (l, layer) in doc.layers.iter().enumerate() {
            let fan_in = *sizes.last().unwrap();
            let fan_out = layer.b.len();
            if layer.w.len() != fan_out || layer.w.iter().any(|r| r.len() != fan_in) {
                return Err(DcplError::invalid(format!("layer {l} has inconsistent shape")));
            }
            for row in &layer.w {
                params.extend_from_slice(row);
            }
            params.extend_from_slice(&layer.b);
            sizes.push(fan_out);
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(DcplError::invalid("network parameters must be finite"));
        }
        Ok(Mlp { sizes, params })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_difference_gradients() {
        let net = Mlp::new(&[4, 6, 5, 3], 1);
        let x = [0.3, -0.7, 1.1, 0.05];
        let seed = [0.4, -1.2, 0.9];
        let obj = |m: &Mlp, x: &[f64]| m.forward(x).iter().zip(&seed).map(|(a, b)| a * b).sum::<f64>();
        let (_, cache) = net.forward_cached(&x);
        let (gp, gx) = net.backward(&cache, &seed);
        let h = 1e-5;
        for k in 0..net.params().len() {
            let mut plus = net.clone();
            plus.params_mut()[k] += h;
            let mut minus = net.clone();
            minus.params_mut()[k] -= h;
            let fd = (obj(&plus, &x) - obj(&minus, &x)) / (2.0 * h);
            assert!((fd - gp[k]).abs() <= 1e-7 + 1e-5 * fd.abs(), "param {k}: {fd} vs {}", gp[k]);
        }
        for k in 0..4 {
            let mut xp = x;
            xp[k] += h;
            let mut xm = x;
            xm[k] -= h;
            let fd = (obj(&net, &xp) - obj(&net, &xm)) / (2.0 * h);
            assert!((fd - gx[k]).abs() <= 1e-7 + 1e-5 * fd.abs());
        }
    }

    #[test]
    fn doc_round_trip() {
        let net = Mlp::new(&[3, 2, 1], 7);
        let back = Mlp::from_doc(&net.to_doc()).unwrap();
        assert_eq!(net, back);
    }
}
