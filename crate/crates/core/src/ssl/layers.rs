use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Result, SslError};

/// Affine map `x · weight + bias` over row vectors; `weight` is `in × out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            weight: Array2::zeros((input, output)),
            bias: Array1::zeros(output),
        }
    }

    /// Glorot-uniform weights; biases uniform in ±0.1 so an all-zero input
    /// row (e.g. fully masked) still maps to a non-zero output.
    pub fn init<R: Rng>(input: usize, output: usize, rng: &mut R) -> Self {
        let a = (6.0 / (input + output) as f64).sqrt();
        let weight = Array2::from_shape_simple_fn((input, output), || rng.random_range(-a..=a));
        let bias = Array1::from_shape_simple_fn(output, || rng.random_range(-0.1..=0.1));
        Dense { weight, bias }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }

    /// Returns (parameter gradient, input gradient) for upstream `d_out`.
    pub fn backward(&self, x: ArrayView2<f64>, d_out: ArrayView2<f64>) -> (Dense, Array2<f64>) {
        let grad = Dense {
            weight: x.t().dot(&d_out),
            bias: d_out.sum_axis(Axis(0)),
        };
        (grad, d_out.dot(&self.weight.t()))
    }

    pub fn zeros_like(&self) -> Self {
        Dense::zeros(self.input_dim(), self.output_dim())
    }

    pub fn scaled_add(&mut self, alpha: f64, other: &Dense) {
        self.weight.scaled_add(alpha, &other.weight);
        self.bias.scaled_add(alpha, &other.bias);
    }

    pub(crate) fn check_shape(&self, what: &str) -> Result<()> {
        if self.bias.len() != self.output_dim() {
            return Err(SslError::DimensionMismatch(format!(
                "{what}: bias has {} entries, weight has {} outputs",
                self.bias.len(),
                self.output_dim()
            )));
        }
        Ok(())
    }
}

/// Dense stack with rectifier activations on hidden layers and an identity
/// output layer. Maps `d′` encoded features to `m` embedding dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub layers: Vec<Dense>,
}

/// Layer inputs and pre-activations saved by [`encode_forward`].
#[derive(Debug, Clone)]
pub struct EncoderCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

impl EncoderParams {
    /// Checks that the layer dimensions chain.
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(SslError::DimensionMismatch("encoder has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            l.check_shape(&format!("encoder layer {i}"))?;
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(SslError::DimensionMismatch(format!(
                    "encoder layer {i} emits {} dims, layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(EncoderParams { layers })
    }

    /// Randomly initialised `input → hidden… → embedding` stack. The
    /// embedding must be strictly narrower than the input.
    pub fn init<R: Rng>(dims: &[usize], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 {
            return Err(SslError::InvalidConfig("encoder needs at least two dims".into()));
        }
        let (input, embedding) = (dims[0], dims[dims.len() - 1]);
        if embedding >= input {
            return Err(SslError::InvalidConfig(format!(
                "embedding width {embedding} must be below input width {input}"
            )));
        }
        let layers = dims.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect();
        Self::from_layers(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn embedding_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn zeros_like(&self) -> Self {
        EncoderParams {
            layers: self.layers.iter().map(Dense::zeros_like).collect(),
        }
    }

    /// Embeddings only, no cache.
    pub fn embed(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        encode_forward(self, x).map(|(h, _)| h)
    }
}

/// Forward pass through the encoder, keeping what the backward pass needs.
pub fn encode_forward(
    enc: &EncoderParams,
    x: ArrayView2<f64>,
) -> Result<(Array2<f64>, EncoderCache)> {
    if x.ncols() != enc.input_dim() {
        return Err(SslError::DimensionMismatch(format!(
            "input has {} columns, encoder expects {}",
            x.ncols(),
            enc.input_dim()
        )));
    }
    let last = enc.layers.len() - 1;
    let mut inputs = Vec::with_capacity(enc.layers.len());
    let mut pre = Vec::with_capacity(enc.layers.len());
    let mut cur = x.to_owned();
    for (i, layer) in enc.layers.iter().enumerate() {
        let z = layer.forward(cur.view());
        let next = if i < last { z.mapv(|v| v.max(0.0)) } else { z.clone() };
        inputs.push(cur);
        pre.push(z);
        cur = next;
    }
    Ok((cur, EncoderCache { inputs, pre }))
}

/// Gradients of the encoder parameters and of its input given `d_h`.
pub fn encode_backward(
    enc: &EncoderParams,
    cache: &EncoderCache,
    d_h: ArrayView2<f64>,
) -> (EncoderParams, Array2<f64>) {
    let last = enc.layers.len() - 1;
    let mut grads = vec![None; enc.layers.len()];
    let mut upstream = d_h.to_owned();
    for i in (0..enc.layers.len()).rev() {
        if i < last {
            ndarray::Zip::from(&mut upstream)
                .and(&cache.pre[i])
                .for_each(|g, &z| {
                    if z <= 0.0 {
                        *g = 0.0
                    }
                });
        }
        let (g, dx) = enc.layers[i].backward(cache.inputs[i].view(), upstream.view());
        grads[i] = Some(g);
        upstream = dx;
    }
    let layers = grads.into_iter().map(|g| g.expect("filled")).collect();
    (EncoderParams { layers }, upstream)
}

/// Projection head `m → p` used only by the contrastive objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    pub layer: Dense,
}

impl ProjectionParams {
    pub fn new(layer: Dense) -> Result<Self> {
        layer.check_shape("projection")?;
        if layer.output_dim() < 2 {
            return Err(SslError::InvalidConfig("projection width must be at least 2".into()));
        }
        Ok(ProjectionParams { layer })
    }
}

/// Heads for the auxiliary pretext tasks: a decoder back to the encoded
/// feature space and a next-row predictor within the embedding space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxHeads {
    pub mask_decoder: Dense,
    pub predictor: Dense,
}

impl AuxHeads {
    pub fn init<R: Rng>(embedding: usize, input: usize, rng: &mut R) -> Self {
        AuxHeads {
            mask_decoder: Dense::init(embedding, input, rng),
            predictor: Dense::init(embedding, embedding, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_weights_give_zero_embedding() {
        let enc = EncoderParams::from_layers(vec![Dense::zeros(4, 3), Dense::zeros(3, 2)]).unwrap();
        let x = array![[0.1, 0.2, 0.3, 0.4], [1.0, 0.0, 1.0, 0.0]];
        let (h, _) = encode_forward(&enc, x.view()).unwrap();
        assert_eq!(h, Array2::<f64>::zeros((2, 2)));
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = Dense {
            weight: Array2::eye(3),
            bias: Array1::zeros(3),
        };
        let enc = EncoderParams::from_layers(vec![layer]).unwrap();
        let x = array![[0.1, -0.2, 0.3]];
        let (h, _) = encode_forward(&enc, x.view()).unwrap();
        assert_eq!(h, x);
    }

    #[test]
    fn chaining_and_width_checks() {
        assert!(EncoderParams::from_layers(vec![Dense::zeros(4, 3), Dense::zeros(2, 2)]).is_err());
        let mut rng = crate::seed::rng(0);
        assert!(EncoderParams::init(&[4, 8, 4], &mut rng).is_err());
        let enc = EncoderParams::init(&[5, 8, 3], &mut rng).unwrap();
        assert_eq!((enc.input_dim(), enc.embedding_dim()), (5, 3));
        let x = Array2::<f64>::zeros((1, 4));
        assert!(matches!(
            encode_forward(&enc, x.view()),
            Err(SslError::DimensionMismatch(_))
        ));
    }
}
