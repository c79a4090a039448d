use ndarray::{s, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::augment::AugmentedBatch;
use super::layers::{encode_backward, encode_forward, AuxHeads, Dense, EncoderParams, ProjectionParams};
use super::losses::{mask_loss, ntxent_loss, temporal_loss, temporal_loss_against};
use super::{Result, SslConfig, SslError};

/// Every trainable parameter of the self-supervised stage. The same type
/// doubles as the gradient container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SslModel {
    pub encoder: EncoderParams,
    pub projection: ProjectionParams,
    pub heads: AuxHeads,
}

/// A loss value with its gradient over the full parameter set.
#[derive(Debug, Clone)]
pub struct LossTerm {
    pub loss: f64,
    pub grads: SslModel,
}

/// Joint objective for one augmented batch.
#[derive(Debug, Clone)]
pub struct Objective {
    pub total: LossTerm,
    /// Unweighted (contrastive, mask, temporal) values; temporal is 0 when
    /// its weight is 0.
    pub components: [f64; 3],
}

impl SslModel {
    pub fn init<R: Rng>(input: usize, cfg: &SslConfig, rng: &mut R) -> Result<Self> {
        let m = cfg.resolve_embedding_dim(input)?;
        let encoder = EncoderParams::init(&[input, cfg.hidden_dim, m], rng)?;
        let projection = ProjectionParams::new(Dense::init(m, cfg.projection_dim, rng))?;
        let heads = AuxHeads::init(m, input, rng);
        Ok(SslModel {
            encoder,
            projection,
            heads,
        })
    }

    /// Validates that every piece agrees on the input and embedding widths.
    pub fn check_dims(&self) -> Result<()> {
        let enc = EncoderParams::from_layers(self.encoder.layers.clone())?;
        let (d, m) = (enc.input_dim(), enc.embedding_dim());
        ProjectionParams::new(self.projection.layer.clone())?;
        let checks = [
            ("projection input", self.projection.layer.input_dim(), m),
            ("mask decoder input", self.heads.mask_decoder.input_dim(), m),
            ("mask decoder output", self.heads.mask_decoder.output_dim(), d),
            ("predictor input", self.heads.predictor.input_dim(), m),
            ("predictor output", self.heads.predictor.output_dim(), m),
        ];
        for (what, got, want) in checks {
            if got != want {
                return Err(SslError::DimensionMismatch(format!(
                    "{what} is {got}, expected {want}"
                )));
            }
        }
        self.heads.mask_decoder.check_shape("mask decoder")?;
        self.heads.predictor.check_shape("predictor")?;
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        SslModel {
            encoder: self.encoder.zeros_like(),
            projection: ProjectionParams {
                layer: self.projection.layer.zeros_like(),
            },
            heads: AuxHeads {
                mask_decoder: self.heads.mask_decoder.zeros_like(),
                predictor: self.heads.predictor.zeros_like(),
            },
        }
    }

    fn denses(&self) -> Vec<&Dense> {
        let mut v: Vec<&Dense> = self.encoder.layers.iter().collect();
        v.push(&self.projection.layer);
        v.push(&self.heads.mask_decoder);
        v.push(&self.heads.predictor);
        v
    }

    fn denses_mut(&mut self) -> Vec<&mut Dense> {
        let mut v: Vec<&mut Dense> = self.encoder.layers.iter_mut().collect();
        v.push(&mut self.projection.layer);
        v.push(&mut self.heads.mask_decoder);
        v.push(&mut self.heads.predictor);
        v
    }

    /// `self += alpha * other`.
    pub fn scaled_add(&mut self, alpha: f64, other: &SslModel) {
        for (a, b) in self.denses_mut().into_iter().zip(other.denses()) {
            a.scaled_add(alpha, b);
        }
    }

    pub fn param_count(&self) -> usize {
        self.denses()
            .iter()
            .map(|d| d.weight.len() + d.bias.len())
            .sum()
    }

    /// Parameters in a fixed order: per layer, weights row-major then bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for d in self.denses() {
            out.extend(d.weight.iter());
            out.extend(d.bias.iter());
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut it = flat.iter();
        for d in self.denses_mut() {
            for w in d.weight.iter_mut().chain(d.bias.iter_mut()) {
                *w = *it.next().expect("length checked");
            }
        }
    }

    /// Weighted self-supervised objective and its gradient on one augmented
    /// batch. The temporal term predicts each clean embedding's successor;
    /// pass `temporal_target` to pin the successors to fixed values (they
    /// are treated as constants either way).
    pub fn objective(
        &self,
        batch: &AugmentedBatch,
        cfg: &SslConfig,
        temporal_target: Option<ArrayView2<f64>>,
    ) -> Result<Objective> {
        let proj = &self.projection.layer;

        let (h1, c1) = encode_forward(&self.encoder, batch.jittered.view())?;
        let (h2, c2) = encode_forward(&self.encoder, batch.masked.view())?;
        let z1 = proj.forward(h1.view());
        let z2 = proj.forward(h2.view());

        let ntx = ntxent_loss(z1.view(), z2.view(), cfg.tau)?;
        let (gp1, dh1) = proj.backward(h1.view(), ntx.grad_first.view());
        let (gp2, dh2) = proj.backward(h2.view(), ntx.grad_second.view());
        let mut contrastive = self.zeros_like();
        contrastive.projection.layer = gp1;
        contrastive.projection.layer.scaled_add(1.0, &gp2);
        let (ge1, _) = encode_backward(&self.encoder, &c1, dh1.view());
        let (ge2, _) = encode_backward(&self.encoder, &c2, dh2.view());
        contrastive.encoder = ge1;
        for (a, b) in contrastive.encoder.layers.iter_mut().zip(&ge2.layers) {
            a.scaled_add(1.0, b);
        }

        let mk = mask_loss(&self.heads, h2.view(), batch.original.view(), batch.mask.view())?;
        let mut masked = self.zeros_like();
        masked.heads.mask_decoder = mk.grad_head;
        masked.encoder = encode_backward(&self.encoder, &c2, mk.grad_input.view()).0;

        let mut temporal = LossTerm {
            loss: 0.0,
            grads: self.zeros_like(),
        };
        if cfg.lambda_t > 0.0 {
            let (h0, c0) = encode_forward(&self.encoder, batch.original.view())?;
            let b = h0.nrows();
            let tl = match temporal_target {
                Some(target) => {
                    if b < 2 {
                        return Err(SslError::WindowTooShort(b));
                    }
                    let mut out =
                        temporal_loss_against(&self.heads, h0.slice(s![..b - 1, ..]), target)?;
                    let mut full = Array2::zeros(h0.dim());
                    full.slice_mut(s![..b - 1, ..]).assign(&out.grad_input);
                    out.grad_input = full;
                    out
                }
                None => temporal_loss(&self.heads, h0.view())?,
            };
            temporal.loss = tl.loss;
            temporal.grads.heads.predictor = tl.grad_head;
            temporal.grads.encoder = encode_backward(&self.encoder, &c0, tl.grad_input.view()).0;
        }

        let components = [ntx.loss, mk.loss, temporal.loss];
        let terms = [
            LossTerm {
                loss: ntx.loss,
                grads: contrastive,
            },
            LossTerm {
                loss: mk.loss,
                grads: masked,
            },
            temporal,
        ];
        Ok(Objective {
            total: ssl_loss(&terms, cfg),
            components,
        })
    }

    /// Clean embeddings of the rows of `x` at time `t+1`, used as fixed
    /// temporal targets.
    pub fn successor_targets(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let h = self.encoder.embed(x)?;
        Ok(h.slice(s![1.., ..]).to_owned())
    }
}

/// `λ_c·contrastive + λ_m·mask + λ_t·temporal`, for values and gradients.
pub fn ssl_loss(terms: &[LossTerm; 3], cfg: &SslConfig) -> LossTerm {
    let weights = [cfg.lambda_c, cfg.lambda_m, cfg.lambda_t];
    let mut grads = terms[0].grads.zeros_like();
    let mut loss = 0.0;
    for (term, &w) in terms.iter().zip(&weights) {
        if w != 0.0 {
            loss += w * term.loss;
            grads.scaled_add(w, &term.grads);
        }
    }
    LossTerm { loss, grads }
}
