//! Joint parameter container for the four architectures.
//!
//! Tensors are initialized from per-tensor seed streams derived from the
//! run seed, so a tensor shared by two architectures (same name, same
//! shape, same seed) starts from identical values regardless of which
//! other components exist.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ModelKind;
use crate::checkpoint::Checkpoint;
use crate::tensor::{derive_seed, init_lstm, uniform_fan_in, AffineParams, LstmParams, Tensor};
use crate::{Error, Result};

/// Parameters for one model instance. Components absent from the
/// architecture are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointModelParams {
    pub kind: ModelKind,
    /// Latent (topic) dimension; also the LSTM input width.
    pub k: usize,
    /// LSTM hidden width.
    pub h: usize,
    /// Vocabulary size.
    pub v: usize,
    /// K x V affine with bias, ReLU applied by the forward pass.
    pub encoder: Option<AffineParams>,
    /// K x K affine with bias, ReLU applied by the forward pass.
    pub transcoder: Option<AffineParams>,
    /// V x K linear map without bias; softmax applied by the forward pass.
    pub decoder: Option<AffineParams>,
    pub lstm: LstmParams,
    /// 2 x H affine with bias producing mortality logits.
    pub output: AffineParams,
}

impl JointModelParams {
    pub fn init(kind: ModelKind, k: usize, h: usize, v: usize, seed: u64) -> Result<JointModelParams> {
        if k == 0 || h == 0 || v == 0 {
            return Err(Error::InvalidInput(format!(
                "model dimensions must be positive, got k={k} h={h} v={v}"
            )));
        }
        let rng_for = |tag: &str| ChaCha8Rng::seed_from_u64(derive_seed(seed, tag));
        let encoder = if kind.has_encoder() {
            Some(AffineParams {
                w: uniform_fan_in(&[k, v], v, &mut rng_for("encoder.W")),
                b: Some(Tensor::zeros(&[k])),
            })
        } else {
            None
        };
        let transcoder = if kind.has_transcoder() {
            Some(AffineParams {
                w: uniform_fan_in(&[k, k], k, &mut rng_for("transcoder.W")),
                b: Some(Tensor::zeros(&[k])),
            })
        } else {
            None
        };
        let decoder = if kind.has_decoder() {
            Some(AffineParams {
                w: uniform_fan_in(&[v, k], k, &mut rng_for("decoder.W")),
                b: None,
            })
        } else {
            None
        };
        let lstm = init_lstm(h, k, &mut rng_for("lstm"));
        let output = AffineParams {
            w: uniform_fan_in(&[2, h], h, &mut rng_for("output.W")),
            b: Some(Tensor::zeros(&[2])),
        };
        Ok(JointModelParams {
            kind,
            k,
            h,
            v,
            encoder,
            transcoder,
            decoder,
            lstm,
            output,
        })
    }

    /// All-zero parameters with this model's shape (gradient accumulator).
    pub fn zeros_like(&self) -> JointModelParams {
        JointModelParams {
            kind: self.kind,
            k: self.k,
            h: self.h,
            v: self.v,
            encoder: self.encoder.as_ref().map(AffineParams::zeros_like),
            transcoder: self.transcoder.as_ref().map(AffineParams::zeros_like),
            decoder: self.decoder.as_ref().map(AffineParams::zeros_like),
            lstm: self.lstm.zeros_like(),
            output: self.output.zeros_like(),
        }
    }

    /// Present tensors in a fixed order shared by `flatten`,
    /// `set_from_flat`, and the checkpoint layout.
    pub fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        let mut out: Vec<(&'static str, &Tensor)> = Vec::with_capacity(19);
        if let Some(e) = &self.encoder {
            out.push(("encoder.W", &e.w));
            out.push(("encoder.b", e.b.as_ref().expect("encoder has a bias")));
        }
        if let Some(t) = &self.transcoder {
            out.push(("transcoder.W", &t.w));
            out.push(("transcoder.b", t.b.as_ref().expect("transcoder has a bias")));
        }
        if let Some(d) = &self.decoder {
            out.push(("decoder.W", &d.w));
        }
        out.push(("lstm.Ui", &self.lstm.ui));
        out.push(("lstm.Uf", &self.lstm.uf));
        out.push(("lstm.Uo", &self.lstm.uo));
        out.push(("lstm.Uc", &self.lstm.uc));
        out.push(("lstm.Ri", &self.lstm.ri));
        out.push(("lstm.Rf", &self.lstm.rf));
        out.push(("lstm.Ro", &self.lstm.ro));
        out.push(("lstm.Rc", &self.lstm.rc));
        out.push(("lstm.bi", &self.lstm.bi));
        out.push(("lstm.bf", &self.lstm.bf));
        out.push(("lstm.bo", &self.lstm.bo));
        out.push(("lstm.bc", &self.lstm.bc));
        out.push(("output.W", &self.output.w));
        out.push(("output.b", self.output.b.as_ref().expect("output has a bias")));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::with_capacity(19);
        if let Some(e) = &mut self.encoder {
            out.push(&mut e.w);
            out.push(e.b.as_mut().expect("encoder has a bias"));
        }
        if let Some(t) = &mut self.transcoder {
            out.push(&mut t.w);
            out.push(t.b.as_mut().expect("transcoder has a bias"));
        }
        if let Some(d) = &mut self.decoder {
            out.push(&mut d.w);
        }
        out.push(&mut self.lstm.ui);
        out.push(&mut self.lstm.uf);
        out.push(&mut self.lstm.uo);
        out.push(&mut self.lstm.uc);
        out.push(&mut self.lstm.ri);
        out.push(&mut self.lstm.rf);
        out.push(&mut self.lstm.ro);
        out.push(&mut self.lstm.rc);
        out.push(&mut self.lstm.bi);
        out.push(&mut self.lstm.bf);
        out.push(&mut self.lstm.bo);
        out.push(&mut self.lstm.bc);
        out.push(&mut self.output.w);
        out.push(self.output.b.as_mut().expect("output has a bias"));
        out
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.data().len()).sum()
    }

    /// Concatenation of all tensors in `tensors()` order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for (_, t) in self.tensors() {
            out.extend_from_slice(t.data());
        }
        out
    }

    /// Inverse of `flatten`; `flat` must have exactly `n_params` entries.
    pub fn set_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.n_params();
        if flat.len() != expected {
            return Err(Error::InvalidInput(format!(
                "flat parameter vector has {} entries, model needs {expected}",
                flat.len()
            )));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.data().len();
            t.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Element-wise accumulate; shapes must match.
    pub fn add_assign_params(&mut self, other: &JointModelParams) {
        assert_eq!(self.kind, other.kind, "kind mismatch in add_assign_params");
        let src: Vec<Vec<f64>> = other.tensors().iter().map(|(_, t)| t.data().to_vec()).collect();
        for (t, s) in self.tensors_mut().into_iter().zip(src) {
            for (a, b) in t.data_mut().iter_mut().zip(s) {
                *a += b;
            }
        }
    }

    pub fn scale_params(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            for x in t.data_mut() {
                *x *= factor;
            }
        }
    }

    /// Model checkpoint with `kind`, `k`, `h`, `v` metadata plus every
    /// tensor under its `tensors()` name. Callers may attach more
    /// metadata before saving.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut cp = Checkpoint::new();
        cp.set_meta("kind", self.kind.name());
        cp.set_meta("k", self.k);
        cp.set_meta("h", self.h);
        cp.set_meta("v", self.v);
        for (name, t) in self.tensors() {
            cp.add_tensor(name, t.clone());
        }
        cp
    }

    /// Rebuild from a checkpoint produced by `to_checkpoint`. Extra
    /// tensors (such as an attached topic-word table) are ignored.
    pub fn from_checkpoint(cp: &Checkpoint) -> Result<JointModelParams> {
        let kind_str = cp
            .meta("kind")
            .ok_or_else(|| Error::Incompatible("checkpoint has no kind metadata".to_string()))?;
        let kind = ModelKind::parse(kind_str)?;
        let k: usize = cp.meta_parsed("k")?;
        let h: usize = cp.meta_parsed("h")?;
        let v: usize = cp.meta_parsed("v")?;
        if k == 0 || h == 0 || v == 0 {
            return Err(Error::Incompatible(format!(
                "checkpoint has degenerate dimensions k={k} h={h} v={v}"
            )));
        }
        let grab = |name: &str, shape: &[usize]| -> Result<Tensor> {
            let t = cp.require_tensor(name)?;
            if t.dims() != shape {
                return Err(Error::Incompatible(format!(
                    "tensor {name} has shape {:?}, expected {shape:?}",
                    t.dims()
                )));
            }
            Ok(t.clone())
        };
        let encoder = if kind.has_encoder() {
            Some(AffineParams {
                w: grab("encoder.W", &[k, v])?,
                b: Some(grab("encoder.b", &[k])?),
            })
        } else {
            None
        };
        let transcoder = if kind.has_transcoder() {
            Some(AffineParams {
                w: grab("transcoder.W", &[k, k])?,
                b: Some(grab("transcoder.b", &[k])?),
            })
        } else {
            None
        };
        let decoder = if kind.has_decoder() {
            Some(AffineParams {
                w: grab("decoder.W", &[v, k])?,
                b: None,
            })
        } else {
            None
        };
        let lstm = LstmParams {
            ui: grab("lstm.Ui", &[h, k])?,
            uf: grab("lstm.Uf", &[h, k])?,
            uo: grab("lstm.Uo", &[h, k])?,
            uc: grab("lstm.Uc", &[h, k])?,
            ri: grab("lstm.Ri", &[h, h])?,
            rf: grab("lstm.Rf", &[h, h])?,
            ro: grab("lstm.Ro", &[h, h])?,
            rc: grab("lstm.Rc", &[h, h])?,
            bi: grab("lstm.bi", &[h])?,
            bf: grab("lstm.bf", &[h])?,
            bo: grab("lstm.bo", &[h])?,
            bc: grab("lstm.bc", &[h])?,
        };
        let output = AffineParams {
            w: grab("output.W", &[2, h])?,
            b: Some(grab("output.b", &[2])?),
        };
        Ok(JointModelParams {
            kind,
            k,
            h,
            v,
            encoder,
            transcoder,
            decoder,
            lstm,
            output,
        })
    }
}
