//! Parameter initialization. Weights are uniform in [-s, s] with
//! s = 1/sqrt(fan-in); biases start at zero except the LSTM forget gate,
//! which starts at 1.0 so early training does not forget state.

use rand::Rng;

use super::{AffineParams, LstmParams, Tensor};

/// Stable per-purpose seed: FNV-1a over the tag, mixed with the base seed
/// through a splitmix64 finalizer. Lets independent consumers (one tensor's
/// init, one document's sampler) draw from unrelated streams of one user
/// seed, so adding a consumer never shifts another's draws.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for byte in tag.as_bytes() {
        h ^= *byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = base ^ h;
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Fill a fresh tensor with uniform draws in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
pub fn uniform_fan_in<R: Rng>(dims: &[usize], fan_in: usize, rng: &mut R) -> Tensor {
    let s = 1.0 / (fan_in as f64).sqrt();
    let mut t = Tensor::zeros(dims);
    for v in t.data_mut() {
        *v = rng.gen_range(-s..=s);
    }
    t
}

pub fn init_affine<R: Rng>(out: usize, inp: usize, bias: bool, rng: &mut R) -> AffineParams {
    AffineParams {
        w: uniform_fan_in(&[out, inp], inp, rng),
        b: if bias { Some(Tensor::zeros(&[out])) } else { None },
    }
}

pub fn init_lstm<R: Rng>(h: usize, k: usize, rng: &mut R) -> LstmParams {
    let mut p = LstmParams {
        ui: uniform_fan_in(&[h, k], k, rng),
        uf: uniform_fan_in(&[h, k], k, rng),
        uo: uniform_fan_in(&[h, k], k, rng),
        uc: uniform_fan_in(&[h, k], k, rng),
        ri: uniform_fan_in(&[h, h], h, rng),
        rf: uniform_fan_in(&[h, h], h, rng),
        ro: uniform_fan_in(&[h, h], h, rng),
        rc: uniform_fan_in(&[h, h], h, rng),
        bi: Tensor::zeros(&[h]),
        bf: Tensor::zeros(&[h]),
        bo: Tensor::zeros(&[h]),
        bc: Tensor::zeros(&[h]),
    };
    for v in p.bf.data_mut() {
        *v = 1.0;
    }
    p
}
