//! Forward pass, joint loss, and hand-derived backward pass.

use super::{JointModelParams, SeqInput, TrainConfig};
use crate::tensor::{
    add_assign, affine_backward, affine_forward, categorical_ce_sparse, l1_value_and_subgradient,
    lstm_backward, lstm_forward, matvec_sparse, outer_add_sparse, relu, softmax, softmax_backward,
    softmax_backward_sparse, weighted_ce, LstmCache, LstmParams, SparseVec,
};
use crate::{Error, Result};

/// Everything the forward pass produced, indexed by non-empty step `s`
/// except `y_hat`, which covers every original time point.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Mortality probability per original time point. Empty time points
    /// repeat the latest prediction; before any input it is the softmax
    /// of the output bias alone.
    pub y_hat: Vec<f64>,
    /// Original indices of the processed (non-empty) time points.
    pub nonempty: Vec<usize>,
    /// LSTM inputs per processed step (encoder output or dense input).
    pub z: Vec<Vec<f64>>,
    /// Encoder pre-activations (encoder kinds only).
    pub z_pre: Vec<Vec<f64>>,
    /// Transcoder outputs (`LstmETD` only).
    pub zhat: Vec<Vec<f64>>,
    /// Transcoder pre-activations (`LstmETD` only).
    pub zhat_pre: Vec<Vec<f64>>,
    /// Reconstructed word distributions (decoder kinds only).
    pub xhat: Vec<Vec<f64>>,
    /// Mortality probability per processed step.
    pub p: Vec<f64>,
    /// Output softmax per processed step.
    pub out_probs: Vec<Vec<f64>>,
    /// Hidden states per processed step.
    pub hs: Vec<Vec<f64>>,
    pub(crate) lstm_cache: LstmCache,
}

fn check_input(params: &JointModelParams, input: &SeqInput) -> Result<()> {
    match (params.kind.uses_bow(), input) {
        (true, SeqInput::Bow(vecs)) => {
            for (t, vec) in vecs.iter().enumerate() {
                for &(id, w) in vec {
                    if id as usize >= params.v {
                        return Err(Error::Incompatible(format!(
                            "word id {id} at time point {} outside vocabulary of {}",
                            t + 1,
                            params.v
                        )));
                    }
                    if !w.is_finite() {
                        return Err(Error::Numeric(format!(
                            "non-finite input weight at time point {}",
                            t + 1
                        )));
                    }
                }
            }
            Ok(())
        }
        (false, SeqInput::Dense(vecs)) => {
            for (t, vec) in vecs.iter().enumerate() {
                if vec.len() != params.k {
                    return Err(Error::DimMismatch {
                        context: "dense sequence input",
                        expected: params.k,
                        got: vec.len(),
                    });
                }
                if vec.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Numeric(format!(
                        "non-finite input at time point {}",
                        t + 1
                    )));
                }
            }
            Ok(())
        }
        (true, SeqInput::Dense(_)) => Err(Error::Incompatible(format!(
            "model {} takes bag-of-words input, got dense vectors",
            params.kind.name()
        ))),
        (false, SeqInput::Bow(_)) => Err(Error::Incompatible(format!(
            "model {} takes dense input, got bag-of-words",
            params.kind.name()
        ))),
    }
}

/// Runs the model over one sequence. Empty time points are skipped
/// without touching the encoder, the LSTM state, or the loss.
pub fn forward(params: &JointModelParams, input: &SeqInput) -> Result<ForwardTrace> {
    check_input(params, input)?;
    let t_max = input.len();
    let nonempty: Vec<usize> = (0..t_max).filter(|&t| !input.is_empty_at(t)).collect();

    let mut z = Vec::with_capacity(nonempty.len());
    let mut z_pre = Vec::new();
    for &t in &nonempty {
        match input {
            SeqInput::Dense(vecs) => z.push(vecs[t].clone()),
            SeqInput::Bow(vecs) => {
                let enc = params.encoder.as_ref().expect("bow input implies encoder");
                let mut pre = vec![0.0; params.k];
                matvec_sparse(&enc.w, &vecs[t], &mut pre);
                add_assign(&mut pre, enc.b.as_ref().expect("encoder has a bias").data());
                z.push(relu(&pre));
                z_pre.push(pre);
            }
        }
    }

    let mut zhat = Vec::new();
    let mut zhat_pre = Vec::new();
    let mut xhat = Vec::new();
    if let Some(dec) = &params.decoder {
        for zs in &z {
            let recon_input = if let Some(trans) = &params.transcoder {
                let pre = affine_forward(trans, zs)?;
                let out = relu(&pre);
                zhat_pre.push(pre);
                zhat.push(out);
                zhat.last().unwrap()
            } else {
                zs
            };
            xhat.push(softmax(&affine_forward(dec, recon_input)?));
        }
    }

    let (hs, lstm_cache) = lstm_forward(&params.lstm, &z)?;
    let mut p = Vec::with_capacity(hs.len());
    let mut out_probs = Vec::with_capacity(hs.len());
    for h in &hs {
        let probs = softmax(&affine_forward(&params.output, h)?);
        p.push(probs[1]);
        out_probs.push(probs);
    }

    let resting = softmax(params.output.b.as_ref().expect("output has a bias").data())[1];
    let mut y_hat = Vec::with_capacity(t_max);
    let mut latest = resting;
    let mut next_step = 0;
    for t in 0..t_max {
        if next_step < nonempty.len() && nonempty[next_step] == t {
            latest = p[next_step];
            next_step += 1;
        }
        y_hat.push(latest);
    }

    Ok(ForwardTrace {
        y_hat,
        nonempty,
        z,
        z_pre,
        zhat,
        zhat_pre,
        xhat,
        p,
        out_probs,
        hs,
        lstm_cache,
    })
}

fn bow_at(input: &SeqInput, t: usize) -> &SparseVec {
    match input {
        SeqInput::Bow(vecs) => &vecs[t],
        SeqInput::Dense(_) => unreachable!("decoder kinds always take bag-of-words input"),
    }
}

/// Joint loss for one sequence: the mean over non-empty time points of
/// prediction + lambda1 * reconstruction + lambda2 * transcoder-output L1,
/// plus lambda3 * decoder L1 added once. Terms whose component is absent
/// vanish. Errors when the sequence has no non-empty time point.
pub fn loss_from_trace(
    params: &JointModelParams,
    trace: &ForwardTrace,
    input: &SeqInput,
    label: bool,
    cfg: &TrainConfig,
) -> Result<f64> {
    let s_count = trace.nonempty.len();
    if s_count == 0 {
        return Err(Error::EmptyInput(
            "sequence has no non-empty time point".to_string(),
        ));
    }
    let mut total = 0.0;
    for (s, &t) in trace.nonempty.iter().enumerate() {
        total += weighted_ce(trace.p[s], label, cfg.cfn).0;
        if params.decoder.is_some() {
            total += cfg.lambda1 * categorical_ce_sparse(&trace.xhat[s], bow_at(input, t)).0;
        }
        if params.transcoder.is_some() {
            total += cfg.lambda2 * l1_value_and_subgradient(&trace.zhat[s]).0;
        }
    }
    let mut loss = total / s_count as f64;
    if let Some(dec) = &params.decoder {
        loss += cfg.lambda3 * l1_value_and_subgradient(dec.w.data()).0;
    }
    Ok(loss)
}

fn relu_mask(d: &[f64], pre: &[f64]) -> Vec<f64> {
    d.iter()
        .zip(pre)
        .map(|(&g, &p)| if p > 0.0 { g } else { 0.0 })
        .collect()
}

/// Gradient of `loss_from_trace` with respect to every parameter,
/// derived by hand through the softmax, LSTM, ReLU, and L1 terms.
pub fn backward(
    params: &JointModelParams,
    trace: &ForwardTrace,
    input: &SeqInput,
    label: bool,
    cfg: &TrainConfig,
) -> Result<JointModelParams> {
    let s_count = trace.nonempty.len();
    if s_count == 0 {
        return Err(Error::EmptyInput(
            "sequence has no non-empty time point".to_string(),
        ));
    }
    let scale = 1.0 / s_count as f64;
    let mut grads = params.zeros_like();

    // Prediction term through the output layer.
    let mut dhs = Vec::with_capacity(s_count);
    for s in 0..s_count {
        let dp = weighted_ce(trace.p[s], label, cfg.cfn).1 * scale;
        let dlogits = softmax_backward(&trace.out_probs[s], &[0.0, dp]);
        dhs.push(affine_backward(
            &params.output,
            &mut grads.output,
            &trace.hs[s],
            &dlogits,
        ));
    }

    // Reconstruction and sparsity terms; their gradient enters the
    // encoder directly, bypassing the LSTM.
    let mut dz_extra = vec![vec![0.0; params.k]; s_count];
    if let Some(dec) = &params.decoder {
        for (s, &t) in trace.nonempty.iter().enumerate() {
            let (_, mut dxhat) = categorical_ce_sparse(&trace.xhat[s], bow_at(input, t));
            for (_, g) in dxhat.iter_mut() {
                *g *= cfg.lambda1 * scale;
            }
            let dlogits_v = softmax_backward_sparse(&trace.xhat[s], &dxhat);
            if let Some(trans) = &params.transcoder {
                let dec_grads = grads.decoder.as_mut().expect("grads mirror params");
                let mut dzhat =
                    affine_backward(dec, dec_grads, &trace.zhat[s], &dlogits_v);
                let (_, zhat_sign) = l1_value_and_subgradient(&trace.zhat[s]);
                for (g, sg) in dzhat.iter_mut().zip(&zhat_sign) {
                    *g += cfg.lambda2 * scale * sg;
                }
                let dzhat_pre = relu_mask(&dzhat, &trace.zhat_pre[s]);
                let trans_grads = grads.transcoder.as_mut().expect("grads mirror params");
                let dz = affine_backward(trans, trans_grads, &trace.z[s], &dzhat_pre);
                add_assign(&mut dz_extra[s], &dz);
            } else {
                let dec_grads = grads.decoder.as_mut().expect("grads mirror params");
                let dz = affine_backward(dec, dec_grads, &trace.z[s], &dlogits_v);
                add_assign(&mut dz_extra[s], &dz);
            }
        }
    }

    // Through time, then into the encoder.
    let (lstm_grads, dzs) = lstm_backward(&params.lstm, &trace.lstm_cache, &dhs);
    add_lstm(&mut grads.lstm, &lstm_grads);

    if params.encoder.is_some() {
        let enc_grads = grads.encoder.as_mut().expect("grads mirror params");
        for (s, &t) in trace.nonempty.iter().enumerate() {
            let mut dz = dzs[s].clone();
            add_assign(&mut dz, &dz_extra[s]);
            let dz_pre = relu_mask(&dz, &trace.z_pre[s]);
            outer_add_sparse(&mut enc_grads.w, &dz_pre, bow_at(input, t));
            add_assign(
                enc_grads.b.as_mut().expect("encoder has a bias").data_mut(),
                &dz_pre,
            );
        }
    }

    // Decoder weight penalty, once per sequence.
    if let Some(dec) = &params.decoder {
        let (_, sign) = l1_value_and_subgradient(dec.w.data());
        let dec_grads = grads.decoder.as_mut().expect("grads mirror params");
        for (g, sg) in dec_grads.w.data_mut().iter_mut().zip(&sign) {
            *g += cfg.lambda3 * sg;
        }
    }

    Ok(grads)
}

fn add_lstm(acc: &mut LstmParams, g: &LstmParams) {
    let pairs = [
        (&mut acc.ui, &g.ui),
        (&mut acc.uf, &g.uf),
        (&mut acc.uo, &g.uo),
        (&mut acc.uc, &g.uc),
        (&mut acc.ri, &g.ri),
        (&mut acc.rf, &g.rf),
        (&mut acc.ro, &g.ro),
        (&mut acc.rc, &g.rc),
        (&mut acc.bi, &g.bi),
        (&mut acc.bf, &g.bf),
        (&mut acc.bo, &g.bo),
        (&mut acc.bc, &g.bc),
    ];
    for (a, b) in pairs {
        add_assign(a.data_mut(), b.data());
    }
}
