//! Reference interpreter: runs a [`TransformerSpec`] on an input string or
//! raw stream and records full traces.
//!
//! Exactness over throughput: no batching, no autodiff, no caching. The one
//! shortcut taken is skipping the value projection when `wv` is the zero
//! matrix, which cannot change any output.

use serde_json::{json, Value};
use thiserror::Error;

use crate::la::{dot, Mat, SeqMatrix};
use crate::model::{
    pos_matrix, validate_spec, AcceptRule, Activation, AttentionSpec, FfnSpec, LayerNormSpec,
    LayerSpec, Masking, NormMode, OutputHead, PosEncError, TransformerSpec, Violation,
    WeightingKind,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum InterpError {
    #[error("width mismatch: {context} expected {expected}, found {found}")]
    WidthMismatch { context: &'static str, expected: usize, found: usize },
    #[error("unknown symbol {symbol:?} at position {position}")]
    UnknownSymbol { symbol: char, position: usize },
    #[error("input length {n} exceeds bound {max}")]
    LengthBound { n: usize, max: usize },
    #[error("input must be non-empty")]
    EmptyInput,
    #[error("all attention scores masked at position {position} (no first-position-zero allowance)")]
    AllScoresMasked { position: usize },
    #[error("singular normalization: zero variance with epsilon = 0")]
    SingularNormalization,
    #[error("precision bits must be ≥ 1")]
    InvalidPrecision,
    #[error("spec fails validation: {0}")]
    InvalidSpec(String),
    #[error("positional encoding: {0}")]
    PosEnc(#[from] PosEncError),
    #[error("no acceptance rule in spec metadata")]
    NoAcceptRule,
    #[error("acceptance rule names unknown channel {0:?}")]
    UnknownChannel(String),
}

fn width_check(context: &'static str, expected: usize, found: usize) -> Result<(), InterpError> {
    if expected != found {
        return Err(InterpError::WidthMismatch { context, expected, found });
    }
    Ok(())
}

/// Attention weights and the scores they came from, one matrix row per
/// query position. Scores may contain −∞ at masked entries.
#[derive(Debug, Clone)]
pub struct AttnTrace<S: Scalar> {
    pub scores: Mat<S>,
    pub weights: Mat<S>,
}

#[derive(Debug, Clone)]
pub struct LayerTrace<S: Scalar> {
    pub scores: Mat<S>,
    pub weights: Mat<S>,
    pub post_attn: SeqMatrix<S>,
    pub post_ffn: SeqMatrix<S>,
}

#[derive(Debug, Clone)]
pub struct TraceRecord<S: Scalar> {
    pub layers: Vec<LayerTrace<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeadOutput<S: Scalar> {
    Raw(SeqMatrix<S>),
    /// Per-position 0/1 bits from the binary-threshold head.
    Bits(Vec<u8>),
    /// Per-position symbols from the argmax head.
    Symbols(Vec<char>),
}

impl<S: Scalar> HeadOutput<S> {
    pub fn symbols_string(&self) -> Option<String> {
        match self {
            HeadOutput::Symbols(v) => Some(v.iter().collect()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult<S: Scalar> {
    /// Final residual stream (after any final norm).
    pub stream: SeqMatrix<S>,
    pub output: HeadOutput<S>,
    pub trace: Option<TraceRecord<S>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub trace: bool,
    /// Run the spec under a different weighting function, e.g. softmax in
    /// place of hard attention, to observe approximation error.
    pub weighting_override: Option<WeightingKind>,
    /// Round every activation to a multiple of 2^−p after each sublayer.
    pub precision_bits: Option<u32>,
}

impl<S: Scalar> RunResult<S> {
    /// Applies the spec's acceptance rule to this run.
    pub fn accepts(&self, spec: &TransformerSpec<S>) -> Result<bool, InterpError> {
        let rule = spec.meta.accept.as_ref().ok_or(InterpError::NoAcceptRule)?;
        match rule {
            AcceptRule::ZeroChannels { channels } => {
                let layout = spec.meta.layout.as_ref().ok_or(InterpError::NoAcceptRule)?;
                let last = self.stream.row(self.stream.rows() - 1);
                for name in channels {
                    let slice = layout
                        .get(name)
                        .map_err(|_| InterpError::UnknownChannel(name.clone()))?;
                    if last[slice.range()].iter().any(|x| *x != S::zero()) {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            AcceptRule::HeadBit => match &self.output {
                HeadOutput::Bits(bits) => Ok(*bits.last().expect("non-empty run") == 1),
                _ => Err(InterpError::NoAcceptRule),
            },
        }
    }
}

/// Turns a score vector into attention weights.
///
/// Softmax subtracts the row max before exponentiation (invisible under
/// shift invariance) and gives masked −∞ entries weight exactly 0. The
/// hardmax family detects ties by exact float equality: builder-produced
/// scores are exact by construction, and an epsilon would silently change
/// leftmost/rightmost semantics.
pub fn weighting<S: Scalar>(scores: &[S], kind: WeightingKind) -> Result<Vec<S>, InterpError> {
    weighting_or_zero(scores, kind, false)
}

fn weighting_or_zero<S: Scalar>(
    scores: &[S],
    kind: WeightingKind,
    all_masked_is_zero: bool,
) -> Result<Vec<S>, InterpError> {
    let max_finite = scores.iter().copied().filter(|s| s.is_finite()).fold(None, |m: Option<S>, s| {
        Some(match m {
            Some(m) => m.max(s),
            None => s,
        })
    });
    let m = match max_finite {
        Some(m) => m,
        None if all_masked_is_zero => return Ok(vec![S::zero(); scores.len()]),
        None => return Err(InterpError::AllScoresMasked { position: 1 }),
    };
    let weights = match kind {
        WeightingKind::Softmax => {
            let exps: Vec<S> = scores
                .iter()
                .map(|&s| if s.is_finite() { (s - m).exp() } else { S::zero() })
                .collect();
            let total: S = exps.iter().copied().sum();
            exps.into_iter().map(|e| e / total).collect()
        }
        WeightingKind::Lhardmax => {
            let idx = scores.iter().position(|&s| s == m).unwrap();
            one_hot(scores.len(), idx)
        }
        WeightingKind::Rhardmax => {
            let idx = scores.iter().rposition(|&s| s == m).unwrap();
            one_hot(scores.len(), idx)
        }
        WeightingKind::Ahardmax => {
            let count = scores.iter().filter(|&&s| s == m).count();
            let w = S::one() / S::of(count as f64);
            scores.iter().map(|&s| if s == m { w } else { S::zero() }).collect()
        }
    };
    Ok(weights)
}

fn one_hot<S: Scalar>(n: usize, idx: usize) -> Vec<S> {
    let mut v = vec![S::zero(); n];
    v[idx] = S::one();
    v
}

/// Reports whether a finite score vector has a near-tie: two scores within
/// `tol` that are not exactly equal. Used by verify mode to warn about
/// fragile hardmax semantics.
pub fn has_near_tie<S: Scalar>(scores: &[S], tol: S) -> bool {
    let mut finite: Vec<S> = scores.iter().copied().filter(|s| s.is_finite()).collect();
    finite.sort_by(|a, b| a.partial_cmp(b).unwrap());
    finite.windows(2).any(|w| w[1] != w[0] && w[1] - w[0] <= tol)
}

fn masked(masking: Masking, i: usize, j: usize) -> bool {
    match masking {
        Masking::None => false,
        Masking::Future => j > i,
        Masking::StrictFuture => j >= i,
        Masking::Past => j < i,
        Masking::StrictPast => j <= i,
    }
}

/// Full self-attention sublayer on a stream: scores, weights, and the
/// weighted sum of value vectors.
pub fn attention_forward<S: Scalar>(
    spec: &AttentionSpec<S>,
    x: &SeqMatrix<S>,
) -> Result<(SeqMatrix<S>, AttnTrace<S>), InterpError> {
    let (out, trace) = attention_apply(spec, x, None, true)?;
    Ok((out, trace.expect("trace requested")))
}

fn attention_apply<S: Scalar>(
    spec: &AttentionSpec<S>,
    x: &SeqMatrix<S>,
    weighting_override: Option<WeightingKind>,
    record: bool,
) -> Result<(SeqMatrix<S>, Option<AttnTrace<S>>), InterpError> {
    let n = x.rows();
    let d = spec.d();
    width_check("attention input", d, x.cols())?;
    let kind = weighting_override.unwrap_or(spec.weighting);
    let d_key = spec.d_key();
    let inv_sqrt = S::one() / S::of((d_key as f64).sqrt());

    let q: Vec<Vec<S>> = (0..n).map(|i| spec.wq.matvec(x.row(i))).collect();
    let k: Vec<Vec<S>> = (0..n).map(|j| spec.wk.matvec(x.row(j))).collect();
    let values: Option<Vec<Vec<S>>> =
        (!spec.wv.is_zero()).then(|| (0..n).map(|j| spec.wv.matvec(x.row(j))).collect());

    let mut out = SeqMatrix::zeros(n, d);
    let mut scores_mat = record.then(|| Mat::zeros(n, n));
    let mut weights_mat = record.then(|| Mat::zeros(n, n));
    let mut row = vec![S::zero(); n];

    for i in 0..n {
        for j in 0..n {
            row[j] = if masked(spec.masking, i, j) {
                S::neg_infinity()
            } else {
                let s = dot(&q[i], &k[j]);
                if spec.scale {
                    s * inv_sqrt
                } else {
                    s
                }
            };
        }
        let w = weighting_or_zero(&row, kind, spec.first_position_zero)
            .map_err(|_| InterpError::AllScoresMasked { position: i + 1 })?;
        if let Some(vals) = &values {
            let out_row = out.row_mut(i);
            for (j, &wj) in w.iter().enumerate() {
                if wj == S::zero() {
                    continue;
                }
                for (o, v) in out_row.iter_mut().zip(&vals[j]) {
                    *o = *o + wj * *v;
                }
            }
        }
        if let Some(sm) = &mut scores_mat {
            sm.row_mut(i).copy_from_slice(&row);
        }
        if let Some(wm) = &mut weights_mat {
            wm.row_mut(i).copy_from_slice(&w);
        }
    }
    let trace = record.then(|| AttnTrace { scores: scores_mat.unwrap(), weights: weights_mat.unwrap() });
    Ok((out, trace))
}

fn gelu_exact<S: Scalar>(x: S) -> S {
    let half = S::of(0.5);
    half * x * (S::one() + (x / S::of(2.0).sqrt()).erf())
}

fn gelu_tanh<S: Scalar>(x: S) -> S {
    let c = S::of((2.0 / std::f64::consts::PI).sqrt());
    let half = S::of(0.5);
    half * x * (S::one() + (c * (x + S::of(0.044715) * x * x * x)).tanh())
}

fn activate<S: Scalar>(kind: Activation, x: S) -> S {
    match kind {
        Activation::Relu => x.max(S::zero()),
        Activation::GeluExact => gelu_exact(x),
        Activation::GeluTanh => gelu_tanh(x),
    }
}

/// Position-wise feed-forward pass: `w2 · act(w1 · x + b1) + b2`.
pub fn ffn_forward<S: Scalar>(spec: &FfnSpec<S>, x: &[S]) -> Result<Vec<S>, InterpError> {
    width_check("ffn input", spec.d_in(), x.len())?;
    let mut h = spec.w1.matvec(x);
    for (hk, bk) in h.iter_mut().zip(&spec.b1) {
        *hk = activate(spec.activation, *hk + *bk);
    }
    let mut y = spec.w2.matvec(&h);
    for (yk, bk) in y.iter_mut().zip(&spec.b2) {
        *yk = *yk + *bk;
    }
    Ok(y)
}

/// Layer normalization with the optional selective pre-projection.
pub fn layernorm_forward<S: Scalar>(spec: &LayerNormSpec<S>, x: &[S]) -> Result<Vec<S>, InterpError> {
    let d = spec.gamma.len();
    width_check("layernorm input", d, x.len())?;
    let projected;
    let y: &[S] = match &spec.pre_projection {
        Some(p) => {
            projected = p.matvec(x);
            &projected
        }
        None => x,
    };
    let dn = S::of(d as f64);
    let mean = y.iter().copied().sum::<S>() / dn;
    let var = y.iter().map(|&v| (v - mean) * (v - mean)).sum::<S>() / dn;
    let denom_sq = var + spec.epsilon;
    if denom_sq == S::zero() {
        return Err(InterpError::SingularNormalization);
    }
    let denom = denom_sq.sqrt();
    Ok(y.iter()
        .zip(spec.gamma.iter().zip(&spec.beta))
        .map(|(&v, (&g, &b))| (v - mean) / denom * g + b)
        .collect())
}

/// Rounds every entry to the nearest multiple of 2^−p, ties to even.
pub fn round_activations<S: Scalar>(x: &SeqMatrix<S>, precision_bits: u32) -> Result<SeqMatrix<S>, InterpError> {
    if precision_bits == 0 {
        return Err(InterpError::InvalidPrecision);
    }
    let scale = S::of(2f64.powi(precision_bits as i32));
    Ok(SeqMatrix::from_fn(x.rows(), x.cols(), |i, j| (x[(i, j)] * scale).round_half_even() / scale))
}

fn norm_rows<S: Scalar>(norm: &LayerNormSpec<S>, x: &SeqMatrix<S>) -> Result<SeqMatrix<S>, InterpError> {
    let mut out = SeqMatrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        let row = layernorm_forward(norm, x.row(i))?;
        out.row_mut(i).copy_from_slice(&row);
    }
    Ok(out)
}

fn maybe_round<S: Scalar>(x: SeqMatrix<S>, opts: &RunOptions) -> Result<SeqMatrix<S>, InterpError> {
    match opts.precision_bits {
        Some(p) => round_activations(&x, p),
        None => Ok(x),
    }
}

fn layer_forward<S: Scalar>(
    layer: &LayerSpec<S>,
    stream: SeqMatrix<S>,
    opts: &RunOptions,
) -> Result<(SeqMatrix<S>, Option<AttnTrace<S>>, SeqMatrix<S>), InterpError> {
    let pre = layer.norm_mode == NormMode::Pre;
    let post = layer.norm_mode == NormMode::Post;

    let attn_in = match (&layer.attention_norm, pre) {
        (Some(norm), true) => norm_rows(norm, &stream)?,
        _ => stream.clone(),
    };
    let (attn_out, attn_trace) = attention_apply(&layer.attention, &attn_in, opts.weighting_override, opts.trace)?;
    let mut h = if layer.attention_residual { stream.add(&attn_out) } else { attn_out };
    if post {
        if let Some(norm) = &layer.attention_norm {
            h = norm_rows(norm, &h)?;
        }
    }
    h = maybe_round(h, opts)?;

    let ffn_in = match (&layer.ffn_norm, pre) {
        (Some(norm), true) => norm_rows(norm, &h)?,
        _ => h.clone(),
    };
    let mut f = SeqMatrix::zeros(h.rows(), h.cols());
    for i in 0..h.rows() {
        let y = ffn_forward(&layer.ffn, ffn_in.row(i))?;
        f.row_mut(i).copy_from_slice(&y);
    }
    let mut out = if layer.ffn_residual { h.add(&f) } else { f };
    if post {
        if let Some(norm) = &layer.ffn_norm {
            out = norm_rows(norm, &out)?;
        }
    }
    out = maybe_round(out, opts)?;
    Ok((h, attn_trace, out))
}

/// Maps input symbols to alphabet indices.
pub fn encode_input<S: Scalar>(spec: &TransformerSpec<S>, input: &str) -> Result<Vec<usize>, InterpError> {
    input
        .chars()
        .enumerate()
        .map(|(pos, c)| {
            spec.symbol_index(c).ok_or(InterpError::UnknownSymbol { symbol: c, position: pos + 1 })
        })
        .collect()
}

/// Embedding step: word-embedding rows plus positional channels.
pub fn embed<S: Scalar>(spec: &TransformerSpec<S>, symbols: &[usize]) -> Result<SeqMatrix<S>, InterpError> {
    let n = symbols.len();
    let mut stream = SeqMatrix::zeros(n, spec.d);
    for (i, &s) in symbols.iter().enumerate() {
        stream.row_mut(i).copy_from_slice(&spec.word_embedding[s]);
    }
    add_positional(spec, &mut stream)?;
    Ok(stream)
}

fn add_positional<S: Scalar>(spec: &TransformerSpec<S>, stream: &mut SeqMatrix<S>) -> Result<(), InterpError> {
    let n = stream.rows();
    for channel in &spec.pos_enc {
        let table = pos_matrix::<S>(&channel.kind, n)?;
        let w = channel.kind.width();
        for i in 0..n {
            let row = stream.row_mut(i);
            for (k, v) in table[i].iter().enumerate() {
                row[channel.offset + k] = row[channel.offset + k] + *v;
            }
        }
        let _ = w;
    }
    Ok(())
}

fn check_len<S: Scalar>(spec: &TransformerSpec<S>, n: usize) -> Result<(), InterpError> {
    if n == 0 {
        return Err(InterpError::EmptyInput);
    }
    if let Some(max) = spec.max_len() {
        if n > max {
            return Err(InterpError::LengthBound { n, max });
        }
    }
    Ok(())
}

/// Runs a validated spec on an input string.
pub fn run<S: Scalar>(
    spec: &TransformerSpec<S>,
    input: &str,
    opts: RunOptions,
) -> Result<RunResult<S>, InterpError> {
    let violations = validate_spec(spec);
    if !violations.is_empty() {
        return Err(InterpError::InvalidSpec(join_violations(&violations)));
    }
    run_unvalidated(spec, input, opts)
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// `run` without the per-call validation sweep, for bulk differential
/// testing of a spec that has already been validated once.
pub fn run_unvalidated<S: Scalar>(
    spec: &TransformerSpec<S>,
    input: &str,
    opts: RunOptions,
) -> Result<RunResult<S>, InterpError> {
    let symbols = encode_input(spec, input)?;
    check_len(spec, symbols.len())?;
    let stream = embed(spec, &symbols)?;
    forward(spec, stream, opts)
}

/// Runs a spec on a caller-built data stream (positional channels are added
/// on top). This is how numeric fragments with an empty alphabet execute.
pub fn run_stream<S: Scalar>(
    spec: &TransformerSpec<S>,
    data: SeqMatrix<S>,
    opts: RunOptions,
) -> Result<RunResult<S>, InterpError> {
    check_len(spec, data.rows())?;
    width_check("input stream", spec.d, data.cols())?;
    let mut stream = data;
    add_positional(spec, &mut stream)?;
    forward(spec, stream, opts)
}

fn forward<S: Scalar>(
    spec: &TransformerSpec<S>,
    mut stream: SeqMatrix<S>,
    opts: RunOptions,
) -> Result<RunResult<S>, InterpError> {
    let mut traces = opts.trace.then(Vec::new);
    for layer in &spec.layers {
        let (post_attn, attn_trace, out) = layer_forward(layer, stream, &opts)?;
        if let Some(traces) = &mut traces {
            let t = attn_trace.expect("trace recorded");
            traces.push(LayerTrace {
                scores: t.scores,
                weights: t.weights,
                post_attn,
                post_ffn: out.clone(),
            });
        }
        stream = out;
    }
    if let Some(norm) = &spec.final_norm {
        stream = norm_rows(norm, &stream)?;
    }
    let output = apply_head(spec, &stream);
    Ok(RunResult { stream, output, trace: traces.map(|layers| TraceRecord { layers }) })
}

fn apply_head<S: Scalar>(spec: &TransformerSpec<S>, stream: &SeqMatrix<S>) -> HeadOutput<S> {
    match &spec.output_head {
        OutputHead::Raw => HeadOutput::Raw(stream.clone()),
        OutputHead::BinaryThreshold { weights } => {
            let bits = (0..stream.rows())
                .map(|i| u8::from(dot(weights, stream.row(i)) > S::zero()))
                .collect();
            HeadOutput::Bits(bits)
        }
        OutputHead::Argmax { weights } => {
            let syms = (0..stream.rows())
                .map(|i| {
                    let scores = weights.matvec(stream.row(i));
                    let best = scores
                        .iter()
                        .enumerate()
                        .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
                        .map(|(k, _)| k)
                        .unwrap();
                    spec.alphabet[best]
                })
                .collect();
            HeadOutput::Symbols(syms)
        }
    }
}

fn scalar_json<S: Scalar>(x: S) -> Value {
    if x.is_finite() {
        json!(x.to_f64().unwrap())
    } else if x == S::neg_infinity() {
        json!("-inf")
    } else if x == S::infinity() {
        json!("inf")
    } else {
        json!("nan")
    }
}

fn mat_json<S: Scalar>(m: &Mat<S>) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array(m.row(i).iter().map(|&x| scalar_json(x)).collect()))
            .collect(),
    )
}

/// Trace export: per-layer scores, weights, and stream snapshots, with −∞
/// serialized as the string `"-inf"`.
pub fn trace_to_json<S: Scalar>(result: &RunResult<S>) -> Value {
    let layers: Vec<Value> = result
        .trace
        .as_ref()
        .map(|t| {
            t.layers
                .iter()
                .map(|l| {
                    json!({
                        "scores": mat_json(&l.scores),
                        "weights": mat_json(&l.weights),
                        "post_attn": mat_json(&l.post_attn),
                        "post_ffn": mat_json(&l.post_ffn),
                    })
                })
                .collect()
        })
        .unwrap_or_default();
    let output = match &result.output {
        HeadOutput::Raw(m) => mat_json(m),
        HeadOutput::Bits(b) => json!(b),
        HeadOutput::Symbols(s) => json!(s.iter().collect::<String>()),
    };
    json!({ "layers": layers, "output": output })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::la::Mat;

    const NEG_INF: f64 = f64::NEG_INFINITY;

    #[test]
    fn ahardmax_splits_ties() {
        let w = weighting(&[1.0, 3.0, 3.0], WeightingKind::Ahardmax).unwrap();
        assert_eq!(w, vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn lhardmax_rhardmax_pick_ends() {
        assert_eq!(weighting(&[2.0, 2.0, 1.0], WeightingKind::Lhardmax).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(weighting(&[2.0, 2.0, 1.0], WeightingKind::Rhardmax).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn softmax_symmetric_and_masked() {
        assert_eq!(weighting(&[0.0, 0.0], WeightingKind::Softmax).unwrap(), vec![0.5, 0.5]);
        assert_eq!(weighting(&[0.0, NEG_INF], WeightingKind::Softmax).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn all_masked_errors_without_allowance() {
        assert!(weighting(&[NEG_INF, NEG_INF], WeightingKind::Ahardmax).is_err());
    }

    fn col_stream(vals: &[f64]) -> SeqMatrix<f64> {
        Mat::from_rows(&vals.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn uniform_future_attention_is_prefix_mean() {
        let mut spec = AttentionSpec::uniform(1);
        spec.wv = Mat::identity(1);
        spec.masking = Masking::Future;
        spec.weighting = WeightingKind::Softmax;
        let (out, trace) = attention_forward(&spec, &col_stream(&[1.0, 0.0, 1.0])).unwrap();
        assert_eq!(out.data(), &[1.0, 0.5, 2.0 / 3.0]);
        // Row sums of attention weights are exactly 1 here.
        for i in 0..3 {
            let s: f64 = trace.weights.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_values_give_zero_output() {
        let spec = AttentionSpec::uniform(1);
        let (out, _) = attention_forward(&spec, &col_stream(&[3.0, -4.0])).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn strict_future_first_position_zero() {
        let mut spec = AttentionSpec::uniform(1);
        spec.wv = Mat::identity(1);
        spec.masking = Masking::StrictFuture;
        spec.first_position_zero = true;
        let (out, trace) = attention_forward(&spec, &col_stream(&[5.0, 7.0])).unwrap();
        assert_eq!(out.row(0), &[0.0]);
        assert_eq!(out.row(1), &[5.0]);
        let s: f64 = trace.weights.row(0).iter().sum();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn strict_future_errors_without_allowance() {
        let mut spec = AttentionSpec::uniform(1);
        spec.masking = Masking::StrictFuture;
        assert!(matches!(
            attention_forward(&spec, &col_stream(&[1.0])),
            Err(InterpError::AllScoresMasked { position: 1 })
        ));
    }

    #[test]
    fn ffn_relu_basics() {
        let f = FfnSpec::new(Mat::identity(2), vec![0.0; 2], Mat::identity(2), vec![0.0; 2]);
        assert_eq!(ffn_forward(&f, &[-1.0, 2.0]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn layernorm_examples() {
        let ln = LayerNormSpec::plain(2, 0.0);
        assert_eq!(layernorm_forward(&ln, &[1.0, -1.0]).unwrap(), vec![1.0, -1.0]);
        assert_eq!(layernorm_forward(&ln, &[0.01, -0.01]).unwrap(), vec![1.0, -1.0]);
        assert!(matches!(
            layernorm_forward(&ln, &[3.0, 3.0]),
            Err(InterpError::SingularNormalization)
        ));
    }

    #[test]
    fn rounding_to_sixteenths() {
        let x = col_stream(&[0.30078125]);
        let r = round_activations(&x, 4).unwrap();
        assert_eq!(r.data(), &[0.3125]);
        // Fixed point of rounding.
        assert_eq!(round_activations(&r, 4).unwrap().data(), &[0.3125]);
        // Large p is the identity on moderate values.
        let y = col_stream(&[0.1, -2.7, 1234.5]);
        assert_eq!(round_activations(&y, 52).unwrap().data(), y.data());
    }

    #[test]
    fn gelu_values() {
        assert_eq!(gelu_exact(0.0f64), 0.0);
        assert!((gelu_exact(1.0f64) - 0.8413447460685429).abs() < 1e-15);
        assert!((gelu_tanh(1.0f64) - 0.8411919906082768).abs() < 1e-12);
    }

    #[test]
    fn hardmax_kinds_agree_when_tieless() {
        let scores = [0.5, 2.0, -1.0, 1.75];
        let l = weighting(&scores, WeightingKind::Lhardmax).unwrap();
        let r = weighting(&scores, WeightingKind::Rhardmax).unwrap();
        let a = weighting(&scores, WeightingKind::Ahardmax).unwrap();
        assert_eq!(l, r);
        assert_eq!(l, a);
    }

    #[test]
    fn near_tie_detection() {
        assert!(has_near_tie(&[1.0, 1.0 + 1e-12], 1e-9));
        assert!(!has_near_tie(&[1.0, 1.0], 1e-9));
        assert!(!has_near_tie(&[1.0, 2.0], 1e-9));
    }
}
