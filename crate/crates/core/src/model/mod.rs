//! Weight-level data model for transformer programs.
//!
//! A [`TransformerSpec`] is a complete program: alphabet, word embeddings,
//! positional-encoding channels, an ordered list of layers, and an output
//! head. Sublayer parameter records ([`AttentionSpec`], [`FfnSpec`],
//! [`LayerNormSpec`]) carry plain weight matrices; nothing here is trained,
//! everything is constructed.

mod layout;
mod posenc;
mod wire;

pub use layout::{LayoutError, Slice, StreamLayout};
pub use posenc::{
    ao_vectors, pos_matrix, positional_encoding, sinusoidal, PosEncChannel, PosEncError, PosEncKind,
};
pub use wire::{deserialize, serialize, WireError, SCHEMA_VERSION};

use serde::{Deserialize, Serialize};

use crate::la::Mat;
use crate::scalar::Scalar;

/// Which score entries are masked to −∞ before weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Masking {
    /// No masking.
    None,
    /// Position `i` sees `j ≤ i`.
    Future,
    /// Position `i` sees `j < i`.
    StrictFuture,
    /// Position `i` sees `j ≥ i`.
    Past,
    /// Position `i` sees `j > i`.
    StrictPast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingKind {
    Softmax,
    Lhardmax,
    Rhardmax,
    Ahardmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    GeluExact,
    GeluTanh,
}

/// Parameters of one self-attention sublayer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AttentionSpec<S: Scalar> {
    /// Query projection, `d_key × d`.
    pub wq: Mat<S>,
    /// Key projection, `d_key × d`.
    pub wk: Mat<S>,
    /// Value projection, `d × d`.
    pub wv: Mat<S>,
    pub masking: Masking,
    pub weighting: WeightingKind,
    /// Divide scores by √d_key.
    pub scale: bool,
    /// When a row's scores are all masked (position 1 under strict-future,
    /// position n under strict-past), emit a zero output row instead of
    /// raising an error.
    pub first_position_zero: bool,
}

impl<S: Scalar> AttentionSpec<S> {
    /// Uniform-attention skeleton: zero queries and keys (d_key = 1), zero
    /// values; callers fill in `wv`, masking, and weighting.
    pub fn uniform(d: usize) -> Self {
        AttentionSpec {
            wq: Mat::zeros(1, d),
            wk: Mat::zeros(1, d),
            wv: Mat::zeros(d, d),
            masking: Masking::None,
            weighting: WeightingKind::Ahardmax,
            scale: false,
            first_position_zero: false,
        }
    }

    pub fn d(&self) -> usize {
        self.wv.cols()
    }

    pub fn d_key(&self) -> usize {
        self.wq.rows()
    }
}

/// Parameters of one two-layer feed-forward sublayer. The input and output
/// widths need not match; the routing lemma embeds non-square FFNs into the
/// stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct FfnSpec<S: Scalar> {
    /// First affine map, `d_hid × d_in`.
    pub w1: Mat<S>,
    pub b1: Vec<S>,
    /// Second affine map, `d_out × d_hid`.
    pub w2: Mat<S>,
    pub b2: Vec<S>,
    pub activation: Activation,
}

impl<S: Scalar> FfnSpec<S> {
    pub fn new(w1: Mat<S>, b1: Vec<S>, w2: Mat<S>, b2: Vec<S>) -> Self {
        FfnSpec { w1, b1, w2, b2, activation: Activation::Relu }
    }

    pub fn d_in(&self) -> usize {
        self.w1.cols()
    }

    pub fn d_out(&self) -> usize {
        self.w2.rows()
    }

    pub fn d_hid(&self) -> usize {
        self.w1.rows()
    }
}

/// Layer normalization parameters. `epsilon = 0` is permitted (the
/// non-Lipschitz mode used for amplification and the layernorm hash); the
/// optional pre-projection is the selective-norm extension that masks the
/// stream before normalizing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LayerNormSpec<S: Scalar> {
    pub gamma: Vec<S>,
    pub beta: Vec<S>,
    pub epsilon: S,
    #[serde(default = "none_mat")]
    pub pre_projection: Option<Mat<S>>,
}

fn none_mat<S>() -> Option<Mat<S>> {
    None
}

impl<S: Scalar> LayerNormSpec<S> {
    /// γ = 1, β = 0 norm of the given width.
    pub fn plain(d: usize, epsilon: S) -> Self {
        LayerNormSpec {
            gamma: vec![S::one(); d],
            beta: vec![S::zero(); d],
            epsilon,
            pre_projection: None,
        }
    }

    /// ε = 0 norm that first masks the stream down to the given channels
    /// (diagonal 0/1 pre-projection).
    pub fn masked(d: usize, keep: &[usize]) -> Self {
        let mut p = Mat::zeros(d, d);
        for &c in keep {
            p[(c, c)] = S::one();
        }
        LayerNormSpec { pre_projection: Some(p), ..Self::plain(d, S::zero()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    None,
    Pre,
    Post,
}

/// One transformer layer: self-attention then FFN, each with an optional
/// residual connection, plus optional pre-/post-norms. A sublayer norm may
/// be omitted under `Pre`/`Post` to norm just one of the two sublayers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LayerSpec<S: Scalar> {
    pub attention: AttentionSpec<S>,
    pub ffn: FfnSpec<S>,
    pub attention_residual: bool,
    pub ffn_residual: bool,
    pub norm_mode: NormMode,
    pub attention_norm: Option<LayerNormSpec<S>>,
    pub ffn_norm: Option<LayerNormSpec<S>>,
}

impl<S: Scalar> LayerSpec<S> {
    /// Standard layer: both residuals on, no norms.
    pub fn plain(attention: AttentionSpec<S>, ffn: FfnSpec<S>) -> Self {
        LayerSpec {
            attention,
            ffn,
            attention_residual: true,
            ffn_residual: true,
            norm_mode: NormMode::None,
            attention_norm: None,
            ffn_norm: None,
        }
    }

    pub fn has_norm(&self) -> bool {
        self.norm_mode != NormMode::None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[serde(bound = "S: Scalar")]
pub enum OutputHead<S: Scalar> {
    /// Emit the final stream unchanged.
    Raw,
    /// Project each position to a scalar; output 1 iff it is > 0.
    BinaryThreshold { weights: Vec<S> },
    /// Project each position to |Σ| scores and take the best symbol.
    Argmax { weights: Mat<S> },
}

/// How a program's accept/reject decision is read off a run. Kept in spec
/// metadata; the uniform constructions leave the final check external.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AcceptRule {
    /// Accept iff every named channel is exactly zero at the last position.
    ZeroChannels { channels: Vec<String> },
    /// Accept iff the binary-threshold head emits 1 at the last position.
    HeadBit,
}

/// Auxiliary program metadata: channel layout, acceptance rule, length
/// bound. Not interpreted by the forward pass itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpecMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<StreamLayout>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accept: Option<AcceptRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
}

/// A complete weight-level transformer program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TransformerSpec<S: Scalar> {
    /// Ordered symbol list Σ. May be empty for numeric fragments that are
    /// run on raw streams.
    pub alphabet: Vec<char>,
    /// One embedding row of width `d` per alphabet symbol.
    pub word_embedding: Vec<Vec<S>>,
    /// Model width.
    pub d: usize,
    /// Positional-encoding channels, added into the stream at their offsets.
    /// Offsets may deliberately overlap word-embedding channels (additive
    /// mode); builders in this crate keep them separate.
    pub pos_enc: Vec<PosEncChannel>,
    pub layers: Vec<LayerSpec<S>>,
    pub output_head: OutputHead<S>,
    pub final_norm: Option<LayerNormSpec<S>>,
    #[serde(default)]
    pub meta: SpecMeta,
}

impl<S: Scalar> TransformerSpec<S> {
    /// Minimal runnable wrapper for a layer body with no alphabet.
    pub fn fragment(d: usize, layers: Vec<LayerSpec<S>>, pos_enc: Vec<PosEncChannel>) -> Self {
        TransformerSpec {
            alphabet: Vec::new(),
            word_embedding: Vec::new(),
            d,
            pos_enc,
            layers,
            output_head: OutputHead::Raw,
            final_norm: None,
            meta: SpecMeta::default(),
        }
    }

    pub fn symbol_index(&self, sym: char) -> Option<usize> {
        self.alphabet.iter().position(|&c| c == sym)
    }

    /// Tightest length bound implied by bounded positional encodings and
    /// metadata, if any.
    pub fn max_len(&self) -> Option<usize> {
        let pe = self.pos_enc.iter().filter_map(|c| c.kind.max_len()).min();
        match (pe, self.meta.max_len) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// A reported validation failure: which layer (if any), which field, and
/// what was expected versus found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub layer: Option<usize>,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.layer {
            Some(l) => write!(f, "layer {}: {}: {}", l, self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

fn violation(layer: Option<usize>, field: &str, message: String) -> Violation {
    Violation { layer, field: field.to_string(), message }
}

/// Checks every shape and invariant; returns an empty list iff the spec is
/// well formed. Validation reports, it never aborts.
pub fn validate_spec<S: Scalar>(spec: &TransformerSpec<S>) -> Vec<Violation> {
    let mut v = Vec::new();
    let d = spec.d;
    if d == 0 {
        v.push(violation(None, "d", "model width must be ≥ 1".into()));
    }

    // Alphabet and embeddings.
    for (i, &c) in spec.alphabet.iter().enumerate() {
        if spec.alphabet[..i].contains(&c) {
            v.push(violation(None, "alphabet", format!("duplicate symbol {c:?}")));
        }
    }
    if spec.word_embedding.len() != spec.alphabet.len() {
        v.push(violation(
            None,
            "word_embedding",
            format!(
                "expected one row per symbol ({}), found {}",
                spec.alphabet.len(),
                spec.word_embedding.len()
            ),
        ));
    }
    for (i, row) in spec.word_embedding.iter().enumerate() {
        if row.len() != d {
            let sym = spec.alphabet.get(i).map_or("?".into(), |c| format!("{c:?}"));
            v.push(violation(
                None,
                "word_embedding",
                format!("embedding for symbol {sym} has width {}, expected {d}", row.len()),
            ));
        }
        if row.iter().any(|x| !x.is_finite()) {
            v.push(violation(None, "word_embedding", format!("row {i} has a non-finite entry")));
        }
    }

    // Positional channels.
    for (i, ch) in spec.pos_enc.iter().enumerate() {
        let w = ch.kind.width();
        if ch.offset + w > d {
            v.push(violation(
                None,
                "pos_enc",
                format!("channel {i} spans {}..{} beyond width {d}", ch.offset, ch.offset + w),
            ));
        }
        if let PosEncKind::Sinusoidal { dim, .. } = ch.kind {
            if dim % 2 != 0 || dim == 0 {
                v.push(violation(None, "pos_enc", format!("sinusoidal dim {dim} must be even and ≥ 2")));
            }
        }
    }

    for (l, layer) in spec.layers.iter().enumerate() {
        validate_attention(&layer.attention, d, l, &mut v);
        validate_ffn(&layer.ffn, d, l, &mut v);
        let norms_present = layer.attention_norm.is_some() || layer.ffn_norm.is_some();
        match layer.norm_mode {
            NormMode::None if norms_present => {
                v.push(violation(Some(l), "norm_mode", "norm specs present but mode is none".into()))
            }
            NormMode::Pre | NormMode::Post if !norms_present => v.push(violation(
                Some(l),
                "norm_mode",
                "mode requires at least one sublayer norm".into(),
            )),
            _ => {}
        }
        for (name, norm) in [("attention_norm", &layer.attention_norm), ("ffn_norm", &layer.ffn_norm)] {
            if let Some(n) = norm {
                validate_norm(n, d, Some(l), name, &mut v);
            }
        }
    }

    match &spec.output_head {
        OutputHead::Raw => {}
        OutputHead::BinaryThreshold { weights } => {
            if weights.len() != d {
                v.push(violation(
                    None,
                    "output_head",
                    format!("threshold row has width {}, expected {d}", weights.len()),
                ));
            }
        }
        OutputHead::Argmax { weights } => {
            if weights.cols() != d {
                v.push(violation(
                    None,
                    "output_head",
                    format!("argmax matrix has {} cols, expected {d}", weights.cols()),
                ));
            }
            if weights.rows() != spec.alphabet.len() {
                v.push(violation(
                    None,
                    "output_head",
                    format!(
                        "argmax matrix has {} rows, expected |Σ| = {}",
                        weights.rows(),
                        spec.alphabet.len()
                    ),
                ));
            }
        }
    }
    if let Some(n) = &spec.final_norm {
        validate_norm(n, d, None, "final_norm", &mut v);
    }
    if let Some(layout) = &spec.meta.layout {
        if layout.width() > d {
            v.push(violation(
                None,
                "meta.layout",
                format!("layout extends to {} beyond width {d}", layout.width()),
            ));
        }
    }
    v
}

fn validate_attention<S: Scalar>(a: &AttentionSpec<S>, d: usize, l: usize, v: &mut Vec<Violation>) {
    if a.wq.cols() != d {
        v.push(violation(Some(l), "wq", format!("expected {} cols, found {}", d, a.wq.cols())));
    }
    if a.wk.cols() != d {
        v.push(violation(Some(l), "wk", format!("expected {} cols, found {}", d, a.wk.cols())));
    }
    if a.wq.rows() != a.wk.rows() {
        v.push(violation(
            Some(l),
            "wk",
            format!("d_key mismatch: wq has {} rows, wk has {}", a.wq.rows(), a.wk.rows()),
        ));
    }
    if a.wq.rows() == 0 {
        v.push(violation(Some(l), "wq", "d_key must be ≥ 1".into()));
    }
    if a.wv.rows() != d || a.wv.cols() != d {
        v.push(violation(
            Some(l),
            "wv",
            format!("expected {d}×{d}, found {}×{}", a.wv.rows(), a.wv.cols()),
        ));
    }
    for (name, m) in [("wq", &a.wq), ("wk", &a.wk), ("wv", &a.wv)] {
        if m.iter().any(|x| !x.is_finite()) {
            v.push(violation(Some(l), name, "non-finite weight entry".into()));
        }
    }
}

fn validate_ffn<S: Scalar>(f: &FfnSpec<S>, d: usize, l: usize, v: &mut Vec<Violation>) {
    if f.w1.cols() != d {
        v.push(violation(Some(l), "w1", format!("expected {} cols, found {}", d, f.w1.cols())));
    }
    if f.w2.rows() != d {
        v.push(violation(Some(l), "w2", format!("expected {} rows, found {}", d, f.w2.rows())));
    }
    if f.w2.cols() != f.w1.rows() {
        v.push(violation(
            Some(l),
            "w2",
            format!("hidden width mismatch: w1 has {} rows, w2 has {} cols", f.w1.rows(), f.w2.cols()),
        ));
    }
    if f.b1.len() != f.w1.rows() {
        v.push(violation(Some(l), "b1", format!("expected {} entries, found {}", f.w1.rows(), f.b1.len())));
    }
    if f.b2.len() != f.w2.rows() {
        v.push(violation(Some(l), "b2", format!("expected {} entries, found {}", f.w2.rows(), f.b2.len())));
    }
    for (name, bad) in [
        ("w1", f.w1.iter().any(|x| !x.is_finite())),
        ("w2", f.w2.iter().any(|x| !x.is_finite())),
        ("b1", f.b1.iter().any(|x| !x.is_finite())),
        ("b2", f.b2.iter().any(|x| !x.is_finite())),
    ] {
        if bad {
            v.push(violation(Some(l), name, "non-finite weight entry".into()));
        }
    }
}

fn validate_norm<S: Scalar>(
    n: &LayerNormSpec<S>,
    d: usize,
    l: Option<usize>,
    field: &str,
    v: &mut Vec<Violation>,
) {
    if n.gamma.len() != d || n.beta.len() != d {
        v.push(violation(
            l,
            field,
            format!("gamma/beta widths {}/{} do not match {d}", n.gamma.len(), n.beta.len()),
        ));
    }
    if !(n.epsilon >= S::zero()) || !n.epsilon.is_finite() {
        v.push(violation(l, field, format!("epsilon must be a finite value ≥ 0, found {}", n.epsilon)));
    }
    if let Some(p) = &n.pre_projection {
        if p.rows() != d || p.cols() != d {
            v.push(violation(
                l,
                field,
                format!("pre-projection expected {d}×{d}, found {}×{}", p.rows(), p.cols()),
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> TransformerSpec<f64> {
        let d = 2;
        let attn = AttentionSpec::uniform(d);
        let ffn = FfnSpec::new(Mat::zeros(1, d), vec![0.0], Mat::zeros(d, 1), vec![0.0; d]);
        TransformerSpec {
            alphabet: vec!['(', ')'],
            word_embedding: vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
            d,
            pos_enc: vec![],
            layers: vec![LayerSpec::plain(attn, ffn)],
            output_head: OutputHead::Raw,
            final_norm: None,
            meta: SpecMeta::default(),
        }
    }

    #[test]
    fn well_formed_spec_validates() {
        assert!(validate_spec(&tiny_spec()).is_empty());
    }

    #[test]
    fn bad_wv_shape_is_named() {
        let mut spec = tiny_spec();
        spec.layers[0].attention.wv = Mat::zeros(3, 2);
        let v = validate_spec(&spec);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "wv");
        assert_eq!(v[0].layer, Some(0));
    }

    #[test]
    fn missing_embedding_is_named() {
        let mut spec = tiny_spec();
        spec.word_embedding.pop();
        let v = validate_spec(&spec);
        assert!(v.iter().any(|x| x.field == "word_embedding"));
    }

    #[test]
    fn norm_mode_consistency() {
        let mut spec = tiny_spec();
        spec.layers[0].norm_mode = NormMode::Pre;
        let v = validate_spec(&spec);
        assert!(v.iter().any(|x| x.field == "norm_mode"));

        spec.layers[0].ffn_norm = Some(LayerNormSpec::plain(2, 1e-5));
        assert!(validate_spec(&spec).is_empty());
    }
}
