//! Routing and composition: the machinery that connects recipes into
//! multi-step programs.
//!
//! Routing wraps an FFN or attention layer in linear maps on either side;
//! serial composition stacks layer lists; parallel composition widens two
//! norm-free bodies into one block-diagonal body whose output is the
//! concatenation of both.

use thiserror::Error;

use crate::la::Mat;
use crate::model::{
    AttentionSpec, FfnSpec, LayerSpec, OutputHead, PosEncChannel, SpecMeta, StreamLayout,
    TransformerSpec,
};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum AssembleError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("parallel composition requires bodies without layer normalization")]
    NormPresent,
    #[error("parallel composition requires residual connections on every sublayer")]
    ResidualRequired,
    #[error("positional channels conflict at offset {0}")]
    PosConflict(usize),
    #[error("layouts conflict on channel {0:?}")]
    LayoutConflict(String),
    #[error("serial composition across an alphabet change")]
    AlphabetMismatch,
    #[error("stack is empty")]
    Empty,
}

/// A transformer body under construction: layers plus the positional
/// channels they rely on and the channel layout they were built against.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack<S: Scalar> {
    pub d: usize,
    pub layers: Vec<LayerSpec<S>>,
    pub pos_enc: Vec<PosEncChannel>,
    pub layout: StreamLayout,
}

impl<S: Scalar> LayerStack<S> {
    pub fn new(d: usize, layout: StreamLayout) -> Self {
        LayerStack { d, layers: Vec::new(), pos_enc: Vec::new(), layout }
    }

    /// Wraps the body into a runnable spec with no alphabet (run it on raw
    /// streams).
    pub fn into_fragment(self) -> TransformerSpec<S> {
        TransformerSpec {
            alphabet: Vec::new(),
            word_embedding: Vec::new(),
            d: self.d,
            pos_enc: self.pos_enc,
            layers: self.layers,
            output_head: OutputHead::Raw,
            final_norm: None,
            meta: SpecMeta { layout: Some(self.layout), accept: None, max_len: None },
        }
    }

    /// Wraps the body into a full program.
    pub fn into_spec(
        self,
        alphabet: Vec<char>,
        word_embedding: Vec<Vec<S>>,
        output_head: OutputHead<S>,
    ) -> TransformerSpec<S> {
        TransformerSpec {
            alphabet,
            word_embedding,
            d: self.d,
            pos_enc: self.pos_enc,
            layers: self.layers,
            output_head,
            final_norm: None,
            meta: SpecMeta { layout: Some(self.layout), accept: None, max_len: None },
        }
    }
}

/// Routing lemma, FFN side: `L ∘ f ∘ R` is again an FFN, via `W₁R`, `LW₂`,
/// `Lb₂`.
pub fn route_ffn<S: Scalar>(
    left: &Mat<S>,
    f: &FfnSpec<S>,
    right: &Mat<S>,
) -> Result<FfnSpec<S>, AssembleError> {
    if right.rows() != f.d_in() {
        return Err(AssembleError::Shape(format!(
            "R maps into {} but ffn expects {}",
            right.rows(),
            f.d_in()
        )));
    }
    if left.cols() != f.d_out() {
        return Err(AssembleError::Shape(format!(
            "L consumes {} but ffn produces {}",
            left.cols(),
            f.d_out()
        )));
    }
    Ok(FfnSpec {
        w1: f.w1.matmul(right),
        b1: f.b1.clone(),
        w2: left.matmul(&f.w2),
        b2: left.matvec(&f.b2),
        activation: f.activation,
    })
}

/// Routing lemma, attention side: `W^(Q)R`, `W^(K)R`, `L·W^(V)·R`.
/// `L.rows()` must equal `R.cols()` so the result stays square.
pub fn route_attention<S: Scalar>(
    left: &Mat<S>,
    sa: &AttentionSpec<S>,
    right: &Mat<S>,
) -> Result<AttentionSpec<S>, AssembleError> {
    let d = sa.d();
    if right.rows() != d || left.cols() != d {
        return Err(AssembleError::Shape(format!(
            "attention is {d}-wide but R maps into {} and L consumes {}",
            right.rows(),
            left.cols()
        )));
    }
    if left.rows() != right.cols() {
        return Err(AssembleError::Shape(format!(
            "routed attention must stay square: L has {} rows, R has {} cols",
            left.rows(),
            right.cols()
        )));
    }
    Ok(AttentionSpec {
        wq: sa.wq.matmul(right),
        wk: sa.wk.matmul(right),
        wv: left.matmul(&sa.wv).matmul(right),
        ..sa.clone()
    })
}

/// Embeds a small FFN into a width-`d` stream: read `inputs`, add the
/// result onto `outputs` (used with a residual connection into
/// previously-zero channels).
pub fn embed_ffn<S: Scalar>(
    d: usize,
    f: &FfnSpec<S>,
    inputs: &[usize],
    outputs: &[usize],
) -> Result<FfnSpec<S>, AssembleError> {
    if inputs.len() != f.d_in() || outputs.len() != f.d_out() {
        return Err(AssembleError::Shape(format!(
            "ffn is {}→{} but {} inputs and {} outputs were routed",
            f.d_in(),
            f.d_out(),
            inputs.len(),
            outputs.len()
        )));
    }
    route_ffn(&Mat::place(d, outputs), f, &Mat::pick(d, inputs))
}

/// Fuses width-`d` FFNs into one by concatenating hidden layers; the fused
/// output is the sum of the parts' outputs (disjoint write channels in
/// practice). All parts must share the activation.
pub fn fuse_ffn<S: Scalar>(parts: &[FfnSpec<S>]) -> Result<FfnSpec<S>, AssembleError> {
    let first = parts.first().ok_or(AssembleError::Empty)?;
    let (d_in, d_out) = (first.d_in(), first.d_out());
    if parts.iter().any(|p| p.d_in() != d_in || p.d_out() != d_out) {
        return Err(AssembleError::Shape("fused parts must share widths".into()));
    }
    if parts.iter().any(|p| p.activation != first.activation) {
        return Err(AssembleError::Shape("fused parts must share the activation".into()));
    }
    let w1 = Mat::vstack(&parts.iter().map(|p| &p.w1).collect::<Vec<_>>());
    let b1 = parts.iter().flat_map(|p| p.b1.iter().copied()).collect();
    let w2 = Mat::hstack(&parts.iter().map(|p| &p.w2).collect::<Vec<_>>());
    let mut b2 = vec![S::zero(); d_out];
    for p in parts {
        for (acc, b) in b2.iter_mut().zip(&p.b2) {
            *acc = *acc + *b;
        }
    }
    Ok(FfnSpec { w1, b1, w2, b2, activation: first.activation })
}

/// A layer that passes the stream through unchanged (zero attention, zero
/// FFN, residuals on).
pub fn identity_layer<S: Scalar>(d: usize) -> LayerSpec<S> {
    LayerSpec::plain(AttentionSpec::uniform(d), crate::ffn::build_zero(d))
}

/// Serial composition: stack the second body's layers on top of the
/// first's. Positional channels are united; identical duplicates collapse.
pub fn serial_compose<S: Scalar>(stages: &[LayerStack<S>]) -> Result<LayerStack<S>, AssembleError> {
    let first = stages.first().ok_or(AssembleError::Empty)?;
    let d = first.d;
    let mut layers = Vec::new();
    let mut pos_enc: Vec<PosEncChannel> = Vec::new();
    let mut layout = first.layout.clone();
    for stage in stages {
        if stage.d != d {
            return Err(AssembleError::WidthMismatch(d, stage.d));
        }
        layers.extend(stage.layers.iter().cloned());
        merge_pos(&mut pos_enc, &stage.pos_enc)?;
        if stage.layout != layout {
            if layout.width() == 0 {
                layout = stage.layout.clone();
            } else if stage.layout.width() != 0 {
                // Stages built against different layouts: keep channels that
                // agree, refuse contradictions.
                for (name, slice) in stage.layout.channels() {
                    match layout.get(name) {
                        Ok(existing) if existing != slice => {
                            return Err(AssembleError::LayoutConflict(name.to_string()))
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    Ok(LayerStack { d, layers, pos_enc, layout })
}

fn merge_pos(into: &mut Vec<PosEncChannel>, from: &[PosEncChannel]) -> Result<(), AssembleError> {
    for ch in from {
        if let Some(existing) = into.iter().find(|c| c.offset == ch.offset) {
            if existing.kind != ch.kind {
                return Err(AssembleError::PosConflict(ch.offset));
            }
        } else {
            into.push(ch.clone());
        }
    }
    Ok(())
}

fn widen_layer<S: Scalar>(layer: &LayerSpec<S>, d_total: usize, offset: usize) -> LayerSpec<S> {
    let a = &layer.attention;
    let f = &layer.ffn;
    let d_key = a.wq.rows();
    let mut b2 = vec![S::zero(); d_total];
    b2[offset..offset + f.d_out()].copy_from_slice(&f.b2);
    LayerSpec {
        attention: AttentionSpec {
            wq: a.wq.embedded(d_key, d_total, 0, offset),
            wk: a.wk.embedded(d_key, d_total, 0, offset),
            wv: a.wv.embedded(d_total, d_total, offset, offset),
            ..a.clone()
        },
        ffn: FfnSpec {
            w1: f.w1.embedded(f.d_hid(), d_total, 0, offset),
            b1: f.b1.clone(),
            w2: f.w2.embedded(d_total, f.d_hid(), offset, 0),
            b2,
            activation: f.activation,
        },
        ..layer.clone()
    }
}

/// Parallel composition of two norm-free bodies: the result has width
/// `dₐ + d_b` and computes both bodies side by side, the first in the top
/// channels and the second below. The shorter body is padded with trivial
/// layers; each original layer becomes one block-diagonally widened layer.
pub fn parallel_compose<S: Scalar>(
    a: &LayerStack<S>,
    b: &LayerStack<S>,
) -> Result<LayerStack<S>, AssembleError> {
    for stack in [a, b] {
        for layer in &stack.layers {
            if layer.has_norm() || layer.attention_norm.is_some() || layer.ffn_norm.is_some() {
                return Err(AssembleError::NormPresent);
            }
            if !layer.attention_residual || !layer.ffn_residual {
                return Err(AssembleError::ResidualRequired);
            }
        }
    }
    let d = a.d + b.d;
    let depth = a.layers.len().max(b.layers.len());
    let pad_a = identity_layer::<S>(a.d);
    let pad_b = identity_layer::<S>(b.d);

    let mut layers = Vec::with_capacity(2 * depth);
    for l in 0..depth {
        let la = a.layers.get(l).unwrap_or(&pad_a);
        let lb = b.layers.get(l).unwrap_or(&pad_b);
        layers.push(widen_layer(la, d, 0));
        layers.push(widen_layer(lb, d, a.d));
    }

    let mut pos_enc = a.pos_enc.clone();
    for ch in &b.pos_enc {
        pos_enc.push(PosEncChannel { kind: ch.kind.clone(), offset: ch.offset + a.d });
    }

    let mut layout = StreamLayout::open();
    for (name, slice) in a.layout.channels() {
        debug_assert_eq!(layout.width(), slice.offset);
        layout.allocate(name, slice.width).expect("fresh layout");
    }
    // Pad to the full top width so the bottom body's offsets line up.
    if layout.width() < a.d {
        layout.allocate("lhs.pad", a.d - layout.width()).expect("fresh layout");
    }
    for (name, slice) in b.layout.channels() {
        let mut candidate = name.to_string();
        while layout.contains(&candidate) {
            candidate.push('\'');
        }
        layout.allocate(&candidate, slice.width).expect("fresh layout");
    }
    Ok(LayerStack { d, layers, pos_enc, layout })
}

/// Serial composition at the spec level (CLI `compose --serial`): the first
/// program's embedding and layers, then the second's layers and head.
pub fn serial_compose_specs<S: Scalar>(
    a: &TransformerSpec<S>,
    b: &TransformerSpec<S>,
) -> Result<TransformerSpec<S>, AssembleError> {
    if a.d != b.d {
        return Err(AssembleError::WidthMismatch(a.d, b.d));
    }
    if a.final_norm.is_some() {
        return Err(AssembleError::Shape("first stage has a final norm".into()));
    }
    if !b.alphabet.is_empty() && b.alphabet != a.alphabet {
        return Err(AssembleError::AlphabetMismatch);
    }
    let mut pos_enc = a.pos_enc.clone();
    merge_pos(&mut pos_enc, &b.pos_enc)?;
    let mut layers = a.layers.clone();
    layers.extend(b.layers.iter().cloned());
    let layout = match (&a.meta.layout, &b.meta.layout) {
        (Some(la), Some(lb)) if la == lb => Some(la.clone()),
        (Some(la), None) => Some(la.clone()),
        (None, lb) => lb.clone(),
        _ => None,
    };
    let max_len = match (a.meta.max_len, b.meta.max_len) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    };
    Ok(TransformerSpec {
        alphabet: a.alphabet.clone(),
        word_embedding: a.word_embedding.clone(),
        d: a.d,
        pos_enc,
        layers,
        output_head: b.output_head.clone(),
        final_norm: b.final_norm.clone(),
        meta: SpecMeta { layout, accept: b.meta.accept.clone().or_else(|| a.meta.accept.clone()), max_len },
    })
}

/// Parallel composition at the spec level: embeddings concatenate, layers
/// widen block-diagonally, output is the raw concatenated stream.
pub fn parallel_compose_specs<S: Scalar>(
    a: &TransformerSpec<S>,
    b: &TransformerSpec<S>,
) -> Result<TransformerSpec<S>, AssembleError> {
    if a.alphabet != b.alphabet {
        return Err(AssembleError::AlphabetMismatch);
    }
    if a.final_norm.is_some() || b.final_norm.is_some() {
        return Err(AssembleError::NormPresent);
    }
    let stack_a = LayerStack {
        d: a.d,
        layers: a.layers.clone(),
        pos_enc: a.pos_enc.clone(),
        layout: a.meta.layout.clone().unwrap_or_default(),
    };
    let stack_b = LayerStack {
        d: b.d,
        layers: b.layers.clone(),
        pos_enc: b.pos_enc.clone(),
        layout: b.meta.layout.clone().unwrap_or_default(),
    };
    let stack = parallel_compose(&stack_a, &stack_b)?;
    let word_embedding = a
        .word_embedding
        .iter()
        .zip(&b.word_embedding)
        .map(|(ra, rb)| {
            let mut row = ra.clone();
            row.extend_from_slice(rb);
            row
        })
        .collect();
    let max_len = match (a.max_len(), b.max_len()) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    };
    let mut spec = stack.into_spec(a.alphabet.clone(), word_embedding, OutputHead::Raw);
    spec.meta.max_len = max_len;
    Ok(spec)
}

/// Which layers write each named channel (nonzero value-projection or FFN
/// output rows). The write-once discipline asks for at most one writer per
/// computed channel.
pub fn channel_writers<S: Scalar>(stack: &LayerStack<S>) -> Vec<(String, Vec<usize>)> {
    let row_nonzero = |m: &Mat<S>, r: usize| m.row(r).iter().any(|x| *x != S::zero());
    stack
        .layout
        .channels()
        .map(|(name, slice)| {
            let writers = stack
                .layers
                .iter()
                .enumerate()
                .filter(|(_, layer)| {
                    slice.range().any(|c| {
                        row_nonzero(&layer.attention.wv, c)
                            || row_nonzero(&layer.ffn.w2, c)
                            || layer.ffn.b2[c] != S::zero()
                    })
                })
                .map(|(l, _)| l)
                .collect();
            (name.to_string(), writers)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffn::{build_add, build_identity, build_minmax, build_zero, Extremum};
    use crate::interp::{attention_forward, ffn_forward, run_stream, RunOptions};
    use crate::la::SeqMatrix;
    use crate::model::{Masking, WeightingKind};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn dyadic(rng: &mut StdRng) -> f64 {
        rng.gen_range(-64..=64) as f64 / 8.0
    }

    fn dyadic_mat(rng: &mut StdRng, r: usize, c: usize) -> Mat<f64> {
        Mat::from_fn(r, c, |_, _| rng.gen_range(-8..=8) as f64 / 4.0)
    }

    #[test]
    fn route_ffn_identity_maps() {
        let f = build_add::<f64>();
        let routed = route_ffn(&Mat::identity(1), &f, &Mat::identity(2)).unwrap();
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..50 {
            let x = [dyadic(&mut rng), dyadic(&mut rng)];
            assert_eq!(ffn_forward(&routed, &x).unwrap(), ffn_forward(&f, &x).unwrap());
        }
    }

    #[test]
    fn route_ffn_swap_and_scale() {
        let mut rng = StdRng::seed_from_u64(2);
        // R swaps the inputs of add: same sums.
        let swap = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let add = build_add::<f64>();
        let swapped = route_ffn(&Mat::identity(1), &add, &swap).unwrap();
        // L = 2I on min: outputs 2·min(x,y).
        let min = build_minmax::<f64>(Extremum::Min);
        let doubled = route_ffn(&Mat::identity(1).scaled(2.0), &min, &Mat::identity(2)).unwrap();
        for _ in 0..100 {
            let x = [dyadic(&mut rng), dyadic(&mut rng)];
            assert_eq!(ffn_forward(&swapped, &x).unwrap()[0], x[0] + x[1]);
            assert_eq!(ffn_forward(&doubled, &x).unwrap()[0], 2.0 * x[0].min(x[1]));
        }
    }

    #[test]
    fn route_ffn_matches_pointwise_composition() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let f = FfnSpec {
                w1: dyadic_mat(&mut rng, 3, 2),
                b1: (0..3).map(|_| dyadic(&mut rng)).collect(),
                w2: dyadic_mat(&mut rng, 2, 3),
                b2: (0..2).map(|_| dyadic(&mut rng)).collect(),
                activation: crate::model::Activation::Relu,
            };
            let left = dyadic_mat(&mut rng, 4, 2);
            let right = dyadic_mat(&mut rng, 2, 4);
            let routed = route_ffn(&left, &f, &right).unwrap();
            for _ in 0..20 {
                let x: Vec<f64> = (0..4).map(|_| dyadic(&mut rng)).collect();
                let direct = left.matvec(&ffn_forward(&f, &right.matvec(&x)).unwrap());
                assert_eq!(ffn_forward(&routed, &x).unwrap(), direct);
            }
        }
    }

    #[test]
    fn route_attention_round_trips_under_permutation() {
        let d = 3;
        let mut avg = AttentionSpec::<f64>::uniform(d);
        avg.wv = Mat::identity(d);
        avg.masking = Masking::Future;
        avg.weighting = WeightingKind::Ahardmax;

        let perm = Mat::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let inv = perm.transpose();
        let routed = route_attention(&inv, &avg, &perm).unwrap();

        let mut rng = StdRng::seed_from_u64(4);
        let x = SeqMatrix::from_fn(5, d, |_, _| dyadic(&mut rng));
        let (orig, _) = attention_forward(&avg, &x).unwrap();
        let (alt, _) = attention_forward(&routed, &x).unwrap();
        assert_eq!(orig, alt);

        let zeroed = route_attention(&Mat::zeros(d, d), &avg, &Mat::identity(d)).unwrap();
        let (out, _) = attention_forward(&zeroed, &x).unwrap();
        assert!(out.is_zero());

        let unchanged = route_attention(&Mat::identity(d), &avg, &Mat::identity(d)).unwrap();
        assert_eq!(unchanged, avg);
    }

    #[test]
    fn fuse_ffn_sums_parts() {
        let d = 3;
        let f = embed_ffn(d, &build_add::<f64>(), &[0, 1], &[2]).unwrap();
        let g = embed_ffn(d, &build_identity::<f64>(1), &[0], &[1]).unwrap();
        let fused = fuse_ffn(&[f, g]).unwrap();
        let y = ffn_forward(&fused, &[2.0, 3.0, 0.0]).unwrap();
        assert_eq!(y, vec![0.0, 2.0, 5.0]);
    }

    /// Body of width 2w: reads `x`, adds the prefix mean into `m`.
    fn avg_stack(w: usize) -> LayerStack<f64> {
        let d = 2 * w;
        let mut layout = StreamLayout::open();
        let x = layout.allocate("x", w).unwrap();
        let m = layout.allocate("m", w).unwrap();
        let mut attn = AttentionSpec::uniform(d);
        attn.wv = Mat::place(d, &m.indices()).matmul(&Mat::pick(d, &x.indices()));
        attn.masking = Masking::Future;
        let mut stack = LayerStack::new(d, layout);
        stack.layers.push(LayerSpec::plain(attn, build_zero(d)));
        stack
    }

    #[test]
    fn serial_identity_stages() {
        let d = 2;
        let mut layout = StreamLayout::open();
        layout.allocate("x", d).unwrap();
        let mut id_stack = LayerStack::<f64>::new(d, layout);
        id_stack.layers.push(identity_layer(d));
        let twice = serial_compose(&[id_stack.clone(), id_stack]).unwrap();
        assert_eq!(twice.layers.len(), 2);
        let x = SeqMatrix::from_fn(3, d, |i, j| (i + j) as f64);
        let out = run_stream(&twice.into_fragment(), x.clone(), RunOptions::default()).unwrap();
        assert_eq!(out.stream, x);
    }

    #[test]
    fn serial_avg_then_identity_equals_avg() {
        let d = 1;
        let avg = avg_stack(d);
        let mut layout = StreamLayout::open();
        layout.allocate("x", d).unwrap();
        let mut id_stack = LayerStack::<f64>::new(d, layout);
        id_stack.layers.push(identity_layer(d));

        let combined = serial_compose(&[avg.clone(), id_stack]).unwrap();
        let x = SeqMatrix::from_rows(&[vec![1.0], vec![0.0], vec![1.0]]).unwrap();
        let a = run_stream(&avg.into_fragment(), x.clone(), RunOptions::default()).unwrap();
        let b = run_stream(&combined.into_fragment(), x, RunOptions::default()).unwrap();
        assert_eq!(a.stream, b.stream);
    }

    #[test]
    fn parallel_widths_add_and_outputs_concatenate() {
        let a = avg_stack(3);
        let b = avg_stack(5);
        let ab = parallel_compose(&a, &b).unwrap();
        assert_eq!(ab.d, 16);

        let mut rng = StdRng::seed_from_u64(9);
        let n = 4;
        let xa = SeqMatrix::from_fn(n, 6, |_, _| dyadic(&mut rng));
        let xb = SeqMatrix::from_fn(n, 10, |_, _| dyadic(&mut rng));
        let both = Mat::hstack(&[&xa, &xb]);

        let ya = run_stream(&a.into_fragment(), xa, RunOptions::default()).unwrap();
        let yb = run_stream(&b.into_fragment(), xb, RunOptions::default()).unwrap();
        let yab = run_stream(&ab.into_fragment(), both, RunOptions::default()).unwrap();
        assert_eq!(yab.stream, Mat::hstack(&[&ya.stream, &yb.stream]));
    }

    #[test]
    fn parallel_with_zero_body_keeps_top_channels() {
        let a = avg_stack(1);
        let mut layout = StreamLayout::open();
        layout.allocate("z", 1).unwrap();
        let mut zero_body = LayerStack::<f64>::new(1, layout);
        zero_body.layers.push(identity_layer(1));
        let ab = parallel_compose(&a, &zero_body).unwrap();
        assert_eq!(ab.d, 3);

        let x = SeqMatrix::from_rows(&[vec![2.0, 0.0, 0.0], vec![4.0, 0.0, 0.0]]).unwrap();
        let out = run_stream(&ab.into_fragment(), x, RunOptions::default()).unwrap();
        assert_eq!(out.stream.row(0), &[2.0, 2.0, 0.0]);
        assert_eq!(out.stream.row(1), &[4.0, 3.0, 0.0]);
    }

    #[test]
    fn parallel_rejects_norms() {
        let mut a = avg_stack(2);
        a.layers[0].norm_mode = crate::model::NormMode::Post;
        a.layers[0].ffn_norm = Some(crate::model::LayerNormSpec::plain(2, 0.0));
        let b = avg_stack(2);
        assert_eq!(parallel_compose(&a, &b).unwrap_err(), AssembleError::NormPresent);
    }

    #[test]
    fn layout_allocation_examples() {
        let mut l = StreamLayout::with_capacity(8);
        assert_eq!(l.allocate("a", 2).unwrap().offset, 0);
        assert_eq!(l.allocate("b", 3).unwrap().offset, 2);
        assert!(l.allocate("a", 1).is_err());
        assert!(l.allocate("c", 4).is_err());
    }
}
