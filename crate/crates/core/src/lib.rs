//! Construction kit for exact transformer weight programs.
//!
//! The crate emits transformer weights that implement arithmetic, logic,
//! routing, lookup, and formal-language recognition exactly (or with a
//! stated approximation bound), and pairs them with a minimal reference
//! interpreter and brute-force oracles that verify every construction at
//! desk scale.
//!
//! Module map:
//! - [`model`] — weight-level data model, validation, positional encodings,
//!   stream layout, versioned JSON wire format;
//! - [`interp`] — reference interpreter with full traces;
//! - [`ffn`] — feed-forward recipe builders;
//! - [`attn`] — attention recipe builders (lookup, predecessor,
//!   tie-breaking, sharpening, head merging);
//! - [`norm`] — layernorm tools (hash, amplification, paired encodings);
//! - [`assemble`] — routing and serial/parallel composition;
//! - [`programs`] — end-to-end induction-head and Dyck programs;
//! - [`oracles`] — independent brute-force ground truth.

pub mod assemble;
pub mod attn;
pub mod ffn;
pub mod interp;
pub mod la;
pub mod model;
pub mod norm;
pub mod oracles;
pub mod programs;
pub mod scalar;

pub use la::{Mat, SeqMatrix};
pub use scalar::Scalar;

// Concrete f64 aliases — the working precision of the CLI and the
// verification suites.
pub type Mat64 = Mat<f64>;
pub type SeqMatrix64 = SeqMatrix<f64>;
pub type AttentionSpec64 = model::AttentionSpec<f64>;
pub type FfnSpec64 = model::FfnSpec<f64>;
pub type LayerNormSpec64 = model::LayerNormSpec<f64>;
pub type LayerSpec64 = model::LayerSpec<f64>;
pub type TransformerSpec64 = model::TransformerSpec<f64>;
pub type LayerStack64 = assemble::LayerStack<f64>;
