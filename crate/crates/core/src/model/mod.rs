//! The two-layered attention network.
//!
//! Each token's word vector goes through a BiLSTM (`h_t`). The word-level
//! attention weighs the token's relevant-term vectors against `h_t` to form
//! a knowledge-aware vector `m_t`, which is added to `h_t`. The sentence-level
//! attention then pools the fused vectors against a learned context vector,
//! and a tanh unit maps the pooled vector to a score in (-1, 1).

mod config;
mod network;

pub use config::{Fusion, KnowledgeMode, NetworkConfig};
pub use network::{
    encode, fuse, sentence_attention, word_attention, AttentionNetwork, AttentionRecord, Dropout,
    ForwardPass, SentenceInput, TermWeight, TokenAttention, CHECKPOINT_KIND, HEAD_B, HEAD_W, U_S,
    W_S, W_V,
};
