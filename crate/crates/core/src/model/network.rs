use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{Fusion, KnowledgeMode, NetworkConfig};
use crate::autodiff::{ParamStore, Tape, Tensor, Var};
use crate::checkpoint::Checkpoint;
use crate::corpus::EmbeddingTable;
use crate::error::{Error, Result};
use crate::knowledge::{KnowledgeSource, RelevantTermSet};

pub const CHECKPOINT_KIND: &str = "layered-attention";

/// Model-ready view of one sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceInput {
    pub tokens: Vec<String>,
    /// One input vector per token (zeros for OOV).
    pub embeddings: Vec<Vec<f64>>,
    /// Relevant terms per token; empty sets mean no knowledge.
    pub knowledge: Vec<RelevantTermSet>,
}

impl SentenceInput {
    pub fn prepare<S: AsRef<str>>(
        tokens: &[S],
        words: &EmbeddingTable,
        knowledge: &KnowledgeSource,
    ) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::invalid("sentence has no tokens"));
        }
        Ok(Self {
            tokens: tokens.iter().map(|t| t.as_ref().to_string()).collect(),
            embeddings: tokens.iter().map(|t| words.lookup_or_zero(t.as_ref())).collect(),
            knowledge: knowledge.lookup_all(tokens)?,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermWeight {
    pub term: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenAttention {
    pub token: String,
    /// Sentence-level weight of this token.
    pub weight: f64,
    /// Word-level weights over the token's relevant terms.
    pub terms: Vec<TermWeight>,
}

/// Both attention layers' weights for one sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionRecord {
    pub tokens: Vec<TokenAttention>,
}

/// Nodes recorded by one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub score: Var,
    /// `h_t`, length `2H` each.
    pub hidden: Vec<Var>,
    /// `m_t` per token, `None` where the token had no knowledge.
    pub knowledge: Vec<Option<Var>>,
    /// Word-level weights per token, `None` where the token had no knowledge.
    pub word_weights: Vec<Option<Var>>,
    /// `h_hat_t`.
    pub fused: Vec<Var>,
    pub sentence_vector: Var,
    pub sentence_weights: Var,
}

impl ForwardPass {
    pub fn attention(&self, tape: &Tape, input: &SentenceInput) -> AttentionRecord {
        let sw = tape.value(self.sentence_weights).data();
        let tokens = input
            .tokens
            .iter()
            .enumerate()
            .map(|(t, tok)| TokenAttention {
                token: tok.clone(),
                weight: sw[t],
                terms: match self.word_weights[t] {
                    Some(w) => input.knowledge[t]
                        .terms
                        .iter()
                        .zip(tape.value(w).data())
                        .map(|(term, &weight)| TermWeight {
                            term: term.label.clone(),
                            weight,
                        })
                        .collect(),
                    None => Vec::new(),
                },
            })
            .collect();
        AttentionRecord { tokens }
    }
}

/// Inverted-dropout settings for a training forward pass.
pub struct Dropout<'a, R: Rng + ?Sized> {
    pub rate: f64,
    pub rng: &'a mut R,
}

/// BiLSTM encoder with knowledge-aware word attention, sentence attention
/// and a tanh regression head.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionNetwork {
    pub config: NetworkConfig,
    pub params: ParamStore,
}

const DIRECTIONS: [&str; 2] = ["encoder.fwd", "encoder.bwd"];
pub const W_V: &str = "word_attention.w_v";
pub const W_S: &str = "sentence_attention.w_s";
pub const U_S: &str = "sentence_attention.u_s";
pub const HEAD_W: &str = "head.w";
pub const HEAD_B: &str = "head.b";

impl AttentionNetwork {
    /// Fresh parameters: Glorot-uniform matrices, zero biases, forget-gate
    /// bias 1. Draws happen in parameter-declaration order.
    pub fn new<R: Rng + ?Sized>(config: NetworkConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let (e, h, c, f) = (
            config.input_dim,
            config.hidden_dim,
            config.context_dim,
            config.fused_dim(),
        );
        let mut p = ParamStore::new();
        for dir in DIRECTIONS {
            p.insert_glorot(format!("{dir}.w_ih"), 4 * h, e, rng);
            p.insert_glorot(format!("{dir}.w_hh"), 4 * h, h, rng);
            let mut bias = vec![0.0; 4 * h];
            bias[h..2 * h].fill(1.0);
            p.insert(format!("{dir}.b"), Tensor::vector(bias));
        }
        if config.knowledge != KnowledgeMode::Disabled {
            p.insert_glorot(W_V, 2 * h, config.knowledge_dim, rng);
        }
        p.insert_glorot(W_S, f, c, rng);
        let u_s = p_vector(c, 1, rng);
        p.insert(U_S, u_s);
        let head = p_vector(f, 1, rng);
        p.insert(HEAD_W, head);
        p.insert(HEAD_B, Tensor::scalar(0.0));
        Ok(Self { config, params: p })
    }

    /// Sets the output head to zero, so every prediction is exactly 0.
    pub fn zero_head(&mut self) {
        for name in [HEAD_W, HEAD_B] {
            if let Ok(t) = self.params.get_mut(name) {
                t.data_mut().fill(0.0);
            }
        }
    }

    /// Records the full forward computation on `tape`.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        params: &ParamStore,
        input: &SentenceInput,
        mut dropout: Option<Dropout<'_, R>>,
    ) -> Result<ForwardPass> {
        let cfg = &self.config;
        if input.embeddings.len() != input.tokens.len() || input.knowledge.len() != input.tokens.len() {
            return Err(Error::shape("forward", "tokens, embeddings and knowledge differ in length"));
        }
        let hidden = encode(tape, params, cfg, &input.embeddings)?;

        let use_knowledge = cfg.knowledge != KnowledgeMode::Disabled;
        let w_v_t = if use_knowledge && input.knowledge.iter().any(|k| !k.is_empty()) {
            let w_v = tape.param(params, W_V)?;
            Some(tape.transpose(w_v)?)
        } else {
            None
        };

        let mut knowledge = Vec::with_capacity(hidden.len());
        let mut word_weights = Vec::with_capacity(hidden.len());
        let mut fused = Vec::with_capacity(hidden.len());
        for (t, &h_t) in hidden.iter().enumerate() {
            let (m_t, alpha) = match (use_knowledge, w_v_t) {
                (true, Some(wt)) => match word_attention(tape, h_t, &input.knowledge[t], wt, cfg.knowledge_dim)? {
                    Some((m, a)) => (Some(m), Some(a)),
                    None => (None, None),
                },
                _ => (None, None),
            };
            let fused_t = if use_knowledge {
                fuse(tape, h_t, m_t, cfg.fusion, cfg.knowledge_dim)?
            } else {
                h_t
            };
            let fused_t = match dropout.as_mut() {
                Some(d) => tape.dropout(fused_t, d.rate, true, &mut *d.rng)?,
                None => fused_t,
            };
            knowledge.push(m_t);
            word_weights.push(alpha);
            fused.push(fused_t);
        }

        let (sentence_vector, sentence_weights) = sentence_attention(tape, params, &fused)?;
        let pooled = match dropout.as_mut() {
            Some(d) => tape.dropout(sentence_vector, d.rate, true, &mut *d.rng)?,
            None => sentence_vector,
        };
        let w = tape.param(params, HEAD_W)?;
        let b = tape.param(params, HEAD_B)?;
        let z = tape.dot(w, pooled)?;
        let z = tape.add(z, b)?;
        let score = tape.tanh(z)?;
        Ok(ForwardPass {
            score,
            hidden,
            knowledge,
            word_weights,
            fused,
            sentence_vector,
            sentence_weights,
        })
    }

    /// Inference: score in (-1, 1) plus both attention layers' weights.
    pub fn predict(&self, input: &SentenceInput) -> Result<(f64, AttentionRecord)> {
        let mut tape = Tape::new();
        let pass = self.forward::<crate::Rng>(&mut tape, &self.params, input, None)?;
        let score = tape.value(pass.score).data()[0];
        Ok((score, pass.attention(&tape, input)))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let c = &self.config;
        Checkpoint::new(CHECKPOINT_KIND, self.params.clone())
            .with_meta("input_dim", c.input_dim)
            .with_meta("hidden_dim", c.hidden_dim)
            .with_meta("context_dim", c.context_dim)
            .with_meta("knowledge_dim", c.knowledge_dim)
            .with_meta("knowledge", c.knowledge)
            .with_meta("fusion", c.fusion)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.kind != CHECKPOINT_KIND {
            return Err(Error::Config(format!(
                "checkpoint kind `{}` is not `{CHECKPOINT_KIND}`",
                ck.kind
            )));
        }
        let config = NetworkConfig {
            input_dim: ck.meta_parse("input_dim")?,
            hidden_dim: ck.meta_parse("hidden_dim")?,
            context_dim: ck.meta_parse("context_dim")?,
            knowledge_dim: ck.meta_parse("knowledge_dim")?,
            knowledge: ck.meta_parse("knowledge")?,
            fusion: ck.meta_parse("fusion")?,
        };
        config.validate()?;
        let reference = Self::new(config.clone(), &mut crate::seeded_rng(0))?;
        for (name, t) in reference.params.iter() {
            let got = ck.params.get(name)?;
            if got.shape() != t.shape() {
                return Err(Error::Config(format!(
                    "checkpoint parameter `{name}` has shape {:?}, expected {:?}",
                    got.shape(),
                    t.shape()
                )));
            }
        }
        Ok(Self {
            config,
            params: ck.params.clone(),
        })
    }
}

fn p_vector<R: Rng + ?Sized>(len: usize, fan_out: usize, rng: &mut R) -> Tensor {
    let limit = (6.0 / (len + fan_out) as f64).sqrt();
    Tensor::vector((0..len).map(|_| rng.random_range(-limit..=limit)).collect())
}

/// Runs both LSTM directions and returns `h_t = [fwd_t; bwd_t]` per token.
pub fn encode(
    tape: &mut Tape,
    params: &ParamStore,
    cfg: &NetworkConfig,
    embeddings: &[Vec<f64>],
) -> Result<Vec<Var>> {
    let t_len = embeddings.len();
    if t_len == 0 {
        return Err(Error::invalid("cannot encode an empty sequence"));
    }
    let e = cfg.input_dim;
    if let Some(bad) = embeddings.iter().find(|v| v.len() != e) {
        return Err(Error::shape(
            "encode",
            format!("token vector of length {} but input_dim is {e}", bad.len()),
        ));
    }
    let x = tape.constant(Tensor::matrix(t_len, e, embeddings.concat())?)?;
    let fwd = lstm_direction(tape, params, DIRECTIONS[0], cfg.hidden_dim, x, t_len, false)?;
    let bwd = lstm_direction(tape, params, DIRECTIONS[1], cfg.hidden_dim, x, t_len, true)?;
    fwd.into_iter()
        .zip(bwd)
        .map(|(f, b)| tape.concat(&[f, b]))
        .collect()
}

/// One LSTM pass over the rows of `x` (`[T, E]`), gate order i, f, g, o.
/// Returns hidden states indexed by original position.
fn lstm_direction(
    tape: &mut Tape,
    params: &ParamStore,
    prefix: &str,
    h: usize,
    x: Var,
    t_len: usize,
    reverse: bool,
) -> Result<Vec<Var>> {
    let w_ih = tape.param(params, &format!("{prefix}.w_ih"))?;
    let w_hh = tape.param(params, &format!("{prefix}.w_hh"))?;
    let b = tape.param(params, &format!("{prefix}.b"))?;
    // [T, 4H] input projections, computed once for the whole sequence
    let w_ih_t = tape.transpose(w_ih)?;
    let proj = tape.matmul(x, w_ih_t)?;

    let mut h_prev = tape.constant(Tensor::zeros(&[h]))?;
    let mut c_prev = tape.constant(Tensor::zeros(&[h]))?;
    let mut out = vec![h_prev; t_len];
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..t_len).rev())
    } else {
        Box::new(0..t_len)
    };
    for t in order {
        let xin = tape.row(proj, t)?;
        let rec = tape.matvec(w_hh, h_prev)?;
        let gates = tape.add(xin, rec)?;
        let gates = tape.add(gates, b)?;
        let i = tape.slice(gates, 0, h)?;
        let i = tape.sigmoid(i)?;
        let f = tape.slice(gates, h, h)?;
        let f = tape.sigmoid(f)?;
        let g = tape.slice(gates, 2 * h, h)?;
        let g = tape.tanh(g)?;
        let o = tape.slice(gates, 3 * h, h)?;
        let o = tape.sigmoid(o)?;
        let keep = tape.mul(f, c_prev)?;
        let write = tape.mul(i, g)?;
        let c = tape.add(keep, write)?;
        let c_act = tape.tanh(c)?;
        let h_t = tape.mul(o, c_act)?;
        out[t] = h_t;
        h_prev = h_t;
        c_prev = c;
    }
    Ok(out)
}

/// Word-level attention for one token: logits `h_t^T W_v v_i`, softmax over
/// the token's terms, `m_t = sum_i alpha_i v_i`. Takes `W_v^T` (`[D_k, 2H]`).
/// Returns `None` for an empty term set.
pub fn word_attention(
    tape: &mut Tape,
    h_t: Var,
    terms: &RelevantTermSet,
    w_v_t: Var,
    knowledge_dim: usize,
) -> Result<Option<(Var, Var)>> {
    if terms.is_empty() {
        return Ok(None);
    }
    let n = terms.len();
    if let Some(bad) = terms.terms.iter().find(|t| t.vector.len() != knowledge_dim) {
        return Err(Error::shape(
            "word_attention",
            format!("term `{}` has dimension {}, expected {knowledge_dim}", bad.label, bad.vector.len()),
        ));
    }
    let flat: Vec<f64> = terms.terms.iter().flat_map(|t| t.vector.iter().copied()).collect();
    let v = tape.constant(Tensor::matrix(n, knowledge_dim, flat.clone())?)?;
    let v_t = tape.constant(Tensor::matrix(knowledge_dim, n, transpose(&flat, n, knowledge_dim))?)?;
    let q = tape.matvec(w_v_t, h_t)?;
    let logits = tape.matvec(v, q)?;
    let alpha = tape.softmax(logits)?;
    let m_t = tape.matvec(v_t, alpha)?;
    Ok(Some((m_t, alpha)))
}

/// `h_hat_t`: `m_t + h_t` (or `[h_t; m_t]`). A missing `m_t` counts as
/// zero, and with additive fusion returns `h_t` itself.
pub fn fuse(
    tape: &mut Tape,
    h_t: Var,
    m_t: Option<Var>,
    fusion: Fusion,
    knowledge_dim: usize,
) -> Result<Var> {
    match (fusion, m_t) {
        (Fusion::Add, Some(m)) => tape.add(m, h_t),
        (Fusion::Add, None) => Ok(h_t),
        (Fusion::Concat, Some(m)) => tape.concat(&[h_t, m]),
        (Fusion::Concat, None) => {
            let z = tape.constant(Tensor::zeros(&[knowledge_dim]))?;
            tape.concat(&[h_t, z])
        }
    }
}

/// Sentence-level attention: logits `h_hat_t^T W_s u_s`, softmax over
/// tokens, `H = sum_t alpha_t h_hat_t`. Returns `(H, alpha)`.
pub fn sentence_attention(tape: &mut Tape, params: &ParamStore, fused: &[Var]) -> Result<(Var, Var)> {
    if fused.is_empty() {
        return Err(Error::invalid("sentence attention over an empty sequence"));
    }
    let w_s = tape.param(params, W_S)?;
    let u_s = tape.param(params, U_S)?;
    let z = tape.matvec(w_s, u_s)?;
    let stacked = tape.stack_rows(fused)?;
    let logits = tape.matvec(stacked, z)?;
    let alpha = tape.softmax(logits)?;
    let stacked_t = tape.transpose(stacked)?;
    let pooled = tape.matvec(stacked_t, alpha)?;
    Ok((pooled, alpha))
}

fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}
