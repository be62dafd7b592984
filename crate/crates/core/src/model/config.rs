use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which knowledge feeds the word-level attention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnowledgeMode {
    /// Plain BiLSTM + sentence attention; the word-level layer is skipped.
    Disabled,
    /// Knowledge-graph facts embedded with DistMult.
    Kg,
    /// Distributional-thesaurus expansions with word vectors.
    Dt,
}

impl fmt::Display for KnowledgeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Disabled => "disabled",
            Self::Kg => "kg",
            Self::Dt => "dt",
        })
    }
}

impl FromStr for KnowledgeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disabled" | "none" => Ok(Self::Disabled),
            "kg" => Ok(Self::Kg),
            "dt" => Ok(Self::Dt),
            _ => Err(Error::Config(format!("unknown knowledge mode `{s}`"))),
        }
    }
}

/// How the knowledge-aware vector joins the hidden state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fusion {
    /// `h_hat = m + h`; needs the term dimension to equal `2 * hidden`.
    #[default]
    Add,
    /// `h_hat = [h; m]`, widening everything downstream.
    Concat,
}

impl fmt::Display for Fusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Add => "add",
            Self::Concat => "concat",
        })
    }
}

impl FromStr for Fusion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" => Ok(Self::Add),
            "concat" => Ok(Self::Concat),
            _ => Err(Error::Config(format!("unknown fusion `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Word-vector width fed to the BiLSTM.
    pub input_dim: usize,
    /// Units per LSTM direction.
    pub hidden_dim: usize,
    /// Length of the sentence-attention context vector.
    pub context_dim: usize,
    /// Width of every relevant-term vector.
    pub knowledge_dim: usize,
    pub knowledge: KnowledgeMode,
    #[serde(default)]
    pub fusion: Fusion,
}

impl NetworkConfig {
    /// The published sizes: 300-d inputs, 150 units per direction, a 300-d
    /// context vector and 300-d relevant terms.
    pub fn published_default(knowledge: KnowledgeMode) -> Self {
        Self {
            input_dim: 300,
            hidden_dim: 150,
            context_dim: 300,
            knowledge_dim: 300,
            knowledge,
            fusion: Fusion::Add,
        }
    }

    /// Width of `h_t`.
    pub fn encoded_dim(&self) -> usize {
        2 * self.hidden_dim
    }

    /// Width of `h_hat_t` and of the sentence vector.
    pub fn fused_dim(&self) -> usize {
        match (self.knowledge, self.fusion) {
            (KnowledgeMode::Disabled, _) | (_, Fusion::Add) => self.encoded_dim(),
            (_, Fusion::Concat) => self.encoded_dim() + self.knowledge_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("input_dim", self.input_dim),
            ("hidden_dim", self.hidden_dim),
            ("context_dim", self.context_dim),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.knowledge != KnowledgeMode::Disabled {
            if self.knowledge_dim == 0 {
                return Err(Error::Config("knowledge_dim must be positive".into()));
            }
            if self.fusion == Fusion::Add && self.knowledge_dim != self.encoded_dim() {
                return Err(Error::Config(format!(
                    "additive fusion needs knowledge_dim ({}) == 2 * hidden_dim ({})",
                    self.knowledge_dim,
                    self.encoded_dim()
                )));
            }
        }
        Ok(())
    }
}
