use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{KnowledgeGraph, Triplet};
use crate::autodiff::sigmoid;
use crate::error::{Error, Result};
use crate::io_util::{parse_error, read_to_string, write_atomic};

/// Entity and relation vectors scored by the trilinear product
/// `sum_k e_s[k] * w_r[k] * e_o[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistMultModel {
    dim: usize,
    entities: Vec<f64>,
    relations: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistMultConfig {
    pub dim: usize,
    pub epochs: usize,
    pub negatives_per_positive: usize,
    pub learning_rate: f64,
    /// L2 penalty on the vectors touched by each update.
    pub l2: f64,
}

impl Default for DistMultConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            epochs: 100,
            negatives_per_positive: 1,
            learning_rate: 0.1,
            l2: 1e-4,
        }
    }
}

impl DistMultModel {
    pub fn from_parts(dim: usize, entities: Vec<f64>, relations: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("DistMult dimension must be at least 1"));
        }
        if !entities.len().is_multiple_of(dim) || !relations.len().is_multiple_of(dim) {
            return Err(Error::shape("distmult", "vector tables not a multiple of dim"));
        }
        Ok(Self {
            dim,
            entities,
            relations,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len() / self.dim
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len() / self.dim
    }

    pub fn entity(&self, id: usize) -> Result<&[f64]> {
        let d = self.dim;
        self.entities
            .get(id * d..(id + 1) * d)
            .ok_or_else(|| Error::invalid(format!("unknown entity id {id}")))
    }

    pub fn relation(&self, id: usize) -> Result<&[f64]> {
        let d = self.dim;
        self.relations
            .get(id * d..(id + 1) * d)
            .ok_or_else(|| Error::invalid(format!("unknown relation id {id}")))
    }

    pub fn score(&self, t: &Triplet) -> Result<f64> {
        let (s, r, o) = (self.entity(t.subject)?, self.relation(t.relation)?, self.entity(t.object)?);
        Ok(s.iter().zip(r).zip(o).map(|((a, b), c)| a * b * c).sum())
    }

    /// `[e_s; w_r; e_o]`, length `3 * dim`.
    pub fn triplet_vector(&self, t: &Triplet) -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(3 * self.dim);
        v.extend_from_slice(self.entity(t.subject)?);
        v.extend_from_slice(self.relation(t.relation)?);
        v.extend_from_slice(self.entity(t.object)?);
        Ok(v)
    }

    /// Text export: a `distmult <dim>` header followed by one
    /// `e|r<TAB>name<TAB>values` line per vector.
    pub fn save(&self, graph: &KnowledgeGraph, path: &Path) -> Result<()> {
        let mut buf = format!("distmult {}\n", self.dim);
        for (kind, names, table) in [
            ("e", graph.entities(), &self.entities),
            ("r", graph.relations(), &self.relations),
        ] {
            for (i, name) in names.iter().enumerate() {
                write!(buf, "{kind}\t{name}\t").unwrap();
                let row: Vec<String> = table[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .map(|v| v.to_string())
                    .collect();
                buf.push_str(&row.join(" "));
                buf.push('\n');
            }
        }
        write_atomic(path, buf.as_bytes())
    }

    /// Reads a model written by [`DistMultModel::save`], laying vectors out
    /// in `graph`'s id order. Every graph name must be present.
    pub fn load(graph: &KnowledgeGraph, path: &Path) -> Result<Self> {
        let contents = read_to_string(path)?;
        let mut lines = contents.lines().enumerate();
        let dim = match lines.next().map(|(_, l)| l.split_whitespace().collect::<Vec<_>>()) {
            Some(h) if h.len() == 2 && h[0] == "distmult" => h[1]
                .parse::<usize>()
                .map_err(|_| parse_error(path, 1, "bad dimension"))?,
            _ => return Err(parse_error(path, 1, "expected `distmult <dim>` header")),
        };
        let mut ents: HashMap<String, Vec<f64>> = HashMap::new();
        let mut rels: HashMap<String, Vec<f64>> = HashMap::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut f = line.splitn(3, '\t');
            let (Some(kind), Some(name), Some(vals)) = (f.next(), f.next(), f.next()) else {
                return Err(parse_error(path, i + 1, "expected kind, name and values"));
            };
            let v: Vec<f64> = vals
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| parse_error(path, i + 1, "unparseable value"))?;
            if v.len() != dim {
                return Err(parse_error(path, i + 1, format!("expected {dim} values")));
            }
            match kind {
                "e" => ents.insert(name.to_string(), v),
                "r" => rels.insert(name.to_string(), v),
                _ => return Err(parse_error(path, i + 1, "kind must be `e` or `r`")),
            };
        }
        let gather = |names: &[String], map: &HashMap<String, Vec<f64>>| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(names.len() * dim);
            for n in names {
                let v = map
                    .get(n)
                    .ok_or_else(|| Error::MissingResource(format!("no vector for `{n}` in {}", path.display())))?;
                out.extend_from_slice(v);
            }
            Ok(out)
        };
        Self::from_parts(dim, gather(graph.entities(), &ents)?, gather(graph.relations(), &rels)?)
    }
}

/// Per-epoch mean logistic loss recorded during training.
#[derive(Clone, Debug)]
pub struct DistMultTraining {
    pub model: DistMultModel,
    pub epoch_losses: Vec<f64>,
}

/// Trains DistMult with logistic loss over each positive fact and
/// `negatives_per_positive` corruptions (subject or object replaced by a
/// uniformly drawn entity, avoiding known facts), using AdaGrad updates.
pub fn train_distmult<R: Rng + ?Sized>(
    graph: &KnowledgeGraph,
    config: &DistMultConfig,
    rng: &mut R,
) -> Result<DistMultTraining> {
    if config.dim == 0 {
        return Err(Error::invalid("DistMult dimension must be at least 1"));
    }
    if graph.triplets().is_empty() {
        return Err(Error::invalid("cannot train DistMult on an empty triplet set"));
    }
    let d = config.dim;
    let scale = 1.0 / (d as f64).sqrt();
    let mut init = |n: usize| -> Vec<f64> { (0..n * d).map(|_| rng.random_range(-scale..scale)).collect() };
    let mut model = DistMultModel::from_parts(
        d,
        init(graph.entity_count()),
        init(graph.relation_count()),
    )?;
    let mut ent_acc = vec![0.0; model.entities.len()];
    let mut rel_acc = vec![0.0; model.relations.len()];

    let n_ent = graph.entity_count();
    let mut order: Vec<usize> = (0..graph.triplets().len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        let mut count = 0usize;
        for &ti in &order {
            let pos = graph.triplets()[ti];
            let mut batch = vec![(pos, 1.0)];
            for _ in 0..config.negatives_per_positive {
                if let Some(neg) = corrupt(graph, &pos, n_ent, rng) {
                    batch.push((neg, -1.0));
                }
            }
            for (t, label) in batch {
                total += sgd_step(&mut model, &mut ent_acc, &mut rel_acc, &t, label, config)?;
                count += 1;
            }
        }
        epoch_losses.push(total / count as f64);
    }
    Ok(DistMultTraining {
        model,
        epoch_losses,
    })
}

fn corrupt<R: Rng + ?Sized>(
    graph: &KnowledgeGraph,
    pos: &Triplet,
    n_ent: usize,
    rng: &mut R,
) -> Option<Triplet> {
    if n_ent < 2 {
        return None;
    }
    for _ in 0..10 {
        let mut t = *pos;
        let e = rng.random_range(0..n_ent);
        if rng.random_bool(0.5) {
            t.subject = e;
        } else {
            t.object = e;
        }
        if !graph.contains(&t) {
            return Some(t);
        }
    }
    None
}

/// One AdaGrad step on `softplus(-label * score)`; returns the loss before
/// the update.
fn sgd_step(
    model: &mut DistMultModel,
    ent_acc: &mut [f64],
    rel_acc: &mut [f64],
    t: &Triplet,
    label: f64,
    cfg: &DistMultConfig,
) -> Result<f64> {
    let d = model.dim;
    let score = model.score(t)?;
    let margin = label * score;
    let loss = softplus(-margin);
    // d loss / d score
    let g = -label * sigmoid(-margin);

    let s = model.entity(t.subject)?.to_vec();
    let r = model.relation(t.relation)?.to_vec();
    let o = model.entity(t.object)?.to_vec();
    let mut gs: Vec<f64> = (0..d).map(|k| g * r[k] * o[k] + cfg.l2 * s[k]).collect();
    let gr: Vec<f64> = (0..d).map(|k| g * s[k] * o[k] + cfg.l2 * r[k]).collect();
    let go: Vec<f64> = (0..d).map(|k| g * s[k] * r[k] + cfg.l2 * o[k]).collect();
    if t.subject == t.object {
        for k in 0..d {
            gs[k] += go[k];
        }
    }

    let apply = |table: &mut [f64], acc: &mut [f64], id: usize, grad: &[f64]| {
        let rows = id * d..(id + 1) * d;
        for ((w, a), g) in table[rows.clone()].iter_mut().zip(&mut acc[rows]).zip(grad) {
            *a += g * g;
            *w -= cfg.learning_rate * g / (a.sqrt() + 1e-10);
        }
    };
    apply(&mut model.entities, ent_acc, t.subject, &gs);
    if t.subject != t.object {
        apply(&mut model.entities, ent_acc, t.object, &go);
    }
    apply(&mut model.relations, rel_acc, t.relation, &gr);
    Ok(loss)
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}
