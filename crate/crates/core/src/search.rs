//! Seeded random instances and hill-climbing extremal search over weights,
//! functions, and Carleson sequences. Searches probe the sharpness of the
//! theorem constants from below; they report best-found values and never
//! claim sharpness.

use crate::dyadic::{
    all_nodes, l2_norm_weighted, node_count, normalize_carleson,
    normalize_matrix_carleson, CarlesonSeq, NodeId, StepField, Weight,
};
use crate::embedding::{bet_sum, cet_sum, redundant_constant};
use crate::error::{Error, Result};
use crate::linalg::{SymMatrix, Vector, EPS_REG};
use crate::maximal::max_poor_memory;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

/// A complete problem instance: weight and function step fields, a scalar
/// Carleson sequence (normalized to constant 1 on generation), optionally a
/// matrix sequence, and the seed it was generated from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "InstanceFile", try_from = "InstanceFile")]
pub struct Instance {
    pub d: usize,
    pub depth: usize,
    pub w: StepField<SymMatrix>,
    pub f: StepField<Vector>,
    pub g: StepField<Vector>,
    pub alpha: CarlesonSeq<f64>,
    pub amat: Option<CarlesonSeq<SymMatrix>>,
    pub seed: u64,
}

impl Instance {
    pub fn weight(&self) -> Result<Weight> {
        Weight::new(self.w.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Instance> {
        serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))
    }
}

/// On-disk schema. Leaf matrices are row-major d*d arrays; alpha is a sparse
/// map keyed by "level,index". The optional "A" map carries a matrix
/// Carleson sequence the same way.
#[derive(Serialize, Deserialize)]
struct InstanceFile {
    d: usize,
    depth: usize,
    #[serde(rename = "W_leaves")]
    w_leaves: Vec<Vec<f64>>,
    f_leaves: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    g_leaves: Option<Vec<Vec<f64>>>,
    alpha: BTreeMap<String, f64>,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none", default)]
    a_mat: Option<BTreeMap<String, Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    seed: Option<u64>,
}

fn node_key(id: NodeId) -> String {
    format!("{},{}", id.level, id.index)
}

fn parse_node_key(key: &str, depth: usize) -> Result<NodeId> {
    let mut parts = key.split(',');
    let (Some(k), Some(j), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::Malformed(format!(
            "alpha key '{key}' is not 'level,index'"
        )));
    };
    let level: usize = k
        .trim()
        .parse()
        .map_err(|_| Error::Malformed(format!("alpha key '{key}': bad level")))?;
    let index: usize = j
        .trim()
        .parse()
        .map_err(|_| Error::Malformed(format!("alpha key '{key}': bad index")))?;
    if level > depth || index >= (1usize << level) {
        return Err(Error::Malformed(format!(
            "alpha key '{key}' outside the depth-{depth} tree"
        )));
    }
    Ok(NodeId::new(level, index))
}

impl From<Instance> for InstanceFile {
    fn from(inst: Instance) -> InstanceFile {
        let mut alpha = BTreeMap::new();
        for (id, &v) in inst.alpha.iter() {
            if v != 0.0 {
                alpha.insert(node_key(id), v);
            }
        }
        let a_mat = inst.amat.as_ref().map(|a| {
            a.iter()
                .filter(|(_, m)| m.op_norm() != 0.0)
                .map(|(id, m)| (node_key(id), m.to_row_major()))
                .collect()
        });
        InstanceFile {
            d: inst.d,
            depth: inst.depth,
            w_leaves: inst.w.leaves().iter().map(|m| m.to_row_major()).collect(),
            f_leaves: inst
                .f
                .leaves()
                .iter()
                .map(|v| v.as_slice().to_vec())
                .collect(),
            g_leaves: Some(
                inst.g
                    .leaves()
                    .iter()
                    .map(|v| v.as_slice().to_vec())
                    .collect(),
            ),
            alpha,
            a_mat,
            seed: Some(inst.seed),
        }
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Instance> {
        let d = file.d;
        let depth = file.depth;
        if d == 0 {
            return Err(Error::Malformed("d must be at least 1".into()));
        }
        if d > 64 {
            return Err(Error::Malformed(format!("d {d} exceeds the cap of 64")));
        }
        if depth > 14 {
            return Err(Error::Malformed(format!(
                "depth {depth} exceeds the cap of 14"
            )));
        }
        let n_leaves = 1usize << depth;
        if file.w_leaves.len() != n_leaves {
            return Err(Error::Malformed(format!(
                "W_leaves has {} entries, expected {}",
                file.w_leaves.len(),
                n_leaves
            )));
        }
        let mut w = Vec::with_capacity(n_leaves);
        for (j, row) in file.w_leaves.iter().enumerate() {
            if row.len() != d * d {
                return Err(Error::Malformed(format!(
                    "W_leaves[{j}] has {} entries, expected {}",
                    row.len(),
                    d * d
                )));
            }
            w.push(SymMatrix::from_row_major(d, row)?);
        }
        let parse_vecs = |name: &str, rows: &[Vec<f64>]| -> Result<Vec<Vector>> {
            if rows.len() != n_leaves {
                return Err(Error::Malformed(format!(
                    "{name} has {} entries, expected {}",
                    rows.len(),
                    n_leaves
                )));
            }
            rows.iter()
                .enumerate()
                .map(|(j, row)| {
                    if row.len() != d {
                        Err(Error::Malformed(format!(
                            "{name}[{j}] has {} entries, expected {}",
                            row.len(),
                            d
                        )))
                    } else {
                        Ok(Vector::from_row_slice(row))
                    }
                })
                .collect()
        };
        let f = parse_vecs("f_leaves", &file.f_leaves)?;
        let g = match &file.g_leaves {
            Some(rows) => parse_vecs("g_leaves", rows)?,
            None => vec![Vector::zeros(d); n_leaves],
        };
        let mut alpha = CarlesonSeq::zeros(depth);
        for (key, &v) in &file.alpha {
            if v < 0.0 {
                return Err(Error::Malformed(format!("alpha[{key}] is negative")));
            }
            alpha.set(parse_node_key(key, depth)?, v);
        }
        let amat = match &file.a_mat {
            None => None,
            Some(map) => {
                let mut seq = CarlesonSeq::fill(depth, SymMatrix::zeros(d));
                for (key, row) in map {
                    seq.set(parse_node_key(key, depth)?, SymMatrix::from_row_major(d, row)?);
                }
                Some(seq)
            }
        };
        Ok(Instance {
            d,
            depth,
            w: StepField::new(depth, w)?,
            f: StepField::new(depth, f)?,
            g: StepField::new(depth, g)?,
            alpha,
            amat,
            seed: file.seed.unwrap_or(0),
        })
    }
}

fn random_gaussian_matrix(d: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        scale * z
    })
}

fn random_vector(d: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn random_weight_leaf(d: usize, spread: f64, rng: &mut ChaCha8Rng) -> SymMatrix {
    let gram = SymMatrix::gram(&random_gaussian_matrix(d, spread, rng));
    let reg = EPS_REG * (1.0 + gram.op_norm());
    gram.add(&SymMatrix::identity(d).scaled(reg))
        .expect("same dimension")
}

/// Seeded random instance: W leaves GG^T + eps Id, Gaussian f and g, alpha
/// uniform nonnegative normalized to Carleson constant 1, and a raw PSD
/// matrix sequence (normalized only where an objective requires it).
pub fn random_instance(d: usize, depth: usize, spread: f64, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_leaves = 1usize << depth;
    let w: Vec<SymMatrix> = (0..n_leaves)
        .map(|_| random_weight_leaf(d, spread, &mut rng))
        .collect();
    let f: Vec<Vector> = (0..n_leaves).map(|_| random_vector(d, &mut rng)).collect();
    let g: Vec<Vector> = (0..n_leaves).map(|_| random_vector(d, &mut rng)).collect();
    let mut alpha = CarlesonSeq::zeros(depth);
    for id in all_nodes(depth) {
        alpha.set(id, rng.random::<f64>());
    }
    let alpha = normalize_carleson(&alpha, 1.0).expect("uniform draws are not all zero");
    let mut amat = CarlesonSeq::fill(depth, SymMatrix::zeros(d));
    for id in all_nodes(depth) {
        amat.set(id, SymMatrix::gram(&random_gaussian_matrix(d, 1.0, &mut rng)));
    }
    Instance {
        d,
        depth,
        w: StepField::new(depth, w).expect("leaf count matches"),
        f: StepField::new(depth, f).expect("leaf count matches"),
        g: StepField::new(depth, g).expect("leaf count matches"),
        alpha,
        amat: Some(amat),
        seed,
    }
}

/// Same shape with the identity weight, for the dimension sweeps.
pub fn random_identity_weight_instance(d: usize, depth: usize, seed: u64) -> Instance {
    let mut inst = random_instance(d, depth, 0.0, seed);
    inst.w = StepField::constant(depth, SymMatrix::identity(d));
    inst
}

/// Search objectives. Ceilings 2 and 4 come with the maximal-function and
/// altered-condition theorems; the embedding ratios have no proven value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// ||M_k^W f|| / ||f||; k defaults to the instance depth.
    Badmax { k: Option<usize> },
    /// The altered-condition constant of (alpha normalized to 1, W).
    Redundant,
    /// bet_sum / (||f|| ||g||) with alpha normalized to 1.
    Bet,
    /// cet_sum / ||f||^2 with the matrix Carleson constant normalized to 1.
    Cet,
}

impl Objective {
    pub fn parse(name: &str) -> Option<Objective> {
        match name {
            "badmax" => Some(Objective::Badmax { k: None }),
            "redundant" => Some(Objective::Redundant),
            "bet" => Some(Objective::Bet),
            "cet" => Some(Objective::Cet),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Objective::Badmax { .. } => "badmax",
            Objective::Redundant => "redundant",
            Objective::Bet => "bet",
            Objective::Cet => "cet",
        }
    }

    pub fn ceiling(&self) -> Option<f64> {
        match self {
            Objective::Badmax { .. } => Some(2.0),
            Objective::Redundant => Some(4.0),
            Objective::Bet | Objective::Cet => None,
        }
    }

    pub fn evaluate(&self, inst: &Instance) -> Result<f64> {
        let w = inst.weight()?;
        self.evaluate_with(inst, &w)
    }

    /// Evaluate against an already-built weight (the hill climber keeps the
    /// weight trees warm across mutations).
    pub fn evaluate_with(&self, inst: &Instance, w: &Weight) -> Result<f64> {
        match self {
            Objective::Badmax { k } => {
                let k = k.unwrap_or(inst.depth);
                let (fields, _) = max_poor_memory(w, &inst.f, k)?;
                let num = crate::dyadic::l2_norm_scalar(&fields[k], None)?;
                let den = l2_norm_weighted(&inst.f, None)?;
                Ok(if den > 0.0 { num / den } else { 0.0 })
            }
            Objective::Redundant => {
                let alpha = normalize_carleson(&inst.alpha, 1.0)?;
                redundant_constant(&alpha, w)
            }
            Objective::Bet => {
                let alpha = normalize_carleson(&inst.alpha, 1.0)?;
                Ok(bet_sum(w, &inst.f, &inst.g, &alpha)?.empirical_b)
            }
            Objective::Cet => {
                let amat = inst
                    .amat
                    .as_ref()
                    .ok_or_else(|| Error::Objective("instance has no matrix sequence".into()))?;
                let amat = normalize_matrix_carleson(amat, w.avg(), 1.0)?;
                let num = cet_sum(w, &inst.f, &amat)?;
                let den = l2_norm_weighted(&inst.f, None)?.powi(2);
                Ok(if den > 0.0 { num / den } else { 0.0 })
            }
        }
    }
}

/// Outcome of a search: the best value found, the witness instance, and the
/// largest value seen across every evaluation (for the ceiling guard).
/// Elapsed time is kept out of the serialized form so reports stay
/// byte-identical across reruns.
#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub objective: String,
    pub best_value: f64,
    pub best: Instance,
    pub trials: u64,
    pub max_evaluated: f64,
    #[serde(skip)]
    pub elapsed: Duration,
}

enum Mutation {
    WeightLeaf(usize),
    FLeaf(usize),
    GLeaf(usize),
    AlphaNode(usize),
    AmatNode(usize),
}

fn mutation_kinds(objective: &Objective) -> &'static [u8] {
    // 0 = W leaf, 1 = f leaf, 2 = g leaf, 3 = alpha node, 4 = A node
    match objective {
        Objective::Badmax { .. } => &[0, 1],
        Objective::Redundant => &[0, 3],
        Objective::Bet => &[0, 1, 2, 3],
        Objective::Cet => &[0, 1, 4],
    }
}

fn lognormal_cholesky_perturbation(
    m: &SymMatrix,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> SymMatrix {
    let d = m.dim();
    match m.as_matrix().clone().cholesky() {
        Some(ch) => {
            let mut l = ch.l();
            for i in 0..d {
                for j in 0..=i {
                    let z: f64 = rng.sample(StandardNormal);
                    l[(i, j)] *= (sigma * z).exp();
                }
            }
            SymMatrix::gram(&l)
        }
        // not SPD enough to factor; nudge toward the identity instead
        None => m
            .add(&SymMatrix::identity(d).scaled(EPS_REG * m.scale()))
            .expect("same dimension"),
    }
}

/// Accept-if-better local search. Each step perturbs one leaf or node
/// (multiplicative log-normal noise on Cholesky factors of matrices,
/// additive Gaussian noise on vector leaves), renormalizes alpha, and keeps
/// the mutation only when the objective improves. Average trees are updated
/// along the mutated leaf's root path rather than rebuilt.
pub fn hill_climb(
    objective: &Objective,
    start: &Instance,
    steps: u64,
    seed: u64,
) -> Result<SearchResult> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = start.clone();
    let mut weight = current.weight()?;
    let wrap = |e: Error, inst: &Instance| {
        Error::Objective(format!("{e}; offending instance: {}", inst.to_json()))
    };
    let mut value = objective
        .evaluate_with(&current, &weight)
        .map_err(|e| wrap(e, &current))?;
    let mut max_evaluated = value;
    let kinds = mutation_kinds(objective);
    let sigma = 0.3;
    let n_leaves = 1usize << current.depth;
    let n_nodes = node_count(current.depth);

    for _ in 0..steps {
        let kind = kinds[rng.random_range(0..kinds.len())];
        let mutation = match kind {
            0 => Mutation::WeightLeaf(rng.random_range(0..n_leaves)),
            1 => Mutation::FLeaf(rng.random_range(0..n_leaves)),
            2 => Mutation::GLeaf(rng.random_range(0..n_leaves)),
            3 => Mutation::AlphaNode(rng.random_range(0..n_nodes)),
            _ => Mutation::AmatNode(rng.random_range(0..n_nodes)),
        };

        // apply, remembering enough to revert
        let mut revert_alpha: Option<CarlesonSeq<f64>> = None;
        let revert: Box<dyn FnOnce(&mut Instance, &mut Weight) -> Result<()>> = match &mutation {
            Mutation::WeightLeaf(j) => {
                let old = current.w.leaf(*j).clone();
                let new = lognormal_cholesky_perturbation(&old, sigma, &mut rng);
                current.w.set_leaf(*j, new.clone());
                weight.update_leaf(*j, new)?;
                let j = *j;
                Box::new(move |inst, w| {
                    inst.w.set_leaf(j, old.clone());
                    w.update_leaf(j, old)
                })
            }
            Mutation::FLeaf(j) => {
                let old = current.f.leaf(*j).clone();
                let new = &old + random_vector(current.d, &mut rng) * sigma;
                current.f.set_leaf(*j, new);
                let j = *j;
                Box::new(move |inst, _| {
                    inst.f.set_leaf(j, old);
                    Ok(())
                })
            }
            Mutation::GLeaf(j) => {
                let old = current.g.leaf(*j).clone();
                let new = &old + random_vector(current.d, &mut rng) * sigma;
                current.g.set_leaf(*j, new);
                let j = *j;
                Box::new(move |inst, _| {
                    inst.g.set_leaf(j, old);
                    Ok(())
                })
            }
            Mutation::AlphaNode(flat) => {
                let old_seq = current.alpha.clone();
                let id = NodeId::from_flat(*flat);
                let z: f64 = rng.sample(StandardNormal);
                let v = *current.alpha.get(id) * (sigma * z).exp();
                current.alpha.set(id, v);
                current.alpha = normalize_carleson(&current.alpha, 1.0)?;
                revert_alpha = Some(old_seq);
                Box::new(move |_, _| Ok(()))
            }
            Mutation::AmatNode(flat) => {
                let seq = current.amat.as_mut().ok_or_else(|| {
                    Error::Objective("instance has no matrix sequence".into())
                })?;
                let id = NodeId::from_flat(*flat);
                let old = seq.get(id).clone();
                let new = lognormal_cholesky_perturbation(&old, sigma, &mut rng);
                seq.set(id, new);
                let flat = *flat;
                Box::new(move |inst, _| {
                    inst.amat
                        .as_mut()
                        .expect("sequence present")
                        .set(NodeId::from_flat(flat), old);
                    Ok(())
                })
            }
        };

        let candidate = objective
            .evaluate_with(&current, &weight)
            .map_err(|e| wrap(e, &current))?;
        max_evaluated = max_evaluated.max(candidate);
        if candidate > value {
            value = candidate;
        } else {
            if let Some(old) = revert_alpha.take() {
                current.alpha = old;
            }
            revert(&mut current, &mut weight)?;
        }
    }

    Ok(SearchResult {
        objective: objective.name().to_string(),
        best_value: value,
        best: current,
        trials: 1,
        max_evaluated,
        elapsed: t0.elapsed(),
    })
}

/// One row of an experiment CSV.
#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub seed: u64,
    pub value: f64,
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 step keyed by the stream index
    let mut z = seed.wrapping_add(0x9E3779B97F4A7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Run `trials` independent seeded searches (random start + hill climb) in
/// parallel and merge by trial index, so the outcome is independent of the
/// worker count.
pub fn run_trials(
    objective: &Objective,
    d: usize,
    depth: usize,
    spread: f64,
    trials: u64,
    steps: u64,
    seed: u64,
) -> Result<(Vec<TrialOutcome>, SearchResult)> {
    let t0 = Instant::now();
    let results: Vec<Result<(TrialOutcome, SearchResult)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive_seed(seed, t);
            let start = random_instance(d, depth, spread, trial_seed);
            let r = hill_climb(objective, &start, steps, derive_seed(trial_seed, 1))?;
            Ok((
                TrialOutcome {
                    trial: t,
                    seed: trial_seed,
                    value: r.best_value,
                },
                r,
            ))
        })
        .collect();

    let mut rows = Vec::with_capacity(trials as usize);
    let mut best: Option<SearchResult> = None;
    let mut max_evaluated = f64::NEG_INFINITY;
    for item in results {
        let (row, r) = item?;
        max_evaluated = max_evaluated.max(r.max_evaluated);
        let replace = best.as_ref().map_or(true, |b| r.best_value > b.best_value);
        if replace {
            best = Some(r);
        }
        rows.push(row);
    }
    let mut best = best.ok_or_else(|| Error::Objective("no trials were run".into()))?;
    best.trials = trials;
    best.max_evaluated = max_evaluated;
    best.elapsed = t0.elapsed();
    Ok((rows, best))
}

/// Zero-pad an instance into a larger ambient dimension: the weight gains an
/// identity block, vectors and matrix-sequence entries gain zero blocks. The
/// objective value of a cet witness is preserved exactly, which makes the
/// dimension sweep nondecreasing by construction.
pub fn embed_in_dimension(inst: &Instance, new_d: usize) -> Result<Instance> {
    if new_d < inst.d {
        return Err(Error::DimensionMismatch {
            left: inst.d,
            right: new_d,
        });
    }
    let old_d = inst.d;
    let pad_matrix = |m: &SymMatrix, with_identity: bool| -> SymMatrix {
        let mut out = DMatrix::zeros(new_d, new_d);
        for i in 0..old_d {
            for j in 0..old_d {
                out[(i, j)] = m.entry(i, j);
            }
        }
        if with_identity {
            for i in old_d..new_d {
                out[(i, i)] = 1.0;
            }
        }
        SymMatrix::from_matrix(out)
    };
    let pad_vector = |v: &Vector| -> Vector {
        let mut out = Vector::zeros(new_d);
        for i in 0..old_d {
            out[i] = v[i];
        }
        out
    };
    let amat = match &inst.amat {
        None => None,
        Some(seq) => {
            let mut out = CarlesonSeq::fill(inst.depth, SymMatrix::zeros(new_d));
            for (id, m) in seq.iter() {
                out.set(id, pad_matrix(m, false));
            }
            Some(out)
        }
    };
    Ok(Instance {
        d: new_d,
        depth: inst.depth,
        w: inst.w.map(|m| pad_matrix(m, true)),
        f: inst.f.map(pad_vector),
        g: inst.g.map(pad_vector),
        alpha: inst.alpha.clone(),
        amat,
        seed: inst.seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRow {
    pub d: usize,
    pub best: f64,
    /// log^2(d) + 1, for visual comparison only.
    pub reference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthTable {
    pub rows: Vec<GrowthRow>,
    pub results: Vec<SearchResult>,
}

/// Best-found cet ratio with the identity weight over ascending dimensions.
/// Each dimension's search is additionally seeded with the previous best
/// witness padded into the larger dimension, so the reported sequence is
/// nondecreasing by construction.
pub fn dim_growth_experiment(
    d_list: &[usize],
    trials_per_d: u64,
    depth: usize,
    steps: u64,
    seed: u64,
) -> Result<GrowthTable> {
    if d_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Malformed("dims must be strictly ascending".into()));
    }
    let objective = Objective::Cet;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    let mut previous_best: Option<Instance> = None;

    for (i, &d) in d_list.iter().enumerate() {
        let dim_seed = derive_seed(seed, i as u64);
        let mut starts: Vec<Instance> = (0..trials_per_d)
            .map(|t| random_identity_weight_instance(d, depth, derive_seed(dim_seed, t)))
            .collect();
        if let Some(prev) = &previous_best {
            starts.push(embed_in_dimension(prev, d)?);
        }
        let climbed: Vec<Result<SearchResult>> = starts
            .par_iter()
            .enumerate()
            .map(|(t, start)| {
                hill_climb(&objective, start, steps, derive_seed(dim_seed, 1000 + t as u64))
            })
            .collect();
        let mut best: Option<SearchResult> = None;
        for r in climbed {
            let r = r?;
            if best.as_ref().map_or(true, |b| r.best_value > b.best_value) {
                best = Some(r);
            }
        }
        let mut best = best.ok_or_else(|| Error::Objective("no trials were run".into()))?;
        best.trials = starts.len() as u64;
        let log_d = (d as f64).ln();
        rows.push(GrowthRow {
            d,
            best: best.best_value,
            reference: log_d * log_d + 1.0,
        });
        previous_best = Some(best.best.clone());
        results.push(best);
    }

    Ok(GrowthTable { rows, results })
}
