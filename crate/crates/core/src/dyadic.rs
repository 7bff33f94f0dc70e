//! The finite dyadic tree on Q0 = [0,1].
//!
//! A depth-n tree has leaf atoms at level n (each of measure 2^-n) and one
//! node per dyadic interval of level 0..=n. Step functions are stored by
//! their leaf values; conditional averages are one bottom-up midpoint pass.

use crate::error::{Error, Result};
use crate::linalg::{quad_form, SymMatrix, Vector, EPS_REG, TAU_PSD};
use std::fmt;

/// A dyadic interval [j*2^-k, (j+1)*2^-k), addressed by (level, index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub level: usize,
    pub index: usize,
}

impl NodeId {
    pub fn new(level: usize, index: usize) -> Self {
        debug_assert!(index < (1usize << level));
        NodeId { level, index }
    }

    pub fn root() -> Self {
        NodeId { level: 0, index: 0 }
    }

    pub fn measure(&self) -> f64 {
        (0.5f64).powi(self.level as i32)
    }

    pub fn parent(&self) -> Option<NodeId> {
        if self.level == 0 {
            None
        } else {
            Some(NodeId::new(self.level - 1, self.index / 2))
        }
    }

    pub fn children(&self) -> (NodeId, NodeId) {
        (
            NodeId::new(self.level + 1, 2 * self.index),
            NodeId::new(self.level + 1, 2 * self.index + 1),
        )
    }

    /// The level-k ancestor (k <= level); k == level returns self.
    pub fn ancestor_at(&self, k: usize) -> NodeId {
        debug_assert!(k <= self.level);
        NodeId::new(k, self.index >> (self.level - k))
    }

    /// Ancestor-or-self relation: does `self` contain `other`?
    pub fn contains(&self, other: &NodeId) -> bool {
        other.level >= self.level && other.ancestor_at(self.level) == *self
    }

    /// Flat heap position: level-major, 2^k - 1 + j.
    pub fn flat(&self) -> usize {
        (1usize << self.level) - 1 + self.index
    }

    pub fn from_flat(flat: usize) -> NodeId {
        let level = (flat + 1).ilog2() as usize;
        NodeId::new(level, flat + 1 - (1 << level))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.level, self.index)
    }
}

/// Number of nodes of a depth-n tree (levels 0..=n).
pub fn node_count(depth: usize) -> usize {
    (1usize << (depth + 1)) - 1
}

/// Iterate all nodes of a depth-n tree, level-major then by index.
pub fn all_nodes(depth: usize) -> impl Iterator<Item = NodeId> {
    (0..node_count(depth)).map(NodeId::from_flat)
}

/// Values a step field can carry: scalars, vectors, symmetric matrices.
pub trait FieldValue: Clone {
    fn mean(a: &Self, b: &Self) -> Self;
}

impl FieldValue for f64 {
    fn mean(a: &Self, b: &Self) -> Self {
        0.5 * (a + b)
    }
}

impl FieldValue for Vector {
    fn mean(a: &Self, b: &Self) -> Self {
        (a + b) * 0.5
    }
}

impl FieldValue for SymMatrix {
    fn mean(a: &Self, b: &Self) -> Self {
        a.add(b).expect("mean of equal-dimension matrices").scaled(0.5)
    }
}

/// A step function on [0,1]: one value per leaf atom of the depth-n tree.
#[derive(Debug, Clone, PartialEq)]
pub struct StepField<V> {
    depth: usize,
    leaves: Vec<V>,
}

impl<V: FieldValue> StepField<V> {
    pub fn new(depth: usize, leaves: Vec<V>) -> Result<Self> {
        if leaves.len() != (1usize << depth) {
            return Err(Error::Malformed(format!(
                "expected {} leaves at depth {}, got {}",
                1usize << depth,
                depth,
                leaves.len()
            )));
        }
        Ok(StepField { depth, leaves })
    }

    pub fn constant(depth: usize, v: V) -> Self {
        StepField {
            depth,
            leaves: vec![v; 1 << depth],
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn leaf(&self, j: usize) -> &V {
        &self.leaves[j]
    }

    pub fn leaves(&self) -> &[V] {
        &self.leaves
    }

    pub fn set_leaf(&mut self, j: usize, v: V) {
        self.leaves[j] = v;
    }

    pub fn map<U: FieldValue>(&self, f: impl Fn(&V) -> U) -> StepField<U> {
        StepField {
            depth: self.depth,
            leaves: self.leaves.iter().map(f).collect(),
        }
    }

    pub fn zip<U: FieldValue, W: FieldValue>(
        &self,
        other: &StepField<U>,
        f: impl Fn(&V, &U) -> W,
    ) -> Result<StepField<W>> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch {
                left: self.depth,
                right: other.depth,
            });
        }
        Ok(StepField {
            depth: self.depth,
            leaves: self
                .leaves
                .iter()
                .zip(other.leaves.iter())
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }
}

/// Per-node storage over a depth-n tree. Built from a step field it holds the
/// conditional averages <.>_Q; level-n entries coincide with the leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTree<V> {
    depth: usize,
    nodes: Vec<V>,
}

impl<V: FieldValue> NodeTree<V> {
    /// Bottom-up midpoint recursion over the leaves.
    pub fn averages(field: &StepField<V>) -> Self {
        let depth = field.depth();
        let mut nodes: Vec<Option<V>> = vec![None; node_count(depth)];
        for (j, v) in field.leaves().iter().enumerate() {
            nodes[NodeId::new(depth, j).flat()] = Some(v.clone());
        }
        for k in (0..depth).rev() {
            for j in 0..(1usize << k) {
                let id = NodeId::new(k, j);
                let (l, r) = id.children();
                let m = V::mean(
                    nodes[l.flat()].as_ref().unwrap(),
                    nodes[r.flat()].as_ref().unwrap(),
                );
                nodes[id.flat()] = Some(m);
            }
        }
        NodeTree {
            depth,
            nodes: nodes.into_iter().map(Option::unwrap).collect(),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node(&self, id: NodeId) -> &V {
        &self.nodes[id.flat()]
    }

    pub fn root(&self) -> &V {
        &self.nodes[0]
    }

    /// Replace leaf j and re-aggregate the averages along its root path.
    pub fn update_leaf(&mut self, j: usize, v: V) {
        let mut id = NodeId::new(self.depth, j);
        self.nodes[id.flat()] = v;
        while let Some(p) = id.parent() {
            let (l, r) = p.children();
            self.nodes[p.flat()] = V::mean(&self.nodes[l.flat()], &self.nodes[r.flat()]);
            id = p;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &V)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(f, v)| (NodeId::from_flat(f), v))
    }
}

/// Conditional averages of a step field over every node of the tree.
pub fn build_averages<V: FieldValue>(field: &StepField<V>) -> NodeTree<V> {
    NodeTree::averages(field)
}

/// One value per tree node: nonnegative scalars alpha_Q, or PSD matrices A_Q.
#[derive(Debug, Clone, PartialEq)]
pub struct CarlesonSeq<T> {
    depth: usize,
    values: Vec<T>,
}

impl<T: Clone> CarlesonSeq<T> {
    pub fn new(depth: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != node_count(depth) {
            return Err(Error::Malformed(format!(
                "expected {} node values at depth {}, got {}",
                node_count(depth),
                depth,
                values.len()
            )));
        }
        Ok(CarlesonSeq { depth, values })
    }

    pub fn fill(depth: usize, v: T) -> Self {
        CarlesonSeq {
            depth,
            values: vec![v; node_count(depth)],
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn get(&self, id: NodeId) -> &T {
        &self.values[id.flat()]
    }

    pub fn set(&mut self, id: NodeId, v: T) {
        self.values[id.flat()] = v;
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &T)> {
        self.values
            .iter()
            .enumerate()
            .map(|(f, v)| (NodeId::from_flat(f), v))
    }
}

impl CarlesonSeq<f64> {
    pub fn zeros(depth: usize) -> Self {
        CarlesonSeq::fill(depth, 0.0)
    }
}

/// Carleson constant: max over nodes K of |K|^-1 * sum_{Q in D(K)} alpha_Q,
/// with D(K) the subtree of K including K itself.
pub fn carleson_constant(alpha: &CarlesonSeq<f64>) -> f64 {
    let depth = alpha.depth();
    let mut subtree = vec![0.0f64; node_count(depth)];
    let mut best = 0.0f64;
    for flat in (0..node_count(depth)).rev() {
        let id = NodeId::from_flat(flat);
        let mut s = *alpha.get(id);
        if id.level < depth {
            let (l, r) = id.children();
            s += subtree[l.flat()] + subtree[r.flat()];
        }
        subtree[flat] = s;
        best = best.max(s / id.measure());
    }
    best
}

/// Least A with |K|^-1 sum_{Q in D(K)} <W>_Q A_Q <W>_Q <= A <W>_K at every K.
pub fn matrix_carleson_constant(
    a: &CarlesonSeq<SymMatrix>,
    w_avg: &NodeTree<SymMatrix>,
) -> Result<f64> {
    if a.depth() != w_avg.depth() {
        return Err(Error::DepthMismatch {
            left: a.depth(),
            right: w_avg.depth(),
        });
    }
    let depth = a.depth();
    let d = w_avg.root().dim();
    let mut subtree: Vec<SymMatrix> = vec![SymMatrix::zeros(d); node_count(depth)];
    let mut best = 0.0f64;
    for flat in (0..node_count(depth)).rev() {
        let id = NodeId::from_flat(flat);
        let wq = w_avg.node(id);
        let mut s = a.get(id).congruence(wq)?;
        if id.level < depth {
            let (l, r) = id.children();
            s = s.add(&subtree[l.flat()])?.add(&subtree[r.flat()])?;
        }
        let wk_inv_sqrt = wq.inv_sqrt()?;
        let pinched = s.scaled(1.0 / id.measure()).congruence(&wk_inv_sqrt)?;
        best = best.max(pinched.max_eigenvalue());
        subtree[flat] = s;
    }
    Ok(best.max(0.0))
}

/// Scale alpha uniformly so its Carleson constant equals `target` exactly
/// (the constant is homogeneous of degree one in alpha).
pub fn normalize_carleson(alpha: &CarlesonSeq<f64>, target: f64) -> Result<CarlesonSeq<f64>> {
    let c = carleson_constant(alpha);
    if c <= 0.0 {
        return Err(Error::ZeroSequence);
    }
    let s = target / c;
    Ok(CarlesonSeq {
        depth: alpha.depth(),
        values: alpha.values().iter().map(|a| a * s).collect(),
    })
}

/// Matrix variant of `normalize_carleson`: scales every A_Q by the same factor.
pub fn normalize_matrix_carleson(
    a: &CarlesonSeq<SymMatrix>,
    w_avg: &NodeTree<SymMatrix>,
    target: f64,
) -> Result<CarlesonSeq<SymMatrix>> {
    let c = matrix_carleson_constant(a, w_avg)?;
    if c <= 0.0 {
        return Err(Error::ZeroSequence);
    }
    let s = target / c;
    Ok(CarlesonSeq {
        depth: a.depth(),
        values: a.values().iter().map(|m| m.scaled(s)).collect(),
    })
}

/// Weighted L2 norm of a vector step field: (sum |leaf| <W f, f>)^(1/2);
/// without a weight, the unweighted L2 norm.
pub fn l2_norm_weighted(
    f: &StepField<Vector>,
    w: Option<&StepField<SymMatrix>>,
) -> Result<f64> {
    let measure = NodeId::new(f.depth(), 0).measure();
    let mut total = 0.0;
    match w {
        None => {
            for v in f.leaves() {
                total += measure * v.norm_squared();
            }
        }
        Some(w) => {
            if w.depth() != f.depth() {
                return Err(Error::DepthMismatch {
                    left: w.depth(),
                    right: f.depth(),
                });
            }
            for (v, m) in f.leaves().iter().zip(w.leaves()) {
                total += measure * quad_form(m, v, v)?;
            }
        }
    }
    Ok(total.max(0.0).sqrt())
}

/// Scalar counterpart: (sum |leaf| w f^2)^(1/2), or the unweighted L2 norm.
pub fn l2_norm_scalar(f: &StepField<f64>, w: Option<&StepField<f64>>) -> Result<f64> {
    let measure = NodeId::new(f.depth(), 0).measure();
    let mut total = 0.0;
    match w {
        None => {
            for v in f.leaves() {
                total += measure * v * v;
            }
        }
        Some(w) => {
            if w.depth() != f.depth() {
                return Err(Error::DepthMismatch {
                    left: w.depth(),
                    right: f.depth(),
                });
            }
            for (v, wv) in f.leaves().iter().zip(w.leaves()) {
                total += measure * wv * v * v;
            }
        }
    }
    Ok(total.max(0.0).sqrt())
}

/// A matrix weight with everything the formulas need precomputed: the
/// regularized leaves, their pointwise inverse / square roots, and the
/// average trees of both W and W^-1. <W^-1>_Q is built from the leafwise
/// inverse field, since it differs from <W>_Q^-1.
#[derive(Debug, Clone)]
pub struct Weight {
    field: StepField<SymMatrix>,
    inv_field: StepField<SymMatrix>,
    sqrt_field: StepField<SymMatrix>,
    inv_sqrt_field: StepField<SymMatrix>,
    avg: NodeTree<SymMatrix>,
    inv_avg: NodeTree<SymMatrix>,
}

/// Bring a weight leaf to a safely SPD state. Leaves below the PSD floor are
/// rejected; leaves above it but with smallest eigenvalue under
/// eps_reg * scale are shifted up to that mark; healthy leaves pass through
/// unchanged.
fn regularize_leaf(m: &SymMatrix) -> Result<SymMatrix> {
    let scale = m.scale();
    let min = m.min_eigenvalue();
    if min < -TAU_PSD * scale {
        return Err(Error::NotPsd { min_eig: min });
    }
    let floor = EPS_REG * scale;
    if min < floor {
        m.add(&SymMatrix::identity(m.dim()).scaled(floor - min))
    } else {
        Ok(m.clone())
    }
}

impl Weight {
    pub fn new(field: StepField<SymMatrix>) -> Result<Self> {
        let depth = field.depth();
        let d = field.leaf(0).dim();
        let mut leaves = Vec::with_capacity(field.len());
        for (j, leaf) in field.leaves().iter().enumerate() {
            if leaf.dim() != d {
                return Err(Error::DimensionMismatch {
                    left: d,
                    right: leaf.dim(),
                });
            }
            let reg = regularize_leaf(leaf).map_err(|e| match e {
                Error::NotPsd { min_eig } => Error::NotPsdLeaf { index: j, min_eig },
                other => other,
            })?;
            leaves.push(reg);
        }
        let field = StepField::new(depth, leaves)?;
        let inv_field = try_map(&field, SymMatrix::sym_inv)?;
        let sqrt_field = try_map(&field, SymMatrix::sym_sqrt)?;
        let inv_sqrt_field = try_map(&field, SymMatrix::inv_sqrt)?;
        let avg = NodeTree::averages(&field);
        let inv_avg = NodeTree::averages(&inv_field);
        Ok(Weight {
            field,
            inv_field,
            sqrt_field,
            inv_sqrt_field,
            avg,
            inv_avg,
        })
    }

    pub fn identity(d: usize, depth: usize) -> Self {
        Weight::new(StepField::constant(depth, SymMatrix::identity(d)))
            .expect("identity weight is SPD")
    }

    /// Scalar weight as a 1x1 matrix weight.
    pub fn from_scalar(w: &StepField<f64>) -> Result<Self> {
        for (j, &v) in w.leaves().iter().enumerate() {
            if v <= 0.0 {
                return Err(Error::NonpositiveWeight { index: j, value: v });
            }
        }
        Weight::new(w.map(|&v| SymMatrix::from_diagonal(&[v])))
    }

    /// Swap the roles of W and W^-1. Exact: the dual weight's leaves are the
    /// already-materialized leafwise inverses.
    pub fn inverse(&self) -> Weight {
        Weight {
            field: self.inv_field.clone(),
            inv_field: self.field.clone(),
            sqrt_field: self.inv_sqrt_field.clone(),
            inv_sqrt_field: self.sqrt_field.clone(),
            avg: self.inv_avg.clone(),
            inv_avg: self.avg.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.field.leaf(0).dim()
    }

    pub fn depth(&self) -> usize {
        self.field.depth()
    }

    pub fn field(&self) -> &StepField<SymMatrix> {
        &self.field
    }

    pub fn inv_field(&self) -> &StepField<SymMatrix> {
        &self.inv_field
    }

    pub fn sqrt_field(&self) -> &StepField<SymMatrix> {
        &self.sqrt_field
    }

    pub fn inv_sqrt_field(&self) -> &StepField<SymMatrix> {
        &self.inv_sqrt_field
    }

    /// <W>_Q for every node.
    pub fn avg(&self) -> &NodeTree<SymMatrix> {
        &self.avg
    }

    /// <W^-1>_Q for every node.
    pub fn inv_avg(&self) -> &NodeTree<SymMatrix> {
        &self.inv_avg
    }

    /// Replace leaf j and re-aggregate both average trees along its path.
    pub fn update_leaf(&mut self, j: usize, m: SymMatrix) -> Result<()> {
        let reg = regularize_leaf(&m).map_err(|e| match e {
            Error::NotPsd { min_eig } => Error::NotPsdLeaf { index: j, min_eig },
            other => other,
        })?;
        let inv = reg.sym_inv()?;
        let sqrt = reg.sym_sqrt()?;
        let inv_sqrt = reg.inv_sqrt()?;
        self.field.set_leaf(j, reg.clone());
        self.inv_field.set_leaf(j, inv.clone());
        self.sqrt_field.set_leaf(j, sqrt);
        self.inv_sqrt_field.set_leaf(j, inv_sqrt);
        self.avg.update_leaf(j, reg);
        self.inv_avg.update_leaf(j, inv);
        Ok(())
    }
}

fn try_map(
    field: &StepField<SymMatrix>,
    f: impl Fn(&SymMatrix) -> Result<SymMatrix>,
) -> Result<StepField<SymMatrix>> {
    let mut leaves = Vec::with_capacity(field.len());
    for leaf in field.leaves() {
        leaves.push(f(leaf)?);
    }
    StepField::new(field.depth(), leaves)
}
