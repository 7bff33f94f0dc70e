//! The three maximal operators on the dyadic tree.
//!
//! * `max_scalar_doob`: the classical dyadic maximal function with scalar
//!   measure w, sup over ancestors of |<fw>_Q / <w>_Q|.
//! * `max_usual`: the matrix-weighted maximal function, per point the sup of
//!   ||W^(1/2)(x) <W>_Q^-1 <W^(1/2) f>_Q|| over the ancestors Q of x, plus
//!   the linearization selection (per leaf the largest attaining cube).
//! * `max_poor_memory`: the adapted process that remembers a single interval
//!   per atom and switches only when the local competitor strictly wins.

use crate::dyadic::{build_averages, NodeId, NodeTree, StepField, Weight};
use crate::error::{Error, Result};
use crate::linalg::{quad_form, SymMatrix, Vector};
use std::collections::BTreeMap;

/// Averages of the vector field x -> S(x) f(x) for a matrix step field S
/// (used with S = W^(1/2) and S = W^(-1/2)).
pub(crate) fn transformed_averages(
    s: &StepField<SymMatrix>,
    f: &StepField<Vector>,
) -> Result<NodeTree<Vector>> {
    let field = s.zip(f, |m, v| m.as_matrix() * v)?;
    Ok(build_averages(&field))
}

/// Per-leaf record of the largest (smallest-level) cube attaining the sup in
/// `max_usual`. The induced sets E_Q partition the leaves by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxSelection {
    depth: usize,
    attaining: Vec<NodeId>,
}

impl MaxSelection {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn attaining(&self) -> &[NodeId] {
        &self.attaining
    }

    /// Group the leaves into the disjoint sets E_Q (only non-empty ones).
    pub fn cells(&self) -> BTreeMap<NodeId, Vec<usize>> {
        let mut cells: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for (leaf, q) in self.attaining.iter().enumerate() {
            cells.entry(*q).or_default().push(leaf);
        }
        cells
    }
}

/// Classical dyadic maximal function with measure w: per leaf the sup over
/// ancestors Q of |<fw>_Q| / <w>_Q.
pub fn max_scalar_doob(w: &StepField<f64>, f: &StepField<f64>) -> Result<StepField<f64>> {
    if w.depth() != f.depth() {
        return Err(Error::DepthMismatch {
            left: w.depth(),
            right: f.depth(),
        });
    }
    for (j, &v) in w.leaves().iter().enumerate() {
        if v <= 0.0 {
            return Err(Error::NonpositiveWeight { index: j, value: v });
        }
    }
    let n = f.depth();
    let fw = f.zip(w, |a, b| a * b)?;
    let fw_avg = build_averages(&fw);
    let w_avg = build_averages(w);
    let mut out = Vec::with_capacity(1 << n);
    for j in 0..(1usize << n) {
        let leaf = NodeId::new(n, j);
        let mut best = 0.0f64;
        for k in 0..=n {
            let q = leaf.ancestor_at(k);
            let ratio = (fw_avg.node(q) / w_avg.node(q)).abs();
            best = best.max(ratio);
        }
        out.push(best);
    }
    StepField::new(n, out)
}

/// The matrix-weighted maximal function of `w` applied to `f`, together with
/// the attaining-cube selection. Ties select the larger cube.
pub fn max_usual(w: &Weight, f: &StepField<Vector>) -> Result<(StepField<f64>, MaxSelection)> {
    if w.depth() != f.depth() {
        return Err(Error::DepthMismatch {
            left: w.depth(),
            right: f.depth(),
        });
    }
    let n = f.depth();
    let tf = transformed_averages(w.sqrt_field(), f)?;
    // h_Q = <W>_Q^-1 <W^(1/2) f>_Q, once per node
    let mut h: Vec<Vector> = Vec::with_capacity(crate::dyadic::node_count(n));
    for (id, v) in tf.iter() {
        h.push(w.avg().node(id).sym_inv()?.mul_vec(v)?);
    }
    let mut values = Vec::with_capacity(1 << n);
    let mut attaining = Vec::with_capacity(1 << n);
    for j in 0..(1usize << n) {
        let leaf = NodeId::new(n, j);
        let wsx = w.sqrt_field().leaf(j);
        let mut best = f64::NEG_INFINITY;
        let mut best_q = NodeId::root();
        for k in 0..=n {
            let q = leaf.ancestor_at(k);
            let val = wsx.mul_vec(&h[q.flat()])?.norm();
            if val > best {
                best = val;
                best_q = q;
            }
        }
        values.push(best);
        attaining.push(best_q);
    }
    Ok((
        StepField::new(n, values)?,
        MaxSelection {
            depth: n,
            attaining,
        },
    ))
}

/// Linearization identity: sum over Q of
/// < <W>_{E_Q} |E_Q| <W>_Q^-1 f_Q , <W>_Q^-1 f_Q >, which by disjointness of
/// the E_Q equals ||M^W f||_{L2}^2.
pub fn max_usual_norm_oracle(
    w: &Weight,
    f: &StepField<Vector>,
    sel: &MaxSelection,
) -> Result<f64> {
    let n = f.depth();
    if sel.depth != n || sel.attaining.len() != (1usize << n) {
        return Err(Error::SelectionMismatch);
    }
    for (j, q) in sel.attaining.iter().enumerate() {
        if !q.contains(&NodeId::new(n, j)) {
            return Err(Error::SelectionMismatch);
        }
    }
    let tf = transformed_averages(w.sqrt_field(), f)?;
    let leaf_measure = NodeId::new(n, 0).measure();
    let mut total = 0.0;
    for (q, leaves) in sel.cells() {
        // <W>_{E_Q} |E_Q| = sum of |leaf| W(leaf) over the cell
        let mut mass = SymMatrix::zeros(w.dim());
        for j in leaves {
            mass = mass.add(&w.field().leaf(j).scaled(leaf_measure))?;
        }
        let h = w.avg().node(q).sym_inv()?.mul_vec(tf.node(q))?;
        total += quad_form(&mass, &h, &h)?;
    }
    Ok(total)
}

/// The interval memory of the poor-memory maximal process: for each level k
/// and atom Q in D_k, the selected interval K_k(Q).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryMap {
    levels: Vec<Vec<NodeId>>,
}

impl MemoryMap {
    pub fn k_max(&self) -> usize {
        self.levels.len() - 1
    }

    /// K_k(Q) for the atom Q = (k, j).
    pub fn get(&self, k: usize, j: usize) -> NodeId {
        self.levels[k][j]
    }

    /// Structural invariants: K_0(Q0) = Q0; K_k(Q) is Q or the parent's
    /// interval; always an ancestor-or-self of Q.
    pub fn validate(&self) -> Result<()> {
        if self.levels[0] != vec![NodeId::root()] {
            return Err(Error::CaseMismatch {
                node: NodeId::root(),
            });
        }
        for k in 1..self.levels.len() {
            for j in 0..self.levels[k].len() {
                let q = NodeId::new(k, j);
                let chosen = self.levels[k][j];
                let inherited = self.levels[k - 1][j / 2];
                if chosen != q && chosen != inherited {
                    return Err(Error::CaseMismatch { node: q });
                }
                if !chosen.contains(&q) {
                    return Err(Error::CaseMismatch { node: q });
                }
            }
        }
        Ok(())
    }
}

/// Local competitor norm ||<W>_Q^(-1/2) <W^(1/2) f>_Q||.
pub(crate) fn local_competitor(
    w: &Weight,
    tf: &NodeTree<Vector>,
    q: NodeId,
) -> Result<f64> {
    Ok(w.avg().node(q).inv_sqrt()?.mul_vec(tf.node(q))?.norm())
}

/// The vector L = <W>_Q^(1/2) <W>_K^-1 <W^(1/2) f>_K for an atom Q with
/// remembered interval K. For K = Q the product collapses to <W>_Q^(-1/2),
/// evaluated that way so the norm agrees bitwise with the local competitor.
pub(crate) fn memory_vector(
    w: &Weight,
    tf: &NodeTree<Vector>,
    q: NodeId,
    k: NodeId,
) -> Result<Vector> {
    if k == q {
        return w.avg().node(q).inv_sqrt()?.mul_vec(tf.node(q));
    }
    let h = w.avg().node(k).sym_inv()?.mul_vec(tf.node(k))?;
    w.avg().node(q).sym_sqrt()?.mul_vec(&h)
}

/// The poor-memory maximal process up to time k_max. Returns one depth-k
/// step field per level k = 0..=k_max (the process is adapted, so level k is
/// constant on atoms of D_k) and the memory map of selected intervals.
pub fn max_poor_memory(
    w: &Weight,
    f: &StepField<Vector>,
    k_max: usize,
) -> Result<(Vec<StepField<f64>>, MemoryMap)> {
    if w.depth() != f.depth() {
        return Err(Error::DepthMismatch {
            left: w.depth(),
            right: f.depth(),
        });
    }
    if k_max > f.depth() {
        return Err(Error::Malformed(format!(
            "k_max {} exceeds depth {}",
            k_max,
            f.depth()
        )));
    }
    let tf = transformed_averages(w.sqrt_field(), f)?;

    let mut levels: Vec<Vec<NodeId>> = Vec::with_capacity(k_max + 1);
    let mut fields: Vec<StepField<f64>> = Vec::with_capacity(k_max + 1);

    let root_value = local_competitor(w, &tf, NodeId::root())?;
    levels.push(vec![NodeId::root()]);
    fields.push(StepField::new(0, vec![root_value])?);

    for k in 1..=k_max {
        let mut row = Vec::with_capacity(1 << k);
        let mut vals = Vec::with_capacity(1 << k);
        for j in 0..(1usize << k) {
            let q = NodeId::new(k, j);
            let inherited_k = levels[k - 1][j / 2];
            let local = local_competitor(w, &tf, q)?;
            let inherited = memory_vector(w, &tf, q, inherited_k)?.norm();
            // strict ">" switches to Q; equality keeps the inherited interval
            if local > inherited {
                row.push(q);
            } else {
                row.push(inherited_k);
            }
            vals.push(local.max(inherited));
        }
        levels.push(row);
        fields.push(StepField::new(k, vals)?);
    }

    Ok((fields, MemoryMap { levels }))
}
