//! Evaluators for the embedding theorems: the bilinear sum and its proof
//! chain, the linear matrix-measure sum, the altered Carleson condition, the
//! Choquet level-set identity, and the A2 characteristic.

use crate::dyadic::{
    all_nodes, carleson_constant, l2_norm_weighted, CarlesonSeq, NodeId, StepField,
    Weight,
};
use crate::error::{Error, Result};
use crate::linalg::{quad_form, SymMatrix, Vector};
use crate::maximal::{max_usual, transformed_averages};
use serde::{Deserialize, Serialize};

/// Everything the bilinear sum evaluation produces in one pass: the sum, the
/// term-wise Cauchy-Schwarz majorant, the two maximal-function bounds from
/// the proof chain, the empirical ratio, and the Carleson constant used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetReport {
    pub bet_sum: f64,
    pub larger_sum: f64,
    pub phi_integral: f64,
    pub maximal_product_bound: f64,
    #[serde(rename = "empirical_B")]
    pub empirical_b: f64,
    #[serde(rename = "carleson_A")]
    pub carleson_a: f64,
}

struct BilinearFactors {
    /// <W>_Q^-1 <W^(1/2) f>_Q per node
    uf: Vec<Vector>,
    /// <W^-1>_Q^-1 <W^(-1/2) g>_Q per node
    vg: Vec<Vector>,
}

impl BilinearFactors {
    fn new(w: &Weight, f: &StepField<Vector>, g: &StepField<Vector>) -> Result<Self> {
        if f.depth() != w.depth() || g.depth() != w.depth() {
            return Err(Error::DepthMismatch {
                left: w.depth(),
                right: f.depth().max(g.depth()),
            });
        }
        let tf = transformed_averages(w.sqrt_field(), f)?;
        let tg = transformed_averages(w.inv_sqrt_field(), g)?;
        let mut uf = Vec::new();
        let mut vg = Vec::new();
        for id in all_nodes(w.depth()) {
            uf.push(w.avg().node(id).sym_inv()?.mul_vec(tf.node(id))?);
            vg.push(w.inv_avg().node(id).sym_inv()?.mul_vec(tg.node(id))?);
        }
        Ok(BilinearFactors { uf, vg })
    }

    fn f_value(&self, q: NodeId) -> f64 {
        self.uf[q.flat()].dot(&self.vg[q.flat()]).abs()
    }
}

/// F(Q) = |< <W>_Q^-1 <W^(1/2) f>_Q , <W^-1>_Q^-1 <W^(-1/2) g>_Q >|.
pub fn bet_f(
    w: &Weight,
    f: &StepField<Vector>,
    g: &StepField<Vector>,
    q: NodeId,
) -> Result<f64> {
    let factors = BilinearFactors::new(w, f, g)?;
    Ok(factors.f_value(q))
}

/// The bilinear embedding sum sum_Q alpha_Q F(Q) together with its proof
/// chain: the pointwise product integral of the two maximal functions and
/// the product of their L2 norms.
pub fn bet_sum(
    w: &Weight,
    f: &StepField<Vector>,
    g: &StepField<Vector>,
    alpha: &CarlesonSeq<f64>,
) -> Result<BetReport> {
    if alpha.depth() != w.depth() {
        return Err(Error::DepthMismatch {
            left: alpha.depth(),
            right: w.depth(),
        });
    }
    let n = w.depth();
    let factors = BilinearFactors::new(w, f, g)?;

    let mut sum = 0.0;
    let mut larger = 0.0;
    for id in all_nodes(n) {
        let a = *alpha.get(id);
        sum += a * factors.f_value(id);
        larger += a * factors.uf[id.flat()].norm() * factors.vg[id.flat()].norm();
    }

    let (mf, _) = max_usual(w, f)?;
    let w_inv = w.inverse();
    let (mg, _) = max_usual(&w_inv, g)?;
    let leaf_measure = NodeId::new(n, 0).measure();
    let mut phi = 0.0;
    for (a, b) in mf.leaves().iter().zip(mg.leaves()) {
        phi += leaf_measure * a * b;
    }
    let mf_norm = crate::dyadic::l2_norm_scalar(&mf, None)?;
    let mg_norm = crate::dyadic::l2_norm_scalar(&mg, None)?;

    let f_norm = l2_norm_weighted(f, None)?;
    let g_norm = l2_norm_weighted(g, None)?;
    let denom = f_norm * g_norm;
    let empirical_b = if denom > 0.0 { sum / denom } else { 0.0 };

    Ok(BetReport {
        bet_sum: sum,
        larger_sum: larger,
        phi_integral: phi,
        maximal_product_bound: mf_norm * mg_norm,
        empirical_b,
        carleson_a: carleson_constant(alpha),
    })
}

/// The term-wise norm-product sum: sum_Q alpha_Q ||<W>_Q^-1 <W^(1/2) f>_Q||
/// * ||<W^-1>_Q^-1 <W^(-1/2) g>_Q||. Dominates the bilinear sum term by term.
pub fn larger_sum(
    w: &Weight,
    f: &StepField<Vector>,
    g: &StepField<Vector>,
    alpha: &CarlesonSeq<f64>,
) -> Result<f64> {
    let factors = BilinearFactors::new(w, f, g)?;
    let mut total = 0.0;
    for id in all_nodes(w.depth()) {
        total += *alpha.get(id) * factors.uf[id.flat()].norm() * factors.vg[id.flat()].norm();
    }
    Ok(total)
}

/// The linear matrix-measure embedding sum
/// sum_Q ||A_Q^(1/2) <W^(1/2) f>_Q||^2.
pub fn cet_sum(
    w: &Weight,
    f: &StepField<Vector>,
    a: &CarlesonSeq<SymMatrix>,
) -> Result<f64> {
    if a.depth() != w.depth() || f.depth() != w.depth() {
        return Err(Error::DepthMismatch {
            left: w.depth(),
            right: a.depth().max(f.depth()),
        });
    }
    let tf = transformed_averages(w.sqrt_field(), f)?;
    let mut total = 0.0;
    for id in all_nodes(w.depth()) {
        let fq = tf.node(id);
        // ||A^(1/2) v||^2 = <A v, v>, clamped against PSD rounding
        total += quad_form(a.get(id), fq, fq)?.max(0.0);
    }
    Ok(total)
}

/// Least constant C with |K|^-1 sum_{Q in D(K)} alpha_Q <W^-1>_Q^-1 <= C <W>_K
/// over all K, for a normalized scalar sequence. The altered-condition bound
/// asserts C <= 4 whenever the Carleson constant of alpha is at most 1.
pub fn redundant_constant(alpha: &CarlesonSeq<f64>, w: &Weight) -> Result<f64> {
    let c = carleson_constant(alpha);
    if c > 1.0 + 1e-9 {
        return Err(Error::NotNormalized { constant: c });
    }
    if alpha.depth() != w.depth() {
        return Err(Error::DepthMismatch {
            left: alpha.depth(),
            right: w.depth(),
        });
    }
    let depth = w.depth();
    let d = w.dim();
    let count = crate::dyadic::node_count(depth);
    let mut subtree: Vec<SymMatrix> = vec![SymMatrix::zeros(d); count];
    let mut best = 0.0f64;
    for flat in (0..count).rev() {
        let id = NodeId::from_flat(flat);
        let mut s = w.inv_avg().node(id).sym_inv()?.scaled(*alpha.get(id));
        if id.level < depth {
            let (l, r) = id.children();
            s = s.add(&subtree[l.flat()])?.add(&subtree[r.flat()])?;
        }
        let pinch = w.avg().node(id).inv_sqrt()?;
        let value = s.scaled(1.0 / id.measure()).congruence(&pinch)?.max_eigenvalue();
        best = best.max(value);
        subtree[flat] = s;
    }
    Ok(best.max(0.0))
}

/// Level-set evaluation of the Choquet integral against the direct sum.
/// Returns (lhs, rhs) with lhs = int_0^inf mu({F > lambda}) dlambda computed
/// by sorting the distinct values and summing rectangle areas, and
/// rhs = sum F(Q) alpha_Q.
pub fn choquet_check(f_values: &[f64], alpha: &[f64]) -> (f64, f64) {
    assert_eq!(f_values.len(), alpha.len(), "per-node slices must align");
    let rhs: f64 = f_values.iter().zip(alpha).map(|(f, a)| f * a).sum();

    let mut pairs: Vec<(f64, f64)> = f_values
        .iter()
        .copied()
        .zip(alpha.iter().copied())
        .filter(|(f, _)| *f > 0.0)
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // Walk the distinct levels from the top: mu({F > lambda}) is constant on
    // each gap between consecutive distinct values.
    let mut lhs = 0.0;
    let mut mass_above = 0.0; // sum of alpha over F(Q) strictly above the cursor
    let mut upper = f64::INFINITY;
    let mut i = pairs.len();
    while i > 0 {
        let v = pairs[i - 1].0;
        let mut mass_at = 0.0;
        while i > 0 && pairs[i - 1].0 == v {
            mass_at += pairs[i - 1].1;
            i -= 1;
        }
        if upper.is_finite() {
            lhs += (upper - v) * mass_above;
        }
        mass_above += mass_at;
        upper = v;
    }
    if upper.is_finite() {
        lhs += upper * mass_above;
    }
    (lhs, rhs)
}

/// [W]_{A2} = max over nodes of ||<W>_Q^(1/2) <W^-1>_Q^(1/2)||^2, evaluated
/// through the symmetric congruence <W^-1>^(1/2) <W>_Q <W^-1>^(1/2).
pub fn a2_characteristic(w: &Weight) -> Result<f64> {
    let mut best = 0.0f64;
    for id in all_nodes(w.depth()) {
        let inv_sqrt_avg = w.inv_avg().node(id).sym_sqrt()?;
        let pinched = w.avg().node(id).congruence(&inv_sqrt_avg)?;
        best = best.max(pinched.max_eigenvalue());
    }
    Ok(best)
}

/// The linearization sequence A_Q = <W>_Q^-1 <W>_{E_Q} |E_Q| <W>_Q^-1 built
/// from a maximal-function selection; feeding it to `cet_sum` reproduces
/// ||M^W f||^2.
pub fn linearization_sequence(
    w: &Weight,
    sel: &crate::maximal::MaxSelection,
) -> Result<CarlesonSeq<SymMatrix>> {
    let n = w.depth();
    if sel.depth() != n {
        return Err(Error::SelectionMismatch);
    }
    let leaf_measure = NodeId::new(n, 0).measure();
    let mut seq = CarlesonSeq::fill(n, SymMatrix::zeros(w.dim()));
    for (q, leaves) in sel.cells() {
        let mut mass = SymMatrix::zeros(w.dim());
        for j in leaves {
            mass = mass.add(&w.field().leaf(j).scaled(leaf_measure))?;
        }
        let inv = w.avg().node(q).sym_inv()?;
        seq.set(q, mass.congruence(&inv)?);
    }
    Ok(seq)
}
