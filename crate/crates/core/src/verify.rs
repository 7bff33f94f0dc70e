//! Seeded property suites over random instances: every inequality the crate
//! implements, run end to end. The CLI's `verify` command is a thin wrapper
//! around `run_suites`.

use crate::bellman::{bmax_certificate, bred_certificate, CertReport, CheckStat, Recorder, Violation};
use crate::dyadic::{
    all_nodes, build_averages, l2_norm_scalar, normalize_carleson, FieldValue, NodeId, StepField,
    Weight,
};
use crate::embedding::{a2_characteristic, bet_sum, choquet_check, larger_sum, redundant_constant};
use crate::error::Result;
use crate::linalg::{psd_leq_slack, quad_form, SymMatrix, Vector};
use crate::maximal::{max_poor_memory, max_scalar_doob, max_usual, max_usual_norm_oracle};
use crate::search::{random_instance, Instance};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Everything `run_suites` needs; embedded verbatim in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub d: usize,
    pub depth: usize,
    pub seed: u64,
    pub trials: u64,
    pub spread: f64,
    /// Sampled Bellman domain states per instance.
    pub samples: usize,
    /// When set, replaces every suite tolerance.
    pub tolerance: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            d: 3,
            depth: 6,
            seed: 42,
            trials: 100,
            spread: 1.0,
            samples: 10,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub checks: Vec<CheckStat>,
    pub violations: Vec<Violation>,
    pub max_slack: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E3779B97F4A7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

struct Tol {
    over: Option<f64>,
}

impl Tol {
    fn get(&self, default: f64) -> f64 {
        self.over.unwrap_or(default)
    }
}

/// Random scalar weight/function pair for the Doob checks: lognormal weight,
/// Gaussian function.
fn random_scalar_pair(depth: usize, rng: &mut ChaCha8Rng) -> (StepField<f64>, StepField<f64>) {
    let n = 1usize << depth;
    let w: Vec<f64> = (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal).exp())
        .collect();
    let f: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    (
        StepField::new(depth, w).expect("leaf count matches"),
        StepField::new(depth, f).expect("leaf count matches"),
    )
}

fn suite_matlin(rec: &mut Recorder, tol: &Tol, d: usize, rng: &mut ChaCha8Rng) -> Result<()> {
    let g = nalgebra::DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let m = SymMatrix::gram(&g).add(&SymMatrix::identity(d).scaled(0.1))?;
    let scale = m.scale();
    let r = m.sym_sqrt()?;
    rec.record(
        "matlin_sqrt_roundtrip",
        r.mul_sym(&r)?.sub(&m)?.op_norm() / scale,
        tol.get(1e-9),
        None,
    );
    let inv = m.sym_inv()?;
    rec.record(
        "matlin_inv_roundtrip",
        m.mul_sym(&inv)?
            .sub(&SymMatrix::identity(d))?
            .op_norm(),
        tol.get(1e-9) * scale * inv.scale(),
        None,
    );
    Ok(())
}

fn suite_martingale(rec: &mut Recorder, tol: &Tol, inst: &Instance, w: &Weight) -> Result<()> {
    let f_avg = build_averages(&inst.f);
    for id in all_nodes(inst.depth) {
        if id.level == inst.depth {
            continue;
        }
        let (l, r) = id.children();
        let wm = w
            .avg()
            .node(id)
            .sub(&SymMatrix::mean(w.avg().node(l), w.avg().node(r)))?
            .op_norm();
        rec.record(
            "martingale_weight",
            wm,
            tol.get(1e-12) * w.avg().node(id).scale(),
            Some(id),
        );
        let fm = (f_avg.node(id) - (f_avg.node(l) + f_avg.node(r)) * 0.5).norm();
        rec.record(
            "martingale_function",
            fm,
            tol.get(1e-12) * (1.0 + f_avg.node(id).norm()),
            Some(id),
        );
    }
    Ok(())
}

fn suite_weight_duality(rec: &mut Recorder, inst: &Instance, w: &Weight) -> Result<()> {
    for id in all_nodes(inst.depth) {
        let v = w.inv_avg().node(id);
        let lhs = v.sym_inv()?;
        // equality holds wherever W is constant; allow the fp loss of the
        // inverse of an ill-conditioned average
        let extra = 256.0 * f64::EPSILON * v.spd_condition() * lhs.op_norm();
        rec.record_bool(
            "weight_duality",
            psd_leq_slack(&lhs, w.avg().node(id), extra)?,
            Some(id),
            "<W^-1>_Q^-1 <= <W>_Q failed",
        );
    }
    Ok(())
}

fn suite_variational(
    rec: &mut Recorder,
    tol: &Tol,
    inst: &Instance,
    w: &Weight,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let tf = crate::maximal::transformed_averages(w.sqrt_field(), &inst.f)?;
    for id in all_nodes(inst.depth) {
        let fq = tf.node(id);
        let wq = w.avg().node(id);
        let value = quad_form(&wq.sym_inv()?, fq, fq)?;
        let mut sup = f64::NEG_INFINITY;
        let mut try_e = |e: &Vector| -> Result<()> {
            let den = quad_form(wq, e, e)?;
            if den > 0.0 {
                sup = sup.max(fq.dot(e).powi(2) / den);
            }
            Ok(())
        };
        // the maximizer, plus random directions
        let maximizer = wq.sym_inv()?.mul_vec(fq)?;
        if maximizer.norm() > 0.0 {
            try_e(&(maximizer.clone() / maximizer.norm()))?;
        }
        for _ in 0..16 {
            let e = Vector::from_fn(inst.d, |_, _| rng.sample::<f64, _>(StandardNormal));
            if e.norm() > 0.0 {
                try_e(&(e.clone() / e.norm()))?;
            }
        }
        if maximizer.norm() == 0.0 {
            sup = sup.max(0.0);
        }
        let scale = 1.0 + value.abs();
        rec.record("variational_attained", value - sup, tol.get(1e-6) * scale, Some(id));
        rec.record("variational_upper", sup - value, tol.get(1e-9) * scale, Some(id));
    }
    Ok(())
}

fn suite_doob(rec: &mut Recorder, tol: &Tol, depth: usize, rng: &mut ChaCha8Rng) -> Result<()> {
    let (w, f) = random_scalar_pair(depth, rng);
    let m = max_scalar_doob(&w, &f)?;
    let lhs = l2_norm_scalar(&m, Some(&w))?;
    let rhs = l2_norm_scalar(&f, Some(&w))?;
    rec.record("doob_bound", lhs - 2.0 * rhs, tol.get(1e-9), None);

    // d = 1 coherence: the matrix maximal applied to w^(-1/2) (f w) equals
    // w^(1/2) M_w f pointwise.
    let weight = Weight::from_scalar(&w)?;
    let transformed = f.zip(&w, |a, b| Vector::from_row_slice(&[a * b.sqrt()]))?;
    let (usual, _) = max_usual(&weight, &transformed)?;
    for j in 0..(1usize << depth) {
        let expect = w.leaf(j).sqrt() * m.leaf(j);
        rec.record(
            "d1_coherence",
            (usual.leaf(j) - expect).abs(),
            tol.get(1e-10) * (1.0 + expect.abs()),
            Some(NodeId::new(depth, j)),
        );
    }
    let usual_norm = l2_norm_scalar(&usual, None)?;
    rec.record(
        "d1_norm_identity",
        (usual_norm - lhs).abs(),
        tol.get(1e-10) * (1.0 + lhs),
        None,
    );
    Ok(())
}

fn suite_badmax(rec: &mut Recorder, tol: &Tol, inst: &Instance, w: &Weight) -> Result<()> {
    let (fields, mem) = max_poor_memory(w, &inst.f, inst.depth)?;
    mem.validate()?;
    let f_norm = crate::dyadic::l2_norm_weighted(&inst.f, None)?;
    for (k, field) in fields.iter().enumerate() {
        let norm = l2_norm_scalar(field, None)?;
        rec.record(
            "badmax_bound",
            norm - 2.0 * f_norm,
            tol.get(1e-9),
            Some(NodeId::new(k, 0)),
        );
    }
    Ok(())
}

fn suite_redundant(rec: &mut Recorder, tol: &Tol, inst: &Instance, w: &Weight) -> Result<()> {
    let alpha = normalize_carleson(&inst.alpha, 1.0)?;
    let value = redundant_constant(&alpha, w)?;
    rec.record("redundant_bound", value - 4.0, tol.get(1e-8), None);
    Ok(())
}

fn suite_bet_chain(rec: &mut Recorder, tol: &Tol, inst: &Instance, w: &Weight) -> Result<()> {
    let alpha = normalize_carleson(&inst.alpha, 1.0)?;
    let report = bet_sum(w, &inst.f, &inst.g, &alpha)?;
    rec.record(
        "bet_le_phi",
        report.bet_sum - report.phi_integral,
        tol.get(1e-9),
        None,
    );
    rec.record(
        "phi_le_product",
        report.phi_integral - report.maximal_product_bound,
        tol.get(1e-9),
        None,
    );
    let larger = larger_sum(w, &inst.f, &inst.g, &alpha)?;
    rec.record("bet_le_larger", report.bet_sum - larger, tol.get(1e-12), None);
    let a2 = a2_characteristic(w)?;
    rec.record("a2_at_least_one", 1.0 - a2, tol.get(1e-10), None);
    Ok(())
}

fn suite_choquet(rec: &mut Recorder, tol: &Tol, inst: &Instance, rng: &mut ChaCha8Rng) -> Result<()> {
    let f_values: Vec<f64> = (0..crate::dyadic::node_count(inst.depth))
        .map(|_| rng.random::<f64>() * 3.0)
        .collect();
    let alpha: Vec<f64> = inst.alpha.values().to_vec();
    let (lhs, rhs) = choquet_check(&f_values, &alpha);
    rec.record(
        "choquet_identity",
        (lhs - rhs).abs(),
        tol.get(1e-10) * (1.0 + rhs),
        None,
    );
    Ok(())
}

fn suite_linearization(rec: &mut Recorder, tol: &Tol, inst: &Instance, w: &Weight) -> Result<()> {
    let (m, sel) = max_usual(w, &inst.f)?;
    let direct = l2_norm_scalar(&m, None)?.powi(2);
    let oracle = max_usual_norm_oracle(w, &inst.f, &sel)?;
    rec.record(
        "linearization_oracle",
        (oracle - direct).abs(),
        tol.get(1e-9) * (1.0 + direct),
        None,
    );
    Ok(())
}

fn merge(rec: &mut Recorder, name: &'static str, report: &CertReport) {
    // worst slack is informational here; the certificate already judged
    // every check against its own tolerance
    rec.record(name, report.max_slack, f64::INFINITY, None);
    for v in &report.violations {
        rec.record_bool(name, false, None, &format!("{}: {}", v.check, v.detail));
    }
}

/// Run every suite over `trials` seeded instances. A clean report has zero
/// violations.
pub fn run_suites(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let tol = Tol { over: cfg.tolerance };
    let mut rec = Recorder::default();
    for trial in 0..cfg.trials {
        let seed = derive_seed(cfg.seed, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xA5));
        // vary the shape across trials, capped by the configured maxima
        let d = 1 + (rng.random_range(0..cfg.d.max(1)));
        let depth = 1 + rng.random_range(0..cfg.depth.max(1));
        let inst = random_instance(d, depth, cfg.spread, seed);
        let w = inst.weight()?;

        suite_matlin(&mut rec, &tol, d, &mut rng)?;
        suite_martingale(&mut rec, &tol, &inst, &w)?;
        suite_weight_duality(&mut rec, &inst, &w)?;
        suite_variational(&mut rec, &tol, &inst, &w, &mut rng)?;
        suite_doob(&mut rec, &tol, depth, &mut rng)?;
        suite_badmax(&mut rec, &tol, &inst, &w)?;
        suite_redundant(&mut rec, &tol, &inst, &w)?;
        suite_bet_chain(&mut rec, &tol, &inst, &w)?;
        suite_choquet(&mut rec, &tol, &inst, &mut rng)?;
        suite_linearization(&mut rec, &tol, &inst, &w)?;

        let (_, mem) = max_poor_memory(&w, &inst.f, inst.depth)?;
        let bmax = bmax_certificate(&w, &inst.f, &mem, inst.depth)?;
        merge(&mut rec, "bmax_certificate", &bmax);
        let alpha = normalize_carleson(&inst.alpha, 1.0)?;
        let bred = bred_certificate(&w, &alpha, cfg.samples, derive_seed(seed, 0xB7))?;
        merge(&mut rec, "bred_certificate", &bred);
    }
    let inner = rec.finish();
    Ok(VerifyReport {
        config: cfg.clone(),
        checks: inner.checks,
        violations: inner.violations,
        max_slack: inner.max_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suites_pass() {
        let cfg = VerifyConfig {
            trials: 8,
            depth: 4,
            d: 3,
            ..VerifyConfig::default()
        };
        let report = run_suites(&cfg).unwrap();
        assert!(report.passed(), "violations: {:#?}", report.violations);
    }

    #[test]
    fn suites_are_deterministic() {
        let cfg = VerifyConfig {
            trials: 3,
            depth: 3,
            d: 2,
            ..VerifyConfig::default()
        };
        let a = serde_json::to_string(&run_suites(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_suites(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
