//! Acceptance suite: every release gate in one target, one printed pass/fail
//! line per criterion. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines.

mod oracle;

use carleson_lab::bellman::{bmax_certificate, bred_certificate};
use carleson_lab::dyadic::{
    all_nodes, l2_norm_scalar, l2_norm_weighted, CarlesonSeq, NodeId, StepField, Weight,
};
use carleson_lab::embedding::{
    a2_characteristic, bet_f, bet_sum, choquet_check, redundant_constant,
};
use carleson_lab::linalg::{SymMatrix, Vector};
use carleson_lab::maximal::{max_poor_memory, max_scalar_doob, max_usual, max_usual_norm_oracle};
use carleson_lab::search::{
    dim_growth_experiment, hill_climb, random_instance, Instance, Objective,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::time::Instant;

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "[criterion {n}] {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "[criterion {n}] {name} FAILED: {detail}");
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E3779B97F4A7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// The hand-checked d = 1, depth-1 instance: w = (1, 4), f = g = 1,
/// alpha_{Q0} = 1.
fn reference_instance() -> Instance {
    let mut alpha = CarlesonSeq::zeros(1);
    alpha.set(NodeId::root(), 1.0);
    Instance {
        d: 1,
        depth: 1,
        w: StepField::new(
            1,
            vec![
                SymMatrix::from_diagonal(&[1.0]),
                SymMatrix::from_diagonal(&[4.0]),
            ],
        )
        .unwrap(),
        f: StepField::constant(1, Vector::from_row_slice(&[1.0])),
        g: StepField::constant(1, Vector::from_row_slice(&[1.0])),
        alpha,
        amat: None,
        seed: 0,
    }
}

/// Raw row-major data for the independent evaluator, taken from the
/// regularized weight so both paths see identical inputs.
struct RawData {
    w: Vec<oracle::Mat>,
    f: Vec<oracle::Vc>,
    g: Vec<oracle::Vc>,
    alpha: Vec<Vec<f64>>,
    amat: Vec<Vec<oracle::Mat>>,
}

fn raw_data(inst: &Instance, w: &Weight) -> RawData {
    let mut alpha = Vec::with_capacity(inst.depth + 1);
    let mut amat = Vec::with_capacity(inst.depth + 1);
    for k in 0..=inst.depth {
        alpha.push(vec![0.0; 1 << k]);
        amat.push(vec![vec![0.0; inst.d * inst.d]; 1 << k]);
    }
    for (id, &v) in inst.alpha.iter() {
        alpha[id.level][id.index] = v;
    }
    if let Some(seq) = &inst.amat {
        for (id, m) in seq.iter() {
            amat[id.level][id.index] = m.to_row_major();
        }
    }
    RawData {
        w: w.field().leaves().iter().map(|m| m.to_row_major()).collect(),
        f: inst.f.leaves().iter().map(|v| v.as_slice().to_vec()).collect(),
        g: inst.g.leaves().iter().map(|v| v.as_slice().to_vec()).collect(),
        alpha,
        amat,
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn criterion_1_doob_constant() {
    let t0 = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..1000u64 {
        let seed = derive_seed(0xD00B, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let depth = rng.random_range(1..=10);
        let n = 1usize << depth;
        let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal).exp()).collect();
        let f: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let w = StepField::new(depth, w).unwrap();
        let f = StepField::new(depth, f).unwrap();
        let m = max_scalar_doob(&w, &f).unwrap();
        let lhs = l2_norm_scalar(&m, Some(&w)).unwrap();
        let rhs = l2_norm_scalar(&f, Some(&w)).unwrap();
        worst = worst.max(lhs - 2.0 * rhs);
    }
    let elapsed = t0.elapsed().as_secs_f64();
    report(
        1,
        "doob_constant",
        worst <= 1e-9 && elapsed < 10.0,
        &format!("worst slack {worst:.3e}, 1000 instances in {elapsed:.2}s (< 10s)"),
    );
}

#[test]
fn criterion_2_poor_memory_bound() {
    let t0 = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..1000u64 {
        let seed = derive_seed(0xBAD, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=6);
        let depth = rng.random_range(1..=8);
        let inst = random_instance(d, depth, 1.0, seed);
        let w = inst.weight().unwrap();
        let (fields, _) = max_poor_memory(&w, &inst.f, depth).unwrap();
        let f_norm = l2_norm_weighted(&inst.f, None).unwrap();
        for field in &fields {
            let norm = l2_norm_scalar(field, None).unwrap();
            worst = worst.max(norm - 2.0 * f_norm);
        }
    }

    let start = random_instance(3, 5, 1.0, 0x5EED);
    let climb = hill_climb(&Objective::Badmax { k: None }, &start, 10_000, 0xC11B).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = worst <= 1e-9 && climb.max_evaluated <= 2.0 + 1e-8 && elapsed < 120.0;
    report(
        2,
        "poor_memory_bound",
        pass,
        &format!(
            "worst slack {worst:.3e}, hill-climb max {:.6} (best {:.6}) over 10^4 steps, {elapsed:.2}s (< 120s)",
            climb.max_evaluated, climb.best_value
        ),
    );
}

#[test]
fn criterion_3_altered_condition_constant() {
    let t0 = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..1000u64 {
        let seed = derive_seed(0x4ED, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=6);
        let depth = rng.random_range(1..=8);
        let inst = random_instance(d, depth, 1.0, seed);
        let w = inst.weight().unwrap();
        let value = redundant_constant(&inst.alpha, &w).unwrap();
        worst = worst.max(value - 4.0);
    }

    let start = random_instance(3, 5, 1.0, 0xA1FA);
    let climb = hill_climb(&Objective::Redundant, &start, 10_000, 0xB2B).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = worst <= 1e-8 && climb.max_evaluated <= 4.0 + 1e-8 && elapsed < 120.0;
    report(
        3,
        "altered_condition_constant",
        pass,
        &format!(
            "worst slack {worst:.3e}, hill-climb max {:.6} (best {:.6}) over 10^4 steps, {elapsed:.2}s (< 120s)",
            climb.max_evaluated, climb.best_value
        ),
    );
}

#[test]
fn criterion_4_bellman_certificates() {
    let t0 = Instant::now();
    let mut violations = 0usize;
    let mut concavity_samples = 0u64;
    let mut derivative_samples = 0u64;
    let mut case1_seen = 0u64;
    for trial in 0..1000u64 {
        let seed = derive_seed(0xBE11, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=6);
        let depth = rng.random_range(1..=8);
        let inst = random_instance(d, depth, 1.0, seed);
        let w = inst.weight().unwrap();

        let (_, mem) = max_poor_memory(&w, &inst.f, depth).unwrap();
        let bmax = bmax_certificate(&w, &inst.f, &mem, depth).unwrap();
        violations += bmax.violations.len();
        for c in &bmax.checks {
            if c.name == "bmax_case1_equality" {
                case1_seen += c.evaluated;
            }
        }

        let bred = bred_certificate(&w, &inst.alpha, 10, derive_seed(seed, 1)).unwrap();
        violations += bred.violations.len();
        for c in &bred.checks {
            match c.name.as_str() {
                "bred_midpoint_concavity" => concavity_samples += c.evaluated,
                "bred_derivative" => derivative_samples += c.evaluated,
                _ => {}
            }
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = violations == 0
        && concavity_samples >= 10_000
        && derivative_samples >= 10_000
        && elapsed < 120.0;
    report(
        4,
        "bellman_certificates",
        pass,
        &format!(
            "{violations} violations, {concavity_samples} concavity + {derivative_samples} derivative samples, {case1_seen} case-1 equalities, {elapsed:.2}s (< 120s)"
        ),
    );
}

#[test]
fn criterion_5_bet_proof_chain() {
    let t0 = Instant::now();
    let mut worst_chain = f64::NEG_INFINITY;
    let mut worst_choquet = f64::NEG_INFINITY;
    for trial in 0..1000u64 {
        let seed = derive_seed(0xBE7, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=6);
        let depth = rng.random_range(1..=8);
        let inst = random_instance(d, depth, 1.0, seed);
        let w = inst.weight().unwrap();
        let r = bet_sum(&w, &inst.f, &inst.g, &inst.alpha).unwrap();
        assert!((r.carleson_a - 1.0).abs() < 1e-12);
        worst_chain = worst_chain.max(r.bet_sum - r.phi_integral);
        worst_chain = worst_chain.max(r.phi_integral - r.maximal_product_bound);

        let f_values: Vec<f64> = (0..inst.alpha.values().len())
            .map(|_| rng.random::<f64>() * 5.0)
            .collect();
        let (lhs, rhs) = choquet_check(&f_values, inst.alpha.values());
        worst_choquet = worst_choquet.max((lhs - rhs).abs() - 1e-10 * (1.0 + rhs));
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = worst_chain <= 1e-9 && worst_choquet <= 0.0 && elapsed < 60.0;
    report(
        5,
        "bet_proof_chain",
        pass,
        &format!(
            "worst chain slack {worst_chain:.3e}, worst choquet excess {worst_choquet:.3e}, {elapsed:.2}s (< 60s)"
        ),
    );
}

#[test]
fn criterion_6_linearization_oracle() {
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..1000u64 {
        let seed = derive_seed(0x11EA, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=6);
        let depth = rng.random_range(1..=8);
        let inst = random_instance(d, depth, 1.0, seed);
        let w = inst.weight().unwrap();
        let (m, sel) = max_usual(&w, &inst.f).unwrap();
        let direct = l2_norm_scalar(&m, None).unwrap().powi(2);
        let via_sel = max_usual_norm_oracle(&w, &inst.f, &sel).unwrap();
        worst = worst.max((via_sel - direct).abs() / (1.0 + direct));
    }
    report(
        6,
        "linearization_oracle",
        worst <= 1e-9,
        &format!("worst relative gap {worst:.3e} over 1000 instances"),
    );
}

#[test]
fn criterion_7_brute_force_equivalence() {
    let mut worst = 0.0f64;
    for trial in 0..200u64 {
        let seed = derive_seed(0xB2F, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=2);
        let depth = rng.random_range(1..=2);
        let mut inst = random_instance(d, depth, 1.0, seed);
        // keep the weights comfortably conditioned: the closed-form 2x2
        // reference algebra and the eigensolver lose different last bits on
        // near-singular leaves, and this criterion compares at 1e-10
        inst.w = inst.w.map(|m| {
            m.add(&SymMatrix::identity(d).scaled(1e-3 * m.scale())).unwrap()
        });
        let w = inst.weight().unwrap();
        let raw = raw_data(&inst, &w);

        let mut gap = |a: f64, b: f64| {
            worst = worst.max((a - b).abs() / (1.0 + a.abs()));
        };

        // carleson constant
        gap(
            carleson_lab::dyadic::carleson_constant(&inst.alpha),
            oracle::carleson_constant(depth, &raw.alpha),
        );

        // usual maximal field
        let (m, _) = max_usual(&w, &inst.f).unwrap();
        let m_ref = oracle::max_usual(d, depth, &raw.w, &raw.f);
        for (a, b) in m.leaves().iter().zip(&m_ref) {
            gap(*a, *b);
        }

        // poor memory, every level
        let (fields, _) = max_poor_memory(&w, &inst.f, depth).unwrap();
        let ref_fields = oracle::max_poor_memory(d, depth, &raw.w, &raw.f, depth);
        for (field, ref_field) in fields.iter().zip(&ref_fields) {
            for (a, b) in field.leaves().iter().zip(ref_field) {
                gap(*a, *b);
            }
        }

        // bilinear and linear embedding sums
        let r = bet_sum(&w, &inst.f, &inst.g, &inst.alpha).unwrap();
        gap(
            r.bet_sum,
            oracle::bet_sum(d, depth, &raw.w, &raw.f, &raw.g, &raw.alpha),
        );
        let amat = inst.amat.as_ref().unwrap();
        gap(
            carleson_lab::embedding::cet_sum(&w, &inst.f, amat).unwrap(),
            oracle::cet_sum(d, depth, &raw.w, &raw.f, &raw.amat),
        );
    }
    report(
        7,
        "brute_force_equivalence",
        worst <= 1e-10,
        &format!("worst relative gap {worst:.3e} over 200 tiny instances"),
    );
}

#[test]
fn criterion_8_dimensional_growth_probe() {
    let t0 = Instant::now();
    let table = dim_growth_experiment(&[1, 2, 4, 8], 6, 3, 200, 0xD1A).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let nondecreasing = table.rows.windows(2).all(|p| p[1].best >= p[0].best);
    let detail: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("d={} best={:.4} ref={:.4}", r.d, r.best, r.reference))
        .collect();
    report(
        8,
        "dimensional_growth_probe",
        nondecreasing && elapsed < 300.0,
        &format!("{}; {elapsed:.2}s (< 300s); reported, not asserted", detail.join(", ")),
    );
}

#[test]
fn criterion_9_reference_instance() {
    let inst = reference_instance();
    let w = inst.weight().unwrap();
    let raw = raw_data(&inst, &w);
    let tol = 1e-12;

    // independent evaluator first
    let m_ref = oracle::max_usual(1, 1, &raw.w, &raw.f);
    let poor_ref = oracle::max_poor_memory(1, 1, &raw.w, &raw.f, 1);
    let poor_norm_sq_ref: f64 = poor_ref[1].iter().map(|v| 0.5 * v * v).sum();
    let bet_f_ref = oracle::bet_f_at(1, 1, &raw.w, &raw.f, &raw.g, 0, 0);
    let a2_ref = oracle::a2_characteristic(1, 1, &raw.w);
    let red_ref = oracle::redundant_constant(1, 1, &raw.w, &raw.alpha);
    let oracle_ok = close(m_ref[0], 1.0, tol)
        && close(m_ref[1], 1.2, tol)
        && close(poor_norm_sq_ref, 1.22, tol)
        && close(bet_f_ref, 0.72, tol)
        && close(a2_ref, 1.5625, tol)
        && close(red_ref, 0.64, tol);

    // then the main modules
    let (m, _) = max_usual(&w, &inst.f).unwrap();
    let (fields, _) = max_poor_memory(&w, &inst.f, 1).unwrap();
    let poor_norm_sq = l2_norm_scalar(&fields[1], None).unwrap().powi(2);
    let betf = bet_f(&w, &inst.f, &inst.g, NodeId::root()).unwrap();
    let a2 = a2_characteristic(&w).unwrap();
    let red = redundant_constant(&inst.alpha, &w).unwrap();
    let main_ok = close(*m.leaf(0), 1.0, tol)
        && close(*m.leaf(1), 1.2, tol)
        && close(poor_norm_sq, 1.22, tol)
        && close(betf, 0.72, tol)
        && close(a2, 1.5625, tol)
        && close(red, 0.64, tol);

    report(
        9,
        "reference_instance",
        oracle_ok && main_ok,
        &format!(
            "oracle: M=({:.3},{:.3}) |M_1|^2={:.4} F={:.4} a2={:.6} red={:.4}; main agrees to 1e-12",
            m_ref[0], m_ref[1], poor_norm_sq_ref, bet_f_ref, a2_ref, red_ref
        ),
    );
}

#[test]
fn oracle_agrees_on_all_nodes_helper() {
    // guard: the flat node enumeration used when exporting alpha matches the
    // oracle's (level, index) layout
    let inst = random_instance(2, 2, 1.0, 99);
    let w = inst.weight().unwrap();
    let raw = raw_data(&inst, &w);
    let mut total = 0.0;
    for id in all_nodes(2) {
        total += raw.alpha[id.level][id.index];
    }
    let direct: f64 = inst.alpha.values().iter().sum();
    assert!((total - direct).abs() < 1e-15);
}
