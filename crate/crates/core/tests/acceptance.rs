//! Acceptance criteria 1–10, one PASS/FAIL line each on stderr.
//!
//! Run with `cargo test -p jetspace --test acceptance`; the lines are written
//! to the raw stderr handle so they show without `--nocapture`.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::{random_flat, random_polytope_in};
use jetspace::harness::{
    constructive_vs_optimal, finiteness_experiment, generate_instance, generate_points_and_field, ExperimentConfig,
    ExperimentKind, KSpec, SetFamily,
};
use jetspace::jets::{dist, Constants, Jet, Poly};
use jetspace::lp::{LinearProgram, LpStatus};
use jetspace::metric::{ChainSearch, MetricCtx};
use jetspace::moduli::{Modulus, PhiAlpha};
use jetspace::selection::{
    build_tree, ceil_log2, helly_check, helly_check_containing, min_lambda_selection, ConvexSetSpec, TreeOptions,
    TreeStrategy,
};
use jetspace::whitney::{wg_lambda_star, JetField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const TOL: f64 = 1e-9;
const ORACLE_TOL: f64 = 1e-7;
const MEMBERSHIP_TOL: f64 = 1e-8;
const SWEEP_SEED: u64 = 20_240_601;
const SWEEP_TRIALS: usize = 200;

fn scale(a: f64, b: f64) -> f64 {
    1f64.max(a.abs()).max(b.abs())
}

fn le(a: f64, b: f64) -> bool {
    a <= b + TOL * scale(a, b)
}

struct Outcome {
    pass: bool,
    detail: String,
    report: Value,
}

fn line(id: &str, o: &Outcome, elapsed: Duration, budget: Duration) -> bool {
    let ok = o.pass && elapsed <= budget;
    let verdict = if ok { "PASS" } else { "FAIL" };
    let budget = if budget == Duration::MAX {
        "no budget".to_string()
    } else {
        format!("budget {budget:.0?}")
    };
    let _ = writeln!(std::io::stderr(), "criterion {id:>2}: {verdict}  {}  [{elapsed:.3?} / {budget}]", o.detail);
    ok
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn random_modulus(r: &mut ChaCha8Rng) -> Modulus {
    match r.gen_range(0..4) {
        0 => Modulus::power(1.0).unwrap(),
        1 => Modulus::power(r.gen_range(0.1..1.0)).unwrap(),
        2 => {
            let mut knots = vec![(0.0, 0.0)];
            let mut slopes: Vec<f64> = (0..r.gen_range(1..4)).map(|_| r.gen_range(0.05..3.0)).collect();
            slopes.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let (mut t, mut v) = (0.0, 0.0);
            for s in slopes {
                let w = r.gen_range(0.05..1.0);
                t += w;
                v += s * w;
                knots.push((t, v));
            }
            Modulus::piecewise_linear(knots).unwrap()
        }
        _ => Modulus::power(r.gen_range(0.2..1.0))
            .unwrap()
            .with_regularization(r.gen_range(1e-4..0.1), r.gen_range(0.5..3.0))
            .unwrap(),
    }
}

fn random_jet(r: &mut ChaCha8Rng, ctx: &MetricCtx) -> Jet {
    let space = ctx.space().clone();
    let c: Vec<f64> = (0..space.dim()).map(|_| r.gen_range(-2.0..2.0)).collect();
    let x: Vec<f64> = (0..space.n()).map(|_| r.gen_range(-1.0..1.0)).collect();
    Jet::new(Poly::new(space, c).unwrap(), x).unwrap()
}

fn criterion_1() -> Outcome {
    let expected = [((1, 1), 4usize), ((1, 2), 8), ((2, 1), 8), ((2, 2), 64)];
    let mut got = Vec::new();
    let mut pass = true;
    for ((k, n), want) in expected {
        let dim = Constants::new(k, n).unwrap().dim;
        let cfg = ExperimentConfig::new(k, n, dim, dim + 1, 1, 0, SetFamily::Boxes);
        let big_n = cfg.n_used().unwrap();
        pass &= big_n == want;
        got.push(big_n);
    }
    Outcome {
        pass,
        detail: format!("N(k,n) for (1,1),(1,2),(2,1),(2,2) = {got:?}, expected [4, 8, 8, 64]"),
        report: json!(got),
    }
}

fn criterion_2() -> Outcome {
    const PAIRS: u64 = 10_000;
    let mut sandwich = 0usize;
    let mut search = 0usize;
    let mut min_ratio = f64::INFINITY;
    let mut digest = Vec::with_capacity(PAIRS as usize);
    for i in 0..PAIRS {
        let mut r = rng(2, i);
        let (k, n) = (r.gen_range(1..=2), r.gen_range(1..=2));
        let ctx = MetricCtx::build(k, n, random_modulus(&mut r)).unwrap();
        let (t0, t1) = (random_jet(&mut r, &ctx), random_jet(&mut r, &ctx));
        let one = ctx.one_point_delta(&t0, &t1).unwrap();
        let two = ctx.two_point_delta(&t0, &t1).unwrap();
        let e_n = ctx.constants().e_n;
        if !(le(one, two) && le(two, e_n * one)) {
            sandwich += 1;
        }
        let opts = ChainSearch::with_seed(i);
        let h = ctx.chain_upper_bound_search(&t0, &t1, &opts).unwrap();
        if !(le(two / e_n, h) && le(h, two)) {
            search += 1;
        }
        if two > 0.0 {
            min_ratio = min_ratio.min(h / two);
        }
        digest.push(h);
    }
    Outcome {
        pass: sandwich == 0 && search == 0,
        detail: format!(
            "{PAIRS} pairs: sandwich violations {sandwich}, chain-search violations {search}, min search/d′ {min_ratio:.4}"
        ),
        report: json!({ "sandwich": sandwich, "search": search, "heuristic": digest }),
    }
}

fn criterion_3() -> Outcome {
    const TUPLES: u64 = 100_000;
    let mut r = rng(3, 0);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..TUPLES {
        let m = random_modulus(&mut r);
        let k = r.gen_range(1..=3);
        let a = r.gen_range(0..=k);
        let b = r.gen_range(0..=k - a);
        let t1: f64 = r.gen_range(0.0..4.0);
        let t2 = 10f64.powf(r.gen_range(-6.0..3.0));
        let lhs = PhiAlpha::new(m.clone(), k, a).unwrap().eval(t1.powi(b as i32) * t2).unwrap();
        let rhs = m.eval(t1).unwrap().max(PhiAlpha::new(m, k, a + b).unwrap().eval(t2).unwrap());
        worst = worst.max((lhs - rhs) / scale(lhs, rhs));
        if !le(lhs, rhs) {
            violations += 1;
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{TUPLES} tuples: violations {violations}, max scaled excess {worst:.3e}"),
        report: json!({ "violations": violations }),
    }
}

/// A chain satisfying the hypotheses by construction: each link perturbs the
/// polynomial by the largest power-of-two multiple of a random direction that
/// keeps `d′ ≤ ω(link)`, and `λ` is the worst of the two sum ratios.
fn hypothesis_chain(r: &mut ChaCha8Rng, ctx: &MetricCtx) -> Option<(Vec<Jet>, f64)> {
    let space = ctx.space().clone();
    let (n, d) = (space.n(), space.dim());
    let len = r.gen_range(2..=6);
    let mut base: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let mut coeffs: Vec<f64> = (0..d).map(|_| r.gen_range(-2.0..2.0)).collect();
    let mut chain = vec![Jet::new(Poly::new(space.clone(), coeffs.clone()).unwrap(), base.clone()).unwrap()];
    let heading: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    for _ in 1..len {
        let step: Vec<f64> = heading.iter().map(|h| h * r.gen_range(0.2..1.0) + r.gen_range(-0.2..0.2)).collect();
        let next_base: Vec<f64> = base.iter().zip(&step).map(|(a, s)| a + 0.3 * s).collect();
        let dir: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let om = ctx.omega(dist(&base, &next_base));
        let mut amp = 4.0;
        let next = loop {
            let c: Vec<f64> = coeffs.iter().zip(&dir).map(|(a, v)| a + amp * v).collect();
            let t = Jet::new(Poly::new(space.clone(), c.clone()).unwrap(), next_base.clone()).unwrap();
            if ctx.two_point_delta(chain.last().unwrap(), &t).unwrap() <= om {
                coeffs = c;
                break t;
            }
            amp *= 0.5;
            if amp < 1e-300 {
                return None;
            }
        };
        chain.push(next);
        base = next_base;
    }
    let first = &chain[0].base;
    let last = &chain[chain.len() - 1].base;
    let span = dist(first, last);
    if span < 1e-6 {
        return None;
    }
    let lengths: Vec<f64> = chain.windows(2).map(|w| dist(&w[0].base, &w[1].base)).collect();
    let len_ratio = lengths.iter().sum::<f64>() / span;
    let om_ratio = lengths.iter().map(|&l| ctx.omega(l)).sum::<f64>() / ctx.omega(span);
    Some((chain, len_ratio.max(om_ratio).max(1.0) * (1.0 + 1e-12)))
}

fn criterion_4() -> Outcome {
    const CHAINS: usize = 1_000;
    let mut r = rng(4, 0);
    let (mut held, mut concluded, mut d_prime_concluded) = (0usize, 0usize, 0usize);
    let mut taus = Vec::with_capacity(CHAINS);
    while held < CHAINS {
        let (k, n) = (r.gen_range(1..=2), r.gen_range(1..=2));
        let ctx = MetricCtx::build(k, n, random_modulus(&mut r)).unwrap();
        let Some((chain, lambda)) = hypothesis_chain(&mut r, &ctx) else {
            continue;
        };
        let rep = ctx.chain_contraction_check(&chain, lambda).unwrap();
        if !rep.hypotheses_hold {
            continue;
        }
        held += 1;
        concluded += rep.conclusion_holds as usize;
        d_prime_concluded += rep.d_prime_conclusion_holds as usize;
        taus.push(rep.tau);
    }
    Outcome {
        pass: concluded == held,
        detail: format!(
            "{held} chains with hypotheses: conclusion {concluded}/{held} (d′ form {d_prime_concluded}/{held})"
        ),
        report: json!({ "held": held, "concluded": concluded, "d_prime": d_prime_concluded, "tau": taus }),
    }
}

fn criterion_5() -> Outcome {
    const INSTANCES: u64 = 500;
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    let mut values = Vec::new();
    for i in 0..INSTANCES {
        let mut r = rng(5, i);
        let (k, n, m) = (r.gen_range(1..=2), r.gen_range(1..=2), r.gen_range(2..=8));
        let mut cfg = ExperimentConfig::new(k, n, 0, m, 1, r.gen(), SetFamily::Singletons);
        cfg.modulus = random_modulus(&mut r);
        let inst = generate_instance(&cfg, 0).unwrap();
        let (points, hidden) = generate_points_and_field(&cfg, 0).unwrap();
        let ctx = MetricCtx::build(k, n, cfg.modulus.clone()).unwrap();
        let oracle = wg_lambda_star(&JetField::from_coeffs(ctx, points, hidden).unwrap()).value;
        let (lp, _) = min_lambda_selection(&inst).unwrap();
        let err = (lp - oracle).abs() / oracle.max(1.0);
        worst = worst.max(err);
        if err > ORACLE_TOL {
            failures += 1;
        }
        values.push([lp, oracle]);
    }
    Outcome {
        pass: failures == 0,
        detail: format!("{INSTANCES} singleton instances: {failures} beyond 1e-7, worst scaled error {worst:.3e}"),
        report: json!(values),
    }
}

fn exact_intersects(sets: &[ConvexSetSpec], d: usize) -> bool {
    let mut lp = LinearProgram::new(d);
    for j in 0..d {
        lp.set_free(j, true);
    }
    for s in sets {
        s.add_rows(&mut lp, 0);
    }
    lp.solve_exact().unwrap().status == LpStatus::Optimal
}

fn criterion_6() -> Outcome {
    const FAMILIES: u64 = 500;
    let (mut violations, mut reduction_violations, mut exact_mismatch) = (0usize, 0usize, 0usize);
    let (mut empty, mut with_flat) = (0usize, 0usize);
    let mut rows = Vec::new();
    for i in 0..FAMILIES {
        let mut r = rng(6, i);
        let d = r.gen_range(1..=3);
        let count = r.gen_range(2..=7);
        let flat = d >= 2 && i % 2 == 1;
        let plain = if flat { count - 1 } else { count };
        // alternate spreads so both outcomes of the global test are common
        let spread = if i % 4 < 2 { 1.0 } else { 0.1 };
        let mut sets: Vec<ConvexSetSpec> = (0..plain).map(|_| random_polytope_in(&mut r, d, spread)).collect();
        let ell = r.gen_range(0..d);
        if flat {
            sets.push(random_flat(&mut r, d, ell));
        }
        let rep = helly_check(&sets, d, d + 1).unwrap();
        violations += (rep.all_subfamilies_intersect != rep.global_intersects) as usize;
        exact_mismatch += (rep.global_intersects != exact_intersects(&sets, d)) as usize;
        empty += !rep.global_intersects as usize;
        let mut reduced = None;
        if flat {
            with_flat += 1;
            let idx = sets.len() - 1;
            let red = helly_check_containing(&sets, d, ell + 2, Some(idx)).unwrap();
            reduction_violations += (red.all_subfamilies_intersect != red.global_intersects) as usize;
            reduced = Some(red.all_subfamilies_intersect);
        }
        rows.push(json!([d, sets.len(), rep.all_subfamilies_intersect, rep.global_intersects, reduced]));
    }
    Outcome {
        pass: violations == 0 && reduction_violations == 0 && exact_mismatch == 0,
        detail: format!(
            "{FAMILIES} families ({empty} with empty intersection, {with_flat} with a flat): Helly violations {violations}, ℓ+2 violations {reduction_violations}, exact-LP mismatches {exact_mismatch}"
        ),
        report: json!(rows),
    }
}

fn sweep_config(m: usize, kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(1, 1, 1, m, SWEEP_TRIALS, SWEEP_SEED, SetFamily::Boxes);
    cfg.experiment = kind;
    cfg.k_spec = KSpec::default();
    cfg
}

fn criterion_7() -> Outcome {
    let mut reports = Vec::new();
    let mut pass = true;
    let mut summary = Vec::new();
    for m in 5..=10 {
        let rep = finiteness_experiment(&sweep_config(m, ExperimentKind::Finiteness)).unwrap();
        let g = rep.gamma_max.unwrap_or(f64::NAN);
        pass &= rep.n_used == 4
            && rep.trials_run == SWEEP_TRIALS
            && rep.counterexamples.is_empty()
            && rep.monotonicity_violations == 0
            && g.is_finite()
            && rep.gamma_distribution.is_some();
        summary.push(format!("m={m}: γmax {g:.4}, cex {}", rep.counterexamples.len()));
        reports.push(serde_json::to_value(&rep).unwrap());
    }
    Outcome {
        pass,
        detail: summary.join("; "),
        report: Value::Array(reports),
    }
}

fn criterion_8() -> Outcome {
    let mut reports = Vec::new();
    let mut pass = true;
    let mut summary = Vec::new();
    for m in 5..=10 {
        let rep = constructive_vs_optimal(&sweep_config(m, ExperimentKind::Constructive)).unwrap();
        let mut ok = rep.all_ok && rep.hypothesis_violations == 0;
        for t in &rep.trials {
            let (Some(lc), Some(f), Some(v)) = (t.lambda_constructive, t.bound_factor, t.max_membership_violation) else {
                ok = false;
                continue;
            };
            ok &= v <= MEMBERSHIP_TOL && le(lc, f * t.k_bound) && le(t.lambda_optimal, lc);
        }
        pass &= ok;
        summary.push(format!("m={m}: ratio max {:.4}", rep.ratio_max.unwrap_or(f64::NAN)));
        reports.push(serde_json::to_value(&rep).unwrap());
    }
    Outcome {
        pass,
        detail: summary.join("; "),
        report: Value::Array(reports),
    }
}

fn criterion_9() -> Outcome {
    let (mut sets, mut short, mut degraded, mut undominated) = (0usize, 0usize, 0usize, 0usize);
    let mut eta_max = 1.0f64;
    let mut etas = Vec::new();
    for m in 5..=8 {
        let cfg = sweep_config(m, ExperimentKind::Finiteness);
        for trial in 0..SWEEP_TRIALS {
            let (points, _) = generate_points_and_field(&cfg, trial).unwrap();
            let opts = TreeOptions {
                strategy: TreeStrategy::Auto,
                eta_budget: None,
            };
            let t = build_tree(&points, None, opts).unwrap();
            sets += 1;
            short += (t.max_degree < ceil_log2(m)) as usize;
            degraded += t.degraded as usize;
            let pd = t.path_distances(&points);
            let mut dominated = t.dominates;
            for i in 0..m {
                for j in i + 1..m {
                    dominated &= dist(&points[i], &points[j]) <= pd[i][j];
                }
            }
            undominated += !dominated as usize;
            eta_max = eta_max.max(t.eta_observed);
            etas.push(t.eta_observed);
        }
    }
    Outcome {
        pass: short == 0 && degraded == 0 && undominated == 0 && etas.iter().all(|e| e.is_finite()),
        detail: format!(
            "{sets} point sets: degree short {short}, degraded {degraded}, ρ > ρ_T {undominated}, η max {eta_max:.4}"
        ),
        report: json!(etas),
    }
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let first: Criterion = ("1", criterion_1, Duration::from_millis(1));
    let repeatable: [Criterion; 8] = [
        ("2", criterion_2, secs(30)),
        ("3", criterion_3, secs(10)),
        ("4", criterion_4, secs(30)),
        ("5", criterion_5, secs(60)),
        ("6", criterion_6, secs(60)),
        ("7", criterion_7, secs(600)),
        ("8", criterion_8, secs(600)),
        ("9", criterion_9, secs(60)),
    ];
    // ACCEPTANCE_ONLY=2,6 runs a subset and skips the determinism rerun
    let only: Option<Vec<String>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').map(|s| s.trim().to_string()).collect());
    let selected = |id: &str| only.as_ref().map_or(true, |o| o.iter().any(|s| s == id));
    let mut all = true;
    let mut first_reports = Vec::new();
    for (id, f, budget) in std::iter::once(first).chain(repeatable) {
        if !selected(id) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        all &= line(id, &o, elapsed, budget);
        if id != "1" {
            first_reports.push(serde_json::to_string(&o.report).unwrap());
        }
    }
    if only.is_some() {
        assert!(all, "some acceptance criteria failed; see the lines above");
        return;
    }
    let start = Instant::now();
    let mut differing = Vec::new();
    for ((id, f, _), before) in repeatable.iter().zip(&first_reports) {
        if serde_json::to_string(&f().report).unwrap() != *before {
            differing.push(*id);
        }
    }
    let o = Outcome {
        pass: differing.is_empty(),
        detail: format!("reruns of 2–9 byte-identical; differing: {differing:?}"),
        report: Value::Null,
    };
    all &= line("10", &o, start.elapsed(), Duration::MAX);
    assert!(all, "some acceptance criteria failed; see the lines above");
}
