//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use bohrcolor_cli::{sqrt2_family, RunConfig};
use bohrcolor_core::bohr::build_witness;
use bohrcolor_core::coloring::{assert_blocked, second_difference};
use bohrcolor_core::construction::{is_member, sample, validate_params};
use bohrcolor_core::projection::{enumerate, guarded_member, IntegerSetReport};
use bohrcolor_core::verify::{audit_3ap, cayley_audit, discrepancy, nilbohr_hit_in, FnColorer, OverrideColorer};
use bohrcolor_core::{
    AlphaSchedule, Ambient, ColorId, Colorer, Error, IntegerColorer, Params, SparsePoint, TorusBohrSet,
};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WINDOW_REL_TOL: f64 = 1e-9;
const VALIDATE_BUDGET: Duration = Duration::from_millis(1);
const PARALLELOGRAM_TOL: f64 = 1e-12;
const TORUS_TRIALS: u64 = 100_000;
const CANONICAL_TOL: f64 = 4e-4;
const SECOND_DIFF_BUDGET: Duration = Duration::from_secs(30);
const COLOR_BUDGET: Duration = Duration::from_secs(60);
const BOHR_TRIALS: u64 = 100;
const BOHR_CHAIN_SLACK: f64 = 1e-9;
const BOHR_BUDGET: Duration = Duration::from_secs(60);
const AUDIT_BUDGET: Duration = Duration::from_secs(300);
/// Audit window wide enough that `x, x+s, x+2s` fit for every difference.
const EXTENDED_AUDIT_N: u64 = 300_000;
const MUTATION_TRIALS: u64 = 100;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../config").join(name)
}

fn shipped() -> RunConfig {
    RunConfig::load(&config_path("default.json")).expect("shipped config loads")
}

fn schedule(cfg: &RunConfig) -> AlphaSchedule {
    AlphaSchedule::build(&cfg.schedule, &cfg.params).expect("shipped schedule builds")
}

fn defaults() -> Params {
    Params::new(0.1, 1e-4, Ambient::Bounded(2000))
}

/// A random torus point with up to 24 coordinates among the first 2000.
fn random_point(rng: &mut ChaCha8Rng) -> SparsePoint {
    let len = rng.gen_range(0..=24);
    let pairs: Vec<(u32, f64)> =
        index::sample(rng, 2000, len).into_iter().map(|i| (i as u32 + 1, rng.gen::<f64>())).collect();
    SparsePoint::from_pairs(pairs, Ambient::Bounded(2000)).unwrap()
}

fn criterion_1() -> Outcome {
    // 4 sin²(πθ) evaluated as 2 - 2 cos(2πθ)
    let chord = |t: f64| 2.0 - 2.0 * (2.0 * PI * t).cos();
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for (d1, d2) in [(1e-2, 1e-10), (0.1, 1e-4)] {
        let start = Instant::now();
        let r = match validate_params(d1, d2) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("({d1}, {d2}) rejected: {e}")),
        };
        slowest = slowest.max(start.elapsed());
        let spread = 4.0 * PI * PI * (2.0 * d2) * (d1 + 2.0 * d2);
        let lower = chord(d1 - 2.0 * d2) - spread - 2.0 * d2 - 1e-9;
        let upper = 1.0 - 2.0 * d2 - 1e-9 - (chord(d1 + 2.0 * d2) + spread);
        worst = worst.max(((r.lower_margin - lower) / lower).abs());
        worst = worst.max(((r.upper_margin - upper) / upper).abs());
    }
    let rejected = matches!(validate_params(0.1, 0.05), Err(Error::InvalidParams { .. }));
    let ok = rejected && worst < WINDOW_REL_TOL && slowest < VALIDATE_BUDGET;
    outcome(
        ok,
        format!(
            "accepts (1e-2, 1e-10) and (0.1, 1e-4), rejects (0.1, 0.05): {rejected}; margin rel err {worst:.1e} (< {WINDOW_REL_TOL:e}); {slowest:?} (< {VALIDATE_BUDGET:?})"
        ),
    )
}

fn criterion_2() -> Outcome {
    let x = SparsePoint::from_pairs([(1, 0.0), (2, 1.0 / 3.0), (3, 2.0 / 3.0)], Ambient::Bounded(3)).unwrap();
    let d = SparsePoint::from_pairs([(1, 1.0 / 3.0), (2, 1.0 / 3.0), (3, 1.0 / 3.0)], Ambient::Bounded(3)).unwrap();
    let got = [x.add(&d).unwrap().l2_norm_sq(), x.l2_norm_sq(), x.sub(&d).unwrap().l2_norm_sq(), d.l2_norm_sq()];
    let want = [2.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 1.0 / 3.0];
    let err = got.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    outcome(err < PARALLELOGRAM_TOL, format!("||x+d||², ||x||², ||x-d||², ||d||² = {got:.6?}, max err {err:.1e}"))
}

/// Samples `(x, s)` pairs and runs the obstruction check on each.
fn blocked_trials(seed: u64) -> (u64, u64, f64, f64) {
    let p = defaults();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut window_violations, mut mono) = (0, 0);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for t in 0..TORUS_TRIALS {
        let s = sample(&p, seed.wrapping_mul(1_000_003).wrapping_add(t)).unwrap();
        let x = random_point(&mut rng);
        match assert_blocked(&x, &s, &p) {
            Ok(r) => {
                lo = lo.min(r.modulus);
                hi = hi.max(r.modulus);
            }
            Err(Error::ConstructionViolation(m)) if m.contains("monochromatic") => mono += 1,
            Err(_) => window_violations += 1,
        }
    }
    (window_violations, mono, lo, hi)
}

fn criterion_3() -> Outcome {
    let p = defaults();
    let start = Instant::now();
    let (violations, mono, lo, hi) = blocked_trials(3);
    let elapsed = start.elapsed();
    let s = p.canonical_witness().unwrap();
    let x = SparsePoint::zero(p.m);
    let modulus = second_difference(&x, &s).unwrap().norm();
    let expected = 4.0 * (0.1 * PI).sin().powi(2);
    let ok = violations + mono == 0
        && lo > 2.0 * p.delta2
        && hi < 1.0 - 2.0 * p.delta2
        && (modulus - expected).abs() < CANONICAL_TOL
        && elapsed < SECOND_DIFF_BUDGET;
    outcome(
        ok,
        format!(
            "{TORUS_TRIALS} pairs, {} violations, modulus range [{lo:.6}, {hi:.6}]; canonical {modulus:.6} vs {expected:.6}; {elapsed:.1?}",
            violations + mono
        ),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let (_, mono, _, _) = blocked_trials(4);
    let elapsed = start.elapsed();
    outcome(mono == 0 && elapsed < COLOR_BUDGET, format!("{TORUS_TRIALS} pairs, {mono} monochromatic; {elapsed:.1?}"))
}

fn criterion_5() -> Outcome {
    // every column takes one of 11^k values, so 121·1000 + 1 coordinates
    // always hold a full cluster when k ≤ 2
    const LEN: usize = 121 * 1000 + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for t in 0..BOHR_TRIALS {
        let k = rng.gen_range(1..=2);
        let epsilon = if rng.gen_bool(0.5) { 0.1 } else { 0.5 };
        let dual: Vec<Vec<i64>> = (0..k).map(|_| (0..LEN).map(|_| rng.gen_range(-5..=5)).collect()).collect();
        let b = TorusBohrSet::new(dual, epsilon).unwrap();
        let p = defaults().with_m(Ambient::Bounded(LEN as u32));
        match build_witness(&b, &p) {
            Ok(r) => {
                let member = is_member(&r.witness, &p).is_ok_and(|c| c.is_member);
                let bound = p.delta1 * epsilon + BOHR_CHAIN_SLACK;
                worst_ratio = worst_ratio.max(r.sup_norm / (p.delta1 * epsilon));
                if !member || r.sup_norm > bound {
                    failures.push(format!("trial {t}: member {member}, |f(v)| = {}", r.sup_norm));
                }
            }
            Err(e) => failures.push(format!("trial {t}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && elapsed < BOHR_BUDGET,
        format!(
            "{BOHR_TRIALS} duals, {} failures, max |f(v)|/(δ₁ε) = {worst_ratio:.4}; {elapsed:.1?}{}",
            failures.len(),
            failures.first().map_or(String::new(), |f| format!("; first: {f}"))
        ),
    )
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap()
}

fn criterion_6() -> Outcome {
    let cfg = shipped();
    let (p, sched) = (cfg.params, schedule(&cfg));
    let gf = cfg.scan.guard_fraction;
    let n = cfg.scan.audit_n;

    let start = Instant::now();
    let single = pool(1).install(|| -> Result<_, Error> {
        let set = enumerate(n, &p, &sched, gf)?;
        let audit = audit_3ap(n, &set.elements, &IntegerColorer::new(&p, &sched))?;
        Ok((set, audit))
    });
    let elapsed = start.elapsed();
    let (set, audit) = match single {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("audit failed: {e}")),
    };

    let mut not_persisting = 0;
    for m in [2 * sched.m(), 4 * sched.m()] {
        let deep = sched.with_m(m, &p).unwrap();
        not_persisting +=
            set.elements.iter().filter(|&&k| !matches!(guarded_member(k, &p, &deep), Ok(Some(_)))).count();
    }

    // the first window has no room for a progression, so repeat wider
    let extended = |workers| {
        pool(workers).install(|| {
            let set = enumerate(EXTENDED_AUDIT_N, &p, &sched, gf).unwrap();
            let r = cayley_audit(EXTENDED_AUDIT_N, &set.elements, &IntegerColorer::new(&p, &sched)).unwrap();
            (serde_json::to_string(&set).unwrap(), serde_json::to_string(&r).unwrap(), r)
        })
    };
    let (set1, rep1, wide) = extended(1);
    let (set4, rep4, _) = extended(4);
    let deterministic = set1 == set4 && rep1 == rep4;

    let ok = !set.elements.is_empty()
        && not_persisting == 0
        && audit.is_clean()
        && wide.proper()
        && deterministic
        && elapsed < AUDIT_BUDGET;
    outcome(
        ok,
        format!(
            "|S_ℕ ∩ [1, {n}]| = {}, {not_persisting} lost at 2m/4m; {} triples, {} violations in {elapsed:.1?} on 1 worker; \
             [1, {EXTENDED_AUDIT_N}]: {} triples, {} violations; 1 vs 4 workers identical: {deterministic}",
            set.elements.len(),
            audit.triples_checked,
            audit.violation_count,
            wide.audit.triples_checked,
            wide.audit.violation_count
        ),
    )
}

fn enumerate_shipped(cfg: &RunConfig) -> (AlphaSchedule, IntegerSetReport) {
    let sched = schedule(cfg);
    let set = enumerate(cfg.scan.enumerate_n, &cfg.params, &sched, cfg.scan.guard_fraction).unwrap();
    (sched, set)
}

fn criterion_7() -> Outcome {
    let cfg = shipped();
    let (sched, set) = enumerate_shipped(&cfg);
    let mut ok = !cfg.neighborhoods.is_empty();
    let mut parts = Vec::new();
    for nb in &cfg.neighborhoods {
        let hit = nilbohr_hit_in(&nb.nbhd, &set, cfg.params.tol).unwrap();
        let valid = hit.revalidate(&nb.nbhd, &cfg.params, &sched).unwrap();
        ok &= hit.witness.is_some() && valid;
        parts.push(match hit.witness {
            Some(w) => format!("{}: n = {w}, norms {:.4?}, revalidated {valid}", nb.name, hit.norms),
            None => format!("{}: no hit in [1, {}]", nb.name, hit.search_bound),
        });
    }
    outcome(ok, parts.join("; "))
}

fn restricted_discrepancy(cfg: &RunConfig) -> (usize, f64) {
    let (_, set) = enumerate_shipped(cfg);
    let r = discrepancy(&sqrt2_family(2), &set.elements, cfg.stats.bins).unwrap();
    (set.elements.len(), r.max_binned())
}

fn criterion_8() -> Outcome {
    let cfg = shipped();
    let st = &cfg.stats;
    let linear_sample: Vec<u64> = (1..=st.linear_n).collect();
    let linear = discrepancy(&sqrt2_family(1), &linear_sample, st.bins).unwrap().max_binned();
    let (size, restricted) = restricted_discrepancy(&cfg);
    let coarse = RunConfig::load(&config_path("coarse.json")).expect("coarse config loads");
    let (coarse_size, coarse_d) = restricted_discrepancy(&coarse);
    outcome(
        linear < st.linear_tolerance && restricted < st.restricted_tolerance,
        format!(
            "linear {linear:.5} (< {}); restricted {restricted:.4} over {size} elements (< {}); \
             coarse config for reference: {coarse_d:.4} over {coarse_size}",
            st.linear_tolerance, st.restricted_tolerance
        ),
    )
}

fn criterion_9() -> Outcome {
    let cfg = shipped();
    let (p, sched) = (cfg.params, schedule(&cfg));
    let set = enumerate(EXTENDED_AUDIT_N, &p, &sched, cfg.scan.guard_fraction).unwrap();
    let live = IntegerColorer::new(&p, &sched);
    let table: Vec<ColorId> =
        std::iter::once(ColorId(0)).chain((1..=EXTENDED_AUDIT_N).map(|n| live.color(n).unwrap().0)).collect();
    let base = FnColorer(|n: u64| table[n as usize]);
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    let mut audit_caught = 0;
    for _ in 0..MUTATION_TRIALS {
        let s = set.elements[rng.gen_range(0..set.elements.len())];
        let x = rng.gen_range(1..=EXTENDED_AUDIT_N - 2 * s);
        let c = table[x as usize];
        let overrides: HashMap<u64, ColorId> = [(x + s, c), (x + 2 * s, c)].into();
        let mutated = OverrideColorer { inner: &base, overrides };
        let r = audit_3ap(EXTENDED_AUDIT_N, &set.elements, &mutated).unwrap();
        if r.violations.contains(&(x, s)) {
            audit_caught += 1;
        }
    }

    let mut cert_caught = 0;
    for t in 0..MUTATION_TRIALS {
        let s = sample(&p, 9_000 + t).unwrap();
        let honest = is_member(&s, &p).unwrap();
        let mut forged = honest.clone();
        let bump = rng.gen_range(1e-6..1e-3);
        match t % 6 {
            0 => forged.is_member = !forged.is_member,
            1 => forged.margins.special += bump,
            2 => forged.margins.others -= bump,
            3 => forged.margins.sum += bump,
            4 => forged.tail_sum -= bump,
            _ => forged.special_index = forged.special_index.map(|i| i % 2000 + 1),
        }
        // pushing one coordinate of the point across a clause boundary
        let (i, _) = s.entries()[rng.gen_range(0..s.support_len())];
        let pushed = SparsePoint::from_pairs(
            s.iter().map(|(j, a)| (j, if j == i { a.value() + 0.25 } else { a.value() })),
            s.ambient(),
        )
        .unwrap();
        if honest.confirms(&s, &p) && !forged.confirms(&s, &p) && !is_member(&pushed, &p).unwrap().is_member {
            cert_caught += 1;
        }
    }
    outcome(
        audit_caught == MUTATION_TRIALS && cert_caught == MUTATION_TRIALS,
        format!(
            "injected 3-APs caught {audit_caught}/{MUTATION_TRIALS}; forged certificates and pushed points caught {cert_caught}/{MUTATION_TRIALS}"
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("parameter windows", criterion_1),
        ("parallelogram law", criterion_2),
        ("second-difference window", criterion_3),
        ("torus 3-AP coloring", criterion_4),
        ("Bohr witness", criterion_5),
        ("integer audit", criterion_6),
        ("nil-Bohr hits", criterion_7),
        ("equidistribution", criterion_8),
        ("mutation soundness", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = (k + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let o = run();
        println!("[{}] {id} {name}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.ok);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
