//! The ten acceptance criteria. Each prints one PASS/FAIL line; the test
//! fails if any criterion fails.

use std::path::Path;
use std::time::Instant;

use jetblend_core::blender::{self, SkewSystem};
use jetblend_core::covering::{certify_covering, check_certificate, CoveringOutcome};
use jetblend_core::flatpoly::{auto_lambda, find_flat_poly, lambda_threshold, minimal_flat_poly, FlatPolyResult};
use jetblend_core::ifs::{decide_two_map_line, IFSystem, Itinerary, TwoMapVerdict};
use jetblend_core::jet::*;
use jetblend_core::jetcover::*;
use jetblend_core::linalg::Matrix;
use jetblend_core::scalar::{self, int, ratio};
use jetblend_core::{AffineMap, BoxN, Interval, Scalar};
use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn symmetric_box() -> BoxN {
    BoxN::new(vec![Interval::new(int(-2), int(2)).unwrap()]).unwrap()
}

fn covering_example() -> Verdict {
    let target = symmetric_box();
    let good = IFSystem::symmetric_pair(&ratio(3, 4)).map_err(e)?;
    let cert = match certify_covering(&good, &target, &ratio(1, 100), 32).map_err(e)? {
        CoveringOutcome::Certified(c) => c,
        other => return Err(format!("λ = 3/4 not certified: {other:?}")),
    };
    ensure(check_certificate(&cert).map_err(e)?, "certificate does not re-check")?;
    let bad = IFSystem::symmetric_pair(&ratio(1, 2)).map_err(e)?;
    let out = certify_covering(&bad, &target, &ratio(1, 100), 32).map_err(e)?;
    ensure(matches!(out, CoveringOutcome::Failure { .. }), "λ = 1/2 was certified")?;
    Ok(format!("λ=3/4 certified with {} leaves; λ=1/2 fails", cert.leaves.len()))
}

fn two_map_trichotomy() -> Verdict {
    let pair = |l: Scalar| (AffineMap::line(l.clone(), int(1)).unwrap(), AffineMap::line(l, int(-1)).unwrap());
    let (f1, f2) = pair(ratio(3, 4));
    let (lo, hi) = match decide_two_map_line(&f1, &f2).map_err(e)? {
        TwoMapVerdict::RobustInterior { lo, hi } => (lo, hi),
        v => return Err(format!("λ = 3/4 gave {v:?}")),
    };
    let sys = IFSystem::new(vec![("+".into(), f1), ("-".into(), f2)]).map_err(e)?;
    let target = BoxN::new(vec![Interval::new(lo.clone(), hi.clone()).map_err(e)?]).map_err(e)?;
    let margin = (&hi - &lo) / int(1 << 20);
    let re = certify_covering(&sys, &target, &margin, 40).map_err(e)?;
    ensure(matches!(re, CoveringOutcome::Certified(_)), "trimmed interval does not re-certify")?;
    for l in [ratio(1, 4), ratio(1, 2)] {
        let (f1, f2) = pair(l.clone());
        let v = decide_two_map_line(&f1, &f2).map_err(e)?;
        ensure(v == TwoMapVerdict::PerturbablyEmpty, format!("λ = {l} gave {v:?}"))?;
    }
    Ok(format!("3/4 robust on [{lo}, {hi}] and re-certified; 1/4, 1/2 empty"))
}

fn jet_action_formula() -> Verdict {
    let lam = ratio(3, 4);
    for r in 1..=3usize {
        let n = r + 1;
        for (s, fam) in pm_families(&lam, r).map_err(e)?.iter().enumerate() {
            let lift = lift_family(fam);
            let mut expected = Matrix::zeros(n, n);
            for i in 0..n {
                expected[(i, i)] = lam.clone();
                if i > 0 {
                    expected[(i, i - 1)] = int(i as i64);
                }
            }
            ensure(lift.matrix == expected, format!("lift matrix differs at r = {r}"))?;
            let rev = reversal_matrix(n);
            let conj = rev.mul(&lift.matrix).and_then(|m| m.mul(&rev)).map_err(e)?;
            let (j, t) = shift_normal_form(&lam, n);
            ensure(conj == j, format!("R·L·R ≠ J at r = {r}"))?;
            let offset = rev.mul_vec(&lift.offset).map_err(e)?;
            let sign = int(pm_sign(s));
            ensure(offset == t.iter().map(|x| x * &sign).collect::<Vec<_>>(), format!("R·β ≠ ±T at r = {r}"))?;
        }
    }
    Ok("subdiagonal (1..r) and reversal conjugacy exact for r = 1, 2, 3".into())
}

fn finite_differences() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let r = rng.gen_range(1..=3usize);
        let lam = ratio(rng.gen_range(4..=14), 16);
        let len = rng.gen_range(1..=15usize);
        let word = Itinerary::new((0..len).map(|_| rng.gen_range(0..2usize)).collect());
        let fams = pm_families(&lam, r).map_err(e)?;
        let exact = continuation_jet(&fams, &word, r).map_err(e)?;
        let approx = finite_difference_jet(&fams, &word, r, 1e-4).map_err(e)?;
        for (i, a) in approx.coeffs.iter().enumerate() {
            let x = scalar::to_f64(exact.coeff(i));
            let rel = (a - x).abs() / x.abs().max(1.0);
            worst = worst.max(rel);
            ensure(rel <= 1e-5, format!("trial {trial}: order {i} relative error {rel:e}"))?;
        }
    }
    Ok(format!("50 words, worst relative error {worst:.2e}"))
}

fn strong_duality(r: &FlatPolyResult) -> bool {
    let rhs = (0..r.n_vanish).map(|i| -Scalar::from_integer(binomial(BigInt::from(r.lp_degree), BigInt::from(i))));
    rhs.zip(&r.dual).fold(Scalar::zero(), |acc, (b, y)| acc + b * y) == r.l1_nonleading
}

fn vanishes_by_division(r: &FlatPolyResult) -> bool {
    let mut p = r.q.clone();
    for _ in 0..r.n_vanish {
        let (quot, rem) = p.div_linear(&Scalar::one());
        if !rem.is_zero() {
            return false;
        }
        p = quot;
    }
    true
}

fn flat_polynomial() -> Verdict {
    let n1 = minimal_flat_poly(1, 1).map_err(e)?;
    ensure(n1.l1_nonleading == int(1), format!("N=1 optimum {}", n1.l1_nonleading))?;
    ensure(n1.q.coeffs() == [int(-1), int(1)], "N=1 polynomial is not x − 1")?;
    let n2 = minimal_flat_poly(2, 3).map_err(e)?;
    ensure(n2.l1_nonleading == int(2), format!("N=2, n=3 optimum {}", n2.l1_nonleading))?;
    ensure(strong_duality(&n2), "duality fails at N=2, n=3")?;
    let bound = int(2) - ratio(1, 16);
    let mut found = Vec::new();
    for nv in [2usize, 3] {
        let r = find_flat_poly(nv, &ratio(1, 16), 64).map_err(e)?;
        ensure(r.l1_nonleading <= bound, format!("N={nv} optimum {}", r.l1_nonleading))?;
        ensure(vanishes_by_division(&r), format!("N={nv}: division by (x−1)^N leaves a remainder"))?;
        ensure(strong_duality(&r), format!("N={nv}: primal and dual objectives differ"))?;
        found.push(format!("N={nv}: n={} L1={}", r.degree, r.l1_nonleading));
    }
    Ok(format!("N=1 → 1, N=2 n=3 → 2, {}", found.join(", ")))
}

fn system(nv: usize) -> Result<JetCoveringSystem, String> {
    let q = find_flat_poly(nv, &ratio(1, 16), 64).map_err(e)?;
    JetCoveringSystem::from_flat(&q, &auto_lambda(&q).map_err(e)?).map_err(e)
}

fn pipeline() -> Verdict {
    let mut notes = Vec::new();
    for r in [1usize, 2] {
        let q = find_flat_poly(r + 1, &ratio(1, 16), 64).map_err(e)?;
        let th = lambda_threshold(&q).map_err(e)?;
        let lam = auto_lambda(&q).map_err(e)?;
        ensure(lam > th, format!("r={r}: λ {lam} not above threshold {th}"))?;
        let sys = JetCoveringSystem::from_flat(&q, &lam).map_err(e)?;
        for (m, v) in sys.verify_semiconjugacy().map_err(e)? {
            let zero = m.is_zero() && v.iter().all(Zero::is_zero);
            ensure(zero, format!("r={r}: nonzero semi-conjugacy residual"))?;
        }
        let cert = certify_delta_covering(&sys).map_err(e)?;
        ensure(cert.analytic, format!("r={r}: analytic Δ-covering proof fails"))?;
        ensure(check_delta_certificate(&sys, &cert).map_err(e)?, format!("r={r}: subdivision proof fails"))?;
        notes.push(format!("r={r}: λ={lam}, η={}", sys.eta));
    }
    Ok(notes.join("; "))
}

fn random_interior_target(sys: &JetCoveringSystem, rng: &mut ChaCha8Rng) -> Jet {
    let u: Vec<Scalar> = (0..sys.degree())
        .map(|k| sys.delta.axis(k).hi() * ratio(rng.gen_range(-896..=896), 1024))
        .collect();
    let mut x = sys.pi.mul_vec(&u).unwrap();
    x.reverse();
    Jet::scalar(x).unwrap()
}

/// Word of length 20 made of two blocks, block `i` chosen by bit `i`.
fn block_word(blocks: &[&[usize]; 2], bits: u32) -> Itinerary {
    let width = blocks[0].len();
    Itinerary::new((0..20 / width).flat_map(|i| blocks[(bits >> i & 1) as usize].to_vec()).collect())
}

fn realizer() -> Verdict {
    let tol = ratio(1, 100_000_000);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut notes = Vec::new();
    for nv in [2usize, 3] {
        let sys = system(nv)?;
        let k = minimal_steps(&sys, &tol, DEFAULT_STEP_CAP).map_err(e)?;
        let mut realized = 0;
        while realized < 50 {
            let target = random_interior_target(&sys, &mut rng);
            let res = realize_jet(&sys, &target, &tol, RealizeOptions::default()).map_err(e)?;
            ensure(res.steps == k, format!("N={nv}: used {} steps, predicted {k}", res.steps))?;
            ensure(res.achieved_residual <= tol, format!("N={nv}: residual above 1e-8"))?;
            let check = pm_continuation_jet(&sys.lambda, &res.itinerary, nv - 1).map_err(e)?;
            ensure(target.sub(&check).map_err(e)?.inf_norm() == res.achieved_residual, "reported residual disagrees")?;
            realized += 1;
        }
        // round trips: words of length 20 built from two blocks, kept when
        // their jet is certified in A
        let blocks: [&[usize]; 2] = if nv == 2 { [&[0, 1], &[1, 0]] } else { [&[0, 1, 1, 0], &[1, 0, 0, 1]] };
        let (mut tried, mut kept) = (0, 0);
        for bits in 0u32.. {
            if kept == 10 {
                break;
            }
            ensure(bits < 1 << (20 / blocks[0].len()), format!("N={nv}: only {kept} block words in A"))?;
            let word = block_word(&blocks, bits);
            tried += 1;
            let target = pm_continuation_jet(&sys.lambda, &word, nv - 1).map_err(e)?;
            if !matches!(membership_a(&sys, &target, &Scalar::zero()).map_err(e)?, Membership::InA { .. }) {
                continue;
            }
            kept += 1;
            let res = realize_jet(&sys, &target, &tol, RealizeOptions::default()).map_err(e)?;
            ensure(res.achieved_residual <= residual_bound(&sys, res.steps), "round trip exceeds residual_bound(k)")?;
        }
        notes.push(format!("N={nv}: 50 random at k={k}, 10/{tried} block words in A recovered"));
    }
    Ok(notes.join("; "))
}

fn blender_demo() -> Verdict {
    for l in [ratio(3, 5), ratio(3, 4), ratio(9, 10)] {
        let sys = SkewSystem::new(l.clone(), ratio(1, 10)).map_err(e)?;
        ensure(blender::verify_example_covering(&sys).map_err(e)?.covered, format!("λ = {l} not covered"))?;
    }
    let bad = SkewSystem::new(ratio(9, 20), ratio(1, 10)).map_err(e)?;
    ensure(!blender::verify_example_covering(&bad).map_err(e)?.covered, "λ = 9/20 covered")?;
    let lam = ratio(3, 4);
    let sys = SkewSystem::new(lam.clone(), ratio(1, 10)).map_err(e)?;
    let render = blender::render_unstable_union(&sys, &Scalar::zero(), 12, 64, 64).map_err(e)?;
    let bound = scalar::pow(&lam, 12) / (int(1) - &lam);
    let cov = blender::coverage_check(&render.heights, &ratio(1, 20), &bound).map_err(e)?;
    ensure(cov.holds, format!("worst distance {} exceeds {}", cov.worst_distance, cov.bound))?;
    Ok(format!("3/5, 3/4, 9/10 covered, 9/20 not; depth 12 worst {} ≤ {}", cov.worst_distance, cov.bound))
}

fn nearly_affine() -> Verdict {
    let lam = 0.75;
    let step = 1.0 / 50.0;
    let exact = |sign| blender::model_table(lam, sign, step, |_, _| (0.0, 0.0, 0.0));
    let rep = blender::nearly_affine_check(&exact(1), &exact(-1), lam, step).map_err(e)?;
    for b in &rep.branches {
        ensure(b.c0_deviation == 0.0 && b.c1_deviation == 0.0, format!("model branch {} deviates", b.branch))?;
    }
    let param = |sign: i64| -> Vec<blender::ParamSample> {
        let (lo, hi) = blender::model_domain(lam, sign);
        let ny = ((hi - lo) / step).floor() as i64;
        (-2..=2)
            .flat_map(|i| {
                (0..=ny).map(move |j| {
                    let (a, y) = (i as f64 * step, lo + j as f64 * step);
                    blender::ParamSample { a, y, jet: blender::model_param_jet(lam, sign, a, y, 2) }
                })
            })
            .collect()
    };
    let prep = blender::nearly_affine_parametric(&param(1), &param(-1), lam).map_err(e)?;
    ensure(prep.branches.iter().all(|b| b.deviation == 0.0), "parametric model deviates")?;
    use std::f64::consts::PI;
    let amp = 1.0 / 100.0;
    let bumped = |sign| {
        blender::model_table(lam, sign, step, |x, _| (amp * (PI * x / 2.0).sin(), amp * PI / 2.0 * (PI * x / 2.0).cos(), 0.0))
    };
    let rep = blender::nearly_affine_check(&bumped(1), &bumped(-1), lam, step).map_err(e)?;
    let est = rep.branches.iter().map(|b| b.c0_deviation).fold(0.0, f64::max);
    ensure((1.0 / 200.0..=2.0 / 100.0).contains(&est), format!("estimate {est} outside [1/200, 1/50]"))?;
    Ok(format!("model deviation 0; perturbation estimate {est:.6}"))
}

fn args(v: &[&str]) -> Vec<String> {
    std::iter::once("jetblend").chain(v.iter().copied()).map(String::from).collect()
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(e)?;
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let setup = [
        args(&["certify", "--lambda", "3/4", "--out", &p("cert.json")]),
        args(&["jet-system", "--r", "1", "--out", &p("sys.json")]),
        args(&["nearly-affine", "--emit-model", &p("model")]),
    ];
    for a in &setup {
        let o = jetblend_cli::execute(a);
        o.commit().map_err(e)?;
        ensure(o.status.code() == 0, format!("setup {a:?} failed"))?;
    }
    let model = |n: &str| Path::new(&p("model")).join(n).to_str().unwrap().to_string();
    let cfg = p("cfg.json");
    std::fs::write(&cfg, r#"{"lambda": "2/3", "depth": 5}"#).map_err(e)?;
    let commands = [
        args(&["limit-set", "--lambda", "3/4", "--depth", "8", "--ppm", &p("l.ppm"), "--width", "64", "--height", "16"]),
        args(&["limit-set", "--lambda", "3/4", "--depth", "6", "--mode", "float-oracle"]),
        args(&["limit-set", "--config", &cfg]),
        args(&["certify", "--lambda", "3/4", "--out", &p("c2.json")]),
        args(&["certify", "--lambda", "1/2"]),
        args(&["check-cert", "--cert", &p("cert.json")]),
        args(&["two-map-verdict", "--lambda", "3/4"]),
        args(&["two-map-verdict", "--map1", "1/3,1", "--map2", "-1/2,-1"]),
        args(&["jet-system", "--r", "2"]),
        args(&["realize", "--system", &p("sys.json"), "--word", "+--++--+-++-"]),
        args(&["realize", "--r", "1", "--word", "+--++--+-++-", "--x-jet", "1/2,1/20"]),
        args(&["blender-render", "--depth", "8", "--width", "32", "--height", "32", "--out", &p("b.ppm"), "--coverage-step", "1/10", "--cert", &p("bc.json"), "--heights", &p("h.csv")]),
        args(&["blender-cover", "--lambda", "3/5", "--point", "1/3"]),
        args(&["nearly-affine", "--plus", &model("plus.csv"), "--minus", &model("minus.csv"), "--plus-param", &model("plus_param.csv"), "--minus-param", &model("minus_param.csv")]),
        args(&["nearly-affine", "--emit-model", &p("m2"), "--perturb", "1/100"]),
        args(&["flat-poly", "--n", "3", "--lambda", "auto"]),
    ];
    for a in &commands {
        let first = jetblend_cli::execute(a);
        let second = jetblend_cli::execute(a);
        ensure(first.status == second.status, format!("{a:?}: exit status differs"))?;
        ensure(first.stdout == second.stdout, format!("{a:?}: stdout differs"))?;
        ensure(first.files == second.files, format!("{a:?}: output files differ"))?;
        ensure(first.status.code() != 2, format!("{a:?}: rejected: {}", first.stderr))?;
    }
    Ok(format!("{} commands byte-identical across two runs", commands.len()))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        ("covering example", covering_example),
        ("two-map trichotomy", two_map_trichotomy),
        ("jet-action formula", jet_action_formula),
        ("finite-difference agreement", finite_differences),
        ("flat polynomial", flat_polynomial),
        ("jet covering pipeline", pipeline),
        ("realizer", realizer),
        ("blender demo", blender_demo),
        ("nearly-affine checker", nearly_affine),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = f();
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                println!("criterion {:>2} FAIL {name} ({secs:.1}s): {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
