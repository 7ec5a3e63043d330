//! Acceptance harness. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails outside the documented-deviation list.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use tce::bench::{run_benchmark, BenchmarkConfig, BenchmarkOutput, DataRegime, Method};
use tce::chi2::chi2_quantile;
use tce::confidence::{general_intervals, pev_intervals};
use tce::dual::{effect_given_successors, score_pev_class};
use tce::fixtures::*;
use tce::orderings::{enumerate_parent_sets, enumerate_pev_classes, ev_optimal_orderings, CompleteOrdering};
use tce::scm::{generate_benchmark_scm, EffectTruth};
use tce::{conf_general, conf_pev, empirical_covariance, estimate_effects, HypothesisClass, LinearScm, NodeSet, PdMatrix, RegimeTag};

/// Criteria that fail for reasons analysed outside the code; they still print FAIL.
const DOCUMENTED_DEVIATIONS: &[&str] = &[
    "qualitative: width stable across data regimes",
    "rate: partial-EV estimate consistency",
    "rate: conf_pev no wider than conf_general",
];

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn main() {
    let mut outcomes = Vec::new();
    let mut run = |name: &'static str, f: &dyn Fn() -> (bool, String)| {
        let t = Instant::now();
        let (pass, detail) = f();
        let line = format!(
            "{} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        println!("{line}");
        outcomes.push(Outcome { name, pass, detail });
    };

    run("appendix B fixture", &appendix_b);
    run("appendix A fixture", &appendix_a);
    run("oracle equivalence", &oracle_equivalence);
    run("determinant identity", &determinant_identity);
    run("test-inversion consistency", &test_inversion);
    run("chi-square quantiles", &chi_square);
    run("rate: partial-EV estimate consistency", &pev_consistency_rate);
    run("rate: conf_pev no wider than conf_general", &nesting_rate);

    let nonzero = desk_benchmark(EffectTruth::Nonzero);
    let zero = desk_benchmark(EffectTruth::Zero);
    run("desk-scale coverage", &|| desk_coverage(&nonzero));
    run("qualitative: general_conf always contains zero", &|| general_zero(&nonzero));
    run("qualitative: width ordering ev <= pev <= general", &|| width_ordering(&nonzero));
    run("qualitative: width stable across data regimes", &|| width_stability(&nonzero));
    run("zero-truth coverage and zero proportion", &|| zero_truth(&zero));

    let unexpected: Vec<&Outcome> =
        outcomes.iter().filter(|o| !o.pass && !DOCUMENTED_DEVIATIONS.contains(&o.name)).collect();
    let documented = outcomes.iter().filter(|o| !o.pass && DOCUMENTED_DEVIATIONS.contains(&o.name)).count();
    println!(
        "acceptance: {} passed, {} failed ({} documented deviation{})",
        outcomes.iter().filter(|o| o.pass).count(),
        outcomes.iter().filter(|o| !o.pass).count(),
        documented,
        if documented == 1 { "" } else { "s" }
    );
    if !unexpected.is_empty() {
        for o in unexpected {
            eprintln!("unexpected failure: {}: {}", o.name, o.detail);
        }
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- fixtures

fn oracle_covariance(weights: &DMatrix<f64>, variances: &[f64]) -> DMatrix<f64> {
    let d = variances.len();
    let a = (DMatrix::identity(d, d) - weights).try_inverse().unwrap();
    &a * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(variances)) * a.transpose()
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

fn appendix_b() -> (bool, String) {
    let printed = appendix_b_sigma().matrix().clone();
    let ev_pair = RegimeTag::partial_ev(0, 1).unwrap();
    let m1 = LinearScm::new(
        appendix_b_weights_1(),
        APPENDIX_B_VARIANCES_1.to_vec(),
        CompleteOrdering::new(vec![0, 1, 2]).unwrap(),
        ev_pair,
    )
    .unwrap();
    let m2 = LinearScm::new(
        appendix_b_weights_2(),
        APPENDIX_B_VARIANCES_2.to_vec(),
        CompleteOrdering::new(vec![2, 1, 0]).unwrap(),
        ev_pair,
    )
    .unwrap();
    let err_lib = max_abs_diff(m1.covariance().matrix(), &printed).max(max_abs_diff(m2.covariance().matrix(), &printed));
    let err_oracle = max_abs_diff(&oracle_covariance(&appendix_b_weights_1(), &APPENDIX_B_VARIANCES_1), &printed)
        .max(max_abs_diff(&oracle_covariance(&appendix_b_weights_2(), &APPENDIX_B_VARIANCES_2), &printed));
    let c1 = (printed[(0, 0)] - schur(&printed, 1, 1, &[0])).abs();
    let c2 = (schur(&printed, 0, 0, &[1, 2]) - schur(&printed, 1, 1, &[2])).abs();
    let oracle_effect_1 = (DMatrix::identity(3, 3) - appendix_b_weights_1()).try_inverse().unwrap()[(1, 0)];
    let e1 = (m1.true_effect(0, 1) - APPENDIX_B_EFFECT).abs().max((oracle_effect_1 - APPENDIX_B_EFFECT).abs());
    let e2 = m2.true_effect(0, 1).abs();
    let pass = err_lib <= 1e-12 && err_oracle <= 1e-12 && c1 <= 1e-12 && c2 <= 1e-12 && e1 <= 1e-12 && e2 == 0.0;
    (
        pass,
        format!("cov err {err_lib:.1e} (oracle {err_oracle:.1e}), constraints {c1:.1e}/{c2:.1e}, effects {e1:.1e}/{e2:.1e}"),
    )
}

fn appendix_a() -> (bool, String) {
    let sigma = appendix_a_sigma();
    let s = sigma.matrix().clone();
    let prec = sigma.inverse().unwrap();
    let est = estimate_effects(&prec, 0, 1, RegimeTag::partial_ev(0, 1).unwrap()).unwrap();
    let singleton = est.values.len() == 1 && (est.values[0] - 1.0).abs() <= 1e-10;

    // Each of the 6 orderings of 3 nodes is its own (p(1), p(2)) class.
    let mut satisfying = Vec::new();
    for perm in permutations(3) {
        let pos = |k: usize| perm.iter().position(|&x| x == k).unwrap();
        let gap = (schur(&s, 0, 0, &perm[..pos(0)]) - schur(&s, 1, 1, &perm[..pos(1)])).abs();
        if gap <= 1e-12 {
            satisfying.push(perm.clone());
        }
    }
    let unique = satisfying == vec![vec![0, 1, 2]];
    (
        singleton && unique,
        format!("effects {:?}, constraint-satisfying orderings {:?}", est.values, satisfying),
    )
}

// ------------------------------------------------------- oracle equivalence

fn oracle_equivalence() -> (bool, String) {
    let mut failures = Vec::new();
    let mut checked = 0;
    for d in 3..=6 {
        let perms = permutations(d);
        for seed in 0..100u64 {
            let sigma = random_sigma(d, seed * 31 + d as u64);
            let (i, j) = query_pair(d, seed);
            if let Err(e) = equivalence_case(&sigma, &perms, i, j) {
                failures.push(format!("d={d} seed={seed}: {e}"));
            }
            checked += 1;
        }
    }
    let detail = match failures.first() {
        None => format!("{checked} matrices across d=3..6 agree"),
        Some(f) => format!("{} of {checked} disagree, first: {f}", failures.len()),
    };
    (failures.is_empty(), detail)
}

fn equivalence_case(sigma: &DMatrix<f64>, perms: &[Vec<usize>], i: usize, j: usize) -> Result<(), String> {
    let d = sigma.nrows();
    let prec = PdMatrix::new(sigma.clone().try_inverse().unwrap()).map_err(|e| e.to_string())?;
    let fits: Vec<OrderingFit> = perms.iter().map(|p| fit_ordering(sigma, p, i, j)).collect();
    let tol = 1e-9;

    // Unrestricted: all orderings tie; effects over all orderings.
    let gen_scores: Vec<f64> = fits.iter().map(sup_general).collect();
    let gen_best = gen_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !gen_scores.iter().all(|&s| ties(s, gen_best)) {
        return Err("unrestricted supremum not ordering-invariant".into());
    }
    let est = estimate_effects(&prec, i, j, RegimeTag::General).map_err(|e| e.to_string())?;
    if !ties(est.optimum, gen_best) {
        return Err(format!("general optimum {} vs {}", est.optimum, gen_best));
    }
    let brute = distinct(fits.iter().map(|f| f.effect));
    if !same_values(&est.values, &brute, tol) {
        return Err(format!("general effects {:?} vs {:?}", est.values, brute));
    }
    let lib_sets: BTreeSet<u32> = enumerate_parent_sets(d, i, j).unwrap().map(|s| s.bits()).collect();
    let brute_sets: BTreeSet<u32> = fits
        .iter()
        .filter(|f| f.i_first)
        .map(|f| NodeSet::from_slice(&f.perm[..f.perm.iter().position(|&k| k == i).unwrap()]).bits())
        .collect();
    if lib_sets != brute_sets {
        return Err("parent-set classes differ".into());
    }
    let lib_class_effects: Vec<f64> = enumerate_parent_sets(d, i, j)
        .unwrap()
        .map(|p| effect_given_successors(&prec, i, j, p.with(i).complement(d)).unwrap())
        .collect();
    let brute_forward = distinct(fits.iter().filter(|f| f.i_first).map(|f| f.effect));
    if !same_values(&distinct(lib_class_effects), &brute_forward, tol) {
        return Err("parent-set class effects differ".into());
    }

    // Partial equal variance of (i, j).
    let pev_scores: Vec<f64> = fits.iter().map(|f| sup_pev(f, i, j)).collect();
    let pev_best = pev_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let class_of = |p: &[usize]| HypothesisClass::of_ordering(&CompleteOrdering::new(p.to_vec()).unwrap(), i, j, true);
    let brute_classes: BTreeSet<HypothesisClass> = perms.iter().map(|p| class_of(p)).collect();
    let lib_classes: BTreeSet<HypothesisClass> = enumerate_pev_classes(d, i, j).unwrap().into_iter().collect();
    if lib_classes != brute_classes {
        return Err("partial-EV classes differ".into());
    }
    let log_det = prec.log_det().unwrap();
    let lib_best = lib_classes
        .iter()
        .map(|c| score_pev_class(&prec, log_det, c, i, j).unwrap().sup)
        .fold(f64::NEG_INFINITY, f64::max);
    if !ties(lib_best, pev_best) {
        return Err(format!("partial-EV optimum {lib_best} vs {pev_best}"));
    }
    let brute_arg: BTreeSet<HypothesisClass> =
        fits.iter().zip(&pev_scores).filter(|(_, &s)| ties(s, pev_best)).map(|(f, _)| class_of(&f.perm)).collect();
    let est = estimate_effects(&prec, i, j, RegimeTag::PartialEv { i, j }).map_err(|e| e.to_string())?;
    let lib_arg: BTreeSet<HypothesisClass> = est.classes.iter().flatten().cloned().collect();
    if lib_arg != brute_arg {
        return Err(format!("partial-EV argmax classes differ ({} vs {})", lib_arg.len(), brute_arg.len()));
    }
    let brute = distinct(fits.iter().zip(&pev_scores).filter(|(_, &s)| ties(s, pev_best)).map(|(f, _)| f.effect));
    if !same_values(&est.values, &brute, tol) {
        return Err(format!("partial-EV effects {:?} vs {:?}", est.values, brute));
    }

    // Full equal variance.
    // The supremum is decreasing in the score Σ_k r_k; ties are taken on the score.
    let ev_sups: Vec<f64> = fits.iter().map(sup_ev).collect();
    let ev_sup_best = ev_sups.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ev_scores: Vec<f64> = fits.iter().map(|f| -f.r.iter().sum::<f64>()).collect();
    let ev_best = ev_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let search = ev_optimal_orderings(&prec).map_err(|e| e.to_string())?;
    let df = d as f64;
    let lib_sup = -df * (search.min_score() / df).ln() - df;
    if !ties(lib_sup, ev_sup_best) || !ties(search.min_score(), -ev_best) {
        return Err(format!("EV optimum {lib_sup} vs {ev_sup_best}"));
    }
    let brute_arg: BTreeSet<Vec<usize>> =
        fits.iter().zip(&ev_scores).filter(|(_, &s)| ties(s, ev_best)).map(|(f, _)| f.perm.clone()).collect();
    let lib_arg: BTreeSet<Vec<usize>> = search.optimal_orderings(usize::MAX).iter().map(|o| o.perm().to_vec()).collect();
    if lib_arg != brute_arg {
        return Err(format!("EV argmax orderings differ ({} vs {})", lib_arg.len(), brute_arg.len()));
    }
    let est = estimate_effects(&prec, i, j, RegimeTag::FullEv).map_err(|e| e.to_string())?;
    let brute = distinct(fits.iter().zip(&ev_scores).filter(|(_, &s)| ties(s, ev_best)).map(|(f, _)| f.effect));
    if !same_values(&est.values, &brute, tol) {
        return Err(format!("EV effects {:?} vs {:?}", est.values, brute));
    }
    Ok(())
}

// ----------------------------------------------------- determinant identity

fn determinant_identity() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for case in 0..500u64 {
        let d = 2 + (case % 7) as usize;
        let m = random_sigma(d, 1000 + case);
        let inv = m.clone().try_inverse().unwrap();
        let prec = PdMatrix::new((&inv + inv.transpose()) * 0.5).unwrap();
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut rng);
        let order = CompleteOrdering::new(perm).unwrap();
        let product: f64 = (0..d).map(|k| prec.conditional_entry(k, k, order.successors(k)).unwrap()).product();
        let det = prec.matrix().determinant();
        worst = worst.max((product - det).abs() / det.abs());
    }

    // log K(G) across the orderings of each partial-EV class.
    let mut k_spread = 0.0f64;
    let mut k_lib = 0.0f64;
    for d in 3..=6 {
        let perms = permutations(d);
        for seed in 0..20u64 {
            let sigma = random_sigma(d, 5000 + seed * 7 + d as u64);
            let (i, j) = query_pair(d, seed);
            let prec = PdMatrix::new(sigma.clone().try_inverse().unwrap()).unwrap();
            let log_det_p = -sigma.determinant().ln();
            let mut groups: BTreeMap<HypothesisClass, Vec<f64>> = BTreeMap::new();
            for p in &perms {
                let f = fit_ordering(&sigma, p, i, j);
                let log_k = 0.5 * log_det_p + (f.r[i] + f.r[j]).ln() - 0.5 * (f.r[i] * f.r[j]).ln();
                let class = HypothesisClass::of_ordering(&CompleteOrdering::new(p.clone()).unwrap(), i, j, true);
                groups.entry(class).or_default().push(log_k);
            }
            let log_det = prec.log_det().unwrap();
            for (class, ks) in groups {
                let lo = ks.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                k_spread = k_spread.max(hi - lo);
                let lib = score_pev_class(&prec, log_det, &class, i, j).unwrap().log_k;
                k_lib = k_lib.max((lib - lo).abs());
            }
        }
    }
    let pass = worst <= 1e-9 && k_spread <= 1e-10 && k_lib <= 1e-10;
    (pass, format!("max rel err {worst:.1e} over 500 pairs; log K spread {k_spread:.1e}, vs library {k_lib:.1e}"))
}

// ------------------------------------------------ test-inversion consistency

struct InversionStats {
    grid_points: usize,
    mismatches: usize,
    boundary_skips: usize,
    /// Largest `|statistic(endpoint) - critical value| / n`.
    worst_residual: f64,
}

fn test_inversion() -> (bool, String) {
    let alpha = 0.05;
    let mut st = InversionStats { grid_points: 0, mismatches: 0, boundary_skips: 0, worst_residual: 0.0 };
    let mut first = None;
    for d in [3usize, 4] {
        let perms = permutations(d);
        for seed in 0..12u64 {
            let truth = if seed % 2 == 0 { EffectTruth::Nonzero } else { EffectTruth::Zero };
            let regime = RegimeTag::partial_ev(0, 1).unwrap();
            let scm = generate_benchmark_scm(d, regime, truth, 0, 1, 900 + seed).unwrap();
            let n = [200usize, 1000, 5000][(seed % 3) as usize];
            let data = scm.sample(n, 77 + seed).unwrap();
            let sigma_hat = empirical_covariance(&data).unwrap();
            let s = sigma_hat.matrix().clone();
            let p = s.clone().try_inverse().unwrap();
            let p = (&p + p.transpose()) * 0.5;
            let prec = PdMatrix::new(p.clone()).unwrap();
            if let Err(e) = inversion_case(&s, &p, &prec, &perms, n, alpha, &mut st) {
                first.get_or_insert(format!("d={d} seed={seed}: {e}"));
            }
        }
    }
    let pass = st.mismatches == 0 && first.is_none() && st.worst_residual <= 1e-7;
    let mut detail = format!(
        "{} grid points, {} mismatches, {} within 1e-9 of the threshold skipped; worst endpoint residual/n {:.1e} (limit 1e-7)",
        st.grid_points, st.mismatches, st.boundary_skips, st.worst_residual
    );
    if let Some(f) = first {
        detail.push_str(&format!("; {f}"));
    }
    (pass, detail)
}

fn inversion_case(
    sigma: &DMatrix<f64>,
    p: &DMatrix<f64>,
    prec: &PdMatrix,
    perms: &[Vec<usize>],
    n: usize,
    alpha: f64,
    st: &mut InversionStats,
) -> Result<(), String> {
    let (i, j) = (0usize, 1usize);
    let d = sigma.nrows();
    let nf = n as f64;
    let crit1 = chi2_1(1.0 - alpha);
    let crit2 = chi2_2(1.0 - alpha);
    let others: Vec<usize> = (0..d).filter(|&k| k != i && k != j).collect();
    let fits: Vec<OrderingFit> = perms.iter().map(|q| fit_ordering(sigma, q, i, j)).collect();

    // Unrestricted: one class per parent set of i; statistic n ln(q(ψ)/r_i).
    let gen_classes: Vec<(Vec<usize>, f64)> = (0..1u32 << others.len())
        .map(|mask| {
            let succ: Vec<usize> = others.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 0).map(|(_, &k)| k).collect();
            let mut with_j = succ.clone();
            with_j.push(j);
            let r_i = schur(p, i, i, &with_j);
            (succ, r_i)
        })
        .collect();
    let gen_stat = |succ: &[usize], r_i: f64, psi: f64| nf * (profiled_variance(p, i, j, succ, psi) / r_i).ln();

    // Partial-EV: classes as (before, between) splits of the other nodes.
    let pev_sup = fits.iter().map(|f| sup_pev(f, i, j)).fold(f64::NEG_INFINITY, f64::max);
    let rev_sup = fits.iter().filter(|f| !f.i_first).map(|f| sup_pev(f, i, j)).fold(f64::NEG_INFINITY, f64::max);
    struct PevClass {
        before: Vec<usize>,
        between: Vec<usize>,
        succ: Vec<usize>,
        rest: f64,
        r_j: f64,
    }
    let mut pev_classes = Vec::new();
    for code in 0..3usize.pow(others.len() as u32) {
        let (mut before, mut between, mut after) = (Vec::new(), Vec::new(), Vec::new());
        let mut c = code;
        for &k in &others {
            match c % 3 {
                0 => before.push(k),
                1 => between.push(k),
                _ => after.push(k),
            }
            c /= 3;
        }
        let perm: Vec<usize> = before.iter().chain([&i]).chain(&between).chain([&j]).chain(&after).cloned().collect();
        let f = fit_ordering(sigma, &perm, i, j);
        let rest: f64 = others.iter().map(|&k| f.r[k].ln()).sum();
        let succ: Vec<usize> = between.iter().chain(&after).cloned().collect();
        pev_classes.push(PevClass { before, between, succ, rest, r_j: f.r[j] });
    }
    let pev_stat = |c: &PevClass, psi: f64| {
        let q = profiled_variance(p, i, j, &c.succ, psi);
        let sup_psi = -c.rest - 2.0 * (0.5 * (q + c.r_j)).ln() - d as f64;
        nf * (pev_sup - sup_psi)
    };
    let zero_pev = nf * (pev_sup - rev_sup) <= crit1;

    let region_gen = conf_general(prec, n, i, j, alpha).map_err(|e| e.to_string())?;
    let region_pev = conf_pev(prec, n, i, j, alpha).map_err(|e| e.to_string())?;
    if region_pev.includes_zero() != (zero_pev || pev_classes.iter().any(|c| pev_stat(c, 0.0) <= crit2)) {
        return Err("partial-EV zero membership differs".into());
    }
    for step in -300i32..=300 {
        let psi = step as f64 * 0.01;
        st.grid_points += 2;
        let g = gen_classes.iter().map(|(s, r)| gen_stat(s, *r, psi)).fold(f64::INFINITY, f64::min);
        let direct_gen = step == 0 || g <= crit1;
        if (g - crit1).abs() <= 1e-9 * crit1.max(1.0) && step != 0 {
            st.boundary_skips += 1;
        } else if direct_gen != region_gen.contains(psi) {
            st.mismatches += 1;
        }
        let t = pev_classes.iter().map(|c| pev_stat(c, psi)).fold(f64::INFINITY, f64::min);
        let direct_pev = t <= crit2 || (step == 0 && zero_pev);
        if (t - crit2).abs() <= 1e-9 * crit2.max(1.0) {
            st.boundary_skips += 1;
        } else if direct_pev != region_pev.contains(psi) {
            st.mismatches += 1;
        }
    }

    // Endpoint plug-back into the class statistic.
    for comp in general_intervals(prec, n, i, j, alpha).map_err(|e| e.to_string())? {
        if let Some((lo, hi)) = comp.bounds {
            let succ: Vec<usize> = comp.class.parents_i.with(i).with(j).complement(d).to_vec();
            let r_i = gen_classes.iter().find(|(s, _)| *s == succ).unwrap().1;
            for e in [lo, hi] {
                let res = (gen_stat(&succ, r_i, e) - crit1).abs();
                st.worst_residual = st.worst_residual.max(res / nf);
                if res > 1e-7 * nf {
                    return Err(format!("general endpoint residual {res:.2e}"));
                }
            }
        }
    }
    for comp in pev_intervals(prec, n, i, j, alpha).map_err(|e| e.to_string())?.intervals {
        if let Some((lo, hi)) = comp.bounds {
            let before = comp.class.parents_i.to_vec();
            let between = comp.class.parents_j.unwrap().without(i).difference(comp.class.parents_i).to_vec();
            let c = pev_classes.iter().find(|c| c.before == before && c.between == between).unwrap();
            for e in [lo, hi] {
                let res = (pev_stat(c, e) - crit2).abs();
                st.worst_residual = st.worst_residual.max(res / nf);
                if res > 1e-7 * nf {
                    return Err(format!("partial-EV endpoint residual {res:.2e}"));
                }
            }
        }
    }
    Ok(())
}

// ----------------------------------------------------------- chi-square

fn chi_square() -> (bool, String) {
    let mut e2 = 0.0f64;
    let mut e1 = 0.0f64;
    for p in [0.5, 0.9, 0.95, 0.99] {
        let v2 = chi2_quantile(2.0, p).unwrap();
        e2 = e2.max((v2 - chi2_2(p)).abs() / chi2_2(p).max(1.0));
        let v1 = chi2_quantile(1.0, p).unwrap();
        e1 = e1.max((v1 - chi2_1(p)).abs() / chi2_1(p).max(1.0));
    }
    (e2 <= 1e-12 && e1 <= 1e-10, format!("df=2 err {e2:.1e}, df=1 err {e1:.1e}"))
}

// ------------------------------------------------------- desk-scale runs

const DESK_N: usize = 1000;

fn desk_benchmark(truth: EffectTruth) -> BenchmarkOutput {
    let config = BenchmarkConfig { d: 5, ns: vec![DESK_N], reps: 300, alpha: 0.05, truth, seed: 20240601, ..Default::default() };
    run_benchmark(&config).expect("desk benchmark runs")
}

fn cell(out: &BenchmarkOutput, r: DataRegime, m: Method) -> &tce::bench::CellSummary {
    out.summary.cell(r, m, DESK_N).expect("cell present")
}

/// Coverage recomputed from the rows rather than read from the summary.
fn row_coverage(out: &BenchmarkOutput, r: DataRegime, m: Method) -> (f64, usize) {
    let rows: Vec<_> = out.rows.iter().filter(|x| x.data_regime == r && x.method == m).collect();
    (rows.iter().filter(|x| x.covered).count() as f64 / rows.len() as f64, rows.len())
}

fn desk_coverage(out: &BenchmarkOutput) -> (bool, String) {
    let pairs = [
        (DataRegime::General, Method::GeneralConf),
        (DataRegime::PartialEv, Method::PartialEvConf),
        (DataRegime::Ev, Method::PartialEvConf),
        (DataRegime::Ev, Method::EvConf),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, m) in pairs {
        let (cov, rows) = row_coverage(out, r, m);
        let failed = cell(out, r, m).failed;
        pass &= cov >= 0.93 && rows + failed == 300;
        parts.push(format!("{}@{}={cov:.3}", m.name(), r.name()));
    }
    (pass, parts.join(", "))
}

fn general_zero(out: &BenchmarkOutput) -> (bool, String) {
    let props: Vec<f64> = DataRegime::ALL.iter().map(|&r| cell(out, r, Method::GeneralConf).zero_proportion).collect();
    (props.iter().all(|&z| z == 1.0), format!("zero proportions {props:?}"))
}

fn mean_width(out: &BenchmarkOutput, m: Method) -> f64 {
    let rows: Vec<_> = out.rows.iter().filter(|x| x.method == m).collect();
    rows.iter().map(|x| x.width).sum::<f64>() / rows.len() as f64
}

fn width_ordering(out: &BenchmarkOutput) -> (bool, String) {
    let (g, p, e) = (mean_width(out, Method::GeneralConf), mean_width(out, Method::PartialEvConf), mean_width(out, Method::EvConf));
    (e <= p && p <= g, format!("ev {e:.4} <= pev {p:.4} <= general {g:.4}"))
}

/// Relative spread `(max - min) / mean` of the per-regime mean widths.
fn width_stability(out: &BenchmarkOutput) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in Method::ALL {
        let w: Vec<f64> = DataRegime::ALL.iter().map(|&r| cell(out, r, m).mean_width).collect();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let spread = (w.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - w.iter().cloned().fold(f64::INFINITY, f64::min)) / mean;
        pass &= spread < 0.10;
        parts.push(format!("{} {:.1}% {:.3?}", m.name(), 100.0 * spread, w));
    }
    (pass, parts.join("; "))
}

fn zero_truth(out: &BenchmarkOutput) -> (bool, String) {
    let pairs = [
        (DataRegime::General, Method::GeneralConf),
        (DataRegime::PartialEv, Method::PartialEvConf),
        (DataRegime::Ev, Method::EvConf),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, m) in pairs {
        let (cov, _) = row_coverage(out, r, m);
        pass &= cov >= 0.93;
        parts.push(format!("{}@{}={cov:.3}", m.name(), r.name()));
    }
    let equal = out.summary.cells.iter().all(|c| c.coverage == c.zero_proportion);
    let truths_zero = out.rows.iter().all(|x| x.true_effect == 0.0);
    pass &= equal && truths_zero;
    parts.push(format!("zero proportion equals coverage in every cell: {equal}"));
    (pass, parts.join(", "))
}

// ------------------------------------------------------------ rate records

fn pev_consistency_rate() -> (bool, String) {
    let tag = RegimeTag::partial_ev(0, 1).unwrap();
    let runs = 200u64;
    let hits = (0..runs)
        .filter(|&seed| {
            let scm = generate_benchmark_scm(5, tag, EffectTruth::Nonzero, 0, 1, 4000 + seed).unwrap();
            let data = scm.sample(10_000, seed).unwrap();
            let prec = empirical_covariance(&data).unwrap().inverse().unwrap();
            estimate_effects(&prec, 0, 1, tag).unwrap().contains_value(scm.true_effect(0, 1), 0.05)
        })
        .count();
    let rate = hits as f64 / runs as f64;
    (rate >= 0.95, format!("d=5, n=1e4: {hits}/{runs} = {rate:.3} within 0.05 (target >= 0.95)"))
}

fn nesting_rate() -> (bool, String) {
    let runs = 200u64;
    let narrower = (0..runs)
        .filter(|&seed| {
            let tag = RegimeTag::partial_ev(0, 1).unwrap();
            let scm = generate_benchmark_scm(5, tag, EffectTruth::Nonzero, 0, 1, 6000 + seed).unwrap();
            let data = scm.sample(1000, seed).unwrap();
            let prec = empirical_covariance(&data).unwrap().inverse().unwrap();
            conf_pev(&prec, 1000, 0, 1, 0.05).unwrap().width() <= conf_general(&prec, 1000, 0, 1, 0.05).unwrap().width()
        })
        .count();
    let rate = narrower as f64 / runs as f64;
    (rate >= 0.90, format!("d=5, n=1000: {narrower}/{runs} = {rate:.3} (target >= 0.90)"))
}
