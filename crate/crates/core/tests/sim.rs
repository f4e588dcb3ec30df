mod common;

use common::mean_se;
use proptest::prelude::*;
use twostage_core::analytic::{evaluate, ConstraintMode, HireCutoff, PipelineParams};
use twostage_core::estimate::pearson;
use twostage_core::sim::*;
use twostage_core::Gender;

fn pool(n: usize, theta: f64, seed: u64) -> Vec<Applicant> {
    let spec =
        PoolSpec { n, seed, params: PipelineParams { theta, ..PipelineParams::default() }, ..PoolSpec::default() };
    gen_pool(&spec).unwrap()
}

fn column(p: &[&Applicant], f: fn(&Applicant) -> f64) -> Vec<f64> {
    p.iter().map(|a| f(a)).collect()
}

#[test]
fn pool_matches_target_distribution() {
    let params = PipelineParams { theta: 0.4, delta: 0.1, alpha: -0.2, beta_s: 0.1, ..PipelineParams::default() };
    let spec = PoolSpec { n: 300_000, p_a: 0.3, params, seed: 3, ..PoolSpec::default() };
    let all = gen_pool(&spec).unwrap();
    for g in [Gender::Male, Gender::Female] {
        let m = params.group(g);
        let grp: Vec<&Applicant> = all.iter().filter(|a| a.gender == g).collect();
        let (q, s, h) = (column(&grp, |a| a.q), column(&grp, |a| a.q_s), column(&grp, |a| a.q_h));
        assert!((pearson(&q, &s).unwrap() - m.theta_s).abs() < 0.01);
        assert!((pearson(&q, &h).unwrap() - m.theta_h).abs() < 0.01);
        assert!((pearson(&s, &h).unwrap() - m.theta).abs() < 0.01);
        for (v, mean) in [(&q, m.mean_q), (&s, m.mean_s), (&h, m.mean_h)] {
            assert!((mean_se(v).0 - mean).abs() < 0.01, "{g}");
        }
    }
    let women = all.iter().filter(|a| a.gender == Gender::Female).count() as f64 / 300_000.0;
    assert!((women - 0.3).abs() < 0.005);
    let labels = all.iter().filter(|a| a.label).count() as f64 / 300_000.0;
    assert!((labels - 0.08).abs() < 0.005);
}

fn rates(pool: &[Applicant], members: &[usize], g: Gender) -> (f64, f64, f64) {
    let mut chosen = vec![false; pool.len()];
    for &i in members {
        chosen[i] = true;
    }
    let (mut n, mut pos, mut neg, mut tp, mut fp, mut err) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, a) in pool.iter().enumerate().filter(|(_, a)| a.gender == g) {
        n += 1.0;
        if a.label {
            pos += 1.0;
            tp += chosen[i] as u8 as f64;
        } else {
            neg += 1.0;
            fp += chosen[i] as u8 as f64;
        }
        err += (chosen[i] != a.label) as u8 as f64;
    }
    (err / n, tp / pos, fp / neg)
}

#[test]
fn shortlists_satisfy_their_constraints() {
    for seed in 0..30 {
        let p = pool(500, 0.4, seed);
        let women = p.iter().filter(|a| a.gender == Gender::Female).count();
        for kind in PolicyKind::ALL {
            let policy = Policy::new(kind);
            let s = shortlist(&p, 40, &policy).unwrap();
            assert_eq!(s.members.len(), 40);
            assert!(s.members.windows(2).all(|w| w[0] < w[1]));
            let kf = s.members.iter().filter(|&&i| p[i].gender == Gender::Female).count();
            match kind {
                PolicyKind::EqualSelection
                | PolicyKind::EqualSelectionMinQsDiff
                | PolicyKind::ComplementaryEqualSelection => {
                    assert_eq!(kf, 20)
                }
                PolicyKind::DemographicParity => {
                    assert!((kf as f64 - 40.0 * women as f64 / 500.0).abs() <= 1.0)
                }
                PolicyKind::ErrorRateParity | PolicyKind::EqualizedOdds if s.constraint_met => {
                    let (ef, tf, ff) = rates(&p, &s.members, Gender::Female);
                    let (em, tm, fm) = rates(&p, &s.members, Gender::Male);
                    let gap = if kind == PolicyKind::ErrorRateParity {
                        (ef - em).abs()
                    } else {
                        (tf - tm).abs().max((ff - fm).abs())
                    };
                    assert!(gap <= policy.tolerance + 1e-12 && (gap - s.gap).abs() < 1e-12, "{kind} seed {seed}");
                }
                _ => {}
            }
            let h = hire(&p, &s.members, 4).unwrap();
            assert_eq!(h.len(), 4);
            assert!(h.iter().all(|i| s.members.contains(i)));
        }
    }
}

fn mean_gap(p: &[Applicant], members: &[usize], key: fn(&Applicant) -> f64) -> f64 {
    let m = |g: Gender| {
        let v: Vec<f64> = members.iter().filter(|&&i| p[i].gender == g).map(|&i| key(&p[i])).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    (m(Gender::Female) - m(Gender::Male)).abs()
}

#[test]
fn matched_policies_never_widen_the_gap() {
    for seed in 0..30 {
        let p = pool(500, 0.3, 100 + seed);
        let es = shortlist(&p, 40, &Policy::new(PolicyKind::EqualSelection)).unwrap();
        for (kind, key) in [
            (PolicyKind::ComplementaryEqualSelection, (|a: &Applicant| a.q_h) as fn(&Applicant) -> f64),
            (PolicyKind::EqualSelectionMinQsDiff, |a: &Applicant| a.q_s),
        ] {
            let s = shortlist(&p, 40, &Policy::new(kind)).unwrap();
            let gap = mean_gap(&p, &s.members, key);
            assert!((gap - s.gap).abs() < 1e-12);
            assert!(gap <= mean_gap(&p, &es.members, key) + 1e-12, "{kind} seed {seed}");
        }
    }
}

#[test]
fn infeasible_equal_selection() {
    let p = pool(40, 0.3, 7);
    let women = p.iter().filter(|a| a.gender == Gender::Female).count();
    let k = 2 * women + 2;
    assert!(matches!(
        shortlist(&p, k, &Policy::new(PolicyKind::EqualSelection)),
        Err(twostage_core::Error::Infeasible { group: Gender::Female, .. })
    ));
}

fn spec(theta: f64, ts: f64, th: f64, kinds: &[PolicyKind], reps: usize, seed: u64) -> BenchmarkSpec {
    let (n, k, m) = (2000, 300, 60);
    BenchmarkSpec {
        cells: vec![(ts, th)],
        params: PipelineParams {
            theta,
            p_a: 0.3,
            shortlist_rate: k as f64 / n as f64,
            finalist_rate: m as f64 / k as f64,
            ..PipelineParams::default()
        },
        n,
        k,
        m,
        policies: kinds.iter().copied().map(Policy::new).collect(),
        replications: reps,
        seed,
        resamples: 200,
        ..BenchmarkSpec::default()
    }
}

#[test]
fn equal_selection_with_uninformative_screen_hires_half() {
    let b = run_benchmark(&spec(0.0, 0.5, 0.5, &[PolicyKind::EqualSelection], 400, 5)).unwrap();
    let r = &b.reports[0].policies[0];
    assert!((r.p_h.mean - 0.5).abs() < 3.0 * r.p_h.se, "{:?}", r.p_h);
    assert_eq!(r.p_s.mean, 0.5);
}

#[test]
fn simulation_agrees_with_closed_form() {
    for (i, (theta, ts, th)) in [(0.3, 0.4, 0.5), (0.6, 0.5, 0.6), (0.8, 0.3, 0.3)].into_iter().enumerate() {
        let s = spec(theta, ts, th, &[PolicyKind::NoConstraint, PolicyKind::EqualSelection], 400, 50 + i as u64);
        let b = run_benchmark(&s).unwrap();
        let params = PipelineParams { theta_s: ts, theta_h: th, ..s.params };
        for (r, mode) in b.reports[0].policies.iter().zip([ConstraintMode::None, ConstraintMode::EqualSelection]) {
            let a = evaluate(&params, mode, HireCutoff::MatchHireCount).unwrap();
            assert!(
                (r.p_h.mean - a.shares.p_h).abs() < 3.0 * r.p_h.se,
                "{i} {mode:?} p_h {} vs {:?}",
                a.shares.p_h,
                r.p_h
            );
            assert!((r.quality.mean - a.quality).abs() < 3.0 * r.quality.se, "{i} {mode:?} quality");
            assert!(r.p_h.lo <= r.p_h.mean && r.p_h.mean <= r.p_h.hi);
        }
    }
}

#[test]
fn more_alignment_fewer_women_hired_under_equal_selection() {
    let at = |theta| {
        let b = run_benchmark(&spec(theta, 0.5, 0.5, &[PolicyKind::EqualSelection], 300, 9)).unwrap();
        b.reports[0].policies[0].p_h.mean
    };
    let (lo, mid, hi) = (at(0.1), at(0.5), at(0.9));
    assert!(lo > mid && mid > hi, "{lo} {mid} {hi}");
}

#[test]
fn benchmark_is_deterministic_and_skips_bad_cells() {
    let mut s = spec(0.4, 0.5, 0.5, &PolicyKind::ALL, 40, 77);
    s.n = 500;
    s.k = 40;
    s.m = 4;
    s.cells = vec![(0.5, 0.5), (0.95, 0.95)];
    s.params.theta = 0.1;
    s.quality = QualityModel::SampleExact;
    let a = run_benchmark(&s).unwrap();
    assert_eq!(a, run_benchmark(&s).unwrap());
    assert_eq!(a.reports.len(), 1);
    assert_eq!(a.skipped.len(), 1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    assert_eq!(pool.install(|| run_benchmark(&s).unwrap()), a);
}

#[test]
fn bootstrap_interval_brackets_the_mean() {
    let samples: Vec<f64> = (0..400).map(|i| ((i * 37) % 101) as f64 / 100.0).collect();
    let (m, se) = mean_se(&samples);
    let (lo, hi) = bootstrap_ci(&samples, 0.95, 2000, 3).unwrap();
    assert!(lo < m && m < hi);
    assert!(((hi - lo) / (2.0 * 1.96 * se) - 1.0).abs() < 0.15);
    assert_eq!(bootstrap_ci(&[2.0; 10], 0.9, 50, 1).unwrap(), (2.0, 2.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn sample_exact_quality_hits_targets(ts in 0.0..0.7f64, th in 0.0..0.7f64, seed in 0u64..1000) {
        let base = pool(200, 0.3, seed);
        prop_assume!(twostage_core::numkern::check_psd(ts, th, pearson(
            &base.iter().map(|a| a.q_s).collect::<Vec<_>>(),
            &base.iter().map(|a| a.q_h).collect::<Vec<_>>()).unwrap()).is_ok());
        let qs: Vec<f64> = base.iter().map(|a| a.q_s).collect();
        let qh: Vec<f64> = base.iter().map(|a| a.q_h).collect();
        let mut rng = stream_rng(seed, 1);
        let q = gen_true_quality(&qs, &qh, ts, th, &mut rng).unwrap();
        prop_assert!((pearson(&q, &qs).unwrap() - ts).abs() < 1e-9);
        prop_assert!((pearson(&q, &qh).unwrap() - th).abs() < 1e-9);
    }
}
