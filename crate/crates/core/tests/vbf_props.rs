use neei_core::geometry::Vec2;
use neei_core::geomworld::Pose;
use neei_core::scenario::oracle::random_vbf_problem;
use neei_core::vbf::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn problem(max_frames: usize) -> impl Strategy<Value = VbfProblem> {
    any::<u64>().prop_map(move |s| random_vbf_problem(&mut ChaCha8Rng::seed_from_u64(s), max_frames))
}

fn feasible(p: &VbfProblem, sol: &VbfSolution) -> bool {
    let pm = p.min_powers().unwrap();
    let limit = p.power_budget.limit();
    let total_ok = sol.total_power <= limit * (1.0 + 1e-9);
    let per_frame = sol.selected.iter().zip(&sol.powers).all(|(id, pk)| {
        let k = p.frames.iter().position(|f| f.id == *id).unwrap();
        let f = &p.frames[k];
        let g = p.uplink.gain(f.pose.position).unwrap();
        let delivered = p.budget.bandwidth * f.slot_duration * (1.0 + pk * g / p.budget.noise_power).log2();
        // never more than p_min, and enough to deliver
        *pk <= pm[k] * (1.0 + 1e-12) && delivered >= f.payload_bits * (1.0 - 1e-9)
    });
    total_ok && per_frame
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_never_beats_exact(p in problem(12)) {
        let e = solve_exact(&p).unwrap();
        let g = solve_greedy(&p).unwrap();
        prop_assert!(g.total_score <= e.total_score + 1e-12);
        prop_assert!(feasible(&p, &e) && feasible(&p, &g));
    }

    #[test]
    fn branch_and_bound_matches_exact(p in problem(14)) {
        let e = solve_exact(&p).unwrap();
        let b = solve_branch_and_bound(&p).unwrap();
        prop_assert!(b.proven_optimal);
        prop_assert!((b.solution.total_score - e.total_score).abs() <= 1e-9 * e.total_score.max(1.0));
        prop_assert!(feasible(&p, &b.solution));
    }

    #[test]
    fn score_monotone_in_budget(p in problem(10), f1 in 0.0..1.0f64, f2 in 0.0..1.0f64) {
        let total: f64 = p.min_powers().unwrap().iter().sum();
        let (lo, hi) = (f1.min(f2) * total, f1.max(f2) * total);
        let at = |b: f64| solve_exact(&VbfProblem { power_budget: PowerBudget::Total(b), ..p.clone() }).unwrap().total_score;
        prop_assert!(at(lo) <= at(hi) + 1e-12);
    }

    #[test]
    fn zero_score_frames_left_out_when_budget_binds(p in problem(10), zeros in prop::collection::vec(any::<bool>(), 10)) {
        let mut p = p;
        for (f, z) in p.frames.iter_mut().zip(&zeros) {
            if *z { f.score = 0.0; }
        }
        let total: f64 = p.min_powers().unwrap().iter().sum();
        prop_assume!(p.power_budget.limit() < total);
        for sol in [solve_exact(&p).unwrap(), solve_greedy(&p).unwrap(), solve_branch_and_bound(&p).unwrap().solution] {
            for id in &sol.selected {
                prop_assert!(p.frames.iter().find(|f| f.id == *id).unwrap().score > 0.0);
            }
        }
    }

    #[test]
    fn scored_selection_beats_throughput(p in problem(12)) {
        let v = solve_exact(&p).unwrap();
        let t = solve_throughput(&p).unwrap();
        prop_assert!(v.total_score + 1e-12 >= t.total_score);
    }
}

#[test]
fn greedy_matches_exact_on_most_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut equal = 0;
    for _ in 0..200 {
        let p = random_vbf_problem(&mut rng, 12);
        let (e, g) = (solve_exact(&p).unwrap(), solve_greedy(&p).unwrap());
        equal += ((e.total_score - g.total_score).abs() <= 1e-12 * e.total_score.max(1.0)) as usize;
    }
    assert!(equal >= 160, "greedy equal to exact on {equal}/200");
}

#[test]
fn equal_scores_make_vbf_and_throughput_agree_on_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let mut p = random_vbf_problem(&mut rng, 12);
        for f in &mut p.frames {
            f.score = 0.5;
            f.payload_bits = 13_840_000.0;
        }
        assert_eq!(solve_exact(&p).unwrap().selected.len(), solve_throughput(&p).unwrap().selected.len());
    }
}

#[test]
fn planar_combiner_needs_more_power_in_near_field() {
    let g = neei_core::nfchan::ArrayGeometry::ula(640, 30e9, Vec2::new(5.0, 4.0), Vec2::new(1.0, 0.0)).unwrap();
    let pl = neei_core::nfchan::PathlossModel::new(neei_core::nfchan::db_to_linear(-62.0), 3.0).unwrap();
    let budget = neei_core::nfchan::LinkBudget::from_dbm(20.0, -80.0, 10e6).unwrap();
    let frames: Vec<Frame> =
        (0..8).map(|k| Frame::new(k, Pose::new(Vec2::new(1.0 + k as f64, 0.5 * k as f64 - 1.0), 0.0), 1.0)).collect();
    let near = VbfProblem { frames: frames.clone(), uplink: UplinkModel::near_field(g.clone(), pl), budget, power_budget: PowerBudget::Total(1.0) };
    let planar = VbfProblem { uplink: UplinkModel { beam: neei_core::rep::BeamModel::Planar, ..near.uplink.clone() }, ..near.clone() };
    let (a, b) = (near.min_powers().unwrap(), planar.min_powers().unwrap());
    assert!(a.iter().zip(&b).all(|(x, y)| y > x));
}
