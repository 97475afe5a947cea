use owcsim_core::allocator::{self, AssignmentMode, ProblemInstance};
use owcsim_core::linkmetrics::{receiver_noise_variance, SinrParams};
use owcsim_core::pon::awgr_output_port;
use owcsim_core::scenario::{generate_drops, DropPlan};
use owcsim_core::Tensor4;
use proptest::prelude::*;

fn sigma() -> f64 {
    receiver_noise_variance(4.47e-12, 1.75e9).unwrap()
}

/// Entries around `sigma * Z` so candidate links straddle the threshold.
fn instance(max: [usize; 4]) -> impl Strategy<Value = ProblemInstance> {
    let dims = (1..=max[0], 1..=max[1], 1..=max[2], 1..=max[3]);
    dims.prop_flat_map(|(u, f, a, w)| {
        let len = u * f * a * w;
        (
            Just([u, f, a, w]),
            prop::collection::vec((prop::bool::weighted(0.8), -1.0f64..1.0, 0.0f64..1.5), len),
            prop::collection::vec(prop::bool::weighted(0.85), a),
            prop::bool::ANY,
        )
    })
    .prop_map(|(dims, entries, mask, single)| {
        let z = SinrParams::reference().z;
        let mut r = Vec::with_capacity(entries.len());
        let mut n = Vec::with_capacity(entries.len());
        for (on, exp, ratio) in entries {
            let v = if on { sigma() * z * 10f64.powf(exp) } else { 0.0 };
            r.push(v);
            n.push(v * ratio);
        }
        let mode = if single { AssignmentMode::SingleAp } else { AssignmentMode::MultiAp };
        ProblemInstance::new(
            Tensor4::from_vec(dims, r).unwrap(),
            Tensor4::from_vec(dims, n).unwrap(),
            sigma(),
            SinrParams::reference(),
            mask,
            mode,
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_matches_brute_force(inst in instance([2, 2, 2, 2])) {
        let exact = allocator::solve_exact(&inst).unwrap();
        let brute = allocator::solve_brute_force(&inst).unwrap();
        prop_assert_eq!(&exact.s, &brute.s);
        prop_assert_eq!(exact.objective, brute.objective);
        prop_assert!(allocator::validate(&inst, &exact).passed);
    }

    #[test]
    fn multi_ap_dominates_single_ap(inst in instance([3, 2, 3, 4])) {
        let multi = allocator::solve_exact(&inst.with_mode(AssignmentMode::MultiAp)).unwrap();
        let single = allocator::solve_exact(&inst.with_mode(AssignmentMode::SingleAp)).unwrap();
        prop_assert!(multi.objective >= single.objective);
        prop_assert!(single.per_user_ap_count.iter().all(|&c| c <= 1));
    }

    #[test]
    fn failing_an_ap_never_helps(inst in instance([3, 2, 3, 4]), pick in 0usize..3) {
        let full = allocator::solve_exact(&inst).unwrap();
        let mut mask = inst.ap_available().to_vec();
        let ap = pick % mask.len();
        mask[ap] = false;
        let masked = ProblemInstance::new(inst.r().clone(), inst.n().clone(), inst.sigma(), inst.params(), mask, inst.mode()).unwrap();
        let sol = allocator::solve_exact(&masked).unwrap();
        prop_assert!(sol.objective <= full.objective);
        prop_assert!(sol.links().iter().all(|l| l.ap != ap));
        prop_assert!(allocator::validate(&masked, &sol).passed);
    }

    #[test]
    fn awgr_routing_is_a_permutation(size in 1usize..16, w_seed in 0usize..16) {
        let w = w_seed % size;
        let mut seen = vec![false; size];
        for i in 0..size {
            let o = awgr_output_port(i, w, size).unwrap();
            prop_assert!(!seen[o]);
            seen[o] = true;
        }
    }

    #[test]
    fn drops_use_distinct_locations(seed in any::<u64>(), users in 0usize..=32) {
        let drops = generate_drops(&DropPlan::new(seed, users, 5, 32).unwrap()).unwrap();
        for d in drops {
            let mut l = d.locations.clone();
            l.sort_unstable();
            l.dedup();
            prop_assert_eq!(l.len(), users);
        }
    }
}
