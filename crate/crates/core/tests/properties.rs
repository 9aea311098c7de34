use crisis_core::analysis::{peace_plausibility, war_region};
use crisis_core::mechanism::{audit, AuditOptions};
use crisis_core::model::{BeliefKind, Component, Strength, TypeSpace, WarTechnology};
use crisis_core::payoffs::{interim_citizen_war_payoff, interim_war_payoff};
use crisis_core::{CrisisModel, DirectMechanism, Execution, ModelDescription, Side};
use proptest::prelude::*;

fn belief() -> impl Strategy<Value = BeliefKind> {
    prop_oneof![
        Just(BeliefKind::Uniform),
        (0.6..5.0f64, 0.6..5.0f64).prop_map(|(a, b)| BeliefKind::Beta { a, b }),
        (0.1..0.9f64, 0.1..1.0f64).prop_map(|(mu, sigma)| BeliefKind::TruncatedNormal { mu, sigma }),
    ]
}

#[derive(Debug, Clone)]
struct Params {
    gamma: [f64; 2],
    lambda: [f64; 2],
    costs: [f64; 2],
    /// Strength slopes of states 1 and 2; `p₁ = a θ₁ − b θ₂ + base`.
    slopes: [f64; 2],
    base: f64,
    beliefs: [BeliefKind; 2],
}

fn params() -> impl Strategy<Value = Params> {
    (
        [0.0..=1.0f64, 0.0..=1.0f64],
        [0.5..3.0f64, 0.5..3.0f64],
        [0.0..0.5f64, 0.0..0.5f64],
        [0.05..0.5f64, 0.05..0.5f64],
        0.0..=1.0f64,
        [belief(), belief()],
    )
        .prop_map(|(gamma, lambda, costs, slopes, u, beliefs)| Params {
            gamma,
            lambda,
            costs,
            slopes,
            // Keeps p₁ inside [0, 1] on the unit square.
            base: slopes[1] + u * (1.0 - slopes[0] - slopes[1]),
            beliefs,
        })
}

fn describe(p: &Params) -> ModelDescription {
    let mut d = ModelDescription::symmetric_uniform(0.0);
    let strength = |own: f64, opp: f64, base: f64| Strength {
        h: Component::linear(own, 0.0),
        g: Component::linear(opp, 0.0),
        base,
    };
    d.war_technology = WarTechnology::TwoSidedDifference {
        strength: [
            strength(p.slopes[0], p.slopes[1], p.base),
            strength(p.slopes[1], p.slopes[0], 1.0 - p.base),
        ],
        costs: p.costs,
    };
    for i in 0..2 {
        d.states[i].type_space = TypeSpace::new(0.0, 1.0);
        d.states[i].distribution = p.beliefs[i];
        d.states[i].gamma = p.gamma[i];
        d.states[i].lambda = p.lambda[i];
    }
    d
}

fn model(p: &Params) -> CrisisModel {
    describe(p).validate().unwrap()
}

fn swapped(p: &Params) -> Params {
    Params {
        gamma: [p.gamma[1], p.gamma[0]],
        lambda: [p.lambda[1], p.lambda[0]],
        costs: [p.costs[1], p.costs[0]],
        slopes: [p.slopes[1], p.slopes[0]],
        base: 1.0 - p.base,
        beliefs: [p.beliefs[1], p.beliefs[0]],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interim_war_payoff_is_nondecreasing(p in params(), side in 0usize..2) {
        let m = model(&p);
        let side = Side::from_index(side);
        let w: Vec<f64> = (0..=10).map(|k| interim_war_payoff(&m, side, k as f64 / 10.0).unwrap()).collect();
        for pair in w.windows(2) {
            prop_assert!(pair[1] >= pair[0] - 1e-10, "{w:?}");
        }
    }

    #[test]
    fn unbiased_leaders_share_the_citizen_payoff(mut p in params(), theta in 0.0..=1.0f64) {
        p.lambda = [1.0, 1.0];
        let m = model(&p);
        for side in Side::BOTH {
            let w = interim_war_payoff(&m, side, theta).unwrap();
            let wc = interim_citizen_war_payoff(&m, side, theta).unwrap();
            prop_assert!((w - wc).abs() < 1e-12);
        }
    }

    #[test]
    fn lhs_falls_with_costs_and_bias(p in params(), i in 0usize..2, dc in 0.001..0.1f64, dl in 0.01..1.0f64) {
        let base = peace_plausibility(&model(&p)).unwrap().lhs;
        let mut costlier = p.clone();
        costlier.costs[i] += dc;
        prop_assert!(peace_plausibility(&model(&costlier)).unwrap().lhs <= base + 1e-12);
        let mut biased = p.clone();
        biased.lambda[i] += dl;
        let lhs = peace_plausibility(&model(&biased)).unwrap().lhs;
        prop_assert!(lhs <= base + 1e-12);
        if p.gamma[i] > 0.01 && p.costs[i] > 0.01 {
            prop_assert!(lhs < base);
        }
    }

    #[test]
    fn relabeling_states_swaps_the_demands(p in params()) {
        let a = peace_plausibility(&model(&p)).unwrap();
        let b = peace_plausibility(&model(&swapped(&p))).unwrap();
        prop_assert!((a.lhs - b.lhs).abs() < 1e-10);
        prop_assert!((a.per_state[0].leader_war - b.per_state[1].leader_war).abs() < 1e-10);
        prop_assert!((a.per_state[1].citizen_war - b.per_state[0].citizen_war).abs() < 1e-10);
    }

    #[test]
    fn war_region_is_empty_when_peace_is_plausible(p in params()) {
        let m = model(&p);
        let lhs = peace_plausibility(&m).unwrap().lhs;
        let mass = war_region(&m, 16, Execution::Sequential).unwrap().mass;
        if lhs <= 1.0 {
            prop_assert_eq!(mass, 0.0);
        }
        prop_assert!((0.0..=1.0).contains(&mass));
    }
}

#[test]
fn parallel_and_sequential_runs_agree_bit_for_bit() {
    let p = Params {
        gamma: [0.7, 1.0],
        lambda: [1.5, 1.0],
        costs: [0.1, 0.15],
        slopes: [0.4, 0.3],
        base: 0.45,
        beliefs: [BeliefKind::Beta { a: 2.0, b: 3.0 }, BeliefKind::Uniform],
    };
    let m = model(&p);
    let grid: Vec<f64> = (0..9).map(|k| k as f64 / 8.0).collect();
    let mech = DirectMechanism::from_fn(grid.clone(), grid.clone(), |a, b| {
        let pi = ((a + b - 1.2) / 0.8).clamp(0.0, 1.0);
        (pi, 0.3 + 0.2 * a, 0.3 + 0.2 * b)
    })
    .unwrap();
    let run = |exec| {
        let opts = AuditOptions {
            exec,
            ..AuditOptions::default()
        };
        (
            audit(&m, &mech, &opts).unwrap(),
            war_region(&m, 64, exec).unwrap(),
        )
    };
    let (seq_audit, seq_region) = run(Execution::Sequential);
    let (par_audit, par_region) = run(Execution::Parallel);
    assert_eq!(seq_audit, par_audit);
    assert_eq!(seq_region, par_region);
}
