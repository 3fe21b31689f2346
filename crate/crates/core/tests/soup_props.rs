use alchemy::amplifier::{make_unit_test, AmplifierSpec, FilterPolicy};
use alchemy::lambda::{reduce_to_normal_form, ReductionLimits, ReductionOutcome};
use alchemy::soup::{
    random_expression, Amount, CollisionOutcome, GeneratorParams, Ingredient, PerturbAction, PopulationSpec,
    Schedules, Soup, SoupElement, SoupRng,
};
use alchemy::stdlib::Combinator;
use proptest::prelude::*;
use rand::SeedableRng;

fn successor_amps(factor: u32) -> Vec<AmplifierSpec> {
    (0..10)
        .map(|n| AmplifierSpec::new("successor", make_unit_test(&[n], n + 1).unwrap(), factor, FilterPolicy::ALL).unwrap())
        .collect()
}

fn mixed(n: usize, amp_share: f64, factor: u32) -> PopulationSpec {
    let rest = (1.0 - amp_share - 0.1) / 3.0;
    PopulationSpec::new(
        n,
        vec![
            (Ingredient::Molecule(Combinator::S.expr()), Amount::Fraction(rest)),
            (Ingredient::Molecule(Combinator::K.expr()), Amount::Fraction(rest)),
            (Ingredient::Molecule(Combinator::I.expr()), Amount::Fraction(rest)),
            (Ingredient::Random(GeneratorParams::default()), Amount::Fraction(0.05)),
            (Ingredient::Molecule(Combinator::Scc.expr()), Amount::Fraction(0.05)),
            (Ingredient::Amplifiers(successor_amps(factor)), Amount::Fraction(amp_share)),
        ],
    )
    .unwrap()
}

fn census_total(soup: &Soup) -> usize {
    soup.molecule_census().map(|(_, c)| c).sum::<usize>() + soup.total_amplifiers()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn population_is_constant_and_normal(
        seed in any::<u64>(),
        n in 20usize..300,
        amp_share in 0.0f64..0.3,
        factor in 1u32..40,
    ) {
        let mut soup = Soup::new(&mixed(n, amp_share, factor), ReductionLimits::default(), seed).unwrap();
        for i in 0..1500 {
            soup.collide();
            if i % 300 == 299 {
                soup.perturb();
            }
            prop_assert_eq!(soup.len(), n);
            prop_assert_eq!(census_total(&soup), n);
        }
        for m in soup.elements().iter().filter_map(SoupElement::as_molecule) {
            prop_assert!(m.is_closed());
            let again = reduce_to_normal_form(m, ReductionLimits::default());
            let fixed = matches!(again, ReductionOutcome::NormalForm { steps_used: 0, .. });
            prop_assert!(fixed);
        }
        prop_assert_eq!(soup.collisions(), 1500);
    }

    #[test]
    fn amplification_adds_exactly_factor_copies(seed in any::<u64>(), factor in 1u32..60) {
        let spec = PopulationSpec::from_counts(vec![
            (Ingredient::Molecule(Combinator::Scc.expr()), 10),
            (Ingredient::Amplifiers(successor_amps(factor)), 20),
            (Ingredient::Molecule(Combinator::K.expr()), 70),
        ])
        .unwrap();
        let mut soup = Soup::new(&spec, ReductionLimits::default(), seed).unwrap();
        let scc = Combinator::Scc.expr();
        let a = soup.elements().iter().position(SoupElement::is_amplifier).unwrap();
        let b = soup.elements().iter().position(|e| e.as_molecule() == Some(&scc)).unwrap();
        let before = soup.molecule_count(&scc);
        match soup.collide_slots(a, b) {
            CollisionOutcome::AmplifiedReaction { product, copies, removed } => {
                prop_assert_eq!(&product, &scc);
                prop_assert_eq!(copies, factor as usize);
                prop_assert_eq!(removed.len(), factor as usize);
                let lost = removed.iter().filter(|e| e.as_molecule() == Some(&scc)).count();
                prop_assert_eq!(soup.molecule_count(&scc), before + factor as usize - lost);
            }
            other => prop_assert!(false, "{other:?}"),
        }
        prop_assert_eq!(soup.len(), 100);
    }
}

#[test]
fn zero_collisions_leave_the_soup_alone() {
    let mut soup = Soup::new(&mixed(100, 0.1, 100), ReductionLimits::default(), 5).unwrap();
    let before = soup.elements().to_vec();
    let records = soup.run(0, &Schedules::default(), &mut |s: &Soup| s.len());
    assert!(records.is_empty());
    assert_eq!(soup.elements(), before.as_slice());
    assert_eq!(soup.collisions(), 0);
}

#[test]
fn trajectories_are_reproducible() {
    let schedules = Schedules {
        measure_every: 100,
        perturb_every: 1000,
        perturb_action: PerturbAction::ReplenishAmplifiers,
    };
    let run = |seed| {
        let mut soup = Soup::new(&mixed(200, 0.1, 20), ReductionLimits::default(), seed).unwrap();
        soup.run(5000, &schedules, &mut |s: &Soup| s.elements().to_vec())
    };
    assert_eq!(run(11), run(11));
    assert_ne!(run(11), run(12));
}

#[test]
fn generated_sizes_track_the_configured_range() {
    let params = GeneratorParams::default();
    let mut rng = SoupRng::seed_from_u64(42);
    let samples = 10_000;
    let total: usize = (0..samples)
        .map(|_| random_expression(&params, ReductionLimits::default(), &mut rng).unwrap().size())
        .sum();
    let mean = total as f64 / samples as f64;
    let lo = params.min_size as f64 * 0.5;
    let hi = params.max_size as f64 * 1.5;
    assert!(lo <= mean && mean <= hi, "mean size {mean} outside [{lo}, {hi}]");
}
