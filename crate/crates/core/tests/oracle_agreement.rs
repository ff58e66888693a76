//! Oracle / Monte Carlo agreement at scale, including the probe-carrying
//! attacks the in-module tests skip for speed.

use sqpc::adversary::{
    controlled_rotation_attack, exact_detection, parse_attack, sampled_detection,
};
use sqpc::parties::ALL_CASES;

fn assert_agreement(name: &str, spec: &sqpc::adversary::AttackSpec, samples: u64, seed: u64) {
    let exact = exact_detection(spec).unwrap();
    let sampled = sampled_detection(spec, samples, seed);
    for case in ALL_CASES {
        let idx = case.index();
        let stat = sampled.per_case[idx];
        let p = exact.per_case_detection[idx];
        let sigma = (p * (1.0 - p) / stat.rounds as f64).sqrt();
        let diff = (stat.rate() - p).abs();
        assert!(
            diff <= 4.0 * sigma || (sigma == 0.0 && diff == 0.0),
            "{name} case {case:?}: sampled {} vs exact {p} (sigma {sigma})",
            stat.rate()
        );
    }
    // The averages line up too (same active-case weighting on both sides).
    let active = spec.build().active_cases();
    let avg_sigma: f64 = ALL_CASES
        .iter()
        .filter(|c| active[c.index()])
        .map(|c| {
            let idx = c.index();
            let p = exact.per_case_detection[idx];
            p * (1.0 - p) / sampled.per_case[idx].rounds.max(1) as f64
        })
        .sum::<f64>()
        .sqrt()
        / active.iter().filter(|&&a| a).count() as f64;
    let diff = (sampled.average_detection(&active) - exact.average_detection).abs();
    assert!(
        diff <= 4.0 * avg_sigma || (avg_sigma == 0.0 && diff == 0.0),
        "{name} average: {} vs {}",
        sampled.average_detection(&active),
        exact.average_detection
    );
}

#[test]
fn headline_attacks_at_one_hundred_thousand_rounds() {
    for (i, name) in [
        "intercept-resend:+0",
        "measure-resend-z",
        "measure-resend-x",
        "dishonest-bob-i",
    ]
    .iter()
    .enumerate()
    {
        let spec = parse_attack(name).unwrap();
        assert_agreement(name, &spec, 100_000, 7100 + i as u64);
    }
}

#[test]
fn randomized_policies_agree() {
    for (i, name) in ["intercept-resend:random", "measure-resend-random"]
        .iter()
        .enumerate()
    {
        let spec = parse_attack(name).unwrap();
        assert_agreement(name, &spec, 60_000, 7200 + i as u64);
    }
}

#[test]
fn entangle_measure_sampling_agrees_with_the_oracle() {
    let spec = controlled_rotation_attack(1.1, 2.2, 2, false).unwrap();
    assert_agreement("entangle-measure:1.1,2.2", &spec, 50_000, 7300);

    let spec = controlled_rotation_attack(0.8, 0.3, 2, true).unwrap();
    assert_agreement("entangle-measure-compensated:0.8,0.3", &spec, 30_000, 7301);
}
