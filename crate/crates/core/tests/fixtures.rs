//! Every shipped scenario loads, round-trips, and reproduces its known outcome.

use std::path::PathBuf;

use combinatorial_pricing::construct::{
    cost_epsilon_equilibrium, cost_equilibrium_conditions, pareto_equilibrium, submodular_prediction, welfare_optimum,
};
use combinatorial_pricing::dynamics::{
    best_response_dynamics, nonexistence_certificate, rule_replay, CertificateOutcome, DynamicsOutcome, Schedule,
};
use combinatorial_pricing::monopolist::{brute_force_monopolist, exact_sampler_expectation, harmonic_sample};
use combinatorial_pricing::scan::DEFAULT_BUDGET;
use combinatorial_pricing::{check_equilibrium, classify, decide, PriceVector, Scenario, Subset, Value, Verdict};

const NAMES: [&str; 12] = [
    "additive",
    "all_or_nothing",
    "bertrand",
    "cost_nonexistence",
    "cost_nonuniqueness",
    "coverage",
    "eisen",
    "harmonic12",
    "harmonic4",
    "two_buyer",
    "unbounded_poa",
    "xos",
];

fn load(name: &str) -> Scenario {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", &format!("{name}.json")].iter().collect();
    Scenario::load(path).unwrap()
}

fn val(x: &str) -> Value {
    x.parse().unwrap()
}

fn prices(xs: &[&str]) -> PriceVector {
    PriceVector::new(xs.iter().map(|x| val(x)).collect()).unwrap()
}

fn stored_check(s: &Scenario) -> combinatorial_pricing::EquilibriumReport {
    check_equilibrium(&s.game().unwrap(), s.prices.as_ref().unwrap(), &s.epsilon.clone().unwrap_or_default()).unwrap()
}

#[test]
fn all_fixtures_load_and_round_trip() {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures"].iter().collect();
    let on_disk = std::fs::read_dir(dir).unwrap().count();
    assert_eq!(on_disk, NAMES.len(), "a fixture is missing from the list");
    for name in NAMES {
        let s = load(name);
        assert_eq!(s.name, name);
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }
}

#[test]
fn bertrand_zero_prices() {
    let s = load("bertrand");
    assert!(stored_check(&s).is_exact());
    assert_eq!(pareto_equilibrium(&s.valuation().unwrap(), &[1, 0]).unwrap(), PriceVector::zeros(2));
}

#[test]
fn all_or_nothing_pareto_corner() {
    let s = load("all_or_nothing");
    let v = s.valuation().unwrap();
    assert_eq!(pareto_equilibrium(&v, s.order.as_ref().unwrap()).unwrap(), prices(&["10", "0"]));
    assert_eq!(pareto_equilibrium(&v, &[1, 0]).unwrap(), prices(&["0", "10"]));
    assert!(stored_check(&s).is_exact());
    assert!(!classify(&v).submodular);
}

#[test]
fn additive_greedy_choice() {
    let s = load("additive");
    let r = decide(&s.valuation().unwrap(), s.prices.as_ref().unwrap(), &s.map_spec().resolve(2).unwrap()).unwrap();
    assert_eq!(r.best_utility, Value::zero());
    assert_eq!(r.demanded.len(), 4);
    assert!(stored_check(&s).is_exact());
}

#[test]
fn coverage_prediction() {
    let s = load("coverage");
    let v = s.valuation().unwrap();
    let p = submodular_prediction(&v).unwrap();
    assert_eq!(p.prices, prices(&["1", "1"]));
    assert!(p.free_sellers.is_empty());
    assert!(stored_check(&s).is_exact());
}

#[test]
fn xos_stored_profile_is_exact() {
    let s = load("xos");
    let r = stored_check(&s);
    assert_eq!(r.verdict, Verdict::ExactNe);
    assert_eq!(r.utilities(), vec![val("1/4"), val("1/4"), val("3/4")]);
    assert!(!classify(&s.valuation().unwrap()).submodular);
}

#[test]
fn cost_nonexistence_has_epsilon_equilibrium() {
    let s = load("cost_nonexistence");
    let g = s.game().unwrap();
    let eq = cost_epsilon_equilibrium(&g, s.epsilon.as_ref().unwrap()).unwrap();
    assert_eq!(eq.prices, prices(&["39/20", "2"]));
    assert!(eq.report.passes());
    assert!(!eq.report.is_exact());
}

#[test]
fn cost_nonuniqueness_conditions() {
    let s = load("cost_nonuniqueness");
    let g = s.game().unwrap();
    let p = s.prices.as_ref().unwrap();
    assert!(stored_check(&s).is_exact());
    let c = cost_equilibrium_conditions(&g, p).unwrap();
    assert!(c.holds);
    assert_eq!(c.chosen, Subset::from_items([0, 1]));
}

#[test]
fn unbounded_poa_ratio() {
    let s = load("unbounded_poa");
    let r = stored_check(&s);
    assert!(r.is_exact());
    assert_eq!(r.chosen, vec![Subset::from_items([0, 1, 2])]);
    assert_eq!(r.welfare, Value::from_int(9));
    let (best, w) = welfare_optimum(&s.valuation().unwrap(), s.game().unwrap().cost_vector());
    assert_eq!(w, Value::from_int(27));
    assert_eq!(best.len(), 9);
}

#[test]
fn two_buyer_certificate_and_cycle() {
    let s = load("two_buyer");
    let g = s.game().unwrap();
    let eps = s.epsilon.as_ref().unwrap();
    match nonexistence_certificate(&g, eps, s.step.as_ref().unwrap(), s.cap.as_ref().unwrap(), DEFAULT_BUDGET).unwrap()
    {
        CertificateOutcome::Certified(c) => assert_eq!(c.margin, val("7/100")),
        other => panic!("{other:?}"),
    }
    let t = best_response_dynamics(
        &g,
        s.prices.as_ref().unwrap(),
        &Schedule::RoundRobin,
        s.delta.as_ref().unwrap(),
        10_000,
    )
    .unwrap();
    assert_eq!(t.outcome, DynamicsOutcome::Cycle { start: 2, period: 20 });
}

#[test]
fn eisen_growth() {
    let s = load("eisen");
    let r = rule_replay(&s.rules, s.prices.as_ref().unwrap(), 50).unwrap();
    assert_eq!(r.round_factors.len(), 25);
    assert_eq!(r.round_factors[1], vec![Some(val("63373/50000")); 2]);
    assert_eq!(r.trace.final_prices.price(0), &(val("10") * val("63373/50000").pow(24) * val("499/500")));
}

#[test]
fn harmonic_revenues() {
    let h4 = load("harmonic4").valuation().unwrap();
    assert_eq!(exact_sampler_expectation(&h4).unwrap(), Value::one());
    assert_eq!(harmonic_sample(&h4, 7).revenue, Value::one());
    let h12 = load("harmonic12").valuation().unwrap();
    let best = brute_force_monopolist(&h12);
    assert_eq!((best.set.len(), best.revenue), (1, val("11/10")));
    assert_eq!(best.welfare_ratio, Some(Value::harmonic(12) / val("11/10")));
}
