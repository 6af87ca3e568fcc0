//! Price dynamics: sequential best-response play, replay of fixed affine
//! update rules, and grid certificates that no approximate equilibrium exists.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::{DecisionMap, MapKind, PriceVector};
use crate::error::{Error, Result};
use crate::game::{best_response, check_equilibrium, deviation_utility, outcome, Buyer, GameSpec};
use crate::scan::Grid;
use crate::subset::Subset;
use crate::valuation::Valuation;
use crate::value::Value;

/// Which seller moves at each step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    RoundRobin,
    Fixed(Vec<usize>),
}

impl Schedule {
    fn order(&self, sellers: usize) -> Result<Vec<usize>> {
        match self {
            Schedule::RoundRobin => Ok((0..sellers).collect()),
            Schedule::Fixed(o) if o.is_empty() => Err(Error::InvalidInput("empty schedule".into())),
            Schedule::Fixed(o) => match o.iter().find(|&&s| s >= sellers) {
                Some(s) => Err(Error::InvalidInput(format!("schedule names seller {s} of {sellers}"))),
                None => Ok(o.clone()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub seller: usize,
    pub old_price: Value,
    pub new_price: Value,
    /// Per buyer, after the move; empty for rule replays.
    pub chosen: Vec<Subset>,
    /// Per seller, after the move; empty for rule replays.
    pub utilities: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DynamicsOutcome {
    /// A full pass of the schedule changed nothing.
    Converged {
        prices: PriceVector,
    },
    /// The state after step `start` recurs after every `period` further steps.
    Cycle {
        start: usize,
        period: usize,
    },
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DynamicsTrace {
    pub initial: PriceVector,
    pub steps: Vec<StepRecord>,
    pub outcome: DynamicsOutcome,
    pub final_prices: PriceVector,
}

impl DynamicsTrace {
    /// Profile after `count` steps.
    pub fn prices_after(&self, count: usize) -> PriceVector {
        self.steps[..count].iter().fold(self.initial.clone(), |p, s| p.with_price(s.seller, s.new_price.clone()))
    }

    /// One row per step: `step,seller,old_price,new_price,chosen,utilities`,
    /// where `chosen` lists each buyer's set as a bitmask and both list
    /// columns are `;`-separated.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(format!("csv output failed: {e}"));
        w.write_record(["step", "seller", "old_price", "new_price", "chosen", "utilities"]).map_err(io)?;
        for s in &self.steps {
            let chosen: Vec<String> = s.chosen.iter().map(|c| c.bits().to_string()).collect();
            let utils: Vec<String> = s.utilities.iter().map(|u| u.to_string()).collect();
            w.write_record([
                s.step.to_string(),
                s.seller.to_string(),
                s.old_price.to_string(),
                s.new_price.to_string(),
                chosen.join(";"),
                utils.join(";"),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

// Detects convergence (a full quiet pass) and exact recurrence of
// (profile, schedule position).
struct Tracker {
    seen: HashMap<(PriceVector, usize), usize>,
    quiet: usize,
    pass: usize,
}

impl Tracker {
    fn new(pass: usize) -> Tracker {
        Tracker { seen: HashMap::new(), quiet: 0, pass }
    }

    fn observe(&mut self, p: &PriceVector, step: usize, changed: bool) -> Option<DynamicsOutcome> {
        self.quiet = if changed { 0 } else { self.quiet + 1 };
        if self.quiet >= self.pass {
            return Some(DynamicsOutcome::Converged { prices: p.clone() });
        }
        let key = (p.clone(), step % self.pass);
        if let Some(&start) = self.seen.get(&key) {
            return Some(DynamicsOutcome::Cycle { start, period: step - start });
        }
        self.seen.insert(key, step);
        None
    }
}

/// Sellers take turns moving to their best response: the supremum price
/// when attained, `δ` below it when the tie there goes against them, and
/// their cost when nothing beats zero.
pub fn best_response_dynamics(
    g: &GameSpec,
    p0: &PriceVector,
    schedule: &Schedule,
    delta: &Value,
    max_steps: usize,
) -> Result<DynamicsTrace> {
    if !delta.is_positive() {
        return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    let order = schedule.order(g.sellers().len())?;
    let mut p = p0.clone();
    let mut tracker = Tracker::new(order.len());
    tracker.observe(&p, 0, true);
    let mut steps = Vec::new();
    let mut result = DynamicsOutcome::StepLimit;
    for step in 0..max_steps {
        let seller = order[step % order.len()];
        let item = g.item_of(seller)?;
        let br = best_response(g, seller, &p)?;
        let old_price = p.price(item).clone();
        let new_price = br.witness_price(delta, g.cost(item));
        let changed = new_price != old_price;
        p = p.with_price(item, new_price.clone());
        let out = outcome(g, &p)?;
        steps.push(StepRecord {
            step,
            seller,
            old_price,
            new_price,
            chosen: out.chosen,
            utilities: out.seller_utilities,
        });
        if let Some(o) = tracker.observe(&p, step + 1, changed) {
            result = o;
            break;
        }
    }
    Ok(DynamicsTrace { initial: p0.clone(), steps, outcome: result, final_prices: p })
}

/// `p_seller ← a · p_source + b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineRule {
    pub seller: usize,
    pub source: usize,
    pub a: Value,
    #[serde(default)]
    pub b: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Replay {
    pub trace: DynamicsTrace,
    /// For each completed pass over the rules, every price divided by its
    /// value one pass earlier (`None` where that was zero).
    pub round_factors: Vec<Vec<Option<Value>>>,
}

/// Applies the rules in order, cyclically, for `steps` updates.
pub fn rule_replay(rules: &[AffineRule], p0: &PriceVector, steps: usize) -> Result<Replay> {
    if rules.is_empty() {
        return Err(Error::InvalidInput("no update rules".into()));
    }
    let n = p0.len();
    if let Some(r) = rules.iter().find(|r| r.seller >= n || r.source >= n) {
        return Err(Error::InvalidInput(format!("rule {} <- {} refers to a missing seller", r.seller, r.source)));
    }
    let mut p = p0.clone();
    let mut tracker = Tracker::new(rules.len());
    tracker.observe(&p, 0, true);
    let mut records = Vec::new();
    let mut round_factors = Vec::new();
    let mut round_start = p.clone();
    let mut result = DynamicsOutcome::StepLimit;
    for step in 0..steps {
        let rule = &rules[step % rules.len()];
        let old_price = p.price(rule.seller).clone();
        let new_price = (&rule.a * p.price(rule.source) + &rule.b).positive_part();
        let changed = new_price != old_price;
        p = p.with_price(rule.seller, new_price.clone());
        records.push(StepRecord { step, seller: rule.seller, old_price, new_price, chosen: vec![], utilities: vec![] });
        if (step + 1) % rules.len() == 0 {
            round_factors.push(
                (0..n)
                    .map(|i| {
                        let before = round_start.price(i);
                        (!before.is_zero()).then(|| p.price(i) / before)
                    })
                    .collect(),
            );
            round_start = p.clone();
        }
        if let Some(o) = tracker.observe(&p, step + 1, changed) {
            result = o;
            break;
        }
    }
    let trace = DynamicsTrace { initial: p0.clone(), steps: records, outcome: result, final_prices: p };
    Ok(Replay { trace, round_factors })
}

/// A concrete profitable deviation at one grid point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Deviation {
    pub prices: PriceVector,
    pub seller: usize,
    pub price: Value,
    pub gain: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonexistenceCertificate {
    pub epsilon: Value,
    pub grid: Grid,
    /// `ε + L · step` with `L` the total buyer weight; every witness gains
    /// more than this, which carries the conclusion to the whole box.
    pub margin: Value,
    pub witnesses: Vec<Deviation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateOutcome {
    Certified(Box<NonexistenceCertificate>),
    /// A grid point where no seller gains more than the margin.
    CounterFound {
        prices: PriceVector,
        max_gain: Value,
    },
}

/// Tries to show that no `ε`-equilibrium exists in `[0, cap]^n`: every grid
/// point must admit a deviation gaining more than `ε + L · step`, since a
/// seller's utility moves by at most `L` per unit of its own price.
pub fn nonexistence_certificate(
    g: &GameSpec,
    epsilon: &Value,
    step: &Value,
    cap: &Value,
    budget: u128,
) -> Result<CertificateOutcome> {
    if epsilon.is_negative() {
        return Err(Error::InvalidInput(format!("negative epsilon {epsilon}")));
    }
    if !(cap / step).is_integer() {
        return Err(Error::InvalidInput(format!("step {step} does not divide cap {cap}")));
    }
    let grid = Grid::new(g.n(), step, cap)?;
    grid.check_budget(g.sellers().len() as u128, budget)?;
    let weight = g.total_weight();
    let margin = epsilon + &weight * step;
    let results: Result<Vec<std::result::Result<Deviation, (PriceVector, Value)>>> = (0..grid.len() as u64)
        .into_par_iter()
        .map(|index| {
            let p = grid.point(index as u128);
            let report = check_equilibrium(g, &p, &margin)?;
            let Some(worst) = report.worst_deviation().filter(|s| s.gain > margin) else {
                return Ok(Err((p, report.max_gain)));
            };
            // Back off from an unattained supremum by little enough that
            // the realized gain still clears the margin.
            let delta = (&worst.gain - &margin) / (&weight * Value::from_int(2));
            let price = worst.best_response.witness_price(&delta, g.cost(worst.item));
            let gain = deviation_utility(g, worst.item, &p, &price)? - &worst.utility;
            debug_assert!(gain > margin);
            Ok(Ok(Deviation { prices: p, seller: worst.seller, price, gain }))
        })
        .collect();
    let mut witnesses = Vec::new();
    for r in results? {
        match r {
            Ok(d) => witnesses.push(d),
            Err((prices, max_gain)) => return Ok(CertificateOutcome::CounterFound { prices, max_gain }),
        }
    }
    Ok(CertificateOutcome::Certified(Box::new(NonexistenceCertificate {
        epsilon: epsilon.clone(),
        grid,
        margin,
        witnesses,
    })))
}

/// One buyer per edge `(i, j, weight)`, valuing any set that meets `{i, j}`
/// at 1; sellers are the graph's nodes.
pub fn bertrand_network(nodes: usize, edges: &[(usize, usize, Value)]) -> Result<GameSpec> {
    if edges.is_empty() {
        return Err(Error::InvalidInput("network needs at least one edge".into()));
    }
    let mut buyers = Vec::with_capacity(edges.len());
    for (i, j, w) in edges {
        if *i >= nodes || *j >= nodes {
            return Err(Error::InvalidInput(format!("edge ({i}, {j}) outside {nodes} nodes")));
        }
        let reach = Subset::from_items([*i, *j]);
        let table =
            Subset::all(nodes).map(|s| if s.is_disjoint(reach) { Value::zero() } else { Value::one() }).collect();
        let valuation = Valuation::from_table(nodes, table)?.with_label(format!("edge({i},{j})"));
        buyers.push(Buyer { weight: w.clone(), valuation });
    }
    GameSpec::with_buyers(buyers, DecisionMap::new(MapKind::MaximalLex, nodes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::{build, FamilySpec};

    fn val(x: &str) -> Value {
        x.parse().unwrap()
    }

    fn prices(xs: &[&str]) -> PriceVector {
        PriceVector::new(xs.iter().map(|x| val(x)).collect()).unwrap()
    }

    pub(crate) fn two_buyer_game() -> GameSpec {
        let v1 = Valuation::from_table(2, vec![Value::zero(), Value::one(), Value::zero(), Value::one()]).unwrap();
        let v2 = Valuation::from_table(2, vec![Value::zero(), Value::one(), Value::one(), Value::one()]).unwrap();
        let buyers = vec![Buyer { weight: Value::one(), valuation: v1 }, Buyer { weight: Value::one(), valuation: v2 }];
        GameSpec::with_buyers(buyers, DecisionMap::new(MapKind::MaximalLex, 2)).unwrap()
    }

    #[test]
    fn bertrand_descends_to_zero() {
        let v = build(&FamilySpec::Bertrand { n: 2, c: Value::from_int(5) }).unwrap();
        let g = GameSpec::new(v, DecisionMap::new(MapKind::MaximalLex, 2)).unwrap();
        let t = best_response_dynamics(&g, &prices(&["5", "5"]), &Schedule::RoundRobin, &val("1/10"), 10_000).unwrap();
        assert_eq!(t.outcome, DynamicsOutcome::Converged { prices: PriceVector::zeros(2) });
        assert_eq!(t.prices_after(t.steps.len()), t.final_prices);
    }

    #[test]
    fn two_buyer_game_cycles() {
        let g = two_buyer_game();
        let t = best_response_dynamics(&g, &prices(&["1", "1"]), &Schedule::RoundRobin, &val("1/20"), 10_000).unwrap();
        let DynamicsOutcome::Cycle { start, period } = t.outcome else { panic!("{:?}", t.outcome) };
        assert!(period > 0);
        assert_eq!(t.prices_after(start), t.prices_after(start + period));
        assert_eq!(start % 2, (start + period) % 2);
    }

    #[test]
    fn coverage_converges_to_marginals() {
        let sets = vec![vec!["a".into(), "b".into()], vec!["b".into(), "c".into()]];
        let v = build(&FamilySpec::Coverage { sets, weights: Default::default() }).unwrap();
        let g = GameSpec::new(v, DecisionMap::new(MapKind::MaximalLex, 2)).unwrap();
        let t = best_response_dynamics(&g, &PriceVector::zeros(2), &Schedule::RoundRobin, &val("1/10"), 100).unwrap();
        assert_eq!(t.outcome, DynamicsOutcome::Converged { prices: prices(&["1", "1"]) });
        assert!(t.steps.len() <= 4);
    }

    #[test]
    fn fixed_schedule_is_validated() {
        let g = two_buyer_game();
        let err = best_response_dynamics(&g, &prices(&["1", "1"]), &Schedule::Fixed(vec![0, 2]), &val("1/20"), 10);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn eisen_growth() {
        let rules = vec![
            AffineRule { seller: 0, source: 1, a: val("499/500"), b: Value::zero() },
            AffineRule { seller: 1, source: 0, a: val("127/100"), b: Value::zero() },
        ];
        let r = rule_replay(&rules, &prices(&["10", "10"]), 50).unwrap();
        let factor = val("63373/50000");
        assert_eq!(r.round_factors.len(), 25);
        assert!(r.round_factors.iter().all(|f| f[1] == Some(factor.clone())));
        assert!(r.round_factors[1..].iter().all(|f| f[0] == Some(factor.clone())));
        assert_eq!(*r.trace.final_prices.price(1), Value::from_int(10) * factor.pow(25));
        assert_eq!(r.trace.outcome, DynamicsOutcome::StepLimit);
    }

    #[test]
    fn replay_contraction_and_identity() {
        let half = |s, src| AffineRule { seller: s, source: src, a: val("1/2"), b: Value::zero() };
        let r = rule_replay(&[half(0, 1), half(1, 0)], &prices(&["8", "8"]), 400).unwrap();
        assert!(r.trace.final_prices.price(0) < &val("1/1000000"));
        let id = |s, src| AffineRule { seller: s, source: src, a: Value::one(), b: Value::zero() };
        let r = rule_replay(&[id(0, 1), id(1, 0)], &prices(&["3", "3"]), 100).unwrap();
        assert_eq!(r.trace.outcome, DynamicsOutcome::Converged { prices: prices(&["3", "3"]) });
    }

    #[test]
    fn certificates() {
        let g = two_buyer_game();
        let c = nonexistence_certificate(&g, &val("1/20"), &val("1/10"), &val("6/5"), u128::MAX).unwrap();
        let CertificateOutcome::Certified(cert) = c else { panic!("{c:?}") };
        assert_eq!(cert.witnesses.len(), 13 * 13);
        assert!(cert.witnesses.iter().all(|w| w.gain > cert.margin));

        let c = nonexistence_certificate(&g, &val("1/2"), &val("1/10"), &val("6/5"), u128::MAX).unwrap();
        assert!(matches!(c, CertificateOutcome::CounterFound { .. }));

        let v = build(&FamilySpec::Bertrand { n: 2, c: Value::from_int(5) }).unwrap();
        let g = GameSpec::new(v, DecisionMap::new(MapKind::MaximalLex, 2)).unwrap();
        let c = nonexistence_certificate(&g, &val("1/20"), &val("1/10"), &Value::one(), u128::MAX).unwrap();
        assert_eq!(c, CertificateOutcome::CounterFound { prices: PriceVector::zeros(2), max_gain: Value::zero() });
    }

    #[test]
    fn networks() {
        let g = bertrand_network(2, &[(0, 1, Value::one())]).unwrap();
        let t = best_response_dynamics(&g, &prices(&["1", "1"]), &Schedule::RoundRobin, &val("1/10"), 1000).unwrap();
        assert_eq!(t.outcome, DynamicsOutcome::Converged { prices: PriceVector::zeros(2) });

        let g = bertrand_network(3, &[(0, 1, Value::one()), (1, 2, Value::one())]).unwrap();
        assert_eq!((g.n(), g.buyers().len()), (3, 2));
        for b in g.buyers() {
            assert!(b.valuation.value(Subset::EMPTY).is_zero());
        }
        assert!(bertrand_network(2, &[(0, 2, Value::one())]).is_err());
    }
}
