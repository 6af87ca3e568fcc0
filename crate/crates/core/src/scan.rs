//! Exhaustive search for approximate equilibria on a uniform price grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::demand::PriceVector;
use crate::error::{Error, Result};
use crate::game::{max_gain_up_to, GameSpec};
use crate::subset::Subset;
use crate::value::Value;

/// Default cap on `points · sellers` for one scan.
pub const DEFAULT_BUDGET: u128 = 50_000_000;

/// The grid `{0, step, 2·step, …} ∩ [0, cap]` in every coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Grid {
    pub n: usize,
    pub step: Value,
    pub cap: Value,
    /// Points per axis.
    pub per_axis: u64,
}

impl Grid {
    pub fn new(n: usize, step: &Value, cap: &Value) -> Result<Grid> {
        if !step.is_positive() || cap.is_negative() {
            return Err(Error::InvalidInput(format!("grid needs step > 0 and cap ≥ 0, got {step} and {cap}")));
        }
        let per_axis = (cap / step)
            .floor()
            .to_u64()
            .and_then(|k| k.checked_add(1))
            .ok_or_else(|| Error::InvalidInput(format!("grid {cap}/{step} too fine")))?;
        Ok(Grid { n, step: step.clone(), cap: cap.clone(), per_axis })
    }

    pub fn len(&self) -> u128 {
        (self.per_axis as u128).saturating_pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check_budget(&self, per_point: u128, budget: u128) -> Result<()> {
        let needed = self.len().saturating_mul(per_point.max(1));
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        Ok(())
    }

    /// The `index`-th profile; the last item varies fastest, so indices
    /// follow the lexicographic order of profiles.
    pub fn point(&self, mut index: u128) -> PriceVector {
        let m = self.per_axis as u128;
        let mut ks = vec![0u64; self.n];
        for k in ks.iter_mut().rev() {
            *k = (index % m) as u64;
            index /= m;
        }
        let prices = ks.into_iter().map(|k| &self.step * Value::from_int(k as i64)).collect();
        PriceVector::new(prices).expect("grid prices are nonnegative")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanHit {
    pub prices: PriceVector,
    pub chosen: Vec<Subset>,
    pub utilities: Vec<Value>,
    pub welfare: Value,
    pub max_gain: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanResult {
    pub grid: Grid,
    pub epsilon: Value,
    pub evaluated: u128,
    /// Every grid profile within `epsilon` of equilibrium, in profile order.
    pub hits: Vec<ScanHit>,
    pub min_welfare: Option<Value>,
    pub max_welfare: Option<Value>,
}

/// Checks every grid profile and keeps those where no seller gains more
/// than `epsilon` by deviating to any price (on or off the grid).
pub fn grid_equilibrium_scan(
    g: &GameSpec,
    step: &Value,
    epsilon: &Value,
    cap: &Value,
    budget: u128,
) -> Result<ScanResult> {
    if epsilon.is_negative() {
        return Err(Error::InvalidInput(format!("negative epsilon {epsilon}")));
    }
    for seller in 0..g.sellers().len() {
        g.item_of(seller)?;
    }
    let grid = Grid::new(g.n(), step, cap)?;
    grid.check_budget(g.sellers().len() as u128, budget)?;
    let found: Result<Vec<Option<ScanHit>>> = (0..grid.len() as u64)
        .into_par_iter()
        .map(|index| {
            let p = grid.point(index as u128);
            let (gain, out) = max_gain_up_to(g, &p, epsilon)?;
            Ok((gain <= *epsilon).then_some(ScanHit {
                prices: p,
                chosen: out.chosen,
                utilities: out.seller_utilities,
                welfare: out.welfare,
                max_gain: gain,
            }))
        })
        .collect();
    let hits: Vec<ScanHit> = found?.into_iter().flatten().collect();
    let min_welfare = hits.iter().map(|h| h.welfare.clone()).min();
    let max_welfare = hits.iter().map(|h| h.welfare.clone()).max();
    Ok(ScanResult { evaluated: grid.len(), grid, epsilon: epsilon.clone(), hits, min_welfare, max_welfare })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{DecisionMap, MapKind};
    use crate::valuation::{build, FamilySpec};

    fn val(x: &str) -> Value {
        x.parse().unwrap()
    }

    fn game(spec: FamilySpec) -> GameSpec {
        let v = build(&spec).unwrap();
        let n = v.n();
        GameSpec::new(v, DecisionMap::new(MapKind::MaximalLex, n)).unwrap()
    }

    #[test]
    fn grid_points_are_lexicographic() {
        let grid = Grid::new(2, &val("1/2"), &Value::one()).unwrap();
        assert_eq!(grid.len(), 9);
        assert_eq!(grid.point(0).to_string(), "(0, 0)");
        assert_eq!(grid.point(1).to_string(), "(0, 1/2)");
        assert_eq!(grid.point(5).to_string(), "(1/2, 1)");
    }

    #[test]
    fn budget_is_enforced() {
        let g = game(FamilySpec::Bertrand { n: 3, c: Value::one() });
        let err = grid_equilibrium_scan(&g, &val("1/100"), &Value::zero(), &Value::one(), 1000);
        assert!(matches!(err, Err(Error::BudgetExceeded { needed, budget: 1000 }) if needed == 101u128.pow(3) * 3));
    }

    #[test]
    fn all_or_nothing_equilibria() {
        let g = game(FamilySpec::AllOrNothing { n: 2, c: Value::one() });
        let r = grid_equilibrium_scan(&g, &val("1/20"), &val("1/100"), &Value::one(), DEFAULT_BUDGET).unwrap();
        assert!(!r.hits.is_empty());
        for h in &r.hits {
            let (a, b) = (h.prices.price(0), h.prices.price(1));
            let sum = a + b;
            assert!(sum == Value::one() || sum >= Value::one() + a.clone().max(b.clone()), "{}", h.prices);
        }
        assert_eq!(r.max_welfare, Some(Value::one()));
        assert_eq!(r.min_welfare, Some(Value::zero()));
    }

    #[test]
    fn coverage_utilities_are_pinned() {
        let sets = vec![vec!["a".into(), "b".into()], vec!["b".into(), "c".into()]];
        let g = game(FamilySpec::Coverage { sets, weights: Default::default() });
        let eps = val("1/20");
        let r = grid_equilibrium_scan(&g, &val("1/20"), &eps, &Value::from_int(3), DEFAULT_BUDGET).unwrap();
        assert!(!r.hits.is_empty());
        for h in &r.hits {
            for u in &h.utilities {
                assert!((u - Value::one()).abs() <= eps, "{}", h.prices);
            }
        }
    }
}
