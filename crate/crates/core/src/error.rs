use thiserror::Error;

use crate::subset::Subset;
use crate::value::Value;

#[derive(Debug, Error)]
pub enum Error {
    #[error("valuation of the empty set must be 0, got {0}")]
    NonZeroEmptySet(Box<Value>),
    #[error("valuation is not monotone: v({smaller}) = {smaller_value} > v({larger}) = {larger_value}")]
    NonMonotone { smaller: Subset, larger: Subset, smaller_value: Box<Value>, larger_value: Box<Value> },
    #[error("item count {n} outside supported range 1..={max}")]
    SizeLimit { n: usize, max: usize },
    #[error("marginal requested for overlapping sets {0} and {1}")]
    OverlappingSets(Subset, Subset),
    #[error("malformed family: {0}")]
    MalformedFamily(String),
    #[error("greedy rule chose {chosen}, which is not demanded (valuation is not gross substitutes)")]
    GreedyNotDemanded { chosen: Subset },
    #[error("seller {0} controls more than one item")]
    MultiItemSeller(usize),
    #[error("valuation is not submodular")]
    NotSubmodular,
    #[error("input price vector is not an exact equilibrium under the maximal rule")]
    InputNotEquilibrium,
    #[error("decision rule is not up-consistent: {0}")]
    MapNotUpConsistent(String),
    #[error("scan needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
