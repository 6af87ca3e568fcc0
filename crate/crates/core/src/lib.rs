//! Exact equilibrium analysis for combinatorial pricing games: a buyer with a
//! combinatorial valuation faces sellers who each price their own items.
//!
//! All arithmetic is exact ([`Value`]); sets are bitmasks ([`Subset`]) over
//! at most [`MAX_ITEMS`] items.

pub mod construct;
pub mod demand;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod monopolist;
pub mod random;
pub mod report;
pub mod scan;
pub mod scenario;
pub mod subset;
pub mod valuation;
pub mod value;

pub use demand::{decide, demand, DecisionMap, DecisionMapSpec, MapKind, PriceVector};
pub use error::{Error, Result};
pub use game::{best_response, check_equilibrium, seller_utilities, Buyer, EquilibriumReport, GameSpec, Verdict};
pub use scenario::Scenario;
pub use subset::{SetOrder, Subset, MAX_ITEMS};
pub use valuation::{build, classify, FamilySpec, Valuation};
pub use value::Value;
