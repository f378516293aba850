//! Half-hourly national grid balancing under parametric uncertainty.
//!
//! The crate follows one scenario through a fixed pipeline:
//!
//! 1. [`shapes`] loads, cleans or synthesizes the base-year demand and
//!    fuel-wise supply curves and derives per-MW solar and wind shapes.
//! 2. [`scenario`] resolves a parameter point, expands parameter grids and
//!    builds the 2021–2030 capacity trajectories.
//! 3. [`dispatch`] nets must-run supply off demand, runs the fossil merit
//!    order, enforces daily coal part-load floors, checks the grid buffer and
//!    reports the residual that NEW supply has to serve.
//! 4. [`newsupply`] sizes and simulates the NEW option (thermal, or battery
//!    with dedicated solar), including under-sizing with biodiesel and the
//!    fossil displacement feedback loops.
//! 5. [`economics`] prices everything, discounts it to 2021 and ranks
//!    scenarios on the cost frontier.
//!
//! [`pipeline`] wires the steps together and runs grids in parallel;
//! [`report`] writes the CSV/JSON exports.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispatch;
pub mod economics;
mod error;
pub mod newsupply;
pub mod pipeline;
pub mod report;
pub mod scenario;
pub mod series;
pub mod shapes;

pub use error::{Error, Result};
pub use series::{HalfHourlySeries, SLOTS_PER_DAY, SLOT_HOURS};

/// First modelled year. Base-year shapes are treated as this year's shapes.
pub const FIRST_YEAR: i32 = 2021;
/// Last modelled year (planning horizon).
pub const LAST_YEAR: i32 = 2030;

/// Iterator over the modelled years, inclusive.
pub fn horizon() -> impl Iterator<Item = i32> + Clone {
    FIRST_YEAR..=LAST_YEAR
}
