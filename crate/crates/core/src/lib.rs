//! Equilibrium solvers, welfare analysis and Monte Carlo verification for
//! sequential-search contests.
//!
//! Players pay a fixed cost per draw from a common distribution, stop at a
//! reservation threshold, and the best accepted value wins. Solvers work in
//! quantile space `u = F(x)` and map back to values only at the end.

pub mod dist;
pub mod equilibrium;
pub mod error;
pub mod finite;
pub mod hierarchy;
pub mod mc;
pub mod numeric;
pub mod output;
pub mod par;
pub mod planner;
pub mod rng;

pub use dist::{
    make_custom, make_exponential, make_pareto, make_uniform, truncate_below, DistSpec, Distribution,
    TruncatedDistribution, UniformSource,
};
pub use equilibrium::{
    comparative_statics, solve_asymmetric, solve_multiprize, solve_symmetric, AsymmetricEquilibrium,
    ContestParams, MultiPrizeEquilibrium, PrizeSchedule, SymmetricEquilibrium,
};
pub use error::{Error, Result};
pub use finite::{
    solve_k_draw, solve_two_draw, threshold_profile, threshold_profile_with, FiniteHorizonEquilibrium, FiniteHorizonParams, OpponentFinalCdf,
    ThresholdProfile,
};
pub use hierarchy::{
    large_market_limit, solve_designer, verify_designer_foc, DesignerEquilibrium, DesignerParams, FocReport,
    LargeMarketRow,
};
pub use mc::{
    deviation_scan, distribution_free_check, recall_irrelevance_check, simulate_contest, simulate_designer,
    SimulationConfig, SimulationReport, Strategy, StrategyProfile,
};
pub use planner::{
    classify_prize, efficient_prize_integral, hazard_order_check, planner_welfare, solve_planner, HazardOrderReport,
    PlannerSolution, PrizeClassification, SearchClass,
};
