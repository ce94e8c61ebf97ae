//! Binary-tree stock price model, the bubble ratio κ = ν/ν* and its
//! cross-sectional estimation, and the position/velocity uncertainty product
//! of probability densities.

pub mod data_io;
pub mod error;
pub mod kappa;
pub mod regress;
pub mod rng;
pub mod stats;
pub mod tree;
pub mod uncertainty;

pub use data_io::{PricePanel, UniverseSnapshot};
pub use error::{Error, Result};
pub use kappa::{BenchmarkMode, KappaReport, ReturnPanel};
pub use regress::{DesignMatrix, RegressionResult};
pub use tree::{PricePath, TreeParams, WalkPath};
pub use uncertainty::DensityGrid;
