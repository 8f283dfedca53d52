//! Stationary measures for random walks on weighted free groups.

pub mod decomposition;
pub mod error;
pub mod function;
pub mod group;
pub mod io;
pub mod measure;
pub mod partition;
pub mod scalar;
pub mod spikes;
pub mod stationarity;

pub use error::{Error, Result};
pub use group::{Letter, Point, VisualParams, WeightedFreeGroup, Word};
pub use scalar::{Rate, Scalar, Q};
