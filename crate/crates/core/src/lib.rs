//! Analysis toolkit for Mixup training on finite datasets.
//!
//! The crate is organised around the objects that appear when one studies
//! what a classifier trained on convex combinations of data points learns:
//!
//! - [`mixing`]: the law of the mixing coefficient λ (symmetric Beta, uniform,
//!   or a tabulated density) with exact CDF and interval-moment queries.
//! - [`datasets`]: the constructive datasets (alternating lines, the
//!   four-point cross, two moons, Gaussian binary data) plus CSV/IDX loaders.
//! - [`oracle`]: the closed-form Mixup-optimal classifier, both at a fixed
//!   neighbourhood radius ε and in the ε → 0 limit.
//! - [`assumptions`]: collinearity and pointwise-margin audits of a dataset.
//! - [`recovery`]: reconstruction of points from their pairwise midpoints.
//! - [`training`]: a small MLP with manual gradients, Adam, and ERM/Mixup loops.
//! - [`linear`]: interpolating and max-margin linear classifiers and the
//!   linear Mixup loss.
//!
//! All randomness flows through seeded [`rng::SeedStream`] values so every
//! experiment is reproducible bit for bit.

pub mod assumptions;
pub mod datasets;
pub mod error;
pub mod linear;
pub mod mixing;
pub mod oracle;
pub mod quadrature;
pub mod recovery;
pub mod rng;
pub mod special;
pub mod training;

pub use error::{Error, Result};
