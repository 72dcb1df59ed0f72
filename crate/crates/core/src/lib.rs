//! Two-sample testing for differences between high-dimensional Gaussian
//! precision matrices.
//!
//! Each group is summarized by node-wise Lasso regressions. The bias-corrected
//! residual cross-moments give standardized entrywise differences `W`, which are
//! aggregated with `(s0, p)` norms and calibrated with a Gaussian multiplier
//! bootstrap. Adaptive tests combine several norms through recycled bootstrap
//! p-values.
//!
//! ```no_run
//! use precdiff::{load_csv, run_test, Group, TestConfig};
//!
//! let x = load_csv("group1.csv", true, Group::First)?;
//! let y = load_csv("group2.csv", true, Group::Second)?;
//! let report = run_test(&x, &y, &TestConfig::default())?;
//! println!("{}", report.to_json()?);
//! # Ok::<(), precdiff::Error>(())
//! ```
//!
//! With the default `parallel` feature node-wise fits, bootstrap replicates and
//! simulation replications run on the rayon pool. Results do not depend on the
//! number of threads.

pub mod bootstrap;
pub mod data;
pub mod error;
pub mod io;
pub mod lasso;
pub mod model;
pub mod nodewise;
pub mod norm;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod simulation;
pub mod stats;

pub use data::{DataMatrix, Group};
pub use error::{Error, Result};
pub use io::{load_csv, read_csv};
pub use model::{AlternativePair, ModelId, PrecisionModel};
pub use nodewise::{fit_nodewise, NodewiseFit, NodewiseOptions};
pub use norm::{s0p_norm, NormOrder};
pub use pipeline::{run_test, run_test_detailed, TestConfig, TestReport};
pub use simulation::{power_curve, simulate, PowerCurve, SimulationSpec, SimulationSummary};
