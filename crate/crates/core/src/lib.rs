//! Discrete differential geometry workbench for the Gauss–Codazzi–Ricci
//! equations of submanifolds and their weak stability.
//!
//! The pipeline runs on rectangular coordinate charts: sample or extract the
//! data `(g, h, κ)` of a submanifold ([`geometry`]), measure how far it is
//! from satisfying the compatibility equations ([`gcr`], [`cartan`]), and
//! rebuild an immersion from it ([`realize`]). Discrete exterior calculus on
//! flat tori ([`dec`]) supports the compensated-compactness experiments in
//! [`weakconv`].

pub mod cartan;
pub mod dec;
pub mod error;
pub mod gcr;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod presets;
pub mod realize;
pub mod weakconv;

pub use cartan::{CanonicalForm, ConnectionForm, FramePackage};
pub use dec::{Cochain, TorusMesh};
pub use error::{Error, Result};
pub use gcr::{Equation, GcrResidual, Norms};
pub use geometry::{GeometricData, ImmersionField, MetricField, NormalConnField, NormalFrameField, SecondFormField};
pub use grid::{Chart, ChartField, PathStep};
pub use presets::{DataSource, Preset};
pub use realize::{Alignment, RealizationResult, RealizeOptions};
pub use weakconv::{ConvergenceTable, SequenceKind, SequenceSpec, Verdict};
