//! Age-stratified ASD/TD classification from regional brain morphometry.
//!
//! The pipeline consumes tabular morphometry (surface area, cortical
//! thickness, gray-matter volume, mean curvature per atlas region), builds
//! two feature families, screens them with two-sample t-tests, and
//! classifies with a from-scratch random forest:
//!
//! * **MF** (morphological features): the standardized regional measures,
//!   4 per region — 592 columns on the bundled 148-region Destrieux atlas.
//! * **MCF** (morphological connectivity features): the Euclidean distance
//!   between two regions' standardized 4-measure profiles, one per region
//!   pair — 10,878 columns on the bundled atlas.
//!
//! Subjects are stratified into age bands (6-11, 11-18, 6-18 by default)
//! and each (band, feature kind) cell runs an independent experiment:
//! stratified 80/20 split, per-column Welch t-test screening at p < 0.05,
//! forest training, held-out metrics, lobe attribution tables, and a ranked
//! connectome edge list for MCF.
//!
//! Every randomized stage derives its RNG stream from one master seed, so
//! identical inputs and config reproduce byte-identical outputs, serial or
//! parallel.
//!
//! ```
//! use morphoclass::atlas::Atlas;
//! use morphoclass::cohort::default_bands;
//! use morphoclass::features::FeatureKind;
//! use morphoclass::ingest::{build_cohort, JoinMode};
//! use morphoclass::report::{run_experiment, ExperimentConfig};
//! use morphoclass::synth::{generate_cohort, SynthSpec};
//!
//! let atlas = Atlas::synthetic(8)?;
//! let spec = SynthSpec::null_cohort(7, 30, 30);
//! let (phenotypes, morphometry) = generate_cohort(&spec, &atlas)?;
//! let (dataset, _) = build_cohort(phenotypes, morphometry, atlas, JoinMode::Strict)?;
//!
//! let band = &default_bands()[2]; // 6to18
//! let config = ExperimentConfig {
//!     alpha: 0.5, // generous: a null cohort selects few features
//!     ..ExperimentConfig::with_seed(40)
//! };
//! let report = run_experiment(&dataset, band, FeatureKind::Mf, &config)?;
//! assert_eq!(report.n_subjects, 60);
//! # Ok::<(), morphoclass::Error>(())
//! ```

pub mod atlas;
pub mod cohort;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod ingest;
pub mod report;
pub mod seeds;
pub mod select;
pub mod special;
pub mod synth;
pub mod testing;

pub use error::{Error, Result};
