//! Clustering of stationary time series by their spectra.
//!
//! Each series is summarized by its normalized Parzen spectral estimate, a
//! unit-mass density on the positive frequency grid. Similarity between
//! series is the total variation (TV) distance between these densities.
//! The hierarchical spectral merger ([`hsm`]) agglomerates series and, unlike
//! classical [`linkage`] clustering, re-estimates each merged cluster's
//! spectrum from all of its members.
//!
//! ```
//! use specmerge::prelude::*;
//!
//! let design = Design::experiment2();
//! let (series, truth) = design.simulate(1000, Seed(7)).unwrap();
//! let history = hsm_cluster(&series, &HsmConfig::new(Variant::Average)).unwrap();
//! let found = Partition::from_labels(&history.labels_at(3).unwrap()).unwrap();
//! assert!(similarity_index(&truth, &found).unwrap() > 0.5);
//! ```

pub mod distances;
pub mod error;
pub mod evaluate;
pub mod history;
pub mod hsm;
pub mod linkage;
pub mod modelselect;
pub mod seed;
pub mod simulate;
pub mod spectra;

pub use error::{Error, Result};
pub use seed::Seed;

pub mod prelude {
    pub use crate::distances::{spectral_matrix, tv_distance, DissimilarityMatrix, Measure};
    pub use crate::error::{Error, Result};
    pub use crate::evaluate::{contiguous_segments, run_experiment, similarity_index, Design, Method, Partition};
    pub use crate::history::MergeHistory;
    pub use crate::hsm::{hsm_cluster, HsmConfig, Variant};
    pub use crate::linkage::{linkage_cluster, Linkage, LinkageSpec};
    pub use crate::modelselect::{choose_k, elbow, BootstrapParams, NullModel, SelectionMethod};
    pub use crate::seed::Seed;
    pub use crate::simulate::{simulate_ar2, simulate_from_spectrum, Ar2Spec, JonswapParams, MixtureDesign};
    pub use crate::spectra::{normalized_spectrum, BandwidthPolicy, SpectralDensity, TimeSeries};
}

// Compile and run the guide's code blocks as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/tv-distance.md")]
    mod tv_distance {}
    #[doc = include_str!("../../../book/src/merger.md")]
    mod merger {}
    #[doc = include_str!("../../../book/src/linkage.md")]
    mod linkage {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/model-selection.md")]
    mod model_selection {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
