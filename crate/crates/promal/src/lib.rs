//! Alignment of matrix sets by similarity transformations, and the distances
//! that fall out of it.
//!
//! A set of n×m matrices measuring the same phenomenon often differs by an
//! arbitrary orientation of the column space. This crate estimates, for each
//! matrix, the orthogonal transform (plus optional scale and translation)
//! that maps it into a common reference space, then turns the fit into two
//! complementary N×N distance matrices:
//!
//! * the **residual** distance ‖X̂ᵢ − X̂ⱼ‖²_F between aligned matrices — how
//!   different two matrices remain once orientation is removed, and
//! * the **rotational** distance ‖R̂ᵢ − R̂ⱼ‖²_F = 2m − 2·tr(R̂ᵢᵀR̂ⱼ) between
//!   the estimated transforms — how much orientation separated them in the
//!   first place.
//!
//! Either matrix feeds the downstream consumers: multidimensional scaling
//! ([`embed`]) and agglomerative clustering ([`cluster`]). A generative
//! simulator ([`simulate`]) plants known transforms for testing and
//! benchmarking, and [`io`] persists every artifact as plain CSV.
//!
//! # Quick tour
//!
//! ```
//! use promal::align::{solve_promises, AlignConfig};
//! use promal::distance::{DistanceForm, DistanceMatrix};
//! use promal::simulate::{generate, RotationScheme, ScaleScheme, SimSpec, TranslationScheme};
//!
//! // Ten 8x12 matrices that are noisy rotations of one common reference.
//! let spec = SimSpec {
//!     rows: 8,
//!     cols: 12,
//!     count: 10,
//!     noise_sd: 0.1,
//!     rotation_scheme: RotationScheme::Random,
//!     scales: ScaleScheme::AllOne,
//!     translations: TranslationScheme::Zero,
//!     seed: 1,
//! };
//! let (set, _truth) = generate(&spec)?;
//!
//! let cfg = AlignConfig { scaling: false, ..AlignConfig::default() };
//! let result = solve_promises(&set, &cfg)?;
//! assert!(result.converged);
//!
//! let d_re = DistanceMatrix::residual(&result, DistanceForm::Squared)?;
//! let d_ro = DistanceMatrix::rotational(&result, DistanceForm::Squared)?;
//! assert_eq!(d_re.len(), 10);
//! assert_eq!(d_ro.len(), 10);
//! # Ok::<(), promal::Error>(())
//! ```
//!
//! The `promal` binary wires the same pipeline end to end:
//! `simulate → align → dist → mds/cluster`, one subcommand per stage.

pub mod align;
pub mod cluster;
pub mod distance;
pub mod embed;
mod error;
pub mod io;
pub mod matcore;
pub mod prior;
pub mod simulate;

pub use error::{Error, Result};
pub use matcore::{Mat, OrthoMat, SvdResult};

/// Every fenced example in the guide compiles and runs under
/// `cargo test --doc`, which keeps the book and the library in sync.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    mod alignment {}
    #[doc = include_str!("../../../book/src/regularization.md")]
    mod regularization {}
    #[doc = include_str!("../../../book/src/distances.md")]
    mod distances {}
    #[doc = include_str!("../../../book/src/embedding.md")]
    mod embedding {}
    #[doc = include_str!("../../../book/src/clustering.md")]
    mod clustering {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
}
