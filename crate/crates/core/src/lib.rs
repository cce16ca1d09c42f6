//! Fairness audits for multilingual image–text embeddings.
//!
//! * [`individual`]: how much an image's similarity to a caption moves when
//!   the caption is swapped for its translation, relative to how far apart the
//!   two caption embeddings are, plus the bounds that cap that movement.
//! * [`group`]: matching accuracy per language, cross-lingual gaps,
//!   per-language disparities between protected groups, and the bound that
//!   combines them.
//! * [`zeroshot`]: prompt-based classification that turns image embeddings
//!   into per-language outcomes for the group audit.
//! * [`oracle`]: randomized checks of all the bounds above.
//! * [`ingest`] and [`report`]: file formats in and out.
//!
//! ```
//! use fairlens::math::Vector;
//! use fairlens::individual::{exact_angle_gap_bound, lemma1_bound};
//!
//! let en = Vector::new(vec![1.0, 0.0])?;
//! let de = Vector::new(vec![0.0, 1.0])?;
//! assert!((exact_angle_gap_bound(&en, &de)? - 2f64.sqrt()).abs() < 1e-15);
//! assert!((lemma1_bound(0.6, 1.0)? - 0.4f64.sqrt()).abs() < 1e-15);
//! # Ok::<(), fairlens::Error>(())
//! ```

pub mod error;
pub mod group;
pub mod individual;
pub mod ingest;
pub mod math;
pub mod oracle;
pub mod report;
pub mod zeroshot;

pub use error::{Error, Result};
pub use math::Vector;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/individual.md")]
    mod individual {}
    #[doc = include_str!("../../../book/src/group.md")]
    mod group {}
    #[doc = include_str!("../../../book/src/zeroshot.md")]
    mod zeroshot {}
    #[doc = include_str!("../../../book/src/theory.md")]
    mod theory {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
