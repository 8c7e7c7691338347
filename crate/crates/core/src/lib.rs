//! Online AutoML for drifting data streams.

pub mod drift;
pub mod error;
pub mod eval;
pub mod learners;
pub mod orchestrator;
pub mod pipeline;
pub mod preprocess;
pub mod search;
pub mod stream;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/streams.md")]
    mod streams {}
    #[doc = include_str!("../../../book/src/pipelines.md")]
    mod pipelines {}
    #[doc = include_str!("../../../book/src/drift.md")]
    mod drift {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/adaptation.md")]
    mod adaptation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
