//! A production-rule decision model for a two-sector value stream map, and
//! the data pipeline around it.
//!
//! - [`engine`]: productions, utility learning, softmax conflict resolution
//!   and event traces.
//! - [`memory`] and [`time`]: chunks, buffers and the simulated clock.
//! - [`task`]: the decision task, problem instances and batch runs.
//! - [`codec`]: trace text encoding and target distillation.
//! - [`features`]: embedding providers, PCA and group statistics.
//! - [`dataset`]: prompts, records, splits and export.
//! - [`probe`]: logistic probes, baselines, reports and progression fits.
//!
//! ```
//! use vsm_actr::engine::td_update;
//!
//! assert_eq!(td_update(0.0f64, 1.0, 0.5), 0.5);
//! ```

pub mod engine;
pub mod memory;
pub mod time;
pub mod task;
pub mod codec;
pub mod features;
pub mod linalg;
pub mod dataset;
pub mod probe;

// Book chapters run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/learning.md")]
    mod learning {}
    #[doc = include_str!("../../../book/src/traces.md")]
    mod traces {}
    #[doc = include_str!("../../../book/src/task.md")]
    mod task {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/dataset.md")]
    mod dataset {}
    #[doc = include_str!("../../../book/src/probe.md")]
    mod probe {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
