//! Zero-shot dialogue state tracking harness.
//!
//! The pipeline: a slot [`schema`] parameterizes a frozen task [`prompting`]
//! template; dialogues from a [`corpus`] are played turn by turn against a
//! [`backend`] (remote endpoint, recorded-transcript replay, or scripted
//! faults); raw responses go through [`extraction`] into normalized state
//! updates; the [`tracker`] accumulates them into per-turn states and full
//! traces; [`eval`] scores traces against gold states and [`analysis`]
//! detects the recurring error categories.

#![forbid(unsafe_code)]

pub mod analysis;
pub mod backend;
pub mod convert;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod extraction;
pub mod prompting;
pub mod resources;
pub mod schema;
pub mod tracker;

#[doc(hidden)]
pub mod testutil;

pub use error::{Error, Result};
