//! lethe — an event-driven managed-forgetting engine over a personal
//! knowledge graph.
//!
//! The engine replays user-activity streams, keeps a Memory Buoyancy score
//! per thing (rising on use, sinking along a two-phase decay), assesses
//! long-term Preservation Value under four personas, manages context spaces
//! through their lifecycle, and answers forgetting-aware queries that report
//! what was withheld instead of silently truncating.

pub mod activity;
pub mod buoyancy;
pub mod config;
pub mod context;
pub mod engine;
pub mod error;
pub mod extraction;
pub mod generate;
pub mod kg;
pub mod preservation;
pub mod replay;
pub mod search;
pub mod snapshot;

pub use error::{Error, Result};
