//! Fuzzy-logic workbench for mobile subscriber data.
//!
//! * [`fuzzy`] – membership functions, linguistic variables, defuzzification
//! * [`knowledge`] – IF-THEN rule language and Mamdani risk inference
//! * [`query`] – fuzzy SQL over the subscriber-profile store
//! * [`dedup`] – fuzzy duplicate detection and merging
//! * [`location`] – HLR/VLR location-management simulator
//! * [`workbench`] – configuration, persistence and CLI commands

pub mod dedup;
pub mod fuzzy;
pub mod knowledge;
pub mod location;
pub mod query;
pub mod store;
pub mod workbench;
