//! Toolchain for ScenethesisLang, a constraint-expressive description language
//! for 3D scenes.
//!
//! The crate is organised along the synthesis pipeline:
//!
//! - [`dsl`] lexes, parses, resolves, type-checks and pretty-prints programs.
//! - [`scene`] is the geometric model: transforms, oriented boxes, regions,
//!   collision, containment and support predicates.
//! - [`constraints`] compiles a program into an evaluable [`constraints::ConstraintSet`],
//!   injecting the hidden physical constraints (non-collision, support, containment).
//! - [`solver`] is the iterative batched repair solver.
//! - [`assets`] formulates retrieval queries and decides between retrieval and generation.
//! - [`export`] assembles and reads back engine-importable scene packages.
//! - [`metrics`] implements the evaluation metrics (constraint resemblance via
//!   Hungarian matching, solution correctness).
//! - [`pipeline`] wires the stages together.

pub mod assets;
pub mod constraints;
pub mod dsl;
pub mod export;
pub mod geom;
pub mod metrics;
pub mod pipeline;
pub mod scene;
pub mod solver;
