//! Exact algebra of matrix-multiplication tensor decompositions, structure
//! detection, complexity analysis, a structure-driven recursive multiplier
//! with an operation-count simulator, and a search pipeline (flip walks,
//! symmetry sampling, Hensel lifting, addition counting) over Z2.

pub mod builtin;
pub mod complexity;
pub mod cse;
pub mod decomposition;
pub mod error;
pub mod executor;
pub mod format;
pub mod matrix;
pub mod plan;
pub mod ring;
pub mod search;
pub mod shape;
pub mod simulator;
pub mod structure;
pub mod verify;

pub use decomposition::{Decomposition, RankOneTerm, Target};
pub use error::{Error, Result};
pub use matrix::{Matrix, MatrixBuffer};
pub use ring::Ring;
pub use shape::Shape;
pub use verify::VerificationReport;
