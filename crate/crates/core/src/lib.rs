//! Decide whether one copy of a pure state plus supplementary (pure or mixed)
//! ancilla information can be turned into two copies by a trace-preserving
//! completely positive map, construct the map when it exists, and analyze
//! deleters that try to erase one of two copies.
//!
//! The central object is the ratio matrix `Mᵢⱼ = ⟨αᵢ|αⱼ⟩ / ⟨ψᵢ|ψⱼ⟩`: assisted
//! cloning of a pairwise non-orthogonal family `{ψᵢ}` with ancillas `{αᵢ}` is
//! possible exactly when `M` is positive semidefinite, and then the clone can
//! be produced from the ancilla alone.

pub mod batch;
pub mod cli;
pub mod cloning;
pub mod completion;
pub mod deleting;
pub mod equivalence;
pub mod error;
pub mod matrixcore;
pub mod random;
pub mod states;

pub use error::{Error, Result};
pub use matrixcore::{CMatrix, CVector, ToleranceConfig, C64};
pub use states::{GramMatrix, MixedState, PureState, StateFamily};
