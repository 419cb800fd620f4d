//! Concrete finite-dimensional C*-subalgebras of `M_N`.
//!
//! A subalgebra `B ≅ ⊕ᵢ M_{nᵢ}` sitting unitally inside `M_N` is described by
//! the images of its matrix units. Internally every validated embedding is kept
//! in *frame* form: for each block `i` an isometry `Fᵢ : C^{nᵢ} ⊗ C^{mᵢ} → C^N`
//! with `ι(e^{(i)}_{st}) = Fᵢ (e_{st} ⊗ 1_{mᵢ}) Fᵢ*`, where `mᵢ` is the
//! multiplicity of block `i`. The frames of all blocks together form a unitary
//! of `C^N`, which makes the commutant, the Haar twirl and membership tests
//! exact partial-trace computations.

mod embedding;
mod expectation;
mod subspace;

pub use embedding::{
    parse_embedding_json, validate_embedding, BlockStructure, EmbeddingReport, SubalgebraEmbedding,
    UnitImages,
};
pub use expectation::{
    commutant, commutant_by_linear_system, conditional_expectation, full_in_algebra,
    minimal_central_projections, tensor_embedding, AlgebraFullness, LINEAR_SYSTEM_MAX_DIM,
};
pub use subspace::{OperatorSubspace, Projector};
