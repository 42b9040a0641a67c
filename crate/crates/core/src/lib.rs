//! Decision procedures and exact optimization for cyclic multiwords in free
//! groups, modeled as graph pairs: a finite leafless graph carrying an
//! immersed multicycle.
//!
//! The crate decides irreducibility through Whitehead graphs and unfolding,
//! assembles the cone of gluing and admissibility equations over the pieces
//! of the Whitehead system, optimizes the rank functional with an exact
//! rational simplex, and reconstructs and certifies witnesses from integer
//! cone points, including surface-form witnesses found by unfolding.

pub mod error;
pub mod graph;
mod iso;
pub mod pair;
pub mod whitehead;
pub mod pieces;
pub mod lp;
pub mod certify;
pub mod json;

pub use error::{Error, Result};
pub use graph::{EdgeId, Graph, GraphMap, GraphMorphism, VertexId};
pub use iso::graphs_isomorphic;
pub use pair::{
    admissibility_degree, pair_fold, pair_isomorphic, parse_words, rose, GraphPair, Multicycle,
    PairMorphism,
};
pub use whitehead::{
    classify, components_survive_unfolding, reconstruct_pair, unfold_at,
    unfold_to_locally_irreducible, wedge, wedge_within, unwedge, whitehead_system, ReducibleWitness,
    UnfoldOutcome, WedgeSides, WhClassification, WhEdge, WhGraph, WhiteheadSystem,
};

pub use certify::{
    certify_surface, find_surface, identity_dimmersion, is_fat, is_weakly_irreducible_certificate,
    project_vector, reconstruct_dimmersion, verify_certificate, verify_dimmersion, witness_degree,
    DImmersion, SearchBudgets, SurfaceCertificate, SurfaceReport, SurfaceSearch, Violation,
    ViolationKind,
};
pub use lp::{
    integer_point, maximize_rank, minimize_rank, optimal_face_vertices, primitive_integer_point,
    residuals_are_zero, FaceVertices, LpResult, LpStatus, Rational, RationalVector,
};
pub use pieces::{
    build_cone, enumerate_pieces, enumerate_pstars, splice_compatible, wh_components, ChiMode,
    ConeSystem, EnumCaps, Piece, PieceSet, PieceStar, SparseRow, SpliceRelation, StarSet,
    WhComponent,
};
