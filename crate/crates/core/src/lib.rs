//! Algebraic and numerical toolkit for Kähler manifolds carrying a complex
//! foliation with one-dimensional leaves and totally geodesic horizontal
//! structure.
//!
//! The algebraic layers are generic over [`Real`]; the chart layer works in
//! `f64`. Aliases ending in `64` fix the scalar type.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod catalog;
pub mod chart;
pub mod curvature;
pub mod error;
pub mod example4;
pub mod foliation;
pub mod holonomy;
pub mod linalg;
pub mod nearly_kahler;
pub mod pipeline;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod tensor;

pub use catalog::{catalog_export, overlap_check, table1_entries, table2_entries, CatalogExport, OverlapReport};
pub use chart::{
    christoffel_fd, curvature_fd, fubini_study_chart, kahler_residual, lemma_l1_derivative_residuals, oneill_from_chart,
    riemannian_foliation_residual, twistor_distribution, Chart, DistributionField, FdConfig, Scheme,
};
pub use curvature::{const_hol_curvature, holomorphic_sectional, ricci_restricted, sectional, CurvatureTensor};
pub use error::{Error, Result};
pub use example4::{example4_build, example4_grid, example4_verify, ComplexPolynomial, Example4, Example4Point};
pub use foliation::{FoliationClass, ONeillTensors, SplitTangent};
pub use holonomy::{
    center, hol_generate, irreducibility_check, jacobi_residual, killing_definiteness, nomizu_build, regularity_verdict,
    stabilizer_h, EndoLieAlgebra, InfinitesimalModel, KillingVerdict, NomizuAlgebra,
};
pub use linalg::Mat;
pub use nearly_kahler::{canonical_variation, NKStructure};
pub use pipeline::{
    algebraic_checks, catalog_checks, example4_checks, nomizu_checks, run_twistor, HSource, NomizuOptions, TwistorConfig,
    TwistorRun,
};
pub use report::CheckReport;
pub use scalar::Real;
pub use tensor::{commutator, metric_adjoint, orthonormal_frame, Endo, ModelSpace, Tensor3, Tensor4};

pub type Mat64 = Mat<f64>;
pub type ModelSpace64 = ModelSpace<f64>;
pub type Endo64 = Endo<f64>;
pub type Tensor3x64 = Tensor3<f64>;
pub type Tensor4x64 = Tensor4<f64>;
pub type CurvatureTensor64 = CurvatureTensor<f64>;
pub type SplitTangent64 = SplitTangent<f64>;
pub type ONeillTensors64 = ONeillTensors<f64>;
pub type NKStructure64 = NKStructure<f64>;
pub type EndoLieAlgebra64 = EndoLieAlgebra<f64>;
pub type NomizuAlgebra64 = NomizuAlgebra<f64>;
pub type InfinitesimalModel64 = InfinitesimalModel<f64>;
