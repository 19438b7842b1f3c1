//! Diffeomorphism-invariant Colombeau generalized functions at desk scale.

pub mod asymptotics;
pub mod error;
pub mod expr;
pub mod genfun;
pub mod geometry;
pub mod kernels;
pub mod mollifier;
pub mod multi_index;
pub mod quadrature;
pub mod test_function;
pub mod testing;

pub use error::{Error, Result};
pub use expr::{ExprSpec, ScalarExpr};
pub use geometry::{Aabb, Interval, Support};
pub use multi_index::MultiIndex;
pub use quadrature::{QuadConfig, QuadResult};
pub use test_function::{TestFunction, VectorField};
pub use mollifier::{build_mollifier, Mollifier, MomentReport, Shape};
pub use asymptotics::{fit_order, AsymptoticReport, Verdict};
pub use kernels::{
    check_lsk, CompactProbe, Diffeomorphism, Domain, KernelClass, LambdaPartition, LskCondition, LskReport,
    SmoothingKernel,
};
pub use genfun::{Distribution, DistributionSpec, GenFun, GenFunSpec, GluePart};
pub use testing::{Battery, SweepConfig, TestVerdict};
