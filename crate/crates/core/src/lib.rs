//! Integral geometry of convex polytopes in the plane and in space.

pub mod approx;
pub mod boolean;
pub mod clip;
pub mod error;
pub mod flag;
pub mod functional;
pub mod geom;
pub mod kinematic;
mod hull;
pub mod mc;
pub mod polytope;
pub mod quadrature;
pub mod report;
pub mod spherical;
pub mod subspace;
pub mod suite;
pub mod translative;

pub use error::{Error, Result};
pub use functional::{AssociatedFunctional, ConeWeight, RegionSet};
pub use geom::Vec3;
pub use mc::{Estimate, MCConfig};
pub use polytope::{build_polytope, Intersection, Polytope};
pub use report::VerificationReport;
pub use spherical::{DensityFunction, SphericalPolytope};
pub use subspace::Subspace;
