//! Quasi-cluster algebras of unpunctured marked surfaces, orientable or not.
//!
//! The crate models quasi-triangulations as gluing data, mutates them by quasi-flips, tracks
//! cluster variables as exact Laurent polynomials, and checks structural and numerical
//! identities (orientation double covers, lambda lengths, friezes).

pub mod cover;
pub mod explorer;
pub mod frieze;
pub mod gluing;
pub mod hyperbolic;
pub mod laurent;
pub mod seed;
pub mod surface;

pub use gluing::{ElemId, Element, ElementKind, Face, FaceKind, FlipCase, GluingError, QuasiTriangulation};
pub use laurent::{LaurentError, LaurentPoly, VarRegistry};
pub use surface::{Preset, SurfaceError, SurfaceSignature};
pub use seed::{ClusterKey, EvalNamer, Namer, Seed, SeedError, TableNamer};
pub use explorer::{explore, verify_structure, ExchangeGraph, ExploreOptions};
pub use cover::{DoubleCover, OrbitWalker};
pub use frieze::{FriezeError, FriezeSpec, Staircase, TilingGrid, Window};
pub use hyperbolic::{Horocycle, IdentitySuite, Isometry, SuiteReport};
