//! Schottky groups in hyperbolic 3-space: Moebius arithmetic, classical
//! markings, disjoint-circle certificates, critical-exponent bounds and a
//! generator-normalization search.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boxcount;
pub mod certificate;
pub mod dimension;
pub mod disk;
pub mod error;
pub mod gaps;
pub mod hyperbolic;
pub mod io;
pub mod marking;
pub mod moebius;
pub mod normalize;
pub mod words;

pub use certificate::CertificatePair;
pub use disk::{Disk, Side};
pub use error::{Error, Result};
pub use hyperbolic::{BallPoint, Geodesic, HalfSpacePoint};
pub use io::GroupFile;
pub use marking::{Marking, VerificationReport};
pub use moebius::{ExtComplex, FixedPointPair, IsometricCircle, MapClass, MoebiusMap, C64};
pub use words::GroupWord;
