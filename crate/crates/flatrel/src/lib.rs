//! flatrel: exact computation on translation surfaces.
//!
//! The library provides a triangulated surface kernel with exact coordinates
//! in real quadratic fields, the GL(2,R) and horizontal Rel deformations,
//! horizontal-structure analysis (saddle connections, cylinders, data
//! diagrams), eigenform-locus constructions and detection, and flow/counting
//! experiments.

pub mod exactnum;
pub mod surface;
pub mod scan;
pub mod rel;
pub mod eigenform;
pub mod dynamics;
pub mod fixtures;
pub mod json;
