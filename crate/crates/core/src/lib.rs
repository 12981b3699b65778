//! Watertight remeshing of defective triangle meshes through a thickened
//! distance-field proxy, a Delaunay tetrahedral complex and an exact s-t
//! min cut over its cells.

pub mod bvh;
pub mod decimate;
pub mod error;
pub mod evalkit;
pub mod extract;
pub mod field;
pub mod geom;
pub mod isosurface;
pub mod mesh;
pub mod partition;
pub mod pipeline;
pub mod synth;
pub mod tetra;

pub use error::{Error, Result};
pub use mesh::{TriangleMesh, ValidationReport};
