//! Interior quadrature cells and the Riesz-1 interaction matrix.

pub mod integrals;
mod kernel;
mod mesh;

pub use kernel::{
    assemble_kernel, assemble_kernel_with_cutoff, potential_at, potential_many, KernelMatrix, NEAR_CUTOFF,
};
pub use mesh::{build_mesh, build_mesh_with_spacings, Cell, CellMesh, MeshConfig};

pub(crate) use kernel::dot;
