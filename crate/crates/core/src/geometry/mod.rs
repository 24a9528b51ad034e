//! Polygonal regions with holes and the boundary quantities built on them.

mod distance;
pub mod io;
mod offset;
mod region;
pub mod ring;
pub mod shapes;
mod trace;
mod vec2;

pub use distance::{hausdorff_distance, hausdorff_distance_vertices};
pub use offset::dilate;
pub use region::{area, perimeter, rescale_to_area, Component, Region, RingKind};
pub use trace::{boundary_trace, BoundaryTrace, TracePoint, CUSP_ANGLE};
pub use vec2::Vec2;
