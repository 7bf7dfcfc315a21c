//! Sharp-interface reference computations.
//!
//! Everything here works on exact geometric shapes rather than phase
//! fields: perimeters, Steiner connection costs, the logarithmic
//! interaction energy and the scaling bounds it satisfies. These serve as
//! independent cross-checks for the diffuse simulations.

mod diag;
mod interaction;
mod shape;
mod steiner;

pub use diag::{concentration, connected_components, Diagnostics};
pub use interaction::{log_interaction, log_interaction_raw};
pub use shape::{
    connected_perimeter, perimeter, rect_competitor, scaling_bounds, sharp_energy, BoundReport,
    ShapeSpec,
};
pub use steiner::{mst_length, steiner_length, steiner_tree, SteinerTree};
