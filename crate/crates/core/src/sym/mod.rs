//! Symmetry bookkeeping and the blocked tensor engine.

pub mod dense;
pub mod group;
pub mod packed;
pub mod tensor;

pub use group::{irrep_product, Irrep, PointGroup};
pub use packed::PackedPairAxis;
pub use tensor::{axis, flop_count, flop_count_layout, AxisDims, BlockedTensor, Key, Plan};
