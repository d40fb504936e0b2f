//! Hyperorthogonal well-folded space-filling curves.
//!
//! The crate builds approximating curves on the integer grid by inflation,
//! verifies their structure, orders points along them and measures the
//! worst-case box-to-curve ratio of curve sections.

pub mod analysis;
pub mod construction;
pub mod export;
pub mod fixed;
pub mod geometry;
pub mod gray;
pub mod order;
pub mod render;
pub mod spatial;
