//! Planar self-similar sets in executable form: symbolic cylinders and
//! their geometry, relatively close word families, projected measures,
//! and Favard-length sweeps of level covers.

pub mod config;
pub mod counting;
pub mod error;
pub mod expr;
pub mod favard;
pub mod geometry;
pub mod hull;
pub mod ifs;
pub mod interval;
pub mod presets;
pub mod projection;
pub mod relclose;
pub mod rotation;
pub mod schedule;
pub mod word;

pub use error::{Error, Result};
pub use geometry::Point;
pub use ifs::{CylinderGeometry, Disk, Ifs, Orientation, Similitude};
pub use word::{TailWord, Word};
