//! Built-in example systems.

use crate::geometry::Point;
use crate::ifs::{angle_from_turns_of_pi, Ifs, Orientation, Similitude};

/// `θ₁/π` for the rotating map of [`figure_one`].
pub const FIGURE_ONE_TURNS: f64 = 1.0 + std::f64::consts::SQRT_2;

/// Homogeneous three-map set of dimension 1: map 1 rotates by `(1+√2)π`
/// about the origin, maps 2 and 3 translate without rotating.
///
/// The translations `(2/3, 0)` and `(1/3, 2/3)` are a fixed canonical
/// choice; nothing downstream depends on them beyond being distinct.
pub fn figure_one() -> Ifs {
    let r = 1.0 / 3.0;
    Ifs::new(vec![
        Similitude::new(r, angle_from_turns_of_pi(FIGURE_ONE_TURNS), Orientation::Preserving, Point::ORIGIN)
            .unwrap(),
        Similitude::new(r, 0.0, Orientation::Preserving, Point::new(2.0 / 3.0, 0.0)).unwrap(),
        Similitude::new(r, 0.0, Orientation::Preserving, Point::new(1.0 / 3.0, 2.0 / 3.0)).unwrap(),
    ])
    .unwrap()
}

/// Four-corner Cantor set: ratio 1/4, corners of the unit square.
pub fn four_corner() -> Ifs {
    let r = 0.25;
    let corners = [(0.0, 0.0), (0.75, 0.0), (0.0, 0.75), (0.75, 0.75)];
    Ifs::new(
        corners
            .iter()
            .map(|&(x, y)| Similitude::new(r, 0.0, Orientation::Preserving, Point::new(x, y)).unwrap())
            .collect(),
    )
    .unwrap()
}

/// `z/2` and `z/2 + 1/2`: the unit segment on the x-axis.
pub fn segment() -> Ifs {
    Ifs::new(vec![
        Similitude::new(0.5, 0.0, Orientation::Preserving, Point::ORIGIN).unwrap(),
        Similitude::new(0.5, 0.0, Orientation::Preserving, Point::new(0.5, 0.0)).unwrap(),
    ])
    .unwrap()
}
