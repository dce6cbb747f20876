//! SVG pictures of level covers and their projections.

use std::fmt::Write;

use favlab_core::favard::LevelCover;
use favlab_core::hull::ConvexBody;
use favlab_core::ifs::DEFAULT_LEVEL_CAP;
use favlab_core::{Ifs, Result};

const SIZE: f64 = 800.0;
const BAR_ROW: f64 = 14.0;

pub struct RenderOptions {
    pub depth: usize,
    /// Directions whose level-`bar_level` projections are drawn as rows of
    /// bars under the picture.
    pub bar_angles: Vec<f64>,
    pub bar_level: usize,
}

/// One `<circle>` per level-`depth` cylinder, centred at the image of the
/// disk centre with radius `r_u·R0`, plus one `<rect>` per projected
/// interval.
pub fn render_svg(ifs: &Ifs, opts: &RenderOptions) -> Result<String> {
    let disk = ifs.disk();
    let geoms = ifs.level_geometries(opts.depth, DEFAULT_LEVEL_CAP)?;
    let span = 2.0 * disk.radius;
    let scale = SIZE / span;
    let (x0, y1) = (disk.center.x - disk.radius, disk.center.y + disk.radius);
    let strip = if opts.bar_angles.is_empty() {
        0.0
    } else {
        BAR_ROW * (opts.bar_angles.len() as f64 + 1.0)
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#,
        w = SIZE,
        h = SIZE + strip
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{SIZE:.0}" height="{:.0}" fill="white"/>"#, SIZE + strip);
    let _ = writeln!(svg, r#"<g fill="black" fill-opacity="0.6">"#);
    for g in &geoms {
        let c = g.apply(disk.center);
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.4}" cy="{:.4}" r="{:.4}"/>"#,
            (c.x - x0) * scale,
            (y1 - c.y) * scale,
            g.ratio * disk.radius * scale
        );
    }
    let _ = writeln!(svg, "</g>");

    if !opts.bar_angles.is_empty() {
        let cover = LevelCover::new(ifs, opts.bar_level, &ConvexBody::Disk(disk), DEFAULT_LEVEL_CAP)?;
        // projections onto l_θ lie in [c·e_θ − R0, c·e_θ + R0]
        let _ = writeln!(svg, r#"<g fill="steelblue">"#);
        for (row, &theta) in opts.bar_angles.iter().enumerate() {
            let mid = disk.center.dot(favlab_core::Point::unit(theta));
            let y = SIZE + BAR_ROW * (row as f64 + 0.5);
            for &(lo, hi) in cover.projection(theta).intervals() {
                let _ = writeln!(
                    svg,
                    r#"<rect x="{:.4}" y="{y:.1}" width="{:.4}" height="{:.1}"><title>{theta:.6}</title></rect>"#,
                    (lo - mid + disk.radius) * scale,
                    ((hi - lo) * scale).max(0.05),
                    BAR_ROW * 0.6
                );
            }
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
