//! Projections of level covers `C_n = ⋃_{|u|=n} F_u(C)` and their
//! integrals over directions.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::hull::{ConvexBody, ConvexPolygon};
use crate::ifs::{CylinderGeometry, Disk, Ifs, DEFAULT_LEVEL_CAP};
use crate::interval::IntervalSet;

/// Projection of `F_u(disk)` onto `l_θ`: the projected image of the
/// centre plus or minus `r_u·R0`.
pub fn cylinder_interval(geom: &CylinderGeometry, theta: f64, disk: &Disk) -> (f64, f64) {
    ConvexBody::Disk(*disk).cylinder_interval(geom, theta)
}

enum Pieces {
    Disks { centers: Vec<Point>, radii: Vec<f64> },
    Polygons { geoms: Vec<CylinderGeometry>, body: ConvexPolygon },
}

/// The images `F_u(C)` of one level, ready to be projected in any direction.
pub struct LevelCover {
    level: usize,
    pieces: Pieces,
}

impl LevelCover {
    pub fn new(ifs: &Ifs, n: usize, body: &ConvexBody, cap: usize) -> Result<Self> {
        let geoms = ifs.level_geometries(n, cap)?;
        let pieces = match body {
            ConvexBody::Disk(d) => Pieces::Disks {
                centers: geoms.iter().map(|g| g.apply(d.center)).collect(),
                radii: geoms.iter().map(|g| g.ratio * d.radius).collect(),
            },
            ConvexBody::Polygon(p) => Pieces::Polygons {
                geoms,
                body: p.clone(),
            },
        };
        Ok(LevelCover { level: n, pieces })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        match &self.pieces {
            Pieces::Disks { radii, .. } => radii.len(),
            Pieces::Polygons { geoms, .. } => geoms.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One projected interval per cylinder, in word order.
    pub fn intervals(&self, theta: f64) -> Vec<(f64, f64)> {
        match &self.pieces {
            Pieces::Disks { centers, radii } => {
                let e = Point::unit(theta);
                centers
                    .iter()
                    .zip(radii)
                    .map(|(c, &h)| {
                        let m = c.dot(e);
                        (m - h, m + h)
                    })
                    .collect()
            }
            Pieces::Polygons { geoms, body } => {
                let body = ConvexBody::Polygon(body.clone());
                geoms.iter().map(|g| body.cylinder_interval(g, theta)).collect()
            }
        }
    }

    pub fn projection(&self, theta: f64) -> IntervalSet {
        IntervalSet::from_unsorted(self.intervals(theta))
    }

    pub fn length(&self, theta: f64) -> f64 {
        self.projection(theta).total_length()
    }
}

/// `L¹` of the projection of `C_n` onto `l_θ`, with the enclosing disk
/// as `C`.
pub fn level_projection_length(ifs: &Ifs, n: usize, theta: f64) -> Result<(f64, IntervalSet)> {
    let cover = LevelCover::new(ifs, n, &ConvexBody::Disk(ifs.disk()), DEFAULT_LEVEL_CAP)?;
    let set = cover.projection(theta);
    Ok((set.total_length(), set))
}

/// Estimate of `L¹` of the projection of the `ρ`-neighbourhood of the
/// attractor: the cylinders of the mass band at `ρ`, each padded by `ρ`.
pub fn neighborhood_projection_length(ifs: &Ifs, body: &ConvexBody, rho: f64, theta: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Range(format!("rho {rho} must be positive")));
    }
    let words = if rho >= 1.0 {
        vec![crate::word::Word::empty()]
    } else {
        let n = (rho.ln() / ifs.r_min().ln()).ceil().max(0.0) as usize;
        if ifs.level_size(n) > DEFAULT_LEVEL_CAP as f64 {
            return Err(Error::RhoTooSmall(rho));
        }
        ifs.mass_band(rho)?
    };
    let raw = words
        .iter()
        .map(|w| {
            let (lo, hi) = body.cylinder_interval(&ifs.geometry(w), theta);
            (lo - rho, hi + rho)
        })
        .collect();
    Ok(IntervalSet::union_length(raw))
}

/// Midpoint-rule directions `θ_j = (j + ½)π/K`.
pub fn quadrature_angles(k: usize) -> Vec<f64> {
    (0..k).map(|j| (j as f64 + 0.5) * PI / k as f64).collect()
}

/// Per-direction lengths of one level and their midpoint-rule integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FavardResult {
    pub level: usize,
    pub angles: Vec<f64>,
    pub lengths: Vec<f64>,
    pub favard: f64,
    pub max_over_theta: f64,
}

/// Favard integral of `C_n` over `K` directions with the disk as `C`.
pub fn favard(ifs: &Ifs, n: usize, k: usize) -> Result<FavardResult> {
    favard_sweep(ifs, n, k, &ConvexBody::Disk(ifs.disk()), None)
}

/// Favard integral of `C_n` with an explicit body and worker count.
///
/// Directions are processed in parallel; `workers = None` uses the ambient
/// pool. Results do not depend on the number of workers.
pub fn favard_sweep(ifs: &Ifs, n: usize, k: usize, body: &ConvexBody, workers: Option<usize>) -> Result<FavardResult> {
    if k == 0 {
        return Err(Error::Range("at least one direction is needed".into()));
    }
    let cover = LevelCover::new(ifs, n, body, DEFAULT_LEVEL_CAP)?;
    let angles = quadrature_angles(k);
    let lengths = in_pool(workers, || angles.par_iter().map(|&t| cover.length(t)).collect::<Vec<f64>>())?;
    Ok(summarize(n, angles, lengths))
}

fn summarize(level: usize, angles: Vec<f64>, lengths: Vec<f64>) -> FavardResult {
    let k = angles.len() as f64;
    let favard = lengths.iter().sum::<f64>() * PI / k;
    let max_over_theta = lengths.iter().copied().fold(0.0, f64::max);
    FavardResult {
        level,
        angles,
        lengths,
        favard,
        max_over_theta,
    }
}

/// Runs `job` on a dedicated pool of `workers` threads, or on the ambient
/// pool when `workers` is `None`.
pub fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}
