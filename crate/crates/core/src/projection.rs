//! Orthogonal and radial projections of the natural measure: atomic level
//! measures, density probes, the density witness for a relatively close
//! family, and arc-cover estimates for radial projections.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{circular_distance, normalize_angle, Point};
pub use crate::geometry::project;
use crate::ifs::{Ifs, Orientation, DEFAULT_LEVEL_CAP};
use crate::relclose::RelCloseCertificate;
use crate::rotation::{small_rotation_word, steering_suffix};
use crate::word::Word;

/// Atoms `(position, weight)` sorted by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<(f64, f64)>,
    pub total: f64,
    pub level: usize,
    /// Largest distance from an atom to the projection of its cylinder.
    pub max_error: f64,
}

/// The projection onto `l_θ` of the level-`n` discretization of `μ`: one
/// atom per word `u` at `Π_θ(u·1̄)` with weight `r_u^γ`.
pub fn level_measure(ifs: &Ifs, theta: f64, n: usize) -> Result<AtomicMeasure> {
    level_measure_capped(ifs, theta, n, DEFAULT_LEVEL_CAP)
}

pub fn level_measure_capped(ifs: &Ifs, theta: f64, n: usize, cap: usize) -> Result<AtomicMeasure> {
    let geoms = ifs.level_geometries(n, cap)?;
    let center = ifs.disk().center;
    let gamma = ifs.gamma();
    let mut atoms: Vec<(f64, f64)> = geoms
        .iter()
        .map(|g| (project(g.apply(center), theta), (gamma * g.log_ratio).exp()))
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = atoms.iter().map(|a| a.1).sum();
    let r_max = geoms.iter().map(|g| g.ratio).fold(0.0, f64::max);
    Ok(AtomicMeasure {
        atoms,
        total,
        level: n,
        max_error: ifs.diameter_bound() * r_max,
    })
}

impl AtomicMeasure {
    /// Weight of the atoms in the open interval `(x − r, x + r)`.
    pub fn ball_mass(&self, x: f64, r: f64) -> f64 {
        let lo = self.atoms.partition_point(|a| a.0 <= x - r);
        let hi = self.atoms.partition_point(|a| a.0 < x + r);
        self.atoms[lo..hi.max(lo)].iter().map(|a| a.1).sum()
    }
}

/// `μ_θ(B(x, r))/(2r)^γ` for each radius, from level-`n` atoms.
///
/// Every radius must exceed 100 times the atoms' positional error.
pub fn density_profile(ifs: &Ifs, theta: f64, x: f64, radii: &[f64], n: usize) -> Result<Vec<f64>> {
    let measure = level_measure(ifs, theta, n)?;
    let gamma = ifs.gamma();
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return Err(Error::Range(format!("radius {r} must be positive")));
            }
            if measure.max_error >= r / 100.0 {
                return Err(Error::ResolutionTooCoarse {
                    error: measure.max_error,
                    radius: r,
                });
            }
            Ok(measure.ball_mass(x, r) / (2.0 * r).powf(gamma))
        })
        .collect()
}

/// A point of high projected density built from a relatively close family.
///
/// With `s` the steering prefix, `x = Π_θ(s·u₁·1̄)` and `b = 5·D·r_{s·u₁}`.
/// Distances and the ratio are also given relative to `r_s`, which may
/// underflow for long prefixes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityWitness {
    pub prefix: Word,
    pub x: f64,
    pub b: f64,
    pub log_b: f64,
    /// `Σ r_{s·u_i}^γ / (2b)^γ`.
    pub ratio: f64,
    /// `N/(10·D·e)^γ`.
    pub bound: f64,
    /// `max_i |x − Π_θ(s·u_i·1̄)| / (D·r_{s·u₁})`; at most 3 by the chain
    /// of triangle inequalities.
    pub chain: f64,
    pub contained: bool,
}

/// Steers the family of `cert` towards direction `θ` and measures the
/// projected mass near the first word.
pub fn density_witness(ifs: &Ifs, cert: &RelCloseCertificate, theta: f64) -> Result<DensityWitness> {
    if cert.is_empty() {
        return Err(Error::Empty("certificate words"));
    }
    let d = ifs.diameter_bound();
    let gamma = ifs.gamma();
    let u1 = &cert.words[0];
    let g1 = ifs.compose(u1)?;
    let eps = g1.ratio;
    let phi = normalize_angle(theta - cert.theta);
    let prefix = if circular_distance(phi, 0.0) < eps {
        Word::empty()
    } else {
        let a = small_rotation_word(ifs, eps, 1_000_000)?;
        steering_suffix(ifs, &Word::empty(), phi, eps, &a)?
    };
    let gs = ifs.compose(&prefix)?;
    if gs.orientation != Orientation::Preserving || circular_distance(gs.angle + cert.theta, theta) >= eps {
        return Err(Error::VerificationFailed("steering prefix misses the direction".into()));
    }
    let center = ifs.disk().center;
    // Π_θ(s·w·1̄) − Π_θ(s·u₁·1̄) = r_s·(Π(w1̄) − Π(u₁1̄))·L_sᵀe_θ
    let e = gs.linear_t(Point::unit(theta));
    let p1 = g1.apply(center);
    let mut chain: f64 = 0.0;
    let mut mass_rel = 0.0;
    for w in &cert.words {
        let g = ifs.compose(w)?;
        chain = chain.max((g.apply(center) - p1).dot(e).abs() / (d * g1.ratio));
        mass_rel += (gamma * g.log_ratio).exp();
    }
    let ratio = mass_rel / (10.0 * d * g1.ratio).powf(gamma);
    let bound = cert.len() as f64 / (10.0 * d * std::f64::consts::E).powf(gamma);
    let log_b = (5.0 * d).ln() + gs.log_ratio + g1.log_ratio;
    Ok(DensityWitness {
        x: project(gs.apply(p1), theta),
        b: log_b.exp(),
        log_b,
        ratio,
        bound,
        chain,
        contained: chain < 5.0,
        prefix,
    })
}

/// Direction of `x` seen from `a`, in `[0, 2π)`.
pub fn radial_project(x: Point, a: Point) -> Result<f64> {
    let v = x - a;
    if v.norm() < 1e-12 {
        return Err(Error::CenterHit);
    }
    Ok(v.angle())
}

/// Arc-cover estimate of the radial projection of a level cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport {
    pub level: usize,
    /// `Σ min(L^s, k·δ^s)` over merged components of length `L` built from
    /// `k` arcs, with `δ` the longest single arc.
    pub sum: f64,
    pub components: usize,
    pub delta: f64,
    /// Cylinders dropped because their disk lies inside the exclusion ball.
    pub excluded: usize,
    /// `a` lies in the enclosing disk.
    pub center_inside: bool,
}

/// Covers the directions from `a` to the level-`n` disks `F_u(disk)` by
/// arcs of half-width `asin(min(1, r_u·R0/dist))` and sums their merged
/// components at exponent `s`.
///
/// Disks lying entirely within `exclusion_radius` of `a` are dropped and
/// counted; a kept disk containing `a` contributes the full circle.
pub fn visibility_estimate(ifs: &Ifs, a: Point, s: f64, n: usize, exclusion_radius: f64) -> Result<VisibilityReport> {
    if !(s > 0.0 && s <= 2.0) {
        return Err(Error::Range(format!("exponent s = {s} must lie in (0, 2]")));
    }
    let disk = ifs.disk();
    let geoms = ifs.level_geometries(n, DEFAULT_LEVEL_CAP)?;
    let mut arcs: Vec<(f64, f64)> = Vec::with_capacity(geoms.len());
    let mut excluded = 0;
    let mut full = false;
    for g in &geoms {
        let c = g.apply(disk.center);
        let rho = g.ratio * disk.radius;
        let dist = c.dist(a);
        if dist + rho <= exclusion_radius {
            excluded += 1;
            continue;
        }
        if dist <= rho {
            full = true;
            arcs.push((0.0, TAU));
            continue;
        }
        let half = (rho / dist).min(1.0).asin();
        let mid = (c - a).angle();
        arcs.push((mid - half, mid + half));
    }
    let delta = arcs.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    let components = if full {
        vec![(TAU, arcs.len())]
    } else {
        merge_arcs(&arcs)
    };
    let sum = components
        .iter()
        .map(|&(len, k)| len.powf(s).min(k as f64 * delta.powf(s)))
        .sum();
    Ok(VisibilityReport {
        level: n,
        sum,
        components: components.len(),
        delta,
        excluded,
        center_inside: disk.center.dist(a) <= disk.radius,
    })
}

/// Merges arcs `[lo, hi]` (radians, `hi − lo < 2π`) on the circle into
/// components `(length, arc count)`.
fn merge_arcs(arcs: &[(f64, f64)]) -> Vec<(f64, usize)> {
    if arcs.is_empty() {
        return Vec::new();
    }
    // unwrap onto [0, 2π) with wrapping pieces split at 0
    let mut pieces: Vec<(f64, f64, usize)> = Vec::with_capacity(arcs.len() + 8);
    for (id, &(lo, hi)) in arcs.iter().enumerate() {
        let start = normalize_angle(lo);
        let end = start + (hi - lo);
        if end > TAU {
            pieces.push((start, TAU, id));
            pieces.push((0.0, end - TAU, id));
        } else {
            pieces.push((start, end, id));
        }
    }
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let mut comps: Vec<(f64, f64, Vec<usize>)> = Vec::new();
    for (lo, hi, id) in pieces {
        match comps.last_mut() {
            Some(last) if lo <= last.1 => {
                last.1 = last.1.max(hi);
                last.2.push(id);
            }
            _ => comps.push((lo, hi, vec![id])),
        }
    }
    if comps.len() > 1 && comps[0].0 <= 0.0 && comps[comps.len() - 1].1 >= TAU {
        let first = comps.remove(0);
        let last = comps.last_mut().unwrap();
        last.1 += first.1;
        last.2.extend(first.2);
    }
    comps
        .into_iter()
        .map(|(lo, hi, mut ids)| {
            ids.sort_unstable();
            ids.dedup();
            ((hi - lo).min(TAU), ids.len())
        })
        .collect()
}

/// Half-angle subtended by a disk of radius `rho` at distance `dist`.
pub fn subtended_half_angle(rho: f64, dist: f64) -> f64 {
    if dist <= rho {
        PI
    } else {
        (rho / dist).asin()
    }
}
