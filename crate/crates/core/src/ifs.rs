//! Planar similitudes, their compositions along words, the coding map and
//! the natural self-similar measure.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Point};
use crate::word::{TailWord, Word};

/// Relative tolerance for mass comparisons at band boundaries.
const MASS_TOL: f64 = 1e-12;

/// Default cap on the number of cylinders a single level may hold.
pub const DEFAULT_LEVEL_CAP: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Preserving,
    Reversing,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Preserving => 1.0,
            Orientation::Reversing => -1.0,
        }
    }

    pub fn compose(self, other: Orientation) -> Orientation {
        if self == other {
            Orientation::Preserving
        } else {
            Orientation::Reversing
        }
    }
}

/// One contracting map `z ↦ r·R_θ·diag(1, O)·z + t`.
///
/// With `O = -1` the map reflects about the line at angle `θ/2` before
/// scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similitude {
    ratio: f64,
    angle: f64,
    orientation: Orientation,
    translation: Point,
}

impl Similitude {
    pub fn new(ratio: f64, angle: f64, orientation: Orientation, translation: Point) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidRatio(ratio));
        }
        if !angle.is_finite() || !translation.x.is_finite() || !translation.y.is_finite() {
            return Err(Error::Config("non-finite map parameter".into()));
        }
        Ok(Similitude {
            ratio,
            angle: normalize_angle(angle),
            orientation,
            translation,
        })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn translation(&self) -> Point {
        self.translation
    }

    pub fn geometry(&self) -> CylinderGeometry {
        CylinderGeometry {
            ratio: self.ratio,
            log_ratio: self.ratio.ln(),
            angle: self.angle,
            orientation: self.orientation,
            translation: self.translation,
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        self.geometry().apply(p)
    }

    /// The unique point with `F(z) = z`.
    pub fn fixed_point(&self) -> Point {
        self.geometry().fixed_point()
    }
}

/// The composed map `F_u` of a word, kept in parameter form.
///
/// `log_ratio` is carried alongside `ratio` so that very long words keep
/// exact mass bookkeeping after `ratio` itself underflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderGeometry {
    pub ratio: f64,
    pub log_ratio: f64,
    pub angle: f64,
    pub orientation: Orientation,
    pub translation: Point,
}

impl CylinderGeometry {
    pub const IDENTITY: CylinderGeometry = CylinderGeometry {
        ratio: 1.0,
        log_ratio: 0.0,
        angle: 0.0,
        orientation: Orientation::Preserving,
        translation: Point::ORIGIN,
    };

    /// Linear part without the ratio: `R_θ·diag(1, O)`.
    pub fn linear(&self, p: Point) -> Point {
        Point::new(p.x, self.orientation.sign() * p.y).rotate(self.angle)
    }

    /// Transpose of the linear part; `linear_t(e)·p == e·linear(p)`.
    pub fn linear_t(&self, p: Point) -> Point {
        let q = p.rotate(-self.angle);
        Point::new(q.x, self.orientation.sign() * q.y)
    }

    pub fn apply(&self, p: Point) -> Point {
        self.ratio * self.linear(p) + self.translation
    }

    /// `self ∘ other`: the geometry of the word `u·v` from those of `u`, `v`.
    pub fn then(&self, other: &CylinderGeometry) -> CylinderGeometry {
        CylinderGeometry {
            ratio: self.ratio * other.ratio,
            log_ratio: self.log_ratio + other.log_ratio,
            angle: normalize_angle(self.angle + self.orientation.sign() * other.angle),
            orientation: self.orientation.compose(other.orientation),
            translation: self.apply(other.translation),
        }
    }

    /// `r·R_θ·diag(1, O)` as a row-major 2×2 matrix.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.angle.sin_cos();
        let o = self.orientation.sign();
        let r = self.ratio;
        [[r * c, -o * r * s], [r * s, o * r * c]]
    }

    pub fn fixed_point(&self) -> Point {
        // (I - A) z = t
        let a = self.matrix();
        let m = [[1.0 - a[0][0], -a[0][1]], [-a[1][0], 1.0 - a[1][1]]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let t = self.translation;
        Point::new(
            (m[1][1] * t.x - m[0][1] * t.y) / det,
            (-m[1][0] * t.x + m[0][0] * t.y) / det,
        )
    }

    /// `power`-fold self-composition.
    pub fn pow(&self, power: usize) -> CylinderGeometry {
        let mut acc = CylinderGeometry::IDENTITY;
        let mut base = *self;
        let mut k = power;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.then(&base);
            }
            base = base.then(&base);
            k >>= 1;
        }
        acc
    }
}

/// Disk `B(center, radius)` mapped into itself by every map of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

/// A validated iterated function system of planar similitudes.
#[derive(Debug, Clone)]
pub struct Ifs {
    maps: Vec<Similitude>,
    geometries: Vec<CylinderGeometry>,
    gamma: f64,
    r_min: f64,
    disk: Disk,
}

impl Ifs {
    pub fn new(maps: Vec<Similitude>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::Empty("map list"));
        }
        if maps.len() > 256 {
            return Err(Error::Config("at most 256 maps are supported".into()));
        }
        let ratios: Vec<f64> = maps.iter().map(|m| m.ratio).collect();
        let gamma = similarity_dimension(&ratios)?;
        let r_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let disk = enclosing_disk(&maps);
        let geometries = maps.iter().map(Similitude::geometry).collect();
        Ok(Ifs {
            maps,
            geometries,
            gamma,
            r_min,
            disk,
        })
    }

    pub fn maps(&self) -> &[Similitude] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Similarity dimension `γ` with `Σ r_i^γ = 1`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn disk(&self) -> Disk {
        self.disk
    }

    /// `D = 2·R0`, an upper bound for the attractor's diameter.
    pub fn diameter_bound(&self) -> f64 {
        2.0 * self.disk.radius
    }

    /// Common ratio when all maps share one.
    pub fn homogeneous_ratio(&self) -> Option<f64> {
        let r = self.maps[0].ratio;
        self.maps
            .iter()
            .all(|m| (m.ratio - r).abs() <= 1e-15 * r)
            .then_some(r)
    }

    /// Index of the first orientation-reversing map.
    pub fn reflector(&self) -> Option<u8> {
        self.maps
            .iter()
            .position(|m| m.orientation == Orientation::Reversing)
            .map(|i| i as u8)
    }

    pub fn symbol_geometry(&self, index: u8) -> &CylinderGeometry {
        &self.geometries[index as usize]
    }

    /// Parameters of `F_u`. Fails on symbols outside the alphabet.
    pub fn compose(&self, u: &Word) -> Result<CylinderGeometry> {
        u.check_alphabet(self.len())?;
        Ok(self.geometry(u))
    }

    /// Like [`Ifs::compose`] for words already known to be valid.
    pub(crate) fn geometry(&self, u: &Word) -> CylinderGeometry {
        u.indices()
            .iter()
            .fold(CylinderGeometry::IDENTITY, |g, &s| g.then(&self.geometries[s as usize]))
    }

    /// Approximation of `Π(anchor)` and the factor by which its truncation
    /// error scales `D`: the point lies within `D·residual` of `Π(anchor)`.
    pub fn anchor_point(&self, anchor: &TailWord) -> Result<(Point, f64)> {
        anchor.check_alphabet(self.len())?;
        let prefix = self.geometry(anchor.prefix());
        let period = self.geometry(anchor.period());
        let target = (1e-12 / self.diameter_bound().max(1.0)).ln();
        let mut g = prefix;
        while g.log_ratio >= target {
            g = g.then(&period);
        }
        Ok((g.apply(self.disk.center), g.ratio))
    }

    /// `Π(u·anchor)` with a bound on its distance to the true point.
    ///
    /// The anchor's period is iterated until the remaining cylinder is below
    /// `1e-12` in absolute size and relative to `D`; the returned radius is
    /// `D·r_u·residual`.
    pub fn pi_point(&self, u: &Word, anchor: &TailWord) -> Result<(Point, f64)> {
        let gu = self.compose(u)?;
        let (p, residual) = self.anchor_point(anchor)?;
        Ok((gu.apply(p), self.diameter_bound() * gu.ratio * residual))
    }

    /// `μ([u]) = r_u^γ`.
    pub fn mu_mass(&self, u: &Word) -> Result<f64> {
        let g = self.compose(u)?;
        Ok((self.gamma * g.log_ratio).exp())
    }

    /// The family `C_r`: words `s` with `r·r_min < r_s ≤ r`, in depth-first
    /// (lexicographic preorder) order. Nested words may both appear.
    pub fn mass_band(&self, r: f64) -> Result<Vec<Word>> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Range(format!("mass band level {r} must lie in (0, 1)")));
        }
        let upper = r.ln() + MASS_TOL;
        let lower = r.ln() + self.r_min.ln() + MASS_TOL;
        let mut out = Vec::new();
        let mut stack: Vec<(Word, f64)> = vec![(Word::empty(), 0.0)];
        while let Some((w, log_r)) = stack.pop() {
            if log_r <= lower {
                continue;
            }
            if log_r <= upper {
                out.push(w.clone());
            }
            for i in (0..self.len()).rev() {
                let mut child = w.clone();
                child.push(i as u8);
                stack.push((child, log_r + self.geometries[i].log_ratio));
            }
        }
        Ok(out)
    }

    /// Number of cylinders at level `n`, as a float to survive overflow.
    pub fn level_size(&self, n: usize) -> f64 {
        (self.len() as f64).powi(n as i32)
    }

    pub fn check_level(&self, n: usize, cap: usize) -> Result<()> {
        let count = self.level_size(n);
        if count > cap as f64 {
            return Err(Error::LevelTooLarge { level: n, count, cap });
        }
        Ok(())
    }

    /// Geometries of all words of length `n`, in lexicographic order.
    ///
    /// Enumeration runs in parallel over depth-one subtrees; the output
    /// order does not depend on the number of workers.
    pub fn level_geometries(&self, n: usize, cap: usize) -> Result<Vec<CylinderGeometry>> {
        self.check_level(n, cap)?;
        if n == 0 {
            return Ok(vec![CylinderGeometry::IDENTITY]);
        }
        let chunks: Vec<Vec<CylinderGeometry>> = self
            .geometries
            .par_iter()
            .map(|g| {
                let mut level = vec![*g];
                for _ in 1..n {
                    let mut next = Vec::with_capacity(level.len() * self.len());
                    for parent in &level {
                        next.extend(self.geometries.iter().map(|c| parent.then(c)));
                    }
                    level = next;
                }
                level
            })
            .collect();
        Ok(chunks.concat())
    }

    /// All words of length `n` in lexicographic order.
    pub fn level_words(&self, n: usize, cap: usize) -> Result<Vec<Word>> {
        self.check_level(n, cap)?;
        let mut words = vec![Word::empty()];
        for _ in 0..n {
            let mut next = Vec::with_capacity(words.len() * self.len());
            for w in &words {
                for i in 0..self.len() {
                    let mut c = w.clone();
                    c.push(i as u8);
                    next.push(c);
                }
            }
            words = next;
        }
        Ok(words)
    }

    /// The conjugate system `R_β ∘ F_i ∘ R_{-β}`, whose attractor is the
    /// original one rotated by `β` about the origin.
    pub fn rotated(&self, beta: f64) -> Ifs {
        let maps = self
            .maps
            .iter()
            .map(|m| {
                let angle = match m.orientation {
                    Orientation::Preserving => m.angle,
                    Orientation::Reversing => m.angle + 2.0 * beta,
                };
                Similitude::new(m.ratio, angle, m.orientation, m.translation.rotate(beta))
                    .expect("conjugation keeps the ratio")
            })
            .collect();
        Ifs::new(maps).expect("conjugation keeps validity")
    }
}

/// Solve `Σ r_i^γ = 1` by bisection.
pub fn similarity_dimension(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(Error::Empty("ratio list"));
    }
    if let Some(&bad) = ratios.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::InvalidRatio(bad));
    }
    let sum = |g: f64| ratios.iter().map(|r| r.powf(g)).sum::<f64>();
    let mut hi = 1.0;
    while sum(hi) >= 1.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sum(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Disk centred at the fixed point of map 1 with
/// `R0 = max_i |F_i(c) - c| / (1 - r_i)`, which every map sends into itself.
pub fn enclosing_disk(maps: &[Similitude]) -> Disk {
    let center = maps[0].fixed_point();
    let radius = maps
        .iter()
        .map(|m| m.apply(center).dist(center) / (1.0 - m.ratio))
        .fold(0.0, f64::max);
    Disk { center, radius }
}

/// `true` when every `F_i(disk) ⊆ disk` within `1e-12`.
pub fn disk_is_invariant(ifs: &Ifs, disk: &Disk) -> bool {
    ifs.maps()
        .iter()
        .all(|m| m.apply(disk.center).dist(disk.center) + m.ratio * disk.radius <= disk.radius + 1e-12)
}

/// Angle expressed as a multiple of π, mapped into `[0, 2π)`.
pub fn angle_from_turns_of_pi(theta_over_pi: f64) -> f64 {
    normalize_angle(theta_over_pi.rem_euclid(2.0) * std::f64::consts::PI)
}
