//! Relatively close word families: the three-condition checker, the pair
//! search, the doubling step and the homogeneous power family.
//!
//! Two words `u`, `v` are `(ε, θ)`-relatively close when
//! (i) `|log(r_u/r_v)| < ε`, (ii) `O_u = O_v` and `|θ_u − θ_v| < ε`, and
//! (iii) `|Π_θ(uω) − Π_θ(vω)| < ε·D·min(r_u, r_v)` for some tail `ω`.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{circular_distance, normalize_angle, Point};
use crate::ifs::{CylinderGeometry, Ifs, Orientation};
use crate::rotation::small_rotation_word;
use crate::word::{TailWord, Word};

/// Tolerance standing in for `ε = 0` in the power-family certificate.
pub const POWER_EPS: f64 = 1e-6;

/// Factor applied to the largest admissible `ε₂` in the doubling step.
pub const EPS2_FACTOR: f64 = 0.9;

/// Earlier bucket members each new cylinder is paired against.
const BUCKET_FANOUT: usize = 64;

/// Bucket collisions kept for the suffix-appending fallback.
const FALLBACK_PAIRS: usize = 16;

/// Outcome of checking one pair.
///
/// Offsets for condition (iii) are measured after removing the common
/// prefix `p` of the two words, i.e. in units of `r_p`; `scale_log` is
/// `log r_p`. Each slack is positive exactly when its condition holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub pass: bool,
    pub slack_i: f64,
    pub slack_ii: f64,
    pub slack_iii: f64,
    pub log_ratio: f64,
    pub angle_gap: f64,
    pub same_orientation: bool,
    pub offset: f64,
    pub threshold: f64,
    pub error: f64,
    pub scale_log: f64,
}

impl PairReport {
    /// Smallest `ε` this pair would pass with (same `θ`, `ω`).
    pub fn eps_needed(&self, diameter: f64, min_rel_ratio: f64) -> f64 {
        let offset_eps = (self.offset + self.error) / (diameter * min_rel_ratio);
        self.log_ratio.abs().max(self.angle_gap).max(offset_eps)
    }
}

/// Checks conditions (i)–(iii) for `u`, `v` at `(ε, θ)` with tail `ω`.
///
/// Fails with `Indeterminate` when (i) and (ii) hold but the numeric error
/// of (iii) reaches 1% of its threshold.
pub fn check_relclose(ifs: &Ifs, u: &Word, v: &Word, eps: f64, theta: f64, omega: &TailWord) -> Result<PairReport> {
    if !(eps > 0.0) {
        return Err(Error::Range(format!("eps must be positive, got {eps}")));
    }
    let gu = ifs.compose(u)?;
    let gv = ifs.compose(v)?;
    let log_ratio = gu.log_ratio - gv.log_ratio;
    let angle_gap = circular_distance(gu.angle, gv.angle);
    let same_orientation = gu.orientation == gv.orientation;

    let k = u.common_prefix_len(v);
    let (u_rest, v_rest) = (u.slice(k..u.len()), v.slice(k..v.len()));
    let gp = ifs.geometry(&u.slice(0..k));
    let e = gp.linear_t(Point::unit(theta));
    let (anchor, residual) = ifs.anchor_point(omega)?;
    let (gu_rest, gv_rest) = (ifs.geometry(&u_rest), ifs.geometry(&v_rest));
    let (a, b) = (gu_rest.apply(anchor), gv_rest.apply(anchor));
    let d = ifs.diameter_bound();
    let offset = (a - b).dot(e).abs();
    let threshold = eps * d * gu_rest.log_ratio.min(gv_rest.log_ratio).exp();
    let steps = (u_rest.len() + v_rest.len() + 4) as f64;
    let error = d * residual * (gu_rest.ratio + gv_rest.ratio)
        + 4.0 * f64::EPSILON * steps * (a.norm() + b.norm() + anchor.norm() + d);

    let slack_i = eps - log_ratio.abs();
    let slack_ii = if same_orientation { eps - angle_gap } else { f64::NEG_INFINITY };
    let mut report = PairReport {
        pass: false,
        slack_i,
        slack_ii,
        slack_iii: threshold - offset,
        log_ratio,
        angle_gap,
        same_orientation,
        offset,
        threshold,
        error,
        scale_log: gp.log_ratio,
    };
    if !(slack_i > 0.0 && slack_ii > 0.0) {
        return Ok(report);
    }
    if !(error < 0.01 * threshold) {
        return Err(Error::Indeterminate(format!(
            "error {error:.3e} against threshold {threshold:.3e} for {u} / {v}"
        )));
    }
    if offset + error < threshold {
        report.pass = true;
    } else if offset - error < threshold {
        return Err(Error::Indeterminate(format!(
            "offset {offset:.3e} within error {error:.3e} of threshold {threshold:.3e}"
        )));
    }
    Ok(report)
}

/// The tail attached to one pair of certificate words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOmega {
    pub pair: [usize; 2],
    pub prefix: Word,
    pub period: Word,
}

impl PairOmega {
    fn new(i: usize, j: usize, omega: &TailWord) -> Self {
        PairOmega {
            pair: [i.min(j), i.max(j)],
            prefix: omega.prefix().clone(),
            period: omega.period().clone(),
        }
    }

    pub fn omega(&self) -> Result<TailWord> {
        TailWord::new(self.prefix.clone(), self.period.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSlack {
    pub pair: [usize; 2],
    pub ratio: f64,
    pub angle: f64,
    pub offset: f64,
}

/// How a certificate was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "construction", rename_all = "snake_case")]
pub enum Provenance {
    Single,
    /// A bucket collision used as found (`copies == 0`), or extended by
    /// `copies` repetitions of `a_word` with tail `ā`.
    Pair {
        band_depth: usize,
        a_word: Option<Word>,
        copies: usize,
    },
    Doubled {
        eps1: f64,
        eps2: f64,
        eps2_bound_scale: f64,
        eps2_bound_exp: f64,
        /// `min_i r_{u_i}` over the input family.
        r_umin: f64,
        parent_size: usize,
        pair: Box<Provenance>,
    },
    Power {
        u: Word,
        v: Word,
        n: usize,
    },
}

/// A family of mutually `(ε, θ)`-relatively close words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelCloseCertificate {
    pub words: Vec<Word>,
    pub eps: f64,
    pub theta: f64,
    pub omegas: Vec<PairOmega>,
    pub slacks: Vec<PairSlack>,
    pub provenance: Provenance,
}

impl RelCloseCertificate {
    /// A one-word family, valid for every `ε` and `θ`.
    pub fn single(word: Word, eps: f64, theta: f64) -> Self {
        RelCloseCertificate {
            words: vec![word],
            eps,
            theta,
            omegas: Vec::new(),
            slacks: Vec::new(),
            provenance: Provenance::Single,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn omega(&self, i: usize, j: usize) -> Option<TailWord> {
        let key = [i.min(j), i.max(j)];
        self.omegas.iter().find(|o| o.pair == key).and_then(|o| o.omega().ok())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("certificate: {e}")))
    }

    /// Assembles a certificate from words and per-pair tails, checking every
    /// pair at `(eps, theta)`. Nothing unverified is returned.
    fn verified(
        ifs: &Ifs,
        words: Vec<Word>,
        eps: f64,
        theta: f64,
        omegas: Vec<PairOmega>,
        provenance: Provenance,
    ) -> Result<Self> {
        let mut slacks = Vec::with_capacity(omegas.len());
        for o in &omegas {
            let [i, j] = o.pair;
            let report = check_relclose(ifs, &words[i], &words[j], eps, theta, &o.omega()?)
                .map_err(|e| Error::VerificationFailed(format!("pair {i},{j}: {e}")))?;
            if !report.pass {
                return Err(Error::VerificationFailed(format!(
                    "pair {} / {} fails at eps {eps}",
                    words[i], words[j]
                )));
            }
            slacks.push(PairSlack {
                pair: o.pair,
                ratio: report.slack_i,
                angle: report.slack_ii,
                offset: report.slack_iii,
            });
        }
        Ok(RelCloseCertificate {
            words,
            eps,
            theta,
            omegas,
            slacks,
            provenance,
        })
    }
}

/// Re-runs the checker on every pair and the prefix-freeness condition.
pub fn verify_certificate(ifs: &Ifs, cert: &RelCloseCertificate) -> Result<Vec<PairReport>> {
    let n = cert.words.len();
    let mut reports = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let (u, v) = (&cert.words[i], &cert.words[j]);
            if u.is_prefix_of(v) || v.is_prefix_of(u) {
                return Err(Error::VerificationFailed(format!("{u} and {v} are prefix-related")));
            }
            let omega = cert
                .omega(i, j)
                .ok_or_else(|| Error::VerificationFailed(format!("no tail for pair {i},{j}")))?;
            let report = check_relclose(ifs, u, v, cert.eps, cert.theta, &omega)?;
            if !report.pass {
                return Err(Error::VerificationFailed(format!("pair {u} / {v} fails")));
            }
            reports.push(report);
        }
    }
    Ok(reports)
}

/// Direction perpendicular to the segment `pq`; `0` when it degenerates.
fn perpendicular(p: Point, q: Point, scale: f64) -> f64 {
    let seg = q - p;
    if seg.norm() <= 1e-12 * scale {
        0.0
    } else {
        normalize_angle(seg.angle() + PI / 2.0)
    }
}

struct Entry {
    word: Word,
    geom: CylinderGeometry,
}

/// Searches for distinct `u`, `v` and `θ` satisfying (i)–(iii) at `ε`,
/// `O_u = O_v = +1`, and (iv) `|φ(θ) − θ_u|, |φ(θ) − θ_v| < ε`.
///
/// Cylinders from the mass bands `C_r`, `r = r_min^j`, `j = 1..=budget`,
/// are bucketed by orientation, angle and log-ratio at width `ε/2`.
/// Each bucket collision is first tried as is, with `θ` perpendicular to
/// `Π(u1̄)Π(v1̄)` (or that plus `π`). If no collision meets (iv) directly,
/// the earliest ones are extended to `(u aʲ, v aʲ)` with `a = a(ε/2)` and
/// tail `ā`. Every returned pair has passed [`check_relclose`].
pub fn find_pair(ifs: &Ifs, eps: f64, phi: &dyn Fn(f64) -> f64, budget: usize) -> Result<RelCloseCertificate> {
    if !(eps > 0.0) {
        return Err(Error::Range(format!("eps must be positive, got {eps}")));
    }
    let width = eps / 2.0;
    let reflector = ifs.reflector();
    let center = ifs.disk().center;
    let d = ifs.diameter_bound();
    let tail_one = TailWord::periodic(&Word::single(0))?;
    let mut entries: Vec<Entry> = Vec::new();
    let mut buckets: HashMap<(bool, i64, i64), Vec<usize>> = HashMap::new();
    let mut collisions: Vec<(Word, Word, usize)> = Vec::new();
    let mut blocked_by_orientation = false;

    for depth in 1..=budget {
        let r = ifs.r_min().powi(depth as i32);
        if r <= 0.0 {
            break;
        }
        for w in ifs.mass_band(r)? {
            let geom = ifs.geometry(&w);
            let reversing = geom.orientation == Orientation::Reversing;
            let key = (
                reversing,
                (geom.angle / width).floor() as i64,
                (geom.log_ratio / width).floor() as i64,
            );
            let members = buckets.entry(key).or_default();
            for &idx in members.iter().take(BUCKET_FANOUT) {
                let other = &entries[idx];
                if other.word.is_prefix_of(&w) || w.is_prefix_of(&other.word) {
                    continue;
                }
                let (mut u, mut v) = (other.word.clone(), w.clone());
                let (mut gu, mut gv) = (other.geom, geom);
                if reversing {
                    let Some(i0) = reflector else {
                        blocked_by_orientation = true;
                        continue;
                    };
                    u.push(i0);
                    v.push(i0);
                    gu = gu.then(ifs.symbol_geometry(i0));
                    gv = gv.then(ifs.symbol_geometry(i0));
                }
                if collisions.len() < FALLBACK_PAIRS {
                    collisions.push((u.clone(), v.clone(), depth));
                }
                let theta0 = perpendicular(gu.apply(center), gv.apply(center), d * gu.ratio.min(gv.ratio));
                for theta in [theta0, normalize_angle(theta0 + PI)] {
                    let target = phi(theta);
                    if circular_distance(target, gu.angle) >= eps || circular_distance(target, gv.angle) >= eps {
                        continue;
                    }
                    match check_relclose(ifs, &u, &v, eps, theta, &tail_one) {
                        Ok(report) if report.pass => {
                            let omegas = vec![PairOmega::new(0, 1, &tail_one)];
                            let prov = Provenance::Pair {
                                band_depth: depth,
                                a_word: None,
                                copies: 0,
                            };
                            return RelCloseCertificate::verified(ifs, vec![u, v], eps, theta, omegas, prov);
                        }
                        Ok(_) | Err(Error::Indeterminate(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            members.push(entries.len());
            entries.push(Entry { word: w, geom });
        }
    }

    if collisions.is_empty() {
        return Err(if blocked_by_orientation {
            Error::NoReflectorAvailable
        } else {
            Error::BudgetExhausted(format!("no bucket collision within mass-band depth {budget}"))
        });
    }
    let a = small_rotation_word(ifs, eps / 2.0, 100_000)?;
    let ga = ifs.compose(&a)?;
    let tail_a = TailWord::periodic(&a)?;
    let (anchor_a, _) = ifs.anchor_point(&tail_a)?;
    let max_copies = (2.0 * PI / circular_distance(ga.angle, 0.0)).ceil() as usize + 1;
    for (u, v, depth) in collisions {
        let (gu, gv) = (ifs.geometry(&u), ifs.geometry(&v));
        let theta0 = perpendicular(gu.apply(anchor_a), gv.apply(anchor_a), d * gu.ratio.min(gv.ratio));
        for theta in [theta0, normalize_angle(theta0 + PI)] {
            let target = phi(theta);
            let hit = (0..=max_copies).find(|&j| {
                let turn = j as f64 * ga.angle;
                circular_distance(target, gu.angle + turn) < eps && circular_distance(target, gv.angle + turn) < eps
            });
            let Some(copies) = hit else { continue };
            let tail = a.repeat(copies);
            let (uu, vv) = (u.concat(&tail), v.concat(&tail));
            match check_relclose(ifs, &uu, &vv, eps, theta, &tail_a) {
                Ok(report) if report.pass => {
                    let omegas = vec![PairOmega::new(0, 1, &tail_a)];
                    let prov = Provenance::Pair {
                        band_depth: depth,
                        a_word: Some(a.clone()),
                        copies,
                    };
                    return RelCloseCertificate::verified(ifs, vec![uu, vv], eps, theta, omegas, prov);
                }
                Ok(_) | Err(Error::Indeterminate(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Err(Error::BudgetExhausted(format!(
        "no collision within mass-band depth {budget} could be certified at eps {eps}"
    )))
}

/// The two admissible upper bounds for `ε₂` in the doubling step:
/// `min(e^{−ε/6}(ε/3 − ε₁)·r_min_u, ε/6)` and the root `x` of
/// `e^x − 1 + x = (ε/3)·r_min_u`.
pub fn eps2_bounds(eps: f64, eps1: f64, r_umin: f64) -> (f64, f64) {
    let scale = ((-eps / 6.0).exp() * (eps / 3.0 - eps1) * r_umin).min(eps / 6.0);
    let rhs = eps / 3.0 * r_umin;
    let f = |x: f64| x.exp_m1() + x - rhs;
    let (mut lo, mut hi) = (0.0, rhs);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (scale, lo)
}

/// Doubles a family of `N` words to `2N` words `s·u_i`, `t·u_i` at `ε`.
///
/// `ε₁` is the smallest tolerance the input family actually meets; it must
/// lie below `ε/6`. The pair `(s, t)` comes from [`find_pair`] at `ε₂` with
/// `φ(θ) = θ − θ₁`. Within a block the tails of the input are reused;
/// across blocks `ω(u_i, u_j)` is reused for `i ≠ j` and the pair's tail
/// serves `i = j`.
pub fn double_family(ifs: &Ifs, cert: &RelCloseCertificate, eps: f64, budget: usize) -> Result<RelCloseCertificate> {
    if cert.is_empty() {
        return Err(Error::Empty("certificate words"));
    }
    let n = cert.len();
    let d = ifs.diameter_bound();
    let mut eps1: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let omega = cert
                .omega(i, j)
                .ok_or_else(|| Error::PreconditionViolated(format!("no tail for pair {i},{j}")))?;
            let report = check_relclose(ifs, &cert.words[i], &cert.words[j], cert.eps, cert.theta, &omega)?;
            if !report.pass {
                return Err(Error::PreconditionViolated(format!("input pair {i},{j} fails its own check")));
            }
            let k = cert.words[i].common_prefix_len(&cert.words[j]);
            let rel = |w: &Word| ifs.geometry(&w.slice(k..w.len())).log_ratio;
            let min_rel = rel(&cert.words[i]).min(rel(&cert.words[j])).exp();
            eps1 = eps1.max(report.eps_needed(d, min_rel));
        }
    }
    if !(eps1 < eps / 6.0) {
        return Err(Error::PreconditionViolated(format!(
            "input family needs eps1 = {eps1:.3e}, not below eps/6 = {:.3e}",
            eps / 6.0
        )));
    }
    let r_umin = cert
        .words
        .iter()
        .map(|w| ifs.geometry(w).log_ratio)
        .fold(f64::INFINITY, f64::min)
        .exp();
    let (bound_scale, bound_exp) = eps2_bounds(eps, eps1, r_umin);
    let eps2 = EPS2_FACTOR * bound_scale.min(bound_exp);
    let theta1 = cert.theta;
    let pair = find_pair(ifs, eps2, &|theta| theta - theta1, budget)?;
    let (s, t) = (&pair.words[0], &pair.words[1]);
    let tilde = pair
        .omega(0, 1)
        .ok_or_else(|| Error::VerificationFailed("pair certificate lacks its tail".into()))?;

    let words: Vec<Word> = [s, t]
        .iter()
        .flat_map(|prefix| cert.words.iter().map(move |u| prefix.concat(u)))
        .collect();
    let mut omegas = Vec::with_capacity(2 * n * (2 * n - 1) / 2);
    for a in 0..2 * n {
        for b in a + 1..2 * n {
            let (ia, ib) = (a % n, b % n);
            let omega = if ia != ib {
                cert.omega(ia, ib).expect("checked above")
            } else {
                tilde.clone()
            };
            omegas.push(PairOmega::new(a, b, &omega));
        }
    }
    let prov = Provenance::Doubled {
        eps1,
        eps2,
        eps2_bound_scale: bound_scale,
        eps2_bound_exp: bound_exp,
        r_umin,
        parent_size: n,
        pair: Box::new(pair.provenance.clone()),
    };
    RelCloseCertificate::verified(ifs, words, eps, pair.theta, omegas, prov)
}

/// A verified family of at least `size` words at `ε`, built by repeated
/// doubling from a pair found at a geometrically smaller tolerance.
pub fn grow_family(ifs: &Ifs, size: usize, eps: f64, budget: usize) -> Result<RelCloseCertificate> {
    if size <= 2 {
        return find_pair(ifs, eps, &|_| 0.0, budget);
    }
    let half = grow_family(ifs, size.div_ceil(2), eps / 7.0, budget)?;
    double_family(ifs, &half, eps, budget)
}

/// The `2ⁿ` words formed by `n` blocks from `{u, v}`, with `ω = ū` for
/// every pair and `θ` perpendicular to `Π(uū)Π(vū)`.
///
/// Words are listed in binary counting order with `u` as the zero block.
/// Requires `u ≠ v`, `|u| = |v|`, and both maps orientation-preserving
/// without rotation. Every pair is verified at [`POWER_EPS`].
pub fn power_family(ifs: &Ifs, u: &Word, v: &Word, n: usize) -> Result<RelCloseCertificate> {
    let gu = ifs.compose(u)?;
    let gv = ifs.compose(v)?;
    let flat = |g: &CylinderGeometry| {
        g.orientation == Orientation::Preserving && circular_distance(g.angle, 0.0) < crate::geometry::ANGLE_TOL
    };
    if u == v || u.len() != v.len() || !flat(&gu) || !flat(&gv) || n == 0 || n >= 20 {
        return Err(Error::PreconditionViolated(format!(
            "power family needs distinct equal-length non-rotating words and 1 <= n < 20 (got {u}, {v}, n = {n})"
        )));
    }
    let omega = TailWord::periodic(u)?;
    let (anchor, _) = ifs.anchor_point(&omega)?;
    let d = ifs.diameter_bound();
    let theta = perpendicular(gu.apply(anchor), gv.apply(anchor), d * gu.ratio);
    let count = 1usize << n;
    let words: Vec<Word> = (0..count)
        .map(|code| {
            (0..n).rev().fold(Word::empty(), |acc, bit| {
                acc.concat(if code >> bit & 1 == 0 { u } else { v })
            })
        })
        .collect();
    let omegas = (0..count)
        .flat_map(|i| (i + 1..count).map(move |j| (i, j)))
        .map(|(i, j)| PairOmega::new(i, j, &omega))
        .collect();
    let prov = Provenance::Power {
        u: u.clone(),
        v: v.clone(),
        n,
    };
    RelCloseCertificate::verified(ifs, words, POWER_EPS, theta, omegas, prov)
}
