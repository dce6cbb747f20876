//! Circle-rotation combinatorics: orbit nets, rational approximation and
//! angle steering by repeated short words.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::geometry::{circular_distance, normalize_angle};
use crate::ifs::{Ifs, Orientation};
use crate::word::Word;

/// Orbit length bound used by [`steering_suffix`].
pub const DEFAULT_NET_BOUND: usize = 1_000_000;

/// Smallest orbit `{k·θ₁ : k = 1..p}` whose largest circular gap is below `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetResult {
    pub p: usize,
    pub max_gap: f64,
    pub eps: f64,
}

impl NetResult {
    /// `p·ε^{d+1}`, the empirical counterpart of the net-size constant.
    pub fn c1_hat(&self, d: f64) -> f64 {
        self.p as f64 * self.eps.powf(d + 1.0)
    }
}

/// Points on the circle (as turns in `[0, 1)`) with a multiset of gaps.
struct CircleGaps {
    points: BTreeSet<OrderedFloat<f64>>,
    gaps: BTreeMap<OrderedFloat<f64>, usize>,
}

impl CircleGaps {
    fn new() -> Self {
        CircleGaps {
            points: BTreeSet::new(),
            gaps: BTreeMap::new(),
        }
    }

    fn add_gap(&mut self, g: f64) {
        *self.gaps.entry(OrderedFloat(g)).or_insert(0) += 1;
    }

    fn remove_gap(&mut self, g: f64) {
        let key = OrderedFloat(g);
        if let Some(c) = self.gaps.get_mut(&key) {
            *c -= 1;
            if *c == 0 {
                self.gaps.remove(&key);
            }
        }
    }

    fn insert(&mut self, x: f64) {
        let key = OrderedFloat(x);
        if self.points.contains(&key) {
            return;
        }
        if self.points.is_empty() {
            self.points.insert(key);
            self.add_gap(1.0);
            return;
        }
        let first = *self.points.iter().next().unwrap();
        let last = *self.points.iter().next_back().unwrap();
        let pred = self.points.range(..key).next_back().copied().unwrap_or(last);
        let succ = self.points.range(key..).next().copied().unwrap_or(first);
        let span = |a: f64, b: f64| {
            let d = (b - a).rem_euclid(1.0);
            if d == 0.0 {
                1.0
            } else {
                d
            }
        };
        self.remove_gap(span(pred.0, succ.0));
        self.add_gap(span(pred.0, x));
        self.add_gap(span(x, succ.0));
        self.points.insert(key);
    }

    fn max_gap(&self) -> f64 {
        self.gaps.keys().next_back().map(|g| g.0).unwrap_or(1.0)
    }
}

/// Smallest `p ≤ p_max` such that `{k·θ₁ mod 2π : k = 1..p}` has every
/// circular gap below `eps`.
pub fn epsilon_net(theta1: f64, eps: f64, p_max: usize) -> Result<NetResult> {
    if !(eps > 0.0) || p_max == 0 {
        return Err(Error::Range("epsilon_net needs eps > 0 and p_max >= 1".into()));
    }
    let turns = normalize_angle(theta1) / TAU;
    let mut circle = CircleGaps::new();
    let mut best = f64::INFINITY;
    for k in 1..=p_max {
        circle.insert((k as f64 * turns).rem_euclid(1.0));
        let gap = circle.max_gap() * TAU;
        best = best.min(gap);
        if gap < eps {
            return Ok(NetResult { p: k, max_gap: gap, eps });
        }
    }
    Err(Error::NoNetWithinBound { p_max, best_gap: best })
}

/// Largest circular gap of a set of angles.
pub fn max_circular_gap(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return TAU;
    }
    let mut a: Vec<f64> = angles.iter().map(|&t| normalize_angle(t)).collect();
    a.sort_by(f64::total_cmp);
    let wrap = a[0] + TAU - a[a.len() - 1];
    a.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max)
}

/// `N ≥ 1` and `M` with `|Nα − M|` below the requested bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approximation {
    pub n: u64,
    pub m: i64,
    pub residual: f64,
}

/// Smallest `1 ≤ N ≤ ⌈1/ε⌉` with `|Nα − M| < ε`, `M` the nearest integer.
pub fn pigeonhole_approx(alpha: f64, eps: f64) -> Result<Approximation> {
    if !(eps > 0.0 && eps < 1.0) || !alpha.is_finite() {
        return Err(Error::Range("pigeonhole_approx needs eps in (0, 1)".into()));
    }
    let n_max = (1.0 / eps).ceil() as u64;
    let mut best: Option<Approximation> = None;
    for n in 1..=n_max {
        let x = n as f64 * alpha;
        let m = x.round();
        let residual = (x - m).abs();
        let cand = Approximation {
            n,
            m: m as i64,
            residual,
        };
        if residual < eps {
            return Ok(cand);
        }
        if best.map_or(true, |b| residual < b.residual) {
            best = Some(cand);
        }
    }
    // Dirichlet guarantees a hit; only rounding could land here
    Ok(best.expect("n_max >= 1"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Convergent {
    pub n: u64,
    pub m: BigInt,
    /// `|Nα − M|`, evaluated exactly then rounded to `f64`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiophProfile {
    pub convergents: Vec<Convergent>,
    /// `min_N |Nα − M|·N^d` over convergent denominators.
    pub c_hat: f64,
    /// Decay exponent of the convergent residuals, `−slope` of
    /// `log|Nα − M|` against `log N` over denominators `N ≥ 2`.
    pub d_hat: f64,
    pub d: f64,
}

impl DiophProfile {
    /// `min |Nα − M|·N^d` over the later half of the convergents: the
    /// liminf estimate once early terms are discarded.
    pub fn tail_c_hat(&self) -> f64 {
        let start = self.convergents.len() / 2;
        self.convergents[start..]
            .iter()
            .map(|c| c.residual * (c.n as f64).powf(self.d))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Continued-fraction convergents of `alpha` up to denominator `n_max`.
///
/// Fails with `RationalAlpha` when some convergent reproduces `alpha`
/// exactly, i.e. `alpha` is rational with denominator `≤ n_max`.
pub fn diophantine_profile(alpha: &BigRational, n_max: u64, d: f64) -> Result<DiophProfile> {
    if n_max < 2 {
        return Err(Error::Range("n_max must be at least 2".into()));
    }
    let (mut h_prev, mut h) = (BigInt::from(0), BigInt::from(1));
    let (mut k_prev, mut k) = (BigInt::from(1), BigInt::from(0));
    let mut x = alpha.clone();
    let mut convergents = Vec::new();
    loop {
        let a = x.floor().to_integer();
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        if k_next > BigInt::from(n_max) {
            break;
        }
        let n = k_next.to_u64().expect("bounded by n_max");
        let exact = (alpha * BigRational::from_integer(k_next.clone()) - BigRational::from_integer(h_next.clone())).abs();
        if exact.is_zero() {
            return Err(Error::RationalAlpha {
                n: k_next.to_string(),
                m: h_next.to_string(),
            });
        }
        convergents.push(Convergent {
            n,
            m: h_next.clone(),
            residual: exact.to_f64().unwrap_or(f64::NAN),
        });
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        let frac = &x - BigRational::from_integer(a);
        if frac.is_zero() {
            break;
        }
        x = frac.recip();
    }
    let c_hat = convergents
        .iter()
        .map(|c| c.residual * (c.n as f64).powf(d))
        .fold(f64::INFINITY, f64::min);
    let pts: Vec<(f64, f64)> = convergents
        .iter()
        .filter(|c| c.n >= 2)
        .map(|c| ((c.n as f64).ln(), c.residual.ln()))
        .collect();
    let d_hat = if pts.len() >= 2 {
        let (slope, _) = least_squares(&pts);
        (-slope).max(0.0)
    } else {
        f64::NAN
    };
    Ok(DiophProfile {
        convergents,
        c_hat,
        d_hat,
        d,
    })
}

/// Ordinary least squares `y = slope·x + intercept`.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Shortest word `a` with `O_a = +1` and `0 < |θ_a| < eps`.
///
/// Candidates are powers of single orientation-preserving maps and of
/// products of two reflections; ties go to the lexicographically smaller
/// word.
pub fn small_rotation_word(ifs: &Ifs, eps: f64, max_len: usize) -> Result<Word> {
    let mut generators: Vec<Word> = Vec::new();
    for (i, m) in ifs.maps().iter().enumerate() {
        if m.orientation() == Orientation::Preserving {
            generators.push(Word::single(i as u8));
        }
    }
    for (i, a) in ifs.maps().iter().enumerate() {
        for (j, b) in ifs.maps().iter().enumerate() {
            if a.orientation() == Orientation::Reversing && b.orientation() == Orientation::Reversing {
                generators.push(Word::from_indices(vec![i as u8, j as u8]));
            }
        }
    }
    let mut best: Option<Word> = None;
    for g in generators {
        let theta = ifs.geometry(&g).angle;
        if circular_distance(theta, 0.0) < 1e-15 {
            continue;
        }
        let limit = max_len / g.len();
        let turns = theta / TAU;
        let found = (1..=limit).find(|&k| {
            let dist = circular_distance((k as f64 * turns).rem_euclid(1.0) * TAU, 0.0);
            dist > 1e-15 && dist < eps
        });
        if let Some(k) = found {
            let cand = g.repeat(k);
            let better = match &best {
                None => true,
                Some(b) => cand.len() < b.len() || (cand.len() == b.len() && cand < *b),
            };
            if better {
                best = Some(cand);
            }
        }
    }
    best.ok_or(Error::NoSmallRotation { eps, max_len })
}

/// Suffix `t` (one reflecting symbol if needed, then copies of `a_word`)
/// with `O_{base·t} = +1` and `|θ_{base·t} − φ| < eps`.
pub fn steering_suffix(ifs: &Ifs, base: &Word, phi: f64, eps: f64, a_word: &Word) -> Result<Word> {
    steering_suffix_bounded(ifs, base, phi, eps, a_word, DEFAULT_NET_BOUND)
}

pub fn steering_suffix_bounded(
    ifs: &Ifs,
    base: &Word,
    phi: f64,
    eps: f64,
    a_word: &Word,
    p_max: usize,
) -> Result<Word> {
    let ga = ifs.compose(a_word)?;
    if ga.orientation != Orientation::Preserving || circular_distance(ga.angle, 0.0) >= eps {
        return Err(Error::PreconditionViolated(format!(
            "steering word {a_word} needs orientation +1 and |angle| < {eps}"
        )));
    }
    let gb = ifs.compose(base)?;
    let mut suffix = Word::empty();
    let mut start = gb;
    if gb.orientation == Orientation::Reversing {
        let i0 = ifs.reflector().ok_or(Error::NoReflectorAvailable)?;
        suffix.push(i0);
        start = gb.then(ifs.symbol_geometry(i0));
    }
    let j = if circular_distance(start.angle, phi) < eps {
        0
    } else {
        let net = epsilon_net(ga.angle, eps, p_max)?;
        (1..=net.p)
            .find(|&j| circular_distance(start.angle + j as f64 * ga.angle, phi) < eps)
            .ok_or_else(|| Error::VerificationFailed("net scan missed the target angle".into()))?
    };
    let suffix = suffix.concat(&a_word.repeat(j));
    let check = ifs.geometry(&base.concat(&suffix));
    if check.orientation != Orientation::Preserving || circular_distance(check.angle, phi) >= eps {
        return Err(Error::VerificationFailed(format!(
            "steered angle {:.6} misses target {phi:.6} by {:.3e}",
            check.angle,
            circular_distance(check.angle, phi)
        )));
    }
    Ok(suffix)
}

/// Largest `σ > 0` with every value an integer multiple of `σ`, found by
/// scanning common denominators `Q ≤ 10⁶` of the ratios to the smallest
/// value. `tol` is measured in units of `σ`: each `value/σ` must lie within
/// `tol` of an integer. `None` means no relation (non-arithmetic).
pub fn sigma_arithmetic(values: &[f64], tol: f64) -> Result<Option<f64>> {
    const MAX_DENOMINATOR: u64 = 1_000_000;
    if values.is_empty() {
        return Err(Error::Empty("value list"));
    }
    if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Range("sigma_arithmetic needs positive values".into()));
    }
    let v0 = values.iter().copied().fold(f64::INFINITY, f64::min);
    let ratios: Vec<f64> = values.iter().map(|v| v / v0).collect();
    for q in 1..=MAX_DENOMINATOR {
        let qf = q as f64;
        if ratios.iter().all(|r| {
            let x = r * qf;
            (x - x.round()).abs() <= tol
        }) {
            // reduce: Q may share a factor with every numerator
            let nums: Vec<u64> = ratios.iter().map(|r| (r * qf).round() as u64).collect();
            let g = nums.iter().fold(0u64, |acc, &n| acc.gcd(&n));
            return Ok(Some(v0 / qf * g as f64));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::presets;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    /// Brute-force oracle: sort the first p orbit angles for each p.
    fn net_oracle(theta1: f64, eps: f64, p_max: usize) -> Option<usize> {
        (1..=p_max).find(|&p| {
            let angles: Vec<f64> = (1..=p).map(|k| k as f64 * theta1).collect();
            max_circular_gap(&angles) < eps
        })
    }

    #[test]
    fn net_examples() {
        assert_eq!(epsilon_net(1.0, 7.0, 10).unwrap().p, 1);
        assert!(matches!(epsilon_net(PI, 0.1, 1000), Err(Error::NoNetWithinBound { .. })));
        let theta = TAU * (SQRT_2 - 1.0);
        let r = epsilon_net(theta, 0.5, 100_000).unwrap();
        assert_eq!(Some(r.p), net_oracle(theta, 0.5, 100_000));
        let angles: Vec<f64> = (1..=r.p).map(|k| k as f64 * theta).collect();
        assert!(max_circular_gap(&angles) < 0.5);
        assert!((r.max_gap - max_circular_gap(&angles)).abs() < 1e-12);
    }

    #[test]
    fn net_matches_oracle_on_grid() {
        let theta = TAU * (1.0 + SQRT_2) / 2.0;
        for &eps in &[0.5, 0.2, 0.1, 0.05, 0.02] {
            let r = epsilon_net(theta, eps, 100_000).unwrap();
            assert_eq!(Some(r.p), net_oracle(theta, eps, 2000), "eps={eps}");
        }
    }

    #[test]
    fn pigeonhole_examples() {
        let a = pigeonhole_approx(0.5, 0.6).unwrap();
        assert_eq!(a.n, 1);
        assert!(a.m == 0 || a.m == 1);
        assert!((a.residual - 0.5).abs() < 1e-15);

        // scan oracle for √2, ε = 0.1
        let oracle = (1..=10u64)
            .find(|&n| {
                let x = n as f64 * SQRT_2;
                (x - x.round()).abs() < 0.1
            })
            .unwrap();
        let a = pigeonhole_approx(SQRT_2, 0.1).unwrap();
        assert_eq!((a.n, a.m), (oracle, 7));
        assert_eq!(a.n, 5);
        assert!((a.residual - (5.0 * SQRT_2 - 7.0)).abs() < 1e-14);
        assert!(pigeonhole_approx(0.3, 1.0).is_err());
    }

    #[test]
    fn rational_alpha_detected() {
        let alpha = Expr::parse("3/7").unwrap().eval_rational().unwrap();
        assert!(matches!(diophantine_profile(&alpha, 100, 1.0), Err(Error::RationalAlpha { .. })));
    }

    #[test]
    fn golden_ratio_profile() {
        let alpha = Expr::parse("(1+sqrt(5))/2").unwrap().eval_rational().unwrap();
        let prof = diophantine_profile(&alpha, 1_000_000, 1.0).unwrap();
        // continued-fraction oracle: convergents F_{k+1}/F_k
        let (mut a, mut b) = (1u64, 1u64);
        for c in &prof.convergents[1..] {
            assert_eq!(c.n, b);
            assert_eq!(c.m, BigInt::from(a + b));
            let next = a + b;
            a = b;
            b = next;
        }
        let target = 1.0 / 5f64.sqrt();
        let goldf = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((prof.tail_c_hat() - target).abs() < 0.01 * target);
        // the global minimum sits at N = 1, M = 2
        assert!((prof.c_hat - (2.0 - goldf)).abs() < 1e-15);
        assert!((prof.d_hat - 1.0).abs() < 0.1);
        for c in &prof.convergents {
            let direct = (c.n as f64 * goldf - c.m.to_f64().unwrap()).abs();
            assert!((direct - c.residual).abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_irrational_is_bounded_away_with_d_two() {
        let alpha = Expr::parse("(1+sqrt(2))/2").unwrap().eval_rational().unwrap();
        let prof = diophantine_profile(&alpha, 1_000_000, 2.0).unwrap();
        assert!(prof.c_hat > 0.1, "{}", prof.c_hat);
        assert!(prof.convergents.len() > 10);
    }

    #[test]
    fn small_rotation_for_figure_one() {
        let ifs = presets::figure_one();
        let a = small_rotation_word(&ifs, 0.05, 10_000).unwrap();
        assert!(a.indices().iter().all(|&s| s == 0));
        let g = ifs.compose(&a).unwrap();
        let d = circular_distance(g.angle, 0.0);
        assert!(d > 0.0 && d < 0.05);
        assert!(matches!(
            small_rotation_word(&presets::four_corner(), 0.1, 100),
            Err(Error::NoSmallRotation { .. })
        ));
    }

    #[test]
    fn steering_examples() {
        let ifs = presets::figure_one();
        let a = small_rotation_word(&ifs, 0.3, 10_000).unwrap();
        // base "2" already at angle 0
        assert_eq!(steering_suffix(&ifs, &"2".parse().unwrap(), 0.1, 0.3, &a).unwrap(), Word::empty());
        let t = steering_suffix(&ifs, &"2".parse().unwrap(), FRAC_PI_2, 0.3, &a).unwrap();
        assert!(t.indices().iter().all(|&s| s == 0));
        let g = ifs.compose(&"2".parse::<Word>().unwrap().concat(&t)).unwrap();
        assert_eq!(g.orientation, Orientation::Preserving);
        assert!(circular_distance(g.angle, FRAC_PI_2) < 0.3);
    }

    #[test]
    fn steering_fails_on_rational_rotation() {
        // map 2 does not rotate, so its orbit is the single angle 0
        let ifs = presets::figure_one();
        let err = steering_suffix_bounded(&ifs, &Word::single(1), FRAC_PI_2, 0.3, &Word::single(1), 10_000);
        assert!(matches!(err, Err(Error::NoNetWithinBound { .. })), "{err:?}");
    }

    #[test]
    fn steering_fixes_orientation_with_reflector() {
        use crate::geometry::Point;
        use crate::ifs::Similitude;
        let ifs = Ifs::new(vec![
            Similitude::new(0.4, TAU * (SQRT_2 - 1.0), Orientation::Preserving, Point::ORIGIN).unwrap(),
            Similitude::new(0.4, 0.3, Orientation::Reversing, Point::new(1.0, 0.0)).unwrap(),
        ])
        .unwrap();
        let a = small_rotation_word(&ifs, 0.2, 10_000).unwrap();
        let base: Word = "12".parse().unwrap();
        let t = steering_suffix(&ifs, &base, 2.0, 0.2, &a).unwrap();
        assert_eq!(t.indices()[0], 1);
        let g = ifs.compose(&base.concat(&t)).unwrap();
        assert_eq!(g.orientation, Orientation::Preserving);
        assert!(circular_distance(g.angle, 2.0) < 0.2);
        // no reflector: a reversing base cannot be fixed
        let plain = presets::figure_one();
        let a = small_rotation_word(&plain, 0.2, 10_000).unwrap();
        assert!(steering_suffix(&plain, &Word::empty(), 0.0, 0.2, &a).is_ok());
    }

    #[test]
    fn sigma_examples() {
        let l2 = 2f64.ln();
        let s = sigma_arithmetic(&[l2, 2.0 * l2], 1e-9).unwrap().unwrap();
        assert!((s - l2).abs() < 1e-12);
        let s = sigma_arithmetic(&[2.0 * l2, 3.0 * l2], 1e-9).unwrap().unwrap();
        assert!((s - l2).abs() < 1e-12);
        let r = 3f64.ln();
        let s = sigma_arithmetic(&[r, r, r], 1e-9).unwrap().unwrap();
        assert!((s - r).abs() < 1e-15);
        assert_eq!(sigma_arithmetic(&[l2, 3f64.ln()], 1e-9).unwrap(), None);
        assert!(sigma_arithmetic(&[], 1e-9).is_err());
    }

    /// Scan oracle: no q ≤ 10⁶ brings q·log₂3 within 1e-9 of an integer.
    #[test]
    fn log2_log3_scan_oracle() {
        let x = 3f64.ln() / 2f64.ln();
        let best = (1..=1_000_000u64)
            .map(|q| {
                let y = q as f64 * x;
                (y - y.round()).abs()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best > 1e-9, "{best}");
    }
}
