//! Finite-depth versions of the cylinder-removal recursion and of the
//! block-avoidance count.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::Ifs;
use crate::rotation::{epsilon_net, small_rotation_word, steering_suffix, DEFAULT_NET_BOUND};
use crate::word::Word;

/// Longest small-rotation word considered when building the steering word.
pub const STEERING_WORD_MAX_LEN: usize = 10_000;

/// Masses `μ(Ω_0) = 1, μ(Ω_1), …` of the survivor sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalTrace {
    pub masses: Vec<f64>,
    /// Survivor cylinders after each step.
    pub cylinders: Vec<usize>,
    /// `r_min^{γ·N₀}·μ([target])`, a lower bound for every removed share.
    pub c: f64,
    /// Bound on steering suffix lengths: one reflecting symbol plus `p`
    /// copies of the steering word.
    pub n0: usize,
    pub a_word: Word,
}

/// Per-symbol masses `r_i^γ`.
fn symbol_masses(ifs: &Ifs) -> Vec<f64> {
    let g = ifs.gamma();
    ifs.maps().iter().map(|m| m.ratio().powf(g)).collect()
}

fn word_mass(p: &[f64], w: &[u8]) -> f64 {
    w.iter().map(|&i| p[i as usize]).product()
}

/// The steering word `a` with `|θ_a| < ε` and the suffix length bound `N₀`.
pub fn steering_bound(ifs: &Ifs, eps: f64) -> Result<(Word, usize)> {
    let a = small_rotation_word(ifs, eps, STEERING_WORD_MAX_LEN)?;
    let net = epsilon_net(ifs.geometry(&a).angle, eps, DEFAULT_NET_BOUND)?;
    Ok((a.clone(), 1 + a.len() * net.p))
}

/// Runs `steps` rounds of: for every survivor cylinder `[v]` steer with
/// `t_v` so that `|θ_{v t_v} − φ| < ε`, then remove `[v·t_v·target]`.
///
/// Survivors of `[v] ∖ [v x]` are the cylinders `[v·x[..k]·y]` with
/// `y ≠ x[k]`. The survivor count may not exceed `cap`.
pub fn removal_recursion(ifs: &Ifs, target: &Word, phi: f64, eps: f64, steps: usize, cap: usize) -> Result<RemovalTrace> {
    target.check_alphabet(ifs.len())?;
    let (a_word, n0) = steering_bound(ifs, eps)?;
    let p = symbol_masses(ifs);
    let p_min = p.iter().copied().fold(f64::INFINITY, f64::min);
    let c = p_min.powi(n0 as i32) * word_mass(&p, target.indices());

    let mut survivors = vec![Word::empty()];
    let mut masses = vec![1.0];
    let mut cylinders = vec![1];
    for step in 0..steps {
        let mut next = Vec::new();
        for v in &survivors {
            let t = steering_suffix(ifs, v, phi, eps, &a_word)?;
            let x = t.concat(target);
            for k in 0..x.len() {
                let stem = v.concat(&x.slice(0..k));
                for y in 0..ifs.len() as u8 {
                    if y != x.indices()[k] {
                        let mut w = stem.clone();
                        w.push(y);
                        next.push(w);
                    }
                }
            }
            if next.len() > cap {
                return Err(Error::LevelTooLarge {
                    level: step + 1,
                    count: next.len() as f64,
                    cap,
                });
            }
        }
        masses.push(next.iter().map(|w| word_mass(&p, w.indices())).sum());
        cylinders.push(next.len());
        survivors = next;
    }
    Ok(RemovalTrace {
        masses,
        cylinders,
        c,
        n0,
        a_word,
    })
}

/// Exact count of block-avoiding words next to the block-product bound.
#[derive(Debug, Clone, PartialEq)]
pub struct AvoidanceCount {
    pub m: u32,
    pub s: u32,
    pub blocks: u32,
    pub exact: BigUint,
    pub bound: BigUint,
    /// `m^s·s·log(1 − m^{−s})`, the log of `(1 − m^{−s})^{m^s·s}`.
    pub relaxation_ln: f64,
    /// `(1 − m^{−s})^{m^s·s} ≤ e^{−s}`.
    pub relaxation_holds: bool,
}

fn check_avoidance_range(m: u32, s: u32, blocks: u32) -> Result<()> {
    if m < 2 || s < 1 || blocks < 1 {
        return Err(Error::Range(format!("need m >= 2, s >= 1, blocks >= 1, got ({m}, {s}, {blocks})")));
    }
    Ok(())
}

/// Words of length `blocks·s` over `m` symbols in which every block of
/// length `s` avoids one continuation designated by its prefix. Each block
/// has `m^s − 1` admissible fillings whatever the prefix.
pub fn avoidance_count(m: u32, s: u32, blocks: u32) -> Result<AvoidanceCount> {
    check_avoidance_range(m, s, blocks)?;
    let per_block = BigUint::from(m).pow(s) - BigUint::one();
    let mut exact = BigUint::one();
    for _ in 0..blocks {
        exact *= &per_block;
    }
    let bound = per_block.pow(blocks);
    let ms = (m as f64).powi(s as i32);
    let relaxation_ln = ms * s as f64 * (-1.0 / ms).ln_1p();
    Ok(AvoidanceCount {
        m,
        s,
        blocks,
        exact,
        bound,
        relaxation_ln,
        relaxation_holds: relaxation_ln <= -(s as f64),
    })
}

/// The continuation forbidden after `prefix`: the base-`m` digits of
/// `(Σ prefix + |prefix|) mod m^s`.
pub fn designated_block(m: u32, s: u32, prefix: &[u8]) -> Vec<u8> {
    let ms = (m as u64).pow(s);
    let mut code = (prefix.iter().map(|&x| x as u64).sum::<u64>() + prefix.len() as u64) % ms;
    let mut block = vec![0u8; s as usize];
    for d in block.iter_mut().rev() {
        *d = (code % m as u64) as u8;
        code /= m as u64;
    }
    block
}

/// Enumerates all `m^{blocks·s}` words against [`designated_block`];
/// limited to `2^30` words.
pub fn avoidance_brute_force(m: u32, s: u32, blocks: u32) -> Result<u64> {
    check_avoidance_range(m, s, blocks)?;
    let len = (s * blocks) as usize;
    let total = (m as f64).powi(len as i32);
    if total > (1u64 << 30) as f64 {
        return Err(Error::Range(format!("{total} words exceed the enumeration limit")));
    }
    let mut word = vec![0u8; len];
    let mut count = 0u64;
    for mut code in 0..total as u64 {
        for d in word.iter_mut().rev() {
            *d = (code % m as u64) as u8;
            code /= m as u64;
        }
        let ok = (0..blocks as usize).all(|j| {
            let (pre, rest) = word.split_at(j * s as usize);
            rest[..s as usize] != designated_block(m, s, pre)[..]
        });
        count += ok as u64;
    }
    Ok(count)
}

/// `#G₂·3·r^L` for `L = blocks·s`, against `3e^{−s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H2Bound {
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn h2_length_bound(m: u32, s: u32, blocks: u32, r: f64) -> Result<H2Bound> {
    check_avoidance_range(m, s, blocks)?;
    if (r - 1.0 / m as f64).abs() > 1e-12 {
        return Err(Error::Range(format!("ratio {r} must equal 1/{m}")));
    }
    let ms = (m as f64).powi(s as i32);
    let value = 3.0 * (blocks as f64 * (-1.0 / ms).ln_1p()).exp();
    let bound = 3.0 * (-(s as f64)).exp();
    Ok(H2Bound {
        value,
        bound,
        holds: value <= bound,
    })
}

/// `#G₂·3·r^L` from the exact count, for cross-checking small cases.
pub fn h2_from_count(count: &AvoidanceCount) -> f64 {
    let len = (count.s * count.blocks) as i32;
    let num = count.exact.to_f64().unwrap_or(f64::INFINITY);
    3.0 * num / (count.m as f64).powi(len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::ifs::{Orientation, Similitude};
    use crate::presets;
    use std::f64::consts::{PI, SQRT_2, TAU};

    fn toy() -> Ifs {
        Ifs::new(vec![
            Similitude::new(0.5, TAU * (SQRT_2 - 1.0), Orientation::Preserving, Point::ORIGIN).unwrap(),
            Similitude::new(0.5, 0.0, Orientation::Preserving, Point::new(0.5, 0.0)).unwrap(),
        ])
        .unwrap()
    }

    /// Follows every infinite word through the rounds one symbol at a time.
    /// A branch stops as soon as it is removed or has survived every round.
    fn pathwise_masses(ifs: &Ifs, target: &Word, phi: f64, eps: f64, a: &Word, steps: usize) -> Vec<f64> {
        let mut masses = vec![0.0; steps + 1];
        masses[0] = 1.0;
        fn walk(
            ifs: &Ifs,
            ctx: (&Word, f64, f64, &Word, usize),
            prefix: &mut Vec<u8>,
            v_len: usize,
            x: &Word,
            step: usize,
            masses: &mut [f64],
        ) {
            let (target, phi, eps, a, steps) = ctx;
            let tail = &prefix[v_len..];
            if let Some(last) = tail.last() {
                let k = tail.len() - 1;
                if *last != x.indices()[k] {
                    let w = Word::from_indices(prefix.clone());
                    masses[step + 1] += ifs.mu_mass(&w).unwrap();
                    if step + 1 == steps {
                        return;
                    }
                    let t = steering_suffix(ifs, &w, phi, eps, a).unwrap();
                    let nx = t.concat(target);
                    let len = prefix.len();
                    for y in 0..ifs.len() as u8 {
                        prefix.push(y);
                        walk(ifs, ctx, prefix, len, &nx, step + 1, masses);
                        prefix.pop();
                    }
                    return;
                }
            }
            if tail.len() == x.len() {
                return;
            }
            for y in 0..ifs.len() as u8 {
                prefix.push(y);
                walk(ifs, ctx, prefix, v_len, x, step, masses);
                prefix.pop();
            }
        }
        if steps == 0 {
            return masses;
        }
        let x = steering_suffix(ifs, &Word::empty(), phi, eps, a).unwrap().concat(target);
        walk(ifs, (target, phi, eps, a, steps), &mut Vec::new(), 0, &x, 0, &mut masses);
        masses
    }

    #[test]
    fn step_zero_is_full_mass() {
        let t = removal_recursion(&toy(), &Word::single(1), 1.0, 0.5, 0, 1 << 20).unwrap();
        assert_eq!(t.masses, vec![1.0]);
    }

    #[test]
    fn toy_matches_pathwise_enumeration() {
        let ifs = toy();
        let target = Word::single(1);
        for &(phi, eps) in &[(1.0, 0.5), (PI, 0.8), (5.0, 1.2)] {
            let trace = removal_recursion(&ifs, &target, phi, eps, 4, 1 << 22).unwrap();
            let oracle = pathwise_masses(&ifs, &target, phi, eps, &trace.a_word, 4);
            for (a, b) in trace.masses.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12, "{:?} vs {oracle:?}", trace.masses);
            }
        }
    }

    #[test]
    fn geometric_decay() {
        for (ifs, target, steps) in [(toy(), Word::single(1), 4), (presets::figure_one(), "23".parse().unwrap(), 3)] {
            let trace = removal_recursion(&ifs, &target, 2.0, 0.6, steps, 1 << 22).unwrap();
            assert!(trace.c > 0.0);
            for (i, w) in trace.masses.windows(2).enumerate() {
                assert!(w[1] < w[0]);
                assert!(w[1] < (1.0 - trace.c) * w[0]);
                assert!(trace.masses[i + 1] <= (1.0 - trace.c).powi(i as i32 + 1));
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            removal_recursion(&toy(), &Word::single(1), 1.0, 0.5, 12, 100),
            Err(Error::LevelTooLarge { cap: 100, .. })
        ));
    }

    #[test]
    fn small_avoidance_counts() {
        let c = avoidance_count(2, 2, 2).unwrap();
        assert_eq!(c.exact, BigUint::from(9u32));
        assert_eq!(c.bound, BigUint::from(9u32));
        assert_eq!(avoidance_brute_force(2, 2, 2).unwrap(), 9);
        assert_eq!(avoidance_brute_force(2, 2, 4).unwrap(), 81);
        assert_eq!(avoidance_count(2, 2, 4).unwrap().exact, BigUint::from(81u32));
        for (m, s, b) in [(3, 1, 5), (3, 2, 3), (2, 3, 3), (4, 2, 2)] {
            assert_eq!(
                BigUint::from(avoidance_brute_force(m, s, b).unwrap()),
                avoidance_count(m, s, b).unwrap().exact
            );
        }
    }

    #[test]
    fn relaxation_holds_for_all_small_parameters() {
        for m in 2..=6 {
            for s in 1..=12 {
                assert!(avoidance_count(m, s, 1).unwrap().relaxation_holds);
            }
        }
    }

    #[test]
    fn h2_bound_cases() {
        // three blocks of the smallest alphabet are not enough
        let h = h2_length_bound(2, 2, 4, 0.5).unwrap();
        assert!((h.value - 3.0 * 0.75f64.powi(4)).abs() < 1e-12);
        assert!(!h.holds);
        // with blocks = m^s·s, the count is small enough
        for m in 2..=4u32 {
            for s in 1..=6u32 {
                let blocks = m.pow(s) * s;
                assert!(h2_length_bound(m, s, blocks, 1.0 / m as f64).unwrap().holds);
            }
        }
        assert!(matches!(h2_length_bound(2, 2, 4, 0.3), Err(Error::Range(_))));
    }

    #[test]
    fn h2_matches_exact_count() {
        for (m, s, b) in [(2, 2, 4), (3, 2, 5), (2, 5, 3)] {
            let c = avoidance_count(m, s, b).unwrap();
            let h = h2_length_bound(m, s, b, 1.0 / m as f64).unwrap();
            assert!((h.value - h2_from_count(&c)).abs() < 1e-12);
        }
    }

    #[test]
    fn h2_decreases_in_s_along_the_schedule() {
        let vals: Vec<f64> = (1..=8u32)
            .map(|s| h2_length_bound(2, s, 2u32.pow(s) * s, 0.5).unwrap().value)
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }
}
