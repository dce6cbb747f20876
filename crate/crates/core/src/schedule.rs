//! The scale schedule `s(n)`, `L_n`, `ρ_n`, the decay exponent `B`,
//! reference bound curves and the empirical decay fit.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::Ifs;
use crate::rotation::least_squares;

/// `min n ≥ 0` such that `n` natural logs bring `x` to at most 1.
pub fn log_star(x: f64) -> u32 {
    let mut x = x;
    let mut n = 0;
    while x > 1.0 + 1e-12 {
        x = x.ln();
        n += 1;
    }
    n
}

/// `log_*` of `e^{ln_x}`, for arguments too large to represent.
pub fn log_star_of_exp(ln_x: f64) -> u32 {
    if ln_x <= 1e-12 {
        0
    } else {
        1 + log_star(ln_x)
    }
}

/// `B = log 2 / ((1+δ)·k·(d+1)·log m)`.
pub fn decay_exponent(k: f64, d: f64, m: f64, delta: f64) -> f64 {
    LN_2 / ((1.0 + delta) * k * (d + 1.0) * m.ln())
}

/// `s(n) = 2c₁m^{(d+1)kn}`, `L_n = m^{s(n)}s(n)²`, `ρ_n = r^{L_n}`, all
/// carried in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FavardSchedule {
    pub m: usize,
    pub r: f64,
    pub n: usize,
    pub c1: f64,
    pub k: f64,
    pub d: f64,
    pub delta: f64,
    /// `s(n)`; infinite once it exceeds the float range.
    pub s_n: f64,
    pub ln_s_n: f64,
    /// `log L_n = s(n)·log m + 2·log s(n)`.
    pub ln_l_n: f64,
    /// `log(−log ρ_n) = log L_n + log(−log r)`.
    pub ln_neg_ln_rho: f64,
    pub b: f64,
}

impl FavardSchedule {
    /// `log_m L_n`.
    pub fn log_m_l_n(&self) -> f64 {
        self.ln_l_n / (self.m as f64).ln()
    }

    /// `s(n)·(1 + log m) ≥ log(−log ρ_n)`, decided without overflow.
    pub fn growth_inequality_holds(&self) -> bool {
        if !self.s_n.is_finite() {
            return true;
        }
        // s(1 + log m) ≥ s·log m + 2 log s + log(−log r)
        self.s_n >= 2.0 * self.ln_s_n + (-self.r.ln()).ln()
    }
}

pub fn schedule(ifs: &Ifs, n: usize, c1: f64, k: f64, d: f64, delta: f64) -> Result<FavardSchedule> {
    let r = ifs.homogeneous_ratio().ok_or(Error::NonHomogeneous)?;
    schedule_for(ifs.len(), r, n, c1, k, d, delta)
}

pub fn schedule_for(m: usize, r: f64, n: usize, c1: f64, k: f64, d: f64, delta: f64) -> Result<FavardSchedule> {
    if m < 2 || ![c1, k, d, delta].iter().all(|&v| v > 0.0) || !(r > 0.0 && r < 1.0) {
        return Err(Error::Range("schedule needs m >= 2, r in (0, 1) and positive parameters".into()));
    }
    let mf = m as f64;
    let ln_s_n = (2.0 * c1).ln() + (d + 1.0) * k * n as f64 * mf.ln();
    let s_n = ln_s_n.exp();
    let ln_l_n = s_n * mf.ln() + 2.0 * ln_s_n;
    Ok(FavardSchedule {
        m,
        r,
        n,
        c1,
        k,
        d,
        delta,
        s_n,
        ln_s_n,
        ln_l_n,
        ln_neg_ln_rho: ln_l_n + (-r.ln()).ln(),
        b: decay_exponent(k, d, mf, delta),
    })
}

/// Smallest `n ≤ n_max` from which the growth inequality holds up to `n_max`.
pub fn growth_threshold(m: usize, r: f64, c1: f64, k: f64, d: f64, delta: f64, n_max: usize) -> Result<Option<usize>> {
    let mut first = None;
    for n in 0..=n_max {
        let holds = schedule_for(m, r, n, c1, k, d, delta)?.growth_inequality_holds();
        match (holds, first) {
            (true, None) => first = Some(n),
            (false, Some(_)) => first = None,
            _ => {}
        }
    }
    Ok(first)
}

/// Reference curves at levels `n` with `ρ = r^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurves {
    pub levels: Vec<usize>,
    /// `c_low/n`.
    pub lower: Vec<f64>,
    /// `C·exp(−a·log_*(1/ρ))`.
    pub log_star: Vec<f64>,
    /// `A/(log n)^B`.
    pub theorem: Vec<f64>,
}

pub fn bound_curves(
    schedule: &FavardSchedule,
    a: f64,
    c_low: f64,
    c_ls: f64,
    a_ls: f64,
    levels: &[usize],
) -> Result<BoundCurves> {
    if ![a, c_low, c_ls, a_ls].iter().all(|&v| v > 0.0) {
        return Err(Error::Range("bound constants must be positive".into()));
    }
    if levels.iter().any(|&n| n < 2) {
        return Err(Error::Range("bound curves start at level 2".into()));
    }
    let ln_inv_r = -schedule.r.ln();
    Ok(BoundCurves {
        levels: levels.to_vec(),
        lower: levels.iter().map(|&n| c_low / n as f64).collect(),
        log_star: levels
            .iter()
            .map(|&n| c_ls * (-a_ls * log_star_of_exp(n as f64 * ln_inv_r) as f64).exp())
            .collect(),
        theorem: levels.iter().map(|&n| a / (n as f64).ln().powf(schedule.b)).collect(),
    })
}

/// Least-squares fit of `log length = log A − B·log log n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub samples: Vec<(usize, f64)>,
    pub a_hat: f64,
    pub b_hat: f64,
    /// Sum of squared residuals in log space.
    pub residual: f64,
}

/// Fits samples with `n ≥ 3`; at least three are required.
pub fn fit_decay(samples: &[(usize, f64)]) -> Result<DecayFit> {
    let used: Vec<(usize, f64)> = samples.iter().copied().filter(|&(n, _)| n >= 3).collect();
    if used.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} samples with n >= 3, need 3", used.len())));
    }
    if let Some(&(n, l)) = used.iter().find(|s| !(s.1 > 0.0)) {
        return Err(Error::DegenerateFit(format!("non-positive length {l} at n = {n}")));
    }
    let pts: Vec<(f64, f64)> = used.iter().map(|&(n, l)| ((n as f64).ln().ln(), l.ln())).collect();
    if pts.iter().all(|p| p.0 == pts[0].0) {
        return Err(Error::DegenerateFit("all samples share one level".into()));
    }
    let (slope, intercept) = least_squares(&pts);
    if !slope.is_finite() || !intercept.is_finite() {
        return Err(Error::DegenerateFit("non-finite fit".into()));
    }
    let residual = pts.iter().map(|&(x, y)| (y - (intercept + slope * x)).powi(2)).sum();
    Ok(DecayFit {
        samples: used,
        a_hat: intercept.exp(),
        b_hat: -slope,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::ifs::{Orientation, Similitude};
    use crate::presets;
    use std::f64::consts::E;

    #[test]
    fn log_star_examples() {
        assert_eq!(log_star(1.0), 0);
        assert_eq!(log_star(0.5), 0);
        assert_eq!(log_star(E), 1);
        assert_eq!(log_star(E.powf(E)), 2);
        assert_eq!(log_star(1e10), 4);
        assert_eq!(log_star_of_exp(1e10f64.ln()), 4);
        assert_eq!(log_star_of_exp(0.0), 0);
    }

    #[test]
    fn example_exponent() {
        let b = decay_exponent(1.0, 2.0, 3.0, 0.1);
        assert!((b - LN_2 / (3.3 * 3f64.ln())).abs() < 1e-12);
        assert!((b - 0.1912).abs() < 1e-4);
    }

    #[test]
    fn schedule_plug_in() {
        let s = schedule(&presets::figure_one(), 1, 1.0, 1.0, 2.0, 0.1).unwrap();
        assert!((s.s_n - 54.0).abs() < 1e-9);
        assert!((s.log_m_l_n() - (54.0 + 2.0 * 54f64.ln() / 3f64.ln())).abs() < 1e-9);
        assert_eq!(s.b, decay_exponent(1.0, 2.0, 3.0, 0.1));
        assert!(s.growth_inequality_holds());
        let c = bound_curves(&s, 1.0, 1.0, 1.0, 1.0, &[2, 3]).unwrap();
        assert_eq!(c.theorem[0], 1.0 / 2f64.ln().powf(s.b));
        let mixed = Ifs::new(vec![
            Similitude::new(0.3, 0.0, Orientation::Preserving, Point::ORIGIN).unwrap(),
            Similitude::new(0.4, 0.0, Orientation::Preserving, Point::new(0.6, 0.0)).unwrap(),
        ])
        .unwrap();
        assert!(matches!(schedule(&mixed, 1, 1.0, 1.0, 2.0, 0.1), Err(Error::NonHomogeneous)));
    }

    #[test]
    fn growth_inequality_threshold() {
        // for r = 1/3 it holds for every s since min(s − 2 log s) > log log 3
        assert_eq!(growth_threshold(3, 1.0 / 3.0, 1e-3, 1.0, 2.0, 0.1, 30).unwrap(), Some(0));
        // for r = 1/8 it fails at s = 2, that is n = 0 with c1 = 1
        let t = growth_threshold(8, 0.125, 1.0, 1.0, 2.0, 0.1, 30).unwrap();
        assert_eq!(t, Some(1));
        assert!(!schedule_for(8, 0.125, 0, 1.0, 1.0, 2.0, 0.1).unwrap().growth_inequality_holds());
        for n in 1..=30 {
            let s = schedule_for(8, 0.125, n, 1.0, 1.0, 2.0, 0.1).unwrap();
            assert!(s.growth_inequality_holds());
            if s.s_n.is_finite() && s.ln_neg_ln_rho.is_finite() {
                assert!(s.s_n * (1.0 + 8f64.ln()) >= s.ln_neg_ln_rho);
            }
        }
    }

    #[test]
    fn log_star_curve_is_stepwise_nonincreasing() {
        let s = schedule(&presets::figure_one(), 1, 1.0, 1.0, 2.0, 0.1).unwrap();
        let levels: Vec<usize> = (2..200).collect();
        let c = bound_curves(&s, 1.0, 1.0, 1.0, 0.5, &levels).unwrap();
        assert!(c.log_star.windows(2).all(|w| w[1] <= w[0]));
        let distinct: std::collections::BTreeSet<u64> = c.log_star.iter().map(|v| v.to_bits()).collect();
        assert!(distinct.len() <= 3);
    }

    #[test]
    fn exact_model_recovery() {
        let samples: Vec<(usize, f64)> = (3..=20).map(|n| (n, 2.0 / (n as f64).ln().powf(0.5))).collect();
        let fit = fit_decay(&samples).unwrap();
        assert!((fit.a_hat - 2.0).abs() < 1e-9);
        assert!((fit.b_hat - 0.5).abs() < 1e-9);
        assert!(fit.residual < 1e-20);
    }

    #[test]
    fn noisy_model_recovery() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<(usize, f64)> = (3..=20)
            .map(|n| {
                let noise = 1.0 + rng.gen_range(-0.01..0.01);
                (n, noise * 2.0 / (n as f64).ln().powf(0.5))
            })
            .collect();
        let fit = fit_decay(&samples).unwrap();
        assert!((fit.b_hat - 0.5).abs() < 0.1, "{}", fit.b_hat);
    }

    #[test]
    fn degenerate_fits() {
        assert!(matches!(fit_decay(&[(3, 1.0), (3, 0.9), (3, 0.8)]), Err(Error::DegenerateFit(_))));
        assert!(matches!(fit_decay(&[(1, 1.0), (2, 0.9), (3, 0.8)]), Err(Error::DegenerateFit(_))));
        assert!(matches!(fit_decay(&[(3, 1.0), (4, 0.0), (5, 0.8)]), Err(Error::DegenerateFit(_))));
    }
}
