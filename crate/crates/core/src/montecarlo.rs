//! Random-box sweeps through the danger detector, plus exact references.
//!
//! Each box gets a distance d and speed s from unif{1..n} and a yaw from
//! unif{1..360}. It sits on the frontal half circle of radius d at a uniform
//! bearing; every section's facing window is equally wide, so placement does
//! not change the danger rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::danger::{detect_danger, is_facing_vehicle, DangerConfig, Policy, Section};
use crate::detector::TrackedObject;
use crate::geometry::{Vec3, YawDegrees};

/// Largest n accepted by [`brute_force_p_danger`].
pub const BRUTE_FORCE_MAX_N: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("n must be at least 1")]
    ZeroRange,
    #[error("alpha must be positive and finite, got {0}")]
    Alpha(f64),
    #[error("max_load and num_trials must be at least 1")]
    EmptySweep,
    #[error("closed form assumes alpha = 1 (got {0}); use brute_force_p_danger")]
    ClosedFormNeedsUnitAlpha(f64),
    #[error("n = {0} is too large for enumeration (limit {BRUTE_FORCE_MAX_N})")]
    TooLarge(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n: u64,
    pub alpha: f64,
    pub max_load: u32,
    pub num_trials: u32,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n: 60,
            alpha: 1.0,
            max_load: 100,
            num_trials: 1000,
            seed: 0,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.n == 0 {
            return Err(McError::ZeroRange);
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(McError::Alpha(self.alpha));
        }
        if self.max_load == 0 || self.num_trials == 0 {
            return Err(McError::EmptySweep);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    /// Mean dangerous fraction for loads 1..=max_load.
    pub averages: Vec<f64>,
    pub grand_mean: f64,
}

/// One random box before it is handed to the danger detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomBox {
    pub distance: u64,
    pub speed: u64,
    /// 1..=360; 360 is the same heading as 0.
    pub yaw_deg: u32,
    /// Bearing from the vehicle, degrees in [−90, 90].
    pub bearing_deg: f64,
}

impl RandomBox {
    pub fn position(&self) -> Vec3 {
        let b = self.bearing_deg.to_radians();
        let d = self.distance as f64;
        Vec3::new(d * b.cos(), d * b.sin(), 0.0)
    }

    pub fn to_tracked(&self, id: u64) -> TrackedObject {
        TrackedObject::synthetic(
            id,
            self.position(),
            self.speed as f64,
            Some(YawDegrees::new(self.yaw_deg as f64)),
        )
    }
}

pub fn generate_random_box<R: Rng + ?Sized>(rng: &mut R, n: u64) -> RandomBox {
    RandomBox {
        distance: rng.random_range(1..=n),
        speed: rng.random_range(1..=n),
        yaw_deg: rng.random_range(1..=360),
        bearing_deg: rng.random_range(-90.0..=90.0),
    }
}

/// P(d ≤ s) for d, s ~ unif{1..n}: 1/2 + 1/(2n).
pub fn p_e1(n: u64) -> f64 {
    0.5 + 0.5 / n as f64
}

/// Same probability as Σ_{i=1}^{n} i / n².
pub fn p_e1_summation(n: u64) -> f64 {
    let n2 = (n as f64) * (n as f64);
    (1..=n).map(|i| i as f64 / n2).sum()
}

/// Share of headings that face the vehicle: 150/360.
pub const P_E2: f64 = 150.0 / 360.0;

pub fn analytic_p_danger(n: u64, alpha: f64) -> Result<f64, McError> {
    if n == 0 {
        return Err(McError::ZeroRange);
    }
    if alpha != 1.0 {
        return Err(McError::ClosedFormNeedsUnitAlpha(alpha));
    }
    Ok(P_E2 * p_e1(n))
}

/// Number of yaw values in 1..=360 that count as facing in `section`.
pub fn facing_count(section: Section, policy: Policy) -> u32 {
    (1..=360)
        .filter(|&psi| is_facing_vehicle(Some(YawDegrees::new(psi as f64)), section, policy))
        .count() as u32
}

/// Exact danger probability by enumerating (d, s, ψ) over {1..n}² × {1..360}.
///
/// The count factors: pairs with d ≤ α·s times facing yaws. The facing count
/// is the same in every section under the current windows. Integer counts
/// are exact; the single final division is the only rounding.
pub fn brute_force_p_danger(n: u64, alpha: f64) -> Result<f64, McError> {
    if n == 0 {
        return Err(McError::ZeroRange);
    }
    if n > BRUTE_FORCE_MAX_N {
        return Err(McError::TooLarge(n));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(McError::Alpha(alpha));
    }
    let mut close: u64 = 0;
    for s in 1..=n {
        for d in 1..=n {
            if d as f64 <= alpha * s as f64 {
                close += 1;
            }
        }
    }
    let facing = facing_count(Section::Front, Policy::Current) as u64;
    debug_assert!([Section::Left, Section::Right]
        .iter()
        .all(|&s| facing_count(s, Policy::Current) as u64 == facing));
    Ok((close * facing) as f64 / (n * n * 360) as f64)
}

fn trial_rng(seed: u64, load: u32, trial: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((load as u64) << 32) | trial as u64);
    rng
}

/// Fraction of `load` random boxes labeled dangerous in one trial.
fn trial_fraction(cfg: &McConfig, danger: &DangerConfig, load: u32, trial: u32) -> f64 {
    let mut rng = trial_rng(cfg.seed, load, trial);
    let boxes: Vec<TrackedObject> = (0..load as u64)
        .map(|id| generate_random_box(&mut rng, cfg.n).to_tracked(id))
        .collect();
    let verdicts = detect_danger(&boxes, danger).expect("validated config");
    verdicts.iter().filter(|v| v.dangerous).count() as f64 / load as f64
}

/// Sweep loads 1..=max_load with `num_trials` trials each.
///
/// `danger` supplies policy and vehicle width; its reaction time is replaced
/// by `cfg.alpha`. Every trial draws from its own stream keyed by
/// (seed, load, trial), so the result does not depend on thread count.
pub fn run_simulation(cfg: &McConfig, danger: &DangerConfig) -> Result<McResult, McError> {
    cfg.validate()?;
    let danger = DangerConfig {
        reaction_time_s: cfg.alpha,
        ..danger.clone()
    };
    let averages: Vec<f64> = (1..=cfg.max_load)
        .into_par_iter()
        .map(|load| {
            let sum: f64 = (0..cfg.num_trials).map(|t| trial_fraction(cfg, &danger, load, t)).sum();
            sum / cfg.num_trials as f64
        })
        .collect();
    let grand_mean = averages.iter().sum::<f64>() / averages.len() as f64;
    Ok(McResult { averages, grand_mean })
}

/// Ordinary least squares fit of per-load averages against load size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SlopeFit {
    pub fn ci_contains_zero(&self) -> bool {
        self.ci_low <= 0.0 && 0.0 <= self.ci_high
    }
}

/// Slope with a two-sided confidence interval at `level`; needs at least
/// three loads.
pub fn load_slope(averages: &[f64], level: f64) -> Option<SlopeFit> {
    let k = averages.len();
    if k < 3 {
        return None;
    }
    let xs: Vec<f64> = (1..=k).map(|i| i as f64).collect();
    let mx = xs.iter().sum::<f64>() / k as f64;
    let my = averages.iter().sum::<f64>() / k as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(averages).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(averages)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let df = (k - 2) as f64;
    let std_err = (sse / df / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, df).ok()?.inverse_cdf(0.5 + level / 2.0);
    Some(SlopeFit {
        slope,
        intercept,
        std_err,
        ci_low: slope - t * std_err,
        ci_high: slope + t * std_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::danger::facing_window;
    use statrs::distribution::ChiSquared;

    #[test]
    fn closed_form_values() {
        assert_eq!(format!("{:.4}", analytic_p_danger(60, 1.0).unwrap()), "0.2118");
        assert!((analytic_p_danger(1, 1.0).unwrap() - 150.0 / 360.0).abs() < 1e-15);
        assert!((analytic_p_danger(1_000_000, 1.0).unwrap() - 5.0 / 24.0).abs() < 1e-6);
        assert_eq!(analytic_p_danger(10, 2.0), Err(McError::ClosedFormNeedsUnitAlpha(2.0)));
        assert_eq!(analytic_p_danger(0, 1.0), Err(McError::ZeroRange));
    }

    #[test]
    fn p_e1_matches_summation() {
        for n in 1..=1000 {
            assert!((p_e1(n) - p_e1_summation(n)).abs() <= 1e-12, "n = {n}");
        }
    }

    #[test]
    fn facing_windows_hold_151_of_360_headings() {
        for s in [Section::Left, Section::Front, Section::Right] {
            let (lo, hi) = facing_window(s);
            assert_eq!(hi - lo, 150.0);
            assert_eq!(facing_count(s, Policy::Current), 151);
        }
    }

    #[test]
    fn brute_force_agrees_with_closed_form() {
        for n in [1, 2, 10, 60, 100] {
            let a = analytic_p_danger(n, 1.0).unwrap();
            let b = brute_force_p_danger(n, 1.0).unwrap();
            assert!((a - b).abs() <= 1.0 / 360.0, "n = {n}: {a} vs {b}");
        }
        assert_eq!(brute_force_p_danger(1, 1.0).unwrap(), 151.0 / 360.0);
    }

    #[test]
    fn brute_force_monotone_in_alpha() {
        let p: Vec<f64> = [1.0, 2.0, 3.0].iter().map(|&a| brute_force_p_danger(10, a).unwrap()).collect();
        assert!(p[0] < p[1] && p[1] <= p[2], "{p:?}");
        assert_eq!(brute_force_p_danger(BRUTE_FORCE_MAX_N + 1, 1.0), Err(McError::TooLarge(10_001)));
    }

    #[test]
    fn degenerate_range_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let b = generate_random_box(&mut rng, 1);
            assert_eq!((b.distance, b.speed), (1, 1));
            assert!((1..=360).contains(&b.yaw_deg));
            assert!(b.position().x >= 0.0);
        }
    }

    #[test]
    fn yaw_marginal_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let mut counts = [0u32; 360];
        for _ in 0..draws {
            counts[(generate_random_box(&mut rng, 60).yaw_deg - 1) as usize] += 1;
        }
        let expected = draws as f64 / 360.0;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new(359.0).unwrap().cdf(stat);
        assert!(p > 0.01, "chi2 = {stat}, p = {p}");
    }

    #[test]
    fn same_seed_same_draws() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| generate_random_box(&mut rng, 60)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn single_trial_is_zero_or_one_and_reproducible() {
        let cfg = McConfig {
            max_load: 1,
            num_trials: 1,
            seed: 42,
            ..McConfig::default()
        };
        let a = run_simulation(&cfg, &DangerConfig::default()).unwrap();
        assert!(a.averages[0] == 0.0 || a.averages[0] == 1.0);
        assert_eq!(a, run_simulation(&cfg, &DangerConfig::default()).unwrap());
    }

    #[test]
    fn simulation_converges_to_oracle() {
        let cfg = McConfig {
            max_load: 20,
            num_trials: 500,
            seed: 5,
            ..McConfig::default()
        };
        let r = run_simulation(&cfg, &DangerConfig::default()).unwrap();
        let p = brute_force_p_danger(cfg.n, cfg.alpha).unwrap();
        let var: f64 = (1..=cfg.max_load)
            .map(|i| p * (1.0 - p) / (i as f64 * cfg.num_trials as f64))
            .sum::<f64>()
            / (cfg.max_load as f64).powi(2);
        assert!((r.grand_mean - p).abs() < 3.0 * var.sqrt(), "{} vs {p}", r.grand_mean);
        assert!(r.averages.iter().all(|a| (0.0..=1.0).contains(a)));
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            McConfig { n: 0, ..McConfig::default() },
            McConfig { alpha: 0.0, ..McConfig::default() },
            McConfig { max_load: 0, ..McConfig::default() },
            McConfig { num_trials: 0, ..McConfig::default() },
        ];
        for cfg in bad {
            assert!(run_simulation(&cfg, &DangerConfig::default()).is_err());
        }
    }

    #[test]
    fn slope_of_flat_and_sloped_series() {
        let flat: Vec<f64> = (0..50).map(|i| 0.2 + if i % 2 == 0 { 0.01 } else { -0.01 }).collect();
        assert!(load_slope(&flat, 0.95).unwrap().ci_contains_zero());
        let sloped: Vec<f64> = (1..=50).map(|i| 0.1 + 0.002 * i as f64 + if i % 2 == 0 { 0.001 } else { -0.001 }).collect();
        let fit = load_slope(&sloped, 0.95).unwrap();
        assert!(!fit.ci_contains_zero());
        assert!((fit.slope - 0.002).abs() < 1e-4);
        assert!(load_slope(&[0.1, 0.2], 0.95).is_none());
    }
}
