//! Observation-time schedules for the blackout process.
//!
//! An active edge observed at time `t` is Bernoulli(`e^{-t}`), so its
//! standard deviation `sqrt(e^{-t}(1 - e^{-t}))` rises from 0 to its maximum
//! 0.5 at `t = ln 2` and decays towards 0 afterwards. The improved schedules
//! pick a target std per index and invert the curve on the matching side of
//! the peak.

use std::fmt::Write as _;

use crate::blackout::BlackoutConfig;
use crate::error::{invalid, Error, Result, ScheduleViolation};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleVariant {
    Original,
    Improved,
    MoreImproved,
    Custom,
}

impl ScheduleVariant {
    pub fn name(self) -> &'static str {
        match self {
            ScheduleVariant::Original => "original",
            ScheduleVariant::Improved => "improved",
            ScheduleVariant::MoreImproved => "more_improved",
            ScheduleVariant::Custom => "custom",
        }
    }
}

/// Which side of the std peak an inversion lands on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `t <= ln 2`, survival probability at least 1/2.
    BeforePeak,
    /// `t >= ln 2`.
    AfterPeak,
}

/// Strictly increasing observation times inside `[epsilon_time, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule<F> {
    times: Vec<F>,
    variant: ScheduleVariant,
    alpha: Option<F>,
    horizon: F,
    epsilon_time: F,
}

impl<F: Scalar> Schedule<F> {
    /// A user-supplied schedule, validated against `cfg`.
    pub fn custom(cfg: &BlackoutConfig<F>, times: Vec<F>) -> Result<Self> {
        let s = Self {
            times,
            variant: ScheduleVariant::Custom,
            alpha: None,
            horizon: cfg.horizon,
            epsilon_time: cfg.epsilon_time,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn times(&self) -> &[F] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn variant(&self) -> ScheduleVariant {
        self.variant
    }

    pub fn alpha(&self) -> Option<F> {
        self.alpha
    }

    pub fn horizon(&self) -> F {
        self.horizon
    }

    /// Reports the first violated invariant and the index where it occurs.
    pub fn validate(&self) -> Result<()> {
        let fail = |kind, index| Err(Error::Schedule { kind, index });
        for (k, &t) in self.times.iter().enumerate() {
            if !(t >= self.epsilon_time && t <= self.horizon) {
                return fail(ScheduleViolation::Bounds, k);
            }
            if k > 0 && t <= self.times[k - 1] {
                return fail(ScheduleViolation::Monotonicity, k);
            }
        }
        if self.times.len() < 2 {
            return fail(ScheduleViolation::Length, self.times.len());
        }
        Ok(())
    }

    /// `k,t,std` rows, `k` starting at 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,t,std\n");
        for (k, &t) in self.times.iter().enumerate() {
            let s = std_of_t(t).map(|v| v.as_f64()).unwrap_or(f64::NAN);
            let _ = writeln!(out, "{},{},{}", k + 1, t.as_f64(), s);
        }
        out
    }
}

/// Standard deviation of a Bernoulli(`e^{-t}`) edge.
pub fn std_of_t<F: Scalar>(t: F) -> Result<F> {
    if !(t >= F::zero()) {
        return Err(invalid(format!("time must be nonnegative, got {t}")));
    }
    let p = (-t).exp();
    let q = -(-t).exp_m1();
    Ok((p * q).sqrt())
}

/// Time at which the std equals `s`, on the requested side of the peak,
/// clamped into `[epsilon_time, horizon]`.
pub fn invert_std<F: Scalar>(cfg: &BlackoutConfig<F>, s: F, branch: Branch) -> Result<F> {
    let half = F::lit(0.5);
    if !(s >= F::zero() && s <= half) {
        return Err(invalid(format!("std target {s} outside [0, 0.5]")));
    }
    let two = F::lit(2.0);
    // smaller root of p(1 - p) = s^2, in a cancellation-free form
    let root = (F::one() - F::lit(4.0) * s * s).max(F::zero()).sqrt();
    let q = two * s * s / (F::one() + root);
    let t = match branch {
        Branch::BeforePeak => -(-q).ln_1p(),
        Branch::AfterPeak => -q.ln(),
    };
    Ok(clamp_time(cfg, t))
}

fn clamp_time<F: Scalar>(cfg: &BlackoutConfig<F>, t: F) -> F {
    if t.is_nan() {
        return cfg.epsilon_time;
    }
    t.max(cfg.epsilon_time).min(cfg.horizon)
}

/// Nudges non-increasing neighbours upward by the smallest representable step.
fn repair_monotone<F: Scalar>(times: &mut [F]) {
    for k in 1..times.len() {
        if times[k] <= times[k - 1] {
            let prev = times[k - 1];
            let step = (prev.abs() * F::epsilon()).max(F::min_positive_value());
            times[k] = prev + step;
        }
    }
}

fn build<F: Scalar>(
    cfg: &BlackoutConfig<F>,
    mut times: Vec<F>,
    variant: ScheduleVariant,
    alpha: Option<F>,
) -> Result<Schedule<F>> {
    repair_monotone(&mut times);
    let s = Schedule { times, variant, alpha, horizon: cfg.horizon, epsilon_time: cfg.epsilon_time };
    s.validate()?;
    Ok(s)
}

/// `k` times uniformly spaced over `[epsilon_time, horizon]`.
pub fn original_schedule<F: Scalar>(cfg: &BlackoutConfig<F>, k: usize) -> Result<Schedule<F>> {
    cfg.validate()?;
    if k < 2 {
        return Err(invalid(format!("schedule needs at least 2 steps, got {k}")));
    }
    let span = cfg.horizon - cfg.epsilon_time;
    let last = F::from_usize_lossy(k - 1);
    let mut times: Vec<F> = (0..k)
        .map(|i| cfg.epsilon_time + span * F::from_usize_lossy(i) / last)
        .collect();
    times[k - 1] = cfg.horizon;
    build(cfg, times, ScheduleVariant::Original, None)
}

/// Target std per index for [`improved_schedule`]: linear from
/// `std(epsilon_time)` up to 0.5 at index `ceil(k/2) - 1`, then linear down
/// to `std(horizon)`.
pub fn improved_targets<F: Scalar>(cfg: &BlackoutConfig<F>, k: usize) -> Result<Vec<(F, Branch)>> {
    if k < 3 {
        return Err(invalid(format!("improved schedule needs at least 3 steps, got {k}")));
    }
    let s_lo = std_of_t(cfg.epsilon_time)?;
    let s_hi = std_of_t(cfg.horizon)?;
    let half = F::lit(0.5);
    let peak = k.div_ceil(2) - 1;
    let up = F::from_usize_lossy(peak);
    let down = F::from_usize_lossy(k - 1 - peak);
    Ok((0..k)
        .map(|i| {
            if i < peak {
                (s_lo + (half - s_lo) * F::from_usize_lossy(i) / up, Branch::BeforePeak)
            } else if i == peak {
                (half, Branch::BeforePeak)
            } else {
                let frac = F::from_usize_lossy(i - peak) / down;
                (half + (s_hi - half) * frac, Branch::AfterPeak)
            }
        })
        .collect())
}

/// Times whose std rises linearly to the peak and then falls linearly.
pub fn improved_schedule<F: Scalar>(cfg: &BlackoutConfig<F>, k: usize) -> Result<Schedule<F>> {
    cfg.validate()?;
    let times = improved_targets(cfg, k)?
        .into_iter()
        .map(|(s, b)| invert_std(cfg, s, b))
        .collect::<Result<Vec<_>>>()?;
    build(cfg, times, ScheduleVariant::Improved, None)
}

/// Target std per index for [`more_improved_schedule`], together with the
/// index fraction `u` it was evaluated at.
///
/// Interior index `i` sits at `u = (i + 1/2) / k`; the first and last
/// indices are pinned to `u = 0` and `u = 1` so the schedule spans
/// `[epsilon_time, horizon]`. On `[0, alpha]` the target ramps
/// from `std(epsilon_time)` to 0.25, on `[alpha, 1/2]` from 0.25 to the peak
/// 0.5, and the second half mirrors this down to `std(horizon)`.
pub fn more_improved_targets<F: Scalar>(
    cfg: &BlackoutConfig<F>,
    k: usize,
    alpha: F,
) -> Result<Vec<(F, F, Branch)>> {
    let half = F::lit(0.5);
    if k < 5 {
        return Err(invalid(format!("more-improved schedule needs at least 5 steps, got {k}")));
    }
    if !(alpha > F::zero() && alpha < half) {
        return Err(invalid(format!("alpha must lie in (0, 0.5), got {alpha}")));
    }
    let s_lo = std_of_t(cfg.epsilon_time)?;
    let s_hi = std_of_t(cfg.horizon)?;
    let quarter = F::lit(0.25);
    let kf = F::from_usize_lossy(k);
    Ok((0..k)
        .map(|i| {
            let u = if i == 0 {
                F::zero()
            } else if i == k - 1 {
                F::one()
            } else {
                F::from_usize_lossy(2 * i + 1) / (kf + kf)
            };
            let (s, b) = if u < alpha {
                (s_lo + (quarter - s_lo) * u / alpha, Branch::BeforePeak)
            } else if u < half {
                (quarter + quarter * (u - alpha) / (half - alpha), Branch::BeforePeak)
            } else if u <= F::one() - alpha {
                (half - quarter * (u - half) / (half - alpha), Branch::AfterPeak)
            } else {
                let frac = (u - (F::one() - alpha)) / alpha;
                (quarter + (s_hi - quarter) * frac, Branch::AfterPeak)
            };
            (u, s.max(F::zero()).min(half), b)
        })
        .collect())
}

/// Schedule that spends `1 - 2·alpha` of its indices where the std is at
/// least half its maximum.
pub fn more_improved_schedule<F: Scalar>(
    cfg: &BlackoutConfig<F>,
    k: usize,
    alpha: F,
) -> Result<Schedule<F>> {
    cfg.validate()?;
    let times = more_improved_targets(cfg, k, alpha)?
        .into_iter()
        .map(|(_, s, b)| invert_std(cfg, s, b))
        .collect::<Result<Vec<_>>>()?;
    build(cfg, times, ScheduleVariant::MoreImproved, Some(alpha))
}

/// Default `alpha` for [`more_improved_schedule`].
pub const DEFAULT_ALPHA: f64 = 0.2;

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> BlackoutConfig<f64> {
        BlackoutConfig::default()
    }

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn std_values() {
        assert_eq!(std_of_t(0.0_f64).unwrap(), 0.0);
        assert!((std_of_t(LN2).unwrap() - 0.5).abs() < 1e-15);
        assert!((std_of_t(15.0_f64).unwrap() - 5.530_842_855_529_309e-4).abs() < 1e-15);
        assert!(std_of_t(-1.0_f64).is_err());
    }

    #[test]
    fn inversion_examples() {
        let c = cfg();
        for b in [Branch::BeforePeak, Branch::AfterPeak] {
            assert!((invert_std(&c, 0.5, b).unwrap() - LN2).abs() < 1e-15);
        }
        assert_eq!(invert_std(&c, 0.0, Branch::BeforePeak).unwrap(), c.epsilon_time);
        assert_eq!(invert_std(&c, 0.0, Branch::AfterPeak).unwrap(), c.horizon);
        let t = invert_std(&c, 0.3, Branch::AfterPeak).unwrap();
        assert!(t > LN2);
        assert!((std_of_t(t).unwrap() - 0.3).abs() < 1e-10);
        assert!(invert_std(&c, 0.6, Branch::AfterPeak).is_err());
        assert!(invert_std(&c, -0.1, Branch::AfterPeak).is_err());
    }

    #[test]
    fn original_spacing() {
        let c = cfg();
        let s = original_schedule(&c, 2).unwrap();
        assert_eq!(s.times(), &[c.epsilon_time, 15.0]);
        let s = original_schedule(&c, 4).unwrap();
        let gaps: Vec<f64> = s.times().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.iter().all(|g| (g - gaps[0]).abs() < 1e-12));
        assert!(original_schedule(&c, 1).is_err());
        assert_eq!(*original_schedule(&c, 33).unwrap().times().last().unwrap(), 15.0);
    }

    #[test]
    fn improved_peak_and_bounds() {
        let c = cfg();
        for k in [3, 4, 9, 50] {
            let s = improved_schedule(&c, k).unwrap();
            let peak = k.div_ceil(2) - 1;
            assert!((s.times()[peak] - LN2).abs() < 1e-12, "k = {k}");
            assert!((s.times()[0] - c.epsilon_time).abs() < 1e-12);
            assert!((s.times()[k - 1] - c.horizon).abs() < 1e-9);
        }
        assert!(improved_schedule(&c, 2).is_err());
    }

    #[test]
    fn more_improved_profile() {
        let c = cfg();
        let targets = more_improved_targets(&c, 20, 0.2).unwrap();
        for (i, (_, s, _)) in targets.iter().enumerate() {
            if (5..=15).contains(&(i + 1)) {
                assert!(*s >= 0.25, "index {} target {s}", i + 1);
            }
        }
        let s = more_improved_schedule(&c, 21, 0.2).unwrap();
        assert!((s.times()[10] - LN2).abs() < 1e-12);
        assert_eq!(s.alpha(), Some(0.2));
        assert!(more_improved_schedule(&c, 4, 0.2).is_err());
        assert!(more_improved_schedule(&c, 10, 0.5).is_err());
        assert!(more_improved_schedule(&c, 10, 0.0).is_err());
    }

    #[test]
    fn validate_reports_index() {
        let c = cfg();
        assert!(original_schedule(&c, 8).unwrap().validate().is_ok());
        let e = Schedule::custom(&c, vec![1.0, 1.0]).unwrap_err();
        assert!(matches!(e, Error::Schedule { kind: ScheduleViolation::Monotonicity, index: 1 }));
        let e = Schedule::custom(&c, vec![0.5, 16.0]).unwrap_err();
        assert!(matches!(e, Error::Schedule { kind: ScheduleViolation::Bounds, index: 1 }));
        let e = Schedule::custom(&c, vec![0.5]).unwrap_err();
        assert!(matches!(e, Error::Schedule { kind: ScheduleViolation::Length, .. }));
    }

    #[test]
    fn repair_breaks_ties() {
        let mut t = vec![1.0, 1.0, 0.5, 2.0];
        repair_monotone(&mut t);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(t[3], 2.0);
    }

    #[test]
    fn csv_dump() {
        let s = original_schedule(&cfg(), 3).unwrap();
        let csv = s.to_csv();
        assert!(csv.starts_with("k,t,std\n1,0.0001,"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn single_precision_schedules() {
        let c = BlackoutConfig::<f32>::default();
        for k in [3, 10, 64] {
            improved_schedule(&c, k).unwrap();
            more_improved_schedule(&c, k.max(5), 0.2).unwrap();
        }
    }
}
