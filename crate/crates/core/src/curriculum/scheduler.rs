use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    Expansion,
    Shrink,
}

/// Growth law of a window-size schedule. Rates are per fine-tuning epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchedulerLaw {
    /// `init ± rate * t`.
    Linear { rate: f64 },
    /// `init * base^t` (expansion) or `init * base^-t` (shrink), `base > 1`.
    Exponential { base: f64 },
    /// `sqrt(init^2 + (c - init^2) * t / s)`.
    Sqrt { c: f64, s: f64 },
}

/// Window size as a function of the fine-tuning epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulerSpec {
    pub mode: WindowMode,
    pub lambda_init: f64,
    /// Upper clamp for expansion, lower clamp for shrink.
    pub lambda_limit: f64,
    pub law: SchedulerLaw,
}

/// Values within a few ulps of a multiple of 1e-12 are snapped to it, so
/// decimal schedules come out exactly (0.1 + 0.05 * 4 is 0.3, not
/// 0.30000000000000004).
fn snap(x: f64) -> f64 {
    let s = (x * 1e12).round() / 1e12;
    if (s - x).abs() <= 8.0 * f64::EPSILON * x.abs() {
        s
    } else {
        x
    }
}

impl SchedulerSpec {
    pub fn linear(mode: WindowMode, lambda_init: f64, lambda_limit: f64, rate: f64) -> Self {
        Self { mode, lambda_init, lambda_limit, law: SchedulerLaw::Linear { rate } }
    }

    pub fn exponential(mode: WindowMode, lambda_init: f64, lambda_limit: f64, base: f64) -> Self {
        Self { mode, lambda_init, lambda_limit, law: SchedulerLaw::Exponential { base } }
    }

    pub fn sqrt(mode: WindowMode, lambda_init: f64, lambda_limit: f64, c: f64, s: f64) -> Self {
        Self { mode, lambda_init, lambda_limit, law: SchedulerLaw::Sqrt { c, s } }
    }

    /// Linear 0.10 to 0.40 by 0.05 per epoch.
    pub fn default_expansion() -> Self {
        Self::linear(WindowMode::Expansion, 0.10, 0.40, 0.05)
    }

    /// Linear 0.40 to 0.10 by 0.05 per epoch.
    pub fn default_shrink() -> Self {
        Self::linear(WindowMode::Shrink, 0.40, 0.10, 0.05)
    }

    /// Largest value the schedule ever takes.
    pub fn peak(&self) -> f64 {
        match self.mode {
            WindowMode::Expansion => self.lambda_limit,
            WindowMode::Shrink => self.lambda_init,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !unit(self.lambda_init) || !unit(self.lambda_limit) {
            return Err(Error::Config(format!(
                "scheduler lambdas must be in (0,1], got init {} and limit {}",
                self.lambda_init, self.lambda_limit
            )));
        }
        let expanding = self.mode == WindowMode::Expansion;
        if expanding && self.lambda_init > self.lambda_limit {
            return Err(Error::Config("expansion requires lambda_init <= lambda_limit".into()));
        }
        if !expanding && self.lambda_init < self.lambda_limit {
            return Err(Error::Config("shrink requires lambda_init >= lambda_limit".into()));
        }
        let init_sq = self.lambda_init * self.lambda_init;
        let ok = match self.law {
            SchedulerLaw::Linear { rate } => rate >= 0.0 && rate.is_finite(),
            SchedulerLaw::Exponential { base } => base > 1.0 && base.is_finite(),
            SchedulerLaw::Sqrt { c, s } => {
                s > 0.0 && c >= 0.0 && c.is_finite() && if expanding { c >= init_sq } else { c <= init_sq }
            }
        };
        if !ok {
            return Err(Error::Config(format!("invalid scheduler law {:?} for {:?}", self.law, self.mode)));
        }
        Ok(())
    }
}

/// Window size at fine-tuning epoch `t`, clamped at the limit.
pub fn scheduler_eval(s: &SchedulerSpec, t: u32) -> f64 {
    let (init, tf) = (s.lambda_init, t as f64);
    if t == 0 {
        return init;
    }
    let expanding = s.mode == WindowMode::Expansion;
    let raw = match s.law {
        SchedulerLaw::Linear { rate } if expanding => init + rate * tf,
        SchedulerLaw::Linear { rate } => init - rate * tf,
        SchedulerLaw::Exponential { base } if expanding => init * base.powi(t as i32),
        SchedulerLaw::Exponential { base } => init * base.powi(-(t as i32)),
        SchedulerLaw::Sqrt { c, s } => (init * init + (c - init * init) * tf / s).sqrt(),
    };
    let v = snap(raw);
    // NaN (a negative radicand) falls through to the limit.
    if expanding {
        if v < s.lambda_limit { v } else { s.lambda_limit }
    } else if v > s.lambda_limit {
        v
    } else {
        s.lambda_limit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_expansion_sequence() {
        let s = SchedulerSpec::default_expansion();
        let got: Vec<f64> = (0..8).map(|t| scheduler_eval(&s, t)).collect();
        assert_eq!(got, vec![0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.40]);
    }

    #[test]
    fn linear_shrink_clamps() {
        let s = SchedulerSpec::default_shrink();
        assert_eq!(scheduler_eval(&s, 0), 0.40);
        assert_eq!(scheduler_eval(&s, 6), 0.10);
        assert_eq!(scheduler_eval(&s, 7), 0.10);
    }

    #[test]
    fn exponential_expansion() {
        let s = SchedulerSpec::exponential(WindowMode::Expansion, 0.10, 0.40, 1.5);
        assert_eq!(scheduler_eval(&s, 2), 0.225);
        assert_eq!(scheduler_eval(&s, 4), 0.40);
    }

    #[test]
    fn sqrt_shrink_past_zero_radicand() {
        let s = SchedulerSpec::sqrt(WindowMode::Shrink, 0.40, 0.10, 0.0, 4.0);
        assert_eq!(scheduler_eval(&s, 0), 0.40);
        assert_eq!(scheduler_eval(&s, 9), 0.10);
    }

    #[test]
    fn validation() {
        assert!(SchedulerSpec::linear(WindowMode::Expansion, 0.5, 0.4, 0.1).validate().is_err());
        assert!(SchedulerSpec::linear(WindowMode::Shrink, 0.3, 0.4, 0.1).validate().is_err());
        assert!(SchedulerSpec::exponential(WindowMode::Expansion, 0.1, 0.4, 1.0).validate().is_err());
        assert!(SchedulerSpec::linear(WindowMode::Expansion, 0.0, 0.4, 0.1).validate().is_err());
        assert!(SchedulerSpec::default_expansion().validate().is_ok());
    }

    fn spec_strategy() -> impl Strategy<Value = SchedulerSpec> {
        (0.01f64..1.0, 0.01f64..1.0, any::<bool>(), 0u8..3, 0.0f64..0.3, 1.01f64..3.0, 0.5f64..10.0, 0.0f64..1.0).prop_map(
            |(a, b, expand, law, rate, base, s, c)| {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let mode = if expand { WindowMode::Expansion } else { WindowMode::Shrink };
                let (init, limit) = if expand { (lo, hi) } else { (hi, lo) };
                let law = match law {
                    0 => SchedulerLaw::Linear { rate },
                    1 => SchedulerLaw::Exponential { base },
                    _ => {
                        let c = if expand { init * init + c * (1.0 - init * init) } else { c * init * init };
                        SchedulerLaw::Sqrt { c, s }
                    }
                };
                SchedulerSpec { mode, lambda_init: init, lambda_limit: limit, law }
            },
        )
    }

    proptest! {
        #[test]
        fn monotone_and_clamped(s in spec_strategy()) {
            prop_assert!(s.validate().is_ok());
            prop_assert_eq!(scheduler_eval(&s, 0), s.lambda_init);
            let mut prev = scheduler_eval(&s, 0);
            for t in 1..40 {
                let v = scheduler_eval(&s, t);
                match s.mode {
                    WindowMode::Expansion => prop_assert!(v >= prev && v <= s.lambda_limit),
                    WindowMode::Shrink => prop_assert!(v <= prev && v >= s.lambda_limit),
                }
                prev = v;
            }
        }
    }
}
