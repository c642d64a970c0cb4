use serde::{Deserialize, Serialize};

use super::AnnealError;
use crate::encode::QuboModel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    Geometric,
    Linear,
}

/// Annealing schedule. Temperatures left as `None` are derived from the
/// model: `t_initial` from the largest possible `|dE|` of a single flip,
/// `t_final` as 1% of the smallest nonzero coefficient magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub t_initial: Option<f64>,
    pub t_final: Option<f64>,
    pub sweeps: usize,
    pub reads: usize,
    pub seed: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            kind: ScheduleKind::Geometric,
            t_initial: None,
            t_final: None,
            sweeps: 1000,
            reads: 100,
            seed: 0,
        }
    }
}

impl Schedule {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn fixed(t_initial: f64, t_final: f64, sweeps: usize, reads: usize, seed: u64) -> Self {
        Self {
            kind: ScheduleKind::Geometric,
            t_initial: Some(t_initial),
            t_final: Some(t_final),
            sweeps,
            reads,
            seed,
        }
    }

    /// Resolves automatic temperatures against `model` and checks invariants.
    pub fn resolve<S: Scalar>(&self, model: &QuboModel<S>) -> Result<ResolvedSchedule, AnnealError> {
        if self.sweeps == 0 || self.reads == 0 {
            return Err(AnnealError::InvalidSchedule(
                "sweeps and reads must be >= 1".into(),
            ));
        }
        let auto_hi = match model.max_abs_delta().as_f64() {
            t if t > 0.0 && t.is_finite() => t,
            _ => 1.0,
        };
        let t_initial = self.t_initial.unwrap_or(auto_hi);
        let t_final = self.t_final.unwrap_or_else(|| {
            let lo = model
                .min_abs_coefficient()
                .map_or(auto_hi, |c| c.as_f64())
                * 1e-2;
            lo.min(t_initial)
        });
        if !(t_final > 0.0 && t_initial >= t_final && t_initial.is_finite()) {
            return Err(AnnealError::InvalidSchedule(format!(
                "need t_initial >= t_final > 0, got {t_initial} and {t_final}"
            )));
        }
        Ok(ResolvedSchedule {
            kind: self.kind,
            t_initial,
            t_final,
            sweeps: self.sweeps,
            reads: self.reads,
            seed: self.seed,
        })
    }
}

/// A schedule with concrete temperatures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSchedule {
    pub kind: ScheduleKind,
    pub t_initial: f64,
    pub t_final: f64,
    pub sweeps: usize,
    pub reads: usize,
    pub seed: u64,
}

impl ResolvedSchedule {
    /// Temperature of sweep `k` (0-based). A single sweep runs at `t_final`.
    pub fn temperature(&self, k: usize) -> f64 {
        if self.sweeps == 1 {
            return self.t_final;
        }
        let f = k as f64 / (self.sweeps - 1) as f64;
        match self.kind {
            ScheduleKind::Geometric => self.t_initial * (self.t_final / self.t_initial).powf(f),
            ScheduleKind::Linear => self.t_initial + (self.t_final - self.t_initial) * f,
        }
    }
}
