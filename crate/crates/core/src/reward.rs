//! Per-step reward decomposition and the balanced reward.
//!
//! Each step earns the sum of a collision penalty, a lane-change penalty, a
//! speed-proportional efficiency term, and a constant offset. The balanced
//! reward mixes the running historical reward with the current one under a
//! coefficient that grows with the aggregated risk around the ego vehicle, so
//! risky moments weigh the present more heavily.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::sim::StepOutcome;
use crate::Result;

/// Weights of the reward terms and the balance mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Collision penalty magnitude (applied negatively).
    pub w_safety: f64,
    /// Penalty per initiated lane change.
    pub w_stability: f64,
    /// Scale of the speed-proportional efficiency term.
    pub w_efficiency: f64,
    /// Constant per-step offset.
    pub r_const: f64,
    /// EMA retention factor of the historical reward.
    pub ema_keep: f64,
    /// Lower clamp of the balance coefficient.
    pub gamma_b_min: f64,
    /// Upper clamp of the balance coefficient.
    pub gamma_b_max: f64,
    /// Slope mapping aggregated risk to the balance coefficient.
    pub risk_to_gamma_scale: f64,
    /// Historical-reward form used by the balanced reward.
    #[serde(default)]
    pub historical_form: HistoricalForm,
}

/// Which definition of the historical reward feeds the balanced mix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HistoricalForm {
    /// Exponential moving average; constant memory.
    #[default]
    Ema,
    /// Arithmetic mean of all completed steps.
    Mean,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            w_safety: 10.0,
            w_stability: 0.5,
            w_efficiency: 1.0,
            r_const: 0.1,
            ema_keep: 0.99,
            gamma_b_min: 0.2,
            gamma_b_max: 0.9,
            risk_to_gamma_scale: 0.2,
            historical_form: HistoricalForm::Ema,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ema_keep > 0.0 && self.ema_keep < 1.0) {
            return Err(Error::InvalidConfig("ema_keep must be in (0, 1)".into()));
        }
        if !(0.0 <= self.gamma_b_min
            && self.gamma_b_min <= self.gamma_b_max
            && self.gamma_b_max <= 1.0)
        {
            return Err(Error::InvalidConfig(
                "require 0 <= gamma_b_min <= gamma_b_max <= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-episode reward bookkeeping: the EMA and the full step history.
#[derive(Debug, Clone, Default)]
pub struct RewardState {
    /// Running EMA of step rewards; starts at zero.
    pub r_ave_ema: f64,
    /// Rewards of all completed steps, in order.
    pub step_rewards: Vec<f64>,
}

impl RewardState {
    pub fn new() -> RewardState {
        RewardState::default()
    }

    /// Number of completed steps.
    pub fn step_index(&self) -> usize {
        self.step_rewards.len()
    }
}

/// Individual reward terms of one step, useful for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardTerms {
    pub safety: f64,
    pub stability: f64,
    pub efficiency: f64,
    pub constant: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.safety + self.stability + self.efficiency + self.constant
    }
}

/// Decompose a step outcome into its reward terms.
pub fn step_reward_terms(outcome: &StepOutcome, max_speed: f64, cfg: &RewardConfig) -> RewardTerms {
    RewardTerms {
        safety: if outcome.collided { -cfg.w_safety } else { 0.0 },
        stability: if outcome.lane_changed {
            -cfg.w_stability
        } else {
            0.0
        },
        efficiency: cfg.w_efficiency * (outcome.av_speed / max_speed),
        constant: cfg.r_const,
    }
}

/// Total instantaneous reward of one step.
pub fn step_reward(outcome: &StepOutcome, max_speed: f64, cfg: &RewardConfig) -> f64 {
    step_reward_terms(outcome, max_speed, cfg).total()
}

/// Fold the current reward into the EMA and append it to the history.
pub fn update_ema(state: &mut RewardState, r_current: f64, cfg: &RewardConfig) {
    state.r_ave_ema = cfg.ema_keep * state.r_ave_ema + (1.0 - cfg.ema_keep) * r_current;
    state.step_rewards.push(r_current);
}

/// Arithmetic mean of all completed steps (the first N-1 rewards when the
/// in-flight step is the N-th). Errors when no step has completed yet.
pub fn historical_mean(state: &RewardState) -> Result<f64> {
    let n = state.step_rewards.len();
    if n < 1 {
        return Err(Error::InsufficientHistory { needed: 1, have: n });
    }
    Ok(state.step_rewards.iter().sum::<f64>() / n as f64)
}

/// Map aggregated risk to the balance coefficient: affine then clamped, so it
/// is nondecreasing in risk and confined to the configured band.
pub fn balance_coefficient(aggregated_risk: f64, cfg: &RewardConfig) -> f64 {
    (cfg.gamma_b_min + cfg.risk_to_gamma_scale * aggregated_risk)
        .clamp(cfg.gamma_b_min, cfg.gamma_b_max)
}

/// Convex mix of historical and current rewards.
pub fn balanced_reward(r_ave: f64, r_current: f64, gamma_b: f64) -> f64 {
    (1.0 - gamma_b) * r_ave + gamma_b * r_current
}

/// The historical reward in the configured form. Before any step completes
/// both forms report zero, which makes the first balanced reward well
/// defined.
pub fn historical_reward(state: &RewardState, cfg: &RewardConfig) -> f64 {
    match cfg.historical_form {
        HistoricalForm::Ema => state.r_ave_ema,
        HistoricalForm::Mean => historical_mean(state).unwrap_or(0.0),
    }
}
