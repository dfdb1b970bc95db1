use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Early stopping on the per-pass training score.
///
/// Stops once the best score has not improved by more than `epsilon` for
/// `patience` consecutive passes, or when `max_passes` scores are recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub epsilon: f64,
    pub patience: usize,
    pub max_passes: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            epsilon: 0.003,
            patience: 3,
            max_passes: 30,
        }
    }
}

impl StopRule {
    /// `history[k]` is the training score after pass `k + 1`.
    pub fn evaluate(&self, history: &[f64]) -> StopDecision {
        if history.is_empty() {
            return StopDecision::Continue;
        }
        if history.len() >= self.max_passes {
            return StopDecision::Stop;
        }
        let mut best = history[0];
        let mut last_improvement = 0;
        for (k, &score) in history.iter().enumerate().skip(1) {
            if score > best + self.epsilon {
                best = score;
                last_improvement = k;
            }
        }
        if history.len() - 1 - last_improvement >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn plateau_triggers_stop() {
        let rule = StopRule::default();
        let h = [0.5, 0.9, 0.9, 0.9, 0.9];
        assert_eq!(rule.evaluate(&h[..4]), StopDecision::Continue);
        assert_eq!(rule.evaluate(&h), StopDecision::Stop);
    }

    #[test]
    fn steady_improvement_continues() {
        let rule = StopRule::default();
        let h: Vec<f64> = (0..10).map(|k| 0.1 + 0.05 * k as f64).collect();
        assert_eq!(rule.evaluate(&h), StopDecision::Continue);
    }

    #[test]
    fn max_passes_stops_constant_history() {
        let rule = StopRule {
            epsilon: 0.003,
            patience: 100,
            max_passes: 30,
        };
        assert_eq!(rule.evaluate(&[0.7; 29]), StopDecision::Continue);
        assert_eq!(rule.evaluate(&[0.7; 30]), StopDecision::Stop);
    }

    #[test]
    fn tiny_gains_do_not_reset_patience() {
        let rule = StopRule::default();
        assert_eq!(rule.evaluate(&[0.5, 0.501, 0.502, 0.503]), StopDecision::Stop);
    }
}
