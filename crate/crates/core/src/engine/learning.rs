//! Temporal-difference utility learning.
//!
//! A production's utility moves a fraction `alpha` of the way toward the
//! reward it just received:
//!
//! ```text
//! U(n) = U(n-1) + alpha * (R(n) - U(n-1))
//! ```
//!
//! The reward a production sees is discounted by the simulated seconds that
//! have passed since it was selected, so rules that fired early in a decision
//! round receive less credit (or a larger penalty) than the rule that ended
//! it.

use num_traits::Float;

/// One learning step. Generic so the engine can run in single precision
/// (matching traces produced by the reference Lisp implementation) while
/// analyses can use `f64`.
pub fn td_update<T: Float>(previous: T, reward: T, alpha: T) -> T {
    previous + alpha * (reward - previous)
}

/// Reward minus the time elapsed since the production was selected.
pub fn effective_reward<T: Float>(reward: T, seconds_since_selection: T) -> T {
    reward - seconds_since_selection
}
