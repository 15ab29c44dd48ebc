//! Single-context linear bandit oracles over a fixed, finite arm set.
//!
//! The reductions only see an oracle through [`LinearBanditOracle`]: ask for
//! an arm index, later hand back the (possibly delayed) reward of an arm.

mod design;
mod pe;
mod ucb;

pub use design::{g_optimal_design, leverages, Design, DESIGN_MAX_ITERS, DESIGN_TOLERANCE};
pub use pe::{PeConfig, PeOracle};
pub use ucb::{bias_level, FixedArmUcb, Radius, UcbOracle};

pub trait LinearBanditOracle {
    /// Index of the arm to play next.
    fn select(&mut self) -> usize;

    /// Feed back the reward observed for `arm`.
    fn observe(&mut self, arm: usize, reward: f64);

    /// Feed back a reward for an arm the oracle did not choose itself
    /// (warm-start rounds of the reductions).
    fn observe_unsolicited(&mut self, arm: usize, reward: f64) {
        self.observe(arm, reward)
    }

    /// Number of observations ingested so far.
    fn observations(&self) -> usize;
}

impl<O: LinearBanditOracle + ?Sized> LinearBanditOracle for &mut O {
    fn select(&mut self) -> usize {
        (**self).select()
    }
    fn observe(&mut self, arm: usize, reward: f64) {
        (**self).observe(arm, reward)
    }
    fn observe_unsolicited(&mut self, arm: usize, reward: f64) {
        (**self).observe_unsolicited(arm, reward)
    }
    fn observations(&self) -> usize {
        (**self).observations()
    }
}
