//! CFR: one local learner per information set, driven by counterfactual
//! utilities through the driver's learning setups.

use super::{BehavioralProfile, GameTree};
use crate::driver::{LearnerBank, RunConfig, SelfPlay, Setup};
use crate::error::Result;
use crate::game::Player;
use crate::learner::LearnerSpec;

/// Per-infoset learners for both players together with a setup.
pub type CfrContext<'a> = SelfPlay<'a, GameTree>;

/// A context where every infoset of both players runs `spec`.
pub fn cfr_context<'a>(tree: &'a GameTree, spec: LearnerSpec, setup: Setup) -> Result<CfrContext<'a>> {
    let mut cfg = RunConfig::new(spec, setup, 1);
    cfg.monitors = false;
    SelfPlay::from_config(tree, &cfg)
}

/// Banks for `player` with one `spec` learner per infoset.
pub fn infoset_learners(tree: &GameTree, player: Player, spec: LearnerSpec) -> Result<LearnerBank> {
    LearnerBank::from_spec(&spec, &tree.layout(player))
}

/// Runs one iteration and returns the profile played in it.
pub fn cfr_iteration(ctx: &mut CfrContext<'_>) -> Result<BehavioralProfile> {
    let round = ctx.step()?;
    Ok(BehavioralProfile {
        x: round.x,
        y: round.y,
    })
}
