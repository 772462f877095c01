//! The online protocol every learner speaks, and the driver that runs a
//! learner over an instance.
//!
//! Protocol per round: `play` a distribution over all K experts (zero mass
//! on the dead), `observe` the loss vector, then receive zero or more
//! `on_death` notifications for experts dying at the end of the round.
//! Nights that kill several experts are serialized: the first death rides
//! on the real round, every further death is preceded by `observe_dummy`,
//! a zero-loss round whose clock does not advance. For most learners a
//! zero-loss frozen-clock round changes nothing, hence the default no-op.

use crate::instance::Instance;
use crate::regret::{regret_report, RunRecord};
use crate::Result;

/// Which rule currently decides the played distribution of an adaptive
/// learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Point mass on the leader (infinite learning rate).
    Ftl,
    /// Finite adaptive rate.
    AdaHedge,
}

/// Optional per-round diagnostics from adaptive learners.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveDiag {
    pub regime: Regime,
    /// Gap accumulated over rounds played in the FTL regime.
    pub gap_ftl: f64,
    /// Gap accumulated over rounds played at finite adaptive rates.
    pub gap_adahedge: f64,
}

pub trait DyingLearner {
    /// Distribution over all K experts for the current round.
    fn play(&self) -> Vec<f64>;

    /// Feed the current round's losses (length K; entries for dead experts
    /// are present but ignored).
    fn observe(&mut self, losses: &[f64]) -> Result<()>;

    /// Expert `expert` dies at the end of the round just observed.
    fn on_death(&mut self, expert: usize) -> Result<()>;

    /// An inserted zero-loss round with a frozen rate clock. A zero loss
    /// vector updates no weights and a frozen clock advances no schedule,
    /// so the default does nothing.
    fn observe_dummy(&mut self) -> Result<()> {
        Ok(())
    }

    fn diag(&self) -> Option<AdaptiveDiag> {
        None
    }
}

/// Runs the full protocol over `instance` and scores the result.
pub fn drive<L: DyingLearner + ?Sized>(learner: &mut L, instance: &Instance) -> Result<RunRecord> {
    drive_observed(learner, instance, |_, _| {})
}

/// [`drive`] with a probe called after each fully processed round (losses
/// and deaths applied), for trace collection.
pub fn drive_observed<L, F>(learner: &mut L, instance: &Instance, mut probe: F) -> Result<RunRecord>
where
    L: DyingLearner + ?Sized,
    F: FnMut(usize, &L),
{
    let t_max = instance.horizon();
    let mut plays = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        plays.push(learner.play());
        learner.observe(instance.losses.round(t))?;
        let dying = instance.schedule.deaths_on(t);
        for (n, &j) in dying.iter().enumerate() {
            if n > 0 {
                learner.observe_dummy()?;
            }
            learner.on_death(j)?;
        }
        probe(t, learner);
    }
    regret_report(&plays, &instance.losses, &instance.schedule)
}
