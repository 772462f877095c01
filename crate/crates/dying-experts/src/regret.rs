//! Regret accounting: best ordering in hindsight and run records.
//!
//! Ranking regret compares the learner's cumulative loss against the best
//! ordering, computed by the forward clamp recursion instead of scanning
//! all K! permutations: every alive expert accumulates its own loss, and
//! when expert j dies every alive value above j's is pulled down to it.
//! After each round the alive values are exactly the per-current-expert
//! minima over all orderings, bit for bit the same floats as sequential
//! per-ordering accumulation, because min(a, b) + c = min(a + c, b + c)
//! holds in floating point and clamps are copies. Work is O(K * T).
//!
//! Classical regret compares against the best single expert. Mid-game
//! deaths make the comparator set ambiguous, so both readings are reported:
//! best over all initial experts (summing their full loss columns, dead or
//! not) and best over the always-alive experts only.

use crate::instance::{DyingSchedule, LossStream};
use crate::math::dot;
use crate::ordering::Behavior;
use crate::{Error, Result};

/// Tolerance for "sums to one" and "no mass on the dead" checks.
const MASS_TOL: f64 = 1e-12;

/// Everything measurable about one learner run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    /// Played distribution per round, T x K.
    pub distributions: Vec<Vec<f64>>,
    /// Learner loss per round, p_t . l_t.
    pub round_loss: Vec<f64>,
    /// Running sums of `round_loss`.
    pub cumulative_loss: Vec<f64>,
    /// Loss of the best ordering in hindsight.
    pub best_ordering_loss: f64,
    /// Total learner loss minus `best_ordering_loss`.
    pub ranking_regret: f64,
    /// Total learner loss minus the best full loss column over all experts.
    pub classical_regret_all: f64,
    /// Same, with comparators restricted to experts that never die.
    pub classical_regret_surviving: f64,
}

impl RunRecord {
    pub fn total_loss(&self) -> f64 {
        self.cumulative_loss.last().copied().unwrap_or(0.0)
    }
}

/// Minimum cumulative loss over all orderings, with a witness behavior
/// realizing it. Forward clamp recursion as described in the module docs.
pub fn best_ordering_loss(
    losses: &LossStream,
    schedule: &DyingSchedule,
) -> Result<(f64, Behavior)> {
    check_dims(losses, schedule)?;
    let k = losses.num_experts();
    let t_max = losses.horizon();
    let mut cum = vec![0.0f64; k];
    // last clamp that replaced each expert's value: (round, source)
    let mut inherited: Vec<Option<(usize, usize)>> = vec![None; k];
    let mut alive = vec![true; k];
    for t in 1..=t_max {
        let row = losses.round(t);
        for i in 0..k {
            if alive[i] {
                cum[i] += row[i];
            }
        }
        for j in schedule.deaths_on(t) {
            alive[j] = false;
            for i in 0..k {
                if alive[i] && cum[i] > cum[j] {
                    cum[i] = cum[j];
                    inherited[i] = Some((t, j));
                }
            }
        }
    }

    let mut best_expert = usize::MAX;
    let mut total = f64::INFINITY;
    for i in 0..k {
        if alive[i] && cum[i] < total {
            total = cum[i];
            best_expert = i;
        }
    }

    // walk the inheritance chain backwards; a source is dead from its
    // clamp round on, so its own record is frozen
    let mut plays = vec![0usize; t_max];
    let mut cur = best_expert;
    let mut end = t_max;
    loop {
        match inherited[cur] {
            Some((round, source)) => {
                for t in round + 1..=end {
                    plays[t - 1] = cur;
                }
                cur = source;
                end = round;
            }
            None => {
                for t in 1..=end {
                    plays[t - 1] = cur;
                }
                break;
            }
        }
    }
    Ok((total, Behavior::from_plays(plays)))
}

/// Scores a sequence of played distributions against an instance.
pub fn regret_report(
    plays: &[Vec<f64>],
    losses: &LossStream,
    schedule: &DyingSchedule,
) -> Result<RunRecord> {
    check_dims(losses, schedule)?;
    let k = losses.num_experts();
    let t_max = losses.horizon();
    if plays.len() != t_max {
        return Err(Error::invalid(format!(
            "{} distributions for horizon {}",
            plays.len(),
            t_max
        )));
    }

    let mut round_loss = Vec::with_capacity(t_max);
    let mut cumulative_loss = Vec::with_capacity(t_max);
    let mut running = 0.0;
    for (t0, p) in plays.iter().enumerate() {
        let t = t0 + 1;
        if p.len() != k {
            return Err(Error::invalid(format!("round {t}: distribution has {} entries", p.len())));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > MASS_TOL || p.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid(format!(
                "round {t}: not a probability distribution (sum {sum})"
            )));
        }
        let dead_mass: f64 = (0..k)
            .filter(|&i| !schedule.is_alive(i, t))
            .map(|i| p[i])
            .sum();
        if dead_mass > MASS_TOL {
            return Err(Error::contract(format!(
                "round {t}: mass {dead_mass:e} on dead experts"
            )));
        }
        let l = dot(p, losses.round(t));
        running += l;
        round_loss.push(l);
        cumulative_loss.push(running);
    }

    let (best_ord, _) = best_ordering_loss(losses, schedule)?;
    let column_sum = |i: usize| -> f64 { (1..=t_max).map(|t| losses.loss(i, t)).sum() };
    let best_all = (0..k).map(column_sum).fold(f64::INFINITY, f64::min);
    let best_surviving = (0..k)
        .filter(|&i| schedule.death_round(i).is_none())
        .map(column_sum)
        .fold(f64::INFINITY, f64::min);

    Ok(RunRecord {
        ranking_regret: running - best_ord,
        classical_regret_all: running - best_all,
        classical_regret_surviving: running - best_surviving,
        best_ordering_loss: best_ord,
        distributions: plays.to_vec(),
        round_loss,
        cumulative_loss,
    })
}

fn check_dims(losses: &LossStream, schedule: &DyingSchedule) -> Result<()> {
    if losses.num_experts() != schedule.num_experts() || losses.horizon() != schedule.horizon() {
        return Err(Error::invalid("losses and schedule disagree on K or T"));
    }
    Ok(())
}
