//! Hedge over orderings, simulated in O(K) state via grouped weights.
//!
//! All orderings currently playing the same expert form one group. The
//! group's total non-normalized weight factors as h * c: h is the group
//! total as of the last night (or the initial head count), and c is the
//! loss factor shared by every member since then, because members of a
//! group suffer identical losses between nights. On a death the dying
//! group's mass is redistributed to the survivors: equally when the dying
//! order is unknown upfront (every survivor inherits the same share of
//! orderings), proportionally to initial head counts when it is known.
//! Then c resets to 1, which is exactly a regrouping.
//!
//! The unknown-order learner simulates Hedge over all K! orderings; the
//! known-order learner simulates Hedge over one representative per
//! behavior class, 2^D * A of them for D single-death nights and A
//! immortal experts. Both are certified against the explicit oracle in
//! `oracle`.

use crate::adaptive::{mix_loss, AdaHedgeState, FtlState};
use crate::hedge::Rate;
use crate::instance::{DyingSchedule, Instance, LossStream};
use crate::learner::{AdaptiveDiag, DyingLearner, Regime};
use crate::math::{dot, log_add_exp, log_sum_exp_masked, ln_factorial, softmax_masked};
use crate::{Error, Result};
use std::fmt::Write as _;

/// Initial head counts for the known-order learner: with D declared deaths
/// and A = k - D immortal experts, the expert dying s-th heads 2^(D-s) * A
/// behavior classes and each immortal expert heads exactly one.
pub fn hpk_group_sizes(k: usize, declared_deaths: usize) -> Result<Vec<u128>> {
    if declared_deaths >= k {
        return Err(Error::invalid("at least one expert must outlive the declared order"));
    }
    let a = (k - declared_deaths) as u128;
    let mut g = Vec::with_capacity(k);
    for s in 1..=declared_deaths {
        let shift = (declared_deaths - s) as u32;
        let v = 1u128
            .checked_shl(shift)
            .and_then(|x| x.checked_mul(a))
            .ok_or_else(|| Error::capacity("group size overflows u128"))?;
        g.push(v);
    }
    g.extend(std::iter::repeat(1).take(k - declared_deaths));
    Ok(g)
}

/// How dying mass is redistributed.
#[derive(Debug, Clone)]
enum Policy {
    /// Equal split over the survivors (order unknown upfront).
    Unknown,
    /// Proportional to initial head counts, deaths must follow the
    /// declared order.
    Known {
        order: Vec<usize>,
        next: usize,
        log_g: Vec<f64>,
    },
}

/// The grouped (h, c) weight state plus death handling; play/rate logic
/// lives in the learners wrapping it.
#[derive(Debug, Clone)]
pub struct GroupCore {
    k: usize,
    alive: Vec<bool>,
    n_alive: usize,
    log_h: Vec<f64>,
    log_c: Vec<f64>,
    policy: Policy,
    /// ln of the number of simulated comparator orderings.
    log_comparators: f64,
}

impl GroupCore {
    /// All K! orderings; every expert heads (K-1)! of them.
    pub fn unknown_order(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("need at least one expert"));
        }
        Ok(GroupCore {
            k,
            alive: vec![true; k],
            n_alive: k,
            log_h: vec![ln_factorial(k - 1); k],
            log_c: vec![0.0; k],
            policy: Policy::Unknown,
            log_comparators: ln_factorial(k),
        })
    }

    /// One representative per behavior class of the declared single-death
    /// dying order (a proper subset of experts; the rest never die).
    pub fn known_order(k: usize, dying_order: &[usize]) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("need at least one expert"));
        }
        let mut seen = vec![false; k];
        for &e in dying_order {
            if e >= k || seen[e] {
                return Err(Error::invalid(format!(
                    "dying order names expert {e} twice or out of range"
                )));
            }
            seen[e] = true;
        }
        let d = dying_order.len();
        if d >= k {
            return Err(Error::invalid("dying order must leave a survivor"));
        }
        let a = (k - d) as f64;
        let mut log_g = vec![0.0; k]; // immortal experts head one class each
        for (s, &e) in dying_order.iter().enumerate() {
            log_g[e] = ((d - 1 - s) as f64) * std::f64::consts::LN_2 + a.ln();
        }
        Ok(GroupCore {
            k,
            alive: vec![true; k],
            n_alive: k,
            log_h: log_g.clone(),
            log_c: vec![0.0; k],
            policy: Policy::Known {
                order: dying_order.to_vec(),
                next: 0,
                log_g,
            },
            log_comparators: (d as f64) * std::f64::consts::LN_2 + a.ln(),
        })
    }

    pub fn num_experts(&self) -> usize {
        self.k
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    pub fn log_h(&self) -> &[f64] {
        &self.log_h
    }

    pub fn log_c(&self) -> &[f64] {
        &self.log_c
    }

    pub fn log_comparators(&self) -> f64 {
        self.log_comparators
    }

    /// Softmax of log(h) + log(c) over the alive experts.
    pub fn distribution(&self) -> Vec<f64> {
        let combined: Vec<f64> = (0..self.k).map(|i| self.log_h[i] + self.log_c[i]).collect();
        softmax_masked(&combined, &self.alive)
    }

    /// ln of the total non-normalized mass; conserved across deaths.
    pub fn total_log_mass(&self) -> f64 {
        let combined: Vec<f64> = (0..self.k).map(|i| self.log_h[i] + self.log_c[i]).collect();
        log_sum_exp_masked(&combined, &self.alive)
    }

    /// c_i *= e^(-eta * loss_i) on the alive experts.
    pub fn apply_losses(&mut self, eta: f64, losses: &[f64]) -> Result<()> {
        if losses.len() != self.k {
            return Err(Error::invalid("loss vector length mismatch"));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::invalid(format!("bad learning rate {eta}")));
        }
        for (i, &l) in losses.iter().enumerate() {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::invalid(format!("loss {l} outside [0,1] for expert {i}")));
            }
            if self.alive[i] {
                self.log_c[i] -= eta * l;
            }
        }
        Ok(())
    }

    /// Removes `j`, redistributes its mass per the policy, and resets c.
    pub fn on_death(&mut self, j: usize) -> Result<()> {
        if j >= self.k || !self.alive[j] {
            return Err(Error::contract(format!("expert {j} is not alive")));
        }
        if self.n_alive < 2 {
            return Err(Error::contract("last alive expert cannot die"));
        }
        let dying_mass = self.log_h[j] + self.log_c[j];
        self.alive[j] = false;
        self.n_alive -= 1;
        match &mut self.policy {
            Policy::Unknown => {
                let share = dying_mass - (self.n_alive as f64).ln();
                for i in 0..self.k {
                    if self.alive[i] {
                        self.log_h[i] = log_add_exp(self.log_h[i] + self.log_c[i], share);
                        self.log_c[i] = 0.0;
                    }
                }
            }
            Policy::Known { order, next, log_g } => {
                if order.get(*next) != Some(&j) {
                    // restore state before failing: callers may report it
                    self.alive[j] = true;
                    self.n_alive += 1;
                    return Err(Error::contract(format!(
                        "death of expert {j} breaks the declared dying order (expected {:?})",
                        order.get(*next)
                    )));
                }
                *next += 1;
                let denom = log_sum_exp_masked(log_g, &self.alive);
                for i in 0..self.k {
                    if self.alive[i] {
                        let frac = log_g[i] - denom;
                        self.log_h[i] =
                            log_add_exp(self.log_h[i] + self.log_c[i], dying_mass + frac);
                        self.log_c[i] = 0.0;
                    }
                }
            }
        }
        Ok(())
    }

    /// Human-readable (h, c) dump for failure reports.
    pub fn snapshot(&self) -> String {
        let mut s = String::new();
        for i in 0..self.k {
            let _ = writeln!(
                s,
                "expert {}: alive={} log_h={:.17e} log_c={:.17e}",
                i, self.alive[i], self.log_h[i], self.log_c[i]
            );
        }
        s
    }
}

/// Hedge over orderings with a rate schedule; `Rate::Infinite` plays the
/// clamped-loss leader, `Rate::AdaHedge` adapts the rate to the mix-loss
/// gap.
#[derive(Debug, Clone)]
pub struct GroupedLearner {
    core: GroupCore,
    rate: Rate,
    elapsed: usize,
    ftl: FtlState,
    ada: Option<AdaHedgeState>,
}

impl GroupedLearner {
    /// Unknown dying order: simulates Hedge over all K! orderings.
    pub fn hpu(k: usize, rate: Rate) -> Result<Self> {
        GroupedLearner::over(GroupCore::unknown_order(k)?, rate)
    }

    /// Known dying order: simulates Hedge over the effective orderings.
    pub fn hpk(k: usize, dying_order: &[usize], rate: Rate) -> Result<Self> {
        GroupedLearner::over(GroupCore::known_order(k, dying_order)?, rate)
    }

    fn over(core: GroupCore, rate: Rate) -> Result<Self> {
        if let Rate::Fixed(eta) = rate {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(Error::invalid(format!("fixed rate must be finite positive, got {eta}")));
            }
        }
        let k = core.num_experts();
        let ada = match rate {
            Rate::AdaHedge => Some(AdaHedgeState::new(core.log_comparators())),
            _ => None,
        };
        Ok(GroupedLearner {
            core,
            rate,
            elapsed: 0,
            ftl: FtlState::new(k)?,
            ada,
        })
    }

    /// The fixed rate sqrt(2 ln(K!) / T) suggested for the unknown-order
    /// learner when the horizon is known.
    pub fn hpu_default_rate(k: usize, horizon: usize) -> Rate {
        let log_n = ln_factorial(k);
        fixed_or_zero(log_n, horizon)
    }

    /// The fixed rate sqrt(2 ln(2^D * A) / T) for the known-order learner.
    pub fn hpk_default_rate(k: usize, declared_deaths: usize, horizon: usize) -> Rate {
        let a = (k - declared_deaths) as f64;
        let log_n = declared_deaths as f64 * std::f64::consts::LN_2 + a.ln();
        fixed_or_zero(log_n, horizon)
    }

    pub fn core(&self) -> &GroupCore {
        &self.core
    }

    pub fn ftl(&self) -> &FtlState {
        &self.ftl
    }

    /// Finite rate for the upcoming round, if the schedule has one.
    fn current_rate(&self) -> Result<Option<f64>> {
        match self.rate {
            Rate::Fixed(_) | Rate::Anytime { .. } => Ok(Some(self.rate.value_at(self.elapsed)?)),
            Rate::Infinite => Ok(None),
            Rate::AdaHedge => {
                let ada = self.ada.as_ref().expect("adahedge state");
                Ok(if ada.gap() > 0.0 { Some(ada.rate()) } else { None })
            }
        }
    }

    fn leader_point_mass(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.core.num_experts()];
        p[self.ftl.leader()] = 1.0;
        p
    }
}

impl DyingLearner for GroupedLearner {
    fn play(&self) -> Vec<f64> {
        match self.current_rate().expect("rate") {
            Some(_) => self.core.distribution(),
            // infinite rate: all mass sits on the leading group
            None => self.leader_point_mass(),
        }
    }

    fn observe(&mut self, losses: &[f64]) -> Result<()> {
        let eta = self.current_rate()?;
        let played = if self.ada.is_some() { Some(self.play()) } else { None };
        let prev_best = self.ftl.best_loss();
        self.ftl.absorb(losses)?;
        if let Some(eta) = eta {
            self.core.apply_losses(eta, losses)?;
        } else {
            // still validate what the update would have checked
            if losses.len() != self.core.num_experts()
                || losses.iter().any(|l| !(0.0..=1.0).contains(l))
            {
                return Err(Error::invalid("losses must be length K in [0,1]"));
            }
        }
        if let Some(ada) = &mut self.ada {
            let played = played.expect("distribution for gap accounting");
            let learner_loss = dot(&played, losses);
            // the infinite-rate mix loss is the increase of the best
            // comparator's cumulative loss; the clamped FTL minimum tracks
            // exactly that quantity
            let mix = match eta {
                Some(eta) => mix_loss(&played, losses, eta)?,
                None => self.ftl.best_loss() - prev_best,
            };
            ada.record(learner_loss, mix);
        }
        self.elapsed += 1;
        Ok(())
    }

    fn on_death(&mut self, expert: usize) -> Result<()> {
        self.core.on_death(expert)?;
        self.ftl.on_death(expert)?;
        Ok(())
    }

    fn diag(&self) -> Option<AdaptiveDiag> {
        match (&self.rate, &self.ada) {
            (Rate::AdaHedge, Some(ada)) => Some(AdaptiveDiag {
                regime: if ada.gap() > 0.0 { Regime::AdaHedge } else { Regime::Ftl },
                gap_ftl: 0.0,
                gap_adahedge: ada.gap(),
            }),
            (Rate::Infinite, _) => Some(AdaptiveDiag {
                regime: Regime::Ftl,
                gap_ftl: 0.0,
                gap_adahedge: 0.0,
            }),
            _ => None,
        }
    }
}

fn fixed_or_zero(log_n: f64, horizon: usize) -> Rate {
    let eta = (2.0 * log_n / horizon.max(1) as f64).sqrt();
    if eta > 0.0 {
        Rate::Fixed(eta)
    } else {
        // a single comparator: any rate acts the same, use a frozen zero
        Rate::Anytime { c: 2.0, log_n: 0.0 }
    }
}

/// A multi-death instance rewritten so every night kills exactly one
/// expert: each extra death of a night gets its own inserted zero-loss
/// round. Distributions collected on the expanded instance project back to
/// the original rounds through `round_map`.
#[derive(Debug, Clone)]
pub struct DummyExpansion {
    pub instance: Instance,
    /// For each expanded round (0-based index), the original 1-based round
    /// it belongs to.
    pub round_map: Vec<usize>,
    /// True for inserted rounds.
    pub is_dummy: Vec<bool>,
}

impl DummyExpansion {
    /// Keeps only the rows of real rounds, restoring original-horizon
    /// indexing.
    pub fn project<T: Clone>(&self, per_round: &[T]) -> Vec<T> {
        per_round
            .iter()
            .zip(&self.is_dummy)
            .filter(|(_, &d)| !d)
            .map(|(v, _)| v.clone())
            .collect()
    }
}

/// Serializes multi-death nights into single-death nights separated by
/// zero-loss rounds. Schedules whose nights all kill one expert come back
/// unchanged.
pub fn preprocess_dummy_rounds(instance: &Instance) -> Result<DummyExpansion> {
    let k = instance.num_experts();
    let t = instance.horizon();
    let extra: usize = instance
        .schedule
        .death_counts()
        .iter()
        .map(|d| d - 1)
        .sum();
    let t_exp = t + extra;
    let mut data = Vec::with_capacity(k * t_exp);
    let mut death_round = vec![None; k];
    let mut round_map = Vec::with_capacity(t_exp);
    let mut is_dummy = Vec::with_capacity(t_exp);
    for t0 in 1..=t {
        data.extend_from_slice(instance.losses.round(t0));
        round_map.push(t0);
        is_dummy.push(false);
        let dying = instance.schedule.deaths_on(t0);
        for (n, &j) in dying.iter().enumerate() {
            if n > 0 {
                data.extend(std::iter::repeat(0.0).take(k));
                round_map.push(t0);
                is_dummy.push(true);
            }
            death_round[j] = Some(round_map.len());
        }
    }
    let expanded = Instance::new(
        LossStream::new(k, t_exp, data)?,
        DyingSchedule::new(k, t_exp, death_round)?,
    )?;
    Ok(DummyExpansion {
        instance: expanded,
        round_map,
        is_dummy,
    })
}

/// Runs a learner over an expanded instance, feeding inserted rounds
/// through `observe_dummy` so the rate clock stays frozen, and returns the
/// distributions of every expanded round.
pub fn drive_expanded<L: DyingLearner + ?Sized>(
    learner: &mut L,
    expansion: &DummyExpansion,
) -> Result<Vec<Vec<f64>>> {
    let instance = &expansion.instance;
    let mut plays = Vec::with_capacity(instance.horizon());
    for t in 1..=instance.horizon() {
        plays.push(learner.play());
        if expansion.is_dummy[t - 1] {
            learner.observe_dummy()?;
        } else {
            learner.observe(instance.losses.round(t))?;
        }
        for j in instance.schedule.deaths_on(t) {
            learner.on_death(j)?;
        }
    }
    Ok(plays)
}
