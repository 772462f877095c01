//! Orderings, behaviors, and the effective-orderings combinatorics.
//!
//! An ordering plays its first still-alive expert every round, so two
//! orderings are interchangeable exactly when they realize the same play
//! sequence (behavior) under a given schedule. The number of behavior
//! classes is A * prod_s (d_s + 1) over nights s, where d_s experts die on
//! night s and A experts never die; it peaks at 2^(K-1) when every night
//! kills exactly one expert and one expert survives.

use crate::instance::DyingSchedule;
use crate::{Error, Result};

/// Default guard for [`enumerate_effective`].
pub const DEFAULT_ENUM_CAP: usize = 1 << 20;

/// A permutation of the K experts, by 0-based index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ordering {
    perm: Vec<usize>,
}

impl Ordering {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let k = perm.len();
        let mut seen = vec![false; k];
        for &e in &perm {
            if e >= k || seen[e] {
                return Err(Error::invalid(format!(
                    "not a permutation of 0..{}: {:?}",
                    k, perm
                )));
            }
            seen[e] = true;
        }
        Ok(Ordering { perm })
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// The earliest element of the permutation that is still alive.
    pub fn first_alive(&self, alive: &[bool]) -> Result<usize> {
        self.perm
            .iter()
            .copied()
            .find(|&e| alive[e])
            .ok_or_else(|| Error::contract("first_alive over an empty alive set"))
    }

    /// The play sequence this ordering realizes under `schedule`.
    pub fn behavior_of(&self, schedule: &DyingSchedule) -> Behavior {
        let t = schedule.horizon();
        let mut plays = Vec::with_capacity(t);
        // the pointer only moves forward: deaths are permanent
        let mut pos = 0;
        for round in 1..=t {
            while !schedule.is_alive(self.perm[pos], round) {
                pos += 1;
            }
            plays.push(self.perm[pos]);
        }
        Behavior { plays }
    }
}

/// A length-T sequence of played experts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Behavior {
    plays: Vec<usize>,
}

impl Behavior {
    pub fn from_plays(plays: Vec<usize>) -> Self {
        Behavior { plays }
    }

    pub fn plays(&self) -> &[usize] {
        &self.plays
    }

    pub fn play_at(&self, t: usize) -> usize {
        self.plays[t - 1]
    }
}

/// A * prod_s (d_s + 1): the number of behavior-distinct orderings for a
/// game with per-night death counts `d` and `a` immortal experts.
pub fn count_effective(d: &[usize], a: usize) -> Result<u128> {
    if a == 0 {
        return Err(Error::invalid("survivor count must be at least 1"));
    }
    if d.iter().any(|&ds| ds == 0) {
        return Err(Error::invalid("each night must kill at least one expert"));
    }
    let mut n: u128 = a as u128;
    for &ds in d {
        n = n
            .checked_mul(ds as u128 + 1)
            .ok_or_else(|| Error::capacity("effective-ordering count overflows u128"))?;
    }
    Ok(n)
}

/// [`count_effective`] with the counts read off a schedule.
pub fn count_effective_for(schedule: &DyingSchedule) -> Result<u128> {
    count_effective(&schedule.death_counts(), schedule.survivor_count())
}

/// One ordering per behavior class, built recursively over nights: a class
/// either burns through an expert that dies on the next night and then
/// continues as a class of the later game, or it skips straight to a class
/// of the later game. Orderings are padded to full length with the unused
/// experts in ascending index order; padding never affects behavior.
pub fn enumerate_effective(schedule: &DyingSchedule, cap: usize) -> Result<Vec<Ordering>> {
    let n = count_effective_for(schedule)?;
    if n > cap as u128 {
        return Err(Error::capacity(format!(
            "{} effective orderings exceed cap {}",
            n, cap
        )));
    }
    let k = schedule.num_experts();
    let events = schedule.death_events();
    let survivors: Vec<usize> = (0..k).filter(|&i| schedule.death_round(i).is_none()).collect();

    // plays-lists for the game starting after the last night
    let mut lists: Vec<Vec<usize>> = survivors.iter().map(|&e| vec![e]).collect();
    // peel nights from last to first
    for (_, dying) in events.iter().rev() {
        let mut next = Vec::with_capacity(lists.len() * (dying.len() + 1));
        for &e in dying {
            for tail in &lists {
                let mut l = Vec::with_capacity(tail.len() + 1);
                l.push(e);
                l.extend_from_slice(tail);
                next.push(l);
            }
        }
        next.extend(lists);
        lists = next;
    }
    debug_assert_eq!(lists.len() as u128, n);

    lists
        .into_iter()
        .map(|mut l| {
            let mut used = vec![false; k];
            for &e in &l {
                used[e] = true;
            }
            l.extend((0..k).filter(|&e| !used[e]));
            Ordering::new(l)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn mask(k: usize, alive: &[usize]) -> Vec<bool> {
        let mut m = vec![false; k];
        for &i in alive {
            m[i] = true;
        }
        m
    }

    #[test]
    fn first_alive_walks_the_permutation() {
        // expert labels here are 0-based throughout
        let pi = Ordering::new(vec![1, 0, 2]).unwrap();
        assert_eq!(pi.first_alive(&mask(3, &[0, 1, 2])).unwrap(), 1);
        assert_eq!(pi.first_alive(&mask(3, &[0, 2])).unwrap(), 0);
        let pi2 = Ordering::new(vec![0, 1, 2]).unwrap();
        assert_eq!(pi2.first_alive(&mask(3, &[2])).unwrap(), 2);
        assert!(pi2.first_alive(&mask(3, &[])).is_err());
    }

    #[test]
    fn ordering_rejects_non_permutations() {
        assert!(Ordering::new(vec![0, 0, 1]).is_err());
        assert!(Ordering::new(vec![0, 3, 1]).is_err());
    }

    #[test]
    fn behavior_upgrades_at_deaths() {
        let s = DyingSchedule::new(3, 4, vec![Some(2), None, None]).unwrap();
        let pi = Ordering::new(vec![0, 2, 1]).unwrap();
        assert_eq!(pi.behavior_of(&s).plays(), &[0, 0, 2, 2]);
    }

    #[test]
    fn behavior_without_deaths_is_constant() {
        let s = DyingSchedule::empty(3, 5);
        let pi = Ordering::new(vec![2, 0, 1]).unwrap();
        assert_eq!(pi.behavior_of(&s).plays(), &[2; 5]);
    }

    #[test]
    fn behaviors_collapse_across_irrelevant_tails() {
        // e_0 then e_1 die; orderings differing only after both heads have
        // died realize identical behaviors
        let s = DyingSchedule::new(3, 4, vec![Some(1), Some(2), None]).unwrap();
        let a = Ordering::new(vec![0, 1, 2]).unwrap();
        let distinct: HashSet<Behavior> = [vec![0, 1, 2], vec![0, 2, 1]]
            .into_iter()
            .map(|p| Ordering::new(p).unwrap().behavior_of(&s))
            .collect();
        // (0,1,2) and (0,2,1) differ: after e_0 dies they pick 1 vs 2
        assert_eq!(distinct.len(), 2);
        assert_eq!(a.behavior_of(&s).plays(), &[0, 1, 2, 2]);
    }

    #[test]
    fn count_effective_known_values() {
        assert_eq!(count_effective(&[], 5).unwrap(), 5);
        assert_eq!(count_effective(&[1, 1, 1], 1).unwrap(), 8);
        assert_eq!(count_effective(&[2], 2).unwrap(), 6);
        assert!(count_effective(&[1], 0).is_err());
        assert!(count_effective(&[0], 1).is_err());
    }

    #[test]
    fn enumerate_matches_count_and_heads() {
        // K=3, single deaths of e_0 then e_1: 4 classes, heads (2,1,1)
        let s = DyingSchedule::new(3, 4, vec![Some(1), Some(2), None]).unwrap();
        let effs = enumerate_effective(&s, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(effs.len(), 4);
        let mut heads = [0usize; 3];
        for pi in &effs {
            heads[pi.perm()[0]] += 1;
        }
        assert_eq!(heads, [2, 1, 1]);

        // K=4, single deaths of e_0, e_1, e_2: 8 classes, heads (4,2,1,1)
        let s = DyingSchedule::new(4, 5, vec![Some(1), Some(2), Some(3), None]).unwrap();
        let effs = enumerate_effective(&s, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(effs.len(), 8);
        let mut heads = [0usize; 4];
        for pi in &effs {
            heads[pi.perm()[0]] += 1;
        }
        assert_eq!(heads, [4, 2, 1, 1]);
    }

    #[test]
    fn enumerate_no_deaths_is_one_per_head() {
        let s = DyingSchedule::empty(4, 3);
        let effs = enumerate_effective(&s, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(effs.len(), 4);
        let heads: Vec<usize> = effs.iter().map(|p| p.perm()[0]).collect();
        assert_eq!(heads, vec![0, 1, 2, 3]);
    }

    #[test]
    fn enumerate_behaviors_are_pairwise_distinct() {
        let s = DyingSchedule::new(5, 7, vec![Some(2), Some(2), Some(5), None, None]).unwrap();
        let effs = enumerate_effective(&s, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(effs.len() as u128, count_effective_for(&s).unwrap());
        let behaviors: HashSet<Behavior> = effs.iter().map(|p| p.behavior_of(&s)).collect();
        assert_eq!(behaviors.len(), effs.len());
    }

    #[test]
    fn enumerate_respects_cap() {
        let s = DyingSchedule::new(4, 5, vec![Some(1), Some(2), Some(3), None]).unwrap();
        assert!(enumerate_effective(&s, 7).is_err());
        assert!(enumerate_effective(&s, 8).is_ok());
    }
}
