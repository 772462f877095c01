//! Brute-force reference implementations.
//!
//! Nothing here is fast; everything here is simple enough to trust. The
//! explicit Hedge keeps one weight per ordering and computes expert
//! marginals by direct grouping, the dedup pass enumerates all K!
//! permutations, and the AdaHedge twin reruns the adaptive-rate recursion
//! over explicit ordering weights. The grouped learners are certified by
//! driving both sides over identical instances and comparing distributions
//! round by round.

use crate::hedge::Rate;
use crate::instance::Instance;
use crate::math::dot;
use crate::ordering::Ordering;
use crate::{Error, Result};
use itertools::Itertools;

/// Largest ordering set the explicit oracle will accept.
pub const ORACLE_CAP: usize = 1_000_000;

/// Per-ordering state: the permutation and a forward-only pointer to its
/// first alive element.
struct Tracked {
    perm: Vec<usize>,
    pos: usize,
}

impl Tracked {
    fn advance(&mut self, alive: &[bool]) -> usize {
        while !alive[self.perm[self.pos]] {
            self.pos += 1;
        }
        self.perm[self.pos]
    }
}

fn track(orderings: &[Ordering]) -> Vec<Tracked> {
    orderings
        .iter()
        .map(|o| Tracked {
            perm: o.perm().to_vec(),
            pos: 0,
        })
        .collect()
}

fn initial_log_weights(n: usize, multiplicities: Option<&[usize]>) -> Result<Vec<f64>> {
    match multiplicities {
        None => Ok(vec![0.0; n]),
        Some(m) => {
            if m.len() != n {
                return Err(Error::invalid("one multiplicity per ordering required"));
            }
            if m.iter().any(|&v| v == 0) {
                return Err(Error::invalid("multiplicities must be positive"));
            }
            Ok(m.iter().map(|&v| (v as f64).ln()).collect())
        }
    }
}

/// Hedge with one weight per ordering (optionally multiplicity-weighted);
/// returns the played expert-marginal distribution per round. Simultaneous
/// deaths are handled directly: the alive mask of each round decides every
/// ordering's current expert.
pub fn hedge_over_orderings(
    orderings: &[Ordering],
    multiplicities: Option<&[usize]>,
    instance: &Instance,
    rate: Rate,
) -> Result<Vec<Vec<f64>>> {
    if orderings.is_empty() {
        return Err(Error::invalid("need at least one ordering"));
    }
    if orderings.len() > ORACLE_CAP {
        return Err(Error::capacity(format!(
            "{} orderings exceed the oracle cap {}",
            orderings.len(),
            ORACLE_CAP
        )));
    }
    if matches!(rate, Rate::AdaHedge | Rate::Infinite) {
        return Err(Error::contract("use orderings_adahedge for adaptive rates"));
    }
    let k = instance.num_experts();
    let mut tracked = track(orderings);
    let mut log_w = initial_log_weights(orderings.len(), multiplicities)?;
    let mut out = Vec::with_capacity(instance.horizon());
    for t in 1..=instance.horizon() {
        let alive = instance.schedule.alive_mask(t);
        let current: Vec<usize> = tracked.iter_mut().map(|o| o.advance(&alive)).collect();

        let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut marginal = vec![0.0; k];
        let mut total = 0.0;
        for (lw, &e) in log_w.iter().zip(&current) {
            let w = (lw - m).exp();
            marginal[e] += w;
            total += w;
        }
        for v in &mut marginal {
            *v /= total;
        }
        out.push(marginal);

        let eta = rate.value_at(t - 1)?;
        let row = instance.losses.round(t);
        for (lw, &e) in log_w.iter_mut().zip(&current) {
            *lw -= eta * row[e];
        }
    }
    Ok(out)
}

/// The adaptive-rate twin: explicit per-ordering weights, the rate
/// ln(N)/gap recomputed each round, infinite-rate rounds playing the
/// lowest-index expert among the orderings with minimal cumulative loss
/// and accounting the mix loss as the increase of that minimum.
pub fn orderings_adahedge(
    orderings: &[Ordering],
    multiplicities: Option<&[usize]>,
    instance: &Instance,
) -> Result<Vec<Vec<f64>>> {
    if orderings.is_empty() || orderings.len() > ORACLE_CAP {
        return Err(Error::capacity("bad oracle ordering count"));
    }
    let k = instance.num_experts();
    let mut tracked = track(orderings);
    let mut log_w = initial_log_weights(orderings.len(), multiplicities)?;
    let total_comparators: f64 = match multiplicities {
        None => orderings.len() as f64,
        Some(m) => m.iter().map(|&v| v as f64).sum(),
    };
    let log_n = total_comparators.ln();
    let mut cum: Vec<f64> = vec![0.0; orderings.len()];
    let mut gap = 0.0f64;
    let mut out = Vec::with_capacity(instance.horizon());
    for t in 1..=instance.horizon() {
        let alive = instance.schedule.alive_mask(t);
        let current: Vec<usize> = tracked.iter_mut().map(|o| o.advance(&alive)).collect();
        let row = instance.losses.round(t);

        let eta = if gap > 0.0 { Some(log_n / gap) } else { None };
        let played: Vec<f64> = match eta {
            Some(_) => {
                let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut marginal = vec![0.0; k];
                let mut total = 0.0;
                for (lw, &e) in log_w.iter().zip(&current) {
                    let w = (lw - m).exp();
                    marginal[e] += w;
                    total += w;
                }
                for v in &mut marginal {
                    *v /= total;
                }
                marginal
            }
            None => {
                let best = cum.iter().copied().fold(f64::INFINITY, f64::min);
                let leader = current
                    .iter()
                    .zip(&cum)
                    .filter(|(_, &c)| c == best)
                    .map(|(&e, _)| e)
                    .min()
                    .expect("non-empty ordering set");
                let mut p = vec![0.0; k];
                p[leader] = 1.0;
                p
            }
        };
        let learner_loss = dot(&played, row);

        let prev_best = cum.iter().copied().fold(f64::INFINITY, f64::min);
        for (c, &e) in cum.iter_mut().zip(&current) {
            *c += row[e];
        }
        let new_best = cum.iter().copied().fold(f64::INFINITY, f64::min);

        let mix = match eta {
            Some(eta) => {
                // mix loss over the orderings' own distribution; both sums
                // need their own max shift, the rate can be enormous
                let before = crate::math::log_sum_exp(&log_w);
                let after: Vec<f64> = log_w
                    .iter()
                    .zip(&current)
                    .map(|(lw, &e)| lw - eta * row[e])
                    .collect();
                -(crate::math::log_sum_exp(&after) - before) / eta
            }
            None => new_best - prev_best,
        };
        gap += (learner_loss - mix).max(0.0);

        if let Some(eta) = eta {
            for (lw, &e) in log_w.iter_mut().zip(&current) {
                *lw -= eta * row[e];
            }
        }
        out.push(played);
    }
    Ok(out)
}

/// The behavior classes of all K! orderings under a schedule.
#[derive(Debug, Clone)]
pub struct BehaviorGroups {
    /// Lexicographically smallest ordering of each class, in first-seen
    /// (lexicographic) order.
    pub representatives: Vec<Ordering>,
    /// Number of orderings realizing each class's behavior.
    pub multiplicities: Vec<usize>,
}

impl BehaviorGroups {
    pub fn count(&self) -> usize {
        self.representatives.len()
    }
}

/// Enumerates all K! orderings and groups them by realized behavior.
pub fn dedup_behaviors(instance_schedule: &crate::instance::DyingSchedule) -> Result<BehaviorGroups> {
    let k = instance_schedule.num_experts();
    if k > 9 {
        return Err(Error::capacity("behavior dedup is limited to K <= 9"));
    }
    let t = instance_schedule.horizon();
    // alive masks once per round
    let masks: Vec<Vec<bool>> = (1..=t).map(|r| instance_schedule.alive_mask(r)).collect();
    let mut groups: std::collections::HashMap<Vec<u8>, usize> = std::collections::HashMap::new();
    let mut representatives = Vec::new();
    let mut multiplicities = Vec::new();
    for perm in (0..k).permutations(k) {
        let mut behavior = Vec::with_capacity(t);
        let mut pos = 0;
        for mask in &masks {
            while !mask[perm[pos]] {
                pos += 1;
            }
            behavior.push(perm[pos] as u8);
        }
        match groups.entry(behavior) {
            std::collections::hash_map::Entry::Occupied(e) => {
                multiplicities[*e.get()] += 1;
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(representatives.len());
                representatives.push(Ordering::new(perm)?);
                multiplicities.push(1);
            }
        }
    }
    Ok(BehaviorGroups {
        representatives,
        multiplicities,
    })
}

/// Round-by-round comparison of two distribution sequences.
#[derive(Debug, Clone)]
pub struct CertifyReport {
    pub pass: bool,
    pub max_gap: f64,
    /// First (1-based round, gap) exceeding the tolerance.
    pub first_divergence: Option<(usize, f64)>,
    /// Filled in by callers that can dump learner state at the divergence.
    pub snapshot: Option<String>,
}

impl CertifyReport {
    pub fn with_snapshot(mut self, snapshot: String) -> Self {
        self.snapshot = Some(snapshot);
        self
    }
}

/// Max-abs per-round gap between learner and oracle distributions.
pub fn certify(learner: &[Vec<f64>], oracle: &[Vec<f64>], tol: f64) -> Result<CertifyReport> {
    if learner.len() != oracle.len() {
        return Err(Error::invalid("round count mismatch"));
    }
    let mut max_gap = 0.0f64;
    let mut first = None;
    for (t0, (a, b)) in learner.iter().zip(oracle).enumerate() {
        if a.len() != b.len() {
            return Err(Error::invalid(format!("round {}: dimension mismatch", t0 + 1)));
        }
        let gap = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        if gap > tol && first.is_none() {
            first = Some((t0 + 1, gap));
        }
        max_gap = max_gap.max(gap);
    }
    Ok(CertifyReport {
        pass: first.is_none(),
        max_gap,
        first_divergence: first,
        snapshot: None,
    })
}
