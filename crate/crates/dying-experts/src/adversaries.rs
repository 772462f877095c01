//! Instance generators.
//!
//! Every generator is a pure function of (dimensions, parameters, seed):
//! losses come from counter-based streams keyed by (family, day, expert),
//! so regenerating with the same seed is bit-identical and no generator
//! state leaks between experts or days.
//!
//! The two lower-bound families build hard instances around a day
//! structure. Days are decoupled: within a day every non-dying competitor
//! ends at the same total, so the best ordering collects exactly the
//! per-day minima and its identity is known in closed form.

use crate::instance::{DyingSchedule, Instance, LossStream};
use crate::rng::{bernoulli, stream_key};
use crate::{Error, Result};

/// A generated instance plus whatever the construction knows about it.
#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    /// Death order declared to order-aware learners, when the
    /// construction fixes one ahead of time. Post-hoc orders of
    /// loss-dependent constructions are never exposed here.
    pub dying_order: Option<Vec<usize>>,
    pub warnings: Vec<String>,
}

fn schedule_or_empty(
    k: usize,
    t: usize,
    schedule: Option<DyingSchedule>,
) -> Result<DyingSchedule> {
    match schedule {
        None => Ok(DyingSchedule::empty(k, t)),
        Some(s) => {
            if s.num_experts() != k || s.horizon() != t {
                return Err(Error::invalid("schedule dimensions disagree with k, t"));
            }
            Ok(s)
        }
    }
}

/// I.i.d. Bernoulli(p) losses for every expert, with an optional externally
/// supplied death schedule.
pub fn gen_bernoulli(
    k: usize,
    t: usize,
    p: f64,
    seed: u64,
    schedule: Option<DyingSchedule>,
) -> Result<Generated> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p must lie in [0, 1]"));
    }
    let schedule = schedule_or_empty(k, t, schedule)?;
    let keys: Vec<u64> = (0..k).map(|i| stream_key(seed, &[1, i as u64])).collect();
    let mut data = Vec::with_capacity(k * t);
    for round in 1..=t {
        for key in &keys {
            data.push(bernoulli(*key, (round - 1) as u64, p));
        }
    }
    Ok(Generated {
        instance: Instance::new(LossStream::new(k, t, data)?, schedule)?,
        dying_order: None,
        warnings: Vec::new(),
    })
}

/// Per-expert Bernoulli losses with fixed means, for gap instances.
/// Warns when no unique best expert exists.
pub fn gen_stochastic_gap(
    t: usize,
    means: &[f64],
    seed: u64,
    schedule: Option<DyingSchedule>,
) -> Result<Generated> {
    let k = means.len();
    if k == 0 {
        return Err(Error::invalid("need at least one mean"));
    }
    if means.iter().any(|m| !(0.0..=1.0).contains(m)) {
        return Err(Error::invalid("means must lie in [0, 1]"));
    }
    let schedule = schedule_or_empty(k, t, schedule)?;
    let best = means.iter().copied().fold(f64::INFINITY, f64::min);
    let ties = means.iter().filter(|&&m| m == best).count();
    let mut warnings = Vec::new();
    if ties > 1 {
        warnings.push(format!(
            "no unique best expert: {} means equal the minimum {}",
            ties, best
        ));
    }
    let keys: Vec<u64> = (0..k).map(|i| stream_key(seed, &[4, i as u64])).collect();
    let mut data = Vec::with_capacity(k * t);
    for round in 1..=t {
        for (key, mean) in keys.iter().zip(means) {
            data.push(bernoulli(*key, (round - 1) as u64, *mean));
        }
    }
    Ok(Generated {
        instance: Instance::new(LossStream::new(k, t, data)?, schedule)?,
        dying_order: None,
        warnings,
    })
}

/// Hard instance for learners that do not know who dies next: m + 1 days,
/// each split into two equal halves. First half of a day is fair-coin
/// losses for the alive experts; at mid-day the alive expert with the
/// lowest within-day loss is chosen, receives zero for the second half,
/// and dies at day's end (except on the last day). Every other alive
/// expert's second half mirrors its first, pinning its day total. Dead
/// experts always lose 1.
///
/// Day halves must be equal, so the horizon is trimmed by at most one
/// round; leftover full pairs extend the final day.
pub fn gen_unknown_lb(k: usize, t: usize, m: usize, seed: u64) -> Result<Generated> {
    if k == 0 {
        return Err(Error::invalid("need at least one expert"));
    }
    if m == 0 || m > k - 1 {
        return Err(Error::invalid("m must satisfy 1 <= m <= k - 1"));
    }
    if t < 2 * (m + 1) {
        return Err(Error::invalid("horizon must allow 2(m + 1) rounds"));
    }
    let h = t / (2 * (m + 1));
    let h_last = (t - 2 * h * m) / 2;
    let t_eff = 2 * h * m + 2 * h_last;

    let mut data = vec![1.0f64; k * t_eff];
    let mut death_round = vec![None; k];
    let mut alive = vec![true; k];
    let mut order = Vec::with_capacity(m);
    let mut offset = 0usize; // rounds before the current day
    for day in 1..=m + 1 {
        let half = if day <= m { h } else { h_last };
        let mut day_cum = vec![0.0f64; k];
        for r in 0..half {
            for i in 0..k {
                if alive[i] {
                    let key = stream_key(seed, &[2, day as u64, i as u64]);
                    let l = bernoulli(key, r as u64, 0.5);
                    data[(offset + r) * k + i] = l;
                    day_cum[i] += l;
                }
            }
        }
        let chosen = (0..k)
            .filter(|&i| alive[i])
            .min_by(|&a, &b| day_cum[a].partial_cmp(&day_cum[b]).unwrap())
            .expect("survivors outnumber deaths");
        for r in 0..half {
            for i in 0..k {
                if alive[i] {
                    let first = data[(offset + r) * k + i];
                    data[(offset + half + r) * k + i] =
                        if i == chosen { 0.0 } else { 1.0 - first };
                }
            }
        }
        if day <= m {
            death_round[chosen] = Some(offset + 2 * half);
            alive[chosen] = false;
            order.push(chosen);
        }
        offset += 2 * half;
    }
    let instance = Instance::new(
        LossStream::new(k, t_eff, data)?,
        DyingSchedule::new(k, t_eff, death_round)?,
    )?;
    Ok(Generated {
        instance,
        dying_order: None,
        warnings: if t_eff < t {
            vec![format!("horizon trimmed from {} to {}", t, t_eff)]
        } else {
            Vec::new()
        },
    })
}

/// Hard instance for learners told the death order in advance: m/2 days,
/// day s giving fair-coin losses to the designated pair {2(s-1), 2s-1}
/// and loss 1 to everyone else; both pair members die at day's end.
/// Deaths that would land on the final round are dropped, so the last
/// pair survives (m = 2 yields no deaths at all). Returns the declared
/// dying order.
pub fn gen_known_lb(k: usize, t: usize, m: usize, seed: u64) -> Result<Generated> {
    if m < 2 || m % 2 != 0 {
        return Err(Error::invalid("m must be even and at least 2"));
    }
    if m > k {
        return Err(Error::invalid("m cannot exceed k"));
    }
    let days = m / 2;
    if t < days {
        return Err(Error::invalid("horizon must allow one round per day"));
    }
    let base = t / days;
    let mut data = vec![1.0f64; k * t];
    let mut death_round = vec![None; k];
    let mut offset = 0usize;
    for day in 1..=days {
        let len = if day < days { base } else { t - offset };
        let pair = [2 * (day - 1), 2 * day - 1];
        for r in 0..len {
            for i in pair {
                let key = stream_key(seed, &[3, day as u64, i as u64]);
                data[(offset + r) * k + i] = bernoulli(key, r as u64, 0.5);
            }
        }
        offset += len;
        if day < days {
            for i in pair {
                death_round[i] = Some(offset);
            }
        }
    }
    let instance = Instance::new(
        LossStream::new(k, t, data)?,
        DyingSchedule::new(k, t, death_round)?,
    )?;
    let order: Vec<usize> = (0..2 * (days - 1)).collect();
    Ok(Generated {
        instance,
        dying_order: Some(order),
        warnings: Vec::new(),
    })
}
