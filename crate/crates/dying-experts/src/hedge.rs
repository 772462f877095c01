//! Exponential weights over a finite expert set, with pluggable rate
//! schedules, plus the restart-on-death baseline.
//!
//! Weights live in the natural-log domain: initial group weights like
//! (K-1)! and loss factors e^(-eta*L) both leave f64 range quickly in
//! linear domain. Time-varying rates are applied in product form,
//! w <- w * exp(-eta_t * loss_t), the variant that the grouped learners can
//! also realize (they cannot re-exponentiate cumulative losses).

use crate::instance::{DyingSchedule, Instance, LossStream};
use crate::learner::{drive, DyingLearner};
use crate::math::softmax_masked;
use crate::regret::RunRecord;
use crate::{Error, Result};

/// Learning-rate schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    /// Constant eta > 0.
    Fixed(f64),
    /// eta_t = sqrt(c * log_n / t'), t' counting rounds on the schedule's
    /// clock (global, or since the last reset for resetting learners).
    Anytime { c: f64, log_n: f64 },
    /// ln(N) / gap, recomputed each round from the learner's own mix-loss
    /// gap. Only adaptive learners accept this.
    AdaHedge,
    /// The follow-the-leader limit. Only the grouped learners accept this.
    Infinite,
}

impl Rate {
    /// The usual anytime default, eta_t = sqrt(8 ln(N) / t').
    pub fn anytime(log_n: f64) -> Self {
        Rate::Anytime { c: 8.0, log_n }
    }

    /// The rate for round `elapsed + 1` of the schedule's clock, for the
    /// self-contained kinds.
    pub fn value_at(&self, elapsed: usize) -> Result<f64> {
        match *self {
            Rate::Fixed(eta) => {
                if !(eta.is_finite() && eta > 0.0) {
                    return Err(Error::invalid(format!("fixed rate must be finite positive, got {eta}")));
                }
                Ok(eta)
            }
            Rate::Anytime { c, log_n } => {
                if !(c > 0.0) || log_n < 0.0 {
                    return Err(Error::invalid("anytime rate needs c > 0 and log_n >= 0"));
                }
                Ok((c * log_n / (elapsed + 1) as f64).sqrt())
            }
            Rate::AdaHedge => Err(Error::contract("adahedge rate is driven by learner state")),
            Rate::Infinite => Err(Error::contract("infinite rate is the FTL limit, not a hedge_update rate")),
        }
    }
}

/// Non-normalized log weights over a fixed expert set.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    log_w: Vec<f64>,
}

impl WeightVector {
    /// Uniform start (all log weights zero).
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("need at least one expert"));
        }
        Ok(WeightVector { log_w: vec![0.0; n] })
    }

    pub fn from_log(log_w: Vec<f64>) -> Result<Self> {
        if log_w.is_empty() || log_w.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("log weights must be finite and non-empty"));
        }
        Ok(WeightVector { log_w })
    }

    pub fn len(&self) -> usize {
        self.log_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_w.is_empty()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_w
    }

    /// Normalized weights via max-shift softmax.
    pub fn hedge_play(&self) -> Vec<f64> {
        let alive = vec![true; self.log_w.len()];
        softmax_masked(&self.log_w, &alive)
    }

    /// As [`hedge_play`](Self::hedge_play) but renormalized over `alive`.
    pub fn hedge_play_masked(&self, alive: &[bool]) -> Vec<f64> {
        softmax_masked(&self.log_w, alive)
    }

    /// log_w[i] -= eta * losses[i], then a common max-shift (which leaves
    /// every play unchanged but keeps the entries bounded).
    pub fn hedge_update(&mut self, losses: &[f64], eta: f64) -> Result<()> {
        if eta.is_infinite() {
            return Err(Error::contract("infinite rate must go through the FTL path"));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::invalid(format!("bad learning rate {eta}")));
        }
        if losses.len() != self.log_w.len() {
            return Err(Error::invalid("loss vector length mismatch"));
        }
        for (w, &l) in self.log_w.iter_mut().zip(losses) {
            *w -= eta * l;
        }
        let m = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for w in &mut self.log_w {
            *w -= m;
        }
        Ok(())
    }
}

/// Plain Hedge over the experts of `losses`, optionally masked by a
/// schedule (renormalizing over the alive set each round, never resetting).
pub fn run_hedge(
    losses: &LossStream,
    rate: Rate,
    schedule: Option<&DyingSchedule>,
) -> Result<RunRecord> {
    let k = losses.num_experts();
    let owned;
    let schedule = match schedule {
        Some(s) => s,
        None => {
            owned = DyingSchedule::empty(k, losses.horizon());
            &owned
        }
    };
    let instance = Instance::new(losses.clone(), schedule.clone())?;
    let mut learner = MaskedHedge::new(k, rate)?;
    drive(&mut learner, &instance)
}

/// Hedge over all K experts that only renormalizes over the alive set.
#[derive(Debug, Clone)]
pub struct MaskedHedge {
    weights: WeightVector,
    alive: Vec<bool>,
    rate: Rate,
    elapsed: usize,
}

impl MaskedHedge {
    pub fn new(k: usize, rate: Rate) -> Result<Self> {
        if matches!(rate, Rate::AdaHedge | Rate::Infinite) {
            return Err(Error::contract(
                "adahedge/infinite rates belong to the adaptive learners",
            ));
        }
        Ok(MaskedHedge {
            weights: WeightVector::uniform(k)?,
            alive: vec![true; k],
            rate,
            elapsed: 0,
        })
    }
}

impl DyingLearner for MaskedHedge {
    fn play(&self) -> Vec<f64> {
        self.weights.hedge_play_masked(&self.alive)
    }

    fn observe(&mut self, losses: &[f64]) -> Result<()> {
        let eta = self.rate.value_at(self.elapsed)?;
        self.weights.hedge_update(losses, eta)?;
        self.elapsed += 1;
        Ok(())
    }

    fn on_death(&mut self, expert: usize) -> Result<()> {
        if !self.alive[expert] {
            return Err(Error::contract(format!("expert {expert} is already dead")));
        }
        self.alive[expert] = false;
        if self.alive.iter().all(|a| !a) {
            return Err(Error::contract("last alive expert cannot die"));
        }
        Ok(())
    }
}

/// Hedge restarted from uniform over the survivors after every night; the
/// rate clock restarts with it.
#[derive(Debug, Clone)]
pub struct ResettingHedge {
    weights: WeightVector,
    alive: Vec<bool>,
    rate: Rate,
    since_reset: usize,
}

impl ResettingHedge {
    pub fn new(k: usize, rate: Rate) -> Result<Self> {
        if matches!(rate, Rate::AdaHedge | Rate::Infinite) {
            return Err(Error::contract(
                "resetting hedge takes a fixed or anytime rate",
            ));
        }
        Ok(ResettingHedge {
            weights: WeightVector::uniform(k)?,
            alive: vec![true; k],
            rate,
            since_reset: 0,
        })
    }

    /// The default configuration: anytime rate with log_n = ln K.
    pub fn with_default_rate(k: usize) -> Result<Self> {
        ResettingHedge::new(k, Rate::anytime((k as f64).ln()))
    }
}

impl DyingLearner for ResettingHedge {
    fn play(&self) -> Vec<f64> {
        self.weights.hedge_play_masked(&self.alive)
    }

    fn observe(&mut self, losses: &[f64]) -> Result<()> {
        let eta = self.rate.value_at(self.since_reset)?;
        self.weights.hedge_update(losses, eta)?;
        self.since_reset += 1;
        Ok(())
    }

    fn on_death(&mut self, expert: usize) -> Result<()> {
        if !self.alive[expert] {
            return Err(Error::contract(format!("expert {expert} is already dead")));
        }
        self.alive[expert] = false;
        if self.alive.iter().all(|a| !a) {
            return Err(Error::contract("last alive expert cannot die"));
        }
        self.weights = WeightVector::uniform(self.alive.len())?;
        self.since_reset = 0;
        Ok(())
    }
}

/// Convenience wrapper matching the learner protocol end to end.
pub fn resetting_hedge(instance: &Instance, rate: Rate) -> Result<RunRecord> {
    let mut learner = ResettingHedge::new(instance.num_experts(), rate)?;
    drive(&mut learner, instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Substream;

    fn random_losses(k: usize, t: usize, seed: u64) -> LossStream {
        let mut s = Substream::new(seed, &[7]);
        LossStream::new(k, t, (0..k * t).map(|_| s.next_unit()).collect()).unwrap()
    }

    #[test]
    fn play_uniform_and_dominant() {
        let w = WeightVector::uniform(4).unwrap();
        assert_eq!(w.hedge_play(), vec![0.25; 4]);

        let w = WeightVector::from_log(vec![0.0, -1e300]).unwrap();
        assert_eq!(w.hedge_play(), vec![1.0, 0.0]);
    }

    #[test]
    fn play_log_three() {
        let w = WeightVector::from_log(vec![0.0, 3.0f64.ln()]).unwrap();
        let p = w.hedge_play();
        assert!((p[0] - 0.25).abs() < 1e-15);
        assert!((p[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn update_zero_rate_and_uniform_losses_are_invisible() {
        let mut w = WeightVector::from_log(vec![0.3, -0.7, 0.1]).unwrap();
        let before = w.hedge_play();
        w.hedge_update(&[0.2, 0.9, 0.4], 0.0).unwrap();
        let after = w.hedge_play();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
        w.hedge_update(&[0.6, 0.6, 0.6], 1.3).unwrap();
        let after = w.hedge_play();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn update_two_experts_ln2() {
        let mut w = WeightVector::uniform(2).unwrap();
        w.hedge_update(&[0.0, 1.0], 2.0f64.ln()).unwrap();
        let p = w.hedge_play();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn update_rejects_infinite_rate() {
        let mut w = WeightVector::uniform(2).unwrap();
        assert!(matches!(
            w.hedge_update(&[0.0, 1.0], f64::INFINITY),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn shift_invariance() {
        let mut a = WeightVector::from_log(vec![0.1, -2.0, 1.4]).unwrap();
        let b = WeightVector::from_log(vec![0.1 + 7.0, -2.0 + 7.0, 1.4 + 7.0]).unwrap();
        let pa = a.hedge_play();
        let pb = b.hedge_play();
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() < 1e-12);
        }
        // and the post-update shift does not change later plays
        a.hedge_update(&[0.0, 0.5, 1.0], 0.7).unwrap();
        assert!(a.log_weights().iter().copied().fold(f64::NEG_INFINITY, f64::max) == 0.0);
    }

    #[test]
    fn single_expert_has_zero_regret() {
        let losses = random_losses(1, 20, 1);
        let rec = run_hedge(&losses, Rate::Fixed(0.5), None).unwrap();
        assert!(rec.ranking_regret.abs() < 1e-12);
    }

    #[test]
    fn standard_hedge_guarantee_on_random_instances() {
        // L_hat <= min_i L_i + ln(N)/eta + eta*T/8
        for seed in 0..10 {
            let k = 5;
            let t = 200;
            let losses = random_losses(k, t, 100 + seed);
            for eta in [0.05, 0.3, 1.0] {
                let rec = run_hedge(&losses, Rate::Fixed(eta), None).unwrap();
                let best: f64 = (0..k)
                    .map(|i| (1..=t).map(|r| losses.loss(i, r)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                let bound = best + (k as f64).ln() / eta + eta * t as f64 / 8.0;
                assert!(
                    rec.total_loss() <= bound + 1e-9,
                    "seed {seed} eta {eta}: {} > {}",
                    rec.total_loss(),
                    bound
                );
            }
        }
    }

    #[test]
    fn mix_loss_telescopes_on_alternating_instance() {
        // two experts, losses (0,1) every round: cumulative mix loss equals
        // -(1/eta) ln((1 + e^(-eta T))/2) and stays below ln(2)/eta
        let t = 100;
        for eta in [0.1, 2.0f64.ln(), 2.0] {
            let mut log_w = [0.0f64, 0.0];
            let mut mix = 0.0;
            for _ in 0..t {
                let before = crate::math::log_sum_exp(&log_w);
                log_w[1] -= eta;
                let after = crate::math::log_sum_exp(&log_w);
                mix += -(after - before) / eta;
            }
            let closed = -((1.0 + (-eta * t as f64).exp()) / 2.0).ln() / eta;
            assert!((mix - closed).abs() < 1e-9);
            assert!(mix <= 2.0f64.ln() / eta + 1e-12);
        }
    }

    #[test]
    fn masked_run_equals_unmasked_without_deaths() {
        let losses = random_losses(4, 30, 9);
        let empty = DyingSchedule::empty(4, 30);
        let a = run_hedge(&losses, Rate::anytime(4.0f64.ln()), None).unwrap();
        let b = run_hedge(&losses, Rate::anytime(4.0f64.ln()), Some(&empty)).unwrap();
        for (pa, pb) in a.distributions.iter().zip(&b.distributions) {
            assert_eq!(pa, pb);
        }
    }

    #[test]
    fn masked_run_zeroes_dead_mass() {
        let losses = random_losses(3, 10, 5);
        let schedule = DyingSchedule::new(3, 10, vec![Some(4), None, None]).unwrap();
        let rec = run_hedge(&losses, Rate::Fixed(0.4), Some(&schedule)).unwrap();
        for t in 5..=10 {
            assert_eq!(rec.distributions[t - 1][0], 0.0);
        }
    }

    #[test]
    fn resetting_without_deaths_matches_run_hedge() {
        let losses = random_losses(5, 40, 17);
        let rate = Rate::anytime(5.0f64.ln());
        let plain = run_hedge(&losses, rate, None).unwrap();
        let inst = Instance::new(losses.clone(), DyingSchedule::empty(5, 40)).unwrap();
        let reset = resetting_hedge(&inst, rate).unwrap();
        for (pa, pb) in plain.distributions.iter().zip(&reset.distributions) {
            for (x, y) in pa.iter().zip(pb) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn resetting_plays_uniform_after_each_night() {
        // one round per day: the learner never gets to update before a reset
        let losses = LossStream::new(3, 2, vec![0.9, 0.1, 0.5, 0.9, 0.1, 0.5]).unwrap();
        let schedule = DyingSchedule::new(3, 2, vec![Some(1), None, None]).unwrap();
        let inst = Instance::new(losses, schedule).unwrap();
        let rec = resetting_hedge(&inst, Rate::anytime(3.0f64.ln())).unwrap();
        assert_eq!(rec.distributions[0], vec![1.0 / 3.0; 3]);
        // round 2: fresh uniform over the two survivors
        assert_eq!(rec.distributions[1], vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn rate_values() {
        assert_eq!(Rate::Fixed(0.25).value_at(100).unwrap(), 0.25);
        let r = Rate::anytime(8.0f64.exp().ln()); // log_n = 8
        assert!((r.value_at(0).unwrap() - 8.0).abs() < 1e-12);
        assert!(Rate::AdaHedge.value_at(0).is_err());
        assert!(Rate::Infinite.value_at(0).is_err());
    }
}
