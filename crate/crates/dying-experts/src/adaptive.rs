//! Adaptive-rate learners: follow-the-leader with death clamping, the
//! mix-loss gap machinery behind AdaHedge, the flip/flop regime switcher,
//! and a quantile-style mixture of grouped learners.
//!
//! The load-bearing trick for dying experts is the FTL clamp: when expert j
//! dies, every alive expert with a larger cumulative loss has it clamped
//! down to j's. After clamping, L_i equals the minimum cumulative loss over
//! all orderings currently playing e_i, so the minimum over alive experts
//! is the best ordering's cumulative loss so far, and the clamped leader is
//! the ordering-FTL play.
//!
//! The same quantity gives the infinite-rate mix loss. The finite-rate mix
//! loss is m_r = -(1/eta) ln(sum_i p_i e^(-eta l_i)); as eta grows (with
//! the weights re-exponentiated accordingly) this converges to the
//! *increase* of the best comparator's cumulative loss, not to the loss of
//! the currently heaviest expert. Using the increase keeps the gap
//! Delta = (learner loss) - (mix loss) non-negative and growing, which is
//! what drives the adaptive rates; the naive "leader's own loss" reading
//! would freeze the gap at zero forever.

use crate::grouped::{GroupCore, GroupedLearner};
use crate::hedge::Rate;
use crate::instance::Instance;
use crate::learner::{drive, drive_observed, AdaptiveDiag, DyingLearner, Regime};
use crate::math::{dot, log_sum_exp, softmax_masked};
use crate::regret::RunRecord;
use crate::{Error, Result};

/// Clamped cumulative losses per alive expert.
#[derive(Debug, Clone)]
pub struct FtlState {
    alive: Vec<bool>,
    loss: Vec<f64>,
    n_alive: usize,
}

impl FtlState {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("need at least one expert"));
        }
        Ok(FtlState {
            alive: vec![true; k],
            loss: vec![0.0; k],
            n_alive: k,
        })
    }

    pub fn num_experts(&self) -> usize {
        self.alive.len()
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    /// Clamped cumulative losses; only alive entries are meaningful.
    pub fn losses(&self) -> &[f64] {
        &self.loss
    }

    /// Lowest-index alive expert with minimal clamped loss.
    pub fn leader(&self) -> usize {
        let mut best = usize::MAX;
        let mut best_v = f64::INFINITY;
        for i in 0..self.loss.len() {
            if self.alive[i] && self.loss[i] < best_v {
                best_v = self.loss[i];
                best = i;
            }
        }
        best
    }

    /// The best ordering's cumulative loss so far.
    pub fn best_loss(&self) -> f64 {
        self.loss[self.leader()]
    }

    pub fn absorb(&mut self, losses: &[f64]) -> Result<()> {
        if losses.len() != self.loss.len() {
            return Err(Error::invalid("loss vector length mismatch"));
        }
        if losses.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::invalid("losses must lie in [0,1]"));
        }
        for i in 0..self.loss.len() {
            if self.alive[i] {
                self.loss[i] += losses[i];
            }
        }
        Ok(())
    }

    /// Kill `j` and clamp every alive loss above L_j down to L_j.
    pub fn on_death(&mut self, j: usize) -> Result<()> {
        if j >= self.alive.len() || !self.alive[j] {
            return Err(Error::contract(format!("expert {j} is not alive")));
        }
        if self.n_alive < 2 {
            return Err(Error::contract("last alive expert cannot die"));
        }
        let lj = self.loss[j];
        self.alive[j] = false;
        self.n_alive -= 1;
        for i in 0..self.loss.len() {
            if self.alive[i] && self.loss[i] > lj {
                self.loss[i] = lj;
            }
        }
        Ok(())
    }

    /// One protocol round in a single call: returns the expert played
    /// (the pre-update leader), then absorbs the losses and processes the
    /// deaths in the given order.
    pub fn ftl_dying_step(&mut self, losses: &[f64], deaths: &[usize]) -> Result<usize> {
        let played = self.leader();
        self.absorb(losses)?;
        for &j in deaths {
            self.on_death(j)?;
        }
        Ok(played)
    }
}

/// FTL as a protocol learner: point mass on the clamped leader.
#[derive(Debug, Clone)]
pub struct FtlLearner {
    state: FtlState,
}

impl FtlLearner {
    pub fn new(k: usize) -> Result<Self> {
        Ok(FtlLearner {
            state: FtlState::new(k)?,
        })
    }

    pub fn state(&self) -> &FtlState {
        &self.state
    }
}

impl DyingLearner for FtlLearner {
    fn play(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.state.num_experts()];
        p[self.state.leader()] = 1.0;
        p
    }

    fn observe(&mut self, losses: &[f64]) -> Result<()> {
        self.state.absorb(losses)
    }

    fn on_death(&mut self, expert: usize) -> Result<()> {
        self.state.on_death(expert)
    }

    fn diag(&self) -> Option<AdaptiveDiag> {
        Some(AdaptiveDiag {
            regime: Regime::Ftl,
            gap_ftl: 0.0,
            gap_adahedge: 0.0,
        })
    }
}

/// m_r = -(1/eta) ln(sum_i p_i e^(-eta l_i)), with the eta -> 0 limit p.l
/// and, at eta = infinity, the loss of the heaviest expert (lowest index on
/// ties). Adaptive learners do not use the infinite branch; see the module
/// docs for why they track best-loss increments instead.
pub fn mix_loss(p: &[f64], losses: &[f64], eta: f64) -> Result<f64> {
    if p.len() != losses.len() || p.is_empty() {
        return Err(Error::invalid("mix_loss needs matching non-empty vectors"));
    }
    if eta.is_nan() || eta < 0.0 {
        return Err(Error::invalid(format!("bad rate {eta}")));
    }
    if eta.is_infinite() {
        let mut arg = 0;
        for i in 1..p.len() {
            if p[i] > p[arg] {
                arg = i;
            }
        }
        return Ok(losses[arg]);
    }
    if eta < 1e-12 {
        return Ok(dot(p, losses));
    }
    let terms: Vec<f64> = p
        .iter()
        .zip(losses)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &li)| pi.ln() - eta * li)
        .collect();
    Ok(-log_sum_exp(&terms) / eta)
}

/// Cumulative learner loss, cumulative mix loss, and their gap, which sets
/// the adaptive rate eta_t = ln(N) / gap.
#[derive(Debug, Clone)]
pub struct AdaHedgeState {
    log_n: f64,
    gap: f64,
}

impl AdaHedgeState {
    pub fn new(log_n: f64) -> Self {
        AdaHedgeState { log_n, gap: 0.0 }
    }

    /// Delta_t: the sum of per-round surpluses, each clamped at zero
    /// against roundoff, hence non-decreasing by construction.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// ln(N) / Delta; infinite while the gap is zero (the FTL phase).
    pub fn rate(&self) -> f64 {
        if self.gap > 0.0 {
            self.log_n / self.gap
        } else {
            f64::INFINITY
        }
    }

    pub fn record(&mut self, learner_loss: f64, mix: f64) {
        self.gap += (learner_loss - mix).max(0.0);
    }
}

/// Which comparator set a grouped learner simulates.
#[derive(Debug, Clone)]
pub enum ComparatorSet {
    /// All K! orderings (dying order unknown upfront).
    AllOrderings,
    /// The effective orderings of a declared single-death dying order.
    DeclaredOrder(Vec<usize>),
}

impl ComparatorSet {
    fn core(&self, k: usize) -> Result<GroupCore> {
        match self {
            ComparatorSet::AllOrderings => GroupCore::unknown_order(k),
            ComparatorSet::DeclaredOrder(order) => GroupCore::known_order(k, order),
        }
    }
}

/// Thresholds for regime changes; defaults from the algorithm this scheme
/// originates from.
#[derive(Debug, Clone, Copy)]
pub struct FlipFlopConfig {
    /// Leave the FTL regime once gap_ftl > phi * gap_adahedge.
    pub phi: f64,
    /// Return to FTL once gap_adahedge > alpha * gap_ftl.
    pub alpha: f64,
}

impl Default for FlipFlopConfig {
    fn default() -> Self {
        FlipFlopConfig {
            phi: 2.37,
            alpha: 1.243,
        }
    }
}

/// Alternates FTL phases (infinite rate) and adaptive-rate phases over one
/// grouped weight state, switching when the active regime's accumulated
/// mix-loss gap overtakes the other's by its threshold factor.
#[derive(Debug, Clone)]
pub struct FlipFlop {
    core: GroupCore,
    ftl: FtlState,
    regime: Regime,
    gap_ftl: f64,
    gap_adahedge: f64,
    cfg: FlipFlopConfig,
}

impl FlipFlop {
    pub fn new(k: usize, comparators: ComparatorSet, cfg: FlipFlopConfig) -> Result<Self> {
        Ok(FlipFlop {
            core: comparators.core(k)?,
            ftl: FtlState::new(k)?,
            regime: Regime::Ftl,
            gap_ftl: 0.0,
            gap_adahedge: 0.0,
            cfg,
        })
    }

    pub fn over_hpu(k: usize) -> Result<Self> {
        FlipFlop::new(k, ComparatorSet::AllOrderings, FlipFlopConfig::default())
    }

    /// The adaptive-regime rate, frozen while the FTL regime is active;
    /// None while its gap is still zero.
    fn adaptive_rate(&self) -> Option<f64> {
        if self.gap_adahedge > 0.0 {
            Some(self.core.log_comparators() / self.gap_adahedge)
        } else {
            None
        }
    }

    fn leader_point_mass(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.core.num_experts()];
        p[self.ftl.leader()] = 1.0;
        p
    }
}

impl DyingLearner for FlipFlop {
    fn play(&self) -> Vec<f64> {
        match (self.regime, self.adaptive_rate()) {
            (Regime::Ftl, _) | (Regime::AdaHedge, None) => self.leader_point_mass(),
            (Regime::AdaHedge, Some(_)) => self.core.distribution(),
        }
    }

    fn observe(&mut self, losses: &[f64]) -> Result<()> {
        let played = self.play();
        let flop_rate = self.adaptive_rate();
        let active_rate = match self.regime {
            Regime::Ftl => None,
            Regime::AdaHedge => flop_rate,
        };
        let prev_best = self.ftl.best_loss();
        self.ftl.absorb(losses)?;
        let learner_loss = dot(&played, losses);
        let mix = match active_rate {
            Some(eta) => mix_loss(&played, losses, eta)?,
            None => self.ftl.best_loss() - prev_best,
        };
        let delta = (learner_loss - mix).max(0.0);
        match self.regime {
            Regime::Ftl => self.gap_ftl += delta,
            Regime::AdaHedge => self.gap_adahedge += delta,
        }
        // weights track every round at the current adaptive-regime rate so
        // a regime change resumes from a consistent state
        if let Some(eta) = flop_rate {
            self.core.apply_losses(eta, losses)?;
        } else if losses.len() != self.core.num_experts()
            || losses.iter().any(|l| !(0.0..=1.0).contains(l))
        {
            return Err(Error::invalid("losses must be length K in [0,1]"));
        }
        match self.regime {
            Regime::Ftl if self.gap_ftl > self.cfg.phi * self.gap_adahedge => {
                self.regime = Regime::AdaHedge;
            }
            Regime::AdaHedge if self.gap_adahedge > self.cfg.alpha * self.gap_ftl => {
                self.regime = Regime::Ftl;
            }
            _ => {}
        }
        Ok(())
    }

    fn on_death(&mut self, expert: usize) -> Result<()> {
        self.core.on_death(expert)?;
        self.ftl.on_death(expert)?;
        Ok(())
    }

    fn diag(&self) -> Option<AdaptiveDiag> {
        Some(AdaptiveDiag {
            regime: self.regime,
            gap_ftl: self.gap_ftl,
            gap_adahedge: self.gap_adahedge,
        })
    }
}

/// Full run with the per-round regime/gap trace.
#[derive(Debug, Clone)]
pub struct FlipFlopReport {
    pub record: RunRecord,
    /// (round, diagnostics after the round) pairs.
    pub trace: Vec<(usize, AdaptiveDiag)>,
}

pub fn flipflop_run(
    instance: &Instance,
    comparators: ComparatorSet,
    cfg: FlipFlopConfig,
) -> Result<FlipFlopReport> {
    let mut learner = FlipFlop::new(instance.num_experts(), comparators, cfg)?;
    let mut trace = Vec::with_capacity(instance.horizon());
    let record = drive_observed(&mut learner, instance, |t, l: &FlipFlop| {
        trace.push((t, l.diag().expect("flipflop diagnostics")));
    })?;
    Ok(FlipFlopReport { record, trace })
}

/// The exponentially spaced quantile grid {0} u {1, 2, 4, ... < K-1} u
/// {K-1}.
pub fn default_quantile_grid(k: usize) -> Vec<usize> {
    let mut g = vec![0];
    let mut p = 1;
    while p < k - 1 {
        g.push(p);
        p *= 2;
    }
    g.push(k - 1);
    g.dedup();
    g
}

/// Anytime Hedge over copies of the unknown-order learner tuned for
/// different comparator quantiles: copy r uses log(1/eps_r) =
/// sum_{l=0}^{r-1} ln(K-l) in its rate, so small-r copies chase the top
/// quantile aggressively while large-r copies retain the full guarantee.
#[derive(Debug, Clone)]
pub struct QuantileMeta {
    copies: Vec<GroupedLearner>,
    top_log_w: Vec<f64>,
    top_log_n: f64,
    elapsed: usize,
    k: usize,
}

impl QuantileMeta {
    /// Default exponentially spaced grid.
    pub fn new(k: usize) -> Result<Self> {
        QuantileMeta::with_grid(k, &default_quantile_grid(k))
    }

    /// One copy per r in 0..K (the exact construction, K copies).
    pub fn full(k: usize) -> Result<Self> {
        let grid: Vec<usize> = (0..k).collect();
        QuantileMeta::with_grid(k, &grid)
    }

    /// Explicit grid of r values, each in 0..K.
    pub fn with_grid(k: usize, grid: &[usize]) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("quantile mixture needs K >= 2"));
        }
        if grid.is_empty() {
            return Err(Error::invalid("empty quantile grid"));
        }
        let mut copies = Vec::with_capacity(grid.len());
        for &r in grid {
            if r >= k {
                return Err(Error::invalid(format!("grid value {r} out of 0..{k}")));
            }
            let log_inv_eps: f64 = (0..r).map(|l| ((k - l) as f64).ln()).sum();
            copies.push(GroupedLearner::hpu(
                k,
                Rate::Anytime {
                    c: 8.0,
                    log_n: log_inv_eps,
                },
            )?);
        }
        Ok(QuantileMeta {
            top_log_n: (copies.len() as f64).ln(),
            top_log_w: vec![0.0; copies.len()],
            copies,
            elapsed: 0,
            k,
        })
    }

    pub fn num_copies(&self) -> usize {
        self.copies.len()
    }

    /// Current mixing weights over the copies.
    pub fn copy_weights(&self) -> Vec<f64> {
        let alive = vec![true; self.top_log_w.len()];
        softmax_masked(&self.top_log_w, &alive)
    }
}

impl DyingLearner for QuantileMeta {
    fn play(&self) -> Vec<f64> {
        let q = self.copy_weights();
        let mut p = vec![0.0; self.k];
        for (w, copy) in q.iter().zip(&self.copies) {
            for (pi, ci) in p.iter_mut().zip(copy.play()) {
                *pi += w * ci;
            }
        }
        p
    }

    fn observe(&mut self, losses: &[f64]) -> Result<()> {
        let copy_losses: Vec<f64> = self.copies.iter().map(|c| dot(&c.play(), losses)).collect();
        for copy in &mut self.copies {
            copy.observe(losses)?;
        }
        let eta = (8.0 * self.top_log_n / (self.elapsed + 1) as f64).sqrt();
        for (w, l) in self.top_log_w.iter_mut().zip(&copy_losses) {
            *w -= eta * l;
        }
        let m = self.top_log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for w in &mut self.top_log_w {
            *w -= m;
        }
        self.elapsed += 1;
        Ok(())
    }

    fn on_death(&mut self, expert: usize) -> Result<()> {
        for copy in &mut self.copies {
            copy.on_death(expert)?;
        }
        Ok(())
    }
}

/// Runs the default quantile mixture over an instance.
pub fn quantile_meta(instance: &Instance) -> Result<RunRecord> {
    let mut learner = QuantileMeta::new(instance.num_experts())?;
    drive(&mut learner, instance)
}
