//! Seeded experiment execution: instance generation, learner dispatch,
//! parallel replication, CSV emission.
//!
//! Replication i uses seed `base_seed + i`. Replications run in parallel
//! but rows are collected in seed order, so identical invocations produce
//! bit-identical CSV bytes.

use anyhow::{anyhow, bail, Context, Result};
use dying_experts::adversaries::{
    gen_bernoulli, gen_known_lb, gen_stochastic_gap, gen_unknown_lb, Generated,
};
use dying_experts::adaptive::{FlipFlop, FtlLearner, QuantileMeta};
use dying_experts::grouped::GroupedLearner;
use dying_experts::hedge::{MaskedHedge, Rate, ResettingHedge};
use dying_experts::instance::{DyingSchedule, Instance};
use dying_experts::learner::{drive, drive_observed, AdaptiveDiag, DyingLearner, Regime};
use dying_experts::math::ln_factorial;
use rayon::prelude::*;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    Hedge,
    Resetting,
    Hpu,
    Hpk,
    Ftl,
    AdaHedge,
    FlipFlop,
    Quantile,
}

pub const LEARNER_TOKENS: &[(&str, LearnerKind)] = &[
    ("hedge", LearnerKind::Hedge),
    ("resetting", LearnerKind::Resetting),
    ("hpu", LearnerKind::Hpu),
    ("hpk", LearnerKind::Hpk),
    ("ftl", LearnerKind::Ftl),
    ("adahedge", LearnerKind::AdaHedge),
    ("flipflop", LearnerKind::FlipFlop),
    ("quantile", LearnerKind::Quantile),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversaryKind {
    Bernoulli,
    UnknownLb,
    KnownLb,
    Gap,
    File(PathBuf),
}

pub const ADVERSARY_TOKENS: &[&str] = &["bernoulli", "unknown-lb", "known-lb", "gap", "file"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaChoice {
    /// Learner-specific default.
    Default,
    Fixed(f64),
    /// Horizon-free schedule at the learner's own comparator count.
    Anytime,
    AdaHedge,
}

fn token_list(tokens: &[(&str, LearnerKind)]) -> String {
    tokens.iter().map(|(s, _)| *s).collect::<Vec<_>>().join(", ")
}

pub fn parse_learner(s: &str) -> Result<LearnerKind> {
    LEARNER_TOKENS
        .iter()
        .find(|(tok, _)| *tok == s)
        .map(|(_, k)| *k)
        .ok_or_else(|| {
            anyhow!(
                "unknown learner '{s}'; valid learners: {}",
                token_list(LEARNER_TOKENS)
            )
        })
}

pub fn parse_adversary(s: &str, file: Option<PathBuf>) -> Result<AdversaryKind> {
    match s {
        "bernoulli" => Ok(AdversaryKind::Bernoulli),
        "unknown-lb" => Ok(AdversaryKind::UnknownLb),
        "known-lb" => Ok(AdversaryKind::KnownLb),
        "gap" => Ok(AdversaryKind::Gap),
        "file" => file
            .map(AdversaryKind::File)
            .ok_or_else(|| anyhow!("--adversary file requires --file PATH")),
        _ => bail!(
            "unknown adversary '{s}'; valid adversaries: {}",
            ADVERSARY_TOKENS.join(", ")
        ),
    }
}

pub fn parse_eta(s: &str) -> Result<EtaChoice> {
    match s {
        "default" => Ok(EtaChoice::Default),
        "anytime" => Ok(EtaChoice::Anytime),
        "adahedge" => Ok(EtaChoice::AdaHedge),
        _ => {
            if let Some(v) = s.strip_prefix("fixed:") {
                let eta: f64 = v.parse().context("rate after 'fixed:' must be a number")?;
                if !(eta.is_finite() && eta > 0.0) {
                    bail!("fixed rate must be finite and positive, got {eta}");
                }
                Ok(EtaChoice::Fixed(eta))
            } else {
                bail!("unknown rate '{s}'; use fixed:<x>, anytime, adahedge or default")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub learner: LearnerKind,
    pub eta: EtaChoice,
    pub adversary: AdversaryKind,
    pub k: usize,
    pub t: usize,
    /// Number of deaths for the generators that take one.
    pub m: usize,
    pub seeds: usize,
    pub base_seed: u64,
    /// Bernoulli loss probability.
    pub p: f64,
    /// Per-expert means for the gap adversary; a default gap is used when
    /// absent.
    pub means: Option<Vec<f64>>,
    /// Directory receiving one instance file per seed.
    pub dump_dir: Option<PathBuf>,
}

/// One CSV row.
#[derive(Debug, Clone)]
pub struct Row {
    pub seed: u64,
    pub param: Option<u64>,
    pub t: usize,
    pub k: usize,
    pub m: usize,
    pub learner_loss: f64,
    pub best_ordering_loss: f64,
    pub ranking_regret: f64,
}

/// `m` deaths of experts 0..m-1 at evenly spaced rounds; several can share
/// a night when the horizon is tight.
pub fn evenly_spaced_schedule(k: usize, t: usize, m: usize) -> Result<DyingSchedule> {
    if m >= k {
        bail!("m = {m} leaves no survivor among {k} experts");
    }
    if t <= m {
        bail!("horizon {t} cannot host {m} deaths before the last round");
    }
    let mut death = vec![None; k];
    for (e, d) in death.iter_mut().enumerate().take(m) {
        *d = Some((e + 1) * t / (m + 1));
    }
    Ok(DyingSchedule::new(k, t, death)?)
}

/// Builds the instance for one replication.
pub fn build_instance(spec: &RunSpec, seed: u64) -> Result<Generated> {
    let schedule = |k, t| -> Result<Option<DyingSchedule>> {
        Ok(if spec.m > 0 {
            Some(evenly_spaced_schedule(k, t, spec.m)?)
        } else {
            None
        })
    };
    match &spec.adversary {
        AdversaryKind::Bernoulli => Ok(gen_bernoulli(
            spec.k,
            spec.t,
            spec.p,
            seed,
            schedule(spec.k, spec.t)?,
        )?),
        AdversaryKind::UnknownLb => Ok(gen_unknown_lb(spec.k, spec.t, spec.m, seed)?),
        AdversaryKind::KnownLb => Ok(gen_known_lb(spec.k, spec.t, spec.m, seed)?),
        AdversaryKind::Gap => {
            let means = match &spec.means {
                Some(m) => m.clone(),
                None => {
                    // one strong expert against a uniform field
                    let mut m = vec![0.8; spec.k];
                    m[0] = 0.2;
                    m
                }
            };
            if means.len() != spec.k {
                bail!("{} means for {} experts", means.len(), spec.k);
            }
            Ok(gen_stochastic_gap(spec.t, &means, seed, schedule(spec.k, spec.t)?)?)
        }
        AdversaryKind::File(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading instance file {}", path.display()))?;
            Ok(Generated {
                instance: Instance::from_text(&text)?,
                dying_order: None,
                warnings: Vec::new(),
            })
        }
    }
}

/// The declared dying order an order-aware learner may receive: the
/// generator's declaration when present, otherwise the schedule read off
/// an instance fixed before any losses are drawn. The unknown-order
/// adversary declares nothing, its deaths depend on the realized losses.
fn declared_order(spec: &RunSpec, generated: &Generated) -> Result<Vec<usize>> {
    if let Some(order) = &generated.dying_order {
        return Ok(order.clone());
    }
    match spec.adversary {
        AdversaryKind::UnknownLb => bail!(
            "the unknown-lb adversary hides its dying order; use an order-free learner"
        ),
        _ => Ok(generated.instance.schedule.dying_order()),
    }
}

fn build_learner(
    spec: &RunSpec,
    generated: &Generated,
) -> Result<Box<dyn DyingLearner + Send>> {
    let k = generated.instance.num_experts();
    let horizon = generated.instance.horizon();
    let reject_adaptive = |name: &str| -> Result<()> {
        if spec.eta == EtaChoice::AdaHedge {
            bail!("the adahedge rate is its own learner; use --learner adahedge (not {name})");
        }
        Ok(())
    };
    match spec.learner {
        LearnerKind::Hedge => {
            reject_adaptive("hedge")?;
            let rate = match spec.eta {
                EtaChoice::Fixed(x) => Rate::Fixed(x),
                _ => Rate::anytime((k as f64).ln()),
            };
            Ok(Box::new(MaskedHedge::new(k, rate)?))
        }
        LearnerKind::Resetting => {
            reject_adaptive("resetting")?;
            let rate = match spec.eta {
                EtaChoice::Fixed(x) => Rate::Fixed(x),
                _ => Rate::anytime((k as f64).ln()),
            };
            Ok(Box::new(ResettingHedge::new(k, rate)?))
        }
        LearnerKind::Hpu => {
            let rate = match spec.eta {
                EtaChoice::Default => GroupedLearner::hpu_default_rate(k, horizon),
                EtaChoice::Fixed(x) => Rate::Fixed(x),
                EtaChoice::Anytime => Rate::anytime(ln_factorial(k)),
                EtaChoice::AdaHedge => Rate::AdaHedge,
            };
            Ok(Box::new(GroupedLearner::hpu(k, rate)?))
        }
        LearnerKind::Hpk => {
            let order = declared_order(spec, generated)?;
            let d = order.len();
            let rate = match spec.eta {
                EtaChoice::Default => GroupedLearner::hpk_default_rate(k, d, horizon),
                EtaChoice::Fixed(x) => Rate::Fixed(x),
                EtaChoice::Anytime => Rate::anytime(
                    d as f64 * std::f64::consts::LN_2 + ((k - d) as f64).ln(),
                ),
                EtaChoice::AdaHedge => Rate::AdaHedge,
            };
            Ok(Box::new(GroupedLearner::hpk(k, &order, rate)?))
        }
        LearnerKind::Ftl => {
            if spec.eta != EtaChoice::Default {
                bail!("ftl has no learning rate; drop --eta");
            }
            Ok(Box::new(FtlLearner::new(k)?))
        }
        LearnerKind::AdaHedge => {
            if !matches!(spec.eta, EtaChoice::Default | EtaChoice::AdaHedge) {
                bail!("the adahedge learner sets its own rate; drop --eta");
            }
            Ok(Box::new(GroupedLearner::hpu(k, Rate::AdaHedge)?))
        }
        LearnerKind::FlipFlop => {
            if spec.eta != EtaChoice::Default {
                bail!("flipflop sets its own rates; drop --eta");
            }
            Ok(Box::new(FlipFlop::over_hpu(k)?))
        }
        LearnerKind::Quantile => {
            if spec.eta != EtaChoice::Default {
                bail!("quantile sets its own rates; drop --eta");
            }
            Ok(Box::new(QuantileMeta::new(k)?))
        }
    }
}

/// One replication: generate, optionally dump, run, score.
pub fn run_one(spec: &RunSpec, seed: u64) -> Result<Row> {
    let generated = build_instance(spec, seed)?;
    for w in &generated.warnings {
        eprintln!("warning (seed {seed}): {w}");
    }
    if let Some(dir) = &spec.dump_dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("instance-{seed}.txt"));
        std::fs::write(&path, generated.instance.to_text())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let mut learner = build_learner(spec, &generated)?;
    let record = drive(&mut *learner, &generated.instance)?;
    Ok(Row {
        seed,
        param: None,
        t: generated.instance.horizon(),
        k: generated.instance.num_experts(),
        m: generated.instance.schedule.num_deaths(),
        learner_loss: record.total_loss(),
        best_ordering_loss: record.best_ordering_loss,
        ranking_regret: record.ranking_regret,
    })
}

/// All replications, in parallel, rows in seed order.
pub fn run_all(spec: &RunSpec) -> Result<Vec<Row>> {
    (0..spec.seeds as u64)
        .into_par_iter()
        .map(|i| run_one(spec, spec.base_seed + i))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    T,
    M,
    K,
}

pub fn parse_sweep_param(s: &str) -> Result<SweepParam> {
    match s {
        "t" => Ok(SweepParam::T),
        "m" => Ok(SweepParam::M),
        "k" => Ok(SweepParam::K),
        _ => bail!("unknown sweep parameter '{s}'; valid: t, m, k"),
    }
}

/// Runs `spec` once per value, tagging rows with the value; row order is
/// (value, seed), both ascending in input order.
pub fn sweep(spec: &RunSpec, param: SweepParam, values: &[usize]) -> Result<Vec<Row>> {
    if values.is_empty() {
        bail!("sweep needs at least one value");
    }
    let mut rows = Vec::with_capacity(values.len() * spec.seeds);
    for &v in values {
        let mut s = spec.clone();
        match param {
            SweepParam::T => s.t = v,
            SweepParam::M => s.m = v,
            SweepParam::K => s.k = v,
        }
        for mut row in run_all(&s)? {
            row.param = Some(v as u64);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Writes rows with the documented header; floats carry 17 significant
/// digits so they round-trip 64-bit values exactly.
pub fn write_csv<W: Write>(w: &mut W, rows: &[Row], with_param: bool) -> std::io::Result<()> {
    if with_param {
        writeln!(w, "seed,param,T,K,m,learner_loss,best_ordering_loss,ranking_regret")?;
    } else {
        writeln!(w, "seed,T,K,m,learner_loss,best_ordering_loss,ranking_regret")?;
    }
    for r in rows {
        if with_param {
            writeln!(
                w,
                "{},{},{},{},{},{:.16e},{:.16e},{:.16e}",
                r.seed,
                r.param.unwrap_or(0),
                r.t,
                r.k,
                r.m,
                r.learner_loss,
                r.best_ordering_loss,
                r.ranking_regret
            )?;
        } else {
            writeln!(
                w,
                "{},{},{},{},{:.16e},{:.16e},{:.16e}",
                r.seed, r.t, r.k, r.m, r.learner_loss, r.best_ordering_loss, r.ranking_regret
            )?;
        }
    }
    Ok(())
}

/// Per-round diagnostics of the adaptive learners for the first seed, as
/// CSV text; None for learners without diagnostics.
pub fn trace_csv(spec: &RunSpec) -> Result<Option<String>> {
    let generated = build_instance(spec, spec.base_seed)?;
    let mut learner = build_learner(spec, &generated)?;
    let mut out = String::from("round,regime,gap_ftl,gap_adahedge\n");
    let mut any = false;
    drive_observed(&mut *learner, &generated.instance, |t, l| {
        if let Some(AdaptiveDiag {
            regime,
            gap_ftl,
            gap_adahedge,
        }) = l.diag()
        {
            any = true;
            let name = match regime {
                Regime::Ftl => "ftl",
                Regime::AdaHedge => "adahedge",
            };
            out.push_str(&format!(
                "{t},{name},{gap_ftl:.16e},{gap_adahedge:.16e}\n"
            ));
        }
    })?;
    Ok(if any { Some(out) } else { None })
}
