//! Verification suites behind `dyexp verify`: each certifies one pillar of
//! the implementation against brute force and reports structured text.

use anyhow::{bail, Result};
use dying_experts::adaptive::FtlState;
use dying_experts::grouped::{drive_expanded, preprocess_dummy_rounds, GroupedLearner};
use dying_experts::instance::{DyingSchedule, Instance, LossStream};
use dying_experts::learner::{drive, DyingLearner};
use dying_experts::oracle::{certify, dedup_behaviors, hedge_over_orderings, CertifyReport};
use dying_experts::ordering::{count_effective, count_effective_for, enumerate_effective, Ordering};
use dying_experts::regret::regret_report;
use dying_experts::rng::Substream;
use itertools::Itertools;
use rayon::prelude::*;

pub const SUITE_NAMES: &[&str] = &["thm1", "thm7", "thm8", "dummy", "ftl-lstar"];

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub k_max: usize,
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            k_max: 6,
            trials: 50,
            tol: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: String,
    pub pass: bool,
    pub lines: Vec<String>,
}

impl SuiteReport {
    fn push(&mut self, ok: bool, msg: String) {
        self.pass &= ok;
        self.lines
            .push(format!("{} {msg}", if ok { "ok  " } else { "FAIL" }));
    }
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<SuiteReport> {
    if cfg.k_max == 0 || cfg.trials == 0 {
        bail!("k_max and trials must be positive");
    }
    if cfg.k_max < 2 && matches!(name, "thm7" | "thm8" | "dummy") {
        bail!("suite '{name}' needs k_max >= 2");
    }
    let mut report = SuiteReport {
        name: name.to_string(),
        pass: true,
        lines: Vec::new(),
    };
    match name {
        "thm1" => counting_suite(cfg, &mut report),
        "thm7" => unknown_order_suite(cfg, &mut report),
        "thm8" => known_order_suite(cfg, &mut report),
        "dummy" => dummy_round_suite(cfg, &mut report),
        "ftl-lstar" => ftl_tracking_suite(cfg, &mut report),
        _ => bail!(
            "unknown suite '{name}'; valid suites: {}",
            SUITE_NAMES.join(", ")
        ),
    }
    Ok(report)
}

/// A schedule with `deaths` deaths at uniformly drawn distinct experts,
/// possibly several per night.
fn random_schedule(k: usize, t: usize, rng: &mut Substream, multi: bool) -> DyingSchedule {
    let m = rng.next_below(k);
    let mut experts: Vec<usize> = (0..k).collect();
    let mut death = vec![None; k];
    let mut free_rounds: Vec<usize> = (1..t).collect();
    let mut used_rounds: Vec<usize> = Vec::new();
    for _ in 0..m {
        let e = experts.remove(rng.next_below(experts.len()));
        // with multi-death nights allowed, reuse an occupied night half
        // the time
        let r = if multi && !used_rounds.is_empty() && rng.next_below(2) == 0 {
            used_rounds[rng.next_below(used_rounds.len())]
        } else {
            let r = free_rounds.remove(rng.next_below(free_rounds.len()));
            used_rounds.push(r);
            r
        };
        death[e] = Some(r);
    }
    DyingSchedule::new(k, t, death).expect("valid random schedule")
}

fn random_instance(k: usize, t: usize, rng: &mut Substream, multi: bool) -> Instance {
    let schedule = random_schedule(k, t, rng, multi);
    let data = (0..k * t).map(|_| rng.next_unit()).collect();
    Instance::new(LossStream::new(k, t, data).unwrap(), schedule).unwrap()
}

fn all_orderings(k: usize) -> Vec<Ordering> {
    (0..k)
        .permutations(k)
        .map(|p| Ordering::new(p).unwrap())
        .collect()
}

/// Counting: the closed-form effective-ordering count against behavior
/// dedup over K!, plus the no-death and the all-single-death extremes.
fn counting_suite(cfg: &SuiteConfig, report: &mut SuiteReport) {
    let k_max = cfg.k_max.min(7);
    let mut rng = Substream::new(cfg.seed, &[1]);
    let mut mismatches = 0usize;
    for trial in 0..cfg.trials {
        let k = 1 + rng.next_below(k_max);
        let s = random_schedule(k, 10, &mut rng, true);
        let counted = count_effective_for(&s).unwrap();
        let deduped = dedup_behaviors(&s).unwrap().count() as u128;
        if counted != deduped {
            mismatches += 1;
            report.push(
                false,
                format!("trial {trial}: closed form {counted} != dedup {deduped}"),
            );
        }
    }
    report.push(
        mismatches == 0,
        format!(
            "{} random schedules (K <= {k_max}): closed-form count matches behavior dedup",
            cfg.trials
        ),
    );

    let no_death_ok = (1..=k_max).all(|k| {
        count_effective_for(&DyingSchedule::empty(k, 5)).unwrap() == k as u128
    });
    report.push(
        no_death_ok,
        format!("no deaths: count equals the number of experts (K <= {k_max})"),
    );

    for k in 3..=k_max {
        let max = max_count_over_compositions(k);
        let want = 1u128 << (k - 1);
        report.push(
            max == want,
            format!("K = {k}: maximal count over death compositions {max} (expect {want})"),
        );
    }
}

/// Max of the effective-ordering count over all (death composition,
/// survivor count) splits of k experts.
fn max_count_over_compositions(k: usize) -> u128 {
    fn rec(remaining: usize, parts: &mut Vec<usize>, a: usize, best: &mut u128) {
        if remaining == 0 {
            let f = count_effective(parts, a).unwrap();
            *best = (*best).max(f);
            return;
        }
        for d in 1..=remaining {
            parts.push(d);
            rec(remaining - d, parts, a, best);
            parts.pop();
        }
    }
    let mut best = 0u128;
    for a in 1..=k {
        rec(k - a, &mut Vec::new(), a, &mut best);
    }
    best
}

struct Certification {
    gap: f64,
    failure: Option<String>,
}

fn summarize_certifications(
    name: &str,
    results: Vec<Certification>,
    report: &mut SuiteReport,
) {
    let max_gap = results.iter().map(|c| c.gap).fold(0.0f64, f64::max);
    let failures: Vec<&String> = results.iter().filter_map(|c| c.failure.as_ref()).collect();
    for f in &failures {
        report.push(false, (*f).clone());
    }
    report.push(
        failures.is_empty(),
        format!("{name}: {} certifications, max gap {max_gap:.3e}", results.len()),
    );
}

/// Replays a fresh learner up to the divergent round and dumps its state
/// there, alongside the offending instance.
fn describe_failure(
    rep: &CertifyReport,
    instance: &Instance,
    mut fresh: GroupedLearner,
) -> String {
    let (round, gap) = rep.first_divergence.unwrap_or((0, rep.max_gap));
    for t in 1..=round.saturating_sub(1) {
        let _ = fresh.play();
        let _ = fresh.observe(instance.losses.round(t));
        for j in instance.schedule.deaths_on(t) {
            let _ = fresh.on_death(j);
        }
    }
    format!(
        "diverged at round {round} (gap {gap:.3e})\n--- learner state entering round {round} ---\n{}\n--- instance ---\n{}",
        fresh.core().snapshot(),
        instance.to_text()
    )
}

/// The unknown-order learner against Hedge over all K! orderings.
fn unknown_order_suite(cfg: &SuiteConfig, report: &mut SuiteReport) {
    let k_max = cfg.k_max.min(7);
    for k in 2..=k_max {
        let orderings = all_orderings(k);
        let results: Vec<Certification> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = Substream::new(cfg.seed, &[7, k as u64, trial as u64]);
                let t = 10 + rng.next_below(41);
                let inst = random_instance(k, t, &mut rng, false);
                let rate = GroupedLearner::hpu_default_rate(k, t);
                let mut learner = GroupedLearner::hpu(k, rate).unwrap();
                let rec = drive(&mut learner, &inst).unwrap();
                let oracle = hedge_over_orderings(&orderings, None, &inst, rate).unwrap();
                let rep = certify(&rec.distributions, &oracle, cfg.tol).unwrap();
                drop(learner);
                Certification {
                    gap: rep.max_gap,
                    failure: (!rep.pass).then(|| {
                        describe_failure(&rep, &inst, GroupedLearner::hpu(k, rate).unwrap())
                    }),
                }
            })
            .collect();
        summarize_certifications(&format!("K = {k}"), results, report);
    }
}

/// The known-order learner against Hedge over the effective orderings,
/// including schedules with several survivors and multi-death nights
/// (where the comparator multiset comes from the serialized schedule).
fn known_order_suite(cfg: &SuiteConfig, report: &mut SuiteReport) {
    let k_max = cfg.k_max.min(7);
    for k in 2..=k_max {
        let results: Vec<Certification> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = Substream::new(cfg.seed, &[8, k as u64, trial as u64]);
                let t = 10 + rng.next_below(31);
                let inst = random_instance(k, t, &mut rng, true);
                let order = inst.schedule.dying_order();
                let rate = GroupedLearner::hpk_default_rate(k, order.len(), t);
                let mut learner = GroupedLearner::hpk(k, &order, rate).unwrap();
                let rec = drive(&mut learner, &inst).unwrap();
                let expansion = preprocess_dummy_rounds(&inst).unwrap();
                let comparators =
                    enumerate_effective(&expansion.instance.schedule, 1 << 20).unwrap();
                let oracle = hedge_over_orderings(&comparators, None, &inst, rate).unwrap();
                let rep = certify(&rec.distributions, &oracle, cfg.tol).unwrap();
                drop(learner);
                Certification {
                    gap: rep.max_gap,
                    failure: (!rep.pass).then(|| {
                        describe_failure(&rep, &inst, GroupedLearner::hpk(k, &order, rate).unwrap())
                    }),
                }
            })
            .collect();
        summarize_certifications(&format!("K = {k}"), results, report);
    }
}

/// Serialized multi-death nights: inline dummy rounds, materialized dummy
/// rounds, and the simultaneous-death oracle must all agree for both
/// grouped learners, and the projected regret must equal the direct
/// regret exactly.
fn dummy_round_suite(cfg: &SuiteConfig, report: &mut SuiteReport) {
    let k_max = cfg.k_max.min(7);
    let mut inline_vs_materialized = true;
    let mut regret_equal = true;
    let mut max_oracle_gap = 0.0f64;
    let mut oracle_ok = true;
    let mut rng = Substream::new(cfg.seed, &[11]);
    for _ in 0..cfg.trials {
        let k = 2 + rng.next_below(k_max - 1);
        let t = 8 + rng.next_below(17);
        let inst = random_instance(k, t, &mut rng, true);
        let expansion = preprocess_dummy_rounds(&inst).unwrap();
        let order = inst.schedule.dying_order();

        let unknown_rate = GroupedLearner::hpu_default_rate(k, t);
        let known_rate = GroupedLearner::hpk_default_rate(k, order.len(), t);
        let make: Vec<(&str, Box<dyn Fn() -> GroupedLearner>)> = vec![
            ("hpu", Box::new(|| GroupedLearner::hpu(k, unknown_rate).unwrap())),
            ("hpk", Box::new(|| GroupedLearner::hpk(k, &order, known_rate).unwrap())),
        ];
        for (which, fresh) in &make {
            let mut inline = fresh();
            let rec = drive(&mut inline, &inst).unwrap();

            let mut materialized = fresh();
            let plays = drive_expanded(&mut materialized, &expansion).unwrap();
            let projected = expansion.project(&plays);
            inline_vs_materialized &= rec.distributions == projected;

            let projected_record =
                regret_report(&projected, &inst.losses, &inst.schedule).unwrap();
            regret_equal &= projected_record.ranking_regret == rec.ranking_regret;

            let comparators: Vec<Ordering> = match *which {
                "hpu" => all_orderings(k),
                _ => enumerate_effective(&expansion.instance.schedule, 1 << 20).unwrap(),
            };
            let rate = match *which {
                "hpu" => unknown_rate,
                _ => known_rate,
            };
            let oracle = hedge_over_orderings(&comparators, None, &inst, rate).unwrap();
            let rep = certify(&rec.distributions, &oracle, cfg.tol).unwrap();
            oracle_ok &= rep.pass;
            max_oracle_gap = max_oracle_gap.max(rep.max_gap);
        }
    }
    report.push(
        inline_vs_materialized,
        format!(
            "{} trials: inline and materialized dummy rounds agree bitwise (hpu and hpk)",
            cfg.trials
        ),
    );
    report.push(
        regret_equal,
        "projected regret equals direct regret exactly".to_string(),
    );
    report.push(
        oracle_ok,
        format!("simultaneous-death oracle agrees, max gap {max_oracle_gap:.3e}"),
    );
}

/// The clamped leader values against per-ordering brute force, every
/// round, bit for bit.
fn ftl_tracking_suite(cfg: &SuiteConfig, report: &mut SuiteReport) {
    let k_max = cfg.k_max.min(7);
    let mut rng = Substream::new(cfg.seed, &[13]);
    let mut exact = 0usize;
    for trial in 0..cfg.trials {
        let k = 1 + rng.next_below(k_max);
        let t = 6 + rng.next_below(15);
        let inst = random_instance(k, t, &mut rng, true);

        let mut state = FtlState::new(k).unwrap();
        let mut perms: Vec<Vec<usize>> = (0..k).permutations(k).collect();
        let mut pos = vec![0usize; perms.len()];
        let mut cums = vec![0.0f64; perms.len()];
        let mut ok = true;
        for t0 in 1..=t {
            let row = inst.losses.round(t0);
            let alive = inst.schedule.alive_mask(t0);
            for (j, perm) in perms.iter_mut().enumerate() {
                while !alive[perm[pos[j]]] {
                    pos[j] += 1;
                }
                cums[j] += row[perm[pos[j]]];
            }
            state.absorb(row).unwrap();
            for dying in inst.schedule.deaths_on(t0) {
                state.on_death(dying).unwrap();
            }
            let brute = cums.iter().copied().fold(f64::INFINITY, f64::min);
            if state.best_loss() != brute {
                ok = false;
                report.push(
                    false,
                    format!(
                        "trial {trial} round {t0}: clamped best {:?} != brute {:?}",
                        state.best_loss(),
                        brute
                    ),
                );
                break;
            }
        }
        if ok {
            exact += 1;
        }
    }
    report.push(
        exact == cfg.trials,
        format!(
            "{exact}/{} runs track the best ordering loss bitwise every round",
            cfg.trials
        ),
    );
}
