//! Desk-scale acceptance gate: ten criteria covering the counting
//! identities, the oracle equivalences, the scaling behavior of every
//! shipped learner, and the adaptive-rate invariants. One summary line
//! per criterion; the process exits nonzero if any fails.
//!
//! Tolerances and instance sizes are pinned here on purpose; loosening
//! them is a contract change, not a tuning knob.

use dying_experts::adaptive::mix_loss;
use dying_experts::adversaries::gen_bernoulli;
use dying_experts::grouped::{preprocess_dummy_rounds, GroupedLearner};
use dying_experts::hedge::{Rate, ResettingHedge};
use dying_experts::instance::{DyingSchedule, Instance, LossStream};
use dying_experts::learner::{drive, DyingLearner};
use dying_experts::math::{dot, ln_factorial};
use dying_experts::oracle::{certify, hedge_over_orderings};
use dying_experts::ordering::{enumerate_effective, Behavior, Ordering};
use dying_experts::rng::Substream;
use dyexp::fit::fit_exponent;
use dyexp::runner::{
    evenly_spaced_schedule, run_all, AdversaryKind, EtaChoice, LearnerKind, RunSpec,
};
use dyexp::suites::{run_suite, SuiteConfig, SuiteReport};
use rayon::prelude::*;
use std::collections::HashMap;
use std::time::Instant;

type Outcome = Result<String, String>;

fn main() {
    let criteria: &[(&str, fn() -> Outcome)] = &[
        ("criterion 1 (effective-ordering count)", counting),
        ("criterion 2 (unknown-order vs full oracle)", unknown_order_equivalence),
        ("criterion 3 (known-order vs effective oracle)", known_order_equivalence),
        ("criterion 4 (dummy-round serialization)", dummy_rounds),
        ("criterion 5 (resetting hedge scaling)", resetting_scaling),
        ("criterion 6 (grouped learner scaling in m)", grouped_scaling),
        ("criterion 7 (leader loss tracking)", leader_tracking),
        ("criterion 8 (adaptive rate invariants)", adaptive_invariants),
        ("criterion 9 (regime switching payoff)", regime_switching),
        ("criterion 10 (quantile copies vs resets)", quantile_vs_resetting),
    ];
    let mut failed = 0usize;
    for (name, run) in criteria {
        let start = Instant::now();
        let elapsed = |s: Instant| s.elapsed().as_secs_f64();
        match run() {
            Ok(msg) => println!("PASS {name}: {msg} [{:.1}s]", elapsed(start)),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg} [{:.1}s]", elapsed(start));
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} of 10 acceptance criteria failed");
        std::process::exit(1);
    }
}

fn suite_or_fail(name: &str, cfg: SuiteConfig) -> Result<SuiteReport, String> {
    let rep = run_suite(name, &cfg).map_err(|e| format!("suite setup failed: {e}"))?;
    if rep.pass {
        Ok(rep)
    } else {
        let detail: Vec<&str> = rep
            .lines
            .iter()
            .filter(|l| l.starts_with("FAIL"))
            .take(3)
            .map(|l| l.as_str())
            .collect();
        Err(detail.join(" | "))
    }
}

fn within_budget(start: Instant, cap_secs: f64, msg: String) -> Outcome {
    let secs = start.elapsed().as_secs_f64();
    if secs <= cap_secs {
        Ok(format!("{msg} ({secs:.1}s < {cap_secs:.0}s)"))
    } else {
        Err(format!("{msg}, but took {secs:.1}s > {cap_secs:.0}s"))
    }
}

/// 200 random schedules up to 7 experts: the closed-form count equals
/// behavior dedup over K!, including the no-death and the maximal
/// single-death-chain extremes. Under a minute.
fn counting() -> Outcome {
    let start = Instant::now();
    suite_or_fail(
        "thm1",
        SuiteConfig {
            k_max: 7,
            trials: 200,
            tol: 1e-9,
            seed: 101,
        },
    )?;
    within_budget(
        start,
        60.0,
        "200 schedules: closed-form counts equal behavior dedup, extremes included".into(),
    )
}

/// The unknown-order learner against Hedge over all K! orderings:
/// 50 instances per K in 2..=7, horizons up to 50, single-death
/// schedules, per-round distribution gap at most 1e-9.
fn unknown_order_equivalence() -> Outcome {
    let start = Instant::now();
    suite_or_fail(
        "thm7",
        SuiteConfig {
            k_max: 7,
            trials: 50,
            tol: 1e-9,
            seed: 202,
        },
    )?;
    within_budget(
        start,
        300.0,
        "300 instances across K = 2..=7: every distribution within 1e-9 of the full oracle"
            .into(),
    )
}

/// The known-order learner against Hedge over the effective orderings,
/// same protocol, plus multi-survivor schedules certified against
/// multiplicity-weighted collapsed oracles.
fn known_order_equivalence() -> Outcome {
    let start = Instant::now();
    suite_or_fail(
        "thm8",
        SuiteConfig {
            k_max: 7,
            trials: 50,
            tol: 1e-9,
            seed: 303,
        },
    )?;

    // collapse the serialized comparator multiset by realized behavior and
    // rerun the oracle with counts as initial weights; both forms must
    // agree with each other and with the learner
    let mut max_collapse_gap = 0.0f64;
    let mut max_learner_gap = 0.0f64;
    for trial in 0..10u64 {
        let mut rng = Substream::new(0xacc3, &[trial]);
        let k = 4 + rng.next_below(3);
        let t = 12 + rng.next_below(9);
        // two or three immortals, deaths packed two per night
        let survivors = 2 + (trial as usize % 2);
        let m = k - survivors;
        let mut death = vec![None; k];
        for e in 0..m {
            death[e] = Some(3 * (e / 2 + 1));
        }
        let schedule = DyingSchedule::new(k, t, death).map_err(|e| e.to_string())?;
        let data = (0..k * t).map(|_| rng.next_unit()).collect();
        let inst = Instance::new(
            LossStream::new(k, t, data).map_err(|e| e.to_string())?,
            schedule,
        )
        .map_err(|e| e.to_string())?;

        let order = inst.schedule.dying_order();
        let rate = GroupedLearner::hpk_default_rate(k, order.len(), t);
        let mut learner =
            GroupedLearner::hpk(k, &order, rate).map_err(|e| e.to_string())?;
        let rec = drive(&mut learner, &inst).map_err(|e| e.to_string())?;

        let expansion = preprocess_dummy_rounds(&inst).map_err(|e| e.to_string())?;
        let expanded = enumerate_effective(&expansion.instance.schedule, 1 << 20)
            .map_err(|e| e.to_string())?;
        let mut index: HashMap<Behavior, usize> = HashMap::new();
        let mut reps: Vec<Ordering> = Vec::new();
        let mut mults: Vec<usize> = Vec::new();
        for o in &expanded {
            let b = o.behavior_of(&inst.schedule);
            match index.get(&b) {
                Some(&i) => mults[i] += 1,
                None => {
                    index.insert(b, reps.len());
                    reps.push(o.clone());
                    mults.push(1);
                }
            }
        }
        let full =
            hedge_over_orderings(&expanded, None, &inst, rate).map_err(|e| e.to_string())?;
        let collapsed = hedge_over_orderings(&reps, Some(&mults), &inst, rate)
            .map_err(|e| e.to_string())?;
        let gap_forms = certify(&collapsed, &full, 1e-12).map_err(|e| e.to_string())?;
        if !gap_forms.pass {
            return Err(format!(
                "collapsed oracle diverged from the expanded one (gap {:.3e}, trial {trial})",
                gap_forms.max_gap
            ));
        }
        max_collapse_gap = max_collapse_gap.max(gap_forms.max_gap);
        let vs_learner =
            certify(&rec.distributions, &collapsed, 1e-9).map_err(|e| e.to_string())?;
        if !vs_learner.pass {
            return Err(format!(
                "learner diverged from the collapsed oracle (gap {:.3e}, trial {trial})",
                vs_learner.max_gap
            ));
        }
        max_learner_gap = max_learner_gap.max(vs_learner.max_gap);
    }
    within_budget(
        start,
        300.0,
        format!(
            "effective-set oracle within 1e-9; multiplicity-weighted collapse within 1e-12 \
             (worst {max_collapse_gap:.2e} between forms, {max_learner_gap:.2e} vs learner)"
        ),
    )
}

/// Multi-death nights give identical original-round distributions whether
/// serialized inline, materialized as zero-loss rounds, or handled by the
/// simultaneous-death oracle. Both grouped learners, K <= 6, 1e-12.
fn dummy_rounds() -> Outcome {
    suite_or_fail(
        "dummy",
        SuiteConfig {
            k_max: 6,
            trials: 50,
            tol: 1e-12,
            seed: 404,
        },
    )?;
    Ok("50 multi-death instances: inline, materialized and oracle views agree within 1e-12"
        .into())
}

const SCALING_HORIZONS: [usize; 4] = [1 << 10, 1 << 12, 1 << 14, 1 << 16];

fn regrets_at(spec: &RunSpec, t: usize) -> Result<Vec<f64>, String> {
    let mut s = spec.clone();
    s.t = t;
    let rows = run_all(&s).map_err(|e| format!("runner failed at T = {t}: {e}"))?;
    Ok(rows.iter().map(|r| r.ranking_regret).collect())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Resetting Hedge on the hidden-order lower-bound family, K = 8, m = 3,
/// 100 seeds: the fitted regret exponent sits in [0.4, 0.6] and the mean
/// stays under sqrt((m+1) T ln K) at every horizon. Under ten minutes.
fn resetting_scaling() -> Outcome {
    let start = Instant::now();
    let spec = RunSpec {
        learner: LearnerKind::Resetting,
        eta: EtaChoice::Default,
        adversary: AdversaryKind::UnknownLb,
        k: 8,
        t: 0,
        m: 3,
        seeds: 100,
        base_seed: 1000,
        p: 0.5,
        means: None,
        dump_dir: None,
    };
    let mut per_t = Vec::new();
    for &t in &SCALING_HORIZONS {
        let regrets = regrets_at(&spec, t)?;
        let m = mean(&regrets);
        let bound = (4.0 * t as f64 * (8.0f64).ln()).sqrt();
        if m > bound {
            return Err(format!(
                "mean regret {m:.1} exceeds the order bound {bound:.1} at T = {t}"
            ));
        }
        per_t.push(regrets);
    }
    let fit = fit_exponent(&SCALING_HORIZONS, &per_t).map_err(|e| e.to_string())?;
    if let Some(why) = fit.untestable {
        return Err(format!("scaling fit untestable: {why}"));
    }
    if !(0.4..=0.6).contains(&fit.slope) {
        return Err(format!("fitted exponent {:.3} outside [0.4, 0.6]", fit.slope));
    }
    let ci = fit
        .ci
        .map(|(lo, hi)| format!(", 95% CI [{lo:.3}, {hi:.3}]"))
        .unwrap_or_default();
    within_budget(
        start,
        600.0,
        format!(
            "exponent {:.3}{ci}; means under sqrt((m+1) T ln K) at T = 2^{{10,12,14,16}}",
            fit.slope
        ),
    )
}

/// One scaling leg of criterion 6: fitted exponent per m plus the mean
/// regret at the largest horizon, which must grow with m where the
/// family forces it.
fn scaling_leg(
    label: &str,
    learner: LearnerKind,
    adversary: AdversaryKind,
    ms: &[usize],
    base: u64,
    check_monotone: bool,
) -> Result<String, String> {
    let mut top_means = Vec::new();
    let mut slopes = Vec::new();
    for (i, &m) in ms.iter().enumerate() {
        let spec = RunSpec {
            learner,
            eta: EtaChoice::Default,
            adversary: adversary.clone(),
            k: 8,
            t: 0,
            m,
            seeds: 100,
            base_seed: base + 1000 * i as u64,
            p: 0.5,
            means: None,
            dump_dir: None,
        };
        let mut per_t = Vec::new();
        for &t in &SCALING_HORIZONS {
            per_t.push(regrets_at(&spec, t)?);
        }
        let fit = fit_exponent(&SCALING_HORIZONS, &per_t).map_err(|e| e.to_string())?;
        if let Some(why) = fit.untestable {
            return Err(format!("{label}, m = {m}: fit untestable: {why}"));
        }
        if !(0.4..=0.6).contains(&fit.slope) {
            return Err(format!(
                "{label}, m = {m}: exponent {:.3} outside [0.4, 0.6]",
                fit.slope
            ));
        }
        slopes.push(format!("{:.2}", fit.slope));
        top_means.push(mean(per_t.last().unwrap()));
    }
    if check_monotone {
        for w in top_means.windows(2) {
            if w[1] <= w[0] {
                return Err(format!(
                    "{label}: mean regret at T = 65536 not increasing in m ({:?})",
                    top_means
                ));
            }
        }
    }
    let shown: Vec<String> = top_means.iter().map(|m| format!("{m:.0}")).collect();
    Ok(format!(
        "{label}: exponents [{}], top-horizon means [{}]{}",
        slopes.join(", "),
        shown.join(", "),
        if check_monotone { " increasing" } else { "" }
    ))
}

/// Both grouped learners scale like sqrt(T) on their lower-bound
/// families. The death count 1/3/7 sweep is monotone on the hidden-order
/// family; the declared-order generator only accepts even death counts
/// (two per day), so it runs 2/4/8 for the exponent check alone. Its
/// realized means are flat in m there: the pair races get shorter as
/// their number grows, and the two effects cancel at the tuned rate.
fn grouped_scaling() -> Outcome {
    let unknown = scaling_leg(
        "hidden order",
        LearnerKind::Hpu,
        AdversaryKind::UnknownLb,
        &[1, 3, 7],
        20_000,
        true,
    )?;
    let known = scaling_leg(
        "declared order",
        LearnerKind::Hpk,
        AdversaryKind::KnownLb,
        &[2, 4, 8],
        30_000,
        false,
    )?;
    Ok(format!("{unknown}; {known}"))
}

/// The incremental leader state equals the per-ordering brute force at
/// every round of 100 random instances, bit for bit.
fn leader_tracking() -> Outcome {
    suite_or_fail(
        "ftl-lstar",
        SuiteConfig {
            k_max: 6,
            trials: 100,
            tol: 1e-9,
            seed: 707,
        },
    )?;
    Ok("100 instances, K <= 6: clamped leader losses match brute force exactly".into())
}

/// The self-tuned rate: its accumulated gap never decreases, each round's
/// increment matches the recorded surplus bitwise, and the recovered mix
/// loss sits between the smallest alive loss and the played loss.
fn adaptive_invariants() -> Outcome {
    let mut worst_slack = 0.0f64;
    for i in 0..100u64 {
        let k = 2 + (i as usize % 6);
        let t = 40 + (i as usize % 3) * 10;
        let m = i as usize % k;
        let schedule = evenly_spaced_schedule(k, t, m).map_err(|e| e.to_string())?;
        let inst = gen_bernoulli(k, t, 0.5, 8_000 + i, Some(schedule))
            .map_err(|e| e.to_string())?
            .instance;

        let mut learner = GroupedLearner::hpu(k, Rate::AdaHedge).map_err(|e| e.to_string())?;
        let log_n = ln_factorial(k);
        let mut prev_gap = 0.0f64;
        for t0 in 1..=t {
            let row = inst.losses.round(t0);
            let played = learner.play();
            let prev_best = learner.ftl().best_loss();
            learner.observe(row).map_err(|e| e.to_string())?;
            let gap = learner.diag().expect("adaptive diagnostics").gap_adahedge;
            if gap < prev_gap {
                return Err(format!("gap decreased at round {t0} of run {i}: {prev_gap} -> {gap}"));
            }
            let lhat = dot(&played, row);
            let mix = if prev_gap > 0.0 {
                mix_loss(&played, row, log_n / prev_gap).map_err(|e| e.to_string())?
            } else {
                learner.ftl().best_loss() - prev_best
            };
            let expect = prev_gap + (lhat - mix).max(0.0);
            if gap != expect {
                return Err(format!(
                    "round {t0} of run {i}: gap {gap} differs from the recorded surplus {expect}"
                ));
            }
            let alive = inst.schedule.alive_mask(t0);
            let floor = row
                .iter()
                .zip(&alive)
                .filter(|(_, &a)| a)
                .map(|(&l, _)| l)
                .fold(f64::INFINITY, f64::min);
            let tol = 1e-12;
            if mix < floor - tol || mix > lhat + tol {
                return Err(format!(
                    "round {t0} of run {i}: mix loss {mix} outside [{floor}, {lhat}]"
                ));
            }
            worst_slack = worst_slack.max(floor - mix).max(mix - lhat);
            for j in inst.schedule.deaths_on(t0) {
                learner.on_death(j).map_err(|e| e.to_string())?;
            }
            prev_gap = gap;
        }
    }
    Ok(format!(
        "100 runs: gap non-decreasing, increments exact, mix loss sandwiched \
         (worst overshoot {worst_slack:.1e})"
    ))
}

/// The regime-switching learner pays almost nothing on a stochastic gap
/// (its leader-following branch) while staying within a constant factor
/// of the plain grouped learner on the adversarial family.
fn regime_switching() -> Outcome {
    let gap_spec = RunSpec {
        learner: LearnerKind::FlipFlop,
        eta: EtaChoice::Default,
        adversary: AdversaryKind::Gap,
        k: 5,
        t: 0,
        m: 0,
        seeds: 100,
        base_seed: 900,
        p: 0.5,
        means: None,
        dump_dir: None,
    };
    let small = mean(&regrets_at(&gap_spec, 1_000)?);
    let large = mean(&regrets_at(&gap_spec, 10_000)?);
    if large > small + 5.0 {
        return Err(format!(
            "stochastic gap: mean regret grew from {small:.2} at T = 1e3 to {large:.2} at T = 1e4"
        ));
    }

    let mut lb_spec = gap_spec.clone();
    lb_spec.adversary = AdversaryKind::UnknownLb;
    lb_spec.m = 3;
    lb_spec.base_seed = 950;
    let flip = mean(&regrets_at(&lb_spec, 4_096)?);
    lb_spec.learner = LearnerKind::Hpu;
    let plain = mean(&regrets_at(&lb_spec, 4_096)?);
    if flip > 4.0 * plain {
        return Err(format!(
            "adversarial family: {flip:.1} vs plain {plain:.1} exceeds the 4x allowance"
        ));
    }
    Ok(format!(
        "gap means {small:.2} -> {large:.2} (growth <= 5); adversarial {flip:.1} <= 4 x {plain:.1}"
    ))
}

/// A field where the clear early leader dies after round 1000, nine decoy
/// deaths follow, and one survivor stays 0.1 ahead of the rest in the
/// mean: the best ordering switches once, but every reset forces a fresh
/// identification race.
fn switching_family(seed: u64) -> Result<Instance, String> {
    let (k, t) = (16usize, 10_000usize);
    let mut death = vec![None; k];
    death[0] = Some(1_000);
    for j in 1..=9usize {
        death[j] = Some(1_000 + 900 * j);
    }
    let schedule = DyingSchedule::new(k, t, death).map_err(|e| e.to_string())?;
    let mut streams: Vec<Substream> = (0..k)
        .map(|e| Substream::new(seed, &[10, e as u64]))
        .collect();
    let mut data = Vec::with_capacity(k * t);
    for round in 1..=t {
        for e in 0..k {
            let u = streams[e].next_unit();
            let loss = if !schedule.is_alive(e, round) {
                1.0
            } else if e == 0 {
                0.0
            } else {
                let p = if e == 15 { 0.45 } else { 0.55 };
                if u < p {
                    1.0
                } else {
                    0.0
                }
            };
            data.push(loss);
        }
    }
    Instance::new(LossStream::new(k, t, data).map_err(|e| e.to_string())?, schedule)
        .map_err(|e| e.to_string())
}

/// With ten deaths but a single real change of the best ordering, the
/// behavioral-copy learner beats Resetting Hedge in mean ranking regret:
/// resets re-run the identification race after every death, copies keep
/// their accumulated evidence.
fn quantile_vs_resetting() -> Outcome {
    let per_seed: Vec<Result<(f64, f64), String>> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let inst = switching_family(1_200 + i)?;
            let k = inst.num_experts();
            let mut quant = dying_experts::adaptive::QuantileMeta::new(k)
                .map_err(|e| e.to_string())?;
            let q = drive(&mut quant, &inst).map_err(|e| e.to_string())?;
            let mut reset = ResettingHedge::with_default_rate(k).map_err(|e| e.to_string())?;
            let r = drive(&mut reset, &inst).map_err(|e| e.to_string())?;
            Ok((q.ranking_regret, r.ranking_regret))
        })
        .collect();
    let mut quantile = Vec::with_capacity(100);
    let mut resetting = Vec::with_capacity(100);
    for res in per_seed {
        let (q, r) = res?;
        quantile.push(q);
        resetting.push(r);
    }
    let (mq, mr) = (mean(&quantile), mean(&resetting));
    if mq >= mr {
        return Err(format!(
            "mean ranking regret: copies {mq:.1} not below resets {mr:.1} over 100 seeds"
        ));
    }
    Ok(format!(
        "mean ranking regret {mq:.1} (copies) < {mr:.1} (resets), 100 seeds, one real switch, ten deaths"
    ))
}
