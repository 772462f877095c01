//! Loss streams, dying schedules, and the plain-text instance format.
//!
//! Rounds are numbered 1..=T throughout the public API. A death round `r`
//! means the expert is alive for rounds 1..=r (it still receives the round-r
//! loss) and dead from round r+1 on; the round is then a *night*. Deaths at
//! the end of round T would be observable by nobody and are rejected.
//!
//! Text format, bit-exact on decimal strings:
//!
//! ```text
//! K T
//! d_1 d_2 ... d_K        one entry per expert: death round or `-` for never
//! l_{1,1} ... l_{K,1}    then T lines of K space-separated losses
//! ...
//! ```

use crate::{Error, Result};
use std::fmt::Write as _;

/// T x K losses in [0,1], stored row-major by round.
#[derive(Debug, Clone, PartialEq)]
pub struct LossStream {
    k: usize,
    horizon: usize,
    data: Vec<f64>,
}

impl LossStream {
    pub fn new(k: usize, horizon: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 || horizon == 0 {
            return Err(Error::invalid("K and T must both be at least 1"));
        }
        if data.len() != k * horizon {
            return Err(Error::invalid(format!(
                "expected {} losses ({} rounds x {} experts), got {}",
                k * horizon,
                horizon,
                k,
                data.len()
            )));
        }
        for (idx, &v) in data.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!(
                    "loss out of [0,1] at round {}, expert {}: {}",
                    idx / k + 1,
                    idx % k + 1,
                    v
                )));
            }
        }
        Ok(LossStream { k, horizon, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let horizon = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("ragged loss rows"));
        }
        LossStream::new(k, horizon, rows.into_iter().flatten().collect())
    }

    pub fn num_experts(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Losses of round `t` (1-based), one entry per expert.
    pub fn round(&self, t: usize) -> &[f64] {
        assert!(t >= 1 && t <= self.horizon, "round {t} out of 1..={}", self.horizon);
        &self.data[(t - 1) * self.k..t * self.k]
    }

    pub fn loss(&self, expert: usize, t: usize) -> f64 {
        self.round(t)[expert]
    }
}

/// Per-expert death rounds plus the derived night/day structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyingSchedule {
    k: usize,
    horizon: usize,
    death_round: Vec<Option<usize>>,
}

impl DyingSchedule {
    pub fn new(k: usize, horizon: usize, death_round: Vec<Option<usize>>) -> Result<Self> {
        if k == 0 || horizon == 0 {
            return Err(Error::invalid("K and T must both be at least 1"));
        }
        if death_round.len() != k {
            return Err(Error::invalid(format!(
                "schedule has {} entries for {} experts",
                death_round.len(),
                k
            )));
        }
        for (i, d) in death_round.iter().enumerate() {
            if let Some(r) = d {
                if *r < 1 || *r >= horizon {
                    return Err(Error::invalid(format!(
                        "expert {} death round {} outside [1, {}]",
                        i + 1,
                        r,
                        horizon - 1
                    )));
                }
            }
        }
        if death_round.iter().all(Option::is_some) {
            return Err(Error::invalid("at least one expert must survive"));
        }
        Ok(DyingSchedule {
            k,
            horizon,
            death_round,
        })
    }

    /// No deaths at all.
    pub fn empty(k: usize, horizon: usize) -> Self {
        DyingSchedule {
            k,
            horizon,
            death_round: vec![None; k],
        }
    }

    pub fn num_experts(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn death_round(&self, expert: usize) -> Option<usize> {
        self.death_round[expert]
    }

    pub fn is_alive(&self, expert: usize, t: usize) -> bool {
        self.death_round[expert].map_or(true, |r| t <= r)
    }

    /// Alive flags for round `t`, one per expert.
    pub fn alive_mask(&self, t: usize) -> Vec<bool> {
        (0..self.k).map(|i| self.is_alive(i, t)).collect()
    }

    /// Night rounds in increasing order, without multiplicity.
    pub fn nights(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.death_round.iter().flatten().copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Experts dying at the end of `night`, ascending.
    pub fn deaths_on(&self, night: usize) -> Vec<usize> {
        (0..self.k)
            .filter(|&i| self.death_round[i] == Some(night))
            .collect()
    }

    /// (night round, dying experts) pairs in night order.
    pub fn death_events(&self) -> Vec<(usize, Vec<usize>)> {
        self.nights()
            .into_iter()
            .map(|n| (n, self.deaths_on(n)))
            .collect()
    }

    /// d_s per night, in night order.
    pub fn death_counts(&self) -> Vec<usize> {
        self.nights().iter().map(|&n| self.deaths_on(n).len()).collect()
    }

    /// A: experts that never die.
    pub fn survivor_count(&self) -> usize {
        self.death_round.iter().filter(|d| d.is_none()).count()
    }

    pub fn num_nights(&self) -> usize {
        self.nights().len()
    }

    pub fn num_deaths(&self) -> usize {
        self.k - self.survivor_count()
    }

    /// All deaths sorted by (night, expert index). This is the canonical
    /// declared dying order handed to learners that need one upfront.
    pub fn dying_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.k).filter(|&i| self.death_round[i].is_some()).collect();
        order.sort_by_key(|&i| (self.death_round[i].unwrap(), i));
        order
    }

    /// Day segments as inclusive 1-based round spans. Day s ends at night
    /// j_s; the last day ends at T.
    pub fn days(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 1;
        for n in self.nights() {
            out.push((start, n));
            start = n + 1;
        }
        out.push((start, self.horizon));
        out
    }
}

/// A loss stream and a schedule over the same experts and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub losses: LossStream,
    pub schedule: DyingSchedule,
}

impl Instance {
    pub fn new(losses: LossStream, schedule: DyingSchedule) -> Result<Self> {
        if losses.num_experts() != schedule.num_experts()
            || losses.horizon() != schedule.horizon()
        {
            return Err(Error::invalid(format!(
                "losses are {}x{} but schedule is {}x{}",
                losses.horizon(),
                losses.num_experts(),
                schedule.horizon(),
                schedule.num_experts()
            )));
        }
        Ok(Instance { losses, schedule })
    }

    pub fn num_experts(&self) -> usize {
        self.losses.num_experts()
    }

    pub fn horizon(&self) -> usize {
        self.losses.horizon()
    }

    pub fn to_text(&self) -> String {
        let k = self.num_experts();
        let t = self.horizon();
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", k, t);
        let deaths: Vec<String> = (0..k)
            .map(|i| match self.schedule.death_round(i) {
                Some(r) => r.to_string(),
                None => "-".to_string(),
            })
            .collect();
        let _ = writeln!(s, "{}", deaths.join(" "));
        for round in 1..=t {
            let row: Vec<String> = self
                .losses
                .round(round)
                .iter()
                .map(|v| format!("{}", v))
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hn, header) = lines
            .next()
            .ok_or_else(|| Error::parse("empty instance file"))?;
        let mut hp = header.split_whitespace();
        let k: usize = parse_field(hp.next(), hn, "K")?;
        let t: usize = parse_field(hp.next(), hn, "T")?;
        if hp.next().is_some() {
            return Err(Error::parse(format!("line {}: trailing tokens in header", hn + 1)));
        }

        let (dn, death_line) = lines
            .next()
            .ok_or_else(|| Error::parse("missing death-round line"))?;
        let death_round: Vec<Option<usize>> = death_line
            .split_whitespace()
            .map(|tok| {
                if tok == "-" {
                    Ok(None)
                } else {
                    tok.parse::<usize>().map(Some).map_err(|_| {
                        Error::parse(format!("line {}: bad death round {:?}", dn + 1, tok))
                    })
                }
            })
            .collect::<Result<_>>()?;
        let schedule = DyingSchedule::new(k, t, death_round)?;

        let mut rows = Vec::with_capacity(t);
        for _ in 0..t {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::parse(format!("expected {} loss lines, file ended early", t)))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| Error::parse(format!("line {}: bad loss {:?}", ln + 1, tok)))
                })
                .collect::<Result<_>>()?;
            if row.len() != k {
                return Err(Error::parse(format!(
                    "line {}: expected {} losses, got {}",
                    ln + 1,
                    k,
                    row.len()
                )));
            }
            rows.push(row);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::parse(format!("line {}: trailing content", ln + 1)));
        }
        Instance::new(LossStream::from_rows(rows)?, schedule)
    }
}

fn parse_field(tok: Option<&str>, line0: usize, what: &str) -> Result<usize> {
    tok.ok_or_else(|| Error::parse(format!("line {}: missing {}", line0 + 1, what)))?
        .parse()
        .map_err(|_| Error::parse(format!("line {}: bad {}", line0 + 1, what)))
}
