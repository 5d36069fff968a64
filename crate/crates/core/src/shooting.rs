//! Search over the unstable-mode amplitudes `d` of the initial data for a
//! trajectory that stays in the shrinking set up to the horizon.
//!
//! The search brackets each amplitude between probes whose exit vectors
//! have opposite signs in that component and shrinks the brackets
//! coordinate by coordinate. Probes of one round run in parallel.
//!
//! Inside a bracket, probes are placed around the linearized estimate of
//! the stable amplitude carried by each probe: under `eps_k' = lambda_k eps_k`
//! the amplitude that would not have grown is
//! `d_k - (s_0^2 / A) eps_k(s_e) e^{-lambda_k (s_e - s_0)}`. The bracket
//! midpoint is always among the probes of a round (or, with one worker,
//! whenever the previous step fell short), so a bracket at least halves.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::BoundId;
use crate::error::{Error, Result};
use crate::sim::{run, Frame, SimConfig, StopReason, Trajectory};

/// Outcome class of one probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeVerdict {
    Trapped,
    /// An unstable mode reached its bound.
    Exit { mode: usize },
    /// No unstable exit, but another bound was violated (the worst one).
    Outside { bound: BoundId },
    /// The field left the simulated range.
    Blowup,
}

impl fmt::Display for ProbeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeVerdict::Trapped => write!(f, "trapped"),
            ProbeVerdict::Exit { mode } => write!(f, "exit:eps{mode}"),
            ProbeVerdict::Outside { bound } => write!(f, "outside:{bound}"),
            ProbeVerdict::Blowup => write!(f, "blowup"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub dvec: Vec<f64>,
    /// First time an unstable mode reaches its bound; the end time otherwise.
    pub s_exit: f64,
    pub verdict: ProbeVerdict,
    /// `(s^2 / A) eps_k`, `k < l`, at `s_exit`.
    pub exit_vector: Vec<f64>,
    /// Sign of the backward difference of `sum_k eps_k^2` at the exit.
    /// `None` without an exit, or when the exit is at the first sample.
    pub transverse: Option<bool>,
    /// Largest slack ratio seen over the run.
    pub max_ratio: f64,
    /// Linearized stable amplitudes, one per unstable mode.
    pub estimate: Option<Vec<f64>>,
}

impl Probe {
    pub fn exited(&self) -> bool {
        matches!(self.verdict, ProbeVerdict::Exit { .. })
    }

    /// Exit recorded without a confirmed outgoing crossing.
    pub fn flagged(&self) -> bool {
        self.exited() && self.transverse != Some(true)
    }

    /// Ranking: trapped first, then later exit, then smaller worst ratio.
    fn better_than(&self, other: &Probe) -> bool {
        let t = |p: &Probe| p.verdict == ProbeVerdict::Trapped;
        match (t(self), t(other)) {
            (true, false) => return true,
            (false, true) => return false,
            _ => {}
        }
        if self.s_exit != other.s_exit {
            return self.s_exit > other.s_exit;
        }
        self.max_ratio < other.max_ratio
    }
}

/// What `trap_search` probes.
pub trait Objective: Sync {
    /// Per-probe payload kept for the best probe.
    type Extra: Send;

    /// Number of unstable modes.
    fn ell(&self) -> usize;

    /// Coordinates of `d` that are searched; the rest stay at 0.
    fn coordinates(&self) -> Vec<usize> {
        (0..self.ell()).collect()
    }

    fn evaluate(&self, dvec: &[f64]) -> Result<(Probe, Self::Extra)>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootConfig {
    pub sim: SimConfig,
    /// Maximum number of simulations.
    pub budget: usize,
    pub workers: usize,
    /// Hold `d_0` at zero and ignore exits through mode 0, treating that
    /// direction as a shift of the blowup time.
    pub quotient_time: bool,
    /// Stop probes on the sim's escape rule for the non-unstable bounds.
    /// Off: such violations are only recorded.
    pub stop_on_violation: bool,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig {
                horizon: 20.0,
                ..SimConfig::default()
            },
            budget: 64,
            workers: 4,
            quotient_time: false,
            stop_on_violation: false,
        }
    }
}

impl ShootConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Argument("budget must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Argument("workers must be at least 1".into()));
        }
        if self.sim.frame != Frame::SelfSimilar || !self.sim.diagnostics {
            return Err(Error::Config(
                "shooting needs a self-similar run with diagnostics".into(),
            ));
        }
        if self.quotient_time && self.sim.d.ell() < 2 {
            return Err(Error::Config("time quotient leaves nothing to search".into()));
        }
        self.sim.validate()
    }

    /// The sim configuration used by every probe, `dvec` aside.
    pub fn probe_config(&self) -> SimConfig {
        let mut c = self.sim.clone();
        c.stop_on_exit = true;
        c.exit_first_mode = usize::from(self.quotient_time);
        if !self.stop_on_violation {
            c.escape_factor = f64::MAX;
        }
        c
    }
}

/// Probes backed by the simulator.
#[derive(Debug, Clone)]
pub struct SimObjective {
    cfg: SimConfig,
    quotient_time: bool,
}

impl SimObjective {
    pub fn new(cfg: &ShootConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.probe_config(),
            quotient_time: cfg.quotient_time,
        })
    }
}

impl Objective for SimObjective {
    type Extra = Trajectory;

    fn ell(&self) -> usize {
        self.cfg.d.ell() as usize
    }

    fn coordinates(&self) -> Vec<usize> {
        let first = usize::from(self.quotient_time);
        (first..self.ell()).collect()
    }

    fn evaluate(&self, dvec: &[f64]) -> Result<(Probe, Trajectory)> {
        let mut cfg = self.cfg.clone();
        cfg.dvec = dvec.to_vec();
        let attach = |e: Error| Error::Probe {
            dvec: dvec.to_vec(),
            source: Box::new(e),
        };
        let traj = run(&cfg).map_err(attach)?;
        let probe = probe_from_trajectory(&cfg, &traj).map_err(attach)?;
        Ok((probe, traj))
    }
}

/// Runs the simulation for one `d` and classifies its exit.
pub fn objective(dvec: &[f64], cfg: &ShootConfig) -> Result<(Probe, Trajectory)> {
    let l = cfg.sim.d.ell() as usize;
    if dvec.len() != l || dvec.iter().any(|x| !(x.abs() <= 1.0)) {
        return Err(Error::Argument(format!("d must lie in [-1, 1]^{l}, got {dvec:?}")));
    }
    SimObjective::new(cfg)?.evaluate(dvec)
}

/// Amplitudes for which the unstable modes would not have grown, assuming
/// `eps_k' = (1 - k/l) eps_k` from `s0` to `s` and `eps_k(s0) = A d_k / s0^2`.
pub fn stable_estimate(dvec: &[f64], eps: &[f64], s0: f64, s: f64, a: f64) -> Vec<f64> {
    let l = eps.len();
    (0..l)
        .map(|k| {
            let lambda = 1.0 - k as f64 / l as f64;
            dvec[k] - s0 * s0 / a * eps[k] * (-lambda * (s - s0)).exp()
        })
        .collect()
}

/// Exit record of a finished run.
pub fn probe_from_trajectory(cfg: &SimConfig, traj: &Trajectory) -> Result<Probe> {
    let records = traj.all_records();
    if records.is_empty() || records.len() != traj.reports.len() {
        return Err(Error::Invariant("trajectory carries no diagnostics".into()));
    }
    let l = cfg.d.ell() as usize;
    let first = cfg.exit_first_mode;
    let exit = traj.reports.iter().position(|r| {
        (first..l).any(|k| r.ratio(BoundId::Mode(k)).unwrap_or(0.0) >= 1.0)
    });
    let at = exit.unwrap_or(records.len() - 1);
    let rec = records[at];
    let scale = rec.s * rec.s / cfg.a;
    let exit_vector = rec.eps[..l].iter().map(|e| e * scale).collect();
    let max_ratio = traj.reports.iter().map(|r| r.max_ratio()).fold(0.0, f64::max);
    let dvec = cfg.dvec_padded();
    let estimate = (at > 0).then(|| stable_estimate(&dvec, &rec.eps[..l], records[0].s, rec.s, cfg.a));
    let energy = |i: usize| records[i].eps[..l].iter().map(|e| e * e).sum::<f64>();

    let (verdict, transverse) = match exit {
        Some(i) => {
            let r = &traj.reports[i];
            let mode = (first..l)
                .max_by(|&a, &b| {
                    let ra = r.ratio(BoundId::Mode(a)).unwrap_or(0.0);
                    let rb = r.ratio(BoundId::Mode(b)).unwrap_or(0.0);
                    ra.total_cmp(&rb)
                })
                .unwrap_or(first);
            let tr = (i > 0).then(|| energy(i) > energy(i - 1));
            (ProbeVerdict::Exit { mode }, tr)
        }
        None => {
            let v = match traj.stop {
                StopReason::FieldBlowup { .. } => ProbeVerdict::Blowup,
                StopReason::Escape { bound, .. } => ProbeVerdict::Outside { bound },
                _ => {
                    let worst = traj
                        .reports
                        .iter()
                        .flat_map(|r| r.slacks.iter())
                        .filter(|x| x.ratio >= 1.0)
                        .max_by(|a, b| a.ratio.total_cmp(&b.ratio));
                    match worst {
                        Some(w) => ProbeVerdict::Outside { bound: w.bound },
                        None => ProbeVerdict::Trapped,
                    }
                }
            };
            (v, None)
        }
    };
    Ok(Probe {
        dvec,
        s_exit: rec.s,
        verdict,
        exit_vector,
        transverse,
        max_ratio,
        estimate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub index: usize,
    pub round: usize,
    /// Coordinate being refined; `None` for the starting probes.
    pub coordinate: Option<usize>,
    pub probe: Probe,
}

/// Final bracket of one coordinate with the exit signs at its ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub coordinate: usize,
    pub lo: f64,
    pub hi: f64,
    pub sign_lo: f64,
    pub sign_hi: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// The exit sign changes across the bracket.
    pub fn sign_change(&self) -> bool {
        self.sign_lo != self.sign_hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    /// The best probe stayed in the set over the horizon.
    Trapped,
    /// Budget spent with every coordinate bracketed.
    Exhausted,
    /// Some coordinate never showed a sign change.
    NoBracket,
}

#[derive(Debug, Serialize)]
pub struct ShootResult<E> {
    pub dvec: Vec<f64>,
    pub s_exit: f64,
    pub verdict: ProbeVerdict,
    pub status: SearchStatus,
    /// Index of the best probe in `history`.
    pub best: usize,
    pub history: Vec<ProbeRecord>,
    pub brackets: Vec<Bracket>,
    pub rounds: usize,
    #[serde(skip)]
    pub extra: Option<E>,
}

impl<E> ShootResult<E> {
    pub fn best_probe(&self) -> &Probe {
        &self.history[self.best].probe
    }

    /// Running maximum of `s_exit` after each round.
    pub fn best_s_exit_by_round(&self) -> Vec<f64> {
        let mut out = vec![f64::NEG_INFINITY; self.rounds];
        for r in &self.history {
            out[r.round] = out[r.round].max(r.probe.s_exit);
        }
        for i in 1..out.len() {
            out[i] = out[i].max(out[i - 1]);
        }
        out
    }

    /// Exits without a confirmed outgoing crossing.
    pub fn flagged_exits(&self) -> Vec<usize> {
        self.history.iter().filter(|r| r.probe.flagged()).map(|r| r.index).collect()
    }
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone)]
struct End {
    x: f64,
    sign: f64,
    /// The full `d` the probe ran with.
    at: Vec<f64>,
}

struct Coord {
    index: usize,
    lo: Option<End>,
    hi: Option<End>,
    /// Current estimate of the stable amplitude, and the one before it.
    guess: Option<f64>,
    prev_guess: Option<f64>,
    /// Half-width of the next local scan around a stale bracket.
    spread: Option<f64>,
    /// Last round shrank the bracket by less than half.
    restart: bool,
}

impl Coord {
    fn bracketed(&self) -> bool {
        matches!((&self.lo, &self.hi), (Some(a), Some(b)) if a.sign != b.sign)
    }

    fn ends(&self) -> (&End, &End) {
        (self.lo.as_ref().unwrap(), self.hi.as_ref().unwrap())
    }

    fn mid(&self) -> f64 {
        if self.bracketed() {
            let (a, b) = self.ends();
            0.5 * (a.x + b.x)
        } else {
            0.0
        }
    }

    fn inside(&self, x: f64) -> bool {
        if !self.bracketed() {
            return false;
        }
        let (a, b) = self.ends();
        x > a.x && x < b.x
    }

    /// Bracket ends were measured with the other amplitudes at `base`.
    fn fresh(&self, base: &[f64]) -> bool {
        let (a, b) = self.ends();
        let same = |e: &End| e.at.iter().zip(base).enumerate().all(|(j, (p, q))| j == self.index || p == q);
        same(a) && same(b)
    }

    /// Resolved to rounding.
    fn resolved(&self) -> bool {
        let (a, b) = self.ends();
        b.x - a.x <= 4.0 * f64::EPSILON * a.x.abs().max(b.x.abs()).max(1e-3)
    }

    /// Working value: the latest estimate, else the bracket midpoint.
    fn point(&self) -> f64 {
        self.guess.unwrap_or_else(|| self.mid())
    }

    fn take_estimate(&mut self, p: &Probe) {
        if let Some(e) = p.estimate.as_ref().map(|e| e[self.index]) {
            if e.is_finite() && e.abs() <= 1.0 && Some(e) != self.guess {
                self.prev_guess = self.guess;
                self.guess = Some(e);
            }
        }
    }

    fn step(&self, g: f64, width: f64) -> f64 {
        match self.prev_guess {
            Some(p) => (2.0 * (g - p).abs()).clamp(1e-14, 0.1 * width),
            None => 0.02 * width,
        }
    }

    /// Up to `w` probe positions strictly inside a fresh bracket.
    fn positions(&self, w: usize) -> Vec<f64> {
        let (lo, hi) = (self.ends().0.x, self.ends().1.x);
        let width = hi - lo;
        let mid = 0.5 * (lo + hi);
        let mut xs = Vec::with_capacity(w);
        match self.guess.filter(|&g| self.inside(g)) {
            Some(g) if !(self.restart && w == 1) => {
                let delta = self.step(g, width);
                let mut cands = vec![g, mid];
                cands.extend(ladder(g, delta, 4 * w));
                for x in cands {
                    if xs.len() == w {
                        break;
                    }
                    if x > lo && x < hi && !xs.contains(&x) {
                        xs.push(x);
                    }
                }
            }
            _ => {}
        }
        if xs.is_empty() {
            xs = (1..=w).map(|i| lo + width * i as f64 / (w + 1) as f64).collect();
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }

    /// Up to `w` positions in `[-1, 1]` around the estimate, for a stale bracket.
    fn scan(&self, w: usize) -> (Vec<f64>, f64) {
        let g = self.point();
        let (lo, hi) = (self.ends().0.x, self.ends().1.x);
        let delta = self.spread.unwrap_or_else(|| self.step(g, hi - lo).max(1e-9));
        let mut xs = Vec::with_capacity(w);
        for x in std::iter::once(g).chain(ladder(g, delta, 4 * w)) {
            if xs.len() == w {
                break;
            }
            if x.abs() <= 1.0 && !xs.contains(&x) {
                xs.push(x);
            }
        }
        xs.sort_by(f64::total_cmp);
        (xs, delta)
    }
}

/// `g -+ delta, g -+ 3 delta, g -+ 9 delta, ...`
fn ladder(g: f64, delta: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        let k = 3f64.powi((i / 2) as i32);
        if i % 2 == 0 {
            g - k * delta
        } else {
            g + k * delta
        }
    })
}

/// Bracketing search on the exit signs of `obj`, at most `budget` probes,
/// `workers` at a time.
pub fn trap_search<O: Objective>(obj: &O, budget: usize, workers: usize) -> Result<ShootResult<O::Extra>> {
    if budget == 0 {
        return Err(Error::Argument("budget must be at least 1".into()));
    }
    if workers == 0 {
        return Err(Error::Argument("workers must be at least 1".into()));
    }
    let l = obj.ell();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut coords: Vec<Coord> = obj
        .coordinates()
        .into_iter()
        .map(|index| Coord {
            index,
            lo: None,
            hi: None,
            guess: None,
            prev_guess: None,
            spread: None,
            restart: false,
        })
        .collect();

    let mut history: Vec<ProbeRecord> = Vec::new();
    let mut best: Option<(usize, O::Extra)> = None;
    let mut round = 0;

    let mut evaluate = |points: Vec<(Option<usize>, Vec<f64>)>,
                        round: usize,
                        history: &mut Vec<ProbeRecord>|
     -> Result<Vec<Probe>> {
        let results: Vec<Result<(Probe, O::Extra)>> =
            pool.install(|| points.par_iter().map(|(_, d)| obj.evaluate(d)).collect());
        let mut out = Vec::with_capacity(points.len());
        for ((coordinate, _), res) in points.into_iter().zip(results) {
            let (probe, extra) = res?;
            let index = history.len();
            let replace = match &best {
                None => true,
                Some((b, _)) => probe.better_than(&history[*b].probe),
            };
            if replace {
                best = Some((index, extra));
            }
            out.push(probe.clone());
            history.push(ProbeRecord {
                index,
                round,
                coordinate,
                probe,
            });
        }
        Ok(out)
    };

    let base = |coords: &[Coord]| {
        let mut d = vec![0.0; l];
        for c in coords {
            d[c.index] = c.point();
        }
        d
    };
    let round_best = |probes: &[Probe]| -> Option<Probe> {
        probes
            .iter()
            .fold(None::<&Probe>, |b, p| match b {
                Some(b) if !p.better_than(b) => Some(b),
                _ => Some(p),
            })
            .cloned()
    };

    // round 0: the centre of the box
    let c0 = base(&coords);
    let centre_probe = evaluate(vec![(None, c0)], round, &mut history)?.remove(0);
    round += 1;

    // round 1: both ends of every coordinate
    let mut remaining = budget - 1;
    let mut last_best = Some(centre_probe.clone());
    if remaining > 0 {
        let mut pts = Vec::new();
        for c in &coords {
            for x in [-1.0, 1.0] {
                let mut d = base(&coords);
                d[c.index] = x;
                pts.push((Some(c.index), d));
            }
        }
        pts.truncate(remaining);
        remaining -= pts.len();
        let probes = evaluate(pts, round, &mut history)?;
        for (i, p) in probes.iter().enumerate() {
            let c = &mut coords[i / 2];
            let end = Some(End {
                x: if i % 2 == 0 { -1.0 } else { 1.0 },
                sign: sign(p.exit_vector[c.index]),
                at: p.dvec.clone(),
            });
            if i % 2 == 0 {
                c.lo = end;
            } else {
                c.hi = end;
            }
        }
        // the centre probe splits every bracketed coordinate in half
        for c in coords.iter_mut().filter(|c| c.bracketed()) {
            let end = End {
                x: 0.0,
                sign: sign(centre_probe.exit_vector[c.index]),
                at: centre_probe.dvec.clone(),
            };
            if end.sign == c.lo.as_ref().map(|e| e.sign).unwrap_or(0.0) {
                c.lo = Some(end);
            } else {
                c.hi = Some(end);
            }
        }
        if !probes.is_empty() {
            round += 1;
            let mut all = probes;
            all.push(centre_probe);
            last_best = round_best(&all);
        }
    }
    if let Some(p) = &last_best {
        for c in coords.iter_mut() {
            c.take_estimate(p);
        }
    }

    // refinement rounds, alternating over the bracketed coordinates
    let mut turn = 0;
    while remaining > 0 {
        let start = base(&coords);
        let active: Vec<usize> = (0..coords.len())
            .filter(|&i| coords[i].bracketed() && !(coords[i].resolved() && coords[i].fresh(&start)))
            .collect();
        if active.is_empty() {
            break;
        }
        let ci = active[turn % active.len()];
        turn += 1;
        let w = workers.min(remaining);
        let idx = coords[ci].index;
        let fresh = coords[ci].fresh(&start);
        let (lo, hi) = (coords[ci].lo.clone().unwrap(), coords[ci].hi.clone().unwrap());
        let (xs, delta) = if fresh {
            (coords[ci].positions(w), 0.0)
        } else {
            coords[ci].scan(w)
        };
        let pts: Vec<(Option<usize>, Vec<f64>)> = xs
            .iter()
            .map(|&x| {
                let mut d = start.clone();
                d[idx] = x;
                (Some(idx), d)
            })
            .collect();
        remaining -= pts.len();
        let probes = evaluate(pts, round, &mut history)?;
        round += 1;

        let new: Vec<End> = xs
            .iter()
            .zip(&probes)
            .map(|(&x, p)| End {
                x,
                sign: sign(p.exit_vector[idx]),
                at: p.dvec.clone(),
            })
            .collect();
        let c = &mut coords[ci];
        if let Some(k) = new.windows(2).position(|w| w[0].sign != w[1].sign) {
            // a sign change between probes of this round
            c.lo = Some(new[k].clone());
            c.hi = Some(new[k + 1].clone());
            c.spread = None;
        } else if fresh || new.is_empty() {
            let mut seq = vec![lo.clone()];
            seq.extend(new.iter().filter(|e| e.x > lo.x && e.x < hi.x).cloned());
            seq.push(hi.clone());
            let k = seq
                .windows(2)
                .position(|w| w[0].sign != w[1].sign)
                .expect("ends carry opposite signs");
            c.lo = Some(seq[k].clone());
            c.hi = Some(seq[k + 1].clone());
        } else {
            // one-sided scan: the root lies beyond it, on the side of the opposite sign
            let s = new[0].sign;
            if s == lo.sign {
                c.lo = Some(new[new.len() - 1].clone());
                if c.lo.as_ref().unwrap().x >= hi.x {
                    c.hi = Some(End { x: 1.0, ..hi.clone() });
                }
            } else {
                c.hi = Some(new[0].clone());
                if c.hi.as_ref().unwrap().x <= lo.x {
                    c.lo = Some(End { x: -1.0, ..lo.clone() });
                }
            }
            c.spread = Some((10.0 * delta).min(1.0));
        }
        let (a, b) = c.ends();
        c.restart = b.x - a.x > 0.5 * (hi.x - lo.x);
        last_best = round_best(&probes);
        if let Some(p) = &last_best {
            for c in coords.iter_mut() {
                c.take_estimate(p);
            }
        }
    }

    let brackets: Vec<Bracket> = coords
        .iter()
        .map(|c| {
            let (lo, hi) = (c.lo.as_ref().map(|e| (e.x, e.sign)), c.hi.as_ref().map(|e| (e.x, e.sign)));
            let (lo, sign_lo) = lo.unwrap_or((-1.0, f64::NAN));
            let (hi, sign_hi) = hi.unwrap_or((1.0, f64::NAN));
            Bracket {
                coordinate: c.index,
                lo,
                hi,
                sign_lo,
                sign_hi,
            }
        })
        .collect();
    let (best, extra) = best.expect("at least one probe");
    let bp = history[best].probe.clone();
    let status = if bp.verdict == ProbeVerdict::Trapped {
        SearchStatus::Trapped
    } else if coords.iter().all(Coord::bracketed) {
        SearchStatus::Exhausted
    } else {
        SearchStatus::NoBracket
    };
    Ok(ShootResult {
        dvec: bp.dvec.clone(),
        s_exit: bp.s_exit,
        verdict: bp.verdict,
        status,
        best,
        history,
        brackets,
        rounds: round,
        extra: Some(extra),
    })
}

/// `trap_search` over simulator probes.
pub fn shoot(cfg: &ShootConfig) -> Result<ShootResult<Trajectory>> {
    let obj = SimObjective::new(cfg)?;
    trap_search(&obj, cfg.budget, cfg.workers)
}
