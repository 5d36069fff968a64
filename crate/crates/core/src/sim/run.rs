//! Driving a run: stepping between diagnostics slices, stop rules and output.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::initial::make_initial_data;
use super::io::write_snapshot;
use super::scheme::{Frame, Integrator, RadialState, Scheme};
use super::transform::w_from_v;
use crate::diagnostics::{BoundId, BoundParams, Diagnostics, DiagnosticsRecord, ShrinkingReport, Verdict};
use crate::error::{Error, Result};

pub const TIME_SERIES_FILE: &str = "timeseries.csv";
pub const PHYSICAL_SERIES_FILE: &str = "physical.csv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopReason {
    /// Reached the end of the horizon.
    Horizon,
    /// A shrinking-set bound was exceeded by the escape factor.
    Escape { bound: BoundId, ratio: f64 },
    /// An unstable mode reached its bound (with `stop_on_exit`).
    UnstableExit { mode: usize },
    /// `sup |v|` passed the escape threshold.
    FieldBlowup { sup: f64 },
    /// Physical frame: the blowup scale dropped below the grid resolution.
    Unresolved { sup_w: f64 },
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Horizon => write!(f, "horizon"),
            StopReason::Escape { bound, .. } => write!(f, "escape:{bound}"),
            StopReason::UnstableExit { mode } => write!(f, "exit:eps{mode}"),
            StopReason::FieldBlowup { .. } => write!(f, "blowup"),
            StopReason::Unresolved { .. } => write!(f, "unresolved"),
        }
    }
}

/// One physical-frame sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSample {
    pub t: f64,
    pub sup_w: f64,
    pub sup_v: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SimConfig,
    /// Diagnostics at the start time (self-similar frame).
    pub initial: Option<DiagnosticsRecord>,
    /// One record per slice after the start.
    pub records: Vec<DiagnosticsRecord>,
    pub reports: Vec<ShrinkingReport>,
    /// `sup_y |v - Q(y s^{-1/2l})|` per slice, start included.
    pub profile_distance: Vec<(f64, f64)>,
    pub physical: Vec<PhysicalSample>,
    pub stop: StopReason,
    pub final_state: RadialState,
    pub steps: usize,
    pub files: Vec<PathBuf>,
}

impl Trajectory {
    /// Records including the start.
    pub fn all_records(&self) -> Vec<&DiagnosticsRecord> {
        self.initial.iter().chain(self.records.iter()).collect()
    }

    pub fn trapped(&self) -> bool {
        self.stop == StopReason::Horizon && self.reports.iter().all(|r| r.max_ratio() < 1.0)
    }
}

pub fn slice_count(cfg: &SimConfig) -> Result<usize> {
    let n = cfg.horizon / cfg.cadence;
    let r = n.round();
    if (n - r).abs() > 1e-9 * n.max(1.0) || r < 1.0 {
        return Err(Error::Config(format!(
            "horizon {} is not a positive multiple of cadence {}",
            cfg.horizon, cfg.cadence
        )));
    }
    Ok(r as usize)
}

pub fn run(cfg: &SimConfig) -> Result<Trajectory> {
    let state = make_initial_data(cfg)?;
    run_from(cfg, state)
}

/// Runs from a given initial state.
pub fn run_from(cfg: &SimConfig, mut state: RadialState) -> Result<Trajectory> {
    cfg.validate()?;
    if state.frame != cfg.frame {
        return Err(Error::Config("initial state frame differs from the config".into()));
    }
    let slices = slice_count(cfg)?;
    let grid = state.grid.clone();
    let scheme = Scheme::new(grid.clone(), cfg.d, cfg.frame, cfg.boundary_spec()?)?;
    let mut it = Integrator::new(scheme);
    let dt_max = cfg.dt.unwrap_or(f64::INFINITY);
    let t_start = state.time;

    let diag = if cfg.frame == Frame::SelfSimilar && cfg.diagnostics {
        let mut p = BoundParams::new(cfg.a, cfg.k);
        p.band = cfg.boundary_band;
        p.pointwise_c = cfg.pointwise_c;
        Some(Diagnostics::with_profile(cfg.profile()?, grid.clone(), p)?)
    } else {
        None
    };
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
    }

    let mut traj = Trajectory {
        config: cfg.clone(),
        initial: None,
        records: Vec::with_capacity(slices),
        reports: Vec::with_capacity(slices),
        profile_distance: Vec::new(),
        physical: Vec::new(),
        stop: StopReason::Horizon,
        final_state: state.clone(),
        steps: 0,
        files: Vec::new(),
    };

    let diag = diag.as_ref();
    if let Some(stop) = observe_slice(cfg, diag, &state, &mut traj)? {
        traj.stop = stop;
    } else {
        for k in 1..=slices {
            let t_next = t_start + cfg.horizon * k as f64 / slices as f64;
            let steps = it.advance_to(&mut state, t_next, dt_max, cfg.cfl)?;
            traj.steps += steps;
            let stop = observe_slice(cfg, diag, &state, &mut traj)?;
            if cfg.snapshot_every > 0 && (k % cfg.snapshot_every == 0 || stop.is_some()) {
                write_slice_snapshot(cfg, &state, k, &mut traj)?;
            }
            if let Some(stop) = stop {
                traj.stop = stop;
                break;
            }
        }
    }
    traj.final_state = state;
    if let Some(dir) = &cfg.output_dir {
        let p = dir.join("final.csv");
        write_snapshot(&p, cfg.d, &traj.final_state)?;
        traj.files.push(p);
        write_series(cfg, dir, &mut traj)?;
    }
    Ok(traj)
}

fn write_slice_snapshot(cfg: &SimConfig, state: &RadialState, k: usize, traj: &mut Trajectory) -> Result<()> {
    if let Some(dir) = &cfg.output_dir {
        let p = dir.join(format!("snap_{k:05}.csv"));
        write_snapshot(&p, cfg.d, state)?;
        traj.files.push(p);
    }
    Ok(())
}

fn observe_slice(
    cfg: &SimConfig,
    diag: Option<&Diagnostics>,
    state: &RadialState,
    traj: &mut Trajectory,
) -> Result<Option<StopReason>> {
    let sup_v = state.sup_abs();
    match state.frame {
        Frame::Physical => {
            let w = w_from_v(&state.grid, &state.values, cfg.d.d_f64());
            let sup_w = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            traj.physical.push(PhysicalSample {
                t: state.time,
                sup_w,
                sup_v,
            });
            // the blowup scale sqrt(T - t) ~ sup_w^{-1/2} must span several cells
            if sup_w.sqrt().recip() < 8.0 * state.grid.h(0) {
                return Ok(Some(StopReason::Unresolved { sup_w }));
            }
            Ok(None)
        }
        Frame::SelfSimilar => {
            let s = state.time;
            if cfg.init_spec()? == super::InitSpec::Profile || diag.is_some() {
                let profile = match diag {
                    Some(d) => d.profile().params,
                    None => crate::profile::ProfileParams::new(cfg.d)?,
                };
                let scale = s.powf(-1.0 / (2.0 * cfg.d.ell_f64()));
                let mut dist = 0.0f64;
                for (y, v) in state.grid.nodes().iter().zip(&state.values) {
                    dist = dist.max((v - profile.q_of_xi(y * scale)?).abs());
                }
                traj.profile_distance.push((s, dist));
            }
            if sup_v > cfg.escape_sup {
                return Ok(Some(StopReason::FieldBlowup { sup: sup_v }));
            }
            let Some(diag) = diag else { return Ok(None) };
            let (dec, report) = diag.decompose_state(state)?;
            let rec = DiagnosticsRecord::new(&dec, &report);
            let first = traj.initial.is_none() && traj.records.is_empty() && s == cfg.start_time();
            let worst = report
                .slacks
                .iter()
                .copied()
                .fold(None::<crate::diagnostics::Slack>, |w, x| match w {
                    Some(w) if w.ratio >= x.ratio => Some(w),
                    _ => Some(x),
                });
            let exit_mode = (cfg.exit_first_mode..cfg.d.ell() as usize).find(|&k| report.ratio(BoundId::Mode(k)).unwrap_or(0.0) >= 1.0);
            if first {
                traj.initial = Some(rec);
            } else {
                traj.records.push(rec);
            }
            traj.reports.push(report);
            if let Some(w) = worst {
                if w.ratio > cfg.escape_factor {
                    return Ok(Some(StopReason::Escape {
                        bound: w.bound,
                        ratio: w.ratio,
                    }));
                }
            }
            if cfg.stop_on_exit && !first {
                if let Some(mode) = exit_mode {
                    return Ok(Some(StopReason::UnstableExit { mode }));
                }
            }
            Ok(None)
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Writes the slice records; rows after the start only.
pub fn write_time_series(path: &Path, cfg: &SimConfig, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(DiagnosticsRecord::csv_header(cfg.d)).map_err(csv_err)?;
    for r in records {
        w.write_record(r.csv_row()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_series(cfg: &SimConfig, dir: &Path, traj: &mut Trajectory) -> Result<()> {
    match cfg.frame {
        Frame::SelfSimilar if cfg.diagnostics => {
            let p = dir.join(TIME_SERIES_FILE);
            write_time_series(&p, cfg, &traj.records)?;
            traj.files.push(p);
        }
        Frame::Physical => {
            let p = dir.join(PHYSICAL_SERIES_FILE);
            let mut w = csv::Writer::from_path(&p).map_err(csv_err)?;
            w.write_record(["t", "sup_w", "sup_v"]).map_err(csv_err)?;
            for x in &traj.physical {
                w.write_record([x.t.to_string(), x.sup_w.to_string(), x.sup_v.to_string()])
                    .map_err(csv_err)?;
            }
            w.flush()?;
            traj.files.push(p);
        }
        _ => {}
    }
    Ok(())
}

/// Verdict label of the run: the stop reason, or the last slice verdict.
pub fn run_verdict(traj: &Trajectory) -> String {
    match traj.stop {
        StopReason::Horizon => traj
            .reports
            .iter()
            .map(|r| r.verdict)
            .find(|v| matches!(v, Verdict::Outside(_)))
            .map(|v| v.to_string())
            .unwrap_or_else(|| {
                if traj.trapped() {
                    "trapped".to_string()
                } else {
                    "horizon".to_string()
                }
            }),
        other => other.to_string(),
    }
}
