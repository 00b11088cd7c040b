//! Source-brightness sweep and operating-point selection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::phys::{network_rates, NetworkModel};
use crate::scoring::{Aeskr, ScoreFunction};
use crate::topology::{verify_full_mesh, ChannelAssignment, User};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    /// Loss-corrected singles on the reference channel.
    pub reference_singles: f64,
    /// Pair rate per conjugate pair.
    pub mu: f64,
    pub mean_skr: f64,
    pub min_skr: f64,
    pub aeskr: Aeskr,
}

/// `points_per_decade` log-spaced values from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, points_per_decade: u32) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) || points_per_decade == 0 {
        return Err(Error::InvalidParameter(format!(
            "grid {min}..{max} with {points_per_decade} points per decade"
        )));
    }
    let steps = ((max / min).log10() * points_per_decade as f64).round() as usize;
    if steps > 100_000 {
        return Err(Error::InvalidParameter(format!(
            "grid of {steps} points is too large"
        )));
    }
    if steps == 0 {
        return Ok(vec![min]);
    }
    let (lo, hi) = (min.log10(), max.log10());
    Ok((0..=steps)
        .map(|i| match i {
            0 => min,
            i if i == steps => max,
            i => 10f64.powf(lo + (hi - lo) * i as f64 / steps as f64),
        })
        .collect())
}

/// Evaluates every link at each reference singles rate in `grid`.
///
/// `reference_transmission` converts the reference singles rate to the
/// per-pair source rate: `mu = reference_singles / reference_transmission`.
pub fn run_sweep(
    users: &[User],
    assignment: &ChannelAssignment,
    model: &NetworkModel,
    scoring: &ScoreFunction,
    reference_transmission: f64,
    grid: &[f64],
) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty sweep grid".into()));
    }
    if !(reference_transmission > 0.0 && reference_transmission.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "reference transmission {reference_transmission}"
        )));
    }
    let report = verify_full_mesh(assignment, users);
    if !report.pass {
        return Err(Error::InvalidAssignment(format!(
            "sweep needs a full mesh; {} of {} links missing",
            report.missing.len(),
            report.required
        )));
    }
    let evaluate = |reference_singles: f64| -> Result<SweepPoint> {
        let mu = reference_singles / reference_transmission;
        let rates = network_rates(users, assignment, &model.with_pair_rate(mu))?;
        let skrs: Vec<f64> = rates.iter().map(|(_, r)| r.skr).collect();
        Ok(SweepPoint {
            reference_singles,
            mu,
            mean_skr: skrs.iter().sum::<f64>() / skrs.len() as f64,
            min_skr: skrs.iter().copied().fold(f64::INFINITY, f64::min),
            aeskr: scoring.aeskr_of(&skrs)?,
        })
    };
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(grid.len());
    let chunk = grid.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = grid
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&r| evaluate(r))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(grid.len());
        for h in handles {
            out.extend(h.join().expect("sweep worker panicked")?);
        }
        Ok(out)
    })
}

/// The point with the highest AE-SKR; ties go to the lower singles rate.
pub fn select_operating_point(points: &[SweepPoint]) -> Result<SweepPoint> {
    let mut best: Option<(f64, SweepPoint)> = None;
    for p in points {
        let Aeskr::Rate(r) = p.aeskr else { continue };
        let better = match &best {
            None => true,
            Some((br, bp)) => r > *br || (r == *br && p.reference_singles < bp.reference_singles),
        };
        if better {
            best = Some((r, *p));
        }
    }
    best.map(|(_, p)| p).ok_or(Error::NoViablePoint)
}

/// Contiguous index range around the AE-SKR maximum whose values stay
/// within `tolerance` (fractional) of it.
pub fn aeskr_plateau(points: &[SweepPoint], tolerance: f64) -> Option<(usize, usize)> {
    let values: Vec<Option<f64>> = points.iter().map(|p| p.aeskr.rate()).collect();
    around_peak(&values, tolerance)
}

/// Contiguous index range around the mean-SKR maximum within `tolerance` of it.
pub fn mean_skr_region(points: &[SweepPoint], tolerance: f64) -> Option<(usize, usize)> {
    let values: Vec<Option<f64>> = points.iter().map(|p| Some(p.mean_skr)).collect();
    around_peak(&values, tolerance)
}

fn around_peak(values: &[Option<f64>], tolerance: f64) -> Option<(usize, usize)> {
    let (peak, max) = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
            Some((_, m)) if m >= v => acc,
            _ => Some((i, v)),
        })?;
    let floor = max * (1.0 - tolerance);
    let within = |i: usize| values[i].is_some_and(|v| v >= floor);
    let mut lo = peak;
    while lo > 0 && within(lo - 1) {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < values.len() && within(hi + 1) {
        hi += 1;
    }
    Some((lo, hi))
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["reference_singles", "mean_skr", "min_skr", "aeskr"])
        .expect("in-memory write");
    for p in points {
        w.write_record([
            p.reference_singles.to_string(),
            p.mean_skr.to_string(),
            p.min_skr.to_string(),
            p.aeskr.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}
