//! Critical-point estimators and the finite proxy for θ.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::{dual, matching_graph};
use crate::engine::{cluster_index, sample_configuration, Mode, PercolationParams};
use crate::error::{Error, Result};
use crate::geom;
use crate::instance::{instantiate_disc, instantiate_torus, FiniteInstance};
use crate::lattice::PlaneLattice;
use crate::newman_ziff::{newman_ziff, newman_ziff_range, CanonicalCurves, Observable};
use crate::rng::{label_id, stream};
use crate::stats::Estimate;

/// Bisection tolerance in `p`.
pub const BISECTION_TOL: f64 = 1e-4;

/// Which wrapping curve is solved for ½.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Locator {
    /// Some cluster wraps in at least one direction.
    WrappingEither,
    /// Mean of wrapping-either and wrapping-both. On a torus the primal
    /// curve at `p` and the partner curve at `1 − p` sum to exactly one.
    WrappingAverage,
}

impl std::str::FromStr for Locator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wrapping-either" | "either" => Ok(Locator::WrappingEither),
            "wrapping-average" | "average" => Ok(Locator::WrappingAverage),
            other => Err(Error::InvalidParameter(format!("unknown locator {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcOptions {
    pub mode: Mode,
    pub sizes: Vec<usize>,
    /// Initial sweeps per size.
    pub sweeps: usize,
    /// Sweeps are doubled until the CI reaches `target_ci` or this cap.
    pub max_sweeps: usize,
    pub target_ci: Option<f64>,
    pub seed: u64,
    pub locator: Locator,
}

impl PcOptions {
    pub fn new(mode: Mode, sizes: Vec<usize>, sweeps: usize, seed: u64) -> Self {
        PcOptions { mode, sizes, sweeps, max_sweeps: sweeps, target_ci: None, seed, locator: Locator::WrappingAverage }
    }

    fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("need at least two increasing sizes".into()));
        }
        if self.sizes[0] < 2 {
            return Err(Error::InvalidParameter("torus sizes must be at least 2".into()));
        }
        if self.sweeps < 2 {
            return Err(Error::InvalidParameter("need at least two sweeps".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeRoot {
    pub size: usize,
    pub root: f64,
    /// Standard error of the root (delta method).
    pub stderr: f64,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcEstimate {
    pub p_hat: f64,
    pub ci_halfwidth: f64,
    /// `1.96·stderr` of the largest-size root.
    pub stat_error: f64,
    /// Root difference between the two largest sizes.
    pub drift: f64,
    pub method: String,
    pub locator: Locator,
    pub sizes: Vec<usize>,
    pub replicas: Vec<usize>,
    pub roots: Vec<SizeRoot>,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disorder: Option<String>,
}

/// Observables every wrapping locator needs.
pub fn wrapping_observables() -> [Observable; 2] {
    [Observable::WrapEither, Observable::WrapBoth]
}

fn locator_values(curves: &CanonicalCurves, locator: Locator, p: f64) -> Result<Vec<f64>> {
    match locator {
        Locator::WrappingEither => Ok(curves.per_sweep_at(curves.index_of(Observable::WrapEither)?, p)),
        Locator::WrappingAverage => curves.wrap_average_per_sweep(p),
    }
}

fn locator_mean(curves: &CanonicalCurves, locator: Locator, p: f64) -> Result<f64> {
    let v = locator_values(curves, locator, p)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Solves `locator(p) = ½` on the convolved curve by bisection.
pub fn crossing_root(curves: &CanonicalCurves, locator: Locator, size: usize) -> Result<SizeRoot> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if locator_mean(curves, locator, lo)? >= 0.5 || locator_mean(curves, locator, hi)? <= 0.5 {
        return Err(Error::NoCrossing { size });
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if locator_mean(curves, locator, mid)? < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let se = Estimate::from_samples(&locator_values(curves, locator, root)?).stderr;
    let h = 2e-3;
    let slope = (locator_mean(curves, locator, (root + h).min(1.0))?
        - locator_mean(curves, locator, (root - h).max(0.0))?)
        / ((root + h).min(1.0) - (root - h).max(0.0));
    let stderr = if slope > 0.0 { se / slope } else { f64::INFINITY };
    Ok(SizeRoot { size, root, stderr, sweeps: curves.sweeps() })
}

/// Generic driver: `sweep(size, first, count)` produces curves for
/// replicas `first..first + count` at one size.
pub fn estimate_pc_with<F>(opts: &PcOptions, sweep: F) -> Result<PcEstimate>
where
    F: Fn(usize, usize, usize) -> Result<CanonicalCurves>,
{
    opts.validate()?;
    let mut curves: Vec<CanonicalCurves> =
        opts.sizes.iter().map(|&s| sweep(s, 0, opts.sweeps)).collect::<Result<_>>()?;
    loop {
        let roots: Vec<SizeRoot> =
            opts.sizes.iter().zip(&curves).map(|(&s, c)| crossing_root(c, opts.locator, s)).collect::<Result<_>>()?;
        let last = &roots[roots.len() - 1];
        let prev = &roots[roots.len() - 2];
        let drift = (last.root - prev.root).abs();
        let stat_error = 1.96 * last.stderr;
        let ci = drift + stat_error;
        let have = curves[0].sweeps();
        let converged = opts.target_ci.is_none_or(|t| ci <= t);
        if converged || have >= opts.max_sweeps {
            return Ok(PcEstimate {
                p_hat: last.root,
                ci_halfwidth: ci.max(BISECTION_TOL),
                stat_error,
                drift,
                method: "wrapping-crossing".into(),
                locator: opts.locator,
                sizes: opts.sizes.clone(),
                replicas: curves.iter().map(CanonicalCurves::sweeps).collect(),
                roots,
                converged,
                disorder: None,
            });
        }
        let more = have.min(opts.max_sweeps - have);
        for (c, &s) in curves.iter_mut().zip(&opts.sizes) {
            c.extend(sweep(s, have, more)?)?;
        }
    }
}

fn experiment(kind: &str, lattice: &PlaneLattice, mode: Mode, size: usize) -> u64 {
    label_id(&format!("{kind}/{}/{mode}/{size}", lattice.name))
}

/// Estimates the critical probability of `lattice` from wrapping curves
/// on `size × size` tori.
pub fn estimate_pc(lattice: &PlaneLattice, opts: &PcOptions) -> Result<PcEstimate> {
    estimate_pc_with(opts, |size, first, count| {
        let inst = instantiate_torus(lattice, size, size)?;
        newman_ziff_range(
            &inst,
            opts.mode,
            &wrapping_observables(),
            first,
            count,
            opts.seed,
            experiment("pc", lattice, opts.mode, size),
        )
    })
}

/// Probability that some open cluster wraps the torus in at least one
/// direction. Uniform probabilities use a Newman–Ziff convolution; per-class
/// probabilities fall back to direct sampling.
pub fn wrapping_probability(
    lattice: &PlaneLattice,
    params: &PercolationParams,
    size: usize,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    if size < 4 {
        return Err(Error::InvalidParameter("wrapping probability needs size ≥ 4".into()));
    }
    let inst = instantiate_torus(lattice, size, size)?;
    wrapping_probability_on(&inst, params, replicas, seed, experiment("wrap", lattice, params.mode, size))
}

pub fn wrapping_probability_on(
    inst: &FiniteInstance,
    params: &PercolationParams,
    replicas: usize,
    seed: u64,
    experiment: u64,
) -> Result<Estimate> {
    params.table(inst)?;
    match params.uniform_value() {
        Some(p) => newman_ziff(inst, params.mode, &[Observable::WrapEither], replicas, seed, experiment)?
            .at(Observable::WrapEither, p),
        None => {
            let flags: Vec<bool> = (0..replicas)
                .into_par_iter()
                .map(|r| {
                    let c = sample_configuration(inst, params, &mut stream(seed, experiment, r as u64))?;
                    Ok(cluster_index(inst, &c)?.wraps_either())
                })
                .collect::<Result<_>>()?;
            Ok(Estimate::from_flags(flags))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualitySum {
    pub lattice: String,
    pub partner: String,
    pub mode: Mode,
    pub primal: PcEstimate,
    pub partner_estimate: PcEstimate,
    pub sum: f64,
    /// Combined standard error of the sum (statistical part only).
    pub sigma: f64,
    /// Sum of the two drifts, added to the 3σ allowance.
    pub drift: f64,
    pub pass: bool,
}

/// Estimates p_c on both sides of a duality (bond: dual lattice; site:
/// matching graph) and checks that the sum is one.
pub fn duality_sum_check(lattice: &PlaneLattice, opts: &PcOptions) -> Result<DualitySum> {
    if !lattice.planar {
        return Err(Error::NonPlanar("duality sum"));
    }
    let partner = match opts.mode {
        Mode::Bond => dual(lattice)?.dual,
        Mode::Site => matching_graph(lattice)?,
    };
    let a = estimate_pc(lattice, opts)?;
    let b = estimate_pc(&partner, opts)?;
    Ok(summarize_sum(lattice.name.clone(), partner.name.clone(), opts.mode, a, b))
}

pub fn summarize_sum(lattice: String, partner: String, mode: Mode, a: PcEstimate, b: PcEstimate) -> DualitySum {
    let sa = a.roots.last().map_or(f64::NAN, |r| r.stderr);
    let sb = b.roots.last().map_or(f64::NAN, |r| r.stderr);
    let sigma = (sa * sa + sb * sb).sqrt();
    let sum = a.p_hat + b.p_hat;
    let drift = a.drift + b.drift;
    let pass = (sum - 1.0).abs() <= 3.0 * sigma + drift;
    DualitySum { lattice, partner, mode, primal: a, partner_estimate: b, sum, sigma, drift, pass }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaProxy {
    pub p: f64,
    pub radius: f64,
    pub margin: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub replicas: usize,
}

/// Fraction of replicas in which an open path joins a vertex within
/// distance `R` of the centre to a vertex at distance at least `M`.
pub fn theta_proxy(
    lattice: &PlaneLattice,
    mode: Mode,
    p: f64,
    radius: f64,
    margin: f64,
    replicas: usize,
    seed: u64,
) -> Result<ThetaProxy> {
    let inst = instantiate_disc(lattice, radius, margin)?;
    let params = PercolationParams::uniform(mode, p);
    let exp = label_id(&format!("theta/{}/{mode}/{p}/{radius}/{margin}", lattice.name));
    let disc = inst.disc.as_ref().expect("disc instance");
    let r = disc.radius;
    let flags: Vec<bool> = (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let c = sample_configuration(&inst, &params, &mut stream(seed, exp, rep as u64))?;
            Ok(reaches_far(&inst, &c.open, mode, r, &disc.far))
        })
        .collect::<Result<_>>()?;
    let e = Estimate::from_flags(flags);
    Ok(ThetaProxy { p, radius: r, margin, estimate: e.mean, stderr: e.stderr, replicas })
}

fn reaches_far(inst: &FiniteInstance, open: &[bool], mode: Mode, radius: f64, far: &[bool]) -> bool {
    let nv = inst.num_vertices();
    let site_open = |v: usize| mode == Mode::Bond || open[v];
    let mut seen = vec![false; nv];
    let mut queue: VecDeque<usize> =
        (0..nv).filter(|&v| geom::norm(inst.positions[v]) <= radius && site_open(v)).collect();
    for &v in &queue {
        seen[v] = true;
    }
    while let Some(u) = queue.pop_front() {
        if far[u] {
            return true;
        }
        for &(w, e) in inst.neighbors(u) {
            let w = w as usize;
            let pass = match mode {
                Mode::Bond => open[e as usize],
                Mode::Site => open[w],
            };
            if pass && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    false
}
