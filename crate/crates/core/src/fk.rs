//! Random-cluster (Fortuin–Kasteleyn) model on finite instances.
//!
//! The measure weights a bond configuration `ω` by
//! `∏ p_e^{ω_e} (1 − p_e)^{1 − ω_e} · q^{k(ω)}` where `k` counts clusters
//! (isolated vertices included; with a wired boundary all boundary vertices
//! form one cluster). Sampling is single-edge heat-bath in systematic scan.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{Mode, PercolationParams};
use crate::error::{Error, Result};
use crate::estimators::{PcEstimate, SizeRoot};
use crate::instance::{instantiate_box, instantiate_torus, FiniteInstance};
use crate::lattice::PlaneLattice;
use crate::rng::{label_id, stream};
use crate::stats::{batch_means, Estimate};
use crate::unionfind::WindingUnionFind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Free,
    Wired,
}

impl FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(Boundary::Free),
            "wired" => Ok(Boundary::Wired),
            other => Err(Error::InvalidParameter(format!("boundary must be free or wired, got {other}"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Free => "free",
            Boundary::Wired => "wired",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FKParams {
    pub q: f64,
    /// Edge probabilities by bond class.
    pub edges: PercolationParams,
    pub boundary: Boundary,
}

impl FKParams {
    pub fn uniform(q: f64, p: f64) -> Self {
        FKParams { q, edges: PercolationParams::uniform(Mode::Bond, p), boundary: Boundary::Free }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// Per-class `p_e`, checked against `q ≥ 1` and `p_e ∈ (0, 1)`.
    pub fn table(&self, inst: &FiniteInstance) -> Result<Vec<f64>> {
        if !(self.q >= 1.0) {
            return Err(Error::InvalidParameter(format!("q = {} must be at least 1", self.q)));
        }
        let t = self.edges.table(inst)?;
        if let Some(p) = t.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::InvalidParameter(format!("edge probability {p} outside (0, 1)")));
        }
        Ok(t)
    }

    /// Odds `y_e = p_e / (1 − p_e)` per class.
    pub fn odds(&self, inst: &FiniteInstance) -> Result<Vec<f64>> {
        Ok(self.table(inst)?.into_iter().map(|p| p / (1.0 - p)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FKSampleRun {
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Independent chains; the first half starts all closed, the rest all
    /// open.
    pub chains: usize,
}

impl Default for FKSampleRun {
    fn default() -> Self {
        FKSampleRun { sweeps: 1000, burn_in: 200, thin: 1, chains: 8 }
    }
}

impl FKSampleRun {
    fn validate(&self) -> Result<()> {
        if self.burn_in >= self.sweeps {
            return Err(Error::InvalidParameter(format!("burn-in {} not below sweeps {}", self.burn_in, self.sweeps)));
        }
        if self.thin == 0 || self.chains < 2 {
            return Err(Error::InvalidParameter("need thin ≥ 1 and at least two chains".into()));
        }
        Ok(())
    }

    pub fn samples_per_chain(&self) -> usize {
        (self.sweeps - self.burn_in).div_ceil(self.thin)
    }
}

pub const OBSERVABLES: [&str; 5] = ["wrap-either", "wrap-both", "wrap-average", "open-fraction", "clusters"];

/// Per-chain traces, one row per recorded sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainTrace {
    pub start_open: bool,
    pub sweeps: Vec<usize>,
    /// `values[o][t]` for observable `OBSERVABLES[o]`.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FKEstimate {
    pub q: f64,
    pub boundary: Boundary,
    pub chains: usize,
    pub samples_per_chain: usize,
    pub estimates: BTreeMap<String, Estimate>,
    /// Split-chain z-scores between closed and open starts.
    pub split_z: BTreeMap<String, f64>,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl FKEstimate {
    pub fn get(&self, observable: &str) -> Estimate {
        self.estimates[observable]
    }
}

#[derive(Debug, Clone)]
pub struct FKRun {
    pub estimate: FKEstimate,
    pub traces: Vec<ChainTrace>,
}

impl FKRun {
    /// CSV `chain,sweep,observable,value`.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["chain", "sweep", "observable", "value"])?;
        for (c, t) in self.traces.iter().enumerate() {
            for (i, &s) in t.sweeps.iter().enumerate() {
                for (o, name) in OBSERVABLES.iter().enumerate() {
                    w.write_record([c.to_string(), s.to_string(), name.to_string(), t.values[o][i].to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Connectivity queries that ignore one edge, by bidirectional BFS with
/// epoch-stamped marks.
struct Searcher {
    mark: [Vec<u32>; 2],
    epoch: u32,
    queues: [VecDeque<u32>; 2],
}

impl Searcher {
    fn new(n: usize) -> Self {
        Searcher { mark: [vec![0; n], vec![0; n]], epoch: 0, queues: [VecDeque::new(), VecDeque::new()] }
    }

    /// Whether `u` and `v` are joined by open edges other than `skip`.
    /// `wired` vertices count as joined to each other.
    fn connected(
        &mut self,
        inst: &FiniteInstance,
        open: &[bool],
        wired: Option<&[bool]>,
        skip: usize,
        u: u32,
        v: u32,
    ) -> bool {
        if u == v {
            return true;
        }
        self.epoch += 1;
        if self.epoch == u32::MAX {
            self.mark.iter_mut().for_each(|m| m.fill(0));
            self.epoch = 1;
        }
        let ep = self.epoch;
        let is_wired = |x: u32| wired.is_some_and(|w| w[x as usize]);
        let mut touched = [is_wired(u), is_wired(v)];
        if touched[0] && touched[1] {
            return true;
        }
        for (side, start) in [(0, u), (1, v)] {
            self.queues[side].clear();
            self.queues[side].push_back(start);
            self.mark[side][start as usize] = ep;
        }
        let mut done = [false, false];
        loop {
            for side in 0..2 {
                if done[side] {
                    continue;
                }
                let Some(x) = self.queues[side].pop_front() else {
                    // This side's cluster is exhausted without meeting the other.
                    if !touched[side] {
                        return false;
                    }
                    done[side] = true;
                    if done[0] && done[1] {
                        return false;
                    }
                    continue;
                };
                for &(w, e) in inst.neighbors(x as usize) {
                    if e as usize == skip || !open[e as usize] || self.mark[side][w as usize] == ep {
                        continue;
                    }
                    if self.mark[1 - side][w as usize] == ep {
                        return true;
                    }
                    self.mark[side][w as usize] = ep;
                    if is_wired(w) {
                        touched[side] = true;
                        if touched[1 - side] {
                            return true;
                        }
                    }
                    self.queues[side].push_back(w);
                }
            }
        }
    }
}

fn wired_mask(inst: &FiniteInstance, boundary: Boundary) -> Result<Option<Vec<bool>>> {
    match boundary {
        Boundary::Free => Ok(None),
        Boundary::Wired if inst.boundary.iter().any(|&b| b) => Ok(Some(inst.boundary.clone())),
        Boundary::Wired => Err(Error::InvalidParameter("wired boundary needs a box instance".into())),
    }
}

/// Conditional probability that edge `e` is open given all other edges.
pub fn heat_bath_probability(inst: &FiniteInstance, params: &FKParams, open: &[bool], e: usize) -> Result<f64> {
    let table = params.table(inst)?;
    let wired = wired_mask(inst, params.boundary)?;
    let mut s = Searcher::new(inst.num_vertices());
    let edge = inst.edges[e];
    let p = table[edge.class as usize];
    Ok(if s.connected(inst, open, wired.as_deref(), e, edge.u, edge.v) { p } else { p / (p + params.q * (1.0 - p)) })
}

struct ClusterStats {
    wrap_either: bool,
    wrap_both: bool,
    clusters: usize,
}

fn cluster_stats(inst: &FiniteInstance, open: &[bool], wired: Option<&[bool]>) -> ClusterStats {
    let mut uf = WindingUnionFind::new(inst.num_vertices());
    for (e, edge) in inst.edges.iter().enumerate() {
        if open[e] {
            uf.union(edge.u as usize, edge.v as usize, edge.wrap);
        }
    }
    if let Some(w) = wired {
        let mut first = None;
        for v in (0..w.len()).filter(|&v| w[v]) {
            match first {
                None => first = Some(v),
                Some(f) => {
                    uf.union(f, v, [0, 0]);
                }
            }
        }
    }
    let mut rank = 0;
    for v in 0..uf.len() {
        if uf.is_root(v) {
            rank = rank.max(uf.winding_of_root(v).rank);
        }
    }
    ClusterStats { wrap_either: rank >= 1, wrap_both: rank == 2, clusters: uf.components() }
}

/// Unnormalized FK weight of a configuration.
pub fn fk_weight(inst: &FiniteInstance, params: &FKParams, open: &[bool]) -> Result<f64> {
    let table = params.table(inst)?;
    let wired = wired_mask(inst, params.boundary)?;
    let k = cluster_stats(inst, open, wired.as_deref()).clusters;
    let mut w = params.q.powi(k as i32);
    for (e, edge) in inst.edges.iter().enumerate() {
        let p = table[edge.class as usize];
        w *= if open[e] { p } else { 1.0 - p };
    }
    Ok(w)
}

fn run_chain(
    inst: &FiniteInstance,
    table: &[f64],
    q: f64,
    wired: Option<&[bool]>,
    run: &FKSampleRun,
    start_open: bool,
    rng: &mut impl Rng,
) -> ChainTrace {
    let m = inst.num_edges();
    let mut open = vec![start_open; m];
    let mut search = Searcher::new(inst.num_vertices());
    let cap = run.samples_per_chain();
    let mut trace = ChainTrace {
        start_open,
        sweeps: Vec::with_capacity(cap),
        values: vec![Vec::with_capacity(cap); OBSERVABLES.len()],
    };
    // Open probability when the endpoints are / are not joined off the edge.
    let p_joined: Vec<f64> = table.to_vec();
    let p_split: Vec<f64> = table.iter().map(|&p| p / (p + q * (1.0 - p))).collect();
    for sweep in 0..run.sweeps {
        for e in 0..m {
            let edge = inst.edges[e];
            let c = edge.class as usize;
            let u: f64 = rng.random();
            // Both conditionals agree below p_split, so skip the search there.
            open[e] = if u < p_split[c] {
                true
            } else if u >= p_joined[c] {
                false
            } else {
                search.connected(inst, &open, wired, e, edge.u, edge.v)
            };
        }
        if sweep >= run.burn_in && (sweep - run.burn_in).is_multiple_of(run.thin) {
            let st = cluster_stats(inst, &open, wired);
            let (a, b) = (f64::from(u8::from(st.wrap_either)), f64::from(u8::from(st.wrap_both)));
            let row = [a, b, 0.5 * (a + b), open.iter().filter(|&&o| o).count() as f64 / m as f64, st.clusters as f64];
            trace.sweeps.push(sweep);
            for (o, v) in row.into_iter().enumerate() {
                trace.values[o].push(v);
            }
        }
    }
    trace
}

const BATCHES: usize = 20;
const SPLIT_SIGMAS: f64 = 5.0;

fn pooled(estimates: &[Estimate]) -> Estimate {
    let n = estimates.len() as f64;
    let mean = estimates.iter().map(|e| e.mean).sum::<f64>() / n;
    let var = estimates.iter().map(|e| e.stderr * e.stderr).sum::<f64>() / (n * n);
    Estimate { mean, stderr: var.sqrt(), samples: estimates.iter().map(|e| e.samples).sum() }
}

/// Runs `run.chains` chains in parallel; chain `c` draws from stream `c`
/// of the experiment.
pub fn fk_run(
    inst: &FiniteInstance,
    params: &FKParams,
    run: &FKSampleRun,
    seed: u64,
    experiment: u64,
) -> Result<FKRun> {
    run.validate()?;
    let table = params.table(inst)?;
    let wired = wired_mask(inst, params.boundary)?;
    let half = run.chains / 2;
    let traces: Vec<ChainTrace> = (0..run.chains)
        .into_par_iter()
        .map(|c| {
            run_chain(inst, &table, params.q, wired.as_deref(), run, c >= half, &mut stream(seed, experiment, c as u64))
        })
        .collect();
    let mut estimates = BTreeMap::new();
    let mut split_z = BTreeMap::new();
    let mut worst: Option<(String, f64)> = None;
    for (o, name) in OBSERVABLES.iter().enumerate() {
        let per_chain: Vec<Estimate> = traces.iter().map(|t| batch_means(&t.values[o], BATCHES)).collect();
        let all = pooled(&per_chain);
        // Chain-to-chain scatter guards against underestimated batch errors.
        let spread = Estimate::from_samples(&per_chain.iter().map(|e| e.mean).collect::<Vec<_>>());
        estimates.insert(name.to_string(), Estimate { stderr: all.stderr.max(spread.stderr), ..all });
        let (a, b) = (pooled(&per_chain[..half]), pooled(&per_chain[half..]));
        let z = a.z_distance(&b);
        let z = if z.is_nan() { 0.0 } else { z };
        split_z.insert(name.to_string(), z);
        if z > SPLIT_SIGMAS && worst.as_ref().is_none_or(|w| z > w.1) {
            worst = Some((name.to_string(), z));
        }
    }
    let warning = worst.map(|(n, z)| format!("closed and open starts disagree on {n} by {z:.1}σ"));
    Ok(FKRun {
        estimate: FKEstimate {
            q: params.q,
            boundary: params.boundary,
            chains: run.chains,
            samples_per_chain: run.samples_per_chain(),
            estimates,
            split_z,
            converged: warning.is_none(),
            warning,
        },
        traces,
    })
}

pub fn fk_sample(inst: &FiniteInstance, params: &FKParams, run: &FKSampleRun, seed: u64) -> Result<FKEstimate> {
    let exp = label_id(&format!("fk/{}/{}", params.q, inst.num_edges()));
    Ok(fk_run(inst, params, run, seed, exp)?.estimate)
}

/// The `r` with `r/(1 − r) = q(1 − p)/p`.
pub fn dual_weights(p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) || !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("dual weights need p in (0,1) and q ≥ 1 (got p={p}, q={q})")));
    }
    let odds = q * (1.0 - p) / p;
    Ok(odds / (1.0 + odds))
}

/// `√q / (1 + √q)`.
pub fn self_dual_point(q: f64) -> f64 {
    q.sqrt() / (1.0 + q.sqrt())
}

pub fn triangular_surface_residual(y1: f64, y2: f64, y3: f64, q: f64) -> f64 {
    y1 * y2 * y3 + y1 * y2 + y2 * y3 + y3 * y1 - q
}

/// Positive root of `y³ + 3y² = q` and the matching `p = y/(1 + y)`.
pub fn symmetric_surface_point(q: f64) -> (f64, f64) {
    let f = |y: f64| triangular_surface_residual(y, y, y, q);
    let (mut lo, mut hi) = (0.0, q.max(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = 0.5 * (lo + hi);
    (y, y / (1.0 + y))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbePoint {
    pub size: usize,
    pub p: f64,
    pub wrap: Estimate,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdProbe {
    pub q: f64,
    pub lattice: String,
    pub estimate: PcEstimate,
    pub trace: Vec<ProbePoint>,
    /// The wrapping estimate never drops by more than 3σ as `p` grows.
    pub monotone: bool,
    pub self_dual_point: f64,
}

/// Bisection bracket and number of steps for the probe.
const PROBE_BRACKET: (f64, f64) = (0.15, 0.85);
const PROBE_STEPS: usize = 9;

/// Finds where the averaged wrapping estimate of independent FK runs
/// crosses ½, on `size × size` tori for each size.
pub fn fk_threshold_probe(
    q: f64,
    lattice: &PlaneLattice,
    sizes: &[usize],
    run: &FKSampleRun,
    seed: u64,
) -> Result<ThresholdProbe> {
    if !(1.0..=4.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("threshold probes need q in [1, 4], got {q}")));
    }
    if !["square", "triangular"].contains(&lattice.name.as_str()) {
        return Err(Error::InvalidParameter(format!(
            "threshold probes support square and triangular, not {}",
            lattice.name
        )));
    }
    if sizes.len() < 2 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("need at least two increasing sizes".into()));
    }
    let mut trace = Vec::new();
    let mut roots = Vec::new();
    for &size in sizes {
        let inst = instantiate_torus(lattice, size, size)?;
        let probe = |p: f64| -> Result<ProbePoint> {
            let exp = label_id(&format!("fk-probe/{}/{q}/{size}/{p}", lattice.name));
            let est = fk_run(&inst, &FKParams::uniform(q, p), run, seed, exp)?.estimate;
            Ok(ProbePoint { size, p, wrap: est.get("wrap-average"), converged: est.converged })
        };
        let (mut lo, mut hi) = PROBE_BRACKET;
        let mut points = vec![probe(lo)?, probe(hi)?];
        if points[0].wrap.mean >= 0.5 || points[1].wrap.mean <= 0.5 {
            return Err(Error::NoCrossing { size });
        }
        let (mut lo_pt, mut hi_pt) = (points[0].clone(), points[1].clone());
        for _ in 0..PROBE_STEPS {
            let mid = 0.5 * (lo + hi);
            let pt = probe(mid)?;
            if pt.wrap.mean < 0.5 {
                lo = mid;
                lo_pt = pt.clone();
            } else {
                hi = mid;
                hi_pt = pt.clone();
            }
            points.push(pt);
        }
        // Linear interpolation across the final bracket; the error is the
        // wrapping stderr carried through the local slope.
        let slope = (hi_pt.wrap.mean - lo_pt.wrap.mean) / (hi - lo);
        let root = if slope > 0.0 { lo + (0.5 - lo_pt.wrap.mean) / slope } else { 0.5 * (lo + hi) };
        let se_w = 0.5 * (lo_pt.wrap.stderr + hi_pt.wrap.stderr);
        let stderr = if slope > 0.0 { se_w / slope } else { hi - lo };
        roots.push(SizeRoot { size, root: root.clamp(lo, hi), stderr, sweeps: run.chains * run.samples_per_chain() });
        trace.extend(points);
    }
    let (last, prev) = (&roots[roots.len() - 1], &roots[roots.len() - 2]);
    let p_hat = last.root;
    let drift = (last.root - prev.root).abs();
    let stat_error = 1.96 * last.stderr;
    let mut ordered = trace.clone();
    ordered.sort_by(|a, b| (a.size, a.p).partial_cmp(&(b.size, b.p)).expect("finite"));
    let monotone = ordered.windows(2).filter(|w| w[0].size == w[1].size).all(|w| {
        let s = (w[0].wrap.stderr.powi(2) + w[1].wrap.stderr.powi(2)).sqrt();
        w[1].wrap.mean >= w[0].wrap.mean - 3.0 * s
    });
    let converged = trace.iter().all(|p| p.converged);
    if !converged {
        let bad =
            trace.iter().filter(|p| !p.converged).map(|p| format!("L={} p={:.4}", p.size, p.p)).collect::<Vec<_>>();
        return Err(Error::NonConvergence(format!("split-chain check failed at {}", bad.join(", "))));
    }
    Ok(ThresholdProbe {
        q,
        lattice: lattice.name.clone(),
        estimate: PcEstimate {
            p_hat,
            ci_halfwidth: drift + stat_error,
            stat_error,
            drift,
            method: "fk-heat-bath-bisection".into(),
            locator: crate::estimators::Locator::WrappingAverage,
            sizes: sizes.to_vec(),
            replicas: vec![run.chains * run.samples_per_chain(); sizes.len()],
            roots,
            converged,
            disorder: None,
        },
        trace,
        monotone,
        self_dual_point: self_dual_point(q),
    })
}

/// Box instance for wired or free runs.
pub fn fk_box(lattice: &PlaneLattice, size: usize) -> Result<FiniteInstance> {
    instantiate_box(lattice, size, size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::builtin;

    #[test]
    fn dual_weight_examples() {
        assert!((dual_weights(0.3, 1.0).unwrap() - 0.7).abs() < 1e-15);
        assert!((dual_weights(0.5, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        for q in [1.0, 2.0, 3.0, 4.0] {
            let p = self_dual_point(q);
            assert!((dual_weights(p, q).unwrap() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn surface_examples() {
        assert_eq!(triangular_surface_residual(1.0, 1.0, 1.0, 1.0), 3.0);
        let (y, p) = symmetric_surface_point(1.0);
        assert!(triangular_surface_residual(y, y, y, 1.0).abs() < 1e-12);
        // 2 sin(π/18), the isotropic triangular bond threshold.
        assert!((p - 2.0 * (std::f64::consts::PI / 18.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn single_edge_open_probability() {
        let inst = instantiate_box(&builtin("square").unwrap(), 2, 2).unwrap();
        let params = FKParams::uniform(2.0, 0.5);
        let open = vec![false; inst.num_edges()];
        assert!((heat_bath_probability(&inst, &params, &open, 0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn wired_needs_box() {
        let inst = instantiate_torus(&builtin("square").unwrap(), 3, 3).unwrap();
        let params = FKParams::uniform(2.0, 0.5).with_boundary(Boundary::Wired);
        assert!(fk_sample(&inst, &params, &FKSampleRun { sweeps: 10, burn_in: 1, thin: 1, chains: 2 }, 0).is_err());
    }

    #[test]
    fn bad_runs_rejected() {
        let inst = instantiate_torus(&builtin("square").unwrap(), 3, 3).unwrap();
        let p = FKParams::uniform(2.0, 0.5);
        assert!(fk_sample(&inst, &p, &FKSampleRun { sweeps: 10, burn_in: 10, thin: 1, chains: 2 }, 0).is_err());
        assert!(fk_sample(&inst, &FKParams::uniform(0.5, 0.5), &FKSampleRun::default(), 0).is_err());
    }
}
