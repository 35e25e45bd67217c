//! Arc events on a disc: escapes through boundary arcs, the division-angle
//! sweep, the four-arc event and Harris-inequality checks.
//!
//! An open path "leaves the disc at x" when it crosses the circle at the
//! crossing point `x` and then stays strictly outside the disc until it
//! reaches a vertex at distance at least `M` (the stand-in for infinity).
//! For a crossing on edge `e` with outer endpoint `w` this is: `e` open and
//! `w` joined to a far vertex by open edges lying wholly outside the disc.

use std::collections::VecDeque;
use std::f64::consts::TAU;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dual::dual;
use crate::engine::{dual_configuration, sample_configuration, Configuration, Mode, PercolationParams};
use crate::error::{Error, Result};
use crate::geom;
use crate::instance::{instantiate_disc_pair, Crossing, FiniteInstance};
use crate::lattice::PlaneLattice;
use crate::rng::{label_id, stream};
use crate::stats::Estimate;
use crate::unionfind::WindingUnionFind;

pub const MIN_HARRIS_REPLICAS: usize = 10_000;

/// Division of the circle into `2k` arcs. `A_{2m+1}` runs from angle
/// `m·2π/k` to `m·2π/k + φ`, `A_{2m+2}` from there to `(m+1)·2π/k`. Each
/// endpoint `Q_i` belongs to the arc counterclockwise of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcPartition {
    pub radius: f64,
    pub k: u32,
    pub phi: f64,
    /// Angles of `Q_0 … Q_{2k−1}`.
    pub q: Vec<f64>,
}

pub fn arc_partition(radius: f64, k: u32, phi: f64) -> Result<ArcPartition> {
    if ![2, 3, 4, 6].contains(&k) {
        return Err(Error::InvalidParameter(format!("arc partitions need k in {{2,3,4,6}}, got {k}")));
    }
    let sector = TAU / f64::from(k);
    if !(0.0..=sector).contains(&phi) {
        return Err(Error::InvalidParameter(format!("phi = {phi} outside [0, 2π/k]")));
    }
    let q = (0..k).flat_map(|m| {
        let base = f64::from(m) * sector;
        [base, base + phi]
    });
    Ok(ArcPartition { radius, k, phi, q: q.collect() })
}

impl ArcPartition {
    pub fn num_arcs(&self) -> usize {
        2 * self.k as usize
    }

    pub fn sector(&self) -> f64 {
        TAU / f64::from(self.k)
    }

    /// 1-based arc index of a boundary angle in `[0, 2π)`.
    pub fn arc_of(&self, angle: f64) -> usize {
        let k = self.k as usize;
        let mut m = ((angle / self.sector()).floor().max(0.0) as usize).min(k - 1);
        // Settle rounding against the stored endpoints.
        if m > 0 && angle < self.q[2 * m] {
            m -= 1;
        } else if m + 1 < k && angle >= self.q[2 * m + 2] {
            m += 1;
        }
        2 * m + if angle < self.q[2 * m + 1] { 1 } else { 2 }
    }

    /// Fails if some `Q_i` is within 1e-9 (arc length) of a crossing.
    pub fn check_crossings<'a>(&self, crossings: impl IntoIterator<Item = &'a Crossing>) -> Result<()> {
        for c in crossings {
            for (i, &q) in self.q.iter().enumerate() {
                let d = (c.angle - q).rem_euclid(TAU);
                if d.min(TAU - d) * self.radius < 1e-9 {
                    return Err(Error::QOnEdge { index: i });
                }
            }
        }
        Ok(())
    }
}

/// A disc instance of a lattice with its dual attached.
#[derive(Debug, Clone)]
pub struct ZhangSetup {
    pub lattice: String,
    pub instance: FiniteInstance,
}

impl ZhangSetup {
    pub fn new(lattice: &PlaneLattice, radius: f64, margin: f64) -> Result<Self> {
        let pair = dual(lattice)?;
        Ok(ZhangSetup { lattice: lattice.name.clone(), instance: instantiate_disc_pair(&pair, radius, margin)? })
    }

    pub fn dual(&self) -> &FiniteInstance {
        &self.instance.dual.as_ref().expect("setup carries its dual").instance
    }

    pub fn radius(&self) -> f64 {
        self.instance.disc.as_ref().expect("disc").radius
    }

    pub fn margin(&self) -> f64 {
        self.instance.disc.as_ref().expect("disc").margin
    }

    pub fn primal_crossings(&self) -> &[Crossing] {
        &self.instance.disc.as_ref().expect("disc").crossings
    }

    pub fn dual_crossings(&self) -> &[Crossing] {
        &self.dual().disc.as_ref().expect("disc").crossings
    }

    pub fn check_partition(&self, arcs: &ArcPartition) -> Result<()> {
        arcs.check_crossings(self.primal_crossings().iter().chain(self.dual_crossings()))
    }

    /// Joint flags for one primal configuration.
    pub fn flags(&self, config: &Configuration) -> Result<CrossingFlags> {
        crossing_flags(&self.instance, config)
    }

    /// Flags of `replicas` independent configurations at bond probability
    /// `p`, replica `r` drawn from stream `r`.
    pub fn sample(&self, p: f64, replicas: usize, seed: u64) -> Result<Vec<CrossingFlags>> {
        let exp = self.experiment(p);
        let params = PercolationParams::uniform(Mode::Bond, p);
        (0..replicas)
            .into_par_iter()
            .map(|r| {
                let c = sample_configuration(&self.instance, &params, &mut stream(seed, exp, r as u64))?;
                self.flags(&c)
            })
            .collect()
    }

    pub fn experiment(&self, p: f64) -> u64 {
        label_id(&format!("zhang/{}/{p}/{}/{}", self.lattice, self.radius(), self.margin()))
    }
}

/// Per-crossing escape flags (`L_x`) for the primal and dual instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossingFlags {
    pub primal: Vec<bool>,
    pub dual: Vec<bool>,
}

/// Outside-open connectivity with every far vertex merged into one node.
struct OutsideComponents {
    uf: WindingUnionFind,
    far_node: usize,
}

impl OutsideComponents {
    fn new(inst: &FiniteInstance, open: &[bool]) -> Self {
        let disc = inst.disc.as_ref().expect("disc instance");
        let nv = inst.num_vertices();
        let far_node = nv;
        let mut uf = WindingUnionFind::new(nv + 1);
        let node = |v: u32| if disc.far[v as usize] { far_node } else { v as usize };
        for (e, edge) in inst.edges.iter().enumerate() {
            if open[e] && disc.outside[e] {
                let (a, b) = (node(edge.u), node(edge.v));
                if a != b {
                    uf.union(a, b, [0, 0]);
                }
            }
        }
        OutsideComponents { uf, far_node }
    }

    fn escapes(&mut self, inst: &FiniteInstance, v: u32) -> bool {
        let disc = inst.disc.as_ref().expect("disc instance");
        disc.far[v as usize] || self.uf.connected(v as usize, self.far_node)
    }
}

/// `L_x` for every crossing of a disc instance, given its open edges.
pub fn escape_flags(inst: &FiniteInstance, open: &[bool]) -> Vec<bool> {
    let mut comps = OutsideComponents::new(inst, open);
    let disc = inst.disc.as_ref().expect("disc instance");
    disc.crossings.iter().map(|c| open[c.edge as usize] && comps.escapes(inst, c.outer)).collect()
}

pub fn crossing_flags(inst: &FiniteInstance, config: &Configuration) -> Result<CrossingFlags> {
    if inst.disc.is_none() {
        return Err(Error::InvalidParameter("arc events need a disc instance".into()));
    }
    let dual_config = dual_configuration(inst, config)?;
    let link = inst.dual.as_ref().ok_or(Error::MissingDual)?;
    Ok(CrossingFlags {
        primal: escape_flags(inst, &config.open),
        dual: escape_flags(&link.instance, &dual_config.open),
    })
}

/// Folds per-crossing flags into per-arc flags (index 0 is `A_1`).
pub fn arc_flags(crossings: &[Crossing], flags: &[bool], arcs: &ArcPartition) -> Vec<bool> {
    let mut out = vec![false; arcs.num_arcs()];
    for (c, &f) in crossings.iter().zip(flags) {
        if f {
            out[arcs.arc_of(c.angle) - 1] = true;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcEventSample {
    /// `L_1 … L_{2k}`.
    pub primal: Vec<bool>,
    /// `L*_1 … L*_{2k}`.
    pub dual: Vec<bool>,
    pub margin: f64,
}

pub fn leave_events(inst: &FiniteInstance, config: &Configuration, arcs: &ArcPartition) -> Result<ArcEventSample> {
    let flags = crossing_flags(inst, config)?;
    let disc = inst.disc.as_ref().expect("checked above");
    let dual_disc = inst.dual.as_ref().and_then(|d| d.instance.disc.as_ref()).ok_or(Error::MissingDual)?;
    arcs.check_crossings(disc.crossings.iter().chain(&dual_disc.crossings))?;
    Ok(ArcEventSample {
        primal: arc_flags(&disc.crossings, &flags.primal, arcs),
        dual: arc_flags(&dual_disc.crossings, &flags.dual, arcs),
        margin: disc.margin,
    })
}

fn arc_samples(setup: &ZhangSetup, flags: &[CrossingFlags], arcs: &ArcPartition) -> Vec<(Vec<bool>, Vec<bool>)> {
    flags
        .iter()
        .map(|f| {
            (arc_flags(setup.primal_crossings(), &f.primal, arcs), arc_flags(setup.dual_crossings(), &f.dual, arcs))
        })
        .collect()
}

/// Edges of an escape path from crossing `index`: the crossing edge, then
/// outside open edges up to a far vertex.
pub fn escape_witness(inst: &FiniteInstance, open: &[bool], index: usize) -> Option<Vec<u32>> {
    let disc = inst.disc.as_ref()?;
    let c = disc.crossings.get(index)?;
    if !open[c.edge as usize] {
        return None;
    }
    let nv = inst.num_vertices();
    let mut via = vec![u32::MAX; nv];
    let mut seen = vec![false; nv];
    let start = c.outer as usize;
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        if disc.far[u] {
            let mut path = vec![c.edge];
            let mut v = u;
            while v != start {
                let e = via[v];
                path.push(e);
                let edge = inst.edges[e as usize];
                v = if edge.u as usize == v { edge.v as usize } else { edge.u as usize };
            }
            return Some(path);
        }
        for &(w, e) in inst.neighbors(u) {
            if open[e as usize] && disc.outside[e as usize] && !seen[w as usize] {
                seen[w as usize] = true;
                via[w as usize] = e;
                queue.push_back(w as usize);
            }
        }
    }
    None
}

/// Whether any primal edge of one path properly crosses any dual edge of
/// the other.
pub fn paths_cross(primal: &FiniteInstance, p_edges: &[u32], dual: &FiniteInstance, d_edges: &[u32]) -> bool {
    p_edges.iter().any(|&e| {
        let (a, b) = primal.edge_segment(e as usize);
        d_edges.iter().any(|&f| {
            let (c, d) = dual.edge_segment(f as usize);
            geom::segments_cross(a, b, c, d)
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpRow {
    pub phi: f64,
    pub p_not_l1: f64,
    pub p_not_l2: f64,
    pub stderr_l1: f64,
    pub stderr_l2: f64,
    /// `P(¬L_1(φ_j)) / P(¬L_1(φ_{j−1}))`; at least `1 − p`.
    pub ratio_l1: f64,
    /// `P(¬L_2(φ_{j−1})) / P(¬L_2(φ_j))`; at least `1 − p`.
    pub ratio_l2: f64,
    /// Both jump bounds hold within 3σ.
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub p: f64,
    pub k: u32,
    pub radius: f64,
    pub margin: f64,
    pub replicas: usize,
    pub phi_star: f64,
    pub index_star: usize,
    pub jumps: Vec<JumpRow>,
    /// `P(¬L_2) / P(¬L_1)` at `φ*`.
    pub terminal_ratio: f64,
    pub band_upper: f64,
    /// Paired z-scores of `P(¬L_2) − P(¬L_1)` and
    /// `(1−p)^{-2}·P(¬L_1) − P(¬L_2)`; the band holds if both are ≥ −3.
    pub z_lower: f64,
    pub z_upper: f64,
    pub band_pass: bool,
    pub jump_bound_pass: bool,
}

/// Mean and standard error of paired per-replica differences, as a z-score.
fn paired_z(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    let e = Estimate::from_samples(&v);
    if e.stderr == 0.0 {
        if e.mean >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        e.mean / e.stderr
    }
}

/// Candidate division angles: `0`, a point just past each primal crossing
/// in the first sector (midway to the next crossing of either lattice),
/// and `2π/k`.
pub fn jump_angles(setup: &ZhangSetup, k: u32) -> (Vec<usize>, Vec<f64>) {
    let sector = TAU / f64::from(k);
    let sector_crossings: Vec<usize> =
        (0..setup.primal_crossings().len()).filter(|&i| setup.primal_crossings()[i].angle < sector).collect();
    let mut all: Vec<f64> = setup.primal_crossings().iter().chain(setup.dual_crossings()).map(|c| c.angle).collect();
    all.sort_by(f64::total_cmp);
    let mut phis = vec![0.0];
    for (j, &i) in sector_crossings.iter().enumerate() {
        let c = setup.primal_crossings()[i].angle;
        if j + 1 == sector_crossings.len() {
            break;
        }
        let next = all.iter().copied().find(|&a| a > c).unwrap_or(sector).min(sector);
        phis.push(0.5 * (c + next));
    }
    phis.push(sector);
    (sector_crossings, phis)
}

pub fn balance_from_flags(setup: &ZhangSetup, flags: &[CrossingFlags], p: f64, k: u32) -> Result<BalanceReport> {
    let (sector, phis) = jump_angles(setup, k);
    let n = sector.len();
    let reps = flags.len();
    if reps < 2 {
        return Err(Error::InsufficientReplicas("need at least two replicas".into()));
    }
    // First and last escaping crossing in the sector, per replica.
    let spans: Vec<(usize, Option<usize>)> = flags
        .iter()
        .map(|f| {
            let hits: Vec<usize> = (0..n).filter(|&j| f.primal[sector[j]]).collect();
            (hits.first().copied().unwrap_or(n), hits.last().copied())
        })
        .collect();
    let not_l1 = |j: usize, s: &(usize, Option<usize>)| s.0 >= j;
    let not_l2 = |j: usize, s: &(usize, Option<usize>)| s.1.is_none_or(|m| m < j);
    let prob = |f: &dyn Fn(&(usize, Option<usize>)) -> bool| Estimate::from_flags(spans.iter().map(f));
    let q = 1.0 - p;
    let mut jumps = Vec::with_capacity(n + 1);
    let mut star = None;
    for (j, &phi) in phis.iter().enumerate() {
        let e1 = prob(&|s| not_l1(j, s));
        let e2 = prob(&|s| not_l2(j, s));
        let (ratio_l1, ratio_l2, within) = if j == 0 {
            (1.0, 1.0, true)
        } else {
            let prev1 = prob(&|s| not_l1(j - 1, s)).mean;
            let prev2 = prob(&|s| not_l2(j - 1, s)).mean;
            let z1 = paired_z(
                spans.iter().map(|s| f64::from(u8::from(not_l1(j, s))) - q * f64::from(u8::from(not_l1(j - 1, s)))),
            );
            let z2 = paired_z(
                spans.iter().map(|s| f64::from(u8::from(not_l2(j - 1, s))) - q * f64::from(u8::from(not_l2(j, s)))),
            );
            (e1.mean / prev1, prev2 / e2.mean, z1 >= -3.0 && z2 >= -3.0)
        };
        if star.is_none() && e2.mean >= e1.mean {
            star = Some(j);
        }
        jumps.push(JumpRow {
            phi,
            p_not_l1: e1.mean,
            p_not_l2: e2.mean,
            stderr_l1: e1.stderr,
            stderr_l2: e2.stderr,
            ratio_l1,
            ratio_l2,
            within_bound: within,
        });
    }
    let js = star.expect("at φ = 2π/k the second arc is empty");
    let c1 = spans.iter().filter(|s| not_l1(js, s)).count();
    let c2 = spans.iter().filter(|s| not_l2(js, s)).count();
    if c1.min(c2) < 5 {
        return Err(Error::InsufficientReplicas(format!(
            "only {c1} and {c2} replicas without escapes at the balanced angle"
        )));
    }
    let upper = q.powi(-2);
    let a = |s: &(usize, Option<usize>)| f64::from(u8::from(not_l1(js, s)));
    let b = |s: &(usize, Option<usize>)| f64::from(u8::from(not_l2(js, s)));
    let z_lower = paired_z(spans.iter().map(|s| b(s) - a(s)));
    let z_upper = paired_z(spans.iter().map(|s| upper * a(s) - b(s)));
    Ok(BalanceReport {
        p,
        k,
        radius: setup.radius(),
        margin: setup.margin(),
        replicas: reps,
        phi_star: phis[js],
        index_star: js,
        terminal_ratio: jumps[js].p_not_l2 / jumps[js].p_not_l1,
        band_upper: upper,
        z_lower,
        z_upper,
        band_pass: z_lower >= -3.0 && z_upper >= -3.0,
        jump_bound_pass: jumps.iter().all(|r| r.within_bound),
        jumps,
    })
}

/// Sweeps the division angle over the primal jump points and returns the
/// first angle where `P(¬L_2) ≥ P(¬L_1)`. One set of replicas serves every
/// angle.
pub fn balance_phi(
    lattice: &PlaneLattice,
    p: f64,
    radius: f64,
    margin: f64,
    k: u32,
    replicas: usize,
    seed: u64,
) -> Result<BalanceReport> {
    let setup = ZhangSetup::new(lattice, radius, margin)?;
    let flags = setup.sample(p, replicas, seed)?;
    balance_from_flags(&setup, &flags, p, k)
}

/// `(1−p)^{2k} / 5^{2k}`.
pub fn epsilon(p: f64, k: u32) -> f64 {
    ((1.0 - p) / 5.0).powi(2 * k as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourEventReport {
    pub k: u32,
    pub phi: f64,
    pub j: usize,
    pub radius: f64,
    pub margin: f64,
    pub replicas: usize,
    pub p_e: Estimate,
    pub p_l: Vec<Estimate>,
    pub p_l_star: Vec<Estimate>,
    pub p_union: Estimate,
    pub p_union_star: Estimate,
    pub epsilon: f64,
}

impl FourEventReport {
    /// CSV rows `R,M,phi,i,P_Li,P_Li_star,stderr,stderr_star`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["R", "M", "phi", "i", "P_Li", "P_Li_star", "stderr", "stderr_star"])?;
        for (i, (l, ls)) in self.p_l.iter().zip(&self.p_l_star).enumerate() {
            w.write_record([
                format!("{}", self.radius),
                format!("{}", self.margin),
                format!("{}", self.phi),
                (i + 1).to_string(),
                format!("{}", l.mean),
                format!("{}", ls.mean),
                format!("{}", l.stderr),
                format!("{}", ls.stderr),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn wrap_arc(i: usize, arcs: usize) -> usize {
    (i - 1) % arcs
}

/// `E = L*_j ∩ L_{j+1} ∩ L*_{j+2} ∩ L_{j+3}` from sampled flags. With
/// `j = None` the `j ∈ {1, 2}` with the smaller `P(¬L*_j)` is used.
pub fn four_event_from_flags(
    setup: &ZhangSetup,
    flags: &[CrossingFlags],
    arcs: &ArcPartition,
    j: Option<usize>,
    p: f64,
) -> Result<FourEventReport> {
    setup.check_partition(arcs)?;
    let samples = arc_samples(setup, flags, arcs);
    let na = arcs.num_arcs();
    let per_arc = |dual: bool| -> Vec<Estimate> {
        (0..na).map(|i| Estimate::from_flags(samples.iter().map(|s| if dual { s.1[i] } else { s.0[i] }))).collect()
    };
    let p_l = per_arc(false);
    let p_l_star = per_arc(true);
    let j = match j {
        Some(j @ (1 | 2)) => j,
        Some(other) => return Err(Error::InvalidParameter(format!("j must be 1 or 2, got {other}"))),
        None => {
            if p_l_star[0].mean >= p_l_star[1].mean {
                1
            } else {
                2
            }
        }
    };
    let e = Estimate::from_flags(samples.iter().map(|(l, ls)| {
        ls[wrap_arc(j, na)] && l[wrap_arc(j + 1, na)] && ls[wrap_arc(j + 2, na)] && l[wrap_arc(j + 3, na)]
    }));
    Ok(FourEventReport {
        k: arcs.k,
        phi: arcs.phi,
        j,
        radius: setup.radius(),
        margin: setup.margin(),
        replicas: flags.len(),
        p_e: e,
        p_union: Estimate::from_flags(samples.iter().map(|s| s.0.iter().any(|&x| x))),
        p_union_star: Estimate::from_flags(samples.iter().map(|s| s.1.iter().any(|&x| x))),
        p_l,
        p_l_star,
        epsilon: epsilon(p, arcs.k),
    })
}

#[allow(clippy::too_many_arguments)]
pub fn four_event_probability(
    lattice: &PlaneLattice,
    p: f64,
    radius: f64,
    margin: f64,
    k: u32,
    phi: f64,
    j: Option<usize>,
    replicas: usize,
    seed: u64,
) -> Result<FourEventReport> {
    let setup = ZhangSetup::new(lattice, radius, margin)?;
    let arcs = arc_partition(setup.radius(), k, phi)?;
    setup.check_partition(&arcs)?;
    let flags = setup.sample(p, replicas, seed)?;
    four_event_from_flags(&setup, &flags, &arcs, j, p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarrisReport {
    pub replicas: usize,
    pub events: usize,
    pub intersection: f64,
    pub product: f64,
    /// Jackknife standard error of `intersection − product`, floored by the
    /// binomial error of the product.
    pub stderr: f64,
    pub pass: bool,
}

const JACKKNIFE_GROUPS: usize = 50;

/// Checks `P(⋂ E_i) ≥ ∏ P(E_i) − 3σ` for events given as per-replica rows.
pub fn harris_product_check(rows: &[Vec<bool>]) -> Result<HarrisReport> {
    if rows.len() < MIN_HARRIS_REPLICAS {
        return Err(Error::InsufficientReplicas(format!(
            "{} replicas, at least {MIN_HARRIS_REPLICAS} required",
            rows.len()
        )));
    }
    let m = rows[0].len();
    let g = JACKKNIFE_GROUPS;
    // Per-group counts of each event and of the intersection.
    let mut counts = vec![vec![0usize; m + 1]; g];
    let mut sizes = vec![0usize; g];
    for (r, row) in rows.iter().enumerate() {
        let grp = r * g / rows.len();
        sizes[grp] += 1;
        for (i, &x) in row.iter().enumerate() {
            counts[grp][i] += usize::from(x);
        }
        counts[grp][m] += usize::from(row.iter().all(|&x| x));
    }
    let stat = |skip: Option<usize>| -> (f64, f64) {
        let n: usize = (0..g).filter(|&x| Some(x) != skip).map(|x| sizes[x]).sum();
        let total =
            |i: usize| (0..g).filter(|&x| Some(x) != skip).map(|x| counts[x][i]).sum::<usize>() as f64 / n as f64;
        let product: f64 = (0..m).map(total).product();
        (total(m), product)
    };
    let (intersection, product) = stat(None);
    let d: Vec<f64> = (0..g)
        .map(|x| {
            let (a, b) = stat(Some(x));
            a - b
        })
        .collect();
    let mean = d.iter().sum::<f64>() / g as f64;
    let var = (g - 1) as f64 / g as f64 * d.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    // With few intersection counts the jackknife collapses toward zero, so
    // the binomial error under equality (intersection = product) is a floor.
    let null = (product * (1.0 - product) / rows.len() as f64).sqrt();
    let stderr = var.sqrt().max(null);
    Ok(HarrisReport {
        replicas: rows.len(),
        events: m,
        intersection,
        product,
        stderr,
        pass: intersection >= product - 3.0 * stderr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarrisDiscReport {
    pub primal: HarrisReport,
    pub dual: HarrisReport,
}

/// Harris check for the decreasing events `¬L_i` and `¬L*_i`.
pub fn harris_disc_check(setup: &ZhangSetup, flags: &[CrossingFlags], arcs: &ArcPartition) -> Result<HarrisDiscReport> {
    let samples = arc_samples(setup, flags, arcs);
    let primal: Vec<Vec<bool>> = samples.iter().map(|s| s.0.iter().map(|x| !x).collect()).collect();
    let dual: Vec<Vec<bool>> = samples.iter().map(|s| s.1.iter().map(|x| !x).collect()).collect();
    Ok(HarrisDiscReport { primal: harris_product_check(&primal)?, dual: harris_product_check(&dual)? })
}

/// Relabels a configuration by an edge permutation: `out[map[e]] = c[e]`.
pub fn permute_configuration(config: &Configuration, map: &[u32]) -> Configuration {
    let mut open = vec![false; config.open.len()];
    for (e, &m) in map.iter().enumerate() {
        open[m as usize] = config.open[e];
    }
    Configuration { mode: config.mode, open }
}
