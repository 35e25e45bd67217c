//! Random triangulations `T_r` of the square lattice and the auxiliary
//! lattice `X`.
//!
//! `T_r` adds one diagonal to every face of Z², parallel to (1,1) with
//! probability `r` and to (1,−1) otherwise. `X` replaces the diagonals by
//! two extra sites per face: `v_{F,1}` joined to the bottom-left and
//! top-right corners (open with probability `r`) and `v_{F,2}` joined to
//! the other two (open with probability `1 − r`).
//!
//! On a `size × size` torus vertex `i·size + j` is the point `(i, j)` and
//! face `f = i·size + j` is the face whose bottom-left corner is vertex `f`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{cluster_index, Configuration, Mode, PercolationParams};
use crate::error::{Error, Result};
use crate::estimators::{estimate_pc_with, wrapping_observables, PcEstimate, PcOptions};
use crate::instance::{instantiate_torus, Edge, FiniteInstance};
use crate::lattice::{Bond, PlaneLattice, Site};
use crate::newman_ziff::newman_ziff_disordered;
use crate::rng::{label_id, stream, Stream};

pub const DIAG_UP: &str = "diag(1,1)";
pub const DIAG_DOWN: &str = "diag(1,-1)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangulationConfig {
    pub r: f64,
    pub p: f64,
    /// One bit per face; `true` is the diagonal parallel to (1,1).
    pub diagonals: Vec<bool>,
}

fn check_r(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("r = {r} outside [0, 1]")))
    }
}

fn check_size(size: usize) -> Result<()> {
    if size < 2 {
        return Err(Error::InvalidParameter(format!("torus size must be at least 2, got {size}")));
    }
    Ok(())
}

/// Corners of face `f`: bottom-left, bottom-right, top-left, top-right.
pub fn face_corners(size: usize, f: usize) -> [usize; 4] {
    let (i, j) = (f / size, f % size);
    let (i1, j1) = ((i + 1) % size, (j + 1) % size);
    [i * size + j, i1 * size + j, i * size + j1, i1 * size + j1]
}

/// The square torus with the given diagonals added, face by face.
pub fn tr_instance(size: usize, diagonals: &[bool]) -> Result<FiniteInstance> {
    check_size(size)?;
    if diagonals.len() != size * size {
        return Err(Error::ConfigurationMismatch { expected: size * size, got: diagonals.len() });
    }
    let square = crate::lattice::builtin("square").expect("built-in");
    let base = instantiate_torus(&square, size, size)?;
    let mut classes = base.bond_class_names.clone();
    classes.extend([DIAG_UP.to_string(), DIAG_DOWN.to_string()]);
    let (up, down) = (classes.len() as u16 - 2, classes.len() as u16 - 1);
    let mut edges = base.edges.clone();
    let wrap_of = |x: usize| i32::from(x + 1 == size);
    for (f, &d) in diagonals.iter().enumerate() {
        let [bl, br, tl, tr] = face_corners(size, f);
        let (i, j) = (f / size, f % size);
        let cell = [i as i32, j as i32];
        edges.push(if d {
            Edge { u: bl as u32, v: tr as u32, bond: 2, class: up, cell, wrap: [wrap_of(i), wrap_of(j)] }
        } else {
            Edge {
                u: tl as u32,
                v: br as u32,
                bond: 3,
                class: down,
                cell: [i as i32, ((j + 1) % size) as i32],
                wrap: [wrap_of(i), -wrap_of(j)],
            }
        });
    }
    Ok(FiniteInstance::from_parts(
        base.topology,
        base.positions,
        base.vertex_site,
        base.vertex_cell,
        base.site_class,
        base.site_class_names,
        edges,
        classes,
        base.periods,
    ))
}

/// One word per face in face order; the diagonal is (1,1) iff the word is
/// below `r`.
pub fn sample_diagonals<R: Rng + ?Sized>(r: f64, size: usize, rng: &mut R) -> Vec<bool> {
    (0..size * size).map(|_| rng.random::<f64>() < r).collect()
}

pub fn sample_tr<R: Rng + ?Sized>(r: f64, size: usize, rng: &mut R) -> Result<FiniteInstance> {
    check_r(r)?;
    check_size(size)?;
    tr_instance(size, &sample_diagonals(r, size, rng))
}

/// The periodic lattice `X` (non-planar). Site classes: `z2`, `aux1`
/// (`v_{F,1}`), `aux2` (`v_{F,2}`).
pub fn x_lattice() -> PlaneLattice {
    let site = |id: &str, pos, class: &str| Site { id: id.into(), pos, class: class.into() };
    let bond = |id: &str, a, offset, class: &str| Bond { id: id.into(), a, b: 0, offset, class: class.into() };
    PlaneLattice {
        name: "X".into(),
        basis: [[1.0, 0.0], [0.0, 1.0]],
        sites: vec![site("z", [0.0, 0.0], "z2"), site("vF1", [0.4, 0.4], "aux1"), site("vF2", [0.6, 0.4], "aux2")],
        bonds: vec![
            bond("h", 0, [1, 0], "horizontal"),
            bond("v", 0, [0, 1], "vertical"),
            bond("vF1-bl", 1, [0, 0], "aux"),
            bond("vF1-tr", 1, [1, 1], "aux"),
            bond("vF2-tl", 2, [0, 1], "aux"),
            bond("vF2-br", 2, [1, 0], "aux"),
        ],
        planar: false,
        center: [0.0, 0.0],
    }
}

/// Torus instance of `X`. Vertex `3f` is Z² site `f`, `3f + 1` and `3f + 2`
/// are `v_{F,1}` and `v_{F,2}` of face `f`.
pub fn build_x(size: usize) -> Result<FiniteInstance> {
    check_size(size)?;
    let x = x_lattice();
    x.validate()?;
    instantiate_torus(&x, size, size)
}

/// Site probabilities of `X`: `p` on Z², `r` on `v_{F,1}`, `1 − r` on `v_{F,2}`.
pub fn x_params(p: f64, r: f64) -> PercolationParams {
    PercolationParams { mode: Mode::Site, default: None, by_class: Default::default() }
        .with_class("z2", p)
        .with_class("aux1", r)
        .with_class("aux2", 1.0 - r)
}

/// The point reflection `(i, j) ↦ (−i, −j)` is an automorphism of the `X`
/// torus that keeps every site class. Checked edge by edge.
pub fn x_has_point_symmetry(size: usize) -> Result<bool> {
    let inst = build_x(size)?;
    let n = size as i64;
    let neg = |k: i64| (-k).rem_euclid(n) as usize;
    // Face (i, j) maps to face (−i−1, −j−1); v_{F,1} stays v_{F,1}.
    let image = |v: usize| -> usize {
        let (f, s) = (v / 3, v % 3);
        let (i, j) = ((f / size) as i64, (f % size) as i64);
        let g = if s == 0 { neg(i) * size + neg(j) } else { neg(i + 1) * size + neg(j + 1) };
        3 * g + s
    };
    let mut have: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    for e in &inst.edges {
        let (u, v) = (e.u as usize, e.v as usize);
        have.insert((u.min(v), u.max(v)));
    }
    Ok(inst.edges.iter().all(|e| {
        let (a, b) = (image(e.u as usize), image(e.v as usize));
        have.contains(&(a.min(b), a.max(b)))
            && inst.site_class[a] == inst.site_class[e.u as usize]
            && inst.site_class[b] == inst.site_class[e.v as usize]
    }))
}

/// One replica of the coupled construction. Words are consumed as: one per
/// Z² site in vertex order, then `(u1, u2)` per face in face order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledSample {
    pub sites: Vec<bool>,
    pub aux1: Vec<bool>,
    pub aux2: Vec<bool>,
    pub diagonals: Vec<bool>,
}

/// `v_{F,1}` is open iff `u1 < r`, `v_{F,2}` iff `u2 < 1 − r`. The diagonal
/// follows `v_{F,1}` unless exactly the top-left and bottom-right corners
/// are open, where it is (1,−1) iff `v_{F,2}` is open. Either way it is
/// (1,1) with probability `r` given the sites.
pub fn coupled_sample<R: Rng + ?Sized>(r: f64, p: f64, size: usize, rng: &mut R) -> CoupledSample {
    let n = size * size;
    let sites: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < p).collect();
    let mut aux1 = Vec::with_capacity(n);
    let mut aux2 = Vec::with_capacity(n);
    let mut diagonals = Vec::with_capacity(n);
    for f in 0..n {
        let a = rng.random::<f64>() < r;
        let b = rng.random::<f64>() < 1.0 - r;
        let [bl, br, tl, tr] = face_corners(size, f).map(|v| sites[v]);
        let only_down_pair = tl && br && !bl && !tr;
        aux1.push(a);
        aux2.push(b);
        diagonals.push(if only_down_pair { !b } else { a });
    }
    CoupledSample { sites, aux1, aux2, diagonals }
}

/// Cluster labels of the open Z² sites, renumbered by first appearance.
fn canonical_partition(labels: impl Iterator<Item = Option<usize>>) -> Vec<Option<usize>> {
    let mut map = std::collections::HashMap::new();
    labels
        .map(|l| {
            l.map(|c| {
                let next = map.len();
                *map.entry(c).or_insert(next)
            })
        })
        .collect()
}

/// Partitions of the open Z² sites from `T_r` and from `X`.
pub fn coupled_partitions(
    sample: &CoupledSample,
    size: usize,
    x: &FiniteInstance,
) -> Result<(Vec<Option<usize>>, Vec<Option<usize>>)> {
    let tr = tr_instance(size, &sample.diagonals)?;
    let tr_idx = cluster_index(&tr, &Configuration { mode: Mode::Site, open: sample.sites.clone() })?;
    let mut open = vec![false; x.num_vertices()];
    for f in 0..size * size {
        open[3 * f] = sample.sites[f];
        open[3 * f + 1] = sample.aux1[f];
        open[3 * f + 2] = sample.aux2[f];
    }
    let x_idx = cluster_index(x, &Configuration { mode: Mode::Site, open })?;
    let n = size * size;
    Ok((
        canonical_partition((0..n).map(|v| tr_idx.cluster_of(v))),
        canonical_partition((0..n).map(|v| x_idx.cluster_of(3 * v))),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub r: f64,
    pub p: f64,
    pub size: usize,
    pub replicas: usize,
    pub identical: usize,
    pub fraction: f64,
}

pub fn tr_connectivity_equivalence(
    r: f64,
    p: f64,
    size: usize,
    replicas: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    check_r(r)?;
    let x = build_x(size)?;
    let exp = label_id(&format!("tr-equivalence/{r}/{p}/{size}"));
    let same: Vec<bool> = (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let s = coupled_sample(r, p, size, &mut stream(seed, exp, rep as u64));
            let (a, b) = coupled_partitions(&s, size, &x)?;
            Ok(a == b)
        })
        .collect::<Result<_>>()?;
    let identical = same.iter().filter(|&&b| b).count();
    Ok(EquivalenceReport { r, p, size, replicas, identical, fraction: identical as f64 / replicas.max(1) as f64 })
}

/// Site threshold of `T_r`, each sweep on a freshly drawn triangulation.
pub fn tr_pc_estimate(r: f64, opts: &PcOptions) -> Result<PcEstimate> {
    check_r(r)?;
    if opts.mode != Mode::Site {
        return Err(Error::InvalidParameter("T_r thresholds are site thresholds".into()));
    }
    let mut est = estimate_pc_with(opts, |size, first, count| {
        newman_ziff_disordered(
            |rng: &mut Stream| sample_tr(r, size, rng),
            Mode::Site,
            &wrapping_observables(),
            first,
            count,
            opts.seed,
            label_id(&format!("tr-pc/{r}/{size}")),
        )
    })?;
    est.disorder = Some("annealed".into());
    Ok(est)
}
