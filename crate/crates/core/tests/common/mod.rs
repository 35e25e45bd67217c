//! Independent oracles shared by the integration suites.

#![allow(dead_code)]

use std::f64::consts::TAU;

use perclab::engine::{ClusterIndex, Mode, PercolationParams};
use perclab::fk::{fk_weight, heat_bath_probability, Boundary, FKParams};
use perclab::instance::{Edge, FiniteInstance, Topology};
use perclab::zhang::ArcPartition;

/// One cluster found by breadth-first search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCluster {
    pub members: Vec<usize>,
    pub rank: u8,
    pub axes: [bool; 2],
}

fn passes(inst: &FiniteInstance, mode: Mode, open: &[bool], e: usize) -> bool {
    let edge = &inst.edges[e];
    match mode {
        Mode::Bond => open[e],
        Mode::Site => open[edge.u as usize] && open[edge.v as usize],
    }
}

/// Clusters of the open subgraph with their winding rank, by BFS that
/// tracks each vertex's unwrapped displacement in torus periods.
pub fn bfs_clusters(inst: &FiniteInstance, mode: Mode, open: &[bool]) -> Vec<OracleCluster> {
    let nv = inst.num_vertices();
    let mut disp: Vec<Option<[i64; 2]>> = vec![None; nv];
    let mut out = Vec::new();
    for s in 0..nv {
        if disp[s].is_some() || (mode == Mode::Site && !open[s]) {
            continue;
        }
        disp[s] = Some([0, 0]);
        let mut members = vec![s];
        let mut cycles: Vec<[i64; 2]> = Vec::new();
        let mut head = 0;
        while head < members.len() {
            let x = members[head];
            head += 1;
            let dx = disp[x].unwrap();
            for &(y, e) in inst.neighbors(x) {
                let (y, e) = (y as usize, e as usize);
                if !passes(inst, mode, open, e) {
                    continue;
                }
                let edge = &inst.edges[e];
                let sign = if edge.u as usize == x { 1 } else { -1 };
                let step = [dx[0] + sign * i64::from(edge.wrap[0]), dx[1] + sign * i64::from(edge.wrap[1])];
                match disp[y] {
                    None => {
                        disp[y] = Some(step);
                        members.push(y);
                    }
                    Some(dy) => {
                        let w = [step[0] - dy[0], step[1] - dy[1]];
                        if w != [0, 0] {
                            cycles.push(w);
                        }
                    }
                }
            }
        }
        members.sort_unstable();
        let (rank, axes) = match cycles.first() {
            None => (0, [false, false]),
            Some(g) => {
                if cycles.iter().any(|w| g[0] * w[1] != g[1] * w[0]) {
                    (2, [true, true])
                } else {
                    (1, [g[0] != 0, g[1] != 0])
                }
            }
        };
        out.push(OracleCluster { members, rank, axes });
    }
    out
}

/// Whether the engine's index agrees with the BFS oracle.
pub fn index_agrees(inst: &FiniteInstance, mode: Mode, open: &[bool], idx: &ClusterIndex) -> bool {
    let oracle = bfs_clusters(inst, mode, open);
    let mut seen = vec![false; oracle.len()];
    idx.num_clusters() == oracle.len()
        && oracle.iter().all(|c| {
            let Some(id) = idx.cluster_of(c.members[0]) else { return false };
            let w = idx.windings[id];
            !std::mem::replace(&mut seen[id], true)
                && c.members.iter().all(|&v| idx.cluster_of(v) == Some(id))
                && idx.sizes[id] == c.members.len()
                && w.rank == c.rank
                && [w.wraps_axis(0), w.wraps_axis(1)] == c.axes
        })
        && (mode == Mode::Bond || open.iter().enumerate().all(|(v, &o)| idx.cluster_of(v).is_some() == o))
}

/// Exact bond-percolation values of wrapping-either, wrapping-both,
/// `connect(u, v)` and the largest-cluster fraction, by enumeration.
pub fn exact_bond_observables(inst: &FiniteInstance, p: f64, u: usize, v: usize) -> [f64; 4] {
    let mut e = [0.0; 4];
    for open in all_states(inst.num_edges()) {
        let w = weight(&open, p);
        let clusters = bfs_clusters(inst, Mode::Bond, &open);
        let rank = clusters.iter().map(|c| c.rank).max().unwrap_or(0);
        let joined = clusters.iter().any(|c| c.members.contains(&u) && c.members.contains(&v));
        let big = clusters.iter().map(|c| c.members.len()).max().unwrap_or(0);
        e[0] += w * f64::from(u8::from(rank >= 1));
        e[1] += w * f64::from(u8::from(rank == 2));
        e[2] += w * f64::from(u8::from(joined));
        e[3] += w * big as f64 / inst.num_vertices() as f64;
    }
    e
}

/// Panics unless the engine's index agrees with the BFS oracle.
pub fn assert_index_matches(inst: &FiniteInstance, mode: Mode, open: &[bool], idx: &ClusterIndex) {
    let oracle = bfs_clusters(inst, mode, open);
    assert_eq!(idx.num_clusters(), oracle.len(), "cluster count");
    let mut seen = vec![false; oracle.len()];
    for c in &oracle {
        let id = idx.cluster_of(c.members[0]).expect("open vertex has a cluster");
        assert!(!seen[id], "two oracle clusters share engine cluster {id}");
        seen[id] = true;
        for &v in &c.members {
            assert_eq!(idx.cluster_of(v), Some(id), "vertex {v}");
        }
        assert_eq!(idx.sizes[id], c.members.len());
        let w = idx.windings[id];
        assert_eq!(w.rank, c.rank, "rank of cluster containing {}", c.members[0]);
        assert_eq!([w.wraps_axis(0), w.wraps_axis(1)], c.axes);
    }
    if mode == Mode::Site {
        for (v, &o) in open.iter().enumerate() {
            assert_eq!(idx.cluster_of(v).is_some(), o);
        }
    }
}

/// Every 0/1 word of length `m`, element `i` in bit `i`.
pub fn all_states(m: usize) -> impl Iterator<Item = Vec<bool>> {
    assert!(m < 28);
    (0u32..1 << m).map(move |mask| (0..m).map(|i| mask >> i & 1 == 1).collect())
}

/// Product-measure weight of a state.
pub fn weight(open: &[bool], p: f64) -> f64 {
    open.iter().map(|&o| if o { p } else { 1.0 - p }).product()
}

pub fn segment_clear_of_disc(a: [f64; 2], b: [f64; 2], r: f64) -> bool {
    // Closest approach of the segment to the origin, by projection.
    let d = [b[0] - a[0], b[1] - a[1]];
    let t = (-(a[0] * d[0] + a[1] * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
    let c = [a[0] + t * d[0], a[1] + t * d[1]];
    c[0].hypot(c[1]) > r
}

/// Depth-first enumeration of simple open paths from `v` that stay outside
/// the disc, stopping at the first one that reaches radius `m`.
pub fn escapes_by_paths(
    inst: &FiniteInstance,
    open: &[bool],
    r: f64,
    m: f64,
    v: usize,
    on_path: &mut Vec<bool>,
) -> bool {
    let p = inst.positions[v];
    if p[0].hypot(p[1]) >= m {
        return true;
    }
    on_path[v] = true;
    for &(w, e) in inst.neighbors(v) {
        let (a, b) = inst.edge_segment(e as usize);
        if open[e as usize]
            && !on_path[w as usize]
            && segment_clear_of_disc(a, b, r)
            && escapes_by_paths(inst, open, r, m, w as usize, on_path)
        {
            on_path[v] = false;
            return true;
        }
    }
    on_path[v] = false;
    false
}

/// Arc of an angle by scanning the listed endpoints.
pub fn oracle_arc(q: &[f64], angle: f64) -> usize {
    let n = q.len();
    (0..n)
        .find(|&i| {
            let (lo, hi) = (q[i], if i + 1 < n { q[i + 1] } else { TAU });
            lo <= angle && angle < hi
        })
        .expect("angles lie in [0, 2π)")
        + 1
}

pub fn oracle_flags(inst: &FiniteInstance, open: &[bool], arcs: &ArcPartition) -> Vec<bool> {
    let disc = inst.disc.as_ref().unwrap();
    let mut out = vec![false; arcs.num_arcs()];
    let mut on_path = vec![false; inst.num_vertices()];
    for c in &disc.crossings {
        let i = oracle_arc(&arcs.q, c.angle) - 1;
        if !out[i] && open[c.edge as usize] {
            out[i] = escapes_by_paths(inst, open, disc.radius, disc.margin, c.outer as usize, &mut on_path);
        }
    }
    out
}

/// A small free-standing graph; edge `i` has class `classes[i]` (0 = "a",
/// 1 = "b") and `boundary` lists the wired vertices.
pub fn graph(n: usize, edges: &[(u32, u32)], classes: &[u16], boundary: &[usize]) -> FiniteInstance {
    let es = edges
        .iter()
        .zip(classes)
        .map(|(&(u, v), &class)| Edge { u, v, bond: 0, class, cell: [0, 0], wrap: [0, 0] })
        .collect();
    let mut inst = FiniteInstance::from_parts(
        Topology::Box { m: 1, n: 1 },
        (0..n).map(|i| [i as f64, 0.0]).collect(),
        vec![0; n],
        vec![[0, 0]; n],
        vec![0; n],
        vec!["site".into()],
        es,
        vec!["a".into(), "b".into()],
        [[0.0; 2]; 2],
    );
    inst.boundary = (0..n).map(|v| boundary.contains(&v)).collect();
    inst
}

/// Clusters by repeated relabeling, with `wired` vertices merged.
pub fn count_clusters(n: usize, edges: &[(u32, u32)], open: &[bool], wired: &[usize]) -> usize {
    let mut label: Vec<usize> = (0..n).collect();
    for &w in wired {
        label[w] = wired[0];
    }
    loop {
        let mut changed = false;
        for (i, &(u, v)) in edges.iter().enumerate() {
            let (a, b) = (label[u as usize], label[v as usize]);
            if open[i] && a != b {
                let (lo, hi) = (a.min(b), a.max(b));
                label.iter_mut().filter(|l| **l == hi).for_each(|l| *l = lo);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut distinct = label.clone();
    distinct.sort();
    distinct.dedup();
    distinct.len()
}

fn state_index(open: &[bool]) -> usize {
    open.iter().enumerate().map(|(i, &o)| usize::from(o) << i).sum()
}

/// Graphs with at most four edges: loops, multi-edges, cycles and wired
/// boundaries.
pub fn fk_cases() -> Vec<(usize, Vec<(u32, u32)>, Vec<u16>, Vec<usize>)> {
    vec![
        (2, vec![(0, 1)], vec![0], vec![]),
        (3, vec![(0, 1), (1, 2), (2, 0), (2, 2)], vec![0, 1, 0, 1], vec![]),
        (4, vec![(0, 1), (1, 2), (2, 3), (3, 0)], vec![0, 1, 0, 1], vec![]),
        (3, vec![(0, 1), (0, 1), (1, 2)], vec![0, 1, 1], vec![]),
        (4, vec![(0, 1), (1, 2), (2, 3)], vec![0, 1, 0], vec![0, 3]),
        (4, vec![(0, 1), (1, 2), (1, 3), (2, 3)], vec![1, 0, 0, 1], vec![0, 2, 3]),
    ]
}

/// Largest deviation, over all cases and edges, between the FK measure and
/// its image under one heat-bath update, with the measure computed from
/// scratch. Also checks the library's unnormalized weights.
pub fn max_stationarity_error(q: f64) -> f64 {
    let (pa, pb) = (0.35, 0.62);
    let mut worst: f64 = 0.0;
    for (n, edges, classes, wired) in fk_cases() {
        let g = graph(n, &edges, &classes, &wired);
        let mut params = FKParams::uniform(q, 0.5);
        params.edges = PercolationParams::uniform(Mode::Bond, pa).with_class("b", pb);
        if !wired.is_empty() {
            params = params.with_boundary(Boundary::Wired);
        }
        let m = edges.len();
        let pe = |i: usize| if classes[i] == 0 { pa } else { pb };
        let weight = |open: &[bool]| {
            let w: f64 = (0..m).map(|i| if open[i] { pe(i) } else { 1.0 - pe(i) }).product();
            w * q.powi(count_clusters(n, &edges, open, &wired) as i32)
        };
        let z: f64 = all_states(m).map(|s| weight(&s)).sum();
        let pi: Vec<f64> = all_states(m).map(|s| weight(&s) / z).collect();
        for s in all_states(m) {
            let lib = fk_weight(&g, &params, &s).unwrap();
            worst = worst.max((lib - weight(&s)).abs() / weight(&s).max(1.0));
        }
        for e in 0..m {
            let mut image = vec![0.0; 1 << m];
            for s in all_states(m) {
                let h = heat_bath_probability(&g, &params, &s, e).unwrap();
                let (mut on, mut off) = (s.clone(), s.clone());
                on[e] = true;
                off[e] = false;
                image[state_index(&on)] += pi[state_index(&s)] * h;
                image[state_index(&off)] += pi[state_index(&s)] * (1.0 - h);
            }
            for (a, b) in image.iter().zip(&pi) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}
