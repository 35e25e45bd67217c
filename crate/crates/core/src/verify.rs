//! Self-contained oracle and invariant suites, run on demand.
//!
//! Every check reports pass/fail with a detail string; nothing here
//! panics or returns an error for a failed check.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use crate::dual::{dual, instance_matching_chords, matching_graph, periodic_isomorphic, verify_duality, Check};
use crate::embedding::trace_faces;
use crate::engine::{cluster_index, dual_configuration, sample_configuration, Configuration, Mode, PercolationParams};
use crate::fk::{dual_weights, fk_weight, heat_bath_probability, Boundary, FKParams};
use crate::geom;
use crate::instance::{instantiate_box, instantiate_torus, Edge, FiniteInstance, Topology};
use crate::lattice::{builtin, PlaneLattice};
use crate::newman_ziff::{newman_ziff, Observable};
use crate::random_tri::{sample_diagonals, tr_connectivity_equivalence, tr_instance, x_has_point_symmetry};
use crate::rng::stream;
use crate::zhang::{arc_partition, leave_events, permute_configuration, ArcPartition, ZhangSetup};

pub const SUITES: [&str; 5] = ["dual", "engine", "zhang", "fk", "tri"];

pub type Checks = BTreeMap<String, Check>;

fn record(checks: &mut Checks, name: String, pass: bool, detail: String) {
    checks.insert(name, Check { pass, detail });
}

/// Duality audit at several torus sizes plus matching-graph checks.
pub fn dual_suite(lattice: &PlaneLattice) -> Checks {
    let mut checks = Checks::new();
    let pair = match dual(lattice) {
        Ok(p) => p,
        Err(e) => {
            record(&mut checks, "dual".into(), false, e.to_string());
            return checks;
        }
    };
    for size in 2..=4 {
        for (name, c) in verify_duality(&pair, size).checks {
            checks.insert(format!("{name}@{size}"), c);
        }
    }
    let triangulation = trace_faces(lattice).is_ok_and(|emb| emb.faces.iter().all(|f| f.len() == 3));
    match matching_graph(lattice) {
        Ok(m) if triangulation => {
            let same = periodic_isomorphic(&m, lattice);
            record(&mut checks, "self_matching".into(), same, format!("triangulation, G△ ≅ G: {same}"));
        }
        Ok(m) => {
            let extra = m.bonds.len() - lattice.bonds.len();
            record(&mut checks, "matching_graph".into(), extra > 0, format!("{extra} chords per cell"));
        }
        Err(e) => record(&mut checks, "matching_graph".into(), false, e.to_string()),
    }
    checks
}

/// Cluster labels and the largest winding rank, by breadth-first search.
fn bfs_partition(inst: &FiniteInstance, open: &[bool]) -> (Vec<usize>, u8) {
    let nv = inst.num_vertices();
    let mut label = vec![usize::MAX; nv];
    let mut disp = vec![[0i64; 2]; nv];
    let mut rank = 0u8;
    for s in 0..nv {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = s;
        let mut queue = vec![s];
        let mut windings: Vec<[i64; 2]> = Vec::new();
        while let Some(x) = queue.pop() {
            for &(y, e) in inst.neighbors(x) {
                if !open[e as usize] {
                    continue;
                }
                let edge = &inst.edges[e as usize];
                let sign = if edge.u as usize == x { 1 } else { -1 };
                let step = [disp[x][0] + sign * i64::from(edge.wrap[0]), disp[x][1] + sign * i64::from(edge.wrap[1])];
                let y = y as usize;
                if label[y] == usize::MAX {
                    label[y] = s;
                    disp[y] = step;
                    queue.push(y);
                } else if step != disp[y] {
                    windings.push([step[0] - disp[y][0], step[1] - disp[y][1]]);
                }
            }
        }
        let r = match windings.first() {
            None => 0,
            Some(g) if windings.iter().all(|w| g[0] * w[1] == g[1] * w[0]) => 1,
            Some(_) => 2,
        };
        rank = rank.max(r);
    }
    (label, rank)
}

fn wrapping_rank_exact(inst: &FiniteInstance, p: f64) -> (f64, f64) {
    let m = inst.num_edges();
    let (mut either, mut both) = (0.0, 0.0);
    for mask in 0u32..1 << m {
        let open: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
        let w: f64 = open.iter().map(|&o| if o { p } else { 1.0 - p }).product();
        let (_, rank) = bfs_partition(inst, &open);
        either += w * f64::from(u8::from(rank >= 1));
        both += w * f64::from(u8::from(rank == 2));
    }
    (either, both)
}

/// Union-find against BFS, and the Newman–Ziff convolution against exact
/// enumeration on the 2×2 square torus.
pub fn engine_suite(seed: u64) -> Checks {
    let mut checks = Checks::new();
    let instances: Vec<FiniteInstance> = [("square", 3), ("triangular", 3), ("kagome", 2), ("fig1-left", 2)]
        .iter()
        .filter_map(|&(n, s)| instantiate_torus(&builtin(n)?, s, s).ok())
        .collect();
    let mut rng = stream(seed, 0x7665_7269, 0);
    let mut bad = 0;
    let trials = 2000;
    for t in 0..trials {
        let inst = &instances[t % instances.len()];
        let p = rng.random::<f64>();
        let Ok(c) = sample_configuration(inst, &PercolationParams::uniform(Mode::Bond, p), &mut rng) else {
            bad += 1;
            continue;
        };
        let Ok(idx) = cluster_index(inst, &c) else {
            bad += 1;
            continue;
        };
        let (label, rank) = bfs_partition(inst, &c.open);
        let same = (0..label.len()).all(|v| (0..v).all(|u| (label[u] == label[v]) == idx.connected(u, v)));
        if !same || rank != idx.max_rank() {
            bad += 1;
        }
    }
    record(&mut checks, "union_find_vs_bfs".into(), bad == 0, format!("{bad} of {trials} configurations differ"));

    match instantiate_torus(&builtin("square").expect("square is built in"), 2, 2) {
        Ok(inst) => {
            let obs = [Observable::WrapEither, Observable::WrapBoth];
            match newman_ziff(&inst, Mode::Bond, &obs, 10_000, seed, 0x6e7a) {
                Ok(curves) => {
                    let mut worst: f64 = 0.0;
                    for p in [0.3, 0.5, 0.7] {
                        let (either, both) = wrapping_rank_exact(&inst, p);
                        for (o, x) in obs.iter().zip([either, both]) {
                            if let Ok(e) = curves.at(*o, p) {
                                worst = worst.max((e.mean - x).abs() / e.stderr);
                            }
                        }
                    }
                    record(
                        &mut checks,
                        "convolution_vs_enumeration".into(),
                        worst <= 3.0,
                        format!("largest deviation {worst:.2}σ"),
                    );
                }
                Err(e) => record(&mut checks, "convolution_vs_enumeration".into(), false, e.to_string()),
            }
        }
        Err(e) => record(&mut checks, "convolution_vs_enumeration".into(), false, e.to_string()),
    }
    checks
}

fn clear_of_disc(a: geom::Point, b: geom::Point, r: f64) -> bool {
    geom::point_segment_distance([0.0, 0.0], a, b) > r
}

fn escapes(inst: &FiniteInstance, open: &[bool], r: f64, m: f64, v: usize, on_path: &mut [bool]) -> bool {
    if geom::norm(inst.positions[v]) >= m {
        return true;
    }
    on_path[v] = true;
    let found = inst.neighbors(v).iter().any(|&(w, e)| {
        let (a, b) = inst.edge_segment(e as usize);
        open[e as usize]
            && !on_path[w as usize]
            && clear_of_disc(a, b, r)
            && escapes(inst, open, r, m, w as usize, on_path)
    });
    on_path[v] = false;
    found
}

/// Arc flags by depth-first enumeration of simple escaping paths.
fn path_flags(inst: &FiniteInstance, open: &[bool], arcs: &ArcPartition) -> Vec<bool> {
    let disc = inst.disc.as_ref().expect("disc instance");
    let mut out = vec![false; arcs.num_arcs()];
    let mut on_path = vec![false; inst.num_vertices()];
    for c in &disc.crossings {
        let i = arcs.arc_of(c.angle) - 1;
        if !out[i] && open[c.edge as usize] {
            out[i] = escapes(inst, open, disc.radius, disc.margin, c.outer as usize, &mut on_path);
        }
    }
    out
}

/// Arc flags against path enumeration, and rotation equivariance.
pub fn zhang_suite(seed: u64) -> Checks {
    let mut checks = Checks::new();
    let square = builtin("square").expect("square is built in");
    let params = PercolationParams::uniform(Mode::Bond, 0.5);
    let run = |radius: f64, margin: f64, check: &mut dyn FnMut(&ZhangSetup, &ArcPartition, &Configuration) -> bool| {
        let setup = ZhangSetup::new(&square, radius, margin).map_err(|e| e.to_string())?;
        let arcs = arc_partition(setup.radius(), 2, FRAC_PI_2 + 0.013).map_err(|e| e.to_string())?;
        let mut bad = 0;
        for r in 0..200 {
            let c = sample_configuration(&setup.instance, &params, &mut stream(seed, 0x7a68, r))
                .map_err(|e| e.to_string())?;
            bad += usize::from(!check(&setup, &arcs, &c));
        }
        Ok::<usize, String>(bad)
    };
    let oracle = run(2.0, 4.0, &mut |s, arcs, c| {
        let (Ok(got), Ok(d)) = (leave_events(&s.instance, c, arcs), dual_configuration(&s.instance, c)) else {
            return false;
        };
        got.primal == path_flags(&s.instance, &c.open, arcs) && got.dual == path_flags(s.dual(), &d.open, arcs)
    });
    match oracle {
        Ok(bad) => {
            record(&mut checks, "leave_events_vs_paths".into(), bad == 0, format!("{bad} of 200 replicas differ"))
        }
        Err(e) => record(&mut checks, "leave_events_vs_paths".into(), false, e),
    }
    let rotation = run(4.0, 12.0, &mut |s, arcs, c| {
        let Some(map) = s.instance.rotation_edge_map(4) else { return false };
        let turned = permute_configuration(&permute_configuration(c, &map), &map);
        let (Ok(a), Ok(b)) = (leave_events(&s.instance, c, arcs), leave_events(&s.instance, &turned, arcs)) else {
            return false;
        };
        let n = arcs.num_arcs();
        (0..n).all(|i| b.primal[(i + 2) % n] == a.primal[i] && b.dual[(i + 2) % n] == a.dual[i])
    });
    match rotation {
        Ok(bad) => {
            record(&mut checks, "rotation_equivariance".into(), bad == 0, format!("{bad} of 200 replicas differ"))
        }
        Err(e) => record(&mut checks, "rotation_equivariance".into(), false, e),
    }
    checks
}

fn small_graph(n: usize, edges: &[(u32, u32)], wired: &[usize]) -> FiniteInstance {
    let es = edges
        .iter()
        .enumerate()
        .map(|(i, &(u, v))| Edge { u, v, bond: 0, class: (i % 2) as u16, cell: [0, 0], wrap: [0, 0] })
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
    inst.boundary = (0..n).map(|v| wired.contains(&v)).collect();
    inst
}

/// Largest change of the FK measure under one heat-bath update.
fn stationarity_error(inst: &FiniteInstance, params: &FKParams) -> Result<f64, String> {
    let m = inst.num_edges();
    let states: Vec<Vec<bool>> = (0u32..1 << m).map(|s| (0..m).map(|i| s >> i & 1 == 1).collect()).collect();
    let w: Vec<f64> =
        states.iter().map(|s| fk_weight(inst, params, s)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let z: f64 = w.iter().sum();
    let mut worst: f64 = 0.0;
    for e in 0..m {
        let mut image = vec![0.0; states.len()];
        for (k, s) in states.iter().enumerate() {
            let h = heat_bath_probability(inst, params, s, e).map_err(|e| e.to_string())?;
            image[k | 1 << e] += w[k] / z * h;
            image[k & !(1 << e)] += w[k] / z * (1.0 - h);
        }
        worst = image.iter().zip(&w).map(|(a, b)| (a - b / z).abs()).fold(worst, f64::max);
    }
    Ok(worst)
}

/// Detailed balance of the heat-bath kernel and the dual-weight map.
pub fn fk_suite() -> Checks {
    let mut checks = Checks::new();
    let graphs = [
        (3, vec![(0, 1), (1, 2), (2, 0), (2, 2)], vec![]),
        (3, vec![(0, 1), (0, 1), (1, 2)], vec![]),
        (4, vec![(0, 1), (1, 2), (2, 3)], vec![0, 3]),
        (4, vec![(0, 1), (1, 2), (1, 3), (2, 3)], vec![0, 2, 3]),
    ];
    let mut worst: f64 = 0.0;
    let mut failure = None;
    for q in [1.0, 2.0, 3.7] {
        for (n, edges, wired) in &graphs {
            let inst = small_graph(*n, edges, wired);
            let boundary = if wired.is_empty() { Boundary::Free } else { Boundary::Wired };
            let params =
                FKParams { q, edges: PercolationParams::uniform(Mode::Bond, 0.35).with_class("b", 0.62), boundary };
            match stationarity_error(&inst, &params) {
                Ok(x) => worst = worst.max(x),
                Err(e) => failure = Some(e),
            }
        }
    }
    match failure {
        Some(e) => record(&mut checks, "detailed_balance".into(), false, e),
        None => record(&mut checks, "detailed_balance".into(), worst <= 1e-12, format!("max error {worst:.2e}")),
    }
    let involution = (1..20).all(|i| {
        let p = f64::from(i) / 20.0;
        [1.0, 2.0, 3.0]
            .iter()
            .all(|&q| dual_weights(p, q).and_then(|r| dual_weights(r, q)).is_ok_and(|back| (back - p).abs() < 1e-12))
    });
    record(&mut checks, "dual_weight_involution".into(), involution, "p ↦ p* ↦ p on a grid".into());
    if let Some(sq) = builtin("square") {
        let ok = instantiate_box(&sq, 3, 3).is_ok_and(|b| b.boundary.iter().any(|&x| x));
        record(&mut checks, "box_boundary".into(), ok, "boxes mark their boundary".into());
    }
    checks
}

/// `T_r` coupling, `X` symmetry and self-matching of triangulations.
pub fn tri_suite(seed: u64) -> Checks {
    let mut checks = Checks::new();
    for r in [0.0, 0.5, 1.0] {
        let name = format!("coupling_equivalence@r={r}");
        match tr_connectivity_equivalence(r, 0.5, 8, 200, seed) {
            Ok(e) => record(
                &mut checks,
                name,
                e.identical == e.replicas,
                format!("{}/{} identical", e.identical, e.replicas),
            ),
            Err(e) => record(&mut checks, name, false, e.to_string()),
        }
    }
    match x_has_point_symmetry(6) {
        Ok(s) => record(&mut checks, "x_point_symmetry".into(), s, format!("class-preserving 180° automorphism: {s}")),
        Err(e) => record(&mut checks, "x_point_symmetry".into(), false, e.to_string()),
    }
    let mut chords = 0;
    for rep in 0..10 {
        let diagonals = sample_diagonals(0.5, 6, &mut stream(seed, 0x7472, rep));
        chords += tr_instance(6, &diagonals).and_then(|t| instance_matching_chords(&t)).map_or(1, |c| c.len());
    }
    record(&mut checks, "tr_self_matching".into(), chords == 0, format!("{chords} chords over 10 samples"));
    checks
}
