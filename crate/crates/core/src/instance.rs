//! Materialized finite graphs: tori, boxes and discs cut from a plane lattice.

use std::collections::HashMap;

use serde::Serialize;

use crate::dual::DualPair;
use crate::error::{Error, Result};
use crate::geom::{self, Point, TOL};
use crate::lattice::{Cell, PlaneLattice};

/// Fixed rotation applied to disc embeddings so that no edge is parallel
/// to the x-axis and the division point `(R, 0)` is in general position.
pub const DISC_ROTATION: f64 = 0.1;

pub const DEFAULT_CAPACITY: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Topology {
    Torus { m: usize, n: usize },
    Box { m: usize, n: usize },
    Disc { radius: f64, margin: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    /// Lattice bond this edge copies (or a builder-defined tag).
    pub bond: u32,
    pub class: u16,
    /// Cell of the `u` endpoint in the lattice frame.
    pub cell: Cell,
    /// Number of torus periods crossed going from `u` to `v`.
    pub wrap: [i32; 2],
}

/// A point where an edge crosses the circle of radius `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub edge: u32,
    pub angle: f64,
    pub point: Point,
    /// Endpoint reached by continuing along the edge away from the disc.
    pub outer: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscData {
    pub requested_radius: f64,
    /// Radius after nudging off vertices and tangencies.
    pub radius: f64,
    pub margin: f64,
    /// Sorted by angle.
    pub crossings: Vec<Crossing>,
    /// Vertices at distance ≥ margin: proxies for infinity.
    pub far: Vec<bool>,
    /// Edges whose segment stays strictly outside the closed disc.
    pub outside: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct DualLink {
    pub instance: FiniteInstance,
    /// `primal_to_dual[e]` is the index of `e*` in `instance`.
    pub primal_to_dual: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct FiniteInstance {
    pub topology: Topology,
    pub positions: Vec<Point>,
    pub vertex_site: Vec<u32>,
    pub vertex_cell: Vec<Cell>,
    pub site_class: Vec<u16>,
    pub site_class_names: Vec<String>,
    pub edges: Vec<Edge>,
    pub bond_class_names: Vec<String>,
    /// Torus period vectors `(m·w1, n·w2)`; zero for open topologies.
    pub periods: [Point; 2],
    /// Vertices on the boundary of a box (empty for other topologies).
    pub boundary: Vec<bool>,
    pub disc: Option<DiscData>,
    pub dual: Option<Box<DualLink>>,
    adj_start: Vec<u32>,
    adj: Vec<(u32, u32)>,
}

impl FiniteInstance {
    /// Assembles an instance and its adjacency lists.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        topology: Topology,
        positions: Vec<Point>,
        vertex_site: Vec<u32>,
        vertex_cell: Vec<Cell>,
        site_class: Vec<u16>,
        site_class_names: Vec<String>,
        edges: Vec<Edge>,
        bond_class_names: Vec<String>,
        periods: [Point; 2],
    ) -> Self {
        let n = positions.len();
        let mut deg = vec![0u32; n + 1];
        for e in &edges {
            deg[e.u as usize] += 1;
            deg[e.v as usize] += 1;
        }
        let mut adj_start = vec![0u32; n + 1];
        for i in 0..n {
            adj_start[i + 1] = adj_start[i] + deg[i];
        }
        let mut fill = adj_start.clone();
        let mut adj = vec![(0u32, 0u32); adj_start[n] as usize];
        for (i, e) in edges.iter().enumerate() {
            adj[fill[e.u as usize] as usize] = (e.v, i as u32);
            fill[e.u as usize] += 1;
            adj[fill[e.v as usize] as usize] = (e.u, i as u32);
            fill[e.v as usize] += 1;
        }
        FiniteInstance {
            topology,
            positions,
            vertex_site,
            vertex_cell,
            site_class,
            site_class_names,
            edges,
            bond_class_names,
            periods,
            boundary: Vec::new(),
            disc: None,
            dual: None,
            adj_start,
            adj,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `(neighbour, edge)` pairs incident to `v`.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[(u32, u32)] {
        &self.adj[self.adj_start[v] as usize..self.adj_start[v + 1] as usize]
    }

    pub fn degree(&self, v: usize) -> usize {
        (self.adj_start[v + 1] - self.adj_start[v]) as usize
    }

    /// Unwrapped vector from `u` to `v` along edge `e`.
    pub fn edge_vector(&self, e: usize) -> Point {
        let ed = &self.edges[e];
        let [p0, p1] = self.periods;
        let shift = geom::add(geom::scale(p0, f64::from(ed.wrap[0])), geom::scale(p1, f64::from(ed.wrap[1])));
        geom::sub(geom::add(self.positions[ed.v as usize], shift), self.positions[ed.u as usize])
    }

    pub fn edge_segment(&self, e: usize) -> (Point, Point) {
        let p = self.positions[self.edges[e].u as usize];
        (p, geom::add(p, self.edge_vector(e)))
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.topology, Topology::Torus { .. })
    }

    pub fn bond_class_index(&self, name: &str) -> Option<u16> {
        self.bond_class_names.iter().position(|c| c == name).map(|i| i as u16)
    }

    /// Permutation of edges induced by rotating a disc instance by `2π/k`
    /// about the origin, or `None` if the instance is not invariant.
    pub fn rotation_edge_map(&self, k: u32) -> Option<Vec<u32>> {
        let angle = std::f64::consts::TAU / f64::from(k);
        let key = |p: Point| ((p[0] * 1e6).round() as i64, (p[1] * 1e6).round() as i64);
        let mut by_mid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        let mid = |e: usize| {
            let (a, b) = self.edge_segment(e);
            geom::scale(geom::add(a, b), 0.5)
        };
        for e in 0..self.edges.len() {
            by_mid.entry(key(mid(e))).or_default().push(e as u32);
        }
        let mut map = Vec::with_capacity(self.edges.len());
        for e in 0..self.edges.len() {
            let target = geom::rotate(mid(e), angle);
            let (ra, rb) = {
                let (a, b) = self.edge_segment(e);
                (geom::rotate(a, angle), geom::rotate(b, angle))
            };
            let (kx, ky) = key(target);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(cands) = by_mid.get(&(kx + dx, ky + dy)) {
                        for &c in cands {
                            let (a, b) = self.edge_segment(c as usize);
                            let same = (geom::dist(a, ra) < 1e-7 && geom::dist(b, rb) < 1e-7)
                                || (geom::dist(a, rb) < 1e-7 && geom::dist(b, ra) < 1e-7);
                            if same {
                                found = Some(c);
                                break 'search;
                            }
                        }
                    }
                }
            }
            map.push(found?);
        }
        Some(map)
    }
}

fn class_table(names: impl Iterator<Item = String>) -> (Vec<String>, HashMap<String, u16>) {
    let mut list: Vec<String> = names.collect();
    list.sort();
    list.dedup();
    let index = list.iter().enumerate().map(|(i, c)| (c.clone(), i as u16)).collect();
    (list, index)
}

/// `m × n` copies of the fundamental domain with periodic wrapping.
///
/// Vertex `((i·n + j)·S + s)` is site `s` in cell `(i, j)`; edge
/// `((i·n + j)·B + b)` is bond `b` with its `a` endpoint in that cell.
pub fn instantiate_torus(lattice: &PlaneLattice, m: usize, n: usize) -> Result<FiniteInstance> {
    instantiate_torus_capped(lattice, m, n, DEFAULT_CAPACITY)
}

pub fn instantiate_torus_capped(lattice: &PlaneLattice, m: usize, n: usize, capacity: usize) -> Result<FiniteInstance> {
    periodic_instance(lattice, m, n, capacity, true)
}

/// `m × n` cells with open boundaries: bonds leaving the block are dropped.
pub fn instantiate_box(lattice: &PlaneLattice, m: usize, n: usize) -> Result<FiniteInstance> {
    let mut inst = periodic_instance(lattice, m, n, DEFAULT_CAPACITY, false)?;
    inst.boundary =
        (0..inst.num_vertices()).map(|v| inst.degree(v) < lattice.degree(inst.vertex_site[v] as usize)).collect();
    Ok(inst)
}

fn periodic_instance(
    lattice: &PlaneLattice,
    m: usize,
    n: usize,
    capacity: usize,
    wrap: bool,
) -> Result<FiniteInstance> {
    if m < 2 || n < 2 {
        return Err(Error::InvalidParameter(format!("torus needs m, n ≥ 2 (got {m}×{n})")));
    }
    let ns = lattice.sites.len();
    let requested = m.saturating_mul(n).saturating_mul(ns);
    if requested > capacity {
        return Err(Error::Capacity { requested, capacity });
    }
    let (site_names, site_index) = class_table(lattice.sites.iter().map(|s| s.class.clone()));
    let (bond_names, bond_index) = class_table(lattice.bonds.iter().map(|b| b.class.clone()));
    let vid = |s: usize, i: usize, j: usize| ((i * n + j) * ns + s) as u32;
    let mut positions = Vec::with_capacity(requested);
    let mut vertex_site = Vec::with_capacity(requested);
    let mut vertex_cell = Vec::with_capacity(requested);
    let mut site_class = Vec::with_capacity(requested);
    for i in 0..m {
        for j in 0..n {
            for (s, site) in lattice.sites.iter().enumerate() {
                let cell = [i as i32, j as i32];
                positions.push(lattice.site_position(s, cell));
                vertex_site.push(s as u32);
                vertex_cell.push(cell);
                site_class.push(site_index[&site.class]);
            }
        }
    }
    let mut edges = Vec::with_capacity(m * n * lattice.bonds.len());
    for i in 0..m {
        for j in 0..n {
            for (bi, b) in lattice.bonds.iter().enumerate() {
                let ti = i as i64 + i64::from(b.offset[0]);
                let tj = j as i64 + i64::from(b.offset[1]);
                let w = [ti.div_euclid(m as i64) as i32, tj.div_euclid(n as i64) as i32];
                if !wrap && w != [0, 0] {
                    continue;
                }
                edges.push(Edge {
                    u: vid(b.a, i, j),
                    v: vid(b.b, ti.rem_euclid(m as i64) as usize, tj.rem_euclid(n as i64) as usize),
                    bond: bi as u32,
                    class: bond_index[&b.class],
                    cell: [i as i32, j as i32],
                    wrap: w,
                });
            }
        }
    }
    let [w1, w2] = lattice.basis;
    let periods = if wrap { [geom::scale(w1, m as f64), geom::scale(w2, n as f64)] } else { [[0.0; 2]; 2] };
    let topology = if wrap { Topology::Torus { m, n } } else { Topology::Box { m, n } };
    Ok(FiniteInstance::from_parts(
        topology,
        positions,
        vertex_site,
        vertex_cell,
        site_class,
        site_names,
        edges,
        bond_names,
        periods,
    ))
}

/// Torus instance of the primal lattice with the torus instance of its dual
/// attached, `e ↔ e*` recorded edge by edge.
pub fn instantiate_torus_pair(pair: &DualPair, m: usize, n: usize) -> Result<FiniteInstance> {
    let mut primal = instantiate_torus(&pair.primal, m, n)?;
    let dual = instantiate_torus(&pair.dual, m, n)?;
    let nb = pair.dual.bonds.len();
    let mut primal_to_dual = vec![u32::MAX; primal.num_edges()];
    for (e, edge) in primal.edges.iter().enumerate() {
        let link = pair.link_of_primal(edge.bond as usize).ok_or(Error::MissingDual)?;
        let i = (i64::from(edge.cell[0]) + i64::from(link.shift[0])).rem_euclid(m as i64) as usize;
        let j = (i64::from(edge.cell[1]) + i64::from(link.shift[1])).rem_euclid(n as i64) as usize;
        primal_to_dual[e] = ((i * n + j) * nb + link.dual) as u32;
    }
    primal.dual = Some(Box::new(DualLink { instance: dual, primal_to_dual }));
    Ok(primal)
}

struct DiscBuilder<'a> {
    lattice: &'a PlaneLattice,
    index: HashMap<(usize, Cell), u32>,
    positions: Vec<Point>,
    vertex_site: Vec<u32>,
    vertex_cell: Vec<Cell>,
    site_class: Vec<u16>,
    site_index: HashMap<String, u16>,
    site_names: Vec<String>,
    bond_index: HashMap<String, u16>,
    bond_names: Vec<String>,
    edges: Vec<Edge>,
}

impl<'a> DiscBuilder<'a> {
    fn new(lattice: &'a PlaneLattice) -> Self {
        let (site_names, site_index) = class_table(lattice.sites.iter().map(|s| s.class.clone()));
        let (bond_names, bond_index) = class_table(lattice.bonds.iter().map(|b| b.class.clone()));
        DiscBuilder {
            lattice,
            index: HashMap::new(),
            positions: Vec::new(),
            vertex_site: Vec::new(),
            vertex_cell: Vec::new(),
            site_class: Vec::new(),
            site_index,
            site_names,
            bond_index,
            bond_names,
            edges: Vec::new(),
        }
    }

    fn place(&self, site: usize, cell: Cell) -> Point {
        disc_frame(self.lattice, self.lattice.site_position(site, cell))
    }

    fn vertex(&mut self, site: usize, cell: Cell) -> u32 {
        if let Some(&v) = self.index.get(&(site, cell)) {
            return v;
        }
        let v = self.positions.len() as u32;
        self.positions.push(self.place(site, cell));
        self.vertex_site.push(site as u32);
        self.vertex_cell.push(cell);
        self.site_class.push(self.site_index[&self.lattice.sites[site].class]);
        self.index.insert((site, cell), v);
        v
    }

    fn edge(&mut self, bond: usize, cell: Cell) {
        let b = &self.lattice.bonds[bond];
        let far = [cell[0] + b.offset[0], cell[1] + b.offset[1]];
        let (ba, bb, class) = (b.a, b.b, self.bond_index[&b.class]);
        let u = self.vertex(ba, cell);
        let v = self.vertex(bb, far);
        self.edges.push(Edge { u, v, bond: bond as u32, class, cell, wrap: [0, 0] });
    }

    fn finish(self, radius: f64, margin: f64) -> FiniteInstance {
        FiniteInstance::from_parts(
            Topology::Disc { radius, margin },
            self.positions,
            self.vertex_site,
            self.vertex_cell,
            self.site_class,
            self.site_names,
            self.edges,
            self.bond_names,
            [[0.0; 2]; 2],
        )
    }
}

/// Maps a Cartesian lattice point into the disc frame: centred on the
/// lattice's rotation centre, then turned by [`DISC_ROTATION`].
pub fn disc_frame(lattice: &PlaneLattice, p: Point) -> Point {
    geom::rotate(geom::sub(p, lattice.center), DISC_ROTATION)
}

fn collect_disc(lattice: &PlaneLattice, reach: f64) -> DiscBuilder<'_> {
    let mut builder = DiscBuilder::new(lattice);
    let cells = crate::lattice::cells_within(lattice, lattice.center, reach + lattice.max_bond_length());
    for &cell in &cells {
        for bond in 0..lattice.bonds.len() {
            let (p, q) = lattice.bond_segment(bond, cell);
            let (p, q) = (disc_frame(lattice, p), disc_frame(lattice, q));
            if geom::point_segment_distance([0.0, 0.0], p, q) <= reach {
                builder.edge(bond, cell);
            }
        }
    }
    for &cell in &cells {
        for s in 0..lattice.sites.len() {
            if geom::norm(builder.place(s, cell)) <= reach {
                builder.vertex(s, cell);
            }
        }
    }
    builder
}

/// All crossings of the circle of radius `r`, or `None` when the circle
/// passes through a vertex, is tangent to an edge, or two crossings
/// coincide in angle.
fn circle_crossings(inst: &FiniteInstance, r: f64) -> Option<Vec<Crossing>> {
    if inst.positions.iter().any(|p| (geom::norm(*p) - r).abs() < TOL) {
        return None;
    }
    let mut out = Vec::new();
    for (i, e) in inst.edges.iter().enumerate() {
        let (a, b) = inst.edge_segment(i);
        for (t, outward) in geom::segment_circle_roots(a, b, r)? {
            let point = geom::add(a, geom::scale(geom::sub(b, a), t));
            out.push(Crossing {
                edge: i as u32,
                angle: geom::angle(point),
                point,
                outer: if outward { e.v } else { e.u },
            });
        }
    }
    out.sort_by(|x, y| x.angle.total_cmp(&y.angle));
    let coincide = out.windows(2).any(|w| w[1].angle - w[0].angle < 1e-12)
        || out.len() > 1 && out[0].angle + std::f64::consts::TAU - out[out.len() - 1].angle < 1e-12;
    (!coincide).then_some(out)
}

fn disc_data(inst: &FiniteInstance, requested: f64, radius: f64, margin: f64, crossings: Vec<Crossing>) -> DiscData {
    DiscData {
        requested_radius: requested,
        radius,
        margin,
        crossings,
        far: inst.positions.iter().map(|p| geom::norm(*p) >= margin).collect(),
        outside: (0..inst.num_edges())
            .map(|e| {
                let (a, b) = inst.edge_segment(e);
                geom::point_segment_distance([0.0, 0.0], a, b) > radius
            })
            .collect(),
    }
}

/// Nudges `r` by `+1e-6·|w1|` until every instance is in general position.
fn clear_radius(lattice: &PlaneLattice, r: f64, insts: &[&FiniteInstance]) -> (f64, Vec<Vec<Crossing>>) {
    let step = 1e-6 * geom::norm(lattice.basis[0]);
    let mut radius = r;
    loop {
        let found: Option<Vec<Vec<Crossing>>> = insts.iter().map(|i| circle_crossings(i, radius)).collect();
        if let Some(c) = found {
            return (radius, c);
        }
        radius += step;
    }
}

/// Every vertex and edge meeting the disc of radius `margin`, with the
/// crossings of the circle of radius `radius` enumerated.
pub fn instantiate_disc(lattice: &PlaneLattice, radius: f64, margin: f64) -> Result<FiniteInstance> {
    check_disc_params(radius, margin)?;
    let mut inst = collect_disc(lattice, margin).finish(radius, margin);
    let (r, mut crossings) = clear_radius(lattice, radius, &[&inst]);
    inst.topology = Topology::Disc { radius: r, margin };
    inst.disc = Some(disc_data(&inst, radius, r, margin, crossings.remove(0)));
    Ok(inst)
}

fn check_disc_params(radius: f64, margin: f64) -> Result<()> {
    if !(radius > 0.0) || margin < 2.0 * radius {
        return Err(Error::InvalidParameter(format!("disc needs R > 0 and M ≥ 2R (got R={radius}, M={margin})")));
    }
    Ok(())
}

/// Disc instance of the primal lattice with the exact dual of its edge set
/// attached. The primal is cut at `margin` plus a pad so that every dual
/// edge within `margin` has its partner present.
pub fn instantiate_disc_pair(pair: &DualPair, radius: f64, margin: f64) -> Result<FiniteInstance> {
    check_disc_params(radius, margin)?;
    let pad = pair.primal.max_bond_length() + pair.dual.max_bond_length() + 1.0;
    let primal_builder = collect_disc(&pair.primal, margin + pad);
    let mut dual_builder = DiscBuilder::new(&pair.dual);
    let mut primal_to_dual = Vec::with_capacity(primal_builder.edges.len());
    for e in &primal_builder.edges {
        let link = pair.link_of_primal(e.bond as usize).ok_or(Error::MissingDual)?;
        primal_to_dual.push(dual_builder.edges.len() as u32);
        dual_builder.edge(link.dual, [e.cell[0] + link.shift[0], e.cell[1] + link.shift[1]]);
    }
    let mut primal = primal_builder.finish(radius, margin);
    let mut dual = dual_builder.finish(radius, margin);
    let (r, mut crossings) = clear_radius(&pair.primal, radius, &[&primal, &dual]);
    primal.topology = Topology::Disc { radius: r, margin };
    dual.topology = Topology::Disc { radius: r, margin };
    let dual_crossings = crossings.pop().expect("two instances");
    let primal_crossings = crossings.pop().expect("two instances");
    dual.disc = Some(disc_data(&dual, radius, r, margin, dual_crossings));
    primal.disc = Some(disc_data(&primal, radius, r, margin, primal_crossings));
    primal.dual = Some(Box::new(DualLink { instance: dual, primal_to_dual }));
    Ok(primal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::builtin;

    #[test]
    fn torus_counts() {
        let sq = instantiate_torus(&builtin("square").unwrap(), 2, 2).unwrap();
        assert_eq!((sq.num_vertices(), sq.num_edges()), (4, 8));
        let tri = instantiate_torus(&builtin("triangular").unwrap(), 2, 2).unwrap();
        assert_eq!((tri.num_vertices(), tri.num_edges()), (4, 12));
        let hex = instantiate_torus(&builtin("hexagonal").unwrap(), 2, 2).unwrap();
        assert_eq!((hex.num_vertices(), hex.num_edges()), (8, 12));
    }

    #[test]
    fn torus_degrees_match_lattice() {
        for name in crate::lattice::BUILTINS {
            let l = builtin(name).unwrap();
            let t = instantiate_torus(&l, 3, 4).unwrap();
            for v in 0..t.num_vertices() {
                assert_eq!(t.degree(v), l.degree(t.vertex_site[v] as usize), "{name}");
            }
        }
    }

    #[test]
    fn torus_edge_vectors_are_bond_vectors() {
        let l = builtin("kagome").unwrap();
        let t = instantiate_torus(&l, 3, 2).unwrap();
        for (e, edge) in t.edges.iter().enumerate() {
            assert!(geom::dist(t.edge_vector(e), l.bond_vector(edge.bond as usize)) < 1e-9);
        }
    }

    #[test]
    fn torus_rejects_bad_sizes() {
        let l = builtin("square").unwrap();
        assert!(instantiate_torus(&l, 1, 4).is_err());
        assert!(matches!(instantiate_torus_capped(&l, 100, 100, 1000), Err(Error::Capacity { .. })));
    }

    #[test]
    fn box_marks_boundary() {
        let b = instantiate_box(&builtin("square").unwrap(), 4, 4).unwrap();
        assert_eq!(b.num_edges(), 2 * 4 * 3);
        assert_eq!(b.boundary.iter().filter(|&&x| x).count(), 12);
    }

    #[test]
    fn disc_crossings_match_direct_enumeration() {
        let l = builtin("square").unwrap();
        let d = instantiate_disc(&l, 2.5, 5.0).unwrap();
        let data = d.disc.as_ref().unwrap();
        assert_eq!(data.radius, 2.5);
        // Oracle: walk the integer grid and count edges with one endpoint
        // inside and one outside the circle; straight unit edges cannot
        // cross a radius-2.5 circle twice.
        let mut count = 0;
        for x in -6i32..=6 {
            for y in -6i32..=6 {
                let inside = |a: i32, b: i32| f64::from(a * a + b * b) < 6.25;
                count += (inside(x, y) != inside(x + 1, y)) as usize;
                count += (inside(x, y) != inside(x, y + 1)) as usize;
            }
        }
        assert_eq!(data.crossings.len(), count);
        for w in data.crossings.windows(2) {
            assert!(w[1].angle - w[0].angle > 1e-12);
        }
        for c in &data.crossings {
            assert!((geom::norm(c.point) - 2.5).abs() < 1e-9);
            assert!(geom::norm(d.positions[c.outer as usize]) > 2.5);
        }
    }

    #[test]
    fn disc_radius_is_nudged_off_vertices() {
        let l = builtin("square").unwrap();
        let d = instantiate_disc(&l, 2.0, 5.0).unwrap();
        let data = d.disc.as_ref().unwrap();
        assert_eq!(data.requested_radius, 2.0);
        assert!(data.radius > 2.0 && data.radius < 2.0 + 1e-4);
    }

    #[test]
    fn disc_is_deterministic_and_rotation_invariant() {
        let l = builtin("square").unwrap();
        let a = instantiate_disc(&l, 3.5, 8.0).unwrap();
        let b = instantiate_disc(&l, 3.5, 8.0).unwrap();
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.edges, b.edges);
        let map = a.rotation_edge_map(4).expect("square disc is 4-fold symmetric");
        let mut sorted = map.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), a.num_edges());
    }
}
