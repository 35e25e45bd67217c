//! Planar duals and matching graphs of periodic lattices.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::embedding::{half_edge_origin, trace_faces, trace_instance_faces};
use crate::error::{Error, Result};
use crate::geom;
use crate::instance::{instantiate_torus, instantiate_torus_pair, Edge, FiniteInstance};
use crate::lattice::{Bond, Cell, PlaneLattice, Site};

/// Pairs primal bond `primal` with dual bond `dual`. The dual copy crossing
/// the primal bond drawn at cell `c` is the one drawn at `c + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BondLink {
    pub primal: usize,
    pub dual: usize,
    pub shift: Cell,
}

#[derive(Debug, Clone)]
pub struct DualPair {
    pub primal: PlaneLattice,
    pub dual: PlaneLattice,
    pub links: Vec<BondLink>,
}

impl DualPair {
    pub fn link_of_primal(&self, bond: usize) -> Option<&BondLink> {
        self.links.iter().find(|l| l.primal == bond)
    }

    pub fn link_of_dual(&self, bond: usize) -> Option<&BondLink> {
        self.links.iter().find(|l| l.dual == bond)
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r
    } else {
        x
    }
}

/// Dual lattice with one vertex per face (at the face centroid) and one
/// bond per primal bond, joining the faces on its right and left.
pub fn dual(lattice: &PlaneLattice) -> Result<DualPair> {
    let emb = trace_faces(lattice)?;
    let mut sites = Vec::with_capacity(emb.faces.len());
    let mut face_cell = Vec::with_capacity(emb.faces.len());
    for (i, f) in emb.faces.iter().enumerate() {
        let frac = lattice.cart_to_frac(f.centroid);
        let frac = [snap(frac[0]), snap(frac[1])];
        let cell = [frac[0].floor() as i32, frac[1].floor() as i32];
        let pos = [frac[0] - f64::from(cell[0]), frac[1] - f64::from(cell[1])];
        sites.push(Site { id: format!("f{i}"), pos, class: "face".into() });
        face_cell.push(cell);
    }
    // Cell of the dual vertex of the face left of half-edge `h`, when the
    // origin of `h` sits in cell 0.
    let left_cell = |h: u32| -> Cell {
        let f = emb.face_of[h as usize] as usize;
        let o = emb.faces[f].origin_shift[emb.slot[h as usize] as usize];
        [face_cell[f][0] - o[0], face_cell[f][1] - o[1]]
    };
    let mut bonds = Vec::with_capacity(lattice.bonds.len());
    let mut links = Vec::with_capacity(lattice.bonds.len());
    for (b, bond) in lattice.bonds.iter().enumerate() {
        let (fwd, back) = (2 * b as u32, 2 * b as u32 + 1);
        let right = emb.face_of[back as usize] as usize;
        let left = emb.face_of[fwd as usize] as usize;
        let cl = left_cell(fwd);
        let cr0 = left_cell(back);
        let cr = [cr0[0] + bond.offset[0], cr0[1] + bond.offset[1]];
        bonds.push(Bond {
            id: format!("{}*", bond.id),
            a: right,
            b: left,
            offset: [cl[0] - cr[0], cl[1] - cr[1]],
            class: bond.class.clone(),
        });
        links.push(BondLink { primal: b, dual: b, shift: cr });
    }
    let dual = PlaneLattice {
        name: format!("{}-dual", lattice.name),
        basis: lattice.basis,
        sites,
        bonds,
        planar: true,
        center: lattice.center,
    };
    Ok(DualPair { primal: lattice.clone(), dual, links })
}

type BondKey = (usize, usize, Cell);

fn bond_key(a: usize, b: usize, off: Cell) -> BondKey {
    let fwd = (a, b, off);
    let rev = (b, a, [-off[0], -off[1]]);
    if fwd <= rev {
        fwd
    } else {
        rev
    }
}

/// Adds every missing chord between boundary vertices of each face. Chords
/// get class `"chord"`; the result is non-planar iff a chord was added.
pub fn matching_graph(lattice: &PlaneLattice) -> Result<PlaneLattice> {
    let emb = trace_faces(lattice)?;
    let mut present: HashSet<BondKey> = lattice.bonds.iter().map(|b| bond_key(b.a, b.b, b.offset)).collect();
    let mut out = lattice.clone();
    out.name = format!("{}-matching", lattice.name);
    for face in &emb.faces {
        let corners: Vec<(usize, Cell)> =
            face.half_edges.iter().zip(&face.origin_shift).map(|(&h, &o)| (half_edge_origin(lattice, h), o)).collect();
        let n = corners.len();
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let ((si, ci), (sj, cj)) = (corners[i], corners[j]);
                let off = [cj[0] - ci[0], cj[1] - ci[1]];
                if si == sj && off == [0, 0] {
                    continue;
                }
                if present.insert(bond_key(si, sj, off)) {
                    out.bonds.push(Bond {
                        id: format!("chord{}", out.bonds.len()),
                        a: si,
                        b: sj,
                        offset: off,
                        class: "chord".into(),
                    });
                }
            }
        }
    }
    out.planar = out.bonds.len() == lattice.bonds.len();
    Ok(out)
}

/// Chords completing every face of a torus instance: one edge between each
/// pair of non-consecutive corners not already joined. Empty exactly when
/// every face is a triangle.
pub fn instance_matching_chords(inst: &FiniteInstance) -> Result<Vec<Edge>> {
    let emb = trace_instance_faces(inst)?;
    if emb.euler_characteristic() != 0 {
        return Err(Error::NonPlanar("instance drawing is not a torus map"));
    }
    let key = |u: u32, v: u32, w: Cell| if (u, w) <= (v, [-w[0], -w[1]]) { (u, v, w) } else { (v, u, [-w[0], -w[1]]) };
    let mut present: HashSet<(u32, u32, Cell)> = inst.edges.iter().map(|e| key(e.u, e.v, e.wrap)).collect();
    let origin = |h: u32| {
        let e = &inst.edges[(h / 2) as usize];
        if h.is_multiple_of(2) {
            e.u
        } else {
            e.v
        }
    };
    let chord_class = inst.bond_class_names.len() as u16;
    let mut out = Vec::new();
    for face in &emb.faces {
        let n = face.len();
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (u, v) = (origin(face.half_edges[i]), origin(face.half_edges[j]));
                let (si, sj) = (face.origin_shift[i], face.origin_shift[j]);
                let wrap = [sj[0] - si[0], sj[1] - si[1]];
                if (u == v && wrap == [0, 0]) || !present.insert(key(u, v, wrap)) {
                    continue;
                }
                out.push(Edge { u, v, bond: u32::MAX, class: chord_class, cell: inst.vertex_cell[u as usize], wrap });
            }
        }
    }
    Ok(out)
}

/// The matching graph of a torus instance: the instance plus its chords.
pub fn matching_instance(inst: &FiniteInstance) -> Result<FiniteInstance> {
    let chords = instance_matching_chords(inst)?;
    let mut classes = inst.bond_class_names.clone();
    if !chords.is_empty() {
        classes.push("chord".into());
    }
    let mut edges = inst.edges.clone();
    edges.extend(chords);
    Ok(FiniteInstance::from_parts(
        inst.topology,
        inst.positions.clone(),
        inst.vertex_site.clone(),
        inst.vertex_cell.clone(),
        inst.site_class.clone(),
        inst.site_class_names.clone(),
        edges,
        classes,
        inst.periods,
    ))
}

/// Unimodular integer matrices with entries in `[-2, 2]`.
fn unimodular() -> Vec<[[i32; 2]; 2]> {
    let mut out = Vec::new();
    for a in -2..=2 {
        for b in -2..=2 {
            for c in -2..=2 {
                for d in -2..=2 {
                    let det: i32 = a * d - b * c;
                    if det.abs() == 1 {
                        out.push([[a, b], [c, d]]);
                    }
                }
            }
        }
    }
    // Identity first: the common case for translated copies.
    out.sort_by_key(|m| (*m != [[1, 0], [0, 1]]) as u8);
    out
}

fn apply(m: &[[i32; 2]; 2], v: Cell) -> Cell {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Whether two lattices are isomorphic as periodic graphs: a bijection of
/// site classes plus a unimodular change of cell coordinates carrying the
/// bond multiset of `a` onto that of `b`. Geometry is ignored.
pub fn periodic_isomorphic(a: &PlaneLattice, b: &PlaneLattice) -> bool {
    if a.sites.len() != b.sites.len() || a.bonds.len() != b.bonds.len() {
        return false;
    }
    let target = key_counts(b.bonds.iter().map(|x| bond_key(x.a, x.b, x.offset)));
    let mut degrees_a: Vec<usize> = (0..a.sites.len()).map(|s| a.degree(s)).collect();
    let mut degrees_b: Vec<usize> = (0..b.sites.len()).map(|s| b.degree(s)).collect();
    degrees_a.sort();
    degrees_b.sort();
    if degrees_a != degrees_b {
        return false;
    }
    // Spanning tree of the quotient of `a`, in BFS order.
    let n = a.sites.len();
    let mut tree: Vec<(usize, usize, Cell)> = Vec::new();
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for bond in &a.bonds {
            let (v, off) = if bond.a == u {
                (bond.b, bond.offset)
            } else if bond.b == u {
                (bond.a, [-bond.offset[0], -bond.offset[1]])
            } else {
                continue;
            };
            if !seen[v] {
                seen[v] = true;
                tree.push((u, v, off));
                queue.push_back(v);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return false;
    }
    let mut b_adj: Vec<Vec<(usize, Cell)>> = vec![Vec::new(); n];
    for bond in &b.bonds {
        b_adj[bond.a].push((bond.b, bond.offset));
        b_adj[bond.b].push((bond.a, [-bond.offset[0], -bond.offset[1]]));
    }
    for m in unimodular() {
        for root in 0..n {
            let mut sigma = vec![usize::MAX; n];
            let mut tau = vec![[0, 0]; n];
            let mut used = vec![false; n];
            sigma[0] = root;
            used[root] = true;
            let ctx = Search { a, b_adj: &b_adj, tree: &tree, m, target: &target };
            if ctx.extend(0, &mut sigma, &mut tau, &mut used) {
                return true;
            }
        }
    }
    false
}

fn key_counts(keys: impl Iterator<Item = BondKey>) -> HashMap<BondKey, usize> {
    let mut m = HashMap::new();
    for k in keys {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

struct Search<'a> {
    a: &'a PlaneLattice,
    b_adj: &'a [Vec<(usize, Cell)>],
    tree: &'a [(usize, usize, Cell)],
    m: [[i32; 2]; 2],
    target: &'a HashMap<BondKey, usize>,
}

impl Search<'_> {
    fn extend(&self, depth: usize, sigma: &mut [usize], tau: &mut [Cell], used: &mut [bool]) -> bool {
        if depth == self.tree.len() {
            let mapped = self.a.bonds.iter().map(|x| {
                let o = apply(&self.m, x.offset);
                let (ta, tb) = (tau[x.a], tau[x.b]);
                bond_key(sigma[x.a], sigma[x.b], [o[0] + tb[0] - ta[0], o[1] + tb[1] - ta[1]])
            });
            return key_counts(mapped) == *self.target;
        }
        let (x, y, off) = self.tree[depth];
        let mo = apply(&self.m, off);
        let mut tried: HashSet<(usize, Cell)> = HashSet::new();
        for &(z, off_b) in &self.b_adj[sigma[x]] {
            if used[z] {
                continue;
            }
            let t = [off_b[0] - mo[0] + tau[x][0], off_b[1] - mo[1] + tau[x][1]];
            if !tried.insert((z, t)) {
                continue;
            }
            sigma[y] = z;
            tau[y] = t;
            used[z] = true;
            if self.extend(depth + 1, sigma, tau, used) {
                return true;
            }
            used[z] = false;
        }
        sigma[y] = usize::MAX;
        false
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct DualityReport {
    pub checks: BTreeMap<String, Check>,
}

impl DualityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.values().all(|c| c.pass)
    }

    pub fn passed(&self, name: &str) -> Option<bool> {
        self.checks.get(name).map(|c| c.pass)
    }

    fn record(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.insert(name.to_string(), Check { pass, detail });
    }
}

/// Audits a dual pair on an `size × size` torus. Violations are reported,
/// never raised.
pub fn verify_duality(pair: &DualPair, size: usize) -> DualityReport {
    let mut report = DualityReport { checks: BTreeMap::new() };
    let (p, d) = (&pair.primal, &pair.dual);

    let mut primal_hits = vec![0usize; p.bonds.len()];
    let mut dual_hits = vec![0usize; d.bonds.len()];
    let mut out_of_range = 0;
    for l in &pair.links {
        match (primal_hits.get_mut(l.primal), dual_hits.get_mut(l.dual)) {
            (Some(x), Some(y)) => {
                *x += 1;
                *y += 1;
            }
            _ => out_of_range += 1,
        }
    }
    let bad_p = primal_hits.iter().filter(|&&c| c != 1).count();
    let bad_d = dual_hits.iter().filter(|&&c| c != 1).count();
    report.record(
        "bijection_total",
        bad_p == 0 && bad_d == 0 && out_of_range == 0,
        format!("{bad_p} primal and {bad_d} dual bonds not matched exactly once, {out_of_range} dangling links"),
    );

    match (instantiate_torus(p, size, size), instantiate_torus(d, size, size)) {
        (Ok(ip), Ok(id)) => {
            report.record(
                "edge_count",
                ip.num_edges() == id.num_edges(),
                format!("|E| = {}, |E*| = {}", ip.num_edges(), id.num_edges()),
            );
            match trace_instance_faces(&ip) {
                Ok(emb) => {
                    report.record(
                        "euler",
                        emb.euler_characteristic() == 0,
                        format!("V − E + F = {}", emb.euler_characteristic()),
                    );
                    report.record(
                        "vertex_face",
                        emb.faces.len() == id.num_vertices(),
                        format!("F = {}, V* = {}", emb.faces.len(), id.num_vertices()),
                    );
                }
                Err(e) => report.record("euler", false, e.to_string()),
            }
        }
        (Err(e), _) | (_, Err(e)) => report.record("edge_count", false, e.to_string()),
    }

    match instantiate_torus_pair(pair, size, size) {
        Ok(inst) => {
            let link = inst.dual.as_ref().expect("pair instance carries its dual");
            let mut image = link.primal_to_dual.clone();
            image.sort_unstable();
            image.dedup();
            report.record(
                "torus_bijection",
                image.len() == inst.num_edges() && image.len() == link.instance.num_edges(),
                format!("{} distinct dual images of {} edges", image.len(), inst.num_edges()),
            );
        }
        Err(e) => report.record("torus_bijection", false, e.to_string()),
    }

    match dual(d) {
        Ok(dd) => {
            let iso = periodic_isomorphic(&dd.dual, p);
            report.record("double_dual", iso, format!("(G*)* isomorphic to G: {iso}"));
        }
        Err(e) => report.record("double_dual", false, e.to_string()),
    }

    // Each dual bond must cross its primal partner and no other primal bond.
    let mut missing = Vec::new();
    let mut extra = Vec::new();
    for l in &pair.links {
        if l.primal >= p.bonds.len() || l.dual >= d.bonds.len() {
            continue;
        }
        let (a, b) = p.bond_segment(l.primal, [0, 0]);
        let (c, e) = d.bond_segment(l.dual, l.shift);
        if !geom::segments_cross(a, b, c, e) {
            missing.push(p.bonds[l.primal].id.clone());
        }
        for i in -2..=2 {
            for j in -2..=2 {
                for other in 0..p.bonds.len() {
                    if other == l.primal && [i, j] == [0, 0] {
                        continue;
                    }
                    let (x, y) = p.bond_segment(other, [i, j]);
                    if geom::segments_cross(x, y, c, e) {
                        extra.push(format!("{}/{}", d.bonds[l.dual].id, p.bonds[other].id));
                    }
                }
            }
        }
    }
    report.record(
        "crossing",
        missing.is_empty() && extra.is_empty(),
        format!("uncrossed pairs {missing:?}, stray crossings {extra:?}"),
    );

    let planar = d.validate();
    report.record("dual_drawing", planar.is_ok(), planar.err().map_or("valid plane lattice".into(), |e| e.to_string()));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{builtin, detect_rotational_symmetry, BUILTINS};

    fn lat(name: &str) -> PlaneLattice {
        builtin(name).unwrap()
    }

    #[test]
    fn square_is_self_dual_with_half_shift() {
        let pair = dual(&lat("square")).unwrap();
        assert_eq!(pair.dual.sites.len(), 1);
        let pos = pair.dual.sites[0].pos;
        assert!((pos[0] - 0.5).abs() < 1e-12 && (pos[1] - 0.5).abs() < 1e-12);
        assert!(periodic_isomorphic(&pair.dual, &lat("square")));
    }

    #[test]
    fn triangular_dual_is_hexagonal() {
        let pair = dual(&lat("triangular")).unwrap();
        assert!(periodic_isomorphic(&pair.dual, &lat("hexagonal")));
        assert!(!periodic_isomorphic(&pair.dual, &lat("kagome")));
    }

    #[test]
    fn double_dual_recovers_primal() {
        for name in BUILTINS {
            let l = lat(name);
            let dd = dual(&dual(&l).unwrap().dual).unwrap().dual;
            assert!(periodic_isomorphic(&dd, &l), "{name}");
        }
    }

    #[test]
    fn dual_counts_match_faces_and_bonds() {
        for name in BUILTINS {
            let l = lat(name);
            let faces = trace_faces(&l).unwrap().faces.len();
            let pair = dual(&l).unwrap();
            assert_eq!(pair.dual.sites.len(), faces, "{name}");
            assert_eq!(pair.dual.bonds.len(), l.bonds.len(), "{name}");
        }
    }

    #[test]
    fn every_builtin_passes_verification() {
        for name in BUILTINS {
            let report = verify_duality(&dual(&lat(name)).unwrap(), 4);
            assert!(report.all_pass(), "{name}: {}", serde_json::to_string(&report).unwrap());
        }
    }

    #[test]
    fn triangular_hexagonal_edge_counts() {
        let report = verify_duality(&dual(&lat("triangular")).unwrap(), 4);
        assert_eq!(report.checks["edge_count"].detail, "|E| = 48, |E*| = 48");
    }

    #[test]
    fn corrupted_bijection_is_reported() {
        let mut pair = dual(&lat("square")).unwrap();
        pair.links[1].dual = 0;
        let report = verify_duality(&pair, 3);
        assert_eq!(report.passed("bijection_total"), Some(false));
        let mut pair = dual(&lat("triangular")).unwrap();
        pair.links.pop();
        let report = verify_duality(&pair, 3);
        assert_eq!(report.passed("bijection_total"), Some(false));
        assert_eq!(report.passed("torus_bijection"), Some(false));
    }

    #[test]
    fn dual_keeps_rotational_symmetry() {
        for name in BUILTINS {
            let l = lat(name);
            let r = 4.0 * l.cell_diameter();
            let k = detect_rotational_symmetry(&l, l.center, r).k;
            let kd = detect_rotational_symmetry(&dual(&l).unwrap().dual, l.center, r).k;
            assert!(kd >= k, "{name}: {kd} < {k}");
        }
    }

    #[test]
    fn matching_graph_chords() {
        let tri = lat("triangular");
        let m = matching_graph(&tri).unwrap();
        assert_eq!(m.bonds, tri.bonds);
        assert!(m.planar);
        let sq = matching_graph(&lat("square")).unwrap();
        assert_eq!(sq.bonds.len(), 4);
        assert!(!sq.planar);
        let hex = matching_graph(&lat("hexagonal")).unwrap();
        assert_eq!(hex.bonds.iter().filter(|b| b.class == "chord").count(), 9);
    }

    #[test]
    fn matching_graph_of_square_is_king_graph() {
        // Oracle: each site joined to its eight nearest cells.
        let m = matching_graph(&lat("square")).unwrap();
        let mut offs: Vec<Cell> = m.bonds.iter().flat_map(|b| [b.offset, [-b.offset[0], -b.offset[1]]]).collect();
        offs.sort();
        let mut want: Vec<Cell> =
            (-1..=1).flat_map(|i| (-1..=1).map(move |j| [i, j])).filter(|c| *c != [0, 0]).collect();
        want.sort();
        assert_eq!(offs, want);
    }

    #[test]
    fn non_planar_rejected() {
        let m = matching_graph(&lat("square")).unwrap();
        assert!(matches!(dual(&m), Err(Error::NonPlanar(_))));
        assert!(matches!(matching_graph(&m), Err(Error::NonPlanar(_))));
    }
}
