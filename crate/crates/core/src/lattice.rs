//! Periodic plane lattices.
//!
//! A [`PlaneLattice`] is stored as its fundamental domain: sites with
//! fractional positions in `[0,1)²` and bonds `a → b` where `b` lives in the
//! cell translated by `offset·(w1, w2)`. Everything else (finite instances,
//! faces, duals) is derived from this description.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Point, TOL};

pub type Cell = [i32; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: String,
    /// Fractional coordinates in the basis, inside `[0,1)²`.
    pub pos: Point,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub id: String,
    pub a: usize,
    pub b: usize,
    pub offset: Cell,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneLattice {
    pub name: String,
    /// Rows are `w1` and `w2` in Cartesian coordinates.
    pub basis: [Point; 2],
    pub sites: Vec<Site>,
    pub bonds: Vec<Bond>,
    pub planar: bool,
    /// Preferred rotation centre (Cartesian) for symmetric constructions.
    pub center: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryOrder {
    pub k: u32,
    pub center: Point,
}

pub const BUILTINS: [&str; 6] = ["square", "triangular", "hexagonal", "kagome", "fig1-left", "fig1-right"];

impl PlaneLattice {
    /// Builds a built-in lattice by name, or loads a JSON file.
    pub fn build(spec: &str) -> Result<Self> {
        if let Some(l) = builtin(spec) {
            return Ok(l);
        }
        let path = Path::new(spec);
        if path.exists() {
            return Self::from_json_file(path);
        }
        Err(Error::UnknownLattice(spec.to_string()))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: LatticeFile = serde_json::from_str(text)?;
        let lattice = file.into_lattice()?;
        lattice.validate()?;
        Ok(lattice)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LatticeFile::from(self)).expect("lattice serializes")
    }

    pub fn frac_to_cart(&self, f: Point) -> Point {
        let [w1, w2] = self.basis;
        [f[0] * w1[0] + f[1] * w2[0], f[0] * w1[1] + f[1] * w2[1]]
    }

    pub fn cart_to_frac(&self, p: Point) -> Point {
        let [w1, w2] = self.basis;
        let d = geom::det(w1, w2);
        [(p[0] * w2[1] - p[1] * w2[0]) / d, (w1[0] * p[1] - w1[1] * p[0]) / d]
    }

    /// Cartesian position of `site` in the copy of the domain at `cell`.
    pub fn site_position(&self, site: usize, cell: Cell) -> Point {
        let s = self.sites[site].pos;
        self.frac_to_cart([s[0] + f64::from(cell[0]), s[1] + f64::from(cell[1])])
    }

    /// Endpoints of `bond` in the copy whose `a` endpoint sits in `cell`.
    pub fn bond_segment(&self, bond: usize, cell: Cell) -> (Point, Point) {
        let b = &self.bonds[bond];
        let far = [cell[0] + b.offset[0], cell[1] + b.offset[1]];
        (self.site_position(b.a, cell), self.site_position(b.b, far))
    }

    pub fn bond_vector(&self, bond: usize) -> Point {
        let (p, q) = self.bond_segment(bond, [0, 0]);
        geom::sub(q, p)
    }

    pub fn max_bond_length(&self) -> f64 {
        (0..self.bonds.len()).map(|b| geom::norm(self.bond_vector(b))).fold(0.0, f64::max)
    }

    pub fn cell_diameter(&self) -> f64 {
        let [w1, w2] = self.basis;
        geom::norm(geom::add(w1, w2)).max(geom::norm(geom::sub(w1, w2)))
    }

    /// Finds the lattice site at `p`, if any, within [`TOL`].
    pub fn locate_site(&self, p: Point) -> Option<(usize, Cell)> {
        let f = self.cart_to_frac(p);
        self.sites.iter().enumerate().find_map(|(i, s)| {
            let cell = [(f[0] - s.pos[0]).round() as i32, (f[1] - s.pos[1]).round() as i32];
            (geom::dist(self.site_position(i, cell), p) < TOL).then_some((i, cell))
        })
    }

    pub fn degree(&self, site: usize) -> usize {
        self.bonds.iter().map(|b| (b.a == site) as usize + (b.b == site) as usize).sum()
    }

    pub fn bond_classes(&self) -> Vec<String> {
        let mut v: Vec<String> = self.bonds.iter().map(|b| b.class.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn site_classes(&self) -> Vec<String> {
        let mut v: Vec<String> = self.sites.iter().map(|s| s.class.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Checks every structural invariant of a plane lattice.
    pub fn validate(&self) -> Result<()> {
        let [w1, w2] = self.basis;
        if geom::det(w1, w2).abs() < TOL {
            return Err(Error::InvalidSpec("basis vectors are linearly dependent".into()));
        }
        if self.sites.is_empty() {
            return Err(Error::InvalidSpec("no sites".into()));
        }
        for s in &self.sites {
            if !(0.0..1.0).contains(&s.pos[0]) || !(0.0..1.0).contains(&s.pos[1]) {
                return Err(Error::InvalidSpec(format!("site {} lies outside [0,1)²", s.id)));
            }
        }
        for i in 0..self.sites.len() {
            for j in 0..i {
                let (p, q) = (self.site_position(i, [0, 0]), self.site_position(j, [0, 0]));
                if geom::dist(p, q) < TOL {
                    return Err(Error::InvalidSpec(format!(
                        "sites {} and {} coincide",
                        self.sites[i].id, self.sites[j].id
                    )));
                }
            }
        }
        for b in &self.bonds {
            if b.a >= self.sites.len() || b.b >= self.sites.len() {
                return Err(Error::InvalidSpec(format!("bond {} references a missing site", b.id)));
            }
            if b.a == b.b && b.offset == [0, 0] {
                return Err(Error::InvalidSpec(format!("bond {} is a zero-length loop", b.id)));
            }
        }
        if self.planar {
            self.check_non_crossing()?;
        }
        self.check_connected()
    }

    /// Pairwise segment audit over the 3×3 block of cells around the origin.
    fn check_non_crossing(&self) -> Result<()> {
        let mut segs = Vec::new();
        for i in -1..=1 {
            for j in -1..=1 {
                for b in 0..self.bonds.len() {
                    segs.push((b, self.bond_segment(b, [i, j])));
                }
            }
        }
        for x in 0..segs.len() {
            for y in 0..x {
                let (bx, (a, b)) = segs[x];
                let (by, (c, d)) = segs[y];
                let same = geom::dist(a, c) < TOL && geom::dist(b, d) < TOL
                    || geom::dist(a, d) < TOL && geom::dist(b, c) < TOL;
                if same {
                    // Parallel multi-edges drawn on top of each other.
                    return Err(Error::InvalidSpec(format!(
                        "bonds {} and {} are drawn on the same segment",
                        self.bonds[bx].id, self.bonds[by].id
                    )));
                }
                if geom::segments_cross(a, b, c, d) || geom::segments_overlap(a, b, c, d) {
                    return Err(Error::InvalidSpec(format!(
                        "bonds {} and {} cross",
                        self.bonds[bx].id, self.bonds[by].id
                    )));
                }
            }
            // A vertex lying in the interior of a bond is also a crossing.
            let (bx, (a, b)) = segs[x];
            for s in 0..self.sites.len() {
                for i in -2..=2 {
                    for j in -2..=2 {
                        let p = self.site_position(s, [i, j]);
                        if geom::point_segment_distance(p, a, b) < TOL
                            && geom::dist(p, a) > TOL
                            && geom::dist(p, b) > TOL
                        {
                            return Err(Error::InvalidSpec(format!(
                                "site {} lies on bond {}",
                                self.sites[s].id, self.bonds[bx].id
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The infinite lattice is connected iff the quotient graph is connected
    /// and the windings of its cycles generate all of Z².
    fn check_connected(&self) -> Result<()> {
        let n = self.sites.len();
        let mut adj: Vec<Vec<(usize, Cell)>> = vec![Vec::new(); n];
        for b in &self.bonds {
            adj[b.a].push((b.b, b.offset));
            adj[b.b].push((b.a, [-b.offset[0], -b.offset[1]]));
        }
        let mut potential: Vec<Option<Cell>> = vec![None; n];
        potential[0] = Some([0, 0]);
        let mut queue = VecDeque::from([0usize]);
        let mut windings: Vec<[i64; 2]> = Vec::new();
        while let Some(u) = queue.pop_front() {
            let pu = potential[u].expect("visited");
            for &(v, off) in &adj[u] {
                let target = [pu[0] + off[0], pu[1] + off[1]];
                match potential[v] {
                    None => {
                        potential[v] = Some(target);
                        queue.push_back(v);
                    }
                    Some(pv) => {
                        let w = [i64::from(target[0] - pv[0]), i64::from(target[1] - pv[1])];
                        if w != [0, 0] {
                            windings.push(w);
                        }
                    }
                }
            }
        }
        if potential.iter().any(Option::is_none) {
            return Err(Error::InvalidSpec("quotient graph is disconnected".into()));
        }
        if winding_index(&windings) != 1 {
            return Err(Error::InvalidSpec("lattice splits into several translated components".into()));
        }
        Ok(())
    }

    /// Multiset of canonical bond keys, optionally including the class.
    fn bond_key_counts(&self, with_class: bool) -> HashMap<(usize, usize, Cell, String), usize> {
        let mut m = HashMap::new();
        for b in &self.bonds {
            let class = if with_class { b.class.clone() } else { String::new() };
            *m.entry(canonical_key(b.a, b.b, b.offset, class)).or_insert(0) += 1;
        }
        m
    }
}

fn canonical_key(a: usize, b: usize, off: Cell, class: String) -> (usize, usize, Cell, String) {
    let fwd = (a, b, off);
    let rev = (b, a, [-off[0], -off[1]]);
    let (x, y, o) = if fwd <= rev { fwd } else { rev };
    (x, y, o, class)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Index in Z² of the subgroup generated by `vs` (0 when rank < 2): the gcd
/// of all 2×2 minors.
pub fn winding_index(vs: &[[i64; 2]]) -> i64 {
    let mut g = 0;
    for i in 0..vs.len() {
        for j in 0..i {
            g = gcd(g, vs[i][0] * vs[j][1] - vs[i][1] * vs[j][0]);
            if g == 1 {
                return 1;
            }
        }
    }
    g
}

/// Largest `k ∈ {1,2,3,4,6}` such that rotation by `2π/k` about `center`
/// maps the patch of radius `patch_radius` into the lattice.
pub fn detect_rotational_symmetry(lattice: &PlaneLattice, center: Point, patch_radius: f64) -> SymmetryOrder {
    detect_symmetry_with(lattice, center, patch_radius, false)
}

/// As [`detect_rotational_symmetry`], optionally requiring bond classes
/// and site classes to be preserved.
pub fn detect_symmetry_with(
    lattice: &PlaneLattice,
    center: Point,
    patch_radius: f64,
    preserve_classes: bool,
) -> SymmetryOrder {
    let radius = patch_radius.max(3.0 * geom::norm(lattice.basis[0]).max(geom::norm(lattice.basis[1])));
    for k in [6u32, 4, 3, 2] {
        if rotation_maps_patch(lattice, center, radius, k, preserve_classes) {
            return SymmetryOrder { k, center };
        }
    }
    SymmetryOrder { k: 1, center }
}

pub(crate) fn cells_within(lattice: &PlaneLattice, center: Point, radius: f64) -> Vec<Cell> {
    let f = lattice.cart_to_frac(center);
    let [w1, w2] = lattice.basis;
    let area = geom::det(w1, w2).abs();
    // Reach in cell units along each basis direction.
    let r0 = (radius * geom::norm(w2) / area).ceil() as i32 + 2;
    let r1 = (radius * geom::norm(w1) / area).ceil() as i32 + 2;
    let (c0, c1) = (f[0].floor() as i32, f[1].floor() as i32);
    let mut cells = Vec::new();
    for i in c0 - r0..=c0 + r0 {
        for j in c1 - r1..=c1 + r1 {
            cells.push([i, j]);
        }
    }
    cells
}

fn rotation_maps_patch(lattice: &PlaneLattice, center: Point, radius: f64, k: u32, classes: bool) -> bool {
    let angle = TAU / f64::from(k);
    let rot = |p: Point| geom::rotate_about(p, center, angle);
    let counts = lattice.bond_key_counts(classes);
    for cell in cells_within(lattice, center, radius) {
        for s in 0..lattice.sites.len() {
            let p = lattice.site_position(s, cell);
            if geom::dist(p, center) > radius {
                continue;
            }
            match lattice.locate_site(rot(p)) {
                Some((t, _)) if !classes || lattice.sites[t].class == lattice.sites[s].class => {}
                _ => return false,
            }
        }
        for (bi, b) in lattice.bonds.iter().enumerate() {
            let (p, q) = lattice.bond_segment(bi, cell);
            if geom::dist(p, center) > radius || geom::dist(q, center) > radius {
                continue;
            }
            let (Some((sa, ca)), Some((sb, cb))) = (lattice.locate_site(rot(p)), lattice.locate_site(rot(q))) else {
                return false;
            };
            let class = if classes { b.class.clone() } else { String::new() };
            let original = canonical_key(b.a, b.b, b.offset, class.clone());
            let image = canonical_key(sa, sb, [cb[0] - ca[0], cb[1] - ca[1]], class);
            if counts.get(&image) != counts.get(&original) {
                return false;
            }
        }
    }
    true
}

/// Candidate rotation centres: sites, bond midpoints and a coarse grid of
/// fractional points (covers face centres of all built-ins).
pub fn candidate_centers(lattice: &PlaneLattice) -> Vec<Point> {
    let mut v = Vec::new();
    for s in 0..lattice.sites.len() {
        v.push(lattice.site_position(s, [0, 0]));
    }
    for b in 0..lattice.bonds.len() {
        let (p, q) = lattice.bond_segment(b, [0, 0]);
        v.push(geom::scale(geom::add(p, q), 0.5));
    }
    for i in 0..12 {
        for j in 0..12 {
            v.push(lattice.frac_to_cart([f64::from(i) / 12.0, f64::from(j) / 12.0]));
        }
    }
    v
}

// ---------------------------------------------------------------------------
// Built-ins

fn site(id: &str, pos: Point) -> Site {
    Site { id: id.into(), pos, class: "site".into() }
}

fn bond(id: &str, a: usize, b: usize, offset: Cell, class: &str) -> Bond {
    Bond { id: id.into(), a, b, offset, class: class.into() }
}

pub fn builtin(name: &str) -> Option<PlaneLattice> {
    let s3 = 3f64.sqrt();
    let hex_basis = [[s3, 0.0], [s3 / 2.0, 1.5]];
    let hex_sites = || vec![site("A", [1.0 / 3.0, 1.0 / 3.0]), site("B", [2.0 / 3.0, 2.0 / 3.0])];
    let hex_bonds = || {
        vec![
            bond("ab", 0, 1, [0, 0], "30deg"),
            bond("ab1", 0, 1, [-1, 0], "150deg"),
            bond("ab2", 0, 1, [0, -1], "90deg"),
        ]
    };
    let lattice = match name {
        "square" => PlaneLattice {
            name: name.into(),
            basis: [[1.0, 0.0], [0.0, 1.0]],
            sites: vec![site("0", [0.0, 0.0])],
            bonds: vec![bond("h", 0, 0, [1, 0], "horizontal"), bond("v", 0, 0, [0, 1], "vertical")],
            planar: true,
            center: [0.0, 0.0],
        },
        "triangular" => PlaneLattice {
            name: name.into(),
            basis: [[1.0, 0.0], [0.5, s3 / 2.0]],
            sites: vec![site("0", [0.0, 0.0])],
            bonds: vec![
                bond("e1", 0, 0, [1, 0], "0deg"),
                bond("e2", 0, 0, [0, 1], "60deg"),
                bond("e3", 0, 0, [-1, 1], "120deg"),
            ],
            planar: true,
            center: [0.0, 0.0],
        },
        "hexagonal" => PlaneLattice {
            name: name.into(),
            basis: hex_basis,
            sites: hex_sites(),
            bonds: hex_bonds(),
            planar: true,
            center: [0.0, 0.0],
        },
        "kagome" => PlaneLattice {
            name: name.into(),
            basis: [[2.0, 0.0], [1.0, s3]],
            sites: vec![site("0", [0.0, 0.0]), site("1", [0.5, 0.0]), site("2", [0.0, 0.5])],
            bonds: vec![
                bond("01", 0, 1, [0, 0], "0deg"),
                bond("02", 0, 2, [0, 0], "60deg"),
                bond("12", 1, 2, [0, 0], "120deg"),
                bond("10", 1, 0, [1, 0], "0deg"),
                bond("20", 2, 0, [0, 1], "60deg"),
                bond("12b", 1, 2, [1, -1], "120deg"),
            ],
            planar: true,
            center: [1.5, s3 / 2.0],
        },
        // Hexagonal lattice with a vertex C at every hexagon centre. Around
        // the origin the hexagon corners are, counterclockwise from 30°:
        // A[0,0], B[-1,0], A[-1,0], B[-1,-1], A[0,-1], B[0,-1].
        "fig1-left" => {
            let mut sites = hex_sites();
            sites.push(site("C", [0.0, 0.0]));
            let mut bonds = hex_bonds();
            // Spokes to corners 0, 1, 3, 4: invariant under the half turn only.
            bonds.push(bond("c0", 2, 0, [0, 0], "spoke"));
            bonds.push(bond("c1", 2, 1, [-1, 0], "spoke"));
            bonds.push(bond("c3", 2, 1, [-1, -1], "spoke"));
            bonds.push(bond("c4", 2, 0, [0, -1], "spoke"));
            PlaneLattice { name: name.into(), basis: hex_basis, sites, bonds, planar: true, center: [0.0, 0.0] }
        }
        "fig1-right" => {
            let mut sites = hex_sites();
            sites.push(site("C", [0.0, 0.0]));
            let mut bonds = hex_bonds();
            // Spokes to three consecutive corners: one mirror line, no rotation.
            bonds.push(bond("c0", 2, 0, [0, 0], "spoke"));
            bonds.push(bond("c1", 2, 1, [-1, 0], "spoke"));
            bonds.push(bond("c2", 2, 0, [-1, 0], "spoke"));
            PlaneLattice { name: name.into(), basis: hex_basis, sites, bonds, planar: true, center: [0.0, 0.0] }
        }
        _ => return None,
    };
    Some(lattice)
}

// ---------------------------------------------------------------------------
// JSON file format

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Id {
    Num(u64),
    Str(String),
}

impl Id {
    fn text(&self) -> String {
        match self {
            Id::Num(n) => n.to_string(),
            Id::Str(s) => s.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SiteEntry {
    id: Id,
    pos: Point,
}

#[derive(Debug, Serialize, Deserialize)]
struct BondEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<Id>,
    a: Id,
    b: Id,
    offset: Cell,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class: Option<String>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
struct LatticeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    basis: [Point; 2],
    sites: Vec<SiteEntry>,
    bonds: Vec<BondEntry>,
    /// Site id → class label.
    #[serde(default)]
    site_classes: BTreeMap<String, String>,
    #[serde(default = "default_true")]
    planar: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    center: Option<Point>,
}

impl LatticeFile {
    fn into_lattice(self) -> Result<PlaneLattice> {
        let mut index = HashMap::new();
        let mut sites = Vec::with_capacity(self.sites.len());
        for (i, s) in self.sites.iter().enumerate() {
            let id = s.id.text();
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::InvalidSpec(format!("duplicate site id {id}")));
            }
            let class = self.site_classes.get(&id).cloned().unwrap_or_else(|| "site".into());
            sites.push(Site { id, pos: s.pos, class });
        }
        let lookup = |id: &Id| {
            index
                .get(&id.text())
                .copied()
                .ok_or_else(|| Error::InvalidSpec(format!("bond endpoint {} is not a site", id.text())))
        };
        let mut bonds = Vec::with_capacity(self.bonds.len());
        for (i, b) in self.bonds.iter().enumerate() {
            bonds.push(Bond {
                id: b.id.as_ref().map_or_else(|| i.to_string(), Id::text),
                a: lookup(&b.a)?,
                b: lookup(&b.b)?,
                offset: b.offset,
                class: b.class.clone().unwrap_or_else(|| "bond".into()),
            });
        }
        Ok(PlaneLattice {
            name: self.name.unwrap_or_else(|| "custom".into()),
            basis: self.basis,
            sites,
            bonds,
            planar: self.planar,
            center: self.center.unwrap_or([0.0, 0.0]),
        })
    }
}

impl From<&PlaneLattice> for LatticeFile {
    fn from(l: &PlaneLattice) -> Self {
        LatticeFile {
            name: Some(l.name.clone()),
            basis: l.basis,
            sites: l.sites.iter().map(|s| SiteEntry { id: Id::Str(s.id.clone()), pos: s.pos }).collect(),
            bonds: l
                .bonds
                .iter()
                .map(|b| BondEntry {
                    id: Some(Id::Str(b.id.clone())),
                    a: Id::Str(l.sites[b.a].id.clone()),
                    b: Id::Str(l.sites[b.b].id.clone()),
                    offset: b.offset,
                    class: Some(b.class.clone()),
                })
                .collect(),
            site_classes: l.sites.iter().map(|s| (s.id.clone(), s.class.clone())).collect(),
            planar: l.planar,
            center: Some(l.center),
        }
    }
}
