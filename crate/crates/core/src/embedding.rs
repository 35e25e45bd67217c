//! Rotation systems and face tracing.
//!
//! Works on any periodic drawing given as vertices plus edges carrying an
//! unwrapped displacement vector and an integer period shift: the
//! fundamental domain of a [`PlaneLattice`] (shift = bond offset) and torus
//! instances (shift = wrap count) use the same tracer.

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::instance::FiniteInstance;
use crate::lattice::{Cell, PlaneLattice};

#[derive(Debug, Clone, Copy)]
struct HalfEdge {
    origin: u32,
    vector: Point,
    shift: Cell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Half-edge `2e` runs along edge `e` forwards, `2e + 1` backwards.
    pub half_edges: Vec<u32>,
    /// Period shift of each half-edge origin relative to the first one.
    pub origin_shift: Vec<Cell>,
    /// Unwrapped origin positions, first origin at its stored position.
    pub corners: Vec<Point>,
    pub centroid: Point,
}

impl Face {
    pub fn len(&self) -> usize {
        self.half_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.half_edges.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Embedding {
    /// Outgoing half-edges of each vertex in counterclockwise order.
    pub rotation: Vec<Vec<u32>>,
    pub faces: Vec<Face>,
    /// Face to the left of each half-edge.
    pub face_of: Vec<u32>,
    /// Index of each half-edge inside its face's list.
    pub slot: Vec<u32>,
    pub num_vertices: usize,
    pub num_edges: usize,
}

impl Embedding {
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices as i64 - self.num_edges as i64 + self.faces.len() as i64
    }
}

fn trace(positions: &[Point], half: &[HalfEdge]) -> Result<Embedding> {
    let nv = positions.len();
    let mut rotation: Vec<Vec<u32>> = vec![Vec::new(); nv];
    for (h, he) in half.iter().enumerate() {
        rotation[he.origin as usize].push(h as u32);
    }
    let mut pos_in_rotation = vec![0u32; half.len()];
    for list in rotation.iter_mut() {
        list.sort_by(|&a, &b| geom::angle(half[a as usize].vector).total_cmp(&geom::angle(half[b as usize].vector)));
        for w in list.windows(2) {
            let (a, b) = (half[w[0] as usize].vector, half[w[1] as usize].vector);
            if (geom::angle(a) - geom::angle(b)).abs() < 1e-12 {
                return Err(Error::InvalidSpec("two edges leave a vertex in the same direction".into()));
            }
        }
        for (i, &h) in list.iter().enumerate() {
            pos_in_rotation[h as usize] = i as u32;
        }
    }
    // Face on the left: at the head, take the half-edge clockwise from the twin.
    let next = |h: u32| -> u32 {
        let twin = h ^ 1;
        let at = &rotation[half[twin as usize].origin as usize];
        let i = pos_in_rotation[twin as usize] as usize;
        at[(i + at.len() - 1) % at.len()]
    };
    let mut face_of = vec![u32::MAX; half.len()];
    let mut slot = vec![0u32; half.len()];
    let mut faces = Vec::new();
    for start in 0..half.len() as u32 {
        if face_of[start as usize] != u32::MAX {
            continue;
        }
        let id = faces.len() as u32;
        let mut face =
            Face { half_edges: Vec::new(), origin_shift: Vec::new(), corners: Vec::new(), centroid: [0.0, 0.0] };
        let mut shift = [0, 0];
        let mut at = positions[half[start as usize].origin as usize];
        let mut h = start;
        loop {
            face_of[h as usize] = id;
            slot[h as usize] = face.half_edges.len() as u32;
            face.half_edges.push(h);
            face.origin_shift.push(shift);
            face.corners.push(at);
            let he = half[h as usize];
            shift = [shift[0] + he.shift[0], shift[1] + he.shift[1]];
            at = geom::add(at, he.vector);
            h = next(h);
            if h == start {
                break;
            }
        }
        if shift != [0, 0] {
            return Err(Error::InvalidSpec("a face winds around the period lattice".into()));
        }
        let n = face.corners.len() as f64;
        face.centroid = face.corners.iter().fold([0.0, 0.0], |acc, &c| geom::add(acc, geom::scale(c, 1.0 / n)));
        faces.push(face);
    }
    Ok(Embedding { rotation, faces, face_of, slot, num_vertices: nv, num_edges: half.len() / 2 })
}

/// Faces of the lattice quotient (one fundamental domain).
pub fn trace_faces(lattice: &PlaneLattice) -> Result<Embedding> {
    if !lattice.planar {
        return Err(Error::NonPlanar("face tracing"));
    }
    let positions: Vec<Point> = (0..lattice.sites.len()).map(|s| lattice.site_position(s, [0, 0])).collect();
    let mut half = Vec::with_capacity(2 * lattice.bonds.len());
    for (i, b) in lattice.bonds.iter().enumerate() {
        let v = lattice.bond_vector(i);
        half.push(HalfEdge { origin: b.a as u32, vector: v, shift: b.offset });
        half.push(HalfEdge { origin: b.b as u32, vector: geom::scale(v, -1.0), shift: [-b.offset[0], -b.offset[1]] });
    }
    let emb = trace(&positions, &half)?;
    check_euler(&emb)?;
    Ok(emb)
}

/// Faces of a torus instance, using the drawn edge vectors.
pub fn trace_instance_faces(inst: &FiniteInstance) -> Result<Embedding> {
    let mut half = Vec::with_capacity(2 * inst.num_edges());
    for (i, e) in inst.edges.iter().enumerate() {
        let v = inst.edge_vector(i);
        half.push(HalfEdge { origin: e.u, vector: v, shift: e.wrap });
        half.push(HalfEdge { origin: e.v, vector: geom::scale(v, -1.0), shift: [-e.wrap[0], -e.wrap[1]] });
    }
    trace(&inst.positions, &half)
}

fn check_euler(emb: &Embedding) -> Result<()> {
    if emb.euler_characteristic() != 0 {
        return Err(Error::InvalidSpec(format!(
            "V − E + F = {} on the torus quotient; the drawing is not a plane lattice",
            emb.euler_characteristic()
        )));
    }
    Ok(())
}

/// Head vertex of half-edge `h` in an embedding traced from `lattice`.
pub fn half_edge_target(lattice: &PlaneLattice, h: u32) -> usize {
    let b = &lattice.bonds[(h / 2) as usize];
    if h.is_multiple_of(2) {
        b.b
    } else {
        b.a
    }
}

/// Tail vertex of half-edge `h` in an embedding traced from `lattice`.
pub fn half_edge_origin(lattice: &PlaneLattice, h: u32) -> usize {
    half_edge_target(lattice, h ^ 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::instantiate_torus;
    use crate::lattice::builtin;

    fn face_sizes(name: &str) -> Vec<usize> {
        let mut v: Vec<usize> = trace_faces(&builtin(name).unwrap()).unwrap().faces.iter().map(Face::len).collect();
        v.sort();
        v
    }

    #[test]
    fn faces_per_cell() {
        assert_eq!(face_sizes("square"), vec![4]);
        assert_eq!(face_sizes("hexagonal"), vec![6]);
        assert_eq!(face_sizes("triangular"), vec![3, 3]);
        assert_eq!(face_sizes("kagome"), vec![3, 3, 6]);
        assert_eq!(face_sizes("fig1-left"), vec![3, 3, 4, 4]);
        assert_eq!(face_sizes("fig1-right"), vec![3, 3, 6]);
    }

    #[test]
    fn every_half_edge_in_exactly_one_face() {
        for name in crate::lattice::BUILTINS {
            let emb = trace_faces(&builtin(name).unwrap()).unwrap();
            let total: usize = emb.faces.iter().map(Face::len).sum();
            assert_eq!(total, 2 * emb.num_edges);
            assert!(emb.face_of.iter().all(|&f| (f as usize) < emb.faces.len()));
        }
    }

    #[test]
    fn torus_instances_satisfy_euler() {
        for name in crate::lattice::BUILTINS {
            let inst = instantiate_torus(&builtin(name).unwrap(), 3, 3).unwrap();
            let emb = trace_instance_faces(&inst).unwrap();
            assert_eq!(emb.euler_characteristic(), 0, "{name}");
        }
    }

    #[test]
    fn faces_are_counterclockwise() {
        for name in crate::lattice::BUILTINS {
            for f in trace_faces(&builtin(name).unwrap()).unwrap().faces {
                let n = f.corners.len();
                let area: f64 = (0..n).map(|i| geom::cross(f.corners[i], f.corners[(i + 1) % n])).sum();
                assert!(area > 0.0, "{name}");
            }
        }
    }

    #[test]
    fn non_planar_input_rejected() {
        let mut l = builtin("square").unwrap();
        l.planar = false;
        assert!(matches!(trace_faces(&l), Err(Error::NonPlanar(_))));
    }
}
