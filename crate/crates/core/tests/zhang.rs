mod common;

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use perclab::engine::{
    cluster_index, dual_configuration, sample_configuration, Configuration, Mode, PercolationParams,
};
use perclab::instance::FiniteInstance;
use perclab::lattice::builtin;
use perclab::rng::stream;
use perclab::zhang::*;
use proptest::prelude::*;

use common::{oracle_arc, oracle_flags};

fn square_setup(r: f64, m: f64) -> ZhangSetup {
    ZhangSetup::new(&builtin("square").unwrap(), r, m).unwrap()
}

fn config(open: Vec<bool>) -> Configuration {
    Configuration { mode: Mode::Bond, open }
}

fn random_config(inst: &FiniteInstance, p: f64, seed: u64, r: u64) -> Configuration {
    sample_configuration(inst, &PercolationParams::uniform(Mode::Bond, p), &mut stream(seed, 99, r)).unwrap()
}

#[test]
fn all_open_and_all_closed() {
    let s = square_setup(3.5, 7.0);
    let arcs = arc_partition(s.radius(), 2, FRAC_PI_2 + 0.01).unwrap();
    let has_crossing = |inst: &FiniteInstance| {
        let mut v = vec![false; arcs.num_arcs()];
        for c in &inst.disc.as_ref().unwrap().crossings {
            v[arcs.arc_of(c.angle) - 1] = true;
        }
        v
    };
    let n = s.instance.num_edges();
    let open = leave_events(&s.instance, &config(vec![true; n]), &arcs).unwrap();
    assert_eq!(open.primal, has_crossing(&s.instance));
    assert!(open.primal.iter().all(|&x| x));
    assert!(open.dual.iter().all(|&x| !x));
    let closed = leave_events(&s.instance, &config(vec![false; n]), &arcs).unwrap();
    assert!(closed.primal.iter().all(|&x| !x));
    assert_eq!(closed.dual, has_crossing(s.dual()));
}

#[test]
fn flags_match_path_enumeration_on_miniature() {
    let s = square_setup(2.0, 4.0);
    let arcs = arc_partition(s.radius(), 2, FRAC_PI_2 + 0.01).unwrap();
    for r in 0..1000 {
        let c = random_config(&s.instance, 0.5, 1, r);
        let got = leave_events(&s.instance, &c, &arcs).unwrap();
        let d = dual_configuration(&s.instance, &c).unwrap();
        assert_eq!(got.primal, oracle_flags(&s.instance, &c.open, &arcs), "replica {r}");
        assert_eq!(got.dual, oracle_flags(s.dual(), &d.open, &arcs), "replica {r}");
    }
}

/// Primal edges whose state can influence any flag: crossings and outside
/// edges of either lattice (dual edges mapped back to their partners).
fn relevant_edges(s: &ZhangSetup) -> Vec<usize> {
    let link = s.instance.dual.as_ref().unwrap();
    let mut partner = vec![0; link.instance.num_edges()];
    for (e, &f) in link.primal_to_dual.iter().enumerate() {
        partner[f as usize] = e;
    }
    let mut set = BTreeSet::new();
    for (inst, map) in [(&s.instance, None), (&link.instance, Some(&partner))] {
        let disc = inst.disc.as_ref().unwrap();
        let lift = |e: usize| map.map_or(e, |m| m[e]);
        for c in &disc.crossings {
            set.insert(lift(c.edge as usize));
        }
        for (e, edge) in inst.edges.iter().enumerate() {
            if disc.outside[e] && !(disc.far[edge.u as usize] && disc.far[edge.v as usize]) {
                set.insert(lift(e));
            }
        }
    }
    set.into_iter().collect()
}

#[test]
fn four_event_matches_exhaustive_enumeration() {
    let s = square_setup(0.7, 1.4);
    let rel = relevant_edges(&s);
    assert!(rel.len() <= 20, "{} relevant edges", rel.len());
    let arcs = arc_partition(s.radius(), 2, FRAC_PI_2 + 0.01).unwrap();
    let p: f64 = 0.5;
    let n = s.instance.num_edges();
    let (mut exact_e, mut exact_l) = ([0.0; 2], vec![0.0; 4]);
    for mask in 0u64..(1 << rel.len()) {
        let mut open = vec![false; n];
        for (bit, &e) in rel.iter().enumerate() {
            open[e] = mask >> bit & 1 == 1;
        }
        let k = mask.count_ones() as i32;
        let w = p.powi(k) * (1.0 - p).powi(rel.len() as i32 - k);
        let f = leave_events(&s.instance, &config(open), &arcs).unwrap();
        for j in 1..=2 {
            let at = |i: usize| (i - 1) % 4;
            if f.dual[at(j)] && f.primal[at(j + 1)] && f.dual[at(j + 2)] && f.primal[at(j + 3)] {
                exact_e[j - 1] += w;
            }
        }
        for i in 0..4 {
            exact_l[i] += w * f64::from(u8::from(f.primal[i]));
        }
    }
    assert!(exact_e[0] > 0.0 && exact_e[1] > 0.0);
    let flags = s.sample(p, 20_000, 5).unwrap();
    for j in 1..=2 {
        let rep = four_event_from_flags(&s, &flags, &arcs, Some(j), p).unwrap();
        let z = (rep.p_e.mean - exact_e[j - 1]).abs() / rep.p_e.stderr;
        assert!(z < 3.0, "j={j}: {} vs exact {} (z={z:.2})", rep.p_e.mean, exact_e[j - 1]);
        for i in 0..4 {
            let z = (rep.p_l[i].mean - exact_l[i]).abs() / rep.p_l[i].stderr;
            assert!(z < 3.0, "P(L_{}) {} vs exact {}", i + 1, rep.p_l[i].mean, exact_l[i]);
        }
    }
}

#[test]
fn rotation_permutes_flags() {
    let s = square_setup(4.0, 16.0);
    let map = s.instance.rotation_edge_map(4).expect("square disc is 4-fold symmetric");
    for (k, phi) in [(4, FRAC_PI_4 + 0.013), (2, FRAC_PI_2 + 0.013)] {
        let arcs = arc_partition(s.radius(), k, phi).unwrap();
        let turns = 4 / k as usize;
        let na = arcs.num_arcs();
        for r in 0..50 {
            let c = random_config(&s.instance, 0.5, 2, r);
            let mut rotated = c.clone();
            for _ in 0..turns {
                rotated = permute_configuration(&rotated, &map);
            }
            let a = leave_events(&s.instance, &c, &arcs).unwrap();
            let b = leave_events(&s.instance, &rotated, &arcs).unwrap();
            for i in 0..na {
                assert_eq!(b.primal[(i + 2) % na], a.primal[i], "k={k} replica {r} arc {}", i + 1);
                assert_eq!(b.dual[(i + 2) % na], a.dual[i], "k={k} replica {r} arc {}", i + 1);
            }
        }
    }
}

#[test]
fn flag_union_is_escape_from_disc() {
    let s = square_setup(3.0, 9.0);
    let disc = s.instance.disc.as_ref().unwrap();
    let arcs = arc_partition(s.radius(), 2, 1.3).unwrap();
    for r in 0..300 {
        let c = random_config(&s.instance, 0.55, 3, r);
        let f = leave_events(&s.instance, &c, &arcs).unwrap();
        // Clusters of the outside subgraph, via the engine's union-find.
        let outside: Vec<bool> = (0..c.len()).map(|e| c.open[e] && disc.outside[e]).collect();
        let idx = cluster_index(&s.instance, &config(outside)).unwrap();
        let far: BTreeSet<usize> =
            (0..s.instance.num_vertices()).filter(|&v| disc.far[v]).map(|v| idx.cluster_of(v).unwrap()).collect();
        let direct = disc
            .crossings
            .iter()
            .any(|x| c.open[x.edge as usize] && far.contains(&idx.cluster_of(x.outer as usize).unwrap()));
        assert_eq!(f.primal.iter().any(|&x| x), direct, "replica {r}");
    }
}

#[test]
fn witnesses_never_cross() {
    let s = square_setup(3.0, 12.0);
    let dual = s.dual();
    let pc = s.primal_crossings();
    let dc = s.dual_crossings();
    let arcs = arc_partition(s.radius(), 2, FRAC_PI_2 + 0.02).unwrap();
    let mut audited = 0;
    for r in 0..200 {
        let c = random_config(&s.instance, 0.5, 4, r);
        let d = dual_configuration(&s.instance, &c).unwrap();
        for j in 1..=4 {
            let pj = j % 4 + 1;
            let Some(pw) = (0..pc.len())
                .filter(|&i| arcs.arc_of(pc[i].angle) == pj)
                .find_map(|i| escape_witness(&s.instance, &c.open, i))
            else {
                continue;
            };
            let Some(dw) =
                (0..dc.len()).filter(|&i| arcs.arc_of(dc[i].angle) == j).find_map(|i| escape_witness(dual, &d.open, i))
            else {
                continue;
            };
            assert!(pw.iter().all(|&e| c.open[e as usize]) && dw.iter().all(|&e| d.open[e as usize]));
            assert!(!paths_cross(&s.instance, &pw, dual, &dw), "replica {r}, j={j}");
            audited += 1;
        }
    }
    assert!(audited > 50);
}

#[test]
fn witnesses_agree_with_flags() {
    let s = square_setup(2.5, 7.5);
    for r in 0..100 {
        let c = random_config(&s.instance, 0.5, 6, r);
        let flags = s.flags(&c).unwrap();
        for (i, &f) in flags.primal.iter().enumerate() {
            let w = escape_witness(&s.instance, &c.open, i);
            assert_eq!(w.is_some(), f);
            if let Some(path) = w {
                let disc = s.instance.disc.as_ref().unwrap();
                assert!(path[1..].iter().all(|&e| disc.outside[e as usize]));
            }
        }
    }
}

#[test]
fn q_on_crossing_is_rejected() {
    let s = square_setup(3.0, 6.0);
    let angle = s.primal_crossings()[0].angle;
    let arcs = arc_partition(s.radius(), 2, angle).unwrap();
    let err = leave_events(&s.instance, &config(vec![true; s.instance.num_edges()]), &arcs).unwrap_err();
    assert!(matches!(err, perclab::Error::QOnEdge { index: 1 }));
}

#[test]
fn balance_endpoints() {
    let s = square_setup(4.0, 16.0);
    let flags = s.sample(0.5, 2000, 8).unwrap();
    let rep = balance_from_flags(&s, &flags, 0.5, 2).unwrap();
    let first = rep.jumps.first().unwrap();
    let last = rep.jumps.last().unwrap();
    assert_eq!(first.phi, 0.0);
    assert_eq!(first.p_not_l1, 1.0);
    assert!(first.p_not_l1 >= first.p_not_l2);
    assert!((last.phi - PI).abs() < 1e-12);
    assert_eq!(last.p_not_l2, 1.0);
    assert!(rep.jumps.windows(2).all(|w| w[1].p_not_l1 <= w[0].p_not_l1 && w[1].p_not_l2 >= w[0].p_not_l2));
    assert!(rep.phi_star > 0.0 && rep.phi_star <= PI);
    assert!(rep.jump_bound_pass);
}

#[test]
fn harris_synthetic_flags() {
    // Independent fair bits: intersection equals the product up to noise.
    let mut rng = stream(11, 0, 0);
    let rows: Vec<Vec<bool>> =
        (0..20_000).map(|_| (0..4).map(|_| rand::Rng::random::<f64>(&mut rng) < 0.7).collect()).collect();
    let rep = harris_product_check(&rows).unwrap();
    assert!(rep.pass);
    assert!((rep.intersection - rep.product).abs() < 4.0 * rep.stderr.max(1e-3));
    // Identical events: the intersection is the single-event probability.
    let rows: Vec<Vec<bool>> = (0..10_000).map(|i| vec![i % 3 == 0; 4]).collect();
    let rep = harris_product_check(&rows).unwrap();
    let single = rows.iter().filter(|r| r[0]).count() as f64 / rows.len() as f64;
    assert!((rep.intersection - single).abs() < 1e-12);
    assert!((rep.product - single.powi(4)).abs() < 1e-12);
    assert!(rep.pass);
}

#[test]
fn four_event_csv_layout() {
    let s = square_setup(2.0, 8.0);
    let arcs = arc_partition(s.radius(), 2, FRAC_PI_2 + 0.01).unwrap();
    let flags = s.sample(0.5, 200, 1).unwrap();
    let rep = four_event_from_flags(&s, &flags, &arcs, None, 0.5).unwrap();
    assert!((rep.epsilon - 1e-4).abs() < 1e-15);
    let mut buf = Vec::new();
    rep.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "R,M,phi,i,P_Li,P_Li_star,stderr,stderr_star");
    assert_eq!(lines.len(), 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arcs_rotate_by_two(k in prop::sample::select(vec![2u32, 3, 4, 6]), frac in 0.01f64..0.99, theta in 0.0f64..TAU) {
        let sector = TAU / f64::from(k);
        let arcs = arc_partition(1.0, k, frac * sector).unwrap();
        let rotated = (theta + sector) % TAU;
        let na = arcs.num_arcs();
        // Away from endpoints, rotation by one sector shifts the arc index by two.
        let near_q = arcs.q.iter().any(|&q| ((theta - q).rem_euclid(TAU)).min((q - theta).rem_euclid(TAU)) < 1e-9);
        prop_assume!(!near_q);
        prop_assert_eq!(arcs.arc_of(rotated), (arcs.arc_of(theta) + 1) % na + 1);
        prop_assert_eq!(arcs.arc_of(theta), oracle_arc(&arcs.q, theta));
    }

    #[test]
    fn l1_grows_with_phi(seed in 0u64..1000, a in 0.05f64..3.0, b in 0.05f64..3.0) {
        let s = square_setup(2.5, 5.0);
        let c = random_config(&s.instance, 0.5, seed, 0);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (Ok(x), Ok(y)) = (arc_partition(s.radius(), 2, lo), arc_partition(s.radius(), 2, hi)) else { unreachable!() };
        let (Ok(fx), Ok(fy)) = (leave_events(&s.instance, &c, &x), leave_events(&s.instance, &c, &y)) else {
            // A random angle on a crossing is rejected; nothing to compare.
            return Ok(());
        };
        prop_assert!(!fx.primal[0] || fy.primal[0]);
        prop_assert!(!fx.dual[0] || fy.dual[0]);
        prop_assert!(!fy.primal[1] || fx.primal[1]);
    }
}
