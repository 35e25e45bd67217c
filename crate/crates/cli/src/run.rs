//! Subcommand execution. Each run yields a JSON result, CSV detail and
//! whether the numerics converged.

use perclab::dual::{dual, matching_graph, Check};
use perclab::engine::{Mode, PercolationParams};
use perclab::error::{Error, Result};
use perclab::estimators::{duality_sum_check, estimate_pc, theta_proxy, PcEstimate, PcOptions};
use perclab::fk::{fk_box, fk_run, fk_threshold_probe, FKParams, FKSampleRun};
use perclab::instance::instantiate_torus;
use perclab::lattice::{PlaneLattice, BUILTINS};
use perclab::random_tri::{tr_connectivity_equivalence, tr_pc_estimate};
use perclab::rng::label_id;
use perclab::verify::{self, Checks};
use perclab::zhang::{
    arc_partition, balance_from_flags, four_event_from_flags, harris_disc_check, ZhangSetup, MIN_HARRIS_REPLICAS,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;

pub struct Outcome {
    pub result: Value,
    pub csv: Vec<u8>,
    /// Set when an iterative estimate stopped short of its target.
    pub unconverged: Option<String>,
}

fn outcome(result: impl Serialize, csv: Vec<u8>) -> Result<Outcome> {
    Ok(Outcome { result: serde_json::to_value(result)?, csv, unconverged: None })
}

fn table<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn progress(msg: &str) {
    eprintln!("perclab: {msg}");
}

pub fn run(command: &Command, seed: u64) -> Result<Outcome> {
    match command {
        Command::Lattice(a) => lattice(a),
        Command::Pc(a) => pc(a, seed),
        Command::DualitySum(a) => duality_sum(a, seed),
        Command::Theta(a) => theta(a, seed),
        Command::Zhang(a) => zhang(a, seed),
        Command::TriR(a) => tri_r(a, seed),
        Command::Fk(a) => fk(a, seed),
        Command::Verify(a) => verify(a, seed),
    }
}

fn lattice_value(l: &PlaneLattice) -> Result<Value> {
    Ok(serde_json::from_str(&l.to_json())?)
}

fn bond_rows(l: &PlaneLattice) -> impl Iterator<Item = [String; 6]> + '_ {
    l.bonds.iter().map(|b| {
        [
            b.id.clone(),
            b.a.to_string(),
            b.b.to_string(),
            b.offset[0].to_string(),
            b.offset[1].to_string(),
            b.class.clone(),
        ]
    })
}

const BOND_HEADER: [&str; 6] = ["id", "a", "b", "offset_x", "offset_y", "class"];

fn lattice(a: &LatticeArgs) -> Result<Outcome> {
    let l = PlaneLattice::build(&a.lattice)?;
    match a.action {
        LatticeAction::Info => {
            let degrees: Vec<usize> = (0..l.sites.len()).map(|s| l.degree(s)).collect();
            let result = json!({
                "name": l.name,
                "planar": l.planar,
                "sites": l.sites.len(),
                "bonds": l.bonds.len(),
                "degrees": degrees,
                "bond_classes": l.bond_classes(),
                "site_classes": l.site_classes(),
                "lattice": lattice_value(&l)?,
            });
            outcome(result, table(BOND_HEADER, bond_rows(&l))?)
        }
        LatticeAction::Dual => {
            let pair = dual(&l)?;
            let links: Vec<Value> =
                pair.links.iter().map(|k| json!({"primal": k.primal, "dual": k.dual, "shift": k.shift})).collect();
            let result = json!({"primal": l.name, "dual": lattice_value(&pair.dual)?, "links": links});
            let rows = pair.links.iter().map(|k| {
                [
                    pair.primal.bonds[k.primal].id.clone(),
                    pair.dual.bonds[k.dual].id.clone(),
                    k.shift[0].to_string(),
                    k.shift[1].to_string(),
                ]
            });
            outcome(result, table(["primal_bond", "dual_bond", "shift_x", "shift_y"], rows)?)
        }
        LatticeAction::Matching => {
            let m = matching_graph(&l)?;
            let chords = m.bonds.len() - l.bonds.len();
            let result = json!({"lattice": l.name, "chords": chords, "matching": lattice_value(&m)?});
            let chord_graph = PlaneLattice { bonds: m.bonds[l.bonds.len()..].to_vec(), ..m.clone() };
            outcome(result, table(BOND_HEADER, bond_rows(&chord_graph))?)
        }
    }
}

fn pc_options(
    mode: Mode,
    sizes: &[usize],
    sweeps: usize,
    max_sweeps: Option<usize>,
    target_ci: Option<f64>,
    seed: u64,
) -> PcOptions {
    let mut opts = PcOptions::new(mode, sizes.to_vec(), sweeps, seed);
    opts.max_sweeps = max_sweeps.unwrap_or(sweeps).max(sweeps);
    opts.target_ci = target_ci;
    opts
}

fn root_rows<'a>(label: &'a str, e: &'a PcEstimate) -> impl Iterator<Item = [String; 5]> + 'a {
    e.roots.iter().map(move |r| {
        [label.to_string(), r.size.to_string(), r.root.to_string(), r.stderr.to_string(), r.sweeps.to_string()]
    })
}

const ROOT_HEADER: [&str; 5] = ["lattice", "size", "root", "stderr", "sweeps"];

fn unconverged(e: &PcEstimate, target: Option<f64>) -> Option<String> {
    match target {
        Some(t) if !e.converged => Some(format!("CI half-width {:.2e} above target {t:.2e}", e.ci_halfwidth)),
        _ => None,
    }
}

fn pc(a: &PcArgs, seed: u64) -> Result<Outcome> {
    let l = PlaneLattice::build(&a.lattice)?;
    let mut opts = pc_options(a.mode, &a.sizes, a.sweeps, a.max_sweeps, a.target_ci, seed);
    opts.locator = a.locator;
    progress(&format!("{} {} percolation, sizes {:?}", l.name, a.mode, a.sizes));
    let e = estimate_pc(&l, &opts)?;
    let result = json!({
        "lattice": l.name,
        "mode": a.mode,
        "p_hat": e.p_hat,
        "ci": [e.p_hat - e.ci_halfwidth, e.p_hat + e.ci_halfwidth],
        "sizes": e.sizes,
        "replicas": e.replicas,
        "seed": seed,
        "estimate": e,
    });
    let mut out = outcome(result, table(ROOT_HEADER, root_rows(&l.name, &e))?)?;
    out.unconverged = unconverged(&e, a.target_ci);
    Ok(out)
}

fn duality_sum(a: &PcArgs, seed: u64) -> Result<Outcome> {
    let l = PlaneLattice::build(&a.lattice)?;
    let mut opts = pc_options(a.mode, &a.sizes, a.sweeps, a.max_sweeps, a.target_ci, seed);
    opts.locator = a.locator;
    progress(&format!("{} {} percolation and its partner, sizes {:?}", l.name, a.mode, a.sizes));
    let s = duality_sum_check(&l, &opts)?;
    let rows: Vec<_> = root_rows(&s.lattice, &s.primal).chain(root_rows(&s.partner, &s.partner_estimate)).collect();
    let csv = table(ROOT_HEADER, rows)?;
    let mut out = outcome(&s, csv)?;
    out.unconverged = unconverged(&s.primal, a.target_ci).or_else(|| unconverged(&s.partner_estimate, a.target_ci));
    Ok(out)
}

fn theta(a: &ThetaArgs, seed: u64) -> Result<Outcome> {
    let l = PlaneLattice::build(&a.lattice)?;
    let mut points = Vec::new();
    for &p in &a.p {
        progress(&format!("theta at p = {p}"));
        points.push(theta_proxy(&l, a.mode, p, a.radius, a.margin, a.replicas, seed)?);
    }
    let rows = points.iter().map(|t| [t.p, t.radius, t.margin, t.estimate, t.stderr].map(|x| x.to_string()));
    let csv = table(["p", "R", "M", "estimate", "stderr"], rows)?;
    outcome(json!({"lattice": l.name, "mode": a.mode, "points": points}), csv)
}

fn zhang(a: &ZhangArgs, seed: u64) -> Result<Outcome> {
    let l = PlaneLattice::build(&a.lattice)?;
    let setup = ZhangSetup::new(&l, a.radius, a.margin)?;
    progress(&format!("sampling {} replicas on a disc of radius {}", a.replicas, setup.radius()));
    let flags = setup.sample(a.p, a.replicas, seed)?;
    let balance = balance_from_flags(&setup, &flags, a.p, a.k)?;
    let phi = a.phi.unwrap_or(balance.phi_star);
    let arcs = arc_partition(setup.radius(), a.k, phi)?;
    let four = four_event_from_flags(&setup, &flags, &arcs, a.j, a.p)?;
    let harris = if a.replicas >= MIN_HARRIS_REPLICAS { Some(harris_disc_check(&setup, &flags, &arcs)?) } else { None };
    let mut csv = Vec::new();
    four.write_csv(&mut csv)?;
    let result = json!({
        "lattice": l.name,
        "p": a.p,
        "balance": balance,
        "four_event": four,
        "harris": harris,
    });
    outcome(result, csv)
}

fn tri_r(a: &TriArgs, seed: u64) -> Result<Outcome> {
    let opts = pc_options(Mode::Site, &a.sizes, a.sweeps, a.max_sweeps, a.target_ci, seed);
    progress(&format!("random triangulations at r = {}, sizes {:?}", a.r, a.sizes));
    let e = tr_pc_estimate(a.r, &opts)?;
    let equivalence = if a.equivalence_replicas > 0 {
        let rep = tr_connectivity_equivalence(a.r, a.p, a.equivalence_size, a.equivalence_replicas, seed)?;
        Some(json!({"report": rep, "pass": rep.identical == rep.replicas}))
    } else {
        None
    };
    let label = format!("T_{}", a.r);
    let csv = table(ROOT_HEADER, root_rows(&label, &e))?;
    let result = json!({
        "r": a.r,
        "p_hat": e.p_hat,
        "ci": [e.p_hat - e.ci_halfwidth, e.p_hat + e.ci_halfwidth],
        "disorder": e.disorder,
        "estimate": e,
        "equivalence": equivalence,
    });
    let mut out = outcome(result, csv)?;
    out.unconverged = unconverged(&e, a.target_ci);
    Ok(out)
}

fn fk_params(a: &FkArgs, l: &PlaneLattice) -> Result<FKParams> {
    let classes = l.bond_classes();
    let per_class = [a.p1, a.p2, a.p3];
    if let Some(i) = per_class.iter().skip(classes.len()).position(Option::is_some) {
        return Err(Error::InvalidParameter(format!(
            "--p{} given but {} has {} bond classes",
            classes.len() + i + 1,
            l.name,
            classes.len()
        )));
    }
    let mut edges = PercolationParams { mode: Mode::Bond, default: a.p, by_class: Default::default() };
    for (class, p) in classes.iter().zip(per_class) {
        if let Some(p) = p {
            edges = edges.with_class(class, p);
        } else if a.p.is_none() {
            return Err(Error::MissingClass(class.clone()));
        }
    }
    Ok(FKParams { q: a.q, edges, boundary: a.boundary })
}

fn fk(a: &FkArgs, seed: u64) -> Result<Outcome> {
    let l = PlaneLattice::build(&a.lattice)?;
    let run = FKSampleRun { sweeps: a.sweeps, burn_in: a.burnin, thin: a.thin, chains: a.chains };
    if a.probe {
        progress(&format!("threshold probe for q = {} on {}, sizes {:?}", a.q, l.name, a.sizes));
        let probe = match fk_threshold_probe(a.q, &l, &a.sizes, &run, seed) {
            Err(Error::NonConvergence(msg)) => {
                return Ok(Outcome {
                    result: json!({"q": a.q, "lattice": l.name, "error": msg}),
                    csv: Vec::new(),
                    unconverged: Some(msg),
                });
            }
            other => other?,
        };
        let rows = probe.trace.iter().map(|t| {
            [
                t.size.to_string(),
                t.p.to_string(),
                t.wrap.mean.to_string(),
                t.wrap.stderr.to_string(),
                t.converged.to_string(),
            ]
        });
        let csv = table(["size", "p", "wrap_average", "stderr", "converged"], rows)?;
        return outcome(&probe, csv);
    }
    let params = fk_params(a, &l)?;
    let inst = match a.topology {
        Topology::Torus => instantiate_torus(&l, a.size, a.size)?,
        Topology::Box => fk_box(&l, a.size)?,
    };
    progress(&format!("{} chains of {} sweeps at q = {} on {} {}×{}", a.chains, a.sweeps, a.q, l.name, a.size, a.size));
    let exp = label_id(&format!("fk/{}/{:?}/{}", l.name, a.topology, a.size));
    let out = fk_run(&inst, &params, &run, seed, exp)?;
    let mut csv = Vec::new();
    out.write_trace_csv(&mut csv)?;
    let mut result = outcome(json!({"lattice": l.name, "params": params, "estimate": out.estimate}), csv)?;
    result.unconverged = out.estimate.warning.clone();
    Ok(result)
}

fn verify(a: &VerifyArgs, seed: u64) -> Result<Outcome> {
    let mut suites: Vec<(String, Checks)> = Vec::new();
    let want = |s: Suite| a.suite == s || a.suite == Suite::All;
    if want(Suite::Dual) {
        let names: Vec<String> = match &a.lattice {
            Some(spec) => vec![spec.clone()],
            None => BUILTINS.iter().map(|s| s.to_string()).collect(),
        };
        for spec in names {
            progress(&format!("dual suite on {spec}"));
            let checks = match PlaneLattice::build(&spec) {
                Ok(l) => verify::dual_suite(&l),
                // A lattice file that exists but does not describe a valid
                // plane lattice is a failed check, not a usage error.
                Err(e @ (Error::InvalidSpec(_) | Error::Json(_))) => {
                    Checks::from([("lattice_valid".to_string(), Check { pass: false, detail: e.to_string() })])
                }
                Err(e) => return Err(e),
            };
            suites.push((format!("dual/{spec}"), checks));
        }
    }
    type Runner = fn(u64) -> Checks;
    let randomized: [(Suite, &str, Runner); 4] = [
        (Suite::Engine, "engine", verify::engine_suite),
        (Suite::Zhang, "zhang", verify::zhang_suite),
        (Suite::Fk, "fk", |_| verify::fk_suite()),
        (Suite::Tri, "tri", verify::tri_suite),
    ];
    for (suite, name, f) in randomized {
        if want(suite) {
            progress(&format!("{name} suite"));
            suites.push((name.to_string(), f(seed)));
        }
    }
    let mut rows = Vec::new();
    for (suite, checks) in &suites {
        for (name, c) in checks {
            rows.push([suite.clone(), name.clone(), c.pass.to_string(), c.detail.clone()]);
        }
    }
    let failures = rows.iter().filter(|r| r[2] == "false").count();
    let csv = table(["suite", "check", "pass", "detail"], rows)?;
    let suites: serde_json::Map<String, Value> =
        suites.into_iter().map(|(n, c)| Ok((n, serde_json::to_value(c)?))).collect::<Result<_>>()?;
    outcome(json!({"pass": failures == 0, "failures": failures, "suites": suites}), csv)
}
