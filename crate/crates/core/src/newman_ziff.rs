//! Newman–Ziff sweeps: occupy elements one at a time in random order and
//! record observables after every addition, then convolve with binomial
//! weights to get estimates at any `p`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{element_count, Mode};
use crate::error::{Error, Result};
use crate::instance::FiniteInstance;
use crate::rng::{stream, Stream};
use crate::stats::Estimate;
use crate::unionfind::WindingUnionFind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Observable {
    WrapEither,
    WrapBoth,
    Largest,
    SecondLargest,
    Connect(u32, u32),
}

impl Observable {
    /// Indicator observables are monotone in the number of added elements
    /// and are stored as a single threshold per sweep.
    pub fn is_indicator(&self) -> bool {
        matches!(self, Observable::WrapEither | Observable::WrapBoth | Observable::Connect(..))
    }
}

impl FromStr for Observable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "wrapping-either" => return Ok(Observable::WrapEither),
            "wrapping-both" => return Ok(Observable::WrapBoth),
            "largest-fraction" => return Ok(Observable::Largest),
            "second-largest-fraction" => return Ok(Observable::SecondLargest),
            _ => {}
        }
        let args = s.strip_prefix("connect(").and_then(|r| r.strip_suffix(')'));
        if let Some(args) = args {
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            if let [u, v] = parts[..] {
                if let (Ok(u), Ok(v)) = (u.parse(), v.parse()) {
                    return Ok(Observable::Connect(u, v));
                }
            }
        }
        Err(Error::UnknownObservable(s.to_string()))
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::WrapEither => f.write_str("wrapping-either"),
            Observable::WrapBoth => f.write_str("wrapping-both"),
            Observable::Largest => f.write_str("largest-fraction"),
            Observable::SecondLargest => f.write_str("second-largest-fraction"),
            Observable::Connect(u, v) => write!(f, "connect({u},{v})"),
        }
    }
}

/// What one sweep recorded for one observable.
#[derive(Debug, Clone, PartialEq)]
pub enum Trace {
    /// First number of added elements at which the indicator holds;
    /// `N + 1` if it never does.
    Threshold(u32),
    /// Cluster size after each of the `N + 1` prefixes.
    Sizes(Vec<u32>),
}

/// Size histogram giving the two largest cluster sizes after each merge.
struct TopTwo {
    hist: Vec<u32>,
    largest: usize,
    second: usize,
}

impl TopTwo {
    fn new(n: usize) -> Self {
        TopTwo { hist: vec![0; n + 1], largest: 0, second: 0 }
    }

    fn add_singleton(&mut self) {
        self.hist[1] += 1;
        if self.largest == 0 {
            self.largest = 1;
        } else if self.second == 0 {
            self.second = 1;
        }
    }

    fn merge(&mut self, a: usize, b: usize) {
        self.hist[a] -= 1;
        self.hist[b] -= 1;
        let s = a + b;
        self.hist[s] += 1;
        let (old_l, old_s) = (self.largest, self.second);
        let bound = if s > old_l {
            self.largest = s;
            if a == old_l || b == old_l {
                old_s
            } else {
                old_l
            }
        } else {
            old_s.max(s)
        };
        let mut k = bound.min(self.largest);
        while k > 0 && self.hist[k] <= u32::from(k == self.largest) {
            k -= 1;
        }
        self.second = k;
    }
}

/// One sweep over a fixed instance.
pub fn run_sweep(inst: &FiniteInstance, mode: Mode, observables: &[Observable], rng: &mut Stream) -> Vec<Trace> {
    let n = element_count(inst, mode);
    let nv = inst.num_vertices();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);

    let mut uf = WindingUnionFind::new(nv);
    let mut top = TopTwo::new(nv);
    let mut open = vec![false; nv];
    if mode == Mode::Bond {
        for _ in 0..nv {
            top.add_singleton();
        }
    }
    let never = n as u32 + 1;
    let mut thresholds = vec![never; observables.len()];
    let want_sizes = observables.iter().any(|o| !o.is_indicator());
    let mut largest = Vec::new();
    let mut second = Vec::new();
    if want_sizes {
        largest.reserve(n + 1);
        second.reserve(n + 1);
    }
    let mut max_rank = 0u8;

    let mut record = |step: usize, uf: &mut WindingUnionFind, top: &TopTwo, max_rank: u8, open: &[bool]| {
        for (i, o) in observables.iter().enumerate() {
            if thresholds[i] != never {
                continue;
            }
            let hit = match *o {
                Observable::WrapEither => max_rank >= 1,
                Observable::WrapBoth => max_rank >= 2,
                Observable::Connect(u, v) => {
                    (mode == Mode::Bond || (open[u as usize] && open[v as usize]))
                        && uf.connected(u as usize, v as usize)
                }
                _ => false,
            };
            if hit {
                thresholds[i] = step as u32;
            }
        }
        if want_sizes {
            largest.push(top.largest as u32);
            second.push(top.second as u32);
        }
    };

    record(0, &mut uf, &top, max_rank, &open);
    for (step, &x) in order.iter().enumerate() {
        match mode {
            Mode::Bond => {
                let e = inst.edges[x as usize];
                join(&mut uf, &mut top, &mut max_rank, e.u as usize, e.v as usize, e.wrap);
            }
            Mode::Site => {
                let v = x as usize;
                open[v] = true;
                top.add_singleton();
                for &(w, e) in inst.neighbors(v) {
                    if open[w as usize] {
                        let e = inst.edges[e as usize];
                        join(&mut uf, &mut top, &mut max_rank, e.u as usize, e.v as usize, e.wrap);
                    }
                }
            }
        }
        record(step + 1, &mut uf, &top, max_rank, &open);
    }

    observables
        .iter()
        .enumerate()
        .map(|(i, o)| match o {
            Observable::Largest => Trace::Sizes(largest.clone()),
            Observable::SecondLargest => Trace::Sizes(second.clone()),
            _ => Trace::Threshold(thresholds[i]),
        })
        .collect()
}

fn join(uf: &mut WindingUnionFind, top: &mut TopTwo, max_rank: &mut u8, u: usize, v: usize, wrap: [i32; 2]) {
    let (ru, rv) = (uf.root(u), uf.root(v));
    let (su, sv) = (uf.size_of_root(ru), uf.size_of_root(rv));
    let r = uf.union(u, v, wrap);
    if ru != rv {
        top.merge(su, sv);
    }
    *max_rank = (*max_rank).max(uf.winding_of_root(r).rank);
}

/// Canonical (fixed-`n`) records of many sweeps.
#[derive(Debug, Clone)]
pub struct CanonicalCurves {
    pub mode: Mode,
    /// Number of elements added in a full sweep.
    pub elements: usize,
    pub vertices: usize,
    pub observables: Vec<Observable>,
    /// `records[s][i]` is sweep `s`, observable `i`.
    pub records: Vec<Vec<Trace>>,
}

impl CanonicalCurves {
    pub fn sweeps(&self) -> usize {
        self.records.len()
    }

    pub fn index_of(&self, o: Observable) -> Result<usize> {
        self.observables.iter().position(|&x| x == o).ok_or_else(|| Error::UnknownObservable(o.to_string()))
    }

    fn value_at(&self, trace: &Trace, n: usize) -> f64 {
        match trace {
            Trace::Threshold(t) => f64::from(u8::from(n as u32 >= *t)),
            Trace::Sizes(s) => f64::from(s[n]) / self.vertices as f64,
        }
    }

    /// Mean observable after exactly `n` additions.
    pub fn canonical(&self, i: usize) -> Vec<f64> {
        let s = self.sweeps() as f64;
        (0..=self.elements).map(|n| self.records.iter().map(|r| self.value_at(&r[i], n)).sum::<f64>() / s).collect()
    }

    /// Per-sweep convolved values of observable `i` at `p`.
    pub fn per_sweep_at(&self, i: usize, p: f64) -> Vec<f64> {
        let w = binomial_weights(self.elements, p);
        let mut tail = vec![0.0; w.len() + 1];
        for n in (0..w.len()).rev() {
            tail[n] = tail[n + 1] + w[n];
        }
        self.records
            .iter()
            .map(|r| match &r[i] {
                Trace::Threshold(t) => tail[(*t as usize).min(w.len())].min(1.0),
                Trace::Sizes(s) => {
                    s.iter().zip(&w).map(|(&x, &wn)| f64::from(x) * wn).sum::<f64>() / self.vertices as f64
                }
            })
            .collect()
    }

    pub fn at(&self, o: Observable, p: f64) -> Result<Estimate> {
        let i = self.index_of(o)?;
        Ok(Estimate::from_samples(&self.per_sweep_at(i, p)))
    }

    /// Per-sweep values of `½(wrapping-either + wrapping-both)` at `p`.
    pub fn wrap_average_per_sweep(&self, p: f64) -> Result<Vec<f64>> {
        let a = self.per_sweep_at(self.index_of(Observable::WrapEither)?, p);
        let b = self.per_sweep_at(self.index_of(Observable::WrapBoth)?, p);
        Ok(a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect())
    }

    /// CSV of convolved estimates: `p,observable,mean,stderr,replicas`.
    pub fn write_csv<W: Write>(&self, out: W, grid: &[f64]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["p", "observable", "mean", "stderr", "replicas"])?;
        for &p in grid {
            for (i, o) in self.observables.iter().enumerate() {
                let e = Estimate::from_samples(&self.per_sweep_at(i, p));
                w.write_record([
                    format!("{p}"),
                    o.to_string(),
                    format!("{}", e.mean),
                    format!("{}", e.stderr),
                    self.sweeps().to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// CSV of the canonical curves: `n_open,observable,mean,stderr,replicas`.
    pub fn write_canonical_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n_open", "observable", "mean", "stderr", "replicas"])?;
        for (i, o) in self.observables.iter().enumerate() {
            for n in 0..=self.elements {
                let xs: Vec<f64> = self.records.iter().map(|r| self.value_at(&r[i], n)).collect();
                let e = Estimate::from_samples(&xs);
                w.write_record([
                    n.to_string(),
                    o.to_string(),
                    format!("{}", e.mean),
                    format!("{}", e.stderr),
                    self.sweeps().to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Appends the sweeps of `other`, which must describe the same setup.
    pub fn extend(&mut self, other: CanonicalCurves) -> Result<()> {
        if other.elements != self.elements || other.observables != self.observables || other.mode != self.mode {
            return Err(Error::InvalidParameter("cannot merge curves of different setups".into()));
        }
        self.records.extend(other.records);
        Ok(())
    }
}

/// `Binomial(n, p)` probabilities, built by the ratio recurrence outward
/// from the mode and normalized, so nothing underflows before the tails.
pub fn binomial_weights(n: usize, p: f64) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    if p <= 0.0 {
        w[0] = 1.0;
        return w;
    }
    if p >= 1.0 {
        w[n] = 1.0;
        return w;
    }
    let odds = p / (1.0 - p);
    let mode = (((n + 1) as f64 * p).floor() as usize).min(n);
    w[mode] = 1.0;
    for k in mode + 1..=n {
        w[k] = w[k - 1] * (n - k + 1) as f64 / k as f64 * odds;
        if w[k] == 0.0 {
            break;
        }
    }
    for k in (0..mode).rev() {
        w[k] = w[k + 1] * (k + 1) as f64 / (n - k) as f64 / odds;
        if w[k] == 0.0 {
            break;
        }
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

pub fn validate_observables(inst: &FiniteInstance, observables: &[Observable]) -> Result<()> {
    for o in observables {
        if let Observable::Connect(u, v) = *o {
            let n = inst.num_vertices() as u32;
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!("{o} names a vertex outside the instance")));
            }
        }
    }
    Ok(())
}

/// Runs replicas `first..first + sweeps` of an experiment in parallel.
/// Replica `r` always uses stream `r`, so results do not depend on
/// scheduling and extending a run reproduces the same prefix.
pub fn newman_ziff_range(
    inst: &FiniteInstance,
    mode: Mode,
    observables: &[Observable],
    first: usize,
    sweeps: usize,
    seed: u64,
    experiment: u64,
) -> Result<CanonicalCurves> {
    validate_observables(inst, observables)?;
    let records = (first..first + sweeps)
        .into_par_iter()
        .map(|r| run_sweep(inst, mode, observables, &mut stream(seed, experiment, r as u64)))
        .collect();
    Ok(CanonicalCurves {
        mode,
        elements: element_count(inst, mode),
        vertices: inst.num_vertices(),
        observables: observables.to_vec(),
        records,
    })
}

pub fn newman_ziff(
    inst: &FiniteInstance,
    mode: Mode,
    observables: &[Observable],
    sweeps: usize,
    seed: u64,
    experiment: u64,
) -> Result<CanonicalCurves> {
    newman_ziff_range(inst, mode, observables, 0, sweeps, seed, experiment)
}

/// Sweeps where every replica builds its own instance from its stream
/// (disordered lattices). All instances must have the same size.
pub fn newman_ziff_disordered<F>(
    build: F,
    mode: Mode,
    observables: &[Observable],
    first: usize,
    sweeps: usize,
    seed: u64,
    experiment: u64,
) -> Result<CanonicalCurves>
where
    F: Fn(&mut Stream) -> Result<FiniteInstance> + Sync,
{
    let results: Vec<Result<(usize, usize, Vec<Trace>)>> = (first..first + sweeps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, experiment, r as u64);
            let inst = build(&mut rng)?;
            validate_observables(&inst, observables)?;
            let t = run_sweep(&inst, mode, observables, &mut rng);
            Ok((element_count(&inst, mode), inst.num_vertices(), t))
        })
        .collect();
    let mut records = Vec::with_capacity(sweeps);
    let mut shape = None;
    for r in results {
        let (n, v, t) = r?;
        if *shape.get_or_insert((n, v)) != (n, v) {
            return Err(Error::InvalidParameter("disordered instances differ in size".into()));
        }
        records.push(t);
    }
    let (elements, vertices) = shape.unwrap_or((0, 0));
    Ok(CanonicalCurves { mode, elements, vertices, observables: observables.to_vec(), records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_weights_match_direct_formula() {
        let (n, p) = (12usize, 0.3f64);
        let w = binomial_weights(n, p);
        let mut choose = 1.0f64;
        for (k, &wk) in w.iter().enumerate() {
            let direct = choose * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
            assert!((wk - direct).abs() < 1e-14, "k={k}");
            choose = choose * (n - k) as f64 / (k + 1) as f64;
        }
    }

    #[test]
    fn binomial_weights_large_n_are_normalized() {
        let w = binomial_weights(1_000_000, 0.5927);
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mean: f64 = w.iter().enumerate().map(|(k, x)| k as f64 * x).sum();
        assert!((mean - 592_700.0).abs() < 1e-3 * 592_700.0);
    }

    #[test]
    fn binomial_weights_edges() {
        assert_eq!(binomial_weights(3, 0.0), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(binomial_weights(3, 1.0), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn top_two_tracks_merges() {
        let mut t = TopTwo::new(10);
        for _ in 0..10 {
            t.add_singleton();
        }
        t.merge(1, 1);
        assert_eq!((t.largest, t.second), (2, 1));
        t.merge(2, 1);
        assert_eq!((t.largest, t.second), (3, 1));
        t.merge(1, 1);
        assert_eq!((t.largest, t.second), (3, 2));
        t.merge(3, 2);
        assert_eq!((t.largest, t.second), (5, 1));
    }

    #[test]
    fn observable_names_round_trip() {
        for s in ["wrapping-either", "wrapping-both", "largest-fraction", "second-largest-fraction", "connect(3,7)"] {
            assert_eq!(s.parse::<Observable>().unwrap().to_string(), s);
        }
        assert!(matches!("spanning".parse::<Observable>(), Err(Error::UnknownObservable(_))));
    }
}
