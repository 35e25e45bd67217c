//! Configurations and cluster structure.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::FiniteInstance;
use crate::unionfind::{Winding, WindingUnionFind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bond,
    Site,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bond" => Ok(Mode::Bond),
            "site" => Ok(Mode::Site),
            other => Err(Error::InvalidParameter(format!("mode must be bond or site, got {other}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Bond => "bond",
            Mode::Site => "site",
        })
    }
}

/// Open probabilities per element class. A class missing from `by_class`
/// falls back to `default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercolationParams {
    pub mode: Mode,
    pub default: Option<f64>,
    pub by_class: BTreeMap<String, f64>,
}

impl PercolationParams {
    pub fn uniform(mode: Mode, p: f64) -> Self {
        PercolationParams { mode, default: Some(p), by_class: BTreeMap::new() }
    }

    pub fn with_class(mut self, class: &str, p: f64) -> Self {
        self.by_class.insert(class.to_string(), p);
        self
    }

    /// The single probability shared by every class, if there is one.
    pub fn uniform_value(&self) -> Option<f64> {
        match (self.default, self.by_class.values().next()) {
            (Some(p), _) if self.by_class.values().all(|&q| q == p) => Some(p),
            (None, Some(&p)) if self.by_class.values().all(|&q| q == p) => Some(p),
            _ => None,
        }
    }

    /// Probability of each class of `inst`, indexed like the instance's
    /// class names for the current mode.
    pub fn table(&self, inst: &FiniteInstance) -> Result<Vec<f64>> {
        let names = match self.mode {
            Mode::Bond => &inst.bond_class_names,
            Mode::Site => &inst.site_class_names,
        };
        names
            .iter()
            .map(|name| {
                let p = self
                    .by_class
                    .get(name)
                    .copied()
                    .or(self.default)
                    .ok_or_else(|| Error::MissingClass(name.clone()))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!("probability {p} for class {name}")));
                }
                Ok(p)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub mode: Mode,
    pub open: Vec<bool>,
}

impl Configuration {
    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }
}

pub fn element_count(inst: &FiniteInstance, mode: Mode) -> usize {
    match mode {
        Mode::Bond => inst.num_edges(),
        Mode::Site => inst.num_vertices(),
    }
}

/// Draws one uniform word per element, in index order.
pub fn sample_configuration<R: Rng + ?Sized>(
    inst: &FiniteInstance,
    params: &PercolationParams,
    rng: &mut R,
) -> Result<Configuration> {
    let table = params.table(inst)?;
    let open = match params.mode {
        Mode::Bond => inst.edges.iter().map(|e| rng.random::<f64>() < table[e.class as usize]).collect(),
        Mode::Site => inst.site_class.iter().map(|&c| rng.random::<f64>() < table[c as usize]).collect(),
    };
    Ok(Configuration { mode: params.mode, open })
}

/// Clusters of an open subgraph. In bond mode every vertex belongs to a
/// cluster (isolated vertices are singletons); in site mode only open
/// sites do.
#[derive(Debug, Clone)]
pub struct ClusterIndex {
    pub mode: Mode,
    label: Vec<u32>,
    pub sizes: Vec<usize>,
    pub windings: Vec<Winding>,
    pub largest: usize,
    pub second_largest: usize,
}

const CLOSED: u32 = u32::MAX;

impl ClusterIndex {
    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub fn cluster_of(&self, v: usize) -> Option<usize> {
        let l = self.label[v];
        (l != CLOSED).then_some(l as usize)
    }

    pub fn connected(&self, u: usize, v: usize) -> bool {
        matches!((self.cluster_of(u), self.cluster_of(v)), (Some(a), Some(b)) if a == b)
    }

    /// Some cluster has a cycle of nonzero winding.
    pub fn wraps_either(&self) -> bool {
        self.windings.iter().any(|w| w.rank >= 1)
    }

    /// Some cluster winds around both independent cycles of the torus.
    pub fn wraps_both(&self) -> bool {
        self.windings.iter().any(|w| w.rank == 2)
    }

    pub fn wraps_axis(&self, d: usize) -> bool {
        self.windings.iter().any(|w| w.wraps_axis(d))
    }

    /// Windings of all clusters that wrap.
    pub fn wrapping_clusters(&self) -> impl Iterator<Item = (usize, &Winding)> {
        self.windings.iter().enumerate().filter(|(_, w)| w.rank > 0)
    }

    /// Largest winding rank over all clusters.
    pub fn max_rank(&self) -> u8 {
        self.windings.iter().map(|w| w.rank).max().unwrap_or(0)
    }
}

pub fn cluster_index(inst: &FiniteInstance, config: &Configuration) -> Result<ClusterIndex> {
    let expected = element_count(inst, config.mode);
    if config.len() != expected {
        return Err(Error::ConfigurationMismatch { expected, got: config.len() });
    }
    let nv = inst.num_vertices();
    let mut uf = WindingUnionFind::new(nv);
    match config.mode {
        Mode::Bond => {
            for (e, edge) in inst.edges.iter().enumerate() {
                if config.open[e] {
                    uf.union(edge.u as usize, edge.v as usize, edge.wrap);
                }
            }
        }
        Mode::Site => {
            for edge in &inst.edges {
                if config.open[edge.u as usize] && config.open[edge.v as usize] {
                    uf.union(edge.u as usize, edge.v as usize, edge.wrap);
                }
            }
        }
    }
    let mut label = vec![CLOSED; nv];
    let mut root_label = vec![CLOSED; nv];
    let mut sizes = Vec::new();
    let mut windings = Vec::new();
    for v in 0..nv {
        if config.mode == Mode::Site && !config.open[v] {
            continue;
        }
        let r = uf.root(v);
        if root_label[r] == CLOSED {
            root_label[r] = sizes.len() as u32;
            sizes.push(uf.size_of_root(r));
            windings.push(uf.winding_of_root(r));
        }
        label[v] = root_label[r];
    }
    let mut sorted = sizes.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    Ok(ClusterIndex {
        mode: config.mode,
        label,
        largest: sorted.first().copied().unwrap_or(0),
        second_largest: sorted.get(1).copied().unwrap_or(0),
        sizes,
        windings,
    })
}

/// Dual states of a bond configuration: `e*` is open iff `e` is closed.
pub fn dual_configuration(inst: &FiniteInstance, config: &Configuration) -> Result<Configuration> {
    let link = inst.dual.as_ref().ok_or(Error::MissingDual)?;
    if config.mode != Mode::Bond {
        return Err(Error::InvalidParameter("dual configurations need bond mode".into()));
    }
    let expected = inst.num_edges();
    if config.len() != expected {
        return Err(Error::ConfigurationMismatch { expected, got: config.len() });
    }
    let mut open = vec![false; link.instance.num_edges()];
    for (e, &d) in link.primal_to_dual.iter().enumerate() {
        open[d as usize] = !config.open[e];
    }
    Ok(Configuration { mode: Mode::Bond, open })
}

/// Primal clusters over open bonds and dual clusters over the partners of
/// closed bonds.
pub fn joint_dual_index(inst: &FiniteInstance, config: &Configuration) -> Result<(ClusterIndex, ClusterIndex)> {
    let dual_config = dual_configuration(inst, config)?;
    let link = inst.dual.as_ref().ok_or(Error::MissingDual)?;
    Ok((cluster_index(inst, config)?, cluster_index(&link.instance, &dual_config)?))
}
