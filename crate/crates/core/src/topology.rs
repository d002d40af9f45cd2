//! Network shapes, node placement for a target Alice–Bob distance, and routing.
//!
//! Every generator places Alice and Bob so that the shortest fiber route
//! between them is exactly the requested distance `L`:
//!
//! | kind   | placement                                                        |
//! |--------|------------------------------------------------------------------|
//! | direct | one link of `L`                                                  |
//! | line   | `n_trusted` interior nodes, `n_trusted + 1` equal segments       |
//! | star   | switch hub, every leaf `L/2` from the hub, hub links at α = 0.4  |
//! | ring   | `m` nodes on a cycle, Bob `⌊m/2⌋` hops from Alice                |
//! | grid   | `g × g`, Alice and Bob at opposite corners, links `L/(2(g−1))`   |
//! | torus  | `k × k` wrap-around, Bob at `(⌊k/2⌋, ⌊k/2⌋)`, links `L/d`         |
//!
//! A 2×2 torus has parallel wrap-around links; they are kept as separate
//! [`Link`]s so that every node has degree four.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default attenuation of plain fiber, dB/km.
pub const ALPHA_FIBER: f64 = 0.15;
/// Attenuation used on links that terminate at an optical switch.
pub const ALPHA_SWITCH: f64 = 0.4;

const LENGTH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    #[serde(rename = "endpoint-alice")]
    Alice,
    #[serde(rename = "endpoint-bob")]
    Bob,
    Trusted,
    Repeater,
    Switch,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Alice => "endpoint-alice",
            NodeKind::Bob => "endpoint-bob",
            NodeKind::Trusted => "trusted",
            NodeKind::Repeater => "repeater",
            NodeKind::Switch => "switch",
        }
    }

    /// Interior nodes that terminate a quantum link (everything but switches).
    pub fn is_relay(self) -> bool {
        matches!(self, NodeKind::Trusted | NodeKind::Repeater)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "endpoint-alice" | "alice" => NodeKind::Alice,
            "endpoint-bob" | "bob" => NodeKind::Bob,
            "trusted" => NodeKind::Trusted,
            "repeater" => NodeKind::Repeater,
            "switch" => NodeKind::Switch,
            other => return Err(Error::Parse(format!("unknown node kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Direct,
    Line,
    Star,
    Ring,
    Grid,
    Torus,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 6] = [
        TopologyKind::Direct,
        TopologyKind::Line,
        TopologyKind::Star,
        TopologyKind::Ring,
        TopologyKind::Grid,
        TopologyKind::Torus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::Direct => "direct",
            TopologyKind::Line => "line",
            TopologyKind::Star => "star",
            TopologyKind::Ring => "ring",
            TopologyKind::Grid => "grid",
            TopologyKind::Torus => "torus",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TopologyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown topology kind `{s}`")))
    }
}

/// Shape parameters; each kind reads only its own field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeParams {
    /// Interior trusted nodes of a line.
    pub n_trusted: usize,
    /// Leaves of a star, Alice and Bob included.
    pub star_leaves: usize,
    /// Nodes on a ring, Alice and Bob included.
    pub ring_nodes: usize,
    /// Side of a square grid.
    pub grid_side: usize,
    /// Side of a square torus.
    pub torus_side: usize,
}

impl Default for ShapeParams {
    fn default() -> Self {
        ShapeParams {
            n_trusted: 1,
            star_leaves: 4,
            ring_nodes: 4,
            grid_side: 3,
            torus_side: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub length_km: f64,
    pub alpha: f64,
}

impl Link {
    fn other(&self, n: NodeId) -> Option<NodeId> {
        if self.a == n {
            Some(self.b)
        } else if self.b == n {
            Some(self.a)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub kind: TopologyKind,
    pub ab_distance_km: f64,
    /// Node kinds indexed by [`NodeId`].
    pub nodes: Vec<NodeKind>,
    pub links: Vec<Link>,
}

/// Builds one of the six shapes with the Alice–Bob shortest path equal to `distance_km`.
pub fn build_topology(kind: TopologyKind, distance_km: f64, params: &ShapeParams) -> Result<Topology> {
    if !(distance_km.is_finite() && distance_km > 0.0) {
        return Err(Error::InvalidParams(format!(
            "distance must be positive, got {distance_km}"
        )));
    }
    let l = distance_km;
    let mut b = Builder::default();
    match kind {
        TopologyKind::Direct => {
            let a = b.node(NodeKind::Alice);
            let z = b.node(NodeKind::Bob);
            b.link(a, z, l, ALPHA_FIBER);
        }
        TopologyKind::Line => {
            let n = params.n_trusted;
            let seg = l / (n + 1) as f64;
            let mut prev = b.node(NodeKind::Alice);
            for _ in 0..n {
                let t = b.node(NodeKind::Trusted);
                b.link(prev, t, seg, ALPHA_FIBER);
                prev = t;
            }
            let z = b.node(NodeKind::Bob);
            b.link(prev, z, seg, ALPHA_FIBER);
        }
        TopologyKind::Star => {
            let leaves = params.star_leaves;
            if leaves < 2 {
                return Err(Error::InvalidParams(format!(
                    "star needs at least 2 leaves, got {leaves}"
                )));
            }
            let a = b.node(NodeKind::Alice);
            let z = b.node(NodeKind::Bob);
            let hub = b.node(NodeKind::Switch);
            b.link(a, hub, l / 2.0, ALPHA_SWITCH);
            b.link(z, hub, l / 2.0, ALPHA_SWITCH);
            for _ in 2..leaves {
                let t = b.node(NodeKind::Trusted);
                b.link(t, hub, l / 2.0, ALPHA_SWITCH);
            }
        }
        TopologyKind::Ring => {
            let m = params.ring_nodes;
            if m < 3 {
                return Err(Error::InvalidParams(format!("ring needs at least 3 nodes, got {m}")));
            }
            let bob_at = m / 2;
            let seg = l / bob_at as f64;
            for i in 0..m {
                b.node(match i {
                    0 => NodeKind::Alice,
                    i if i == bob_at => NodeKind::Bob,
                    _ => NodeKind::Trusted,
                });
            }
            for i in 0..m {
                b.link(i.into(), ((i + 1) % m).into(), seg, ALPHA_FIBER);
            }
        }
        TopologyKind::Grid => {
            let g = params.grid_side;
            if g < 2 {
                return Err(Error::InvalidParams(format!("grid side must be at least 2, got {g}")));
            }
            let seg = l / (2 * (g - 1)) as f64;
            for i in 0..g * g {
                b.node(match i {
                    0 => NodeKind::Alice,
                    i if i == g * g - 1 => NodeKind::Bob,
                    _ => NodeKind::Trusted,
                });
            }
            for r in 0..g {
                for c in 0..g {
                    let id = r * g + c;
                    if c + 1 < g {
                        b.link(id.into(), (id + 1).into(), seg, ALPHA_FIBER);
                    }
                    if r + 1 < g {
                        b.link(id.into(), (id + g).into(), seg, ALPHA_FIBER);
                    }
                }
            }
        }
        TopologyKind::Torus => {
            let k = params.torus_side;
            if k < 2 {
                return Err(Error::InvalidParams(format!("torus side must be at least 2, got {k}")));
            }
            let h = k / 2;
            let bob = h * k + h;
            let seg = l / (2 * h) as f64;
            for i in 0..k * k {
                b.node(match i {
                    0 => NodeKind::Alice,
                    i if i == bob => NodeKind::Bob,
                    _ => NodeKind::Trusted,
                });
            }
            for r in 0..k {
                for c in 0..k {
                    let id = r * k + c;
                    b.link(id.into(), (r * k + (c + 1) % k).into(), seg, ALPHA_FIBER);
                    b.link(id.into(), (((r + 1) % k) * k + c).into(), seg, ALPHA_FIBER);
                }
            }
        }
    }
    Ok(Topology {
        kind,
        ab_distance_km: l,
        nodes: b.nodes,
        links: b.links,
    })
}

#[derive(Default)]
struct Builder {
    nodes: Vec<NodeKind>,
    links: Vec<Link>,
}

impl Builder {
    fn node(&mut self, kind: NodeKind) -> NodeId {
        self.nodes.push(kind);
        NodeId::from(self.nodes.len() - 1)
    }

    fn link(&mut self, a: NodeId, b: NodeId, length_km: f64, alpha: f64) {
        self.links.push(Link { a, b, length_km, alpha });
    }
}

impl Topology {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn kind_of(&self, n: NodeId) -> Option<NodeKind> {
        self.nodes.get(n.index()).copied()
    }

    pub fn alice(&self) -> NodeId {
        self.find(NodeKind::Alice).expect("topology has an alice node")
    }

    pub fn bob(&self) -> NodeId {
        self.find(NodeKind::Bob).expect("topology has a bob node")
    }

    fn find(&self, kind: NodeKind) -> Option<NodeId> {
        self.nodes.iter().position(|&k| k == kind).map(NodeId::from)
    }

    /// Link multiplicity counts, so a 2×2 torus still reports degree 4.
    pub fn degree(&self, n: NodeId) -> usize {
        self.links.iter().filter(|l| l.a == n || l.b == n).count()
    }

    /// Returns a copy with every trusted/repeater node re-tagged as `role`.
    /// Endpoints and switches keep their kind.
    pub fn with_interior_role(&self, role: NodeKind) -> Topology {
        let mut t = self.clone();
        for k in &mut t.nodes {
            if k.is_relay() {
                *k = role;
            }
        }
        t
    }

    /// Shortest link per neighbor, sorted by neighbor id.
    fn neighbors(&self, n: NodeId) -> Vec<(NodeId, Link)> {
        let mut out: Vec<(NodeId, Link)> = Vec::new();
        for l in &self.links {
            if let Some(m) = l.other(n) {
                if m == n {
                    continue;
                }
                match out.iter_mut().find(|(o, _)| *o == m) {
                    Some((_, best)) if best.length_km <= l.length_km => {}
                    Some((_, best)) => *best = *l,
                    None => out.push((m, *l)),
                }
            }
        }
        out.sort_by_key(|(m, _)| *m);
        out
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![NodeId(0)];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for (m, _) in self.neighbors(n) {
                if !seen[m.index()] {
                    seen[m.index()] = true;
                    stack.push(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn check_node(&self, n: NodeId) -> Result<()> {
        if n.index() < self.nodes.len() {
            Ok(())
        } else {
            Err(Error::UnknownNode(n))
        }
    }

    /// Serializes to the plain-text adjacency format read by [`Topology::from_adjacency_text`].
    pub fn to_adjacency_text(&self) -> String {
        let mut s = format!("{} {}\n", self.kind, self.ab_distance_km);
        for (i, k) in self.nodes.iter().enumerate() {
            s.push_str(&format!("node {i} {k}\n"));
        }
        for l in &self.links {
            s.push_str(&format!("link {} {} {} {}\n", l.a, l.b, l.length_km, l.alpha));
        }
        s
    }

    pub fn from_adjacency_text(text: &str) -> Result<Topology> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or(Error::EmptyInput)?;
        let mut h = header.split_whitespace();
        let kind: TopologyKind = h
            .next()
            .ok_or_else(|| Error::Parse("missing topology kind".into()))?
            .parse()?;
        let ab_distance_km = parse_f64(h.next(), "distance")?;

        let mut nodes: Vec<Option<NodeKind>> = Vec::new();
        let mut links = Vec::new();
        for line in lines {
            let mut f = line.split_whitespace();
            match f.next() {
                Some("node") => {
                    let id = parse_id(f.next())?;
                    let kind: NodeKind = f
                        .next()
                        .ok_or_else(|| Error::Parse(format!("missing kind in `{line}`")))?
                        .parse()?;
                    if nodes.len() <= id.index() {
                        nodes.resize(id.index() + 1, None);
                    }
                    nodes[id.index()] = Some(kind);
                }
                Some("link") => {
                    let a = parse_id(f.next())?;
                    let b = parse_id(f.next())?;
                    let length_km = parse_f64(f.next(), "link length")?;
                    let alpha = parse_f64(f.next(), "link alpha")?;
                    if a == b {
                        return Err(Error::Parse(format!("self-loop on node {a}")));
                    }
                    if !(length_km > 0.0 && alpha > 0.0) {
                        return Err(Error::Parse(format!("non-positive length or alpha in `{line}`")));
                    }
                    links.push(Link { a, b, length_km, alpha });
                }
                _ => return Err(Error::Parse(format!("unrecognized line `{line}`"))),
            }
        }
        let nodes = nodes
            .into_iter()
            .enumerate()
            .map(|(i, k)| k.ok_or_else(|| Error::Parse(format!("node {i} is not declared"))))
            .collect::<Result<Vec<_>>>()?;
        for l in &links {
            if l.a.index() >= nodes.len() || l.b.index() >= nodes.len() {
                return Err(Error::Parse(format!("link {}-{} references an undeclared node", l.a, l.b)));
            }
        }
        Ok(Topology {
            kind,
            ab_distance_km,
            nodes,
            links,
        })
    }
}

fn parse_id(s: Option<&str>) -> Result<NodeId> {
    s.and_then(|s| s.parse::<u32>().ok())
        .map(NodeId)
        .ok_or_else(|| Error::Parse("bad node id".into()))
}

fn parse_f64(s: Option<&str>, what: &str) -> Result<f64> {
    s.and_then(|s| s.parse::<f64>().ok())
        .ok_or_else(|| Error::Parse(format!("bad {what}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub length_km: f64,
    pub alpha: f64,
}

/// An ordered simple path. `kinds[i]` is the role of `nodes[i]`, `hops[i]`
/// joins `nodes[i]` and `nodes[i + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutePath {
    pub nodes: Vec<NodeId>,
    pub kinds: Vec<NodeKind>,
    pub hops: Vec<Hop>,
}

impl RoutePath {
    pub fn new(nodes: Vec<NodeId>, kinds: Vec<NodeKind>, hops: Vec<Hop>) -> Result<RoutePath> {
        if hops.is_empty() {
            return Err(Error::EmptyPath);
        }
        if nodes.len() != hops.len() + 1 || kinds.len() != nodes.len() {
            return Err(Error::InvalidParams(
                "path needs one more node than hops, and one kind per node".into(),
            ));
        }
        if let Some(h) = hops.iter().find(|h| !(h.length_km >= 0.0) || !(h.alpha > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "hop with length {} km and alpha {}",
                h.length_km, h.alpha
            )));
        }
        let distinct: BTreeSet<_> = nodes.iter().collect();
        if distinct.len() != nodes.len() {
            return Err(Error::InvalidParams("path repeats a node".into()));
        }
        Ok(RoutePath { nodes, kinds, hops })
    }

    /// A synthetic Alice→Bob chain whose interior nodes all have kind `interior`.
    pub fn chain(hops: &[Hop], interior: NodeKind) -> Result<RoutePath> {
        let n = hops.len() + 1;
        let nodes = (0..n).map(NodeId::from).collect();
        let kinds = (0..n)
            .map(|i| match i {
                0 => NodeKind::Alice,
                i if i == n - 1 => NodeKind::Bob,
                _ => interior,
            })
            .collect();
        RoutePath::new(nodes, kinds, hops.to_vec())
    }

    /// Uniform-alpha chain of the given hop lengths.
    pub fn fiber(lengths_km: &[f64], alpha: f64, interior: NodeKind) -> Result<RoutePath> {
        let hops: Vec<Hop> = lengths_km.iter().map(|&length_km| Hop { length_km, alpha }).collect();
        RoutePath::chain(&hops, interior)
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len()
    }

    pub fn total_length_km(&self) -> f64 {
        self.hops.iter().map(|h| h.length_km).sum()
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().expect("non-empty path")
    }

    /// Interior nodes, excluding both ends.
    pub fn interior(&self) -> &[NodeId] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    /// Splits at every interior node whose kind satisfies `cut`.
    pub fn split_at(&self, cut: impl Fn(NodeKind) -> bool) -> Vec<RoutePath> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..self.nodes.len() {
            let last = i == self.nodes.len() - 1;
            if last || cut(self.kinds[i]) {
                out.push(RoutePath {
                    nodes: self.nodes[start..=i].to_vec(),
                    kinds: self.kinds[start..=i].to_vec(),
                    hops: self.hops[start..i].to_vec(),
                });
                start = i;
            }
        }
        out
    }
}

/// Minimum-length path from `a` to `b`; ties go to the lexicographically
/// smallest node-id sequence.
pub fn shortest_path(t: &Topology, a: NodeId, b: NodeId) -> Result<RoutePath> {
    t.check_node(a)?;
    t.check_node(b)?;
    let blocked = vec![false; t.node_count()];
    shortest_avoiding(t, a, b, &blocked, false).ok_or(Error::DisconnectedPair(a, b))
}

fn shorter(d1: f64, p1: &[NodeId], d2: f64, p2: &[NodeId]) -> bool {
    let tol = LENGTH_TOL * d1.abs().max(d2.abs()).max(1.0);
    if (d1 - d2).abs() <= tol {
        p1 < p2
    } else {
        d1 < d2
    }
}

/// Label-setting Dijkstra carrying the whole path so ties resolve lexicographically.
fn shortest_avoiding(
    t: &Topology,
    a: NodeId,
    b: NodeId,
    blocked: &[bool],
    forbid_direct: bool,
) -> Option<RoutePath> {
    let n = t.node_count();
    let mut best: Vec<Option<(f64, Vec<NodeId>)>> = vec![None; n];
    let mut settled = vec![false; n];
    best[a.index()] = Some((0.0, vec![a]));
    loop {
        let mut pick: Option<usize> = None;
        for i in 0..n {
            if settled[i] {
                continue;
            }
            if let Some((d, p)) = &best[i] {
                match pick {
                    None => pick = Some(i),
                    Some(j) => {
                        let (dj, pj) = best[j].as_ref().unwrap();
                        if shorter(*d, p, *dj, pj) {
                            pick = Some(i);
                        }
                    }
                }
            }
        }
        let u = pick?;
        settled[u] = true;
        let (du, pu) = best[u].clone().unwrap();
        if u == b.index() {
            return Some(path_from_nodes(t, &pu));
        }
        for (v, link) in t.neighbors(NodeId::from(u)) {
            let vi = v.index();
            if settled[vi] || (blocked[vi] && v != b) {
                continue;
            }
            if forbid_direct && u == a.index() && v == b {
                continue;
            }
            let dv = du + link.length_km;
            let mut pv = pu.clone();
            pv.push(v);
            let better = match &best[vi] {
                None => true,
                Some((d, p)) => shorter(dv, &pv, *d, p),
            };
            if better {
                best[vi] = Some((dv, pv));
            }
        }
    }
}

fn path_from_nodes(t: &Topology, nodes: &[NodeId]) -> RoutePath {
    let hops = nodes
        .windows(2)
        .map(|w| {
            let link = t
                .neighbors(w[0])
                .into_iter()
                .find(|(m, _)| *m == w[1])
                .map(|(_, l)| l)
                .expect("consecutive path nodes share a link");
            Hop {
                length_km: link.length_km,
                alpha: link.alpha,
            }
        })
        .collect();
    RoutePath {
        nodes: nodes.to_vec(),
        kinds: nodes.iter().map(|n| t.nodes[n.index()]).collect(),
        hops,
    }
}

/// Up to `max_paths` internally node-disjoint paths, shortest first.
///
/// Paths are taken greedily (shortest path, remove its interior, repeat).
/// When greedy selection blocks itself and returns fewer paths than the graph
/// supports, the set is recomputed as a minimum-total-length flow of the
/// achievable size.
pub fn disjoint_paths(t: &Topology, a: NodeId, b: NodeId, max_paths: usize) -> Result<Vec<RoutePath>> {
    if max_paths == 0 {
        return Err(Error::InvalidParams("max_paths must be at least 1".into()));
    }
    t.check_node(a)?;
    t.check_node(b)?;
    if a == b {
        return Err(Error::InvalidParams("source and target coincide".into()));
    }
    let greedy = greedy_disjoint(t, a, b, max_paths);
    if greedy.is_empty() {
        return Err(Error::DisconnectedPair(a, b));
    }
    if greedy.len() == max_paths {
        return Ok(greedy);
    }
    let flow = min_cost_disjoint(t, a, b, max_paths);
    if flow.len() > greedy.len() {
        Ok(flow)
    } else {
        Ok(greedy)
    }
}

fn greedy_disjoint(t: &Topology, a: NodeId, b: NodeId, max_paths: usize) -> Vec<RoutePath> {
    let mut blocked = vec![false; t.node_count()];
    let mut used_direct = false;
    let mut out = Vec::new();
    while out.len() < max_paths {
        let Some(p) = shortest_avoiding(t, a, b, &blocked, used_direct) else {
            break;
        };
        if p.hop_count() == 1 {
            used_direct = true;
        }
        for n in p.interior() {
            blocked[n.index()] = true;
        }
        out.push(p);
    }
    out
}

struct FlowEdge {
    to: usize,
    cap: i32,
    cost: f64,
}

/// Successive shortest paths on the node-split graph (unit node capacities).
fn min_cost_disjoint(t: &Topology, a: NodeId, b: NodeId, max_paths: usize) -> Vec<RoutePath> {
    let n = t.node_count();
    let (inn, out) = (|v: usize| 2 * v, |v: usize| 2 * v + 1);
    let mut edges: Vec<FlowEdge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); 2 * n];
    let mut add = |edges: &mut Vec<FlowEdge>, u: usize, v: usize, cap: i32, cost: f64| {
        adj[u].push(edges.len());
        edges.push(FlowEdge { to: v, cap, cost });
        adj[v].push(edges.len());
        edges.push(FlowEdge { to: u, cap: 0, cost: -cost });
    };
    for v in 0..n {
        let cap = if v == a.index() || v == b.index() { max_paths as i32 } else { 1 };
        add(&mut edges, inn(v), out(v), cap, 0.0);
    }
    for u in 0..n {
        for (v, link) in t.neighbors(NodeId::from(u)) {
            add(&mut edges, out(u), inn(v.index()), 1, link.length_km);
        }
    }
    let (src, dst) = (out(a.index()), inn(b.index()));
    let mut flow = 0;
    while flow < max_paths {
        // Bellman-Ford: residual costs may be negative.
        let mut dist = vec![f64::INFINITY; 2 * n];
        let mut prev: Vec<Option<usize>> = vec![None; 2 * n];
        dist[src] = 0.0;
        for _ in 0..2 * n {
            let mut changed = false;
            for u in 0..2 * n {
                if !dist[u].is_finite() {
                    continue;
                }
                for &e in &adj[u] {
                    let edge = &edges[e];
                    if edge.cap > 0 && dist[u] + edge.cost < dist[edge.to] - 1e-12 {
                        dist[edge.to] = dist[u] + edge.cost;
                        prev[edge.to] = Some(e);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if !dist[dst].is_finite() {
            break;
        }
        let mut v = dst;
        while v != src {
            let e = prev[v].unwrap();
            edges[e].cap -= 1;
            edges[e ^ 1].cap += 1;
            v = edges[e ^ 1].to;
        }
        flow += 1;
    }

    // Decompose: follow saturated forward link edges from a.
    let mut paths = Vec::new();
    let mut used = vec![false; edges.len()];
    for _ in 0..flow {
        let mut nodes = vec![a];
        let mut cur = a.index();
        while cur != b.index() {
            let next = adj[out(cur)].iter().copied().find(|&e| {
                e.is_multiple_of(2) && !used[e] && edges[e].cap == 0 && edges[e].to.is_multiple_of(2) && edges[e].to != inn(cur)
            });
            let Some(e) = next else { break };
            used[e] = true;
            cur = edges[e].to / 2;
            nodes.push(NodeId::from(cur));
        }
        if cur == b.index() {
            paths.push(path_from_nodes(t, &nodes));
        }
    }
    paths.sort_by(|p, q| {
        let (dp, dq) = (p.total_length_km(), q.total_length_km());
        if shorter(dp, &p.nodes, dq, &q.nodes) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    paths
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ShapeParams {
        ShapeParams::default()
    }

    #[test]
    fn direct_is_a_single_fiber_link() {
        let t = build_topology(TopologyKind::Direct, 50.0, &params()).unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.links.len(), 1);
        assert_eq!(t.links[0].length_km, 50.0);
        assert_eq!(t.links[0].alpha, ALPHA_FIBER);
    }

    #[test]
    fn torus_3x3_counts() {
        let p = ShapeParams { torus_side: 3, ..params() };
        let t = build_topology(TopologyKind::Torus, 30.0, &p).unwrap();
        assert_eq!(t.node_count(), 9);
        assert_eq!(t.links.len(), 18);
        for i in 0..9 {
            assert_eq!(t.degree(NodeId::from(i)), 4);
        }
    }

    #[test]
    fn torus_2x2_keeps_parallel_links() {
        let p = ShapeParams { torus_side: 2, ..params() };
        let t = build_topology(TopologyKind::Torus, 10.0, &p).unwrap();
        assert_eq!(t.links.len(), 8);
        assert!((0..4).all(|i| t.degree(NodeId::from(i)) == 4));
        let sp = shortest_path(&t, t.alice(), t.bob()).unwrap();
        assert!((sp.total_length_km() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn line_segments_are_equal() {
        let t = build_topology(TopologyKind::Line, 40.0, &params()).unwrap();
        assert_eq!(t.node_count(), 3);
        assert_eq!(t.links.len(), 2);
        assert!(t.links.iter().all(|l| l.length_km == 20.0));
    }

    #[test]
    fn star_hub_links_use_switch_alpha() {
        let t = build_topology(TopologyKind::Star, 20.0, &params()).unwrap();
        assert_eq!(t.nodes.iter().filter(|&&k| k == NodeKind::Switch).count(), 1);
        assert!(t.links.iter().all(|l| l.alpha == ALPHA_SWITCH && l.length_km == 10.0));
    }

    #[test]
    fn grid_and_ring_counts() {
        let g = build_topology(TopologyKind::Grid, 12.0, &ShapeParams { grid_side: 4, ..params() }).unwrap();
        assert_eq!(g.node_count(), 16);
        assert_eq!(g.links.len(), 2 * 4 * 3);
        let r = build_topology(TopologyKind::Ring, 12.0, &ShapeParams { ring_nodes: 7, ..params() }).unwrap();
        assert_eq!(r.links.len(), 7);
        assert!((0..7).all(|i| r.degree(NodeId::from(i)) == 2));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let bad = [
            (TopologyKind::Direct, 0.0, params()),
            (TopologyKind::Line, -1.0, params()),
            (TopologyKind::Ring, 10.0, ShapeParams { ring_nodes: 2, ..params() }),
            (TopologyKind::Grid, 10.0, ShapeParams { grid_side: 1, ..params() }),
            (TopologyKind::Torus, 10.0, ShapeParams { torus_side: 1, ..params() }),
            (TopologyKind::Star, 10.0, ShapeParams { star_leaves: 1, ..params() }),
        ];
        for (kind, l, p) in bad {
            assert!(matches!(build_topology(kind, l, &p), Err(Error::InvalidParams(_))), "{kind}");
        }
    }

    #[test]
    fn grid_corner_to_corner_is_manhattan() {
        let t = build_topology(TopologyKind::Grid, 20.0, &params()).unwrap();
        let p = shortest_path(&t, t.alice(), t.bob()).unwrap();
        assert_eq!(p.hop_count(), 4);
        assert!((p.total_length_km() - 20.0).abs() < 1e-9);
        // lexicographic tie-break: go through 1 before 3
        assert_eq!(p.nodes[1], NodeId(1));
    }

    #[test]
    fn ring_adjacent_nodes_take_the_short_arc() {
        let t = build_topology(TopologyKind::Ring, 10.0, &ShapeParams { ring_nodes: 4, ..params() }).unwrap();
        let p = shortest_path(&t, NodeId(0), NodeId(1)).unwrap();
        assert_eq!(p.hop_count(), 1);
    }

    #[test]
    fn disconnected_pair_is_an_error() {
        let t = Topology::from_adjacency_text("line 10\nnode 0 endpoint-alice\nnode 1 endpoint-bob\nnode 2 trusted\nlink 0 2 5 0.15\n").unwrap();
        assert!(matches!(shortest_path(&t, NodeId(0), NodeId(1)), Err(Error::DisconnectedPair(..))));
        assert!(matches!(disjoint_paths(&t, NodeId(0), NodeId(1), 2), Err(Error::DisconnectedPair(..))));
    }

    #[test]
    fn ring_has_two_disjoint_arcs_line_has_one() {
        let r = build_topology(TopologyKind::Ring, 30.0, &ShapeParams { ring_nodes: 6, ..params() }).unwrap();
        assert_eq!(disjoint_paths(&r, r.alice(), r.bob(), 4).unwrap().len(), 2);
        let l = build_topology(TopologyKind::Line, 30.0, &ShapeParams { n_trusted: 3, ..params() }).unwrap();
        assert_eq!(disjoint_paths(&l, l.alice(), l.bob(), 4).unwrap().len(), 1);
    }

    #[test]
    fn min_cost_flow_recovers_what_greedy_blocks() {
        // Greedy takes 0-1-2-3 (length 3) and then finds nothing; two disjoint
        // paths 0-1-3 and 0-2-3 exist.
        let text = "line 3\nnode 0 endpoint-alice\nnode 1 trusted\nnode 2 trusted\nnode 3 endpoint-bob\n\
                    link 0 1 1 0.15\nlink 1 2 1 0.15\nlink 2 3 1 0.15\nlink 1 3 5 0.15\nlink 0 2 5 0.15\n";
        let t = Topology::from_adjacency_text(text).unwrap();
        assert_eq!(greedy_disjoint(&t, NodeId(0), NodeId(3), 2).len(), 1);
        let paths = disjoint_paths(&t, NodeId(0), NodeId(3), 2).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].nodes, vec![NodeId(0), NodeId(1), NodeId(3)]);
        assert_eq!(paths[1].nodes, vec![NodeId(0), NodeId(2), NodeId(3)]);
    }

    #[test]
    fn split_at_relays_skips_switches() {
        let hops = [Hop { length_km: 1.0, alpha: 0.15 }; 3];
        let mut p = RoutePath::chain(&hops, NodeKind::Trusted).unwrap();
        p.kinds[2] = NodeKind::Switch;
        let parts = p.split_at(NodeKind::is_relay);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].hop_count(), 1);
        assert_eq!(parts[1].hop_count(), 2);
    }

    #[test]
    fn adjacency_text_round_trips() {
        for kind in TopologyKind::ALL {
            let t = build_topology(kind, 17.5, &params()).unwrap();
            let back = Topology::from_adjacency_text(&t.to_adjacency_text()).unwrap();
            assert_eq!(t, back);
        }
    }

    #[test]
    fn adjacency_text_rejects_self_loops() {
        let text = "direct 1\nnode 0 endpoint-alice\nnode 1 endpoint-bob\nlink 1 1 1 0.15\n";
        assert!(Topology::from_adjacency_text(text).is_err());
    }
}
