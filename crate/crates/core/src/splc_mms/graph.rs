//! Bipartite agent–type graph of fractional holdings, cycle cancellation and
//! forest rounding.

use std::collections::VecDeque;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::programs::fractional_copy;
use super::SplcError;
use crate::model::FractionalAllocation;
use crate::rational::{self, Rational};

/// One fractional holding: agent `agent` holds copy `copy` of type `ty`,
/// carrying spending `weight = x * p_ty`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PriceEdge {
    pub agent: usize,
    pub ty: usize,
    pub copy: usize,
    #[serde(with = "rational::serde_text")]
    pub weight: Rational,
}

/// Spending graph over agents and types. Edges whose weight reaches the
/// price are saturated: they stay in the graph (and in node sums) but no
/// longer take part in cycles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PriceGraph {
    pub agents: usize,
    #[serde(with = "rational::serde_text_vec")]
    pub prices: Vec<Rational>,
    pub edges: Vec<PriceEdge>,
}

impl PriceGraph {
    /// One edge per fractional entry of a consolidated `x`. Every such type
    /// must have a positive price.
    pub fn new(x: &FractionalAllocation, prices: &[Rational]) -> Result<Self, SplcError> {
        let mut edges = Vec::new();
        for (i, row) in x.x.iter().enumerate() {
            for (j, held) in row.iter().enumerate() {
                if let Some((c, amount)) = fractional_copy(held) {
                    if !prices[j].is_positive() {
                        return Err(SplcError::Invariant(format!(
                            "fractional type {j} has no positive price"
                        )));
                    }
                    edges.push(PriceEdge {
                        agent: i,
                        ty: j,
                        copy: c,
                        weight: amount * &prices[j],
                    });
                }
            }
        }
        Ok(Self {
            agents: x.agents(),
            prices: prices.to_vec(),
            edges,
        })
    }

    pub fn types(&self) -> usize {
        self.prices.len()
    }

    pub fn is_saturated(&self, e: &PriceEdge) -> bool {
        e.weight >= self.prices[e.ty]
    }

    /// Total spending at each agent node.
    pub fn agent_sums(&self) -> Vec<Rational> {
        let mut s = vec![Rational::zero(); self.agents];
        for e in &self.edges {
            s[e.agent] += &e.weight;
        }
        s
    }

    /// Total spending at each type node.
    pub fn type_sums(&self) -> Vec<Rational> {
        let mut s = vec![Rational::zero(); self.types()];
        for e in &self.edges {
            s[e.ty] += &e.weight;
        }
        s
    }

    fn active(&self) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&k| !self.is_saturated(&self.edges[k]))
            .collect()
    }

    /// A cycle of unsaturated edges, as edge indices in traversal order.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        let nodes = self.agents + self.types();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
        for k in self.active() {
            let e = &self.edges[k];
            let (a, t) = (e.agent, self.agents + e.ty);
            adj[a].push((t, k));
            adj[t].push((a, k));
        }
        let mut visited = vec![false; nodes];
        for start in 0..nodes {
            if visited[start] || adj[start].is_empty() {
                continue;
            }
            let mut path_nodes = Vec::new();
            let mut path_edges = Vec::new();
            let mut on_path = vec![None; nodes];
            if let Some(c) = dfs(
                start,
                None,
                &adj,
                &mut visited,
                &mut on_path,
                &mut path_nodes,
                &mut path_edges,
            ) {
                return Some(c);
            }
        }
        None
    }

    /// `true` when no unsaturated cycle remains.
    pub fn is_forest(&self) -> bool {
        self.find_cycle().is_none()
    }
}

fn dfs(
    u: usize,
    via: Option<usize>,
    adj: &[Vec<(usize, usize)>],
    visited: &mut [bool],
    on_path: &mut [Option<usize>],
    path_nodes: &mut Vec<usize>,
    path_edges: &mut Vec<usize>,
) -> Option<Vec<usize>> {
    visited[u] = true;
    on_path[u] = Some(path_nodes.len());
    path_nodes.push(u);
    for &(w, e) in &adj[u] {
        if Some(e) == via {
            continue;
        }
        if let Some(pos) = on_path[w] {
            // path_edges[pos..] leads from w down to u; e closes the loop
            let mut cycle = path_edges[pos..].to_vec();
            cycle.push(e);
            return Some(cycle);
        }
        if visited[w] {
            continue;
        }
        path_edges.push(e);
        if let Some(c) = dfs(w, Some(e), adj, visited, on_path, path_nodes, path_edges) {
            return Some(c);
        }
        path_edges.pop();
    }
    path_nodes.pop();
    on_path[u] = None;
    None
}

/// One round of cycle cancellation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cancellation {
    /// `(agent, type)` pairs around the cycle, in order.
    pub cycle: Vec<(usize, usize)>,
    /// Pairs whose weight went down by `delta`; the rest went up.
    pub decreased: Vec<(usize, usize)>,
    #[serde(with = "rational::serde_text")]
    pub delta: Rational,
    /// Pairs that dropped to zero and left the graph.
    pub removed: Vec<(usize, usize)>,
    /// Pairs that reached their type's price.
    pub saturated: Vec<(usize, usize)>,
}

/// Shifts spending around cycles until none remain. Alternate edges of each
/// cycle move by `±delta`, so every node sum is unchanged. The decreasing
/// class is the one holding the lightest edge; `delta` is the smallest of
/// its weights and of the headroom `p_j - w` on the increasing class, so
/// each round removes or saturates at least one edge.
pub fn cancel_cycles(graph: &PriceGraph) -> (PriceGraph, Vec<Cancellation>) {
    let mut g = graph.clone();
    let mut log = Vec::new();
    while let Some(cycle) = g.find_cycle() {
        let lightest = cycle
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| {
                let (ea, eb) = (&g.edges[a], &g.edges[b]);
                ea.weight
                    .cmp(&eb.weight)
                    .then((ea.agent, ea.ty).cmp(&(eb.agent, eb.ty)))
            })
            .map(|(pos, _)| pos % 2)
            .expect("cycles are nonempty");
        let mut down = Vec::new();
        let mut up = Vec::new();
        for (pos, &k) in cycle.iter().enumerate() {
            if pos % 2 == lightest {
                down.push(k);
            } else {
                up.push(k);
            }
        }
        let mut delta = down
            .iter()
            .map(|&k| g.edges[k].weight.clone())
            .min()
            .expect("both classes are nonempty");
        for &k in &up {
            let e = &g.edges[k];
            let room = &g.prices[e.ty] - &e.weight;
            if room < delta {
                delta = room;
            }
        }
        let pair = |e: &PriceEdge| (e.agent, e.ty);
        let mut saturated = Vec::new();
        for &k in &down {
            g.edges[k].weight -= &delta;
        }
        for &k in &up {
            g.edges[k].weight += &delta;
            if g.is_saturated(&g.edges[k]) {
                saturated.push(pair(&g.edges[k]));
            }
        }
        let removed: Vec<(usize, usize)> = g
            .edges
            .iter()
            .filter(|e| e.weight.is_zero())
            .map(pair)
            .collect();
        log.push(Cancellation {
            cycle: cycle.iter().map(|&k| pair(&g.edges[k])).collect(),
            decreased: down.iter().map(|&k| pair(&g.edges[k])).collect(),
            delta,
            removed,
            saturated,
        });
        g.edges.retain(|e| !e.weight.is_zero());
    }
    (g, log)
}

/// Converts spending back into amounts `x = w / p` on the graph's edges,
/// leaving every integral entry of `x` as it was.
pub fn reprice_to_allocation(
    graph: &PriceGraph,
    x: &FractionalAllocation,
) -> FractionalAllocation {
    let mut out = x.clone();
    for row in out.x.iter_mut() {
        for held in row.iter_mut() {
            if let Some((c, _)) = fractional_copy(held) {
                held[c] = Rational::zero();
            }
        }
    }
    for e in &graph.edges {
        out.x[e.agent][e.ty][e.copy] = &e.weight / &graph.prices[e.ty];
    }
    out
}

/// One tree of the rounding forest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundedTree {
    pub root: usize,
    pub agents: Vec<usize>,
    pub types: Vec<usize>,
    /// `(type, agent)`: the parent agent that received the type's shared copy.
    pub awarded: Vec<(usize, usize)>,
}

/// Result of forest rounding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rounding {
    /// Copies of each type per agent.
    pub counts: Vec<Vec<usize>>,
    pub trees: Vec<RoundedTree>,
    /// Per agent, the type whose fraction it gave up to its parent, if any.
    pub lost: Vec<Option<usize>>,
}

/// Rounds an acyclic `x` in prefix form. Each tree is rooted at its
/// lowest-index agent; every type node gives one whole copy to its parent
/// agent, and children drop their fraction of it. Each agent loses at most
/// one fractional copy (the one shared with its parent type).
pub fn round_forest(x: &FractionalAllocation, copies: &[usize]) -> Result<Rounding, SplcError> {
    let n = x.agents();
    let t = copies.len();
    let mut counts = vec![vec![0usize; t]; n];
    let mut adj_agent: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut adj_type: Vec<Vec<usize>> = vec![Vec::new(); t];
    for (i, row) in x.x.iter().enumerate() {
        for (j, held) in row.iter().enumerate() {
            counts[i][j] = held.iter().filter(|v| v.is_one()).count();
            if fractional_copy(held).is_some() {
                adj_agent[i].push(j);
                adj_type[j].push(i);
            }
            if held.iter().any(|v| v.is_negative() || *v > Rational::one()) {
                return Err(SplcError::Invariant(format!("x[{i}][{j}] outside [0, 1]")));
            }
        }
    }
    let mut seen_agent = vec![false; n];
    let mut seen_type = vec![false; t];
    let mut lost = vec![None; n];
    let mut trees = Vec::new();
    for root in 0..n {
        if seen_agent[root] || adj_agent[root].is_empty() {
            continue;
        }
        let mut tree = RoundedTree {
            root,
            agents: vec![root],
            types: Vec::new(),
            awarded: Vec::new(),
        };
        seen_agent[root] = true;
        // queue of (agent, type it hangs from)
        let mut queue = VecDeque::from([(root, None::<usize>)]);
        while let Some((a, from)) = queue.pop_front() {
            for &j in &adj_agent[a] {
                if Some(j) == from {
                    continue;
                }
                if seen_type[j] {
                    return Err(SplcError::Invariant("rounding input has a cycle".into()));
                }
                seen_type[j] = true;
                tree.types.push(j);
                tree.awarded.push((j, a));
                counts[a][j] += 1;
                for &b in &adj_type[j] {
                    if b == a {
                        continue;
                    }
                    if seen_agent[b] {
                        return Err(SplcError::Invariant("rounding input has a cycle".into()));
                    }
                    seen_agent[b] = true;
                    lost[b] = Some(j);
                    tree.agents.push(b);
                    queue.push_back((b, Some(j)));
                }
            }
        }
        tree.agents.sort_unstable();
        tree.types.sort_unstable();
        trees.push(tree);
    }
    for (j, &k) in copies.iter().enumerate() {
        let used: usize = counts.iter().map(|row| row[j]).sum();
        if used > k {
            return Err(SplcError::Invariant(format!(
                "rounding over-allocates type {j}: {used} of {k}"
            )));
        }
    }
    Ok(Rounding { counts, trees, lost })
}
