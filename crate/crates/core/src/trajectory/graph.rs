//! Dependency graph derived from the structural dependency fields.
//!
//! Three edge kinds: `parent` edges follow explicit parent indices,
//! `data_flow` edges connect a tool result to later events whose payload or
//! tool arguments overlap the result's token set, and `unit_call` edges
//! record delegation transitions between workflow units.

use super::*;
use crate::text;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    DataFlow,
    Parent,
    UnitCall,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeId {
    Event(usize),
    Unit(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub event_count: usize,
    pub units: Vec<String>,
    pub edges: Vec<Edge>,
}

impl DependencyGraph {
    pub fn has_outgoing_data_flow(&self, event_index: usize) -> bool {
        self.edges.iter().any(|e| {
            e.kind == EdgeKind::DataFlow && e.from == NodeId::Event(event_index)
        })
    }

    /// Delegation transitions in trajectory order, one entry per unit switch.
    pub fn unit_call_sequence(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .filter(|e| e.kind == EdgeKind::UnitCall)
            .filter_map(|e| match (&e.from, &e.to) {
                (NodeId::Unit(a), NodeId::Unit(b)) => Some((a.clone(), b.clone())),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GraphConfig {
    /// Overlap coefficient threshold for data-flow edges.
    pub data_flow_overlap: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            data_flow_overlap: 0.6,
        }
    }
}

pub fn build_dependency_graph(t: &Trajectory, cfg: &GraphConfig) -> DependencyGraph {
    let mut edges = Vec::new();
    let mut units: BTreeSet<String> = BTreeSet::new();

    for ev in &t.events {
        if let Some(u) = &ev.dependency.unit_id {
            units.insert(u.clone());
        }
        if let Some(p) = ev.dependency.parent_index {
            if p != ev.index {
                edges.push(Edge {
                    from: NodeId::Event(p),
                    to: NodeId::Event(ev.index),
                    kind: EdgeKind::Parent,
                });
            }
        }
    }

    // Data flow: a tool result's token set re-appearing downstream.
    let result_tokens: Vec<(usize, BTreeSet<String>)> = t
        .events
        .iter()
        .filter(|e| e.event_type == EventType::ToolResult && !e.payload.trim().is_empty())
        .map(|e| (e.index, text::token_set(&e.payload)))
        .collect();
    let event_tokens: Vec<BTreeSet<String>> = t
        .events
        .iter()
        .map(|e| {
            let mut tokens = text::token_set(&e.payload);
            if let Some(tool) = &e.tool {
                tokens.extend(text::token_set(&tool.flattened()));
            }
            tokens
        })
        .collect();
    for (src, src_tokens) in &result_tokens {
        if src_tokens.is_empty() {
            continue;
        }
        for target in (src + 1)..t.events.len() {
            if event_tokens[target].is_empty() {
                continue;
            }
            if text::overlap_coefficient(src_tokens, &event_tokens[target])
                >= cfg.data_flow_overlap
            {
                edges.push(Edge {
                    from: NodeId::Event(*src),
                    to: NodeId::Event(target),
                    kind: EdgeKind::DataFlow,
                });
            }
        }
    }

    // Unit calls at delegation boundaries. When parent links cross units
    // they name the delegating unit directly; a plain return of control
    // carries no parent link and creates no edge. Logs without any
    // cross-unit parent link fall back to adjacency transitions.
    let mut unit_edges = Vec::new();
    for ev in &t.events {
        let Some(unit) = ev.dependency.unit_id.as_deref() else {
            continue;
        };
        let Some(p) = ev.dependency.parent_index else {
            continue;
        };
        if let Some(parent_unit) = t.events[p].dependency.unit_id.as_deref() {
            if parent_unit != unit {
                unit_edges.push(Edge {
                    from: NodeId::Unit(parent_unit.to_string()),
                    to: NodeId::Unit(unit.to_string()),
                    kind: EdgeKind::UnitCall,
                });
            }
        }
    }
    if unit_edges.is_empty() {
        let mut current_unit: Option<&str> = None;
        for ev in &t.events {
            if let Some(u) = ev.dependency.unit_id.as_deref() {
                if let Some(prev) = current_unit {
                    if prev != u {
                        unit_edges.push(Edge {
                            from: NodeId::Unit(prev.to_string()),
                            to: NodeId::Unit(u.to_string()),
                            kind: EdgeKind::UnitCall,
                        });
                    }
                }
                current_unit = Some(u);
            }
        }
    }
    edges.extend(unit_edges);

    DependencyGraph {
        event_count: t.events.len(),
        units: units.into_iter().collect(),
        edges,
    }
}

/// Tarjan's algorithm, iterative. Nodes are `0..n`, edges are index pairs.
/// Returns the components; order follows discovery (reverse topological).
pub fn strongly_connected_components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(from, to) in edges {
        adj[from].push(to);
    }
    let mut index_of = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0usize;
    let mut components = Vec::new();

    // Explicit DFS frames: (node, next child position).
    for start in 0..n {
        if index_of[start] != usize::MAX {
            continue;
        }
        let mut frames: Vec<(usize, usize)> = vec![(start, 0)];
        while let Some(&(v, child)) = frames.last() {
            if index_of[v] == usize::MAX {
                index_of[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if child < adj[v].len() {
                frames.last_mut().expect("frame exists").1 += 1;
                let w = adj[v][child];
                if index_of[w] == usize::MAX {
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index_of[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index_of[v] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    component.sort_unstable();
                    components.push(component);
                }
            }
        }
    }
    components
}
