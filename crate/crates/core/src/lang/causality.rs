use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::{tarjan_scc, toposort};
use petgraph::graph::{DiGraph, NodeIndex};

use super::ast::{Pos, Program};
use super::LangError;

/// Why an occurrence is safe to read from the past.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Guard {
    /// Not delayed (only allowed outside cycles).
    None,
    /// Inside `wait(·)` or the second argument of `fby`.
    Delayed,
}

/// One identifier occurrence in a definition body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Occurrence {
    pub def: String,
    pub name: String,
    pub pos: Pos,
    pub guard: Guard,
    /// True when `name` is in the same strongly connected component as `def`.
    pub recursive: bool,
}

/// A strongly connected group of definitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    /// Members ordered so that undelayed dependencies come first.
    pub members: Vec<String>,
    pub recursive: bool,
}

/// A program that passed the causality check.
#[derive(Clone, Debug)]
pub struct Checked {
    pub program: Program,
    /// Components in dependency order.
    pub components: Vec<Component>,
    pub occurrences: Vec<Occurrence>,
}

impl Checked {
    pub fn component_of(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.members.iter().any(|m| m == name))
    }
}

/// Resolves names and checks that every cycle of definitions passes through
/// a delay.
pub fn check_causality(p: &Program) -> Result<Checked, LangError> {
    let mut seen = BTreeSet::new();
    for (name, pos) in p
        .inputs
        .iter()
        .map(|i| (&i.name, i.pos))
        .chain(p.defs.iter().map(|d| (&d.name, d.pos)))
    {
        if !seen.insert(name.clone()) {
            return Err(LangError::Duplicate { name: name.clone(), pos });
        }
    }

    let mut graph: DiGraph<usize, ()> = DiGraph::new();
    let nodes: Vec<NodeIndex> = (0..p.defs.len()).map(|i| graph.add_node(i)).collect();
    let index: BTreeMap<&str, usize> = p.defs.iter().enumerate().map(|(i, d)| (d.name.as_str(), i)).collect();
    let mut raw = Vec::new();
    for (i, d) in p.defs.iter().enumerate() {
        let mut err = None;
        d.expr.visit_idents(&mut |x, pos, guarded| {
            if let Some(&j) = index.get(x) {
                graph.update_edge(nodes[i], nodes[j], ());
                raw.push((i, j, pos, guarded));
            } else if p.input(x).is_none() && err.is_none() {
                err = Some(LangError::Unbound { name: x.to_owned(), pos });
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }

    // Edges point from a user to what it uses, so tarjan yields dependencies first.
    let sccs = tarjan_scc(&graph);
    let mut comp_of = vec![0; p.defs.len()];
    for (c, scc) in sccs.iter().enumerate() {
        for n in scc {
            comp_of[graph[*n]] = c;
        }
    }

    let occurrences: Vec<Occurrence> = raw
        .iter()
        .map(|&(i, j, pos, guarded)| Occurrence {
            def: p.defs[i].name.clone(),
            name: p.defs[j].name.clone(),
            pos,
            guard: if guarded { Guard::Delayed } else { Guard::None },
            recursive: comp_of[i] == comp_of[j],
        })
        .collect();

    let mut components = Vec::new();
    for (c, scc) in sccs.iter().enumerate() {
        let members: Vec<usize> = scc.iter().map(|n| graph[*n]).collect();
        let recursive = members.len() > 1 || raw.iter().any(|&(i, j, _, _)| i == j && comp_of[i] == c);
        if !recursive {
            components.push(Component {
                members: vec![p.defs[members[0]].name.clone()],
                recursive: false,
            });
            continue;
        }
        // Undelayed edges inside the component must not form a cycle.
        let mut inner: DiGraph<usize, ()> = DiGraph::new();
        let local: BTreeMap<usize, NodeIndex> = members.iter().map(|&m| (m, inner.add_node(m))).collect();
        for &(i, j, _, guarded) in &raw {
            if !guarded && comp_of[i] == c && comp_of[j] == c {
                inner.update_edge(local[&j], local[&i], ());
            }
        }
        match toposort(&inner, None) {
            Ok(order) => components.push(Component {
                members: order.iter().map(|n| p.defs[inner[*n]].name.clone()).collect(),
                recursive: true,
            }),
            Err(cycle) => {
                let culprit = inner[cycle.node_id()];
                let cyc: BTreeSet<usize> = tarjan_scc(&inner)
                    .into_iter()
                    .find(|s| s.iter().any(|n| inner[*n] == culprit))
                    .map(|s| s.iter().map(|n| inner[*n]).collect())
                    .unwrap_or_default();
                let &(i, j, pos, _) = raw
                    .iter()
                    .filter(|&&(i, j, _, g)| !g && cyc.contains(&i) && cyc.contains(&j))
                    .min_by_key(|&&(_, _, pos, _)| pos)
                    .expect("a cycle has an undelayed edge");
                return Err(LangError::Causality {
                    name: p.defs[j].name.clone(),
                    def: p.defs[i].name.clone(),
                    pos,
                });
            }
        }
    }

    Ok(Checked {
        program: p.clone(),
        components,
        occurrences,
    })
}
