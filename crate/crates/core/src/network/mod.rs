//! Road graph, congestible link travel times and time-dependent routing.

mod field;
mod routing;

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use crate::io::{parse_error, read_records};
use crate::{Error, Result};

pub use field::{within_day_update, BackgroundVolumes, LinkVolumes, TravelTimeField};
pub use routing::{search, shortest_path, FreeFlowMatrix, NoRoute, Route, Router, Tree};

/// Dense index of a node inside a [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeIx(pub u32);

/// Dense index of a link inside a [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkIx(pub u32);

impl NodeIx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl LinkIx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

/// Link as described in an input file: endpoints are external node ids.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LinkSpec {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    #[serde(rename = "length_m")]
    pub length: f64,
    #[serde(rename = "ffs_mps")]
    pub free_flow_speed: f64,
    #[serde(rename = "cap_vph")]
    pub capacity: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: u32,
    pub from: NodeIx,
    pub to: NodeIx,
    /// Meters.
    pub length: f64,
    /// Meters per second.
    pub free_flow_speed: f64,
    /// Vehicles per hour.
    pub capacity: f64,
    pub vdf_alpha: f64,
    pub vdf_beta: f64,
}

impl Link {
    #[inline]
    pub fn free_flow_time(&self) -> f64 {
        self.length / self.free_flow_speed
    }

    /// BPR volume-delay: `fft * (1 + alpha * (v / c)^beta)`.
    pub fn travel_time(&self, volume_vph: f64) -> f64 {
        let ratio = volume_vph.max(0.0) / self.capacity;
        self.free_flow_time() * (1.0 + self.vdf_alpha * ratio.powf(self.vdf_beta))
    }
}

/// Directed road graph.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<Node>,
    links: Vec<Link>,
    /// Outgoing links per node, ascending by link id.
    out: Vec<Vec<LinkIx>>,
    node_index: HashMap<u32, NodeIx>,
    link_index: HashMap<u32, LinkIx>,
}

#[derive(Deserialize)]
struct NodeRow {
    id: u32,
    x: f64,
    y: f64,
}

impl Network {
    pub fn new(nodes: Vec<Node>, links: Vec<LinkSpec>) -> Result<Self> {
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if !node.x.is_finite() || !node.y.is_finite() {
                return Err(Error::invalid(format!("node {}: non-finite coordinates", node.id)));
            }
            if node_index.insert(node.id, NodeIx(i as u32)).is_some() {
                return Err(Error::invalid(format!("duplicate node id {}", node.id)));
            }
        }
        let mut built = Vec::with_capacity(links.len());
        for spec in &links {
            built.push(Self::build_link(spec, &node_index).map_err(Error::Invalid)?);
        }
        Self::assemble(nodes, built, node_index)
    }

    /// Loads `id,x,y` nodes and `id,from,to,length_m,ffs_mps,cap_vph,alpha,beta` links.
    pub fn load(node_file: &Path, link_file: &Path) -> Result<Self> {
        let rows = read_records::<NodeRow>(node_file)?;
        let mut nodes = Vec::with_capacity(rows.len());
        let mut node_index = HashMap::with_capacity(rows.len());
        for (line, row) in rows {
            if !row.x.is_finite() || !row.y.is_finite() {
                return Err(parse_error(node_file, line, "non-finite coordinates"));
            }
            if node_index.insert(row.id, NodeIx(nodes.len() as u32)).is_some() {
                return Err(parse_error(node_file, line, format!("duplicate node id {}", row.id)));
            }
            nodes.push(Node {
                id: row.id,
                x: row.x,
                y: row.y,
            });
        }
        let rows = read_records::<LinkSpec>(link_file)?;
        let mut links = Vec::with_capacity(rows.len());
        for (line, spec) in rows {
            let link = Self::build_link(&spec, &node_index).map_err(|msg| parse_error(link_file, line, msg))?;
            links.push(link);
        }
        Self::assemble(nodes, links, node_index)
    }

    fn build_link(spec: &LinkSpec, nodes: &HashMap<u32, NodeIx>) -> std::result::Result<Link, String> {
        let endpoint = |id: u32| {
            nodes
                .get(&id)
                .copied()
                .ok_or_else(|| format!("link {} references unknown node {id}", spec.id))
        };
        let from = endpoint(spec.from)?;
        let to = endpoint(spec.to)?;
        if from == to {
            return Err(format!("link {} is a self-loop", spec.id));
        }
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("link {}: {name} must be positive, got {v}", spec.id))
            }
        };
        positive("length", spec.length)?;
        positive("free-flow speed", spec.free_flow_speed)?;
        positive("capacity", spec.capacity)?;
        if !(spec.alpha.is_finite() && spec.alpha >= 0.0 && spec.beta.is_finite() && spec.beta >= 0.0) {
            return Err(format!("link {}: alpha and beta must be non-negative", spec.id));
        }
        Ok(Link {
            id: spec.id,
            from,
            to,
            length: spec.length,
            free_flow_speed: spec.free_flow_speed,
            capacity: spec.capacity,
            vdf_alpha: spec.alpha,
            vdf_beta: spec.beta,
        })
    }

    fn assemble(nodes: Vec<Node>, links: Vec<Link>, node_index: HashMap<u32, NodeIx>) -> Result<Self> {
        let mut link_index = HashMap::with_capacity(links.len());
        let mut out = vec![Vec::new(); nodes.len()];
        for (i, link) in links.iter().enumerate() {
            if link_index.insert(link.id, LinkIx(i as u32)).is_some() {
                return Err(Error::invalid(format!("duplicate link id {}", link.id)));
            }
            out[link.from.index()].push(LinkIx(i as u32));
        }
        for adj in &mut out {
            adj.sort_by_key(|l| links[l.index()].id);
        }
        Ok(Self {
            nodes,
            links,
            out,
            node_index,
            link_index,
        })
    }

    /// Rectangular grid with bidirectional links between 4-neighbours.
    ///
    /// Node ids are `row * cols + col`, link ids are assigned in creation order.
    pub fn grid(rows: u32, cols: u32, spacing_m: f64, speed_mps: f64, capacity_vph: f64) -> Self {
        let mut nodes = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                nodes.push(Node {
                    id: r * cols + c,
                    x: c as f64 * spacing_m,
                    y: r as f64 * spacing_m,
                });
            }
        }
        let mut links = Vec::new();
        let mut add = |from: u32, to: u32| {
            let id = links.len() as u32;
            links.push(LinkSpec {
                id,
                from,
                to,
                length: spacing_m,
                free_flow_speed: speed_mps,
                capacity: capacity_vph,
                alpha: 0.15,
                beta: 4.0,
            });
        };
        for r in 0..rows {
            for c in 0..cols {
                let id = r * cols + c;
                if c + 1 < cols {
                    add(id, id + 1);
                    add(id + 1, id);
                }
                if r + 1 < rows {
                    add(id, id + cols);
                    add(id + cols, id);
                }
            }
        }
        Self::new(nodes, links).expect("grid construction is valid")
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    #[inline]
    pub fn node(&self, ix: NodeIx) -> &Node {
        &self.nodes[ix.index()]
    }

    #[inline]
    pub fn link(&self, ix: LinkIx) -> &Link {
        &self.links[ix.index()]
    }

    #[inline]
    pub fn out_links(&self, node: NodeIx) -> &[LinkIx] {
        &self.out[node.index()]
    }

    pub fn node_ix(&self, id: u32) -> Option<NodeIx> {
        self.node_index.get(&id).copied()
    }

    pub fn link_ix(&self, id: u32) -> Option<LinkIx> {
        self.link_index.get(&id).copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(id: u32, from: u32, to: u32, length: f64) -> LinkSpec {
        LinkSpec {
            id,
            from,
            to,
            length,
            free_flow_speed: 10.0,
            capacity: 1000.0,
            alpha: 0.15,
            beta: 4.0,
        }
    }

    fn nodes(n: u32) -> Vec<Node> {
        (0..n)
            .map(|id| Node {
                id,
                x: id as f64,
                y: 0.0,
            })
            .collect()
    }

    #[test]
    fn three_node_network() {
        let net = Network::new(
            nodes(3),
            vec![spec(0, 0, 1, 1000.0), spec(1, 1, 2, 1000.0), spec(2, 0, 2, 2500.0)],
        )
        .unwrap();
        assert_eq!(net.link_count(), 3);
        assert_eq!(net.out_links(NodeIx(0)).len(), 2);
        assert_eq!(net.link(LinkIx(0)).free_flow_time(), 100.0);
    }

    #[test]
    fn zero_length_link_is_rejected() {
        let err = Network::new(nodes(2), vec![spec(0, 0, 1, 0.0)]).unwrap_err();
        assert!(err.to_string().contains("length"), "{err}");
    }

    #[test]
    fn dangling_node_is_rejected() {
        let err = Network::new(nodes(2), vec![spec(7, 0, 5, 10.0)]).unwrap_err();
        assert!(err.to_string().contains("unknown node 5"), "{err}");
    }

    #[test]
    fn self_loop_is_rejected() {
        assert!(Network::new(nodes(2), vec![spec(0, 1, 1, 10.0)]).is_err());
    }

    #[test]
    fn bpr_closed_forms() {
        let link = Network::new(nodes(2), vec![spec(0, 0, 1, 1000.0)]).unwrap().links()[0].clone();
        let fft = link.free_flow_time();
        assert_eq!(link.travel_time(0.0), fft);
        assert!((link.travel_time(1000.0) - 1.15 * fft).abs() < 1e-9);
        assert!((link.travel_time(2000.0) - 3.4 * fft).abs() < 1e-9);
    }

    #[test]
    fn grid_shape() {
        let net = Network::grid(10, 10, 400.0, 10.0, 900.0);
        assert_eq!(net.node_count(), 100);
        assert_eq!(net.link_count(), 360);
    }
}
