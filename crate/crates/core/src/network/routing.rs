use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::rc::Rc;
use std::sync::Arc;

use thiserror::Error;

use super::{LinkIx, Network, NodeIx, TravelTimeField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no route from node {origin} to node {dest}")]
pub struct NoRoute {
    pub origin: u32,
    pub dest: u32,
}

/// A path through the network departing at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub links: Vec<LinkIx>,
    pub depart: f64,
    /// Seconds.
    pub total_time: f64,
    /// Meters.
    pub total_distance: f64,
}

impl Route {
    pub fn arrival(&self) -> f64 {
        self.depart + self.total_time
    }
}

/// Earliest-arrival labels from one origin at one departure time.
#[derive(Debug, Clone)]
pub struct Tree {
    pub origin: NodeIx,
    pub depart: f64,
    arrival: Vec<f64>,
    pred: Vec<Option<LinkIx>>,
}

impl Tree {
    /// Absolute arrival time at `node`, infinite when unreachable.
    #[inline]
    pub fn arrival(&self, node: NodeIx) -> f64 {
        self.arrival[node.index()]
    }

    #[inline]
    pub fn travel_time(&self, node: NodeIx) -> Option<f64> {
        let a = self.arrival[node.index()];
        a.is_finite().then_some(a - self.depart)
    }

    pub fn route_to(&self, network: &Network, dest: NodeIx) -> Result<Route, NoRoute> {
        let arrival = self.arrival[dest.index()];
        if !arrival.is_finite() {
            return Err(NoRoute {
                origin: network.node(self.origin).id,
                dest: network.node(dest).id,
            });
        }
        let mut links = Vec::new();
        let mut at = dest;
        while let Some(l) = self.pred[at.index()] {
            links.push(l);
            at = network.link(l).from;
        }
        links.reverse();
        let total_distance = links.iter().map(|&l| network.link(l).length).sum();
        Ok(Route {
            links,
            depart: self.depart,
            total_time: arrival - self.depart,
            total_distance,
        })
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Label {
    time: f64,
    node: u32,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on time, then node index
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Label-setting time-dependent Dijkstra from `origin` departing at `depart`.
///
/// A link entered at time `t` takes the field's value for the bin containing
/// `t`. Equal arrival times are resolved towards the smaller link id.
pub fn search(network: &Network, field: &TravelTimeField, origin: NodeIx, depart: f64) -> Tree {
    let n = network.node_count();
    let mut arrival = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<LinkIx>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    arrival[origin.index()] = depart;
    heap.push(Label {
        time: depart,
        node: origin.0,
    });
    while let Some(Label { time, node }) = heap.pop() {
        let u = node as usize;
        if settled[u] || time > arrival[u] {
            continue;
        }
        settled[u] = true;
        for &l in network.out_links(NodeIx(node)) {
            let link = network.link(l);
            let v = link.to.index();
            if settled[v] {
                continue;
            }
            let candidate = time + field.time(l, time);
            let better = candidate < arrival[v]
                || (candidate == arrival[v] && pred[v].is_some_and(|p| link.id < network.link(p).id));
            if better {
                let improved = candidate < arrival[v];
                arrival[v] = candidate;
                pred[v] = Some(l);
                if improved {
                    heap.push(Label {
                        time: candidate,
                        node: link.to.0,
                    });
                }
            }
        }
    }
    Tree {
        origin,
        depart,
        arrival,
        pred,
    }
}

/// Time-minimal route from `origin` to `dest` departing at `depart`.
pub fn shortest_path(
    network: &Network,
    field: &TravelTimeField,
    origin: NodeIx,
    dest: NodeIx,
    depart: f64,
) -> Result<Route, NoRoute> {
    if origin == dest {
        return Ok(Route {
            links: Vec::new(),
            depart,
            total_time: 0.0,
            total_distance: 0.0,
        });
    }
    search(network, field, origin, depart).route_to(network, dest)
}

/// All-pairs shortest free-flow travel times.
///
/// Every field entry is at least the free-flow time, so these are lower
/// bounds on any time-dependent travel time.
#[derive(Debug, Clone)]
pub struct FreeFlowMatrix {
    n: usize,
    times: Vec<f64>,
}

impl FreeFlowMatrix {
    pub fn new(network: &Network) -> Self {
        let n = network.node_count();
        let mut times = vec![f64::INFINITY; n * n];
        let mut heap = BinaryHeap::new();
        for s in 0..n {
            let row = &mut times[s * n..(s + 1) * n];
            row[s] = 0.0;
            heap.clear();
            heap.push(Label {
                time: 0.0,
                node: s as u32,
            });
            while let Some(Label { time, node }) = heap.pop() {
                if time > row[node as usize] {
                    continue;
                }
                for &l in network.out_links(NodeIx(node)) {
                    let link = network.link(l);
                    let candidate = time + link.free_flow_time();
                    if candidate < row[link.to.index()] {
                        row[link.to.index()] = candidate;
                        heap.push(Label {
                            time: candidate,
                            node: link.to.0,
                        });
                    }
                }
            }
        }
        Self { n, times }
    }

    #[inline]
    pub fn get(&self, origin: NodeIx, dest: NodeIx) -> f64 {
        self.times[origin.index() * self.n + dest.index()]
    }
}

const TREE_CACHE_LIMIT: usize = 8192;

/// Routing front-end for one simulation pass.
///
/// Memoises search trees by `(origin, departure time)`; the field is
/// immutable for the router's lifetime so cached answers stay exact.
pub struct Router<'a> {
    network: &'a Network,
    field: &'a TravelTimeField,
    free_flow: Arc<FreeFlowMatrix>,
    cache: RefCell<HashMap<(u32, u64), Rc<Tree>>>,
}

impl<'a> Router<'a> {
    pub fn new(network: &'a Network, field: &'a TravelTimeField) -> Self {
        Self::with_free_flow(network, field, Arc::new(FreeFlowMatrix::new(network)))
    }

    pub fn with_free_flow(network: &'a Network, field: &'a TravelTimeField, free_flow: Arc<FreeFlowMatrix>) -> Self {
        Self {
            network,
            field,
            free_flow,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn network(&self) -> &'a Network {
        self.network
    }

    pub fn field(&self) -> &'a TravelTimeField {
        self.field
    }

    pub fn tree(&self, origin: NodeIx, depart: f64) -> Rc<Tree> {
        let key = (origin.0, depart.to_bits());
        if let Some(tree) = self.cache.borrow().get(&key) {
            return Rc::clone(tree);
        }
        let tree = Rc::new(search(self.network, self.field, origin, depart));
        let mut cache = self.cache.borrow_mut();
        if cache.len() >= TREE_CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, Rc::clone(&tree));
        tree
    }

    /// Travel time of the shortest route, `None` if unreachable.
    pub fn travel_time(&self, origin: NodeIx, dest: NodeIx, depart: f64) -> Option<f64> {
        if origin == dest {
            return Some(0.0);
        }
        self.tree(origin, depart).travel_time(dest)
    }

    /// Absolute arrival time; `depart` itself when `origin == dest`.
    pub fn arrival(&self, origin: NodeIx, dest: NodeIx, depart: f64) -> Option<f64> {
        if origin == dest {
            return Some(depart);
        }
        let a = self.tree(origin, depart).arrival(dest);
        a.is_finite().then_some(a)
    }

    pub fn route(&self, origin: NodeIx, dest: NodeIx, depart: f64) -> Result<Route, NoRoute> {
        if origin == dest {
            return shortest_path(self.network, self.field, origin, dest, depart);
        }
        self.tree(origin, depart).route_to(self.network, dest)
    }

    #[inline]
    pub fn lower_bound(&self, origin: NodeIx, dest: NodeIx) -> f64 {
        self.free_flow.get(origin, dest)
    }

    pub fn free_flow(&self) -> &Arc<FreeFlowMatrix> {
        &self.free_flow
    }
}
