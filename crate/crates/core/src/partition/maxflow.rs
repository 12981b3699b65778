//! Boykov-Kolmogorov augmenting-path max-flow on an undirected pairwise
//! graph with source and sink terminal links.

use std::collections::VecDeque;

const FREE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;
const NO_ARC: u32 = u32::MAX;

pub struct MaxFlow {
    first: Vec<u32>,
    head: Vec<u32>,
    next: Vec<u32>,
    rcap: Vec<f64>,
    /// Net terminal capacity: positive toward the source, negative toward
    /// the sink.
    tr_cap: Vec<f64>,
    parent: Vec<u32>,
    is_sink: Vec<bool>,
    queued: Vec<bool>,
    ts: Vec<u32>,
    dist: Vec<u32>,
    active: VecDeque<u32>,
    orphans: VecDeque<u32>,
    time: u32,
    flow: f64,
}

#[inline]
fn sister(a: u32) -> u32 {
    a ^ 1
}

impl MaxFlow {
    pub fn new(nodes: usize) -> Self {
        Self {
            first: vec![NO_ARC; nodes],
            head: Vec::new(),
            next: Vec::new(),
            rcap: Vec::new(),
            tr_cap: vec![0.0; nodes],
            parent: vec![FREE; nodes],
            is_sink: vec![false; nodes],
            queued: vec![false; nodes],
            ts: vec![0; nodes],
            dist: vec![0; nodes],
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
            flow: 0.0,
        }
    }

    /// Terminal capacities of node `v`.
    pub fn add_terminal(&mut self, v: u32, source: f64, sink: f64) {
        let both = source.min(sink);
        self.flow += both;
        self.tr_cap[v as usize] += source - sink;
    }

    /// Undirected edge: capacity `cap` in both directions.
    pub fn add_edge(&mut self, u: u32, v: u32, cap: f64) {
        self.add_arc_pair(u, v, cap, cap);
    }

    pub fn add_arc_pair(&mut self, u: u32, v: u32, cap: f64, rev_cap: f64) {
        let a = self.head.len() as u32;
        self.head.push(v);
        self.next.push(self.first[u as usize]);
        self.rcap.push(cap);
        self.first[u as usize] = a;
        self.head.push(u);
        self.next.push(self.first[v as usize]);
        self.rcap.push(rev_cap);
        self.first[v as usize] = a + 1;
    }

    fn activate(&mut self, v: u32) {
        if !self.queued[v as usize] {
            self.queued[v as usize] = true;
            self.active.push_back(v);
        }
    }

    fn next_active(&mut self) -> Option<u32> {
        while let Some(v) = self.active.pop_front() {
            self.queued[v as usize] = false;
            if self.parent[v as usize] != FREE {
                return Some(v);
            }
        }
        None
    }

    fn set_orphan(&mut self, v: u32) {
        self.parent[v as usize] = ORPHAN;
        self.orphans.push_back(v);
    }

    /// Runs to completion; returns the max-flow value.
    pub fn solve(&mut self) -> f64 {
        for v in 0..self.tr_cap.len() {
            let c = self.tr_cap[v];
            if c != 0.0 {
                self.is_sink[v] = c < 0.0;
                self.parent[v] = TERMINAL;
                self.ts[v] = 0;
                self.dist[v] = 1;
                self.activate(v as u32);
            }
        }
        let mut current: Option<u32> = None;
        loop {
            let i = match current.take().filter(|&i| self.parent[i as usize] != FREE) {
                Some(i) => i,
                None => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };
            let bridge = self.grow(i);
            self.time += 1;
            if let Some(a) = bridge {
                current = Some(i);
                self.augment(a);
                while let Some(o) = self.orphans.pop_front() {
                    if self.is_sink[o as usize] {
                        self.adopt_sink(o);
                    } else {
                        self.adopt_source(o);
                    }
                }
            }
        }
        self.flow
    }

    /// Expands the tree of `i`; returns an arc from the source tree to the
    /// sink tree if the trees touch.
    fn grow(&mut self, i: u32) -> Option<u32> {
        let iu = i as usize;
        let mut a = self.first[iu];
        while a != NO_ARC {
            let j = self.head[a as usize];
            let ju = j as usize;
            let open = if self.is_sink[iu] { self.rcap[sister(a) as usize] > 0.0 } else { self.rcap[a as usize] > 0.0 };
            if open {
                if self.parent[ju] == FREE {
                    self.is_sink[ju] = self.is_sink[iu];
                    self.parent[ju] = sister(a);
                    self.ts[ju] = self.ts[iu];
                    self.dist[ju] = self.dist[iu] + 1;
                    self.activate(j);
                } else if self.is_sink[ju] != self.is_sink[iu] {
                    return Some(if self.is_sink[iu] { sister(a) } else { a });
                } else if self.ts[ju] <= self.ts[iu] && self.dist[ju] > self.dist[iu] {
                    // Shorten the path of `j` through `i`.
                    self.parent[ju] = sister(a);
                    self.ts[ju] = self.ts[iu];
                    self.dist[ju] = self.dist[iu] + 1;
                }
            }
            a = self.next[a as usize];
        }
        None
    }

    fn augment(&mut self, middle: u32) {
        let mut bottleneck = self.rcap[middle as usize];
        // Source side: walk from the tail of `middle` to the source.
        let mut i = self.head[sister(middle) as usize];
        loop {
            let a = self.parent[i as usize];
            if a == TERMINAL {
                bottleneck = bottleneck.min(self.tr_cap[i as usize]);
                break;
            }
            bottleneck = bottleneck.min(self.rcap[sister(a) as usize]);
            i = self.head[a as usize];
        }
        let mut j = self.head[middle as usize];
        loop {
            let a = self.parent[j as usize];
            if a == TERMINAL {
                bottleneck = bottleneck.min(-self.tr_cap[j as usize]);
                break;
            }
            bottleneck = bottleneck.min(self.rcap[a as usize]);
            j = self.head[a as usize];
        }

        self.rcap[middle as usize] -= bottleneck;
        self.rcap[sister(middle) as usize] += bottleneck;
        let mut i = self.head[sister(middle) as usize];
        loop {
            let a = self.parent[i as usize];
            if a == TERMINAL {
                self.tr_cap[i as usize] -= bottleneck;
                if self.tr_cap[i as usize] <= 0.0 {
                    self.tr_cap[i as usize] = 0.0;
                    self.set_orphan(i);
                }
                break;
            }
            self.rcap[a as usize] += bottleneck;
            self.rcap[sister(a) as usize] -= bottleneck;
            if self.rcap[sister(a) as usize] <= 0.0 {
                self.rcap[sister(a) as usize] = 0.0;
                self.set_orphan(i);
            }
            i = self.head[a as usize];
        }
        let mut j = self.head[middle as usize];
        loop {
            let a = self.parent[j as usize];
            if a == TERMINAL {
                self.tr_cap[j as usize] += bottleneck;
                if self.tr_cap[j as usize] >= 0.0 {
                    self.tr_cap[j as usize] = 0.0;
                    self.set_orphan(j);
                }
                break;
            }
            self.rcap[sister(a) as usize] += bottleneck;
            self.rcap[a as usize] -= bottleneck;
            if self.rcap[a as usize] <= 0.0 {
                self.rcap[a as usize] = 0.0;
                self.set_orphan(j);
            }
            j = self.head[a as usize];
        }
        self.flow += bottleneck;
    }

    /// Distance of `j` to its terminal through valid parents, marking the
    /// path with the current time; `None` if the path reaches an orphan.
    fn origin_distance(&mut self, j: u32) -> Option<u32> {
        let mut d = 0u32;
        let mut k = j;
        loop {
            let ku = k as usize;
            if self.ts[ku] == self.time {
                d += self.dist[ku];
                break;
            }
            let a = self.parent[ku];
            d += 1;
            if a == TERMINAL {
                self.ts[ku] = self.time;
                self.dist[ku] = 1;
                break;
            }
            if a == ORPHAN {
                return None;
            }
            k = self.head[a as usize];
        }
        let mut k = j;
        let mut dd = d;
        while self.ts[k as usize] != self.time {
            self.ts[k as usize] = self.time;
            self.dist[k as usize] = dd;
            dd -= 1;
            k = self.head[self.parent[k as usize] as usize];
        }
        Some(d)
    }

    fn adopt_source(&mut self, i: u32) {
        self.adopt(i, false);
    }

    fn adopt_sink(&mut self, i: u32) {
        self.adopt(i, true);
    }

    fn adopt(&mut self, i: u32, sink: bool) {
        let iu = i as usize;
        let mut best: Option<(u32, u32)> = None;
        let mut a = self.first[iu];
        while a != NO_ARC {
            // Residual capacity from the candidate parent toward `i` (source
            // tree) or from `i` toward the candidate (sink tree).
            let cap = if sink { self.rcap[a as usize] } else { self.rcap[sister(a) as usize] };
            let j = self.head[a as usize];
            let ju = j as usize;
            if cap > 0.0 && self.is_sink[ju] == sink && self.parent[ju] != FREE {
                if let Some(d) = self.origin_distance(j) {
                    if best.map_or(true, |(_, bd)| d < bd) {
                        best = Some((a, d));
                    }
                }
            }
            a = self.next[a as usize];
        }
        if let Some((a, d)) = best {
            self.parent[iu] = a;
            self.ts[iu] = self.time;
            self.dist[iu] = d + 1;
            return;
        }
        let mut a = self.first[iu];
        while a != NO_ARC {
            let j = self.head[a as usize];
            let ju = j as usize;
            if self.is_sink[ju] == sink && self.parent[ju] != FREE {
                let cap = if sink { self.rcap[a as usize] } else { self.rcap[sister(a) as usize] };
                if cap > 0.0 {
                    self.activate(j);
                }
                let pa = self.parent[ju];
                if pa != TERMINAL && pa != ORPHAN && self.head[pa as usize] == i {
                    self.set_orphan(j);
                }
            }
            a = self.next[a as usize];
        }
        self.parent[iu] = FREE;
    }

    /// Whether `v` ends on the source side of the minimum cut. Nodes not
    /// reachable from the source go to the sink side.
    pub fn on_source_side(&self, v: u32) -> bool {
        self.parent[v as usize] != FREE && !self.is_sink[v as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Instance {
        n: usize,
        terminals: Vec<(f64, f64)>,
        edges: Vec<(u32, u32, f64)>,
    }

    fn cut_value(inst: &Instance, source_side: &[bool]) -> f64 {
        let mut c = 0.0;
        for (v, &(s, t)) in inst.terminals.iter().enumerate() {
            c += if source_side[v] { t } else { s };
        }
        for &(u, v, w) in &inst.edges {
            if source_side[u as usize] != source_side[v as usize] {
                c += w;
            }
        }
        c
    }

    fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
        let n = rng.gen_range(1..=12);
        let terminals = (0..n)
            .map(|_| {
                let s = if rng.gen_bool(0.4) { rng.gen_range(0.0..3.0) } else { 0.0 };
                let t = if rng.gen_bool(0.4) { rng.gen_range(0.0..3.0) } else { 0.0 };
                (s, t)
            })
            .collect();
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                if rng.gen_bool(0.35) {
                    edges.push((u, v, rng.gen_range(0.01..2.0)));
                }
            }
        }
        Instance { n, terminals, edges }
    }

    #[test]
    fn matches_exhaustive_min_cut() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..400 {
            let inst = random_instance(&mut rng);
            let mut g = MaxFlow::new(inst.n);
            for (v, &(s, t)) in inst.terminals.iter().enumerate() {
                g.add_terminal(v as u32, s, t);
            }
            for &(u, v, w) in &inst.edges {
                g.add_edge(u, v, w);
            }
            let flow = g.solve();
            let side: Vec<bool> = (0..inst.n as u32).map(|v| g.on_source_side(v)).collect();
            let got = cut_value(&inst, &side);
            let best = (0u32..1 << inst.n)
                .map(|m| {
                    let s: Vec<bool> = (0..inst.n).map(|v| m >> v & 1 == 1).collect();
                    cut_value(&inst, &s)
                })
                .fold(f64::INFINITY, f64::min);
            assert!((got - best).abs() <= 1e-12 * best.max(1.0), "{got} vs {best}");
            assert!((flow - best).abs() <= 1e-12 * best.max(1.0), "flow {flow} vs {best}");
        }
    }

    #[test]
    fn chain_cuts_the_cheaper_link() {
        let mut g = MaxFlow::new(3);
        g.add_terminal(0, 100.0, 0.0);
        g.add_terminal(2, 0.0, 100.0);
        g.add_edge(0, 1, 20.0);
        g.add_edge(1, 2, 2.0);
        assert_eq!(g.solve(), 2.0);
        assert!(g.on_source_side(0) && g.on_source_side(1) && !g.on_source_side(2));
    }

    #[test]
    fn grid_graph_flow_equals_cut() {
        // 30x30 grid, left column to source, right column to sink.
        let n = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let id = |x: usize, y: usize| (y * n + x) as u32;
        let mut g = MaxFlow::new(n * n);
        let mut edges = Vec::new();
        for y in 0..n {
            g.add_terminal(id(0, y), 1e9, 0.0);
            g.add_terminal(id(n - 1, y), 0.0, 1e9);
            for x in 0..n {
                if x + 1 < n {
                    edges.push((id(x, y), id(x + 1, y), rng.gen_range(0.1..1.0)));
                }
                if y + 1 < n {
                    edges.push((id(x, y), id(x, y + 1), rng.gen_range(0.1..1.0)));
                }
            }
        }
        for &(u, v, w) in &edges {
            g.add_edge(u, v, w);
        }
        let flow = g.solve();
        let cut: f64 = edges
            .iter()
            .filter(|&&(u, v, _)| g.on_source_side(u) != g.on_source_side(v))
            .map(|e| e.2)
            .sum();
        assert!((flow - cut).abs() < 1e-9 * flow);
        assert!(g.on_source_side(id(0, 5)) && !g.on_source_side(id(n - 1, 5)));
    }
}
