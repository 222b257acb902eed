//! Neighbor graphs over patch vectors and the shortest-path (geodesic)
//! distances along them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::patch::PatchSet;

/// Largest graph accepted by the Floyd–Warshall path; it is O(V³) and only
/// kept as a cross-check.
pub const FLOYD_MAX_ORDER: usize = 500;

fn squared_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Euclidean distance between two flattened patches.
pub fn patch_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::dims(u.len(), v.len()));
    }
    Ok(squared_distance(u, v).sqrt())
}

/// Undirected weighted graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
    neighbors: usize,
    stitched: Vec<(usize, usize, f64)>,
}

impl NeighborGraph {
    /// Builds a graph from undirected edges. Parallel edges keep the lighter
    /// weight; self loops are dropped.
    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); vertex_count];
        for &(a, b, w) in edges {
            if a >= vertex_count || b >= vertex_count {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range for {vertex_count} vertices"
                )));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) has invalid weight {w}"
                )));
            }
            if a != b {
                adjacency[a].push((b, w));
                adjacency[b].push((a, w));
            }
        }
        let mut graph = Self {
            adjacency,
            neighbors: 0,
            stitched: Vec::new(),
        };
        graph.normalize();
        Ok(graph)
    }

    /// Exact `δ`-nearest-neighbor graph over `points` (row-major, `dim`
    /// values each), symmetrized by union. Ties prefer the lower index.
    /// Disconnected pieces are joined to the largest component by their
    /// single shortest bridging edge.
    pub fn knn(points: &[f64], dim: usize, delta: usize) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(Error::dims(format!("multiple of {dim}"), points.len()));
        }
        let n = points.len() / dim;
        if delta == 0 || delta >= n {
            return Err(Error::InvalidParameter(format!(
                "neighbor count must satisfy 1 <= delta < {n}, got {delta}"
            )));
        }
        let point = |i: usize| &points[i * dim..(i + 1) * dim];
        let directed: Vec<Vec<(usize, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut cand: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (squared_distance(point(i), point(j)), j))
                    .collect();
                let by_dist_then_index =
                    |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                cand.select_nth_unstable_by(delta - 1, by_dist_then_index);
                cand.truncate(delta);
                cand.sort_unstable_by(by_dist_then_index);
                cand.into_iter().map(|(d2, j)| (j, d2.sqrt())).collect()
            })
            .collect();

        let mut adjacency = vec![Vec::new(); n];
        for (i, list) in directed.into_iter().enumerate() {
            for (j, w) in list {
                adjacency[i].push((j, w));
                adjacency[j].push((i, w));
            }
        }
        let mut graph = Self {
            adjacency,
            neighbors: delta,
            stitched: Vec::new(),
        };
        graph.normalize();
        graph.stitch(points, dim);
        Ok(graph)
    }

    fn normalize(&mut self) {
        for list in &mut self.adjacency {
            list.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            list.dedup_by(|next, kept| next.0 == kept.0);
        }
    }

    fn add_edge(&mut self, a: usize, b: usize, w: f64) {
        self.adjacency[a].push((b, w));
        self.adjacency[b].push((a, w));
        self.adjacency[a].sort_by_key(|e| e.0);
        self.adjacency[b].sort_by_key(|e| e.0);
    }

    fn stitch(&mut self, points: &[f64], dim: usize) {
        let components = self.components();
        if components.len() <= 1 {
            return;
        }
        let point = |i: usize| &points[i * dim..(i + 1) * dim];
        // Largest component wins; equal sizes fall back to discovery order,
        // which starts from the lowest vertex.
        let principal_idx = components
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let principal = components[principal_idx].clone();
        for (ci, comp) in components.iter().enumerate() {
            if ci == principal_idx {
                continue;
            }
            let mut best = (f64::INFINITY, 0, 0);
            for &a in comp {
                for &b in &principal {
                    let d2 = squared_distance(point(a), point(b));
                    if d2 < best.0 {
                        best = (d2, a, b);
                    }
                }
            }
            let (d2, a, b) = best;
            let w = d2.sqrt();
            self.add_edge(a, b, w);
            self.stitched.push((a.min(b), a.max(b), w));
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    /// The `δ` the graph was built with, or 0 for explicit edge lists.
    pub fn neighbor_count(&self) -> usize {
        self.neighbors
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search_by_key(&b, |e| e.0).is_ok()
    }

    /// Edges added to join disconnected components, as `(low, high, weight)`.
    pub fn stitched_edges(&self) -> &[(usize, usize, f64)] {
        &self.stitched
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &(u, _) in &self.adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_count() <= 1 || self.components().len() == 1
    }
}

/// `δ`-nearest-neighbor graph over the patches of an image.
pub fn build_knn_graph(patches: &PatchSet, delta: usize) -> Result<NeighborGraph> {
    NeighborGraph::knn(patches.as_flat(), patches.dim(), delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GeodesicMethod {
    /// Binary-heap Dijkstra from every source.
    #[default]
    Dijkstra,
    /// Floyd–Warshall; limited to [`FLOYD_MAX_ORDER`] vertices.
    Floyd,
}

impl fmt::Display for GeodesicMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeodesicMethod::Dijkstra => "dijkstra",
            GeodesicMethod::Floyd => "floyd",
        })
    }
}

impl FromStr for GeodesicMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dijkstra" => Ok(GeodesicMethod::Dijkstra),
            "floyd" => Ok(GeodesicMethod::Floyd),
            other => Err(Error::Parse(format!("unknown geodesic method {other:?}"))),
        }
    }
}

/// Dense symmetric matrix of geodesic distances, stored in single precision.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicDistanceMatrix {
    order: usize,
    data: Vec<f32>,
}

impl GeodesicDistanceMatrix {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j] as f64
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.order..(i + 1) * self.order]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path lengths from `source` to every vertex (infinity when
/// unreachable).
pub fn single_source(graph: &NeighborGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        vertex: source,
    });
    while let Some(HeapEntry { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(u, w) in graph.neighbors(v) {
            let nd = d + w;
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(HeapEntry { dist: nd, vertex: u });
            }
        }
    }
    dist
}

fn floyd_warshall(graph: &NeighborGraph) -> Result<Vec<f64>> {
    let n = graph.vertex_count();
    if n > FLOYD_MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "floyd is limited to {FLOYD_MAX_ORDER} vertices, graph has {n}"
        )));
    }
    let mut d = vec![f64::INFINITY; n * n];
    for v in 0..n {
        d[v * n + v] = 0.0;
        for &(u, w) in graph.neighbors(v) {
            if w < d[v * n + u] {
                d[v * n + u] = w;
            }
        }
    }
    for k in 0..n {
        let row_k = d[k * n..(k + 1) * n].to_vec();
        for i in 0..n {
            let dik = d[i * n + k];
            if dik == f64::INFINITY {
                continue;
            }
            let row_i = &mut d[i * n..(i + 1) * n];
            for (dij, &dkj) in row_i.iter_mut().zip(&row_k) {
                let via = dik + dkj;
                if via < *dij {
                    *dij = via;
                }
            }
        }
    }
    Ok(d)
}

/// All-pairs geodesics in full double precision, row-major `n × n`.
pub fn all_pairs_geodesics_f64(graph: &NeighborGraph, method: GeodesicMethod) -> Result<Vec<f64>> {
    let n = graph.vertex_count();
    let d = match method {
        GeodesicMethod::Floyd => floyd_warshall(graph)?,
        GeodesicMethod::Dijkstra => {
            let mut d = vec![0.0; n * n];
            d.par_chunks_mut(n.max(1))
                .enumerate()
                .for_each(|(s, row)| row.copy_from_slice(&single_source(graph, s)));
            d
        }
    };
    // any unreachable pair also leaves something unreachable from vertex 0
    if let Some(pos) = d[..n].iter().position(|v| !v.is_finite()) {
        return Err(Error::DisconnectedGraph(pos));
    }
    Ok(d)
}

/// All-pairs geodesic distance matrix. Paths are accumulated in `f64` and
/// stored as `f32`; the stored matrix is exactly symmetric.
pub fn all_pairs_geodesics(
    graph: &NeighborGraph,
    method: GeodesicMethod,
) -> Result<GeodesicDistanceMatrix> {
    let n = graph.vertex_count();
    if !graph.is_connected() {
        let comps = graph.components();
        let stray = comps.get(1).and_then(|c| c.first()).copied().unwrap_or(0);
        return Err(Error::DisconnectedGraph(stray));
    }
    let mut data = match method {
        GeodesicMethod::Floyd => floyd_warshall(graph)?
            .into_iter()
            .map(|v| v as f32)
            .collect::<Vec<f32>>(),
        GeodesicMethod::Dijkstra => {
            let mut data = vec![0f32; n * n];
            data.par_chunks_mut(n.max(1))
                .enumerate()
                .for_each(|(s, row)| {
                    for (out, v) in row.iter_mut().zip(single_source(graph, s)) {
                        *out = v as f32;
                    }
                });
            data
        }
    };
    // Paths found from opposite ends can round differently; keep the shorter.
    const TILE: usize = 64;
    for bi in (0..n).step_by(TILE) {
        for bj in (bi..n).step_by(TILE) {
            for i in bi..(bi + TILE).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + TILE).min(n) {
                    let m = data[i * n + j].min(data[j * n + i]);
                    data[i * n + j] = m;
                    data[j * n + i] = m;
                }
            }
        }
    }
    Ok(GeodesicDistanceMatrix { order: n, data })
}
