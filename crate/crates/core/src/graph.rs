//! Immutable undirected graphs in compressed sparse row form.
//!
//! Self-loops are allowed and contribute 1 to the degree of their vertex, so
//! the degree vector is exactly the row sums of the 0/1 adjacency matrix.
//! Duplicate edges collapse and edge direction in input files is ignored.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("graph has no vertices")]
    Empty,

    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("vertex {vertex} has degree zero; the random walk is undefined there")]
    ZeroDegree { vertex: usize },

    #[error("vertex {vertex} is unreachable from the seed set")]
    Disconnected { vertex: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("empty seed set")]
    NoSeeds,
}

impl GraphError {
    pub fn is_io(&self) -> bool {
        matches!(self, GraphError::Io { .. })
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            GraphError::Malformed { .. }
                | GraphError::Empty
                | GraphError::VertexOutOfRange { .. }
                | GraphError::InvalidDistribution(_)
                | GraphError::NoSeeds
        )
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> GraphError + '_ {
    move |source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Undirected graph with sorted, deduplicated adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    total_degree: u64,
}

impl Graph {
    /// Builds a graph on `n` vertices. Pairs are unordered; duplicates and
    /// reversed duplicates are collapsed.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: w, n });
                }
            }
            adj[u].push(v);
            if u != v {
                adj[v].push(u);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut list in adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(&list);
            offsets.push(neighbors.len());
        }
        let total_degree = neighbors.len() as u64;
        Ok(Graph {
            offsets,
            neighbors,
            total_degree,
        })
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges, self-loops included.
    pub fn edge_count(&self) -> usize {
        let loops = (0..self.n()).filter(|&v| self.has_edge(v, v)).count();
        (self.neighbors.len() - loops) / 2 + loops
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|v| self.degree(v)).collect()
    }

    pub fn total_degree(&self) -> u64 {
        self.total_degree
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Iterates over each undirected edge once as `(u, v)` with `u <= v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u <= v)
                .map(move |v| (u, v))
        })
    }

    /// First vertex with no neighbors, if any.
    pub fn isolated_vertex(&self) -> Option<usize> {
        (0..self.n()).find(|&v| self.degree(v) == 0)
    }

    /// Stationary distribution `d / sum(d)` of the walk.
    pub fn degree_distribution(&self) -> Vec<f64> {
        let total = self.total_degree as f64;
        (0..self.n()).map(|v| self.degree(v) as f64 / total).collect()
    }

    /// Applies `W = A D^-1` to an arbitrary vector (mass-preserving, linear).
    ///
    /// Assumes every degree is positive; callers check with
    /// [`Graph::isolated_vertex`] once up front.
    pub(crate) fn apply_walk(&self, x: &[f64], scaled: &mut Vec<f64>, out: &mut [f64]) {
        scaled.clear();
        scaled.extend(
            x.iter()
                .enumerate()
                .map(|(v, &xv)| xv / self.degree(v) as f64),
        );
        for (u, slot) in out.iter_mut().enumerate() {
            *slot = self.neighbors(u).iter().map(|&v| scaled[v]).sum();
        }
    }

    /// Induced subgraph on `vertices` (any order, duplicates ignored). The
    /// new dense order follows ascending old index; the returned map sends
    /// old indices to new ones.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<(Graph, VertexMap), GraphError> {
        let n = self.n();
        let mut keep = vec![false; n];
        for &v in vertices {
            if v >= n {
                return Err(GraphError::VertexOutOfRange { vertex: v, n });
            }
            keep[v] = true;
        }
        let kept: Vec<u64> = (0..n).filter(|&v| keep[v]).map(|v| v as u64).collect();
        let map = VertexMap::from_sorted_originals(kept);
        let edges = self.edges().filter_map(|(u, v)| {
            Some((map.dense(u as u64)?, map.dense(v as u64)?))
        });
        let sub = Graph::from_edges(map.len(), edges.collect::<Vec<_>>())?;
        Ok((sub, map))
    }
}

/// Bijection between original vertex ids and dense indices `0..n`.
///
/// Dense indices are assigned in ascending order of original id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VertexMap {
    originals: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl VertexMap {
    /// `originals` must be strictly increasing.
    fn from_sorted_originals(originals: Vec<u64>) -> VertexMap {
        debug_assert!(originals.windows(2).all(|w| w[0] < w[1]));
        let index = originals.iter().enumerate().map(|(i, &o)| (o, i)).collect();
        VertexMap { originals, index }
    }

    pub fn from_originals<I: IntoIterator<Item = u64>>(ids: I) -> VertexMap {
        let mut originals: Vec<u64> = ids.into_iter().collect();
        originals.sort_unstable();
        originals.dedup();
        VertexMap::from_sorted_originals(originals)
    }

    pub fn identity(n: usize) -> VertexMap {
        VertexMap::from_sorted_originals((0..n as u64).collect())
    }

    pub fn len(&self) -> usize {
        self.originals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.originals.is_empty()
    }

    pub fn dense(&self, original: u64) -> Option<usize> {
        self.index.get(&original).copied()
    }

    pub fn original(&self, dense: usize) -> u64 {
        self.originals[dense]
    }

    pub fn originals(&self) -> &[u64] {
        &self.originals
    }

    /// Chains `self` (original -> intermediate dense) with `inner`
    /// (intermediate dense, viewed as ids -> final dense).
    pub fn then(&self, inner: &VertexMap) -> VertexMap {
        let originals = inner
            .originals
            .iter()
            .map(|&mid| self.originals[mid as usize])
            .collect::<Vec<_>>();
        // Both maps are monotone, so the composition stays sorted.
        VertexMap::from_sorted_originals(originals)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "original,dense")?;
        for (dense, original) in self.originals.iter().enumerate() {
            writeln!(out, "{original},{dense}")?;
        }
        Ok(())
    }
}

/// A list of (possibly overlapping) communities over dense vertex indices.
/// Members are kept sorted and unique.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommunitySet {
    communities: Vec<Vec<usize>>,
}

impl CommunitySet {
    pub fn new(communities: Vec<Vec<usize>>) -> CommunitySet {
        let communities = communities
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        CommunitySet { communities }
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    pub fn get(&self, i: usize) -> &[usize] {
        &self.communities[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.communities.iter().map(Vec::as_slice)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.communities.iter().map(Vec::len).collect()
    }

    /// Re-expresses members through `map` (old dense index -> new dense
    /// index), dropping members the map does not contain. Communities that
    /// end up empty are removed.
    pub fn restrict(&self, map: &VertexMap) -> CommunitySet {
        CommunitySet::new(
            self.communities
                .iter()
                .map(|c| {
                    c.iter()
                        .filter_map(|&v| map.dense(v as u64))
                        .collect::<Vec<_>>()
                })
                .filter(|c| !c.is_empty())
                .collect(),
        )
    }

    pub fn write<W: Write>(&self, mut out: W, vmap: &VertexMap) -> std::io::Result<()> {
        for c in &self.communities {
            let line = c
                .iter()
                .map(|&v| vmap.original(v).to_string())
                .collect::<Vec<_>>()
                .join("\t");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Outcome of [`load_communities`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityLoad {
    pub communities: CommunitySet,
    /// Member ids absent from the vertex map.
    pub dropped_members: usize,
    /// Lines that had no surviving member.
    pub skipped_lines: usize,
}

fn data_lines(path: &Path) -> Result<impl Iterator<Item = (usize, Result<String, GraphError>)> + '_, GraphError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(move |(i, line)| (i + 1, line.map_err(io_err(path))))
        .filter(|(_, line)| match line {
            Ok(l) => {
                let t = l.trim();
                !t.is_empty() && !t.starts_with('#')
            }
            Err(_) => true,
        }))
}

fn parse_id(token: &str, path: &Path, line: usize) -> Result<u64, GraphError> {
    token.parse::<u64>().map_err(|_| GraphError::Malformed {
        path: path.to_path_buf(),
        line,
        message: format!("expected a nonnegative integer id, found {token:?}"),
    })
}

/// Reads a whitespace-separated edge list (SNAP style, `#` comments).
pub fn load_edge_list<P: AsRef<Path>>(path: P) -> Result<(Graph, VertexMap), GraphError> {
    let path = path.as_ref();
    let mut raw = Vec::new();
    for (line_no, line) in data_lines(path)? {
        let line = line?;
        let mut tokens = line.split_whitespace();
        let (Some(a), Some(b)) = (tokens.next(), tokens.next()) else {
            return Err(GraphError::Malformed {
                path: path.to_path_buf(),
                line: line_no,
                message: "expected two vertex ids".into(),
            });
        };
        raw.push((parse_id(a, path, line_no)?, parse_id(b, path, line_no)?));
    }
    if raw.is_empty() {
        return Err(GraphError::Empty);
    }
    let vmap = VertexMap::from_originals(raw.iter().flat_map(|&(a, b)| [a, b]));
    let edges = raw
        .iter()
        .map(|&(a, b)| (vmap.index[&a], vmap.index[&b]))
        .collect::<Vec<_>>();
    let g = Graph::from_edges(vmap.len(), edges)?;
    Ok((g, vmap))
}

pub fn write_edge_list<W: Write>(g: &Graph, vmap: &VertexMap, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    for (u, v) in g.edges() {
        writeln!(out, "{}\t{}", vmap.original(u), vmap.original(v))?;
    }
    out.flush()
}

/// Reads a SNAP-style community file, one community per line.
pub fn load_communities<P: AsRef<Path>>(path: P, vmap: &VertexMap) -> Result<CommunityLoad, GraphError> {
    let path = path.as_ref();
    let mut communities = Vec::new();
    let mut dropped_members = 0;
    let mut skipped_lines = 0;
    for (line_no, line) in data_lines(path)? {
        let line = line?;
        let mut members = Vec::new();
        for token in line.split_whitespace() {
            match vmap.dense(parse_id(token, path, line_no)?) {
                Some(v) => members.push(v),
                None => dropped_members += 1,
            }
        }
        if members.is_empty() {
            log::warn!("{}:{line_no}: no member survives the vertex map; skipped", path.display());
            skipped_lines += 1;
        } else {
            communities.push(members);
        }
    }
    if dropped_members > 0 {
        log::info!("{}: dropped {dropped_members} members absent from the graph", path.display());
    }
    Ok(CommunityLoad {
        communities: CommunitySet::new(communities),
        dropped_members,
        skipped_lines,
    })
}

/// Connected component labels, numbered in order of their smallest vertex.
pub fn components(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if label[v] == usize::MAX {
                    label[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    label
}

/// Largest connected component. Ties go to the component holding the
/// smallest vertex index, which is also the smallest original id because
/// dense indices follow original-id order.
pub fn largest_connected_component(g: &Graph) -> (Graph, VertexMap) {
    let label = components(g);
    let count = label.iter().max().map_or(0, |&m| m + 1);
    let mut sizes = vec![0usize; count];
    for &l in &label {
        sizes[l] += 1;
    }
    // Labels are ordered by smallest member, so the first maximum wins ties.
    let best = sizes
        .iter()
        .enumerate()
        .fold(0, |best, (l, &s)| if s > sizes[best] { l } else { best });
    let members: Vec<usize> = (0..g.n()).filter(|&v| label[v] == best).collect();
    g.induced_subgraph(&members)
        .expect("component members are in range")
}

fn check_seeds(g: &Graph, seeds: &[usize]) -> Result<(), GraphError> {
    if seeds.is_empty() {
        return Err(GraphError::NoSeeds);
    }
    if let Some(&v) = seeds.iter().find(|&&v| v >= g.n()) {
        return Err(GraphError::VertexOutOfRange { vertex: v, n: g.n() });
    }
    Ok(())
}

/// Multi-source BFS hop distances; `usize::MAX` marks unreachable vertices.
pub fn seed_distances(g: &Graph, seeds: &[usize]) -> Result<Vec<usize>, GraphError> {
    check_seeds(g, seeds)?;
    let mut dist = vec![usize::MAX; g.n()];
    let mut queue = VecDeque::new();
    for &s in seeds {
        if dist[s] != 0 {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &v in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    Ok(dist)
}

/// Induced subgraph on every vertex within `hops` BFS steps of the seeds.
pub fn bfs_subgraph(g: &Graph, seeds: &[usize], hops: usize) -> Result<(Graph, VertexMap), GraphError> {
    let dist = seed_distances(g, seeds)?;
    let within: Vec<usize> = (0..g.n()).filter(|&v| dist[v] <= hops).collect();
    g.induced_subgraph(&within)
}

/// Largest hop distance from a non-seed vertex to the seed set.
pub fn max_seed_eccentricity(g: &Graph, seeds: &[usize]) -> Result<usize, GraphError> {
    let dist = seed_distances(g, seeds)?;
    let mut worst = 0;
    for (v, &d) in dist.iter().enumerate() {
        if d == usize::MAX {
            return Err(GraphError::Disconnected { vertex: v });
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

fn check_distribution(x: &[f64], n: usize) -> Result<(), GraphError> {
    if x.len() != n {
        return Err(GraphError::InvalidDistribution(format!(
            "length {} does not match vertex count {n}",
            x.len()
        )));
    }
    if let Some(v) = x.iter().position(|&xv| !(xv >= 0.0) || !xv.is_finite()) {
        return Err(GraphError::InvalidDistribution(format!(
            "entry {v} is {} (must be finite and nonnegative)",
            x[v]
        )));
    }
    let total: f64 = x.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(GraphError::InvalidDistribution(format!(
            "entries sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Validates a walk input: a distribution over a graph without isolated
/// vertices.
pub fn check_walk_input(g: &Graph, x: &[f64]) -> Result<(), GraphError> {
    check_distribution(x, g.n())?;
    if let Some(vertex) = g.isolated_vertex() {
        return Err(GraphError::ZeroDegree { vertex });
    }
    Ok(())
}

/// One random-walk step `W x` with `W = A D^-1`.
pub fn walk_step(g: &Graph, x: &[f64]) -> Result<Vec<f64>, GraphError> {
    check_walk_input(g, x)?;
    let mut out = vec![0.0; g.n()];
    g.apply_walk(x, &mut Vec::with_capacity(g.n()), &mut out);
    Ok(out)
}

/// Writes an edge list and a community file.
pub fn save_graph_files(
    g: &Graph,
    communities: &CommunitySet,
    vmap: &VertexMap,
    edges_path: &Path,
    communities_path: &Path,
) -> Result<(), GraphError> {
    let f = File::create(edges_path).map_err(io_err(edges_path))?;
    write_edge_list(g, vmap, f).map_err(io_err(edges_path))?;
    let f = File::create(communities_path).map_err(io_err(communities_path))?;
    let mut w = BufWriter::new(f);
    communities
        .write(&mut w, vmap)
        .and_then(|_| w.flush())
        .map_err(io_err(communities_path))
}
