//! Mask thinning and centreline extraction.
//!
//! [`skeletonize`] runs the two-subiteration thinning of Zhang & Suen (1984)
//! to a fixpoint: a pixel is deleted when its neighbour count lies in [2, 6],
//! its neighbourhood has exactly one 0→1 transition, and the directional
//! products for the current subiteration vanish. [`longest_path_centreline`]
//! then picks the maximum-geodesic path between skeleton endpoints, which
//! resolves tail-split branches by simply outrunning them.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ingest::BinaryMask;

/// One-pixel-wide subset of a mask at the thinning fixpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub width: u32,
    pub height: u32,
    /// Skeleton pixels sorted by (x, y).
    pixels: Vec<(u32, u32)>,
}

impl Skeleton {
    pub fn pixels(&self) -> &[(u32, u32)] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn contains(&self, p: (u32, u32)) -> bool {
        self.pixels.binary_search(&p).is_ok()
    }

    pub fn as_mask(&self) -> BinaryMask {
        let mut mask = BinaryMask::empty(self.width, self.height);
        for &(x, y) in &self.pixels {
            mask.set(x, y, true);
        }
        mask
    }
}

/// 8-adjacency graph over skeleton pixels with degree classification.
#[derive(Debug, Clone)]
pub struct SkeletonGraph {
    /// Nodes sorted by (x, y); adjacency lists hold indices into this.
    pub nodes: Vec<(u32, u32)>,
    pub adjacency: Vec<Vec<usize>>,
    /// Degree <= 1.
    pub endpoints: Vec<usize>,
    /// Degree >= 3.
    pub junctions: Vec<usize>,
}

/// Ordered pixel path along the animal's long axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Centreline {
    pub path: Vec<(u32, u32)>,
}

impl Centreline {
    /// Cumulative Euclidean length of the pixel path (0 for a single pixel).
    pub fn pixel_arc_length(&self) -> f64 {
        self.path
            .windows(2)
            .map(|w| {
                let dx = w[1].0 as f64 - w[0].0 as f64;
                let dy = w[1].1 as f64 - w[0].1 as f64;
                (dx * dx + dy * dy).sqrt()
            })
            .sum()
    }
}

const NEIGHBOURS_8: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

struct Grid {
    width: i64,
    height: i64,
    on: Vec<bool>,
}

impl Grid {
    fn from_mask(mask: &BinaryMask) -> Self {
        let mut on = vec![false; mask.width as usize * mask.height as usize];
        for (x, y) in mask.iter_set() {
            on[y as usize * mask.width as usize + x as usize] = true;
        }
        Grid {
            width: mask.width as i64,
            height: mask.height as i64,
            on,
        }
    }

    #[inline]
    fn get(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width && y < self.height
            && self.on[(y * self.width + x) as usize]
    }

    #[inline]
    fn clear(&mut self, x: i64, y: i64) {
        self.on[(y * self.width + x) as usize] = false;
    }

    /// P2..P9 clockwise from north.
    #[inline]
    fn ring(&self, x: i64, y: i64) -> [bool; 8] {
        let mut r = [false; 8];
        for (i, (dx, dy)) in NEIGHBOURS_8.iter().enumerate() {
            r[i] = self.get(x + dx, y + dy);
        }
        r
    }
}

#[inline]
fn transitions(ring: &[bool; 8]) -> u32 {
    let mut a = 0;
    for i in 0..8 {
        if !ring[i] && ring[(i + 1) % 8] {
            a += 1;
        }
    }
    a
}

#[inline]
fn deletable(ring: &[bool; 8], second_pass: bool) -> bool {
    let b: u32 = ring.iter().map(|&v| v as u32).sum();
    if !(2..=6).contains(&b) || transitions(ring) != 1 {
        return false;
    }
    // Ring order is [N, NE, E, SE, S, SW, W, NW] = [P2..P9].
    let (north, east, south, west) = (ring[0], ring[2], ring[4], ring[6]);
    if second_pass {
        !(north && east && west) && !(north && south && west)
    } else {
        !(north && east && south) && !(east && south && west)
    }
}

/// Thin a mask to its Zhang–Suen fixpoint.
pub fn skeletonize(mask: &BinaryMask) -> Result<Skeleton> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut grid = Grid::from_mask(mask);
    let mut alive: Vec<(i64, i64)> = mask
        .iter_set()
        .map(|(x, y)| (x as i64, y as i64))
        .collect();
    let mut doomed: Vec<(i64, i64)> = Vec::new();

    loop {
        let mut deleted_any = false;
        for second_pass in [false, true] {
            doomed.clear();
            for &(x, y) in &alive {
                if deletable(&grid.ring(x, y), second_pass) {
                    doomed.push((x, y));
                }
            }
            // Deletions within a subiteration are simultaneous: every
            // condition above was evaluated against the same grid.
            for &(x, y) in &doomed {
                grid.clear(x, y);
            }
            if !doomed.is_empty() {
                deleted_any = true;
                alive.retain(|&(x, y)| grid.get(x, y));
            }
        }
        if !deleted_any {
            break;
        }
    }

    let mut pixels: Vec<(u32, u32)> = alive.iter().map(|&(x, y)| (x as u32, y as u32)).collect();
    pixels.sort_unstable();
    Ok(Skeleton {
        width: mask.width,
        height: mask.height,
        pixels,
    })
}

/// Build the 8-adjacency graph over skeleton pixels.
pub fn build_graph(skeleton: &Skeleton) -> SkeletonGraph {
    let nodes: Vec<(u32, u32)> = skeleton.pixels().to_vec();
    let index: HashMap<(u32, u32), usize> =
        nodes.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut adjacency = vec![Vec::new(); nodes.len()];
    for (i, &(x, y)) in nodes.iter().enumerate() {
        for (dx, dy) in NEIGHBOURS_8 {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx < 0 || ny < 0 {
                continue;
            }
            if let Some(&j) = index.get(&(nx as u32, ny as u32)) {
                adjacency[i].push(j);
            }
        }
    }
    // Sorted adjacency keeps traversals deterministic.
    for list in &mut adjacency {
        list.sort_unstable();
    }
    let mut endpoints = Vec::new();
    let mut junctions = Vec::new();
    for (i, list) in adjacency.iter().enumerate() {
        match list.len() {
            0 | 1 => endpoints.push(i),
            d if d >= 3 => junctions.push(i),
            _ => {}
        }
    }
    SkeletonGraph {
        nodes,
        adjacency,
        endpoints,
        junctions,
    }
}

/// Connected components of the graph (8-adjacency), each sorted, largest
/// first; ties broken by smallest lexicographic member.
pub fn components(graph: &SkeletonGraph) -> Vec<Vec<usize>> {
    let n = graph.nodes.len();
    let mut seen = vec![false; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        let mut comp = vec![start];
        while let Some(u) = queue.pop_front() {
            for &v in &graph.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    out
}

/// Count of 8-connected components in a mask; shared by tests and the
/// multiple-instance guard in the pipeline.
pub fn mask_component_count(mask: &BinaryMask) -> usize {
    let sk = Skeleton {
        width: mask.width,
        height: mask.height,
        pixels: {
            let mut p: Vec<(u32, u32)> = mask.iter_set().collect();
            p.sort_unstable();
            p
        },
    };
    components(&build_graph(&sk)).len()
}

/// BFS over unit-weight 8-adjacency from `start`, restricted to `allowed`.
/// Returns (distance, parent) arrays with usize::MAX for unreachable.
fn bfs(graph: &SkeletonGraph, start: usize, allowed: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let n = graph.nodes.len();
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::from([start]);
    dist[start] = 0;
    while let Some(u) = queue.pop_front() {
        for &v in &graph.adjacency[u] {
            if allowed[v] && dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    (dist, parent)
}

/// Extract the ordered centreline: the maximum-geodesic simple path between
/// endpoints of the largest component. Ties prefer the lexicographically
/// smallest (start, end) pixel pair; a component with no endpoints (a ring)
/// is walked greedily from its smallest pixel.
pub fn longest_path_centreline(graph: &SkeletonGraph) -> Centreline {
    assert!(!graph.nodes.is_empty(), "graph must have at least one node");
    let comps = components(graph);
    let comp = &comps[0];
    let mut allowed = vec![false; graph.nodes.len()];
    for &i in comp {
        allowed[i] = true;
    }

    let endpoints: Vec<usize> = graph
        .endpoints
        .iter()
        .copied()
        .filter(|&i| allowed[i])
        .collect();

    if endpoints.is_empty() {
        return ring_walk(graph, comp);
    }

    // Best (geodesic length, lexicographic (start, end) pixel pair).
    type PathKey = ((u32, u32), (u32, u32));
    let mut best: Option<(usize, PathKey)> = None;
    let mut best_path: Vec<usize> = Vec::new();
    for &s in &endpoints {
        let (dist, parent) = bfs(graph, s, &allowed);
        for &e in &endpoints {
            if e == s || dist[e] == usize::MAX {
                continue;
            }
            let key = (graph.nodes[s], graph.nodes[e]);
            let better = match &best {
                None => true,
                Some((d, k)) => dist[e] > *d || (dist[e] == *d && key < *k),
            };
            if better {
                let mut path = vec![e];
                let mut cur = e;
                while cur != s {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                best = Some((dist[e], key));
                best_path = path;
            }
        }
    }

    match best {
        Some(_) => Centreline {
            path: best_path.iter().map(|&i| graph.nodes[i]).collect(),
        },
        // Isolated pixel (degree 0 endpoint only, or a single node).
        None => Centreline {
            path: vec![graph.nodes[endpoints[0]]],
        },
    }
}

/// Greedy simple walk for endpoint-free components: start at the smallest
/// pixel, step to the smallest unvisited neighbour. Visits a thin ring fully
/// and always terminates.
fn ring_walk(graph: &SkeletonGraph, comp: &[usize]) -> Centreline {
    let start = comp[0]; // components() sorts members
    let mut visited = vec![false; graph.nodes.len()];
    let mut path = vec![start];
    visited[start] = true;
    let mut cur = start;
    loop {
        let next = graph.adjacency[cur].iter().copied().find(|&v| !visited[v]);
        match next {
            Some(v) => {
                visited[v] = true;
                path.push(v);
                cur = v;
            }
            None => break,
        }
    }
    Centreline {
        path: path.iter().map(|&i| graph.nodes[i]).collect(),
    }
}

/// Convenience composition used by the measurement pipeline. A mask whose
/// thinning fixpoint is empty (possible for dense block shapes) maps to
/// [`Error::EmptyMask`] rather than a panic downstream.
pub fn extract_centreline(mask: &BinaryMask) -> Result<Centreline> {
    let skeleton = skeletonize(mask)?;
    if skeleton.is_empty() {
        return Err(Error::EmptyMask);
    }
    let graph = build_graph(&skeleton);
    Ok(longest_path_centreline(&graph))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(rows: &[&str]) -> BinaryMask {
        let h = rows.len() as u32;
        let w = rows[0].len() as u32;
        let mut m = BinaryMask::empty(w, h);
        for (y, row) in rows.iter().enumerate() {
            for (x, c) in row.chars().enumerate() {
                if c == '#' {
                    m.set(x as u32, y as u32, true);
                }
            }
        }
        m
    }

    fn line_mask(len: u32) -> BinaryMask {
        let mut m = BinaryMask::empty(len + 2, 3);
        for x in 0..len {
            m.set(x + 1, 1, true);
        }
        m
    }

    #[test]
    fn thin_line_is_already_a_skeleton() {
        let m = line_mask(10);
        let sk = skeletonize(&m).unwrap();
        let expect: Vec<(u32, u32)> = (0..10).map(|x| (x + 1, 1)).collect();
        assert_eq!(sk.pixels(), expect.as_slice());
    }

    #[test]
    fn single_pixel_survives() {
        let mut m = BinaryMask::empty(5, 5);
        m.set(2, 2, true);
        let sk = skeletonize(&m).unwrap();
        assert_eq!(sk.pixels(), &[(2, 2)]);
    }

    #[test]
    fn empty_mask_is_an_error() {
        let m = BinaryMask::empty(4, 4);
        assert!(matches!(skeletonize(&m), Err(Error::EmptyMask)));
    }

    #[test]
    fn filled_rectangle_thins_to_a_central_path() {
        let mut m = BinaryMask::empty(22, 7);
        for y in 1..6 {
            for x in 1..21 {
                m.set(x, y, true);
            }
        }
        let sk = skeletonize(&m).unwrap();
        let graph = build_graph(&sk);
        assert_eq!(components(&graph).len(), 1);
        let line = longest_path_centreline(&graph);
        assert!(line.path.len() <= 20, "path too long: {}", line.path.len());
        assert!(line.path.len() >= 14, "path too short: {}", line.path.len());
        for &(_, y) in sk.pixels() {
            assert!((2..=4).contains(&y), "skeleton left centre rows: y={y}");
        }
    }

    #[test]
    fn graph_classifies_line_and_y_shape() {
        let line = skeletonize(&line_mask(3)).unwrap();
        let g = build_graph(&line);
        assert_eq!(g.endpoints.len(), 2);
        assert_eq!(g.junctions.len(), 0);

        // Three 5-pixel arms meeting at (5, 5).
        let y_shape = mask_from(&[
            "#..........",
            ".#.........",
            "..#........",
            "...#.......",
            "....#......",
            ".....#.....",
            ".....#.....",
            ".....#.....",
            ".....#.....",
            ".....#.....",
            "...........",
        ]);
        let mut with_arm = y_shape.clone();
        for (dx, dy) in [(1, -1), (2, -2), (3, -3), (4, -4), (5, -5)] {
            with_arm.set((5 + dx) as u32, (5 + dy) as u32, true);
        }
        let sk = skeletonize(&with_arm).unwrap();
        let g = build_graph(&sk);
        assert_eq!(g.endpoints.len(), 3);
        assert_eq!(g.junctions.len(), 1);
    }

    #[test]
    fn isolated_pixel_is_its_own_endpoint() {
        let mut m = BinaryMask::empty(3, 3);
        m.set(1, 1, true);
        let g = build_graph(&skeletonize(&m).unwrap());
        assert_eq!(g.nodes.len(), 1);
        assert_eq!(g.adjacency[0].len(), 0);
        assert_eq!(g.endpoints.len(), 1);
        let line = longest_path_centreline(&g);
        assert_eq!(line.path, vec![(1, 1)]);
    }

    #[test]
    fn straight_line_centreline_is_the_line() {
        let g = build_graph(&skeletonize(&line_mask(10)).unwrap());
        let line = longest_path_centreline(&g);
        assert_eq!(line.path.len(), 10);
        assert_eq!(line.path[0], (1, 1));
        assert_eq!(line.path[9], (10, 1));
    }

    /// Brute-force longest simple path between endpoint pairs by exhaustive
    /// DFS; only usable on tiny graphs.
    fn brute_force_longest_geodesic(g: &SkeletonGraph) -> usize {
        fn shortest(g: &SkeletonGraph, s: usize, e: usize) -> Option<usize> {
            let allowed = vec![true; g.nodes.len()];
            let (dist, _) = bfs(g, s, &allowed);
            (dist[e] != usize::MAX).then_some(dist[e])
        }
        let mut best = 0;
        for &s in &g.endpoints {
            for &e in &g.endpoints {
                if s == e {
                    continue;
                }
                if let Some(d) = shortest(g, s, e) {
                    best = best.max(d);
                }
            }
        }
        best + 1
    }

    #[test]
    fn y_shape_takes_the_two_long_arms() {
        // Arms of 10, 10, and 4 pixels from a junction pixel.
        let mut m = BinaryMask::empty(32, 32);
        let j = (15u32, 15u32);
        m.set(j.0, j.1, true);
        for i in 1..=10u32 {
            m.set(j.0 - i, j.1, true); // west arm
            m.set(j.0 + i, j.1 - i, true); // northeast arm
        }
        for i in 1..=4u32 {
            m.set(j.0 + i, j.1 + i, true); // short southeast arm
        }
        let sk = skeletonize(&m).unwrap();
        let g = build_graph(&sk);
        let line = longest_path_centreline(&g);
        assert_eq!(line.path.len(), 21);
        assert_eq!(line.path.len(), brute_force_longest_geodesic(&g));
        // Deterministic orientation: starts at the lexicographically smaller
        // endpoint of the winning pair.
        assert!(line.path.first().unwrap() < line.path.last().unwrap());
    }

    #[test]
    fn ring_walk_covers_a_thin_ring() {
        let m = mask_from(&[
            ".####.",
            ".#..#.",
            ".#..#.",
            ".####.",
        ]);
        // The ring is already one pixel wide everywhere; build the graph on
        // the raw pixels so no endpoint exists.
        let mut pixels: Vec<(u32, u32)> = m.iter_set().collect();
        pixels.sort_unstable();
        let sk = Skeleton {
            width: m.width,
            height: m.height,
            pixels,
        };
        let g = build_graph(&sk);
        assert!(g.endpoints.is_empty());
        let line = longest_path_centreline(&g);
        // Greedy walk must cover most of the 12-pixel ring and repeat nothing.
        assert!(line.path.len() >= 10, "covered {}", line.path.len());
        let mut dedup = line.path.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), line.path.len());
    }

    #[test]
    fn largest_component_wins() {
        let mut m = BinaryMask::empty(24, 8);
        for x in 1..15 {
            m.set(x, 2, true); // 14-pixel line
        }
        for x in 18..21 {
            m.set(x, 6, true); // 3-pixel noise blob
        }
        let sk = skeletonize(&m).unwrap();
        let g = build_graph(&sk);
        let line = longest_path_centreline(&g);
        assert_eq!(line.path.len(), 14);
        assert!(line.path.iter().all(|&(_, y)| y == 2));
    }

    #[test]
    fn centreline_is_adjacent_and_repeat_free() {
        let m = mask_from(&[
            "................",
            ".####...........",
            "..#####..........",
            "...########.....",
            ".....#########..",
            "........#######.",
            "................",
        ]);
        let line = extract_centreline(&m).unwrap();
        assert!(line.path.len() > 5);
        for w in line.path.windows(2) {
            let dx = (w[1].0 as i64 - w[0].0 as i64).abs();
            let dy = (w[1].1 as i64 - w[0].1 as i64).abs();
            assert!(dx <= 1 && dy <= 1 && (dx, dy) != (0, 0));
        }
        let mut dedup = line.path.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), line.path.len());
    }

    #[test]
    fn spur_shorter_than_distance_to_ends_never_moves_endpoints() {
        // A straight 30-pixel path with a spur attached mid-way; the spur is
        // strictly shorter than its distance to either end.
        for attach in [8u32, 15, 20] {
            for spur_len in 1..std::cmp::min(attach, 29 - attach) {
                let mut pixels: Vec<(u32, u32)> = (0..30).map(|x| (x + 1, 20)).collect();
                for s in 1..=spur_len {
                    pixels.push((attach + 1, 20 - s));
                }
                pixels.sort_unstable();
                let sk = Skeleton {
                    width: 40,
                    height: 40,
                    pixels,
                };
                let g = build_graph(&sk);
                let line = longest_path_centreline(&g);
                assert_eq!(line.path[0], (1, 20), "attach {attach} spur {spur_len}");
                assert_eq!(line.path[29], (30, 20), "attach {attach} spur {spur_len}");
            }
        }
    }
}
