//! Calderón–Zygmund quadtree, keystone squares, keystone paths and
//! representative points.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::besov_set::is_ok;
use crate::config::Config;
use crate::geometry::{children, dilate, DyadicAddr, Point2, Square};
use crate::{Error, Result};

/// Fraction of the side by which a leaf's sidelength must shrink along a path
/// per step in the recorded decay certificate.
pub const DECAY_RATE: f64 = 0.25;

/// Empirical certificate `delta_{k2} <= constant (1 - rate)^{k2 - k1} delta_{k1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub constant: f64,
    pub rate: f64,
}

/// One entry of the keystone-pair scale map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaPair {
    pub mu: usize,
    pub mu2: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzDecomposition {
    pub root: Square,
    pub points: Vec<Point2>,
    pub leaves: Vec<Square>,
    /// Neighbor lists, each sorted and including the leaf itself.
    pub adjacency: Vec<Vec<usize>>,
    /// Indices of points in `1.1 Q_nu`.
    pub e_nu: Vec<Vec<usize>>,
    pub x_nu: Vec<Point2>,
    /// Keystone leaves, in increasing leaf order; position is the keystone index mu.
    pub keystones: Vec<usize>,
    pub mu_of_nu: Vec<usize>,
    pub paths: Vec<Vec<usize>>,
    pub decay: Vec<DecayCertificate>,
    pub x_sharp: Vec<Point2>,
    /// Indices of points in `9 Q#_mu`.
    pub e_sharp: Vec<Vec<usize>>,
    pub delta_pairs: Vec<DeltaPair>,
    /// Squares the cutter split, all of them not OK.
    pub cut_squares: Vec<Square>,
}

/// Root square centered at the origin with `E` inside its inner tenth.
pub fn choose_root(e: &[Point2]) -> Result<Square> {
    check_distinct(e)?;
    if e.is_empty() {
        let mut unit = Square::new(Point2::new(0.0, 0.0), 1.0);
        unit.dyadic_addr = Some(DyadicAddr::ROOT);
        return Ok(unit);
    }
    let reach = e.iter().map(|x| 2.0 * x.norm_inf()).fold(1.0f64, f64::max);
    let side = (10.5 * reach).log2().ceil().exp2();
    let mut root = Square::new(Point2::new(0.0, 0.0), side);
    root.dyadic_addr = Some(DyadicAddr::ROOT);
    Ok(root)
}

fn check_distinct(e: &[Point2]) -> Result<()> {
    if let Some(bad) = e.iter().find(|x| !(x.x.is_finite() && x.y.is_finite())) {
        return Err(Error::invalid_input(format!("non-finite point {bad:?}")));
    }
    let mut sorted: Vec<(f64, f64)> = e.iter().map(|x| (x.x, x.y)).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::invalid_input(format!(
            "duplicate point ({}, {})",
            w[0].0, w[0].1
        )));
    }
    Ok(())
}

fn min_gap(e: &[Point2]) -> f64 {
    let mut g = f64::INFINITY;
    for (i, a) in e.iter().enumerate() {
        for b in &e[i + 1..] {
            g = g.min(a.dist(*b));
        }
    }
    g
}

/// Leaves of the cutting procedure and the squares that were split.
pub fn cut(
    root: &Square,
    e: &[Point2],
    p: f64,
    c1: f64,
    angles: usize,
) -> Result<(Vec<Square>, Vec<Square>)> {
    let eps = if e.len() >= 2 {
        min_gap(e) / 100.0
    } else {
        root.side
    };
    let cap = (root.side / eps).log2().ceil().max(0.0) as u32 + 4;
    let mut leaves = Vec::new();
    let mut split = Vec::new();
    let mut stack = vec![*root];
    while let Some(q) = stack.pop() {
        let level = q.dyadic_addr.map_or(0, |a| a.level);
        if is_ok(&q, e, p, c1, angles)? {
            leaves.push(q);
            continue;
        }
        if level >= cap {
            return Err(Error::internal(format!(
                "cutting exceeded depth cap {cap} at square {:?}",
                q.center
            )));
        }
        split.push(q);
        // Reverse push keeps leaves in depth-first child order.
        stack.extend(children(&q).into_iter().rev());
    }
    Ok((leaves, split))
}

/// Sorted neighbor lists (including self) from dyadic touching.
pub fn adjacency(leaves: &[Square]) -> Vec<Vec<usize>> {
    let n = leaves.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        leaves[a]
            .lower()
            .x
            .partial_cmp(&leaves[b].lower().x)
            .unwrap()
    });
    let mut adj = vec![Vec::new(); n];
    for (pos, &a) in order.iter().enumerate() {
        let hi = leaves[a].upper().x;
        for &b in &order[pos..] {
            if leaves[b].lower().x > hi {
                break;
            }
            if leaves[a].intersects(&leaves[b]) {
                adj[a].push(b);
                if a != b {
                    adj[b].push(a);
                }
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

/// Leaves with no strictly smaller leaf meeting their 100-dilate.
pub fn find_keystones(leaves: &[Square]) -> Vec<usize> {
    (0..leaves.len())
        .filter(|&k| {
            let big = dilate(&leaves[k], 100.0).expect("positive factor");
            leaves
                .iter()
                .all(|q| q.side >= leaves[k].side || !q.intersects(&big))
        })
        .collect()
}

/// Address lookup for the leaves of one tree.
#[derive(Debug, Clone)]
pub struct LeafIndex {
    root: Square,
    max_level: u32,
    map: HashMap<DyadicAddr, usize>,
}

impl LeafIndex {
    pub fn new(root: &Square, leaves: &[Square]) -> Self {
        let mut map = HashMap::with_capacity(leaves.len());
        let mut max_level = 0;
        for (k, q) in leaves.iter().enumerate() {
            let a = q.dyadic_addr.expect("leaves carry dyadic addresses");
            max_level = max_level.max(a.level);
            map.insert(a, k);
        }
        LeafIndex {
            root: *root,
            max_level,
            map,
        }
    }

    /// Leaf containing `x`; points on shared edges go to the upper/right leaf,
    /// points outside the root are clamped onto it.
    pub fn locate(&self, x: Point2) -> usize {
        let lo = self.root.lower();
        let rel = ((x.x - lo.x) / self.root.side, (x.y - lo.y) / self.root.side);
        for level in 0..=self.max_level {
            let n = (1i64 << level) as f64;
            let i = ((rel.0 * n).floor() as i64).clamp(0, (1i64 << level) - 1);
            let j = ((rel.1 * n).floor() as i64).clamp(0, (1i64 << level) - 1);
            if let Some(&k) = self.map.get(&DyadicAddr { level, i, j }) {
                return k;
            }
        }
        unreachable!("leaves tile the root")
    }
}

/// Leaves crossed by the segment from `from` to `to` (closest points), from
/// `from` up to and including `to`, each consecutive pair touching.
fn segment_walk(leaves: &[Square], index: &LeafIndex, from: usize, to: usize) -> Vec<usize> {
    let (a, b) = leaves[from].closest_points(&leaves[to]);
    let len = a.dist(b);
    let mut out = Vec::new();
    if len == 0.0 {
        out.push(to);
        return out;
    }
    let min_side = leaves.iter().map(|q| q.side).fold(f64::INFINITY, f64::min);
    let mut nudge = 1e-6 * min_side / len;
    let mut cur = from;
    let mut t = 0.0;
    for _ in 0..4 * leaves.len() + 8 {
        let exit = leaves[cur]
            .clip_segment(a, b)
            .map_or(t, |(_, t1)| t1)
            .max(t);
        if exit >= 1.0 {
            break;
        }
        let s = (exit + nudge).min(1.0);
        let next = index.locate(a + s * (b - a));
        if next == to {
            break;
        }
        if next == cur {
            nudge *= 2.0;
            t = s;
            continue;
        }
        out.push(next);
        cur = next;
        t = exit;
    }
    out.push(to);
    out
}

/// Shortest path between two leaves through the adjacency graph.
fn bfs_path(adj: &[Vec<usize>], from: usize, to: usize) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; adj.len()];
    prev[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(k) = queue.pop_front() {
        if k == to {
            let mut path = vec![to];
            let mut c = to;
            while c != from {
                c = prev[c];
                path.push(c);
            }
            path.reverse();
            return Some(path[1..].to_vec());
        }
        for &n in &adj[k] {
            if prev[n] == usize::MAX {
                prev[n] = k;
                queue.push_back(n);
            }
        }
    }
    None
}

/// Marker path from `start` to a keystone.
pub fn keystone_path(
    leaves: &[Square],
    adj: &[Vec<usize>],
    index: &LeafIndex,
    is_key: &[bool],
    start: usize,
) -> Result<Vec<usize>> {
    let mut path = vec![start];
    let mut marker = start;
    let mut seen = vec![false; leaves.len()];
    while !is_key[marker] {
        if std::mem::replace(&mut seen[marker], true) {
            return Err(Error::internal(format!(
                "keystone path revisits leaf {marker}"
            )));
        }
        let q = &leaves[marker];
        let big = dilate(q, 100.0)?;
        let mut best: Option<(f64, usize)> = None;
        for (k, c) in leaves.iter().enumerate() {
            if c.side <= 0.5 * q.side && c.intersects(&big) {
                let d = c.distance(q);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, k));
                }
            }
        }
        let next = best
            .ok_or_else(|| {
                Error::internal(format!(
                    "non-keystone leaf {marker} has no smaller leaf nearby"
                ))
            })?
            .1;
        let mut seg = segment_walk(leaves, index, marker, next);
        let valid = std::iter::once(marker)
            .chain(seg.iter().copied())
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| adj[w[0]].binary_search(&w[1]).is_ok());
        if !valid {
            seg = bfs_path(adj, marker, next)
                .ok_or_else(|| Error::internal("adjacency graph is disconnected"))?;
        }
        path.extend(seg);
        marker = next;
    }
    Ok(path)
}

/// Smallest constant in the decay certificate for a path at rate `DECAY_RATE`.
pub fn decay_constant(leaves: &[Square], path: &[usize]) -> f64 {
    let mut c: f64 = 1.0;
    for k1 in 0..path.len() {
        for k2 in k1 + 1..path.len() {
            let ratio = leaves[path[k2]].side / leaves[path[k1]].side;
            c = c.max(ratio / (1.0 - DECAY_RATE).powi((k2 - k1) as i32));
        }
    }
    c
}

fn dist_to_set(x: Point2, e: &[Point2]) -> f64 {
    e.iter().map(|y| x.dist(*y)).fold(f64::INFINITY, f64::min)
}

/// Representative point in `Q/2` far from `E`.
pub fn representative_point(q: &Square, e: &[Point2]) -> Result<Point2> {
    let triple = Square::new(q.center, 3.0 * q.side);
    if !e.iter().any(|x| triple.contains(*x)) {
        return Ok(q.center);
    }
    let mut best = (f64::NEG_INFINITY, q.center);
    for j in 0..9 {
        for i in 0..9 {
            let x =
                q.center + 0.5 * q.side * Point2::new(i as f64 / 8.0 - 0.5, j as f64 / 8.0 - 0.5);
            let d = dist_to_set(x, e);
            if d > best.0 {
                best = (d, x);
            }
        }
    }
    if best.0 < 0.2 * q.side {
        return Err(Error::Config(format!(
            "no representative point at distance side/5 in leaf of side {}; use a smaller c1",
            q.side
        )));
    }
    Ok(best.1)
}

fn indices_in(q: &Square, e: &[Point2]) -> Vec<usize> {
    (0..e.len()).filter(|&i| q.contains(e[i])).collect()
}

/// Minimum `delta_nu` over adjacent pairs grouped by keystone pair.
pub fn delta_pairs(leaves: &[Square], adj: &[Vec<usize>], mu_of_nu: &[usize]) -> Vec<DeltaPair> {
    let mut map = std::collections::BTreeMap::<(usize, usize), f64>::new();
    for (nu, nbrs) in adj.iter().enumerate() {
        for &nu2 in nbrs {
            let key = (mu_of_nu[nu], mu_of_nu[nu2]);
            let d = map.entry(key).or_insert(f64::INFINITY);
            *d = d.min(leaves[nu].side);
        }
    }
    map.into_iter()
        .map(|((mu, mu2), delta)| DeltaPair { mu, mu2, delta })
        .collect()
}

impl CzDecomposition {
    pub fn build(e: &[Point2], cfg: &Config) -> Result<CzDecomposition> {
        cfg.validate()?;
        let root = choose_root(e)?;
        let (leaves, cut_squares) = cut(&root, e, cfg.p, cfg.c1, cfg.angle_count)?;
        let adjacency = adjacency(&leaves);
        let e_nu = leaves
            .iter()
            .map(|q| indices_in(&dilate(q, 1.1).expect("positive"), e))
            .collect();
        if leaves.len() == 1 {
            let x0 = root.center + Point2::new(0.2 * root.side, 0.2 * root.side);
            return Ok(CzDecomposition {
                root,
                points: e.to_vec(),
                leaves,
                adjacency,
                e_nu,
                x_nu: vec![x0],
                keystones: Vec::new(),
                mu_of_nu: Vec::new(),
                paths: Vec::new(),
                decay: Vec::new(),
                x_sharp: Vec::new(),
                e_sharp: Vec::new(),
                delta_pairs: Vec::new(),
                cut_squares,
            });
        }
        let x_nu = leaves
            .iter()
            .map(|q| representative_point(q, e))
            .collect::<Result<Vec<_>>>()?;
        let inner = dilate(&root, 0.99)?;
        if let Some(x) = x_nu.iter().find(|x| !inner.contains(**x)) {
            return Err(Error::internal(format!(
                "representative {x:?} outside 0.99 of the root"
            )));
        }
        let keystones = find_keystones(&leaves);
        let mut is_key = vec![false; leaves.len()];
        let mut mu_index = vec![usize::MAX; leaves.len()];
        for (mu, &k) in keystones.iter().enumerate() {
            is_key[k] = true;
            mu_index[k] = mu;
        }
        let index = LeafIndex::new(&root, &leaves);
        let paths = (0..leaves.len())
            .map(|nu| keystone_path(&leaves, &adjacency, &index, &is_key, nu))
            .collect::<Result<Vec<_>>>()?;
        let mu_of_nu: Vec<usize> = paths.iter().map(|p| mu_index[*p.last().unwrap()]).collect();
        let decay = paths
            .iter()
            .map(|p| DecayCertificate {
                constant: decay_constant(&leaves, p),
                rate: DECAY_RATE,
            })
            .collect();
        let x_sharp = keystones.iter().map(|&k| x_nu[k]).collect();
        let e_sharp = keystones
            .iter()
            .map(|&k| indices_in(&dilate(&leaves[k], 9.0).expect("positive"), e))
            .collect();
        let delta_pairs = delta_pairs(&leaves, &adjacency, &mu_of_nu);
        Ok(CzDecomposition {
            root,
            points: e.to_vec(),
            leaves,
            adjacency,
            e_nu,
            x_nu,
            keystones,
            mu_of_nu,
            paths,
            decay,
            x_sharp,
            e_sharp,
            delta_pairs,
            cut_squares,
        })
    }

    /// Only the root survived the cutting procedure.
    pub fn is_trivial(&self) -> bool {
        self.leaves.len() == 1
    }

    pub fn leaf_index(&self) -> LeafIndex {
        LeafIndex::new(&self.root, &self.leaves)
    }
}
