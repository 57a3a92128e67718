//! Per-frame face-mesh graphs.
//!
//! Landmarks are triangulated in the (x, y) plane with an incremental
//! Bowyer–Watson insertion over a super-triangle. The result is then made
//! convex (pockets left behind by the super-triangle are filled) and
//! legalized by Lawson flips, which also applies the tie-break for
//! cocircular quadrilaterals: the diagonal with the lexicographically
//! smaller sorted index pair wins.
//!
//! In-circle and orientation tests run on coordinates rescaled to the unit
//! bounding box, with `INCIRCLE_EPS` as the tie band.

use std::collections::HashMap;
use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2, ArrayViewMut2};

use crate::error::{Error, Result};
use crate::landmarks::LandmarkSequence;

pub const INCIRCLE_EPS: f64 = 1e-12;
pub const DUPLICATE_EPS: f64 = 1e-12;
const SUPER_RADIUS: f64 = 1e4;

type Point = [f64; 2];

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `(a, b, c)`.
pub fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

fn sorted_pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn check_input(points: &[Point]) -> Result<Vec<Point>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    if let Some(i) = points.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::NonFinite(format!("point {i}")));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(a.cmp(&b)));
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if points[j][0] - points[i][0] > DUPLICATE_EPS {
                break;
            }
            let d = ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt();
            if d <= DUPLICATE_EPS {
                let (a, b) = sorted_pair(i, j);
                return Err(Error::DuplicatePoints(a, b));
            }
        }
    }

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let scaled: Vec<Point> = points
        .iter()
        .map(|p| [(p[0] - lo[0]) / scale, (p[1] - lo[1]) / scale])
        .collect();

    // Collinear iff every point is on the line through the two extreme ones.
    let far = (1..n)
        .max_by(|&a, &b| {
            let da = (scaled[a][0] - scaled[0][0]).hypot(scaled[a][1] - scaled[0][1]);
            let db = (scaled[b][0] - scaled[0][0]).hypot(scaled[b][1] - scaled[0][1]);
            da.total_cmp(&db)
        })
        .unwrap_or(1);
    if scaled
        .iter()
        .all(|&p| orient(scaled[0], scaled[far], p).abs() <= INCIRCLE_EPS)
    {
        return Err(Error::Collinear);
    }
    Ok(scaled)
}

struct Mesh {
    pts: Vec<Point>,
    tris: Vec<[usize; 3]>,
}

impl Mesh {
    fn ccw(&self, t: [usize; 3]) -> [usize; 3] {
        if orient(self.pts[t[0]], self.pts[t[1]], self.pts[t[2]]) < 0.0 {
            [t[0], t[2], t[1]]
        } else {
            t
        }
    }

    fn in_circle(&self, t: [usize; 3], d: usize) -> f64 {
        incircle(self.pts[t[0]], self.pts[t[1]], self.pts[t[2]], self.pts[d])
    }

    fn contains(&self, t: [usize; 3], p: usize) -> bool {
        let q = self.pts[p];
        (0..3).all(|k| orient(self.pts[t[k]], self.pts[t[(k + 1) % 3]], q) >= -INCIRCLE_EPS)
    }

    fn edge_map(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (ti, t) in self.tris.iter().enumerate() {
            for k in 0..3 {
                map.entry(sorted_pair(t[k], t[(k + 1) % 3])).or_default().push(ti);
            }
        }
        map
    }

    fn insert(&mut self, p: usize) {
        let bad: Vec<usize> = (0..self.tris.len())
            .filter(|&ti| self.in_circle(self.tris[ti], p) > INCIRCLE_EPS)
            .collect();
        let seed = bad
            .iter()
            .position(|&ti| self.contains(self.tris[ti], p))
            .or(if bad.is_empty() { None } else { Some(0) });
        let Some(seed) = seed else { return };

        // Grow the cavity from the containing triangle across edges shared
        // with other bad triangles. Positions index into `bad`.
        let edge = |t: [usize; 3], k: usize| sorted_pair(t[k], t[(k + 1) % 3]);
        let shares = |x: usize, y: usize, e: (usize, usize)| {
            x != y && (0..3).any(|k| edge(self.tris[bad[y]], k) == e)
        };
        let mut in_cavity = vec![false; bad.len()];
        let mut stack = vec![seed];
        in_cavity[seed] = true;
        while let Some(x) = stack.pop() {
            let t = self.tris[bad[x]];
            for k in 0..3 {
                for y in 0..bad.len() {
                    if !in_cavity[y] && shares(x, y, edge(t, k)) {
                        in_cavity[y] = true;
                        stack.push(y);
                    }
                }
            }
        }

        let mut boundary = Vec::new();
        for x in (0..bad.len()).filter(|&x| in_cavity[x]) {
            let t = self.tris[bad[x]];
            for k in 0..3 {
                let e = edge(t, k);
                if !(0..bad.len()).any(|y| in_cavity[y] && shares(x, y, e)) {
                    boundary.push((t[k], t[(k + 1) % 3]));
                }
            }
        }
        // `bad` is ascending, so removing from the back keeps earlier indices valid
        for x in (0..bad.len()).rev() {
            if in_cavity[x] {
                self.tris.swap_remove(bad[x]);
            }
        }
        for (a, b) in boundary {
            let t = self.ccw([a, b, p]);
            self.tris.push(t);
        }
    }

    /// Fills concave pockets of the boundary until it is the convex hull.
    fn fill_pockets(&mut self) {
        let n = self.pts.len();
        loop {
            let edges = self.edge_map();
            let mut next = vec![usize::MAX; n];
            for t in &self.tris {
                for k in 0..3 {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    if edges[&sorted_pair(a, b)].len() == 1 {
                        next[a] = b;
                    }
                }
            }
            let mut added = false;
            for b in 0..n {
                let c = next[b];
                if c == usize::MAX {
                    continue;
                }
                let Some(a) = (0..n).find(|&a| next[a] == b) else { continue };
                if orient(self.pts[a], self.pts[b], self.pts[c]) >= -INCIRCLE_EPS {
                    continue;
                }
                let tri = [a, c, b];
                let blocked = (0..n).any(|q| {
                    q != a && q != b && q != c && {
                        let s = self.pts[q];
                        orient(self.pts[a], self.pts[c], s) > 0.0
                            && orient(self.pts[c], self.pts[b], s) > 0.0
                            && orient(self.pts[b], self.pts[a], s) > 0.0
                    }
                });
                if !blocked {
                    self.tris.push(tri);
                    added = true;
                    break;
                }
            }
            if !added {
                return;
            }
        }
    }

    /// Lawson flips until every interior edge is locally Delaunay and every
    /// cocircular quadrilateral carries the preferred diagonal.
    fn legalize(&mut self) {
        let mut owner: HashMap<(usize, usize), Vec<usize>> = self.edge_map();
        let mut stack: Vec<(usize, usize)> = owner.keys().copied().collect();
        stack.sort_unstable();
        let limit = 16 * self.pts.len() * self.pts.len() + 64;
        let mut flips = 0;
        while let Some(e) = stack.pop() {
            let Some(ts) = owner.get(&e) else { continue };
            if ts.len() != 2 {
                continue;
            }
            let (t0, t1) = (ts[0], ts[1]);
            let (a, b) = e;
            let apex = |t: [usize; 3]| t.into_iter().find(|&v| v != a && v != b).unwrap();
            let c = apex(self.tris[t0]);
            let d = apex(self.tris[t1]);
            let tri = self.ccw([a, b, c]);
            let det = self.in_circle(tri, d);
            let flip = if det > INCIRCLE_EPS {
                true
            } else if det >= -INCIRCLE_EPS {
                sorted_pair(c, d) < e
            } else {
                false
            };
            if !flip {
                continue;
            }
            // The flipped diagonal must leave two properly oriented triangles.
            let (pa, pb, pc, pd) = (self.pts[a], self.pts[b], self.pts[c], self.pts[d]);
            let o1 = orient(pc, pd, pa);
            let o2 = orient(pc, pd, pb);
            if !((o1 > INCIRCLE_EPS && o2 < -INCIRCLE_EPS) || (o1 < -INCIRCLE_EPS && o2 > INCIRCLE_EPS)) {
                continue;
            }
            flips += 1;
            if flips > limit {
                break;
            }
            let n0 = self.ccw([c, d, a]);
            let n1 = self.ccw([c, d, b]);
            for (ti, old) in [(t0, self.tris[t0]), (t1, self.tris[t1])] {
                for k in 0..3 {
                    let key = sorted_pair(old[k], old[(k + 1) % 3]);
                    if let Some(list) = owner.get_mut(&key) {
                        list.retain(|&x| x != ti);
                    }
                }
            }
            owner.remove(&e);
            self.tris[t0] = n0;
            self.tris[t1] = n1;
            for (ti, t) in [(t0, n0), (t1, n1)] {
                for k in 0..3 {
                    owner.entry(sorted_pair(t[k], t[(k + 1) % 3])).or_default().push(ti);
                }
            }
            for key in [sorted_pair(a, c), sorted_pair(c, b), sorted_pair(b, d), sorted_pair(d, a)] {
                stack.push(key);
            }
        }
    }
}

/// Delaunay triangles of a planar point set, counter-clockwise, sorted.
pub fn delaunay_triangles(points: &[[f64; 2]]) -> Result<Vec<[usize; 3]>> {
    let scaled = check_input(points)?;
    let n = scaled.len();
    let mut pts = scaled;
    for k in 0..3 {
        let theta = std::f64::consts::FRAC_PI_2 + k as f64 * 2.0 * std::f64::consts::FRAC_PI_3;
        pts.push([0.5 + SUPER_RADIUS * theta.cos(), 0.5 + SUPER_RADIUS * theta.sin()]);
    }
    let mut mesh = Mesh {
        pts,
        tris: vec![[n, n + 1, n + 2]],
    };
    for p in 0..n {
        mesh.insert(p);
    }
    mesh.tris.retain(|t| t.iter().all(|&v| v < n));
    mesh.pts.truncate(n);
    mesh.fill_pockets();
    mesh.legalize();

    let mut tris: Vec<[usize; 3]> = mesh
        .tris
        .iter()
        .map(|&t| {
            // rotate so the smallest index leads, keeping orientation
            let m = (0..3).min_by_key(|&k| t[k]).unwrap();
            [t[m], t[(m + 1) % 3], t[(m + 2) % 3]]
        })
        .collect();
    tris.sort_unstable();
    Ok(tris)
}

/// Undirected Delaunay edges `(i, j)` with `i < j`, sorted.
pub fn delaunay_edges(points: &[[f64; 2]]) -> Result<Vec<(usize, usize)>> {
    Ok(edges_of(&delaunay_triangles(points)?))
}

pub fn edges_of(triangles: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = triangles
        .iter()
        .flat_map(|t| (0..3).map(move |k| sorted_pair(t[k], t[(k + 1) % 3])))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// `D̃^(−1/2) (A + I) D̃^(−1/2)` in compressed-row form.
///
/// Columns within a row are ascending; the diagonal is always present.
#[derive(Debug, Clone, PartialEq)]
pub struct NormAdjacency {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NormAdjacency {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> NormAdjacency {
        let mut nbrs: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(i, j) in edges {
            nbrs[i].push(j);
            nbrs[j].push(i);
        }
        for list in &mut nbrs {
            list.sort_unstable();
            list.dedup();
        }
        let deg: Vec<f64> = nbrs.iter().map(|l| l.len() as f64).collect();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, list) in nbrs.iter().enumerate() {
            for &j in list.iter() {
                cols.push(j);
                vals.push(1.0 / (deg[i] * deg[j]).sqrt());
            }
            row_ptr.push(cols.len());
        }
        NormAdjacency {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[[i, j]] = v;
            }
        }
        m
    }

    /// `out = Â · input`, overwriting `out`.
    pub fn propagate_into(&self, input: ArrayView2<f64>, mut out: ArrayViewMut2<f64>) {
        debug_assert_eq!(input.nrows(), self.n);
        out.fill(0.0);
        for i in 0..self.n {
            let mut row = out.row_mut(i);
            for (j, v) in self.row(i) {
                row.scaled_add(v, &input.row(j));
            }
        }
    }

    pub fn propagate(&self, input: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, input.ncols()));
        self.propagate_into(input, out.view_mut());
        out
    }
}

/// Graph of one frame: landmark nodes, Delaunay edges, normalized adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGraph {
    pub node_features: Array2<f64>,
    pub edges: Vec<(usize, usize)>,
    pub adjacency: NormAdjacency,
}

impl FrameGraph {
    pub fn node_count(&self) -> usize {
        self.node_features.nrows()
    }

    pub fn dense_adjacency(&self) -> Array2<f64> {
        self.adjacency.to_dense()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count()];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// `v x y z` per node and `e i j` per edge.
    pub fn to_debug_text(&self) -> String {
        let mut out = String::new();
        for row in self.node_features.rows() {
            let _ = writeln!(out, "v {} {} {}", row[0], row[1], row[2]);
        }
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "e {i} {j}");
        }
        out
    }
}

/// Builds the graph of one frame given as `V·3` coordinates.
pub fn build_frame_graph(frame: &[f64]) -> Result<FrameGraph> {
    if frame.len() % 3 != 0 {
        return Err(Error::Shape(format!("{} values is not a multiple of 3", frame.len())));
    }
    let v = frame.len() / 3;
    let points: Vec<Point> = frame.chunks_exact(3).map(|p| [p[0], p[1]]).collect();
    if let Some(i) = frame.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite(format!("landmark {}", i / 3)));
    }
    let edges = delaunay_edges(&points)?;
    let node_features = Array2::from_shape_vec((v, 3), frame.to_vec()).expect("shape checked");
    let adjacency = NormAdjacency::from_edges(v, &edges);
    Ok(FrameGraph {
        node_features,
        edges,
        adjacency,
    })
}

/// One graph per frame of a normalized sequence.
pub fn graphs_for_clip(seq: &LandmarkSequence) -> Result<Vec<FrameGraph>> {
    if !seq.normalized {
        return Err(Error::InvalidSequence("graphs require a normalized sequence".into()));
    }
    (0..seq.frame_count())
        .map(|t| build_frame_graph(seq.frame(t)).map_err(|e| e.in_frame(t)))
        .collect()
}
