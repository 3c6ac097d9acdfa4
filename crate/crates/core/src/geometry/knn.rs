use super::{Point3, PointCloud};
use crate::{Error, Result};

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Exact k-nearest-neighbor index over a fixed set of points (k-d tree).
///
/// Results are sorted by nondecreasing Euclidean distance with ties broken by
/// lower point index, so every query is identical to a brute-force sort.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Bounded, sorted candidate list keyed by `(squared distance, index)`.
struct Candidates {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl Candidates {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn full(&self) -> bool {
        self.items.len() == self.k
    }

    fn worst(&self) -> f64 {
        self.items.last().map_or(f64::INFINITY, |c| c.0)
    }

    fn offer(&mut self, d2: f64, idx: usize) {
        let key = (d2, idx);
        if self.full() && !less(key, *self.items.last().unwrap()) {
            return;
        }
        let pos = self.items.partition_point(|&c| less(c, key));
        self.items.insert(pos, key);
        if self.items.len() > self.k {
            self.items.pop();
        }
    }
}

fn less(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

impl KnnIndex {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        Self::from_points(cloud.points().to_vec())
    }

    pub fn from_points(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mut index = Self {
            order: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
        };
        index.build_node(0, index.points.len());
        Ok(index)
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            let p = self.points[i].to_array();
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
            .unwrap();
        if hi[axis] - lo[axis] == 0.0 {
            // all coincident
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// Indices of the `min(k, len)` nearest points to `p`.
    pub fn query(&self, p: Point3, k: usize) -> Vec<usize> {
        self.search(p, k, None).into_iter().map(|c| c.1).collect()
    }

    /// Like [`query`](Self::query) but also returns Euclidean distances.
    pub fn query_with_distances(&self, p: Point3, k: usize) -> Vec<(usize, f64)> {
        self.search(p, k, None)
            .into_iter()
            .map(|(d2, i)| (i, d2.sqrt()))
            .collect()
    }

    /// Nearest neighbors of indexed point `i`, excluding `i` itself.
    ///
    /// Other points at the same location are still returned.
    pub fn neighbors_of(&self, i: usize, k: usize) -> Vec<usize> {
        self.search(self.points[i], k, Some(i))
            .into_iter()
            .map(|c| c.1)
            .collect()
    }

    pub fn nearest(&self, p: Point3) -> usize {
        self.search(p, 1, None)[0].1
    }

    fn search(&self, p: Point3, k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
        let mut cand = Candidates::new(k.min(self.len() - usize::from(skip.is_some())));
        if cand.k == 0 {
            return Vec::new();
        }
        self.visit(0, p, skip, &mut cand);
        cand.items
    }

    fn visit(&self, node: usize, p: Point3, skip: Option<usize>, cand: &mut Candidates) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) != skip {
                        cand.offer(p.distance_squared(self.points[i]), i);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = p[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.visit(near, p, skip, cand);
                // `<=` keeps equal-distance candidates with lower indices reachable
                if !cand.full() || diff * diff <= cand.worst() {
                    self.visit(far, p, skip, cand);
                }
            }
        }
    }
}
