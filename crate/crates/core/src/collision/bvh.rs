use nalgebra::Vector3;

use super::triangle::{triangle_area, triangles_intersect, Triangle, DEGENERATE_AREA};
use super::CollisionError;

/// Leaves hold at most this many triangles.
pub const MAX_LEAF_SIZE: usize = 4;
/// Slack added to box overlap tests (m).
pub const BOX_SLACK: f64 = 1e-9;
pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vector3::repeat(f64::INFINITY),
            max: Vector3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn of_triangle(t: &Triangle) -> Self {
        let mut b = Self::empty();
        t.iter().for_each(|p| b.grow(p));
        b
    }

    pub fn grow(&mut self, p: &Vector3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.max[k] + BOX_SLACK && other.min[k] <= self.max[k] + BOX_SLACK)
    }

    pub fn contains(&self, other: &Aabb, slack: f64) -> bool {
        (0..3).all(|k| self.min[k] <= other.min[k] + slack && other.max[k] <= self.max[k] + slack)
    }

    fn longest_axis(&self) -> usize {
        let e = self.max - self.min;
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// Range into [`TriangleBvh::order`].
    Leaf { start: usize, len: usize },
    Internal { left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub bounds: Aabb,
    pub kind: NodeKind,
}

/// Bounding-volume hierarchy over the triangles of one mesh frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleBvh {
    triangles: Vec<Triangle>,
    faces: Vec<[usize; 3]>,
    pub nodes: Vec<Node>,
    /// Triangle indices, grouped so each leaf owns a contiguous range.
    pub order: Vec<usize>,
}

impl TriangleBvh {
    /// Builds the tree by recursive median split along the longest box axis.
    ///
    /// Degenerate (near zero-area) faces are kept out of the tree and never
    /// reported as colliding; if more than `max_degenerate_fraction` of the
    /// faces are degenerate the mesh is rejected.
    pub fn build(
        vertices: &[Vector3<f64>],
        faces: &[[usize; 3]],
        max_degenerate_fraction: f64,
    ) -> Result<Self, CollisionError> {
        if faces.is_empty() {
            return Err(CollisionError::DegenerateMesh("mesh has no faces".into()));
        }
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&v| v >= vertices.len())) {
            return Err(CollisionError::DegenerateMesh(format!("face {f:?} is out of range")));
        }
        let triangles: Vec<Triangle> = faces
            .iter()
            .map(|f| [vertices[f[0]], vertices[f[1]], vertices[f[2]]])
            .collect();
        let live: Vec<usize> = (0..triangles.len())
            .filter(|&i| triangle_area(&triangles[i]) > DEGENERATE_AREA)
            .collect();
        let degenerate = triangles.len() - live.len();
        if degenerate as f64 > max_degenerate_fraction * triangles.len() as f64 {
            return Err(CollisionError::DegenerateMesh(format!(
                "{degenerate} of {} faces have zero area",
                triangles.len()
            )));
        }

        let boxes: Vec<Aabb> = triangles.iter().map(Aabb::of_triangle).collect();
        let centroids: Vec<Vector3<f64>> = triangles.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut bvh = TriangleBvh {
            triangles,
            faces: faces.to_vec(),
            nodes: Vec::new(),
            order: live,
        };
        if !bvh.order.is_empty() {
            let n = bvh.order.len();
            bvh.build_node(0, n, &boxes, &centroids, 0);
        }
        Ok(bvh)
    }

    fn build_node(
        &mut self,
        start: usize,
        len: usize,
        boxes: &[Aabb],
        centroids: &[Vector3<f64>],
        depth: usize,
    ) -> usize {
        let bounds = self.order[start..start + len]
            .iter()
            .fold(Aabb::empty(), |acc, &i| acc.union(&boxes[i]));
        let id = self.nodes.len();
        self.nodes.push(Node {
            bounds,
            kind: NodeKind::Leaf { start, len },
        });
        if len <= MAX_LEAF_SIZE || depth + 1 >= MAX_DEPTH {
            return id;
        }
        let axis = bounds.longest_axis();
        self.order[start..start + len].sort_by(|&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
        });
        let half = len / 2;
        let left = self.build_node(start, half, boxes, centroids, depth + 1);
        let right = self.build_node(start + half, len - half, boxes, centroids, depth + 1);
        self.nodes[id].kind = NodeKind::Internal { left, right };
        id
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i].kind {
                NodeKind::Leaf { .. } => 1,
                NodeKind::Internal { left, right } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            go(&self.nodes, 0)
        }
    }

    fn leaf_items(&self, node: usize) -> &[usize] {
        match self.nodes[node].kind {
            NodeKind::Leaf { start, len } => &self.order[start..start + len],
            NodeKind::Internal { .. } => &[],
        }
    }

    fn adjacent(&self, i: usize, j: usize) -> bool {
        let a = &self.faces[i];
        self.faces[j].iter().any(|v| a.contains(v))
    }

    fn test_pair(&self, i: usize, j: usize) -> bool {
        !self.adjacent(i, j) && triangles_intersect(&self.triangles[i], &self.triangles[j])
    }

    /// Number of unordered, vertex-disjoint triangle pairs that interpenetrate.
    pub fn count_colliding_pairs(&self) -> usize {
        if self.nodes.is_empty() {
            return 0;
        }
        let mut count = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((a, b)) = stack.pop() {
            if a == b {
                match self.nodes[a].kind {
                    NodeKind::Leaf { .. } => {
                        let items = self.leaf_items(a);
                        for (k, &i) in items.iter().enumerate() {
                            for &j in &items[k + 1..] {
                                count += self.test_pair(i, j) as usize;
                            }
                        }
                    }
                    NodeKind::Internal { left, right } => {
                        stack.push((left, left));
                        stack.push((right, right));
                        stack.push((left, right));
                    }
                }
                continue;
            }
            if !self.nodes[a].bounds.overlaps(&self.nodes[b].bounds) {
                continue;
            }
            match (&self.nodes[a].kind, &self.nodes[b].kind) {
                (NodeKind::Leaf { .. }, NodeKind::Leaf { .. }) => {
                    for &i in self.leaf_items(a) {
                        for &j in self.leaf_items(b) {
                            count += self.test_pair(i, j) as usize;
                        }
                    }
                }
                (NodeKind::Internal { left, right }, NodeKind::Leaf { .. }) => {
                    stack.push((*left, b));
                    stack.push((*right, b));
                }
                (NodeKind::Leaf { .. }, NodeKind::Internal { left, right }) => {
                    stack.push((a, *left));
                    stack.push((a, *right));
                }
                (NodeKind::Internal { left: al, right: ar }, NodeKind::Internal { left: bl, right: br }) => {
                    stack.extend([(*al, *bl), (*al, *br), (*ar, *bl), (*ar, *br)]);
                }
            }
        }
        count
    }
}

/// All-pairs reference count with the same predicate and adjacency rule.
pub fn count_colliding_pairs_brute_force(vertices: &[Vector3<f64>], faces: &[[usize; 3]]) -> usize {
    let tris: Vec<Triangle> = faces
        .iter()
        .map(|f| [vertices[f[0]], vertices[f[1]], vertices[f[2]]])
        .collect();
    let mut count = 0;
    for i in 0..faces.len() {
        for j in i + 1..faces.len() {
            let shares = faces[j].iter().any(|v| faces[i].contains(v));
            if !shares && triangles_intersect(&tris[i], &tris[j]) {
                count += 1;
            }
        }
    }
    count
}
