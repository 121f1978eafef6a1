use crate::geom::{Aabb, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Bounding volume hierarchy over facet boxes. Only stores indices; the
/// primitive test is supplied by the caller.
#[derive(Debug, Clone, Default)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Bvh {
    pub fn build(boxes: &[Aabb]) -> Self {
        let mut bvh = Bvh {
            nodes: Vec::new(),
            order: (0..boxes.len()).collect(),
        };
        if !boxes.is_empty() {
            bvh.build_range(boxes, 0, boxes.len());
        }
        bvh
    }

    fn build_range(&mut self, boxes: &[Aabb], start: usize, end: usize) -> usize {
        let bounds = self.order[start..end]
            .iter()
            .fold(Aabb::empty(), |acc, &i| acc.union(&boxes[i]));
        let idx = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, start, end });
            return idx;
        }
        let mut centroids = Aabb::empty();
        for &i in &self.order[start..end] {
            centroids.grow(&boxes[i].centroid());
        }
        let ext = centroids.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        // stable ordering keeps the tree identical for identical input
        self.order[start..end].sort_by(|&a, &b| {
            boxes[a].centroid()[axis]
                .total_cmp(&boxes[b].centroid()[axis])
                .then(a.cmp(&b))
        });
        let mid = start + (end - start) / 2;
        self.nodes.push(Node::Leaf { bounds, start, end });
        let left = self.build_range(boxes, start, mid);
        let right = self.build_range(boxes, mid, end);
        self.nodes[idx] = Node::Inner { bounds, left, right };
        idx
    }

    /// Calls `visit` for every primitive whose box overlaps the ray interval.
    /// `visit` returns a (possibly shrunk) upper bound for `t`; returning a
    /// negative value stops the traversal.
    pub fn traverse<F>(&self, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64, mut visit: F)
    where
        F: FnMut(usize) -> f64,
    {
        if self.nodes.is_empty() {
            return;
        }
        let inv = dir.map(|c| 1.0 / c);
        let mut t_hi = t_max;
        let mut stack = Vec::with_capacity(32);
        stack.push(0usize);
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !node.bounds().hit_by(origin, &inv, t_min, t_hi) {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &prim in &self.order[start..end] {
                        let t = visit(prim);
                        if t < 0.0 {
                            return;
                        }
                        t_hi = t_hi.min(t);
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
    }
}
