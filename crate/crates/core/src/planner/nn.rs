//! Nearest-neighbour queries over joint-space points.
//!
//! Small sets are scanned linearly. Past [`KD_THRESHOLD`] points an
//! incrementally built k-d tree takes over. Both paths order results by
//! `(squared distance, insertion index)` so they agree exactly.

pub const KD_THRESHOLD: usize = 2000;

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn better(d: f64, i: usize, best: Option<(f64, usize)>) -> bool {
    match best {
        None => true,
        Some((bd, bi)) => d < bd || (d == bd && i < bi),
    }
}

#[derive(Debug, Clone, Copy)]
struct KdNode {
    point: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct NearestNeighbors {
    dim: usize,
    coords: Vec<f64>,
    kd: Vec<KdNode>,
    threshold: usize,
}

impl NearestNeighbors {
    pub fn new(dim: usize) -> Self {
        Self::with_threshold(dim, KD_THRESHOLD)
    }

    pub fn with_threshold(dim: usize, threshold: usize) -> Self {
        Self { dim, coords: Vec::new(), kd: Vec::new(), threshold }
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Adds a point; its index is the previous length.
    pub fn insert(&mut self, p: &[f64]) -> usize {
        assert_eq!(p.len(), self.dim);
        let id = self.len();
        self.coords.extend_from_slice(p);
        let n = id + 1;
        if n == self.threshold {
            for i in 0..n {
                self.kd_insert(i);
            }
        } else if n > self.threshold {
            self.kd_insert(id);
        }
        id
    }

    fn kd_insert(&mut self, point: usize) {
        let slot = self.kd.len();
        self.kd.push(KdNode { point, left: None, right: None });
        if slot == 0 {
            return;
        }
        let mut cur = 0;
        let mut depth = 0;
        loop {
            let axis = depth % self.dim;
            let go_left = self.coords[point * self.dim + axis] < self.point(self.kd[cur].point)[axis];
            let next = if go_left { self.kd[cur].left } else { self.kd[cur].right };
            match next {
                Some(n) => {
                    cur = n;
                    depth += 1;
                }
                None => {
                    if go_left {
                        self.kd[cur].left = Some(slot);
                    } else {
                        self.kd[cur].right = Some(slot);
                    }
                    return;
                }
            }
        }
    }

    fn use_kd(&self) -> bool {
        !self.kd.is_empty() && self.kd.len() == self.len()
    }

    /// Index of the closest point, lowest index on ties.
    pub fn nearest(&self, q: &[f64]) -> Option<usize> {
        if self.is_empty() {
            return None;
        }
        if self.use_kd() {
            let mut best = None;
            self.kd_nearest(0, 0, q, &mut best);
            return best.map(|(_, i)| i);
        }
        let mut best: Option<(f64, usize)> = None;
        for i in 0..self.len() {
            let d = dist2(self.point(i), q);
            if better(d, i, best) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }

    fn kd_nearest(&self, node: usize, depth: usize, q: &[f64], best: &mut Option<(f64, usize)>) {
        let n = self.kd[node];
        let p = self.point(n.point);
        let d = dist2(p, q);
        if better(d, n.point, *best) {
            *best = Some((d, n.point));
        }
        let axis = depth % self.dim;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
        if let Some(c) = near {
            self.kd_nearest(c, depth + 1, q, best);
        }
        if let Some(c) = far {
            // `<=` keeps equal-distance points with lower index reachable.
            if best.is_none_or(|(bd, _)| diff * diff <= bd) {
                self.kd_nearest(c, depth + 1, q, best);
            }
        }
    }

    /// All points within `radius` (inclusive), sorted by distance then index.
    pub fn within(&self, q: &[f64], radius: f64) -> Vec<(usize, f64)> {
        let r2 = radius * radius;
        let mut out: Vec<(usize, f64)> = Vec::new();
        if self.use_kd() {
            self.kd_within(0, 0, q, r2, &mut out);
        } else {
            for i in 0..self.len() {
                let d = dist2(self.point(i), q);
                if d <= r2 {
                    out.push((i, d));
                }
            }
        }
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out.into_iter().map(|(i, d2)| (i, d2.sqrt())).collect()
    }

    fn kd_within(&self, node: usize, depth: usize, q: &[f64], r2: f64, out: &mut Vec<(usize, f64)>) {
        let n = self.kd[node];
        let p = self.point(n.point);
        let d = dist2(p, q);
        if d <= r2 {
            out.push((n.point, d));
        }
        let axis = depth % self.dim;
        let diff = q[axis] - p[axis];
        if let Some(c) = n.left {
            if diff < 0.0 || diff * diff <= r2 {
                self.kd_within(c, depth + 1, q, r2, out);
            }
        }
        if let Some(c) = n.right {
            if diff >= 0.0 || diff * diff <= r2 {
                self.kd_within(c, depth + 1, q, r2, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_nearest(pts: &[Vec<f64>], q: &[f64]) -> usize {
        let mut best = (f64::INFINITY, usize::MAX);
        for (i, p) in pts.iter().enumerate() {
            let d = dist2(p, q);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    #[test]
    fn ties_prefer_lower_index() {
        let mut nn = NearestNeighbors::with_threshold(2, 3);
        for p in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 0.0]] {
            nn.insert(&p);
        }
        assert_eq!(nn.nearest(&[0.0, 0.0]), Some(0));
        let w = nn.within(&[0.0, 0.0], 1.0);
        assert_eq!(w.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn empty_has_no_nearest() {
        let nn = NearestNeighbors::new(3);
        assert_eq!(nn.nearest(&[0.0; 3]), None);
        assert!(nn.within(&[0.0; 3], 10.0).is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn kd_agrees_with_linear_scan(
            pts in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 4), 1..120),
            queries in proptest::collection::vec(proptest::collection::vec(-3.5f64..3.5, 4), 1..10),
            radius in 0.1f64..3.0,
        ) {
            let mut linear = NearestNeighbors::with_threshold(4, usize::MAX);
            let mut kd = NearestNeighbors::with_threshold(4, 8);
            for p in &pts {
                linear.insert(p);
                kd.insert(p);
            }
            for q in &queries {
                prop_assert_eq!(kd.nearest(q), linear.nearest(q));
                prop_assert_eq!(linear.nearest(q), Some(brute_nearest(&pts, q)));
                prop_assert_eq!(kd.within(q, radius), linear.within(q, radius));
            }
        }
    }
}
