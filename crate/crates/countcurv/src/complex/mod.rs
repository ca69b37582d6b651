//! Locally finite cell complexes with face adjacency and the integer count
//! metric.
//!
//! A complex is a flat CSR adjacency structure (offsets + neighbour array) so
//! that breadth-first traversals stay cache-friendly at large cell counts.
//! Distances are shortest face-crossing counts; balls and spheres are the BFS
//! layers around a base cell. Optional per-cell metadata (positive weights,
//! realization coordinates, mesh scale) feeds the samplers and estimators.

mod io;

pub use io::{load_ccx, save_ccx, CcxFormat};

use std::collections::VecDeque;

use thiserror::Error;

/// Dense identifier of one cell inside a single complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub u32);

impl CellId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum ComplexError {
    #[error("adjacency is asymmetric: edge {0} -> {1} has no reverse")]
    AsymmetricAdjacency(u32, u32),
    #[error("cell {0} lists itself as a neighbour")]
    SelfLoop(u32),
    #[error("cell {cell} has non-positive weight {weight}")]
    NonPositiveWeight { cell: u32, weight: f64 },
    #[error("cell {cell} has degree {degree}, exceeding the declared bound {bound}")]
    DegreeBoundExceeded { cell: u32, degree: u32, bound: u32 },
    #[error("neighbour index {0} out of range for {1} cells")]
    IndexOutOfRange(u32, usize),
    #[error("cell id {0} out of range for {1} cells")]
    InvalidCell(u32, usize),
    #[error("cells {0} and {1} are in different components")]
    Unreachable(u32, u32),
    #[error("complex has no weights")]
    WeightsMissing,
    #[error("positions length {got} does not match {cells} cells x dim {dim}")]
    PositionShape { got: usize, cells: usize, dim: usize },
    #[error("weights length {got} does not match {cells} cells")]
    WeightShape { got: usize, cells: usize },
    #[error("mesh scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse failure at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Default degree bound (H1) enforced at construction time.
pub const DEFAULT_DEGREE_BOUND: u32 = 64;

/// Immutable locally finite cell complex with face adjacency.
///
/// Adjacency is stored flat: `neighbors[offsets[c]..offsets[c+1]]` lists the
/// face-adjacent cells of `c`, sorted ascending. The structure is safe to
/// share across threads; every BFS query owns its scratch buffers.
#[derive(Debug, Clone)]
pub struct CellComplex {
    offsets: Vec<u64>,
    neighbors: Vec<u32>,
    weights: Option<Vec<f64>>,
    positions: Option<Vec<f64>>,
    dim: usize,
    mesh_scale: Option<f64>,
    max_degree: u32,
}

/// Builder for [`CellComplex`] with validation of the (H1)-style invariants.
pub struct ComplexBuilder {
    adjacency: Vec<Vec<u32>>,
    weights: Option<Vec<f64>>,
    positions: Option<(Vec<f64>, usize)>,
    mesh_scale: Option<f64>,
    symmetrize: bool,
    degree_bound: u32,
}

impl ComplexBuilder {
    pub fn new(adjacency: Vec<Vec<u32>>) -> Self {
        ComplexBuilder {
            adjacency,
            weights: None,
            positions: None,
            mesh_scale: None,
            symmetrize: false,
            degree_bound: DEFAULT_DEGREE_BOUND,
        }
    }

    /// Per-cell positive weights (the volumetric measure of each cell).
    pub fn weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    /// Flat per-cell coordinates (`cells * dim` values) of the realization map.
    pub fn positions(mut self, coords: Vec<f64>, dim: usize) -> Self {
        self.positions = Some((coords, dim));
        self
    }

    pub fn mesh_scale(mut self, a: f64) -> Self {
        self.mesh_scale = Some(a);
        self
    }

    /// In lenient mode missing reverse edges are added instead of rejected.
    pub fn symmetrize(mut self, yes: bool) -> Self {
        self.symmetrize = yes;
        self
    }

    pub fn degree_bound(mut self, bound: u32) -> Self {
        self.degree_bound = bound;
        self
    }

    pub fn build(self) -> Result<CellComplex, ComplexError> {
        let n = self.adjacency.len();
        let mut lists: Vec<Vec<u32>> = self.adjacency;
        for (c, list) in lists.iter_mut().enumerate() {
            for &v in list.iter() {
                if v as usize >= n {
                    return Err(ComplexError::IndexOutOfRange(v, n));
                }
                if v as usize == c {
                    return Err(ComplexError::SelfLoop(c as u32));
                }
            }
            list.sort_unstable();
            list.dedup();
        }
        if self.symmetrize {
            let mut missing: Vec<(u32, u32)> = Vec::new();
            for (c, list) in lists.iter().enumerate() {
                for &v in list {
                    if lists[v as usize].binary_search(&(c as u32)).is_err() {
                        missing.push((v, c as u32));
                    }
                }
            }
            for (to, from) in missing {
                let list = &mut lists[to as usize];
                if let Err(pos) = list.binary_search(&from) {
                    list.insert(pos, from);
                }
            }
        } else {
            for (c, list) in lists.iter().enumerate() {
                for &v in list {
                    if lists[v as usize].binary_search(&(c as u32)).is_err() {
                        return Err(ComplexError::AsymmetricAdjacency(c as u32, v));
                    }
                }
            }
        }
        let mut max_degree = 0u32;
        for (c, list) in lists.iter().enumerate() {
            let deg = list.len() as u32;
            if deg > self.degree_bound {
                return Err(ComplexError::DegreeBoundExceeded {
                    cell: c as u32,
                    degree: deg,
                    bound: self.degree_bound,
                });
            }
            max_degree = max_degree.max(deg);
        }
        if let Some(w) = &self.weights {
            if w.len() != n {
                return Err(ComplexError::WeightShape { got: w.len(), cells: n });
            }
            for (c, &x) in w.iter().enumerate() {
                if !(x > 0.0) || !x.is_finite() {
                    return Err(ComplexError::NonPositiveWeight { cell: c as u32, weight: x });
                }
            }
        }
        let (positions, dim) = match self.positions {
            Some((coords, dim)) => {
                if dim == 0 || coords.len() != n * dim {
                    return Err(ComplexError::PositionShape {
                        got: coords.len(),
                        cells: n,
                        dim,
                    });
                }
                (Some(coords), dim)
            }
            None => (None, 0),
        };
        if let Some(a) = self.mesh_scale {
            if !(a > 0.0) || !a.is_finite() {
                return Err(ComplexError::NonPositiveScale(a));
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0u64);
        let mut total = 0u64;
        for list in &lists {
            total += list.len() as u64;
            offsets.push(total);
        }
        let mut neighbors = Vec::with_capacity(total as usize);
        for list in &lists {
            neighbors.extend_from_slice(list);
        }
        Ok(CellComplex {
            offsets,
            neighbors,
            weights: self.weights,
            positions,
            dim,
            mesh_scale: self.mesh_scale,
            max_degree,
        })
    }
}

/// Raw counts of one BFS around a base cell: per-layer sphere counts
/// `|S(k)|` for `k = 0..=radius` and the ball count `|B(radius)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallReport {
    pub center: CellId,
    pub radius: u32,
    pub sphere_counts: Vec<u64>,
    pub ball_count: u64,
    /// `(cell, distance)` pairs sorted by (distance, id), when requested.
    pub members: Option<Vec<(CellId, u32)>>,
}

impl BallReport {
    /// Ball count at an intermediate radius `r <= radius`.
    pub fn ball_count_at(&self, r: u32) -> u64 {
        self.sphere_counts[..=(r as usize)].iter().sum()
    }
}

const UNSEEN: u32 = u32::MAX;

impl CellComplex {
    pub fn build(adjacency: Vec<Vec<u32>>) -> Result<CellComplex, ComplexError> {
        ComplexBuilder::new(adjacency).build()
    }

    pub fn builder(adjacency: Vec<Vec<u32>>) -> ComplexBuilder {
        ComplexBuilder::new(adjacency)
    }

    /// Assemble directly from validated CSR parts. Used by the generators,
    /// which construct adjacency symmetric by design; invariants are checked
    /// with debug assertions only.
    pub(crate) fn from_csr_unchecked(
        offsets: Vec<u64>,
        neighbors: Vec<u32>,
        weights: Option<Vec<f64>>,
        positions: Option<Vec<f64>>,
        dim: usize,
        mesh_scale: Option<f64>,
    ) -> CellComplex {
        debug_assert!(!offsets.is_empty());
        let n = offsets.len() - 1;
        let mut max_degree = 0u32;
        for c in 0..n {
            let deg = (offsets[c + 1] - offsets[c]) as u32;
            max_degree = max_degree.max(deg);
        }
        CellComplex {
            offsets,
            neighbors,
            weights,
            positions,
            dim,
            mesh_scale,
            max_degree,
        }
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, c: CellId) -> &[u32] {
        let lo = self.offsets[c.index()] as usize;
        let hi = self.offsets[c.index() + 1] as usize;
        &self.neighbors[lo..hi]
    }

    #[inline]
    pub fn degree(&self, c: CellId) -> u32 {
        (self.offsets[c.index() + 1] - self.offsets[c.index()]) as u32
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn has_weights(&self) -> bool {
        self.weights.is_some()
    }

    pub fn weight(&self, c: CellId) -> Option<f64> {
        self.weights.as_ref().map(|w| w[c.index()])
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Spatial dimension of the realization coordinates (0 when absent).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn position(&self, c: CellId) -> Option<&[f64]> {
        self.positions
            .as_ref()
            .map(|p| &p[c.index() * self.dim..(c.index() + 1) * self.dim])
    }

    pub fn positions(&self) -> Option<&[f64]> {
        self.positions.as_deref()
    }

    pub fn mesh_scale(&self) -> Option<f64> {
        self.mesh_scale
    }

    fn check_cell(&self, c: CellId) -> Result<(), ComplexError> {
        if c.index() >= self.cell_count() {
            return Err(ComplexError::InvalidCell(c.0, self.cell_count()));
        }
        Ok(())
    }

    /// Exact count distance `d_h(u, v)`: fewest face crossings connecting the
    /// two cells. Disconnected pairs are an explicit error, not a sentinel.
    pub fn count_distance(&self, u: CellId, v: CellId) -> Result<u32, ComplexError> {
        self.check_cell(u)?;
        self.check_cell(v)?;
        if u == v {
            return Ok(0);
        }
        let mut dist = vec![UNSEEN; self.cell_count()];
        let mut queue = VecDeque::new();
        dist[u.index()] = 0;
        queue.push_back(u.0);
        while let Some(c) = queue.pop_front() {
            let d = dist[c as usize];
            for &w in self.neighbors(CellId(c)) {
                if dist[w as usize] == UNSEEN {
                    if w == v.0 {
                        return Ok(d + 1);
                    }
                    dist[w as usize] = d + 1;
                    queue.push_back(w);
                }
            }
        }
        Err(ComplexError::Unreachable(u.0, v.0))
    }

    /// One minimizing path `u -> .. -> v`, extracted from BFS parents. Its
    /// length in crossings equals `count_distance(u, v)`.
    pub fn shortest_path(&self, u: CellId, v: CellId) -> Result<Vec<CellId>, ComplexError> {
        self.check_cell(u)?;
        self.check_cell(v)?;
        if u == v {
            return Ok(vec![u]);
        }
        let mut parent = vec![UNSEEN; self.cell_count()];
        let mut dist = vec![UNSEEN; self.cell_count()];
        let mut queue = VecDeque::new();
        dist[u.index()] = 0;
        queue.push_back(u.0);
        'outer: while let Some(c) = queue.pop_front() {
            for &w in self.neighbors(CellId(c)) {
                if dist[w as usize] == UNSEEN {
                    dist[w as usize] = dist[c as usize] + 1;
                    parent[w as usize] = c;
                    if w == v.0 {
                        break 'outer;
                    }
                    queue.push_back(w);
                }
            }
        }
        if dist[v.index()] == UNSEEN {
            return Err(ComplexError::Unreachable(u.0, v.0));
        }
        let mut path = vec![v];
        let mut cur = v.0;
        while cur != u.0 {
            cur = parent[cur as usize];
            path.push(CellId(cur));
        }
        path.reverse();
        Ok(path)
    }

    /// Single BFS from `center` recording all layers `S(0..=r_max)`.
    /// Counts are exact; member lists are sorted by (distance, id) so the
    /// report is reproducible regardless of traversal order.
    pub fn ball_report(
        &self,
        center: CellId,
        r_max: u32,
        keep_members: bool,
    ) -> Result<BallReport, ComplexError> {
        self.check_cell(center)?;
        let mut dist = vec![UNSEEN; self.cell_count()];
        let mut sphere_counts = vec![0u64; r_max as usize + 1];
        let mut members = if keep_members { Some(Vec::new()) } else { None };
        let mut frontier = vec![center.0];
        let mut next = Vec::new();
        dist[center.index()] = 0;
        sphere_counts[0] = 1;
        if let Some(m) = members.as_mut() {
            m.push((center, 0));
        }
        let mut ball_count = 1u64;
        for d in 0..r_max {
            if frontier.is_empty() {
                break;
            }
            for &c in &frontier {
                for &w in self.neighbors(CellId(c)) {
                    if dist[w as usize] == UNSEEN {
                        dist[w as usize] = d + 1;
                        next.push(w);
                    }
                }
            }
            sphere_counts[d as usize + 1] = next.len() as u64;
            ball_count += next.len() as u64;
            if let Some(m) = members.as_mut() {
                let mut layer: Vec<u32> = next.clone();
                layer.sort_unstable();
                m.extend(layer.into_iter().map(|c| (CellId(c), d + 1)));
            }
            std::mem::swap(&mut frontier, &mut next);
            next.clear();
        }
        Ok(BallReport {
            center,
            radius: r_max,
            sphere_counts,
            ball_count,
            members,
        })
    }

    /// Total weight `sum_{c in B(center, r)} nu({c})`. Requires weights.
    pub fn weighted_ball_mass(&self, center: CellId, r: u32) -> Result<f64, ComplexError> {
        let weights = self.weights.as_ref().ok_or(ComplexError::WeightsMissing)?;
        let report = self.ball_report(center, r, true)?;
        let members = report.members.expect("requested members");
        Ok(members.iter().map(|(c, _)| weights[c.index()]).sum())
    }

    /// Masses of the nested balls `B(center, 0..=r_max)` from a single BFS.
    /// Falls back to cardinality when weights are absent.
    pub fn ball_mass_profile(&self, center: CellId, r_max: u32) -> Result<Vec<f64>, ComplexError> {
        let report = self.ball_report(center, r_max, true)?;
        let members = report.members.expect("requested members");
        let mut shell = vec![0.0f64; r_max as usize + 1];
        match &self.weights {
            Some(w) => {
                for (c, d) in &members {
                    shell[*d as usize] += w[c.index()];
                }
            }
            None => {
                for (_, d) in &members {
                    shell[*d as usize] += 1.0;
                }
            }
        }
        let mut acc = 0.0;
        Ok(shell
            .into_iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path_graph(n: usize) -> CellComplex {
        let adjacency = (0..n)
            .map(|i| {
                let mut list = Vec::new();
                if i > 0 {
                    list.push(i as u32 - 1);
                }
                if i + 1 < n {
                    list.push(i as u32 + 1);
                }
                list
            })
            .collect();
        CellComplex::build(adjacency).unwrap()
    }

    /// 3x3 portion of Z^2 with l1 adjacency, row-major ids.
    fn grid3x3() -> CellComplex {
        let idx = |x: i32, y: i32| (y * 3 + x) as u32;
        let mut adjacency = vec![Vec::new(); 9];
        for y in 0..3 {
            for x in 0..3 {
                let mut list = Vec::new();
                for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let (nx, ny) = (x + dx, y + dy);
                    if (0..3).contains(&nx) && (0..3).contains(&ny) {
                        list.push(idx(nx, ny));
                    }
                }
                adjacency[idx(x, y) as usize] = list;
            }
        }
        CellComplex::build(adjacency).unwrap()
    }

    #[test]
    fn two_cell_path_has_degrees_one() {
        let c = path_graph(2);
        assert_eq!(c.cell_count(), 2);
        assert_eq!(c.degree(CellId(0)), 1);
        assert_eq!(c.degree(CellId(1)), 1);
    }

    #[test]
    fn grid_interior_degree_four() {
        let c = grid3x3();
        assert_eq!(c.degree(CellId(4)), 4);
        assert_eq!(c.max_degree(), 4);
    }

    #[test]
    fn asymmetric_input_strict_mode_rejected() {
        let err = CellComplex::build(vec![vec![1], vec![]]).unwrap_err();
        assert!(matches!(err, ComplexError::AsymmetricAdjacency(0, 1)));
        let ok = ComplexBuilder::new(vec![vec![1], vec![]])
            .symmetrize(true)
            .build()
            .unwrap();
        assert_eq!(ok.neighbors(CellId(1)), &[0]);
    }

    #[test]
    fn self_loop_rejected() {
        let err = CellComplex::build(vec![vec![0]]).unwrap_err();
        assert!(matches!(err, ComplexError::SelfLoop(0)));
    }

    #[test]
    fn degree_bound_enforced() {
        let hub: Vec<u32> = (1..=5).collect();
        let mut adjacency = vec![hub];
        for _ in 0..5 {
            adjacency.push(vec![0]);
        }
        let err = ComplexBuilder::new(adjacency)
            .degree_bound(4)
            .build()
            .unwrap_err();
        assert!(matches!(err, ComplexError::DegreeBoundExceeded { cell: 0, degree: 5, bound: 4 }));
    }

    #[test]
    fn nonpositive_weight_rejected() {
        let err = ComplexBuilder::new(vec![vec![1], vec![0]])
            .weights(vec![1.0, 0.0])
            .build()
            .unwrap_err();
        assert!(matches!(err, ComplexError::NonPositiveWeight { cell: 1, .. }));
    }

    #[test]
    fn path_distance_is_chain_length() {
        let c = path_graph(3);
        assert_eq!(c.count_distance(CellId(0), CellId(2)).unwrap(), 2);
        assert_eq!(c.count_distance(CellId(1), CellId(1)).unwrap(), 0);
        assert_eq!(
            c.count_distance(CellId(2), CellId(0)).unwrap(),
            c.count_distance(CellId(0), CellId(2)).unwrap()
        );
    }

    #[test]
    fn grid_distance_is_l1_norm() {
        let c = grid3x3();
        // (0,0) -> (2,2): |2| + |2| = 4 crossings.
        assert_eq!(c.count_distance(CellId(0), CellId(8)).unwrap(), 4);
        assert_eq!(c.count_distance(CellId(0), CellId(5)).unwrap(), 3);
    }

    #[test]
    fn disconnected_pair_is_error() {
        let c = CellComplex::build(vec![vec![1], vec![0], vec![3], vec![2]]).unwrap();
        let err = c.count_distance(CellId(0), CellId(3)).unwrap_err();
        assert!(matches!(err, ComplexError::Unreachable(0, 3)));
    }

    #[test]
    fn isolated_cell_report() {
        let c = CellComplex::build(vec![vec![]]).unwrap();
        let report = c.ball_report(CellId(0), 5, false).unwrap();
        assert_eq!(report.sphere_counts, vec![1, 0, 0, 0, 0, 0]);
        assert_eq!(report.ball_count, 1);
    }

    #[test]
    fn grid_report_center() {
        let c = grid3x3();
        let report = c.ball_report(CellId(4), 2, true).unwrap();
        assert_eq!(report.sphere_counts, vec![1, 4, 4]);
        assert_eq!(report.ball_count, 9);
        let members = report.members.unwrap();
        assert_eq!(members.len(), 9);
        // Sorted by (distance, id).
        assert_eq!(members[0], (CellId(4), 0));
        assert_eq!(members[1], (CellId(1), 1));
        assert!(members.windows(2).all(|w| (w[0].1, w[0].0) < (w[1].1, w[1].0)));
    }

    #[test]
    fn weighted_mass_unit_and_scaled() {
        let adjacency = vec![vec![1], vec![0, 2], vec![1]];
        let unit = ComplexBuilder::new(adjacency.clone())
            .weights(vec![1.0; 3])
            .build()
            .unwrap();
        assert_eq!(unit.weighted_ball_mass(CellId(1), 1).unwrap(), 3.0);
        let halves = ComplexBuilder::new(adjacency)
            .weights(vec![0.5; 3])
            .build()
            .unwrap();
        assert_eq!(halves.weighted_ball_mass(CellId(1), 1).unwrap(), 1.5);
        let report_mass = halves.ball_mass_profile(CellId(1), 1).unwrap();
        assert_eq!(report_mass, vec![0.5, 1.5]);
    }

    #[test]
    fn weighted_mass_requires_weights() {
        let c = path_graph(2);
        assert!(matches!(
            c.weighted_ball_mass(CellId(0), 1).unwrap_err(),
            ComplexError::WeightsMissing
        ));
    }

    #[test]
    fn shortest_path_attains_distance() {
        let c = grid3x3();
        let path = c.shortest_path(CellId(0), CellId(8)).unwrap();
        assert_eq!(path.len() as u32 - 1, c.count_distance(CellId(0), CellId(8)).unwrap());
        for pair in path.windows(2) {
            assert!(c.neighbors(pair[0]).contains(&pair[1].0));
        }
    }

    /// Random symmetric graph strategy: sparse Erdos-Renyi-ish on n nodes.
    fn random_graph() -> impl Strategy<Value = Vec<Vec<u32>>> {
        (2usize..40).prop_flat_map(|n| {
            proptest::collection::vec(proptest::collection::vec(0..n as u32, 0..4), n).prop_map(
                move |lists| {
                    let mut adjacency = vec![Vec::new(); n];
                    for (i, list) in lists.into_iter().enumerate() {
                        for j in list {
                            if i as u32 != j {
                                adjacency[i].push(j);
                                adjacency[j as usize].push(i as u32);
                            }
                        }
                    }
                    adjacency
                },
            )
        })
    }

    proptest! {
        /// |B(r)| - |B(r-1)| = |S(r)| and members agree with layer counts.
        #[test]
        fn bfs_layer_consistency(adjacency in random_graph()) {
            let c = CellComplex::build(adjacency).unwrap();
            let report = c.ball_report(CellId(0), 6, true).unwrap();
            let mut acc = 0u64;
            for r in 0..=6usize {
                acc += report.sphere_counts[r];
                prop_assert_eq!(report.ball_count_at(r as u32), acc);
            }
            prop_assert_eq!(report.ball_count, acc);
            let members = report.members.unwrap();
            prop_assert_eq!(members.len() as u64, report.ball_count);
        }

        /// Metric axioms on sampled pairs/triples (integers, exact).
        #[test]
        fn metric_axioms(adjacency in random_graph()) {
            let c = CellComplex::build(adjacency).unwrap();
            let n = c.cell_count() as u32;
            let pick = |k: u32| CellId(k % n);
            for (u, v, w) in [(0u32, 1, 2), (1, 3, 5), (2, 4, 1)] {
                let (u, v, w) = (pick(u), pick(v), pick(w));
                let duv = c.count_distance(u, v);
                let dvu = c.count_distance(v, u);
                match (duv, dvu) {
                    (Ok(a), Ok(b)) => {
                        prop_assert_eq!(a, b);
                        if let (Ok(avw), Ok(auw)) = (c.count_distance(v, w), c.count_distance(u, w)) {
                            prop_assert!(auw <= a + avw);
                        }
                    }
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "symmetry of reachability violated"),
                }
            }
        }
    }
}
