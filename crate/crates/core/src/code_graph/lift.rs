use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CoupledBaseMatrix;
use crate::error::{Error, Result};

/// One proto edge instance (an entry of multiplicity `m` yields `m` of these)
/// together with its circulant shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProtoEdge {
    pub row: usize,
    pub col: usize,
    pub shift: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LiftedEdge {
    pub vn: usize,
    pub cn: usize,
    pub proto_edge: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct LiftOptions {
    /// Re-draw shifts that would close a length-4 cycle. Off by default.
    pub reject_four_cycles: bool,
    pub max_attempts: usize,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self {
            reject_four_cycles: false,
            max_attempts: 100,
        }
    }
}

/// The z-lifted Tanner graph.
///
/// VN copy `j` of proto column `col` is lifted VN `col * z + j`; it is
/// connected through a proto edge with shift `s` to lifted CN
/// `row * z + (j + s) mod z`. Edges are stored in CN-major order.
#[derive(Clone, Debug)]
pub struct LiftedTannerGraph {
    base: CoupledBaseMatrix,
    z: usize,
    proto_edges: Vec<ProtoEdge>,
    edges: Vec<LiftedEdge>,
    cn_start: Vec<usize>,
    vn_start: Vec<usize>,
    vn_edge_ids: Vec<usize>,
}

pub fn lift(base: &CoupledBaseMatrix, z: usize, seed: u64) -> Result<LiftedTannerGraph> {
    lift_with(base, z, seed, LiftOptions::default())
}

pub fn lift_with(
    base: &CoupledBaseMatrix,
    z: usize,
    seed: u64,
    options: LiftOptions,
) -> Result<LiftedTannerGraph> {
    if z == 0 {
        return Err(Error::InvalidInput("lifting factor z must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut proto_edges = Vec::new();
    for row in 0..base.rows() {
        for col in 0..base.cols() {
            let m = base.entry(row, col) as usize;
            if m == 0 {
                continue;
            }
            let shifts: Vec<usize> = if m <= z {
                sample(&mut rng, z, m).into_vec()
            } else {
                (0..m).map(|_| rng.random_range(0..z)).collect()
            };
            for shift in shifts {
                proto_edges.push(ProtoEdge { row, col, shift });
            }
        }
    }
    if options.reject_four_cycles && z > 1 {
        condition_four_cycles(&mut proto_edges, z, &mut rng, options.max_attempts);
    }
    Ok(LiftedTannerGraph::from_proto_edges(base.clone(), z, proto_edges))
}

/// Greedy re-draw of shifts so that no lifted 4-cycle is formed, where a
/// proto 4-cycle `(r1,c1) (r1,c2) (r2,c2) (r2,c1)` lifts to 4-cycles iff
/// `s1 - s2 + s3 - s4 = 0 (mod z)`.
fn condition_four_cycles(edges: &mut [ProtoEdge], z: usize, rng: &mut ChaCha8Rng, attempts: usize) {
    for k in 0..edges.len() {
        for _ in 0..attempts {
            if !closes_four_cycle(&edges[..=k], k, z) {
                break;
            }
            edges[k].shift = rng.random_range(0..z);
        }
    }
}

fn closes_four_cycle(edges: &[ProtoEdge], k: usize, z: usize) -> bool {
    let e1 = edges[k];
    let zi = z as i64;
    for (i2, e2) in edges.iter().enumerate() {
        if i2 == k || e2.row != e1.row {
            continue;
        }
        for (i3, e3) in edges.iter().enumerate() {
            if i3 == i2 || e3.col != e2.col {
                continue;
            }
            for (i4, e4) in edges.iter().enumerate() {
                if i4 == i3 || i4 == k || e4.row != e3.row || e4.col != e1.col {
                    continue;
                }
                let d = e1.shift as i64 - e2.shift as i64 + e3.shift as i64 - e4.shift as i64;
                if d.rem_euclid(zi) == 0 {
                    return true;
                }
            }
        }
    }
    false
}

impl LiftedTannerGraph {
    fn from_proto_edges(base: CoupledBaseMatrix, z: usize, proto_edges: Vec<ProtoEdge>) -> Self {
        let num_cns = base.rows() * z;
        let num_vns = base.cols() * z;
        let mut edges = Vec::with_capacity(proto_edges.len() * z);
        for (id, pe) in proto_edges.iter().enumerate() {
            for j in 0..z {
                edges.push(LiftedEdge {
                    vn: pe.col * z + j,
                    cn: pe.row * z + (j + pe.shift) % z,
                    proto_edge: id,
                });
            }
        }
        edges.sort_by_key(|e| (e.cn, e.vn, e.proto_edge));

        let mut cn_start = vec![0; num_cns + 1];
        for e in &edges {
            cn_start[e.cn + 1] += 1;
        }
        for i in 0..num_cns {
            cn_start[i + 1] += cn_start[i];
        }
        let mut vn_start = vec![0; num_vns + 1];
        for e in &edges {
            vn_start[e.vn + 1] += 1;
        }
        for i in 0..num_vns {
            vn_start[i + 1] += vn_start[i];
        }
        let mut fill = vn_start.clone();
        let mut vn_edge_ids = vec![0; edges.len()];
        for (id, e) in edges.iter().enumerate() {
            vn_edge_ids[fill[e.vn]] = id;
            fill[e.vn] += 1;
        }
        Self {
            base,
            z,
            proto_edges,
            edges,
            cn_start,
            vn_start,
            vn_edge_ids,
        }
    }

    pub fn base(&self) -> &CoupledBaseMatrix {
        &self.base
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn num_vns(&self) -> usize {
        self.base.cols() * self.z
    }

    pub fn num_cns(&self) -> usize {
        self.base.rows() * self.z
    }

    /// VNs per position, `N_v = n_v z`.
    pub fn vns_per_position(&self) -> usize {
        self.base.n_v() * self.z
    }

    /// CNs per position, `N_c = n_c z`.
    pub fn cns_per_position(&self) -> usize {
        self.base.n_c() * self.z
    }

    pub fn proto_edges(&self) -> &[ProtoEdge] {
        &self.proto_edges
    }

    pub fn edges(&self) -> &[LiftedEdge] {
        &self.edges
    }

    /// Edges incident to a CN, in ascending VN order.
    pub fn cn_edges(&self, cn: usize) -> &[LiftedEdge] {
        &self.edges[self.cn_start[cn]..self.cn_start[cn + 1]]
    }

    /// Edge ids incident to a VN.
    pub fn vn_edge_ids(&self, vn: usize) -> &[usize] {
        &self.vn_edge_ids[self.vn_start[vn]..self.vn_start[vn + 1]]
    }

    pub fn vn_degree(&self, vn: usize) -> usize {
        self.vn_start[vn + 1] - self.vn_start[vn]
    }

    pub fn cn_degree(&self, cn: usize) -> usize {
        self.cn_start[cn + 1] - self.cn_start[cn]
    }

    /// 1-based chain position of a VN.
    #[inline]
    pub fn vn_position(&self, vn: usize) -> usize {
        vn / self.vns_per_position() + 1
    }

    /// 1-based position of a CN (ranges over `1..=L+w`).
    #[inline]
    pub fn cn_position(&self, cn: usize) -> usize {
        cn / self.cns_per_position() + 1
    }

    /// Proto CN index within its position, `0..n_c`.
    #[inline]
    pub fn cn_proto_local(&self, cn: usize) -> usize {
        (cn / self.z) % self.base.n_c()
    }

    /// Range of VN indices at a 1-based position.
    pub fn vns_at(&self, position: usize) -> std::ops::Range<usize> {
        let n = self.vns_per_position();
        (position - 1) * n..position * n
    }

    pub fn cns_at(&self, position: usize) -> std::ops::Range<usize> {
        let n = self.cns_per_position();
        (position - 1) * n..position * n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_graph::{build_coupled_base, regular_block_base, uniform_edge_spread};

    fn code36(len: usize) -> CoupledBaseMatrix {
        let comps = uniform_edge_spread(&regular_block_base(3, 6).unwrap(), 2).unwrap();
        build_coupled_base(comps, len).unwrap()
    }

    #[test]
    fn z1_reproduces_protograph() {
        let base = code36(5);
        let g = lift(&base, 1, 7).unwrap();
        assert_eq!(g.num_vns(), base.cols());
        assert_eq!(g.num_cns(), base.rows());
        let mut dense = vec![vec![0u32; base.cols()]; base.rows()];
        for e in g.edges() {
            dense[e.cn][e.vn] += 1;
        }
        assert_eq!(dense, base.to_matrix().to_rows());
    }

    #[test]
    fn running_example_dimensions() {
        let g = lift(&code36(100), 100, 1).unwrap();
        assert_eq!(g.num_vns(), 20_000);
        assert_eq!(g.num_cns(), 10_200);
        assert_eq!(g.edges().len(), 60_000);
    }

    #[test]
    fn lift_is_deterministic() {
        let base = code36(8);
        let a = lift(&base, 17, 99).unwrap();
        let b = lift(&base, 17, 99).unwrap();
        assert_eq!(a.edges(), b.edges());
        let c = lift(&base, 17, 100).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn degree_law() {
        let (len, w) = (12, 2);
        let g = lift(&code36(len), 5, 3).unwrap();
        for v in 0..g.num_vns() {
            assert_eq!(g.vn_degree(v), 3);
        }
        for c in 0..g.num_cns() {
            let p = g.cn_position(c);
            let expected = if p <= w { 2 * p } else if p <= len { 6 } else { 2 * (len + w + 1 - p) };
            assert_eq!(g.cn_degree(c), expected, "cn {c} at position {p}");
        }
    }

    #[test]
    fn vn_connects_only_to_coupled_positions() {
        let g = lift(&code36(10), 4, 11).unwrap();
        for e in g.edges() {
            let (pv, pc) = (g.vn_position(e.vn), g.cn_position(e.cn));
            assert!(pc >= pv && pc <= pv + 2);
        }
    }

    #[test]
    fn proto_edge_lifts_to_bijection() {
        let g = lift(&code36(6), 9, 5).unwrap();
        for id in 0..g.proto_edges().len() {
            let mut vns: Vec<usize> = g.edges().iter().filter(|e| e.proto_edge == id).map(|e| e.vn).collect();
            let mut cns: Vec<usize> = g.edges().iter().filter(|e| e.proto_edge == id).map(|e| e.cn).collect();
            vns.sort_unstable();
            cns.sort_unstable();
            vns.dedup();
            cns.dedup();
            assert_eq!(vns.len(), 9);
            assert_eq!(cns.len(), 9);
        }
    }

    #[test]
    fn multiplicity_lifts_to_m_times_z_edges() {
        let comps = crate::code_graph::ComponentBases::new(vec![
            crate::code_graph::IntMatrix::from_rows(&[vec![2, 1]]).unwrap(),
            crate::code_graph::IntMatrix::from_rows(&[vec![1, 2]]).unwrap(),
        ])
        .unwrap();
        let base = build_coupled_base(comps, 3).unwrap();
        let g = lift(&base, 4, 2).unwrap();
        let total: u32 = base.to_matrix().to_rows().iter().flatten().sum();
        assert_eq!(g.edges().len(), total as usize * 4);
    }

    #[test]
    fn four_cycle_rejection_removes_four_cycles() {
        let base = code36(6);
        let g = lift_with(
            &base,
            31,
            4,
            LiftOptions { reject_four_cycles: true, max_attempts: 500 },
        )
        .unwrap();
        let pe = g.proto_edges();
        for k in 0..pe.len() {
            assert!(!closes_four_cycle(pe, k, 31), "proto edge {k} closes a 4-cycle");
        }
    }
}
