use crate::code_graph::{LiftedTannerGraph, WindowView};

/// The subgraph of a lifted code seen by one window stage, re-indexed
/// locally.
///
/// Internal edges (in-window VN to in-window CN) are numbered CN-major so the
/// internal edges of CN `c` are `cn_start[c]..cn_start[c+1]`. Boundary VNs
/// are inputs only: each in-window CN lists the boundary VNs it reads after
/// its internal edges.
#[derive(Clone, Debug)]
pub struct WindowGraph {
    view: WindowView,
    n_c: usize,
    target_size: usize,
    first_vn: usize,
    num_vns: usize,
    first_boundary: usize,
    num_boundary: usize,
    vn_position: Vec<usize>,
    vn_start: Vec<usize>,
    vn_edges: Vec<u32>,
    cn_global: Vec<usize>,
    cn_slot: Vec<usize>,
    cn_start: Vec<usize>,
    cn_bnd_start: Vec<usize>,
    cn_bnd: Vec<u32>,
    edge_vn: Vec<u32>,
    edge_cn: Vec<u32>,
    targets: Vec<usize>,
}

impl WindowGraph {
    /// Extracts the window of `view` from `graph`; `target_size` positions
    /// starting at the window front are targets.
    ///
    /// # Panics
    ///
    /// If the view does not belong to `graph`, or an in-window CN reaches a VN
    /// that is neither in the window nor in the boundary.
    pub fn new(graph: &LiftedTannerGraph, view: &WindowView, target_size: usize) -> Self {
        let base = graph.base();
        assert_eq!(view.length, base.length(), "view/graph chain length");
        assert_eq!(view.w, base.w(), "view/graph coupling width");
        assert!(target_size >= 1, "target size must be >= 1");
        let n_c = base.n_c();
        let vn_pos = view.vn_positions();
        let first_vn = graph.vns_at(*vn_pos.start()).start;
        let end_vn = graph.vns_at(*vn_pos.end()).end;
        let bnd_pos = view.boundary_positions();
        let (first_boundary, num_boundary) = if bnd_pos.is_empty() {
            (first_vn, 0)
        } else {
            let lo = graph.vns_at(*bnd_pos.start()).start;
            (lo, first_vn - lo)
        };

        let mut cn_global = Vec::new();
        let mut cn_slot = Vec::new();
        let mut cn_start = vec![0];
        let mut cn_bnd_start = vec![0];
        let mut cn_bnd = Vec::new();
        let mut edge_vn = Vec::new();
        let mut edge_cn = Vec::new();
        for pos in view.cn_positions() {
            for cn in graph.cns_at(pos) {
                let local_cn = cn_global.len() as u32;
                cn_global.push(cn);
                cn_slot.push(view.slot(pos, graph.cn_proto_local(cn), n_c));
                for e in graph.cn_edges(cn) {
                    if (first_vn..end_vn).contains(&e.vn) {
                        edge_vn.push((e.vn - first_vn) as u32);
                        edge_cn.push(local_cn);
                    } else if (first_boundary..first_vn).contains(&e.vn) {
                        cn_bnd.push((e.vn - first_boundary) as u32);
                    } else {
                        panic!(
                            "CN {cn} at position {pos} reaches VN {} outside window and boundary",
                            e.vn
                        );
                    }
                }
                cn_start.push(edge_vn.len());
                cn_bnd_start.push(cn_bnd.len());
            }
        }

        let num_vns = end_vn - first_vn;
        let mut vn_start = vec![0usize; num_vns + 1];
        for &v in &edge_vn {
            vn_start[v as usize + 1] += 1;
        }
        for i in 0..num_vns {
            vn_start[i + 1] += vn_start[i];
        }
        let mut fill = vn_start.clone();
        let mut vn_edges = vec![0u32; edge_vn.len()];
        for (e, &v) in edge_vn.iter().enumerate() {
            vn_edges[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
        let vn_position = (first_vn..end_vn).map(|v| graph.vn_position(v)).collect();
        let targets = view
            .target_positions(target_size)
            .flat_map(|p| graph.vns_at(p))
            .map(|v| v - first_vn)
            .collect();

        Self {
            view: view.clone(),
            n_c,
            target_size,
            first_vn,
            num_vns,
            first_boundary,
            num_boundary,
            vn_position,
            vn_start,
            vn_edges,
            cn_global,
            cn_slot,
            cn_start,
            cn_bnd_start,
            cn_bnd,
            edge_vn,
            edge_cn,
            targets,
        }
    }

    pub fn view(&self) -> &WindowView {
        &self.view
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    /// `W * n_c`, the number of weight slots per iteration.
    pub fn num_slots(&self) -> usize {
        self.view.window * self.n_c
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn num_vns(&self) -> usize {
        self.num_vns
    }

    pub fn num_cns(&self) -> usize {
        self.cn_global.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_vn.len()
    }

    pub fn num_boundary(&self) -> usize {
        self.num_boundary
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.cn_bnd.len()
    }

    /// Global index of local VN 0; in-window VNs are a contiguous range.
    pub fn first_vn(&self) -> usize {
        self.first_vn
    }

    /// Global range of the in-window VNs.
    pub fn vn_range(&self) -> std::ops::Range<usize> {
        self.first_vn..self.first_vn + self.num_vns
    }

    /// Global range of the boundary VNs.
    pub fn boundary_range(&self) -> std::ops::Range<usize> {
        self.first_boundary..self.first_boundary + self.num_boundary
    }

    pub fn vn_position(&self, v: usize) -> usize {
        self.vn_position[v]
    }

    #[inline]
    pub fn vn_edges(&self, v: usize) -> &[u32] {
        &self.vn_edges[self.vn_start[v]..self.vn_start[v + 1]]
    }

    #[inline]
    pub fn cn_edge_range(&self, c: usize) -> std::ops::Range<usize> {
        self.cn_start[c]..self.cn_start[c + 1]
    }

    #[inline]
    pub fn cn_boundary(&self, c: usize) -> &[u32] {
        &self.cn_bnd[self.cn_bnd_start[c]..self.cn_bnd_start[c + 1]]
    }

    #[inline]
    pub fn cn_slot(&self, c: usize) -> usize {
        self.cn_slot[c]
    }

    pub fn cn_global(&self, c: usize) -> usize {
        self.cn_global[c]
    }

    #[inline]
    pub fn edge_vn(&self, e: usize) -> usize {
        self.edge_vn[e] as usize
    }

    #[inline]
    pub fn edge_cn(&self, e: usize) -> usize {
        self.edge_cn[e] as usize
    }

    /// Local indices of the target VNs.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }
}
