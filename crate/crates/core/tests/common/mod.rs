//! Reference implementations shared by the integration tests and the
//! acceptance runner. Each is written from the definitions, without reusing
//! the library's decoder internals.

#![allow(dead_code)]

use nwd_core::code_graph::{
    build_coupled_base, lift, window_view, ComponentBases, CoupledBaseMatrix, IntMatrix,
    LiftedTannerGraph,
};
use nwd_core::decoder::{decode_window, DecoderConfig, Role, WeightSet};
use nwd_core::training::{soft_bler_loss, soft_bler_loss_grad};
use nwd_core::unrolled_net::{backward, forward, prune_to_targets, unroll, Tape, UnrolledGraph};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Flooding min-sum over an explicit edge list.
pub struct MinSumOracle {
    /// (vn, cn) per edge.
    pub edges: Vec<(usize, usize)>,
    vn_adj: Vec<Vec<usize>>,
    cn_adj: Vec<Vec<usize>>,
}

/// Messages of every iteration, `v2c[l][e]` and `c2v[l][e]`, then decisions.
pub struct Trace {
    pub v2c: Vec<Vec<f64>>,
    pub c2v: Vec<Vec<f64>>,
    pub decisions: Vec<f64>,
}

impl MinSumOracle {
    pub fn new(edges: Vec<(usize, usize)>, n_vn: usize, n_cn: usize) -> Self {
        let mut vn_adj = vec![Vec::new(); n_vn];
        let mut cn_adj = vec![Vec::new(); n_cn];
        for (e, &(v, c)) in edges.iter().enumerate() {
            vn_adj[v].push(e);
            cn_adj[c].push(e);
        }
        Self {
            edges,
            vn_adj,
            cn_adj,
        }
    }

    pub fn run(&self, channel: &[f64], iterations: usize) -> Trace {
        let n = self.edges.len();
        let mut c2v = vec![0.0; n];
        let (mut v2c_trace, mut c2v_trace) = (Vec::new(), Vec::new());
        for _ in 0..iterations {
            let mut v2c = vec![0.0; n];
            for (e, &(v, _)) in self.edges.iter().enumerate() {
                let others: f64 = self.vn_adj[v].iter().filter(|&&o| o != e).map(|&o| c2v[o]).sum();
                v2c[e] = channel[v] + others;
            }
            for (e, &(_, c)) in self.edges.iter().enumerate() {
                let others: Vec<f64> = self.cn_adj[c].iter().filter(|&&o| o != e).map(|&o| v2c[o]).collect();
                let sign: f64 = others.iter().map(|&x| if x < 0.0 { -1.0 } else { 1.0 }).product();
                let mag = others.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
                c2v[e] = sign * mag;
            }
            v2c_trace.push(v2c);
            c2v_trace.push(c2v.clone());
        }
        let decisions = (0..channel.len())
            .map(|v| channel[v] + self.vn_adj[v].iter().map(|&e| c2v[e]).sum::<f64>())
            .collect();
        Trace {
            v2c: v2c_trace,
            c2v: c2v_trace,
            decisions,
        }
    }
}

/// A random coupled code with 0/1 proto entries (no doubled lifted edges)
/// and every check of degree at least 2.
pub fn random_code(rng: &mut ChaCha8Rng) -> LiftedTannerGraph {
    loop {
        let (n_c, n_v, w) = (rng.random_range(1..=2), rng.random_range(2..=4), rng.random_range(1..=2));
        let length = rng.random_range(w + 1..=5);
        let comps: Vec<IntMatrix> = (0..=w)
            .map(|_| {
                let rows: Vec<Vec<u32>> = (0..n_c)
                    .map(|_| (0..n_v).map(|_| u32::from(rng.random_bool(0.6))).collect())
                    .collect();
                IntMatrix::from_rows(&rows).unwrap()
            })
            .collect();
        let base = build_coupled_base(ComponentBases::new(comps).unwrap(), length).unwrap();
        let g = lift(&base, rng.random_range(1..=4), rng.random()).unwrap();
        if (0..g.num_cns()).all(|c| g.cn_degree(c) >= 2) {
            return g;
        }
    }
}

/// Largest per-message deviation between the unit-weight decoder (and its
/// unrolled network) and the oracle on one random instance, with a window
/// that spans the whole code.
pub fn min_sum_deviation(rng: &mut ChaCha8Rng) -> (f64, usize) {
    let g = random_code(rng);
    let base = g.base();
    let length = base.length();
    let iterations = rng.random_range(1..=5);
    let window = length + base.w();
    let mut cfg = DecoderConfig::new(window, 1, iterations).unwrap();
    cfg.llr_clip = 1e12;
    let view = window_view(length, base.w(), 1, window).unwrap();

    let edges: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.vn, e.cn)).collect();
    let oracle = MinSumOracle::new(edges.clone(), g.num_vns(), g.num_cns());
    let index: std::collections::HashMap<(usize, usize), usize> =
        edges.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let channel: Vec<f64> = (0..g.num_vns()).map(|_| rng.random_range(-4.0..6.0)).collect();
    let trace = oracle.run(&channel, iterations);

    let ws = WeightSet::fixed(iterations, window, base.n_c(), 1.0);
    let net = unroll(&g, &view, &cfg, false).unwrap();
    let nw = net.window();
    assert_eq!((nw.num_vns(), nw.num_cns(), nw.num_boundary()), (g.num_vns(), g.num_cns(), 0));
    let res = decode_window(nw, &channel, &[], &ws, None, &cfg).unwrap();
    let (dec, tape) = forward(&net, &ws, None, &channel, &[]).unwrap();

    let mut worst = 0.0f64;
    let mut count = 0;
    for e in 0..nw.num_edges() {
        let o = index[&(nw.first_vn() + nw.edge_vn(e), nw.cn_global(nw.edge_cn(e)))];
        for l in 0..iterations {
            worst = worst.max((tape.v2c(l, e) - trace.v2c[l][o]).abs());
            worst = worst.max((tape.c2v(l, e) - trace.c2v[l][o]).abs());
            count += 2;
        }
    }
    for v in 0..g.num_vns() {
        worst = worst.max((res.decisions[v] - trace.decisions[v]).abs());
        worst = worst.max((dec[v] - trace.decisions[v]).abs());
        count += 2;
    }
    (worst, count)
}

/// Walks from each CN slot at each iteration to a target decision,
/// enumerated one path at a time on the base matrix. A message leaving a CN
/// skips the edge it came in on; a VN forwards to all of its edges.
pub fn brute_force_walks(
    base: &CoupledBaseMatrix,
    stage: usize,
    window: usize,
    iters: usize,
    t_size: usize,
) -> Vec<u128> {
    let view = window_view(base.length(), base.w(), stage, window).unwrap();
    let (n_c, n_v) = (base.n_c(), base.n_v());
    // (slot, global proto VN), parallel edges listed separately
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for p in view.cn_positions() {
        for k in 0..n_c {
            for q in view.vn_positions() {
                for j in 0..n_v {
                    let m = base.entry((p - 1) * n_c + k, (q - 1) * n_v + j);
                    for _ in 0..m {
                        edges.push(((p - stage) * n_c + k, (q - 1) * n_v + j));
                    }
                }
            }
        }
    }
    let is_target = |vn: usize| vn / n_v + 1 < stage + t_size;

    fn walks(edges: &[(usize, usize)], e: usize, l: usize, iters: usize, is_target: &dyn Fn(usize) -> bool) -> u128 {
        let vn = edges[e].1;
        if l == iters {
            return u128::from(is_target(vn));
        }
        let mut total = 0;
        for (e2, &(c2, v2)) in edges.iter().enumerate() {
            if v2 != vn {
                continue;
            }
            for (e3, &(c3, _)) in edges.iter().enumerate() {
                if c3 == c2 && e3 != e2 {
                    total += walks(edges, e3, l + 1, iters, is_target);
                }
            }
        }
        total
    }

    let slots = window * n_c;
    let mut out = vec![0u128; iters * slots];
    for l in 1..=iters {
        for (e, &(c, _)) in edges.iter().enumerate() {
            out[(l - 1) * slots + c] += walks(&edges, e, l, iters, &is_target);
        }
    }
    out
}

/// The pruned `W = 5`, four-iteration network used by the gradient check:
/// stage 3 of a `(3, 6)` code with `z = 3`, so boundary inputs are present.
pub fn gradient_network() -> (UnrolledGraph, DecoderConfig) {
    let comps = nwd_core::code_graph::uniform_edge_spread(
        &nwd_core::code_graph::regular_block_base(3, 6).unwrap(),
        2,
    )
    .unwrap();
    let base = build_coupled_base(comps, 12).unwrap();
    let g = lift(&base, 3, 17).unwrap();
    let cfg = DecoderConfig::new(5, 1, 4).unwrap();
    let view = window_view(12, 2, 3, 5).unwrap();
    let net = unroll(&g, &view, &cfg, true).unwrap();
    (prune_to_targets(&net, 1).unwrap().0, cfg)
}

pub enum PointCheck {
    /// Some perturbation flips a min, sign or clip decision.
    Degenerate,
    /// (parameters checked, worst relative error)
    Checked(usize, f64),
}

fn same_branches(net: &UnrolledGraph, a: &Tape, b: &Tape) -> bool {
    let nw = net.window();
    (0..net.iterations()).all(|l| {
        (0..nw.num_cns()).all(|c| {
            let (_, _, a1, a2, an) = a.cn_record(l, c);
            let (_, _, b1, b2, bn) = b.cn_record(l, c);
            (a1, a2, an) == (b1, b2, bn)
        })
    })
}

/// Compares reverse-mode gradients of the soft block loss with central
/// differences (step `h`) for every surviving weight and damping factor at
/// one random point.
pub fn gradient_point(rng: &mut ChaCha8Rng, net: &UnrolledGraph, cfg: &DecoderConfig, h: f64) -> PointCheck {
    let nw = net.window();
    let (iters, slots) = (net.iterations(), nw.num_slots());
    let n = iters * slots;
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..1.3)).collect();
    let damping: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..0.9)).collect();
    let ws = WeightSet::from_parts(iters, cfg.window, nw.n_c(), weights, Some(damping), Role::Plain).unwrap();
    let ch: Vec<f64> = (0..nw.num_vns()).map(|_| rng.random_range(-2.0..5.0)).collect();
    let bd: Vec<f64> = (0..nw.num_boundary()).map(|_| rng.random_range(-3.0..10.0)).collect();
    let n_target = nw.targets().len();
    let beta = 0.5;

    let (dec, tape) = forward(net, &ws, None, &ch, &bd).unwrap();
    let (_, upstream) = soft_bler_loss_grad(&dec, n_target, beta);
    let grad = backward(net, &tape, &upstream).unwrap();

    let clip = cfg.llr_clip;
    let saturated = (0..iters).any(|l| {
        (0..nw.num_edges()).any(|e| tape.v2c(l, e).abs() >= clip || tape.c2v(l, e).abs() >= clip)
    });
    if saturated {
        return PointCheck::Degenerate;
    }

    let loss = |p: &WeightSet| {
        let r = decode_window(nw, &ch, &bd, p, None, cfg).unwrap();
        soft_bler_loss(&r.decisions, n_target, beta)
    };
    let surviving = net.surviving_slots();
    let mut checked = 0;
    let mut worst = 0.0f64;
    for i in (0..n).filter(|&i| surviving[i]) {
        for damped in [false, true] {
            let shifted = |d: f64| {
                let mut p = ws.clone();
                if damped {
                    p.damping_mut().unwrap()[i] += d;
                } else {
                    p.weights_mut()[i] += d;
                }
                p
            };
            let (plus, minus) = (shifted(h), shifted(-h));
            let (_, tp) = forward(net, &plus, None, &ch, &bd).unwrap();
            let (_, tm) = forward(net, &minus, None, &ch, &bd).unwrap();
            if !same_branches(net, &tp, &tm) || !same_branches(net, &tp, &tape) {
                return PointCheck::Degenerate;
            }
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let analytic = if damped {
                grad.damping.as_ref().unwrap()[i]
            } else {
                grad.weights[i]
            };
            let scale = numeric.abs().max(analytic.abs()).max(1e-6);
            worst = worst.max((numeric - analytic).abs() / scale);
            checked += 1;
        }
    }
    // pruned slots carry no gradient at all
    for i in (0..n).filter(|&i| !surviving[i]) {
        assert_eq!(grad.weights[i], 0.0);
        assert_eq!(grad.damping.as_ref().unwrap()[i], 0.0);
    }
    PointCheck::Checked(checked, worst)
}
