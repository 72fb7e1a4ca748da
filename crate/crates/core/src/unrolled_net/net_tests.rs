use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::code_graph::{
    build_coupled_base, lift, regular_block_base, uniform_edge_spread, window_view, ComponentBases,
    CoupledBaseMatrix, IntMatrix,
};
use crate::decoder::{decode_window, Role, ScheduleMask, WeightSet};

fn base36(len: usize) -> CoupledBaseMatrix {
    let comps = uniform_edge_spread(&regular_block_base(3, 6).unwrap(), 2).unwrap();
    build_coupled_base(comps, len).unwrap()
}

/// Irregular two-row base with a parallel edge.
fn base_irregular(len: usize) -> CoupledBaseMatrix {
    let m = |rows: &[Vec<u32>]| IntMatrix::from_rows(rows).unwrap();
    let comps = ComponentBases::new(vec![
        m(&[vec![2, 1], vec![0, 1]]),
        m(&[vec![1, 1], vec![1, 0]]),
        m(&[vec![0, 1], vec![1, 1]]),
    ])
    .unwrap();
    build_coupled_base(comps, len).unwrap()
}

fn random_weights(rng: &mut ChaCha8Rng, iters: usize, window: usize, n_c: usize, damped: bool) -> WeightSet {
    let n = iters * window * n_c;
    let w = (0..n).map(|_| rng.random_range(0.3..1.4)).collect();
    let d = damped.then(|| (0..n).map(|_| rng.random_range(0.05..0.95)).collect());
    WeightSet::from_parts(iters, window, n_c, w, d, Role::Plain).unwrap()
}

fn random_mask(rng: &mut ChaCha8Rng, iters: usize, window: usize, n_c: usize) -> ScheduleMask {
    let mut m = ScheduleMask::full(iters, window, n_c);
    for l in 1..iters {
        for c in 0..window * n_c {
            if rng.random_bool(0.25) {
                m.set(l, c, false);
            }
        }
    }
    m
}

fn llrs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-5.0..9.0)).collect()
}

#[test]
fn forward_matches_decoder() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..100 {
        let (base, n_c) = if trial % 3 == 0 { (base_irregular(9), 2) } else { (base36(9), 1) };
        let g = lift(&base, 1 + trial % 4, trial as u64).unwrap();
        let window = 3 + trial % 3;
        let iters = 1 + trial % 4;
        let stage = 1 + trial % 9;
        let mut cfg = DecoderConfig::new(window, 1, iters).unwrap();
        if trial % 5 == 0 {
            cfg.llr_clip = 6.0;
        }
        let view = window_view(9, 2, stage, window).unwrap();
        let net = unroll(&g, &view, &cfg, stage > 1).unwrap();
        let ws = random_weights(&mut rng, iters, window, n_c, trial % 2 == 0);
        let mask = (trial % 4 == 1).then(|| random_mask(&mut rng, iters, window, n_c));
        let ch = llrs(&mut rng, net.window().num_vns());
        let bd = llrs(&mut rng, net.window().num_boundary());
        let (dec, tape) = forward(&net, &ws, mask.as_ref(), &ch, &bd).unwrap();
        let reference = decode_window(net.window(), &ch, &bd, &ws, mask.as_ref(), &cfg).unwrap();
        assert_eq!(dec, reference.decisions, "trial {trial}");
        assert_eq!(tape.decisions(), &dec[..]);
    }
}

fn loss_of(dec: &[f64], coef: &[f64], targets: &[usize]) -> f64 {
    targets.iter().map(|&v| coef[v] * dec[v]).sum()
}

/// Compares analytic gradients against central differences of the decoder
/// output, skipping parameters with a kink inside the step.
fn check_gradients(seed: u64, clip: f64, damped: bool, masked: bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = lift(&base36(8), 3, seed).unwrap();
    let mut cfg = DecoderConfig::new(4, 1, 3).unwrap();
    cfg.llr_clip = clip;
    let view = window_view(8, 2, 3, 4).unwrap();
    let net = unroll(&g, &view, &cfg, true).unwrap();
    let (net, _) = prune_to_targets(&net, 1).unwrap();
    let ws = random_weights(&mut rng, 3, 4, 1, damped);
    let mask = masked.then(|| random_mask(&mut rng, 3, 4, 1));
    let ch = llrs(&mut rng, net.window().num_vns());
    let bd = llrs(&mut rng, net.window().num_boundary());
    let targets = net.loss_targets();
    let coef: Vec<f64> = (0..ch.len()).map(|_| rng.random_range(-1.0..1.0)).collect();

    let (_, tape) = forward(&net, &ws, mask.as_ref(), &ch, &bd).unwrap();
    let upstream: Vec<f64> = (0..ch.len())
        .map(|v| if targets.contains(&v) { coef[v] } else { 0.0 })
        .collect();
    let grad = backward(&net, &tape, &upstream).unwrap();

    let eval = |ws: &WeightSet, ch: &[f64], bd: &[f64]| {
        let r = decode_window(net.window(), ch, bd, ws, mask.as_ref(), &cfg).unwrap();
        loss_of(&r.decisions, &coef, &targets)
    };
    let h = 1e-4;
    let (mut checked, mut skipped) = (0, 0);
    let mut compare = |name: String, analytic: f64, f: &dyn Fn(f64) -> f64| {
        let (fp, f0, fm) = (f(h), f(0.0), f(-h));
        let (fwd, bwd) = ((fp - f0) / h, (f0 - fm) / h);
        if (fwd - bwd).abs() > 1e-6 * fwd.abs().max(1.0) {
            skipped += 1;
            return;
        }
        let central = (fp - fm) / (2.0 * h);
        let err = (analytic - central).abs() / analytic.abs().max(1.0);
        assert!(err <= 1e-4, "{name}: analytic {analytic} vs numeric {central}");
        checked += 1;
    };

    for i in 0..ws.weights().len() {
        compare(format!("weight {i}"), grad.weights[i], &|d| {
            let mut p = ws.clone();
            p.weights_mut()[i] += d;
            eval(&p, &ch, &bd)
        });
    }
    if damped {
        let gd = grad.damping.as_ref().unwrap();
        for i in 0..gd.len() {
            compare(format!("damping {i}"), gd[i], &|d| {
                let mut p = ws.clone();
                p.damping_mut().unwrap()[i] += d;
                eval(&p, &ch, &bd)
            });
        }
    }
    for v in 0..ch.len() {
        compare(format!("channel {v}"), grad.channel[v], &|d| {
            let mut p = ch.clone();
            p[v] += d;
            eval(&ws, &p, &bd)
        });
    }
    for b in 0..bd.len() {
        compare(format!("boundary {b}"), grad.boundary[b], &|d| {
            let mut p = bd.clone();
            p[b] += d;
            eval(&ws, &ch, &p)
        });
    }
    assert!(checked > 4 * skipped, "checked {checked}, skipped {skipped}");
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..6 {
        check_gradients(seed, 64.0, seed % 2 == 0, seed % 3 == 0);
    }
    check_gradients(40, 3.0, true, false);
    check_gradients(41, 3.0, false, true);
}

#[test]
fn gradients_vanish_at_pruned_slots() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = lift(&base36(20), 2, 3).unwrap();
    let cfg = DecoderConfig::new(10, 1, 10).unwrap();
    let net = unroll(&g, &window_view(20, 2, 1, 10).unwrap(), &cfg, false).unwrap();
    let (net, _) = prune_to_targets(&net, 1).unwrap();
    let ws = random_weights(&mut rng, 10, 10, 1, true);
    let ch = llrs(&mut rng, net.window().num_vns());
    let (_, tape) = forward(&net, &ws, None, &ch, &[]).unwrap();
    let grad = backward(&net, &tape, &vec![1.0; ch.len()]).unwrap();
    for (i, alive) in net.surviving_slots().iter().enumerate() {
        if !alive {
            assert_eq!(grad.weights[i], 0.0);
            assert_eq!(grad.damping.as_ref().unwrap()[i], 0.0);
        }
    }
}

fn single_check(row: Vec<u32>) -> (UnrolledGraph, DecoderConfig) {
    let comps = ComponentBases::new(vec![IntMatrix::from_rows(&[row]).unwrap()]).unwrap();
    let g = lift(&build_coupled_base(comps, 1).unwrap(), 1, 0).unwrap();
    let cfg = DecoderConfig::new(1, 1, 1).unwrap();
    let net = unroll(&g, &window_view(1, 0, 1, 1).unwrap(), &cfg, false).unwrap();
    (net, cfg)
}

#[test]
fn degree_three_check_by_hand() {
    let (net, _) = single_check(vec![1, 1, 1]);
    let ws = WeightSet::uniform(1, 1, 1, 0.5, Role::Plain);
    let (dec, tape) = forward(&net, &ws, None, &[2.0, -3.0, 5.0], &[]).unwrap();
    // message to the third VN: 0.5 * sgn(2) * sgn(-3) * min(2, 3)
    assert_eq!(tape.c2v(0, 2), -1.0);
    assert_eq!(dec[2], 4.0);
    let grad = backward(&net, &tape, &[0.0, 0.0, 1.0]).unwrap();
    assert_eq!(grad.weights, vec![-2.0]);
    assert_eq!(grad.channel, vec![-0.5, 0.0, 1.0]);
}

#[test]
fn tied_minimum_routes_to_lowest_index() {
    let (net, _) = single_check(vec![1, 1, 1, 1]);
    let ws = WeightSet::uniform(1, 1, 1, 1.0, Role::Plain);
    let (_, tape) = forward(&net, &ws, None, &[3.0; 4], &[]).unwrap();
    let grad = backward(&net, &tape, &[0.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(grad.channel, vec![1.0, 0.0, 0.0, 1.0]);
}

#[test]
fn stale_tape_rejected() {
    let g = lift(&base36(6), 1, 0).unwrap();
    let cfg = DecoderConfig::new(3, 1, 2).unwrap();
    let net = unroll(&g, &window_view(6, 2, 1, 3).unwrap(), &cfg, false).unwrap();
    let (pruned, _) = prune_to_targets(&net, 1).unwrap();
    let ws = WeightSet::uniform(2, 3, 1, 1.0, Role::Plain);
    let (_, tape) = forward(&net, &ws, None, &[1.0; 6], &[]).unwrap();
    assert!(matches!(
        backward(&pruned, &tape, &[1.0; 6]),
        Err(crate::Error::StaleTape(_))
    ));
}

#[test]
fn pruning_is_sound() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..30 {
        let g = lift(&base36(12), 2, trial).unwrap();
        let (window, iters) = (6, 4);
        let stage = 1 + (trial as usize % 5);
        let cfg = DecoderConfig::new(window, 1, iters).unwrap();
        let view = window_view(12, 2, stage, window).unwrap();
        let net = unroll(&g, &view, &cfg, stage > 1).unwrap();
        let (pruned, _) = prune_to_targets(&net, 1).unwrap();
        let ws = random_weights(&mut rng, iters, window, 1, trial % 2 == 1);
        let ch = llrs(&mut rng, net.window().num_vns());
        let bd = llrs(&mut rng, net.window().num_boundary());
        let full = decode_window(net.window(), &ch, &bd, &ws, None, &cfg).unwrap();

        let mut zeroed = ws.clone();
        for (i, alive) in pruned.surviving_slots().iter().enumerate() {
            if !alive {
                zeroed.weights_mut()[i] = 0.0;
            }
        }
        let after = decode_window(net.window(), &ch, &bd, &zeroed, None, &cfg).unwrap();
        let (dec, _) = forward(&pruned, &ws, None, &ch, &bd).unwrap();
        for v in pruned.loss_targets() {
            assert_eq!(full.decisions[v], after.decisions[v]);
            assert_eq!(full.decisions[v], dec[v]);
        }
    }
}

#[test]
fn pruning_is_complete_on_small_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = lift(&base36(10), 1, 0).unwrap();
    let cfg = DecoderConfig::new(4, 1, 3).unwrap();
    let net = unroll(&g, &window_view(10, 2, 1, 4).unwrap(), &cfg, false).unwrap();
    let (pruned, _) = prune_to_targets(&net, 1).unwrap();
    let targets = pruned.loss_targets();
    for (i, alive) in pruned.surviving_slots().iter().enumerate() {
        if !alive {
            continue;
        }
        let changed = (0..200).any(|_| {
            let ws = random_weights(&mut rng, 3, 4, 1, false);
            let ch = llrs(&mut rng, net.window().num_vns());
            let a = decode_window(net.window(), &ch, &[], &ws, None, &cfg).unwrap();
            let mut p = ws.clone();
            p.weights_mut()[i] *= 1.7;
            let b = decode_window(net.window(), &ch, &[], &p, None, &cfg).unwrap();
            targets.iter().any(|&v| a.decisions[v] != b.decisions[v])
        });
        assert!(changed, "surviving slot {i} never influences a target");
    }
}

#[test]
fn pruned_slot_counts() {
    let g = lift(&base36(30), 1, 0).unwrap();
    for (window, iters, expected) in [(10, 10, 84), (18, 4, 24)] {
        let cfg = DecoderConfig::new(window, 1, iters).unwrap();
        let net = unroll(&g, &window_view(30, 2, 1, window).unwrap(), &cfg, false).unwrap();
        let (p, surviving) = prune_to_targets(&net, 1).unwrap();
        assert_eq!(surviving, expected);
        // a slot at iteration l survives iff its position is <= 3 + 2 (iters - l)
        for (i, &alive) in p.surviving_slots().iter().enumerate() {
            let (l, pos) = (i / window + 1, i % window + 1);
            assert_eq!(alive, pos <= 3 + 2 * (iters - l));
        }
    }
}

/// Independent walk enumeration on the base matrix.
fn brute_force_counts(
    base: &CoupledBaseMatrix,
    stage: usize,
    window: usize,
    iters: usize,
    t_size: usize,
) -> Vec<u128> {
    let view = window_view(base.length(), base.w(), stage, window).unwrap();
    let (n_c, n_v) = (base.n_c(), base.n_v());
    // parallel edges listed separately: (slot, vn id)
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
    let target = |vn: usize| vn / n_v + 1 < stage + t_size;

    // walks starting with the CN-to-VN message on edge `e` at iteration `l`
    fn walks(edges: &[(usize, usize)], e: usize, l: usize, iters: usize, target: &dyn Fn(usize) -> bool) -> u128 {
        let vn = edges[e].1;
        if l == iters {
            return u128::from(target(vn));
        }
        let mut total = 0;
        for (e2, &(c2, v2)) in edges.iter().enumerate() {
            if v2 != vn {
                continue;
            }
            for (e3, &(c3, _)) in edges.iter().enumerate() {
                if c3 == c2 && e3 != e2 {
                    total += walks(edges, e3, l + 1, iters, target);
                }
            }
        }
        total
    }

    let slots = window * n_c;
    let mut out = vec![0u128; iters * slots];
    for l in 1..=iters {
        for (e, &(c, _)) in edges.iter().enumerate() {
            out[(l - 1) * slots + c] += walks(&edges, e, l, iters, &target);
        }
    }
    out
}

#[test]
fn reach_counts_match_walk_enumeration() {
    for base in [base36(7), base_irregular(7)] {
        for window in 3..=4 {
            for iters in 1..=3 {
                for stage in [1, 2, 3, 5, 7] {
                    for t_size in 1..=window {
                        let view = window_view(7, 2, stage, window).unwrap();
                        let n = reach_counts(&base, &view, iters, t_size).unwrap();
                        let oracle = brute_force_counts(&base, stage, window, iters, t_size);
                        assert_eq!(n.counts, oracle, "W={window} l={iters} t={stage} T={t_size}");
                    }
                }
            }
        }
    }
}

#[test]
fn first_check_at_iteration_nine_has_six_walks() {
    let base = base36(30);
    let n = reach_counts(&base, &window_view(30, 2, 1, 10).unwrap(), 10, 1).unwrap();
    assert_eq!(n.get(9, 0), 6);
    assert_eq!(n.row(10), &[2, 2, 2, 0, 0, 0, 0, 0, 0, 0]);
    for l in 1..=10 {
        for pos in 1..=10 {
            assert_eq!(n.get(l, pos - 1) > 0, pos <= 3 + 2 * (10 - l), "l={l} pos={pos}");
        }
    }
}

#[test]
fn single_position_window_always_reaches() {
    let comps = uniform_edge_spread(&regular_block_base(3, 6).unwrap(), 0).unwrap();
    let base = build_coupled_base(comps, 4).unwrap();
    let n = reach_counts(&base, &window_view(4, 0, 2, 1).unwrap(), 5, 1).unwrap();
    assert!(n.counts.iter().all(|&c| c > 0));
}

#[test]
fn normalized_rows_sum_to_one() {
    let base = base36(30);
    let n = reach_counts(&base, &window_view(30, 2, 1, 10).unwrap(), 10, 1).unwrap();
    let norm = normalize_counts(&n);
    for row in norm.values.chunks(10) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    assert!(norm.zero_rows.iter().all(|z| !z));
    // late iterations concentrate on the front
    assert!(norm.get(10, 0) > norm.get(1, 0));

    let uniform = ReachCounts {
        iterations: 2,
        slots: 4,
        counts: vec![3, 3, 3, 3, 0, 0, 0, 0],
    };
    let u = normalize_counts(&uniform);
    assert_eq!(&u.values[..4], &[0.25; 4]);
    assert_eq!(u.zero_rows, vec![false, true]);
    let dump = dump_counts(&uniform);
    assert!(dump.contains("  2 ....\n"));
}

