//! Block-error losses over the target decisions of a window.
//!
//! Target VNs come first in window-local order, so both losses take the
//! number of target decisions rather than an index list.

/// 1 if any of the first `n_target` decisions is `<= 0`, else 0.
pub fn hard_bler_loss(decisions: &[f64], n_target: usize) -> u8 {
    u8::from(decisions[..n_target].iter().any(|&m| m <= 0.0))
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `1 - prod sigmoid(beta * m)` over the first `n_target` decisions.
pub fn soft_bler_loss(decisions: &[f64], n_target: usize, beta: f64) -> f64 {
    let log_p: f64 = decisions[..n_target]
        .iter()
        .map(|&m| -softplus(-beta * m))
        .sum();
    -log_p.exp_m1()
}

/// Soft loss and its gradient with respect to every decision (zero beyond
/// the targets).
pub fn soft_bler_loss_grad(decisions: &[f64], n_target: usize, beta: f64) -> (f64, Vec<f64>) {
    let log_p: f64 = decisions[..n_target]
        .iter()
        .map(|&m| -softplus(-beta * m))
        .sum();
    let p = log_p.exp();
    let mut grad = vec![0.0; decisions.len()];
    for (g, &m) in grad.iter_mut().zip(&decisions[..n_target]) {
        *g = -p * beta * sigmoid(-beta * m);
    }
    (-log_p.exp_m1(), grad)
}

pub(crate) fn logistic(x: f64) -> f64 {
    sigmoid(x)
}
