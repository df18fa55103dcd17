//! Closed forms and recursions of the model.
//!
//! Everything here is a pure function. Tail probabilities are computed
//! by exact summation in the log domain; series are truncated only when
//! a certified geometric tail bound drops below `1e-12`. The binomial
//! renormalization recursions are run with equality in place of the
//! defining inequalities, so their outputs are certified lower bounds on
//! the true good-ball and origin-cluster probabilities.

use crate::error::{Error, Result};
use crate::lattice::upow;
use crate::sampler::edge_prob;
use serde::Serialize;
use std::io::Write;

const TAIL_TOL: f64 = 1e-12;

/// Outcome of a series evaluation that may diverge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SeriesSum {
    Convergent(f64),
    Divergent,
}

impl SeriesSum {
    pub fn value(&self) -> Option<f64> {
        match self {
            SeriesSum::Convergent(v) => Some(*v),
            SeriesSum::Divergent => None,
        }
    }
}

fn check_order(order: u32) -> Result<()> {
    if order < 2 {
        return Err(Error::Parameter(format!("order must be >= 2, got {order}")));
    }
    Ok(())
}

/// `P(E_k)`: probability that a fixed vertex shares an edge with at
/// least one vertex at distance `k`, `1 - exp(-(alpha/beta^k)(N-1)N^(k-1))`.
pub fn shell_edge_prob(order: u32, alpha: f64, beta: f64, k: u32) -> Result<f64> {
    check_order(order)?;
    if k == 0 {
        return Err(Error::Parameter("shell index k must be >= 1".into()));
    }
    let n = order as f64;
    let exponent = alpha * (n / beta).powi(k as i32) * (n - 1.0) / n;
    Ok(-(-exponent).exp_m1())
}

/// Exponent of the no-escape probability for a radius-`j` ball against
/// the shells `j+1 ..= horizon` (`None` = infinite horizon, requires
/// `beta > N`).
fn ball_escape_exponent(order: u32, alpha: f64, beta: f64, j: u32, horizon: Option<u32>) -> Result<f64> {
    check_order(order)?;
    let n = order as f64;
    let nj = (n).powi(j as i32);
    match horizon {
        Some(h) => {
            if h < j {
                return Err(Error::Parameter(format!("horizon {h} below radius {j}")));
            }
            let mut sum = 0.0;
            for k in j + 1..=h {
                sum += (n - 1.0) * n.powi(k as i32 - 1) * beta.powi(-(k as i32));
            }
            Ok(alpha * nj * sum)
        }
        None => {
            if beta <= n {
                return Err(Error::Divergent(format!(
                    "infinite-horizon escape has probability 1 for beta={beta} <= N={order}"
                )));
            }
            // sum_{k>j} (N-1) N^(k-1) beta^-k = N^j (N-1) / (beta^j (beta-N))
            Ok(alpha * nj * nj * (n - 1.0) / (beta.powi(j as i32) * (beta - n)))
        }
    }
}

/// `P(B_j(0) <-> complement within B_horizon)`. With `horizon = None`
/// and `beta > N` this is `1 - exp(-alpha N^(2j) (N-1) / (beta^j (beta-N)))`.
pub fn ball_escape_prob(order: u32, alpha: f64, beta: f64, j: u32, horizon: Option<u32>) -> Result<f64> {
    Ok(-(-ball_escape_exponent(order, alpha, beta, j, horizon)?).exp_m1())
}

/// Escape probability of a cluster of `cluster_size` vertices inside
/// `B_j(0)` against the shells up to `horizon`.
pub fn cluster_escape_prob(
    order: u32,
    alpha: f64,
    beta: f64,
    cluster_size: f64,
    j: u32,
    horizon: Option<u32>,
) -> Result<f64> {
    // per-vertex exponent = ball exponent / N^j
    let per_vertex = ball_escape_exponent(order, alpha, beta, j, horizon)? / (order as f64).powi(j as i32);
    Ok(-(-cluster_size * per_vertex).exp_m1())
}

/// Conditional escape probability of a cluster of given size in `B_i(0)`
/// against the whole complement:
/// `1 - exp(-alpha s (N-1)/(beta-N) (N/beta)^i)`. With
/// `s = K (beta/N)^i` the value is independent of `i`.
pub fn cond_escape_prob(cluster_size: f64, i: u32, order: u32, alpha: f64, beta: f64) -> Result<f64> {
    check_order(order)?;
    let n = order as f64;
    if beta <= n {
        return Err(Error::Divergent(format!(
            "conditional escape requires beta > N, got beta={beta}, N={order}"
        )));
    }
    let exponent = alpha * cluster_size * (n - 1.0) / (beta - n) * (n / beta).powi(i as i32);
    Ok(-(-exponent).exp_m1())
}

/// Expected degree `sum_k (N-1) N^(k-1) p_k`, summed until the certified
/// geometric tail bound drops below `1e-12`. Divergent for `beta <= N`.
pub fn expected_degree(order: u32, alpha: f64, beta: f64) -> Result<SeriesSum> {
    check_order(order)?;
    let n = order as f64;
    if alpha == 0.0 {
        return Ok(SeriesSum::Convergent(0.0));
    }
    if beta <= n {
        return Ok(SeriesSum::Divergent);
    }
    let mut sum = 0.0;
    let mut k = 1u32;
    loop {
        sum += (n - 1.0) * n.powi(k as i32 - 1) * edge_prob(alpha, beta, k);
        // tail after k: sum_{m>k} (N-1) N^(m-1) alpha beta^-m
        let tail = alpha * (n - 1.0) * (n / beta).powi(k as i32) / (beta - n);
        if tail < TAIL_TOL {
            break;
        }
        k += 1;
        if k > 100_000 {
            return Err(Error::Divergent("expected-degree tail failed to certify".into()));
        }
    }
    Ok(SeriesSum::Convergent(sum))
}

/// Lower bound `(beta - N)/(N - 1)` on the critical `alpha`; 0 for
/// `beta <= N` where the transition is trivial.
pub fn alpha_c_lower_bound(order: u32, beta: f64) -> Result<f64> {
    check_order(order)?;
    let n = order as f64;
    if beta <= n {
        return Ok(0.0);
    }
    Ok((beta - n) / (n - 1.0))
}

/// Feasibility of the renormalization window `sqrt(beta) < eta <= (N^K - 1)^(1/K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaCheck {
    pub ok: bool,
    pub lower: f64,
    pub upper: f64,
    /// Smallest block size making the window nonempty, if any exists.
    pub smallest_feasible_block: Option<u32>,
}

pub fn validate_eta(order: u32, beta: f64, block: u32, eta: f64) -> Result<EtaCheck> {
    check_order(order)?;
    if block == 0 {
        return Err(Error::Parameter("block size K must be >= 1".into()));
    }
    let lower = beta.sqrt();
    let upper = ((upow(order as u64, block)? - 1) as f64).powf(1.0 / block as f64);
    let ok = lower < eta && eta <= upper;
    let smallest_feasible_block = (1..=63u32).find(|&k| {
        upow(order as u64, k)
            .map(|p| ((p - 1) as f64).powf(1.0 / k as f64) > lower)
            .unwrap_or(false)
    });
    Ok(EtaCheck {
        ok,
        lower,
        upper,
        smallest_feasible_block,
    })
}

/// `eps_n = exp(-(alpha / beta^K) (eta^2 / beta)^(nK))`: the failure
/// probability of linking two large sub-components at level `n`.
pub fn epsilon_n(alpha: f64, beta: f64, block: u32, eta: f64, n: u32) -> f64 {
    let ratio = eta * eta / beta;
    (-(alpha / beta.powi(block as i32)) * ratio.powi((n * block) as i32)).exp()
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `P(Bin(m, p) >= threshold)` by exact log-domain summation.
pub fn binom_tail(m: u64, p: f64, threshold: i64) -> f64 {
    if threshold <= 0 {
        return 1.0;
    }
    if threshold > m as i64 {
        return 0.0;
    }
    let t = threshold as u64;
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ln_m = ln_factorial(m);
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut terms: Vec<f64> = (t..=m)
        .map(|i| {
            ln_m - ln_factorial(i) - ln_factorial(m - i) + i as f64 * lp + (m - i) as f64 * lq
        })
        .collect();
    // sum smallest-first around the peak for stability
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sum: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    (max.exp() * sum).min(1.0)
}

/// `P(X > k)` for `X ~ Poisson(lambda)`, by direct upper-tail summation.
pub fn poisson_sf(lambda: f64, k: u64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    // first term: e^-lambda lambda^(k+1) / (k+1)!
    let mut ln_term = -lambda + (k as f64 + 1.0) * lambda.ln() - ln_factorial(k + 1);
    let mut term = ln_term.exp();
    if term == 0.0 {
        // deep tail: sum a few terms in log space
        let mut total = 0.0f64;
        for i in k + 1..k + 200 {
            total += ln_term.exp();
            ln_term += lambda.ln() - ((i + 1) as f64).ln();
        }
        return total;
    }
    let mut sum = 0.0;
    let mut i = k + 1;
    loop {
        sum += term;
        i += 1;
        term *= lambda / i as f64;
        if term < sum * 1e-18 + f64::MIN_POSITIVE {
            break;
        }
    }
    sum
}

/// Per-step certificate data of a recursion trace.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionCertificate {
    /// `1 / (4 C(N^K, 2))`.
    pub gamma: f64,
    /// `eps_n <= gamma^n` for all computed `n` and `xi_1 <= gamma^2`.
    pub preconditions_met: bool,
    /// `xi_n <= gamma^(n+1)` for all computed `n`.
    pub bound_holds: bool,
}

/// The sequences of the renormalization iteration.
#[derive(Debug, Clone, Serialize)]
pub struct RecursionTrace {
    pub order: u32,
    pub block: u32,
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `eps_n` for `n = 0..=n_max`.
    pub eps: Vec<f64>,
    /// Lower-bound good-ball probabilities, `s_0 = 1`.
    pub s: Vec<f64>,
    /// Lower-bound origin-cluster probabilities (empty unless requested).
    pub t: Vec<f64>,
    /// `xi_n = 1 - s_n`.
    pub xi: Vec<f64>,
    /// Step-wise check of `xi_(n+1) <= C (xi_n + eps_n)^2`.
    pub contraction_ok: Vec<bool>,
    pub certificate: ContractionCertificate,
}

impl RecursionTrace {
    /// CSV rows `n, eps, s, t, xi, contraction_ok`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "n,eps,s,t,xi,contraction_ok")?;
        for n in 0..self.s.len() {
            let t = self.t.get(n).copied().map_or(String::new(), |v| v.to_string());
            let c = if n + 1 < self.s.len() {
                (self.contraction_ok[n] as u8).to_string()
            } else {
                String::new()
            };
            writeln!(w, "{},{},{},{},{},{}", n, self.eps[n], self.s[n], t, self.xi[n], c)?;
        }
        Ok(())
    }
}

fn recursion_base(
    order: u32,
    block: u32,
    eta: f64,
    alpha: f64,
    beta: f64,
    n_max: u32,
) -> Result<RecursionTrace> {
    let check = validate_eta(order, beta, block, eta)?;
    if !check.ok {
        return Err(Error::Parameter(format!(
            "eta={eta} outside ({}, {}]",
            check.lower, check.upper
        )));
    }
    let m = upow(order as u64, block)?;
    let c = (m * (m - 1) / 2) as f64;
    let steps = n_max as usize;
    let eps: Vec<f64> = (0..=n_max).map(|n| epsilon_n(alpha, beta, block, eta, n)).collect();
    let mut s = vec![1.0f64];
    for n in 0..steps {
        let p = s[n] * (1.0 - eps[n]);
        s.push(binom_tail(m, p, m as i64 - 1));
    }
    let xi: Vec<f64> = s.iter().map(|v| 1.0 - v).collect();
    let contraction_ok: Vec<bool> = (0..steps)
        .map(|n| xi[n + 1] <= c * (xi[n] + eps[n]).powi(2) + 1e-12)
        .collect();
    let gamma = 1.0 / (4.0 * c);
    let preconditions_met = (0..=steps)
        .all(|n| eps[n] <= gamma.powi(n as i32))
        && steps >= 1
        && xi[1] <= gamma * gamma;
    let bound_holds = (0..=steps).all(|n| xi[n] <= gamma.powi(n as i32 + 1));
    Ok(RecursionTrace {
        order,
        block,
        eta,
        alpha,
        beta,
        eps,
        s,
        t: Vec::new(),
        xi,
        contraction_ok,
        certificate: ContractionCertificate {
            gamma,
            preconditions_met,
            bound_holds: preconditions_met && bound_holds,
        },
    })
}

/// Run the good-ball recursion
/// `s_(n+1) = P(Bin(N^K, s_n (1 - eps_n)) >= N^K - 1)` with `s_0 = 1`.
pub fn iterate_s(
    order: u32,
    block: u32,
    eta: f64,
    alpha: f64,
    beta: f64,
    n_max: u32,
) -> Result<RecursionTrace> {
    recursion_base(order, block, eta, alpha, beta, n_max)
}

/// Extend the trace with the origin-cluster recursion
/// `t_(n+1) = t_n * P(Bin(N^K - 1, s_n (1 - eps_n)) >= N^K - 2)`,
/// cross-checked against the coupled bound
/// `P(Bin(N^K-1, p) >= N^K-2) >= P(Bin(N^K, p) >= N^K-1)`.
pub fn iterate_t(
    order: u32,
    block: u32,
    eta: f64,
    alpha: f64,
    beta: f64,
    n_max: u32,
) -> Result<RecursionTrace> {
    let mut trace = recursion_base(order, block, eta, alpha, beta, n_max)?;
    let m = upow(order as u64, block)?;
    let mut t = vec![1.0f64];
    for n in 0..n_max as usize {
        let p = trace.s[n] * (1.0 - trace.eps[n]);
        let factor = binom_tail(m - 1, p, m as i64 - 2);
        debug_assert!(factor + 1e-12 >= binom_tail(m, p, m as i64 - 1));
        t.push(t[n] * factor);
    }
    trace.t = t;
    Ok(trace)
}

/// Largest solution of `P(Bin(m, p x) >= m-1) = x` in `[0, 1]`, via the
/// monotone iteration `u_0 = 1`, `u_(n+1) = G_p(u_n)`, which decreases
/// to the largest fixed point. Returns 0 when no positive solution exists.
pub fn fixed_point_g(m: u64, p: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Parameter(format!("m must be >= 2, got {m}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p must lie in [0, 1], got {p}")));
    }
    let mut u = 1.0f64;
    for _ in 0..200_000 {
        let next = binom_tail(m, p * u, m as i64 - 1);
        if (next - u).abs() < 1e-14 {
            u = next;
            break;
        }
        u = next;
    }
    Ok(if u < 1e-12 { 0.0 } else { u })
}

/// Giant-component fraction: largest `rho` in `[0, 1)` with
/// `1 - rho = exp(-lambda rho)`; 0 for `lambda <= 1`.
pub fn giant_fraction(lambda: f64) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::Parameter(format!("lambda must be >= 0, got {lambda}")));
    }
    if lambda <= 1.0 {
        return Ok(0.0);
    }
    let mut rho = 1.0f64;
    for _ in 0..2_000_000 {
        let next = -(-lambda * rho).exp_m1();
        if (next - rho).abs() < 1e-14 {
            rho = next;
            break;
        }
        rho = next;
    }
    Ok(rho)
}

/// The Poisson out-degree coupling of the mixed model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingParams {
    /// `alpha (N-1)/(beta-N)`.
    pub lambda1: f64,
    /// `alpha (1+eps) (N-1)/(beta-N)`.
    pub lambda2: f64,
    /// Closure probability equating `P(Z1 = 0)` and `P(Z2 = 0)`.
    pub gamma: f64,
    pub epsilon: f64,
}

/// Solve `gamma + (1-gamma) e^(-lambda2) = e^(-lambda1)` for the closure
/// probability that matches the zero classes of the two couplings.
pub fn gamma_for_epsilon(order: u32, alpha: f64, beta: f64, epsilon: f64) -> Result<CouplingParams> {
    check_order(order)?;
    let n = order as f64;
    if beta <= n {
        return Err(Error::Parameter(format!(
            "coupling requires beta > N, got beta={beta}, N={order}"
        )));
    }
    if epsilon <= 0.0 {
        return Err(Error::Parameter(format!("epsilon must be > 0, got {epsilon}")));
    }
    let lambda1 = alpha * (n - 1.0) / (beta - n);
    let lambda2 = alpha * (1.0 + epsilon) * (n - 1.0) / (beta - n);
    let gamma = ((-lambda1).exp() - (-lambda2).exp()) / -(-lambda2).exp_m1();
    Ok(CouplingParams {
        lambda1,
        lambda2,
        gamma,
        epsilon,
    })
}

/// Strict stochastic dominance of the conditioned out-degrees:
/// `P(Z2 > k | Z2 > 0) > P(Z1 > k | Z1 > 0)` for `1 <= k <= k_max`.
/// At `k = 0` both conditional tails equal 1 identically, so the
/// comparison starts at 1.
pub fn dominance_check(order: u32, alpha: f64, beta: f64, epsilon: f64, k_max: u64) -> Result<bool> {
    if epsilon == 0.0 {
        return Ok(false); // identical laws
    }
    let cp = gamma_for_epsilon(order, alpha, beta, epsilon)?;
    let norm1 = -(-cp.lambda1).exp_m1();
    let norm2 = -(-cp.lambda2).exp_m1();
    Ok((1..=k_max).all(|k| poisson_sf(cp.lambda2, k) / norm2 > poisson_sf(cp.lambda1, k) / norm1))
}

/// Expected branching gain `b` of loosening `beta` to `beta (1-eps)`:
/// `alpha eps (N-1) N / ((beta(1-eps) - N)(beta - N))`.
pub fn subcritical_b(order: u32, alpha: f64, beta: f64, epsilon: f64) -> Result<f64> {
    check_order(order)?;
    let n = order as f64;
    if beta * (1.0 - epsilon) <= n {
        return Err(Error::Parameter(format!(
            "requires beta (1-eps) > N: beta={beta}, eps={epsilon}, N={order}"
        )));
    }
    Ok(alpha * epsilon * (n - 1.0) * n / ((beta * (1.0 - epsilon) - n) * (beta - n)))
}

/// Geometric cluster-size bound `a / (1 - ab)`; divergent for `ab >= 1`.
pub fn expected_cluster_bound(a: f64, b: f64) -> Result<SeriesSum> {
    if a < 1.0 || b < 0.0 {
        return Err(Error::Parameter(format!("requires a >= 1, b >= 0, got a={a}, b={b}")));
    }
    if a * b >= 1.0 {
        return Ok(SeriesSum::Divergent);
    }
    Ok(SeriesSum::Convergent(a / (1.0 - a * b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_edge_prob_examples() {
        assert_eq!(shell_edge_prob(2, 0.0, 3.0, 4).unwrap(), 0.0);
        // beta = N: P(E_k) constant in k
        let base = 1.0 - (-1.0f64 * (3.0 - 1.0) / 3.0).exp();
        for k in 1..10 {
            assert!((shell_edge_prob(3, 1.0, 3.0, k).unwrap() - base).abs() < 1e-14);
        }
        // partial sums of P(E_k): unbounded for beta <= N, convergent for beta > N
        let partial = |order: u32, beta: f64, terms: u32| -> f64 {
            (1..=terms).map(|k| shell_edge_prob(order, 1.0, beta, k).unwrap()).sum()
        };
        assert!(partial(2, 2.0, 200) > 50.0);
        let s1 = partial(2, 3.0, 200);
        let s2 = partial(2, 3.0, 400);
        assert!((s2 - s1).abs() < 1e-12 && s2 < 10.0);
    }

    #[test]
    fn ball_escape_examples() {
        // beta = N^2: 1 - exp(-alpha/N), independent of j
        for order in [2u32, 3] {
            let beta = (order * order) as f64;
            let expected = -(-1.0f64 / order as f64).exp_m1();
            for j in 0..=10 {
                let v = ball_escape_prob(order, 1.0, beta, j, None).unwrap();
                assert!((v - expected).abs() < 1e-12, "order={order} j={j}");
            }
        }
        assert_eq!(ball_escape_prob(2, 0.0, 4.0, 2, None).unwrap(), 0.0);
        // N=2, beta=4, alpha=1, j=1: 1 - exp(-1/2)
        let v = ball_escape_prob(2, 1.0, 4.0, 1, None).unwrap();
        assert!((v - -(-0.5f64).exp_m1()).abs() < 1e-14);
        // divergent for beta <= N at infinite horizon
        assert!(matches!(
            ball_escape_prob(2, 1.0, 2.0, 1, None),
            Err(Error::Divergent(_))
        ));
        // finite horizon converges to the closed form as the horizon grows
        let lim = ball_escape_prob(2, 1.0, 3.0, 1, None).unwrap();
        let trunc = ball_escape_prob(2, 1.0, 3.0, 1, Some(40)).unwrap();
        assert!((lim - trunc).abs() < 1e-6);
        assert!(trunc < lim);
    }

    #[test]
    fn expected_degree_examples() {
        assert_eq!(expected_degree(2, 0.0, 3.0).unwrap(), SeriesSum::Convergent(0.0));
        assert_eq!(expected_degree(2, 1.0, 2.0).unwrap(), SeriesSum::Divergent);
        // bound alpha (N-1)/(beta-N) with a strict gap for alpha > 0
        for (order, alpha, beta) in [(2u32, 0.5, 3.0), (2, 2.0, 3.5), (3, 1.0, 5.0), (4, 0.7, 9.0)] {
            let v = expected_degree(order, alpha, beta).unwrap().value().unwrap();
            let bound = alpha * (order as f64 - 1.0) / (beta - order as f64);
            assert!(v < bound, "order={order} alpha={alpha} beta={beta}");
        }
        let v = expected_degree(2, 0.5, 3.0).unwrap().value().unwrap();
        assert!(v < 1.0);
        // oracle: direct truncated summation
        let direct: f64 = (1..200)
            .map(|k| 1.0 * 2f64.powi(k - 1) * edge_prob(0.5, 3.0, k as u32))
            .sum();
        assert!((v - direct).abs() < 1e-10);
    }

    #[test]
    fn alpha_c_lower_bound_examples() {
        assert_eq!(alpha_c_lower_bound(2, 3.0).unwrap(), 1.0);
        assert_eq!(alpha_c_lower_bound(3, 8.0).unwrap(), 2.5);
        assert!(alpha_c_lower_bound(2, 2.0 + 1e-12).unwrap() < 1e-11);
        assert_eq!(alpha_c_lower_bound(2, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn cond_escape_examples() {
        assert_eq!(cond_escape_prob(0.0, 3, 2, 1.0, 3.0).unwrap(), 0.0);
        // cluster_size = K (beta/N)^i makes the value i-independent
        let (order, alpha, beta, big_k) = (2u32, 1.0, 3.0, 2.0);
        let expected = -(-alpha * big_k * 1.0f64 / (beta - 2.0)).exp_m1();
        assert!((expected - (1.0 - (-2.0f64).exp())).abs() < 1e-14);
        for i in 1..=10 {
            let size = big_k * (beta / 2.0).powi(i as i32);
            let v = cond_escape_prob(size, i, order, alpha, beta).unwrap();
            assert!((v - expected).abs() < 1e-12, "i={i}");
        }
    }

    #[test]
    fn validate_eta_examples() {
        let c = validate_eta(2, 3.0, 3, 1.9).unwrap();
        assert!(c.ok);
        assert!((c.lower - 3.0f64.sqrt()).abs() < 1e-14);
        assert!((c.upper - 7.0f64.powf(1.0 / 3.0)).abs() < 1e-14);
        // K = 2 has an empty window at beta = 3: upper = sqrt(3) = lower
        for eta in [1.70, 1.7320508075688772, 1.8, 10.0] {
            assert!(!validate_eta(2, 3.0, 2, eta).unwrap().ok);
        }
        assert_eq!(validate_eta(2, 3.0, 1, 1.8).unwrap().smallest_feasible_block, Some(3));
        // beta >= N^2: empty window for every K
        for k in 1..20 {
            assert!(!validate_eta(2, 4.0, k, 1.99).unwrap().ok);
            assert!(validate_eta(2, 4.0, k, 1.99).unwrap().smallest_feasible_block.is_none());
        }
    }

    #[test]
    fn epsilon_n_examples() {
        let (alpha, beta, block, eta) = (100.0, 3.0, 3u32, 1.9);
        let e1 = epsilon_n(alpha, beta, block, eta, 1);
        let expected = (-(100.0 / 27.0) * (3.61f64 / 3.0).powi(3)).exp();
        assert!((e1 - expected).abs() < 1e-14);
        // decreasing to 0, and dominated by delta^n with
        // delta = (beta/eta^2)^(alpha K beta^-K)
        let delta = (beta / (eta * eta)).powf(alpha * block as f64 / beta.powi(block as i32));
        let mut prev = 1.0 + 1e-15;
        // stop before eps underflows to exactly 0
        for n in 0..8 {
            let e = epsilon_n(alpha, beta, block, eta, n);
            assert!(e < prev);
            assert!(e <= delta.powi(n as i32) + 1e-15);
            prev = e;
        }
    }

    #[test]
    fn binom_tail_examples() {
        assert_eq!(binom_tail(4, 1.0, 3), 1.0);
        assert_eq!(binom_tail(4, 0.5, 5), 0.0);
        assert_eq!(binom_tail(4, 0.5, 0), 1.0);
        assert!((binom_tail(4, 0.5, 3) - 5.0 / 16.0).abs() < 1e-14);
        // P(Bin(m,p) >= m-1) >= 1 - C(m,2)(1-p)^2
        for m in [2u64, 4, 8, 27, 64] {
            for p in [0.5, 0.9, 0.99, 0.999] {
                let tail = binom_tail(m, p, m as i64 - 1);
                let bound = 1.0 - (m * (m - 1) / 2) as f64 * (1.0 - p) * (1.0 - p);
                assert!(tail + 1e-12 >= bound, "m={m} p={p}");
            }
        }
        // brute force oracle at m=10
        let p: f64 = 0.37;
        for t in 0..=10i64 {
            let brute: f64 = (t..=10)
                .map(|i| {
                    let c = (1..=10).product::<i64>() as f64
                        / ((1..=i.max(1)).product::<i64>() as f64
                            * (1..=(10 - i).max(1)).product::<i64>() as f64);
                    c * p.powi(i as i32) * (1.0 - p).powi(10 - i as i32)
                })
                .sum();
            assert!((binom_tail(10, p, t) - brute).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn poisson_sf_matches_direct_sum() {
        for lambda in [0.3f64, 1.0, 2.5] {
            for k in [0u64, 1, 3, 10] {
                let direct: f64 = 1.0
                    - (0..=k)
                        .map(|i| (-lambda as f64).exp() * lambda.powi(i as i32) / ln_factorial(i).exp())
                        .sum::<f64>();
                assert!((poisson_sf(lambda, k) - direct).abs() < 1e-12, "l={lambda} k={k}");
            }
        }
        assert_eq!(poisson_sf(0.0, 3), 0.0);
        // deep tail stays positive and finite
        let deep = poisson_sf(1.0, 60);
        assert!(deep > 0.0 && deep < 1e-60);
    }

    #[test]
    fn iterate_s_collapses_at_alpha_zero() {
        let trace = iterate_s(2, 3, 1.9, 0.0, 3.0, 5).unwrap();
        assert_eq!(trace.eps[0], 1.0);
        assert_eq!(trace.s[0], 1.0);
        for n in 1..trace.s.len() {
            assert!(trace.s[n] < 1e-12);
        }
    }

    #[test]
    fn iterate_s_supercritical_certificate_run() {
        let trace = iterate_s(2, 3, 1.9, 100.0, 3.0, 30).unwrap();
        assert!(trace.contraction_ok.iter().all(|&b| b));
        assert!(trace.s[30] > 0.99);
        // s is nondecreasing from n = 1 on
        for n in 1..30 {
            assert!(trace.s[n + 1] + 1e-12 >= trace.s[n]);
        }
    }

    #[test]
    fn iterate_t_examples() {
        let trace = iterate_t(2, 3, 1.9, 100.0, 3.0, 30).unwrap();
        for n in 0..30 {
            assert!(trace.t[n + 1] <= trace.t[n] + 1e-15);
        }
        assert!(trace.t[30] > 0.0);
        let dead = iterate_t(2, 3, 1.9, 0.0, 3.0, 10).unwrap();
        assert!(dead.t[10] < 1e-10);
    }

    #[test]
    fn fixed_point_g_examples() {
        assert_eq!(fixed_point_g(8, 1.0).unwrap(), 1.0);
        assert_eq!(fixed_point_g(8, 0.0).unwrap(), 0.0);
        // independent bisection oracle on G_p(x) - x
        let (m, p) = (8u64, 0.999);
        let g = |x: f64| binom_tail(m, p * x, m as i64 - 1) - x;
        let (mut lo, mut hi) = (0.5, 1.0);
        assert!(g(lo) < 0.0 && g(hi) > 0.0 || g(hi) <= 0.0);
        // largest root: bisect on [x0, 1] where g changes sign from + to -
        // G_p(1) < 1 so g(1) < 0; pick lo where g > 0
        let mut found = 0.0;
        for i in 0..10_000 {
            let x = i as f64 / 10_000.0;
            if g(x) > 0.0 {
                found = x;
            }
        }
        lo = found;
        hi = 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let ours = fixed_point_g(m, p).unwrap();
        assert!((ours - oracle).abs() < 1e-10, "ours={ours} oracle={oracle}");
        // fixed-point residual and maximality on a grid
        assert!((binom_tail(m, p * ours, m as i64 - 1) - ours).abs() < 1e-10);
        for i in 1..=10_000 {
            let x = ours + (1.0 - ours) * i as f64 / 10_000.0;
            assert!(binom_tail(m, p * x, m as i64 - 1) < x + 1e-12);
        }
    }

    #[test]
    fn giant_fraction_examples() {
        assert_eq!(giant_fraction(0.5).unwrap(), 0.0);
        assert_eq!(giant_fraction(1.0).unwrap(), 0.0);
        let rho = giant_fraction(2.0).unwrap();
        assert!((1.0 - rho - (-2.0 * rho).exp()).abs() < 1e-10);
        assert!((rho - 0.796812).abs() < 2e-6);
        assert!(giant_fraction(30.0).unwrap() > 0.9999999);
        let mut prev = 0.0;
        for i in 1..40 {
            let l = 1.0 + i as f64 * 0.25;
            let r = giant_fraction(l).unwrap();
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn coupling_identity_and_dominance() {
        let cp = gamma_for_epsilon(2, 1.0, 3.0, 0.5).unwrap();
        assert!((cp.lambda1 - 1.0).abs() < 1e-14);
        assert!((cp.lambda2 - 1.5).abs() < 1e-14);
        let expected = ((-1.0f64).exp() - (-1.5f64).exp()) / (1.0 - (-1.5f64).exp());
        assert!((cp.gamma - expected).abs() < 1e-14);
        // P(Z1=0) = P(Z2=0) identity on a grid
        for order in [2u32, 3] {
            for alpha in [0.5, 1.0, 2.0] {
                for eps in [0.1, 0.5, 1.0] {
                    let beta = order as f64 + 1.3;
                    let cp = gamma_for_epsilon(order, alpha, beta, eps).unwrap();
                    let z2_zero = cp.gamma + (1.0 - cp.gamma) * (-cp.lambda2).exp();
                    assert!((z2_zero - (-cp.lambda1).exp()).abs() < 1e-12);
                    assert!(cp.gamma > 0.0 && cp.gamma < 1.0);
                    assert!(dominance_check(order, alpha, beta, eps, 50).unwrap());
                }
            }
        }
        assert!(!dominance_check(2, 1.0, 3.0, 0.0, 50).unwrap());
        // gamma -> 0 as eps -> 0
        let tiny = gamma_for_epsilon(2, 1.0, 3.0, 1e-9).unwrap();
        assert!(tiny.gamma < 1e-8);
    }

    #[test]
    fn subcritical_b_examples() {
        let b = subcritical_b(2, 1.0, 4.0, 0.25).unwrap();
        assert!((b - 0.25).abs() < 1e-14);
        assert!(subcritical_b(2, 1.0, 4.0, 1e-12).unwrap() < 1e-10);
        assert!(matches!(subcritical_b(2, 1.0, 3.0, 0.5), Err(Error::Parameter(_))));
        // monotone in eps
        let mut prev = 0.0;
        for i in 1..40 {
            let eps = i as f64 * 0.01;
            let b = subcritical_b(2, 1.0, 4.0, eps).unwrap();
            assert!(b > prev);
            prev = b;
        }
        // oracle: the exact linearized series
        // sum_i (N-1) N^(i-1) alpha beta^-i ((1-eps)^-i - 1)
        // evaluates to the closed form scaled by beta/N
        let (order, alpha, beta, eps): (u32, f64, f64, f64) = (3, 0.7, 5.0, 0.2);
        let n = order as f64;
        let series: f64 = (1..400)
            .map(|i| {
                (n - 1.0) * n.powi(i - 1) * alpha * beta.powi(-i) * ((1.0 - eps).powi(-i) - 1.0)
            })
            .sum();
        let b = subcritical_b(order, alpha, beta, eps).unwrap();
        assert!((series - b * beta / n).abs() < 1e-9, "series={series} b={b}");
    }

    #[test]
    fn expected_cluster_bound_examples() {
        assert_eq!(expected_cluster_bound(2.0, 0.0).unwrap(), SeriesSum::Convergent(2.0));
        assert_eq!(expected_cluster_bound(2.0, 0.25).unwrap(), SeriesSum::Convergent(4.0));
        assert_eq!(expected_cluster_bound(2.0, 0.5).unwrap(), SeriesSum::Divergent);
        assert!(matches!(expected_cluster_bound(0.5, 0.1), Err(Error::Parameter(_))));
    }

    #[test]
    fn trace_csv_export() {
        let trace = iterate_t(2, 3, 1.9, 100.0, 3.0, 5).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,eps,s,t,xi,contraction_ok"));
        assert_eq!(text.lines().count(), 7);
    }
}
