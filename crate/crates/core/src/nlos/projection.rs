//! Euclidean projection onto `{x : x_{i+1} − x_i ≥ d, x_N − x_1 ≤ D}`.
//!
//! Substituting `u_i = x_i − (i−1)d` turns the spacing rows into
//! `u_1 ≤ … ≤ u_N` and the aperture row into `u_N − u_1 ≤ B`,
//! `B = D − (N−1)d`. Without the range row the answer is isotonic regression
//! (pool adjacent violators). The range row enters through its multiplier
//! `μ ≥ 0`, which lifts the first target by μ and lowers the last by μ; the
//! fitted range is non-increasing in μ, so μ is found by bisection and then
//! solved exactly from the final pooling.

/// Pool-adjacent-violators fit of a non-decreasing sequence.
pub fn isotonic(w: &[f64]) -> Vec<f64> {
    // (sum, count) per pool.
    let mut pools: Vec<(f64, usize)> = Vec::with_capacity(w.len());
    for &v in w {
        pools.push((v, 1));
        while pools.len() > 1 {
            let (s2, c2) = pools[pools.len() - 1];
            let (s1, c1) = pools[pools.len() - 2];
            if s1 / c1 as f64 > s2 / c2 as f64 {
                pools.pop();
                let last = pools.len() - 1;
                pools[last] = (s1 + s2, c1 + c2);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(w.len());
    for (s, c) in pools {
        let m = s / c as f64;
        out.extend(std::iter::repeat_n(m, c));
    }
    out
}

fn lifted(w: &[f64], mu: f64) -> Vec<f64> {
    let mut v = w.to_vec();
    let n = v.len();
    v[0] += mu;
    v[n - 1] -= mu;
    v
}

fn range(u: &[f64]) -> f64 {
    u[u.len() - 1] - u[0]
}

/// Sizes of the first and last pools of a fitted sequence.
fn end_pools(u: &[f64]) -> (usize, usize) {
    let n = u.len();
    let tol = 1e-12 * u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let first = u.iter().take_while(|v| (*v - u[0]).abs() <= tol).count();
    let last = u
        .iter()
        .rev()
        .take_while(|v| (*v - u[n - 1]).abs() <= tol)
        .count();
    (first, last)
}

/// Projection of `v` onto the chain polytope.
pub fn project_chain(v: &[f64], d: f64, aperture: f64) -> Vec<f64> {
    let n = v.len();
    if n <= 1 {
        return v.to_vec();
    }
    let b = aperture - (n - 1) as f64 * d;
    let w: Vec<f64> = v
        .iter()
        .enumerate()
        .map(|(i, x)| x - i as f64 * d)
        .collect();
    let mut u = isotonic(&w);
    if range(&u) > b {
        let spread = w.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
            - w.iter().fold(f64::INFINITY, |m, &x| m.min(x));
        let mut lo = 0.0;
        let mut hi = n as f64 * spread + 1.0;
        while range(&isotonic(&lifted(&w, hi))) > b {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if range(&isotonic(&lifted(&w, mid))) > b {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1.0) {
                break;
            }
        }
        let mut mu = hi;
        // Exact multiplier for the pooling found by bisection.
        let trial = isotonic(&lifted(&w, mu));
        let (m1, mn) = end_pools(&trial);
        if m1 + mn <= n {
            let s1: f64 = w[..m1].iter().sum();
            let sn: f64 = w[n - mn..].iter().sum();
            let exact = (sn / mn as f64 - s1 / m1 as f64 - b) / (1.0 / mn as f64 + 1.0 / m1 as f64);
            if exact >= 0.0 {
                let cand = isotonic(&lifted(&w, exact));
                if end_pools(&cand) == (m1, mn)
                    && (range(&cand) - b).abs() <= 1e-12 * b.abs().max(1.0)
                {
                    mu = exact;
                }
            }
        }
        u = isotonic(&lifted(&w, mu));
    }
    u.iter()
        .enumerate()
        .map(|(i, x)| x + i as f64 * d)
        .collect()
}

/// Maximizer of `−(δ/2)xᵀx + bᵀx` over the chain polytope, i.e. the
/// projection of `b/δ`.
pub fn solve_chain_qp(delta: f64, linear: &[f64], d: f64, aperture: f64) -> Vec<f64> {
    let v: Vec<f64> = linear.iter().map(|b| b / delta).collect();
    project_chain(&v, d, aperture)
}

/// Largest violation of the KKT conditions of the projection of `v`:
/// primal feasibility, multiplier sign and complementarity.
pub fn projection_kkt_residual(v: &[f64], x: &[f64], d: f64, aperture: f64) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    // Stationarity x − v + Uᵀλ = 0 fixes λ up to the cycle direction; solve
    // for the gap multipliers given the aperture multiplier λ_N.
    let r: Vec<f64> = x.iter().zip(v).map(|(a, b)| b - a).collect();
    // Uᵀλ: component 0 gets λ_1 − λ_N, component i gets λ_{i+1} − λ_i, last gets λ_N − λ_{N−1}.
    // With λ_N free, λ_i = λ_N + Σ_{k≤i} r_k for i < N.
    let gap_slack: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i] - d).collect();
    let ap_slack = aperture - (x[n - 1] - x[0]);
    let prefix: Vec<f64> = r
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    // Candidate aperture multipliers: zero, or the value that zeroes one of
    // the gap multipliers.
    let mut cands = vec![0.0f64];
    cands.extend(prefix[..n - 1].iter().map(|p| (-p).max(0.0)));
    let feas = gap_slack
        .iter()
        .map(|s| (-s).max(0.0))
        .fold((-ap_slack).max(0.0), f64::max);
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    cands
        .iter()
        .map(|&ln| {
            let mut worst = (prefix[n - 1]).abs() / scale;
            worst = worst.max((ln * ap_slack).abs() / scale);
            for i in 0..n - 1 {
                let li = ln + prefix[i];
                worst = worst.max((-li).max(0.0) / scale);
                worst = worst.max((li * gap_slack[i]).abs() / scale);
            }
            worst
        })
        .fold(f64::INFINITY, f64::min)
        .max(feas)
}
