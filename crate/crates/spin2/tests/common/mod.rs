//! Brute-force reference values shared by the integration tests. Nothing
//! here calls into the library's evaluation code.
#![allow(dead_code)]

use std::collections::HashMap;

use malachite::base::num::arithmetic::traits::Pow;
use malachite::Rational;
use rand::Rng;
use spin2::Multigraph;

pub type Q = Rational;

pub fn q(n: i64, d: i64) -> Q {
    Q::from(n) / Q::from(d)
}

pub fn rand_q<R: Rng>(rng: &mut R, lo: i64, hi: i64, den: i64) -> Q {
    q(rng.gen_range(lo * den..=hi * den), den)
}

fn pins_ok(mask: usize, pins: &[(usize, usize)]) -> bool {
    pins.iter().all(|&(v, s)| (mask >> v) & 1 == s)
}

/// Sum over spin assignments compatible with `pins` of
/// beta^{#00 edges} gamma^{#11 edges} prod_{v: spin 1} lam_v.
pub fn brute_z(g: &Multigraph, beta: &Q, gamma: &Q, lam: &[Q], pins: &[(usize, usize)]) -> Q {
    let n = g.n;
    assert!(n <= 22, "brute force limited to 22 vertices");
    let m = g.edges.len();
    let bp: Vec<Q> = (0..=m).map(|k| beta.pow(k as u64)).collect();
    let gp: Vec<Q> = (0..=m).map(|k| gamma.pow(k as u64)).collect();
    let mut lam_prod = vec![Q::from(1); 1 << n];
    for mask in 1usize..1 << n {
        let low = mask.trailing_zeros() as usize;
        lam_prod[mask] = &lam_prod[mask & (mask - 1)] * &lam[low];
    }
    let mut z = Q::from(0);
    for mask in 0usize..1 << n {
        if !pins_ok(mask, pins) {
            continue;
        }
        let (mut a, mut b) = (0, 0);
        for &(u, v) in &g.edges {
            match ((mask >> u) & 1, (mask >> v) & 1) {
                (0, 0) => a += 1,
                (1, 1) => b += 1,
                _ => {}
            }
        }
        z += &bp[a] * &gp[b] * &lam_prod[mask];
    }
    z
}

/// Same at unit field, tallying (a, b) counts first so larger graphs stay
/// cheap.
pub fn brute_z_ones(g: &Multigraph, beta: &Q, gamma: &Q, pins: &[(usize, usize)]) -> Q {
    let n = g.n;
    assert!(n <= 24, "brute force limited to 24 vertices");
    let mut tally: HashMap<(u32, u32), u64> = HashMap::new();
    for mask in 0usize..1 << n {
        if !pins_ok(mask, pins) {
            continue;
        }
        let (mut a, mut b) = (0u32, 0u32);
        for &(u, v) in &g.edges {
            match ((mask >> u) & 1, (mask >> v) & 1) {
                (0, 0) => a += 1,
                (1, 1) => b += 1,
                _ => {}
            }
        }
        *tally.entry((a, b)).or_default() += 1;
    }
    tally
        .into_iter()
        .map(|((a, b), c)| beta.pow(a as u64) * gamma.pow(b as u64) * Q::from(c))
        .fold(Q::from(0), |s, t| s + t)
}

/// Lower bound on e^t for 0 <= t <= 1 (partial Taylor sum).
pub fn exp_lower(t: &Q) -> Q {
    let mut term = Q::from(1);
    let mut s = Q::from(1);
    for k in 1..40u64 {
        term = term * t / Q::from(k);
        s += &term;
    }
    s
}

/// Upper bound on e^t for 0 <= t <= 1: the partial sum plus twice the
/// next term.
pub fn exp_upper(t: &Q) -> Q {
    let mut term = Q::from(1);
    let mut s = Q::from(1);
    for k in 1..40u64 {
        term = term * t / Q::from(k);
        s += &term;
    }
    s + term * t / Q::from(40) * Q::from(2)
}

/// e^{-eps} target < x < e^{eps} target, decided with rational bounds on
/// e^eps (0 < eps <= 1, target > 0). Returns None when the bounds cannot
/// separate.
pub fn strictly_in_window(x: &Q, target: &Q, eps: &Q) -> Option<bool> {
    let lo = exp_lower(eps);
    let hi = exp_upper(eps);
    // x < target e^eps and x e^eps > target
    let upper_ok = if *x < target * &lo {
        Some(true)
    } else if *x >= target * &hi {
        Some(false)
    } else {
        None
    };
    let lower_ok = if x * &lo > *target {
        Some(true)
    } else if x * &hi <= *target {
        Some(false)
    } else {
        None
    };
    match (upper_ok, lower_ok) {
        (Some(a), Some(b)) => Some(a && b),
        (Some(false), _) | (_, Some(false)) => Some(false),
        _ => None,
    }
}

/// Number of minimum-cardinality edge sets separating s from t, by
/// enumerating edge subsets.
pub fn mincut_by_edge_subsets(g: &Multigraph, s: usize, t: usize) -> (usize, u64) {
    let m = g.edges.len();
    assert!(m <= 20);
    let separates = |removed: usize| {
        let mut seen = vec![false; g.n];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(x) = stack.pop() {
            for (i, &(u, v)) in g.edges.iter().enumerate() {
                if removed >> i & 1 == 1 {
                    continue;
                }
                let y = if u == x { v } else if v == x { u } else { continue };
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        !seen[t]
    };
    for k in 0..=m {
        let c = (0usize..1 << m).filter(|&r| r.count_ones() as usize == k && separates(r)).count() as u64;
        if c > 0 {
            return (k, c);
        }
    }
    unreachable!("removing every edge separates s and t")
}

/// Star with n leaves at uniform field x, summing over the centre spin.
pub fn star_z(beta: &Q, gamma: &Q, n: u64, x: &Q) -> Q {
    let centre0 = (beta + x).pow(n);
    let centre1 = x * (Q::from(1) + gamma * x).pow(n);
    centre0 + centre1
}
