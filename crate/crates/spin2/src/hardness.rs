//! Counting minimum (s,t)-cuts with sign queries only. The sign oracle here
//! is the exact engine in factored form, so this demonstrates the reduction
//! rather than the hardness.

use std::cmp::Ordering;

use malachite::base::rounding_modes::RoundingMode::{Ceiling, Floor};
use malachite::Natural;

use crate::error::{Result, SpinError};
use crate::exact::{self, ActivityVector, PairMatrix};
use crate::expbound::{in_window, lt_exp};
use crate::gadgets::{realizer, Realizer};
use crate::graphcore::Multigraph;
use crate::ising::{self, IsingGadget};
use crate::num::{abs, bits, isqrt_floor, powu, rat, round_rel, sign, two_pow, Rat, SpinParams};

#[derive(Clone, Debug)]
pub struct CutInstance {
    pub g: Multigraph,
    pub s: usize,
    pub t: usize,
}

impl CutInstance {
    pub fn new(g: Multigraph, s: usize, t: usize) -> Result<Self> {
        if s >= g.n {
            return Err(SpinError::InvalidVertex(s, g.n));
        }
        if t >= g.n {
            return Err(SpinError::InvalidVertex(t, g.n));
        }
        if s == t {
            return Err(SpinError::InvalidInput("s and t must differ".into()));
        }
        if g.has_self_loops() {
            return Err(SpinError::InvalidInput("cut instances must be loop-free".into()));
        }
        if !g.is_connected() {
            return Err(SpinError::InvalidInput("cut instances must be connected".into()));
        }
        Ok(CutInstance { g, s, t })
    }

    pub fn m(&self) -> usize {
        self.g.edges.len()
    }
}

/// (k, C): minimum cut size and number of minimum cuts, by enumerating the
/// bipartitions with s on side 0 and t on side 1.
pub fn mincut_bruteforce(inst: &CutInstance) -> Result<(usize, u64)> {
    if inst.m() > 20 || inst.g.n > 24 {
        return Err(SpinError::SizeCap(format!("mincut oracle limited to 20 edges, got {}", inst.m())));
    }
    let others: Vec<usize> = (0..inst.g.n).filter(|&v| v != inst.s && v != inst.t).collect();
    let mut best = (usize::MAX, 0u64);
    for mask in 0u64..1 << others.len() {
        let mut side = vec![0u8; inst.g.n];
        side[inst.t] = 1;
        for (i, &v) in others.iter().enumerate() {
            side[v] = ((mask >> i) & 1) as u8;
        }
        let cut = inst.g.edges.iter().filter(|&&(a, b)| side[a] != side[b]).count();
        match cut.cmp(&best.0) {
            Ordering::Less => best = (cut, 1),
            Ordering::Equal => best.1 += 1,
            Ordering::Greater => {}
        }
    }
    Ok(best)
}

/// [Z_{G',s,t}] / N^m where G' replaces each edge by the Ising gadget;
/// computed from configuration counts of G without expanding G'.
pub fn lifted_normalized(inst: &CutInstance, m0: &Rat, m1: &Rat) -> Result<PairMatrix<Rat>> {
    let table = exact::count_table(&inst.g, &[inst.s, inst.t])?;
    let v = table.eval(m0, m1, &Rat::from(1));
    Ok(PairMatrix { m: [[v[0].clone(), v[2].clone()], [v[1].clone(), v[3].clone()]] })
}

pub fn lifted_pair_matrix(inst: &CutInstance, ig: &IsingGadget) -> Result<PairMatrix<Rat>> {
    let mut z = lifted_normalized(inst, &ig.m0, &ig.m1)?;
    let scale = powu(&ig.n, inst.m() as u64);
    for row in z.m.iter_mut() {
        for x in row.iter_mut() {
            *x *= &scale;
        }
    }
    Ok(z)
}

/// Partition function of G' with H1 at s and H2 at t.
pub fn decorated_partition(lift: &PairMatrix<Rat>, a1: &ActivityVector<Rat>, a2: &ActivityVector<Rat>) -> Rat {
    let z = &lift.m;
    &a1.z0 * &a2.z0 * &z[0][0] + &a1.z1 * &a2.z0 * &z[1][0] + &a1.z0 * &a2.z1 * &z[0][1] + &a1.z1 * &a2.z1 * &z[1][1]
}

fn sgn(q: &Rat) -> i8 {
    match sign(q) {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    }
}

/// sign T(h1, h2) = sign(Z) sign(1 + h1 h2) sign(N1 N2).
pub fn sign_t(lift: &PairMatrix<Rat>, a1: &ActivityVector<Rat>, a2: &ActivityVector<Rat>) -> i8 {
    let z = decorated_partition(lift, a1, a2);
    let h1 = &a1.z1 / &a1.z0;
    let h2 = &a2.z1 / &a2.z0;
    sgn(&z) * sgn(&(Rat::from(1) + &h1 * &h2)) * sgn(&(&a1.z0 * &a2.z0))
}

/// L(x) = M0^m + (1+d) C M1^(m-k) x and U(x) = (1+d) M1^m + C M0^(m-k) x.
pub fn sandwich_lines(m: usize, m0: &Rat, m1: &Rat, k: usize, c: u64, x: &Rat) -> (Rat, Rat) {
    let one_d = Rat::from(1) + two_pow(-4 * m as i64);
    let c = Rat::from(c);
    let l = powu(m0, m as u64) + &one_d * &c * powu(m1, (m - k) as u64) * x;
    let u = &one_d * powu(m1, m as u64) + &c * powu(m0, (m - k) as u64) * x;
    (l, u)
}

#[derive(Clone, Debug)]
pub struct SearchStep {
    pub p: Rat,
    pub q: Rat,
    pub r: Rat,
    pub eps: Rat,
    pub xi: Rat,
    pub sign: i8,
}

/// r in (-|p|^(4/9)|q|^(5/9), -|p|^(5/9)|q|^(4/9)), near -sqrt(|p||q|).
pub fn pick_r(p: &Rat, q: &Rat, m: usize) -> Result<Rat> {
    let (ap, aq) = (abs(p), abs(q));
    let lo9 = powu(&ap, 5) * powu(&aq, 4);
    let hi9 = powu(&ap, 4) * powu(&aq, 5);
    let x = &ap * &aq;
    let mut w = 4 * m as u64 + 40;
    for _ in 0..8 {
        let scaled = &x * two_pow(2 * w as i64);
        let n = Natural::try_from(crate::num::floor_int(&scaled)).map_err(|_| SpinError::Check("negative".into()))?;
        let r = Rat::from(isqrt_floor(&n)) / two_pow(w as i64);
        let r9 = powu(&r, 9);
        if r9 > lo9 && r9 < hi9 {
            return Ok(-r);
        }
        w *= 2;
    }
    Err(SpinError::Check("could not place r between the ninth-root bounds".into()))
}

/// Dyadic eps <= 2^(-4m) / (100 |r|).
pub fn pick_eps(r: &Rat, m: usize) -> Rat {
    let e = abs(r).floor_log_base_2_abs() + 1 + 7 + 4 * m as i64;
    two_pow(-e)
}

/// Checks the conclusion xi in (-|p|^(1/3)|q|^(2/3), -|p|^(2/3)|q|^(1/3)).
pub fn xi_in_thirds(p: &Rat, q: &Rat, xi: &Rat) -> bool {
    if *xi >= 0 {
        return false;
    }
    let (ap, aq) = (abs(p), abs(q));
    let x3 = powu(&abs(xi), 3);
    x3 > &ap * &ap * &aq && x3 < &ap * &aq * &aq
}

/// Separation hypotheses (with min{ln(q/p), 1} replaced by a
/// given lower bound `lnqp`), then its conclusion.
pub fn separation_conditions(p: &Rat, q: &Rat, r: &Rat, eps: &Rat, h1: &Rat, h2: &Rat, lnqp: &Rat) -> Option<bool> {
    let (ap, aq) = (abs(p), abs(q));
    let r9 = powu(&abs(r), 9);
    let hyp = q < p
        && *p <= -4
        && *r < 0
        && r9 > powu(&ap, 5) * powu(&aq, 4)
        && r9 < powu(&ap, 4) * powu(&aq, 5)
        && *eps > 0
        && eps * Rat::from(100) * abs(r) <= lnqp.clone().min(Rat::from(1))
        && in_window(h1, &rat(-1, 2), eps)
        && in_window(h2, &((Rat::from(2) * r + Rat::from(1)) / (Rat::from(2) + r)), eps);
    if !hyp {
        return None;
    }
    let xi = (h1 + h2) / (Rat::from(1) + h1 * h2);
    Some(xi_in_thirds(p, q, &xi))
}

/// Truth used only to check loop invariants in tests: (k, C, M0, M1).
#[derive(Clone, Debug)]
pub struct Truth {
    pub k: usize,
    pub c: u64,
    pub m0: Rat,
    pub m1: Rat,
}

/// Binary search for the cut count. `oracle` returns sign T for the two gadget activities.
pub fn binary_search_zero<F>(
    rz: &Realizer,
    mut oracle: F,
    m: usize,
    m1: &Rat,
    truth: Option<&Truth>,
) -> Result<(Rat, Rat, Vec<SearchStep>)>
where
    F: FnMut(&ActivityVector<Rat>, &ActivityVector<Rat>) -> Result<i8>,
{
    let delta = two_pow(-4 * m as i64);
    let mut p = Rat::from(-4);
    let mut q = -powu(m1, m as u64);
    let mut steps = Vec::new();
    let prec = 4 * m as u64 + 40;
    let check = |p: &Rat, q: &Rat| -> Result<()> {
        if let Some(t) = truth {
            let (l, _) = sandwich_lines(m, &t.m0, &t.m1, t.k, t.c, q);
            let (_, u) = sandwich_lines(m, &t.m0, &t.m1, t.k, t.c, p);
            if !(l < 0 && u > 0) {
                return Err(SpinError::Check("invariant L(q) < 0 < U(p) failed".into()));
            }
        }
        Ok(())
    };
    check(&p, &q)?;
    while !lt_exp(&(&q / &p), &delta) {
        let r = pick_r(&p, &q, m)?;
        let eps = pick_eps(&r, m);
        let h1g = rz.realize_ratio(&rat(-1, 2), &eps)?;
        let target2 = (Rat::from(2) * &r + Rat::from(1)) / (Rat::from(2) + &r);
        let h2g = rz.realize_ratio(&target2, &eps)?;
        let (a1, a2) = (h1g.activity().clone(), h2g.activity().clone());
        let (h1, h2) = (h1g.ratio(), h2g.ratio());
        let xi = (&h1 + &h2) / (Rat::from(1) + &h1 * &h2);
        if !xi_in_thirds(&p, &q, &xi) {
            return Err(SpinError::Check("combined ratio outside the one-third window".into()));
        }
        let s = oracle(&a1, &a2)?;
        if let Some(t) = truth {
            let (l, u) = sandwich_lines(m, &t.m0, &t.m1, t.k, t.c, &xi);
            if (s > 0 && u <= 0) || (s <= 0 && l >= 0) {
                return Err(SpinError::Check("sandwich L(xi) < T < U(xi) violated".into()));
            }
        }
        steps.push(SearchStep { p: p.clone(), q: q.clone(), r, eps, xi: xi.clone(), sign: s });
        // U and L are increasing, so p may move up and q down
        if s > 0 {
            p = round_rel(&xi, prec, Ceiling);
        } else {
            q = round_rel(&xi, prec, Floor);
        }
        check(&p, &q)?;
        if steps.len() > 10_000 {
            return Err(SpinError::Check("binary search did not terminate".into()));
        }
    }
    Ok((p, q, steps))
}

/// The unique (k, C) with C in {1..2^m} between the two bounds.
pub fn recover_kc(m: usize, m0: &Rat, m1: &Rat, p: &Rat, q: &Rat) -> Result<(usize, u64)> {
    let one_d = Rat::from(1) + two_pow(-4 * m as i64);
    let cap = Rat::from(1u64 << m);
    let limit = &cap / (&cap - Rat::from(1));
    let mut found = Vec::new();
    for k in 1..=m {
        let upper = &one_d * powu(m1, m as u64) / (-p * powu(m0, (m - k) as u64));
        let lower = powu(m0, m as u64) / (&one_d * -q * powu(m1, (m - k) as u64));
        if !(&upper / &lower < limit) {
            return Err(SpinError::Check(format!("bound ratio too large at k = {k}")));
        }
        let lo_int = crate::num::floor_int(&lower) + malachite::Integer::from(1);
        let c = Rat::from(lo_int);
        if c < upper && c >= 1 && c <= cap {
            let c = u64::try_from(&crate::num::floor_int(&c)).expect("small C");
            found.push((k, c));
        }
    }
    match found.as_slice() {
        [one] => Ok(*one),
        _ => Err(SpinError::Check(format!("expected one (k, C) candidate, found {found:?}"))),
    }
}

#[derive(Clone, Debug)]
pub struct ReductionResult {
    pub k: usize,
    pub c: u64,
    pub oracle_queries: usize,
    pub transcript: Vec<SearchStep>,
    pub p: Rat,
    pub q: Rat,
    pub m0: Rat,
    pub m1: Rat,
    pub max_bits: u64,
}

impl ReductionResult {
    pub fn json(&self) -> serde_json::Value {
        use crate::num::JsonValue;
        serde_json::json!({
            "k": self.k,
            "C": self.c,
            "oracle_queries": self.oracle_queries,
            "p": self.p.json(),
            "q": self.q.json(),
            "M0_bits": bits(&self.m0),
            "transcript": self.transcript.iter().map(|s| serde_json::json!({
                "r_bits": bits(&s.r), "sign": s.sign,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Ising gadget with the terminal spread tightened so that the sandwich
/// L(xi) < T(h1, h2) < U(xi) holds even though h2 > 0.
pub fn reduction_gadget(p: &SpinParams, m: usize) -> Result<IsingGadget> {
    let delta = two_pow(-4 * m as i64);
    let m_star = two_pow(5 * m as i64);
    let first = ising::realize_ising(p, &m_star, &delta)?;
    let q = first.perturbation.as_ref().map_or(p.clone(), |pt| pt.params.clone());
    let one = Rat::from(1);
    let b2 = &q.beta * &q.beta + &one;
    let g2 = &q.gamma * &q.gamma + &one;
    let big = powu(&(&b2 * &g2 / (q.sum() * q.sum())), first.k);
    let s0 = &delta / Rat::from(4);
    let d_lo = &delta - two_pow(m as i64) / (&big * (&one - &s0));
    if d_lo <= 0 {
        return Err(SpinError::Check("no margin between 2^m / M and 2^(-4m)".into()));
    }
    let spread = s0.min(d_lo / (Rat::from(32 * m as u64) * powu(&(Rat::from(2) * &big), m as u64)));
    let spread = crate::num::round_dyadic(&spread, spread.floor_log_base_2_abs() - 2, Floor);
    ising::realize_ising_with_spread(p, &m_star, &delta, &spread)
}

pub fn reduction_count_mincuts(p: &SpinParams, inst: &CutInstance) -> Result<ReductionResult> {
    run_reduction(p, inst, None)
}

/// Same, with per-iteration invariant checks against a known (k, C).
pub fn reduction_count_mincuts_checked(p: &SpinParams, inst: &CutInstance, kc: (usize, u64)) -> Result<ReductionResult> {
    run_reduction(p, inst, Some(kc))
}

fn run_reduction(p: &SpinParams, inst: &CutInstance, kc: Option<(usize, u64)>) -> Result<ReductionResult> {
    if inst.g.n > 10 || inst.m() > 12 {
        return Err(SpinError::SizeCap("reduction limited to 10 vertices and 12 edges".into()));
    }
    let m = inst.m();
    let ig = reduction_gadget(p, m)?;
    let lift = lifted_normalized(inst, &ig.m0, &ig.m1)?;
    let rz = realizer(p)?;
    let truth = kc.map(|(k, c)| Truth { k, c, m0: ig.m0.clone(), m1: ig.m1.clone() });
    let mut queries = 0;
    let mut max_bits = bits(&ig.m0).max(bits(&ig.m1));
    let oracle = |a1: &ActivityVector<Rat>, a2: &ActivityVector<Rat>| -> Result<i8> {
        queries += 1;
        max_bits = max_bits.max(bits(&a1.z0)).max(bits(&a2.z0));
        Ok(sign_t(&lift, a1, a2))
    };
    let (pp, qq, transcript) = binary_search_zero(&rz, oracle, m, &ig.m1, truth.as_ref())?;
    let (k, c) = recover_kc(m, &ig.m0, &ig.m1, &pp, &qq)?;
    Ok(ReductionResult {
        k,
        c,
        oracle_queries: queries,
        transcript,
        p: pp,
        q: qq,
        m0: ig.m0,
        m1: ig.m1,
        max_bits,
    })
}

/// Small named instances: path, parallel, cycle4, theta, k4.
pub fn named_instance(name: &str) -> Result<CutInstance> {
    let (n, edges, s, t): (usize, Vec<(usize, usize)>, usize, usize) = match name {
        "edge" => (2, vec![(0, 1)], 0, 1),
        "path" => (3, vec![(0, 1), (1, 2)], 0, 2),
        "parallel" => (2, vec![(0, 1), (0, 1)], 0, 1),
        "cycle4" => (4, vec![(0, 1), (1, 2), (2, 3), (3, 0)], 0, 2),
        "theta" => (5, vec![(0, 1), (1, 4), (0, 2), (2, 4), (0, 3), (3, 4)], 0, 4),
        "k4" => (4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], 0, 3),
        _ => return Err(SpinError::InvalidInput(format!("unknown instance {name}"))),
    };
    CutInstance::new(Multigraph::new(n, edges)?, s, t)
}
