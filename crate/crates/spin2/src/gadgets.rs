//! Ratio realization: product and Mobius moves, base gadgets, dense
//! realization and the exponential-accuracy backbone construction.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use malachite::base::rounding_modes::RoundingMode::{Ceiling, Floor};

use crate::error::{Result, SpinError};
use crate::exact::{self, ActivityVector};
use crate::expbound::{gt_exp, in_window, lt_exp};
use crate::graphcore::{self, Multigraph};
use crate::num::{abs, bits, from_f64_dyadic, ln_abs_f64, powu, rat, round_dyadic, round_rel, to_f64, JsonValue, Rat, SpinParams};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioGadget {
    pub graph: Multigraph,
    pub root: usize,
    pub activity: ActivityVector<Rat>,
}

impl RatioGadget {
    pub fn new(graph: Multigraph, root: usize, activity: ActivityVector<Rat>) -> Result<Self> {
        if activity.z0 == 0 {
            return Err(SpinError::UndefinedRatio);
        }
        Ok(RatioGadget { graph, root, activity })
    }

    /// A lone vertex, activity (1, 1).
    pub fn single() -> Self {
        RatioGadget {
            graph: Multigraph::empty(1),
            root: 0,
            activity: ActivityVector::new(Rat::from(1), Rat::from(1)),
        }
    }

    /// One vertex with one self-loop, activity (beta, gamma).
    pub fn self_loop(p: &SpinParams) -> Result<Self> {
        RatioGadget::new(
            Multigraph::new(1, vec![(0, 0)])?,
            0,
            ActivityVector::new(p.beta.clone(), p.gamma.clone()),
        )
    }

    pub fn ratio(&self) -> Rat {
        &self.activity.z1 / &self.activity.z0
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.n
    }

    /// Brute-force activity of the graph, if it is within the cap.
    pub fn oracle_activity(&self, p: &SpinParams) -> Result<ActivityVector<Rat>> {
        exact::activity_ones(&self.graph, self.root, p)
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::json!({
            "graph": serde_json::to_value(&self.graph).expect("graph json"),
            "root": self.root,
            "activity": self.activity.json(),
            "ratio": self.ratio().json(),
        })
    }
}

pub fn mobius_f(p: &SpinParams, r: &Rat) -> Result<Rat> {
    p.mobius(r)
}

/// Wedge sum at the roots; activities multiply entrywise.
pub fn gadget_product(g1: &RatioGadget, g2: &RatioGadget) -> RatioGadget {
    let (graph, root) = graphcore::wedge_sum(&g1.graph, g1.root, &g2.graph, g2.root).expect("roots in range");
    RatioGadget { graph, root, activity: g1.activity.hadamard(&g2.activity) }
}

/// Pendant edge at the root; the new leaf becomes the root.
pub fn gadget_extend(g: &RatioGadget, p: &SpinParams) -> Result<RatioGadget> {
    let e = extend_unchecked(g, p)?;
    if e.activity.z0 == 0 {
        return Err(SpinError::Pole);
    }
    Ok(e)
}

/// Same as `gadget_extend` but allows z0 = 0 in the result.
fn extend_unchecked(g: &RatioGadget, p: &SpinParams) -> Result<RatioGadget> {
    let a = &g.activity;
    let z0 = &p.beta * &a.z0 + &a.z1;
    let z1 = &a.z0 + &p.gamma * &a.z1;
    let (graph, root) = graphcore::attach_edge(&g.graph, g.root)?;
    Ok(RatioGadget { graph, root, activity: ActivityVector::new(z0, z1) })
}

pub fn activity_pow(a: &ActivityVector<Rat>, k: u64) -> ActivityVector<Rat> {
    ActivityVector::new(powu(&a.z0, k), powu(&a.z1, k))
}

/// Appends a copy of `g` whose root is identified with vertex `at`.
pub(crate) fn append_rooted(edges: &mut Vec<(usize, usize)>, n: &mut usize, g: &RatioGadget, at: usize) {
    let off = *n;
    let map = |w: usize| -> usize {
        match w.cmp(&g.root) {
            std::cmp::Ordering::Equal => at,
            std::cmp::Ordering::Less => off + w,
            std::cmp::Ordering::Greater => off + w - 1,
        }
    };
    for &(a, b) in &g.graph.edges {
        let (x, y) = (map(a), map(b));
        edges.push(if x <= y { (x, y) } else { (y, x) });
    }
    *n += g.graph.n - 1;
}

/// Wedge sum of `count` copies of each part, built in one pass.
pub fn product_many(parts: &[(&RatioGadget, u64)]) -> RatioGadget {
    let mut edges = Vec::new();
    let mut n = 1;
    let mut act = ActivityVector::new(Rat::from(1), Rat::from(1));
    for &(g, k) in parts {
        for _ in 0..k {
            append_rooted(&mut edges, &mut n, g, 0);
        }
        act = act.hadamard(&activity_pow(&g.activity, k));
    }
    RatioGadget { graph: Multigraph { n, edges }, root: 0, activity: act }
}

pub fn gadget_power(g: &RatioGadget, k: u64) -> RatioGadget {
    product_many(&[(g, k)])
}

/// Path v_0 .. v_n with chain[k] attached at v_k; rooted at v_0.
pub fn backbone_graph(chain: &[RatioGadget]) -> Multigraph {
    let len = chain.len();
    let mut edges: Vec<(usize, usize)> = (1..len).map(|i| (i - 1, i)).collect();
    let mut n = len;
    for (k, g) in chain.iter().enumerate() {
        append_rooted(&mut edges, &mut n, g, k);
    }
    Multigraph { n, edges }
}

/// B_n = A_n, B_k = A_k o (M B_{k+1}) with M = [[beta, 1], [1, gamma]].
pub fn backbone_activity(chain: &[ActivityVector<Rat>], p: &SpinParams) -> ActivityVector<Rat> {
    let mut it = chain.iter().rev();
    let mut b = it.next().expect("nonempty chain").clone();
    for a in it {
        let m0 = &p.beta * &b.z0 + &b.z1;
        let m1 = &b.z0 + &p.gamma * &b.z1;
        b = ActivityVector::new(&a.z0 * m0, &a.z1 * m1);
    }
    b
}

pub fn exact_activity_of_backbone(chain: &[RatioGadget], p: &SpinParams) -> ActivityVector<Rat> {
    let acts: Vec<ActivityVector<Rat>> = chain.iter().map(|g| g.activity.clone()).collect();
    backbone_activity(&acts, p)
}

/// A gadget with ratio > 1, by the four-case construction.
pub fn base_gadget_gt1(p: &SpinParams) -> Result<RatioGadget> {
    p.require_gamma_region()?;
    let s = p.sum();
    let lp = RatioGadget::self_loop(p);
    let g = if s < 0 && p.beta != 0 {
        let lp = lp?;
        gadget_product(&lp, &lp)
    } else if p.beta == 0 {
        // v1 - v2 with a loop on v2 realizes gamma; extend and square
        let one = RatioGadget::new(
            Multigraph::new(2, vec![(0, 1), (1, 1)])?,
            0,
            ActivityVector::new(p.gamma.clone(), &p.gamma * &p.gamma),
        )?;
        let e = gadget_extend(&one, p)?;
        gadget_product(&e, &e)
    } else if p.gamma != -(&p.beta * &p.beta) {
        let e = gadget_extend(&lp?, p)?;
        gadget_product(&e, &e)
    } else {
        // path v1 - v2 - v3 with a loop on v3 realizes gamma; then extend.
        // The middle step has z0 = beta^2 + gamma = 0.
        let e = gadget_extend(&extend_unchecked(&lp?, p)?, p)?;
        gadget_extend(&e, p)?
    };
    if g.ratio() <= 1 {
        return Err(SpinError::Check(format!("gt1 gadget ratio {} is not > 1", g.ratio())));
    }
    Ok(g)
}

/// A gadget with ratio in (-1, 0).
pub fn base_gadget_neg(p: &SpinParams) -> Result<RatioGadget> {
    p.require_gamma_region()?;
    let g = if p.gamma < -1 {
        gadget_extend(&RatioGadget::single(), p)?
    } else {
        let g1 = base_gadget_gt1(p)?;
        let bound = -Rat::from(1) / &p.gamma;
        let r0 = g1.ratio();
        let mut k = 1;
        while powu(&r0, k) <= bound {
            k += 1;
        }
        gadget_extend(&gadget_power(&g1, k), p)?
    };
    let r = g.ratio();
    if !(r > -1 && r < 0) {
        return Err(SpinError::Check(format!("neg gadget ratio {r} is not in (-1, 0)")));
    }
    Ok(g)
}

const LIB_MAX_VERTICES: usize = 6;
const LIB_PER_LEVEL: usize = 160;

/// Small gadgets reachable from the base gadgets by extend and product,
/// one per distinct ratio, smallest first.
fn build_library(p: &SpinParams, extra: &[RatioGadget]) -> Vec<RatioGadget> {
    let mut seen: HashSet<Rat> = HashSet::new();
    let mut levels: Vec<Vec<RatioGadget>> = vec![Vec::new(); LIB_MAX_VERTICES + 1];
    let push = |g: RatioGadget, levels: &mut Vec<Vec<RatioGadget>>, seen: &mut HashSet<Rat>| {
        let n = g.vertex_count();
        if n > LIB_MAX_VERTICES || g.activity.z0 == 0 || levels[n].len() >= LIB_PER_LEVEL {
            return;
        }
        if seen.insert(g.ratio()) {
            levels[n].push(g);
        }
    };
    push(RatioGadget::single(), &mut levels, &mut seen);
    if let Ok(lp) = RatioGadget::self_loop(p) {
        for k in 1..=3 {
            push(gadget_power(&lp, k), &mut levels, &mut seen);
        }
    }
    for g in extra {
        push(g.clone(), &mut levels, &mut seen);
    }
    let loops: Vec<RatioGadget> = match RatioGadget::self_loop(p) {
        Ok(lp) => vec![lp.clone(), gadget_power(&lp, 2)],
        Err(_) => Vec::new(),
    };
    for n in 2..=LIB_MAX_VERTICES {
        let prev = levels[n - 1].clone();
        for g in &prev {
            if let Ok(e) = gadget_extend(g, p) {
                push(e, &mut levels, &mut seen);
            }
        }
        for n1 in 2..=n {
            let n2 = n + 1 - n1;
            if n2 < n1 {
                break;
            }
            let (a, b) = (levels[n1].clone(), levels[n2].clone());
            for (i, g1) in a.iter().enumerate() {
                for (j, g2) in b.iter().enumerate() {
                    if n1 == n2 && j < i {
                        continue;
                    }
                    push(gadget_product(g1, g2), &mut levels, &mut seen);
                }
            }
        }
        let cur = levels[n].clone();
        for g in &cur {
            for lp in &loops {
                push(gadget_product(g, lp), &mut levels, &mut seen);
            }
        }
    }
    levels.into_iter().flatten().collect()
}

#[derive(Clone, Debug)]
pub struct LandmarkSet {
    pub a: Rat,
    pub b: Rat,
    pub c: Rat,
    pub d: Rat,
    pub h1_gadget: RatioGadget,
    pub h2_gadget: RatioGadget,
}

/// gamma < a < b < 0 <= |beta| < c < d, b = f(c), a = f(d), b/(2d) < f'(c).
pub fn verify_landmarks(p: &SpinParams, a: &Rat, b: &Rat, c: &Rat, d: &Rat) -> bool {
    let (Ok(fc), Ok(fd), Ok(dc)) = (p.mobius(c), p.mobius(d), p.mobius_deriv(c)) else {
        return false;
    };
    p.gamma < *a && a < b && *b < 0 && abs(&p.beta) < *c && c < d && fc == *b && fd == *a
        && b / (Rat::from(2) * d) < dc
}

fn find_abcd(p: &SpinParams) -> Result<(Rat, Rat, Rat, Rat)> {
    let start = abs(&p.beta).max(-Rat::from(1) / &p.gamma);
    let mut c = Rat::from(crate::num::floor_int(&start)) + Rat::from(1);
    for _ in 0..200 {
        let d = &c * Rat::from(2);
        let b = p.mobius(&c)?;
        let a = p.mobius(&d)?;
        if verify_landmarks(p, &a, &b, &c, &d) {
            return Ok((a, b, c, d));
        }
        c *= Rat::from(2);
    }
    Err(SpinError::Check("landmark search did not terminate".into()))
}

/// Outcome of the exponential-accuracy construction. Piece k is
/// H2^s H1^t attached to backbone vertex k.
#[derive(Clone, Debug)]
pub struct ExpRealization {
    pub pieces: Vec<(u64, u64)>,
    pub iterations: usize,
    pub windows: Vec<(Rat, Rat)>,
    pub sign_gadget: Option<RatioGadget>,
    pub activity: ActivityVector<Rat>,
    pub max_bits: u64,
}

impl ExpRealization {
    pub fn ratio(&self) -> Rat {
        &self.activity.z1 / &self.activity.z0
    }

    pub fn vertex_count(&self, r: &Realizer) -> usize {
        let h1 = r.landmarks.h1_gadget.vertex_count() - 1;
        let h2 = r.landmarks.h2_gadget.vertex_count() - 1;
        let base: usize = self.pieces.iter().map(|&(s, t)| 1 + s as usize * h2 + t as usize * h1).sum();
        base + self.sign_gadget.as_ref().map_or(0, |g| g.vertex_count() - 1)
    }

    pub fn chain(&self, r: &Realizer) -> Vec<RatioGadget> {
        self.pieces
            .iter()
            .map(|&(s, t)| product_many(&[(&r.landmarks.h2_gadget, s), (&r.landmarks.h1_gadget, t)]))
            .collect()
    }

    /// Expands the full graph; the activity is recomputed by the backbone
    /// recursion and must agree with the cached one.
    pub fn gadget(&self, r: &Realizer) -> Result<RatioGadget> {
        let chain = self.chain(r);
        let graph = backbone_graph(&chain);
        let act = exact_activity_of_backbone(&chain, &r.params);
        let mut g = RatioGadget::new(graph, 0, act)?;
        if let Some(sg) = &self.sign_gadget {
            g = gadget_product(&g, sg);
        }
        if g.activity != self.activity {
            return Err(SpinError::Check("expanded activity differs from cached".into()));
        }
        Ok(g)
    }
}

/// Either a small explicit gadget or a backbone construction.
#[derive(Clone, Debug)]
pub enum Realized {
    Gadget(RatioGadget),
    Exp(ExpRealization),
}

impl Realized {
    pub fn activity(&self) -> &ActivityVector<Rat> {
        match self {
            Realized::Gadget(g) => &g.activity,
            Realized::Exp(e) => &e.activity,
        }
    }

    pub fn ratio(&self) -> Rat {
        let a = self.activity();
        &a.z1 / &a.z0
    }

    pub fn vertex_count(&self, r: &Realizer) -> usize {
        match self {
            Realized::Gadget(g) => g.vertex_count(),
            Realized::Exp(e) => e.vertex_count(r),
        }
    }

    pub fn gadget(&self, r: &Realizer) -> Result<RatioGadget> {
        match self {
            Realized::Gadget(g) => Ok(g.clone()),
            Realized::Exp(e) => e.gadget(r),
        }
    }
}

/// Per-parameter realization state: base gadgets, a small gadget library
/// and the landmarks.
#[derive(Debug)]
pub struct Realizer {
    pub params: SpinParams,
    pub gt1: RatioGadget,
    pub neg: RatioGadget,
    pub library: Vec<RatioGadget>,
    lib_f64: Vec<f64>,
    pub landmarks: LandmarkSet,
    h1: Rat,
    h2: Rat,
}

impl Realizer {
    pub fn new(p: &SpinParams) -> Result<Self> {
        p.require_gamma_region()?;
        let gt1 = base_gadget_gt1(p)?;
        let neg = base_gadget_neg(p)?;
        let library = build_library(p, &[gt1.clone(), neg.clone(), gadget_extend(&RatioGadget::single(), p)?]);
        let lib_f64 = library.iter().map(|g| to_f64(&g.ratio())).collect();
        let (a, b, c, d) = find_abcd(p)?;
        let placeholder = RatioGadget::single();
        let mut r = Realizer {
            params: p.clone(),
            gt1,
            neg,
            library,
            lib_f64,
            landmarks: LandmarkSet { a, b, c, d, h1_gadget: placeholder.clone(), h2_gadget: placeholder },
            h1: Rat::from(0),
            h2: Rat::from(0),
        };
        // h1 in (sqrt(b/a), 1): aim at the midpoint of a rational inner interval
        let ba = &r.landmarks.b / &r.landmarks.a;
        let mut s_up = round_dyadic(&from_f64_dyadic(to_f64(&ba).sqrt()), -40, Ceiling);
        while &s_up * &s_up <= ba {
            s_up += crate::num::two_pow(-40);
        }
        if s_up >= 1 {
            return Err(SpinError::Check("sqrt(b/a) bound is not below 1".into()));
        }
        let target = (&s_up + Rat::from(1)) / Rat::from(2);
        let eps = (Rat::from(1) - &target).min(Rat::from(1) - &s_up / &target) / Rat::from(2);
        let h1g = r.realize_dense(&target, &eps)?;
        let h1 = h1g.ratio();
        if !(h1 < 1 && h1 > 0 && &h1 * &h1 > ba) {
            return Err(SpinError::Check(format!("h1 = {h1} is outside (sqrt(b/a), 1)")));
        }
        let h2g = r.realize_dense(&Rat::from(-3), &rat(1, 4))?;
        let h2 = h2g.ratio();
        if h2 >= -2 {
            return Err(SpinError::Check(format!("h2 = {h2} is not below -2")));
        }
        r.landmarks.h1_gadget = h1g;
        r.landmarks.h2_gadget = h2g;
        r.h1 = h1;
        r.h2 = h2;
        Ok(r)
    }

    pub fn h1(&self) -> &Rat {
        &self.h1
    }

    pub fn h2(&self) -> &Rat {
        &self.h2
    }

    /// Smallest library gadget with ratio in (e^-eps R, e^eps R).
    pub fn library_lookup(&self, target: &Rat, eps: &Rat) -> Option<RatioGadget> {
        let t = to_f64(target);
        let e = to_f64(eps).max(1e-300);
        let (lo, hi) = if t > 0.0 { (t * (-e).exp(), t * e.exp()) } else { (t * e.exp(), t * (-e).exp()) };
        let slack = 1e-9 * t.abs();
        self.library
            .iter()
            .zip(&self.lib_f64)
            .filter(|(_, &x)| x >= lo - slack && x <= hi + slack)
            .map(|(g, _)| g)
            .filter(|g| in_window(&g.ratio(), target, eps))
            .min_by_key(|g| (g.vertex_count(), g.graph.edges.len()))
            .cloned()
    }

    /// A gadget with ratio strictly inside (e^-eps R, e^eps R).
    pub fn realize_dense(&self, target: &Rat, eps: &Rat) -> Result<RatioGadget> {
        if *target == 0 {
            return Err(SpinError::InvalidInput("target ratio must be nonzero".into()));
        }
        if *eps <= 0 {
            return Err(SpinError::InvalidInput("eps must be positive".into()));
        }
        if let Some(g) = self.library_lookup(target, eps) {
            return Ok(g);
        }
        self.realize_dense_constructive(target, eps)
    }

    /// The semigroup construction: powers of r0 > 1, Mobius images r1, r2
    /// near gamma, and a walk along R3^m R1^(n-i) R2^i.
    pub fn realize_dense_constructive(&self, target: &Rat, eps: &Rat) -> Result<RatioGadget> {
        let p = &self.params;
        if *target < 0 {
            let r = &self.neg;
            let inner = self.realize_dense_constructive(&(target / r.ratio()), eps)?;
            return Ok(gadget_product(&inner, r));
        }
        let r0 = self.gt1.ratio();
        let mut k = 1u64;
        loop {
            let pk = powu(&r0, k);
            if pk > -&p.beta {
                let r1 = p.mobius(&pk)?;
                if r1 < 0 && gt_exp(&(&r1 / &p.gamma), &-eps) {
                    break;
                }
            }
            k += 1;
        }
        let g1 = gadget_extend(&gadget_power(&self.gt1, k), p)?;
        let g2 = gadget_extend(&gadget_power(&self.gt1, k + 1), p)?;
        let r1 = g1.ratio();
        let rneg = self.neg.ratio();
        let inv_r1 = Rat::from(1) / abs(&r1);
        let mut j = 1u64;
        while abs(&(&rneg * powu(&r0, j))) <= inv_r1 {
            j += 1;
        }
        let common = product_many(&[(&self.neg, 1), (&self.gt1, j)]);
        let big1 = gadget_product(&g1, &common);
        let big2 = gadget_product(&g2, &common);
        let small = gadget_power(&self.neg, 2);
        let (big_r1, big_r2, big_r3) = (big1.ratio(), big2.ratio(), small.ratio());
        if !(big_r1 > 1 && big_r2 > big_r1 && big_r3 < 1 && big_r3 > 0) {
            return Err(SpinError::Check("dense construction invariants failed".into()));
        }
        let (l1, l2, l3, lr) = (ln_abs_f64(&big_r1), ln_abs_f64(&big_r2), ln_abs_f64(&big_r3), ln_abs_f64(target));
        let e = to_f64(eps);
        let m_est = ((l1 * l2 + e * (l1 + l2)) / (l2 - l1) - lr) / (-l3);
        let mut m = (m_est.ceil().max(1.0)) as u64;
        let (mm, nn) = 'search: loop {
            let r3m = powu(&big_r3, m);
            let n_est = ((e + lr - m as f64 * l3) / l2).ceil().max(1.0) as u64;
            for n in n_est.saturating_sub(1).max(1)..=n_est + 1 {
                let low = &r3m * powu(&big_r1, n) / target;
                let high = &r3m * powu(&big_r2, n) / target;
                if lt_exp(&low, &-eps) && gt_exp(&high, eps) {
                    break 'search (m, n);
                }
            }
            m += 1;
            if m > (m_est.max(1.0) as u64) * 4 + 1000 {
                return Err(SpinError::Check("dense construction: no (m, n) found".into()));
            }
        };
        let step = &big_r2 / &big_r1;
        let mut term = powu(&big_r3, mm) * powu(&big_r1, nn);
        for i in 0..=nn {
            if in_window(&term, target, eps) {
                return Ok(product_many(&[(&small, mm), (&big1, nn - i), (&big2, i)]));
            }
            term *= &step;
        }
        Err(SpinError::Check("geometric walk missed the window".into()))
    }

    /// Minimal t >= 0 with pred(t), given a rough estimate; pred monotone.
    fn min_true(est: f64, pred: impl Fn(u64) -> bool) -> u64 {
        let mut t = if est.is_finite() && est > 2.0 { est as u64 - 2 } else { 0 };
        if pred(t) {
            while t > 0 && pred(t - 1) {
                t -= 1;
            }
            return t;
        }
        let mut step = 1;
        while !pred(t + step) {
            t += step;
            step *= 2;
        }
        let (mut lo, mut hi) = (t, t + step);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if pred(mid) { hi = mid } else { lo = mid }
        }
        hi
    }

    fn piece_ratio(&self, s: u64, t: u64) -> Rat {
        powu(&self.h2, s) * powu(&self.h1, t)
    }

    /// x in (-R2/sqrt(ab), R2/a): odd s with h2^s below the interval, then
    /// the first t that enters it.
    fn compute_inner(&self, r2: &Rat) -> Result<(u64, u64, Rat)> {
        let (a, b) = (&self.landmarks.a, &self.landmarks.b);
        let ab = a * b;
        let r2sq = r2 * r2;
        let l_h2 = ln_abs_f64(&self.h2);
        let l_h1 = ln_abs_f64(&self.h1);
        let l_bound = ln_abs_f64(r2) - 0.5 * ln_abs_f64(&ab);
        let half = Self::min_true((l_bound / l_h2 - 1.0) / 2.0, |h| {
            let x = powu(&self.h2, 2 * h + 1);
            &x * &x * &ab > r2sq
        });
        let s = 2 * half + 1;
        let hs = powu(&self.h2, s);
        let t = Self::min_true((s as f64 * l_h2 - l_bound) / -l_h1, |t| {
            let x = &hs * powu(&self.h1, t);
            &x * &x * &ab < r2sq
        });
        let x = self.piece_ratio(s, t);
        if !(&x * a > *r2) {
            return Err(SpinError::Check("inner Compute overshot the interval".into()));
        }
        Ok((s, t, x))
    }

    /// x in (R1, R2) for 0 < R1 < R2 with R2/R1 >= sqrt(a/b).
    fn compute_final(&self, r1: &Rat, r2: &Rat) -> Result<(u64, u64, Rat)> {
        let l_h2 = ln_abs_f64(&self.h2);
        let l_h1 = ln_abs_f64(&self.h1);
        let half = Self::min_true(ln_abs_f64(r2) / l_h2 / 2.0, |h| powu(&self.h2, 2 * h) > *r2);
        let s = 2 * half;
        let hs = powu(&self.h2, s);
        let t = Self::min_true((s as f64 * l_h2 - ln_abs_f64(r2)) / -l_h1, |t| &hs * powu(&self.h1, t) < *r2);
        let x = self.piece_ratio(s, t);
        if !(x > *r1) {
            return Err(SpinError::Check("final Compute overshot the interval".into()));
        }
        Ok((s, t, x))
    }

    /// Backbone construction for R > 0; the window invariants are checked at every step.
    pub fn realize_exp(&self, target: &Rat, eps: &Rat) -> Result<ExpRealization> {
        if *target <= 0 {
            return Err(SpinError::InvalidInput("realize_exp needs R > 0; use realize_signed".into()));
        }
        if *eps <= 0 {
            return Err(SpinError::InvalidInput("eps must be positive".into()));
        }
        let p = &self.params;
        let lm = &self.landmarks;
        let a_over_b = &lm.a / &lm.b;
        let one_eps = Rat::from(1) + eps;
        let mut r1 = target / &one_eps;
        let mut r2 = target * &one_eps;
        let mut pieces = Vec::new();
        let mut windows = vec![(r1.clone(), r2.clone())];
        let mut max_bits = bits(&r1).max(bits(&r2));
        loop {
            let gap = &r2 / &r1;
            if &gap * &gap >= a_over_b {
                break;
            }
            let (s, t, x) = self.compute_inner(&r2)?;
            let n1 = p.mobius_inv(&(&r1 / &x))?;
            let n2 = p.mobius_inv(&(&r2 / &x))?;
            if !(lm.c < n1 && n1 < n2 && n2 < lm.d) {
                return Err(SpinError::Check(format!("claim c < R1 < R2 < d failed at step {}", pieces.len() + 1)));
            }
            let new_gap = &n2 / &n1;
            if !(new_gap > &gap * &gap) {
                return Err(SpinError::Check(format!("gap doubling failed at step {}", pieces.len() + 1)));
            }
            pieces.push((s, t));
            // shrink the window slightly to dyadic endpoints so sizes stay bounded
            let slack = (&new_gap - Rat::from(1)).floor_log_base_2_abs();
            let prec = (24 - slack.min(0)) as u64;
            r1 = round_rel(&n1, prec, Ceiling);
            r2 = round_rel(&n2, prec, Floor);
            max_bits = max_bits.max(bits(&r1)).max(bits(&r2));
            windows.push((r1.clone(), r2.clone()));
        }
        let iterations = pieces.len();
        let (s, t, _) = self.compute_final(&r1, &r2)?;
        pieces.push((s, t));
        let act1 = &lm.h1_gadget.activity;
        let act2 = &lm.h2_gadget.activity;
        let acts: Vec<ActivityVector<Rat>> = pieces
            .iter()
            .map(|&(s, t)| activity_pow(act2, s).hadamard(&activity_pow(act1, t)))
            .collect();
        let activity = backbone_activity(&acts, p);
        max_bits = max_bits.max(bits(&activity.z0)).max(bits(&activity.z1));
        let out = ExpRealization { pieces, iterations, windows, sign_gadget: None, activity, max_bits };
        if !in_window(&out.ratio(), target, eps) {
            return Err(SpinError::Check("backbone ratio outside the target window".into()));
        }
        Ok(out)
    }

    /// Backbone construction for any R != 0: negative targets go through the (-1,0)
    /// gadget attached at v_0.
    pub fn realize_signed(&self, target: &Rat, eps: &Rat) -> Result<ExpRealization> {
        if *target == 0 {
            return Err(SpinError::InvalidInput("target ratio must be nonzero".into()));
        }
        if *target > 0 {
            return self.realize_exp(target, eps);
        }
        let r = self.neg.ratio();
        let mut e = self.realize_exp(&(target / &r), eps)?;
        e.activity = e.activity.hadamard(&self.neg.activity);
        e.sign_gadget = Some(self.neg.clone());
        Ok(e)
    }

    /// Library gadget if one fits, otherwise the backbone construction.
    pub fn realize_ratio(&self, target: &Rat, eps: &Rat) -> Result<Realized> {
        if let Some(g) = self.library_lookup(target, eps) {
            return Ok(Realized::Gadget(g));
        }
        Ok(Realized::Exp(self.realize_signed(target, eps)?))
    }
}

type Cache = Mutex<HashMap<SpinParams, Arc<Realizer>>>;

/// Shared per-parameter realizer.
pub fn realizer(p: &SpinParams) -> Result<Arc<Realizer>> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().expect("cache lock").get(p) {
        return Ok(r.clone());
    }
    let r = Arc::new(Realizer::new(p)?);
    cache.lock().expect("cache lock").insert(p.clone(), r.clone());
    Ok(r)
}

pub fn landmarks(p: &SpinParams) -> Result<LandmarkSet> {
    Ok(realizer(p)?.landmarks.clone())
}

pub fn realize_dense(p: &SpinParams, target: &Rat, eps: &Rat) -> Result<RatioGadget> {
    realizer(p)?.realize_dense(target, eps)
}

pub fn realize_exp(p: &SpinParams, target: &Rat, eps: &Rat) -> Result<ExpRealization> {
    realizer(p)?.realize_exp(target, eps)
}

pub fn realize_signed(p: &SpinParams, target: &Rat, eps: &Rat) -> Result<ExpRealization> {
    realizer(p)?.realize_signed(target, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::int;

    #[test]
    fn small_targets_with_huge_operands() {
        // h1^568 has multi-million-bit parts; the backbone ratio must agree
        // with the exact power
        let p = SpinParams::of((1, 3), (-5, 4));
        let r = realizer(&p).unwrap();
        let target = powu(&rat(160, 369), 16) * rat(9, 8);
        let e = r.realize_exp(&target, &rat(1, 32)).unwrap();
        assert_eq!(e.ratio(), powu(r.h1(), e.pieces[0].1) * powu(r.h2(), e.pieces[0].0));
    }

    fn p() -> SpinParams {
        SpinParams::of((1, 2), (-1, 1))
    }

    fn check(g: &RatioGadget, p: &SpinParams) {
        assert_eq!(g.oracle_activity(p).unwrap(), g.activity);
    }

    #[test]
    fn product_and_extend() {
        let p = p();
        let two = gadget_power(&RatioGadget::self_loop(&p).unwrap(), 2);
        assert_eq!(two.ratio(), int(4));
        let sq = gadget_product(&two, &two);
        assert_eq!(sq.ratio(), int(16));
        check(&sq, &p);
        let e = gadget_extend(&two, &p).unwrap();
        assert_eq!(e.ratio(), rat(-2, 3));
        assert_eq!(e.ratio(), mobius_f(&p, &int(4)).unwrap());
        check(&e, &p);
        assert_eq!(gadget_product(&e, &RatioGadget::single()).ratio(), e.ratio());
        let pole = RatioGadget::new(Multigraph::empty(1), 0, ActivityVector::new(int(2), int(-1))).unwrap();
        assert_eq!(gadget_extend(&pole, &p), Err(SpinError::Pole));
    }

    #[test]
    fn base_gadgets_all_cases() {
        let case1 = base_gadget_gt1(&p()).unwrap();
        assert_eq!(case1.ratio(), int(4));
        let p2 = SpinParams::of((0, 1), (-1, 2));
        let case2 = base_gadget_gt1(&p2).unwrap();
        assert_eq!(case2.ratio(), rat(25, 4));
        check(&case2, &p2);
        let p3 = SpinParams::of((1, 2), (-1, 3));
        let case3 = base_gadget_gt1(&p3).unwrap();
        let expect = (p3.beta.clone() + &p3.gamma * &p3.gamma) / (&p3.beta * &p3.beta + &p3.gamma);
        assert_eq!(case3.ratio(), &expect * &expect);
        check(&case3, &p3);
        let p4 = SpinParams::of((3, 4), (-9, 16));
        let case4 = base_gadget_gt1(&p4).unwrap();
        assert_eq!(case4.ratio(), rat(337, 48));
        check(&case4, &p4);
        let n1 = base_gadget_neg(&SpinParams::of((1, 2), (-3, 2))).unwrap();
        assert_eq!(n1.ratio(), rat(-1, 3));
        let n2 = base_gadget_neg(&p()).unwrap();
        assert_eq!(n2.ratio(), rat(-2, 3));
        assert!(base_gadget_gt1(&SpinParams::of((1, 1), (-1, 1))).is_err());
    }

    #[test]
    fn landmark_example_and_search() {
        let p = p();
        assert!(verify_landmarks(&p, &rat(-26, 29), &rat(-4, 5), &int(7), &int(14)));
        let lm = landmarks(&p).unwrap();
        assert!(verify_landmarks(&p, &lm.a, &lm.b, &lm.c, &lm.d));
        assert_eq!((lm.c.clone(), lm.d.clone()), (int(8), int(16)));
        assert!(lm.h2_gadget.ratio() < -2);
        check(&lm.h2_gadget, &p);
        check(&lm.h1_gadget, &p);
    }

    #[test]
    fn dense_examples() {
        let p = p();
        let r = realizer(&p).unwrap();
        for (t, e) in [(int(7), rat(1, 2)), (int(-3), rat(1, 2)), (int(4), rat(1, 1000))] {
            let g = r.realize_dense(&t, &e).unwrap();
            assert!(in_window(&g.ratio(), &t, &e));
            check(&g, &p);
            let c = r.realize_dense_constructive(&t, &e).unwrap();
            assert!(in_window(&c.ratio(), &t, &e));
        }
        let c = r.realize_dense_constructive(&int(7), &rat(1, 2)).unwrap();
        if c.vertex_count() <= 20 {
            check(&c, &p);
        }
    }

    #[test]
    fn backbone_recursion() {
        let p = p();
        let s = RatioGadget::single();
        let b = exact_activity_of_backbone(&[s.clone(), s.clone()], &p);
        assert_eq!(b, ActivityVector::new(rat(3, 2), int(0)));
        let lp = RatioGadget::self_loop(&p).unwrap();
        let chain = vec![lp.clone(), s.clone(), gadget_power(&lp, 2), s];
        let g = backbone_graph(&chain);
        assert_eq!(exact::activity_ones(&g, 0, &p).unwrap(), exact_activity_of_backbone(&chain, &p));
    }

    #[test]
    fn exp_realization() {
        let p = p();
        let r = realizer(&p).unwrap();
        let e = r.realize_exp(&int(7), &rat(1, 10)).unwrap();
        assert!(in_window(&e.ratio(), &int(7), &rat(1, 10)));
        let g = e.gadget(&r).unwrap();
        assert_eq!(g.ratio(), e.ratio());
        let big = r.realize_exp(&int(7), &rat(1, 1 << 20)).unwrap();
        assert!(big.iterations >= 1 && big.iterations <= 40);
        let wide = r.realize_exp(&int(7), &int(3)).unwrap();
        assert_eq!(wide.iterations, 0);
        assert_eq!(wide.pieces.len(), 1);
        let neg = r.realize_signed(&rat(-1, 2), &rat(1, 1 << 12)).unwrap();
        assert!(in_window(&neg.ratio(), &rat(-1, 2), &rat(1, 1 << 12)));
        assert_eq!(neg.gadget(&r).unwrap().activity, neg.activity);
    }
}
