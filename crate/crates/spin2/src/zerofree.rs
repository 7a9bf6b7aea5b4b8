//! Zero-free regions: pairwise radii, the disk around 0 and its optimality
//! witness, the recursion checks, the uncentered constants and the region
//! classifier.

use malachite::base::rounding_modes::RoundingMode::Floor;
use rand::Rng;
use serde::Serialize;

use crate::error::{Result, SpinError};
use crate::exact;
use crate::graphcore::Multigraph;
use crate::num::{abs, from_f64_dyadic, powu, rat, round_dyadic, two_pow, CRat, JsonValue, Rat, SpinParams};

/// True if |x + beta| > r |gamma x + 1| for every real x in [-r, r]. By
/// symmetry about the real axis this is the same as the edge polynomial
/// gamma z1 z2 + z1 + z2 + beta having no zero with |z1|, |z2| <= r.
pub fn pairwise_ok(p: &SpinParams, r: &Rat) -> bool {
    let r2 = r * r;
    let a = Rat::from(1) - &r2 * &p.gamma * &p.gamma;
    let b = Rat::from(2) * (&p.beta - &r2 * &p.gamma);
    let c = &p.beta * &p.beta - &r2;
    let q = |x: &Rat| &a * x * x + &b * x + &c;
    if q(r) <= 0 || q(&-r) <= 0 {
        return false;
    }
    if a > 0 {
        let v = -&b / (Rat::from(2) * &a);
        if abs(&v) <= *r && q(&v) <= 0 {
            return false;
        }
    }
    true
}

/// A dyadic r > 1 with pairwise_ok(r), within 2^-40 of the supremum.
pub fn pairwise_radius(p: &SpinParams) -> Option<Rat> {
    if p.beta == p.gamma || abs(&p.sum()) <= 2 {
        return None;
    }
    let mut lo = Rat::from(1);
    if !pairwise_ok(p, &lo) {
        return None;
    }
    // x = -beta gives equality, so |beta| is an upper bound
    let mut hi = abs(&p.beta);
    if hi <= lo {
        return None;
    }
    for _ in 0..48 {
        let mid = (&lo + &hi) / Rat::from(2);
        if pairwise_ok(p, &mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

#[derive(Clone, Debug, Serialize)]
pub struct SamplerReport {
    pub samples: usize,
    pub zeros: usize,
    pub min_abs_z: f64,
}

fn random_crat_in_disk<R: Rng>(rng: &mut R, radius: f64, radius_sq: &Rat) -> CRat {
    loop {
        let re = rng.gen_range(-radius..radius);
        let im = rng.gen_range(-radius..radius);
        let z = CRat::new(from_f64_dyadic(re), from_f64_dyadic(im));
        if z.norm_sqr() < *radius_sq {
            return z;
        }
    }
}

/// Falsification harness: random complex-rational fields with
/// |lam_v| < r^deg(v), Z_G(lam) must be nonzero. Finding a zero is a bug.
pub fn contraction_sampler<R: Rng>(g: &Multigraph, p: &SpinParams, r: &Rat, trials: usize, rng: &mut R) -> Result<SamplerReport> {
    exact::check_cap(g.n)?;
    let degs = g.degrees();
    let bounds: Vec<Rat> = degs.iter().map(|&d| powu(r, 2 * d as u64)).collect();
    let radii: Vec<f64> = degs.iter().map(|&d| crate::num::to_f64(r).powi(d as i32)).collect();
    let mut zeros = 0;
    let mut min_abs = f64::INFINITY;
    for _ in 0..trials {
        let lam: Vec<CRat> = (0..g.n).map(|v| random_crat_in_disk(rng, radii[v], &bounds[v])).collect();
        let z = exact::partition_fn(g, p, &lam)?;
        if z.is_zero() {
            zeros += 1;
        }
        min_abs = min_abs.min(crate::num::to_f64(&z.norm_sqr()).sqrt());
    }
    Ok(SamplerReport { samples: trials, zeros, min_abs_z: min_abs })
}

fn require_disk_range(p: &SpinParams) -> Result<()> {
    let s = p.sum();
    if !(p.gamma < 0 && s >= 1 && s <= 2) {
        return Err(SpinError::Region("needs gamma < 0 and 1 <= beta + gamma <= 2".into()));
    }
    Ok(())
}

/// (beta - 1) / (1 - gamma).
pub fn disk_radius(p: &SpinParams) -> Result<Rat> {
    require_disk_range(p)?;
    Ok((&p.beta - Rat::from(1)) / (Rat::from(1) - &p.gamma))
}

/// Z of the star with n leaves at uniform field x.
pub fn star_poly(p: &SpinParams, n: u64, x: &Rat) -> Rat {
    powu(&(&p.beta + x), n) + x * powu(&(Rat::from(1) + &p.gamma * x), n)
}

#[derive(Clone, Debug, Serialize)]
pub struct StarRoot {
    pub n: u64,
    #[serde(with = "crate::num::serde_rat")]
    pub lo: Rat,
    #[serde(with = "crate::num::serde_rat")]
    pub hi: Rat,
}

/// Smallest n with Z_{G_n}(-r') < 0, and a root of Z_{G_n} bracketed in
/// (-r', -radius) to width <= `width`.
pub fn star_root_witness(p: &SpinParams, r_prime: &Rat, width: &Rat) -> Result<StarRoot> {
    let radius = disk_radius(p)?;
    if !(*r_prime > radius && *r_prime < p.beta) {
        return Err(SpinError::InvalidInput(format!("r' must lie in ({radius}, {})", p.beta)));
    }
    let x = -r_prime;
    let growth = (Rat::from(1) - &p.gamma * r_prime) / (&p.beta - r_prime);
    let est = (crate::num::ln_abs_f64(&(Rat::from(1) / r_prime)) / crate::num::ln_abs_f64(&growth)).floor();
    let mut n = if est.is_finite() && est > 2.0 { est as u64 - 1 } else { 1 };
    while n > 1 && star_poly(p, n - 1, &x) < 0 {
        n -= 1;
    }
    while star_poly(p, n, &x) >= 0 {
        n += 1;
        if n > 1_000_000 {
            return Err(SpinError::Check("star witness search did not terminate".into()));
        }
    }
    let mut lo = x;
    let mut hi = -&radius;
    let at_edge = star_poly(p, n, &hi);
    if at_edge == 0 {
        // beta + gamma = 2: every star vanishes at -radius
        return Ok(StarRoot { n, lo: hi.clone(), hi });
    }
    if at_edge < 0 {
        return Err(SpinError::Check("star polynomial is not positive at -radius".into()));
    }
    while &hi - &lo > *width {
        let mid = (&lo + &hi) / Rat::from(2);
        if star_poly(p, n, &mid) < 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(StarRoot { n, lo, hi })
}

#[derive(Clone, Debug, Serialize)]
pub struct RecursionReport {
    pub vertices: usize,
    pub ratios_checked: usize,
    pub ok: bool,
    pub detail: Option<String>,
}

/// Checks, for every vertex, that the ratio is defined and in
/// [gamma/beta, 1], and that Z > 0.
pub fn interval_recursion_check(g: &Multigraph, p: &SpinParams, lam: &[Rat]) -> Result<RecursionReport> {
    if !(p.gamma < 0 && p.sum() >= 1) {
        return Err(SpinError::Region("needs gamma < 0 and beta + gamma >= 1".into()));
    }
    let lo = &p.gamma / &p.beta;
    if lam.len() != g.n || lam.iter().any(|l| *l < lo || *l > 1) {
        return Err(SpinError::InvalidInput("fields must lie in [gamma/beta, 1]".into()));
    }
    let z = exact::partition_fn_real(g, p, lam)?;
    let mut detail = None;
    if z <= 0 {
        detail = Some(format!("Z = {z} is not positive"));
    }
    for v in 0..g.n {
        let a = exact::activity_vector_real(g, v, p, lam)?;
        match a.ratio() {
            Ok(r) if r >= lo && r <= 1 => {}
            Ok(r) => detail = Some(format!("ratio {r} at vertex {v} outside [gamma/beta, 1]")),
            Err(_) => detail = Some(format!("ratio undefined at vertex {v}")),
        }
    }
    Ok(RecursionReport { vertices: g.n, ratios_checked: g.n, ok: detail.is_none(), detail })
}

/// Checks, for every vertex, that the ratio is defined and in
/// K = {|z| <= radius} \ {-1}, and that Z != 0.
pub fn disk_recursion_check(g: &Multigraph, p: &SpinParams, lam: &[CRat]) -> Result<RecursionReport> {
    let r = disk_radius(p)?;
    let r2 = &r * &r;
    let minus_one = CRat::real(Rat::from(-1));
    if lam.len() != g.n || lam.iter().any(|l| l.norm_sqr() > r2 || *l == minus_one) {
        return Err(SpinError::InvalidInput("fields must lie in the closed disk, excluding -1".into()));
    }
    let z = exact::partition_fn(g, p, lam)?;
    let mut detail = None;
    if z.is_zero() {
        detail = Some("Z vanishes".into());
    }
    for v in 0..g.n {
        let a = exact::activity_vector(g, v, p, lam)?;
        match a.ratio() {
            Ok(q) if q.norm_sqr() <= r2 && q != minus_one => {}
            Ok(q) => detail = Some(format!("ratio {q} at vertex {v} outside K")),
            Err(_) => detail = Some(format!("ratio undefined at vertex {v}")),
        }
    }
    Ok(RecursionReport { vertices: g.n, ratios_checked: g.n, ok: detail.is_none(), detail })
}

/// Both displayed decompositions used in the positivity induction step,
/// checked as exact rational identities.
pub fn identity_check(p: &SpinParams, a: &Rat, b: &Rat, c: &Rat, d: &Rat) -> Result<bool> {
    let (be, ga) = (&p.beta, &p.gamma);
    let one = Rat::from(1);
    let den = be * a + b;
    let dens = [
        den.clone(),
        a + b,
        a.clone(),
        be * a + ga * b,
        be * a + ga * c,
        p.sum(),
        be * be + ga * ga,
        be.clone(),
    ];
    if dens.iter().any(|x| *x == 0) {
        return Err(SpinError::InvalidInput("a denominator vanishes".into()));
    }
    let s = p.sum();
    let lhs_r = &one - (c + ga * d) / &den;
    let rhs_r = (a + b) / &den * (&one - (c + d) / (a + b))
        + be * a / &den * (d / a - ga / be)
        + (&s - &one) * a / &den * (&one - d / a);
    let lhs_l = (c + ga * d) / &den - ga / be;
    let q = &s * (be * be + ga * ga);
    let rhs_l = (be * be + ga * be + ga * ga) / &q * ((be * a + ga * b) / &den) * ((be * c + ga * d) / (be * a + ga * b) - ga / be)
        + (-(ga * be)) / &q * ((be * a + ga * c) / &den) * ((be * b + ga * d) / (be * a + ga * c) - ga / be)
        + (-(ga * (&s - &one))) / &s * (a / &den) * (&one - d / a);
    Ok(lhs_r == rhs_r && lhs_l == rhs_l)
}

pub fn g_parts(beta: &Rat) -> Result<(Rat, Rat)> {
    if *beta <= 1 {
        return Err(SpinError::InvalidInput("g is defined for beta > 1".into()));
    }
    let one = Rat::from(1);
    let g1 = (beta - Rat::from(2)) / (beta * beta - &one);
    let b3 = beta * beta * beta + beta * beta - beta;
    let g2 = (beta - &one) * (beta - &one) / b3;
    Ok((g1, g2))
}

/// max{(beta-2)/(beta^2-1), (beta-1)^2/(beta^3+beta^2-beta)}.
pub fn g_threshold(beta: &Rat) -> Result<Rat> {
    let (g1, g2) = g_parts(beta)?;
    Ok(g1.max(g2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConstCase {
    GammaLeMinus1,
    GammaGtMinus1,
}

#[derive(Clone, Debug, Serialize)]
pub struct UncenteredConstants {
    #[serde(with = "crate::num::serde_rat")]
    pub a: Rat,
    #[serde(with = "crate::num::serde_rat")]
    pub b: Rat,
    pub case_tag: ConstCase,
    #[serde(with = "crate::num::serde_rat")]
    pub eps_margin: Rat,
}

/// The five requirements on (a, b), each evaluated exactly.
pub fn requirements(p: &SpinParams, a: &Rat, b: &Rat) -> Result<[bool; 5]> {
    let (be, ga) = (&p.beta, &p.gamma);
    let req1 = *a <= ga / be;
    let req2 = *b > (be + ga * ga) / (be * be + ga);
    let req3 = -a < *b && *b <= 1;
    let req4 = *a < p.mobius(b)? && p.mobius(a)? < *b;
    let lhs = abs(&(a + ga * b)).max(abs(&(b + ga * a)));
    let req5 = lhs < abs(a) * (be + a);
    Ok([req1, req2, req3, req4, req5])
}

/// (a, b) with all five requirements, halving the margin in b until they
/// hold. Parameters with gamma > beta are swapped first.
pub fn uncentered_constants(p: &SpinParams) -> Result<UncenteredConstants> {
    let p = if p.gamma > p.beta { p.swapped() } else { p.clone() };
    if !(p.gamma < 0 && p.beta > 1) {
        return Err(SpinError::Region("needs min(beta, gamma) < 0 < 1 < max(beta, gamma)".into()));
    }
    let g = g_threshold(&p.beta)?;
    if p.sum() <= Rat::from(2) - &g {
        return Err(SpinError::Region(format!("beta + gamma must exceed 2 - g(beta) = {}", Rat::from(2) - &g)));
    }
    let (a, base, case_tag) = if p.gamma <= -1 {
        let a = &p.gamma / &p.beta;
        let fa = p.mobius(&a)?;
        let base = fa.max(-&a);
        (a, base, ConstCase::GammaLeMinus1)
    } else {
        let a = Rat::from(-1) / &p.beta;
        let base = p.mobius(&a)?;
        (a, base, ConstCase::GammaGtMinus1)
    };
    let mut eps = rat(1, 2);
    for _ in 0..400 {
        let b = &base + &eps;
        if requirements(&p, &a, &b)?.iter().all(|&x| x) && a > -1 && a < 0 && b > 0 {
            return Ok(UncenteredConstants { a, b, case_tag, eps_margin: eps });
        }
        eps /= Rat::from(2);
    }
    Err(SpinError::Check("no margin satisfies all five requirements".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, PartialOrd, Ord)]
pub enum RegionTag {
    ExactPolyTime,
    FerroFPRASKnown,
    AntiferroClassifiedKnown,
    FptasThmFptas,
    FprasThmFpras,
    FptasNotThreshold,
    SignSharpPHard,
    PmEquivalentLine,
    PositiveButOpen,
    Open,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionClass {
    pub tags: Vec<RegionTag>,
    pub witnesses: Vec<String>,
}

pub fn classify(p: &SpinParams) -> RegionClass {
    let (b, g) = (&p.beta, &p.gamma);
    let s = p.sum();
    let one = Rat::from(1);
    let lo = b.clone().min(g.clone());
    let hi = b.clone().max(g.clone());
    let mut tags = Vec::new();
    let mut wit = Vec::new();
    let special = [(0, 0), (1, -1), (-1, 1), (-1, -1)].iter().any(|&(x, y)| *b == x && *g == y);
    if b * g == one || special {
        tags.push(RegionTag::ExactPolyTime);
        wit.push("exactly computable: beta gamma = 1 or a special point".into());
    }
    let pm = (*b == 1 && *g == -1) || (*b == -1 && *g == 1);
    if lo < 0 && s > -2 && s < 1 && !pm {
        tags.push(RegionTag::SignSharpPHard);
        wit.push("sign of Z is #P-hard: min < 0 and -2 < beta+gamma < 1".into());
    }
    let abs_s = abs(&s);
    if b != g && abs_s > 2 {
        tags.push(RegionTag::FptasThmFptas);
        wit.push("FPTAS: |beta+gamma| > 2".into());
    }
    if b != g && abs_s >= 2 {
        tags.push(RegionTag::FprasThmFpras);
        wit.push("FPRAS: |beta+gamma| >= 2".into());
    }
    if lo < 0 && hi > 1 {
        if let Ok(gt) = g_threshold(&hi) {
            if s > Rat::from(2) - gt {
                tags.push(RegionTag::FptasNotThreshold);
                wit.push("FPTAS: beta+gamma > 2 - g(max(beta, gamma))".into());
            }
        }
    }
    if b == g && *b < -1 {
        tags.push(RegionTag::PmEquivalentLine);
        wit.push("equivalent to counting perfect matchings: beta = gamma < -1".into());
    }
    if lo >= 0 && !special && b * g != one {
        if b * g > one {
            tags.push(RegionTag::FerroFPRASKnown);
            wit.push("ferromagnetic, nonnegative: FPRAS known".into());
        } else {
            tags.push(RegionTag::AntiferroClassifiedKnown);
            wit.push("antiferromagnetic, nonnegative: classified by uniqueness".into());
        }
    }
    if tags.is_empty() && lo < 0 && s >= 1 && s < 2 {
        tags.push(RegionTag::PositiveButOpen);
        wit.push("Z is positive; approximation complexity open".into());
    }
    if tags.is_empty() {
        tags.push(RegionTag::Open);
    }
    tags.sort();
    RegionClass { tags, witnesses: wit }
}

impl RegionClass {
    pub fn json(&self, p: &SpinParams) -> serde_json::Value {
        serde_json::json!({
            "point": [p.beta.json(), p.gamma.json()],
            "tags": self.tags,
            "witnesses": self.witnesses,
        })
    }
}

/// Exhaustive search over multigraphs (self-loops allowed) with at most
/// `max_v` vertices and `max_e` edges for one with Z_G < 0 (all fields 1).
pub fn negative_witness(p: &SpinParams, max_v: usize, max_e: usize) -> Option<Multigraph> {
    for n in 1..=max_v {
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|u| (u..n).map(move |v| (u, v))).collect();
        for e in 1..=max_e {
            let mut pick = vec![0usize; e];
            let mut found = None;
            multisets(&slots, e, 0, &mut pick, 0, &mut |idx| {
                let edges: Vec<(usize, usize)> = idx.iter().map(|&i| slots[i]).collect();
                let g = Multigraph { n, edges };
                if fast_z(&g, p) < 0 {
                    found = Some(g);
                    return true;
                }
                false
            });
            if found.is_some() {
                return found;
            }
        }
    }
    None
}

/// Minimum of Z_G over the same search space (used to confirm positivity).
pub fn min_z_over_small_graphs(p: &SpinParams, max_v: usize, max_e: usize) -> Rat {
    let mut best: Option<Rat> = None;
    for n in 1..=max_v {
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|u| (u..n).map(move |v| (u, v))).collect();
        for e in 1..=max_e {
            let mut pick = vec![0usize; e];
            multisets(&slots, e, 0, &mut pick, 0, &mut |idx| {
                let edges: Vec<(usize, usize)> = idx.iter().map(|&i| slots[i]).collect();
                let z = fast_z(&Multigraph { n, edges }, p);
                if best.as_ref().is_none_or(|b| z < *b) {
                    best = Some(z);
                }
                false
            });
        }
    }
    best.unwrap_or_else(|| Rat::from(1))
}

fn multisets(
    slots: &[(usize, usize)],
    e: usize,
    depth: usize,
    pick: &mut Vec<usize>,
    start: usize,
    f: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if depth == e {
        return f(pick);
    }
    for i in start..slots.len() {
        pick[depth] = i;
        if multisets(slots, e, depth + 1, pick, i, f) {
            return true;
        }
    }
    false
}

/// Z_G with unit fields via integer counts of (#00, #11) edges.
fn fast_z(g: &Multigraph, p: &SpinParams) -> Rat {
    let m = g.edges.len();
    let mut counts = vec![0u64; (m + 1) * (m + 1)];
    for sigma in 0u32..1 << g.n {
        let (mut a, mut b) = (0, 0);
        for &(u, v) in &g.edges {
            match ((sigma >> u) & 1, (sigma >> v) & 1) {
                (0, 0) => a += 1,
                (1, 1) => b += 1,
                _ => {}
            }
        }
        counts[a * (m + 1) + b] += 1;
    }
    let mut z = Rat::from(0);
    for a in 0..=m {
        for b in 0..=m - a {
            let c = counts[a * (m + 1) + b];
            if c != 0 {
                z += Rat::from(c) * powu(&p.beta, a as u64) * powu(&p.gamma, b as u64);
            }
        }
    }
    z
}

/// A gadget graph with Z_G < 0, built from a ratio below -2 and, when its
/// z0 is negative, one library gadget wedged at the root. Works where the
/// small exhaustive search cannot reach (close to beta + gamma = 1).
pub fn gadget_negative_witness(p: &SpinParams) -> Result<crate::gadgets::RatioGadget> {
    use crate::gadgets::{gadget_product, realizer};
    let r = realizer(p)?;
    let h = r.realize_dense(&Rat::from(-3), &rat(1, 4))?;
    if h.activity.total() < 0 {
        return Ok(h);
    }
    let best = r
        .library
        .iter()
        .filter(|x| h.activity.hadamard(&x.activity).total() < 0)
        .min_by_key(|x| x.vertex_count());
    match best {
        Some(x) => Ok(gadget_product(&h, x)),
        None => Err(SpinError::Check("no negative gadget combination found".into())),
    }
}

/// CSV row for the zero-scan tool: beta, gamma, radius, n, root_lo, root_hi.
pub fn zero_scan_row(p: &SpinParams, r_prime: &Rat) -> Result<String> {
    let radius = disk_radius(p)?;
    let w = star_root_witness(p, r_prime, &two_pow(-20))?;
    Ok(format!("{},{},{},{},{},{}", p.beta, p.gamma, radius, w.n, w.lo, w.hi))
}

/// Rational just below x, on a 2^-30 grid.
pub fn below(x: &Rat) -> Rat {
    round_dyadic(x, -30, Floor)
}
