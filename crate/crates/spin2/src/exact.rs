//! Brute-force oracle: partition functions, activity vectors, pair matrices,
//! ratios and Z_G(x), all in exact rational arithmetic.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpinError};
use crate::graphcore::Multigraph;
use crate::num::{CRat, JsonValue, Rat, Scalar, SpinParams};

static ENUM_CAP: AtomicUsize = AtomicUsize::new(24);

pub fn enum_cap() -> usize {
    ENUM_CAP.load(Ordering::Relaxed)
}

/// Sets the vertex cap for brute-force enumeration (hard limit 40).
pub fn set_enum_cap(cap: usize) {
    ENUM_CAP.store(cap.min(40), Ordering::Relaxed);
}

pub fn check_cap(n: usize) -> Result<()> {
    let cap = enum_cap();
    if n > cap {
        return Err(SpinError::SizeCap(format!("{n} vertices exceeds enumeration cap {cap}")));
    }
    Ok(())
}

pub type FieldVector = Vec<CRat>;

pub fn ones(n: usize) -> FieldVector {
    vec![CRat::one(); n]
}

pub fn real_field(lam: &[Rat]) -> FieldVector {
    lam.iter().cloned().map(CRat::real).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivityVector<T = CRat> {
    pub z0: T,
    pub z1: T,
}

impl<T: Scalar> ActivityVector<T> {
    pub fn new(z0: T, z1: T) -> Self {
        ActivityVector { z0, z1 }
    }

    pub fn total(&self) -> T {
        self.z0.add(&self.z1)
    }

    /// Entrywise product (wedge sum of rooted graphs).
    pub fn hadamard(&self, o: &Self) -> Self {
        ActivityVector::new(self.z0.mul(&o.z0), self.z1.mul(&o.z1))
    }
}

impl<T: JsonValue> ActivityVector<T> {
    pub fn json(&self) -> serde_json::Value {
        serde_json::json!({ "z0": self.z0.json(), "z1": self.z1.json() })
    }
}

impl<T: JsonValue> PairMatrix<T> {
    pub fn json(&self) -> serde_json::Value {
        serde_json::json!([
            [self.m[0][0].json(), self.m[0][1].json()],
            [self.m[1][0].json(), self.m[1][1].json()]
        ])
    }
}

impl ActivityVector<Rat> {
    pub fn ratio(&self) -> Result<Rat> {
        if self.z0 == 0 {
            return Err(SpinError::UndefinedRatio);
        }
        Ok(&self.z1 / &self.z0)
    }

    pub fn scale(&self, k: &Rat) -> Self {
        ActivityVector::new(&self.z0 * k, &self.z1 * k)
    }
}

impl ActivityVector<CRat> {
    pub fn ratio(&self) -> Result<CRat> {
        if self.z0.is_zero() {
            return Err(SpinError::UndefinedRatio);
        }
        Ok(&self.z1 / &self.z0)
    }
}

/// m[i][j] = partial partition function with u at spin i and v at spin j.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairMatrix<T = CRat> {
    pub m: [[T; 2]; 2],
}

impl<T: Scalar> PairMatrix<T> {
    pub fn total(&self) -> T {
        self.m[0][0].add(&self.m[0][1]).add(&self.m[1][0]).add(&self.m[1][1])
    }

    /// Activity vector at u (row sums).
    pub fn row_activity(&self) -> ActivityVector<T> {
        ActivityVector::new(self.m[0][0].add(&self.m[0][1]), self.m[1][0].add(&self.m[1][1]))
    }

    /// Activity vector at v (column sums).
    pub fn col_activity(&self) -> ActivityVector<T> {
        ActivityVector::new(self.m[0][0].add(&self.m[1][0]), self.m[0][1].add(&self.m[1][1]))
    }
}

/// Univariate polynomial with rational coefficients (index = degree).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniPoly {
    #[serde(with = "coeffs_serde")]
    pub coeffs: Vec<Rat>,
}

mod coeffs_serde {
    use super::Rat;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &[Rat], s: S) -> std::result::Result<S::Ok, S::Error> {
        c.iter().map(|q| q.to_string()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rat>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| crate::num::parse_rat(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| *c == 0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Rat::from(0));
        }
        UniPoly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::from(0);
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_c(&self, x: &CRat) -> CRat {
        let mut acc = CRat::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + &CRat::real(c.clone());
        }
        acc
    }

    pub fn mul(&self, o: &UniPoly) -> UniPoly {
        let mut c = vec![Rat::from(0); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        UniPoly::new(c)
    }
}

fn edge_counts(sigma: u64, edges: &[(usize, usize)]) -> (usize, usize) {
    let mut n00 = 0;
    let mut n11 = 0;
    for &(u, v) in edges {
        let a = (sigma >> u) & 1;
        let b = (sigma >> v) & 1;
        if a == 0 && b == 0 {
            n00 += 1;
        } else if a == 1 && b == 1 {
            n11 += 1;
        }
    }
    (n00, n11)
}

fn pin_pattern(sigma: u64, pins: &[usize]) -> usize {
    let mut pat = 0;
    for (i, &v) in pins.iter().enumerate() {
        pat |= (((sigma >> v) & 1) as usize) << i;
    }
    pat
}

/// Integer configuration counts keyed by (pin pattern, #00 edges, #11
/// edges, #spin-1 vertices).
#[derive(Clone, Debug)]
pub struct CountTable {
    pub pins: usize,
    pub m: usize,
    pub n: usize,
    pub counts: Vec<u64>,
}

impl CountTable {
    fn index(&self, pat: usize, a: usize, b: usize, k: usize) -> usize {
        ((pat * (self.m + 1) + a) * (self.m + 1) + b) * (self.n + 1) + k
    }

    pub fn get(&self, pat: usize, a: usize, b: usize, k: usize) -> u64 {
        self.counts[self.index(pat, a, b, k)]
    }

    /// sum over configurations of beta^#00 gamma^#11 x^#1, per pin pattern.
    pub fn eval<T: Scalar>(&self, beta: &T, gamma: &T, x: &T) -> Vec<T> {
        let bp = powers(beta, self.m);
        let gp = powers(gamma, self.m);
        let xp = powers(x, self.n);
        (0..1usize << self.pins)
            .map(|pat| {
                let mut acc = T::zero();
                for a in 0..=self.m {
                    for b in 0..=self.m - a {
                        let mut inner = T::zero();
                        let mut any = false;
                        for k in 0..=self.n {
                            let c = self.get(pat, a, b, k);
                            if c != 0 {
                                any = true;
                                inner = inner.add(&xp[k].mul(&T::from_rat(&Rat::from(c))));
                            }
                        }
                        if any {
                            acc = acc.add(&bp[a].mul(&gp[b]).mul(&inner));
                        }
                    }
                }
                acc
            })
            .collect()
    }
}

fn powers<T: Scalar>(x: &T, k: usize) -> Vec<T> {
    let mut v = Vec::with_capacity(k + 1);
    v.push(T::one());
    for i in 1..=k {
        let next = v[i - 1].mul(x);
        v.push(next);
    }
    v
}

pub fn count_table(g: &Multigraph, pins: &[usize]) -> Result<CountTable> {
    check_cap(g.n)?;
    for &v in pins {
        if v >= g.n {
            return Err(SpinError::InvalidVertex(v, g.n));
        }
    }
    let (n, m) = (g.n, g.edges.len());
    let size = (1usize << pins.len()) * (m + 1) * (m + 1) * (n + 1);
    let blank = CountTable { pins: pins.len(), m, n, counts: vec![0; size] };
    let total: u64 = 1u64 << n;
    let chunk: u64 = 1 << 12;
    let chunks = total.div_ceil(chunk);
    let counts = (0..chunks)
        .into_par_iter()
        .fold(
            || vec![0u64; size],
            |mut acc, c| {
                let lo = c * chunk;
                let hi = (lo + chunk).min(total);
                for sigma in lo..hi {
                    let (a, b) = edge_counts(sigma, &g.edges);
                    let pat = pin_pattern(sigma, pins);
                    let k = sigma.count_ones() as usize;
                    acc[blank.index(pat, a, b, k)] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; size],
            |mut x, y| {
                for (a, b) in x.iter_mut().zip(y) {
                    *a += b;
                }
                x
            },
        );
    Ok(CountTable { counts, ..blank })
}

fn field_products<T: Scalar>(lam: &[T]) -> Vec<T> {
    let mut p = vec![T::one(); 1 << lam.len()];
    for s in 1..p.len() {
        let low = s.trailing_zeros() as usize;
        p[s] = p[s & (s - 1)].mul(&lam[low]);
    }
    p
}

/// Pinned partial partition functions for an arbitrary field vector, by
/// splitting the vertex set in halves and bucketing by edge counts.
fn pinned_general<T: Scalar>(g: &Multigraph, p: &SpinParams, lam: &[T], pins: &[usize]) -> Vec<T> {
    let (n, m) = (g.n, g.edges.len());
    let h = n / 2;
    let pl = field_products(&lam[..h]);
    let ph = field_products(&lam[h..]);
    let np = 1usize << pins.len();
    let size = np * (m + 1) * (m + 1);
    let idx = |pat: usize, a: usize, b: usize| (pat * (m + 1) + a) * (m + 1) + b;
    let acc = (0..ph.len())
        .into_par_iter()
        .filter(|&sh| !ph[sh].is_zero())
        .fold(
            || vec![T::zero(); size],
            |mut acc, sh| {
                let mut bucket: Vec<Option<T>> = vec![None; size];
                let high = (sh as u64) << h;
                for (sl, w) in pl.iter().enumerate() {
                    if w.is_zero() {
                        continue;
                    }
                    let sigma = high | sl as u64;
                    let (a, b) = edge_counts(sigma, &g.edges);
                    let i = idx(pin_pattern(sigma, pins), a, b);
                    bucket[i] = Some(match bucket[i].take() {
                        Some(x) => x.add(w),
                        None => w.clone(),
                    });
                }
                for (i, b) in bucket.into_iter().enumerate() {
                    if let Some(b) = b {
                        acc[i] = acc[i].add(&b.mul(&ph[sh]));
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![T::zero(); size],
            |x, y| x.iter().zip(&y).map(|(a, b)| a.add(b)).collect(),
        );
    let bp = powers(&T::from_rat(&p.beta), m);
    let gp = powers(&T::from_rat(&p.gamma), m);
    (0..np)
        .map(|pat| {
            let mut z = T::zero();
            for a in 0..=m {
                for b in 0..=m - a {
                    let v = &acc[idx(pat, a, b)];
                    if !v.is_zero() {
                        z = z.add(&bp[a].mul(&gp[b]).mul(v));
                    }
                }
            }
            z
        })
        .collect()
}

/// Partial sums with the given vertices pinned; entry `pat` has bit i equal
/// to the spin of pins[i].
pub fn pinned_sums<T: Scalar>(g: &Multigraph, p: &SpinParams, lam: &[T], pins: &[usize]) -> Result<Vec<T>> {
    check_cap(g.n)?;
    if lam.len() != g.n {
        return Err(SpinError::InvalidInput(format!(
            "field vector has length {} but graph has {} vertices",
            lam.len(),
            g.n
        )));
    }
    for &v in pins {
        if v >= g.n {
            return Err(SpinError::InvalidVertex(v, g.n));
        }
    }
    if g.n > 0 && lam.iter().all(|x| *x == lam[0]) && g.n >= 12 {
        let t = count_table(g, pins)?;
        return Ok(t.eval(&T::from_rat(&p.beta), &T::from_rat(&p.gamma), &lam[0]));
    }
    Ok(pinned_general(g, p, lam, pins))
}

pub fn partition_fn(g: &Multigraph, p: &SpinParams, lam: &[CRat]) -> Result<CRat> {
    Ok(pinned_sums(g, p, lam, &[])?.pop().expect("one entry"))
}

pub fn partition_fn_real(g: &Multigraph, p: &SpinParams, lam: &[Rat]) -> Result<Rat> {
    Ok(pinned_sums(g, p, lam, &[])?.pop().expect("one entry"))
}

/// Z_G with all fields equal to 1.
pub fn partition_fn_ones(g: &Multigraph, p: &SpinParams) -> Result<Rat> {
    partition_fn_real(g, p, &vec![Rat::from(1); g.n])
}

pub fn activity_vector(g: &Multigraph, v: usize, p: &SpinParams, lam: &[CRat]) -> Result<ActivityVector<CRat>> {
    let s = pinned_sums(g, p, lam, &[v])?;
    Ok(ActivityVector::new(s[0].clone(), s[1].clone()))
}

pub fn activity_vector_real(g: &Multigraph, v: usize, p: &SpinParams, lam: &[Rat]) -> Result<ActivityVector<Rat>> {
    let s = pinned_sums(g, p, lam, &[v])?;
    Ok(ActivityVector::new(s[0].clone(), s[1].clone()))
}

fn pair_from(s: Vec<CRat>) -> PairMatrix<CRat> {
    PairMatrix { m: [[s[0].clone(), s[2].clone()], [s[1].clone(), s[3].clone()]] }
}

pub fn pair_matrix(g: &Multigraph, u: usize, v: usize, p: &SpinParams, lam: &[CRat]) -> Result<PairMatrix<CRat>> {
    Ok(pair_from(pinned_sums(g, p, lam, &[u, v])?))
}

pub fn pair_matrix_real(g: &Multigraph, u: usize, v: usize, p: &SpinParams, lam: &[Rat]) -> Result<PairMatrix<Rat>> {
    let s = pinned_sums(g, p, lam, &[u, v])?;
    Ok(PairMatrix { m: [[s[0].clone(), s[2].clone()], [s[1].clone(), s[3].clone()]] })
}

pub fn ratio(g: &Multigraph, v: usize, p: &SpinParams, lam: &[CRat]) -> Result<CRat> {
    activity_vector(g, v, p, lam)?.ratio()
}

pub fn ratio_real(g: &Multigraph, v: usize, p: &SpinParams, lam: &[Rat]) -> Result<Rat> {
    activity_vector_real(g, v, p, lam)?.ratio()
}

/// Activity vector at v with every field equal to 1.
pub fn activity_ones(g: &Multigraph, v: usize, p: &SpinParams) -> Result<ActivityVector<Rat>> {
    activity_vector_real(g, v, p, &vec![Rat::from(1); g.n])
}

pub fn z_polynomial(g: &Multigraph, p: &SpinParams) -> Result<UniPoly> {
    let t = count_table(g, &[])?;
    let bp = powers(&p.beta, t.m);
    let gp = powers(&p.gamma, t.m);
    let mut coeffs = vec![Rat::from(0); t.n + 1];
    for a in 0..=t.m {
        for b in 0..=t.m - a {
            let w = &bp[a] * &gp[b];
            if w == 0 {
                continue;
            }
            for (k, c) in coeffs.iter_mut().enumerate() {
                let cnt = t.get(0, a, b, k);
                if cnt != 0 {
                    *c += &w * Rat::from(cnt);
                }
            }
        }
    }
    Ok(UniPoly::new(coeffs))
}
