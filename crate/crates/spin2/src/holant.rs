//! The subgraphs-world Holant form of a two-spin system: Fourier tables on
//! edge vertices and parity constraints on original vertices. Includes an
//! exact Holant evaluator, windability and strictly-terraced checkers, the
//! Even_k decomposition, and a Markov chain estimator for Z_G.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Result, SpinError};
use crate::graphcore::Multigraph;
use crate::num::{two_pow, JsonValue, Rat, SpinParams};

/// psi(x1, x2) = t[x1][x2].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryFn {
    pub t: [[Rat; 2]; 2],
}

impl BinaryFn {
    pub fn new(t: [[Rat; 2]; 2]) -> Self {
        BinaryFn { t }
    }

    pub fn of(t: [[i64; 2]; 2]) -> Self {
        let f = |x: i64| Rat::from(x);
        BinaryFn::new([[f(t[0][0]), f(t[0][1])], [f(t[1][0]), f(t[1][1])]])
    }

    /// [[beta, 1], [1, gamma]]
    pub fn interaction(p: &SpinParams) -> Self {
        BinaryFn::new([[p.beta.clone(), Rat::from(1)], [Rat::from(1), p.gamma.clone()]])
    }

    pub fn get(&self, a: usize, b: usize) -> &Rat {
        &self.t[a][b]
    }

    pub fn neg(&self) -> Self {
        BinaryFn::new([[-&self.t[0][0], -&self.t[0][1]], [-&self.t[1][0], -&self.t[1][1]]])
    }

    /// Truth table indexed by x1 | x2 << 1.
    pub fn table(&self) -> Vec<Rat> {
        vec![self.t[0][0].clone(), self.t[1][0].clone(), self.t[0][1].clone(), self.t[1][1].clone()]
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::json!([[self.t[0][0].json(), self.t[0][1].json()], [self.t[1][0].json(), self.t[1][1].json()]])
    }
}

fn chi(a: usize, b: usize, x1: usize, x2: usize) -> i64 {
    if (a * x1 + b * x2) % 2 == 0 { 1 } else { -1 }
}

pub fn fourier_hat(psi: &BinaryFn) -> BinaryFn {
    let mut out: [[Rat; 2]; 2] = Default::default();
    for a in 0..2 {
        for b in 0..2 {
            let mut s = Rat::from(0);
            for x1 in 0..2 {
                for x2 in 0..2 {
                    s += &psi.t[x1][x2] * Rat::from(chi(a, b, x1, x2));
                }
            }
            out[a][b] = s / Rat::from(4);
        }
    }
    BinaryFn::new(out)
}

/// psi = sum over (a, b) of hat(a, b) chi_{a,b}.
pub fn fourier_inverse(hat: &BinaryFn) -> BinaryFn {
    let mut out: [[Rat; 2]; 2] = Default::default();
    for x1 in 0..2 {
        for x2 in 0..2 {
            let mut s = Rat::from(0);
            for a in 0..2 {
                for b in 0..2 {
                    s += &hat.t[a][b] * Rat::from(chi(a, b, x1, x2));
                }
            }
            out[x1][x2] = s;
        }
    }
    BinaryFn::new(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// Parity indicator over all incident variables.
    Even,
    /// Binary table over exactly two incident variables, in `vars` order.
    Table(BinaryFn),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HVertex {
    pub vars: Vec<usize>,
    pub constraint: Constraint,
}

/// A Holant instance. Variables are incidence edges; a variable listed by
/// only one vertex is dangling and still summed over unless fixed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HolantInstance {
    pub num_vars: usize,
    pub vertices: Vec<HVertex>,
    pub fixed: Vec<Option<bool>>,
    /// Value reported by holant_exact is (-1)^sign_exponent times the sum.
    pub sign_exponent: u64,
    /// Number of original graph vertices, so Z_G = 2^base_vertices * value.
    pub base_vertices: usize,
}

impl HolantInstance {
    pub fn new(num_vars: usize, vertices: Vec<HVertex>) -> Result<Self> {
        let inst = HolantInstance { num_vars, vertices, fixed: vec![None; num_vars], sign_exponent: 0, base_vertices: 0 };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let mut uses = vec![0usize; self.num_vars];
        for v in &self.vertices {
            if let Constraint::Table(_) = v.constraint {
                if v.vars.len() != 2 {
                    return Err(SpinError::InvalidInput("table vertices need exactly two variables".into()));
                }
            }
            for &x in &v.vars {
                if x >= self.num_vars {
                    return Err(SpinError::InvalidInput(format!("variable {x} out of range")));
                }
                uses[x] += 1;
            }
        }
        if uses.iter().any(|&u| u > 2) {
            return Err(SpinError::InvalidInput("a variable joins more than two vertex slots".into()));
        }
        if self.fixed.len() != self.num_vars {
            return Err(SpinError::InvalidInput("fixed vector has the wrong length".into()));
        }
        Ok(())
    }

    pub fn pin(&self, var: usize, value: bool) -> Result<Self> {
        if var >= self.num_vars {
            return Err(SpinError::InvalidInput(format!("variable {var} out of range")));
        }
        let mut out = self.clone();
        out.fixed[var] = Some(value);
        Ok(out)
    }

    /// Product of all constraint values; 0 if a fixed variable disagrees.
    pub fn weight(&self, y: &[bool]) -> Rat {
        for (i, f) in self.fixed.iter().enumerate() {
            if f.is_some_and(|b| b != y[i]) {
                return Rat::from(0);
            }
        }
        let mut w = Rat::from(1);
        for v in &self.vertices {
            match &v.constraint {
                Constraint::Even => {
                    if v.vars.iter().filter(|&&x| y[x]).count() % 2 == 1 {
                        return Rat::from(0);
                    }
                }
                Constraint::Table(f) => {
                    w *= f.get(y[v.vars[0]] as usize, y[v.vars[1]] as usize);
                    if w == 0 {
                        return w;
                    }
                }
            }
        }
        w
    }

    fn signed(&self, v: Rat) -> Rat {
        if self.sign_exponent % 2 == 1 { -v } else { v }
    }

    pub fn json(&self) -> serde_json::Value {
        let verts: Vec<_> = self
            .vertices
            .iter()
            .map(|v| match &v.constraint {
                Constraint::Even => serde_json::json!({"vars": v.vars, "even": v.vars.len()}),
                Constraint::Table(f) => serde_json::json!({"vars": v.vars, "table": f.json()}),
            })
            .collect();
        serde_json::json!({
            "num_vars": self.num_vars,
            "vertices": verts,
            "fixed": self.fixed,
            "sign_exponent": self.sign_exponent,
            "base_vertices": self.base_vertices,
        })
    }
}

/// Edge i = (u, v) gives variables 2i (at u) and 2i + 1 (at v), and edge
/// vertex n + i carrying hat(psi). When beta + gamma <= -2 the tables are
/// -hat(psi) and the sign exponent is |E|.
pub fn subgraphs_world(g: &Multigraph, p: &SpinParams) -> HolantInstance {
    let hat = fourier_hat(&BinaryFn::interaction(p));
    let negated = p.sum() <= -2;
    let table = if negated { hat.neg() } else { hat };
    let mut vertices: Vec<HVertex> = (0..g.n).map(|_| HVertex { vars: Vec::new(), constraint: Constraint::Even }).collect();
    for (i, &(u, v)) in g.edges.iter().enumerate() {
        vertices[u].vars.push(2 * i);
        vertices[v].vars.push(2 * i + 1);
    }
    for i in 0..g.edges.len() {
        vertices.push(HVertex { vars: vec![2 * i, 2 * i + 1], constraint: Constraint::Table(table.clone()) });
    }
    let m = g.edges.len();
    HolantInstance {
        num_vars: 2 * m,
        vertices,
        fixed: vec![None; 2 * m],
        sign_exponent: if negated { m as u64 } else { 0 },
        base_vertices: g.n,
    }
}

pub const HOLANT_VAR_CAP: usize = 24;

/// Signed Holant value. Parity constraints are solved over GF(2) and the
/// solution space is enumerated; table factors are tallied by entry.
pub fn holant_exact(inst: &HolantInstance) -> Result<Rat> {
    inst.validate()?;
    if inst.num_vars > HOLANT_VAR_CAP {
        return Err(SpinError::SizeCap(format!("{} Holant variables exceeds {HOLANT_VAR_CAP}", inst.num_vars)));
    }
    let free: Vec<usize> = (0..inst.num_vars).filter(|&i| inst.fixed[i].is_none()).collect();
    let mut col = vec![usize::MAX; inst.num_vars];
    for (k, &i) in free.iter().enumerate() {
        col[i] = k;
    }
    let fixed_mask: u32 = (0..inst.num_vars).filter(|&i| inst.fixed[i] == Some(true)).fold(0, |m, i| m | 1 << i);
    // rows: (mask over free columns, rhs)
    let mut rows: Vec<(u32, bool)> = Vec::new();
    for v in &inst.vertices {
        if v.constraint != Constraint::Even {
            continue;
        }
        let mut mask = 0u32;
        let mut rhs = false;
        for &x in &v.vars {
            if col[x] == usize::MAX {
                rhs ^= fixed_mask >> x & 1 == 1;
            } else {
                mask ^= 1 << col[x];
            }
        }
        rows.push((mask, rhs));
    }
    let mut pivots: Vec<(usize, u32, bool)> = Vec::new();
    let mut r = 0;
    for c in 0..free.len() {
        let Some(k) = (r..rows.len()).find(|&k| rows[k].0 >> c & 1 == 1) else { continue };
        rows.swap(r, k);
        let (pm, pr) = rows[r];
        for (k, row) in rows.iter_mut().enumerate() {
            if k != r && row.0 >> c & 1 == 1 {
                row.0 ^= pm;
                row.1 ^= pr;
            }
        }
        pivots.push((c, pm, pr));
        r += 1;
    }
    if rows[r..].iter().any(|&(_, rhs)| rhs) {
        return Ok(Rat::from(0));
    }
    let pivot_mask: u32 = pivots.iter().fold(0, |m, &(c, _, _)| m | 1 << c);
    let nonpivot: Vec<usize> = (0..free.len()).filter(|&c| pivot_mask >> c & 1 == 0).collect();
    let mut tables: Vec<BinaryFn> = Vec::new();
    let mut slots: Vec<(usize, usize, usize)> = Vec::new();
    for v in &inst.vertices {
        if let Constraint::Table(f) = &v.constraint {
            let id = match tables.iter().position(|t| t == f) {
                Some(id) => id,
                None => {
                    tables.push(f.clone());
                    tables.len() - 1
                }
            };
            slots.push((id, v.vars[0], v.vars[1]));
        }
    }
    let mut tally: HashMap<Vec<u16>, u64> = HashMap::new();
    let mut key = vec![0u16; 4 * tables.len()];
    for bits in 0u64..1 << nonpivot.len() {
        let mut a = 0u32;
        for (k, &c) in nonpivot.iter().enumerate() {
            if bits >> k & 1 == 1 {
                a |= 1 << c;
            }
        }
        for &(c, pm, pr) in &pivots {
            let rest = (pm & !(1 << c)) & a;
            if (rest.count_ones() % 2 == 1) != pr {
                a |= 1 << c;
            }
        }
        let val = |x: usize| -> usize {
            if col[x] == usize::MAX { (fixed_mask >> x & 1) as usize } else { (a >> col[x] & 1) as usize }
        };
        key.iter_mut().for_each(|k| *k = 0);
        for &(id, x1, x2) in &slots {
            key[4 * id + (val(x1) | val(x2) << 1)] += 1;
        }
        *tally.entry(key.clone()).or_insert(0) += 1;
    }
    let mut total = Rat::from(0);
    for (k, cnt) in tally {
        let mut w = Rat::from(cnt);
        for (id, t) in tables.iter().enumerate() {
            let entries = t.table();
            for (e, q) in entries.iter().enumerate() {
                let c = k[4 * id + e];
                if c > 0 {
                    w *= crate::num::powu(q, c as u64);
                }
            }
        }
        total += w;
    }
    Ok(inst.signed(total))
}

/// Path of k - 2 Even_3 vertices; externals are variables 0..k, internals
/// k..2k-3.
pub fn even_decompose(k: usize) -> Result<HolantInstance> {
    if k < 4 {
        return Err(SpinError::InvalidInput("even_decompose needs k >= 4".into()));
    }
    let mut vertices = Vec::new();
    for j in 0..k - 2 {
        let vars = if j == 0 {
            vec![0, 1, k]
        } else if j == k - 3 {
            vec![2 * k - 4, k - 2, k - 1]
        } else {
            vec![k + j - 1, j + 1, k + j]
        };
        vertices.push(HVertex { vars, constraint: Constraint::Even });
    }
    HolantInstance::new(2 * k - 3, vertices)
}

/// Partitions of the set bits of `mask` into pairs and at most one
/// singleton, each part a bit mask, parts sorted.
pub fn matchings(mask: u8) -> Vec<Vec<u8>> {
    fn rec(rest: u8, single: bool, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if rest == 0 {
            let mut m = cur.clone();
            m.sort();
            out.push(m);
            return;
        }
        let i = rest & rest.wrapping_neg();
        let others = rest & !i;
        if !single {
            cur.push(i);
            rec(others, true, cur, out);
            cur.pop();
        }
        let mut o = others;
        while o != 0 {
            let j = o & o.wrapping_neg();
            o &= !j;
            cur.push(i | j);
            rec(others & !j, single, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(mask, false, &mut Vec::new(), &mut out);
    out
}

/// Values B(x, y, M) keyed by (x, y, M).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindCert {
    pub arity: usize,
    pub b: BTreeMap<(u8, u8, Vec<u8>), Rat>,
}

impl WindCert {
    pub fn json(&self) -> serde_json::Value {
        let rows: Vec<_> = self
            .b
            .iter()
            .filter(|(_, v)| **v != 0)
            .map(|((x, y, m), v)| serde_json::json!({"x": x, "y": y, "M": m, "B": v.json()}))
            .collect();
        serde_json::json!({"arity": self.arity, "nonzero": rows})
    }
}

fn check_table(f: &[Rat], arity: usize) -> Result<()> {
    if arity > 3 || f.len() != 1 << arity {
        return Err(SpinError::InvalidInput("tables must have arity <= 3 and 2^arity entries".into()));
    }
    if f.iter().any(|v| *v < 0) {
        return Err(SpinError::InvalidInput("table has a negative entry".into()));
    }
    Ok(())
}

/// Re-substitutes both windability conditions.
pub fn verify_windcert(f: &[Rat], cert: &WindCert) -> bool {
    let n = 1u8 << cert.arity;
    for x in 0..n {
        for y in 0..n {
            let mut s = Rat::from(0);
            for m in matchings(x ^ y) {
                let Some(b) = cert.b.get(&(x, y, m.clone())) else { return false };
                if *b < 0 {
                    return false;
                }
                for &part in &m {
                    if cert.b.get(&(x ^ part, y ^ part, m.clone())) != Some(b) {
                        return false;
                    }
                }
                s += b;
            }
            if s != &f[x as usize] * &f[y as usize] {
                return false;
            }
        }
    }
    true
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut i = i;
    while parent[i] != r {
        let next = parent[i];
        parent[i] = r;
        i = next;
    }
    r
}

enum Phase1 {
    Feasible(Vec<Rat>),
    /// y with y^T A <= 0 and y^T b > 0.
    Infeasible(Vec<Rat>),
}

/// Phase one of the simplex method for A x = b, x >= 0, b >= 0, with
/// Bland's rule.
fn phase_one(a: &[Vec<Rat>], b: &[Rat]) -> Phase1 {
    let rows = a.len();
    let n = a.first().map_or(0, |r| r.len());
    let w = n + rows;
    let mut t: Vec<Vec<Rat>> = (0..rows)
        .map(|i| {
            let mut r = a[i].clone();
            r.extend((0..rows).map(|k| Rat::from((k == i) as i64)));
            r.push(b[i].clone());
            r
        })
        .collect();
    let mut basis: Vec<usize> = (n..w).collect();
    let mut z: Vec<Rat> = vec![Rat::from(0); w + 1];
    for j in 0..n {
        z[j] = -t.iter().map(|r| &r[j]).sum::<Rat>();
    }
    z[w] = -t.iter().map(|r| &r[w]).sum::<Rat>();
    loop {
        let Some(j) = (0..w).find(|&j| z[j] < 0) else { break };
        let mut best: Option<(usize, Rat)> = None;
        for i in 0..rows {
            if t[i][j] > 0 {
                let ratio = &t[i][w] / &t[i][j];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && basis[i] < basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
        }
        let Some((pr, _)) = best else { break };
        let piv = t[pr][j].clone();
        for v in t[pr].iter_mut() {
            *v /= &piv;
        }
        let prow = t[pr].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != pr && row[j] != 0 {
                let f = row[j].clone();
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= &f * pv;
                }
            }
        }
        let f = z[j].clone();
        for (v, pv) in z.iter_mut().zip(&prow) {
            *v -= &f * pv;
        }
        basis[pr] = j;
    }
    if z[w] == 0 {
        let mut x = vec![Rat::from(0); n];
        for (i, &bj) in basis.iter().enumerate() {
            if bj < n {
                x[bj] = t[i][w].clone();
            }
        }
        Phase1::Feasible(x)
    } else {
        Phase1::Infeasible((0..rows).map(|i| Rat::from(1) - &z[n + i]).collect())
    }
}

/// Certificate of windability for a nonnegative table of arity <= 3
/// (indexed by bit pattern), or None when the linear system is infeasible.
/// The infeasible case is backed by a re-checked Farkas vector.
pub fn windable_check(f: &[Rat], arity: usize) -> Result<Option<WindCert>> {
    check_table(f, arity)?;
    let n = 1u8 << arity;
    let mut keys: Vec<(u8, u8, Vec<u8>)> = Vec::new();
    let mut index: HashMap<(u8, u8, Vec<u8>), usize> = HashMap::new();
    for x in 0..n {
        for y in 0..n {
            for m in matchings(x ^ y) {
                index.insert((x, y, m.clone()), keys.len());
                keys.push((x, y, m));
            }
        }
    }
    let mut parent: Vec<usize> = (0..keys.len()).collect();
    for (k, (x, y, m)) in keys.iter().enumerate() {
        for &part in m {
            let other = index[&(x ^ part, y ^ part, m.clone())];
            let (a, b) = (find(&mut parent, k), find(&mut parent, other));
            parent[a] = b;
        }
    }
    let mut orbit = vec![usize::MAX; keys.len()];
    let mut count = 0;
    for k in 0..keys.len() {
        let r = find(&mut parent, k);
        if orbit[r] == usize::MAX {
            orbit[r] = count;
            count += 1;
        }
        orbit[k] = orbit[r];
    }
    let mut a: Vec<Vec<Rat>> = Vec::new();
    let mut b: Vec<Rat> = Vec::new();
    for x in 0..n {
        for y in 0..n {
            let mut row = vec![Rat::from(0); count];
            for m in matchings(x ^ y) {
                row[orbit[index[&(x, y, m)]]] += Rat::from(1);
            }
            a.push(row);
            b.push(&f[x as usize] * &f[y as usize]);
        }
    }
    match phase_one(&a, &b) {
        Phase1::Feasible(sol) => {
            let cert = WindCert {
                arity,
                b: keys.iter().enumerate().map(|(k, key)| (key.clone(), sol[orbit[k]].clone())).collect(),
            };
            if !verify_windcert(f, &cert) {
                return Err(SpinError::Check("windability certificate failed re-substitution".into()));
            }
            Ok(Some(cert))
        }
        Phase1::Infeasible(y) => {
            let yb: Rat = y.iter().zip(&b).map(|(u, v)| u * v).sum();
            let ok = yb > 0 && (0..count).all(|j| y.iter().zip(&a).map(|(u, r)| u * &r[j]).sum::<Rat>() <= 0);
            if !ok {
                return Err(SpinError::Check("infeasibility certificate failed".into()));
            }
            Ok(None)
        }
    }
}

pub fn strictly_terraced_check(f: &[Rat], arity: usize) -> bool {
    for x in 0..f.len() {
        if f[x] != 0 {
            continue;
        }
        for i in 0..arity {
            for j in 0..arity {
                if f[x ^ 1 << i] != f[x ^ 1 << j] {
                    return false;
                }
            }
        }
    }
    true
}

pub fn even_table(arity: usize) -> Vec<Rat> {
    (0..1usize << arity).map(|x| Rat::from((x.count_ones() % 2 == 0) as i64)).collect()
}

// ---------------------------------------------------------------------------
// Markov chain estimator

/// Table used by the estimator: hat(psi) or -hat(psi), after swapping beta
/// and gamma when needed so that every entry is nonnegative.
#[derive(Clone, Debug)]
pub struct Oriented {
    pub params: SpinParams,
    pub swapped: bool,
    pub negated: bool,
    pub table: BinaryFn,
}

pub fn orient(p: &SpinParams) -> Result<Oriented> {
    let s = p.sum();
    if p.beta == p.gamma || (s < 2 && s > -2) {
        return Err(SpinError::Region("needs beta != gamma and |beta + gamma| >= 2".into()));
    }
    let negated = s <= -2;
    let swapped = if negated { p.beta > p.gamma } else { p.beta < p.gamma };
    let params = if swapped { p.swapped() } else { p.clone() };
    let hat = fourier_hat(&BinaryFn::interaction(&params));
    let table = if negated { hat.neg() } else { hat };
    Ok(Oriented { params, swapped, negated, table })
}

/// Per-instance chain data. State: one bit per half-edge variable; edge i
/// owns variables 2i and 2i + 1. A move picks a vertex with at least two
/// free incident variables, then a uniform pair of them, and flips both
/// (Metropolis acceptance). This keeps every parity constraint satisfied.
/// The chain is lazy: half of all steps hold, which rules out periodicity.
struct Chain {
    /// Free variables at each original vertex.
    free_at: Vec<Vec<usize>>,
    movable: Vec<usize>,
    tf: [f64; 4],
}

fn pair_index(state: &[u8], e: usize) -> usize {
    (state[2 * e] | state[2 * e + 1] << 1) as usize
}

impl Chain {
    fn new(g: &Multigraph, pinned: &[bool], table: &BinaryFn) -> Self {
        let mut free_at = vec![Vec::new(); g.n];
        for (i, &(u, v)) in g.edges.iter().enumerate() {
            if !pinned[i] {
                free_at[u].push(2 * i);
                free_at[v].push(2 * i + 1);
            }
        }
        let movable = (0..g.n).filter(|&v| free_at[v].len() >= 2).collect();
        let t = table.table();
        let tf = [0, 1, 2, 3].map(|k| crate::num::to_f64(&t[k]));
        Chain { free_at, movable, tf }
    }

    fn free_vars(&self) -> usize {
        self.free_at.iter().map(|v| v.len()).sum()
    }

    fn step<R: Rng>(&self, state: &mut [u8], rng: &mut R) {
        if self.movable.is_empty() || rng.gen::<bool>() {
            return;
        }
        let v = self.movable[rng.gen_range(0..self.movable.len())];
        let vars = &self.free_at[v];
        let i = rng.gen_range(0..vars.len());
        let mut j = rng.gen_range(0..vars.len() - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (vars[i], vars[j]);
        let (ea, eb) = (a / 2, b / 2);
        let old = if ea == eb {
            self.tf[pair_index(state, ea)]
        } else {
            self.tf[pair_index(state, ea)] * self.tf[pair_index(state, eb)]
        };
        state[a] ^= 1;
        state[b] ^= 1;
        let new = if ea == eb {
            self.tf[pair_index(state, ea)]
        } else {
            self.tf[pair_index(state, ea)] * self.tf[pair_index(state, eb)]
        };
        if new < old && rng.gen::<f64>() * old >= new {
            state[a] ^= 1;
            state[b] ^= 1;
        }
    }
}

/// A parity-satisfying state of positive weight, by depth-first search.
fn initial_state(g: &Multigraph, table: &BinaryFn) -> Option<Vec<u8>> {
    let m = g.edges.len();
    let t = table.table();
    if t[0] > 0 {
        return Some(vec![0; 2 * m]);
    }
    let mut last = vec![usize::MAX; g.n];
    for (i, &(u, v)) in g.edges.iter().enumerate() {
        last[u] = i;
        last[v] = i;
    }
    fn rec(i: usize, g: &Multigraph, t: &[Rat], last: &[usize], parity: &mut [u8], st: &mut Vec<u8>) -> bool {
        if i == g.edges.len() {
            return true;
        }
        let (u, v) = g.edges[i];
        for k in 0..4u8 {
            if t[k as usize] == 0 {
                continue;
            }
            let (a, b) = (k & 1, k >> 1);
            parity[u] ^= a;
            parity[v] ^= b;
            let ok = (last[u] != i || parity[u] == 0) && (last[v] != i || parity[v] == 0);
            if ok {
                st.push(a);
                st.push(b);
                if rec(i + 1, g, t, last, parity, st) {
                    return true;
                }
                st.pop();
                st.pop();
            }
            parity[u] ^= a;
            parity[v] ^= b;
        }
        false
    }
    let mut st = Vec::with_capacity(2 * m);
    let mut parity = vec![0u8; g.n];
    if rec(0, g, &t, &last, &mut parity, &mut st) { Some(st) } else { None }
}

#[derive(Clone, Debug, Serialize)]
pub struct FprasResult {
    #[serde(with = "crate::num::serde_rat")]
    pub estimate: Rat,
    pub estimate_decimal: f64,
    pub replicas: Vec<f64>,
    pub chains: usize,
    pub stages: usize,
    pub samples_per_stage: usize,
    pub steps: u64,
    pub swapped: bool,
    pub negated: bool,
}

impl FprasResult {
    pub fn json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or_default()
    }
}

/// ceil(12 m / eps^2), the Chebyshev sample size for a product of m
/// ratios each at least 1/4.
pub fn samples_per_stage(m: usize, eps: f64) -> usize {
    ((12 * m.max(1)) as f64 / (eps * eps)).ceil() as usize
}

/// Odd replica count 2 ceil(ln(1/delta)/4) + 1 for the median.
pub fn replica_count(delta: f64) -> usize {
    2 * ((1.0 / delta).ln() / 4.0).ceil().max(0.0) as usize + 1
}

fn one_replica<R: Rng>(g: &Multigraph, o: &Oriented, start: &[u8], samples: usize, rng: &mut R, steps: &mut u64) -> Rat {
    let m = g.edges.len();
    let mut pinned = vec![false; m];
    let mut state = start.to_vec();
    let mut inv_prob = Rat::from(1);
    for e in 0..m {
        let chain = Chain::new(g, &pinned, &o.table);
        let sweep = chain.free_vars().max(1);
        if !chain.movable.is_empty() {
            for _ in 0..2 * sweep {
                chain.step(&mut state, rng);
            }
            *steps += 2 * sweep as u64;
            // the pinned value comes from a pilot run, so that the
            // estimated probability is not biased upward by the choice
            let pilot = (samples / 8).max(64);
            let mut counts = [0usize; 4];
            let mut reps: [Option<Vec<u8>>; 4] = Default::default();
            for _ in 0..pilot {
                for _ in 0..sweep {
                    chain.step(&mut state, rng);
                }
                let k = pair_index(&state, e);
                counts[k] += 1;
                if reps[k].is_none() {
                    reps[k] = Some(state.clone());
                }
            }
            let best = (0..4).max_by_key(|&k| (counts[k], std::cmp::Reverse(k))).unwrap_or(0);
            let mut hits = 0usize;
            let mut rep = reps[best].take();
            for _ in 0..samples {
                for _ in 0..sweep {
                    chain.step(&mut state, rng);
                }
                if pair_index(&state, e) == best {
                    hits += 1;
                    if hits == 1 {
                        rep = Some(state.clone());
                    }
                }
            }
            *steps += ((pilot + samples) * sweep) as u64;
            inv_prob *= Rat::from(samples as u64) / Rat::from(hits.max(1) as u64);
            if let Some(s) = rep {
                state = s;
            }
        }
        pinned[e] = true;
    }
    let t = o.table.table();
    let mut w = Rat::from(1);
    for e in 0..m {
        w *= &t[pair_index(&state, e)];
    }
    w * inv_prob
}

/// Estimate of Z_G as 2^|V| (-1)^{sign} times a telescoping product over
/// edges pinned one at a time, median over replicas.
pub fn fpras_with(g: &Multigraph, p: &SpinParams, samples: usize, replicas: usize, seed: u64) -> Result<FprasResult> {
    if g.has_self_loops() {
        return Err(SpinError::InvalidInput("the estimator does not accept self-loops".into()));
    }
    let o = orient(p)?;
    let start = initial_state(g, &o.table).ok_or(SpinError::ZeroWeight)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = 0u64;
    let mut ests: Vec<Rat> = (0..replicas.max(1)).map(|_| one_replica(g, &o, &start, samples, &mut rng, &mut steps)).collect();
    ests.sort();
    let scale = two_pow(g.n as i64);
    let sign = if o.negated && g.edges.len() % 2 == 1 { Rat::from(-1) } else { Rat::from(1) };
    let estimate = &ests[ests.len() / 2] * &scale * &sign;
    Ok(FprasResult {
        estimate_decimal: crate::num::to_f64(&estimate),
        estimate,
        replicas: ests.iter().map(|e| crate::num::to_f64(&(e * &scale * &sign))).collect(),
        chains: ests.len(),
        stages: g.edges.len(),
        samples_per_stage: samples,
        steps,
        swapped: o.swapped,
        negated: o.negated,
    })
}

pub fn fpras_estimate(g: &Multigraph, p: &SpinParams, eps: &Rat, delta: &Rat, seed: u64) -> Result<FprasResult> {
    let (e, d) = (crate::num::to_f64(eps), crate::num::to_f64(delta));
    if !(e > 0.0 && e < 1.0 && d > 0.0 && d < 1.0) {
        return Err(SpinError::InvalidInput("eps and delta must lie in (0, 1)".into()));
    }
    fpras_with(g, p, samples_per_stage(g.edges.len(), e), replica_count(d), seed)
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainCheck {
    pub states: usize,
    pub detailed_balance: bool,
    pub stochastic: bool,
    pub irreducible: bool,
}

pub const CHAIN_CHECK_VAR_CAP: usize = 20;

/// Builds the exact transition matrix of the move set on the positive
/// weight states (edges listed in `pinned` fixed to the given pair index)
/// and checks detailed balance, row sums and irreducibility.
pub fn worm_chain_check(g: &Multigraph, p: &SpinParams, pinned: &[(usize, usize)]) -> Result<ChainCheck> {
    let o = orient(p)?;
    let m = g.edges.len();
    if 2 * m > CHAIN_CHECK_VAR_CAP {
        return Err(SpinError::SizeCap(format!("{} variables exceeds {CHAIN_CHECK_VAR_CAP}", 2 * m)));
    }
    let t = o.table.table();
    let mut pin = vec![None; m];
    for &(e, k) in pinned {
        if e >= m || k > 3 {
            return Err(SpinError::InvalidInput("bad pin".into()));
        }
        pin[e] = Some(k);
    }
    let weight = |s: &[u8]| -> Rat {
        let mut par = vec![0u8; g.n];
        let mut w = Rat::from(1);
        for (i, &(u, v)) in g.edges.iter().enumerate() {
            par[u] ^= s[2 * i];
            par[v] ^= s[2 * i + 1];
            let k = pair_index(s, i);
            if pin[i].is_some_and(|q| q != k) {
                return Rat::from(0);
            }
            w *= &t[k];
        }
        if par.iter().any(|&x| x != 0) { Rat::from(0) } else { w }
    };
    let mut states: Vec<Vec<u8>> = Vec::new();
    let mut pi: Vec<Rat> = Vec::new();
    for bits in 0u32..1 << (2 * m) {
        let s: Vec<u8> = (0..2 * m).map(|i| (bits >> i & 1) as u8).collect();
        let w = weight(&s);
        if w > 0 {
            states.push(s);
            pi.push(w);
        }
    }
    let pinned_mask: Vec<bool> = pin.iter().map(|x| x.is_some()).collect();
    let chain = Chain::new(g, &pinned_mask, &o.table);
    let pos: HashMap<Vec<u8>, usize> = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let ns = states.len();
    let mut mat = vec![vec![Rat::from(0); ns]; ns];
    let nv = chain.movable.len();
    for (x, s) in states.iter().enumerate() {
        let mut out = Rat::from(0);
        for &v in &chain.movable {
            let vars = &chain.free_at[v];
            let f = vars.len() as u64;
            let q = Rat::from(1) / Rat::from(2 * nv as u64) / Rat::from(f * (f - 1) / 2);
            for i in 0..vars.len() {
                for j in i + 1..vars.len() {
                    let mut s2 = s.clone();
                    s2[vars[i]] ^= 1;
                    s2[vars[j]] ^= 1;
                    let Some(&y) = pos.get(&s2) else { continue };
                    let r = &pi[y] / &pi[x];
                    let acc = if r > 1 { Rat::from(1) } else { r };
                    let pxy = &q * acc;
                    out += &pxy;
                    mat[x][y] += pxy;
                }
            }
        }
        mat[x][x] += Rat::from(1) - out;
    }
    let stochastic = mat.iter().all(|row| row.iter().all(|v| *v >= 0) && row.iter().sum::<Rat>() == 1);
    let mut detailed_balance = true;
    for x in 0..ns {
        for y in x + 1..ns {
            if &pi[x] * &mat[x][y] != &pi[y] * &mat[y][x] {
                detailed_balance = false;
            }
        }
    }
    let mut seen = vec![false; ns];
    let mut queue = VecDeque::new();
    if ns > 0 {
        seen[0] = true;
        queue.push_back(0);
    }
    while let Some(x) = queue.pop_front() {
        for y in 0..ns {
            if !seen[y] && mat[x][y] > 0 {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    Ok(ChainCheck { states: ns, detailed_balance, stochastic, irreducible: seen.iter().all(|&b| b) })
}
