//! Deterministic approximation of Z_G(1) from a truncated Taylor series of
//! ln Z_G(x) about x = 0, valid while the zero-free disk around 0 has
//! radius above 1.

use serde::Serialize;

use crate::error::{Result, SpinError};
use crate::exact::{self, UniPoly};
use crate::expbound::exp_enclosure;
use crate::graphcore::Multigraph;
use crate::num::{abs, powu, two_pow, JsonValue, Rat, SpinParams};
use crate::zerofree::pairwise_radius;

/// Coefficients t_1..t_m of ln(p(x)/p(0)) at 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedLog {
    pub order: usize,
    pub coeffs: Vec<Rat>,
    pub z0: Rat,
}

impl TruncatedLog {
    /// Sum of t_k x^k for k <= m.
    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::from(0);
        for c in self.coeffs.iter().rev() {
            acc = (acc + c) * x;
        }
        acc
    }

    /// Formal exp of the truncated series, times z0, through degree `deg`.
    /// Agrees with the original polynomial up to degree min(m, deg).
    pub fn reconstruct(&self, deg: usize) -> UniPoly {
        // e' = s' e, so k e_k = sum_j j t_j e_{k-j}
        let mut e = vec![Rat::from(1)];
        for k in 1..=deg {
            let mut acc = Rat::from(0);
            for j in 1..=k.min(self.order) {
                acc += Rat::from(j as u64) * &self.coeffs[j - 1] * &e[k - j];
            }
            e.push(acc / Rat::from(k as u64));
        }
        UniPoly::new(e.into_iter().map(|c| c * &self.z0).collect())
    }
}

pub fn log_taylor(zpoly: &UniPoly, m: usize) -> Result<TruncatedLog> {
    let c = &zpoly.coeffs;
    if c[0] == 0 {
        return Err(SpinError::InvalidInput("zero constant term".into()));
    }
    let c0 = &c[0];
    let cn = |k: usize| -> Rat { c.get(k).map(|x| x / c0).unwrap_or_default() };
    let mut t: Vec<Rat> = Vec::with_capacity(m);
    for k in 1..=m {
        let mut s = Rat::from(0);
        for j in 1..k {
            let ck = cn(k - j);
            if ck != 0 {
                s += Rat::from(j as u64) * &t[j - 1] * ck;
            }
        }
        t.push(cn(k) - s / Rat::from(k as u64));
    }
    Ok(TruncatedLog { order: m, coeffs: t, z0: c0.clone() })
}

/// Bound on the tail sum_{k>m} |t_k| for n roots of modulus >= r.
pub fn tail_bound(n: usize, r: &Rat, m: usize) -> Rat {
    let inv = Rat::from(1) / r;
    Rat::from(n as u64) * powu(&inv, m as u64 + 1) / (Rat::from(1) - inv)
}

/// Smallest m >= 1 with n (1/r)^{m+1} / (1 - 1/r) <= eps/2.
pub fn choose_order(n: usize, r: &Rat, eps: &Rat) -> Result<usize> {
    if *r <= 1 {
        return Err(SpinError::InvalidInput("radius must exceed 1".into()));
    }
    if *eps <= 0 {
        return Err(SpinError::InvalidInput("eps must be positive".into()));
    }
    let half = eps / Rat::from(2);
    let mut m = 1;
    while tail_bound(n, r, m) > half {
        m += 1;
    }
    Ok(m)
}

#[derive(Clone, Debug, Serialize)]
pub struct FptasResult {
    #[serde(with = "crate::num::serde_rat")]
    pub estimate: Rat,
    #[serde(with = "crate::num::serde_rat")]
    pub lo: Rat,
    #[serde(with = "crate::num::serde_rat")]
    pub hi: Rat,
    /// Relative error bound claimed for `estimate`.
    #[serde(with = "crate::num::serde_rat")]
    pub eps: Rat,
    pub order: usize,
    #[serde(with = "crate::num::serde_rat")]
    pub edge_radius: Rat,
    #[serde(with = "crate::num::serde_rat")]
    pub disk_radius: Rat,
    pub isolated: usize,
    pub swapped: bool,
    #[serde(skip)]
    pub series: TruncatedLog,
}

impl FptasResult {
    pub fn json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).unwrap_or_default();
        v["estimate_decimal"] = serde_json::json!(crate::num::to_f64(&self.estimate));
        v["z0"] = self.series.z0.json();
        v
    }
}

fn strip_isolated(g: &Multigraph) -> (Multigraph, usize) {
    let deg = g.degrees();
    let mut map = vec![usize::MAX; g.n];
    let mut n = 0;
    for v in 0..g.n {
        if deg[v] > 0 {
            map[v] = n;
            n += 1;
        }
    }
    let edges = g.edges.iter().map(|&(a, b)| (map[a], map[b])).collect();
    (Multigraph { n, edges }, g.n - n)
}

/// Orientation (p or its swap) with a certified edge radius > 1.
fn oriented(p: &SpinParams) -> Result<(SpinParams, Rat, bool)> {
    if p.beta == p.gamma || abs(&p.sum()) <= 2 {
        return Err(SpinError::Region("needs beta != gamma and |beta + gamma| > 2".into()));
    }
    if let Some(r) = pairwise_radius(p) {
        return Ok((p.clone(), r, false));
    }
    let q = p.swapped();
    match pairwise_radius(&q) {
        Some(r) => Ok((q, r, true)),
        None => Err(SpinError::Region("no zero-free edge radius above 1".into())),
    }
}

/// Zero-free disk radius r^{min degree} for Z_G(x), along with the edge
/// radius r, after isolated vertices are removed.
pub fn certified_radius(g: &Multigraph, p: &SpinParams) -> Result<(Rat, Rat)> {
    let (h, _) = strip_isolated(g);
    let (_, r, _) = oriented(p)?;
    let d = h.degrees().into_iter().min().unwrap_or(1).max(1);
    Ok((powu(&r, d as u64), r))
}

/// Approximates Z_G at unit field with relative error at most eps: half of
/// eps goes to truncation, half to the final exponential.
pub fn fptas_eval(g: &Multigraph, p: &SpinParams, eps: &Rat) -> Result<FptasResult> {
    if *eps <= 0 || *eps >= 1 {
        return Err(SpinError::InvalidInput("eps must lie in (0, 1)".into()));
    }
    let (q, r, swapped) = oriented(p)?;
    let (h, isolated) = strip_isolated(g);
    let scale = two_pow(isolated as i64);
    if h.n == 0 {
        let v = scale.clone();
        let series = TruncatedLog { order: 0, coeffs: Vec::new(), z0: Rat::from(1) };
        return Ok(FptasResult {
            estimate: v.clone(),
            lo: v.clone(),
            hi: v,
            eps: eps.clone(),
            order: 0,
            edge_radius: r.clone(),
            disk_radius: r,
            isolated,
            swapped,
            series,
        });
    }
    let d = h.degrees().into_iter().min().unwrap_or(1);
    let big_r = powu(&r, d as u64);
    // tail <= eps/4 keeps e^tail - 1 below eps/2
    let m = choose_order(h.n, &big_r, &(eps / Rat::from(2)))?;
    let zpoly = exact::z_polynomial(&h, &q)?;
    let series = log_taylor(&zpoly, m)?;
    let s = series.eval(&Rat::from(1));
    let half = eps / Rat::from(2);
    let mut prec = (crate::num::ln_abs_f64(&half).abs() / std::f64::consts::LN_2) as u64 + 8;
    let (lo, hi) = loop {
        let (lo, hi) = exp_enclosure(&s, prec);
        if (&hi - &lo) / &lo <= half {
            break (lo, hi);
        }
        prec *= 2;
    };
    let z0 = &series.z0 * &scale;
    let (lo, hi) = if z0 > 0 { (&lo * &z0, &hi * &z0) } else { (&hi * &z0, &lo * &z0) };
    let estimate = (&lo + &hi) / Rat::from(2);
    Ok(FptasResult {
        estimate,
        lo,
        hi,
        eps: eps.clone(),
        order: m,
        edge_radius: r,
        disk_radius: big_r,
        isolated,
        swapped,
        series,
    })
}

/// |z0 e^{T_m(1)} / Z - 1| for m = 1..=max_m, measured with 256-bit
/// enclosures; entries below 2^-200 are reported as None.
pub fn truncation_errors(g: &Multigraph, p: &SpinParams, max_m: usize) -> Result<Vec<(usize, Option<f64>)>> {
    let (q, _, _) = oriented(p)?;
    let (h, _) = strip_isolated(g);
    let zpoly = exact::z_polynomial(&h, &q)?;
    let z = zpoly.eval(&Rat::from(1));
    let full = log_taylor(&zpoly, max_m)?;
    let ratio = &full.z0 / &z;
    let floor = two_pow(-200);
    let mut out = Vec::new();
    for m in 1..=max_m {
        let part = TruncatedLog { order: m, coeffs: full.coeffs[..m].to_vec(), z0: full.z0.clone() };
        let (lo, hi) = exp_enclosure(&part.eval(&Rat::from(1)), 256);
        let a = abs(&(&lo * &ratio - Rat::from(1)));
        let b = abs(&(&hi * &ratio - Rat::from(1)));
        let err = if a > b { a } else { b };
        out.push((m, if err < floor { None } else { Some(crate::num::to_f64(&err)) }));
    }
    Ok(out)
}

/// CSV of the truncated series at unit field: m, t_m, partial sum.
pub fn series_csv(t: &TruncatedLog) -> String {
    let mut s = String::from("# spin2 fptas series v1\nm,t_m,partial_sum\n");
    let mut acc = Rat::from(0);
    for (i, c) in t.coeffs.iter().enumerate() {
        acc += c;
        s.push_str(&format!("{},{},{}\n", i + 1, c, acc));
    }
    s
}
