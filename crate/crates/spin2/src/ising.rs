//! Two-terminal gadgets whose pair matrix is N [[M0, 1], [1, M1]] with
//! M0, M1 large and M1/M0 just above 1.

use std::sync::Arc;

use crate::error::{Result, SpinError};
use crate::exact::{self, PairMatrix};
use crate::expbound::{gt_exp, lt_exp};
use crate::gadgets::{self, append_rooted, RatioGadget, Realized, Realizer};
use crate::graphcore::Multigraph;
use crate::num::{ln_abs_f64, powu, round_dyadic, to_f64, JsonValue, Rat, SpinParams};

use malachite::base::rounding_modes::RoundingMode::Nearest;

/// Endpoint decoration used when beta + gamma = 0: every edge gets a copy
/// of `gadget` (ratio r) at each endpoint, which turns (beta, gamma) into
/// (beta/r, gamma r) up to the factor h0^2 r per edge.
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub gadget: RatioGadget,
    pub r: Rat,
    pub params: SpinParams,
}

#[derive(Clone, Debug)]
pub struct IsingGadget {
    pub params: SpinParams,
    pub u: usize,
    pub v: usize,
    pub n: Rat,
    pub m0: Rat,
    pub m1: Rat,
    pub pair: PairMatrix<Rat>,
    pub k: u64,
    /// Ratio of the terminal gadget G1.
    pub ratio: Rat,
    pub terminal: Realized,
    pub perturbation: Option<Perturbation>,
    realizer: Arc<Realizer>,
}

impl IsingGadget {
    /// Expands the full graph: 2k parallel length-2 paths between u = 0 and
    /// v = 1, middles 2..=2k+1, G1 attached at both terminals.
    pub fn graph(&self) -> Result<Multigraph> {
        let g1 = self.terminal.gadget(&self.realizer)?;
        let mut edges = Vec::new();
        for i in 0..2 * self.k as usize {
            edges.push((0, 2 + i));
            edges.push((1, 2 + i));
        }
        let mut n = 2 + 2 * self.k as usize;
        append_rooted(&mut edges, &mut n, &g1, 0);
        append_rooted(&mut edges, &mut n, &g1, 1);
        let inner = Multigraph { n, edges };
        Ok(match &self.perturbation {
            None => inner,
            Some(pt) => decorate(&inner, &pt.gadget),
        })
    }

    /// Vertex count of `graph()` without expanding it.
    pub fn vertex_count(&self) -> usize {
        let t = self.terminal.vertex_count(&self.realizer) - 1;
        let base = 2 + 2 * self.k as usize + 2 * t;
        match &self.perturbation {
            None => base,
            Some(pt) => {
                let g1_edges = self.terminal_edge_count();
                let edges = 4 * self.k as usize + 2 * g1_edges;
                base + 2 * edges * (pt.gadget.vertex_count() - 1)
            }
        }
    }

    fn terminal_edge_count(&self) -> usize {
        match &self.terminal {
            Realized::Gadget(g) => g.graph.edges.len(),
            Realized::Exp(e) => e.gadget(&self.realizer).map(|g| g.graph.edges.len()).unwrap_or(0),
        }
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::json!({
            "beta": self.params.beta.json(),
            "gamma": self.params.gamma.json(),
            "u": self.u,
            "v": self.v,
            "k": self.k,
            "N": self.n.json(),
            "M0": self.m0.json(),
            "M1": self.m1.json(),
            "pair": self.pair.json(),
            "terminal_ratio": self.ratio.json(),
            "perturbation_r": self.perturbation.as_ref().map(|p| p.r.json()),
            "vertices": self.vertex_count(),
        })
    }
}

/// Each edge keeps its endpoints and gains a copy of h at both of them.
fn decorate(g: &Multigraph, h: &RatioGadget) -> Multigraph {
    let mut edges = Vec::new();
    let mut n = g.n;
    for &(a, b) in &g.edges {
        edges.push((a, b));
        append_rooted(&mut edges, &mut n, h, a);
        append_rooted(&mut edges, &mut n, h, b);
    }
    Multigraph { n, edges }
}

/// Smallest k >= 1 with base^k > e^eps m_star.
fn smallest_k(base: &Rat, m_star: &Rat, eps: &Rat) -> u64 {
    let est = ((ln_abs_f64(m_star) + to_f64(eps)) / ln_abs_f64(base)).floor();
    let mut k = if est.is_finite() && est > 2.0 { est as u64 - 1 } else { 1 };
    let ok = |k: u64| gt_exp(&(powu(base, k) / m_star), eps);
    while k > 1 && ok(k - 1) {
        k -= 1;
    }
    while !ok(k) {
        k += 1;
    }
    k
}

pub fn realize_ising(p: &SpinParams, m_star: &Rat, eps: &Rat) -> Result<IsingGadget> {
    realize_ising_with_spread(p, m_star, eps, &(eps / Rat::from(2)))
}

/// As `realize_ising`, with the terminal ratio R confined to
/// (rho^k, rho^k e^spread), rho = (beta^2+1)/(gamma^2+1). The spread is
/// clamped to at most min(eps/2, 1).
pub fn realize_ising_with_spread(p: &SpinParams, m_star: &Rat, eps: &Rat, spread: &Rat) -> Result<IsingGadget> {
    p.require_gamma_region()?;
    if *m_star <= 1 {
        return Err(SpinError::InvalidInput("M* must exceed 1".into()));
    }
    if *eps <= 0 || *spread <= 0 {
        return Err(SpinError::InvalidInput("eps must be positive".into()));
    }
    if p.sum() == 0 {
        return perturbed(p, m_star, eps, spread);
    }
    let one = Rat::from(1);
    let b2 = &p.beta * &p.beta + &one;
    let g2 = &p.gamma * &p.gamma + &one;
    let s2 = p.sum() * p.sum();
    let base = &b2 * &g2 / &s2;
    let k = smallest_k(&base, m_star, eps);
    let rho_k = powu(&(&b2 / &g2), k);
    let s = spread.clone().min(eps / Rat::from(2)).min(one.clone());
    let target = &rho_k * (&one + &s / Rat::from(2));
    let realizer = gadgets::realizer(p)?;
    let terminal = realizer.realize_ratio(&target, &(&s / Rat::from(8)))?;
    let r = terminal.ratio();
    let q = &r / &rho_k;
    if !(q > 1 && lt_exp(&q, &s)) {
        return Err(SpinError::Check(format!("terminal ratio {r} outside (rho^k, rho^k e^spread)")));
    }
    let act = terminal.activity();
    let z00 = powu(&b2, 2 * k) * &act.z0 * &act.z0;
    let z01 = powu(&s2, k) * &act.z0 * &act.z1;
    let z11 = powu(&g2, 2 * k) * &act.z1 * &act.z1;
    let m0 = &z00 / &z01;
    let m1 = &z11 / &z01;
    let out = IsingGadget {
        params: p.clone(),
        u: 0,
        v: 1,
        pair: PairMatrix { m: [[z00, z01.clone()], [z01.clone(), z11]] },
        n: z01,
        m0,
        m1,
        k,
        ratio: r,
        terminal,
        perturbation: None,
        realizer,
    };
    check_certificate(&out, m_star, eps)?;
    Ok(out)
}

fn perturbed(p: &SpinParams, m_star: &Rat, eps: &Rat, spread: &Rat) -> Result<IsingGadget> {
    let one = Rat::from(1);
    if p.beta <= 0 {
        return Err(SpinError::Region("beta + gamma = 0 needs beta > 0".into()));
    }
    let hi = &one + &one / &p.beta;
    let target = round_dyadic(&(&one + &one / (Rat::from(2) * &p.beta)), -20, Nearest);
    let e = (&one - &one / &target).min(&one - &target / &hi) / Rat::from(2);
    let h = gadgets::realize_dense(p, &target, &e)?;
    let r = h.ratio();
    if !(r > 1 && r < hi) {
        return Err(SpinError::Check(format!("perturbation ratio {r} outside (1, 1 + 1/beta)")));
    }
    let q = SpinParams::new(&p.beta / &r, &p.gamma * &r);
    let mut inner = realize_ising_with_spread(&q, m_star, eps, spread)?;
    let g1_edges = inner.terminal_edge_count();
    let edges = 4 * inner.k + 2 * g1_edges as u64;
    let h0 = &h.activity.z0;
    let scale = powu(&(h0 * h0 * &r), edges);
    for row in inner.pair.m.iter_mut() {
        for x in row.iter_mut() {
            *x *= &scale;
        }
    }
    inner.n *= &scale;
    inner.params = p.clone();
    inner.perturbation = Some(Perturbation { gadget: h, r, params: q });
    Ok(inner)
}

fn check_certificate(g: &IsingGadget, m_star: &Rat, eps: &Rat) -> Result<()> {
    let ok = g.m0 > *m_star && g.m1 > *m_star && g.m1 > g.m0 && lt_exp(&(&g.m1 / &g.m0), eps);
    if !ok {
        return Err(SpinError::Check("Ising certificate violates M0, M1 > M*, M1/M0 in (1, e^eps)".into()));
    }
    Ok(())
}

/// Brute-force pair matrix of the expanded graph, when within the cap.
pub fn oracle_pair(g: &IsingGadget) -> Result<PairMatrix<Rat>> {
    let graph = g.graph()?;
    exact::check_cap(graph.n)?;
    exact::pair_matrix_real(&graph, g.u, g.v, &g.params, &vec![Rat::from(1); graph.n])
}
