//! Exact comparisons against e^t for rational t, via rational enclosures.

use std::cmp::Ordering;

use malachite::base::rounding_modes::RoundingMode::{Ceiling, Floor};

use crate::num::{abs, round_dyadic, round_rel, Rat};

/// Series value of e^u for a dyadic u with |u| <= 1/2, as an enclosure with
/// absolute width about 2^-w.
fn series(u: &Rat, w: u64) -> (Rat, Rat) {
    let tol = crate::num::two_pow(-(w as i64));
    let mut sum = Rat::from(1);
    let mut term = Rat::from(1);
    let mut k: u64 = 0;
    loop {
        k += 1;
        term = &term * u / Rat::from(k);
        sum += &term;
        // remainder after the k-th term is at most 2 |u|^{k+1}/(k+1)!
        let rem = abs(&term) * abs(u) / Rat::from(k + 1) * Rat::from(2);
        if rem < tol {
            let lo = round_dyadic(&(&sum - &rem), -(w as i64) - 4, Floor);
            let hi = round_dyadic(&(&sum + &rem), -(w as i64) - 4, Ceiling);
            return (lo, hi);
        }
    }
}

fn exp_dyadic(t: &Rat, prec: u64) -> (Rat, Rat) {
    if *t == 0 {
        return (Rat::from(1), Rat::from(1));
    }
    let l = t.floor_log_base_2_abs();
    let s: u64 = if l >= -1 { (l + 2) as u64 } else { 0 };
    let u = t / crate::num::two_pow(s as i64);
    let w = prec + s + 8;
    let (mut lo, mut hi) = series(&u, w);
    for _ in 0..s {
        lo = round_rel(&(&lo * &lo), w, Floor);
        hi = round_rel(&(&hi * &hi), w, Ceiling);
    }
    (lo, hi)
}

/// Rational bounds lo <= e^t <= hi with relative width roughly 2^-prec.
pub fn exp_enclosure(t: &Rat, prec: u64) -> (Rat, Rat) {
    if *t == 0 {
        return (Rat::from(1), Rat::from(1));
    }
    let scale = -(prec as i64) - 8;
    let t_lo = round_dyadic(t, scale, Floor);
    let t_hi = round_dyadic(t, scale, Ceiling);
    if t_lo == t_hi {
        return exp_dyadic(&t_lo, prec);
    }
    let (lo, _) = exp_dyadic(&t_lo, prec);
    let (_, hi) = exp_dyadic(&t_hi, prec);
    (lo, hi)
}

/// Compares x with e^t exactly. For rational t != 0 and rational x, the
/// two are never equal, so refinement always terminates.
pub fn cmp_exp(x: &Rat, t: &Rat) -> Ordering {
    if *x <= 0 {
        return Ordering::Less;
    }
    if *t == 0 {
        return x.cmp(&Rat::from(1));
    }
    let mut prec: u64 = 64;
    loop {
        let (lo, hi) = exp_enclosure(t, prec);
        if *x < lo {
            return Ordering::Less;
        }
        if *x > hi {
            return Ordering::Greater;
        }
        prec *= 2;
    }
}

/// x < e^t
pub fn lt_exp(x: &Rat, t: &Rat) -> bool {
    cmp_exp(x, t) == Ordering::Less
}

/// x > e^t
pub fn gt_exp(x: &Rat, t: &Rat) -> bool {
    cmp_exp(x, t) == Ordering::Greater
}

/// value strictly inside (e^-eps R, e^eps R); R may be negative.
pub fn in_window(value: &Rat, target: &Rat, eps: &Rat) -> bool {
    if *target == 0 || *value == 0 {
        return false;
    }
    let q = value / target;
    if q <= 0 {
        return false;
    }
    gt_exp(&q, &-eps) && lt_exp(&q, eps)
}
