//! Nonnegative coefficient bounds for truncated series.
//!
//! A [`Majorant`] bounds a sequence `e_m` by explicit values for `m <= n`
//! and by `c * g^m` for `m > n`. Products and rational operations of series
//! are bounded by the matching operations on majorants; the geometric tail of
//! a result is re-fitted by scanning rates and keeping the one that gives the
//! smallest tail at a reference radius.

use crate::tolerances::RADIUS_CAP;

#[derive(Debug, Clone, PartialEq)]
pub struct Majorant {
    pub head: Vec<f64>,
    pub c: f64,
    pub g: f64,
}

impl Majorant {
    pub fn zero(n: usize) -> Self {
        Majorant { head: vec![0.0; n + 1], c: 0.0, g: 0.0 }
    }

    pub fn order(&self) -> usize {
        self.head.len() - 1
    }

    pub fn has_tail(&self) -> bool {
        self.c > 0.0 && self.g > 0.0
    }

    pub fn ln_tail_at(&self, m: usize) -> f64 {
        if !self.has_tail() {
            f64::NEG_INFINITY
        } else {
            self.c.ln() + m as f64 * self.g.ln()
        }
    }

    pub fn at(&self, m: usize) -> f64 {
        if m < self.head.len() {
            self.head[m]
        } else if !self.has_tail() {
            0.0
        } else {
            self.ln_tail_at(m).exp()
        }
    }

    /// `sum_{m > n} c (g r)^m`, infinite when the tail does not converge at `r`.
    pub fn tail_sum(&self, r: f64) -> f64 {
        if !self.has_tail() {
            return 0.0;
        }
        let x = self.g * r;
        if x >= 1.0 {
            return f64::INFINITY;
        }
        if r == 0.0 {
            return 0.0;
        }
        self.c * (x.ln() * (self.order() + 1) as f64).exp() / (1.0 - x)
    }

    /// `sum_m e_m r^m` over all indices.
    pub fn sum_at(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for e in self.head.iter().rev() {
            acc = acc * r + e;
        }
        acc + self.tail_sum(r)
    }

    pub fn add(&self, other: &Majorant) -> Majorant {
        let n = self.order().min(other.order());
        let head = (0..=n).map(|m| self.head[m] + other.head[m]).collect::<Vec<_>>();
        let mut out = Majorant { head, c: 0.0, g: 0.0 };
        let l = self.order().max(other.order());
        let explicit: Vec<f64> = (n + 1..=l).map(|m| self.at(m) + other.at(m)).collect();
        let (a, b) = (self.clone(), other.clone());
        let floor = tail_floor(&[&a, &b]);
        let (c, g) = fit_tail(n, &explicit, floor, |lg| {
            ln_sum(&[tail_const(&a, lg), tail_const(&b, lg)])
        });
        out.c = c;
        out.g = g;
        out
    }

    pub fn scale(&self, s: f64) -> Majorant {
        let s = s.abs();
        Majorant { head: self.head.iter().map(|e| e * s).collect(), c: self.c * s, g: self.g }
    }

    /// Folds head entries beyond `n` into the tail.
    pub fn truncate(&self, n: usize) -> Majorant {
        if n >= self.order() {
            return self.clone();
        }
        let explicit: Vec<f64> = self.head[n + 1..].to_vec();
        let a = self.clone();
        let (c, g) = fit_tail(n, &explicit, tail_floor(&[&a]), |lg| tail_const(&a, lg));
        Majorant { head: self.head[..=n].to_vec(), c, g }
    }

    /// Majorant of the Cauchy product, with head length `min` of the two orders.
    pub fn mul(&self, other: &Majorant) -> Majorant {
        let (na, nb) = (self.order(), other.order());
        let n = na.min(nb);
        let l = na + nb;
        let av: Vec<f64> = (0..=l).map(|j| self.at(j)).collect();
        let bv: Vec<f64> = (0..=l).map(|j| other.at(j)).collect();
        let conv = |m: usize| -> f64 {
            let mut s = 0.0;
            for j in 0..=m {
                s += av[j] * bv[m - j];
            }
            s
        };
        let head: Vec<f64> = (0..=n).map(conv).collect();
        let explicit: Vec<f64> = (n + 1..=l).map(conv).collect();
        let (a, b) = (self, other);
        let floor = tail_floor(&[a, b]);
        let (c, g) = fit_tail(n, &explicit, floor, |lg| {
            // pairs j + m' = m > na + nb: at least one index is in a tail
            let mut terms = Vec::with_capacity(3);
            if a.has_tail() {
                if a.g.ln() > lg {
                    return f64::INFINITY;
                }
                terms.push(a.c.ln() + ln_weighted(&b.head, lg));
            }
            if b.has_tail() {
                if b.g.ln() > lg {
                    return f64::INFINITY;
                }
                terms.push(b.c.ln() + ln_weighted(&a.head, lg));
            }
            if a.has_tail() && b.has_tail() {
                let lx = a.g.ln() - lg;
                let ly = b.g.ln() - lg;
                if lx >= 0.0 || ly >= 0.0 {
                    return f64::INFINITY;
                }
                terms.push(
                    a.c.ln() + b.c.ln() + (na + 1) as f64 * lx + (nb + 1) as f64 * ly
                        - (-lx.exp()).ln_1p()
                        - (-ly.exp()).ln_1p(),
                );
            }
            ln_sum(&terms)
        });
        Majorant { head, c, g }
    }

    /// Majorant of `R / (1 - R)` where `self` majorizes `R`.
    ///
    /// Returns `None` when `R(0) >= 1` or no rate makes `R(1/g) < 1`.
    pub fn geometric_resolvent(&self) -> Option<Majorant> {
        let n = self.order();
        let r0 = self.head[0];
        if r0 >= 1.0 {
            return None;
        }
        let mut v = vec![0.0; n + 1];
        for m in 0..=n {
            let mut s = self.head[m];
            for l in 1..=m {
                s += self.head[l] * v[m - l];
            }
            v[m] = s / (1.0 - r0);
        }
        let r = self.clone();
        let lo = if r.has_tail() { r.g } else { 0.0 };
        let r_obj = objective_radius(lo);
        let best = choose_rate(lo, r_obj, n, |lg| {
            // ln R(1/gamma)
            let mut terms: Vec<f64> = r
                .head
                .iter()
                .enumerate()
                .filter(|(_, e)| **e > 0.0)
                .map(|(m, e)| e.ln() - m as f64 * lg)
                .collect();
            if r.has_tail() {
                let lx = r.g.ln() - lg;
                if lx >= 0.0 {
                    return f64::INFINITY;
                }
                terms.push(r.c.ln() + (n + 1) as f64 * lx - (-lx.exp()).ln_1p());
            }
            let lr = ln_sum(&terms);
            if lr >= 0.0 {
                return f64::INFINITY;
            }
            lr - (-lr.exp()).ln_1p()
        });
        let (c, g) = best?;
        Some(Majorant { head: v, c, g })
    }
}

fn tail_floor(ms: &[&Majorant]) -> f64 {
    ms.iter().filter(|m| m.has_tail()).map(|m| m.g).fold(0.0, f64::max)
}

/// `ln K` with `c g^m <= K gamma^m` for all `m`, given `ln gamma`.
fn tail_const(a: &Majorant, lg: f64) -> f64 {
    if !a.has_tail() {
        f64::NEG_INFINITY
    } else if a.g.ln() > lg {
        f64::INFINITY
    } else {
        a.c.ln()
    }
}

/// `ln sum_j h_j gamma^{-j}`.
fn ln_weighted(h: &[f64], lg: f64) -> f64 {
    let terms: Vec<f64> =
        h.iter().enumerate().filter(|(_, e)| **e > 0.0).map(|(j, e)| e.ln() - j as f64 * lg).collect();
    ln_sum(&terms)
}

pub(crate) fn ln_sum(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn objective_radius(rate: f64) -> f64 {
    if rate <= 0.0 {
        RADIUS_CAP
    } else {
        RADIUS_CAP.min(0.9 / rate)
    }
}

/// Picks `gamma > lo` minimizing `ln C(gamma) + (n+1) ln(gamma r) - ln(1 - gamma r)`.
fn choose_rate<F: Fn(f64) -> f64>(lo: f64, r: f64, n: usize, ln_c: F) -> Option<(f64, f64)> {
    let hi = 1.0 / r;
    let start = if lo > 0.0 { lo * (1.0 + 1e-9) } else { 1e-6_f64.min(hi * 0.5) };
    if start >= hi {
        // nothing certifiable at r; fall back to the smallest admissible rate
        let lg = (lo * 1.001).max(1e-300).ln();
        let lc = ln_c(lg);
        return lc.is_finite().then(|| (lc.exp(), lg.exp()));
    }
    let objective = |lg: f64| -> f64 {
        let lc = ln_c(lg);
        if !lc.is_finite() {
            return f64::INFINITY;
        }
        let lx = lg + r.ln();
        lc + (n + 1) as f64 * lx - (-lx.exp()).ln_1p()
    };
    let (a, b) = (start.ln(), hi.ln());
    let coarse = 160;
    let mut best = (f64::INFINITY, a);
    for k in 0..coarse {
        let lg = a + (b - a) * k as f64 / coarse as f64;
        let o = objective(lg);
        if o < best.0 {
            best = (o, lg);
        }
    }
    if !best.0.is_finite() {
        // nothing converges at r: take the smallest rate with a finite constant
        let top = 1e8_f64.ln().max(b + 1.0);
        return (0..=coarse).find_map(|k| {
            let lg = b + (top - b) * k as f64 / coarse as f64;
            let lc = ln_c(lg);
            lc.is_finite().then(|| (lc.exp(), lg.exp()))
        });
    }
    let step = (b - a) / coarse as f64;
    let center = best.1;
    for k in -20..=20 {
        let lg = center + step * k as f64 / 20.0;
        if lg < a || lg >= b {
            continue;
        }
        let o = objective(lg);
        if o < best.0 {
            best = (o, lg);
        }
    }
    let lc = ln_c(best.1);
    Some((lc.exp(), best.1.exp()))
}

/// Fits `(c, g)` with `M_m <= c g^m` for all `m > n`, where `explicit[k]`
/// bounds `M_{n+1+k}` and `beyond(ln gamma)` gives `ln K` with
/// `M_m <= K gamma^m` past the explicit range.
pub(crate) fn fit_tail<F: Fn(f64) -> f64>(n: usize, explicit: &[f64], floor: f64, beyond: F) -> (f64, f64) {
    let any_explicit = explicit.iter().any(|e| *e > 0.0);
    if !any_explicit && beyond(0.0) == f64::NEG_INFINITY && floor == 0.0 {
        return (0.0, 0.0);
    }
    let emp = empirical_rate(n, explicit);
    let r_obj = objective_radius(floor.max(emp));
    let ln_c = |lg: f64| -> f64 {
        let mut terms = Vec::with_capacity(explicit.len() + 1);
        let mut m = f64::NEG_INFINITY;
        for (k, e) in explicit.iter().enumerate() {
            if *e > 0.0 {
                let v = e.ln() - (n + 1 + k) as f64 * lg;
                if v > m {
                    m = v;
                }
            }
        }
        terms.push(m);
        terms.push(beyond(lg));
        terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    };
    match choose_rate(floor, r_obj, n, ln_c) {
        Some((c, g)) if c.is_finite() => (c, g),
        _ => (f64::INFINITY, floor.max(emp).max(1.0)),
    }
}

/// Root-test estimate `max_k explicit[k]^(1/m)`; ratios of neighbours are
/// useless when every other coefficient nearly vanishes.
fn empirical_rate(n: usize, explicit: &[f64]) -> f64 {
    explicit
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > 0.0)
        .map(|(k, e)| (e.ln() / (n + 1 + k) as f64).exp())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(n: usize, c: f64, g: f64) -> Majorant {
        Majorant { head: (0..=n).map(|m| c * g.powi(m as i32)).collect(), c, g }
    }

    #[test]
    fn product_of_geometrics_bounds_true_coefficients() {
        let a = geometric(20, 1.0, 0.5);
        let b = geometric(20, 2.0, 0.3);
        let p = a.mul(&b);
        for m in 0..200 {
            let exact: f64 = (0..=m).map(|j| 0.5f64.powi(j as i32) * 2.0 * 0.3f64.powi((m - j) as i32)).sum();
            assert!(p.at(m) >= exact * (1.0 - 1e-12), "m={m} bound {} exact {exact}", p.at(m));
        }
        // tail should stay close to the true rate
        assert!(p.g < 0.6, "rate {}", p.g);
    }

    #[test]
    fn resolvent_bounds_neumann_series() {
        // R = 0.4 z, R/(1-R) = sum_{m>=1} 0.4^m z^m
        let mut r = Majorant::zero(10);
        r.head[1] = 0.4;
        let v = r.geometric_resolvent().unwrap();
        for m in 1..100 {
            assert!(v.at(m) >= 0.4f64.powi(m as i32) * (1.0 - 1e-12));
        }
        assert!(v.g < 0.45);
    }

    #[test]
    fn truncation_keeps_bound() {
        let a = geometric(40, 1.0, 0.7);
        let t = a.truncate(10);
        for m in 0..300 {
            assert!(t.at(m) >= a.at(m) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn polynomials_have_no_tail() {
        let mut a = Majorant::zero(5);
        a.head[1] = 1.0;
        let p = a.mul(&a);
        assert_eq!(p.head[2], 1.0);
        assert_eq!(p.c, 0.0);
        let mut b = Majorant::zero(3);
        b.head[3] = 1.0;
        let q = b.mul(&b);
        assert!(q.at(6) >= 1.0 - 1e-12);
    }
}
