//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

/// Exhaustive optimum (max copies per user, pairs used) for covering K_n
/// with `split` pairs of fan-out 4 and `unsplit` pairs of fan-out 1.
///
/// Depth-first search that always branches on how the first uncovered user
/// pair gets covered (which pair, which orientation). Every feasible
/// assignment contains one of the branches, so the search is complete.
pub fn exhaustive_optimum(n: usize, split: usize, unsplit: usize) -> Option<(usize, usize)> {
    if n < 2 {
        return None;
    }
    for d in 1..n {
        for p in 1..=split + unsplit {
            for s in 0..=p.min(split) {
                let u = p - s;
                if u > unsplit {
                    continue;
                }
                let caps: Vec<u32> = std::iter::repeat_n(4, s)
                    .chain(std::iter::repeat_n(1, u))
                    .collect();
                let mut st = Search {
                    n,
                    d,
                    caps: &caps,
                    plus: vec![0; caps.len()],
                    minus: vec![0; caps.len()],
                };
                if st.dfs() {
                    return Some((d, p));
                }
            }
        }
    }
    None
}

struct Search<'a> {
    n: usize,
    d: usize,
    caps: &'a [u32],
    plus: Vec<u64>,
    minus: Vec<u64>,
}

impl Search<'_> {
    fn covered(&self, x: usize, y: usize) -> bool {
        let (bx, by) = (1u64 << x, 1u64 << y);
        (0..self.caps.len()).any(|j| {
            (self.plus[j] & bx != 0 && self.minus[j] & by != 0)
                || (self.plus[j] & by != 0 && self.minus[j] & bx != 0)
        })
    }

    fn degree(&self, x: usize) -> usize {
        let b = 1u64 << x;
        (0..self.caps.len())
            .map(|j| usize::from(self.plus[j] & b != 0) + usize::from(self.minus[j] & b != 0))
            .sum()
    }

    fn first_uncovered(&self) -> Option<(usize, usize)> {
        for x in 0..self.n {
            for y in x + 1..self.n {
                if !self.covered(x, y) {
                    return Some((x, y));
                }
            }
        }
        None
    }

    fn dfs(&mut self) -> bool {
        let Some((x, y)) = self.first_uncovered() else {
            return true;
        };
        let mut fresh_tried: Vec<u32> = Vec::new();
        for j in 0..self.caps.len() {
            let untouched = self.plus[j] == 0 && self.minus[j] == 0;
            if untouched {
                if fresh_tried.contains(&self.caps[j]) {
                    continue;
                }
                fresh_tried.push(self.caps[j]);
            }
            for (a, b) in [(x, y), (y, x)] {
                let (sp, sm) = (self.plus[j], self.minus[j]);
                self.plus[j] |= 1 << a;
                self.minus[j] |= 1 << b;
                let ok = self.plus[j].count_ones() <= self.caps[j]
                    && self.minus[j].count_ones() <= self.caps[j]
                    && self.degree(a) <= self.d
                    && self.degree(b) <= self.d;
                if ok && self.dfs() {
                    return true;
                }
                self.plus[j] = sp;
                self.minus[j] = sm;
            }
        }
        false
    }
}

/// Score function written out segment by segment.
pub fn reference_score(r: f64) -> f64 {
    let seg = |x0: f64, y0: f64, x1: f64, y1: f64| {
        y0 + (y1 - y0) * (r.log10() - x0.log10()) / (x1.log10() - x0.log10())
    };
    if r < 0.1 {
        0.0
    } else if r <= 1.0 {
        seg(0.1, 0.25, 1.0, 0.75)
    } else if r <= 5.0 {
        seg(1.0, 0.75, 5.0, 0.875)
    } else if r <= 10.0 {
        seg(5.0, 0.875, 10.0, 0.925)
    } else if r <= 1e12 {
        seg(10.0, 0.925, 1e12, 1.0)
    } else {
        1.0
    }
}

/// Inverse of [`reference_score`] by bisection on log10(r).
pub fn reference_inverse(w: f64) -> Option<f64> {
    if w <= 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (-1.0f64, 12.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if reference_score(10f64.powf(mid)) < w {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(10f64.powf(0.5 * (lo + hi)))
}

/// Network score as the n-th root of the product of link scores.
pub fn reference_network_score(skrs: &[f64]) -> f64 {
    let prod: f64 = skrs.iter().map(|&r| reference_score(r)).product();
    prod.powf(1.0 / skrs.len() as f64)
}

pub fn reference_aeskr(skrs: &[f64]) -> Option<f64> {
    reference_inverse(reference_network_score(skrs))
}

/// Root of `1 - 2 h(q)` on (0, 0.5) by bisection.
pub fn bbm92_threshold_bisection() -> f64 {
    let h = |q: f64| -q * q.log2() - (1.0 - q) * (1.0 - q).log2();
    let (mut lo, mut hi) = (1e-6f64, 0.5 - 1e-9);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - 2.0 * h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
