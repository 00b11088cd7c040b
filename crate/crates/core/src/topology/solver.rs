//! Minimal channel assignments for a full mesh.
//!
//! Covering all user pairs is a biclique-cover problem: each conjugate pair
//! `k` links every holder of `+k` with every holder of `-k`. Assignments are
//! ranked lexicographically by (max channel copies per user, conjugate pairs
//! used). A grouping construction gives the initial upper bound; simulated
//! annealing over per-user channel states then looks for better objectives,
//! trying the smallest degree bound first and the fewest pairs second.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ChannelAssignment, Grant, Link, User, SPLIT_FANOUT};
use crate::error::{Error, Result};
use crate::grid::{ConjugatePair, Grid, LogicalChannel};

const PLUS: u8 = 1;
const MINUS: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub seed: u64,
    pub restarts: u32,
    pub iterations: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            seed: 0,
            restarts: 4,
            iterations: 200_000,
        }
    }
}

/// (max channel copies held by one user, conjugate pairs used); smaller is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Objective {
    pub max_channels: usize,
    pub pairs_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOutcome {
    pub assignment: ChannelAssignment,
    pub objective: Objective,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    pair: ConjugatePair,
    cap: u8,
}

fn covers(a: u8, b: u8) -> bool {
    (a & PLUS != 0 && b & MINUS != 0) || (a & MINUS != 0 && b & PLUS != 0)
}

fn weight(s: u8) -> u32 {
    u32::from(s & PLUS != 0) + u32::from(s & MINUS != 0)
}

fn plus_bit(s: u8) -> u8 {
    s & PLUS
}

fn minus_bit(s: u8) -> u8 {
    (s & MINUS) >> 1
}

/// Most links one pair can serve with `cap` ports per side.
fn max_links(cap: usize) -> usize {
    let mut best = 0;
    for both in 0..=cap {
        for x in 0..=cap - both {
            for y in 0..=cap - both {
                let links = both * both.saturating_sub(1) / 2 + both * (x + y) + x * y;
                best = best.max(links);
            }
        }
    }
    best
}

/// Channel states indexed by `slot * n + user`.
#[derive(Debug, Clone)]
struct Layout {
    n: usize,
    states: Vec<u8>,
}

impl Layout {
    fn empty(n: usize, slots: usize) -> Self {
        Layout {
            n,
            states: vec![0; n * slots],
        }
    }

    fn get(&self, slot: usize, user: usize) -> u8 {
        self.states[slot * self.n + user]
    }

    fn set(&mut self, slot: usize, user: usize, s: u8) {
        self.states[slot * self.n + user] = s;
    }

    fn slots(&self) -> usize {
        self.states.len() / self.n.max(1)
    }

    fn degree(&self, user: usize) -> usize {
        (0..self.slots())
            .map(|j| weight(self.get(j, user)) as usize)
            .sum()
    }

    fn covered(&self, u: usize, v: usize) -> bool {
        (0..self.slots()).any(|j| covers(self.get(j, u), self.get(j, v)))
    }

    fn uncovered(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in u + 1..self.n {
                if !self.covered(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    fn used_slots(&self) -> Vec<usize> {
        (0..self.slots())
            .filter(|&j| (0..self.n).any(|i| self.get(j, i) != 0))
            .collect()
    }

    fn objective(&self) -> Objective {
        Objective {
            max_channels: (0..self.n).map(|i| self.degree(i)).max().unwrap_or(0),
            pairs_used: self.used_slots().len(),
        }
    }

    /// Drops every channel copy not needed for coverage, highest slot first.
    fn prune(&mut self) {
        for j in (0..self.slots()).rev() {
            for i in (0..self.n).rev() {
                for bit in [MINUS, PLUS] {
                    let s = self.get(j, i);
                    if s & bit == 0 {
                        continue;
                    }
                    self.set(j, i, s & !bit);
                    let still = (0..self.n).filter(|&x| x != i).all(|x| {
                        let was = covers(s, self.get(j, x));
                        !was || self.covered(i, x)
                    });
                    if !still {
                        self.set(j, i, s);
                    }
                }
            }
        }
    }
}

/// Users split into groups of the fan-out size; one split pair per group pair,
/// and each group internally covered by bit-indexed bipartitions whose halves
/// from two groups share one split pair.
fn grouped_construction(n: usize, split: &[Slot], unsplit: &[Slot]) -> Option<Layout> {
    let total = split.len() + unsplit.len();
    let fanout = SPLIT_FANOUT as usize;
    if !split.is_empty() {
        let members: Vec<usize> = (0..n).collect();
        let groups: Vec<&[usize]> = members.chunks(fanout).collect();
        let largest = groups.iter().map(|g| g.len()).max().unwrap_or(0);
        let levels = (usize::BITS - (largest.max(1) - 1).leading_zeros()) as usize;
        let g = groups.len();
        let needed = g * (g - 1) / 2 + levels * g.div_ceil(2);
        if needed <= split.len() {
            let mut layout = Layout::empty(n, total);
            let mut next = 0;
            for x in 0..g {
                for y in x + 1..g {
                    for &u in groups[x] {
                        layout.set(next, u, PLUS);
                    }
                    for &v in groups[y] {
                        layout.set(next, v, MINUS);
                    }
                    next += 1;
                }
            }
            for level in 0..levels {
                for chunk in groups.chunks(2) {
                    for group in chunk {
                        for (pos, &u) in group.iter().enumerate() {
                            let side = if pos >> level & 1 == 0 { PLUS } else { MINUS };
                            layout.set(next, u, side);
                        }
                    }
                    next += 1;
                }
            }
            layout.prune();
            return Some(layout);
        }
    }
    // one pair per link, unsplit pairs first
    let links = n * n.saturating_sub(1) / 2;
    if links > total {
        return None;
    }
    let mut layout = Layout::empty(n, total);
    let mut j = 0;
    for u in 0..n {
        for v in u + 1..n {
            let slot = if j < unsplit.len() {
                split.len() + j
            } else {
                j - unsplit.len()
            };
            layout.set(slot, u, PLUS);
            layout.set(slot, v, MINUS);
            j += 1;
        }
    }
    Some(layout)
}

struct Anneal<'a> {
    n: usize,
    caps: &'a [u8],
    max_degree: u32,
    layout: Layout,
    plus: Vec<u8>,
    minus: Vec<u8>,
    degree: Vec<u32>,
    cover: Vec<u16>,
    uncovered: usize,
    overflow: u32,
}

impl<'a> Anneal<'a> {
    fn new(n: usize, caps: &'a [u8], max_degree: u32) -> Self {
        let slots = caps.len();
        Anneal {
            n,
            caps,
            max_degree,
            layout: Layout::empty(n, slots),
            plus: vec![0; slots],
            minus: vec![0; slots],
            degree: vec![0; n],
            cover: vec![0; n * n],
            uncovered: n * n.saturating_sub(1) / 2,
            overflow: 0,
        }
    }

    fn overflow_at(&self, slot: usize, user: usize, plus: u8, minus: u8, degree: u32) -> u32 {
        let cap = self.caps[slot];
        let _ = user;
        u32::from(plus.saturating_sub(cap))
            + u32::from(minus.saturating_sub(cap))
            + degree.saturating_sub(self.max_degree)
    }

    fn after(&self, slot: usize, user: usize, to: u8) -> (u8, u8, u32) {
        let from = self.layout.get(slot, user);
        (
            self.plus[slot] - plus_bit(from) + plus_bit(to),
            self.minus[slot] - minus_bit(from) + minus_bit(to),
            self.degree[user] - weight(from) + weight(to),
        )
    }

    fn delta(&self, slot: usize, user: usize, to: u8) -> f64 {
        let from = self.layout.get(slot, user);
        let mut d_uncov: i64 = 0;
        for x in 0..self.n {
            if x == user {
                continue;
            }
            let other = self.layout.get(slot, x);
            let (was, now) = (covers(from, other), covers(to, other));
            if was == now {
                continue;
            }
            let c = self.cover[user * self.n + x];
            if now && c == 0 {
                d_uncov -= 1;
            } else if was && c == 1 {
                d_uncov += 1;
            }
        }
        let before = self.overflow_at(
            slot,
            user,
            self.plus[slot],
            self.minus[slot],
            self.degree[user],
        );
        let (p, m, d) = self.after(slot, user, to);
        let after = self.overflow_at(slot, user, p, m, d);
        d_uncov as f64 + after as f64 - before as f64
    }

    fn apply(&mut self, slot: usize, user: usize, to: u8) {
        let from = self.layout.get(slot, user);
        for x in 0..self.n {
            if x == user {
                continue;
            }
            let other = self.layout.get(slot, x);
            let (was, now) = (covers(from, other), covers(to, other));
            if was == now {
                continue;
            }
            let (a, b) = (user * self.n + x, x * self.n + user);
            if now {
                if self.cover[a] == 0 {
                    self.uncovered -= 1;
                }
                self.cover[a] += 1;
                self.cover[b] += 1;
            } else {
                self.cover[a] -= 1;
                self.cover[b] -= 1;
                if self.cover[a] == 0 {
                    self.uncovered += 1;
                }
            }
        }
        let before = self.overflow_at(
            slot,
            user,
            self.plus[slot],
            self.minus[slot],
            self.degree[user],
        );
        let (p, m, d) = self.after(slot, user, to);
        let after = self.overflow_at(slot, user, p, m, d);
        self.plus[slot] = p;
        self.minus[slot] = m;
        self.degree[user] = d;
        self.overflow = self.overflow + after - before;
        self.layout.set(slot, user, to);
    }

    fn random_uncovered(&self, rng: &mut ChaCha8Rng) -> Option<(usize, usize)> {
        if self.uncovered == 0 {
            return None;
        }
        let total = self.n * self.n;
        let start = rng.gen_range(0..total);
        (0..total)
            .map(|k| (start + k) % total)
            .map(|idx| (idx / self.n, idx % self.n))
            .find(|&(u, v)| u < v && self.cover[u * self.n + v] == 0)
    }

    fn run(&mut self, rng: &mut ChaCha8Rng, iterations: u64) -> bool {
        let slots = self.caps.len();
        let (t_hot, t_cold) = (1.0f64, 0.02f64);
        for it in 0..iterations {
            if self.uncovered == 0 && self.overflow == 0 {
                return true;
            }
            let temp = t_hot * (t_cold / t_hot).powf(it as f64 / iterations as f64);
            let (slot, user, to) = match self.random_uncovered(rng) {
                Some((u, v)) if rng.gen_bool(0.6) => {
                    let (me, other) = if rng.gen_bool(0.5) { (u, v) } else { (v, u) };
                    let slot = rng.gen_range(0..slots);
                    let mine = self.layout.get(slot, me);
                    let want = match self.layout.get(slot, other) {
                        PLUS => MINUS,
                        MINUS => PLUS,
                        _ if rng.gen_bool(0.5) => PLUS,
                        _ => MINUS,
                    };
                    (slot, me, mine | want)
                }
                _ => {
                    let slot = rng.gen_range(0..slots);
                    let user = rng.gen_range(0..self.n);
                    let current = self.layout.get(slot, user);
                    let to = if current != 0 && rng.gen_bool(0.5) {
                        0
                    } else {
                        (current + rng.gen_range(1..4u8)) % 4
                    };
                    (slot, user, to)
                }
            };
            if to == self.layout.get(slot, user) {
                continue;
            }
            let d = self.delta(slot, user, to);
            if d <= 0.0 || rng.gen::<f64>() < (-d / temp).exp() {
                self.apply(slot, user, to);
            }
        }
        self.uncovered == 0 && self.overflow == 0
    }
}

struct Instance {
    n: usize,
    split: Vec<Slot>,
    unsplit: Vec<Slot>,
    opts: SolveOptions,
}

impl Instance {
    fn slots_for(&self, pairs: usize) -> Vec<Slot> {
        let s = pairs.min(self.split.len());
        let u = (pairs - s).min(self.unsplit.len());
        self.split[..s]
            .iter()
            .chain(self.unsplit[..u].iter())
            .copied()
            .collect()
    }

    fn could_cover(&self, slots: &[Slot]) -> bool {
        let links = self.n * (self.n - 1) / 2;
        slots
            .iter()
            .map(|s| max_links(s.cap as usize))
            .sum::<usize>()
            >= links
    }

    /// Anneals towards a full cover with at most `max_degree` copies per user;
    /// on failure returns the uncovered pairs of the best capacity-respecting attempt.
    fn attempt(
        &self,
        slots: &[Slot],
        max_degree: usize,
    ) -> std::result::Result<Layout, Vec<(usize, usize)>> {
        let caps: Vec<u8> = slots.iter().map(|s| s.cap).collect();
        let mut best_uncovered: Option<Vec<(usize, usize)>> = None;
        for restart in 0..self.opts.restarts.max(1) {
            let stream = (max_degree as u64) << 40 | (slots.len() as u64) << 20 | restart as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
            rng.set_stream(stream);
            let mut anneal = Anneal::new(self.n, &caps, max_degree as u32);
            if anneal.run(&mut rng, self.opts.iterations) {
                let mut layout = anneal.layout;
                layout.prune();
                return Ok(layout);
            }
            if anneal.overflow == 0 {
                let unc = anneal.layout.uncovered();
                if best_uncovered.as_ref().is_none_or(|b| unc.len() < b.len()) {
                    best_uncovered = Some(unc);
                }
            }
        }
        Err(best_uncovered.unwrap_or_else(|| Layout::empty(self.n, slots.len()).uncovered()))
    }
}

/// Finds a full-mesh assignment minimising (max copies per user, pairs used).
///
/// `available` lists candidate pairs; a pair is dropped if it is off the grid
/// or either of its channels is in `excluded`. Deterministic for a given seed.
/// Fails with [`Error::Infeasible`] listing the pairs left uncovered by the
/// best attempt.
pub fn solve_assignment(
    users: &[User],
    grid: &Grid,
    available: &[ConjugatePair],
    excluded: &BTreeSet<LogicalChannel>,
    opts: SolveOptions,
) -> Result<SolveOutcome> {
    super::validate_users(users)?;
    grid.validate()?;
    let n = users.len();
    if n < 2 {
        return Err(Error::Domain("a mesh needs at least two users".into()));
    }
    let mut pairs: Vec<ConjugatePair> = available
        .iter()
        .copied()
        .filter(|p| p.0 >= 1 && p.0 <= grid.max_k())
        .filter(|p| !excluded.contains(&p.plus()) && !excluded.contains(&p.minus()))
        .collect();
    pairs.sort();
    pairs.dedup();
    let slot = |p: ConjugatePair| Slot {
        pair: p,
        cap: ChannelAssignment::capacity(grid, p.plus()),
    };
    let inst = Instance {
        n,
        split: pairs
            .iter()
            .copied()
            .filter(|p| grid.is_split_pair(*p))
            .map(slot)
            .collect(),
        unsplit: pairs
            .iter()
            .copied()
            .filter(|p| !grid.is_split_pair(*p))
            .map(slot)
            .collect(),
        opts,
    };
    let all_slots = inst.slots_for(pairs.len());
    let user_ids: Vec<&str> = users.iter().map(|u| u.id.as_str()).collect();
    let to_links = |pairs: Vec<(usize, usize)>| -> Vec<Link> {
        pairs
            .into_iter()
            .map(|(u, v)| Link::new(user_ids[u], user_ids[v]))
            .collect()
    };
    if all_slots.is_empty() {
        return Err(Error::Infeasible(to_links(Layout::empty(n, 0).uncovered())));
    }

    let mut best: Option<(Objective, Layout, Vec<Slot>)> =
        grouped_construction(n, &inst.split, &inst.unsplit)
            .map(|l| (l.objective(), l, all_slots.clone()));

    let fanout = inst.split.first().map_or(1, |s| s.cap as usize);
    let degree_floor = if n == 2 {
        1
    } else {
        2usize.max((n - 1).div_ceil(fanout))
    };
    let mut last_failure = None;
    for degree in degree_floor..n {
        let pair_ceiling = match &best {
            Some((obj, _, _)) if degree > obj.max_channels => break,
            Some((obj, _, _)) if degree == obj.max_channels => obj.pairs_used - 1,
            _ => pairs.len(),
        };
        let top = inst.slots_for(pair_ceiling);
        if pair_ceiling == 0 || !inst.could_cover(&top) {
            continue;
        }
        let found = match inst.attempt(&top, degree) {
            Ok(layout) => layout,
            Err(unc) => {
                last_failure = Some(unc);
                continue;
            }
        };
        let mut chosen = (found.objective(), found, top);
        for p in 1..chosen.0.pairs_used {
            let slots = inst.slots_for(p);
            if !inst.could_cover(&slots) {
                continue;
            }
            if let Ok(layout) = inst.attempt(&slots, degree) {
                chosen = (layout.objective(), layout, slots);
                break;
            }
        }
        if best.as_ref().is_none_or(|(obj, _, _)| chosen.0 < *obj) {
            best = Some(chosen);
        }
        break;
    }

    match best {
        Some((objective, layout, slots)) => Ok(SolveOutcome {
            assignment: materialise(&layout, &slots, &inst, &user_ids),
            objective,
        }),
        None => Err(Error::Infeasible(to_links(
            last_failure.unwrap_or_else(|| Layout::empty(n, 0).uncovered()),
        ))),
    }
}

/// Maps used slots onto the lowest-k pairs of their type and assigns ports
/// in user-id order.
fn materialise(
    layout: &Layout,
    slots: &[Slot],
    inst: &Instance,
    users: &[&str],
) -> ChannelAssignment {
    let (mut next_split, mut next_unsplit) = (0, 0);
    let mut order: Vec<usize> = (0..layout.n).collect();
    order.sort_by_key(|&i| users[i]);
    let mut grants = Vec::new();
    for j in layout.used_slots() {
        let pair = if slots[j].cap > 1 {
            next_split += 1;
            inst.split[next_split - 1].pair
        } else {
            next_unsplit += 1;
            inst.unsplit[next_unsplit - 1].pair
        };
        for (bit, lc) in [(PLUS, pair.plus()), (MINUS, pair.minus())] {
            let mut port = 0;
            for &i in &order {
                if layout.get(j, i) & bit != 0 {
                    grants.push(Grant {
                        user: users[i].to_string(),
                        lc,
                        port,
                    });
                    port += 1;
                }
            }
        }
    }
    grants.sort_by(|a, b| {
        (a.lc.0.unsigned_abs(), -a.lc.0, a.port).cmp(&(b.lc.0.unsigned_abs(), -b.lc.0, b.port))
    });
    ChannelAssignment { grants }
}
