//! Marked groups with geodesic normal forms.
//!
//! Two families are supported: free groups `F_k` and free products of finite
//! cyclic groups `Z_{m_1} * ... * Z_{m_j}`. Elements are stored as alternating
//! syllables `x_i^e`; for a free product the exponent lives in `1..m_i` and
//! contributes `min(e, m_i - e)` to the word length, which makes normal-form
//! length equal to distance in the Cayley graph for the generating set
//! `{x_i, x_i^-1}`.

pub mod ball;
pub mod growth;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ball::{Ball, BallCounts, BallIter, NormalFormAutomaton};
pub use growth::{growth_rate, growth_rate_window, GrowthEstimate, Method};

/// Maximum number of generators; symbols are the letters `a..z`.
pub const MAX_GENERATORS: usize = 26;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Free { rank: usize },
    FreeProduct { orders: Vec<u32> },
}

/// A single generator step `x_i` or `x_i^-1`.
///
/// The derived order (`a < A < b < B < ...`) is the letter order used for
/// every lexicographic tie-break in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub gen: u16,
    pub inverse: bool,
}

impl Step {
    pub fn new(gen: u16, inverse: bool) -> Self {
        Step { gen, inverse }
    }

    pub fn symbol(self) -> char {
        let c = (b'a' + self.gen as u8) as char;
        if self.inverse {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }

    /// Dense index `2 * gen + inverse`, used for automaton edge tables.
    pub fn index(self) -> usize {
        2 * self.gen as usize + self.inverse as usize
    }

    pub fn from_index(i: usize) -> Self {
        Step {
            gen: (i / 2) as u16,
            inverse: i % 2 == 1,
        }
    }

    pub fn flip(self) -> Self {
        Step {
            gen: self.gen,
            inverse: !self.inverse,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Syllable {
    pub gen: u16,
    pub exp: i32,
}

/// An element of a marked group in normal form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word {
    tag: u64,
    syllables: Vec<Syllable>,
}

impl Word {
    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn group_tag(&self) -> u64 {
        self.tag
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedGroup {
    kind: GroupKind,
    tag: u64,
    gens: Vec<Step>,
}

fn tag_of(kind: &GroupKind) -> u64 {
    // FNV-1a over a stable byte encoding of the descriptor.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    match kind {
        GroupKind::Free { rank } => {
            feed(1);
            feed(*rank as u64);
        }
        GroupKind::FreeProduct { orders } => {
            feed(2);
            for &m in orders {
                feed(m as u64);
            }
        }
    }
    h
}

impl MarkedGroup {
    pub fn free(rank: usize) -> Result<Self> {
        if rank == 0 || rank > MAX_GENERATORS {
            return Err(Error::InvalidGroup(format!("free:{rank}")));
        }
        Ok(Self::build(GroupKind::Free { rank }))
    }

    pub fn free_product(orders: &[u32]) -> Result<Self> {
        if orders.len() < 2 || orders.len() > MAX_GENERATORS || orders.iter().any(|&m| m < 2) {
            return Err(Error::InvalidGroup(format!("product:{orders:?}")));
        }
        Ok(Self::build(GroupKind::FreeProduct {
            orders: orders.to_vec(),
        }))
    }

    fn build(kind: GroupKind) -> Self {
        let tag = tag_of(&kind);
        let mut gens = Vec::new();
        match &kind {
            GroupKind::Free { rank } => {
                for g in 0..*rank as u16 {
                    gens.push(Step::new(g, false));
                    gens.push(Step::new(g, true));
                }
            }
            GroupKind::FreeProduct { orders } => {
                for (g, &m) in orders.iter().enumerate() {
                    gens.push(Step::new(g as u16, false));
                    if m > 2 {
                        gens.push(Step::new(g as u16, true));
                    }
                }
            }
        }
        MarkedGroup { kind, tag, gens }
    }

    /// Parses `free:2` or `product:2,3`.
    pub fn parse(desc: &str) -> Result<Self> {
        let bad = || Error::InvalidGroup(desc.to_string());
        let (head, tail) = desc.trim().split_once(':').ok_or_else(bad)?;
        match head.trim() {
            "free" => Self::free(tail.trim().parse().map_err(|_| bad())?),
            "product" => {
                let orders = tail
                    .split(',')
                    .map(|t| t.trim().parse::<u32>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad())?;
                Self::free_product(&orders)
            }
            _ => Err(bad()),
        }
    }

    pub fn descriptor(&self) -> String {
        match &self.kind {
            GroupKind::Free { rank } => format!("free:{rank}"),
            GroupKind::FreeProduct { orders } => {
                let parts: Vec<String> = orders.iter().map(|m| m.to_string()).collect();
                format!("product:{}", parts.join(","))
            }
        }
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn tag(&self) -> u64 {
        self.tag
    }

    pub fn rank(&self) -> usize {
        match &self.kind {
            GroupKind::Free { rank } => *rank,
            GroupKind::FreeProduct { orders } => orders.len(),
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self.kind, GroupKind::Free { .. })
    }

    /// `F_1` and `Z_2 * Z_2` are the virtually cyclic members of the two
    /// families. They are valid groups but useless as non-elementary examples.
    pub fn is_virtually_cyclic(&self) -> bool {
        match &self.kind {
            GroupKind::Free { rank } => *rank == 1,
            GroupKind::FreeProduct { orders } => orders == &[2, 2],
        }
    }

    /// The symmetric generating set, in letter order.
    pub fn generators(&self) -> &[Step] {
        &self.gens
    }

    /// Order of the generator `gen`; `None` when it has infinite order.
    pub fn generator_order(&self, gen: u16) -> Option<u32> {
        match &self.kind {
            GroupKind::Free { .. } => None,
            GroupKind::FreeProduct { orders } => Some(orders[gen as usize]),
        }
    }

    pub fn identity(&self) -> Word {
        Word {
            tag: self.tag,
            syllables: Vec::new(),
        }
    }

    fn wrap(&self, syllables: Vec<Syllable>) -> Word {
        Word {
            tag: self.tag,
            syllables,
        }
    }

    pub fn check(&self, u: &Word) -> Result<()> {
        if u.tag == self.tag {
            Ok(())
        } else {
            Err(Error::GroupMismatch)
        }
    }

    fn normalize_exp(&self, gen: u16, exp: i64) -> i32 {
        match self.generator_order(gen) {
            None => exp as i32,
            Some(m) => exp.rem_euclid(m as i64) as i32,
        }
    }

    fn push_syllable(&self, syl: &mut Vec<Syllable>, gen: u16, exp: i64) {
        let e = self.normalize_exp(gen, exp);
        if e == 0 {
            return;
        }
        if let Some(last) = syl.last_mut() {
            if last.gen == gen {
                let merged = self.normalize_exp(gen, last.exp as i64 + e as i64);
                if merged == 0 {
                    syl.pop();
                } else {
                    last.exp = merged;
                }
                return;
            }
        }
        syl.push(Syllable { gen, exp: e });
    }

    pub fn from_syllables(&self, parts: &[(u16, i64)]) -> Result<Word> {
        let mut syl = Vec::with_capacity(parts.len());
        for &(gen, exp) in parts {
            if gen as usize >= self.rank() {
                return Err(Error::UnknownSymbol(format!("generator #{gen}")));
            }
            self.push_syllable(&mut syl, gen, exp);
        }
        Ok(self.wrap(syl))
    }

    pub fn step_word(&self, s: Step) -> Word {
        let mut syl = Vec::with_capacity(1);
        self.push_syllable(&mut syl, s.gen, if s.inverse { -1 } else { 1 });
        self.wrap(syl)
    }

    /// Normal form of a product of generator steps.
    pub fn reduce_steps(&self, steps: &[Step]) -> Word {
        let mut syl = Vec::new();
        for s in steps {
            debug_assert!((s.gen as usize) < self.rank());
            self.push_syllable(&mut syl, s.gen, if s.inverse { -1 } else { 1 });
        }
        self.wrap(syl)
    }

    /// Normal form of an ASCII symbol sequence such as `a b A` or `abA`
    /// (uppercase = inverse, whitespace ignored, `1` = identity).
    pub fn reduce(&self, symbols: &str) -> Result<Word> {
        let mut syl = Vec::new();
        for c in symbols.chars() {
            if c.is_whitespace() || c == '1' {
                continue;
            }
            if !c.is_ascii_alphabetic() {
                return Err(Error::UnknownSymbol(c.to_string()));
            }
            let gen = (c.to_ascii_lowercase() as u8 - b'a') as u16;
            if gen as usize >= self.rank() {
                return Err(Error::UnknownSymbol(c.to_string()));
            }
            self.push_syllable(&mut syl, gen, if c.is_ascii_uppercase() { -1 } else { 1 });
        }
        Ok(self.wrap(syl))
    }

    pub fn mul(&self, u: &Word, v: &Word) -> Result<Word> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.mul_unchecked(u, v))
    }

    /// Product without the group-tag check; callers guarantee both words
    /// come from `self`.
    pub fn mul_unchecked(&self, u: &Word, v: &Word) -> Word {
        let mut syl = Vec::with_capacity(u.syllables.len() + v.syllables.len());
        syl.extend_from_slice(&u.syllables);
        for s in &v.syllables {
            self.push_syllable(&mut syl, s.gen, s.exp as i64);
        }
        self.wrap(syl)
    }

    pub fn mul_step(&self, u: &Word, s: Step) -> Word {
        let mut syl = u.syllables.clone();
        self.push_syllable(&mut syl, s.gen, if s.inverse { -1 } else { 1 });
        self.wrap(syl)
    }

    pub fn mul_all(&self, words: &[&Word]) -> Word {
        let mut acc = self.identity();
        for w in words {
            acc = self.mul_unchecked(&acc, w);
        }
        acc
    }

    pub fn inv(&self, u: &Word) -> Result<Word> {
        self.check(u)?;
        Ok(self.inv_unchecked(u))
    }

    pub fn inv_unchecked(&self, u: &Word) -> Word {
        let syl = u
            .syllables
            .iter()
            .rev()
            .map(|s| Syllable {
                gen: s.gen,
                exp: self.normalize_exp(s.gen, -(s.exp as i64)),
            })
            .collect();
        self.wrap(syl)
    }

    pub fn pow(&self, u: &Word, n: i64) -> Word {
        let base = if n < 0 { self.inv_unchecked(u) } else { u.clone() };
        let mut acc = self.identity();
        for _ in 0..n.unsigned_abs() {
            acc = self.mul_unchecked(&acc, &base);
        }
        acc
    }

    /// `u g u^-1`.
    pub fn conjugate(&self, u: &Word, g: &Word) -> Word {
        let ug = self.mul_unchecked(u, g);
        self.mul_unchecked(&ug, &self.inv_unchecked(u))
    }

    pub fn syllable_cost(&self, s: Syllable) -> u32 {
        match self.generator_order(s.gen) {
            None => s.exp.unsigned_abs(),
            Some(m) => {
                let e = s.exp as u32;
                e.min(m - e)
            }
        }
    }

    /// Word length, equal to `d(o, u o)` in the Cayley graph.
    pub fn length(&self, u: &Word) -> u32 {
        u.syllables.iter().map(|&s| self.syllable_cost(s)).sum()
    }

    pub fn distance(&self, x: &Word, y: &Word) -> u32 {
        let mut syl = Vec::with_capacity(x.syllables.len() + y.syllables.len());
        for s in x.syllables.iter().rev() {
            self.push_syllable(&mut syl, s.gen, -(s.exp as i64));
        }
        for s in &y.syllables {
            self.push_syllable(&mut syl, s.gen, s.exp as i64);
        }
        syl.iter().map(|&s| self.syllable_cost(s)).sum()
    }

    /// Canonical geodesic spelling; ties (`e = m/2`) go in the positive
    /// direction.
    fn syllable_steps(&self, s: Syllable, out: &mut Vec<Step>) {
        match self.generator_order(s.gen) {
            None => {
                let step = Step::new(s.gen, s.exp < 0);
                out.extend(std::iter::repeat_n(step, s.exp.unsigned_abs() as usize));
            }
            Some(m) => {
                let e = s.exp as u32;
                if 2 * e <= m {
                    out.extend(std::iter::repeat_n(Step::new(s.gen, false), e as usize));
                } else {
                    out.extend(std::iter::repeat_n(Step::new(s.gen, true), (m - e) as usize));
                }
            }
        }
    }

    pub fn steps_of(&self, u: &Word) -> Vec<Step> {
        let mut out = Vec::with_capacity(u.syllables.len());
        for &s in &u.syllables {
            self.syllable_steps(s, &mut out);
        }
        out
    }

    /// Compact ASCII label, e.g. `abA`; the identity is the empty string.
    pub fn label(&self, u: &Word) -> String {
        self.steps_of(u).into_iter().map(Step::symbol).collect()
    }

    /// Space-separated ASCII form, e.g. `a b A`; the identity prints as `1`.
    pub fn format_word(&self, u: &Word) -> String {
        if u.is_identity() {
            return "1".to_string();
        }
        let parts: Vec<String> = self
            .steps_of(u)
            .into_iter()
            .map(|s| s.symbol().to_string())
            .collect();
        parts.join(" ")
    }

    pub fn display<'a>(&'a self, u: &'a Word) -> DisplayWord<'a> {
        DisplayWord { group: self, word: u }
    }

    /// Lexicographic comparison of canonical spellings in letter order.
    pub fn label_cmp(&self, u: &Word, v: &Word) -> Ordering {
        self.steps_of(u).cmp(&self.steps_of(v))
    }

    /// Length first, then [`label_cmp`](Self::label_cmp).
    pub fn shortlex_cmp(&self, u: &Word, v: &Word) -> Ordering {
        self.length(u)
            .cmp(&self.length(v))
            .then_with(|| self.label_cmp(u, v))
    }

    /// Whether appending `s` to the normal form of `w` yields a normal form
    /// one step longer (i.e. `w s` is a geodesic extension in canonical
    /// spelling).
    pub fn extends(&self, w: &Word, s: Step) -> bool {
        let Some(last) = w.syllables.last() else {
            return self.gens.contains(&s);
        };
        if last.gen != s.gen {
            return self.gens.contains(&s);
        }
        match self.generator_order(s.gen) {
            None => (last.exp < 0) == s.inverse,
            Some(m) => {
                let e = last.exp as u32;
                if 2 * e <= m {
                    !s.inverse && 2 * (e + 1) <= m
                } else {
                    s.inverse && 2 * (m - e + 1) < m
                }
            }
        }
    }

    /// Writes `u = c * core * c^-1` with `core` cyclically reduced.
    ///
    /// In a free group `core` is cyclically reduced letter-wise (first letter
    /// not inverse to the last). In a free product the first and last
    /// syllables of `core` lie in different factors, unless `core` is a
    /// single syllable, which happens exactly when `u` is conjugate into a
    /// factor.
    pub fn cyclic_reduce(&self, u: &Word) -> (Word, Word) {
        let mut conj: Vec<Syllable> = Vec::new();
        let mut core: std::collections::VecDeque<Syllable> = u.syllables.iter().copied().collect();
        while core.len() >= 2 {
            let first = core[0];
            let last = core[core.len() - 1];
            if first.gen != last.gen {
                break;
            }
            match self.generator_order(first.gen) {
                None => {
                    if (first.exp < 0) == (last.exp < 0) {
                        break;
                    }
                    let k = first.exp.abs().min(last.exp.abs());
                    let signed = k * first.exp.signum();
                    self.push_syllable(&mut conj, first.gen, signed as i64);
                    let n = core.len();
                    core[0].exp -= signed;
                    core[n - 1].exp += signed;
                    if core[n - 1].exp == 0 {
                        core.pop_back();
                    }
                    if core[0].exp == 0 {
                        core.pop_front();
                    }
                }
                Some(_) => {
                    self.push_syllable(&mut conj, first.gen, first.exp as i64);
                    core.pop_front();
                    let merged = self.normalize_exp(first.gen, first.exp as i64 + last.exp as i64);
                    if merged == 0 {
                        core.pop_back();
                    } else {
                        let n = core.len();
                        core[n - 1].exp = merged;
                    }
                }
            }
        }
        (self.wrap(conj), self.wrap(core.into_iter().collect()))
    }

    /// Order of `u`; `None` means infinite order.
    pub fn order(&self, u: &Word) -> Option<u64> {
        let (_, core) = self.cyclic_reduce(u);
        match core.syllables.as_slice() {
            [] => Some(1),
            [s] => self.generator_order(s.gen).map(|m| {
                let e = s.exp as u64;
                m as u64 / gcd(e, m as u64)
            }),
            _ => None,
        }
    }

    pub fn has_infinite_order(&self, u: &Word) -> bool {
        self.order(u).is_none()
    }

    pub fn neighbors(&self, x: &Word) -> Vec<Word> {
        self.gens.iter().map(|&s| self.mul_step(x, s)).collect()
    }

    /// Canonical geodesic vertex path from `x` to `y`.
    pub fn geodesic(&self, x: &Word, y: &Word) -> Result<Vec<Word>> {
        self.check(x)?;
        self.check(y)?;
        let diff = self.mul_unchecked(&self.inv_unchecked(x), y);
        let mut path = Vec::with_capacity(self.length(&diff) as usize + 1);
        let mut cur = x.clone();
        path.push(cur.clone());
        for s in self.steps_of(&diff) {
            cur = self.mul_step(&cur, s);
            path.push(cur.clone());
        }
        Ok(path)
    }

    /// Every geodesic vertex path from `x` to `y`.
    ///
    /// Geodesics are unique in a free group; in a free product a syllable
    /// `x_i^{m_i/2}` can be traversed either way round its cycle.
    pub fn geodesics(&self, x: &Word, y: &Word, cap: usize) -> Result<Vec<Vec<Word>>> {
        self.check(x)?;
        self.check(y)?;
        let diff = self.mul_unchecked(&self.inv_unchecked(x), y);
        let mut spellings: Vec<Vec<Step>> = vec![Vec::new()];
        for &s in &diff.syllables {
            let mut variants = Vec::new();
            let mut canon = Vec::new();
            self.syllable_steps(s, &mut canon);
            variants.push(canon);
            if let Some(m) = self.generator_order(s.gen) {
                if 2 * s.exp as u32 == m && m > 2 {
                    variants.push(vec![Step::new(s.gen, true); (m / 2) as usize]);
                }
            }
            if spellings.len() * variants.len() > cap {
                return Err(Error::BudgetExceeded(format!("more than {cap} geodesics")));
            }
            spellings = spellings
                .into_iter()
                .flat_map(|pre| {
                    variants.iter().map(move |v| {
                        let mut p = pre.clone();
                        p.extend_from_slice(v);
                        p
                    })
                })
                .collect();
        }
        Ok(spellings
            .into_iter()
            .map(|steps| {
                let mut cur = x.clone();
                let mut path = vec![cur.clone()];
                for s in steps {
                    cur = self.mul_step(&cur, s);
                    path.push(cur.clone());
                }
                path
            })
            .collect())
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub struct DisplayWord<'a> {
    group: &'a MarkedGroup,
    word: &'a Word,
}

impl fmt::Display for DisplayWord<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.group.format_word(self.word))
    }
}
