//! Symbolic coding of the dynamics by nested cylinders.
//!
//! The tower stores, for every level `n` and letter `α`, the orbit intervals
//! `f^i(I_α^n)` for `0 <= i <= q_α^n` with a pointer to the level `n - 1`
//! interval they were cut from. Intervals with `i >= 1` are the admissible
//! cylinders of length `n + 1`; intervals with `i < q` form the dynamical
//! partition.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::combinatorics::{Letter, StepType};
use crate::error::{GiemError, Result};
use crate::real::Real;
use crate::renorm::RenormTrace;

/// `(α, χ, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymLetter {
    pub letter: Letter,
    pub chi: u8,
    pub level: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece<T> {
    pub left: T,
    pub len: T,
    /// `(letter, orbit index)` at the previous level.
    pub parent: (Letter, usize),
    pub chi: u8,
}

/// Orbit intervals of every level up to `depth`.
#[derive(Clone, Debug)]
pub struct Tower<T: Real> {
    levels: Vec<Vec<Vec<Piece<T>>>>,
    base_length: T,
    types: Vec<StepType>,
}

/// A level-`n` cylinder.
#[derive(Clone, Debug, PartialEq)]
pub struct Cylinder {
    /// `word[m]` is the level-`m` letter, `m = 0..=n`.
    pub word: Vec<SymLetter>,
    pub left: f64,
    pub right: f64,
    /// `(α, i)` with the cylinder equal to `f^i(I_α^n)`.
    pub tag: (Letter, usize),
    pub measure: f64,
}

/// Coding of a point up to level `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CodingResult {
    /// `word[m]` is the level-`m` letter.
    pub word: Vec<SymLetter>,
    /// `entry_times[m] = min{k >= 0 : f^k(x) ∈ I^m}`.
    pub entry_times: Vec<usize>,
}

impl<T: Real> Tower<T> {
    /// Builds levels `0..=depth` from a trace; fails once the number of stored
    /// intervals would exceed `budget`.
    pub fn build(trace: &RenormTrace<T>, depth: usize, budget: usize) -> Result<Self> {
        if depth > trace.levels() {
            return Err(GiemError::LevelOutOfRange(depth));
        }
        let f = &trace.map;
        let d = f.d();
        let s0 = trace.state(0)?;
        let mut first = Vec::with_capacity(d);
        for a in 0..d {
            let (l, len) = s0.interval(a);
            let (c, img) = s0.image_interval(a);
            first.push(vec![
                Piece { left: l, len, parent: (a, 0), chi: 0 },
                Piece { left: c, len: img, parent: (a, 1), chi: 0 },
            ]);
        }
        let mut levels = vec![first];
        let mut used = 2 * d;
        for n in 0..depth {
            let st = trace.steps[n];
            let next_state = trace.state(n + 1)?;
            let total: usize = (0..d).map(|a| next_state.return_time(a) + 1).sum();
            used += total;
            if used > budget {
                return Err(GiemError::BudgetExceeded(format!(
                    "{used} orbit intervals needed at level {}, budget {budget}",
                    n + 1
                )));
            }
            let prev = &levels[n];
            let (w, l) = (st.winner, st.loser);
            let eps = st.step_type.index() as u8;
            let path = trace.state(n)?.itinerary(w).to_vec();
            let mut left_parts = Vec::with_capacity(prev[w].len());
            let mut right_parts = Vec::with_capacity(prev[w].len());
            let mut h = next_state.lengths[w];
            for (j, p) in prev[w].iter().enumerate() {
                let hl = if j + 1 == prev[w].len() { h.min(p.len) } else { h };
                left_parts.push(Piece { left: p.left, len: hl, parent: (w, j), chi: 0 });
                right_parts.push(Piece {
                    left: p.left + hl,
                    len: p.len - hl,
                    parent: (w, j),
                    chi: eps,
                });
                if j < path.len() {
                    let br = f.branch(path[j]);
                    h = br.increment_unchecked(p.left, h);
                }
            }
            let mut level = Vec::with_capacity(d);
            for a in 0..d {
                let pieces = if a == w {
                    left_parts.clone()
                } else if a == l {
                    let own = |i: usize, p: &Piece<T>| Piece {
                        left: p.left,
                        len: p.len,
                        parent: (l, i),
                        chi: 1 - eps,
                    };
                    match st.step_type {
                        StepType::Zero => {
                            let mut v: Vec<Piece<T>> =
                                prev[l].iter().enumerate().map(|(i, p)| own(i, p)).collect();
                            v.extend(right_parts.iter().skip(1).copied());
                            v
                        }
                        StepType::One => {
                            let mut v = right_parts.clone();
                            v.extend(prev[l].iter().enumerate().skip(1).map(|(i, p)| own(i, p)));
                            v
                        }
                    }
                } else {
                    prev[a]
                        .iter()
                        .enumerate()
                        .map(|(i, p)| Piece { left: p.left, len: p.len, parent: (a, i), chi: 0 })
                        .collect()
                };
                debug_assert_eq!(pieces.len(), next_state.return_time(a) + 1);
                level.push(pieces);
            }
            levels.push(level);
        }
        Ok(Tower { levels, base_length: f.total_length(), types: trace.types() })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn d(&self) -> usize {
        self.levels[0].len()
    }

    fn level(&self, n: usize) -> Result<&Vec<Vec<Piece<T>>>> {
        self.levels.get(n).ok_or(GiemError::LevelOutOfRange(n))
    }

    /// Orbit intervals `f^i(I_α^n)` for `0 <= i <= q`.
    pub fn orbit(&self, n: usize, letter: Letter) -> Result<&[Piece<T>]> {
        Ok(&self.level(n)?[letter])
    }

    pub fn types(&self) -> &[StepType] {
        &self.types
    }

    pub fn symbol(&self, n: usize, tag: (Letter, usize)) -> SymLetter {
        let chi = if n == 0 { 0 } else { self.levels[n][tag.0][tag.1].chi };
        SymLetter { letter: tag.0, chi, level: n }
    }

    /// Tag of the level-`m` cylinder containing the level-`n` cylinder `tag`.
    pub fn ancestor(&self, n: usize, tag: (Letter, usize), m: usize) -> (Letter, usize) {
        let mut t = tag;
        for k in (m + 1..=n).rev() {
            t = self.levels[k][t.0][t.1].parent;
        }
        t
    }

    /// Word `a_0 … a_n` of a level-`n` cylinder.
    pub fn word(&self, n: usize, tag: (Letter, usize)) -> Vec<SymLetter> {
        let mut word = vec![self.symbol(n, tag); n + 1];
        let mut t = tag;
        for k in (1..=n).rev() {
            t = self.levels[k][t.0][t.1].parent;
            word[k - 1] = self.symbol(k - 1, t);
        }
        word
    }

    /// Tags of the level-`n` cylinders (`i >= 1`).
    pub fn cylinder_tags(&self, n: usize) -> Result<Vec<(Letter, usize)>> {
        let level = self.level(n)?;
        Ok(level
            .iter()
            .enumerate()
            .flat_map(|(a, v)| (1..v.len()).map(move |i| (a, i)))
            .collect())
    }

    pub fn measure(&self, n: usize, tag: (Letter, usize)) -> f64 {
        (self.levels[n][tag.0][tag.1].len / self.base_length).to_f64()
    }

    /// Every level-`n` cylinder with its word.
    pub fn cylinders(&self, n: usize) -> Result<Vec<Cylinder>> {
        let tags = self.cylinder_tags(n)?;
        Ok(tags
            .into_iter()
            .map(|tag| {
                let p = self.levels[n][tag.0][tag.1];
                Cylinder {
                    word: self.word(n, tag),
                    left: p.left.to_f64(),
                    right: (p.left + p.len).to_f64(),
                    tag,
                    measure: self.measure(n, tag),
                }
            })
            .collect())
    }

    /// Whether some cylinder at the top level of `word` has these letters at
    /// the levels they name. Levels must be consecutive.
    pub fn is_admissible(&self, word: &[SymLetter]) -> Result<bool> {
        if word.is_empty() {
            return Ok(true);
        }
        let top = word.iter().map(|a| a.level).max().unwrap();
        let bottom = word.iter().map(|a| a.level).min().unwrap();
        if top - bottom + 1 != word.len() {
            return Err(GiemError::Inadmissible("levels are not consecutive".into()));
        }
        let mut by_level = vec![None; top + 1];
        for a in word {
            by_level[a.level] = Some(*a);
        }
        for tag in self.cylinder_tags(top)? {
            let mut t = tag;
            let mut ok = true;
            for k in (bottom..=top).rev() {
                if self.symbol(k, t) != by_level[k].unwrap() {
                    ok = false;
                    break;
                }
                if k > bottom {
                    t = self.levels[k][t.0][t.1].parent;
                }
            }
            if ok {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// `ℓ(a_n | a_{n-1} … a_0)` for a full past `past = a_0 … a_{n-1}`.
    pub fn conditional(&self, past: &[SymLetter], next: SymLetter) -> Result<f64> {
        let n = past.len();
        if next.level != n {
            return Err(GiemError::Inadmissible(format!(
                "letter at level {} cannot extend a word of length {n}",
                next.level
            )));
        }
        let mut word = past.to_vec();
        word.push(next);
        let parent = self.find(past)?;
        let child = self.find(&word)?;
        Ok(self.measure(n, child) / self.measure(n - 1, parent))
    }

    /// Tag of the cylinder with full word `a_0 … a_n`.
    pub fn find(&self, word: &[SymLetter]) -> Result<(Letter, usize)> {
        let n = word.len().checked_sub(1).ok_or(GiemError::Inadmissible("empty word".into()))?;
        let level = self.level(n)?;
        let last = word[n];
        for i in 1..level[last.letter].len() {
            if self.word(n, (last.letter, i)) == word {
                return Ok((last.letter, i));
            }
        }
        Err(GiemError::Inadmissible(format_word(word)))
    }

    /// Largest spread of `log ℓ(a_n | a_{n-1} … a_0)` among cylinders sharing
    /// `a_n … a_{n-s}`.
    pub fn memory_decay(&self, n: usize, s: usize) -> Result<f64> {
        if n == 0 || s >= n {
            return Ok(0.0);
        }
        let mut groups: HashMap<Vec<SymLetter>, (f64, f64, usize)> = HashMap::new();
        for tag in self.cylinder_tags(n)? {
            let w = self.word(n, tag);
            let parent = self.levels[n][tag.0][tag.1].parent;
            let c = (self.measure(n, tag) / self.measure(n - 1, parent)).ln();
            let key = w[n - s..].to_vec();
            let e = groups.entry(key).or_insert((f64::MAX, f64::MIN, 0));
            e.0 = e.0.min(c);
            e.1 = e.1.max(c);
            e.2 += 1;
        }
        let spreads: Vec<f64> =
            groups.values().filter(|g| g.2 >= 2).map(|g| g.1 - g.0).collect();
        if spreads.is_empty() {
            return Err(GiemError::NoValidPairs);
        }
        Ok(spreads.into_iter().fold(0.0, f64::max))
    }

    /// `max |ℓ(a_n | a_{n-r} … a_0) - ℓ(a_n)|` with `r = ⌊n/2⌋`, and
    /// `ℓ(α, ⋆, n)` per letter.
    pub fn mixing_gap(&self, n: usize) -> Result<MixingReport> {
        let r = n / 2;
        let m = n - r;
        let tags = self.cylinder_tags(n)?;
        let mut unconditional: BTreeMap<(Letter, u8), f64> = BTreeMap::new();
        let mut joint: BTreeMap<((Letter, usize), (Letter, u8)), f64> = BTreeMap::new();
        let mut ell_star = vec![0.0; self.d()];
        for &tag in &tags {
            let a = self.symbol(n, tag);
            let mu = self.measure(n, tag);
            *unconditional.entry((a.letter, a.chi)).or_default() += mu;
            ell_star[a.letter] += mu;
            let anc = self.ancestor(n, tag, m);
            *joint.entry((anc, (a.letter, a.chi))).or_default() += mu;
        }
        let mut gap: f64 = 0.0;
        if m < n {
            for anc in self.cylinder_tags(m)? {
                let mass = self.measure(m, anc);
                for (&key, &p) in &unconditional {
                    let cond = joint.get(&(anc, key)).copied().unwrap_or(0.0) / mass;
                    gap = gap.max((cond - p).abs());
                }
            }
        }
        Ok(MixingReport { level: n, gap, ell_star })
    }

    /// Checks the word lemmas on levels up to `n_max` with window `k`.
    pub fn check_word_lemmas<F>(&self, n_max: usize, k: usize, translate: F) -> Result<WordLemmaReport>
    where
        F: Fn(usize, Letter, usize, usize) -> Option<(T, T)>,
    {
        let n_max = n_max.min(self.depth());
        let mut translations = 0;
        // Cylinders with the same letter at level m differ by a translation
        // r = j - i, which is inherited by all descendants sharing the recent block.
        for m in 0..n_max {
            let level = &self.levels[m];
            for (a, pieces) in level.iter().enumerate() {
                let q = pieces.len() - 1;
                for (i, j) in [(1, q), (1, q.div_ceil(2).max(1))] {
                    if i >= j {
                        continue;
                    }
                    if let Some((left, len)) = translate(m, a, i, j) {
                        let target = pieces[j];
                        let e = (left - target.left).abs().max((len - target.len).abs()).to_f64();
                        if e > 1e-9 {
                            return Err(GiemError::Mismatch(format!(
                                "f^{} does not carry f^{i}(I_{a}^{m}) onto f^{j}(I_{a}^{m}): error {e:e}",
                                j - i
                            )));
                        }
                        translations += 1;
                    }
                }
            }
            // Descendants of (a, i) and (a, j) with the same block at level m+1
            // have orbit indices differing by j - i.
            let mut by_block: HashMap<(SymLetter, Letter), Vec<(usize, usize)>> = HashMap::new();
            for tag in self.cylinder_tags(m + 1)? {
                let parent = self.levels[m + 1][tag.0][tag.1].parent;
                by_block.entry((self.symbol(m + 1, tag), parent.0)).or_default().push((tag.1, parent.1));
            }
            for v in by_block.values() {
                for w in v.windows(2) {
                    let (i1, p1) = w[0];
                    let (i2, p2) = w[1];
                    if i2 as i64 - i1 as i64 != p2 as i64 - p1 as i64 {
                        return Err(GiemError::Mismatch(format!(
                            "level {} translation {} differs from parent translation {}",
                            m + 1,
                            i2 as i64 - i1 as i64,
                            p2 as i64 - p1 as i64
                        )));
                    }
                }
            }
        }
        // Concatenation at a junction letter.
        let mut concatenations = 0;
        for n in 1..n_max {
            let low: HashSet<(SymLetter, SymLetter)> = self
                .cylinder_tags(n)?
                .into_iter()
                .map(|t| {
                    let w = self.word(n, t);
                    (w[n - 1], w[n])
                })
                .collect();
            let high: HashSet<(SymLetter, SymLetter)> = self
                .cylinder_tags(n + 1)?
                .into_iter()
                .map(|t| {
                    let w = self.word(n + 1, t);
                    (w[n], w[n + 1])
                })
                .collect();
            let triples: HashSet<(SymLetter, SymLetter, SymLetter)> = self
                .cylinder_tags(n + 1)?
                .into_iter()
                .map(|t| {
                    let w = self.word(n + 1, t);
                    (w[n - 1], w[n], w[n + 1])
                })
                .collect();
            for &(a0, a1) in &low {
                for &(b1, b2) in &high {
                    if a1.letter != b1.letter {
                        continue;
                    }
                    if !triples.contains(&(a0, a1, b2)) {
                        return Err(GiemError::Inadmissible(format!(
                            "{} followed by {} at level {n}",
                            format_word(&[a0, a1]),
                            format_word(&[b2])
                        )));
                    }
                    concatenations += 1;
                }
            }
        }
        // Every pair of letters is joined within k levels.
        let mut joined = 0;
        if k <= n_max {
            for n in 0..=n_max - k {
                let mut seen = HashSet::new();
                for step in 1..=k {
                    for tag in self.cylinder_tags(n + step)? {
                        let anc = self.ancestor(n + step, tag, n);
                        seen.insert((anc.0, tag.0));
                    }
                }
                let d = self.d();
                for beta in 0..d {
                    for alpha in 0..d {
                        if !seen.contains(&(beta, alpha)) {
                            return Err(GiemError::Inadmissible(format!(
                                "no word from letter {beta} at level {n} to letter {alpha} within {k} levels"
                            )));
                        }
                        joined += 1;
                    }
                }
            }
        }
        Ok(WordLemmaReport { translations, concatenations, joined_pairs: joined })
    }
}

/// Output of [`Tower::mixing_gap`].
#[derive(Clone, Debug, PartialEq)]
pub struct MixingReport {
    pub level: usize,
    pub gap: f64,
    /// `ℓ(α, ⋆, n)` per letter.
    pub ell_star: Vec<f64>,
}

/// Counts of instances checked by [`Tower::check_word_lemmas`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WordLemmaReport {
    pub translations: usize,
    pub concatenations: usize,
    pub joined_pairs: usize,
}

pub fn format_word(word: &[SymLetter]) -> String {
    word.iter()
        .map(|a| format!("({},{},{})", a.letter, a.chi, a.level))
        .collect::<Vec<_>>()
        .join("")
}

/// Pushes `f^i(I_α^m)` forward `j - i` steps along the level-`m` itinerary.
pub fn translate_piece<T: Real>(
    trace: &RenormTrace<T>,
    tower: &Tower<T>,
    m: usize,
    letter: Letter,
    i: usize,
    j: usize,
) -> Option<(T, T)> {
    let path = trace.state(m).ok()?.itinerary(letter).to_vec();
    let p = tower.orbit(m, letter).ok()?[i];
    let (mut x, mut h) = (p.left, p.len);
    for &b in &path[i..j] {
        let br = trace.map.branch(b);
        h = br.increment_unchecked(x, h);
        x = br.value_unchecked(x);
    }
    Some((x, h))
}

/// Codes `x` up to level `n` by direct iteration of the map.
pub fn code_point<T: Real>(
    trace: &RenormTrace<T>,
    x: T,
    n: usize,
    max_iter: usize,
) -> Result<CodingResult> {
    let f = &trace.map;
    let tol = 1e-12 * f.total_length().to_f64();
    let mut y = x;
    let mut k = 0usize;
    let mut word = Vec::with_capacity(n + 1);
    let mut times = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let st = trace.state(i)?;
        let len = st.total_length();
        while !(y < len) {
            y = f.apply(y)?;
            k += 1;
            if k > max_iter {
                return Err(GiemError::MaxIterations(max_iter));
            }
        }
        let cuts = st.image_cuts();
        if cuts[1..st.d()].iter().any(|&c| (c - y).abs().to_f64() <= tol) {
            return Err(GiemError::BoundaryPoint(x.to_f64()));
        }
        let pos = cuts[1..].iter().position(|&c| y < c).unwrap_or(st.d() - 1);
        let letter = st.perm.letter_at(StepType::One, pos);
        let chi = if i > 0 && k != times[i - 1] { 1 } else { 0 };
        word.push(SymLetter { letter, chi, level: i });
        times.push(k);
    }
    Ok(CodingResult { word, entry_times: times })
}
