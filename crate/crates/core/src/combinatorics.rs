//! Permutation pairs, monodromy, Rauzy moves and the k-bounded predicate.
//!
//! Letters are indices `0..d` into an [`Alphabet`]; positions are stored
//! zero-based internally and exposed one-based through [`Monodromy`].

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{GiemError, Result};

pub type Letter = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(GiemError::InvalidPerm("alphabet needs at least two letters".into()));
        }
        let distinct: BTreeSet<&String> = names.iter().collect();
        if distinct.len() != names.len() {
            return Err(GiemError::InvalidPerm("alphabet labels must be distinct".into()));
        }
        Ok(Alphabet { names })
    }

    /// `A, B, C, …` (then `L26, L27, …` past the Latin alphabet).
    pub fn standard(d: usize) -> Self {
        let names = (0..d)
            .map(|i| {
                if i < 26 {
                    ((b'A' + i as u8) as char).to_string()
                } else {
                    format!("L{i}")
                }
            })
            .collect();
        Alphabet { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, letter: Letter) -> &str {
        &self.names[letter]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<Letter> {
        self.names.iter().position(|n| n == name)
    }

    /// Appends a fresh label, used when a branch is split in two.
    pub fn with_extra(&self, name: &str) -> Result<Self> {
        let mut names = self.names.clone();
        names.push(name.to_string());
        Alphabet::new(names)
    }
}

/// Renormalization type: `Zero` cuts the last image interval, `One` the last
/// domain interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepType {
    Zero,
    One,
}

impl StepType {
    pub fn index(self) -> usize {
        match self {
            StepType::Zero => 0,
            StepType::One => 1,
        }
    }

    pub fn other(self) -> StepType {
        match self {
            StepType::Zero => StepType::One,
            StepType::One => StepType::Zero,
        }
    }

    pub fn from_index(i: usize) -> StepType {
        if i == 0 {
            StepType::Zero
        } else {
            StepType::One
        }
    }
}

impl fmt::Display for StepType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Combinatorial data: `pi[0][letter]` is the position of the letter among the
/// domain intervals, `pi[1][letter]` among the image intervals (zero-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PermPair {
    pi: [Vec<usize>; 2],
}

fn check_bijection(v: &[usize], d: usize) -> Result<()> {
    let mut seen = vec![false; d];
    for &x in v {
        if x >= d || seen[x] {
            return Err(GiemError::InvalidPerm(format!("{v:?} is not a bijection onto 0..{d}")));
        }
        seen[x] = true;
    }
    Ok(())
}

impl PermPair {
    /// Builds a pair from zero-based position arrays indexed by letter.
    pub fn new(pi0: Vec<usize>, pi1: Vec<usize>) -> Result<Self> {
        let d = pi0.len();
        if d < 2 || pi1.len() != d {
            return Err(GiemError::InvalidPerm("pi0 and pi1 need equal length >= 2".into()));
        }
        check_bijection(&pi0, d)?;
        check_bijection(&pi1, d)?;
        Ok(PermPair { pi: [pi0, pi1] })
    }

    /// Builds a pair from one-based positions, as written in configs.
    pub fn from_one_based(pi0: &[usize], pi1: &[usize]) -> Result<Self> {
        let shift = |v: &[usize]| -> Result<Vec<usize>> {
            v.iter()
                .map(|&x| {
                    x.checked_sub(1)
                        .ok_or_else(|| GiemError::InvalidPerm("positions start at 1".into()))
                })
                .collect()
        };
        PermPair::new(shift(pi0)?, shift(pi1)?)
    }

    /// The pair with `pi0` the identity and monodromy `p`.
    pub fn from_monodromy(p: &Monodromy) -> Result<Self> {
        let d = p.len();
        let pi0 = (0..d).collect();
        let pi1 = p.values().iter().map(|&v| v - 1).collect();
        PermPair::new(pi0, pi1)
    }

    pub fn d(&self) -> usize {
        self.pi[0].len()
    }

    pub fn positions(&self, side: StepType) -> &[usize] {
        &self.pi[side.index()]
    }

    pub fn position(&self, side: StepType, letter: Letter) -> usize {
        self.pi[side.index()][letter]
    }

    /// Letter occupying a zero-based position on the given side.
    pub fn letter_at(&self, side: StepType, position: usize) -> Letter {
        self.pi[side.index()]
            .iter()
            .position(|&p| p == position)
            .expect("positions form a bijection")
    }

    /// Letters in left-to-right order on the given side.
    pub fn order(&self, side: StepType) -> Vec<Letter> {
        let mut order = vec![0; self.d()];
        for (letter, &p) in self.pi[side.index()].iter().enumerate() {
            order[p] = letter;
        }
        order
    }

    pub fn monodromy(&self) -> Monodromy {
        let order0 = self.order(StepType::Zero);
        Monodromy(order0.iter().map(|&a| self.pi[1][a] + 1).collect())
    }

    pub fn is_irreducible(&self) -> bool {
        self.monodromy().is_irreducible()
    }

    /// `alpha(eps)`: the letter in last position on side `eps`.
    pub fn last(&self, side: StepType) -> Letter {
        self.letter_at(side, self.d() - 1)
    }

    /// `(winner, loser)` for a step of the given type.
    pub fn winner_loser(&self, step: StepType) -> (Letter, Letter) {
        (self.last(step), self.last(step.other()))
    }

    /// Combinatorial data after a Rauzy step of the given type: the side `eps`
    /// is kept, and on the other side the letter in last position is moved to
    /// just after the winner.
    pub fn rauzy_move(&self, step: StepType) -> PermPair {
        let d = self.d();
        let winner = self.last(step);
        let other = step.other().index();
        let anchor = self.pi[other][winner];
        let mut pi = self.pi.clone();
        for (letter, pos) in pi[other].iter_mut().enumerate() {
            let old = self.pi[other][letter];
            *pos = if old <= anchor {
                old
            } else if old < d - 1 {
                old + 1
            } else {
                anchor + 1
            };
        }
        PermPair { pi }
    }

    /// Number of interior cuts at which a standard i.e.m. with these data is
    /// discontinuous: consecutive domain intervals whose images are not
    /// consecutive.
    pub fn combinatorial_discontinuities(&self) -> usize {
        let p = self.monodromy();
        p.values().windows(2).filter(|w| w[1] != w[0] + 1).count()
    }

    /// The pair with `letter` split in two; the new letter (index `d`) follows
    /// it on both sides.
    pub fn split_letter(&self, letter: Letter) -> PermPair {
        let mut pi = self.pi.clone();
        for side in 0..2 {
            let at = self.pi[side][letter];
            for pos in pi[side].iter_mut() {
                if *pos > at {
                    *pos += 1;
                }
            }
            pi[side].push(at + 1);
        }
        PermPair { pi }
    }
}

/// One-based monodromy invariant `p = pi1 ∘ pi0^{-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monodromy(Vec<usize>);

impl Monodromy {
    pub fn new(values: Vec<usize>) -> Result<Self> {
        let d = values.len();
        let zero: Vec<usize> = values
            .iter()
            .map(|&v| {
                v.checked_sub(1)
                    .ok_or_else(|| GiemError::InvalidPerm("monodromy values start at 1".into()))
            })
            .collect::<Result<_>>()?;
        check_bijection(&zero, d)?;
        if d < 2 {
            return Err(GiemError::InvalidPerm("monodromy needs d >= 2".into()));
        }
        Ok(Monodromy(values))
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_irreducible(&self) -> bool {
        let d = self.0.len();
        let mut max = 0;
        for j in 0..d - 1 {
            max = max.max(self.0[j]);
            if max == j + 1 {
                return false;
            }
        }
        true
    }

    pub fn inverse(&self) -> Monodromy {
        let mut inv = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v - 1] = i + 1;
        }
        Monodromy(inv)
    }

    /// One discontinuity: `p = (k … d 1 … k−1)`.
    pub fn is_rotation(&self) -> bool {
        let d = self.0.len();
        let k = self.0[0];
        self.0.iter().enumerate().all(|(i, &v)| v == (k - 1 + i) % d + 1)
    }

    /// Type-1 move written on `p`: the value `d` keeps its place and `p(d)` is
    /// inserted right after it.
    pub fn move_one(&self) -> Monodromy {
        let d = self.0.len();
        let r = self.0.iter().position(|&v| v == d).expect("bijection");
        let mut out = Vec::with_capacity(d);
        out.extend_from_slice(&self.0[..=r]);
        if r + 1 < d {
            out.push(self.0[d - 1]);
            out.extend_from_slice(&self.0[r + 1..d - 1]);
        }
        Monodromy(out)
    }

    /// Type-0 move written on `p`: the type-1 move conjugated by inversion.
    pub fn move_zero(&self) -> Monodromy {
        self.inverse().move_one().inverse()
    }

    /// The printed type-0 rule `(p(2), …, p(1), p(s), …, p(d))` with `p(s) = 1`,
    /// read as "move `p(1)` to just before the value 1". Agrees with
    /// [`Monodromy::move_zero`] on the rotation class only.
    pub fn move_zero_printed(&self) -> Monodromy {
        let d = self.0.len();
        let s = self.0.iter().position(|&v| v == 1).expect("bijection");
        if s == 0 {
            return self.clone();
        }
        let mut out = Vec::with_capacity(d);
        out.extend_from_slice(&self.0[1..s]);
        out.push(self.0[0]);
        out.extend_from_slice(&self.0[s..]);
        Monodromy(out)
    }

    pub fn rauzy_move(&self, step: StepType) -> Monodromy {
        match step {
            StepType::Zero => self.move_zero(),
            StepType::One => self.move_one(),
        }
    }

    /// Monodromy invariants reachable by Rauzy moves (breadth first, in
    /// discovery order).
    pub fn rauzy_class(&self) -> Vec<Monodromy> {
        let mut seen = BTreeSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::from([self.clone()]);
        seen.insert(self.clone());
        while let Some(p) = queue.pop_front() {
            order.push(p.clone());
            for step in [StepType::Zero, StepType::One] {
                let next = PermPair::from_monodromy(&p)
                    .expect("valid monodromy")
                    .rauzy_move(step)
                    .monodromy();
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        order
    }
}

impl fmt::Display for Monodromy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(" "))
    }
}

/// Label of one renormalization step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepLabel {
    pub level: usize,
    pub step_type: StepType,
    pub winner: Letter,
    pub loser: Letter,
}

/// Whether every ordered pair `(beta, gamma)` is joined by a winner chain
/// inside every window of `k` steps.
///
/// For a tested level `n`, the chain starts at a level `n1` where `beta` wins,
/// with `|n - n1| < k`, runs through levels where each loser is the next
/// winner, and ends at level `n1 + p` where `gamma` loses, with
/// `|n - n1 - p| < k`. Tested levels are those whose full window
/// `n-k+1 ..= n+k-1` lies inside the sequence.
pub fn is_k_bounded(steps: &[StepLabel], d: usize, k: usize) -> Result<bool> {
    if k == 0 {
        return Ok(false);
    }
    let len = steps.len();
    if len + 1 < 2 * k {
        return Err(GiemError::WindowTooShort);
    }
    for n in (k - 1)..=(len - k) {
        let lo = n + 1 - k;
        let hi = n + k - 1;
        for beta in 0..d {
            for gamma in 0..d {
                if !chain_exists(steps, beta, gamma, lo, hi) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn chain_exists(steps: &[StepLabel], beta: Letter, gamma: Letter, lo: usize, hi: usize) -> bool {
    for n1 in lo..=hi {
        if steps[n1].winner != beta {
            continue;
        }
        let mut m = n1;
        loop {
            if steps[m].loser == gamma {
                return true;
            }
            if m + 1 > hi || steps[m].loser != steps[m + 1].winner {
                break;
            }
            m += 1;
        }
    }
    false
}

/// Smallest `k` for which the step sequence is certified k-bounded.
pub fn combinatorial_bound(steps: &[StepLabel], d: usize) -> Option<usize> {
    (1..=steps.len().div_ceil(2)).find(|&k| matches!(is_k_bounded(steps, d, k), Ok(true)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(p: &[usize]) -> PermPair {
        PermPair::from_monodromy(&Monodromy::new(p.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn monodromy_examples() {
        assert_eq!(pair(&[2, 1]).monodromy().values(), &[2, 1]);
        assert_eq!(pair(&[3, 2, 1]).monodromy().values(), &[3, 2, 1]);
        // pi0 = (A->2, B->1), pi1 = (A->1, B->2): p(1) = pi1(B) = 2.
        let pp = PermPair::from_one_based(&[2, 1], &[1, 2]).unwrap();
        assert_eq!(pp.monodromy().values(), &[2, 1]);
    }

    #[test]
    fn irreducibility_examples() {
        assert!(pair(&[2, 1]).is_irreducible());
        assert!(!pair(&[1, 2]).is_irreducible());
        assert!(pair(&[2, 3, 1]).is_irreducible());
        assert!(!pair(&[2, 1, 3]).is_irreducible());
    }

    #[test]
    fn winner_loser_examples() {
        let pp = pair(&[2, 1]);
        assert_eq!(pp.winner_loser(StepType::Zero), (1, 0));
        assert_eq!(pp.winner_loser(StepType::One), (0, 1));
        assert_eq!(pair(&[3, 2, 1]).winner_loser(StepType::Zero), (2, 0));
    }

    #[test]
    fn rauzy_move_examples() {
        let g = pair(&[2, 1]);
        assert_eq!(g.rauzy_move(StepType::Zero), g);
        assert_eq!(g.rauzy_move(StepType::One), g);
        let r = pair(&[3, 2, 1]);
        assert_eq!(r.rauzy_move(StepType::Zero).monodromy().values(), &[2, 3, 1]);
        assert_eq!(r.rauzy_move(StepType::One).monodromy().values(), &[3, 1, 2]);
    }

    #[test]
    fn printed_type_zero_rule_fails_off_the_rotation_class() {
        let p = Monodromy::new(vec![4, 1, 3, 2]).unwrap();
        assert!(p.is_irreducible());
        let moved = pair(&[4, 1, 3, 2]).rauzy_move(StepType::Zero).monodromy();
        assert_eq!(moved.values(), &[3, 1, 4, 2]);
        assert_ne!(p.move_zero_printed(), moved);
        assert_eq!(p.move_zero(), moved);
    }

    #[test]
    fn rotation_class_detection() {
        assert!(Monodromy::new(vec![2, 3, 1]).unwrap().is_rotation());
        assert!(Monodromy::new(vec![2, 1]).unwrap().is_rotation());
        assert!(!Monodromy::new(vec![3, 2, 1]).unwrap().is_rotation());
        assert_eq!(pair(&[2, 3, 1]).combinatorial_discontinuities(), 1);
        assert_eq!(pair(&[3, 2, 1]).combinatorial_discontinuities(), 2);
    }

    #[test]
    fn rauzy_class_sizes() {
        assert_eq!(Monodromy::new(vec![2, 1]).unwrap().rauzy_class().len(), 1);
        assert_eq!(Monodromy::new(vec![3, 2, 1]).unwrap().rauzy_class().len(), 3);
    }

    #[test]
    fn split_letter_keeps_images_adjacent() {
        let pp = pair(&[2, 1]).split_letter(0);
        assert_eq!(pp.monodromy().values(), &[2, 3, 1]);
    }

    fn golden_steps(len: usize) -> Vec<StepLabel> {
        (0..len)
            .map(|n| {
                let t = StepType::from_index(n % 2);
                let (winner, loser) = if n % 2 == 0 { (1, 0) } else { (0, 1) };
                StepLabel { level: n, step_type: t, winner, loser }
            })
            .collect()
    }

    #[test]
    fn k_bounded_examples() {
        let steps = golden_steps(12);
        assert_eq!(is_k_bounded(&steps, 2, 2), Ok(true));
        assert_eq!(is_k_bounded(&steps, 2, 1), Ok(false));
        assert_eq!(combinatorial_bound(&steps, 2), Some(2));
        let constant: Vec<StepLabel> = (0..12)
            .map(|n| StepLabel { level: n, step_type: StepType::Zero, winner: 1, loser: 0 })
            .collect();
        for k in 1..=6 {
            assert_eq!(is_k_bounded(&constant, 2, k), Ok(false));
        }
        assert_eq!(is_k_bounded(&steps[..2], 2, 2), Err(GiemError::WindowTooShort));
    }
}
