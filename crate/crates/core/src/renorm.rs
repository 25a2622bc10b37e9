//! Rauzy–Veech renormalization via return-time recursion.
//!
//! A level stores, per letter, the interval `I_α^n`, the length of its image
//! under the first-return map, the return time and the itinerary of branch
//! letters visited. Lengths are propagated as increments along itineraries, so
//! levels stay accurate when `|I^n|` is far below the working epsilon times the
//! size of the original domain.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;

use crate::combinatorics::{Letter, PermPair, StepLabel, StepType};
use crate::error::{GiemError, Result};
use crate::giem::Giem;
use crate::real::Real;
use crate::smoothmap::{distance_to_identity, distance_to_moebius, gauss_legendre, Jet2};

/// Sequence of branch letters, shared between levels.
#[derive(Debug)]
pub enum Itinerary {
    Base(Letter),
    Concat(Arc<Itinerary>, Arc<Itinerary>, usize),
}

impl Itinerary {
    pub fn len(&self) -> usize {
        match self {
            Itinerary::Base(_) => 1,
            Itinerary::Concat(_, _, n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn concat(a: &Arc<Itinerary>, b: &Arc<Itinerary>) -> Arc<Itinerary> {
        Arc::new(Itinerary::Concat(a.clone(), b.clone(), a.len() + b.len()))
    }

    pub fn for_each(&self, f: &mut impl FnMut(Letter)) {
        let mut stack: Vec<&Itinerary> = vec![self];
        while let Some(node) = stack.pop() {
            match node {
                Itinerary::Base(a) => f(*a),
                Itinerary::Concat(l, r, _) => {
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
    }

    pub fn to_vec(&self) -> Vec<Letter> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each(&mut |a| out.push(a));
        out
    }
}

/// State of the tower at one level. The level interval is `[0, |I^n|)`.
#[derive(Clone, Debug)]
pub struct LevelState<T: Real> {
    pub level: usize,
    pub perm: PermPair,
    pub lengths: Vec<T>,
    pub image_lengths: Vec<T>,
    pub q: Vec<BigUint>,
    itineraries: Vec<Arc<Itinerary>>,
    /// `|I|` of the original map.
    base_length: f64,
}

impl<T: Real> LevelState<T> {
    pub fn initial(f: &Giem<T>) -> Self {
        let d = f.d();
        LevelState {
            level: 0,
            perm: f.perm().clone(),
            lengths: f.lengths().to_vec(),
            image_lengths: f.image_lengths().to_vec(),
            q: vec![BigUint::one(); d],
            itineraries: (0..d).map(|a| Arc::new(Itinerary::Base(a))).collect(),
            base_length: f.total_length().to_f64(),
        }
    }

    pub fn d(&self) -> usize {
        self.lengths.len()
    }

    pub fn total_length(&self) -> T {
        self.lengths.iter().fold(T::zero(), |s, &x| s + x)
    }

    /// Return time as a machine integer (the itinerary length).
    pub fn return_time(&self, letter: Letter) -> usize {
        self.itineraries[letter].len()
    }

    pub fn itinerary(&self, letter: Letter) -> &Arc<Itinerary> {
        &self.itineraries[letter]
    }

    pub fn interval(&self, letter: Letter) -> (T, T) {
        let order = self.perm.order(StepType::Zero);
        let pos = self.perm.position(StepType::Zero, letter);
        let left = order[..pos].iter().fold(T::zero(), |s, &b| s + self.lengths[b]);
        (left, self.lengths[letter])
    }

    pub fn image_interval(&self, letter: Letter) -> (T, T) {
        let order = self.perm.order(StepType::One);
        let pos = self.perm.position(StepType::One, letter);
        let left = order[..pos].iter().fold(T::zero(), |s, &b| s + self.image_lengths[b]);
        (left, self.image_lengths[letter])
    }

    pub fn cuts(&self) -> Vec<T> {
        let mut acc = T::zero();
        let mut out = vec![acc];
        for a in self.perm.order(StepType::Zero) {
            acc += self.lengths[a];
            out.push(acc);
        }
        out
    }

    pub fn image_cuts(&self) -> Vec<T> {
        let mut acc = T::zero();
        let mut out = vec![acc];
        for a in self.perm.order(StepType::One) {
            acc += self.image_lengths[a];
            out.push(acc);
        }
        out
    }

    /// Letter of the level interval containing `x`.
    pub fn letter_at(&self, x: T) -> Option<Letter> {
        let cuts = self.cuts();
        let d = self.d();
        if !(x >= T::zero() && x < cuts[d]) {
            return None;
        }
        let pos = cuts[1..].iter().position(|&c| x < c).unwrap_or(d - 1);
        Some(self.perm.letter_at(StepType::Zero, pos))
    }

    /// Tie tolerance for comparing lengths at this level.
    pub fn tie_tolerance(&self) -> f64 {
        1e-13 * self.total_length().to_f64() * (T::epsilon() / f64::EPSILON)
    }

    /// A-priori absolute error of the level lengths: they are the original
    /// lengths pushed through the inverse of a matrix with entries bounded by
    /// the return times, so rounding grows like `eps · Σ_α q_α · |I|`. The
    /// factor 1/4 is about four times the error observed on the golden tower.
    pub fn rounding_error(&self) -> f64 {
        let total: f64 = self.itineraries.iter().map(|i| i.len() as f64).sum();
        0.25 * T::epsilon() * total * self.base_length
    }
}

/// Pushes `[x, x + h)` along an itinerary; returns the final left endpoint and length.
pub fn propagate<T: Real>(f: &Giem<T>, itinerary: &Itinerary, x: T, h: T) -> (T, T) {
    let (mut x, mut h) = (x, h);
    itinerary.for_each(&mut |a| {
        let b = f.branch(a);
        h = b.increment_unchecked(x, h);
        x = b.value_unchecked(x);
    });
    (x, h)
}

/// Type of the next step, or a tie/precision error.
pub fn detect_type<T: Real>(state: &LevelState<T>) -> Result<StepType> {
    let w0 = state.perm.last(StepType::Zero);
    let w1 = state.perm.last(StepType::One);
    let diff = state.lengths[w0] - state.image_lengths[w1];
    let mag = diff.abs().to_f64();
    if mag <= state.tie_tolerance() {
        return Err(GiemError::Tie { level: state.level });
    }
    let err = state.rounding_error();
    if mag <= err {
        return Err(GiemError::PrecisionExhausted {
            level: state.level,
            reason: format!("length difference {mag:e} below rounding error {err:e}"),
        });
    }
    Ok(if diff > T::zero() { StepType::Zero } else { StepType::One })
}

/// Solves `F(a + Δ) - F(a) = target` for the first-return branch along an itinerary.
fn solve_increment<T: Real>(f: &Giem<T>, it: &Itinerary, a: T, len: T, image: T, target: T) -> T {
    let mut delta = len * (target / image);
    let tol = T::from_f64(4.0 * T::epsilon());
    for _ in 0..60 {
        let (mut x, mut h, mut deriv) = (a, delta, T::one());
        it.for_each(&mut |b| {
            let br = f.branch(b);
            deriv *= br.jet_unchecked(x + h).d1;
            h = br.increment_unchecked(x, h);
            x = br.value_unchecked(x);
        });
        let step = (h - target) / deriv;
        delta -= step;
        if step.abs() <= tol * delta.abs() {
            break;
        }
    }
    delta
}

/// One Rauzy–Veech step.
pub fn step<T: Real>(state: &LevelState<T>, f: &Giem<T>) -> Result<(LevelState<T>, StepLabel)> {
    let eps = T::epsilon();
    let ty = detect_type(state)?;
    let (w, l) = state.perm.winner_loser(ty);
    let mut next = state.clone();
    next.level = state.level + 1;
    next.perm = state.perm.rauzy_move(ty);
    match ty {
        StepType::Zero => {
            let (aw, lw) = state.interval(w);
            let new_len = lw - state.image_lengths[l];
            if !(new_len > T::zero()) {
                return Err(GiemError::PrecisionExhausted {
                    level: state.level,
                    reason: "winner length not positive".into(),
                });
            }
            let (_, img_w) = propagate(f, &state.itineraries[w], aw, new_len);
            let it_l = Itinerary::concat(&state.itineraries[l], &state.itineraries[w]);
            // f_n(I_l) sits inside I_w; continue it along the winner's path.
            let (cl, hl) = state.image_interval(l);
            let (_, img_l) = propagate(f, &state.itineraries[w], cl, hl);
            next.lengths[w] = new_len;
            next.image_lengths[w] = img_w;
            next.image_lengths[l] = img_l;
            next.itineraries[l] = it_l;
        }
        StepType::One => {
            let (aw, lw) = state.interval(w);
            let target = state.image_lengths[w] - state.lengths[l];
            if !(target > T::zero()) {
                return Err(GiemError::PrecisionExhausted {
                    level: state.level,
                    reason: "winner image length not positive".into(),
                });
            }
            let delta =
                solve_increment(f, &state.itineraries[w], aw, lw, state.image_lengths[w], target);
            let rest = lw - delta;
            if !(delta > T::zero()) || !(rest > T::zero()) {
                return Err(GiemError::PrecisionExhausted {
                    level: state.level,
                    reason: "split of winner interval degenerate".into(),
                });
            }
            next.lengths[w] = delta;
            next.image_lengths[w] = target;
            next.lengths[l] = rest;
            next.itineraries[l] = Itinerary::concat(&state.itineraries[w], &state.itineraries[l]);
        }
    }
    next.q[l] = &state.q[l] + &state.q[w];
    let total = next.total_length();
    if total.to_f64() < 100.0 * eps {
        return Err(GiemError::PrecisionExhausted {
            level: next.level,
            reason: format!("|I^n| = {:e} below 100 epsilon", total.to_f64()),
        });
    }
    let label = StepLabel { level: state.level, step_type: ty, winner: w, loser: l };
    Ok((next, label))
}

/// Levels `0..=n` with the steps between them.
#[derive(Clone, Debug)]
pub struct RenormTrace<T: Real> {
    pub map: Giem<T>,
    pub states: Vec<LevelState<T>>,
    pub steps: Vec<StepLabel>,
    /// Why the trace ended before `n_max`, if it did.
    pub stop: Option<GiemError>,
}

impl<T: Real> RenormTrace<T> {
    /// Number of steps performed.
    pub fn levels(&self) -> usize {
        self.steps.len()
    }

    pub fn state(&self, n: usize) -> Result<&LevelState<T>> {
        self.states.get(n).ok_or(GiemError::LevelOutOfRange(n))
    }

    pub fn types(&self) -> Vec<StepType> {
        self.steps.iter().map(|s| s.step_type).collect()
    }

    /// Evaluates the level-`n` first-return map at `x ∈ I^n`.
    pub fn first_return_value(&self, n: usize, x: T) -> Result<T> {
        let s = self.state(n)?;
        let a = s.letter_at(x).ok_or(GiemError::OutOfDomain {
            x: x.to_f64(),
            lo: 0.0,
            hi: s.total_length().to_f64(),
        })?;
        let mut y = x;
        s.itineraries[a].for_each(&mut |b| y = self.map.branch(b).value_unchecked(y));
        Ok(y)
    }
}

/// Runs up to `n_max` steps; stops cleanly on ties and precision loss.
pub fn renormalize<T: Real>(f: &Giem<T>, n_max: usize) -> RenormTrace<T> {
    let mut states = vec![LevelState::initial(f)];
    let mut steps = Vec::new();
    let mut stop = None;
    for _ in 0..n_max {
        match step(states.last().unwrap(), f) {
            Ok((next, label)) => {
                states.push(next);
                steps.push(label);
            }
            Err(e) => {
                stop = Some(e);
                break;
            }
        }
    }
    RenormTrace { map: f.clone(), states, steps, stop }
}

/// Jets of `Z_{I_α^n}(R^n f)` on the uniform grid of `[0, 1]`.
pub fn zoomed_branch<T: Real>(
    trace: &RenormTrace<T>,
    n: usize,
    letter: Letter,
    grid: usize,
) -> Result<Vec<Jet2<T>>> {
    if grid < 2 {
        return Err(GiemError::Degenerate(format!("grid of {grid} points")));
    }
    let s = trace.state(n)?;
    let (a, len) = s.interval(letter);
    let it = s.itineraries[letter].to_vec();
    let f = &trace.map;
    // Points are tracked as offsets from the orbit of the left endpoint so
    // that the rescaling keeps relative accuracy on short intervals.
    let mut lefts = Vec::with_capacity(it.len());
    let mut x = a;
    for &b in &it {
        lefts.push(x);
        x = f.branch(b).value_unchecked(x);
    }
    let orbit = |t: T| -> (T, Jet2<T>) {
        let mut u = t * len;
        let mut jet = Jet2::identity(a + u);
        for (&b, &xl) in it.iter().zip(&lefts) {
            let br = f.branch(b);
            jet = Jet2::chain(br.jet_unchecked(xl + u), jet);
            u = br.increment_unchecked(xl, u);
        }
        (u, jet)
    };
    let jets: Vec<(T, Jet2<T>)> = (0..grid)
        .into_par_iter()
        .map(|j| orbit(T::from_usize(j) / T::from_usize(grid - 1)))
        .collect();
    let span = jets[grid - 1].0;
    if !(span > T::zero()) {
        return Err(GiemError::NonMonotone(format!("level {n} branch image is empty")));
    }
    Ok(jets
        .into_iter()
        .map(|(u, j)| Jet2 {
            value: u / span,
            d1: j.d1 * len / span,
            d2: j.d2 * len * len / span,
        })
        .collect())
}

/// Orbit data of one level interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitSummary {
    /// `ln D R^n f(right) - ln D R^n f(left)` over `I_α^n`.
    pub mean_nonlinearity: f64,
    /// The same integral as a sum of quadratures along the orbit intervals.
    pub orbit_sum: f64,
    /// `Σ_{i=1}^{q} |f^i(I_α^n)| / |I|`.
    pub letter_measure: f64,
    /// Largest `|f^i(I_α^n)|`, `0 <= i < q`.
    pub max_piece: f64,
}

/// Walks the orbit of `I_α^n` once and collects both computations of the
/// mean nonlinearity, the letter measure and the largest orbit interval.
pub fn orbit_summary<T: Real>(trace: &RenormTrace<T>, n: usize, letter: Letter) -> Result<OrbitSummary> {
    let s = trace.state(n)?;
    let f = &trace.map;
    let (a, len) = s.interval(letter);
    let total = f.total_length();
    let (mut x, mut h) = (a, len);
    let (mut log_left, mut log_right, mut quad) = (T::zero(), T::zero(), T::zero());
    let mut measure = T::zero();
    let mut max_piece = T::zero();
    let panel = T::from_f64(1.0 / 64.0);
    s.itineraries[letter].for_each(&mut |b| {
        let br = f.branch(b);
        max_piece = max_piece.max(h);
        log_left += br.jet_unchecked(x).d1.ln();
        log_right += br.jet_unchecked(x + h).d1.ln();
        let panels = (h / panel).to_f64().ceil().max(1.0) as usize;
        let step = h / T::from_usize(panels);
        for k in 0..panels {
            let x0 = x + T::from_usize(k) * step;
            quad += gauss_legendre(x0, step, |y| br.jet_unchecked(y).nonlinearity());
        }
        h = br.increment_unchecked(x, h);
        x = br.value_unchecked(x);
        measure += h;
    });
    Ok(OrbitSummary {
        mean_nonlinearity: (log_right - log_left).to_f64(),
        orbit_sum: quad.to_f64(),
        letter_measure: (measure / total).to_f64(),
        max_piece: max_piece.to_f64(),
    })
}

/// `N_α^n`, by the chain rule at the endpoints.
pub fn mean_nonlinearity_level<T: Real>(trace: &RenormTrace<T>, n: usize, letter: Letter) -> Result<f64> {
    Ok(orbit_summary(trace, n, letter)?.mean_nonlinearity)
}

/// One row of the convergence diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub letter: Letter,
    pub mean_nonlinearity: f64,
    pub orbit_sum: f64,
    pub d_moebius: f64,
    pub d_identity: f64,
    pub thm2_residual: f64,
    pub letter_measure: f64,
    pub level_length: f64,
    pub partition_norm: f64,
}

/// Diagnostics for every `(n, α)` with `n <= max_level`.
pub fn convergence_table<T: Real>(
    trace: &RenormTrace<T>,
    max_level: usize,
    grid: usize,
) -> Result<Vec<ConvergenceRow>> {
    let mean = trace.map.mean_nonlinearity().to_f64();
    let d = trace.map.d();
    let top = max_level.min(trace.levels());
    let mut rows = Vec::with_capacity((top + 1) * d);
    for n in 0..=top {
        let summaries: Vec<OrbitSummary> =
            (0..d).map(|a| orbit_summary(trace, n, a)).collect::<Result<_>>()?;
        let norm = summaries.iter().map(|s| s.max_piece).fold(0.0, f64::max);
        let len = trace.states[n].total_length().to_f64();
        for (a, sum) in summaries.iter().enumerate() {
            let jets = zoomed_branch(trace, n, a, grid)?;
            rows.push(ConvergenceRow {
                level: n,
                letter: a,
                mean_nonlinearity: sum.mean_nonlinearity,
                orbit_sum: sum.orbit_sum,
                d_moebius: distance_to_moebius(&jets, T::from_f64(sum.mean_nonlinearity)),
                d_identity: distance_to_identity(&jets),
                thm2_residual: (sum.mean_nonlinearity - sum.letter_measure * mean).abs(),
                letter_measure: sum.letter_measure,
                level_length: len,
                partition_norm: norm,
            });
        }
    }
    Ok(rows)
}

/// One interval `f^i(I_α^n)` of the dynamical partition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionInterval {
    pub letter: Letter,
    pub index: usize,
    pub left: f64,
    pub len: f64,
    /// Tag of the level `n - 1` partition interval containing this one.
    pub parent: Option<(Letter, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionSnapshot {
    pub level: usize,
    pub intervals: Vec<PartitionInterval>,
    pub norm: f64,
}

/// Orbit intervals `f^i(I_α^n)`, `0 <= i < q_α^n`, from the cylinder recursion.
pub fn partition<T: Real>(trace: &RenormTrace<T>, n: usize, budget: usize) -> Result<PartitionSnapshot> {
    let tower = crate::symbolic::Tower::build(trace, n, budget)?;
    partition_from_tower(trace, &tower, n)
}

pub fn partition_from_tower<T: Real>(
    trace: &RenormTrace<T>,
    tower: &crate::symbolic::Tower<T>,
    n: usize,
) -> Result<PartitionSnapshot> {
    let d = tower.d();
    let mut intervals = Vec::new();
    let mut norm: f64 = 0.0;
    for a in 0..d {
        let orbit = tower.orbit(n, a)?;
        for (i, p) in orbit[..orbit.len() - 1].iter().enumerate() {
            let parent = if n == 0 {
                None
            } else {
                let (b, j) = p.parent;
                if j + 1 < tower.orbit(n - 1, b)?.len() {
                    Some((b, j))
                } else {
                    // f^q(I_b) lies in the previous level interval.
                    let mid = p.left + p.len * T::from_f64(0.5);
                    trace.states[n - 1].letter_at(mid).map(|c| (c, 0))
                }
            };
            let len = p.len.to_f64();
            norm = norm.max(len);
            intervals.push(PartitionInterval { letter: a, index: i, left: p.left.to_f64(), len, parent });
        }
    }
    intervals.sort_by(|x, y| x.left.total_cmp(&y.left));
    Ok(PartitionSnapshot { level: n, intervals, norm })
}

/// Length ratios at one level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryReport {
    pub level: usize,
    pub domain_ratio: f64,
    pub image_ratio: f64,
    /// Compared lengths of the step taken at this level, smaller over larger.
    pub winner_loser_ratio: Option<f64>,
    pub min_derivative: f64,
    pub max_derivative: f64,
}

pub fn geometry_report<T: Real>(trace: &RenormTrace<T>, n: usize, grid: usize) -> Result<GeometryReport> {
    let s = trace.state(n)?;
    let ratio = |v: &[T]| {
        let max = v.iter().map(|x| x.to_f64()).fold(f64::MIN, f64::max);
        let min = v.iter().map(|x| x.to_f64()).fold(f64::MAX, f64::min);
        max / min
    };
    let winner_loser_ratio = trace.steps.get(n).map(|st| {
        let (w, l) = (st.winner, st.loser);
        match st.step_type {
            StepType::Zero => s.image_lengths[l].to_f64() / s.lengths[w].to_f64(),
            StepType::One => s.lengths[l].to_f64() / s.image_lengths[w].to_f64(),
        }
    });
    let (mut lo, mut hi) = (f64::MAX, f64::MIN);
    for a in 0..s.d() {
        let jets = zoomed_branch(trace, n, a, grid)?;
        let scale = s.image_lengths[a].to_f64() / s.lengths[a].to_f64();
        for j in &jets {
            let d = j.d1.to_f64() * scale;
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    Ok(GeometryReport {
        level: n,
        domain_ratio: ratio(&s.lengths),
        image_ratio: ratio(&s.image_lengths),
        winner_loser_ratio,
        min_derivative: lo,
        max_derivative: hi,
    })
}

/// Return time and value of the first return of `x` to `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReturnSample<T> {
    pub x: T,
    pub time: usize,
    pub value: T,
}

/// First return to `[lo, hi)` by direct iteration.
pub fn first_return_bruteforce<T: Real>(
    f: &Giem<T>,
    lo: T,
    hi: T,
    points: &[T],
    max_iter: usize,
) -> Result<Vec<ReturnSample<T>>> {
    points
        .iter()
        .map(|&x| {
            let mut y = x;
            for k in 1..=max_iter {
                y = f.apply(y)?;
                if y >= lo && y < hi {
                    return Ok(ReturnSample { x, time: k, value: y });
                }
            }
            Err(GiemError::MaxIterations(max_iter))
        })
        .collect()
}

/// Correspondence between the two-interval and the `d`-interval towers.
#[derive(Clone, Debug, PartialEq)]
pub struct Prop31Report {
    /// `matches[i]` is the `d`-level whose interval equals the `i`-th
    /// two-interval level.
    pub matches: Vec<usize>,
    pub max_gap: usize,
    pub max_value_error: f64,
    /// Two-interval levels where the step type changes.
    pub rotation_levels: Vec<usize>,
    /// Two-interval type sequence.
    pub two_types: Vec<StepType>,
}

/// Runs both towers and matches their levels by interval, cut and values.
pub fn check_prop31<T: Real>(f: &Giem<T>, i_max: usize, tol: f64) -> Result<Prop31Report> {
    let two = f.group_two(tol)?;
    let d = f.d();
    let t2 = renormalize(&two, i_max);
    if t2.levels() < i_max {
        return Err(t2.stop.clone().unwrap_or(GiemError::LevelOutOfRange(i_max)));
    }
    // Matching levels advance by less than d, so this depth covers i_max.
    let td = renormalize(f, (d - 1) * i_max + d);
    let mut matches = Vec::with_capacity(i_max + 1);
    let mut max_err: f64 = 0.0;
    let mut start = 0;
    for i in 0..=i_max {
        let s2 = &t2.states[i];
        let len2 = s2.total_length();
        let m = (start..td.states.len())
            .find(|&m| (td.states[m].total_length() - len2).abs().to_f64() <= tol)
            .ok_or_else(|| {
                GiemError::Mismatch(format!(
                    "two-interval level {i} (|I| = {len2}) has no counterpart among {} levels",
                    td.states.len()
                ))
            })?;
        let sd = &td.states[m];
        let cut2 = s2.cuts()[1];
        if !sd.cuts().iter().any(|&c| (c - cut2).abs().to_f64() <= tol) {
            return Err(GiemError::Mismatch(format!(
                "cut {cut2} of two-interval level {i} missing at level {m}"
            )));
        }
        for k in 0..32 {
            let x = len2 * T::from_f64((k as f64 + 0.37) / 32.0);
            let a = t2.first_return_value(i, x)?;
            let b = td.first_return_value(m, x)?;
            let e = (a - b).abs().to_f64();
            max_err = max_err.max(e);
            if e > tol {
                return Err(GiemError::Mismatch(format!(
                    "levels {i}/{m} disagree at {x}: {a} vs {b}"
                )));
            }
        }
        matches.push(m);
        start = m;
    }
    let max_gap = matches.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
    let types = t2.types();
    let rotation_levels = (1..types.len()).filter(|&i| types[i] != types[i - 1]).collect();
    Ok(Prop31Report {
        matches,
        max_gap,
        max_value_error: max_err,
        rotation_levels,
        two_types: types,
    })
}

/// Step types of a two-interval rotation with rotation number `rho`, from the
/// Farey map.
pub fn rotation_types(rho: f64, count: usize) -> Vec<StepType> {
    let mut r = rho;
    (0..count)
        .map(|_| {
            if r > 0.5 {
                r = 2.0 - 1.0 / r;
                StepType::Zero
            } else {
                r /= 1.0 - r;
                StepType::One
            }
        })
        .collect()
}

/// Bisects a one-parameter family whose rotation number increases with the
/// parameter, until its first `levels` step types equal `target`.
pub fn calibrate_rotation<T, F>(family: F, lo: T, hi: T, target: &[StepType]) -> Result<(T, Giem<T>)>
where
    T: Real,
    F: Fn(T) -> Result<Giem<T>>,
{
    let (mut a, mut b) = (lo, hi);
    let mut best: Option<(usize, T, Giem<T>)> = None;
    for _ in 0..200 {
        let mid = (a + b) / T::from_f64(2.0);
        let g = family(mid)?;
        let mut state = LevelState::initial(&g);
        let mut matched = 0;
        let mut too_large = None;
        while matched < target.len() {
            match detect_type(&state) {
                Ok(ty) if ty == target[matched] => {
                    state = match step(&state, &g) {
                        Ok((s, _)) => s,
                        Err(_) => break,
                    };
                    matched += 1;
                }
                Ok(ty) => {
                    too_large = Some(ty == StepType::Zero);
                    break;
                }
                Err(GiemError::Tie { .. }) => {
                    too_large = Some(target[matched] == StepType::One);
                    break;
                }
                Err(_) => break,
            }
        }
        if best.as_ref().is_none_or(|(m, _, _)| matched > *m) {
            best = Some((matched, mid, g));
        }
        match too_large {
            None => break,
            Some(true) => b = mid,
            Some(false) => a = mid,
        }
        if (b - a).abs() <= T::from_f64(T::epsilon()) * mid.abs() {
            break;
        }
    }
    let (_, t, g) = best.expect("at least one bisection step");
    Ok((t, g))
}
