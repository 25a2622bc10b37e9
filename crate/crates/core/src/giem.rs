//! Generalized interval exchange maps: data model, evaluation, validation and
//! the constructors for the test families.

use crate::combinatorics::{Alphabet, Letter, Monodromy, PermPair, StepType};
use crate::error::{GiemError, Result};
use crate::real::Real;
use crate::smoothmap::{gauss_legendre, estimate_smoothness, Jet2, SmoothMap, Smoothness};

/// A g.i.e.m. on `[0, |I|)`.
///
/// Lengths and image lengths are stored per letter; cut points are prefix
/// sums in domain (respectively image) order.
#[derive(Clone, Debug)]
pub struct Giem<T: Real> {
    alphabet: Alphabet,
    perm: PermPair,
    lengths: Vec<T>,
    image_lengths: Vec<T>,
    branches: Vec<SmoothMap<T>>,
}

/// Summary returned by [`Giem::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessReport {
    /// `Var(log Df) = Σ ∫_{I_α} |n_f|`, by quadrature.
    pub variation: f64,
    /// `∫_I D²f / Df`, as a sum of exact branch integrals.
    pub mean_nonlinearity: f64,
    pub branches: Vec<Smoothness>,
    pub nu: f64,
}

/// Absolute tolerance used by constructors when none is given.
pub fn default_tolerance<T: Real>() -> f64 {
    1e-12_f64.max(1e4 * T::epsilon())
}

fn prefix_sums<T: Real>(order: &[Letter], lengths: &[T]) -> Vec<T> {
    let mut cuts = Vec::with_capacity(order.len() + 1);
    let mut acc = T::zero();
    cuts.push(acc);
    for &a in order {
        acc += lengths[a];
        cuts.push(acc);
    }
    cuts
}

impl<T: Real> Giem<T> {
    /// Assembles a map and checks that branches match the intervals given by
    /// the lengths.
    pub fn new(
        alphabet: Alphabet,
        perm: PermPair,
        lengths: Vec<T>,
        image_lengths: Vec<T>,
        branches: Vec<SmoothMap<T>>,
    ) -> Result<Self> {
        let d = perm.d();
        if alphabet.len() != d || lengths.len() != d || image_lengths.len() != d || branches.len() != d
        {
            return Err(GiemError::IncompatibleLengths(format!(
                "alphabet, lengths, image lengths and branches must all have {d} entries"
            )));
        }
        if !perm.is_irreducible() {
            return Err(GiemError::Reducible);
        }
        for (a, (l, m)) in lengths.iter().zip(&image_lengths).enumerate() {
            if !(*l > T::zero()) || !(*m > T::zero()) {
                return Err(GiemError::NonMonotone(format!(
                    "interval {} has non-positive length (cuts out of order)",
                    alphabet.name(a)
                )));
            }
        }
        let g = Giem { alphabet, perm, lengths, image_lengths, branches };
        g.check_tiling(default_tolerance::<T>())?;
        Ok(g)
    }

    fn check_tiling(&self, tol: f64) -> Result<()> {
        let total: T = self.lengths.iter().fold(T::zero(), |s, &x| s + x);
        let image_total: T = self.image_lengths.iter().fold(T::zero(), |s, &x| s + x);
        let scale = tol * total.to_f64().max(1e-300);
        if (total - image_total).abs().to_f64() > scale {
            return Err(GiemError::TilingGap(format!(
                "domain length {total} but images cover {image_total}"
            )));
        }
        for a in 0..self.d() {
            let (lo, hi) = self.branches[a].domain();
            let (l, len) = self.interval(a);
            if (lo - l).abs().to_f64() > scale || (hi - (l + len)).abs().to_f64() > scale {
                return Err(GiemError::TilingGap(format!(
                    "branch {} is defined on [{lo}, {hi}], interval is [{l}, {})",
                    self.alphabet.name(a),
                    l + len
                )));
            }
            let (ilo, ihi) = self.branches[a].image();
            let (c, img) = self.image_interval(a);
            if (ilo - c).abs().to_f64() > scale || (ihi - (c + img)).abs().to_f64() > scale {
                return Err(GiemError::TilingGap(format!(
                    "branch {} maps onto [{ilo}, {ihi}], expected [{c}, {})",
                    self.alphabet.name(a),
                    c + img
                )));
            }
        }
        Ok(())
    }

    // ---- accessors ----------------------------------------------------

    pub fn d(&self) -> usize {
        self.perm.d()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn perm(&self) -> &PermPair {
        &self.perm
    }

    pub fn lengths(&self) -> &[T] {
        &self.lengths
    }

    pub fn image_lengths(&self) -> &[T] {
        &self.image_lengths
    }

    pub fn branch(&self, letter: Letter) -> &SmoothMap<T> {
        &self.branches[letter]
    }

    pub fn branches(&self) -> &[SmoothMap<T>] {
        &self.branches
    }

    pub fn total_length(&self) -> T {
        self.lengths.iter().fold(T::zero(), |s, &x| s + x)
    }

    /// Domain cuts `u_0 < … < u_d`.
    pub fn cuts(&self) -> Vec<T> {
        prefix_sums(&self.perm.order(StepType::Zero), &self.lengths)
    }

    /// Image cuts in image order.
    pub fn image_cuts(&self) -> Vec<T> {
        prefix_sums(&self.perm.order(StepType::One), &self.image_lengths)
    }

    /// `(left endpoint, length)` of `I_α`.
    pub fn interval(&self, letter: Letter) -> (T, T) {
        let order = self.perm.order(StepType::Zero);
        let pos = self.perm.position(StepType::Zero, letter);
        let left = order[..pos].iter().fold(T::zero(), |s, &b| s + self.lengths[b]);
        (left, self.lengths[letter])
    }

    /// `(left endpoint, length)` of `f(I_α)`.
    pub fn image_interval(&self, letter: Letter) -> (T, T) {
        let order = self.perm.order(StepType::One);
        let pos = self.perm.position(StepType::One, letter);
        let left = order[..pos].iter().fold(T::zero(), |s, &b| s + self.image_lengths[b]);
        (left, self.image_lengths[letter])
    }

    // ---- evaluation ---------------------------------------------------

    /// Letter of the half-open interval containing `x`.
    pub fn letter_at(&self, x: T) -> Result<Letter> {
        let cuts = self.cuts();
        let d = self.d();
        if !(x >= cuts[0] && x < cuts[d]) {
            return Err(GiemError::OutOfDomain {
                x: x.to_f64(),
                lo: cuts[0].to_f64(),
                hi: cuts[d].to_f64(),
            });
        }
        let pos = cuts[1..].iter().position(|&c| x < c).unwrap_or(d - 1);
        Ok(self.perm.letter_at(StepType::Zero, pos))
    }

    pub fn apply(&self, x: T) -> Result<T> {
        let a = self.letter_at(x)?;
        Ok(self.branches[a].value_unchecked(x))
    }

    pub fn apply_jet(&self, x: T) -> Result<Jet2<T>> {
        let a = self.letter_at(x)?;
        Ok(self.branches[a].jet_unchecked(x))
    }

    /// Interior cuts where the left limit of `f` differs from its value.
    pub fn discontinuities(&self, tol: f64) -> usize {
        let order = self.perm.order(StepType::Zero);
        order
            .windows(2)
            .filter(|w| {
                let (c, img) = self.image_interval(w[0]);
                let left_limit = c + img;
                let (value, _) = self.image_interval(w[1]);
                (left_limit - value).abs().to_f64() > tol
            })
            .count()
    }

    /// Genus one: at most two discontinuities.
    pub fn is_genus_one(&self, tol: f64) -> bool {
        self.discontinuities(tol) <= 2
    }

    /// `∫_I D²f / Df` as the sum of exact branch integrals.
    pub fn mean_nonlinearity(&self) -> T {
        (0..self.d()).fold(T::zero(), |s, a| {
            let (l, len) = self.interval(a);
            let jl = self.branches[a].jet_unchecked(l);
            let jr = self.branches[a].jet_unchecked(l + len);
            s + (jr.d1 / jl.d1).ln()
        })
    }

    /// `Σ_α ∫_{I_α} |n_f|` by composite Gauss-Legendre on `panels` panels per branch.
    pub fn variation(&self, panels: usize) -> f64 {
        let mut total = 0.0;
        for a in 0..self.d() {
            let (l, len) = self.interval(a);
            let h = len / T::from_usize(panels);
            for k in 0..panels {
                let x0 = l + T::from_usize(k) * h;
                total += gauss_legendre(x0, h, |x| {
                    self.branches[a].jet_unchecked(x).nonlinearity().abs()
                })
                .to_f64();
            }
        }
        total
    }

    /// Checks tiling, monotonicity on a grid and irreducibility.
    pub fn validate(&self, tol: f64) -> Result<SmoothnessReport> {
        if !self.perm.is_irreducible() {
            return Err(GiemError::Reducible);
        }
        self.check_tiling(tol)?;
        let mut smooth = Vec::with_capacity(self.d());
        for a in 0..self.d() {
            let (l, len) = self.interval(a);
            for k in 0..=64 {
                let x = l + len * T::from_usize(k) / T::from_f64(64.0);
                let j = self.branches[a].jet_unchecked(x);
                if !(j.d1 > T::zero()) || !j.d1.is_finite() {
                    return Err(GiemError::NonMonotone(format!(
                        "branch {} has derivative {} at {x}",
                        self.alphabet.name(a),
                        j.d1
                    )));
                }
            }
            smooth.push(estimate_smoothness(&self.branches[a], 257)?);
        }
        Ok(SmoothnessReport {
            variation: self.variation(16),
            mean_nonlinearity: self.mean_nonlinearity().to_f64(),
            branches: smooth,
            nu: 1.0,
        })
    }

    /// Estimates the rotation number of a one-discontinuity map as the
    /// number of wraps per iterate of the orbit of `x0`.
    pub fn rotation_number(&self, x0: T, iterations: usize) -> Result<f64> {
        let mut x = x0;
        let mut wraps = 0usize;
        for _ in 0..iterations {
            let y = self.apply(x)?;
            if y < x {
                wraps += 1;
            }
            x = y;
        }
        Ok(wraps as f64 / iterations as f64)
    }

    // ---- constructors -------------------------------------------------

    /// Standard i.e.m.: translations, lengths summing to 1.
    pub fn standard_iem(lengths: Vec<T>, perm: PermPair) -> Result<Self> {
        Self::piecewise_affine(lengths.clone(), lengths, perm)
    }

    /// Affine branches mapping each `I_α` onto its image interval.
    pub fn piecewise_affine(lengths: Vec<T>, image_lengths: Vec<T>, perm: PermPair) -> Result<Self> {
        let d = perm.d();
        check_lengths(&lengths, &image_lengths, d)?;
        let alphabet = Alphabet::standard(d);
        let dom = prefix_by_letter(&perm, StepType::Zero, &lengths);
        let img = prefix_by_letter(&perm, StepType::One, &image_lengths);
        let branches = (0..d)
            .map(|a| {
                if lengths[a] == image_lengths[a] {
                    SmoothMap::affine(T::one(), img[a] - dom[a], dom[a], dom[a] + lengths[a])
                } else {
                    SmoothMap::affine_onto(dom[a], lengths[a], img[a], image_lengths[a])
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, perm, lengths, image_lengths, branches)
    }

    /// Branch `α` is `M_{N_α}` conjugated by the affine maps from `[0, 1]`
    /// onto `I_α` and onto its image.
    pub fn piecewise_moebius(
        lengths: Vec<T>,
        image_lengths: Vec<T>,
        perm: PermPair,
        params: Vec<T>,
    ) -> Result<Self> {
        let d = perm.d();
        check_lengths(&lengths, &image_lengths, d)?;
        if params.len() != d {
            return Err(GiemError::IncompatibleLengths(format!(
                "{} Möbius parameters for {d} letters",
                params.len()
            )));
        }
        let alphabet = Alphabet::standard(d);
        let dom = prefix_by_letter(&perm, StepType::Zero, &lengths);
        let img = prefix_by_letter(&perm, StepType::One, &image_lengths);
        let branches = (0..d)
            .map(|a| {
                // The conjugated map is itself fractional linear.
                let (l, len, c, img_len) = (dom[a], lengths[a], img[a], image_lengths[a]);
                let half = params[a] / T::from_f64(2.0);
                let (e, em1) = ((-half).exp(), (-half).exp_m1());
                let slope = img_len * e + c * em1;
                SmoothMap::general_moebius(slope, c * len - l * slope, em1, len - l * em1, l, l + len)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, perm, lengths, image_lengths, branches)
    }

    /// `h ∘ R_ρ ∘ h⁻¹` for an increasing homeomorphism `h` of `[0, 1]`, cut
    /// at its discontinuity and at the images of the break points of `h`.
    pub fn conjugated_rotation(h: &SmoothMap<T>, rho: T) -> Result<Self> {
        let (lo, hi) = h.domain();
        let (ilo, ihi) = h.image();
        let tol = T::from_f64(default_tolerance::<T>());
        if (lo.abs() > tol) || (hi - T::one()).abs() > tol || ilo.abs() > tol || (ihi - T::one()).abs() > tol
        {
            return Err(GiemError::NotInvertible(
                "conjugacy must map [0, 1] onto itself".into(),
            ));
        }
        if !(rho > T::zero() && rho < T::one()) {
            return Err(GiemError::Config(format!("rotation number {rho} outside (0, 1)")));
        }
        let split = T::one() - rho;
        // Cut points in the rotation's coordinate.
        let mut ts = vec![split];
        for b in h.breakpoints() {
            ts.push(b);
            let shifted = if b >= rho { b - rho } else { b - rho + T::one() };
            ts.push(shifted);
        }
        ts.retain(|&t| t > tol && t < T::one() - tol);
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup_by(|a, b| (*a - *b).abs() <= tol);
        let mut bounds = vec![T::zero()];
        bounds.extend(ts);
        bounds.push(T::one());
        let k = bounds.len() - 1;
        let m = bounds.iter().take(k).filter(|&&t| t < split - tol).count();
        let inv = h.inverse();
        let mut lengths = Vec::with_capacity(k);
        let mut image_lengths = Vec::with_capacity(k);
        let mut branches = Vec::with_capacity(k);
        for j in 0..k {
            let (t0, t1) = (bounds[j], bounds[j + 1]);
            let shift = if j < m { rho } else { rho - T::one() };
            let x0 = h.value_unchecked(t0);
            let len = h.increment_unchecked(t0, t1 - t0);
            let image_start = t0 + shift;
            let image_len = h.increment_unchecked(image_start, t1 - t0);
            let pull = inv.restrict(x0, x0 + len)?;
            let rotate = SmoothMap::affine(T::one(), shift, t0, t1)?;
            let push = h.restrict(image_start, image_start + (t1 - t0))?;
            branches.push(SmoothMap::compose(vec![pull, rotate, push])?);
            lengths.push(len);
            image_lengths.push(image_len);
        }
        let p: Vec<usize> = (0..k).map(|j| if j < m { j + (k - m) + 1 } else { j - m + 1 }).collect();
        let perm = PermPair::from_monodromy(&Monodromy::new(p)?)?;
        Self::new(Alphabet::standard(k), perm, lengths, image_lengths, branches)
    }

    /// Splits `I_letter` at the absolute point `at`; the right part becomes a
    /// new letter that follows `letter` in domain and image order.
    pub fn split_letter(&self, letter: Letter, at: T) -> Result<Self> {
        let (l, len) = self.interval(letter);
        if !(at > l && at < l + len) {
            return Err(GiemError::OutOfDomain {
                x: at.to_f64(),
                lo: l.to_f64(),
                hi: (l + len).to_f64(),
            });
        }
        let next = self.alphabet.names().len();
        let name = Alphabet::standard(next + 1).name(next).to_string();
        let alphabet = self.alphabet.with_extra(&name)?;
        let perm = self.perm.split_letter(letter);
        let branch = &self.branches[letter];
        let left_len = at - l;
        let right_len = l + len - at;
        let left_img = branch.increment_unchecked(l, left_len);
        let right_img = self.image_lengths[letter] - left_img;
        let mut lengths = self.lengths.clone();
        let mut image_lengths = self.image_lengths.clone();
        let mut branches = self.branches.clone();
        lengths[letter] = left_len;
        image_lengths[letter] = left_img;
        branches[letter] = branch.restrict(l, at)?;
        lengths.push(right_len);
        image_lengths.push(right_img);
        branches.push(branch.restrict(at, l + len)?);
        Self::new(alphabet, perm, lengths, image_lengths, branches)
    }

    /// The two-interval map obtained by gluing the intervals on either side of
    /// the single discontinuity.
    pub fn group_two(&self, tol: f64) -> Result<Self> {
        let count = self.discontinuities(tol);
        if count != 1 {
            return Err(GiemError::Discontinuities(count));
        }
        if self.d() == 2 {
            return Ok(self.clone());
        }
        let order = self.perm.order(StepType::Zero);
        let jump = order
            .windows(2)
            .position(|w| {
                let (c, img) = self.image_interval(w[0]);
                let (v, _) = self.image_interval(w[1]);
                (c + img - v).abs().to_f64() > tol
            })
            .expect("one discontinuity")
            + 1;
        let groups = [&order[..jump], &order[jump..]];
        let mut lengths = Vec::new();
        let mut image_lengths = Vec::new();
        let mut branches = Vec::new();
        for g in groups {
            lengths.push(g.iter().fold(T::zero(), |s, &a| s + self.lengths[a]));
            image_lengths.push(g.iter().fold(T::zero(), |s, &a| s + self.image_lengths[a]));
            branches.push(SmoothMap::piecewise(g.iter().map(|&a| self.branches[a].clone()).collect())?);
        }
        // One discontinuity in an irreducible pair forces the rotation order.
        let perm = PermPair::new(vec![0, 1], vec![1, 0])?;
        Self::new(Alphabet::standard(2), perm, lengths, image_lengths, branches)
    }
}

fn check_lengths<T: Real>(lengths: &[T], image_lengths: &[T], d: usize) -> Result<()> {
    if lengths.len() != d || image_lengths.len() != d {
        return Err(GiemError::IncompatibleLengths(format!(
            "expected {d} lengths, got {} and {}",
            lengths.len(),
            image_lengths.len()
        )));
    }
    let tol = default_tolerance::<T>();
    for v in [lengths, image_lengths] {
        let sum = v.iter().fold(T::zero(), |s, &x| s + x);
        if (sum - T::one()).abs().to_f64() > tol {
            return Err(GiemError::IncompatibleLengths(format!("lengths sum to {sum}, not 1")));
        }
        if v.iter().any(|x| !(*x > T::zero())) {
            return Err(GiemError::NonMonotone("non-positive length (cuts out of order)".into()));
        }
    }
    Ok(())
}

fn prefix_by_letter<T: Real>(perm: &PermPair, side: StepType, lengths: &[T]) -> Vec<T> {
    let order = perm.order(side);
    let mut left = vec![T::zero(); lengths.len()];
    let mut acc = T::zero();
    for &a in &order {
        left[a] = acc;
        acc += lengths[a];
    }
    left
}

/// Bisects a scalar family for vanishing mean nonlinearity.
///
/// Returns the parameter and the member with `|meanN| < 1e-12` (or the
/// closest member after 200 halvings).
pub fn calibrate_zero_mean<T, F>(family: F, t0: T, t1: T) -> Result<(T, Giem<T>)>
where
    T: Real,
    F: Fn(T) -> Result<Giem<T>>,
{
    let target = 1e-12;
    let g0 = family(t0)?;
    let m0 = g0.mean_nonlinearity();
    if m0.abs().to_f64() < target {
        return Ok((t0, g0));
    }
    let g1 = family(t1)?;
    let m1 = g1.mean_nonlinearity();
    if m1.abs().to_f64() < target {
        return Ok((t1, g1));
    }
    if (m0 > T::zero()) == (m1 > T::zero()) {
        return Err(GiemError::NoSignChange);
    }
    let (mut a, mut b, mut ma) = (t0, t1, m0);
    let mut best = (t0, g0, m0.abs());
    for _ in 0..200 {
        let mid = (a + b) / T::from_f64(2.0);
        let g = family(mid)?;
        let m = g.mean_nonlinearity();
        if m.abs() < best.2 {
            best = (mid, g.clone(), m.abs());
        }
        if m.abs().to_f64() < target || (b - a).abs() <= T::from_f64(T::epsilon()) * mid.abs() {
            break;
        }
        if (m > T::zero()) == (ma > T::zero()) {
            a = mid;
            ma = m;
        } else {
            b = mid;
        }
    }
    Ok((best.0, best.1))
}
