//! Orientation-preserving C² interval maps with closed-form jets.
//!
//! Besides value and first two derivatives, every node evaluates the
//! increment `f(x + h) - f(x)` without cancellation. Renormalization works
//! with intervals that shrink geometrically, so lengths are always pushed
//! through maps as increments rather than as differences of endpoint values.

use std::sync::Arc;

use crate::error::{GiemError, Result};
use crate::real::Real;

/// Value with first and second derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2<T> {
    pub value: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Real> Jet2<T> {
    pub fn identity(x: T) -> Self {
        Jet2 { value: x, d1: T::one(), d2: T::zero() }
    }

    /// Jet of `outer ∘ inner` given the jet of `outer` at `inner.value`.
    pub fn chain(outer: Jet2<T>, inner: Jet2<T>) -> Self {
        Jet2 {
            value: outer.value,
            d1: outer.d1 * inner.d1,
            d2: outer.d2 * inner.d1 * inner.d1 + outer.d1 * inner.d2,
        }
    }

    pub fn nonlinearity(&self) -> T {
        self.d2 / self.d1
    }
}

/// Hölder data of the nonlinearity: `|n(x) - n(y)| <= c0 |x - y|^nu` and
/// `|n| <= c1`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Smoothness {
    pub nu: f64,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
}

#[derive(Debug)]
enum Node<T: Real> {
    Affine { slope: T, offset: T },
    /// `e = exp(-n/2)`, `em1 = expm1(-n/2)`.
    Moebius { n: T, e: T, em1: T },
    GeneralMoebius { a: T, b: T, c: T, d: T },
    PureNonlinearity { n: T },
    Bump { amplitude: T },
    /// Applied first to last.
    Compose(Vec<SmoothMap<T>>),
    Restrict(SmoothMap<T>),
    Zoom { inner: SmoothMap<T>, left: T, width: T, image_width: T },
    /// Pieces with contiguous domains, left to right.
    Piecewise(Vec<SmoothMap<T>>),
    Tabulated(Table<T>),
    Inverse(SmoothMap<T>),
}

#[derive(Clone, Debug)]
pub struct SmoothMap<T: Real> {
    node: Arc<Node<T>>,
    lo: T,
    hi: T,
    smoothness: Smoothness,
}

/// Piecewise-linear nonlinearity samples on a uniform grid of `[0, 1]`.
#[derive(Debug)]
struct Table<T: Real> {
    samples: Vec<T>,
    step: T,
    /// `phi[j] = ∫_0^{x_j} n`.
    phi: Vec<T>,
    /// `g[j] = ∫_0^{x_j} exp(phi)`.
    g: Vec<T>,
}

// Gauss-Legendre, 8 nodes on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Composite-free 8-point Gauss-Legendre rule on `[a, a + h]`.
pub fn gauss_legendre<T: Real>(a: T, h: T, f: impl Fn(T) -> T) -> T {
    let half = h / T::from_f64(2.0);
    let mid = a + half;
    let mut sum = T::zero();
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        let dx = half * T::from_f64(*x);
        sum += T::from_f64(*w) * (f(mid - dx) + f(mid + dx));
    }
    sum * half
}

impl<T: Real> Table<T> {
    fn cells(&self) -> usize {
        self.samples.len() - 1
    }

    fn cell_of(&self, x: T) -> usize {
        let m = self.cells();
        let j = (x / self.step).to_f64().floor();
        if j < 0.0 {
            0
        } else {
            (j as usize).min(m - 1)
        }
    }

    fn node(&self, j: usize) -> T {
        T::from_usize(j) * self.step
    }

    fn phi_at(&self, x: T) -> T {
        let j = self.cell_of(x);
        let s = x - self.node(j);
        let slope = (self.samples[j + 1] - self.samples[j]) / self.step;
        self.phi[j] + self.samples[j] * s + slope * s * s / T::from_f64(2.0)
    }

    fn n_at(&self, x: T) -> T {
        let j = self.cell_of(x);
        let s = x - self.node(j);
        self.samples[j] + (self.samples[j + 1] - self.samples[j]) * s / self.step
    }

    /// `∫_a^b exp(phi)`, split at grid nodes.
    fn integral(&self, a: T, b: T) -> T {
        if b < a {
            return -self.integral(b, a);
        }
        let mut total = T::zero();
        let mut x = a;
        while x < b {
            let j = self.cell_of(x);
            let right = if j + 1 >= self.cells() { b } else { self.node(j + 1).min(b) };
            let right = if right <= x { b } else { right };
            total += gauss_legendre(x, right - x, |t| self.phi_at(t).exp());
            x = right;
        }
        total
    }

    fn total(&self) -> T {
        self.g[self.cells()]
    }

    fn value(&self, x: T) -> T {
        let j = self.cell_of(x);
        (self.g[j] + self.integral(self.node(j), x)) / self.total()
    }
}

fn tolerance<T: Real>(lo: T, hi: T) -> T {
    let scale = lo.abs().max(hi.abs()).max(T::one());
    (hi - lo) * T::from_f64(1e-9) + scale * T::from_f64(64.0 * T::epsilon())
}

impl<T: Real> SmoothMap<T> {
    fn build(node: Node<T>, lo: T, hi: T, smoothness: Smoothness) -> Self {
        SmoothMap { node: Arc::new(node), lo, hi, smoothness }
    }

    // ---- constructors -------------------------------------------------

    pub fn identity() -> Self {
        Self::build(
            Node::Affine { slope: T::one(), offset: T::zero() },
            T::zero(),
            T::one(),
            Smoothness { nu: 1.0, c0: Some(0.0), c1: Some(0.0) },
        )
    }

    /// `x ↦ slope·x + offset` on `[lo, hi]`.
    pub fn affine(slope: T, offset: T, lo: T, hi: T) -> Result<Self> {
        if !(slope > T::zero()) {
            return Err(GiemError::NonMonotone(format!("affine slope {slope} is not positive")));
        }
        if !(hi > lo) {
            return Err(GiemError::Degenerate(format!("[{lo}, {hi}]")));
        }
        Ok(Self::build(
            Node::Affine { slope, offset },
            lo,
            hi,
            Smoothness { nu: 1.0, c0: Some(0.0), c1: Some(0.0) },
        ))
    }

    /// The increasing affine map from `[a, a + len]` onto `[c, c + image_len]`.
    pub fn affine_onto(a: T, len: T, c: T, image_len: T) -> Result<Self> {
        let slope = image_len / len;
        Self::affine(slope, c - a * slope, a, a + len)
    }

    /// `M_N(x) = x e^{-N/2} / (1 + x (e^{-N/2} - 1))` on `[0, 1]`.
    pub fn moebius(n: T) -> Self {
        let e = (-n / T::from_f64(2.0)).exp();
        let em1 = (-n / T::from_f64(2.0)).exp_m1();
        // n(x) = -2 em1 / (1 + x em1), n'(x) = 2 em1² / (1 + x em1)².
        let den_min = T::one().min(e);
        let c1 = (T::from_f64(2.0) * em1.abs() / den_min).to_f64();
        let c0 = (T::from_f64(2.0) * em1 * em1 / (den_min * den_min)).to_f64();
        Self::build(
            Node::Moebius { n, e, em1 },
            T::zero(),
            T::one(),
            Smoothness { nu: 1.0, c0: Some(c0), c1: Some(c1) },
        )
    }

    /// `x ↦ (a x + b) / (c x + d)` on `[lo, hi]`, with `ad - bc > 0` and no pole.
    pub fn general_moebius(a: T, b: T, c: T, d: T, lo: T, hi: T) -> Result<Self> {
        if !(a * d - b * c > T::zero()) {
            return Err(GiemError::NonMonotone("Möbius determinant is not positive".into()));
        }
        let (dl, dh) = (c * lo + d, c * hi + d);
        if !(dl * dh > T::zero()) {
            return Err(GiemError::NotInvertible("Möbius pole inside the domain".into()));
        }
        if !(hi > lo) {
            return Err(GiemError::Degenerate(format!("[{lo}, {hi}]")));
        }
        Ok(Self::build(Node::GeneralMoebius { a, b, c, d }, lo, hi, Smoothness::default()))
    }

    /// `f_N(x) = (e^{Nx} - 1) / (e^N - 1)`, the map with constant nonlinearity `N`.
    pub fn pure_nonlinearity(n: T) -> Self {
        let c1 = n.abs().to_f64();
        Self::build(
            Node::PureNonlinearity { n },
            T::zero(),
            T::one(),
            Smoothness { nu: 1.0, c0: Some(0.0), c1: Some(c1) },
        )
    }

    /// `b_t(x) = x + t sin(2πx) / (2π)` on `[0, 1]`, `|t| < 1`.
    pub fn bump(amplitude: T) -> Result<Self> {
        let t = amplitude.to_f64();
        if t.abs() >= 1.0 || !t.is_finite() {
            return Err(GiemError::NonMonotone(format!("bump amplitude {t} must satisfy |t| < 1")));
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let c1 = two_pi * t.abs() / (1.0 - t * t).sqrt();
        let c0 = two_pi * two_pi * t.abs() / (1.0 - t.abs());
        Ok(Self::build(
            Node::Bump { amplitude },
            T::zero(),
            T::one(),
            Smoothness { nu: 1.0, c0: Some(c0), c1: Some(c1) },
        ))
    }

    /// `maps[last] ∘ … ∘ maps[0]`; each image must lie in the next domain.
    pub fn compose(maps: Vec<SmoothMap<T>>) -> Result<Self> {
        if maps.is_empty() {
            return Err(GiemError::Degenerate("empty composition".into()));
        }
        if maps.len() == 1 {
            return Ok(maps.into_iter().next().unwrap());
        }
        for w in maps.windows(2) {
            let (a, b) = w[0].image();
            if a < w[1].lo - tolerance(w[1].lo, w[1].hi) || b > w[1].hi + tolerance(w[1].lo, w[1].hi)
            {
                return Err(GiemError::OutOfDomain {
                    x: if a < w[1].lo { a.to_f64() } else { b.to_f64() },
                    lo: w[1].lo.to_f64(),
                    hi: w[1].hi.to_f64(),
                });
            }
        }
        let (lo, hi) = (maps[0].lo, maps[0].hi);
        Ok(Self::build(Node::Compose(maps), lo, hi, Smoothness::default()))
    }

    /// The same map on a subinterval.
    pub fn restrict(&self, lo: T, hi: T) -> Result<Self> {
        self.check(lo)?;
        self.check(hi)?;
        if !(hi > lo) {
            return Err(GiemError::Degenerate(format!("[{lo}, {hi}]")));
        }
        Ok(Self::build(Node::Restrict(self.clone()), lo, hi, self.smoothness))
    }

    /// `Z_{[a,b]}(f)`: `f|[a,b]` conjugated by affine maps to a self-map of `[0, 1]`.
    pub fn zoom(&self, a: T, b: T) -> Result<Self> {
        self.check(a)?;
        self.check(b)?;
        let width = b - a;
        let floor = T::from_f64(16.0 * T::epsilon()) * a.abs().max(b.abs()).max(T::from_f64(1e-300));
        if !(width > floor) {
            return Err(GiemError::Degenerate(format!("zoom over [{a}, {b}]")));
        }
        let image_width = self.increment_unchecked(a, width);
        let smoothness = Smoothness {
            nu: self.smoothness.nu,
            c1: self.smoothness.c1.map(|c| c * width.to_f64()),
            c0: self
                .smoothness
                .c0
                .map(|c| c * width.to_f64().powf(1.0 + self.smoothness.nu)),
        };
        Ok(Self::build(
            Node::Zoom { inner: self.clone(), left: a, width, image_width },
            T::zero(),
            T::one(),
            smoothness,
        ))
    }

    /// Glues maps with contiguous domains whose images are contiguous too.
    pub fn piecewise(pieces: Vec<SmoothMap<T>>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(GiemError::Degenerate("no pieces".into()));
        }
        if pieces.len() == 1 {
            return Ok(pieces.into_iter().next().unwrap());
        }
        for w in pieces.windows(2) {
            let tol = tolerance(w[0].lo, w[1].hi);
            if (w[0].hi - w[1].lo).abs() > tol {
                return Err(GiemError::TilingGap("piece domains are not contiguous".into()));
            }
            let (_, right) = w[0].image();
            let (left, _) = w[1].image();
            if (right - left).abs() > tol {
                return Err(GiemError::TilingGap("piece images are not contiguous".into()));
            }
        }
        let lo = pieces[0].lo;
        let hi = pieces[pieces.len() - 1].hi;
        Ok(Self::build(Node::Piecewise(pieces), lo, hi, Smoothness::default()))
    }

    /// The diffeomorphism of `[0, 1]` whose nonlinearity interpolates the
    /// samples `n(j / m)`, `j = 0..=m`, piecewise linearly:
    /// `f(x) = ∫_0^x exp(∫_0^z n) dz / ∫_0^1 exp(∫_0^z n) dz`.
    pub fn from_nonlinearity(samples: Vec<T>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(GiemError::Degenerate("need at least two nonlinearity samples".into()));
        }
        let m = samples.len() - 1;
        let step = T::one() / T::from_usize(m);
        let mut phi = vec![T::zero(); m + 1];
        for j in 0..m {
            phi[j + 1] = phi[j] + (samples[j] + samples[j + 1]) * step / T::from_f64(2.0);
        }
        let mut table = Table { samples, step, phi, g: vec![T::zero(); m + 1] };
        let mut g = vec![T::zero(); m + 1];
        for j in 0..m {
            let x = table.node(j);
            g[j + 1] = g[j] + gauss_legendre(x, step, |t| table.phi_at(t).exp());
        }
        table.g = g;
        let c1 = table.samples.iter().map(|s| s.to_f64().abs()).fold(0.0, f64::max);
        let c0 = table
            .samples
            .windows(2)
            .map(|w| ((w[1] - w[0]) / step).to_f64().abs())
            .fold(0.0, f64::max);
        Ok(Self::build(
            Node::Tabulated(table),
            T::zero(),
            T::one(),
            Smoothness { nu: 1.0, c0: Some(c0), c1: Some(c1) },
        ))
    }

    /// Inverse map on the image, evaluated by safeguarded Newton iteration.
    pub fn inverse(&self) -> Self {
        let (lo, hi) = self.image();
        Self::build(Node::Inverse(self.clone()), lo, hi, Smoothness::default())
    }

    // ---- accessors ----------------------------------------------------

    pub fn domain(&self) -> (T, T) {
        (self.lo, self.hi)
    }

    pub fn image(&self) -> (T, T) {
        let left = self.value_unchecked(self.lo);
        (left, left + self.increment_unchecked(self.lo, self.hi - self.lo))
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn with_smoothness(mut self, smoothness: Smoothness) -> Self {
        self.smoothness = smoothness;
        self
    }

    /// Interior points where a glued map changes piece, in increasing order.
    pub fn breakpoints(&self) -> Vec<T> {
        match &*self.node {
            Node::Piecewise(pieces) => pieces.iter().skip(1).map(|p| p.lo).collect(),
            Node::Restrict(inner) => inner
                .breakpoints()
                .into_iter()
                .filter(|&b| b > self.lo && b < self.hi)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Parameter `N` if the node is a Möbius map `M_N`.
    pub fn moebius_parameter(&self) -> Option<T> {
        match &*self.node {
            Node::Moebius { n, .. } => Some(*n),
            _ => None,
        }
    }

    pub fn contains(&self, x: T) -> bool {
        let tol = tolerance(self.lo, self.hi);
        x >= self.lo - tol && x <= self.hi + tol
    }

    fn check(&self, x: T) -> Result<()> {
        if self.contains(x) && x.is_finite() {
            Ok(())
        } else {
            Err(GiemError::OutOfDomain { x: x.to_f64(), lo: self.lo.to_f64(), hi: self.hi.to_f64() })
        }
    }

    // ---- evaluation ---------------------------------------------------

    pub fn eval(&self, x: T) -> Result<T> {
        self.check(x)?;
        Ok(self.value_unchecked(x))
    }

    pub fn eval2(&self, x: T) -> Result<Jet2<T>> {
        self.check(x)?;
        Ok(self.jet_unchecked(x))
    }

    /// `f(x + h) - f(x)` computed without subtracting endpoint values.
    pub fn increment(&self, x: T, h: T) -> Result<T> {
        self.check(x)?;
        self.check(x + h)?;
        Ok(self.increment_unchecked(x, h))
    }

    pub fn nonlinearity(&self, x: T) -> Result<T> {
        Ok(self.eval2(x)?.nonlinearity())
    }

    /// `∫_a^b n_f = ln Df(b) - ln Df(a)`.
    pub fn nonlinearity_integral(&self, a: T, b: T) -> Result<T> {
        let ja = self.eval2(a)?;
        let jb = self.eval2(b)?;
        Ok((jb.d1 / ja.d1).ln())
    }

    /// Jets on the uniform grid `j / (grid - 1)` of `[0, 1]`.
    pub fn sample(&self, grid: usize) -> Result<Vec<Jet2<T>>> {
        if grid < 2 {
            return Err(GiemError::Degenerate(format!("grid of {grid} points")));
        }
        (0..grid)
            .map(|j| self.eval2(T::from_usize(j) / T::from_usize(grid - 1)))
            .collect()
    }

    pub(crate) fn value_unchecked(&self, x: T) -> T {
        match &*self.node {
            Node::Affine { slope, offset } => *slope * x + *offset,
            Node::Moebius { e, em1, .. } => {
                let (e, em1) = (*e, *em1);
                x * e / (T::one() + x * em1)
            }
            Node::GeneralMoebius { a, b, c, d } => (*a * x + *b) / (*c * x + *d),
            Node::PureNonlinearity { n } => {
                if *n == T::zero() {
                    x
                } else {
                    (*n * x).exp_m1() / n.exp_m1()
                }
            }
            Node::Bump { amplitude } => {
                let w = T::pi() * T::from_f64(2.0);
                x + *amplitude * (w * x).sin() / w
            }
            Node::Compose(maps) => maps.iter().fold(x, |v, m| m.value_unchecked(v)),
            Node::Restrict(inner) => inner.value_unchecked(x),
            Node::Zoom { inner, left, width, image_width } => {
                inner.increment_unchecked(*left, x * *width) / *image_width
            }
            Node::Piecewise(pieces) => self.piece(pieces, x).value_unchecked(x),
            Node::Tabulated(table) => table.value(x),
            Node::Inverse(inner) => inverse_solve(inner, self.lo, self.hi, x),
        }
    }

    pub(crate) fn jet_unchecked(&self, x: T) -> Jet2<T> {
        match &*self.node {
            Node::Affine { slope, offset } => {
                Jet2 { value: *slope * x + *offset, d1: *slope, d2: T::zero() }
            }
            Node::Moebius { e, em1, .. } => {
                let (e, em1) = (*e, *em1);
                let den = T::one() + x * em1;
                let d1 = e / (den * den);
                Jet2 {
                    value: x * e / den,
                    d1,
                    d2: -T::from_f64(2.0) * em1 * d1 / den,
                }
            }
            Node::GeneralMoebius { a, b, c, d } => {
                let den = *c * x + *d;
                let det = *a * *d - *b * *c;
                let d1 = det / (den * den);
                Jet2 {
                    value: (*a * x + *b) / den,
                    d1,
                    d2: -T::from_f64(2.0) * *c * d1 / den,
                }
            }
            Node::PureNonlinearity { n } => {
                if *n == T::zero() {
                    return Jet2::identity(x);
                }
                let denom = n.exp_m1();
                let enx = (*n * x).exp();
                let d1 = *n * enx / denom;
                Jet2 { value: (*n * x).exp_m1() / denom, d1, d2: *n * d1 }
            }
            Node::Bump { amplitude } => {
                let w = T::pi() * T::from_f64(2.0);
                let (s, c) = ((w * x).sin(), (w * x).cos());
                Jet2 {
                    value: x + *amplitude * s / w,
                    d1: T::one() + *amplitude * c,
                    d2: -*amplitude * w * s,
                }
            }
            Node::Compose(maps) => {
                let mut jet = Jet2::identity(x);
                for m in maps {
                    jet = Jet2::chain(m.jet_unchecked(jet.value), jet);
                }
                jet
            }
            Node::Restrict(inner) => inner.jet_unchecked(x),
            Node::Zoom { inner, left, width, image_width } => {
                let j = inner.jet_unchecked(*left + x * *width);
                Jet2 {
                    value: inner.increment_unchecked(*left, x * *width) / *image_width,
                    d1: j.d1 * *width / *image_width,
                    d2: j.d2 * *width * *width / *image_width,
                }
            }
            Node::Piecewise(pieces) => self.piece(pieces, x).jet_unchecked(x),
            Node::Tabulated(table) => {
                let d1 = table.phi_at(x).exp() / table.total();
                Jet2 { value: table.value(x), d1, d2: table.n_at(x) * d1 }
            }
            Node::Inverse(inner) => {
                let y = inverse_solve(inner, self.lo, self.hi, x);
                let j = inner.jet_unchecked(y);
                Jet2 { value: y, d1: T::one() / j.d1, d2: -j.d2 / (j.d1 * j.d1 * j.d1) }
            }
        }
    }

    pub(crate) fn increment_unchecked(&self, x: T, h: T) -> T {
        match &*self.node {
            Node::Affine { slope, .. } => *slope * h,
            Node::Moebius { e, em1, .. } => {
                let (e, em1) = (*e, *em1);
                e * h / ((T::one() + (x + h) * em1) * (T::one() + x * em1))
            }
            Node::GeneralMoebius { a, b, c, d } => {
                let det = *a * *d - *b * *c;
                det * h / ((*c * (x + h) + *d) * (*c * x + *d))
            }
            Node::PureNonlinearity { n } => {
                if *n == T::zero() {
                    h
                } else {
                    (*n * x).exp() * (*n * h).exp_m1() / n.exp_m1()
                }
            }
            Node::Bump { amplitude } => {
                let pi = T::pi();
                h + *amplitude / pi
                    * (pi * (T::from_f64(2.0) * x + h)).cos()
                    * (pi * h).sin()
            }
            Node::Compose(maps) => {
                let (mut x, mut h) = (x, h);
                for m in maps {
                    let next_h = m.increment_unchecked(x, h);
                    x = m.value_unchecked(x);
                    h = next_h;
                }
                h
            }
            Node::Restrict(inner) => inner.increment_unchecked(x, h),
            Node::Zoom { inner, left, width, image_width } => {
                inner.increment_unchecked(*left + x * *width, h * *width) / *image_width
            }
            Node::Piecewise(pieces) => {
                if h < T::zero() {
                    return -self.increment_unchecked(x + h, -h);
                }
                let end = x + h;
                let mut total = T::zero();
                let mut start = x;
                let first = self.piece_index(pieces, x);
                for (k, p) in pieces.iter().enumerate().skip(first) {
                    let stop = if k + 1 == pieces.len() { end } else { p.hi.min(end) };
                    if stop > start {
                        total += p.increment_unchecked(start, stop - start);
                        start = stop;
                    }
                    if start >= end {
                        break;
                    }
                }
                total
            }
            Node::Tabulated(table) => table.integral(x, x + h) / table.total(),
            Node::Inverse(inner) => {
                let y = inverse_solve(inner, self.lo, self.hi, x);
                inverse_increment(inner, y, h)
            }
        }
    }

    fn piece_index(&self, pieces: &[SmoothMap<T>], x: T) -> usize {
        pieces
            .iter()
            .position(|p| x < p.hi)
            .unwrap_or(pieces.len() - 1)
    }

    fn piece<'a>(&self, pieces: &'a [SmoothMap<T>], x: T) -> &'a SmoothMap<T> {
        &pieces[self.piece_index(pieces, x)]
    }
}

/// Solves `inner(x) = y` on the domain of `inner` by Newton steps kept inside
/// a shrinking bracket.
/// `fa`, `fb` are the values of `inner` at the ends of its domain.
fn inverse_solve<T: Real>(inner: &SmoothMap<T>, fa: T, fb: T, y: T) -> T {
    let (mut a, mut b) = (inner.lo, inner.hi);
    if y <= fa {
        return a - (fa - y) / inner.jet_unchecked(a).d1;
    }
    if y >= fb {
        return b + (y - fb) / inner.jet_unchecked(b).d1;
    }
    let mut x = a + (y - fa) / (fb - fa) * (b - a);
    let tol = T::from_f64(4.0 * T::epsilon());
    for _ in 0..200 {
        let j = inner.jet_unchecked(x);
        let r = j.value - y;
        if r > T::zero() {
            b = x;
        } else {
            a = x;
        }
        let step = r / j.d1;
        if step.abs() <= tol * x.abs().max(T::one()) {
            return x - step;
        }
        let mut next = x - step;
        if !(next > a && next < b) {
            next = (a + b) / T::from_f64(2.0);
        }
        x = next;
        if b - a <= tol {
            break;
        }
    }
    x
}

/// `Δ` with `inner(y + Δ) - inner(y) = h`.
fn inverse_increment<T: Real>(inner: &SmoothMap<T>, y: T, h: T) -> T {
    let mut delta = h / inner.jet_unchecked(y).d1;
    for _ in 0..60 {
        let r = inner.increment_unchecked(y, delta) - h;
        let step = r / inner.jet_unchecked(y + delta).d1;
        delta -= step;
        if step.abs() <= T::from_f64(2.0 * T::epsilon()) * delta.abs() {
            break;
        }
    }
    delta
}

/// `Σ_{i=0}^{2} max_grid |D^i m1 - D^i m2|` over the uniform grid of `[0, 1]`.
///
/// The grid maximum is a lower bound for the true supremum.
pub fn c2_distance<T: Real>(m1: &SmoothMap<T>, m2: &SmoothMap<T>, grid: usize) -> Result<f64> {
    let a = m1.sample(grid)?;
    let b = m2.sample(grid)?;
    Ok(c2_distance_of_samples(&a, &b))
}

/// [`c2_distance`] for precomputed jets.
pub fn c2_distance_of_samples<T: Real>(a: &[Jet2<T>], b: &[Jet2<T>]) -> f64 {
    let mut m = [0.0f64; 3];
    for (x, y) in a.iter().zip(b) {
        m[0] = m[0].max((x.value - y.value).abs().to_f64());
        m[1] = m[1].max((x.d1 - y.d1).abs().to_f64());
        m[2] = m[2].max((x.d2 - y.d2).abs().to_f64());
    }
    m[0] + m[1] + m[2]
}

/// `d_{C²}` between sampled jets and the Möbius map `M_N`.
pub fn distance_to_moebius<T: Real>(samples: &[Jet2<T>], n: T) -> f64 {
    let m = SmoothMap::moebius(n);
    let grid = samples.len();
    let reference: Vec<Jet2<T>> = (0..grid)
        .map(|j| m.jet_unchecked(T::from_usize(j) / T::from_usize(grid - 1)))
        .collect();
    c2_distance_of_samples(samples, &reference)
}

/// `d_{C²}` between sampled jets and the identity.
pub fn distance_to_identity<T: Real>(samples: &[Jet2<T>]) -> f64 {
    let grid = samples.len();
    let reference: Vec<Jet2<T>> = (0..grid)
        .map(|j| Jet2::identity(T::from_usize(j) / T::from_usize(grid - 1)))
        .collect();
    c2_distance_of_samples(samples, &reference)
}

/// Grid estimates of `sup |n|` and of the Lipschitz constant of `n` (`nu = 1`).
pub fn estimate_smoothness<T: Real>(m: &SmoothMap<T>, grid: usize) -> Result<Smoothness> {
    let (lo, hi) = m.domain();
    let step = (hi - lo) / T::from_usize(grid - 1);
    let values: Vec<T> = (0..grid)
        .map(|j| m.nonlinearity(lo + T::from_usize(j) * step))
        .collect::<Result<_>>()?;
    let c1 = values.iter().map(|v| v.abs().to_f64()).fold(0.0, f64::max);
    let c0 = values
        .windows(2)
        .map(|w| ((w[1] - w[0]) / step).abs().to_f64())
        .fold(0.0, f64::max);
    Ok(Smoothness { nu: 1.0, c0: Some(c0), c1: Some(c1) })
}
