use serde::{Deserialize, Serialize};

use super::{Exponent, SeqError, SpaceConfig};

/// A sequence with a finite prefix and a periodically modulated geometric
/// tail.
///
/// Coordinates are 1-based. For `j <= J = prefix.len()` the coordinate is
/// `prefix[j - 1]`; past the prefix, with `t = j - J - 1`, it is
/// `tail_coeffs[t mod P] * tail_ratio^t`. Values are always stored in
/// canonical form (see [`TailVector::new`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TailVectorRepr", into = "TailVectorRepr")]
pub struct TailVector {
    prefix: Vec<f64>,
    tail_coeffs: Vec<f64>,
    tail_ratio: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TailVectorRepr {
    prefix: Vec<f64>,
    #[serde(default = "zero_tail")]
    tail_coeffs: Vec<f64>,
    #[serde(default)]
    tail_ratio: f64,
}

fn zero_tail() -> Vec<f64> {
    vec![0.0]
}

impl TryFrom<TailVectorRepr> for TailVector {
    type Error = SeqError;

    fn try_from(raw: TailVectorRepr) -> Result<Self, Self::Error> {
        TailVector::new(raw.prefix, raw.tail_coeffs, raw.tail_ratio)
    }
}

impl From<TailVector> for TailVectorRepr {
    fn from(v: TailVector) -> Self {
        TailVectorRepr {
            prefix: v.prefix,
            tail_coeffs: v.tail_coeffs,
            tail_ratio: v.tail_ratio,
        }
    }
}

/// A vector re-expressed with a longer prefix and a (multiple of its) period.
pub(crate) struct Aligned {
    pub prefix: Vec<f64>,
    pub coeffs: Vec<f64>,
}

impl TailVector {
    /// Builds a vector in canonical form.
    ///
    /// Canonical form: a tail with ratio 0 contributes only its first
    /// coordinate, which is moved into the prefix; an all-zero tail is stored
    /// as `P = 1, c_0 = 0, r = 0` and the prefix loses its trailing zeros; a
    /// nonzero tail is stored with its minimal coefficient period.
    pub fn new(prefix: Vec<f64>, tail_coeffs: Vec<f64>, tail_ratio: f64) -> Result<Self, SeqError> {
        if tail_coeffs.is_empty() {
            return Err(SeqError::InvalidVector("tail period must be positive".into()));
        }
        if !tail_ratio.is_finite() || prefix.iter().chain(&tail_coeffs).any(|x| !x.is_finite()) {
            return Err(SeqError::InvalidVector("coordinates must be finite".into()));
        }
        let zero_tail = tail_coeffs.iter().all(|&c| c == 0.0);
        if !zero_tail && tail_ratio != 0.0 && tail_ratio.abs() >= 1.0 {
            return Err(SeqError::InvalidVector(format!(
                "tail ratio {tail_ratio} must satisfy |r| < 1"
            )));
        }
        Ok(Self::canonical(prefix, tail_coeffs, tail_ratio))
    }

    fn canonical(mut prefix: Vec<f64>, mut coeffs: Vec<f64>, mut ratio: f64) -> Self {
        if ratio == 0.0 {
            // 0^0 = 1: only the first tail coordinate survives.
            if coeffs[0] != 0.0 {
                prefix.push(coeffs[0]);
            }
            coeffs = vec![0.0];
        }
        if coeffs.iter().all(|&c| c == 0.0) {
            coeffs = vec![0.0];
            ratio = 0.0;
            while prefix.last() == Some(&0.0) {
                prefix.pop();
            }
        } else {
            let p = coeffs.len();
            let minimal = (1..=p)
                .filter(|d| p.is_multiple_of(*d))
                .find(|&d| (d..p).all(|k| coeffs[k] == coeffs[k % d]))
                .unwrap_or(p);
            coeffs.truncate(minimal);
        }
        TailVector {
            prefix,
            tail_coeffs: coeffs,
            tail_ratio: ratio,
        }
    }

    /// A finitely supported vector with the given leading coordinates.
    ///
    /// Panics on non-finite input.
    pub fn finite(prefix: Vec<f64>) -> Self {
        assert!(prefix.iter().all(|x| x.is_finite()), "coordinates must be finite");
        Self::canonical(prefix, vec![0.0], 0.0)
    }

    pub fn zero() -> Self {
        Self::finite(Vec::new())
    }

    /// The unit coordinate vector e_j (1-based).
    pub fn unit(j: usize) -> Self {
        assert!(j >= 1, "coordinates are 1-based");
        let mut prefix = vec![0.0; j];
        prefix[j - 1] = 1.0;
        Self::finite(prefix)
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn tail_coeffs(&self) -> &[f64] {
        &self.tail_coeffs
    }

    pub fn tail_ratio(&self) -> f64 {
        self.tail_ratio
    }

    pub fn period(&self) -> usize {
        self.tail_coeffs.len()
    }

    pub fn has_tail(&self) -> bool {
        self.tail_coeffs.iter().any(|&c| c != 0.0)
    }

    pub fn is_finitely_supported(&self) -> bool {
        !self.has_tail()
    }

    pub fn is_zero(&self) -> bool {
        !self.has_tail() && self.prefix.iter().all(|&x| x == 0.0)
    }

    /// Coordinate at 1-based index `j`.
    pub fn coord(&self, j: usize) -> f64 {
        assert!(j >= 1, "coordinates are 1-based");
        let len = self.prefix.len();
        if j <= len {
            self.prefix[j - 1]
        } else {
            let t = j - len - 1;
            self.tail_coeffs[t % self.period()] * pow(self.tail_ratio, t)
        }
    }

    /// The first `n` coordinates.
    pub fn coords(&self, n: usize) -> Vec<f64> {
        if n <= self.prefix.len() {
            return self.prefix[..n].to_vec();
        }
        let mut out = self.prefix.clone();
        out.extend(self.tail_terms(n - self.prefix.len()));
        out
    }

    /// The finitely supported vector agreeing with `self` on indices `<= n`.
    pub fn head(&self, n: usize) -> TailVector {
        TailVector::finite(self.coords(n))
    }

    pub fn scaled(&self, alpha: f64) -> TailVector {
        if alpha == 0.0 {
            return TailVector::zero();
        }
        Self::canonical(
            self.prefix.iter().map(|x| alpha * x).collect(),
            self.tail_coeffs.iter().map(|c| alpha * c).collect(),
            self.tail_ratio,
        )
    }

    /// `self - other`, exact.
    pub fn sub(&self, other: &TailVector) -> Result<TailVector, SeqError> {
        linear_combine(&[1.0, -1.0], &[self.clone(), other.clone()])
    }

    /// `self + other`, exact.
    pub fn add(&self, other: &TailVector) -> Result<TailVector, SeqError> {
        linear_combine(&[1.0, 1.0], &[self.clone(), other.clone()])
    }

    /// First `count` tail terms, starting at tail offset 0.
    fn tail_terms(&self, count: usize) -> impl Iterator<Item = f64> + '_ {
        let period = self.period();
        let ratio = self.tail_ratio;
        let zero = !self.has_tail();
        let mut power = 1.0;
        (0..count).map(move |t| {
            if zero {
                return 0.0;
            }
            let value = self.tail_coeffs[t % period] * power;
            power *= ratio;
            value
        })
    }

    /// Tail coefficients after moving the tail start `shift` places to the
    /// right: `c'_k = c_{(k + shift) mod P} r^shift`.
    fn shifted_coeffs(&self, shift: usize) -> Vec<f64> {
        let period = self.period();
        if !self.has_tail() {
            return vec![0.0; period];
        }
        let scale = pow(self.tail_ratio, shift);
        (0..period).map(|k| self.tail_coeffs[(k + shift) % period] * scale).collect()
    }

    /// Re-expresses the vector with prefix length `start` and tail period
    /// `period`. Requires `start >= prefix.len()` and `period` a multiple of
    /// the vector's own period.
    pub(crate) fn aligned(&self, start: usize, period: usize) -> Aligned {
        debug_assert!(start >= self.prefix.len());
        debug_assert!(period.is_multiple_of(self.period()));
        let shift = start - self.prefix.len();
        let mut prefix = self.prefix.clone();
        prefix.extend(self.tail_terms(shift));
        let own = self.shifted_coeffs(shift);
        let coeffs = (0..period).map(|k| own[k % own.len()]).collect();
        Aligned { prefix, coeffs }
    }

    /// Exact ℓ^p norm of the coordinates with index `> j`.
    pub fn tail_norm_from(&self, j: usize, space: SpaceConfig) -> f64 {
        let len = self.prefix.len();
        let rest = &self.prefix[j.min(len)..];
        let coeffs = self.shifted_coeffs(j.saturating_sub(len));
        let tail = pure_tail_norm(&coeffs, self.tail_ratio, space.p);
        match space.p {
            Exponent::One => rest.iter().map(|x| x.abs()).sum::<f64>() + tail,
            Exponent::Two => (rest.iter().map(|x| x * x).sum::<f64>() + tail * tail).sqrt(),
            Exponent::Infinity => rest.iter().fold(tail, |m, x| m.max(x.abs())),
        }
    }
}

fn pow(r: f64, t: usize) -> f64 {
    if t > i32::MAX as usize {
        return 0.0;
    }
    r.powi(t as i32)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Norm of the pure tail `c_{t mod P} r^t`, t >= 0.
fn pure_tail_norm(coeffs: &[f64], ratio: f64, p: Exponent) -> f64 {
    if coeffs.iter().all(|&c| c == 0.0) {
        return 0.0;
    }
    let period = coeffs.len();
    let abs_r = ratio.abs();
    match p {
        Exponent::One => {
            let head: f64 = coeffs.iter().enumerate().map(|(s, c)| c.abs() * pow(abs_r, s)).sum();
            head / (1.0 - pow(abs_r, period))
        }
        Exponent::Two => {
            let r2 = ratio * ratio;
            let head: f64 = coeffs.iter().enumerate().map(|(s, c)| c * c * pow(r2, s)).sum();
            (head / (1.0 - pow(r2, period))).sqrt()
        }
        Exponent::Infinity => coeffs
            .iter()
            .enumerate()
            .map(|(s, c)| c.abs() * pow(abs_r, s))
            .fold(0.0, f64::max),
    }
}

/// Exact linear combination `Σ coeffs[i] · vectors[i]`.
///
/// Tails are re-aligned to a common start and the least common multiple of
/// their periods. Nonzero tails with different ratios cannot be combined.
pub fn linear_combine(coeffs: &[f64], vectors: &[TailVector]) -> Result<TailVector, SeqError> {
    if coeffs.len() != vectors.len() || coeffs.is_empty() {
        return Err(SeqError::DimensionMismatch(format!(
            "{} coefficients for {} vectors",
            coeffs.len(),
            vectors.len()
        )));
    }
    let mut ratio: Option<f64> = None;
    let mut start = 0;
    let mut period = 1;
    for (&a, v) in coeffs.iter().zip(vectors) {
        if a == 0.0 {
            continue;
        }
        start = start.max(v.prefix.len());
        if v.has_tail() {
            match ratio {
                None => ratio = Some(v.tail_ratio),
                Some(r) if r == v.tail_ratio => {}
                Some(r) => return Err(SeqError::IncompatibleTails(r, v.tail_ratio)),
            }
            period = lcm(period, v.period());
        }
    }
    let mut prefix = vec![0.0; start];
    let mut tail = vec![0.0; period];
    for (&a, v) in coeffs.iter().zip(vectors) {
        if a == 0.0 {
            continue;
        }
        let al = v.aligned(start, period);
        for (dst, x) in prefix.iter_mut().zip(&al.prefix) {
            *dst += a * x;
        }
        if v.has_tail() {
            for (dst, c) in tail.iter_mut().zip(&al.coeffs) {
                *dst += a * c;
            }
        }
    }
    TailVector::new(prefix, tail, ratio.unwrap_or(0.0))
}

/// Σ_j u_j v_j in closed form.
pub fn inner_product(u: &TailVector, v: &TailVector) -> f64 {
    let start = u.prefix.len().max(v.prefix.len());
    let period = lcm(u.period(), v.period());
    let au = u.aligned(start, period);
    let av = v.aligned(start, period);
    let head: f64 = au.prefix.iter().zip(&av.prefix).map(|(a, b)| a * b).sum();
    if !(u.has_tail() && v.has_tail()) {
        return head;
    }
    let rho = u.tail_ratio * v.tail_ratio;
    let mut power = 1.0;
    let mut tail = 0.0;
    for (a, b) in au.coeffs.iter().zip(&av.coeffs) {
        tail += a * b * power;
        power *= rho;
    }
    head + tail / (1.0 - power)
}

/// Exact ℓ^p norm.
pub fn norm(v: &TailVector, space: SpaceConfig) -> f64 {
    v.tail_norm_from(0, space)
}

/// Splits `v` at index `j`: returns the finitely supported vector agreeing
/// with `v` on indices `<= j` and the exact ℓ^p norm of the discarded part.
pub fn truncate(v: &TailVector, j: usize, space: SpaceConfig) -> (TailVector, f64) {
    (v.head(j), v.tail_norm_from(j, space))
}
