//! Exact arithmetic in `Z[ζ_N]` modulo `Φ_N`, finite-field reductions and
//! `ℓ`-adic valuations of roots of unity.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local_rings::{gcd, is_prime, prime_factors};

/// Integer coefficients of `Φ_n`, constant term first.
pub fn cyclotomic_polynomial(n: u64) -> Vec<i64> {
    assert!(n >= 1, "cyclotomic_polynomial needs n >= 1");
    // Φ_n = Π_{d | n} (x^d - 1)^{μ(n/d)}
    let mut num: Vec<i64> = vec![1];
    let mut den: Vec<i64> = vec![1];
    for d in 1..=n {
        if !n.is_multiple_of(d) {
            continue;
        }
        let mu = mobius(n / d);
        if mu == 0 {
            continue;
        }
        let mut f = vec![0i64; d as usize + 1];
        f[0] = -1;
        f[d as usize] = 1;
        if mu == 1 {
            num = poly_mul_i64(&num, &f);
        } else {
            den = poly_mul_i64(&den, &f);
        }
    }
    poly_div_exact_i64(&num, &den)
}

fn mobius(mut n: u64) -> i8 {
    let mut k = 0;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            k += 1;
        }
        p += 1;
    }
    if n > 1 {
        k += 1;
    }
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

fn poly_mul_i64(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Division by a monic polynomial, remainder must vanish.
fn poly_div_exact_i64(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut r = num.to_vec();
    let dd = den.len() - 1;
    let mut q = vec![0i64; num.len() - dd];
    for i in (0..q.len()).rev() {
        let c = r[i + dd];
        q[i] = c;
        if c != 0 {
            for (j, &b) in den.iter().enumerate() {
                r[i + j] -= c * b;
            }
        }
    }
    debug_assert!(r.iter().all(|&x| x == 0));
    q
}

/// Sparse data of `Φ_N` shared by every element of conductor `N`.
#[derive(Debug)]
pub struct CycloRing {
    n: u64,
    phi: usize,
    /// nonzero `(j, a_j)` with `j < φ(N)`
    low_terms: Vec<(usize, i128)>,
}

impl CycloRing {
    fn build(n: u64) -> Self {
        let rad: u64 = prime_factors(n).iter().product();
        let base = cyclotomic_polynomial(rad.max(1));
        let stretch = (n / rad.max(1)) as usize;
        let phi = (base.len() - 1) * stretch;
        let low_terms = base
            .iter()
            .enumerate()
            .take(base.len() - 1)
            .filter(|(_, &c)| c != 0)
            .map(|(j, &c)| (j * stretch, c as i128))
            .collect();
        Self { n, phi, low_terms }
    }

    pub fn get(n: u64) -> Arc<CycloRing> {
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<CycloRing>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("cyclotomic cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(CycloRing::build(n))).clone()
    }

    pub fn n(&self) -> u64 {
        self.n
    }
    pub fn phi(&self) -> usize {
        self.phi
    }

    /// Reduces a polynomial of any degree in `ζ_N` to canonical form.
    fn reduce(&self, mut v: Vec<i128>) -> Vec<i128> {
        let n = self.n as usize;
        if v.len() > n {
            for i in n..v.len() {
                let c = v[i];
                if c != 0 {
                    v[i % n] += c;
                }
            }
            v.truncate(n);
        }
        for i in (self.phi..v.len()).rev() {
            let c = v[i];
            if c == 0 {
                continue;
            }
            let base = i - self.phi;
            for &(j, a) in &self.low_terms {
                v[base + j] -= c * a;
            }
        }
        v.resize(self.phi, 0);
        v
    }
}

/// An element of `Z[ζ_N]` in the power basis modulo `Φ_N`.
#[derive(Clone)]
pub struct CycloElt {
    ring: Arc<CycloRing>,
    coeffs: Vec<i128>,
}

impl PartialEq for CycloElt {
    fn eq(&self, other: &Self) -> bool {
        self.ring.n == other.ring.n && self.coeffs == other.coeffs
    }
}
impl Eq for CycloElt {}

impl fmt::Debug for CycloElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CycloElt(N={}, {:?})", self.ring.n, self.coeffs)
    }
}

impl CycloElt {
    pub fn zero(n: u64) -> Self {
        let ring = CycloRing::get(n);
        let coeffs = vec![0; ring.phi];
        Self { ring, coeffs }
    }

    pub fn from_int(n: u64, c: i128) -> Self {
        let mut z = Self::zero(n);
        z.coeffs[0] = c;
        z
    }

    /// `ζ_N^k`.
    pub fn root(n: u64, k: u64) -> Self {
        let mut counts = vec![0i128; n as usize];
        counts[(k % n) as usize] = 1;
        Self::from_exponent_counts(n, counts)
    }

    /// `Σ counts[k]·ζ_N^k` for a vector of length `N` (or any length; indices are read mod `N`).
    pub fn from_exponent_counts(n: u64, counts: Vec<i128>) -> Self {
        let ring = CycloRing::get(n);
        let coeffs = ring.reduce(counts);
        Self { ring, coeffs }
    }

    pub fn from_coeffs(n: u64, coeffs: Vec<i128>) -> Self {
        Self::from_exponent_counts(n, coeffs)
    }

    pub fn n(&self) -> u64 {
        self.ring.n
    }
    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// The value as a rational integer, if it is one.
    pub fn as_integer(&self) -> Option<i128> {
        if self.coeffs[1..].iter().all(|&c| c == 0) {
            Some(self.coeffs[0])
        } else {
            None
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.ring.n != other.ring.n {
            return Err(Error::ConductorMismatch(self.ring.n, other.ring.n));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { ring: self.ring.clone(), coeffs })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let phi = self.ring.phi;
        let mut out = vec![0i128; 2 * phi];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(Self { ring: self.ring.clone(), coeffs: self.ring.reduce(out) })
    }

    pub fn scale(&self, c: i128) -> Self {
        Self { ring: self.ring.clone(), coeffs: self.coeffs.iter().map(|&a| a * c).collect() }
    }

    /// Multiplication by `ζ_N^k`.
    pub fn mul_root(&self, k: u64) -> Self {
        let n = self.ring.n;
        let mut counts = vec![0i128; n as usize];
        for (i, &c) in self.coeffs.iter().enumerate() {
            counts[((i as u64 + k) % n) as usize] += c;
        }
        Self { ring: self.ring.clone(), coeffs: self.ring.reduce(counts) }
    }

    /// The automorphism `ζ ↦ ζ^j`, `gcd(j, N) = 1`.
    pub fn galois(&self, j: u64) -> Result<Self> {
        let n = self.ring.n;
        if gcd(j % n, n) != 1 {
            return Err(Error::Invalid(format!("{j} is not a unit mod {n}")));
        }
        let mut counts = vec![0i128; n as usize];
        for (i, &c) in self.coeffs.iter().enumerate() {
            counts[((i as u64 * j) % n) as usize] += c;
        }
        Ok(Self { ring: self.ring.clone(), coeffs: self.ring.reduce(counts) })
    }

    /// Complex conjugation `ζ ↦ ζ^{-1}`.
    pub fn conj(&self) -> Self {
        let n = self.ring.n;
        self.galois(n - 1).expect("-1 is a unit")
    }

    /// Image in `Z[ζ_M]` for `N | M`.
    pub fn embed_up(&self, m: u64) -> Result<Self> {
        let n = self.ring.n;
        if !m.is_multiple_of(n) {
            return Err(Error::ConductorMismatch(n, m));
        }
        let s = m / n;
        let mut counts = vec![0i128; m as usize];
        for (i, &c) in self.coeffs.iter().enumerate() {
            counts[i * s as usize] += c;
        }
        Ok(Self::from_exponent_counts(m, counts))
    }

    /// Exact division by a rational integer.
    pub fn div_int(&self, d: i128) -> Result<Self> {
        if d == 0 || self.coeffs.iter().any(|&c| c % d != 0) {
            return Err(Error::InexactDivision(format!("{self:?} by {d}")));
        }
        Ok(Self { ring: self.ring.clone(), coeffs: self.coeffs.iter().map(|&c| c / d).collect() })
    }

    pub fn complex_embed(&self) -> Complex64 {
        let n = self.ring.n as f64;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| Complex64::from_polar(c as f64, std::f64::consts::TAU * i as f64 / n))
            .sum()
    }

    /// Product of all Galois conjugates, a rational integer.
    pub fn absolute_norm(&self) -> i128 {
        let n = self.ring.n;
        let mut acc = Self::from_int(n, 1);
        for j in (1..=n).filter(|&j| gcd(j, n) == 1) {
            acc = &acc * &self.galois(j).expect("unit");
        }
        acc.as_integer().expect("norm is rational")
    }
}

impl Add for &CycloElt {
    type Output = CycloElt;
    fn add(self, rhs: &CycloElt) -> CycloElt {
        self.try_add(rhs).expect("conductor mismatch in add")
    }
}
impl Add for CycloElt {
    type Output = CycloElt;
    fn add(self, rhs: CycloElt) -> CycloElt {
        &self + &rhs
    }
}
impl Neg for &CycloElt {
    type Output = CycloElt;
    fn neg(self) -> CycloElt {
        self.scale(-1)
    }
}
impl Neg for CycloElt {
    type Output = CycloElt;
    fn neg(self) -> CycloElt {
        self.scale(-1)
    }
}
impl Sub for &CycloElt {
    type Output = CycloElt;
    fn sub(self, rhs: &CycloElt) -> CycloElt {
        self + &(-rhs)
    }
}
impl Sub for CycloElt {
    type Output = CycloElt;
    fn sub(self, rhs: CycloElt) -> CycloElt {
        &self - &rhs
    }
}
impl Mul for &CycloElt {
    type Output = CycloElt;
    fn mul(self, rhs: &CycloElt) -> CycloElt {
        self.try_mul(rhs).expect("conductor mismatch in mul")
    }
}
impl Mul for CycloElt {
    type Output = CycloElt;
    fn mul(self, rhs: CycloElt) -> CycloElt {
        &self * &rhs
    }
}

/// `num / den` with `num ∈ Z[ζ_N]` and a positive integer `den`.
#[derive(Clone, Debug)]
pub struct QCyclo {
    pub num: CycloElt,
    pub den: i128,
}

impl QCyclo {
    pub fn new(num: CycloElt, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let (num, den) = if den < 0 { (num.scale(-1), -den) } else { (num, den) };
        let g = num.coeffs().iter().fold(den, |g, &c| num_integer::Integer::gcd(&g, &c));
        if g > 1 {
            Self { num: num.div_int(g).expect("gcd divides"), den: den / g }
        } else {
            Self { num, den }
        }
    }

    pub fn from_int(n: u64, c: i128) -> Self {
        Self { num: CycloElt::from_int(n, c), den: 1 }
    }

    pub fn rational(n: u64, p: i128, q: i128) -> Self {
        Self::new(CycloElt::from_int(n, p), q)
    }

    pub fn add(&self, other: &Self) -> Self {
        let num = &self.num.scale(other.den) + &other.num.scale(self.den);
        Self::new(num, self.den * other.den)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(&self.num * &other.num, self.den * other.den)
    }

    pub fn scale(&self, p: i128, q: i128) -> Self {
        Self::new(self.num.scale(p), self.den * q)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn complex_embed(&self) -> Complex64 {
        self.num.complex_embed() / self.den as f64
    }
}

impl PartialEq for QCyclo {
    fn eq(&self, other: &Self) -> bool {
        self.num.scale(other.den) == other.num.scale(self.den)
    }
}

/// `v_ℓ` normalized by `v_ℓ(ℓ) = 1`, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValuationRat {
    Finite(Rational64),
    Infinite,
}

impl ValuationRat {
    pub fn zero() -> Self {
        Self::Finite(Rational64::zero())
    }
    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite)
    }
    pub fn min(self, other: Self) -> Self {
        match (self, other) {
            (Self::Infinite, x) | (x, Self::Infinite) => x,
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a.min(b)),
        }
    }
}

impl fmt::Display for ValuationRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Infinite => write!(f, "inf"),
            Self::Finite(r) => write!(f, "{r}"),
        }
    }
}

/// `v_ℓ(ζ - 1)` for `ζ` of exact order `n`.
pub fn val_ell_root_minus_one(n: u64, ell: u64) -> ValuationRat {
    if n == 1 {
        return ValuationRat::Infinite;
    }
    let mut k = 0u32;
    let mut r = n;
    while r.is_multiple_of(ell) {
        r /= ell;
        k += 1;
    }
    if r != 1 {
        return ValuationRat::zero();
    }
    let den = ell.pow(k - 1) * (ell - 1);
    ValuationRat::Finite(Rational64::new(1, den as i64))
}

/// `F_ℓ[x]/(f)` with `f` monic irreducible of degree `k`.
#[derive(Debug, Clone)]
pub struct FiniteField {
    ell: u64,
    modulus: Vec<u64>,
}

/// Element of a [`FiniteField`], coefficients constant term first.
pub type FfElt = Vec<u64>;

fn poly_trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn poly_rem(a: &[u64], b: &[u64], ell: u64) -> Vec<u64> {
    let b = poly_trim(b.to_vec());
    let mut r = poly_trim(a.to_vec());
    let lead_inv = crate::local_rings::inv_mod(*b.last().expect("nonzero divisor"), ell).expect("field");
    while r.len() >= b.len() {
        let c = r.last().copied().unwrap() * lead_inv % ell;
        let shift = r.len() - b.len();
        for (j, &bj) in b.iter().enumerate() {
            r[shift + j] = (r[shift + j] + ell - c * bj % ell) % ell;
        }
        r = poly_trim(r);
    }
    r
}

fn poly_gcd(a: &[u64], b: &[u64], ell: u64) -> Vec<u64> {
    let mut a = poly_trim(a.to_vec());
    let mut b = poly_trim(b.to_vec());
    while !b.is_empty() {
        let r = poly_rem(&a, &b, ell);
        a = b;
        b = r;
    }
    a
}

impl FiniteField {
    /// `F_{ℓ^k}` using the smallest monic irreducible of degree `k` (coefficients read as base-`ℓ` digits).
    pub fn new(ell: u64, k: usize) -> Result<Self> {
        if !is_prime(ell) || k == 0 {
            return Err(Error::Invalid(format!("bad field parameters {ell}^{k}")));
        }
        if k == 1 {
            return Ok(Self { ell, modulus: vec![0, 1] });
        }
        let mut digits = vec![0u64; k];
        loop {
            let mut f = digits.clone();
            f.push(1);
            if digits[0] != 0 && Self::is_irreducible(&f, ell) {
                return Ok(Self { ell, modulus: f });
            }
            let mut i = 0;
            loop {
                digits[i] += 1;
                if digits[i] < ell {
                    break;
                }
                digits[i] = 0;
                i += 1;
                if i == k {
                    return Err(Error::Invalid("no irreducible found".into()));
                }
            }
        }
    }

    fn is_irreducible(f: &[u64], ell: u64) -> bool {
        let k = f.len() - 1;
        let probe = Self { ell, modulus: f.to_vec() };
        // x^{ℓ^i} mod f for i = 1..k
        let mut x = vec![0u64; k];
        x[1 % k] = if k == 1 { 0 } else { 1 };
        let mut frob = vec![x.clone()];
        let mut cur = x.clone();
        for _ in 0..k {
            cur = probe.pow_u64(&cur, ell);
            frob.push(cur.clone());
        }
        if frob[k] != x {
            return false;
        }
        for r in prime_factors(k as u64) {
            let mut g = frob[k / r as usize].clone();
            g[1] = (g[1] + ell - 1) % ell;
            if poly_gcd(f, &g, ell).len() != 1 {
                return false;
            }
        }
        true
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }
    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }
    pub fn zero(&self) -> FfElt {
        vec![0; self.degree()]
    }
    pub fn one(&self) -> FfElt {
        let mut o = self.zero();
        o[0] = 1;
        o
    }
    pub fn from_int(&self, c: i128) -> FfElt {
        let mut o = self.zero();
        o[0] = c.rem_euclid(self.ell as i128) as u64;
        o
    }

    pub fn add(&self, a: &FfElt, b: &FfElt) -> FfElt {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.ell).collect()
    }

    pub fn scale(&self, c: i128, a: &FfElt) -> FfElt {
        let c = c.rem_euclid(self.ell as i128) as u64;
        a.iter().map(|x| x * c % self.ell).collect()
    }

    pub fn mul(&self, a: &FfElt, b: &FfElt) -> FfElt {
        let k = self.degree();
        let ell = self.ell;
        let mut out = vec![0u64; 2 * k];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % ell;
            }
        }
        for i in (k..2 * k).rev() {
            let c = out[i];
            if c == 0 {
                continue;
            }
            for j in 0..k {
                out[i - k + j] = (out[i - k + j] + ell - c * self.modulus[j] % ell) % ell;
            }
            out[i] = 0;
        }
        out.truncate(k);
        out
    }

    pub fn pow_u64(&self, a: &FfElt, mut e: u64) -> FfElt {
        let mut r = self.one();
        let mut b = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        r
    }

    pub fn pow_big(&self, a: &FfElt, e: &BigUint) -> FfElt {
        let mut r = self.one();
        for i in (0..e.bits()).rev() {
            r = self.mul(&r, &r);
            if e.bit(i) {
                r = self.mul(&r, a);
            }
        }
        r
    }

    pub fn order(&self) -> BigUint {
        BigUint::from(self.ell).pow(self.degree() as u32)
    }

    fn element_from_index(&self, mut idx: u64) -> FfElt {
        let mut e = self.zero();
        for c in e.iter_mut() {
            *c = idx % self.ell;
            idx /= self.ell;
        }
        e
    }
}

/// A fixed embedding of `Z[ζ_N]` into `F_{ℓ^k}` plus the Galois-orbit places.
#[derive(Debug, Clone)]
pub struct EllReduction {
    n: u64,
    field: FiniteField,
    root_powers: Vec<FfElt>,
    places: Vec<u64>,
}

impl EllReduction {
    pub fn new(n: u64, ell: u64) -> Result<Self> {
        if !is_prime(ell) {
            return Err(Error::Invalid(format!("{ell} is not prime")));
        }
        if n.is_multiple_of(ell) {
            return Err(Error::EllDividesConductor { ell, n });
        }
        let k = crate::local_rings::mult_order(ell % n, n).unwrap_or(1).max(1) as usize;
        let field = FiniteField::new(ell, k)?;
        let cofactor = (field.order() - BigUint::one()) / BigUint::from(n);
        let n_primes = prime_factors(n);
        let one = field.one();
        // smallest element (base-ℓ encoding) whose cofactor power has exact order N
        let root = (1u64..)
            .map(|i| field.pow_big(&field.element_from_index(i), &cofactor))
            .find(|b| n == 1 || n_primes.iter().all(|&r| field.pow_u64(b, n / r) != one))
            .expect("F_{l^k}^x is cyclic");
        let mut root_powers = Vec::with_capacity(n as usize);
        let mut cur = one.clone();
        for _ in 0..n {
            root_powers.push(cur.clone());
            cur = field.mul(&cur, &root);
        }
        let mut seen = vec![false; n as usize];
        let mut places = Vec::new();
        for j in 0..n {
            if gcd(j, n) != 1 || seen[j as usize] {
                continue;
            }
            places.push(j);
            let mut x = j;
            loop {
                seen[x as usize] = true;
                x = x * ell % n;
                if x == j {
                    break;
                }
            }
        }
        Ok(Self { n, field, root_powers, places })
    }

    pub fn field(&self) -> &FiniteField {
        &self.field
    }
    /// Exponents `j` with `ζ_N ↦ root^j`, one per place above `ℓ`.
    pub fn places(&self) -> &[u64] {
        &self.places
    }

    /// Image of `x` at the place `ζ_N ↦ root^j`.
    pub fn reduce_at(&self, x: &CycloElt, j: u64) -> Result<FfElt> {
        if x.n() != self.n {
            return Err(Error::ConductorMismatch(x.n(), self.n));
        }
        let mut acc = self.field.zero();
        for (i, &c) in x.coeffs().iter().enumerate() {
            if c != 0 {
                let p = &self.root_powers[((i as u64 * j) % self.n) as usize];
                acc = self.field.add(&acc, &self.field.scale(c, p));
            }
        }
        Ok(acc)
    }

    /// Image at the pinned place and the unit flag.
    pub fn reduce(&self, x: &CycloElt) -> Result<(FfElt, bool)> {
        let img = self.reduce_at(x, 1)?;
        let unit = img.iter().any(|&c| c != 0);
        Ok((img, unit))
    }

    /// Unit flag at every place above `ℓ`, keyed by the place exponent.
    pub fn unit_flags(&self, x: &CycloElt) -> Result<Vec<(u64, bool)>> {
        self.places
            .iter()
            .map(|&j| Ok((j, self.reduce_at(x, j)?.iter().any(|&c| c != 0))))
            .collect()
    }
}

/// Convenience wrapper: reduction at the pinned place.
pub fn reduce_mod_ell(x: &CycloElt, ell: u64) -> Result<(FfElt, bool)> {
    EllReduction::new(x.n(), ell)?.reduce(x)
}
