//! Residue rings `Z/q^m` and `O_K/q^m` for the unramified quadratic extension,
//! with unit-group structure, square roots and quadratic root counts.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Distinct prime factors by trial division.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

pub fn pow_mod(mut a: u64, mut e: u64, n: u64) -> u64 {
    let mut r = 1 % n;
    a %= n;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, n);
        }
        a = mul_mod(a, a, n);
        e >>= 1;
    }
    r
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn inv_mod(a: u64, n: u64) -> Option<u64> {
    let (mut r0, mut r1) = (n as i128, (a % n) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let t = r0 / r1;
        (r0, r1) = (r1, r0 - t * r1);
        (s0, s1) = (s1, s0 - t * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(n as i128) as u64)
}

/// Legendre symbol `(a|q)` for an odd prime `q`, as -1, 0 or 1.
pub fn legendre(a: i64, q: u64) -> i8 {
    let a = a.rem_euclid(q as i64) as u64;
    if a == 0 {
        return 0;
    }
    if pow_mod(a, (q - 1) / 2, q) == 1 {
        1
    } else {
        -1
    }
}

/// Multiplicative order of `a` modulo `n`, `None` for non-units.
pub fn mult_order(a: u64, n: u64) -> Option<u64> {
    if gcd(a % n, n) != 1 {
        return None;
    }
    let mut k = 1u64;
    let mut x = a % n;
    while x != 1 % n {
        x = mul_mod(x, a, n);
        k += 1;
    }
    Some(k)
}

pub fn ipow(b: u64, e: u32) -> u64 {
    b.checked_pow(e).expect("integer power overflow")
}

pub fn v_p(mut n: u64, p: u64) -> u32 {
    if n == 0 {
        return u32::MAX;
    }
    let mut k = 0;
    while n.is_multiple_of(p) {
        n /= p;
        k += 1;
    }
    k
}

fn check_odd_prime(q: u64) -> Result<()> {
    if q.is_multiple_of(2) || !is_prime(q) {
        return Err(Error::NotOddPrime(q));
    }
    Ok(())
}

const TABLE_LIMIT: u64 = 10_000;

#[derive(Debug, Clone)]
enum Dlog {
    Table(Vec<u32>),
    Bsgs { step: u64, baby: HashMap<u64, u64>, giant: u64 },
}

/// The ring `Z/q^m` together with a fixed generator of its unit group.
#[derive(Debug, Clone)]
pub struct ModRing {
    q: u64,
    m: u32,
    modulus: u64,
    phi: u64,
    generator: u64,
    dlog: Dlog,
}

impl ModRing {
    pub fn new(q: u64, m: u32) -> Result<Self> {
        check_odd_prime(q)?;
        if m == 0 {
            return Err(Error::LevelTooSmall { min: 1, got: 0 });
        }
        let modulus = ipow(q, m);
        let phi = (q - 1) * ipow(q, m - 1);
        // smallest primitive root mod q that stays primitive mod q^2 (hence mod q^m)
        let factors = prime_factors(q - 1);
        let generator = (2..q.max(3))
            .chain(q + 1..)
            .find(|&g| {
                g % q != 0
                    && factors.iter().all(|&f| pow_mod(g, (q - 1) / f, q) != 1)
                    && (m == 1 || pow_mod(g, q - 1, q * q) != 1)
            })
            .map(|g| g % modulus)
            .expect("primitive roots exist for odd prime powers");
        let generator = if q == 3 && m == 1 { 2 } else { generator };
        let dlog = if phi <= TABLE_LIMIT {
            let mut t = vec![u32::MAX; modulus as usize];
            let mut x = 1u64;
            for i in 0..phi {
                t[x as usize] = i as u32;
                x = mul_mod(x, generator, modulus);
            }
            Dlog::Table(t)
        } else {
            let step = (phi as f64).sqrt().ceil() as u64;
            let mut baby = HashMap::with_capacity(step as usize);
            let mut x = 1u64;
            for j in 0..step {
                baby.entry(x).or_insert(j);
                x = mul_mod(x, generator, modulus);
            }
            let giant = inv_mod(pow_mod(generator, step, modulus), modulus).expect("unit");
            Dlog::Bsgs { step, baby, giant }
        };
        Ok(Self { q, m, modulus, phi, generator, dlog })
    }

    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn m(&self) -> u32 {
        self.m
    }
    pub fn modulus(&self) -> u64 {
        self.modulus
    }
    /// Order of the unit group, `(q-1)q^(m-1)`.
    pub fn phi(&self) -> u64 {
        self.phi
    }
    pub fn generator(&self) -> u64 {
        self.generator
    }

    pub fn reduce(&self, a: i128) -> u64 {
        a.rem_euclid(self.modulus as i128) as u64
    }
    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.modulus
    }
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.modulus - b % self.modulus) % self.modulus
    }
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.modulus)
    }
    pub fn pow(&self, a: u64, e: u64) -> u64 {
        pow_mod(a, e, self.modulus)
    }
    pub fn is_unit(&self, a: u64) -> bool {
        !a.is_multiple_of(self.q)
    }
    pub fn inv(&self, a: u64) -> Result<u64> {
        inv_mod(a, self.modulus).ok_or(Error::NotAUnit(a))
    }

    /// Exponent `e` with `g^e = a`.
    pub fn dlog(&self, a: u64) -> Result<u64> {
        let a = a % self.modulus;
        if !self.is_unit(a) {
            return Err(Error::NotAUnit(a));
        }
        match &self.dlog {
            Dlog::Table(t) => Ok(t[a as usize] as u64),
            Dlog::Bsgs { step, baby, giant } => {
                let mut y = a;
                for i in 0..=*step {
                    if let Some(&j) = baby.get(&y) {
                        return Ok((i * step + j) % self.phi);
                    }
                    y = mul_mod(y, *giant, self.modulus);
                }
                Err(Error::NotAUnit(a))
            }
        }
    }

    /// Square root of a unit square, lifted from the root mod `q` whose least
    /// residue is smallest.
    pub fn sqrt_unit(&self, t: u64) -> Result<u64> {
        let q = self.q;
        let t = t % self.modulus;
        if t.is_multiple_of(q) || legendre(t as i64, q) != 1 {
            return Err(Error::NotASquare { value: t, q });
        }
        let r0 = (1..q).find(|&r| mul_mod(r, r, q) == t % q).expect("square mod q");
        let mut x = r0;
        let mut modulus = q;
        for _ in 1..self.m {
            modulus *= q;
            // Newton step x <- x - (x^2 - t)/(2x)
            let fx = (mul_mod(x, x, modulus) + modulus - t % modulus) % modulus;
            let inv2x = inv_mod(2 * x % modulus, modulus).expect("unit");
            x = (x + modulus - mul_mod(fx, inv2x, modulus)) % modulus;
        }
        Ok(x)
    }
}

/// An element `a + b·θ` of `O_K/q^m` with `θ² = d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadElt {
    pub a: u64,
    pub b: u64,
}

impl QuadElt {
    pub const fn new(a: u64, b: u64) -> Self {
        Self { a, b }
    }
}

/// `O_K/q^m O_K` for the unramified quadratic extension, `θ² = d`.
#[derive(Debug, Clone)]
pub struct QuadExtRing {
    base: ModRing,
    d: u64,
}

impl QuadExtRing {
    /// Uses the smallest positive non-residue mod `q` for `d`.
    pub fn new(q: u64, m: u32) -> Result<Self> {
        let base = ModRing::new(q, m)?;
        let d = (2..q).find(|&x| legendre(x as i64, q) == -1).expect("q odd has non-residues");
        Ok(Self { base, d })
    }

    pub fn with_d(q: u64, m: u32, d: u64) -> Result<Self> {
        let base = ModRing::new(q, m)?;
        if legendre(d as i64, q) != -1 {
            return Err(Error::Invalid(format!("d = {d} is not a non-residue mod {q}")));
        }
        let d = d % base.modulus;
        Ok(Self { base, d })
    }

    pub fn base(&self) -> &ModRing {
        &self.base
    }
    pub fn q(&self) -> u64 {
        self.base.q
    }
    pub fn m(&self) -> u32 {
        self.base.m
    }
    pub fn modulus(&self) -> u64 {
        self.base.modulus
    }
    pub fn d(&self) -> u64 {
        self.d
    }
    pub fn theta(&self) -> QuadElt {
        QuadElt::new(0, 1)
    }
    pub fn one(&self) -> QuadElt {
        QuadElt::new(1, 0)
    }
    pub fn from_base(&self, a: u64) -> QuadElt {
        QuadElt::new(a % self.modulus(), 0)
    }

    pub fn add(&self, x: QuadElt, y: QuadElt) -> QuadElt {
        QuadElt::new(self.base.add(x.a, y.a), self.base.add(x.b, y.b))
    }
    pub fn sub(&self, x: QuadElt, y: QuadElt) -> QuadElt {
        QuadElt::new(self.base.sub(x.a, y.a), self.base.sub(x.b, y.b))
    }
    pub fn neg(&self, x: QuadElt) -> QuadElt {
        self.sub(QuadElt::new(0, 0), x)
    }
    pub fn mul(&self, x: QuadElt, y: QuadElt) -> QuadElt {
        let n = self.modulus() as u128;
        let (xa, xb, ya, yb) = (x.a as u128, x.b as u128, y.a as u128, y.b as u128);
        let a = (xa * ya + (self.d as u128) * ((xb * yb) % n)) % n;
        let b = (xa * yb + xb * ya) % n;
        QuadElt::new(a as u64, b as u64)
    }
    pub fn scale(&self, c: u64, x: QuadElt) -> QuadElt {
        QuadElt::new(self.base.mul(c, x.a), self.base.mul(c, x.b))
    }
    pub fn pow(&self, mut x: QuadElt, mut e: u64) -> QuadElt {
        let mut r = self.one();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, x);
            }
            x = self.mul(x, x);
            e >>= 1;
        }
        r
    }
    pub fn conj(&self, x: QuadElt) -> QuadElt {
        QuadElt::new(x.a, self.base.sub(0, x.b))
    }
    pub fn norm(&self, x: QuadElt) -> u64 {
        let a2 = self.base.mul(x.a, x.a);
        let b2 = self.base.mul(x.b, x.b);
        self.base.sub(a2, self.base.mul(self.d, b2))
    }
    pub fn trace(&self, x: QuadElt) -> u64 {
        self.base.mul(2, x.a)
    }
    pub fn is_unit(&self, x: QuadElt) -> bool {
        !self.norm(x).is_multiple_of(self.q())
    }
    pub fn inv(&self, x: QuadElt) -> Result<QuadElt> {
        let n = self.norm(x);
        let ni = self.base.inv(n).map_err(|_| Error::NotAUnit(n))?;
        Ok(self.scale(ni, self.conj(x)))
    }

    pub fn units(&self) -> impl Iterator<Item = QuadElt> + '_ {
        let n = self.modulus();
        let q = self.q();
        (0..n).flat_map(move |a| {
            (0..n).filter_map(move |b| (a % q != 0 || b % q != 0).then_some(QuadElt::new(a, b)))
        })
    }

    pub fn unit_count(&self) -> u64 {
        let q = self.q();
        (q * q - 1) * ipow(q, 2 * (self.m() - 1))
    }
}

/// Generators `h` (order `q²-1`), `u1 = 1+q`, `u2 = 1+qθ` (order `q^(m-1)` each)
/// of `(O_K/q^m)^×` with a discrete-log solver.
#[derive(Debug, Clone)]
pub struct UnitGroupStructure {
    ring: QuadExtRing,
    h: QuadElt,
    u1: QuadElt,
    u2: QuadElt,
    /// dlog of residues mod q in F_{q^2}^×, indexed by a + q·b
    fq2_log: Vec<u32>,
}

impl UnitGroupStructure {
    pub fn new(ring: &QuadExtRing) -> Self {
        let q = ring.q();
        let m = ring.m();
        let d = ring.d() % q;
        let n1 = q * q - 1;
        let mul_q = |x: (u64, u64), y: (u64, u64)| {
            ((x.0 * y.0 + d * x.1 * y.1) % q, (x.0 * y.1 + x.1 * y.0) % q)
        };
        let order_q = |x: (u64, u64)| {
            let mut k = 1u64;
            let mut z = x;
            while z != (1, 0) {
                z = mul_q(z, x);
                k += 1;
            }
            k
        };
        let x0 = (0..q)
            .flat_map(|b| (0..q).map(move |a| (a, b)))
            .find(|&x| x != (0, 0) && order_q(x) == n1)
            .expect("F_{q^2}^x is cyclic");
        let mut fq2_log = vec![u32::MAX; (q * q) as usize];
        let mut z = (1u64, 0u64);
        for i in 0..n1 {
            fq2_log[(z.0 + q * z.1) as usize] = i as u32;
            z = mul_q(z, x0);
        }
        let h = ring.pow(QuadElt::new(x0.0, x0.1), ipow(q, 2 * (m - 1)));
        let u1 = QuadElt::new((1 + q) % ring.modulus(), 0);
        let u2 = QuadElt::new(1 % ring.modulus(), q % ring.modulus());
        Self { ring: ring.clone(), h, u1, u2, fq2_log }
    }

    pub fn ring(&self) -> &QuadExtRing {
        &self.ring
    }
    pub fn h(&self) -> QuadElt {
        self.h
    }
    pub fn u1(&self) -> QuadElt {
        self.u1
    }
    pub fn u2(&self) -> QuadElt {
        self.u2
    }
    /// Orders `(q²-1, q^(m-1), q^(m-1))`.
    pub fn orders(&self) -> (u64, u64, u64) {
        let q = self.ring.q();
        let pm = ipow(q, self.ring.m() - 1);
        (q * q - 1, pm, pm)
    }

    /// Exponents `(i, j, k)` with `w = h^i u1^j u2^k`.
    pub fn dlog(&self, w: QuadElt) -> Result<(u64, u64, u64)> {
        let r = &self.ring;
        if !r.is_unit(w) {
            return Err(Error::NotAUnit(w.a));
        }
        let q = r.q();
        let m = r.m();
        let i = self.fq2_log[((w.a % q) + q * (w.b % q)) as usize] as u64;
        // h ≡ x0 mod q, so w·h^{-i} is a principal unit
        let (n1, _, _) = self.orders();
        let mut z = r.mul(w, r.pow(self.h, (n1 - i) % n1));
        let (mut j, mut k) = (0u64, 0u64);
        for lvl in 1..m {
            let ql = ipow(q, lvl);
            let qn = ql * q;
            let c = ((z.a + r.modulus() - 1) % r.modulus() % qn) / ql;
            let dd = (z.b % qn) / ql;
            let step = ipow(q, lvl - 1);
            let pm = ipow(q, m - 1);
            if c != 0 {
                z = r.mul(z, r.pow(self.u1, (pm - (c * step) % pm) % pm));
                j += c * step;
            }
            if dd != 0 {
                z = r.mul(z, r.pow(self.u2, (pm - (dd * step) % pm) % pm));
                k += dd * step;
            }
        }
        debug_assert_eq!(z, r.one(), "principal-unit digit extraction");
        let pm = ipow(q, m - 1);
        Ok((i, j % pm, k % pm))
    }

    pub fn exp(&self, e: (u64, u64, u64)) -> QuadElt {
        let r = &self.ring;
        r.mul(r.mul(r.pow(self.h, e.0), r.pow(self.u1, e.1)), r.pow(self.u2, e.2))
    }
}

/// Representatives of `O_K^×/Z_q^×(1+q^m O_K)`: `{a+θ} ∪ {1+bθ : q | b}`.
pub fn coset_reps_units_mod_order(ring: &QuadExtRing) -> Vec<QuadElt> {
    let n = ring.modulus();
    let q = ring.q();
    let mut reps: Vec<QuadElt> = (0..n).map(|a| QuadElt::new(a, 1)).collect();
    reps.extend((0..n).step_by(q as usize).map(|b| QuadElt::new(1 % n, b)));
    reps
}

/// Canonical representative of the class of a unit modulo `(Z/q^m)^×`: the
/// scaling that makes the first unit coordinate equal to one.
pub fn unit_class_key(ring: &QuadExtRing, x: QuadElt) -> Result<QuadElt> {
    let base = ring.base();
    if !x.b.is_multiple_of(ring.q()) {
        let s = base.inv(x.b)?;
        Ok(ring.scale(s, x))
    } else {
        let s = base.inv(x.a)?;
        Ok(ring.scale(s, x))
    }
}

/// Number of `X ∈ Z/q^k` with `X² + 2bX + c = 0`, by the discriminant case analysis.
pub fn quad_solution_count(q: u64, k: u32, b: i64, c: i64) -> Result<u64> {
    check_odd_prime(q)?;
    if k == 0 {
        return Err(Error::LevelTooSmall { min: 1, got: 0 });
    }
    let n = ipow(q, k) as i128;
    let disc = ((b as i128) * (b as i128) - c as i128).rem_euclid(n) as u64;
    if disc == 0 {
        return Ok(ipow(q, k / 2));
    }
    let t = v_p(disc, q);
    let unit = disc / ipow(q, t);
    if legendre(unit as i64, q) != 1 || t % 2 == 1 {
        return Ok(0);
    }
    let r = t / 2;
    if r == 0 {
        Ok(2)
    } else if 2 * r >= k {
        Ok(ipow(q, k / 2))
    } else {
        Ok(2 * ipow(q, r))
    }
}

pub fn quad_solution_count_brute(q: u64, k: u32, b: i64, c: i64) -> u64 {
    let n = ipow(q, k) as i128;
    (0..n).filter(|&x| (x * x + 2 * (b as i128) * x + c as i128).rem_euclid(n) == 0).count() as u64
}

/// Residues `u ∈ [1, q)` with `u²d - 1` a nonzero square mod `q`.
pub fn find_u(ring: &QuadExtRing) -> Vec<u64> {
    let q = ring.q();
    let d = ring.d() % q;
    (1..q).filter(|&u| legendre((u * u % q * d) as i64 - 1, q) == 1).collect()
}

/// `a0` with `a0² ≡ θ²u² - 1 (mod q^m)`; `u` may be any lift.
pub fn a0_solve(ring: &QuadExtRing, u: u64) -> Result<u64> {
    let base = ring.base();
    let t = base.sub(base.mul(ring.d(), base.mul(u, u)), 1);
    base.sqrt_unit(t)
}

/// A place of `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Place {
    Prime(u64),
    Infinity,
}

/// Hilbert symbol `(a, b)_v` for nonzero rationals given as `(num, den)`.
pub fn hilbert_symbol(a: (i64, i64), b: (i64, i64), place: Place) -> Result<i8> {
    if a.0 == 0 || a.1 == 0 || b.0 == 0 || b.1 == 0 {
        return Err(Error::Invalid("Hilbert symbol needs nonzero rationals".into()));
    }
    // same square class: num·den
    let a = a.0 as i128 * a.1 as i128;
    let b = b.0 as i128 * b.1 as i128;
    match place {
        Place::Infinity => Ok(if a < 0 && b < 0 { -1 } else { 1 }),
        Place::Prime(p) => {
            if !is_prime(p) {
                return Err(Error::Invalid(format!("{p} is not prime")));
            }
            let p = p as i128;
            let split = |mut x: i128| {
                let mut e = 0u32;
                while x % p == 0 {
                    x /= p;
                    e += 1;
                }
                (e, x)
            };
            let (alpha, u) = split(a);
            let (beta, v) = split(b);
            if p == 2 {
                let eps = |x: i128| (((x - 1) / 2).rem_euclid(2)) as u32;
                let omega = |x: i128| ((x * x - 1) / 8).rem_euclid(2) as u32;
                let e = eps(u) * eps(v) + alpha * omega(v) + beta * omega(u);
                Ok(if e % 2 == 0 { 1 } else { -1 })
            } else {
                let pu = p as u64;
                let epsp = (((p - 1) / 2) % 2) as u32;
                let mut s: i8 = if (alpha * beta * epsp).is_multiple_of(2) { 1 } else { -1 };
                let lu = legendre((u.rem_euclid(p)) as i64, pu);
                let lv = legendre((v.rem_euclid(p)) as i64, pu);
                if beta % 2 == 1 {
                    s *= lu;
                }
                if alpha % 2 == 1 {
                    s *= lv;
                }
                Ok(s)
            }
        }
    }
}
