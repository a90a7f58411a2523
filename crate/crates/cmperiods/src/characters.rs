//! Characters of `(Z/q^m)^×` and `(O_K/q^m)^×`, Gauss and Jacobi sums,
//! epsilon factors, root-number bookkeeping and `μ_ℓ`.

use serde::{Deserialize, Serialize};

use crate::cyclotomic::{val_ell_root_minus_one, CycloElt, ValuationRat};
use crate::error::{Error, Result};
use crate::local_rings::{
    gcd, hilbert_symbol, ipow, prime_factors, ModRing, Place, QuadElt, QuadExtRing,
    UnitGroupStructure,
};

/// Everything needed to evaluate characters at level `q^m` as exponents of `ζ_N`,
/// `N = (q²-1)q^m`.
#[derive(Debug, Clone)]
pub struct LocalSetting {
    ring: QuadExtRing,
    units: UnitGroupStructure,
    /// `(i, j, k)` for each unit, indexed by `a + b·q^m`
    unit_log: Vec<Option<(u32, u32, u32)>>,
    n: u64,
}

impl LocalSetting {
    pub fn new(q: u64, m: u32) -> Result<Self> {
        Self::from_ring(QuadExtRing::new(q, m)?)
    }

    pub fn from_ring(ring: QuadExtRing) -> Result<Self> {
        let units = UnitGroupStructure::new(&ring);
        let qm = ring.modulus();
        let mut unit_log = vec![None; (qm * qm) as usize];
        for w in ring.units() {
            let (i, j, k) = units.dlog(w)?;
            unit_log[(w.a + qm * w.b) as usize] = Some((i as u32, j as u32, k as u32));
        }
        let q = ring.q();
        let n = (q * q - 1) * qm;
        Ok(Self { ring, units, unit_log, n })
    }

    pub fn q(&self) -> u64 {
        self.ring.q()
    }
    pub fn m(&self) -> u32 {
        self.ring.m()
    }
    pub fn d(&self) -> u64 {
        self.ring.d()
    }
    pub fn qm(&self) -> u64 {
        self.ring.modulus()
    }
    pub fn phi(&self) -> u64 {
        self.ring.base().phi()
    }
    /// Conductor of the cyclotomic field holding every value in play.
    pub fn conductor(&self) -> u64 {
        self.n
    }
    pub fn ring(&self) -> &QuadExtRing {
        &self.ring
    }
    pub fn base(&self) -> &ModRing {
        self.ring.base()
    }
    pub fn units(&self) -> &UnitGroupStructure {
        &self.units
    }

    pub fn unit_log(&self, x: QuadElt) -> Option<(u64, u64, u64)> {
        let qm = self.qm();
        self.unit_log[((x.a % qm) + qm * (x.b % qm)) as usize]
            .map(|(i, j, k)| (i as u64, j as u64, k as u64))
    }

    /// `ψ(a/q^m) = ζ_{q^m}^a` as an exponent of `ζ_N`.
    pub fn psi_exp(&self, a: u64) -> u64 {
        (a % self.qm()) * (self.n / self.qm()) % self.n
    }

    /// All units of `O_K/q^m`.
    pub fn quad_units(&self) -> impl Iterator<Item = QuadElt> + '_ {
        self.ring.units()
    }

    /// Exponent triple of `χ∘N` for a character of `(Z/q^m)^×`.
    pub fn norm_composite(&self, chi: &MultChar) -> Result<HeckeCharLocal> {
        self.check_mult(chi)?;
        let r = &self.ring;
        let (n1, pm, _) = self.units.orders();
        let mut exps = [0u64; 3];
        // χ_K(gen) = ζ_φ^{e·dlog N(gen)} so the exponent on each generator is read off directly
        for (slot, (gen, ord)) in [(self.units.h(), n1), (self.units.u1(), pm), (self.units.u2(), pm)]
            .into_iter()
            .enumerate()
        {
            let l = self.base().dlog(r.norm(gen))?;
            let num = chi.exponent * l % self.phi();
            // value ζ_φ^{num} = ζ_ord^{exp}, need ord·num/φ integral
            let scaled = num as u128 * ord as u128;
            if !scaled.is_multiple_of(self.phi() as u128) {
                return Err(Error::Contract("norm character exponent not integral".into()));
            }
            exps[slot] = (scaled / self.phi() as u128) as u64 % ord;
        }
        Ok(HeckeCharLocal { q: self.q(), m: self.m(), d: self.d(), exponents: exps })
    }

    fn check_mult(&self, chi: &MultChar) -> Result<()> {
        if chi.q != self.q() || chi.m != self.m() {
            return Err(Error::Invalid("character level differs from the setting".into()));
        }
        Ok(())
    }

    fn check_hecke(&self, lam: &HeckeCharLocal) -> Result<()> {
        if lam.q != self.q() || lam.m != self.m() || lam.d % self.q() != self.d() % self.q() {
            return Err(Error::Invalid("character level differs from the setting".into()));
        }
        Ok(())
    }

    /// `χ(a)` as an exponent of `ζ_N`; `None` off the units.
    pub fn chi_exp(&self, chi: &MultChar, a: u64) -> Option<u64> {
        let a = a % self.qm();
        if a.is_multiple_of(self.q()) {
            return None;
        }
        let l = self.base().dlog(a).ok()?;
        Some((chi.exponent * l % self.phi()) * (self.n / self.phi()) % self.n)
    }

    /// `λ(x)` as an exponent of `ζ_N`; `None` off the units.
    pub fn lambda_exp(&self, lam: &HeckeCharLocal, x: QuadElt) -> Option<u64> {
        let (i, j, k) = self.unit_log(x)?;
        let (n1, pm, _) = self.units.orders();
        let e = &lam.exponents;
        let a = (e[0] * i % n1) * (self.n / n1);
        let b = ((e[1] * j + e[2] * k) % pm) * (self.n / pm);
        Some((a + b) % self.n)
    }

    pub fn lambda_value(&self, lam: &HeckeCharLocal, x: QuadElt) -> Result<CycloElt> {
        let e = self.lambda_exp(lam, x).ok_or(Error::NotAUnit(x.a))?;
        Ok(CycloElt::root(self.n, e))
    }

    /// `λ(θ) ∈ {±1}` for self-dual `λ`.
    pub fn lambda_theta_sign(&self, lam: &HeckeCharLocal) -> Result<i8> {
        let e = self.lambda_exp(lam, self.ring.theta()).expect("θ is a unit");
        match e {
            0 => Ok(1),
            x if 2 * x == self.n => Ok(-1),
            _ => Err(Error::Contract("λ(θ) is not ±1".into())),
        }
    }

    pub fn conductor_exponent(&self, lam: &HeckeCharLocal) -> u32 {
        let (_, pm, _) = self.units.orders();
        let q = self.q();
        let e = &lam.exponents;
        if e[1].is_multiple_of(pm) && e[2].is_multiple_of(pm) {
            return u32::from(e[0] != 0);
        }
        // trivial on 1+q^s O_K iff q^{s-1}·(e1, e2) ≡ 0 mod q^{m-1}
        (1..=self.m()).find(|&s| (e[1] * ipow(q, s - 1)).is_multiple_of(pm) && (e[2] * ipow(q, s - 1)).is_multiple_of(pm))
            .expect("conductor at most q^m")
    }

    pub fn is_self_dual(&self, lam: &HeckeCharLocal) -> bool {
        let g = self.ring.from_base(self.base().generator());
        let u1 = self.units.u1();
        self.lambda_exp(lam, g) == Some(0) && self.lambda_exp(lam, u1) == Some(0)
    }

    /// Self-dual characters of conductor exactly `q^m`, in exponent order.
    pub fn enumerate_selfdual(&self) -> Result<Vec<HeckeCharLocal>> {
        if self.m() < 2 {
            return Err(Error::LevelTooSmall { min: 2, got: self.m() });
        }
        let (n1, pm, _) = self.units.orders();
        let q = self.q();
        let mut out = Vec::new();
        for eh in (0..n1).step_by((q - 1) as usize) {
            for e2 in (0..pm).filter(|e| e % q != 0) {
                let lam = HeckeCharLocal { q, m: self.m(), d: self.d(), exponents: [eh, 0, e2] };
                debug_assert!(self.is_self_dual(&lam));
                out.push(lam);
            }
        }
        Ok(out)
    }

    /// Brute-force filter over the full character group; the oracle for [`Self::enumerate_selfdual`].
    pub fn enumerate_selfdual_brute(&self) -> Vec<HeckeCharLocal> {
        let (n1, pm, _) = self.units.orders();
        let mut out = Vec::new();
        for e0 in 0..n1 {
            for e1 in 0..pm {
                for e2 in 0..pm {
                    let lam = HeckeCharLocal { q: self.q(), m: self.m(), d: self.d(), exponents: [e0, e1, e2] };
                    let trivial_on_base = self
                        .base()
                        .units_iter()
                        .all(|a| self.lambda_exp(&lam, self.ring.from_base(a)) == Some(0));
                    if trivial_on_base && self.conductor_exponent(&lam) == self.m() {
                        out.push(lam);
                    }
                }
            }
        }
        out
    }

    pub fn primitive_chars(&self) -> Vec<MultChar> {
        let q = self.q();
        let m = self.m();
        (0..self.phi())
            .map(|e| MultChar { q, m, exponent: e })
            .filter(|c| c.is_primitive())
            .collect()
    }

    pub fn quadratic_char(&self) -> MultChar {
        MultChar { q: self.q(), m: self.m(), exponent: self.phi() / 2 }
    }

    /// `G(χ,ψ) = Σ_{a ∈ (Z/q^m)^×} χ(a)ψ(a/q^m)`.
    pub fn gauss_sum_q(&self, chi: &MultChar) -> Result<CycloElt> {
        self.check_mult(chi)?;
        if !chi.is_primitive() {
            return Err(Error::NotPrimitive { m: self.m() });
        }
        Ok(self.gauss_sum_q_unchecked(chi))
    }

    /// Gauss sum without the primitivity gate (used for `η` of conductor `q` at higher levels).
    pub fn gauss_sum_q_unchecked(&self, chi: &MultChar) -> CycloElt {
        let mut counts = vec![0i128; self.n as usize];
        for a in self.base().units_iter() {
            let e = (self.chi_exp(chi, a).expect("unit") + self.psi_exp(a)) % self.n;
            counts[e as usize] += 1;
        }
        CycloElt::from_exponent_counts(self.n, counts)
    }

    /// Gauss sum of `χ` for the shifted additive character `a ↦ ψ(c·a/q^m)`.
    pub fn gauss_sum_q_shifted(&self, chi: &MultChar, c: u64) -> CycloElt {
        let base = self.base();
        let mut counts = vec![0i128; self.n as usize];
        for a in base.units_iter() {
            let e = (self.chi_exp(chi, a).expect("unit") + self.psi_exp(base.mul(c, a))) % self.n;
            counts[e as usize] += 1;
        }
        CycloElt::from_exponent_counts(self.n, counts)
    }

    /// `G(λ',ψ_K(c·)) = Σ_{x ∈ (O_K/q^m)^×} λ'(x)ψ(tr(c·x)/q^m)` summed over every unit.
    pub fn gauss_sum_k_twisted(&self, lam: &HeckeCharLocal, c: QuadElt) -> Result<CycloElt> {
        self.check_hecke(lam)?;
        let cond = self.conductor_exponent(lam);
        if cond != self.m() {
            return Err(Error::WrongConductor { got: cond, want: self.m() });
        }
        let r = &self.ring;
        let mut counts = vec![0i128; self.n as usize];
        for x in r.units() {
            let e = self.lambda_exp(lam, x).expect("unit") + self.psi_exp(r.trace(r.mul(c, x)));
            counts[(e % self.n) as usize] += 1;
        }
        Ok(CycloElt::from_exponent_counts(self.n, counts))
    }

    /// `G(λ',ψ_K)` with `ψ_K = ψ∘tr`.
    pub fn gauss_sum_k(&self, lam: &HeckeCharLocal) -> Result<CycloElt> {
        self.gauss_sum_k_twisted(lam, self.ring.one())
    }

    /// Gauss sum restricted to the coset representatives; recorded for comparison only.
    pub fn gauss_sum_k_coset_reps(&self, lam: &HeckeCharLocal) -> Result<CycloElt> {
        let r = &self.ring;
        let mut counts = vec![0i128; self.n as usize];
        for x in crate::local_rings::coset_reps_units_mod_order(r) {
            let e = self.lambda_exp(lam, x).ok_or(Error::NotAUnit(x.a))? + self.psi_exp(r.trace(x));
            counts[(e % self.n) as usize] += 1;
        }
        Ok(CycloElt::from_exponent_counts(self.n, counts))
    }

    /// `J(χ,χ) = Σ_x χ(x)χ(1-x)`.
    pub fn jacobi(&self, chi: &MultChar) -> Result<CycloElt> {
        self.check_mult(chi)?;
        let base = self.base();
        let mut counts = vec![0i128; self.n as usize];
        for x in base.units_iter() {
            let y = base.sub(1, x);
            if let (Some(a), Some(b)) = (self.chi_exp(chi, x), self.chi_exp(chi, y)) {
                counts[((a + b) % self.n) as usize] += 1;
            }
        }
        Ok(CycloElt::from_exponent_counts(self.n, counts))
    }

    /// `ε(1/2, π_λ⊗χ, ψ) = (-1)^m λ(θ) G((λχ_K)^{-1},ψ_K)/G(λ^{-1},ψ_K)`.
    pub fn epsilon_factor(&self, lam: &HeckeCharLocal, chi: &MultChar) -> Result<CycloElt> {
        let denom = self.gauss_sum_k(&lam.inverse(self))?;
        let den = denom.as_integer().ok_or_else(|| {
            Error::Contract("G(λ^{-1},ψ_K) is not a rational integer".into())
        })?;
        let twisted = lam.mul(&self.norm_composite(chi)?, self).inverse(self);
        let num = self.gauss_sum_k(&twisted)?;
        let sign = if self.m().is_multiple_of(2) { 1 } else { -1 } * self.lambda_theta_sign(lam)? as i128;
        num.scale(sign).div_int(den)
    }

    /// `ε(π_λ) = (-1)^m λ(θ)`.
    pub fn root_number(&self, lam: &HeckeCharLocal) -> Result<i8> {
        let s = self.lambda_theta_sign(lam)?;
        Ok(if self.m().is_multiple_of(2) { s } else { -s })
    }
}

impl ModRing {
    pub fn units_iter(&self) -> impl Iterator<Item = u64> + '_ {
        (1..self.modulus()).filter(move |a| a % self.q() != 0)
    }
}

/// Character of `(Z/q^m)^×`: `g ↦ ζ_φ^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultChar {
    pub q: u64,
    pub m: u32,
    pub exponent: u64,
}

impl MultChar {
    pub fn phi(&self) -> u64 {
        (self.q - 1) * ipow(self.q, self.m - 1)
    }
    pub fn order(&self) -> u64 {
        let phi = self.phi();
        phi / gcd(self.exponent % phi, phi)
    }
    /// Conductor exponent `s` with conductor `q^s`.
    pub fn conductor_exponent(&self) -> u32 {
        let o = self.order();
        if o == 1 {
            return 0;
        }
        let mut s = 1;
        let mut r = o;
        while r.is_multiple_of(self.q) {
            r /= self.q;
            s += 1;
        }
        s
    }
    pub fn is_primitive(&self) -> bool {
        self.conductor_exponent() == self.m
    }
    pub fn inverse(&self) -> Self {
        Self { exponent: (self.phi() - self.exponent % self.phi()) % self.phi(), ..*self }
    }
    pub fn pow(&self, k: u64) -> Self {
        Self { exponent: self.exponent * k % self.phi(), ..*self }
    }
}

/// Character of `(O_K/q^m)^×` given by exponents on `(h, u1, u2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HeckeCharLocal {
    pub q: u64,
    pub m: u32,
    pub d: u64,
    pub exponents: [u64; 3],
}

impl HeckeCharLocal {
    pub fn inverse(&self, s: &LocalSetting) -> Self {
        let (n1, pm, _) = s.units().orders();
        let e = self.exponents;
        Self { exponents: [(n1 - e[0] % n1) % n1, (pm - e[1] % pm) % pm, (pm - e[2] % pm) % pm], ..*self }
    }

    pub fn mul(&self, other: &Self, s: &LocalSetting) -> Self {
        let (n1, pm, _) = s.units().orders();
        let (a, b) = (self.exponents, other.exponents);
        Self { exponents: [(a[0] + b[0]) % n1, (a[1] + b[1]) % pm, (a[2] + b[2]) % pm], ..*self }
    }

    /// Order of `λ` in the character group.
    pub fn order(&self, s: &LocalSetting) -> u64 {
        let (n1, pm, _) = s.units().orders();
        let e = self.exponents;
        let o0 = n1 / gcd(e[0] % n1, n1);
        let o1 = pm / gcd(e[1] % pm, pm);
        let o2 = pm / gcd(e[2] % pm, pm);
        lcm(lcm(o0, o1), o2)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// `μ_ℓ(λ) = min_x v_ℓ(λ(x) - 1)`; `+∞` for the trivial character.
pub fn mu_ell_invariant(lam: &HeckeCharLocal, s: &LocalSetting, ell: u64) -> ValuationRat {
    let o = lam.order(s);
    if o == 1 {
        return ValuationRat::Infinite;
    }
    let mut r = o;
    while r.is_multiple_of(ell) {
        r /= ell;
    }
    if r == 1 {
        val_ell_root_minus_one(o, ell)
    } else {
        ValuationRat::zero()
    }
}

/// Minimum of `v_ℓ(λ(x) - 1)` over every unit, by direct scan.
pub fn mu_ell_invariant_brute(lam: &HeckeCharLocal, s: &LocalSetting, ell: u64) -> ValuationRat {
    let n = s.conductor();
    s.quad_units()
        .map(|x| {
            let e = s.lambda_exp(lam, x).expect("unit");
            val_ell_root_minus_one(n / gcd(e, n), ell)
        })
        .fold(ValuationRat::Infinite, ValuationRat::min)
}

/// Whether `-dk` is a fundamental discriminant.
pub fn is_fundamental_imaginary(dk: u64) -> bool {
    let squarefree = |n: u64| {
        let mut p = 2u64;
        while p * p <= n {
            if n.is_multiple_of(p * p) {
                return false;
            }
            p += 1;
        }
        true
    };
    let d = -(dk as i64);
    if dk == 0 {
        return false;
    }
    if d.rem_euclid(4) == 1 {
        return squarefree(dk);
    }
    if dk.is_multiple_of(4) {
        let m = d / 4;
        let r = m.rem_euclid(4);
        return (r == 2 || r == 3) && squarefree(dk / 4);
    }
    false
}

/// `D_B = Π q` over the finite primes with `(-1, -D_K)_q = -1`.
pub fn quaternion_discriminant(dk: u64) -> Result<u64> {
    if !is_fundamental_imaginary(dk) {
        return Err(Error::NotFundamental(-(dk as i64)));
    }
    let mut primes = prime_factors(dk);
    if !primes.contains(&2) {
        primes.push(2);
    }
    primes.sort_unstable();
    let mut db = 1u64;
    for p in primes {
        if hilbert_symbol((-1, 1), (-(dk as i64), 1), Place::Prime(p))? == -1 {
            db *= p;
        }
    }
    Ok(db)
}

/// Root number of `λν`: `ε_λ` when `p` splits, `(-1)^{t_p+1}ε_λ` when `p` is inert,
/// where `t_cond = t_p + 1` is the conductor exponent of `ν_p`.
pub fn xi_classifier(eps_lambda: i8, p_split: bool, t_cond: u32) -> Result<i8> {
    if eps_lambda.abs() != 1 {
        return Err(Error::Invalid(format!("root number {eps_lambda} is not ±1")));
    }
    if p_split {
        return Ok(eps_lambda);
    }
    if t_cond == 0 {
        return Err(Error::Invalid("inert twist needs conductor exponent ≥ 1".into()));
    }
    Ok(if t_cond.is_multiple_of(2) { eps_lambda } else { -eps_lambda })
}
