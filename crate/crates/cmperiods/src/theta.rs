//! Theta elements on synthetic ring-class towers with `a_p = 0`: distribution and
//! norm relations, `ω`-division into `Θ^±`, stabilization by `α` with `α² = -p`,
//! and finite Shimura-set data (inner product, Eisenstein test).
//!
//! Level `n` carries `G_n = Z/h × Z/c_n` with `c_0 = 1`, `c_n = k_1·p^{n-1}`; its
//! `p`-part `Γ` is `Z/p^{n-1}`, realized as `Z[T]/((1+T)^{p^{n-1}} - 1)`.
//! At level `n` the sign is `ε = (-1)^{n-1}`, the raw theta element is divisible by
//! `ω_{n-1}^{-ε}`, and the quotient scaled by `(-1)^{⌊(n+1)/2⌋}` is `Θ_n^ε`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cyclotomic::CycloElt;
use crate::error::{Error, Result};
use crate::iwasawa::{
    half_log_at_zeta, omega_pm, poly_divrem_monic, reduce_at_zeta, zeta_mul, PadicSeries,
    Poly, QAlpha, Sign,
};
use crate::local_rings::{gcd, ipow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TowerStructure {
    Inert,
    Split,
}

/// `G_0 → G_1 → …` with cyclic presentation `Z/h × Z/c_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingClassTower {
    pub p: u64,
    pub h: u64,
    /// kernel size of `G_1 → G_0`, prime to `p`
    pub k1: u64,
    pub n_max: u32,
    pub structure: TowerStructure,
}

impl RingClassTower {
    /// `k_1 = p + 1` (inert) or `p - 1` (split).
    pub fn new(p: u64, h: u64, n_max: u32, structure: TowerStructure) -> Result<Self> {
        let k1 = match structure {
            TowerStructure::Inert => p + 1,
            TowerStructure::Split => p - 1,
        };
        Self::with_first_kernel(p, h, k1, n_max, structure)
    }

    pub fn with_first_kernel(p: u64, h: u64, k1: u64, n_max: u32, structure: TowerStructure) -> Result<Self> {
        if h == 0 || k1 == 0 || k1.is_multiple_of(p) {
            return Err(Error::Invalid("h ≥ 1 and p ∤ k1 required".into()));
        }
        Ok(Self { p, h, k1, n_max, structure })
    }

    pub fn cyclic_order(&self, n: u32) -> u64 {
        if n == 0 {
            1
        } else {
            self.k1 * ipow(self.p, n - 1)
        }
    }

    pub fn order(&self, n: u32) -> u64 {
        self.h * self.cyclic_order(n)
    }

    fn split(&self, n: u32, idx: u64) -> (u64, u64) {
        let c = self.cyclic_order(n);
        (idx / c, idx % c)
    }

    /// Image in `G_{n-1}`.
    pub fn project(&self, n: u32, idx: u64) -> u64 {
        let (a, b) = self.split(n, idx);
        a * self.cyclic_order(n - 1) + b % self.cyclic_order(n - 1)
    }

    /// Image in `G_m`, `m ≤ n`.
    pub fn project_to(&self, n: u32, m: u32, mut idx: u64) -> u64 {
        for l in (m + 1..=n).rev() {
            idx = self.project(l, idx);
        }
        idx
    }

    /// Elements of `G_n` over `idx ∈ G_{n-1}`.
    pub fn fiber(&self, n: u32, idx: u64) -> Vec<u64> {
        let c_prev = self.cyclic_order(n - 1);
        let c = self.cyclic_order(n);
        let a = idx / c_prev;
        let b = idx % c_prev;
        (0..c / c_prev).map(|j| a * c + b + j * c_prev).collect()
    }

    /// Image in `Γ = Z/p^{n-1}`.
    pub fn gamma_image(&self, n: u32, idx: u64) -> u64 {
        if n == 0 {
            return 0;
        }
        self.split(n, idx).1 % ipow(self.p, n - 1)
    }
}

/// Values `φ(x_n(a))` for every level, exact integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormValues {
    pub levels: Vec<Vec<BigInt>>,
}

/// Random values obeying `Σ_{u ∈ ker} φ_{n+1}(ua) = -φ_{n-1}(ā)` for `n ≥ 1`, and
/// (inert only) `Σ_{u ∈ ker} φ_1(ua) = a_p φ_0(a) = 0`.
pub fn generate_ss_tower(tower: &RingClassTower, precision: u32, seed: u64) -> FormValues {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = ipow(tower.p, precision) as i64;
    let mut levels: Vec<Vec<BigInt>> = Vec::new();
    levels.push((0..tower.order(0)).map(|_| BigInt::from(rng.gen_range(0..bound))).collect());
    for n in 1..=tower.n_max {
        let mut cur = vec![BigInt::zero(); tower.order(n) as usize];
        for idx in 0..tower.order(n - 1) {
            let target = if n == 1 {
                match tower.structure {
                    TowerStructure::Inert => Some(BigInt::zero()),
                    TowerStructure::Split => None,
                }
            } else {
                let below = tower.project(n - 1, idx);
                Some(-levels[n as usize - 2][below as usize].clone())
            };
            let fib = tower.fiber(n, idx);
            let mut sum = BigInt::zero();
            for (j, &e) in fib.iter().enumerate() {
                if j + 1 == fib.len() && target.is_some() {
                    cur[e as usize] = target.clone().unwrap() - &sum;
                } else {
                    let v = BigInt::from(rng.gen_range(0..bound));
                    sum += &v;
                    cur[e as usize] = v;
                }
            }
        }
        levels.push(cur);
    }
    FormValues { levels }
}

/// Which Hecke relation failed, if any.
pub fn check_hecke_contract(tower: &RingClassTower, f: &FormValues) -> Result<()> {
    for n in 1..=tower.n_max {
        for idx in 0..tower.order(n - 1) {
            let s: BigInt = tower.fiber(n, idx).iter().map(|&e| &f.levels[n as usize][e as usize]).sum();
            let want = if n == 1 {
                if tower.structure == TowerStructure::Split {
                    continue;
                }
                BigInt::zero()
            } else {
                -f.levels[n as usize - 2][tower.project(n - 1, idx) as usize].clone()
            };
            if s != want {
                return Err(Error::Contract(format!("Hecke relation fails at level {n}, class {idx}")));
            }
        }
    }
    Ok(())
}

/// Group-ring element at level `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaElement<C> {
    pub level: u32,
    pub coeffs: Vec<C>,
}

pub fn raw_theta(f: &FormValues, n: u32) -> ThetaElement<BigInt> {
    ThetaElement { level: n, coeffs: f.levels[n as usize].clone() }
}

pub fn project_theta<C: Clone + Zero>(tower: &RingClassTower, x: &ThetaElement<C>) -> ThetaElement<C> {
    let n = x.level;
    let mut out = vec![C::zero(); tower.order(n - 1) as usize];
    for (idx, c) in x.coeffs.iter().enumerate() {
        let j = tower.project(n, idx as u64) as usize;
        out[j] = out[j].clone() + c.clone();
    }
    ThetaElement { level: n - 1, coeffs: out }
}

/// `ξ·x̃`: the level-`(n+1)` element with coefficient `x(ā)` at each `a`.
pub fn norm_lift<C: Clone>(tower: &RingClassTower, x: &ThetaElement<C>) -> ThetaElement<C> {
    let n = x.level + 1;
    let coeffs = (0..tower.order(n)).map(|idx| x.coeffs[tower.project(n, idx) as usize].clone()).collect();
    ThetaElement { level: n, coeffs }
}

/// `π(Θ̃_n) = -ξ_{n-1}Θ̃_{n-2}` for every `2 ≤ n ≤ n_max`.
pub fn ss_norm_relation_check(tower: &RingClassTower, f: &FormValues) -> Result<()> {
    for n in 2..=tower.n_max {
        let lhs = project_theta(tower, &raw_theta(f, n));
        let rhs = norm_lift(tower, &raw_theta(f, n - 2));
        let neg: Vec<BigInt> = rhs.coeffs.iter().map(|c| -c).collect();
        if lhs.coeffs != neg {
            return Err(Error::Contract(format!("norm relation fails at level {n}")));
        }
    }
    Ok(())
}

fn binomial_upto(g: u64, len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    let mut c = BigInt::one();
    for (j, slot) in out.iter_mut().enumerate() {
        if j as u64 > g {
            break;
        }
        *slot = c.clone();
        c = c * BigInt::from(g - j as u64) / BigInt::from(j as u64 + 1);
    }
    out
}

/// Image of a level-`n` element in `Z[T]/((1+T)^{p^{n-1}} - 1)`, as a polynomial of degree `< p^{n-1}`.
pub fn gamma_polynomial(tower: &RingClassTower, x: &ThetaElement<BigInt>) -> Vec<BigInt> {
    let n = x.level;
    let len = if n == 0 { 1 } else { ipow(tower.p, n - 1) as usize };
    let mut by_g = vec![BigInt::zero(); len];
    for (idx, c) in x.coeffs.iter().enumerate() {
        by_g[tower.gamma_image(n, idx as u64) as usize] += c;
    }
    let mut out = vec![BigInt::zero(); len];
    for (g, c) in by_g.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        for (j, b) in binomial_upto(g as u64, len).into_iter().enumerate() {
            out[j] += c * b;
        }
    }
    out
}

fn to_rat(v: &[BigInt]) -> Poly {
    v.iter().map(|c| BigRational::from_integer(c.clone())).collect()
}

fn normalization(n: u32) -> i64 {
    if n.div_ceil(2).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `Θ_n^ε` for one level.
#[derive(Debug, Clone)]
pub struct HalfTheta {
    pub level: u32,
    pub sign: Sign,
    /// normalized quotient; determined modulo `T·ω_{n-1}^ε`
    pub quotient: Vec<BigInt>,
}

/// Outcome of the `ω`-division over all levels.
#[derive(Debug, Clone)]
pub struct ThetaPlusMinus {
    pub levels: Vec<HalfTheta>,
    /// `s_nΘ_n ≡ s_{n-2}Θ_{n-2} mod T·ω^ε_{n-2}` for every available pair
    pub compatible: bool,
}

impl ThetaPlusMinus {
    /// The top level of the given sign, as an integral series.
    pub fn limit(&self, sign: Sign, p: u64, precision: u32) -> Option<PadicSeries> {
        let top = self.levels.iter().rev().find(|h| h.sign == sign)?;
        let d = top.quotient.len().max(1);
        Some(PadicSeries::integral(p, precision, d, &top.quotient))
    }

    pub fn at_level(&self, n: u32) -> Option<&HalfTheta> {
        self.levels.iter().find(|h| h.level == n)
    }
}

fn sign_at(n: u32) -> Sign {
    if n % 2 == 1 {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// Divide each raw theta element by `ω_{n-1}^{-ε}`; fails on a remainder.
pub fn omega_division(tower: &RingClassTower, f: &FormValues) -> Result<ThetaPlusMinus> {
    let p = tower.p;
    let mut levels = Vec::new();
    for n in 1..=tower.n_max {
        let sign = sign_at(n);
        let theta = to_rat(&gamma_polynomial(tower, &raw_theta(f, n)));
        let omega = to_rat(&omega_pm(p, n - 1, sign.flip()));
        let (q, r) = poly_divrem_monic(&theta, &omega);
        if !r.is_empty() {
            return Err(Error::Contract(format!("level {n}: not divisible by ω_{}^{}", n - 1, sign.flip())));
        }
        let s = BigInt::from(normalization(n));
        let quotient = q.iter().map(|c| c.to_integer() * &s).collect();
        levels.push(HalfTheta { level: n, sign, quotient });
    }
    let mut compatible = true;
    for h in &levels {
        if h.level < 3 {
            continue;
        }
        let lower = &levels[h.level as usize - 3];
        let diff: Poly = {
            let a = to_rat(&h.quotient);
            let b = to_rat(&lower.quotient);
            let len = a.len().max(b.len());
            (0..len)
                .map(|i| a.get(i).cloned().unwrap_or_default() - b.get(i).cloned().unwrap_or_default())
                .collect()
        };
        let modulus = {
            let w = to_rat(&omega_pm(p, h.level - 2, h.sign));
            let mut tw = vec![BigRational::zero()];
            tw.extend(w);
            tw
        };
        if !poly_divrem_monic(&diff, &modulus).1.is_empty() {
            compatible = false;
        }
    }
    Ok(ThetaPlusMinus { levels, compatible })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrivialCharCheck {
    /// `1(Θ^+) = -Σ_{a∈G_1} φ(x_1(a))`
    Value(BigInt),
    SkippedSplit,
}

pub fn trivial_char_plus(tower: &RingClassTower, f: &FormValues) -> TrivialCharCheck {
    match tower.structure {
        TowerStructure::Split => TrivialCharCheck::SkippedSplit,
        TowerStructure::Inert => TrivialCharCheck::Value(-f.levels[1].iter().sum::<BigInt>()),
    }
}

/// Whether `p` divides the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    PCoprimeToN,
    PDividesN,
}

/// Stabilized values `f†_n`, `n ≥ 1`, with coefficients in `Q(α)`.
#[derive(Debug, Clone)]
pub struct Stabilized {
    pub levels: Vec<Vec<QAlpha>>,
    pub identity: bool,
}

/// `f† = f - α^{-1}·companion`; the default companion at level `n` is `φ_{n-1}(ā)`.
pub fn stabilize(
    tower: &RingClassTower,
    f: &FormValues,
    companion: Option<&[Vec<BigInt>]>,
    regime: Regime,
) -> Result<Stabilized> {
    let p = tower.p;
    let to_q = |x: &BigInt| QAlpha::from_rat(p, BigRational::from_integer(x.clone()));
    if regime == Regime::PDividesN {
        return Ok(Stabilized { levels: f.levels.iter().map(|l| l.iter().map(to_q).collect()).collect(), identity: true });
    }
    let ainv = QAlpha::alpha(p).inv()?;
    let mut levels = vec![f.levels[0].iter().map(to_q).collect::<Vec<_>>()];
    for n in 1..=tower.n_max {
        let row: Vec<QAlpha> = (0..tower.order(n))
            .map(|idx| {
                let comp = match companion {
                    Some(c) => c
                        .get(n as usize)
                        .and_then(|r| r.get(idx as usize))
                        .cloned()
                        .unwrap_or_default(),
                    None => f.levels[n as usize - 1][tower.project(n, idx) as usize].clone(),
                };
                to_q(&f.levels[n as usize][idx as usize]).sub(&ainv.mul(&to_q(&comp)))
            })
            .collect();
        levels.push(row);
    }
    Ok(Stabilized { levels, identity: false })
}

/// `U_p f† = α f†` on every level `1 ≤ n < n_max`.
pub fn check_up_eigen(tower: &RingClassTower, s: &Stabilized) -> bool {
    let alpha = QAlpha::alpha(tower.p);
    (1..tower.n_max).all(|n| {
        (0..tower.order(n)).all(|idx| {
            let sum = tower
                .fiber(n + 1, idx)
                .iter()
                .fold(QAlpha::from_rat(tower.p, BigRational::zero()), |acc, &e| {
                    acc.add(&s.levels[n as usize + 1][e as usize])
                });
            sum == alpha.mul(&s.levels[n as usize][idx as usize])
        })
    })
}

/// `α^{-n}Σ_a f†(x_n(a))[a]_n`, or without the `α` power when `p | N`.
pub fn theta_n(tower: &RingClassTower, s: &Stabilized, n: u32) -> Result<ThetaElement<QAlpha>> {
    let scale = if s.identity { QAlpha::one(tower.p) } else { QAlpha::alpha(tower.p).pow_i(-(n as i64))? };
    Ok(ThetaElement { level: n, coeffs: s.levels[n as usize].iter().map(|c| c.mul(&scale)).collect() })
}

impl Zero for QAlpha {
    fn zero() -> Self {
        // prime is irrelevant for the additive identity; fixed up on first addition
        QAlpha::new(0, BigRational::zero(), BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

impl std::ops::Add for QAlpha {
    type Output = QAlpha;
    fn add(self, o: QAlpha) -> QAlpha {
        let p = self.p.max(o.p);
        QAlpha::new(p, self.a + o.a, self.b + o.b)
    }
}

/// Value at a character of `Γ` of order `p^s` (`s ≤ n - 1`), as `(a-part, b-part)` in `π`-coordinates.
pub fn eval_theta_alpha(tower: &RingClassTower, x: &ThetaElement<QAlpha>, s: u32) -> (Poly, Poly) {
    let a: Vec<BigRational> = x.coeffs.iter().map(|c| c.a.clone()).collect();
    let b: Vec<BigRational> = x.coeffs.iter().map(|c| c.b.clone()).collect();
    (eval_rat_theta(tower, x.level, &a, s), eval_rat_theta(tower, x.level, &b, s))
}

fn eval_rat_theta(tower: &RingClassTower, n: u32, coeffs: &[BigRational], s: u32) -> Poly {
    let p = tower.p;
    let len = ipow(p, s) as usize;
    let mut by_g = vec![BigRational::zero(); len];
    for (idx, c) in coeffs.iter().enumerate() {
        by_g[(tower.gamma_image(n, idx as u64) as usize) % len] += c;
    }
    if s == 0 {
        return by_g;
    }
    let mut poly = vec![BigRational::zero(); len];
    for (g, c) in by_g.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        for (j, b) in binomial_upto(g as u64, len).into_iter().enumerate() {
            poly[j] += c * BigRational::from_integer(b);
        }
    }
    reduce_at_zeta(&poly, p, s)
}

fn eval_int_poly(p: u64, f: &[BigInt], s: u32) -> Poly {
    if s == 0 {
        return vec![f.first().map(|c| BigRational::from_integer(c.clone())).unwrap_or_default()];
    }
    reduce_at_zeta(&to_rat(f), p, s)
}

/// One row of the reconstruction cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructionRow {
    pub s: u32,
    pub holds: bool,
}

/// `Θ_α(ζ) = log^+(ζ)Θ^-(ζ) + α·log^-(ζ)Θ^+(ζ)` at characters of order `p^s`,
/// `0 ≤ s ≤ n_max - 1`, with `Θ_α` from the top stabilized level.
pub fn pollack_cross_path(tower: &RingClassTower, f: &FormValues) -> Result<Vec<ReconstructionRow>> {
    let p = tower.p;
    let stab = stabilize(tower, f, None, Regime::PCoprimeToN)?;
    let top = theta_n(tower, &stab, tower.n_max)?;
    let pm = omega_division(tower, f)?;
    let mut rows = Vec::new();
    for s in 0..tower.n_max {
        let (la, lb) = eval_theta_alpha(tower, &top, s);
        // Θ^ε is pinned down at order p^s only for s = 0 or s in the ε half
        let pick = |sign: Sign| -> Option<Poly> {
            pm.levels
                .iter()
                .rev()
                .find(|h| h.sign == sign && (s == 0 || (s < h.level && sign.contains(s))))
                .map(|h| eval_int_poly(p, &h.quotient, s))
        };
        let (log_p, log_m) = if s == 0 {
            let inv = vec![BigRational::new(BigInt::one(), BigInt::from(p))];
            (inv.clone(), inv)
        } else {
            (half_log_at_zeta(p, Sign::Plus, s), half_log_at_zeta(p, Sign::Minus, s))
        };
        let zero = |v: &Poly| v.iter().all(|c| c.is_zero());
        let mul = |x: &Poly, y: &Poly| -> Poly {
            if s == 0 {
                vec![&x[0] * &y[0]]
            } else {
                zeta_mul(x, y, p, s)
            }
        };
        let want_a = if zero(&log_p) {
            Some(vec![BigRational::zero(); la.len()])
        } else {
            pick(Sign::Minus).map(|t| mul(&log_p, &t))
        };
        let want_b = if zero(&log_m) {
            Some(vec![BigRational::zero(); lb.len()])
        } else {
            pick(Sign::Plus).map(|t| mul(&log_m, &t))
        };
        let pad = |mut v: Poly, n: usize| {
            v.resize(n, BigRational::zero());
            v
        };
        let holds = match (want_a, want_b) {
            (Some(a), Some(b)) => pad(a, la.len()) == la && pad(b, lb.len()) == lb,
            _ => return Err(Error::Contract(format!("no level determines Θ^± at order p^{s}"))),
        };
        rows.push(ReconstructionRow { s, holds });
    }
    Ok(rows)
}

/// One class of a definite Shimura set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShimuraClass {
    pub weight: u64,
    pub component: Sign,
    pub fiber: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShimuraSetData {
    pub classes: Vec<ShimuraClass>,
}

impl ShimuraSetData {
    pub fn new(classes: Vec<ShimuraClass>) -> Result<Self> {
        if classes.iter().any(|c| c.weight == 0) {
            return Err(Error::Invalid("weights must be positive".into()));
        }
        Ok(Self { classes })
    }

    /// `⟨f, g⟩ = Σ f(g_i)g(g_i)/w_i`.
    pub fn inner_product(&self, f: &[BigInt], g: &[BigInt]) -> Result<BigRational> {
        if f.len() != self.classes.len() || g.len() != self.classes.len() {
            return Err(Error::Invalid("value vector length".into()));
        }
        Ok(self
            .classes
            .iter()
            .zip(f.iter().zip(g))
            .map(|(c, (x, y))| BigRational::new(x * y, BigInt::from(c.weight)))
            .sum())
    }

    /// Per component: `f mod ℓ` is constant on every declared norm fiber.
    pub fn eisenstein_mod_ell(&self, f: &[BigInt], ell: u64) -> Result<BTreeMap<String, bool>> {
        if self.classes.iter().any(|c| c.fiber.is_none()) {
            return Err(Error::Invalid("norm-fiber grouping missing".into()));
        }
        let l = BigInt::from(ell);
        let mut seen: BTreeMap<(String, usize), BigInt> = BTreeMap::new();
        let mut out: BTreeMap<String, bool> = BTreeMap::new();
        for (c, v) in self.classes.iter().zip(f) {
            let comp = c.component.to_string();
            let r = v.mod_floor(&l);
            let entry = out.entry(comp.clone()).or_insert(true);
            match seen.get(&(comp.clone(), c.fiber.unwrap())) {
                Some(prev) if *prev != r => *entry = false,
                Some(_) => {}
                None => {
                    seen.insert((comp, c.fiber.unwrap()), r);
                }
            }
        }
        Ok(out)
    }

    /// `f` restricted to one component, zero elsewhere.
    pub fn component_part(&self, f: &[BigInt], sign: Sign) -> Vec<BigInt> {
        self.classes
            .iter()
            .zip(f)
            .map(|(c, v)| if c.component == sign { v.clone() } else { BigInt::zero() })
            .collect()
    }
}

/// `P(χ) = Σ_a χ(a)φ(x_n(a))` for `χ(a, b) = ζ_h^{j_a a}ζ_{c_n}^{j_b b}`.
pub fn toric_period_sum(tower: &RingClassTower, f: &FormValues, n: u32, chi: (u64, u64)) -> CycloElt {
    let c = tower.cyclic_order(n);
    let h = tower.h;
    let cond = h / gcd(h, c) * c;
    let mut counts = vec![0i128; cond as usize];
    for idx in 0..tower.order(n) {
        let (a, b) = tower.split(n, idx);
        let e = (chi.0 * a % h) * (cond / h) + (chi.1 * b % c) * (cond / c);
        let v: i128 = (&f.levels[n as usize][idx as usize]).try_into().expect("tower values fit in i128");
        counts[(e % cond) as usize] += v;
    }
    CycloElt::from_exponent_counts(cond, counts)
}

/// On-disk tower layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TowerFile {
    pub p: u64,
    #[serde(rename = "M")]
    pub m: u32,
    pub n_max: u32,
    pub structure: TowerStructure,
    /// `[h, c_n]` per level
    pub groups: Vec<[u64; 2]>,
    pub values: BTreeMap<String, Vec<String>>,
    pub alpha: String,
    #[serde(default)]
    pub weights: Vec<u64>,
    #[serde(default)]
    pub norm_fibers: Vec<usize>,
}

impl TowerFile {
    pub fn from_tower(tower: &RingClassTower, f: &FormValues, precision: u32) -> Self {
        Self {
            p: tower.p,
            m: precision,
            n_max: tower.n_max,
            structure: tower.structure,
            groups: (0..=tower.n_max).map(|n| [tower.h, tower.cyclic_order(n)]).collect(),
            values: f
                .levels
                .iter()
                .enumerate()
                .map(|(n, v)| (n.to_string(), v.iter().map(|x| x.to_string()).collect()))
                .collect(),
            alpha: "sqrt(-p)".into(),
            weights: Vec::new(),
            norm_fibers: Vec::new(),
        }
    }

    pub fn to_tower(&self) -> Result<(RingClassTower, FormValues)> {
        let h = self.groups.first().map(|g| g[0]).ok_or(Error::Invalid("no groups".into()))?;
        let k1 = self.groups.get(1).map(|g| g[1]).ok_or(Error::Invalid("need level 1".into()))?;
        let tower = RingClassTower::with_first_kernel(self.p, h, k1, self.n_max, self.structure)?;
        for (n, g) in self.groups.iter().enumerate() {
            if g[0] != h || g[1] != tower.cyclic_order(n as u32) {
                return Err(Error::Invalid(format!("group at level {n} does not match the tower shape")));
            }
        }
        let mut levels = Vec::new();
        for n in 0..=self.n_max {
            let raw = self.values.get(&n.to_string()).ok_or(Error::Invalid(format!("values for level {n}")))?;
            let row: std::result::Result<Vec<BigInt>, _> = raw.iter().map(|s| s.parse::<BigInt>()).collect();
            let row = row.map_err(|e| Error::Invalid(format!("level {n}: {e}")))?;
            if row.len() as u64 != tower.order(n) {
                return Err(Error::Invalid(format!("level {n} has {} values", row.len())));
            }
            levels.push(row);
        }
        if self.alpha != "sqrt(-p)" {
            return Err(Error::Invalid("only alpha = sqrt(-p) is supported".into()));
        }
        Ok((tower, FormValues { levels }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tower() -> RingClassTower {
        RingClassTower::new(3, 2, 4, TowerStructure::Inert).unwrap()
    }

    #[test]
    fn fibers_partition() {
        let t = tower();
        for n in 1..=4 {
            let mut all: Vec<u64> = (0..t.order(n - 1)).flat_map(|i| t.fiber(n, i)).collect();
            all.sort_unstable();
            assert_eq!(all, (0..t.order(n)).collect::<Vec<_>>());
            for i in 0..t.order(n - 1) {
                assert!(t.fiber(n, i).iter().all(|&e| t.project(n, e) == i));
            }
        }
    }

    #[test]
    fn contracts_and_division() {
        let t = tower();
        for seed in 0..3 {
            let f = generate_ss_tower(&t, 6, seed);
            check_hecke_contract(&t, &f).unwrap();
            ss_norm_relation_check(&t, &f).unwrap();
            let pm = omega_division(&t, &f).unwrap();
            assert!(pm.compatible);
            assert_eq!(trivial_char_plus(&t, &f), TrivialCharCheck::Value(BigInt::zero()));
            let st = stabilize(&t, &f, None, Regime::PCoprimeToN).unwrap();
            assert!(check_up_eigen(&t, &st));
            for n in 1..4 {
                let up = project_theta(&t, &theta_n(&t, &st, n + 1).unwrap());
                assert_eq!(up.coeffs, theta_n(&t, &st, n).unwrap().coeffs);
            }
            assert!(pollack_cross_path(&t, &f).unwrap().iter().all(|r| r.holds));
        }
    }
}
