//! Toric periods of the newform of a CM supercuspidal `π_λ`: the twisted
//! epsilon-factor sum, its closed evaluations, and the `F_v` kernels behind them.
//!
//! Each closed form exists in two variants. `Stated` follows the published
//! formulas verbatim; `Corrected` carries the sign and inversion fixes that the
//! exact sweeps require at odd `m` (see the README for the derivation).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::characters::{HeckeCharLocal, LocalSetting, MultChar};
use crate::cyclotomic::{CycloElt, EllReduction, QCyclo};
use crate::error::{Error, Result};
use crate::local_rings::{a0_solve, find_u, ipow, legendre, QuadElt};

/// Which version of a closed formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedForm {
    Stated,
    Corrected,
}

/// Per-level data shared by every `λ`: primitive characters and their Gauss and Jacobi sums.
#[derive(Debug, Clone)]
pub struct ToricContext {
    setting: LocalSetting,
    prims: Vec<MultChar>,
    gauss_sq: Vec<CycloElt>,
    jacobi: Vec<CycloElt>,
    sqrt_qstar: CycloElt,
}

/// Per-`λ` data: `λ(θ)`, `G(λ^{-1},ψ_K)` and `G(χ)²ε(π⊗χ)` for each primitive `χ`.
#[derive(Debug, Clone)]
pub struct LambdaData {
    pub lam: HeckeCharLocal,
    pub theta_sign: i8,
    pub gk_inverse: i128,
    pub eps: Vec<CycloElt>,
    weighted: Vec<CycloElt>,
}

/// Outcome of a closed evaluation of `γ_{θ,u}`, stored as `gamma_scaled / scale`.
#[derive(Debug, Clone)]
pub struct ToricPeriodResult {
    pub q: u64,
    pub m: u32,
    pub lambda: HeckeCharLocal,
    pub d: u64,
    pub u: u64,
    pub a0: u64,
    pub k: Option<u64>,
    pub form: ClosedForm,
    pub gamma_scaled: CycloElt,
    pub scale: i128,
    pub vanishes: bool,
}

impl ToricPeriodResult {
    pub fn gamma(&self) -> QCyclo {
        QCyclo::new(self.gamma_scaled.clone(), self.scale)
    }
}

/// Serializable row for reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToricPeriodRecord {
    pub q: u64,
    pub m: u32,
    pub lambda: HeckeCharLocal,
    pub u: u64,
    pub a0: u64,
    pub k: Option<u64>,
    pub form: ClosedForm,
    pub scale: String,
    pub gamma_scaled_coeffs: Vec<String>,
    pub vanishes: bool,
    pub ell_unit: BTreeMap<String, bool>,
}

impl From<&ToricPeriodResult> for ToricPeriodRecord {
    fn from(r: &ToricPeriodResult) -> Self {
        Self {
            q: r.q,
            m: r.m,
            lambda: r.lambda,
            u: r.u,
            a0: r.a0,
            k: r.k,
            form: r.form,
            scale: r.scale.to_string(),
            gamma_scaled_coeffs: r.gamma_scaled.coeffs().iter().map(|c| c.to_string()).collect(),
            vanishes: r.vanishes,
            ell_unit: BTreeMap::new(),
        }
    }
}

fn accumulate_shift(acc: &mut [i128], x: &CycloElt, k: u64) {
    let n = acc.len() as u64;
    for (i, &c) in x.coeffs().iter().enumerate() {
        if c != 0 {
            acc[((i as u64 + k) % n) as usize] += c;
        }
    }
}

impl ToricContext {
    pub fn new(q: u64, m: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::LevelTooSmall { min: 2, got: m });
        }
        Self::from_setting(LocalSetting::new(q, m)?)
    }

    pub fn from_setting(setting: LocalSetting) -> Result<Self> {
        let prims = setting.primitive_chars();
        let mut gauss_sq = Vec::with_capacity(prims.len());
        let mut jacobi = Vec::with_capacity(prims.len());
        for chi in &prims {
            let g = setting.gauss_sum_q(chi)?;
            gauss_sq.push(&g * &g);
            jacobi.push(setting.jacobi(chi)?);
        }
        let n = setting.conductor();
        let q = setting.q();
        let mut counts = vec![0i128; n as usize];
        for t in 1..q {
            counts[(t * (n / q)) as usize] += legendre(t as i64, q) as i128;
        }
        let sqrt_qstar = CycloElt::from_exponent_counts(n, counts);
        Ok(Self { setting, prims, gauss_sq, jacobi, sqrt_qstar })
    }

    pub fn setting(&self) -> &LocalSetting {
        &self.setting
    }
    pub fn q(&self) -> u64 {
        self.setting.q()
    }
    pub fn m(&self) -> u32 {
        self.setting.m()
    }
    pub fn n(&self) -> u64 {
        self.setting.conductor()
    }
    pub fn primitive_chars(&self) -> &[MultChar] {
        &self.prims
    }
    /// `√q* = Σ_t η(t)ζ_q^t`.
    pub fn sqrt_qstar(&self) -> &CycloElt {
        &self.sqrt_qstar
    }

    /// Residues `u mod q` with `u²d - 1` a nonzero square.
    pub fn admissible_u(&self) -> Vec<u64> {
        find_u(self.setting.ring())
    }

    fn check_u(&self, u: u64) -> Result<()> {
        let q = self.q();
        if u.is_multiple_of(q) || legendre(((u % q) * (u % q) % q * (self.setting.d() % q)) as i64 - 1, q) != 1 {
            return Err(Error::Invalid(format!("u = {u} is not admissible")));
        }
        Ok(())
    }

    pub fn a0(&self, u: u64) -> Result<u64> {
        self.check_u(u)?;
        a0_solve(self.setting.ring(), u)
    }

    pub fn lambda_data(&self, lam: &HeckeCharLocal) -> Result<LambdaData> {
        let s = &self.setting;
        if !s.is_self_dual(lam) || s.conductor_exponent(lam) != s.m() {
            return Err(Error::Invalid("λ must be self-dual of conductor q^m".into()));
        }
        let theta_sign = s.lambda_theta_sign(lam)?;
        let gk = s.gauss_sum_k(&lam.inverse(s))?;
        let gk_inverse = gk
            .as_integer()
            .ok_or_else(|| Error::Contract("G(λ^{-1},ψ_K) is not a rational integer".into()))?;
        let sign = if s.m().is_multiple_of(2) { 1 } else { -1 } * theta_sign as i128;
        let mut eps = Vec::with_capacity(self.prims.len());
        let mut weighted = Vec::with_capacity(self.prims.len());
        for (chi, g2) in self.prims.iter().zip(&self.gauss_sq) {
            let twisted = lam.mul(&s.norm_composite(chi)?, s).inverse(s);
            let e = s.gauss_sum_k(&twisted)?.scale(sign).div_int(gk_inverse)?;
            weighted.push(g2 * &e);
            eps.push(e);
        }
        Ok(LambdaData { lam: *lam, theta_sign, gk_inverse, eps, weighted })
    }

    /// `{1 - q^{m-1}x : x ∈ F_q^{×2}}` as residues mod `q^m`.
    pub fn v_set(&self) -> Vec<u64> {
        let q = self.q();
        let qm = self.setting.qm();
        let step = ipow(q, self.m() - 1);
        let mut vs: Vec<u64> = (1..q)
            .map(|t| (qm + 1 - (step * (t * t % q)) % qm) % qm)
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// `Σ_{χ primitive} G(χ,ψ)²χ^{-1}(u²θ²v)ε(1/2,π⊗χ,ψ)`.
    pub fn twisted_epsilon_sum(&self, ld: &LambdaData, u: u64, v: u64) -> Result<CycloElt> {
        self.check_u(u)?;
        let s = &self.setting;
        let base = s.base();
        let n = self.n();
        let arg = base.mul(base.mul(base.mul(u, u), s.d()), v);
        let mut acc = vec![0i128; n as usize];
        for (chi, w) in self.prims.iter().zip(&ld.weighted) {
            let e = s.chi_exp(chi, arg).ok_or(Error::NotAUnit(arg))?;
            accumulate_shift(&mut acc, w, (n - e) % n);
        }
        Ok(CycloElt::from_exponent_counts(n, acc))
    }

    /// Part (i) by direct summation over primitive characters.
    pub fn mm_i_direct(&self, ld: &LambdaData, u: u64) -> Result<CycloElt> {
        self.twisted_epsilon_sum(ld, u, 1)
    }

    /// Part (ii) by direct summation, `m` odd.
    pub fn mm_ii_direct(&self, ld: &LambdaData, u: u64) -> Result<CycloElt> {
        if self.m().is_multiple_of(2) {
            return Err(Error::Parity("part (ii) needs m odd".into()));
        }
        let mut acc = CycloElt::zero(self.n());
        for v in self.v_set() {
            acc = &acc + &self.twisted_epsilon_sum(ld, u, v)?;
        }
        Ok(acc)
    }

    /// `[q - qη(-1)ε(π)ε(π⊗η)]/(q-1)`, computed from the epsilon factors themselves.
    pub fn theorem_co_first_term(&self, ld: &LambdaData) -> Result<QCyclo> {
        let s = &self.setting;
        let q = self.q() as i128;
        let triv = MultChar { q: s.q(), m: s.m(), exponent: 0 };
        let e0 = s.epsilon_factor(&ld.lam, &triv)?;
        let e1 = s.epsilon_factor(&ld.lam, &s.quadratic_char())?;
        let eta_m1 = legendre(-1, s.q()) as i128;
        let num = &CycloElt::from_int(self.n(), q) - &(&e0 * &e1).scale(q * eta_m1);
        Ok(QCyclo::new(num, q - 1))
    }

    /// The full right side of the epsilon-sum expansion divided by `(f,f)`.
    pub fn theorem_co_sum(&self, ld: &LambdaData, u: u64) -> Result<QCyclo> {
        let q = self.q() as i128;
        let m = self.m();
        let phi = self.setting.phi() as i128;
        let first = self.theorem_co_first_term(ld)?;
        let expected = QCyclo::rational(self.n(), 2 * q, q - 1);
        if first != expected {
            return Err(Error::Contract("first term differs from 2q/(q-1)".into()));
        }
        let weight = ipow(self.q(), m / 2) as i128;
        let second = QCyclo::new(self.mm_i_direct(ld, u)?.scale(weight), phi * phi);
        let mut total = first.add(&second);
        if m % 2 == 1 {
            let w3 = 2 * ipow(self.q(), (m - 1) / 2) as i128;
            let third = QCyclo::new(self.mm_ii_direct(ld, u)?.scale(w3), phi * phi);
            total = total.add(&third);
        }
        Ok(total)
    }

    fn lam_inv_exp(&self, ld: &LambdaData, x: QuadElt) -> Result<u64> {
        let n = self.n();
        let e = self.setting.lambda_exp(&ld.lam, x).ok_or(Error::NotAUnit(x.a))?;
        Ok((n - e) % n)
    }

    /// `λ^{-1}(±a_0 + θu)` as exponents of `ζ_N`.
    pub fn lp_lm(&self, ld: &LambdaData, u: u64) -> Result<(u64, u64)> {
        let a0 = self.a0(u)?;
        let r = self.setting.ring();
        let qm = r.modulus();
        let lp = self.lam_inv_exp(ld, QuadElt::new(a0, u % qm))?;
        let lm = self.lam_inv_exp(ld, QuadElt::new((qm - a0) % qm, u % qm))?;
        Ok((lp, lm))
    }

    fn k_index_for(&self, ld: &LambdaData, a0: u64, x: QuadElt) -> Result<u64> {
        let r = self.setting.ring();
        let base = r.base();
        let q = self.q();
        let w = r.inv(r.scale(base.mul(2, a0), x))?;
        let qm1 = ipow(q, self.m() - 1);
        let z = r.add(r.one(), r.scale(qm1, w));
        let e = self.lam_inv_exp(ld, z)?;
        let step = self.n() / q;
        if e % step != 0 {
            return Err(Error::Contract("λ^{-1}(1+q^{m-1}w) is not a q-th root of unity".into()));
        }
        let k = e / step;
        if k == 0 {
            return Err(Error::Contract("k vanishes".into()));
        }
        Ok(k)
    }

    /// `k` with `λ^{-1}(1 + q^{m-1}/(2a_0(a_0+θu))) = ζ_q^k`.
    pub fn k_index(&self, ld: &LambdaData, u: u64) -> Result<u64> {
        let a0 = self.a0(u)?;
        let qm = self.setting.qm();
        self.k_index_for(ld, a0, QuadElt::new(a0, u % qm))
    }

    /// The companion index from `-a_0 + θu`.
    pub fn k_index_minus(&self, ld: &LambdaData, u: u64) -> Result<u64> {
        let a0 = self.a0(u)?;
        let qm = self.setting.qm();
        self.k_index_for(ld, a0, QuadElt::new((qm - a0) % qm, u % qm))
    }

    fn root(&self, e: u64) -> CycloElt {
        CycloElt::root(self.n(), e)
    }

    fn c_odd(&self) -> i128 {
        let q = self.q();
        (ipow(q, 3 * (self.m() - 1) / 2) * (q - 1)) as i128
    }

    /// Closed evaluation of part (i).
    pub fn mm_i_closed(&self, ld: &LambdaData, u: u64, form: ClosedForm) -> Result<CycloElt> {
        let (lp, lm) = self.lp_lm(ld, u)?;
        let q = self.q();
        let m = self.m();
        let t = ld.theta_sign as i128;
        let lsum = &self.root(lp) + &self.root(lm);
        if m.is_multiple_of(2) {
            let c = (ipow(q, 3 * m / 2 - 1) * (q - 1)) as i128;
            return Ok(lsum.scale(c * t));
        }
        match form {
            ClosedForm::Stated => Ok(lsum.scale(self.c_odd() * t)),
            ClosedForm::Corrected => {
                let kp = self.k_index(ld, u)? as i64;
                let km = self.k_index_minus(ld, u)? as i64;
                let ep = legendre(kp, q) as i128;
                let em = legendre(-km, q) as i128;
                let inner = &self.root(lp).scale(ep) + &self.root(lm).scale(em);
                Ok((&inner * &self.sqrt_qstar).scale(-t * self.c_odd()))
            }
        }
    }

    /// Closed evaluation of part (ii), `m` odd.
    pub fn mm_ii_closed(&self, ld: &LambdaData, u: u64, form: ClosedForm) -> Result<CycloElt> {
        if self.m().is_multiple_of(2) {
            return Err(Error::Parity("part (ii) needs m odd".into()));
        }
        let (lp, lm) = self.lp_lm(ld, u)?;
        let q = self.q();
        let n = self.n();
        let t = ld.theta_sign as i128;
        let squares: Vec<u64> = {
            let mut v: Vec<u64> = (1..q).map(|x| x * x % q).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let kp = self.k_index(ld, u)?;
        let zq = |e: u64| self.root(e % q * (n / q));
        match form {
            ClosedForm::Stated => {
                let mut plus = CycloElt::zero(n);
                let mut minus = CycloElt::zero(n);
                for &x in &squares {
                    plus = &plus + &zq(kp * x);
                    minus = &minus + &zq(q - kp * x % q);
                }
                let inner = &(&self.root(lp) * &plus) + &(&self.root(lm) * &minus);
                Ok(inner.scale(self.c_odd() * t))
            }
            ClosedForm::Corrected => {
                let km = self.k_index_minus(ld, u)?;
                let ep = legendre(kp as i64, q) as i128;
                let em = legendre(-(km as i64), q) as i128;
                let mut plus = CycloElt::zero(n);
                let mut minus = CycloElt::zero(n);
                for &x in &squares {
                    plus = &plus + &zq(q - kp * x % q);
                    minus = &minus + &zq(km * x);
                }
                let inner = &(&self.root(lp) * &plus).scale(ep) + &(&self.root(lm) * &minus).scale(em);
                Ok((&inner * &self.sqrt_qstar).scale(-t * self.c_odd()))
            }
        }
    }

    /// Closed form of `γ_{θ,u}`.
    ///
    /// `Stated` uses scale `(q²-1)q^{m-2}` for even `m` and `(q²-1)q^{m-1}` for odd `m`;
    /// `Corrected` uses `(q²-1)q^{m-2}` with `2 + (-1)^m λ(θ)(λ^{-1}(a_0+θu)+λ^{-1}(-a_0+θu))`.
    pub fn gamma_closed(&self, ld: &LambdaData, u: u64, form: ClosedForm) -> Result<ToricPeriodResult> {
        let q = self.q();
        let m = self.m();
        let n = self.n();
        let a0 = self.a0(u)?;
        let (lp, lm) = self.lp_lm(ld, u)?;
        let t = ld.theta_sign as i128;
        let lsum = &self.root(lp) + &self.root(lm);
        let base_scale = ((q * q - 1) * ipow(q, m - 2)) as i128;
        let (gamma_scaled, scale, k) = match (m % 2, form) {
            (0, _) => (&CycloElt::from_int(n, 2) + &lsum.scale(t), base_scale, None),
            (_, ClosedForm::Stated) => {
                let k = self.k_index(ld, u)?;
                let ep = legendre(k as i64, q) as i128;
                let em = legendre(-(k as i64), q) as i128;
                let inner = &self.root(lp).scale(ep) + &self.root(lm).scale(em);
                let g = &CycloElt::from_int(n, 2 * q as i128) + &(&inner * &self.sqrt_qstar).scale(t);
                (g, base_scale * q as i128, Some(k))
            }
            (_, ClosedForm::Corrected) => {
                let k = self.k_index(ld, u)?;
                (&CycloElt::from_int(n, 2) + &lsum.scale(-t), base_scale, Some(k))
            }
        };
        let vanishes = gamma_scaled.is_zero();
        Ok(ToricPeriodResult {
            q,
            m,
            lambda: ld.lam,
            d: self.setting.d(),
            u,
            a0,
            k,
            form,
            gamma_scaled,
            scale,
            vanishes,
        })
    }

    /// `theorem_co_sum = (q+1)q^{m-1}·γ`, compared exactly by cross-multiplication.
    pub fn master_identity(&self, ld: &LambdaData, u: u64, form: ClosedForm) -> Result<bool> {
        let total = self.theorem_co_sum(ld, u)?;
        let g = self.gamma_closed(ld, u, form)?;
        let factor = ((self.q() + 1) * ipow(self.q(), self.m() - 1)) as i128;
        Ok(total.num.scale(g.scale) == g.gamma_scaled.scale(factor * total.den))
    }

    /// `F_v(a) = Σ_{χ primitive} χ(-4v)J(χ,χ)χ^{-1}(a² - θ'²)` in `Z[ζ_φ]`, `θ' = θu`.
    pub fn f_v_direct(&self, u: u64, v: u64, a: u64) -> Result<CycloElt> {
        self.check_v(v)?;
        let s = &self.setting;
        let base = s.base();
        let phi = s.phi();
        let d = s.d();
        let t = base.sub(base.mul(a, a), base.mul(d, base.mul(u, u)));
        let lt = base.dlog(t)?;
        let lv = base.dlog(base.mul(base.reduce(-4), v))?;
        let mut hist = vec![0i128; phi as usize];
        for x in base.units_iter() {
            let y = base.sub(1, x);
            if !y.is_multiple_of(s.q()) {
                hist[base.dlog(base.mul(x, y))? as usize] += 1;
            }
        }
        let mut counts = vec![0i128; phi as usize];
        for chi in &self.prims {
            for (l, &c) in hist.iter().enumerate() {
                if c != 0 {
                    let e = chi.exponent * ((lv + l as u64 + phi - lt) % phi) % phi;
                    counts[e as usize] += c;
                }
            }
        }
        Ok(CycloElt::from_exponent_counts(phi, counts))
    }

    fn check_v(&self, v: u64) -> Result<()> {
        let qm1 = ipow(self.q(), self.m() - 1);
        if v % qm1 != 1 % qm1 || v.is_multiple_of(self.q()) {
            return Err(Error::Invalid(format!("v = {v} is not ≡ 1 mod q^(m-1)")));
        }
        Ok(())
    }

    /// Closed evaluation of `F_v(a)` as an integer.
    pub fn f_v_closed(&self, u: u64, v: u64, a: u64, form: ClosedForm) -> Result<i128> {
        self.check_v(v)?;
        let s = &self.setting;
        let base = s.base();
        let q = self.q();
        let m = self.m();
        let qm = s.qm();
        let a0 = self.a0(u)?;
        let a = a % qm;
        let qm1 = ipow(q, m - 1);
        if m.is_multiple_of(2) {
            if v != 1 {
                return Err(Error::OutOfScope("closed F_v for m even needs v = 1".into()));
            }
            let ce = (ipow(q, 3 * m / 2 - 2) * (q - 1) * (q - 1)) as i128;
            if a == a0 || a == (qm - a0) % qm {
                return Ok(ce);
            }
            if a % qm1 == a0 % qm1 || a % qm1 == (qm - a0) % qm1 {
                return Ok(-ce / (q as i128 - 1));
            }
            return Ok(0);
        }
        if a % qm1 != a0 % qm1 && a % qm1 != (qm - a0) % qm1 {
            return Ok(0);
        }
        // v + a² - θ'² ≡ 0 mod q^{m-1} on the support
        let w = base.sub(base.add(v, base.mul(a, a)), base.mul(s.d(), base.mul(u, u)));
        if w == 0 {
            return Ok(0);
        }
        match form {
            ClosedForm::Stated => Ok(self.c_odd()),
            ClosedForm::Corrected => {
                let r = (w / qm1) as i64;
                Ok(self.c_odd() * legendre(r, q) as i128)
            }
        }
    }

    /// Both sides of the twisted Gauss-sum reduction for one `(λ, u, χ, v)`:
    /// `(lhs, rhs with χ(-4v), rhs with χ(-4v^{-1}))`.
    pub fn js_sides(
        &self,
        ld: &LambdaData,
        u: u64,
        chi_index: usize,
        v: u64,
    ) -> Result<(CycloElt, CycloElt, CycloElt)> {
        self.check_u(u)?;
        let s = &self.setting;
        let base = s.base();
        let r = s.ring();
        let n = self.n();
        let chi = self.prims[chi_index];
        let twisted = ld.lam.mul(&s.norm_composite(&chi)?, s).inverse(s);
        let ratio = s.gauss_sum_k(&twisted)?.div_int(ld.gk_inverse)?;
        let arg = base.mul(base.mul(base.mul(u, u), s.d()), v);
        let e_arg = s.chi_exp(&chi, arg).ok_or(Error::NotAUnit(arg))?;
        let lhs = (&self.gauss_sq[chi_index] * &ratio).mul_root((n - e_arg) % n);
        let mut counts = vec![0i128; n as usize];
        for a in 0..s.qm() {
            let x = QuadElt::new(a, u % s.qm());
            let e = s.lambda_exp(&twisted, x).ok_or(Error::NotAUnit(a))?;
            counts[e as usize] += 1;
        }
        let lam_sum = &self.jacobi[chi_index] * &CycloElt::from_exponent_counts(n, counts);
        let m4 = base.reduce(-4);
        let e_stated = s.chi_exp(&chi, base.mul(m4, v)).ok_or(Error::NotAUnit(v))?;
        let e_corr = s.chi_exp(&chi, base.mul(m4, base.inv(v)?)).ok_or(Error::NotAUnit(v))?;
        let _ = r;
        Ok((lhs, lam_sum.mul_root(e_stated), lam_sum.mul_root(e_corr)))
    }

    /// `G(λ^{-1}, ψ_K(·/2θu))`.
    pub fn gauss_k_half_theta(&self, ld: &LambdaData, u: u64) -> Result<CycloElt> {
        let s = &self.setting;
        let r = s.ring();
        let c = r.inv(r.scale(2 * u % s.qm(), r.theta()))?;
        s.gauss_sum_k_twisted(&ld.lam.inverse(s), c)
    }
}

/// Exceptional-set predicate for vanishing at even `m`, under two readings of
/// "`λ|_{μ_K}` quadratic": order dividing 2, or order exactly 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionalFlags {
    pub mu_order_divides_2: bool,
    pub mu_order_is_2: bool,
    pub pr_in_kernel: bool,
    pub theta_x_is_minus_one: bool,
}

impl ExceptionalFlags {
    pub fn predicate_divides_2(&self) -> bool {
        self.mu_order_divides_2 && self.pr_in_kernel && self.theta_x_is_minus_one
    }
    pub fn predicate_exact_2(&self) -> bool {
        self.mu_order_is_2 && self.pr_in_kernel && self.theta_x_is_minus_one
    }
}

/// One `u` in the non-vanishing / `ℓ`-unit report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmlRow {
    pub u: u64,
    pub a0: u64,
    pub vanishes: bool,
    pub exceptional: ExceptionalFlags,
    /// `(ℓ, [(place, is_unit)])` for `(q²-1)γ`
    pub ell_units: Vec<(u64, Vec<(u64, bool)>)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmlReport {
    pub lambda: HeckeCharLocal,
    pub form: ClosedForm,
    pub rows: Vec<CmlRow>,
}

impl CmlReport {
    pub fn some_nonvanishing(&self) -> bool {
        self.rows.iter().any(|r| !r.vanishes)
    }
    /// Some `u` with `(q²-1)γ` an `ℓ`-unit at every place.
    pub fn some_unit_everywhere(&self, ell: u64) -> bool {
        self.rows.iter().any(|r| {
            r.ell_units
                .iter()
                .find(|(l, _)| *l == ell)
                .is_some_and(|(_, flags)| flags.iter().all(|&(_, f)| f))
        })
    }
}

/// Multiplicative order of `ℓ` modulo `q`.
pub fn ell_order_mod_q(ell: u64, q: u64) -> Option<u64> {
    crate::local_rings::mult_order(ell % q, q)
}

impl ToricContext {
    pub fn exceptional_flags(&self, ld: &LambdaData, u: u64) -> Result<ExceptionalFlags> {
        let s = &self.setting;
        let n = self.n();
        let qm = s.qm();
        let a0 = self.a0(u)?;
        let x = QuadElt::new(a0, u % qm);
        let (n1, pm, _) = s.units().orders();
        let eh = ld.lam.exponents[0] % n1;
        let mu_order = n1 / crate::local_rings::gcd(eh, n1);
        let (_, j, k) = s.unit_log(x).ok_or(Error::NotAUnit(a0))?;
        let e = ld.lam.exponents;
        let pr_in_kernel = (e[1] * j + e[2] * k).is_multiple_of(pm);
        let tx = s.ring().mul(s.ring().theta(), x);
        let theta_x = s.lambda_exp(&ld.lam, tx).ok_or(Error::NotAUnit(a0))?;
        Ok(ExceptionalFlags {
            mu_order_divides_2: mu_order <= 2,
            mu_order_is_2: mu_order == 2,
            pr_in_kernel,
            theta_x_is_minus_one: 2 * theta_x == n,
        })
    }

    /// Vanishing flags, exceptional-set flags and `ℓ`-unit flags for each `u`.
    pub fn cml_report(
        &self,
        ld: &LambdaData,
        us: &[u64],
        reductions: &[EllReduction],
        form: ClosedForm,
    ) -> Result<CmlReport> {
        let mut rows = Vec::new();
        for &u in us {
            let g = self.gamma_closed(ld, u, form)?;
            let exceptional = self.exceptional_flags(ld, u)?;
            let mut ell_units = Vec::new();
            for red in reductions {
                // (q²-1)γ differs from the scaled value by a power of q
                ell_units.push((red.field().ell(), red.unit_flags(&g.gamma_scaled)?));
            }
            rows.push(CmlRow { u, a0: g.a0, vanishes: g.vanishes, exceptional, ell_units });
        }
        Ok(CmlReport { lambda: ld.lam, form, rows })
    }
}

/// `Σ_{χ primitive mod q^m} χ(a)` by direct summation.
pub fn fact_f_direct(setting: &LocalSetting, a: u64) -> Result<i128> {
    let phi = setting.phi();
    let l = setting.base().dlog(a)?;
    let mut counts = vec![0i128; phi as usize];
    for chi in setting.primitive_chars() {
        counts[(chi.exponent * l % phi) as usize] += 1;
    }
    CycloElt::from_exponent_counts(phi, counts)
        .as_integer()
        .ok_or_else(|| Error::Contract("character sum is not rational".into()))
}

/// Three-case value of the primitive-character sum at `a`.
pub fn fact_f_closed(q: u64, m: u32, a: u64) -> i128 {
    let qm = ipow(q, m);
    let qm1 = ipow(q, m - 1);
    let base = ipow(q, m - 2) as i128 * (q as i128 - 1);
    if a % qm == 1 % qm {
        base * (q as i128 - 1)
    } else if a % qm1 == 1 % qm1 {
        -base
    } else {
        0
    }
}

/// `Σ_{b ∈ Z/q^{k-s}} ζ^{a + q^s b}` for `ζ` a primitive `q^k`-th root of unity.
pub fn fact_zf_sum(q: u64, k: u32, s: u32, a: u64) -> CycloElt {
    let n = ipow(q, k);
    let mut counts = vec![0i128; n as usize];
    for b in 0..ipow(q, k - s) {
        counts[((a + ipow(q, s) * b) % n) as usize] += 1;
    }
    CycloElt::from_exponent_counts(n, counts)
}

/// `N_{Q(ζ)^+/Q}(±2 + ζ + ζ̄)` for `ζ = ζ_k`, `k ≥ 3`.
pub fn fact_f2_norm(k: u64, sign: i8) -> i128 {
    let mut acc = CycloElt::from_int(k, 1);
    for s in (1..k).filter(|&s| crate::local_rings::gcd(s, k) == 1 && 2 * s < k) {
        let term = &(&CycloElt::from_int(k, 2 * sign as i128) + &CycloElt::root(k, s)) + &CycloElt::root(k, k - s);
        acc = &acc * &term;
    }
    acc.as_integer().expect("norm to Q is rational")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fact_f_matches() {
        for (q, m) in [(3, 2), (5, 2), (3, 3)] {
            let s = LocalSetting::new(q, m).unwrap();
            for a in s.base().units_iter() {
                assert_eq!(fact_f_direct(&s, a).unwrap(), fact_f_closed(q, m, a));
            }
        }
    }

    #[test]
    fn zf_kernel() {
        for (k, s) in [(2, 0), (2, 1), (3, 1), (3, 2)] {
            for a in 0..5 {
                assert!(fact_zf_sum(3, k, s, a).is_zero());
            }
        }
        assert_eq!(fact_zf_sum(3, 2, 2, 1), CycloElt::root(9, 1));
    }

    #[test]
    fn f2_divisibility() {
        for k in 3..=50u64 {
            let odd: Vec<u64> = crate::local_rings::prime_factors(k).into_iter().filter(|p| p % 2 == 1).collect();
            for sign in [1i8, -1] {
                let nrm = fact_f2_norm(k, sign).abs();
                if odd.is_empty() {
                    assert_eq!(2 % nrm, 0, "k={k}");
                } else {
                    assert!(odd.iter().all(|r| (*r as i128) % nrm == 0), "k={k} sign={sign} N={nrm}");
                }
            }
        }
    }

    #[test]
    fn bfprime_even_small() {
        let ctx = ToricContext::new(3, 2).unwrap();
        let u = ctx.admissible_u()[0];
        let a0 = ctx.a0(u).unwrap();
        let c = ctx.f_v_closed(u, 1, a0, ClosedForm::Stated).unwrap();
        assert_eq!(c, 12);
        for a in 0..9 {
            let direct = ctx.f_v_direct(u, 1, a).unwrap();
            let closed = ctx.f_v_closed(u, 1, a, ClosedForm::Stated).unwrap();
            assert_eq!(direct.as_integer(), Some(closed), "a={a}");
        }
    }

    #[test]
    fn master_identity_q3_m2() {
        let ctx = ToricContext::new(3, 2).unwrap();
        for lam in ctx.setting().enumerate_selfdual().unwrap() {
            let ld = ctx.lambda_data(&lam).unwrap();
            for u in ctx.admissible_u() {
                assert!(ctx.master_identity(&ld, u, ClosedForm::Stated).unwrap());
                assert_eq!(ctx.mm_i_direct(&ld, u).unwrap(), ctx.mm_i_closed(&ld, u, ClosedForm::Stated).unwrap());
            }
        }
    }
}
