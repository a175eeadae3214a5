//! Exact multivariate Laurent polynomials with arbitrary-precision integer coefficients.
//!
//! Every polynomial carries the [`VarRegistry`] it was built over. Terms live in a
//! `BTreeMap` keyed by dense exponent vectors, so iteration order is the canonical
//! lexicographic order and structural equality is term-map equality.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LaurentError {
    #[error("polynomials belong to different variable registries")]
    RegistryMismatch,
    #[error("non-exact division: ({numerator}) / ({denominator}) is not a Laurent polynomial")]
    NonExactDivision { numerator: String, denominator: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("no value supplied for variable `{0}`")]
    MissingVariable(String),
    #[error("variable `{0}` is zero but appears with a negative exponent")]
    ZeroValue(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Ordered list of distinct variable names. Indices are stable for the registry's lifetime.
#[derive(Debug, Clone)]
pub struct VarRegistry {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl PartialEq for VarRegistry {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
    }
}
impl Eq for VarRegistry {}

impl VarRegistry {
    pub fn new<I, S>(names: I) -> Result<Arc<Self>, LaurentError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(LaurentError::DuplicateName(n.clone()));
            }
        }
        Ok(Arc::new(VarRegistry { names, index }))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

fn same_registry(a: &Arc<VarRegistry>, b: &Arc<VarRegistry>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

pub type Exponents = Vec<i32>;

#[derive(Clone)]
pub struct LaurentPoly {
    reg: Arc<VarRegistry>,
    terms: BTreeMap<Exponents, BigInt>,
}

impl PartialEq for LaurentPoly {
    fn eq(&self, other: &Self) -> bool {
        same_registry(&self.reg, &other.reg) && self.terms == other.terms
    }
}
impl Eq for LaurentPoly {}

impl std::hash::Hash for LaurentPoly {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.terms.hash(state);
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LaurentPoly({})", self)
    }
}

impl LaurentPoly {
    pub fn zero(reg: &Arc<VarRegistry>) -> Self {
        LaurentPoly { reg: reg.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(reg: &Arc<VarRegistry>, c: impl Into<BigInt>) -> Self {
        Self::monomial(reg, vec![0; reg.len()], c)
    }

    pub fn one(reg: &Arc<VarRegistry>) -> Self {
        Self::constant(reg, 1)
    }

    pub fn monomial(reg: &Arc<VarRegistry>, exps: Exponents, c: impl Into<BigInt>) -> Self {
        assert_eq!(exps.len(), reg.len(), "exponent vector length must match the registry");
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        LaurentPoly { reg: reg.clone(), terms }
    }

    /// The generator at registry index `i`.
    pub fn var(reg: &Arc<VarRegistry>, i: usize) -> Self {
        let mut e = vec![0; reg.len()];
        e[i] = 1;
        Self::monomial(reg, e, 1)
    }

    pub fn var_named(reg: &Arc<VarRegistry>, name: &str) -> Result<Self, LaurentError> {
        let i = reg.index_of(name).ok_or_else(|| LaurentError::UnknownVariable(name.to_string()))?;
        Ok(Self::var(reg, i))
    }

    /// Builds a polynomial from raw terms, summing duplicates and dropping zeros.
    pub fn from_terms<I>(reg: &Arc<VarRegistry>, terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponents, BigInt)>,
    {
        let mut out = BTreeMap::new();
        for (e, c) in terms {
            assert_eq!(e.len(), reg.len(), "exponent vector length must match the registry");
            accumulate(&mut out, e, c);
        }
        LaurentPoly { reg: reg.clone(), terms: out }
    }

    pub fn registry(&self) -> &Arc<VarRegistry> {
        &self.reg
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    /// True if every coefficient is strictly positive (vacuously true for zero).
    pub fn has_positive_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.is_positive())
    }

    /// Indices of the variables that occur with a nonzero exponent.
    pub fn support(&self) -> Vec<usize> {
        let mut used = vec![false; self.reg.len()];
        for e in self.terms.keys() {
            for (i, &x) in e.iter().enumerate() {
                if x != 0 {
                    used[i] = true;
                }
            }
        }
        used.iter().enumerate().filter(|(_, &u)| u).map(|(i, _)| i).collect()
    }

    fn check(&self, other: &Self) -> Result<(), LaurentError> {
        if same_registry(&self.reg, &other.reg) {
            Ok(())
        } else {
            Err(LaurentError::RegistryMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, LaurentError> {
        self.check(other)?;
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            accumulate(&mut terms, e.clone(), c.clone());
        }
        Ok(LaurentPoly { reg: self.reg.clone(), terms })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, LaurentError> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, LaurentError> {
        self.check(other)?;
        let mut terms = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Exponents = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                accumulate(&mut terms, e, c1 * c2);
            }
        }
        Ok(LaurentPoly { reg: self.reg.clone(), terms })
    }

    pub fn neg(&self) -> Self {
        LaurentPoly {
            reg: self.reg.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(&self.reg);
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Multiplies by the monomial `x^shift`.
    pub fn shift(&self, shift: &[i32]) -> Self {
        LaurentPoly {
            reg: self.reg.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.iter().zip(shift).map(|(a, b)| a + b).collect(), c.clone()))
                .collect(),
        }
    }

    /// Componentwise minimum exponent over all terms (zero vector for the zero polynomial).
    pub fn min_exponents(&self) -> Exponents {
        let n = self.reg.len();
        let mut it = self.terms.keys();
        let Some(first) = it.next() else { return vec![0; n] };
        let mut m = first.clone();
        for e in it {
            for i in 0..n {
                m[i] = m[i].min(e[i]);
            }
        }
        m
    }

    fn max_exponents(&self) -> Exponents {
        let n = self.reg.len();
        let mut it = self.terms.keys();
        let Some(first) = it.next() else { return vec![0; n] };
        let mut m = first.clone();
        for e in it {
            for i in 0..n {
                m[i] = m[i].max(e[i]);
            }
        }
        m
    }

    fn non_exact(&self, q: &Self) -> LaurentError {
        LaurentError::NonExactDivision { numerator: self.to_string(), denominator: q.to_string() }
    }

    /// Returns `r` with `r * q == self`, or `NonExactDivision` if no Laurent polynomial `r` exists.
    pub fn exact_div(&self, q: &Self) -> Result<Self, LaurentError> {
        self.check(q)?;
        if q.is_zero() {
            return Err(LaurentError::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(Self::zero(&self.reg));
        }
        if q.is_monomial() {
            let (qe, qc) = q.terms.iter().next().unwrap();
            let mut terms = BTreeMap::new();
            for (e, c) in &self.terms {
                let (quo, rem) = c.div_rem(qc);
                if !rem.is_zero() {
                    return Err(self.non_exact(q));
                }
                terms.insert(e.iter().zip(qe).map(|(a, b)| a - b).collect(), quo);
            }
            return Ok(LaurentPoly { reg: self.reg.clone(), terms });
        }
        // Strip content monomials; the quotient of the shifted polynomials is then a polynomial.
        let mp = self.min_exponents();
        let mq = q.min_exponents();
        let p0 = self.shift(&mp.iter().map(|x| -x).collect::<Vec<_>>());
        let q0 = q.shift(&mq.iter().map(|x| -x).collect::<Vec<_>>());
        let bound: Vec<i32> = p0
            .max_exponents()
            .iter()
            .zip(q0.max_exponents())
            .map(|(a, b)| a - b)
            .collect();
        if bound.iter().any(|&b| b < 0) {
            return Err(self.non_exact(q));
        }
        let (lq_e, lq_c) = q0.terms.iter().next_back().map(|(e, c)| (e.clone(), c.clone())).unwrap();
        let mut rem = p0.terms;
        let mut quot = BTreeMap::new();
        while let Some((le, lc)) = rem.iter().next_back().map(|(e, c)| (e.clone(), c.clone())) {
            let me: Exponents = le.iter().zip(&lq_e).map(|(a, b)| a - b).collect();
            if me.iter().zip(&bound).any(|(&m, &b)| m < 0 || m > b) {
                return Err(self.non_exact(q));
            }
            let (mc, r) = lc.div_rem(&lq_c);
            if !r.is_zero() {
                return Err(self.non_exact(q));
            }
            for (e, c) in &q0.terms {
                let k: Exponents = e.iter().zip(&me).map(|(a, b)| a + b).collect();
                accumulate(&mut rem, k, -(c * &mc));
            }
            quot.insert(me, mc);
        }
        let r = LaurentPoly { reg: self.reg.clone(), terms: quot };
        let shift: Vec<i32> = mp.iter().zip(&mq).map(|(a, b)| a - b).collect();
        Ok(r.shift(&shift))
    }

    /// Evaluates at `values` (indexed like the registry) in double precision.
    pub fn eval_f64(&self, values: &[f64]) -> Result<f64, LaurentError> {
        let mut total = 0.0;
        for (e, c) in &self.terms {
            let mut t = c.to_f64().unwrap_or(f64::NAN);
            for (i, &x) in e.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                if x < 0 && values[i] == 0.0 {
                    return Err(LaurentError::ZeroValue(self.reg.name(i).to_string()));
                }
                t *= values[i].powi(x);
            }
            total += t;
        }
        Ok(total)
    }

    /// Evaluates with a name-keyed assignment; only variables that occur must be present.
    pub fn eval_named(&self, assignment: &BTreeMap<String, f64>) -> Result<f64, LaurentError> {
        let mut values = vec![f64::NAN; self.reg.len()];
        for i in self.support() {
            let name = self.reg.name(i);
            values[i] = *assignment.get(name).ok_or_else(|| LaurentError::MissingVariable(name.to_string()))?;
        }
        self.eval_f64(&values)
    }

    /// Exact evaluation over the rationals.
    pub fn eval_rational(&self, values: &[BigRational]) -> Result<BigRational, LaurentError> {
        let mut total = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = BigRational::from_integer(c.clone());
            for (i, &x) in e.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                if x < 0 && values[i].is_zero() {
                    return Err(LaurentError::ZeroValue(self.reg.name(i).to_string()));
                }
                t *= num_traits::pow::Pow::pow(&values[i], x);
            }
            total += t;
        }
        Ok(total)
    }

    /// Ring map sending generator `i` to the generator `map(i)` of `target`.
    pub fn map_vars(&self, target: &Arc<VarRegistry>, map: impl Fn(usize) -> usize) -> Self {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut k = vec![0; target.len()];
            for (i, &x) in e.iter().enumerate() {
                if x != 0 {
                    k[map(i)] += x;
                }
            }
            accumulate(&mut terms, k, c.clone());
        }
        LaurentPoly { reg: target.clone(), terms }
    }

    /// Canonical text form: `±c * v^e * ...` terms in ascending lexicographic exponent order.
    pub fn serialize(&self) -> String {
        self.to_string()
    }

    pub fn parse(reg: &Arc<VarRegistry>, text: &str) -> Result<Self, LaurentError> {
        let mut p = Parser { reg, src: text.as_bytes(), pos: 0 };
        let out = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(out)
    }
}

fn accumulate(terms: &mut BTreeMap<Exponents, BigInt>, e: Exponents, c: BigInt) {
    if c.is_zero() {
        return;
    }
    use std::collections::btree_map::Entry;
    match terms.entry(e) {
        Entry::Vacant(v) => {
            v.insert(c);
        }
        Entry::Occupied(mut o) => {
            *o.get_mut() += c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            if c.is_negative() {
                write!(f, "-{}", c.abs())?;
            } else {
                write!(f, "+{}", c)?;
            }
            for (i, &x) in e.iter().enumerate() {
                match x {
                    0 => {}
                    1 => write!(f, " * {}", self.reg.name(i))?,
                    _ => write!(f, " * {}^{}", self.reg.name(i), x)?,
                }
            }
        }
        Ok(())
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $inner:ident) => {
        impl std::ops::$tr<&LaurentPoly> for &LaurentPoly {
            type Output = LaurentPoly;
            /// Panics on registry mismatch; use the `try_` methods to get an error instead.
            fn $m(self, rhs: &LaurentPoly) -> LaurentPoly {
                self.$inner(rhs).expect("registry mismatch")
            }
        }
    };
}
binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl std::ops::Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly::neg(self)
    }
}

struct Parser<'a> {
    reg: &'a Arc<VarRegistry>,
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> LaurentError {
        LaurentError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<LaurentPoly, LaurentError> {
        let mut acc = LaurentPoly::zero(self.reg);
        let mut first = true;
        loop {
            let sign = match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    1
                }
                Some(b'-') => {
                    self.pos += 1;
                    -1
                }
                _ if first => 1,
                _ => break,
            };
            first = false;
            let t = self.term()?;
            acc = if sign > 0 { &acc + &t } else { &acc - &t };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<LaurentPoly, LaurentError> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let f = self.power()?;
                    acc = &acc * &f;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let f = self.power()?;
                    acc = acc.exact_div(&f)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<LaurentPoly, LaurentError> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let neg = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let n = self.integer()?.to_u32().ok_or_else(|| self.err("exponent out of range"))?;
        let p = base.pow(n);
        if neg {
            LaurentPoly::one(self.reg).exact_div(&p)
        } else {
            Ok(p)
        }
    }

    fn integer(&mut self) -> Result<BigInt, LaurentError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse().unwrap())
    }

    fn atom(&mut self) -> Result<LaurentPoly, LaurentError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(self.power()?.neg())
            }
            Some(c) if c.is_ascii_digit() => Ok(LaurentPoly::constant(self.reg, self.integer()?)),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let c = self.src[self.pos];
                    if c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' || c == b'.' {
                        self.pos += 1;
                    } else if c == b'{' {
                        while self.pos < self.src.len() && self.src[self.pos] != b'}' {
                            self.pos += 1;
                        }
                        if self.pos == self.src.len() {
                            return Err(self.err("unterminated `{`"));
                        }
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                LaurentPoly::var_named(self.reg, name)
            }
            _ => Err(self.err("expected a number, variable or `(`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> Arc<VarRegistry> {
        VarRegistry::new(["c_a", "d", "y", "z"]).unwrap()
    }

    fn p(r: &Arc<VarRegistry>, s: &str) -> LaurentPoly {
        LaurentPoly::parse(r, s).unwrap()
    }

    #[test]
    fn additive_inverse() {
        let r = reg();
        assert!((&p(&r, "y") + &p(&r, "-y")).is_zero());
        assert_eq!(&p(&r, "y+z") + &p(&r, "y-z"), p(&r, "2*y"));
    }

    #[test]
    fn products() {
        let r = reg();
        assert_eq!(&p(&r, "y") * &p(&r, "y^-1"), LaurentPoly::one(&r));
        assert_eq!(&p(&r, "y+z") * &p(&r, "y+z"), p(&r, "y^2+2*y*z+z^2"));
        assert_eq!(&p(&r, "d") * &p(&r, "c_a*d^-1"), p(&r, "c_a"));
    }

    #[test]
    fn divisions() {
        let r = reg();
        let num = p(&r, "z^2+2*z*y+y^2+d^2*z*y");
        let q = num.exact_div(&p(&r, "c_a")).unwrap();
        assert_eq!(q, &num * &p(&r, "c_a^-1"));
        assert_eq!(p(&r, "y^2+2*y*z+z^2").exact_div(&p(&r, "y+z")).unwrap(), p(&r, "y+z"));
        assert!(matches!(
            p(&r, "y^2+z").exact_div(&p(&r, "y+z")),
            Err(LaurentError::NonExactDivision { .. })
        ));
        assert!(matches!(p(&r, "y").exact_div(&p(&r, "2")), Err(LaurentError::NonExactDivision { .. })));
        assert_eq!(p(&r, "y").exact_div(&LaurentPoly::zero(&r)), Err(LaurentError::DivisionByZero));
    }

    #[test]
    fn evaluation() {
        let r = reg();
        assert_eq!(p(&r, "y*z^-1").eval_f64(&[0.0, 0.0, 6.0, 2.0]).unwrap(), 3.0);
        assert_eq!(p(&r, "(y+z)/d").eval_f64(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(p(&r, "y^2+2*y*z+z^2+d^2*y*z").eval_f64(&[1.0; 4]).unwrap(), 5.0);
        let mut a = BTreeMap::new();
        a.insert("y".to_string(), 1.0);
        assert!(matches!(p(&r, "y+z").eval_named(&a), Err(LaurentError::MissingVariable(_))));
        assert!(matches!(p(&r, "y^-1").eval_f64(&[1.0, 1.0, 0.0, 1.0]), Err(LaurentError::ZeroValue(_))));
    }

    #[test]
    fn serialization_format() {
        let r = reg();
        assert_eq!(p(&r, "y^2 + 2*y*z*c_a^-1 - 3").to_string(), "+2 * c_a^-1 * y * z -3 +1 * y^2");
        assert_eq!(LaurentPoly::zero(&r).to_string(), "0");
    }

    #[test]
    fn registry_mismatch() {
        let r1 = reg();
        let r2 = VarRegistry::new(["a", "b"]).unwrap();
        let a = LaurentPoly::var(&r1, 0);
        let b = LaurentPoly::var(&r2, 0);
        assert_eq!(a.try_add(&b), Err(LaurentError::RegistryMismatch));
        assert_eq!(a.try_mul(&b), Err(LaurentError::RegistryMismatch));
        assert!(VarRegistry::new(["a", "a"]).is_err());
    }
}
