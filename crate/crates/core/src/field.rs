//! Table-driven finite fields `F_{p^e}` with odd `p`.
//!
//! Elements are stored as their index in the base-`p` expansion of the
//! coefficient vector in `F_p[X]/(f)`, where `f` is the first primitive
//! polynomial of degree `e` in lexicographic order. Addition goes through a
//! precomputed table, multiplication through discrete logarithms.
//!
//! When the order is a square `q^2`, the field carries the involution
//! `x -> x^q` whose fixed field is `F_q`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported field order. Keeps the addition table below a few MB.
pub const MAX_ORDER: u32 = 1024;

/// A field element, as an index into the tables of its [`Field`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Fe(pub u16);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub struct Field {
    p: u32,
    e: u32,
    order: u32,
    modulus: Vec<u32>,
    add: Vec<u16>,
    neg: Vec<u16>,
    exp: Vec<u16>,
    log: Vec<u16>,
    /// `x -> x^q` table when `order == q^2`.
    frob: Option<Vec<u16>>,
    sub_order: Option<u32>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} (mod {:?})", self.p, self.e, self.modulus)
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl Field {
    pub fn new(p: u32, e: u32) -> Result<Field> {
        if !is_prime(p) {
            return Err(Error::Config(format!("characteristic {p} is not prime")));
        }
        if p == 2 {
            return Err(Error::Config("even characteristic is not supported".into()));
        }
        if e == 0 {
            return Err(Error::Config("extension degree must be at least 1".into()));
        }
        let order = (p as u64).checked_pow(e).filter(|&o| o <= MAX_ORDER as u64);
        let Some(order) = order else {
            return Err(Error::Config(format!(
                "field order {p}^{e} exceeds the supported maximum {MAX_ORDER}"
            )));
        };
        let order = order as u32;

        let add = build_add_table(p, e, order);
        let mut neg = vec![0u16; order as usize];
        for a in 0..order {
            neg[a as usize] = digits_map(p, e, a, |x| (p - x) % p) as u16;
        }

        let modulus = find_primitive(p, e, order);
        let (exp, log) = build_log_tables(p, e, order, &modulus);

        let mut field = Field {
            p,
            e,
            order,
            modulus,
            add,
            neg,
            exp,
            log,
            frob: None,
            sub_order: None,
        };
        if e.is_multiple_of(2) {
            let q = p.pow(e / 2);
            let table: Vec<u16> = (0..order).map(|a| field.pow(Fe(a as u16), q as u64).0).collect();
            field.frob = Some(table);
            field.sub_order = Some(q);
        }
        Ok(field)
    }

    /// `F_{q^2}` for `q = p^e`.
    pub fn quadratic_over(p: u32, e: u32) -> Result<Field> {
        Field::new(p, 2 * e)
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.e
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// `q` when this field is `F_{q^2}`.
    pub fn sub_order(&self) -> Option<u32> {
        self.sub_order
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> + '_ {
        (0..self.order).map(|a| Fe(a as u16))
    }

    /// Image of an integer under `Z -> F_p -> F`.
    pub fn from_int(&self, n: i64) -> Fe {
        Fe(n.rem_euclid(self.p as i64) as u16)
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        Fe(self.add[a.0 as usize * self.order as usize + b.0 as usize])
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        Fe(self.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a.is_zero() || b.is_zero() {
            return Fe::ZERO;
        }
        let m = self.order as usize - 1;
        let s = self.log[a.0 as usize] as usize + self.log[b.0 as usize] as usize;
        Fe(self.exp[if s >= m { s - m } else { s }])
    }

    /// `a + b*c`
    #[inline]
    pub fn mul_add(&self, a: Fe, b: Fe, c: Fe) -> Fe {
        self.add(a, self.mul(b, c))
    }

    pub fn inv(&self, a: Fe) -> Option<Fe> {
        if a.is_zero() {
            return None;
        }
        let m = self.order as usize - 1;
        let l = self.log[a.0 as usize] as usize;
        Some(Fe(self.exp[(m - l) % m]))
    }

    pub fn div(&self, a: Fe, b: Fe) -> Option<Fe> {
        self.inv(b).map(|bi| self.mul(a, bi))
    }

    pub fn pow(&self, a: Fe, n: u64) -> Fe {
        if n == 0 {
            return Fe::ONE;
        }
        if a.is_zero() {
            return Fe::ZERO;
        }
        let m = (self.order - 1) as u64;
        let l = self.log[a.0 as usize] as u64;
        Fe(self.exp[((l * (n % m)) % m) as usize])
    }

    /// Integer multiple `n * a`.
    pub fn scale_int(&self, a: Fe, n: i64) -> Fe {
        self.mul(a, self.from_int(n))
    }

    /// The involution `x -> x^q` of `F_{q^2}`; `None` for non-square orders.
    #[inline]
    pub fn conj(&self, a: Fe) -> Fe {
        match &self.frob {
            Some(t) => Fe(t[a.0 as usize]),
            None => a,
        }
    }

    pub fn has_involution(&self) -> bool {
        self.frob.is_some()
    }

    /// True when `a` lies in the fixed field of the involution.
    pub fn is_real(&self, a: Fe) -> bool {
        self.conj(a) == a
    }

    /// The first nonzero `eps` (in table order) with `eps^q = -eps`.
    pub fn epsilon(&self) -> Option<Fe> {
        self.frob.as_ref()?;
        self.elements()
            .find(|&x| !x.is_zero() && self.conj(x) == self.neg(x))
    }

    /// Primitive element used for the log tables.
    pub fn generator(&self) -> Fe {
        Fe(self.exp[1])
    }
}

fn digits_map(p: u32, e: u32, a: u32, f: impl Fn(u32) -> u32) -> u32 {
    let mut out = 0;
    let mut place = 1;
    let mut a = a;
    for _ in 0..e {
        out += f(a % p) * place;
        a /= p;
        place *= p;
    }
    out
}

fn build_add_table(p: u32, e: u32, order: u32) -> Vec<u16> {
    let n = order as usize;
    let mut t = vec![0u16; n * n];
    for a in 0..order {
        for b in 0..order {
            let mut out = 0;
            let mut place = 1;
            let (mut x, mut y) = (a, b);
            for _ in 0..e {
                out += ((x % p + y % p) % p) * place;
                x /= p;
                y /= p;
                place *= p;
            }
            t[a as usize * n + b as usize] = out as u16;
        }
    }
    t
}

/// Multiply the polynomial with index `a` by `X` modulo the monic `modulus`
/// (given by its low coefficients `m_0..m_{e-1}`).
fn times_x(p: u32, e: u32, a: u32, modulus: &[u32]) -> u32 {
    let mut digits: Vec<u32> = (0..e).scan(a, |s, _| {
        let d = *s % p;
        *s /= p;
        Some(d)
    })
    .collect();
    let top = digits[e as usize - 1];
    for i in (1..e as usize).rev() {
        digits[i] = digits[i - 1];
    }
    digits[0] = 0;
    // X^e = -sum m_i X^i
    for i in 0..e as usize {
        digits[i] = (digits[i] + (p - modulus[i]) * top) % p;
    }
    digits.iter().rev().fold(0, |acc, &d| acc * p + d)
}

fn find_primitive(p: u32, e: u32, order: u32) -> Vec<u32> {
    if e == 1 {
        // X - g for a primitive root g; index of X is then g.
        for g in 2..p.max(3) {
            if (1..p - 1).all(|k| pow_mod(g, k, p) != 1) {
                return vec![(p - g) % p];
            }
        }
        return vec![p - 1]; // p = 3: g = 2
    }
    let count = order;
    for code in 0..count {
        let modulus: Vec<u32> = (0..e).scan(code, |s, _| {
            let d = *s % p;
            *s /= p;
            Some(d)
        })
        .collect();
        if modulus[0] == 0 {
            continue;
        }
        let x = p; // index of X
        let mut cur = x;
        let mut ord = 1u32;
        while cur != 1 && ord < order {
            cur = times_x(p, e, cur, &modulus);
            ord += 1;
        }
        if cur == 1 && ord == order - 1 {
            return modulus;
        }
    }
    unreachable!("a primitive polynomial always exists")
}

fn pow_mod(b: u32, k: u32, m: u32) -> u32 {
    let mut r = 1u64;
    for _ in 0..k {
        r = r * b as u64 % m as u64;
    }
    r as u32
}

fn build_log_tables(p: u32, e: u32, order: u32, modulus: &[u32]) -> (Vec<u16>, Vec<u16>) {
    let m = order as usize - 1;
    let mut exp = vec![0u16; m];
    let mut log = vec![0u16; order as usize];
    let mut cur = 1u32;
    for (k, slot) in exp.iter_mut().enumerate() {
        *slot = cur as u16;
        log[cur as usize] = k as u16;
        cur = if e == 1 {
            // multiply by the primitive root g, where modulus = [-g]
            let g = (p - modulus[0]) % p;
            cur * g % p
        } else {
            times_x(p, e, cur, modulus)
        };
    }
    (exp, log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(Field::new(2, 1).is_err());
        assert!(Field::new(9, 1).is_err());
        assert!(Field::new(3, 0).is_err());
        assert!(Field::new(3, 7).is_err());
    }

    #[test]
    fn multiplicative_group_is_cyclic() {
        for (p, e) in [(3, 1), (5, 1), (7, 1), (3, 2), (5, 2), (3, 4), (31, 2)] {
            let f = Field::new(p, e).unwrap();
            let g = f.generator();
            let m = f.order() as u64 - 1;
            assert_eq!(f.pow(g, m), Fe::ONE);
            for k in 1..m {
                assert_ne!(f.pow(g, k), Fe::ONE, "F_{p}^{e}: generator order divides {k}");
            }
        }
    }

    #[test]
    fn epsilon_in_f9_squares_to_minus_one() {
        let f = Field::new(3, 2).unwrap();
        let eps = f.epsilon().unwrap();
        // eps^q = -eps with q = 3, so eps^2 = -1
        assert_eq!(f.mul(eps, eps), f.neg(Fe::ONE));
        assert_eq!(f.conj(eps), f.neg(eps));
        assert_eq!(f.pow(eps, 3), f.neg(eps));
    }

    #[test]
    fn involution_fixes_exactly_the_subfield() {
        for (p, e) in [(3, 2), (5, 2), (3, 4)] {
            let f = Field::new(p, e).unwrap();
            let q = f.sub_order().unwrap();
            let fixed = f.elements().filter(|&x| f.is_real(x)).count() as u32;
            assert_eq!(fixed, q);
            for x in f.elements() {
                assert_eq!(f.conj(f.conj(x)), x);
            }
        }
    }

    #[test]
    fn prime_field_is_integers_mod_p() {
        let f = Field::new(7, 1).unwrap();
        for a in 0..7i64 {
            for b in 0..7i64 {
                assert_eq!(f.add(f.from_int(a), f.from_int(b)), f.from_int(a + b));
                assert_eq!(f.mul(f.from_int(a), f.from_int(b)), f.from_int(a * b));
            }
        }
    }
}
