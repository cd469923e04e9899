//! Tseitin circuit construction over CNF.
//!
//! A [`Bit`] is a constant or a solver literal; gates fold constants so that
//! constant subcircuits never reach the clause database. Vectors of bits are
//! two's-complement integers, least significant bit first, with wrapping
//! arithmetic — mirroring `intsem`, which the circuits are tested against.

use satcore::{Lit, Var};

/// One wire of a circuit.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Bit {
    Const(bool),
    Wire(Lit),
}

impl Bit {
    pub const TRUE: Bit = Bit::Const(true);
    pub const FALSE: Bit = Bit::Const(false);

    pub fn negate(self) -> Bit {
        match self {
            Bit::Const(b) => Bit::Const(!b),
            Bit::Wire(l) => Bit::Wire(!l),
        }
    }

    /// Value under a model (constants evaluate to themselves).
    pub fn eval(self, model: &satcore::Model) -> bool {
        match self {
            Bit::Const(b) => b,
            Bit::Wire(l) => model.value(l),
        }
    }
}

/// Signed value of a little-endian bit vector under a model.
pub fn decode_signed(bits: &[Bit], model: &satcore::Model) -> i64 {
    let mut v: i64 = 0;
    for (i, &b) in bits.iter().enumerate() {
        if b.eval(model) {
            v |= 1 << i;
        }
    }
    crate::intsem::truncate(v, bits.len() as u32)
}

/// Unsigned value of a little-endian bit vector under a model.
pub fn decode_unsigned(bits: &[Bit], model: &satcore::Model) -> u64 {
    let mut v: u64 = 0;
    for (i, &b) in bits.iter().enumerate() {
        if b.eval(model) {
            v |= 1 << i;
        }
    }
    v
}

/// Allocates variables and accumulates clauses for one encoding phase.
pub struct Blaster {
    next_var: u32,
    pub clauses: Vec<Vec<Lit>>,
}

impl Blaster {
    pub fn new(first_free_var: u32) -> Blaster {
        Blaster {
            next_var: first_free_var,
            clauses: Vec::new(),
        }
    }

    /// First variable index not yet allocated.
    pub fn num_vars(&self) -> u32 {
        self.next_var
    }

    /// Hands off the accumulated clauses, keeping the variable counter.
    pub fn take_clauses(&mut self) -> Vec<Vec<Lit>> {
        std::mem::take(&mut self.clauses)
    }

    pub fn fresh(&mut self) -> Bit {
        let l = Lit::positive(Var::from_index(self.next_var));
        self.next_var += 1;
        Bit::Wire(l)
    }

    pub fn fresh_vec(&mut self, width: u32) -> Vec<Bit> {
        (0..width).map(|_| self.fresh()).collect()
    }

    pub fn constant(value: i64, width: u32) -> Vec<Bit> {
        (0..width)
            .map(|i| Bit::Const(value >> i & 1 == 1))
            .collect()
    }

    /// Emits a disjunction of bits as a clause. True bits satisfy it (no
    /// clause), false bits drop out; an all-false clause is emitted empty,
    /// making the formula unsatisfiable.
    pub fn clause(&mut self, bits: &[Bit]) {
        let mut lits = Vec::with_capacity(bits.len());
        for &b in bits {
            match b {
                Bit::Const(true) => return,
                Bit::Const(false) => {}
                Bit::Wire(l) => lits.push(l),
            }
        }
        self.clauses.push(lits);
    }

    /// Forces a bit to be true.
    pub fn assert_true(&mut self, bit: Bit) {
        self.clause(&[bit]);
    }

    pub fn and(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(false), _) | (_, Bit::Const(false)) => Bit::FALSE,
            (Bit::Const(true), x) | (x, Bit::Const(true)) => x,
            (Bit::Wire(x), Bit::Wire(y)) if x == y => a,
            (Bit::Wire(x), Bit::Wire(y)) if x == !y => Bit::FALSE,
            (Bit::Wire(x), Bit::Wire(y)) => {
                let Bit::Wire(o) = self.fresh() else {
                    unreachable!()
                };
                self.clauses.push(vec![!o, x]);
                self.clauses.push(vec![!o, y]);
                self.clauses.push(vec![!x, !y, o]);
                Bit::Wire(o)
            }
        }
    }

    pub fn or(&mut self, a: Bit, b: Bit) -> Bit {
        self.and(a.negate(), b.negate()).negate()
    }

    /// Conjunction of many bits.
    pub fn and_all(&mut self, bits: &[Bit]) -> Bit {
        let mut acc = Bit::TRUE;
        for &b in bits {
            acc = self.and(acc, b);
        }
        acc
    }

    /// Disjunction of many bits.
    pub fn or_all(&mut self, bits: &[Bit]) -> Bit {
        let mut acc = Bit::FALSE;
        for &b in bits {
            acc = self.or(acc, b);
        }
        acc
    }

    pub fn xor(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(false), x) | (x, Bit::Const(false)) => x,
            (Bit::Const(true), x) | (x, Bit::Const(true)) => x.negate(),
            (Bit::Wire(x), Bit::Wire(y)) if x == y => Bit::FALSE,
            (Bit::Wire(x), Bit::Wire(y)) if x == !y => Bit::TRUE,
            (Bit::Wire(x), Bit::Wire(y)) => {
                let Bit::Wire(o) = self.fresh() else {
                    unreachable!()
                };
                self.clauses.push(vec![!x, !y, !o]);
                self.clauses.push(vec![x, y, !o]);
                self.clauses.push(vec![x, !y, o]);
                self.clauses.push(vec![!x, y, o]);
                Bit::Wire(o)
            }
        }
    }

    pub fn iff(&mut self, a: Bit, b: Bit) -> Bit {
        self.xor(a, b).negate()
    }

    pub fn ite(&mut self, c: Bit, t: Bit, e: Bit) -> Bit {
        match c {
            Bit::Const(true) => return t,
            Bit::Const(false) => return e,
            Bit::Wire(_) => {}
        }
        if t == e {
            return t;
        }
        if t == Bit::TRUE && e == Bit::FALSE {
            return c;
        }
        if t == Bit::FALSE && e == Bit::TRUE {
            return c.negate();
        }
        let Bit::Wire(cl) = c else { unreachable!() };
        let Bit::Wire(o) = self.fresh() else {
            unreachable!()
        };
        // c ⇒ (o ↔ t), ¬c ⇒ (o ↔ e), plus two redundant clauses that let
        // unit propagation see o when t and e agree.
        match t {
            Bit::Const(b) => self
                .clauses
                .push(if b { vec![!cl, o] } else { vec![!cl, !o] }),
            Bit::Wire(tl) => {
                self.clauses.push(vec![!cl, !tl, o]);
                self.clauses.push(vec![!cl, tl, !o]);
            }
        }
        match e {
            Bit::Const(b) => self
                .clauses
                .push(if b { vec![cl, o] } else { vec![cl, !o] }),
            Bit::Wire(el) => {
                self.clauses.push(vec![cl, !el, o]);
                self.clauses.push(vec![cl, el, !o]);
            }
        }
        if let (Bit::Wire(tl), Bit::Wire(el)) = (t, e) {
            self.clauses.push(vec![!tl, !el, o]);
            self.clauses.push(vec![tl, el, !o]);
        }
        Bit::Wire(o)
    }

    /// Per-bit multiplexer.
    pub fn ite_vec(&mut self, c: Bit, t: &[Bit], e: &[Bit]) -> Vec<Bit> {
        debug_assert_eq!(t.len(), e.len());
        t.iter()
            .zip(e)
            .map(|(&ti, &ei)| self.ite(c, ti, ei))
            .collect()
    }

    fn full_add(&mut self, a: Bit, b: Bit, c: Bit) -> (Bit, Bit) {
        let ab = self.xor(a, b);
        let sum = self.xor(ab, c);
        let t1 = self.and(a, b);
        let t2 = self.and(ab, c);
        let carry = self.or(t1, t2);
        (sum, carry)
    }

    fn add_with_carry(&mut self, a: &[Bit], b: &[Bit], mut carry: Bit) -> Vec<Bit> {
        debug_assert_eq!(a.len(), b.len());
        let mut out = Vec::with_capacity(a.len());
        for (&ai, &bi) in a.iter().zip(b) {
            let (sum, c) = self.full_add(ai, bi, carry);
            out.push(sum);
            carry = c;
        }
        out
    }

    /// Wrapping addition.
    pub fn add(&mut self, a: &[Bit], b: &[Bit]) -> Vec<Bit> {
        self.add_with_carry(a, b, Bit::FALSE)
    }

    /// Wrapping subtraction `a - b`.
    pub fn sub(&mut self, a: &[Bit], b: &[Bit]) -> Vec<Bit> {
        let nb: Vec<Bit> = b.iter().map(|&x| x.negate()).collect();
        self.add_with_carry(a, &nb, Bit::TRUE)
    }

    /// Wrapping negation.
    pub fn neg(&mut self, a: &[Bit]) -> Vec<Bit> {
        let zero = Blaster::constant(0, a.len() as u32);
        self.sub(&zero, a)
    }

    /// Wrapping shift-and-add multiplication.
    pub fn mul(&mut self, a: &[Bit], b: &[Bit]) -> Vec<Bit> {
        let w = a.len();
        let mut acc = Blaster::constant(0, w as u32);
        for i in 0..w {
            if b[i] == Bit::FALSE {
                continue;
            }
            // (a << i) truncated to width, masked by b[i].
            let mut partial = vec![Bit::FALSE; i];
            for &ai in &a[..w - i] {
                let masked = self.and(ai, b[i]);
                partial.push(masked);
            }
            acc = self.add(&acc, &partial);
        }
        acc
    }

    /// Unsigned `a < b`.
    pub fn lt_unsigned(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        debug_assert_eq!(a.len(), b.len());
        let mut lt = Bit::FALSE;
        for (&ai, &bi) in a.iter().zip(b) {
            let differ = self.xor(ai, bi);
            lt = self.ite(differ, bi, lt);
        }
        lt
    }

    /// Signed `a < b` (flip the sign bits and compare unsigned).
    pub fn lt_signed(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        let mut af = a.to_vec();
        let mut bf = b.to_vec();
        let msb = a.len() - 1;
        af[msb] = af[msb].negate();
        bf[msb] = bf[msb].negate();
        self.lt_unsigned(&af, &bf)
    }

    /// Signed `a <= b`.
    pub fn le_signed(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        self.lt_signed(b, a).negate()
    }

    /// Bitwise equality as one bit.
    pub fn eq_vec(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        debug_assert_eq!(a.len(), b.len());
        let mut acc = Bit::TRUE;
        for (&ai, &bi) in a.iter().zip(b) {
            let same = self.iff(ai, bi);
            acc = self.and(acc, same);
        }
        acc
    }

    /// Nonzero test.
    pub fn truthy(&mut self, a: &[Bit]) -> Bit {
        let bits: Vec<Bit> = a.to_vec();
        self.or_all(&bits)
    }

    /// Widens a single bit to a 0/1 integer.
    pub fn widen(bit: Bit, width: u32) -> Vec<Bit> {
        let mut v = vec![Bit::FALSE; width as usize];
        v[0] = bit;
        v
    }
}
