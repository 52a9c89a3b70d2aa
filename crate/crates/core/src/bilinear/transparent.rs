use rand::RngCore;
use sha2::{Digest, Sha256};

use super::{is_prime_u64, BilinearError, PairingSuite, Params, HASH_DOMAIN_TAG, SECURITY_BITS};
use crate::counters::{record, Op};

/// Explicit opt-in for the transparent backend.
///
/// The transparent group leaks every discrete logarithm and its order is far
/// below the configured security level. It exists only to check algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InsecureToyGroup {
    pub modulus: u64,
}

/// A field element of the toy group, reduced mod `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ToyScalar(pub u64);

/// `g^e` represented by its exponent `e`. G1 and G2 coincide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ToyElement(u64);

/// `e(g, g)^e` represented by its exponent `e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ToyGt(u64);

impl ToyElement {
    /// Discrete log relative to the generator.
    pub fn exponent(self) -> u64 {
        self.0
    }
}

impl ToyGt {
    pub fn exponent(self) -> u64 {
        self.0
    }
}

/// Symmetric known-exponent group of prime order `q < 2^62`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransparentSuite {
    q: u64,
    encoded_len: usize,
    params: Params,
}

/// Reduces a SHA-256 digest, read as a big-endian integer, modulo `q`.
pub fn exponent_from_digest(digest: &[u8; 32], q: u64) -> u64 {
    digest
        .iter()
        .fold(0u128, |acc, &b| (acc * 256 + b as u128) % q as u128) as u64
}

impl TransparentSuite {
    pub fn setup(security_bits: u32, toy: InsecureToyGroup) -> Result<Self, BilinearError> {
        if security_bits != SECURITY_BITS {
            return Err(BilinearError::UnsupportedSecurityLevel(security_bits));
        }
        let q = toy.modulus;
        if q >= 1 << 62 || !is_prime_u64(q) {
            return Err(BilinearError::InvalidToyModulus(q));
        }
        let bits = 64 - (q - 1).leading_zeros() as usize;
        let encoded_len = bits.div_ceil(8).max(1);
        let order: Vec<u8> = q.to_be_bytes().iter().copied().skip_while(|&b| b == 0).collect();
        let mut suite = TransparentSuite {
            q,
            encoded_len,
            params: Params {
                group_id: format!("transparent/q={q}"),
                order,
                generator: Vec::new(),
                gt_id: format!("transparent-gt/q={q}"),
                hash_domain_tag: HASH_DOMAIN_TAG.to_vec(),
                security_bits,
            },
        };
        suite.params.generator = suite.g1_to_bytes(&ToyElement(1));
        Ok(suite)
    }

    /// Shorthand for `setup(128, InsecureToyGroup { modulus })`.
    pub fn insecure(modulus: u64) -> Result<Self, BilinearError> {
        Self::setup(SECURITY_BITS, InsecureToyGroup { modulus })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// The element `g^e`.
    pub fn element(&self, e: u64) -> ToyElement {
        ToyElement(e % self.q)
    }

    pub fn scalar(&self, v: u64) -> ToyScalar {
        ToyScalar(v % self.q)
    }

    pub fn gt_element(&self, e: u64) -> ToyGt {
        ToyGt(e % self.q)
    }

    fn add(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.q as u128) as u64
    }

    fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.q - b % self.q)
    }

    fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    fn inv(&self, a: u64) -> Option<u64> {
        // Extended Euclid over i128.
        let (mut r0, mut r1) = (self.q as i128, (a % self.q) as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        if r1 == 0 {
            return None;
        }
        while r1 != 0 {
            let k = r0 / r1;
            (r0, r1) = (r1, r0 - k * r1);
            (t0, t1) = (t1, t0 - k * t1);
        }
        debug_assert_eq!(r0, 1);
        Some(t0.rem_euclid(self.q as i128) as u64)
    }

    fn encode(&self, v: u64) -> Vec<u8> {
        v.to_be_bytes()[8 - self.encoded_len..].to_vec()
    }

    fn decode(&self, bytes: &[u8], group: &'static str) -> Result<u64, BilinearError> {
        if bytes.len() != self.encoded_len {
            return Err(BilinearError::InvalidEncoding { group });
        }
        let v = bytes.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64);
        if v >= self.q {
            return Err(BilinearError::InvalidEncoding { group });
        }
        Ok(v)
    }

    fn uniform(&self, rng: &mut (impl RngCore + ?Sized)) -> u64 {
        let mask = u64::MAX >> (self.q - 1).leading_zeros();
        loop {
            let v = rng.next_u64() & mask;
            if v < self.q {
                return v;
            }
        }
    }
}

impl PairingSuite for TransparentSuite {
    type Scalar = ToyScalar;
    type G1 = ToyElement;
    type G2 = ToyElement;
    type Gt = ToyGt;

    fn params(&self) -> &Params {
        &self.params
    }

    fn is_insecure(&self) -> bool {
        true
    }

    fn scalar_from_u64(&self, v: u64) -> ToyScalar {
        ToyScalar(v % self.q)
    }

    fn scalar_add(&self, a: &ToyScalar, b: &ToyScalar) -> ToyScalar {
        ToyScalar(self.add(a.0, b.0))
    }

    fn scalar_mul(&self, a: &ToyScalar, b: &ToyScalar) -> ToyScalar {
        ToyScalar(self.mul(a.0, b.0))
    }

    fn scalar_neg(&self, a: &ToyScalar) -> ToyScalar {
        ToyScalar(self.sub(0, a.0))
    }

    fn scalar_inverse(&self, a: &ToyScalar) -> Result<ToyScalar, BilinearError> {
        record(Op::ScalarInversion);
        self.inv(a.0).map(ToyScalar).ok_or(BilinearError::ZeroInverse)
    }

    fn scalar_is_zero(&self, a: &ToyScalar) -> bool {
        a.0 == 0
    }

    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> ToyScalar {
        ToyScalar(self.uniform(rng))
    }

    fn scalar_to_bytes(&self, a: &ToyScalar) -> Vec<u8> {
        self.encode(a.0)
    }

    fn scalar_from_bytes(&self, bytes: &[u8]) -> Result<ToyScalar, BilinearError> {
        self.decode(bytes, "scalar").map(ToyScalar)
    }

    fn g1_generator(&self) -> ToyElement {
        ToyElement(1)
    }

    fn g1_identity(&self) -> ToyElement {
        ToyElement(0)
    }

    fn g1_mul(&self, a: &ToyElement, b: &ToyElement) -> ToyElement {
        record(Op::Mul);
        ToyElement(self.add(a.0, b.0))
    }

    fn g1_div(&self, a: &ToyElement, b: &ToyElement) -> ToyElement {
        record(Op::Mul);
        ToyElement(self.sub(a.0, b.0))
    }

    fn g1_pow(&self, base: &ToyElement, exp: &ToyScalar) -> ToyElement {
        record(Op::Exp);
        ToyElement(self.mul(base.0, exp.0))
    }

    fn g1_inverse(&self, a: &ToyElement) -> ToyElement {
        record(Op::GroupInversion);
        ToyElement(self.sub(0, a.0))
    }

    fn g1_encoded_len(&self) -> usize {
        self.encoded_len
    }

    fn g1_to_bytes(&self, a: &ToyElement) -> Vec<u8> {
        self.encode(a.0)
    }

    fn g1_from_bytes(&self, bytes: &[u8]) -> Result<ToyElement, BilinearError> {
        self.decode(bytes, "G1").map(ToyElement)
    }

    fn hash_to_g1(&self, msg: &[u8]) -> ToyElement {
        record(Op::HashToGroup);
        let mut counter: Option<u8> = None;
        loop {
            let mut h = Sha256::new();
            h.update(&self.params.hash_domain_tag);
            h.update(msg);
            if let Some(c) = counter {
                h.update([c]);
            }
            let digest: [u8; 32] = h.finalize().into();
            let e = exponent_from_digest(&digest, self.q);
            if e != 0 {
                return ToyElement(e);
            }
            counter = Some(counter.map_or(0, |c| c.wrapping_add(1)));
        }
    }

    fn random_g1<R: RngCore + ?Sized>(&self, rng: &mut R) -> ToyElement {
        ToyElement(self.uniform(rng))
    }

    fn g2_generator(&self) -> ToyElement {
        ToyElement(1)
    }

    fn g2_identity(&self) -> ToyElement {
        ToyElement(0)
    }

    fn g2_pow(&self, base: &ToyElement, exp: &ToyScalar) -> ToyElement {
        record(Op::Exp);
        ToyElement(self.mul(base.0, exp.0))
    }

    fn g2_encoded_len(&self) -> usize {
        self.encoded_len
    }

    fn g2_to_bytes(&self, a: &ToyElement) -> Vec<u8> {
        self.encode(a.0)
    }

    fn g2_from_bytes(&self, bytes: &[u8]) -> Result<ToyElement, BilinearError> {
        self.decode(bytes, "G2").map(ToyElement)
    }

    fn gt_identity(&self) -> ToyGt {
        ToyGt(0)
    }

    fn gt_mul(&self, a: &ToyGt, b: &ToyGt) -> ToyGt {
        record(Op::GtArith);
        ToyGt(self.add(a.0, b.0))
    }

    fn gt_pow(&self, a: &ToyGt, exp: &ToyScalar) -> ToyGt {
        record(Op::GtArith);
        ToyGt(self.mul(a.0, exp.0))
    }

    fn pair(&self, a: &ToyElement, b: &ToyElement) -> ToyGt {
        record(Op::Pairing);
        ToyGt(self.mul(a.0, b.0))
    }
}
