//! Pairing-friendly group suites.
//!
//! All scheme arithmetic goes through [`PairingSuite`], written
//! multiplicatively: `mul`, `div` and `pow` on source-group elements.
//! Two backends implement it:
//!
//! * [`Bls12Suite`] runs over the BLS12-381 curve. The pairing is Type-3,
//!   so public keys carry one component in each source group and every
//!   equation `e(A, g) = e(B, y)` is evaluated as `e(A, g2) = e(B, y2)`.
//! * [`TransparentSuite`] is a test double where every element carries its
//!   discrete logarithm. The pairing multiplies exponents, which makes each
//!   equation checkable with plain modular arithmetic. It refuses to start
//!   without an explicit [`InsecureToyGroup`] opt-in.

mod bls;
mod transparent;

pub use bls::Bls12Suite;
pub use transparent::{InsecureToyGroup, ToyElement, ToyGt, ToyScalar, TransparentSuite};

use rand::RngCore;
use std::fmt::Debug;
use thiserror::Error;

/// Domain-separation tag for hashing onto the group.
pub const HASH_DOMAIN_TAG: &[u8] = b"CPS-H-v1";

/// The only supported security level, in bits.
pub const SECURITY_BITS: u32 = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BilinearError {
    #[error("unsupported security level: {0} bits")]
    UnsupportedSecurityLevel(u32),
    #[error("toy group modulus {0} is not a prime below 2^62")]
    InvalidToyModulus(u64),
    #[error("invalid {group} encoding")]
    InvalidEncoding { group: &'static str },
    #[error("inverse of zero")]
    ZeroInverse,
}

/// Public description of a group suite.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Params {
    pub group_id: String,
    /// Prime group order, big-endian without leading zeros.
    pub order: Vec<u8>,
    /// Encoding of the generator of the first source group.
    pub generator: Vec<u8>,
    pub gt_id: String,
    pub hash_domain_tag: Vec<u8>,
    pub security_bits: u32,
}

impl Params {
    pub fn order_bits(&self) -> u32 {
        match self.order.iter().position(|&b| b != 0) {
            None => 0,
            Some(i) => {
                let rest = (self.order.len() - i - 1) as u32;
                rest * 8 + (8 - self.order[i].leading_zeros())
            }
        }
    }
}

/// A bilinear group suite `(G1, G2, GT, e, H)` with scalars in `Z_q`.
///
/// Implementations must report every source-group exponentiation and
/// multiplication, every pairing and every hash through
/// [`crate::counters::record`] so that operation counts are identical
/// across backends.
pub trait PairingSuite: Clone + Debug + PartialEq + Eq + Send + Sync + 'static {
    type Scalar: Copy + Debug + PartialEq + Eq + Send + Sync + 'static;
    type G1: Copy + Debug + PartialEq + Eq + Send + Sync + 'static;
    type G2: Copy + Debug + PartialEq + Eq + Send + Sync + 'static;
    type Gt: Copy + Debug + PartialEq + Eq + Send + Sync + 'static;

    fn params(&self) -> &Params;

    /// True for test doubles whose encodings carry no security.
    fn is_insecure(&self) -> bool;

    // Scalar field.

    fn scalar_from_u64(&self, v: u64) -> Self::Scalar;
    fn scalar_add(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn scalar_mul(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn scalar_neg(&self, a: &Self::Scalar) -> Self::Scalar;
    fn scalar_inverse(&self, a: &Self::Scalar) -> Result<Self::Scalar, BilinearError>;
    fn scalar_is_zero(&self, a: &Self::Scalar) -> bool;
    /// Uniform in `[0, q)`.
    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Scalar;
    /// Fixed-length big-endian encoding.
    fn scalar_to_bytes(&self, a: &Self::Scalar) -> Vec<u8>;
    fn scalar_from_bytes(&self, bytes: &[u8]) -> Result<Self::Scalar, BilinearError>;

    /// Uniform in `[1, q)`.
    fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Scalar {
        loop {
            let s = self.random_scalar(rng);
            if !self.scalar_is_zero(&s) {
                return s;
            }
        }
    }

    // First source group; hashes, chameleon values and signatures live here.

    fn g1_generator(&self) -> Self::G1;
    fn g1_identity(&self) -> Self::G1;
    fn g1_mul(&self, a: &Self::G1, b: &Self::G1) -> Self::G1;
    fn g1_div(&self, a: &Self::G1, b: &Self::G1) -> Self::G1;
    fn g1_pow(&self, base: &Self::G1, exp: &Self::Scalar) -> Self::G1;
    fn g1_inverse(&self, a: &Self::G1) -> Self::G1;
    fn g1_encoded_len(&self) -> usize;
    fn g1_to_bytes(&self, a: &Self::G1) -> Vec<u8>;
    /// Rejects encodings outside the prime-order subgroup.
    fn g1_from_bytes(&self, bytes: &[u8]) -> Result<Self::G1, BilinearError>;
    /// Deterministic hash onto the prime-order subgroup, never the identity.
    fn hash_to_g1(&self, msg: &[u8]) -> Self::G1;
    /// Uniformly random element, for tests and forgery harnesses.
    fn random_g1<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::G1;

    fn g1_is_identity(&self, a: &Self::G1) -> bool {
        *a == self.g1_identity()
    }

    // Second source group; carries the verification half of public keys.

    fn g2_generator(&self) -> Self::G2;
    fn g2_identity(&self) -> Self::G2;
    fn g2_pow(&self, base: &Self::G2, exp: &Self::Scalar) -> Self::G2;
    fn g2_encoded_len(&self) -> usize;
    fn g2_to_bytes(&self, a: &Self::G2) -> Vec<u8>;
    fn g2_from_bytes(&self, bytes: &[u8]) -> Result<Self::G2, BilinearError>;

    // Target group.

    fn gt_identity(&self) -> Self::Gt;
    fn gt_mul(&self, a: &Self::Gt, b: &Self::Gt) -> Self::Gt;
    fn gt_pow(&self, a: &Self::Gt, exp: &Self::Scalar) -> Self::Gt;

    /// The bilinear map `e: G1 x G2 -> GT`.
    fn pair(&self, a: &Self::G1, b: &Self::G2) -> Self::Gt;

    /// Tests `e(a1, b1) == e(a2, b2)`; counts as two pairings.
    fn pairings_equal(&self, a1: &Self::G1, b1: &Self::G2, a2: &Self::G1, b2: &Self::G2) -> bool {
        let lhs = self.pair(a1, b1);
        let rhs = self.pair(a2, b2);
        crate::counters::record(crate::counters::Op::GtCompare);
        lhs == rhs
    }
}

/// Deterministic primality test for `n < 2^64`.
pub(crate) fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        acc
    };
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    // This witness set is deterministic for all 64-bit inputs.
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
