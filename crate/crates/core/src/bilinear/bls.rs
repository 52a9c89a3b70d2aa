use bls12_381::hash_to_curve::{ExpandMsgXmd, HashToCurve};
use bls12_381::{
    multi_miller_loop, pairing, G1Affine, G1Projective, G2Affine, G2Prepared, G2Projective, Gt,
    Scalar,
};
use rand::RngCore;

use super::{BilinearError, PairingSuite, Params, HASH_DOMAIN_TAG, SECURITY_BITS};
use crate::counters::{record, Op};

/// Order of the BLS12-381 prime-order subgroups, big-endian.
const ORDER_HEX: &str = "73eda753299d7d483339d80809a1d80553bda402fffe5bfeffffffff00000001";

/// BLS12-381 with G1 for hashes, chameleon values and signatures, G2 for the
/// verification half of public keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bls12Suite {
    params: Params,
}

impl Bls12Suite {
    pub fn setup(security_bits: u32) -> Result<Self, BilinearError> {
        if security_bits != SECURITY_BITS {
            return Err(BilinearError::UnsupportedSecurityLevel(security_bits));
        }
        Ok(Bls12Suite {
            params: Params {
                group_id: "bls12-381/g1".into(),
                order: hex::decode(ORDER_HEX).expect("constant"),
                generator: G1Affine::generator().to_compressed().to_vec(),
                gt_id: "bls12-381/gt".into(),
                hash_domain_tag: HASH_DOMAIN_TAG.to_vec(),
                security_bits,
            },
        })
    }
}

fn fixed<const N: usize>(bytes: &[u8], group: &'static str) -> Result<[u8; N], BilinearError> {
    bytes
        .try_into()
        .map_err(|_| BilinearError::InvalidEncoding { group })
}

impl PairingSuite for Bls12Suite {
    type Scalar = Scalar;
    type G1 = G1Projective;
    type G2 = G2Affine;
    type Gt = Gt;

    fn params(&self) -> &Params {
        &self.params
    }

    fn is_insecure(&self) -> bool {
        false
    }

    fn scalar_from_u64(&self, v: u64) -> Scalar {
        Scalar::from(v)
    }

    fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        a + b
    }

    fn scalar_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        a * b
    }

    fn scalar_neg(&self, a: &Scalar) -> Scalar {
        -a
    }

    fn scalar_inverse(&self, a: &Scalar) -> Result<Scalar, BilinearError> {
        record(Op::ScalarInversion);
        Option::from(a.invert()).ok_or(BilinearError::ZeroInverse)
    }

    fn scalar_is_zero(&self, a: &Scalar) -> bool {
        *a == Scalar::zero()
    }

    fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        Scalar::from_bytes_wide(&wide)
    }

    fn scalar_to_bytes(&self, a: &Scalar) -> Vec<u8> {
        let mut b = a.to_bytes();
        b.reverse();
        b.to_vec()
    }

    fn scalar_from_bytes(&self, bytes: &[u8]) -> Result<Scalar, BilinearError> {
        let mut le: [u8; 32] = fixed(bytes, "scalar")?;
        le.reverse();
        Option::from(Scalar::from_bytes(&le)).ok_or(BilinearError::InvalidEncoding { group: "scalar" })
    }

    fn g1_generator(&self) -> G1Projective {
        G1Projective::generator()
    }

    fn g1_identity(&self) -> G1Projective {
        G1Projective::identity()
    }

    fn g1_mul(&self, a: &G1Projective, b: &G1Projective) -> G1Projective {
        record(Op::Mul);
        a + b
    }

    fn g1_div(&self, a: &G1Projective, b: &G1Projective) -> G1Projective {
        record(Op::Mul);
        a - b
    }

    fn g1_pow(&self, base: &G1Projective, exp: &Scalar) -> G1Projective {
        record(Op::Exp);
        base * exp
    }

    fn g1_inverse(&self, a: &G1Projective) -> G1Projective {
        record(Op::GroupInversion);
        -a
    }

    fn g1_encoded_len(&self) -> usize {
        48
    }

    fn g1_to_bytes(&self, a: &G1Projective) -> Vec<u8> {
        G1Affine::from(a).to_compressed().to_vec()
    }

    fn g1_from_bytes(&self, bytes: &[u8]) -> Result<G1Projective, BilinearError> {
        let raw: [u8; 48] = fixed(bytes, "G1")?;
        // from_compressed checks both curve membership and the subgroup.
        Option::<G1Affine>::from(G1Affine::from_compressed(&raw))
            .map(G1Projective::from)
            .ok_or(BilinearError::InvalidEncoding { group: "G1" })
    }

    fn hash_to_g1(&self, msg: &[u8]) -> G1Projective {
        record(Op::HashToGroup);
        let mut input = msg.to_vec();
        let mut counter = 0u8;
        loop {
            let p = <G1Projective as HashToCurve<ExpandMsgXmd<sha2::Sha256>>>::hash_to_curve(
                &input,
                &self.params.hash_domain_tag,
            );
            if !bool::from(p.is_identity()) {
                return p;
            }
            if counter > 0 {
                input.pop();
            }
            input.push(counter);
            counter = counter.wrapping_add(1);
        }
    }

    fn random_g1<R: RngCore + ?Sized>(&self, rng: &mut R) -> G1Projective {
        G1Projective::generator() * self.random_scalar(rng)
    }

    fn g1_is_identity(&self, a: &G1Projective) -> bool {
        bool::from(a.is_identity())
    }

    fn g2_generator(&self) -> G2Affine {
        G2Affine::generator()
    }

    fn g2_identity(&self) -> G2Affine {
        G2Affine::identity()
    }

    fn g2_pow(&self, base: &G2Affine, exp: &Scalar) -> G2Affine {
        record(Op::Exp);
        G2Affine::from(G2Projective::from(base) * exp)
    }

    fn g2_encoded_len(&self) -> usize {
        96
    }

    fn g2_to_bytes(&self, a: &G2Affine) -> Vec<u8> {
        a.to_compressed().to_vec()
    }

    fn g2_from_bytes(&self, bytes: &[u8]) -> Result<G2Affine, BilinearError> {
        let raw: [u8; 96] = fixed(bytes, "G2")?;
        Option::from(G2Affine::from_compressed(&raw)).ok_or(BilinearError::InvalidEncoding { group: "G2" })
    }

    fn gt_identity(&self) -> Gt {
        Gt::identity()
    }

    fn gt_mul(&self, a: &Gt, b: &Gt) -> Gt {
        record(Op::GtArith);
        // bls12_381 writes GT additively.
        a + b
    }

    fn gt_pow(&self, a: &Gt, exp: &Scalar) -> Gt {
        record(Op::GtArith);
        a * exp
    }

    fn pair(&self, a: &G1Projective, b: &G2Affine) -> Gt {
        record(Op::Pairing);
        pairing(&G1Affine::from(a), b)
    }

    fn pairings_equal(&self, a1: &G1Projective, b1: &G2Affine, a2: &G1Projective, b2: &G2Affine) -> bool {
        record(Op::Pairing);
        record(Op::Pairing);
        record(Op::GtCompare);
        // e(a1, b1) == e(a2, b2)  <=>  e(a1, b1) * e(-a2, b2) == 1, sharing
        // one final exponentiation.
        let lhs = G1Affine::from(a1);
        let rhs = G1Affine::from(-a2);
        let p1 = G2Prepared::from(*b1);
        let p2 = G2Prepared::from(*b2);
        let gt = multi_miller_loop(&[(&lhs, &p1), (&rhs, &p2)]).final_exponentiation();
        gt == Gt::identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn suite() -> Bls12Suite {
        Bls12Suite::setup(128).unwrap()
    }

    #[test]
    fn order_is_the_published_255_bit_prime() {
        let s = suite();
        assert_eq!(s.params().order_bits(), 255);
        // q - 1 must encode as -1 in the scalar field.
        let mut q_minus_one = s.params().order.clone();
        *q_minus_one.last_mut().unwrap() -= 1;
        let minus_one = s.scalar_from_bytes(&q_minus_one).unwrap();
        assert_eq!(minus_one, -Scalar::one());
        assert!(s.scalar_from_bytes(&s.params().order).is_err());
    }

    #[test]
    fn unsupported_level() {
        assert_eq!(Bls12Suite::setup(64), Err(BilinearError::UnsupportedSecurityLevel(64)));
    }

    #[test]
    fn multi_miller_check_agrees_with_plain_pairings() {
        let s = suite();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..4 {
            let a = s.random_nonzero_scalar(&mut rng);
            let b = s.random_nonzero_scalar(&mut rng);
            let ga = s.g1_pow(&s.g1_generator(), &a);
            let gb2 = s.g2_pow(&s.g2_generator(), &b);
            let gab = s.g1_pow(&s.g1_generator(), &(a * b));
            assert!(s.pairings_equal(&ga, &gb2, &gab, &s.g2_generator()));
            assert_eq!(s.pair(&ga, &gb2), s.pair(&gab, &s.g2_generator()));
            assert!(!s.pairings_equal(&ga, &gb2, &ga, &s.g2_generator()));
        }
    }

    #[test]
    fn rejects_points_outside_the_subgroup() {
        let s = suite();
        // Walk x = 0, 1, 2, ... until a point on the curve that is not in
        // the prime-order subgroup turns up; almost every curve point
        // qualifies since the cofactor is about 2^126.
        let mut found_coset = false;
        let mut found_off_curve = false;
        for x in 0u8..=255 {
            let mut enc = [0u8; 48];
            enc[0] = 0x80; // compressed, finite, sign bit clear
            enc[47] = x;
            let unchecked = Option::<G1Affine>::from(G1Affine::from_compressed_unchecked(&enc));
            match unchecked {
                Some(p) => {
                    assert!(bool::from(p.is_on_curve()));
                    if !bool::from(p.is_torsion_free()) {
                        assert!(s.g1_from_bytes(&enc).is_err());
                        found_coset = true;
                    }
                }
                None => {
                    assert!(s.g1_from_bytes(&enc).is_err());
                    found_off_curve = true;
                }
            }
            if found_coset && found_off_curve {
                break;
            }
        }
        assert!(found_coset && found_off_curve);
        // Wrong length and the uncompressed-flag variant are rejected too.
        assert!(s.g1_from_bytes(&[0u8; 47]).is_err());
        let mut g = s.g1_to_bytes(&s.g1_generator());
        g[0] &= 0x7f;
        assert!(s.g1_from_bytes(&g).is_err());
    }

    #[test]
    fn identity_round_trips() {
        let s = suite();
        let id = s.g1_identity();
        let enc = s.g1_to_bytes(&id);
        assert_eq!(enc.len(), 48);
        assert!(s.g1_is_identity(&s.g1_from_bytes(&enc).unwrap()));
    }
}
