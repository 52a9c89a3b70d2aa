//! The chameleon proxy signature scheme.
//!
//! An original signer `A` endorses a chameleon hash built under a proxy
//! key `B`:
//!
//! ```text
//! Hash:  m = H(M), r <- Z_q*,  h = m * y_B^r,  R = g^r
//! DGen:  (h, R) = Hash(M, pk_B),  sigma = h^x_A
//! PVer:  e(sigma, g) == e(h, y_A)          (endorsement)
//!        e(h / m, g) == e(R, y_B)           (chameleon check)
//! PSig:  R' = (h / H(M'))^(1 / x_B)
//! ```
//!
//! `PSig` finds a collision `(M', R')` for the same `h`, so
//! `(sigma, h, M', R')` verifies under the unchanged endorsement: that is
//! the proxy signature, and only `R'` has to be transmitted.
//!
//! On Type-3 curves `g` and `y` in the pairing's right argument are the G2
//! halves of the keys; see [`PublicKey`].

use rand::RngCore;
use thiserror::Error;

use crate::bilinear::{BilinearError, PairingSuite};
use crate::encoding::{DecodeError, Decoder};

/// Wire tag of an original signature `(sigma, h, R)`.
pub const ORIGINAL_SIGNATURE_TAG: u8 = 0x01;
/// Wire tag of a proxy signature `(R')`.
pub const PROXY_SIGNATURE_TAG: u8 = 0x02;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CpsError {
    #[error("tuple carries no original-signer endorsement")]
    MissingSigma,
    #[error("public key components are inconsistent or degenerate")]
    InvalidPublicKey,
    #[error("secret key is zero")]
    ZeroSecret,
    #[error("chameleon randomness is degenerate")]
    DegenerateRandomness,
    #[error("unknown signature tag {0:#04x}")]
    BadTag(u8),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

impl From<BilinearError> for CpsError {
    fn from(e: BilinearError) -> Self {
        CpsError::Decode(DecodeError::InvalidElement(e))
    }
}

/// `y = g^x` in both source groups.
///
/// Keys are only constructed through [`KeyPair`] or [`PublicKey::from_parts`],
/// which runs the cross-group consistency check `e(y1, g2) = e(g1, y2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey<S: PairingSuite> {
    g1: S::G1,
    g2: S::G2,
}

impl<S: PairingSuite> PublicKey<S> {
    pub fn from_parts(suite: &S, g1: S::G1, g2: S::G2) -> Result<Self, CpsError> {
        let pk = PublicKey { g1, g2 };
        if suite.g1_is_identity(&g1)
            || g2 == suite.g2_identity()
            || !suite.pairings_equal(&g1, &suite.g2_generator(), &suite.g1_generator(), &g2)
        {
            return Err(CpsError::InvalidPublicKey);
        }
        Ok(pk)
    }

    /// `y1`, the component in the first source group.
    pub fn g1(&self) -> &S::G1 {
        &self.g1
    }

    /// `y2`, the component used on the right of every pairing.
    pub fn g2(&self) -> &S::G2 {
        &self.g2
    }

    pub fn encoded_len(suite: &S) -> usize {
        suite.g1_encoded_len() + suite.g2_encoded_len()
    }

    pub fn to_bytes(&self, suite: &S) -> Vec<u8> {
        let mut out = suite.g1_to_bytes(&self.g1);
        out.extend(suite.g2_to_bytes(&self.g2));
        out
    }

    /// Decodes and runs the consistency check.
    pub fn from_bytes(suite: &S, bytes: &[u8]) -> Result<Self, CpsError> {
        let mut d = Decoder::new(bytes);
        let pk = Self::decode(suite, &mut d)?;
        d.finish()?;
        Ok(pk)
    }

    pub fn decode(suite: &S, d: &mut Decoder<'_>) -> Result<Self, CpsError> {
        let g1 = suite.g1_from_bytes(d.fixed(suite.g1_encoded_len())?)?;
        let g2 = suite.g2_from_bytes(d.fixed(suite.g2_encoded_len())?)?;
        Self::from_parts(suite, g1, g2)
    }
}

// Derived `Copy` would demand `S: Copy`; the suite is never stored.
impl<S: PairingSuite> Copy for PublicKey<S> {}
impl<S: PairingSuite> Copy for ChameleonHash<S> {}
impl<S: PairingSuite> Copy for OriginalSignature<S> {}
impl<S: PairingSuite> Copy for ProxySignature<S> {}

/// A secret scalar `x != 0` with its public key.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair<S: PairingSuite> {
    sk: S::Scalar,
    pk: PublicKey<S>,
}

impl<S: PairingSuite> std::fmt::Debug for KeyPair<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyPair")
            .field("sk", &"<redacted>")
            .field("pk", &self.pk)
            .finish()
    }
}

impl<S: PairingSuite> KeyPair<S> {
    pub fn from_secret(suite: &S, sk: S::Scalar) -> Result<Self, CpsError> {
        if suite.scalar_is_zero(&sk) {
            return Err(CpsError::ZeroSecret);
        }
        let pk = PublicKey {
            g1: suite.g1_pow(&suite.g1_generator(), &sk),
            g2: suite.g2_pow(&suite.g2_generator(), &sk),
        };
        Ok(KeyPair { sk, pk })
    }

    pub fn public(&self) -> &PublicKey<S> {
        &self.pk
    }

    pub fn secret(&self) -> &S::Scalar {
        &self.sk
    }

    pub fn secret_bytes(&self, suite: &S) -> Vec<u8> {
        suite.scalar_to_bytes(&self.sk)
    }

    pub fn from_secret_bytes(suite: &S, bytes: &[u8]) -> Result<Self, CpsError> {
        Self::from_secret(suite, suite.scalar_from_bytes(bytes)?)
    }
}

/// Samples `x` uniformly from `[1, q)`.
pub fn keygen<S: PairingSuite, R: RngCore + ?Sized>(suite: &S, rng: &mut R) -> KeyPair<S> {
    let sk = suite.random_nonzero_scalar(rng);
    KeyPair::from_secret(suite, sk).expect("nonzero secret")
}

/// Output of [`chameleon_hash`]. The randomness `r` is kept for audit only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChameleonHash<S: PairingSuite> {
    pub h: S::G1,
    pub check: S::G1,
    pub randomness: S::Scalar,
}

/// `h = H(M) * y^r`, `R = g^r` with fresh nonzero `r`.
///
/// `r` is resampled if it makes `h` the identity, which verification
/// rejects.
pub fn chameleon_hash<S: PairingSuite, R: RngCore + ?Sized>(
    suite: &S,
    msg: &[u8],
    pk: &PublicKey<S>,
    rng: &mut R,
) -> ChameleonHash<S> {
    let m = suite.hash_to_g1(msg);
    loop {
        let r = suite.random_nonzero_scalar(rng);
        if let Ok(ch) = chameleon_hash_prehashed(suite, &m, pk, r) {
            return ch;
        }
    }
}

/// [`chameleon_hash`] with caller-chosen randomness, over a pre-hashed `m`.
pub fn chameleon_hash_prehashed<S: PairingSuite>(
    suite: &S,
    m: &S::G1,
    pk: &PublicKey<S>,
    r: S::Scalar,
) -> Result<ChameleonHash<S>, CpsError> {
    if suite.scalar_is_zero(&r) {
        return Err(CpsError::DegenerateRandomness);
    }
    let h = suite.g1_mul(m, &suite.g1_pow(&pk.g1, &r));
    let check = suite.g1_pow(&suite.g1_generator(), &r);
    if suite.g1_is_identity(&h) {
        return Err(CpsError::DegenerateRandomness);
    }
    Ok(ChameleonHash {
        h,
        check,
        randomness: r,
    })
}

/// `e(h / H(M), g) == e(R, y)`: whether `(pk, h, M, R)` is compatible.
pub fn check_chameleon<S: PairingSuite>(
    suite: &S,
    pk: &PublicKey<S>,
    h: &S::G1,
    msg: &[u8],
    check: &S::G1,
) -> bool {
    let m = suite.hash_to_g1(msg);
    check_chameleon_prehashed(suite, pk, h, &m, check)
}

pub fn check_chameleon_prehashed<S: PairingSuite>(
    suite: &S,
    pk: &PublicKey<S>,
    h: &S::G1,
    m: &S::G1,
    check: &S::G1,
) -> bool {
    let lhs = suite.g1_div(h, m);
    suite.pairings_equal(&lhs, &suite.g2_generator(), check, &pk.g2)
}

/// A chameleon tuple `(h, M, R)`, optionally endorsed by `sigma = h^x_A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChameleonTuple<S: PairingSuite> {
    pub h: S::G1,
    pub message: Vec<u8>,
    pub check: S::G1,
    pub sigma: Option<S::G1>,
}

impl<S: PairingSuite> ChameleonTuple<S> {
    /// The `(sigma, h, R)` part, when endorsed.
    pub fn original_signature(&self) -> Option<OriginalSignature<S>> {
        self.sigma.map(|sigma| OriginalSignature {
            sigma,
            h: self.h,
            check: self.check,
        })
    }

    /// Replaces `(M, R)` with a collision `(M', R')` under the same `h`.
    pub fn with_collision(&self, message: Vec<u8>, check: S::G1) -> Self {
        ChameleonTuple {
            h: self.h,
            message,
            check,
            sigma: self.sigma,
        }
    }
}

/// Original signature: `A` endorses a chameleon hash built under `pk_B`.
pub fn dgen<S: PairingSuite, R: RngCore + ?Sized>(
    suite: &S,
    signer: &KeyPair<S>,
    msg: &[u8],
    proxy: &PublicKey<S>,
    rng: &mut R,
) -> ChameleonTuple<S> {
    let ch = chameleon_hash(suite, msg, proxy, rng);
    endorse(suite, signer, msg, &ch)
}

/// [`dgen`] with caller-chosen chameleon randomness.
pub fn dgen_with_randomness<S: PairingSuite>(
    suite: &S,
    signer: &KeyPair<S>,
    msg: &[u8],
    proxy: &PublicKey<S>,
    r: S::Scalar,
) -> Result<ChameleonTuple<S>, CpsError> {
    let m = suite.hash_to_g1(msg);
    let ch = chameleon_hash_prehashed(suite, &m, proxy, r)?;
    Ok(endorse(suite, signer, msg, &ch))
}

fn endorse<S: PairingSuite>(
    suite: &S,
    signer: &KeyPair<S>,
    msg: &[u8],
    ch: &ChameleonHash<S>,
) -> ChameleonTuple<S> {
    ChameleonTuple {
        h: ch.h,
        message: msg.to_vec(),
        check: ch.check,
        sigma: Some(suite.g1_pow(&ch.h, &signer.sk)),
    }
}

/// Verifies an original or proxy signature.
///
/// Both equations are always evaluated, so a call costs one hash, one
/// division and four pairings regardless of the outcome. A tuple whose
/// `h` is the identity is rejected without pairing.
pub fn pver<S: PairingSuite>(
    suite: &S,
    signer: &PublicKey<S>,
    tuple: &ChameleonTuple<S>,
    proxy: &PublicKey<S>,
) -> Result<bool, CpsError> {
    let sigma = tuple.sigma.ok_or(CpsError::MissingSigma)?;
    if suite.g1_is_identity(&tuple.h) {
        return Ok(false);
    }
    let m = suite.hash_to_g1(&tuple.message);
    Ok(pver_prehashed(suite, signer, &sigma, &tuple.h, &m, &tuple.check, proxy))
}

/// [`pver`] with `m = H(M)` supplied by the caller, e.g. a programmed
/// random oracle.
pub fn pver_prehashed<S: PairingSuite>(
    suite: &S,
    signer: &PublicKey<S>,
    sigma: &S::G1,
    h: &S::G1,
    m: &S::G1,
    check: &S::G1,
    proxy: &PublicKey<S>,
) -> bool {
    if suite.g1_is_identity(h) {
        return false;
    }
    let endorsed = suite.pairings_equal(sigma, &suite.g2_generator(), h, &signer.g2);
    let compatible = check_chameleon_prehashed(suite, proxy, h, m, check);
    endorsed & compatible
}

/// Proxy signature: the collision check parameter `R'` for `M'` under `h`.
pub fn psig<S: PairingSuite>(suite: &S, proxy: &KeyPair<S>, h: &S::G1, msg: &[u8]) -> S::G1 {
    let m = suite.hash_to_g1(msg);
    psig_prehashed(suite, proxy, h, &m)
}

pub fn psig_prehashed<S: PairingSuite>(suite: &S, proxy: &KeyPair<S>, h: &S::G1, m: &S::G1) -> S::G1 {
    let inv = suite
        .scalar_inverse(&proxy.sk)
        .expect("key pairs never hold a zero secret");
    suite.g1_pow(&suite.g1_div(h, m), &inv)
}

/// `(sigma, h, R)`: three group elements on the wire.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OriginalSignature<S: PairingSuite> {
    pub sigma: S::G1,
    pub h: S::G1,
    pub check: S::G1,
}

/// `R'`: one group element on the wire.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProxySignature<S: PairingSuite> {
    pub check: S::G1,
}

impl<S: PairingSuite> OriginalSignature<S> {
    pub const ELEMENTS: usize = 3;

    pub fn encoded_len(suite: &S) -> usize {
        1 + Self::ELEMENTS * suite.g1_encoded_len()
    }

    pub fn to_bytes(&self, suite: &S) -> Vec<u8> {
        let mut out = vec![ORIGINAL_SIGNATURE_TAG];
        for e in [&self.sigma, &self.h, &self.check] {
            out.extend(suite.g1_to_bytes(e));
        }
        out
    }

    pub fn from_bytes(suite: &S, bytes: &[u8]) -> Result<Self, CpsError> {
        let mut d = Decoder::new(bytes);
        let sig = Self::decode(suite, &mut d)?;
        d.finish()?;
        Ok(sig)
    }

    pub fn decode(suite: &S, d: &mut Decoder<'_>) -> Result<Self, CpsError> {
        let tag = d.u8()?;
        if tag != ORIGINAL_SIGNATURE_TAG {
            return Err(CpsError::BadTag(tag));
        }
        let n = suite.g1_encoded_len();
        Ok(OriginalSignature {
            sigma: suite.g1_from_bytes(d.fixed(n)?)?,
            h: suite.g1_from_bytes(d.fixed(n)?)?,
            check: suite.g1_from_bytes(d.fixed(n)?)?,
        })
    }

    pub fn into_tuple(self, message: Vec<u8>) -> ChameleonTuple<S> {
        ChameleonTuple {
            h: self.h,
            message,
            check: self.check,
            sigma: Some(self.sigma),
        }
    }
}

impl<S: PairingSuite> ProxySignature<S> {
    pub const ELEMENTS: usize = 1;

    pub fn encoded_len(suite: &S) -> usize {
        1 + Self::ELEMENTS * suite.g1_encoded_len()
    }

    pub fn to_bytes(&self, suite: &S) -> Vec<u8> {
        let mut out = vec![PROXY_SIGNATURE_TAG];
        out.extend(suite.g1_to_bytes(&self.check));
        out
    }

    pub fn from_bytes(suite: &S, bytes: &[u8]) -> Result<Self, CpsError> {
        let mut d = Decoder::new(bytes);
        let tag = d.u8()?;
        if tag != PROXY_SIGNATURE_TAG {
            return Err(CpsError::BadTag(tag));
        }
        let check = suite.g1_from_bytes(d.fixed(suite.g1_encoded_len())?)?;
        d.finish()?;
        Ok(ProxySignature { check })
    }
}
