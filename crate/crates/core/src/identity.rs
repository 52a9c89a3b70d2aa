//! Users, identity tokens and avatars.
//!
//! An avatar carries the serial numbers of its original manipulator
//! (`sn_u`) and of whoever currently drives it (`sn_p`), the endorsement
//! `(sigma, h)`, a virtual identity `VID = (M, R)` whose message describes
//! the rendered avatar, and a physical identity `PID = (M', R')` whose
//! message is an iris feature followed by a challenge. Both identities are
//! collisions under the same `h`.

use std::collections::BTreeMap;
use std::fmt;

use rand::RngCore;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bilinear::PairingSuite;
use crate::biometric::{IrisCode, IrisTemplate};
use crate::cps::{self, CpsError, KeyPair, OriginalSignature, PublicKey};
use crate::encoding::{DecodeError, Decoder, Encoder};

/// Length of the challenge appended to an iris feature.
pub const CHALLENGE_LEN: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdentityError {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("identity provider endorsement does not verify")]
    BadEndorsement,
    #[error("real-world identity is empty")]
    EmptyRid,
}

impl From<CpsError> for IdentityError {
    fn from(e: CpsError) -> Self {
        match e {
            CpsError::Decode(d) => IdentityError::Decode(d),
            _ => IdentityError::Decode(DecodeError::InvalidField("signature")),
        }
    }
}

/// Opaque 16-byte serial number issued by the registry.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SerialNumber(pub [u8; 16]);

impl SerialNumber {
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut b = [0u8; 16];
        rng.fill_bytes(&mut b);
        SerialNumber(b)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, DecodeError> {
        let raw = hex::decode(s).map_err(|_| DecodeError::InvalidField("serial number"))?;
        let arr = raw.try_into().map_err(|_| DecodeError::InvalidField("serial number"))?;
        Ok(SerialNumber(arr))
    }
}

impl fmt::Debug for SerialNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SN({})", self.to_hex())
    }
}

impl fmt::Display for SerialNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Real-world identity `rid` and metaverse identity `mid`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UserId {
    pub rid: Vec<u8>,
    pub mid: Vec<u8>,
}

impl UserId {
    pub fn new(rid: impl Into<Vec<u8>>, mid: impl Into<Vec<u8>>) -> Result<Self, IdentityError> {
        let rid = rid.into();
        if rid.is_empty() {
            return Err(IdentityError::EmptyRid);
        }
        Ok(UserId { rid, mid: mid.into() })
    }

    pub fn encode(&self, e: &mut Encoder) {
        e.bytes(&self.rid).bytes(&self.mid);
    }

    pub fn decode(d: &mut Decoder<'_>) -> Result<Self, IdentityError> {
        let rid = d.bytes()?.to_vec();
        let mid = d.bytes()?.to_vec();
        UserId::new(rid, mid)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        self.encode(&mut e);
        e.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IdentityError> {
        let mut d = Decoder::new(bytes);
        let id = Self::decode(&mut d)?;
        d.finish()?;
        Ok(id)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "rid": String::from_utf8_lossy(&self.rid),
            "mid": String::from_utf8_lossy(&self.mid),
        })
    }
}

/// Named blobs describing how an avatar is rendered ("face", "speech", ...).
/// The canonical encoding is the avatar's virtual-identity message.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AvatarDescription(pub BTreeMap<String, Vec<u8>>);

impl AvatarDescription {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, blob: impl Into<Vec<u8>>) -> Self {
        self.0.insert(name.to_string(), blob.into());
        self
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.fixed(&(self.0.len() as u32).to_be_bytes());
        for (name, blob) in &self.0 {
            e.bytes(name.as_bytes()).bytes(blob);
        }
        e.finish()
    }

    /// Accepts only the canonical form: names strictly increasing.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let n = d.u32()?;
        let mut map = BTreeMap::new();
        let mut last: Option<String> = None;
        for _ in 0..n {
            let name = String::from_utf8(d.bytes()?.to_vec())
                .map_err(|_| DecodeError::InvalidField("description name"))?;
            if last.as_ref().is_some_and(|l| *l >= name) {
                return Err(DecodeError::InvalidField("description order"));
            }
            let blob = d.bytes()?.to_vec();
            last = Some(name.clone());
            map.insert(name, blob);
        }
        d.finish()?;
        Ok(AvatarDescription(map))
    }
}

/// Digest of what a reporter's screenshot shows: the rendered description.
pub fn render_digest(description: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"render");
    h.update(description);
    h.finalize().into()
}

fn encode_template(e: &mut Encoder, t: &IrisTemplate) {
    e.bytes(t.code()).bytes(t.mask());
}

fn decode_template(d: &mut Decoder<'_>) -> Result<IrisTemplate, DecodeError> {
    let code = d.bytes()?.to_vec();
    let mask = d.bytes()?.to_vec();
    IrisCode::from_parts(code, mask).map_err(|_| DecodeError::InvalidField("iris template"))
}

/// Metaverse identity token: `(SN, pk, T, Info)` endorsed by the identity
/// provider.
///
/// The endorsement is a chameleon original signature by the provider on
/// the canonical body, targeted at the provider's own key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mit<S: PairingSuite> {
    pub sn: SerialNumber,
    pub pk: PublicKey<S>,
    pub template: IrisTemplate,
    pub info: Vec<u8>,
    pub endorsement: OriginalSignature<S>,
}

impl<S: PairingSuite> Mit<S> {
    /// Signs a new token with the provider key `idp`.
    pub fn issue<R: RngCore + ?Sized>(
        suite: &S,
        idp: &KeyPair<S>,
        sn: SerialNumber,
        pk: PublicKey<S>,
        template: IrisTemplate,
        info: Vec<u8>,
        rng: &mut R,
    ) -> Self {
        let body = Self::body(suite, &sn, &pk, &template, &info);
        let tuple = cps::dgen(suite, idp, &body, idp.public(), rng);
        Mit {
            sn,
            pk,
            template,
            info,
            endorsement: tuple.original_signature().expect("dgen endorses"),
        }
    }

    fn body(suite: &S, sn: &SerialNumber, pk: &PublicKey<S>, template: &IrisTemplate, info: &[u8]) -> Vec<u8> {
        let mut e = Encoder::new();
        e.fixed(&sn.0).fixed(&pk.to_bytes(suite));
        encode_template(&mut e, template);
        e.bytes(info);
        e.finish()
    }

    pub fn verify(&self, suite: &S, idp: &PublicKey<S>) -> bool {
        let body = Self::body(suite, &self.sn, &self.pk, &self.template, &self.info);
        let tuple = self.endorsement.into_tuple(body);
        cps::pver(suite, idp, &tuple, idp).unwrap_or(false)
    }

    pub fn to_bytes(&self, suite: &S) -> Vec<u8> {
        let mut out = Self::body(suite, &self.sn, &self.pk, &self.template, &self.info);
        out.extend(self.endorsement.to_bytes(suite));
        out
    }

    /// The serial number without decoding the rest of the token.
    pub fn peek_sn(bytes: &[u8]) -> Result<SerialNumber, DecodeError> {
        Ok(SerialNumber(Decoder::new(bytes).array()?))
    }

    /// Decodes and checks the endorsement against `idp`.
    pub fn from_bytes(suite: &S, bytes: &[u8], idp: &PublicKey<S>) -> Result<Self, IdentityError> {
        let mut d = Decoder::new(bytes);
        let sn = SerialNumber(d.array()?);
        let pk = PublicKey::decode(suite, &mut d)?;
        let template = decode_template(&mut d)?;
        let info = d.bytes()?.to_vec();
        let endorsement = OriginalSignature::decode(suite, &mut d)?;
        d.finish()?;
        let mit = Mit {
            sn,
            pk,
            template,
            info,
            endorsement,
        };
        if !mit.verify(suite, idp) {
            return Err(IdentityError::BadEndorsement);
        }
        Ok(mit)
    }

    pub fn to_json(&self, suite: &S) -> Value {
        json!({
            "sn": self.sn.to_hex(),
            "pk": hex::encode(self.pk.to_bytes(suite)),
            "template_coverage": self.template.mask_coverage(),
            "info": String::from_utf8_lossy(&self.info),
            "endorsement": hex::encode(self.endorsement.to_bytes(suite)),
        })
    }
}

/// Virtual identity: the avatar description `M` and its check value `R`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vid<S: PairingSuite> {
    pub message: Vec<u8>,
    pub check: S::G1,
}

/// Physical identity: `M' = feature || challenge` and its check value `R'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pid<S: PairingSuite> {
    pub message: Vec<u8>,
    pub check: S::G1,
}

/// Builds `feature || challenge`.
pub fn physical_message(feature: &IrisCode, challenge: &[u8; CHALLENGE_LEN]) -> Vec<u8> {
    let mut m = feature.to_bytes();
    m.extend_from_slice(challenge);
    m
}

/// Splits `feature || challenge`; `None` if the feature part is malformed.
pub fn split_physical_message(message: &[u8]) -> Option<(IrisCode, [u8; CHALLENGE_LEN])> {
    let cut = message.len().checked_sub(CHALLENGE_LEN)?;
    let (feature, challenge) = message.split_at(cut);
    let feature = IrisCode::from_bytes(feature).ok()?;
    Some((feature, challenge.try_into().expect("split length")))
}

macro_rules! identity_codec {
    ($ty:ident) => {
        impl<S: PairingSuite> $ty<S> {
            pub fn encode(&self, suite: &S, e: &mut Encoder) {
                e.bytes(&self.message).fixed(&suite.g1_to_bytes(&self.check));
            }

            pub fn decode(suite: &S, d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
                let message = d.bytes()?.to_vec();
                let check = suite.g1_from_bytes(d.fixed(suite.g1_encoded_len())?)?;
                Ok($ty { message, check })
            }

            pub fn to_bytes(&self, suite: &S) -> Vec<u8> {
                let mut e = Encoder::new();
                self.encode(suite, &mut e);
                e.finish()
            }

            pub fn from_bytes(suite: &S, bytes: &[u8]) -> Result<Self, DecodeError> {
                let mut d = Decoder::new(bytes);
                let v = Self::decode(suite, &mut d)?;
                d.finish()?;
                Ok(v)
            }
        }
    };
}

identity_codec!(Vid);
identity_codec!(Pid);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DriverType {
    Human,
    AiProxy,
}

impl fmt::Display for DriverType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DriverType::Human => "human",
            DriverType::AiProxy => "ai-proxy",
        })
    }
}

/// `(SN_U, Aid, SN_P, sigma, h, VID, PID)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Avatar<S: PairingSuite> {
    pub sn_u: SerialNumber,
    pub aid: Vec<u8>,
    pub sn_p: SerialNumber,
    pub sigma: S::G1,
    pub h: S::G1,
    pub vid: Option<Vid<S>>,
    pub pid: Option<Pid<S>>,
}

impl<S: PairingSuite> Avatar<S> {
    /// Human-driven iff the original manipulator is also the driver.
    pub fn driver_type(&self) -> DriverType {
        if self.sn_u == self.sn_p {
            DriverType::Human
        } else {
            DriverType::AiProxy
        }
    }

    pub fn encode(&self, suite: &S, e: &mut Encoder) {
        e.fixed(&self.sn_u.0)
            .bytes(&self.aid)
            .fixed(&self.sn_p.0)
            .fixed(&suite.g1_to_bytes(&self.sigma))
            .fixed(&suite.g1_to_bytes(&self.h));
        e.option(self.vid.as_ref(), |e, v| v.encode(suite, e));
        e.option(self.pid.as_ref(), |e, p| p.encode(suite, e));
    }

    pub fn decode(suite: &S, d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let n = suite.g1_encoded_len();
        Ok(Avatar {
            sn_u: SerialNumber(d.array()?),
            aid: d.bytes()?.to_vec(),
            sn_p: SerialNumber(d.array()?),
            sigma: suite.g1_from_bytes(d.fixed(n)?)?,
            h: suite.g1_from_bytes(d.fixed(n)?)?,
            vid: d.option(|d| Vid::decode(suite, d))?,
            pid: d.option(|d| Pid::decode(suite, d))?,
        })
    }

    pub fn to_bytes(&self, suite: &S) -> Vec<u8> {
        let mut e = Encoder::new();
        self.encode(suite, &mut e);
        e.finish()
    }

    pub fn from_bytes(suite: &S, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let a = Self::decode(suite, &mut d)?;
        d.finish()?;
        Ok(a)
    }

    /// Debug rendering for command-line output. Never hashed.
    pub fn to_json(&self, suite: &S) -> Value {
        let identity = |message: &[u8], check: &S::G1| {
            json!({
                "message_len": message.len(),
                "message_sha256": hex::encode(Sha256::digest(message)),
                "check": hex::encode(suite.g1_to_bytes(check)),
            })
        };
        json!({
            "sn_u": self.sn_u.to_hex(),
            "aid": String::from_utf8_lossy(&self.aid),
            "sn_p": self.sn_p.to_hex(),
            "driver_type": self.driver_type().to_string(),
            "sigma": hex::encode(suite.g1_to_bytes(&self.sigma)),
            "h": hex::encode(suite.g1_to_bytes(&self.h)),
            "vid": self.vid.as_ref().map(|v| identity(&v.message, &v.check)),
            "pid": self.pid.as_ref().map(|p| identity(&p.message, &p.check)),
        })
    }
}
