//! Serialized signature lengths.

use cps_core::bilinear::PairingSuite;
use cps_core::cps::{self, OriginalSignature, ProxySignature};
use rand::RngCore;
use serde::{Deserialize, Serialize};

/// Bytes of framing before the element encodings.
pub const TAG_BYTES: usize = 1;

/// Measured lengths of one original and one proxy signature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeReport {
    pub element_bytes: usize,
    pub original_elements: usize,
    pub original_bytes: usize,
    pub proxy_elements: usize,
    pub proxy_bytes: usize,
    /// False for backends with toy encodings; their byte counts say nothing
    /// about a real deployment.
    pub conformant: bool,
}

/// Serializes a fresh signature pair and counts elements from the byte
/// lengths.
pub fn measure_sizes<S: PairingSuite, R: RngCore + ?Sized>(suite: &S, rng: &mut R) -> SizeReport {
    let a = cps::keygen(suite, rng);
    let b = cps::keygen(suite, rng);
    let tuple = cps::dgen(suite, &a, b"size probe", b.public(), rng);
    let original = tuple.original_signature().expect("dgen endorses").to_bytes(suite);
    let proxy = ProxySignature::<S> {
        check: cps::psig(suite, &b, &tuple.h, b"size probe'"),
    }
    .to_bytes(suite);
    let element_bytes = suite.g1_encoded_len();
    debug_assert_eq!(original.len(), OriginalSignature::<S>::encoded_len(suite));
    SizeReport {
        element_bytes,
        original_elements: (original.len() - TAG_BYTES) / element_bytes,
        original_bytes: original.len(),
        proxy_elements: (proxy.len() - TAG_BYTES) / element_bytes,
        proxy_bytes: proxy.len(),
        conformant: !suite.is_insecure(),
    }
}

/// `g` group elements plus `z` field elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Length {
    pub g: u32,
    pub z: u32,
}

impl std::fmt::Display for Length {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.g, self.z) {
            (g, 0) => write!(f, "{g}|G|"),
            (g, z) => write!(f, "{g}|G| + {z}|Z|"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ReferenceLength {
    pub scheme: &'static str,
    pub original: Length,
    pub proxy: Length,
}

const fn len(g: u32, z: u32) -> Length {
    Length { g, z }
}

/// The expected lengths for this scheme.
pub const OURS: ReferenceLength = ReferenceLength {
    scheme: "CPS",
    original: len(3, 0),
    proxy: len(1, 0),
};

/// Published lengths for related schemes; never measured here.
pub const REFERENCE_LENGTHS: [ReferenceLength; 4] = [
    ReferenceLength {
        scheme: "Verma (2019)",
        original: len(1, 0),
        proxy: len(1, 0),
    },
    ReferenceLength {
        scheme: "Verma (2020)",
        original: len(1, 1),
        proxy: len(2, 0),
    },
    ReferenceLength {
        scheme: "Qiao (2022)",
        original: len(1, 1),
        proxy: len(3, 1),
    },
    ReferenceLength {
        scheme: "Yang (2020)",
        original: len(4, 1),
        proxy: len(7, 1),
    },
];
