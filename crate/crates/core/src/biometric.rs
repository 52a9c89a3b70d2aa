//! Synthetic iris codes and a masked Hamming-distance matcher.
//!
//! Codes are 2048-bit strings with a validity mask of the same length. Two
//! codes match when their normalized Hamming distance over the bits both
//! masks mark valid is at most [`MATCH_THRESHOLD`].

use rand::distributions::{Bernoulli, Distribution};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

/// Code length in bits.
pub const IRIS_BITS: usize = 2048;
/// Code length in bytes.
pub const IRIS_BYTES: usize = IRIS_BITS / 8;
/// Largest normalized distance still accepted as the same eye.
pub const MATCH_THRESHOLD: f64 = 0.32;
/// Bit-flip probability used by callers that do not choose their own.
pub const DEFAULT_NOISE_RATE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BiometricError {
    #[error("code and mask lengths differ ({code} vs {mask} bytes)")]
    LengthMismatch { code: usize, mask: usize },
    #[error("fewer than half of the mask bits are set")]
    SparseMask,
    #[error("noise rate {0} outside [0, 1]")]
    InvalidNoiseRate(f64),
    #[error("encoded feature has odd length {0}")]
    OddFeature(usize),
}

/// An iris code with its validity mask. Templates and sampled features
/// share this representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IrisCode {
    code: Vec<u8>,
    mask: Vec<u8>,
}

pub type IrisTemplate = IrisCode;
pub type IrisFeature = IrisCode;

impl IrisCode {
    pub fn from_parts(code: Vec<u8>, mask: Vec<u8>) -> Result<Self, BiometricError> {
        if code.len() != mask.len() {
            return Err(BiometricError::LengthMismatch {
                code: code.len(),
                mask: mask.len(),
            });
        }
        let set: u32 = mask.iter().map(|b| b.count_ones()).sum();
        if (set as usize) * 2 < mask.len() * 8 {
            return Err(BiometricError::SparseMask);
        }
        Ok(IrisCode { code, mask })
    }

    pub fn code(&self) -> &[u8] {
        &self.code
    }

    pub fn mask(&self) -> &[u8] {
        &self.mask
    }

    /// `code || mask`, the form embedded in physical-identity messages.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.code.clone();
        out.extend_from_slice(&self.mask);
        out
    }

    /// Inverse of [`IrisCode::to_bytes`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BiometricError> {
        if !bytes.len().is_multiple_of(2) {
            return Err(BiometricError::OddFeature(bytes.len()));
        }
        let (code, mask) = bytes.split_at(bytes.len() / 2);
        Self::from_parts(code.to_vec(), mask.to_vec())
    }

    /// Fraction of set mask bits.
    pub fn mask_coverage(&self) -> f64 {
        let set: u32 = self.mask.iter().map(|b| b.count_ones()).sum();
        set as f64 / (self.mask.len() * 8) as f64
    }
}

/// A full-mask template derived deterministically from `seed`.
pub fn enroll(seed: [u8; 32]) -> IrisTemplate {
    let mut rng = ChaCha20Rng::from_seed(seed);
    let mut code = vec![0u8; IRIS_BYTES];
    rng.fill_bytes(&mut code);
    IrisCode {
        code,
        mask: vec![0xff; IRIS_BYTES],
    }
}

/// A noisy reading of `template`: each code bit flips independently with
/// probability `noise_rate`. The mask is carried over unchanged.
pub fn sample<R: RngCore + ?Sized>(
    template: &IrisTemplate,
    noise_rate: f64,
    rng: &mut R,
) -> Result<IrisFeature, BiometricError> {
    let flip = Bernoulli::new(noise_rate).map_err(|_| BiometricError::InvalidNoiseRate(noise_rate))?;
    let code = template
        .code
        .iter()
        .map(|&byte| {
            (0..8).fold(byte, |acc, bit| {
                if flip.sample(rng) {
                    acc ^ (1 << bit)
                } else {
                    acc
                }
            })
        })
        .collect();
    Ok(IrisCode {
        code,
        mask: template.mask.clone(),
    })
}

/// Normalized Hamming distance over bits valid in both masks. Returns 1.0
/// when the masks share no valid bit.
pub fn distance(a: &IrisCode, b: &IrisCode) -> Result<f64, BiometricError> {
    if a.code.len() != b.code.len() {
        return Err(BiometricError::LengthMismatch {
            code: a.code.len(),
            mask: b.code.len(),
        });
    }
    let mut differing = 0u32;
    let mut valid = 0u32;
    for i in 0..a.code.len() {
        let m = a.mask[i] & b.mask[i];
        valid += m.count_ones();
        differing += ((a.code[i] ^ b.code[i]) & m).count_ones();
    }
    if valid == 0 {
        return Ok(1.0);
    }
    Ok(differing as f64 / valid as f64)
}

/// Whether `feature` was read from the eye enrolled as `template`.
pub fn is_match(feature: &IrisFeature, template: &IrisTemplate) -> Result<bool, BiometricError> {
    Ok(distance(feature, template)? <= MATCH_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed(n: u8) -> [u8; 32] {
        [n; 32]
    }

    #[test]
    fn enroll_is_deterministic_with_full_mask() {
        assert_eq!(enroll(seed(1)), enroll(seed(1)));
        let t = enroll(seed(1));
        assert_eq!(t.code().len(), IRIS_BYTES);
        assert_eq!(t.mask_coverage(), 1.0);
    }

    #[test]
    fn unrelated_templates_sit_near_one_half() {
        let mut total = 0.0;
        for i in 0..100u8 {
            let d = distance(&enroll(seed(i)), &enroll(seed(i.wrapping_add(100)))).unwrap();
            assert!((0.4..0.6).contains(&d), "distance {d}");
            total += d;
        }
        let mean = total / 100.0;
        assert!((mean - 0.5).abs() <= 0.05, "mean {mean}");
    }

    #[test]
    fn noise_extremes() {
        let t = enroll(seed(2));
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let same = sample(&t, 0.0, &mut rng).unwrap();
        assert_eq!(same, t);
        assert!(is_match(&same, &t).unwrap());
        let flipped = sample(&t, 1.0, &mut rng).unwrap();
        assert_eq!(distance(&flipped, &t).unwrap(), 1.0);
        assert!(!is_match(&flipped, &t).unwrap());
        assert_eq!(sample(&t, 1.5, &mut rng), Err(BiometricError::InvalidNoiseRate(1.5)));
    }

    #[test]
    fn default_noise_distance() {
        let t = enroll(seed(3));
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mean: f64 = (0..100)
            .map(|_| distance(&sample(&t, DEFAULT_NOISE_RATE, &mut rng).unwrap(), &t).unwrap())
            .sum::<f64>()
            / 100.0;
        assert!((mean - 0.05).abs() <= 0.02, "mean {mean}");
    }

    #[test]
    fn masked_bits_are_ignored() {
        let t = enroll(seed(4));
        let mut code = t.code().to_vec();
        let mut mask = vec![0xff; IRIS_BYTES];
        for i in 0..IRIS_BYTES / 4 {
            code[i] ^= 0xff;
            mask[i] = 0;
        }
        let partial = IrisCode::from_parts(code, mask).unwrap();
        assert_eq!(distance(&partial, &t).unwrap(), 0.0);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            IrisCode::from_parts(vec![0; 4], vec![0xff; 3]),
            Err(BiometricError::LengthMismatch { .. })
        ));
        assert_eq!(
            IrisCode::from_parts(vec![0; 4], vec![0x0f, 0, 0, 0]),
            Err(BiometricError::SparseMask)
        );
        let short = IrisCode::from_parts(vec![0; 4], vec![0xff; 4]).unwrap();
        assert!(matches!(distance(&short, &enroll(seed(0))), Err(BiometricError::LengthMismatch { .. })));
    }

    #[test]
    fn byte_form_round_trips() {
        let t = enroll(seed(5));
        assert_eq!(IrisCode::from_bytes(&t.to_bytes()).unwrap(), t);
        assert_eq!(IrisCode::from_bytes(&[0; 3]), Err(BiometricError::OddFeature(3)));
    }
}
