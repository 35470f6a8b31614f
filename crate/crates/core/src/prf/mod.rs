//! Keyed pseudorandom Boolean functions and the distinguisher harness.
//!
//! The family is Speck64/128 (27 rounds) with the input label placed in the
//! plaintext block and the output truncated to its lowest bit. Nothing here
//! tests quantum security; that property is assumed of the family and only
//! checked statistically by [`battery`].

mod distinguisher;

pub use distinguisher::{
    distinguisher_run, estimate_advantage, AdvantageIntervals, DistinguisherLearner, DistinguisherReport, OracleKind,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::stats::{wilson_interval, Interval};

const ROUNDS: usize = 27;

/// Description of the PRF family. Results are tagged with `version`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrfSpec {
    pub key_bits: usize,
    pub construction: String,
    pub version: String,
}

impl Default for PrfSpec {
    fn default() -> Self {
        PrfSpec { key_bits: 128, construction: "speck64/128-lsb".into(), version: "v1".into() }
    }
}

impl PrfSpec {
    pub fn tag(&self) -> String {
        format!("{}-{}", self.construction, self.version)
    }
}

/// A 128-bit key with its round keys expanded once.
#[derive(Clone, PartialEq, Eq)]
pub struct PrfKey {
    bytes: [u8; 16],
    round_keys: [u32; ROUNDS],
}

impl std::fmt::Debug for PrfKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PrfKey({})", self.to_hex())
    }
}

impl PrfKey {
    /// Key bytes are little-endian words `k0, l0, l1, l2`.
    pub fn from_bytes(bytes: [u8; 16]) -> Self {
        let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
        let mut k = word(0);
        let mut l = [word(1), word(2), word(3)];
        let mut round_keys = [0u32; ROUNDS];
        for (i, rk) in round_keys.iter_mut().enumerate() {
            *rk = k;
            let li = (k.wrapping_add(l[i % 3].rotate_right(8))) ^ i as u32;
            l[i % 3] = li;
            k = k.rotate_left(3) ^ li;
        }
        PrfKey { bytes, round_keys }
    }

    pub fn bytes(&self) -> &[u8; 16] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.bytes)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let raw = hex::decode(s).map_err(|e| Error::Parse(format!("bad key hex: {e}")))?;
        let bytes: [u8; 16] =
            raw.try_into().map_err(|v: Vec<u8>| Error::Parse(format!("key must be 16 bytes, got {}", v.len())))?;
        Ok(Self::from_bytes(bytes))
    }

    /// Speck64/128 block encryption of `(x, y)`.
    pub fn encrypt_block(&self, mut x: u32, mut y: u32) -> (u32, u32) {
        for &k in &self.round_keys {
            x = x.rotate_right(8).wrapping_add(y) ^ k;
            y = y.rotate_left(3) ^ x;
        }
        (x, y)
    }
}

pub fn sample_key<R: Rng + ?Sized>(spec: &PrfSpec, rng: &mut R) -> PrfKey {
    debug_assert_eq!(spec.key_bits, 128);
    PrfKey::from_bytes(rng.random())
}

/// Evaluates the PRF on an integer label of `n <= 56` bits.
///
/// The input length occupies the top byte of the block, so functions on
/// different `n` are independent members of the family.
#[inline]
pub fn prf_eval_index(key: &PrfKey, n: usize, y: u64) -> bool {
    debug_assert!(n <= 56 && (n == 64 || y >> n == 0));
    let block = y | ((n as u64) << 56);
    let (_, lo) = key.encrypt_block((block >> 32) as u32, block as u32);
    lo & 1 == 1
}

pub fn prf_eval(_spec: &PrfSpec, key: &PrfKey, y: &BitVec) -> Result<bool> {
    if y.len() > 56 {
        return Err(Error::dim(format!("PRF input of {} bits exceeds 56", y.len())));
    }
    Ok(prf_eval_index(key, y.len(), y.as_u64()))
}

/// Output of the statistical battery. Each `z` is a standardized deviation
/// from the ideal random function.
#[derive(Clone, Debug, Serialize)]
pub struct BatteryReport {
    pub samples: usize,
    pub balance_mean: f64,
    pub balance_z: f64,
    pub avalanche_rate: f64,
    pub avalanche_z: f64,
    /// Largest |z| over correlations of each key bit and each input bit with the output.
    pub max_correlation_z: f64,
    pub balance_ci: Interval,
}

impl BatteryReport {
    pub fn passes(&self, sigmas: f64) -> bool {
        self.balance_z.abs() <= sigmas && self.avalanche_z.abs() <= sigmas && self.max_correlation_z <= sigmas
    }
}

/// Balance, single-bit avalanche, and first-order key/input correlation over
/// `samples` random (key, input) pairs at input length `n`.
pub fn battery<R: Rng + ?Sized>(spec: &PrfSpec, n: usize, samples: usize, rng: &mut R) -> BatteryReport {
    let mut ones = 0usize;
    let mut flips = 0usize;
    // Agreement counts of output with each key bit and each input bit.
    let mut key_agree = vec![0usize; 128];
    let mut input_agree = vec![0usize; n];
    for _ in 0..samples {
        let key = sample_key(spec, rng);
        let y: u64 = rng.random::<u64>() & ((1u64 << n) - 1);
        let out = prf_eval_index(&key, n, y);
        ones += out as usize;
        let j = rng.random_range(0..n);
        flips += (out != prf_eval_index(&key, n, y ^ (1 << j))) as usize;
        for (b, agree) in key_agree.iter_mut().enumerate() {
            let kb = (key.bytes[b / 8] >> (b % 8)) & 1 == 1;
            *agree += (kb == out) as usize;
        }
        for (b, agree) in input_agree.iter_mut().enumerate() {
            *agree += (((y >> b) & 1 == 1) == out) as usize;
        }
    }
    let s = samples as f64;
    let z = |count: usize| (count as f64 / s - 0.5) / (0.25 / s).sqrt();
    let max_correlation_z = key_agree.iter().chain(&input_agree).map(|&c| z(c).abs()).fold(0.0, f64::max);
    BatteryReport {
        samples,
        balance_mean: ones as f64 / s,
        balance_z: z(ones),
        avalanche_rate: flips as f64 / s,
        avalanche_z: z(flips),
        max_correlation_z,
        balance_ci: wilson_interval(ones, samples),
    }
}
