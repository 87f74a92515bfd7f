//! States, Euclidean distance, and the seeded random source shared by every
//! planner component.
//!
//! A [`State`] is a point in a 2D or 3D world. It is stored inline as three
//! coordinates plus a dimension tag so that it stays `Copy`; 2D states carry a
//! zero third coordinate that never participates in arithmetic.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

/// A point in a 2D or 3D world, in world units.
#[derive(Clone, Copy, PartialEq)]
pub struct State {
    coords: [f64; 3],
    dim: u8,
}

impl State {
    /// Builds a state from a coordinate slice of length 2 or 3.
    pub fn new(coords: &[f64]) -> Result<Self> {
        if !(2..=3).contains(&coords.len()) {
            return Err(contract(format!(
                "state dimension must be 2 or 3, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(contract(format!("non-finite coordinate in {coords:?}")));
        }
        let mut c = [0.0; 3];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self {
            coords: c,
            dim: coords.len() as u8,
        })
    }

    /// 2D state. Panics on non-finite input.
    pub fn xy(x: f64, y: f64) -> Self {
        Self::new(&[x, y]).expect("finite 2D coordinates")
    }

    /// 3D state. Panics on non-finite input.
    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Self::new(&[x, y, z]).expect("finite 3D coordinates")
    }

    /// The origin in `dim` dimensions.
    pub fn zeros(dim: usize) -> Self {
        assert!((2..=3).contains(&dim), "dimension must be 2 or 3");
        Self {
            coords: [0.0; 3],
            dim: dim as u8,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim()]
    }

    #[inline]
    pub fn get(&self, axis: usize) -> f64 {
        self.coords()[axis]
    }

    /// Coordinates padded to three components (z = 0 in 2D).
    #[inline]
    pub fn padded(&self) -> [f64; 3] {
        self.coords
    }

    /// Euclidean distance. Panics if the dimensions differ; use
    /// [`State::try_distance`] for a checked variant.
    #[inline]
    pub fn distance(&self, other: &State) -> f64 {
        assert_eq!(
            self.dim, other.dim,
            "contract violation: distance between states of different dimension"
        );
        self.distance_unchecked(other)
    }

    pub fn try_distance(&self, other: &State) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self.distance_unchecked(other))
    }

    #[inline]
    fn distance_unchecked(&self, other: &State) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim() {
            let d = self.coords[i] - other.coords[i];
            acc += d * d;
        }
        acc.sqrt()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.coords().iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `self + t * (other - self)`.
    #[inline]
    pub fn lerp(&self, other: &State, t: f64) -> State {
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] = self.coords[i] + t * (other.coords[i] - self.coords[i]);
        }
        out
    }

    pub(crate) fn from_padded(coords: [f64; 3], dim: usize) -> State {
        let mut c = coords;
        for v in c.iter_mut().skip(dim) {
            *v = 0.0;
        }
        State {
            coords: c,
            dim: dim as u8,
        }
    }

    pub(crate) fn map(&self, mut f: impl FnMut(usize, f64) -> f64) -> State {
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] = f(i, self.coords[i]);
        }
        out
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("State")?;
        f.debug_list().entries(self.coords()).finish()
    }
}

impl Serialize for State {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim()))?;
        for c in self.coords() {
            seq.serialize_element(c)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for State {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct StateVisitor;
        impl<'de> Visitor<'de> for StateVisitor {
            type Value = State;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an array of 2 or 3 finite numbers")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<State, A::Error> {
                let mut coords = Vec::with_capacity(3);
                while let Some(v) = seq.next_element::<f64>()? {
                    coords.push(v);
                }
                State::new(&coords).map_err(de::Error::custom)
            }
        }
        deserializer.deserialize_seq(StateVisitor)
    }
}

/// Euclidean distance between two states.
#[inline]
pub fn distance(a: &State, b: &State) -> f64 {
    a.distance(b)
}

/// Seeded random source. Identical seed, stream and call sequence produce
/// bit-identical outputs.
#[derive(Clone, Debug)]
pub struct RngHandle {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngHandle {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent stream derived from the same seed.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh handle on another stream of this handle's seed. The parent's
    /// position is unaffected.
    pub fn substream(&self, stream: u64) -> Self {
        Self::with_stream(self.seed, stream)
    }
}

impl RngCore for RngHandle {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Uniform sample from the axis-aligned box `[lo, hi]`.
pub fn sample_uniform_box(lo: &State, hi: &State, rng: &mut RngHandle) -> Result<State> {
    if lo.dim() != hi.dim() {
        return Err(Error::DimensionMismatch {
            expected: lo.dim(),
            got: hi.dim(),
        });
    }
    if let Some(axis) = (0..lo.dim()).find(|&i| lo.get(i) > hi.get(i)) {
        return Err(contract(format!(
            "box lower corner exceeds upper corner on axis {axis}"
        )));
    }
    Ok(sample_box_unchecked(lo, hi, rng))
}

#[inline]
pub(crate) fn sample_box_unchecked(lo: &State, hi: &State, rng: &mut RngHandle) -> State {
    lo.map(|i, l| {
        let u: f64 = rng.random();
        l + (hi.get(i) - l) * u
    })
}

/// Uniform sample from the closed unit ball in `dim` dimensions.
///
/// Direction is a normalized Gaussian vector and the radius is `u^(1/d)`.
pub fn sample_unit_ball(dim: usize, rng: &mut RngHandle) -> Result<State> {
    if !(2..=3).contains(&dim) {
        return Err(contract(format!("unit ball dimension must be 2 or 3, got {dim}")));
    }
    let mut dir = [0.0; 3];
    let norm = loop {
        let mut acc = 0.0;
        for d in dir.iter_mut().take(dim) {
            *d = rng.sample::<f64, _>(StandardNormal);
            acc += *d * *d;
        }
        if acc > 1e-24 {
            break acc.sqrt();
        }
    };
    let u: f64 = rng.random();
    let radius = u.powf(1.0 / dim as f64);
    for d in dir.iter_mut().take(dim) {
        *d *= radius / norm;
    }
    Ok(State::from_padded(dir, dim))
}
