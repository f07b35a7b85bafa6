//! Extensional comparison of lenses.
//!
//! Positions are always covered exhaustively. Directions are enumerated when
//! the space is finite and small, and otherwise drawn from a seeded generator
//! of small-denominator rationals, so reports are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::value::{Elem, PayFn, Payoff, Scalar, Subset, Value, ValueSpace};
use super::Lens;
use crate::error::{Error, Result};
use crate::fincore::Set;

/// Source of direction values for extensional checks.
#[derive(Clone, Debug)]
pub struct DirectionSampler {
    pub seed: u64,
    /// Draws per check when a space is not enumerated.
    pub samples: usize,
    /// Payoff dimension used for `Pay` and payoff-function values.
    pub dim: usize,
    /// Largest finite space enumerated in full.
    pub max_exhaustive: usize,
    /// Numerators are drawn from `[-range, range]`, denominators from `1..=max_denom`.
    pub range: i64,
    pub max_denom: i64,
}

impl DirectionSampler {
    pub fn new(seed: u64, samples: usize, dim: usize) -> DirectionSampler {
        DirectionSampler {
            seed,
            samples,
            dim,
            max_exhaustive: 4096,
            range: 9,
            max_denom: 4,
        }
    }

    fn scalar(&self, rng: &mut ChaCha8Rng) -> Scalar {
        let p = rng.gen_range(-self.range..=self.range);
        let q = rng.gen_range(1..=self.max_denom);
        Scalar::new(p.into(), q.into())
    }

    pub fn payoff(&self, rng: &mut ChaCha8Rng) -> Payoff {
        Payoff::new((0..self.dim).map(|_| self.scalar(rng)).collect())
    }

    pub fn payfn(&self, over: &Set, rng: &mut ChaCha8Rng) -> PayFn {
        PayFn::new(over, (0..over.len()).map(|_| self.payoff(rng)).collect())
            .expect("uniform dimension")
    }

    fn enumeration_size(&self, space: &ValueSpace) -> Option<usize> {
        match space {
            ValueSpace::Unit => Some(1),
            ValueSpace::FinOf(x) => Some(x.len()),
            ValueSpace::SubsetsOf(x) => {
                if x.len() < usize::BITS as usize - 1 {
                    Some(1usize << x.len())
                } else {
                    None
                }
            }
            ValueSpace::Pay | ValueSpace::PayFnOver(_) => None,
            ValueSpace::Pair(a, b) => self
                .enumeration_size(a)?
                .checked_mul(self.enumeration_size(b)?),
        }
    }

    fn enumerate(space: &ValueSpace) -> Vec<Value> {
        match space {
            ValueSpace::Unit => vec![Value::Unit],
            ValueSpace::FinOf(x) => (0..x.len()).map(|i| Value::elem(x, i)).collect(),
            ValueSpace::SubsetsOf(x) => (0..1usize << x.len())
                .map(|bits| {
                    let members = (0..x.len()).filter(|i| bits >> i & 1 == 1).collect();
                    Value::Subset(Subset::new(x, members).expect("in range"))
                })
                .collect(),
            ValueSpace::Pair(a, b) => {
                let (xs, ys) = (Self::enumerate(a), Self::enumerate(b));
                xs.iter()
                    .flat_map(|x| ys.iter().map(move |y| Value::pair(x.clone(), y.clone())))
                    .collect()
            }
            ValueSpace::Pay | ValueSpace::PayFnOver(_) => unreachable!("infinite space"),
        }
    }

    /// One random value; `None` when the space is empty.
    pub fn draw(&self, space: &ValueSpace, rng: &mut ChaCha8Rng) -> Option<Value> {
        Some(match space {
            ValueSpace::Unit => Value::Unit,
            ValueSpace::Pay => Value::Pay(self.payoff(rng)),
            ValueSpace::PayFnOver(x) => Value::PayFn(self.payfn(x, rng)),
            ValueSpace::FinOf(x) => {
                if x.is_empty() {
                    return None;
                }
                Value::Elem(Elem::new(x, rng.gen_range(0..x.len())).expect("in range"))
            }
            ValueSpace::SubsetsOf(x) => {
                let members = (0..x.len()).filter(|_| rng.gen_bool(0.5)).collect();
                Value::Subset(Subset::new(x, members).expect("in range"))
            }
            ValueSpace::Pair(a, b) => Value::pair(self.draw(a, rng)?, self.draw(b, rng)?),
        })
    }

    /// Directions to test for a space: all of them when finite and small,
    /// otherwise `samples` seeded draws.
    pub fn directions(&self, space: &ValueSpace) -> Vec<Value> {
        match self.enumeration_size(space) {
            Some(n) if n <= self.max_exhaustive => Self::enumerate(space),
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..self.samples)
                    .map_while(|_| self.draw(space, &mut rng))
                    .collect()
            }
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

impl Default for DirectionSampler {
    fn default() -> Self {
        DirectionSampler::new(0x5eed, 20, 2)
    }
}

/// The first disagreement found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub position: String,
    /// `None` when the forward tables disagree.
    pub direction: Option<String>,
    pub left: String,
    pub right: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtReport {
    pub equal: bool,
    /// Number of (position, direction) pairs evaluated.
    pub checked: usize,
    pub witness: Option<Witness>,
}

/// Compares two lenses with equal boundaries on every position and on the
/// directions supplied by `sampler`.
pub fn lens_extensional_eq(l: &Lens, m: &Lens, sampler: &DirectionSampler) -> Result<ExtReport> {
    if l.dom() != m.dom() || l.cod() != m.cod() {
        return Err(Error::Boundary {
            expected: format!("{} ⇄ {}", l.dom(), l.cod()),
            found: format!("{} ⇄ {}", m.dom(), m.cod()),
        });
    }
    let pos = &l.dom().pos;
    for x in 0..pos.len() {
        let (a, b) = (l.forward(x), m.forward(x));
        if a != b {
            return Ok(ExtReport {
                equal: false,
                checked: 0,
                witness: Some(Witness {
                    position: pos.label(x).to_string(),
                    direction: None,
                    left: l.cod().pos.label(a).to_string(),
                    right: m.cod().pos.label(b).to_string(),
                }),
            });
        }
    }
    let dirs = sampler.directions(&l.cod().dir);
    let outcomes: Vec<Option<Witness>> = (0..pos.len())
        .into_par_iter()
        .map(|x| -> Result<Option<Witness>> {
            for d in &dirs {
                let (a, b) = (l.backward(x, d)?, m.backward(x, d)?);
                if a != b {
                    return Ok(Some(Witness {
                        position: pos.label(x).to_string(),
                        direction: Some(format!("{d:?}")),
                        left: format!("{a:?}"),
                        right: format!("{b:?}"),
                    }));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    let witness = outcomes.into_iter().flatten().next();
    Ok(ExtReport {
        equal: witness.is_none(),
        checked: pos.len() * dirs.len(),
        witness,
    })
}
