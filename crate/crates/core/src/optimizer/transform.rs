//! Unconstrained parameterization: positive quantities through `ln`, skewness unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{SlsmComponent, SlsmParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotKind {
    Log,
    Identity,
}

/// Flat optimizer vector together with the meaning of each slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedParams<T> {
    pub values: Vec<T>,
    pub slots: Vec<SlotKind>,
}

impl<T: Scalar> TransformedParams<T> {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            values: Vec::with_capacity(n),
            slots: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn push_log(&mut self, v: T, what: &str) -> Result<()> {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{what} must be finite and > 0 for the log transform, got {v}"
            )));
        }
        self.values.push(v.ln());
        self.slots.push(SlotKind::Log);
        Ok(())
    }

    pub fn push_identity(&mut self, v: T) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::NonFinite("identity-transformed parameter"));
        }
        self.values.push(v);
        self.slots.push(SlotKind::Identity);
        Ok(())
    }

    /// Natural-scale value of slot `i` for an arbitrary optimizer vector `x`.
    #[inline]
    pub fn natural(&self, x: &[T], i: usize) -> T {
        match self.slots[i] {
            SlotKind::Log => x[i].exp(),
            SlotKind::Identity => x[i],
        }
    }

    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        if values.len() != self.slots.len() {
            return Err(Error::DimensionMismatch {
                expected: self.slots.len(),
                actual: values.len(),
            });
        }
        Ok(Self {
            values,
            slots: self.slots.clone(),
        })
    }
}

/// `[ln w, ln μ, ln σ, γ]` per component followed by `ln σ_n²`.
pub fn transform<T: Scalar>(p: &SlsmParams<T>) -> Result<TransformedParams<T>> {
    let mut t = TransformedParams::with_capacity(4 * p.q() + 1);
    for c in &p.components {
        t.push_log(c.weight, "weight")?;
        t.push_log(c.freq, "frequency")?;
        t.push_log(c.scale, "scale")?;
        t.push_identity(c.skew)?;
    }
    t.push_log(p.noise_var, "noise variance")?;
    Ok(t)
}

/// Inverse of [`transform`].
pub fn untransform<T: Scalar>(t: &TransformedParams<T>) -> Result<SlsmParams<T>> {
    let n = t.len();
    if n == 0 || !(n - 1).is_multiple_of(4) {
        return Err(Error::InvalidParameter(format!(
            "transformed vector of length {n} does not describe an SLSM parameter set"
        )));
    }
    let x = &t.values;
    let components = (0..(n - 1) / 4)
        .map(|i| SlsmComponent {
            weight: t.natural(x, 4 * i),
            freq: t.natural(x, 4 * i + 1),
            scale: t.natural(x, 4 * i + 2),
            skew: t.natural(x, 4 * i + 3),
        })
        .collect();
    SlsmParams::new(components, t.natural(x, n - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_weight_maps_to_zero() {
        let p = SlsmParams::new(vec![SlsmComponent::new(1.0, 0.5, 0.2, -0.7).unwrap()], 0.1)
            .unwrap();
        let t = transform(&p).unwrap();
        assert_eq!(t.values[0], 0.0);
        assert_eq!(t.values[3], -0.7);
        assert_eq!(t.slots[3], SlotKind::Identity);
    }

    #[test]
    fn nonpositive_log_slot_errors() {
        let p = SlsmParams {
            components: vec![SlsmComponent {
                weight: 1.0,
                freq: 0.0,
                scale: 1.0,
                skew: 0.0,
            }],
            noise_var: 0.1,
        };
        assert!(transform(&p).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(
            comps in proptest::collection::vec(
                (1e-6f64..1e4, 1e-6f64..1e2, 1e-4f64..1e2, -5f64..5.0), 1..6),
            noise in 1e-8f64..10.0,
        ) {
            let p = SlsmParams::new(
                comps.iter().map(|&(w, m, s, g)| SlsmComponent::new(w, m, s, g).unwrap()).collect(),
                noise,
            ).unwrap();
            let back = untransform(&transform(&p).unwrap()).unwrap();
            let rel = |a: f64, b: f64| if a == 0.0 { b.abs() } else { ((a - b) / a).abs() };
            for (a, b) in p.components.iter().zip(&back.components) {
                prop_assert!(rel(a.weight, b.weight) < 1e-12);
                prop_assert!(rel(a.freq, b.freq) < 1e-12);
                prop_assert!(rel(a.scale, b.scale) < 1e-12);
                prop_assert_eq!(a.skew, b.skew);
            }
            prop_assert!(rel(p.noise_var, back.noise_var) < 1e-12);
        }
    }
}
