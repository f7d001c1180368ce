use std::fmt;
use std::str::FromStr;

use super::vec3::Axis;
use crate::error::{Error, Result};

/// Per-qubit factor of a multi-index: identity or one spin axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Id,
    Spin(Axis),
}

impl Slot {
    pub const ALL: [Slot; 4] = [
        Slot::Id,
        Slot::Spin(Axis::X),
        Slot::Spin(Axis::Y),
        Slot::Spin(Axis::Z),
    ];

    /// 0 for the identity, 1..=3 for x, y, z.
    pub fn code(self) -> usize {
        match self {
            Slot::Id => 0,
            Slot::Spin(a) => a.index() + 1,
        }
    }

    pub fn from_code(c: usize) -> Slot {
        Self::ALL[c & 3]
    }

    pub fn axis(self) -> Option<Axis> {
        match self {
            Slot::Id => None,
            Slot::Spin(a) => Some(a),
        }
    }
}

/// Multi-index μ ∈ {0, x, y, z}^N labelling a product of spin components.
///
/// Qubit 0 is the most significant base-4 digit of [`MultiIndex::flat`], which
/// matches the tensor-product ordering of the dense operators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    slots: Vec<Slot>,
}

impl MultiIndex {
    pub fn new(slots: Vec<Slot>) -> Self {
        MultiIndex { slots }
    }

    pub fn identity(n: usize) -> Self {
        MultiIndex {
            slots: vec![Slot::Id; n],
        }
    }

    /// Product over the listed `(qubit, axis)` factors, identity elsewhere.
    pub fn from_factors(n: usize, factors: &[(usize, Axis)]) -> Result<Self> {
        let mut slots = vec![Slot::Id; n];
        for &(q, a) in factors {
            if q >= n {
                return Err(Error::Argument(format!("qubit {q} out of range for {n} qubits")));
            }
            if slots[q] != Slot::Id {
                return Err(Error::Argument(format!("qubit {q} appears twice")));
            }
            slots[q] = Slot::Spin(a);
        }
        Ok(MultiIndex { slots })
    }

    pub fn from_flat(n: usize, flat: usize) -> Self {
        let slots = (0..n)
            .map(|q| Slot::from_code(flat >> (2 * (n - 1 - q))))
            .collect();
        MultiIndex { slots }
    }

    pub fn flat(&self) -> usize {
        self.slots.iter().fold(0, |acc, s| (acc << 2) | s.code())
    }

    pub fn n_qubits(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Number of non-identity factors, |μ|.
    pub fn weight(&self) -> usize {
        self.slots.iter().filter(|s| **s != Slot::Id).count()
    }

    /// Non-identity factors in qubit order.
    pub fn factors(&self) -> impl Iterator<Item = (usize, Axis)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(q, s)| s.axis().map(|a| (q, a)))
    }

    /// All 4^n multi-indices in flat order.
    pub fn all(n: usize) -> impl Iterator<Item = MultiIndex> {
        (0..1usize << (2 * n)).map(move |f| MultiIndex::from_flat(n, f))
    }

    /// Dotted name, e.g. `z.0.x`.
    pub fn name(&self) -> String {
        self.to_string()
    }
}

/// Number of non-identity digits of a flat index.
pub fn flat_weight(n: usize, flat: usize) -> usize {
    (0..n).filter(|q| (flat >> (2 * q)) & 3 != 0).count()
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.slots.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            match s {
                Slot::Id => f.write_str("0")?,
                Slot::Spin(a) => write!(f, "{}", a.letter())?,
            }
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let slots = s
            .split('.')
            .map(|p| match p.trim() {
                "0" | "1" | "i" | "I" => Ok(Slot::Id),
                "x" | "X" => Ok(Slot::Spin(Axis::X)),
                "y" | "Y" => Ok(Slot::Spin(Axis::Y)),
                "z" | "Z" => Ok(Slot::Spin(Axis::Z)),
                other => Err(Error::Argument(format!(
                    "bad slot {other:?} in multi-index {s:?} (expected 0, x, y or z)"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiIndex { slots })
    }
}
