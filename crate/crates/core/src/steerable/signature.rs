use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered `(degree, channels)` pairs with strictly increasing degrees.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct TensorSignature {
    parts: Vec<(usize, usize)>,
}

impl TensorSignature {
    pub fn new(parts: Vec<(usize, usize)>) -> Result<Self> {
        for w in parts.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Shape(format!(
                    "signature degrees must be strictly increasing, got {} after {}",
                    w[1].0, w[0].0
                )));
            }
        }
        if let Some(&(l, _)) = parts.iter().find(|(_, c)| *c == 0) {
            return Err(Error::Shape(format!("degree {l} has zero channels")));
        }
        Ok(Self { parts })
    }

    /// `channels` copies of every degree `0..=l_max`.
    pub fn uniform(l_max: usize, channels: usize) -> Result<Self> {
        Self::new((0..=l_max).map(|l| (l, channels)).collect())
    }

    pub fn parts(&self) -> &[(usize, usize)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.parts.iter().map(|p| p.0)
    }

    pub fn l_max(&self) -> Option<usize> {
        self.parts.last().map(|p| p.0)
    }

    /// Channel count at degree `l`, zero when absent.
    pub fn channels(&self, l: usize) -> usize {
        self.parts.iter().find(|p| p.0 == l).map_or(0, |p| p.1)
    }

    pub fn contains(&self, l: usize) -> bool {
        self.channels(l) > 0
    }

    /// Total number of coefficients, `sum C (2l+1)`.
    pub fn total_len(&self) -> usize {
        self.parts.iter().map(|&(l, c)| c * (2 * l + 1)).sum()
    }

    /// Flat offset of the degree-`l` block.
    pub fn offset(&self, l: usize) -> Option<usize> {
        let mut off = 0;
        for &(d, c) in &self.parts {
            if d == l {
                return Some(off);
            }
            off += c * (2 * d + 1);
        }
        None
    }

    pub fn uniform_channels(&self) -> Option<usize> {
        let c = self.parts.first()?.1;
        self.parts.iter().all(|p| p.1 == c).then_some(c)
    }
}

impl TryFrom<Vec<(usize, usize)>> for TensorSignature {
    type Error = Error;
    fn try_from(v: Vec<(usize, usize)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TensorSignature> for Vec<(usize, usize)> {
    fn from(s: TensorSignature) -> Self {
        s.parts
    }
}

impl std::fmt::Display for TensorSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|(l, c)| format!("{c}x{l}")).collect();
        write!(f, "{}", s.join(" + "))
    }
}
