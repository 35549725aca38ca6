use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

/// Largest supported embedding dimension (manifold dimension + 1 for the
/// curved models).
pub const MAX_AMBIENT: usize = 8;

/// Fixed-capacity coordinate vector. Paths are simulated millions of times,
/// so points and tangent vectors live on the stack.
#[derive(Clone, Copy, PartialEq)]
pub struct Coords {
    len: usize,
    data: [f64; MAX_AMBIENT],
}

impl Coords {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_AMBIENT, "dimension {len} exceeds {MAX_AMBIENT}");
        Coords {
            len,
            data: [0.0; MAX_AMBIENT],
        }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut c = Coords::zeros(values.len());
        c.data[..values.len()].copy_from_slice(values);
        c
    }

    /// Unit vector along axis `i`.
    pub fn basis(len: usize, i: usize) -> Self {
        let mut c = Coords::zeros(len);
        c.data[i] = 1.0;
        c
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.len]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data[..self.len]
    }

    #[inline]
    pub fn dot(&self, other: &Coords) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self + s * other`
    #[inline]
    pub fn axpy(&self, s: f64, other: &Coords) -> Coords {
        let mut out = *self;
        for (o, b) in out.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *o += s * b;
        }
        out
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Coords {
        let mut out = *self;
        for o in out.as_mut_slice() {
            *o *= s;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }
}

impl std::fmt::Debug for Coords {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Index<usize> for Coords {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Coords {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl Add for Coords {
    type Output = Coords;
    #[inline]
    fn add(self, rhs: Coords) -> Coords {
        self.axpy(1.0, &rhs)
    }
}

impl AddAssign for Coords {
    #[inline]
    fn add_assign(&mut self, rhs: Coords) {
        *self = self.axpy(1.0, &rhs);
    }
}

impl Sub for Coords {
    type Output = Coords;
    #[inline]
    fn sub(self, rhs: Coords) -> Coords {
        self.axpy(-1.0, &rhs)
    }
}

impl Mul<f64> for Coords {
    type Output = Coords;
    #[inline]
    fn mul(self, s: f64) -> Coords {
        self.scale(s)
    }
}

impl Serialize for Coords {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Coords {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.len() > MAX_AMBIENT {
            return Err(serde::de::Error::custom(format!(
                "at most {MAX_AMBIENT} coordinates are supported"
            )));
        }
        Ok(Coords::from_slice(&v))
    }
}
