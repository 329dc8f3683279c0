use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of sites a packed Pauli string can address.
pub const MAX_SITES: usize = 64;

/// Single-site Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Product `self * other` as `(power of i, letter)`.
    pub fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (a, b) if a == b => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
            _ => unreachable!(),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl TryFrom<char> for Pauli {
    type Error = Error;

    fn try_from(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidArgument(format!("not a Pauli letter: {other:?}"))),
        }
    }
}

/// A tensor product of single-site Pauli letters over `n` sites.
///
/// Stored in symplectic form: bit `j` of `x` / `z` marks an X / Z component
/// on site `j`, with Y carrying both. The string itself carries no phase; the
/// weight of a term lives in [`Operator`](super::Operator).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: u8,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_SITES, "at most {MAX_SITES} sites supported");
        Self { n: n as u8, x: 0, z: 0 }
    }

    /// A string with the given letters at the given sites and identity elsewhere.
    pub fn from_sites(n: usize, letters: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(n);
        for &(site, p) in letters {
            if site >= n {
                return Err(Error::InvalidArgument(format!("site {site} out of range for {n} sites")));
            }
            s.set(site, p);
        }
        Ok(s)
    }

    pub fn single(n: usize, site: usize, p: Pauli) -> Self {
        Self::from_sites(n, &[(site, p)]).expect("site in range")
    }

    pub fn from_letters(letters: &[Pauli]) -> Self {
        let mut s = Self::identity(letters.len());
        for (j, &p) in letters.iter().enumerate() {
            s.set(j, p);
        }
        s
    }

    pub fn num_sites(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn get(&self, site: usize) -> Pauli {
        Pauli::from_bits(self.x >> site & 1 == 1, self.z >> site & 1 == 1)
    }

    pub fn set(&mut self, site: usize, p: Pauli) {
        let (x, z) = p.bits();
        let bit = 1u64 << site;
        self.x = if x { self.x | bit } else { self.x & !bit };
        self.z = if z { self.z | bit } else { self.z & !bit };
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.num_sites()).map(|j| self.get(j)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Sites carrying a non-identity letter, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mask = self.x | self.z;
        (0..self.num_sites()).filter(|&j| mask >> j & 1 == 1).collect()
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    /// Number of Y letters.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn anticommutes(&self, other: &PauliString) -> bool {
        debug_assert_eq!(self.n, other.n);
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 1
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        !self.anticommutes(other)
    }

    /// Product `self * other` as `(phase, string)` with phase in {±1, ±i}.
    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        debug_assert_eq!(self.n, other.n);
        let mut power = 0u8;
        let overlap = (self.x | self.z) & (other.x | other.z);
        for j in 0..self.num_sites() {
            if overlap >> j & 1 == 1 {
                let (k, _) = self.get(j).mul(other.get(j));
                power += k;
            }
        }
        let out = PauliString { n: self.n, x: self.x ^ other.x, z: self.z ^ other.z };
        (i_power(power), out)
    }
}

pub(crate) fn i_power(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// True iff the two strings anticommute.
pub fn pauli_anticommutes(p: &PauliString, q: &PauliString) -> Result<bool> {
    if p.num_sites() != q.num_sites() {
        return Err(Error::SiteMismatch { expected: p.num_sites(), got: q.num_sites() });
    }
    Ok(p.anticommutes(q))
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.num_sites() {
            write!(f, "{}", self.get(j).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses a letter string such as `"XXIZ"`; the first character is site 0.
    fn from_str(s: &str) -> Result<Self> {
        let letters = s.chars().map(Pauli::try_from).collect::<Result<Vec<_>>>()?;
        if letters.len() > MAX_SITES {
            return Err(Error::InvalidArgument(format!("at most {MAX_SITES} sites supported")));
        }
        Ok(Self::from_letters(&letters))
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
