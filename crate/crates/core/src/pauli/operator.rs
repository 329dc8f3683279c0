use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::string::PauliString;
use crate::error::{Error, Result};

/// Weights smaller than this are dropped when terms are merged.
pub const ZERO_TOL: f64 = 1e-14;

/// A weighted sum of Pauli strings over a fixed number of sites.
///
/// Terms are keyed by their letters, so two operators with the same terms
/// compare equal regardless of construction order.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    n: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl Operator {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut op = Self::zero(n);
        for (p, w) in terms {
            op.try_add_term(p, w)?;
        }
        Ok(op)
    }

    pub fn from_real_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        Self::from_terms(n, terms.into_iter().map(|(p, w)| (p, Complex64::new(w, 0.0))))
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> + '_ {
        self.terms.iter()
    }

    /// Terms with real weights; panics in debug builds if a weight has an
    /// imaginary part above tolerance.
    pub fn real_terms(&self) -> impl Iterator<Item = (PauliString, f64)> + '_ {
        self.terms.iter().map(|(p, w)| {
            debug_assert!(w.im.abs() < 1e-10, "non-real weight on {p}");
            (*p, w.re)
        })
    }

    pub fn weight_of(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    pub fn try_add_term(&mut self, p: PauliString, w: Complex64) -> Result<()> {
        if p.num_sites() != self.n {
            return Err(Error::SiteMismatch { expected: self.n, got: p.num_sites() });
        }
        self.add_term(p, w);
        Ok(())
    }

    /// Adds `w * p`, merging with an existing term and dropping it if the
    /// merged weight vanishes.
    pub fn add_term(&mut self, p: PauliString, w: Complex64) {
        debug_assert_eq!(p.num_sites(), self.n);
        let entry = self.terms.entry(p).or_default();
        *entry += w;
        if entry.norm() < ZERO_TOL {
            self.terms.remove(&p);
        }
    }

    pub fn add_real(&mut self, p: PauliString, w: f64) {
        self.add_term(p, Complex64::new(w, 0.0));
    }

    pub fn is_hermitian(&self) -> bool {
        self.terms.values().all(|w| w.im.abs() < 1e-12)
    }

    pub fn scale(&self, s: Complex64) -> Operator {
        let mut out = Operator::zero(self.n);
        for (p, w) in &self.terms {
            out.add_term(*p, w * s);
        }
        out
    }

    pub fn scale_real(&self, s: f64) -> Operator {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Operator product `self * other`.
    pub fn product(&self, other: &Operator) -> Operator {
        assert_eq!(self.n, other.n, "site count mismatch");
        let mut out = Operator::zero(self.n);
        for (a, wa) in &self.terms {
            for (b, wb) in &other.terms {
                let (phase, ab) = a.mul(b);
                out.add_term(ab, wa * wb * phase);
            }
        }
        out
    }

    /// `[self, other]`, using that commuting strings contribute nothing and
    /// anticommuting ones contribute `2 a b`.
    pub fn commutator(&self, other: &Operator) -> Operator {
        assert_eq!(self.n, other.n, "site count mismatch");
        let mut out = Operator::zero(self.n);
        for (a, wa) in &self.terms {
            for (b, wb) in &other.terms {
                if a.anticommutes(b) {
                    let (phase, ab) = a.mul(b);
                    out.add_term(ab, wa * wb * phase * 2.0);
                }
            }
        }
        out
    }

    /// Sub-operator of the terms anticommuting with `p`.
    pub fn anticommuting_part(&self, p: &PauliString) -> Operator {
        let mut out = Operator::zero(self.n);
        for (q, w) in &self.terms {
            if q.anticommutes(p) {
                out.add_term(*q, *w);
            }
        }
        out
    }

    /// Largest absolute difference between corresponding weights.
    pub fn max_weight_diff(&self, other: &Operator) -> f64 {
        let mut worst: f64 = 0.0;
        for (p, w) in &self.terms {
            worst = worst.max((w - other.weight_of(p)).norm());
        }
        for (p, w) in &other.terms {
            if !self.terms.contains_key(p) {
                worst = worst.max(w.norm());
            }
        }
        worst
    }

    /// Serializable form: a list of `{pauli, weight}` records.
    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(p, w)| TermRecord {
                pauli: p.to_string(),
                weight: w.re,
                weight_imag: (w.im != 0.0).then_some(w.im),
            })
            .collect()
    }

    pub fn from_records(records: &[TermRecord]) -> Result<Operator> {
        let first = records
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty operator record list".into()))?;
        let n = first.pauli.len();
        let mut op = Operator::zero(n);
        for r in records {
            let p: PauliString = r.pauli.parse()?;
            op.try_add_term(p, Complex64::new(r.weight, r.weight_imag.unwrap_or(0.0)))?;
        }
        Ok(op)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_records())?)
    }

    pub fn from_json(s: &str) -> Result<Operator> {
        let records: Vec<TermRecord> = serde_json::from_str(s)?;
        Operator::from_records(&records)
    }
}

/// One serialized term of an [`Operator`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub pauli: String,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_imag: Option<f64>,
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.n, rhs.n, "site count mismatch");
        let mut out = self.clone();
        for (p, w) in &rhs.terms {
            out.add_term(*p, *w);
        }
        out
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        self + &(-rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;

    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        self.product(rhs)
    }
}
