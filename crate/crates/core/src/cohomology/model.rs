use std::collections::BTreeMap;

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::poly::{HomogeneousPoly, Monomial};
use super::rational::{qi, serde_q, ClassVector, Rational};
use super::CohomologyError;

/// Symmetric n-linear form on the basis of H^{1,1}; entries keyed by sorted index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectionTensor {
    degree: usize,
    basis_len: usize,
    entries: BTreeMap<Vec<usize>, Rational>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    index: Vec<usize>,
    #[serde(with = "serde_q")]
    value: Rational,
}

impl IntersectionTensor {
    pub fn new(degree: usize, basis_len: usize) -> Self {
        Self {
            degree,
            basis_len,
            entries: BTreeMap::new(),
        }
    }

    /// Sets the entry for `index` and, implicitly, all its permutations.
    pub fn set(&mut self, index: &[usize], value: Rational) -> Result<(), CohomologyError> {
        let key = self.key(index)?;
        if value.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, value);
        }
        Ok(())
    }

    pub fn with(mut self, index: &[usize], value: Rational) -> Self {
        self.set(index, value).expect("valid tensor index");
        self
    }

    fn key(&self, index: &[usize]) -> Result<Vec<usize>, CohomologyError> {
        if index.len() != self.degree || index.iter().any(|&i| i >= self.basis_len) {
            return Err(CohomologyError::InvalidModel(format!(
                "tensor index {index:?} out of range for degree {} on {} basis elements",
                self.degree, self.basis_len
            )));
        }
        let mut key = index.to_vec();
        key.sort_unstable();
        Ok(key)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis_len(&self) -> usize {
        self.basis_len
    }

    pub fn get(&self, index: &[usize]) -> Rational {
        self.key(index)
            .ok()
            .and_then(|k| self.entries.get(&k).cloned())
            .unwrap_or_else(Rational::zero)
    }

    /// Multilinear evaluation T(a_1, ..., a_n).
    pub fn eval(&self, args: &[&ClassVector]) -> Result<Rational, CohomologyError> {
        if args.len() != self.degree {
            return Err(CohomologyError::DimensionMismatch {
                expected: self.degree,
                got: args.len(),
            });
        }
        for a in args {
            a.check_len(self.basis_len)?;
        }
        let mut total = Rational::zero();
        let mut index = vec![0usize; self.degree];
        loop {
            let entry = self.get(&index);
            if !entry.is_zero() {
                let product = index
                    .iter()
                    .zip(args)
                    .fold(entry, |acc, (&i, a)| acc * &a.coords()[i]);
                total += product;
            }
            // Odometer over basis^degree.
            let mut pos = 0;
            loop {
                if pos == self.degree {
                    return Ok(total);
                }
                index[pos] += 1;
                if index[pos] < self.basis_len {
                    break;
                }
                index[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Top self-intersection `a^n`.
    pub fn power(&self, a: &ClassVector) -> Result<Rational, CohomologyError> {
        let args = vec![a; self.degree];
        self.eval(&args)
    }

    /// Linear functional `a ↦ T(a, b, ..., b)` with `degree - 1` copies of `b`.
    pub fn pairing_with(&self, b: &ClassVector) -> Result<Vec<Rational>, CohomologyError> {
        (0..self.basis_len)
            .map(|i| {
                let mut e = ClassVector::zeros(self.basis_len).coords().to_vec();
                e[i] = qi(1);
                let e = ClassVector::new(e);
                let mut args = vec![b; self.degree];
                args[0] = &e;
                self.eval(&args)
            })
            .collect()
    }

    /// The homogeneous polynomial `a ↦ T(a, ..., a)`.
    pub fn to_poly(&self) -> HomogeneousPoly {
        let terms = self
            .entries
            .iter()
            .map(|(key, value)| {
                let mut exponents = vec![0u32; self.basis_len];
                for &i in key {
                    exponents[i] += 1;
                }
                // Number of distinct orderings of the multi-index.
                let mut count = factorial(self.degree);
                for &e in &exponents {
                    count /= factorial(e as usize);
                }
                Monomial {
                    exponents,
                    coeff: value * qi(count as i64),
                }
            })
            .collect();
        HomogeneousPoly { terms }
    }
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

impl Serialize for IntersectionTensor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<TensorEntry> = self
            .entries
            .iter()
            .map(|(k, v)| TensorEntry {
                index: k.clone(),
                value: v.clone(),
            })
            .collect();
        entries.serialize(s)
    }
}

/// Constraint in a cone specification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeConstraint {
    pub label: String,
    pub functional: HomogeneousPoly,
}

/// Kähler iff every functional is > 0; nef iff every functional is ≥ 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConeSpec {
    pub constraints: Vec<ConeConstraint>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubvarietyEntry {
    pub label: String,
    pub dim: usize,
    /// `a ↦ ∫_V a^dim`, homogeneous of degree `dim`.
    pub restriction: HomogeneousPoly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kodaira {
    MinusInfinity,
    Finite(u32),
}

impl Serialize for Kodaira {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Kodaira::MinusInfinity => s.serialize_str("-inf"),
            Kodaira::Finite(k) => s.serialize_u32(*k),
        }
    }
}

impl<'de> Deserialize<'de> for Kodaira {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(k) => Ok(Kodaira::Finite(k)),
            Raw::Text(t) if t == "-inf" || t == "minus-infinity" => Ok(Kodaira::MinusInfinity),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad kodaira value {t:?}"))),
        }
    }
}

/// Finite presentation of H^{1,1}(X, R) together with the data the flow needs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifoldModel {
    pub name: String,
    /// Complex dimension.
    pub n: usize,
    pub basis: Vec<String>,
    /// Unit in which `tensor` values are expressed (e.g. `"(2π)^2"`).
    pub volume_unit: String,
    /// How the stored coordinates relate to the usual geometric ones.
    pub coordinate_note: String,
    pub tensor: IntersectionTensor,
    pub c1twopi: ClassVector,
    pub cone: ConeSpec,
    pub catalogue: Vec<SubvarietyEntry>,
    pub kodaira: Kodaira,
}

#[derive(Deserialize)]
struct RawModel {
    name: String,
    n: usize,
    basis: Vec<String>,
    #[serde(default)]
    volume_unit: String,
    #[serde(default)]
    coordinate_note: String,
    tensor: Vec<TensorEntry>,
    c1twopi: ClassVector,
    cone: ConeSpec,
    #[serde(default)]
    catalogue: Vec<SubvarietyEntry>,
    kodaira: Kodaira,
}

impl<'de> Deserialize<'de> for ManifoldModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawModel::deserialize(d)?;
        let mut tensor = IntersectionTensor::new(raw.n, raw.basis.len());
        let mut seen: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        for entry in raw.tensor {
            let key = tensor.key(&entry.index).map_err(serde::de::Error::custom)?;
            if let Some(prev) = seen.get(&key) {
                if *prev != entry.value {
                    return Err(serde::de::Error::custom(format!(
                        "tensor entries for permutations of {:?} disagree",
                        entry.index
                    )));
                }
            }
            seen.insert(key, entry.value.clone());
            tensor.set(&entry.index, entry.value).map_err(serde::de::Error::custom)?;
        }
        let model = ManifoldModel {
            name: raw.name,
            n: raw.n,
            basis: raw.basis,
            volume_unit: raw.volume_unit,
            coordinate_note: raw.coordinate_note,
            tensor,
            c1twopi: raw.c1twopi,
            cone: raw.cone,
            catalogue: raw.catalogue,
            kodaira: raw.kodaira,
        };
        model.validate().map_err(serde::de::Error::custom)?;
        Ok(model)
    }
}

impl ManifoldModel {
    pub fn dim_h11(&self) -> usize {
        self.basis.len()
    }

    pub fn validate(&self) -> Result<(), CohomologyError> {
        let m = self.dim_h11();
        if self.n == 0 || m == 0 {
            return Err(CohomologyError::InvalidModel(format!(
                "{}: empty dimension or basis",
                self.name
            )));
        }
        self.c1twopi.check_len(m)?;
        if self.tensor.degree() != self.n || self.tensor.basis_len() != m {
            return Err(CohomologyError::InvalidModel(format!(
                "{}: tensor shape does not match (n, basis)",
                self.name
            )));
        }
        for c in &self.cone.constraints {
            let d = c.functional.validate(m)? as usize;
            if d != 1 && d != self.n {
                return Err(CohomologyError::InvalidModel(format!(
                    "{}: constraint {} has degree {d}, expected 1 or {}",
                    self.name, c.label, self.n
                )));
            }
        }
        for v in &self.catalogue {
            let d = v.restriction.validate(m)? as usize;
            if d != v.dim || v.dim == 0 || v.dim > self.n {
                return Err(CohomologyError::InvalidModel(format!(
                    "{}: subvariety {} has inconsistent dimension",
                    self.name, v.label
                )));
            }
        }
        Ok(())
    }

    /// Labels of violated (non-strict) constraints, i.e. those with value ≤ 0.
    pub fn violated_constraints(&self, a: &ClassVector) -> Result<Vec<String>, CohomologyError> {
        a.check_len(self.dim_h11())?;
        Ok(self
            .cone
            .constraints
            .iter()
            .filter(|c| !c.functional.eval(a).is_positive())
            .map(|c| c.label.clone())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_is_symmetric_and_multilinear() {
        let t = IntersectionTensor::new(2, 2)
            .with(&[0, 0], qi(1))
            .with(&[1, 0], qi(3))
            .with(&[1, 1], qi(-1));
        assert_eq!(t.get(&[0, 1]), qi(3));
        let a = ClassVector::from_ints(&[2, 1]);
        let b = ClassVector::from_ints(&[1, -1]);
        let ab = t.eval(&[&a, &b]).unwrap();
        assert_eq!(ab, t.eval(&[&b, &a]).unwrap());
        // 2·1·1 + 2·(-1)·3 + 1·1·3 + 1·(-1)·(-1)
        assert_eq!(ab, qi(0));
        assert_eq!(t.to_poly().eval(&a), t.power(&a).unwrap());
    }

    #[test]
    fn rejects_out_of_range_index() {
        let mut t = IntersectionTensor::new(2, 2);
        assert!(t.set(&[0, 2], qi(1)).is_err());
        assert!(t.set(&[0], qi(1)).is_err());
    }
}
