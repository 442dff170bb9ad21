//! Exact evolution of (1,1)-classes under the Kähler-Ricci flow.
//!
//! Along the flow the class moves on the line `[ω₀] - t·2πc₁(X)`. Every
//! question asked here (existence time, limiting class, volume, null locus,
//! long-time regime) reduces to evaluating the stored cone functionals and
//! intersection numbers on that line, in exact rational arithmetic.

mod catalogue;
mod io;
mod model;
mod poly;
mod rational;

use std::fmt;

use num::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

pub use catalogue::{
    blowup_p2, builtin_by_name, builtin_models, product_ec, product_p1p1, resolve_model,
    riemann_surface, torus,
};
pub use io::{models_from_json, models_to_json, ModelFile};
pub use model::{
    ConeConstraint, ConeSpec, IntersectionTensor, Kodaira, ManifoldModel, SubvarietyEntry,
};
pub use poly::{default_bracket_width, HomogeneousPoly, Monomial, RootLocation, UPoly};
pub use rational::{
    format_rational, parse_rational, q, qi, rational_sqrt, to_f64, ClassVector, Rational,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CohomologyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("class is not Kähler; violated constraints: {}", violated.join(", "))]
    NotKahler { violated: Vec<String> },
    #[error("class is not nef; violated constraints: {}", violated.join(", "))]
    NotNef { violated: Vec<String> },
    #[error("maximal existence time is infinite")]
    InfiniteTime,
    #[error("no Kähler class of the form α + λ·2πc₁: {0}")]
    NoKahlerSeed(String),
    #[error("K_X is not nef; the flow has a finite-time singularity")]
    FiniteTimeRegime,
    #[error("inconsistent model: {0}")]
    InconsistentModel(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Maximal existence time of the flow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExistenceTime {
    Exact(Rational),
    /// Irrational failure time known to lie in `(lower, upper)`.
    Approximate { lower: Rational, upper: Rational },
    Infinite,
}

impl ExistenceTime {
    pub fn is_finite(&self) -> bool {
        !matches!(self, ExistenceTime::Infinite)
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, ExistenceTime::Approximate { .. })
    }

    /// Exact value, or the lower end of the bracket.
    pub fn representative(&self) -> Option<&Rational> {
        match self {
            ExistenceTime::Exact(t) => Some(t),
            ExistenceTime::Approximate { lower, .. } => Some(lower),
            ExistenceTime::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExistenceTime::Exact(t) => to_f64(t),
            ExistenceTime::Approximate { lower, upper } => 0.5 * (to_f64(lower) + to_f64(upper)),
            ExistenceTime::Infinite => f64::INFINITY,
        }
    }
}

/// `{"kind": "exact", "value": "p/q"}`, `{"kind": "approximate", "lower", "upper"}`
/// or `{"kind": "infinite"}`.
impl Serialize for ExistenceTime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(None)?;
        match self {
            ExistenceTime::Exact(t) => {
                map.serialize_entry("kind", "exact")?;
                map.serialize_entry("value", &format_rational(t))?;
            }
            ExistenceTime::Approximate { lower, upper } => {
                map.serialize_entry("kind", "approximate")?;
                map.serialize_entry("lower", &format_rational(lower))?;
                map.serialize_entry("upper", &format_rational(upper))?;
            }
            ExistenceTime::Infinite => map.serialize_entry("kind", "infinite")?,
        }
        map.serialize_entry("approx", &self.to_f64())?;
        map.end()
    }
}

impl fmt::Display for ExistenceTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExistenceTime::Exact(t) => write!(f, "{}", format_rational(t)),
            ExistenceTime::Approximate { lower, upper } => write!(
                f,
                "≈{:.15} (in [{}, {}], approximate)",
                0.5 * (to_f64(lower) + to_f64(upper)),
                format_rational(lower),
                format_rational(upper)
            ),
            ExistenceTime::Infinite => write!(f, "infinity"),
        }
    }
}

/// Catalogue-relative null locus of a nef class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NullLocus {
    /// `∫_X α^n = 0`: the whole space.
    pub whole_space: bool,
    pub subvarieties: Vec<String>,
    /// Only catalogued subvarieties were tested.
    pub relative_to_catalogue: bool,
}

impl NullLocus {
    pub fn is_empty(&self) -> bool {
        !self.whole_space && self.subvarieties.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    CalabiYau,
    AmpleCanonical,
    NefBigCanonical,
    IntermediateKodaira { kappa: u32, fiber_dim: usize },
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::CalabiYau => write!(f, "CalabiYau"),
            Regime::AmpleCanonical => write!(f, "AmpleCanonical"),
            Regime::NefBigCanonical => write!(f, "NefBigCanonical"),
            Regime::IntermediateKodaira { kappa, fiber_dim } => {
                write!(f, "IntermediateKodaira(κ={kappa}, fiber dim {fiber_dim})")
            }
        }
    }
}

/// `[ω₀] - t·2πc₁(X)`.
pub fn evolve_class(
    model: &ManifoldModel,
    a0: &ClassVector,
    t: &Rational,
) -> Result<ClassVector, CohomologyError> {
    a0.check_len(model.dim_h11())?;
    a0.add_scaled(&-t, &model.c1twopi)
}

pub fn is_kahler(model: &ManifoldModel, a: &ClassVector) -> Result<bool, CohomologyError> {
    Ok(model.violated_constraints(a)?.is_empty())
}

pub fn is_nef(model: &ManifoldModel, a: &ClassVector) -> Result<bool, CohomologyError> {
    Ok(nef_violations(model, a)?.is_empty())
}

fn nef_violations(model: &ManifoldModel, a: &ClassVector) -> Result<Vec<String>, CohomologyError> {
    a.check_len(model.dim_h11())?;
    Ok(model
        .cone
        .constraints
        .iter()
        .filter(|c| c.functional.eval(a).is_negative())
        .map(|c| c.label.clone())
        .collect())
}

/// `∫_X a^n`, in the model's volume unit.
pub fn volume(model: &ManifoldModel, a: &ClassVector) -> Result<Rational, CohomologyError> {
    model.tensor.power(a)
}

/// Per-constraint failure times along the flow line starting at `a0`.
pub fn failure_times(
    model: &ManifoldModel,
    a0: &ClassVector,
) -> Result<Vec<(String, RootLocation)>, CohomologyError> {
    a0.check_len(model.dim_h11())?;
    let direction = -&model.c1twopi;
    let width = default_bracket_width();
    Ok(model
        .cone
        .constraints
        .iter()
        .map(|c| {
            let line = c.functional.along_line(a0, &direction);
            (c.label.clone(), line.first_positive_root(&width))
        })
        .collect())
}

/// Supremum of `t` with `[ω₀] - t·2πc₁` Kähler.
pub fn max_existence_time(
    model: &ManifoldModel,
    a0: &ClassVector,
) -> Result<ExistenceTime, CohomologyError> {
    let violated = model.violated_constraints(a0)?;
    if !violated.is_empty() {
        return Err(CohomologyError::NotKahler { violated });
    }
    let mut best: Option<ExistenceTime> = None;
    for (_, root) in failure_times(model, a0)? {
        let candidate = match root {
            RootLocation::None => continue,
            RootLocation::Exact(t) => ExistenceTime::Exact(t),
            RootLocation::Bracket { lower, upper } => ExistenceTime::Approximate { lower, upper },
        };
        let replace = match &best {
            None => true,
            Some(current) => candidate.representative() < current.representative(),
        };
        if replace {
            best = Some(candidate);
        }
    }
    match best {
        Some(t) => Ok(t),
        None => {
            if !is_nef(model, &-&model.c1twopi)? {
                return Err(CohomologyError::InconsistentModel(format!(
                    "{}: flow line never leaves the cone but -c₁ is not nef",
                    model.name
                )));
            }
            Ok(ExistenceTime::Infinite)
        }
    }
}

/// `[ω₀] - T·2πc₁` at the (finite) maximal existence time. For an irrational
/// `T` the lower end of its bracket is used.
pub fn limiting_class(
    model: &ManifoldModel,
    a0: &ClassVector,
) -> Result<ClassVector, CohomologyError> {
    let t = max_existence_time(model, a0)?;
    let t = t.representative().ok_or(CohomologyError::InfiniteTime)?;
    evolve_class(model, a0, t)
}

/// Finite-time singularity with `∫ α^n > 0` for the limiting class.
pub fn is_noncollapsed(model: &ManifoldModel, a0: &ClassVector) -> Result<bool, CohomologyError> {
    let limit = limiting_class(model, a0)?;
    Ok(volume(model, &limit)?.is_positive())
}

/// Catalogued subvarieties `V` with `∫_V a^{dim V} = 0`, plus the whole space
/// when `∫_X a^n = 0`.
pub fn null_locus(model: &ManifoldModel, a: &ClassVector) -> Result<NullLocus, CohomologyError> {
    let violated = nef_violations(model, a)?;
    if !violated.is_empty() {
        return Err(CohomologyError::NotNef { violated });
    }
    let subvarieties = model
        .catalogue
        .iter()
        .filter(|v| v.restriction.eval(a).is_zero())
        .map(|v| v.label.clone())
        .collect();
    Ok(NullLocus {
        whole_space: volume(model, a)?.is_zero(),
        subvarieties,
        relative_to_catalogue: true,
    })
}

/// Initial class `a + λ·2πc₁` whose flow becomes singular at `T = λ` with
/// limiting class exactly `a`. `λ` is in the model's coordinates (the
/// geometric `λ/2π`).
pub fn singularity_seed(
    model: &ManifoldModel,
    a: &ClassVector,
    lambda: &Rational,
) -> Result<ClassVector, CohomologyError> {
    if !lambda.is_positive() {
        return Err(CohomologyError::NoKahlerSeed("λ must be positive".into()));
    }
    let violated = nef_violations(model, a)?;
    if !violated.is_empty() {
        return Err(CohomologyError::NotNef { violated });
    }
    if is_kahler(model, a)? {
        return Err(CohomologyError::NoKahlerSeed(
            "class is already Kähler; it is not a limiting class".into(),
        ));
    }
    let seed = a.add_scaled(lambda, &model.c1twopi)?;
    let violated = model.violated_constraints(&seed)?;
    if !violated.is_empty() {
        return Err(CohomologyError::NoKahlerSeed(format!(
            "seed {seed} violates {}",
            violated.join(", ")
        )));
    }
    match max_existence_time(model, &seed)? {
        ExistenceTime::Exact(t) if &t == lambda => {}
        other => {
            return Err(CohomologyError::InconsistentModel(format!(
                "seed {seed} has existence time {other}, expected {}",
                format_rational(lambda)
            )))
        }
    }
    debug_assert_eq!(&limiting_class(model, &seed)?, a);
    Ok(seed)
}

/// Long-time behaviour class when `K_X = -c₁` is nef.
pub fn long_time_regime(model: &ManifoldModel) -> Result<Regime, CohomologyError> {
    let canonical = -&model.c1twopi;
    if !is_nef(model, &canonical)? {
        return Err(CohomologyError::FiniteTimeRegime);
    }
    if canonical.is_zero() {
        return Ok(Regime::CalabiYau);
    }
    if is_kahler(model, &canonical)? {
        return Ok(Regime::AmpleCanonical);
    }
    if volume(model, &canonical)?.is_positive() {
        return Ok(Regime::NefBigCanonical);
    }
    match model.kodaira {
        Kodaira::Finite(kappa) if (kappa as usize) < model.n => Ok(Regime::IntermediateKodaira {
            kappa,
            fiber_dim: model.n - kappa as usize,
        }),
        other => Err(CohomologyError::InconsistentModel(format!(
            "{}: nef, non-big canonical class with Kodaira dimension {other:?}",
            model.name
        ))),
    }
}
