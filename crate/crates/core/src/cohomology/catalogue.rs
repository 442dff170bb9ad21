//! Built-in manifold models.
//!
//! Coordinates are chosen so that `2π c₁(X)` is rational. Volumes are
//! reported in the unit stored on each model (`volume_unit`); multiply by it to
//! recover the geometric value.

use super::model::{ConeConstraint, ConeSpec, IntersectionTensor, Kodaira, ManifoldModel, SubvarietyEntry};
use super::poly::HomogeneousPoly;
use super::rational::{qi, ClassVector};
use super::CohomologyError;

fn linear(label: &str, coeffs: &[i64]) -> ConeConstraint {
    ConeConstraint {
        label: label.to_string(),
        functional: HomogeneousPoly::linear(&coeffs.iter().map(|&c| qi(c)).collect::<Vec<_>>()),
    }
}

fn curve(label: &str, coeffs: &[i64]) -> SubvarietyEntry {
    SubvarietyEntry {
        label: label.to_string(),
        dim: 1,
        restriction: HomogeneousPoly::linear(&coeffs.iter().map(|&c| qi(c)).collect::<Vec<_>>()),
    }
}

/// Compact Riemann surface of genus `g`, basis the class of the constant
/// curvature metric (Fubini-Study, flat, or hyperbolic with Ric = -2ω).
pub fn riemann_surface(genus: u32) -> ManifoldModel {
    let (basis, c1, area, kodaira) = match genus {
        0 => ("[ω_FS]", 2, 1, Kodaira::MinusInfinity),
        1 => ("[ω_flat]", 0, 1, Kodaira::Finite(0)),
        g => ("[ω_hyp]", -2, g as i64 - 1, Kodaira::Finite(1)),
    };
    ManifoldModel {
        name: format!("riemann-surface-{genus}"),
        n: 1,
        basis: vec![basis.to_string()],
        volume_unit: "2π".into(),
        coordinate_note: format!("class λ·{basis}; coordinate λ as in the geometric basis"),
        tensor: IntersectionTensor::new(1, 1).with(&[0], qi(area)),
        c1twopi: ClassVector::from_ints(&[c1]),
        cone: ConeSpec {
            constraints: vec![linear("λ > 0", &[1])],
        },
        catalogue: Vec::new(),
        kodaira,
    }
}

/// Complex torus C^n/Λ restricted to the span of the coordinate classes
/// e_i = [√-1 dz_i ∧ dz̄_i] (each normalized to unit area).
pub fn torus(n: usize) -> ManifoldModel {
    let index: Vec<usize> = (0..n).collect();
    let constraints = (0..n)
        .map(|i| {
            let mut c = vec![0; n];
            c[i] = 1;
            linear(&format!("μ{} > 0", i + 1), &c)
        })
        .collect();
    let catalogue = if n >= 2 {
        (0..n)
            .map(|i| {
                let mut c = vec![0; n];
                c[i] = 1;
                curve(&format!("E{}", i + 1), &c)
            })
            .collect()
    } else {
        Vec::new()
    };
    ManifoldModel {
        name: format!("torus-{n}"),
        n,
        basis: (1..=n).map(|i| format!("e{i}")).collect(),
        volume_unit: "1".into(),
        coordinate_note: "diagonal slice Σ μ_i e_i of H^{1,1}; volume n!·Πμ_i".into(),
        tensor: IntersectionTensor::new(n, n).with(&index, qi(1)),
        c1twopi: ClassVector::zeros(n),
        cone: ConeSpec { constraints },
        catalogue,
        kodaira: Kodaira::Finite(0),
    }
}

/// CP¹ × CP¹ with a = π₁*[ω_FS], b = π₂*[ω_FS].
pub fn product_p1p1() -> ManifoldModel {
    ManifoldModel {
        name: "p1xp1".into(),
        n: 2,
        basis: vec!["a".into(), "b".into()],
        volume_unit: "(2π)^2".into(),
        coordinate_note: "class λ₁a + λ₂b; coordinates (λ₁, λ₂) unchanged".into(),
        tensor: IntersectionTensor::new(2, 2).with(&[0, 1], qi(1)),
        c1twopi: ClassVector::from_ints(&[2, 2]),
        cone: ConeSpec {
            constraints: vec![linear("λ₁ > 0", &[1, 0]), linear("λ₂ > 0", &[0, 1])],
        },
        catalogue: vec![
            curve("P1x{pt}", &[1, 0]),
            curve("{pt}xP1", &[0, 1]),
        ],
        kodaira: Kodaira::MinusInfinity,
    }
}

/// Blowup of CP² at a point. Basis a = π*[ω_FS]/2π, b = PD(E) with
/// c₁ = 3a - b. The stored coordinate is μ = λ/(2π), so 2πc₁ = (3, -1).
pub fn blowup_p2() -> ManifoldModel {
    let tensor = IntersectionTensor::new(2, 2)
        .with(&[0, 0], qi(1))
        .with(&[1, 1], qi(-1));
    let volume = ConeConstraint {
        label: "∫α² > 0".into(),
        functional: tensor.to_poly(),
    };
    ManifoldModel {
        name: "blowup-p2".into(),
        n: 2,
        basis: vec!["2πa".into(), "2πb".into()],
        volume_unit: "(2π)^2".into(),
        coordinate_note: "class λ₁a + λ₂b has coordinates (μ₁, μ₂) = (λ₁, λ₂)/(2π)".into(),
        tensor,
        c1twopi: ClassVector::from_ints(&[3, -1]),
        cone: ConeSpec {
            constraints: vec![volume, linear("∫α∧a > 0", &[1, 0]), linear("∫α∧b > 0", &[0, -1])],
        },
        catalogue: vec![
            curve("E", &[0, -1]),
            curve("H", &[1, 0]),
            curve("L_p", &[1, 1]),
        ],
        kodaira: Kodaira::MinusInfinity,
    }
}

/// E × C with E an elliptic curve and C a genus-2 curve; a = pullback of the
/// flat class (area 2π), b = pullback of [ω_hyp] (area 2π).
pub fn product_ec() -> ManifoldModel {
    ManifoldModel {
        name: "product-ec".into(),
        n: 2,
        basis: vec!["a".into(), "b".into()],
        volume_unit: "(2π)^2".into(),
        coordinate_note: "class λ_E·a + λ_C·b; coordinates (λ_E, λ_C) unchanged".into(),
        tensor: IntersectionTensor::new(2, 2).with(&[0, 1], qi(1)),
        c1twopi: ClassVector::from_ints(&[0, -2]),
        cone: ConeSpec {
            constraints: vec![linear("λ_E > 0", &[1, 0]), linear("λ_C > 0", &[0, 1])],
        },
        catalogue: vec![curve("E x {pt}", &[1, 0]), curve("{pt} x C", &[0, 1])],
        kodaira: Kodaira::Finite(1),
    }
}

/// The default listing.
pub fn builtin_models() -> Vec<ManifoldModel> {
    vec![
        riemann_surface(0),
        torus(1),
        riemann_surface(2),
        product_p1p1(),
        blowup_p2(),
        product_ec(),
    ]
}

/// Resolves `riemann-surface-<g>`, `torus-<n>` and the fixed names.
pub fn builtin_by_name(name: &str) -> Result<ManifoldModel, CohomologyError> {
    let unknown = || CohomologyError::UnknownModel(name.to_string());
    match name {
        "p1xp1" => Ok(product_p1p1()),
        "blowup-p2" => Ok(blowup_p2()),
        "product-ec" => Ok(product_ec()),
        "cp1" => Ok(riemann_surface(0)),
        _ => {
            if let Some(g) = name.strip_prefix("riemann-surface-") {
                g.parse().map(riemann_surface).map_err(|_| unknown())
            } else if let Some(n) = name.strip_prefix("torus-") {
                match n.parse::<usize>() {
                    Ok(n) if (1..=6).contains(&n) => Ok(torus(n)),
                    _ => Err(unknown()),
                }
            } else {
                Err(unknown())
            }
        }
    }
}

/// Looks a model up first in `extra` (user-supplied specs), then in the built-ins.
pub fn resolve_model(name: &str, extra: &[ManifoldModel]) -> Result<ManifoldModel, CohomologyError> {
    extra
        .iter()
        .find(|m| m.name == name)
        .cloned()
        .map(Ok)
        .unwrap_or_else(|| builtin_by_name(name))
}
