//! Model descriptions: ambient product spaces, defining equations, and
//! optional gauge charts, together with a parser, a canonical printer, and
//! structural validation.
//!
//! A model names a closed subvariety of a product of affine and projective
//! spaces by integer-coefficient equations. Gauge charts attach a top-degree
//! form to the smooth locus: the chart lists the coordinates kept as local
//! parameters and a numerator `g`, and the form is `g` times the wedge of
//! those coordinate differentials divided by the Jacobian determinant of the
//! equations in the remaining (solved) variables. With no equations and
//! numerator 1 this is the standard coordinate volume form.

mod parse;
mod poly;

pub use parse::{parse_model, ParseError};
pub use poly::{poly_to_string, Polynomial};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Affine,
    Projective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AmbientFactor {
    pub kind: FactorKind,
    pub dim: u32,
}

impl AmbientFactor {
    /// Coordinates the factor contributes: `n` for `A^n`, `n + 1` for `P^n`.
    pub fn var_count(&self) -> usize {
        match self.kind {
            FactorKind::Affine => self.dim as usize,
            FactorKind::Projective => self.dim as usize + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaugeChart {
    pub id: String,
    /// Variables kept as local parameters on the chart.
    pub coords: Vec<String>,
    pub numerator: Polynomial,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub name: String,
    pub ambient: Vec<AmbientFactor>,
    /// One variable group per ambient factor, in factor order.
    pub var_groups: Vec<Vec<String>>,
    pub equations: Vec<Polynomial>,
    pub expected_dim: Option<u32>,
    pub gauges: Vec<GaugeChart>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

impl Model {
    /// All variables in declaration order (groups concatenated).
    pub fn flat_vars(&self) -> Vec<String> {
        self.var_groups.iter().flatten().cloned().collect()
    }

    pub fn nvars(&self) -> usize {
        self.var_groups.iter().map(|g| g.len()).sum()
    }

    /// Sum of factor dimensions (each `P^n` contributes `n`).
    pub fn ambient_dim(&self) -> u32 {
        self.ambient.iter().map(|f| f.dim).sum()
    }

    pub fn var_group_of(&self, var_index: usize) -> usize {
        let mut i = var_index;
        for (g, group) in self.var_groups.iter().enumerate() {
            if i < group.len() {
                return g;
            }
            i -= group.len();
        }
        panic!("variable index {var_index} out of range");
    }

    pub fn var_position(&self, name: &str) -> Option<usize> {
        self.flat_vars().iter().position(|v| v == name)
    }

    /// Group membership mask for factor `g`, in flat variable order.
    pub fn group_mask(&self, g: usize) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.nvars());
        for (i, group) in self.var_groups.iter().enumerate() {
            mask.extend(std::iter::repeat(i == g).take(group.len()));
        }
        mask
    }
}

/// Canonical text form. Statements appear in a fixed order and polynomials
/// print in graded lexicographic order, so `parse_model(print_model(m))`
/// reproduces `m` exactly and equal models print identically.
pub fn print_model(m: &Model) -> String {
    let names = m.flat_vars();
    let mut out = String::new();
    if !m.name.is_empty() {
        out.push_str(&format!("name {};\n", m.name));
    }
    let factors: Vec<String> = m
        .ambient
        .iter()
        .map(|f| {
            let k = match f.kind {
                FactorKind::Affine => 'A',
                FactorKind::Projective => 'P',
            };
            format!("{k}^{}", f.dim)
        })
        .collect();
    out.push_str(&format!("ambient {};\n", factors.join(" x ")));
    let groups: Vec<String> = m.var_groups.iter().map(|g| g.join(" ")).collect();
    out.push_str(&format!("vars {};\n", groups.join(" | ")));
    if let Some(d) = m.expected_dim {
        out.push_str(&format!("dim {d};\n"));
    }
    for eq in &m.equations {
        out.push_str(&format!("eq {};\n", poly_to_string(eq, &names)));
    }
    for g in &m.gauges {
        out.push_str(&format!(
            "gauge {} ({}) {};\n",
            g.id,
            g.coords.join(", "),
            poly_to_string(&g.numerator, &names)
        ));
    }
    out
}

/// Structural checks beyond syntax. An empty result means the model is
/// well formed; warnings flag suspicious but legal constructions.
pub fn validate(m: &Model) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let err = |out: &mut Vec<Diagnostic>, msg: String| {
        out.push(Diagnostic { severity: Severity::Error, message: msg })
    };
    let warn = |out: &mut Vec<Diagnostic>, msg: String| {
        out.push(Diagnostic { severity: Severity::Warning, message: msg })
    };

    if m.var_groups.len() != m.ambient.len() {
        err(
            &mut out,
            format!(
                "{} variable groups for {} ambient factors",
                m.var_groups.len(),
                m.ambient.len()
            ),
        );
        // Everything else keys off the factor/group pairing.
        return out;
    }
    for (i, (f, g)) in m.ambient.iter().zip(&m.var_groups).enumerate() {
        if g.len() != f.var_count() {
            err(
                &mut out,
                format!(
                    "factor {i} needs {} variables, group has {}",
                    f.var_count(),
                    g.len()
                ),
            );
        }
    }
    let flat = m.flat_vars();
    for (i, v) in flat.iter().enumerate() {
        if flat[..i].contains(v) {
            err(&mut out, format!("duplicate variable '{v}'"));
        }
    }
    let nvars = m.nvars();

    if let Some(d) = m.expected_dim {
        if d > m.ambient_dim() {
            err(
                &mut out,
                format!("declared dimension {d} exceeds ambient dimension {}", m.ambient_dim()),
            );
        } else {
            let codim = (m.ambient_dim() - d) as usize;
            if m.equations.len() != codim {
                warn(
                    &mut out,
                    format!(
                        "{} equations for codimension {codim}; not a complete intersection shape",
                        m.equations.len()
                    ),
                );
            }
        }
    }

    for (i, eq) in m.equations.iter().enumerate() {
        if eq.nvars() != nvars {
            err(&mut out, format!("equation {i} built over {} variables, model has {nvars}", eq.nvars()));
            continue;
        }
        if eq.is_zero() {
            warn(&mut out, format!("equation {i} is identically zero"));
        }
        for (g, f) in m.ambient.iter().enumerate() {
            if f.kind == FactorKind::Projective && !eq.is_homogeneous_in(&m.group_mask(g)) {
                err(
                    &mut out,
                    format!("equation {i} is not homogeneous in projective factor {g}"),
                );
            }
        }
    }

    for (i, gauge) in m.gauges.iter().enumerate() {
        if m.gauges[..i].iter().any(|other| other.id == gauge.id) {
            err(&mut out, format!("duplicate gauge chart id '{}'", gauge.id));
        }
        if gauge.numerator.nvars() != nvars {
            err(
                &mut out,
                format!("gauge '{}' numerator built over wrong variable count", gauge.id),
            );
        }
        let mut seen = Vec::new();
        for c in &gauge.coords {
            if seen.contains(&c) {
                err(&mut out, format!("gauge '{}' repeats coordinate '{c}'", gauge.id));
            }
            seen.push(c);
            match m.var_position(c) {
                None => err(&mut out, format!("gauge '{}' uses unknown coordinate '{c}'", gauge.id)),
                Some(idx) => {
                    let g = m.var_group_of(idx);
                    if m.ambient[g].kind == FactorKind::Projective {
                        err(
                            &mut out,
                            format!(
                                "gauge '{}' coordinate '{c}' lies in a projective factor",
                                gauge.id
                            ),
                        );
                    }
                }
            }
        }
        if let Some(d) = m.expected_dim {
            if gauge.coords.len() != d as usize {
                err(
                    &mut out,
                    format!(
                        "gauge '{}' has {} coordinates for a dimension-{d} model",
                        gauge.id,
                        gauge.coords.len()
                    ),
                );
            }
        }
    }

    out
}

pub fn is_valid(m: &Model) -> bool {
    validate(m).iter().all(|d| d.severity != Severity::Error)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLOWUP: &str = "\
name blowup;
ambient A^2 x P^1;
vars x y | s t;
dim 2;
eq x*t - y*s;
";

    #[test]
    fn print_parse_roundtrip() {
        let sources = [
            BLOWUP,
            "ambient A^2;\nvars x y;\ndim 1;\neq y - x^2;\ngauge c0 (x) 1;\n",
            "name gm;\nambient A^2;\nvars x y;\ndim 1;\neq x*y - 1;\ngauge c0 (x) 1;\n",
            "ambient P^2;\nvars x y z;\n",
            "name conifold;\nambient A^4;\nvars x y z w;\ndim 3;\neq x*y - z*w;\n",
        ];
        for src in sources {
            let m = parse_model(src).unwrap();
            let printed = print_model(&m);
            let reparsed = parse_model(&printed).unwrap();
            assert_eq!(m, reparsed, "roundtrip failed for:\n{src}");
            // Printing is idempotent.
            assert_eq!(printed, print_model(&reparsed));
        }
    }

    #[test]
    fn valid_model_has_no_diagnostics() {
        let m = parse_model(BLOWUP).unwrap();
        assert!(validate(&m).is_empty());
        assert!(is_valid(&m));
    }

    #[test]
    fn homogeneity_is_enforced_per_factor() {
        let m = parse_model("ambient A^1 x P^1;\nvars a | s t;\neq s + t^2;\n").unwrap();
        let diags = validate(&m);
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Error && d.message.contains("not homogeneous")));
        assert!(!is_valid(&m));

        // Inhomogeneous in the affine group is fine.
        let m = parse_model("ambient A^2 x P^1;\nvars x y | s t;\neq x*t - y^2*s;\n").unwrap();
        assert!(is_valid(&m));
    }

    #[test]
    fn group_arity_checked() {
        let m = parse_model("ambient A^2 x P^1;\nvars x y | s;\n").unwrap();
        let diags = validate(&m);
        assert!(diags.iter().any(|d| d.message.contains("needs 2 variables")));
    }

    #[test]
    fn gauge_checks() {
        // Wrong arity for the declared dimension.
        let m = parse_model("ambient A^2;\nvars x y;\ndim 1;\neq x*y - 1;\ngauge c0 (x, y) 1;\n")
            .unwrap();
        assert!(!is_valid(&m));

        // Chart coordinate in a projective factor.
        let m =
            parse_model("ambient A^1 x P^1;\nvars a | s t;\ndim 1;\neq a*s - t;\ngauge c0 (s) 1;\n")
                .unwrap();
        assert!(validate(&m).iter().any(|d| d.message.contains("projective factor")));

        // Duplicate chart ids.
        let m = parse_model(
            "ambient A^2;\nvars x y;\ndim 1;\neq x*y - 1;\ngauge c0 (x) 1;\ngauge c0 (y) 1;\n",
        )
        .unwrap();
        assert!(validate(&m).iter().any(|d| d.message.contains("duplicate gauge chart id")));
    }

    #[test]
    fn codimension_warning_is_not_an_error() {
        let m = parse_model("ambient A^3;\nvars x y z;\ndim 1;\neq x*y - 1;\n").unwrap();
        let diags = validate(&m);
        assert!(diags.iter().all(|d| d.severity == Severity::Warning));
        assert!(is_valid(&m));
    }

    #[test]
    fn seeded_roundtrip_of_random_polynomials() {
        use num_bigint::BigInt;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xd51);
        for _ in 0..50 {
            let mut poly = Polynomial::zero(3);
            for _ in 0..rng.gen_range(1..7) {
                let exps = vec![
                    rng.gen_range(0..5u16),
                    rng.gen_range(0..5u16),
                    rng.gen_range(0..4u16),
                ];
                let c = BigInt::from(rng.gen_range(-20i32..=20));
                poly = poly.add(&Polynomial::from_terms(3, [(exps, c)]));
            }
            let m = Model {
                name: String::new(),
                ambient: vec![AmbientFactor { kind: FactorKind::Affine, dim: 3 }],
                var_groups: vec![vec!["x".into(), "y".into(), "z".into()]],
                equations: vec![poly],
                expected_dim: None,
                gauges: vec![],
            };
            let reparsed = parse_model(&print_model(&m)).unwrap();
            assert_eq!(m, reparsed);
        }
    }
}
