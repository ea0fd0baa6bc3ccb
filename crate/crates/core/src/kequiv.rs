//! Side-by-side comparisons of birationally related models.
//!
//! The registry in [`example_pairs`] holds the worked pairs this crate
//! demonstrates with: the two small resolutions of the quadric cone,
//! which a flop exchanges and which must agree in every point count; a
//! blow-up against its base as a control, where the counts must differ
//! by exactly the base field size; and plane cubics whose counting data
//! either match diamond-for-diamond or visibly split apart.
//!
//! [`compare_counts`] runs a pair over a list of primes, skipping any
//! prime where either side reduces badly, and judges the outcome against
//! the declared relation. [`infer_equal_hodge_curves`] pushes two smooth
//! curves through the whole pipeline — counts, rational form, weights,
//! genus — and compares the resulting Hodge diamonds.

use crate::counter::{self, CountError, CountOpts};
use crate::geomdsl::Model;
use crate::models;
use crate::zetakit::{self, CurveHodge, ZetaError, DEFAULT_WEIGHT_TOL};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KequivError {
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Zeta(#[from] ZetaError),
    #[error("no example pair named '{0}'")]
    UnknownPair(String),
    #[error("model '{model}' is singular at p = {p} (witness {witness})")]
    NotSmooth { model: String, p: u64, witness: String },
}

/// What a pair's point counts are expected to do at good primes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    EqualCounts,
    DifferentCounts,
}

#[derive(Debug, Clone)]
pub struct ExamplePair {
    pub id: &'static str,
    pub summary: &'static str,
    pub left: Model,
    pub right: Model,
    pub relation: Relation,
}

fn bundled(name: &str) -> Model {
    models::load(name).expect("registry references bundled models")
}

/// The worked pairs shipped with the crate.
pub fn example_pairs() -> Vec<ExamplePair> {
    vec![
        ExamplePair {
            id: "conifold_flop",
            summary: "two small resolutions of the quadric cone, exchanged by a flop; \
                      counts agree at every prime",
            left: bundled("conifold_res1"),
            right: bundled("conifold_res2"),
            relation: Relation::EqualCounts,
        },
        ExamplePair {
            id: "blowup_control",
            summary: "the affine plane against its blow-up at the origin; the extra \
                      exceptional line makes the counts differ by exactly q",
            left: bundled("a2"),
            right: bundled("blowup_a2"),
            relation: Relation::DifferentCounts,
        },
        ExamplePair {
            id: "curve_pair",
            summary: "isomorphic plane cubics related by rescaling coordinates; equal \
                      counts wherever 2 is invertible",
            left: bundled("curve_a"),
            right: bundled("curve_b"),
            relation: Relation::EqualCounts,
        },
        ExamplePair {
            id: "curve_mismatch",
            summary: "the projective line against an elliptic curve; same dimension, \
                      different counts",
            left: bundled("p1"),
            right: bundled("ell"),
            relation: Relation::DifferentCounts,
        },
    ]
}

pub fn example_pair(id: &str) -> Result<ExamplePair, KequivError> {
    example_pairs()
        .into_iter()
        .find(|pair| pair.id == id)
        .ok_or_else(|| KequivError::UnknownPair(id.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrimeStatus {
    /// One side reduces badly here; nothing to compare.
    Skipped { reason: String },
    /// Counts over F_{p^r} for r = 1..=r_max, both sides.
    Counted { left: Vec<u128>, right: Vec<u128>, equal: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeComparison {
    pub p: u64,
    pub status: PrimeStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairComparison {
    pub pair_id: String,
    pub relation: Relation,
    pub r_max: u32,
    pub primes: Vec<PrimeComparison>,
    /// Whether the observed counts match the declared relation.
    pub consistent: bool,
}

/// Detects bad reduction of either side at `p`; `None` means both smooth.
fn bad_reduction(
    pair: &ExamplePair,
    p: u64,
    opts: &CountOpts,
) -> Result<Option<String>, CountError> {
    for m in [&pair.left, &pair.right] {
        let rep = counter::smoothness_scan(m, p, 1, opts)?;
        if !rep.smooth {
            let w = rep.singular_points.first().cloned().unwrap_or_default();
            return Ok(Some(format!("'{}' is singular at {w}", m.name)));
        }
    }
    Ok(None)
}

/// Counts both sides of a pair over each listed prime, skipping primes of
/// bad reduction, and checks the outcome against the declared relation.
pub fn compare_counts(
    pair: &ExamplePair,
    primes: &[u64],
    r_max: u32,
    opts: &CountOpts,
) -> Result<PairComparison, KequivError> {
    let mut out = Vec::new();
    let mut counted = 0usize;
    let mut all_equal = true;
    let mut any_diff = false;
    for &p in primes {
        if let Some(reason) = bad_reduction(pair, p, opts)? {
            out.push(PrimeComparison { p, status: PrimeStatus::Skipped { reason } });
            continue;
        }
        let left = counter::count_tower(&pair.left, p, 1, r_max, opts)?.counts;
        let right = counter::count_tower(&pair.right, p, 1, r_max, opts)?.counts;
        let equal = left == right;
        counted += 1;
        all_equal &= equal;
        any_diff |= !equal;
        out.push(PrimeComparison { p, status: PrimeStatus::Counted { left, right, equal } });
    }
    let consistent = match pair.relation {
        Relation::EqualCounts => counted > 0 && all_equal,
        Relation::DifferentCounts => any_diff,
    };
    Ok(PairComparison {
        pair_id: pair.id.to_string(),
        relation: pair.relation,
        r_max,
        primes: out,
        consistent,
    })
}

/// One curve's share of a Hodge comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSide {
    pub model: String,
    pub counts: Vec<u128>,
    pub zeta: String,
    pub genus: u32,
    pub diamond: CurveHodge,
    pub purity_ok: bool,
    pub functional_eq: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HodgeComparison {
    pub p: u64,
    pub left: CurveSide,
    pub right: CurveSide,
    /// Hodge diamonds agree.
    pub equal: bool,
}

fn curve_side(
    m: &Model,
    p: u64,
    r_max: u32,
    opts: &CountOpts,
) -> Result<CurveSide, KequivError> {
    let rep = counter::smoothness_scan(m, p, 1, opts)?;
    if !rep.smooth {
        return Err(KequivError::NotSmooth {
            model: m.name.clone(),
            p,
            witness: rep.singular_points.first().cloned().unwrap_or_default(),
        });
    }
    let table = counter::count_tower(m, p, 1, r_max, opts)?;
    let zeta = zetakit::curve_reconstruct(&table)?;
    let class = zetakit::weil_classify(&zeta, DEFAULT_WEIGHT_TOL);
    let genus = zetakit::genus_from_zeta(&zeta)?;
    Ok(CurveSide {
        model: m.name.clone(),
        counts: table.counts,
        zeta: zeta.display(),
        genus,
        diamond: zetakit::curve_hodge(genus),
        purity_ok: class.purity_ok,
        functional_eq: zetakit::functional_equation_holds(&zeta)?,
    })
}

/// Runs two smooth curves through counting, reconstruction and weight
/// classification at one prime, and compares the Hodge diamonds the
/// counts alone determine. `r_max` must reach twice the genus for the
/// reconstruction to see the full numerator.
pub fn infer_equal_hodge_curves(
    left: &Model,
    right: &Model,
    p: u64,
    r_max: u32,
    opts: &CountOpts,
) -> Result<HodgeComparison, KequivError> {
    let l = curve_side(left, p, r_max, opts)?;
    let r = curve_side(right, p, r_max, opts)?;
    let equal = l.diamond == r.diamond;
    Ok(HodgeComparison { p, left: l, right: r, equal })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> CountOpts {
        CountOpts { parallel: false, ..CountOpts::default() }
    }

    #[test]
    fn registry_is_well_formed() {
        let pairs = example_pairs();
        assert_eq!(pairs.len(), 4);
        let mut ids: Vec<_> = pairs.iter().map(|p| p.id).collect();
        ids.dedup();
        assert_eq!(ids.len(), 4, "pair ids are unique");
        assert!(example_pair("conifold_flop").is_ok());
        assert!(matches!(
            example_pair("nope"),
            Err(KequivError::UnknownPair(_))
        ));
    }

    #[test]
    fn flop_pair_counts_agree() {
        let pair = example_pair("conifold_flop").unwrap();
        let cmp = compare_counts(&pair, &[2, 3], 2, &opts()).unwrap();
        assert!(cmp.consistent);
        for pc in &cmp.primes {
            match &pc.status {
                PrimeStatus::Counted { left, right, equal } => {
                    assert!(equal);
                    assert_eq!(left, right);
                    // q^3 + q^2 with q = p, then q = p^2.
                    let q = pc.p as u128;
                    assert_eq!(left[0], q * q * q + q * q);
                    assert_eq!(left[1], q.pow(6) + q.pow(4));
                }
                other => panic!("expected counts at p = {}, got {other:?}", pc.p),
            }
        }
    }

    #[test]
    fn blowup_control_differs_by_exactly_q() {
        let pair = example_pair("blowup_control").unwrap();
        let cmp = compare_counts(&pair, &[2, 3, 5], 1, &opts()).unwrap();
        assert!(cmp.consistent);
        for pc in &cmp.primes {
            let PrimeStatus::Counted { left, right, equal } = &pc.status else {
                panic!("no skips expected");
            };
            assert!(!equal);
            assert_eq!(right[0] - left[0], pc.p as u128);
        }
    }

    #[test]
    fn isomorphic_cubics_agree_away_from_two() {
        let pair = example_pair("curve_pair").unwrap();
        let cmp = compare_counts(&pair, &[2, 3, 5], 1, &opts()).unwrap();
        assert!(cmp.consistent);
        assert!(matches!(
            cmp.primes[0].status,
            PrimeStatus::Skipped { .. }
        ), "p = 2 is a bad prime for the pair");
        for pc in &cmp.primes[1..] {
            assert!(matches!(
                pc.status,
                PrimeStatus::Counted { equal: true, .. }
            ));
        }
    }

    #[test]
    fn mismatched_pair_is_detected() {
        let pair = example_pair("curve_mismatch").unwrap();
        let cmp = compare_counts(&pair, &[5], 1, &opts()).unwrap();
        assert!(cmp.consistent);
        let PrimeStatus::Counted { left, right, equal } = &cmp.primes[0].status else {
            panic!("counted");
        };
        assert!(!equal);
        assert_eq!((left[0], right[0]), (6, 8));
    }

    #[test]
    fn hodge_diamonds_of_isomorphic_curves_match() {
        let pair = example_pair("curve_pair").unwrap();
        let cmp = infer_equal_hodge_curves(&pair.left, &pair.right, 5, 2, &opts()).unwrap();
        assert!(cmp.equal);
        for side in [&cmp.left, &cmp.right] {
            assert_eq!(side.genus, 1);
            assert_eq!(side.diamond, zetakit::curve_hodge(1));
            assert!(side.purity_ok);
            assert!(side.functional_eq);
        }
        assert_eq!(cmp.left.counts, cmp.right.counts);
    }

    #[test]
    fn hodge_diamonds_differ_across_genus() {
        let p1 = models::load("p1").unwrap();
        let ell = models::load("ell").unwrap();
        let cmp = infer_equal_hodge_curves(&p1, &ell, 5, 2, &opts()).unwrap();
        assert!(!cmp.equal);
        assert_eq!(cmp.left.genus, 0);
        assert_eq!(cmp.right.genus, 1);
    }

    #[test]
    fn singular_reduction_is_an_error_for_hodge_inference() {
        let pair = example_pair("curve_pair").unwrap();
        match infer_equal_hodge_curves(&pair.left, &pair.right, 2, 2, &opts()) {
            Err(KequivError::NotSmooth { model, p, .. }) => {
                // Both cubics degenerate mod 2; the left side is hit first.
                assert_eq!(model, "curve_a");
                assert_eq!(p, 2);
            }
            other => panic!("expected bad reduction, got {other:?}"),
        }
    }
}
