//! Constructors for the symmetric flexible suspension types.
//!
//! Each builder expands a half-parameter set into the full edge-length arrays
//! of [`SuspensionParams`], attaches the `theta_1` rule and sign pattern that
//! realize the type's coordinate symmetry, and certifies the closure criterion
//! by a flexion sweep before returning.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::SuspensionParams;
use crate::model::{
    closure_gap, embed, flexion_interval, FlexionInterval, SignPattern, Theta1Rule,
};

/// The five suspension families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuspensionTypeTag {
    IOee,
    IiAee,
    IiOee,
    IiiOae,
    IiiOas,
}

impl SuspensionTypeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SuspensionTypeTag::IOee => "i-oee",
            SuspensionTypeTag::IiAee => "ii-aee",
            SuspensionTypeTag::IiOee => "ii-oee",
            SuspensionTypeTag::IiiOae => "iii-oae",
            SuspensionTypeTag::IiiOas => "iii-oas",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "i-oee" => SuspensionTypeTag::IOee,
            "ii-aee" => SuspensionTypeTag::IiAee,
            "ii-oee" => SuspensionTypeTag::IiOee,
            "iii-oae" => SuspensionTypeTag::IiiOae,
            "iii-oas" => SuspensionTypeTag::IiiOas,
            _ => return None,
        })
    }
}

impl core::fmt::Display for SuspensionTypeTag {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Index-4 vertex angle structure: opposite face angles equal or
/// supplementary. Only Type III suspensions carry a classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexClass {
    Oae,
    Oas,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error("invalid half parameters: {0}")]
    InvalidHalfParams(String),
    #[error("flex certification failed: max relative closure gap {max_rel_gap}")]
    FlexCertificationFailed { max_rel_gap: f64 },
}

/// A suspension together with everything needed to embed and certify it.
#[derive(Debug, Clone)]
pub struct ConstructedSuspension {
    pub params: SuspensionParams,
    pub tag: SuspensionTypeTag,
    pub theta1: Theta1Rule,
    pub signs: SignPattern,
    /// Human-readable record of the generating parameters.
    pub provenance: String,
    /// Per-vertex OAE/OAS classification, Type III only.
    pub vertex_classes: Option<Vec<VertexClass>>,
    /// Distinguished fold index, III-OAE only.
    pub fold_l: Option<usize>,
}

impl ConstructedSuspension {
    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn interval(&self) -> Result<FlexionInterval, crate::model::ModelError> {
        flexion_interval(&self.params)
    }
}

/// Max of `|closure gap| / L_N` over `samples` interior Chebyshev samples.
///
/// Samples where the embedding is infeasible are skipped; returns the max and
/// the number of feasible samples.
pub fn closure_sweep(
    params: &SuspensionParams,
    theta1: Theta1Rule,
    signs: &SignPattern,
    samples: usize,
) -> Result<(f64, usize), crate::model::ModelError> {
    let iv = flexion_interval(params)?;
    let big_l_n = params.big_l(params.n());
    let mut max_rel = 0.0f64;
    let mut feasible = 0usize;
    for z in iv.chebyshev_samples(samples, 1e-6) {
        if let Ok(emb) = embed(params, z, theta1, signs) {
            let rel = (closure_gap(&emb, big_l_n) / big_l_n).abs();
            if rel > max_rel {
                max_rel = rel;
            }
            feasible += 1;
        }
    }
    Ok((max_rel, feasible))
}

const BUILD_SWEEP_SAMPLES: usize = 17;
const BUILD_GAP_TOL: f64 = 1e-9;

fn certify(
    params: SuspensionParams,
    tag: SuspensionTypeTag,
    theta1: Theta1Rule,
    signs: SignPattern,
    provenance: String,
) -> Result<ConstructedSuspension, BuildError> {
    let (max_rel, feasible) = closure_sweep(&params, theta1, &signs, BUILD_SWEEP_SAMPLES)
        .map_err(|e| BuildError::InvalidHalfParams(format!("no feasible flexion value: {e}")))?;
    if feasible < 2 {
        return Err(BuildError::InvalidHalfParams(String::from(
            "fewer than two feasible flexion samples",
        )));
    }
    if max_rel > BUILD_GAP_TOL {
        return Err(BuildError::FlexCertificationFailed { max_rel_gap: max_rel });
    }
    Ok(ConstructedSuspension {
        params,
        tag,
        theta1,
        signs,
        provenance,
        vertex_classes: None,
        fold_l: None,
    })
}

fn check_half(name: &str, arrays: &[(&str, &[f64])], m: usize) -> Result<(), BuildError> {
    if m <= 2 {
        return Err(BuildError::InvalidHalfParams(format!(
            "{name}: M = {m} but N = 2M requires M > 2"
        )));
    }
    for (label, arr) in arrays {
        if arr.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(BuildError::InvalidHalfParams(format!(
                "{name}: array {label} has a non-positive entry"
            )));
        }
    }
    Ok(())
}

fn validated(name: &str, p: SuspensionParams) -> Result<SuspensionParams, BuildError> {
    let report = p.validate();
    if !report.is_valid() {
        return Err(BuildError::InvalidHalfParams(format!(
            "{name}: derived full set invalid:\n{}",
            report.summary()
        )));
    }
    Ok(p)
}

/// Half parameters of a Type I-OEE suspension: `l_1..l_M`, `m_1..m_M`,
/// `L_1..L_M` free; the rest follows from the apex-swap relations
/// `m_k = l_{k+M}`, `m_{k+M} = l_k`, `L_{k+M} = L_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfParamsIOEE {
    pub l_half: Vec<f64>,
    pub m_half: Vec<f64>,
    pub big_l_half: Vec<f64>,
}

pub fn build_i_oee(h: &HalfParamsIOEE) -> Result<ConstructedSuspension, BuildError> {
    let m = h.l_half.len();
    if h.m_half.len() != m || h.big_l_half.len() != m {
        return Err(BuildError::InvalidHalfParams(String::from(
            "i-oee: half arrays must share length M",
        )));
    }
    check_half(
        "i-oee",
        &[
            ("l", &h.l_half),
            ("m", &h.m_half),
            ("L", &h.big_l_half),
        ],
        m,
    )?;
    // m_k = l_{k+M}: the second half of l is the free m_half and vice versa.
    let mut l = h.l_half.clone();
    l.extend_from_slice(&h.m_half);
    let mut mm = h.m_half.clone();
    mm.extend_from_slice(&h.l_half);
    let mut big_l = h.big_l_half.clone();
    big_l.extend_from_slice(&h.big_l_half);
    let params = validated("i-oee", SuspensionParams::new_unchecked(l, mm, big_l))?;
    certify(
        params,
        SuspensionTypeTag::IOee,
        Theta1Rule::SymmetricHalf,
        SignPattern::default_symmetric(2 * m),
        format!("i-oee from half parameters M={m}"),
    )
}

/// Half parameters of a Type II-AEE suspension: the full upper edge array
/// `l_1..l_N` plus `L_1..L_M`; the lower edges follow from the mirror
/// relation `m_1 = l_1`, `m_k = l_{N-k+2}`, and `L_{k+M} = L_{M-k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfParamsIIAEE {
    pub l_full: Vec<f64>,
    pub big_l_half: Vec<f64>,
}

pub fn build_ii_aee(h: &HalfParamsIIAEE) -> Result<ConstructedSuspension, BuildError> {
    let n = h.l_full.len();
    let m = h.big_l_half.len();
    if n != 2 * m {
        return Err(BuildError::InvalidHalfParams(String::from(
            "ii-aee: l array must have length 2M",
        )));
    }
    check_half("ii-aee", &[("l", &h.l_full), ("L", &h.big_l_half)], m)?;
    let l = h.l_full.clone();
    let mut mm = Vec::with_capacity(n);
    mm.push(l[0]); // m_1 = l_1
    for k in 2..=n {
        mm.push(l[(n - k + 2) - 1]); // m_k = l_{N-k+2}
    }
    let mut big_l = h.big_l_half.clone();
    for k in 1..=m {
        big_l.push(h.big_l_half[(m - k + 1) - 1]); // L_{k+M} = L_{M-k+1}
    }
    let params = validated("ii-aee", SuspensionParams::new_unchecked(l, mm, big_l))?;
    certify(
        params,
        SuspensionTypeTag::IiAee,
        Theta1Rule::Fixed(0.0),
        SignPattern::default_symmetric(n),
        format!("ii-aee from full l and half L, M={m}"),
    )
}

/// Half parameters of a Type II-OEE suspension: `l`, `m`, `L` each
/// `M`-periodic, the first period free.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfParamsIIOEE {
    pub l_half: Vec<f64>,
    pub m_half: Vec<f64>,
    pub big_l_half: Vec<f64>,
}

pub fn build_ii_oee(h: &HalfParamsIIOEE) -> Result<ConstructedSuspension, BuildError> {
    let m = h.l_half.len();
    if h.m_half.len() != m || h.big_l_half.len() != m {
        return Err(BuildError::InvalidHalfParams(String::from(
            "ii-oee: half arrays must share length M",
        )));
    }
    check_half(
        "ii-oee",
        &[
            ("l", &h.l_half),
            ("m", &h.m_half),
            ("L", &h.big_l_half),
        ],
        m,
    )?;
    let period = |half: &[f64]| {
        let mut v = half.to_vec();
        v.extend_from_slice(half);
        v
    };
    let params = validated(
        "ii-oee",
        SuspensionParams::new_unchecked(
            period(&h.l_half),
            period(&h.m_half),
            period(&h.big_l_half),
        ),
    )?;
    certify(
        params,
        SuspensionTypeTag::IiOee,
        Theta1Rule::SymmetricHalf,
        SignPattern::default_symmetric(2 * m),
        format!("ii-oee from half parameters M={m}"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::is_feasible;
    use alloc::vec;

    fn equal_half(m: usize) -> HalfParamsIOEE {
        HalfParamsIOEE {
            l_half: vec![1.0; m],
            m_half: vec![1.0; m],
            big_l_half: vec![1.0; m],
        }
    }

    #[test]
    fn i_oee_equal_lengths_certifies() {
        let s = build_i_oee(&equal_half(3)).unwrap();
        assert_eq!(s.n(), 6);
        assert_eq!(s.tag, SuspensionTypeTag::IOee);
        let (gap, _) = closure_sweep(&s.params, s.theta1, &s.signs, 33).unwrap();
        assert!(gap < 1e-10);
    }

    #[test]
    fn i_oee_rejects_m_2() {
        let err = build_i_oee(&equal_half(2)).unwrap_err();
        assert!(matches!(err, BuildError::InvalidHalfParams(_)));
    }

    #[test]
    fn i_oee_generic_half_params() {
        let h = HalfParamsIOEE {
            l_half: vec![2.0, 3.0, 4.0],
            m_half: vec![1.5, 2.5, 3.5],
            big_l_half: vec![3.0, 3.0, 3.0],
        };
        match build_i_oee(&h) {
            Ok(s) => {
                // Eq-4 expansion: m_4 = l_1, l_4 = m_1, L_4 = L_1.
                assert_eq!(s.params.m(4), 2.0);
                assert_eq!(s.params.l(4), 1.5);
                assert_eq!(s.params.big_l(4), 3.0);
                let (gap, _) = closure_sweep(&s.params, s.theta1, &s.signs, 33).unwrap();
                assert!(gap < 1e-10);
            }
            Err(BuildError::InvalidHalfParams(_)) => {}
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn i_oee_coordinate_symmetry() {
        let h = HalfParamsIOEE {
            l_half: vec![1.0, 1.2, 0.9],
            m_half: vec![1.1, 0.95, 1.3],
            big_l_half: vec![1.0, 1.1, 1.05],
        };
        let s = build_i_oee(&h).unwrap();
        let iv = s.interval().unwrap();
        for z in iv.chebyshev_samples(7, 1e-3) {
            let emb = embed(&s.params, z, s.theta1, &s.signs).unwrap();
            for k in 1..=3 {
                let a = emb.v(k);
                let b = emb.v(k + 3);
                assert!((b.x + a.x).abs() < 1e-10);
                assert!((b.y - a.y).abs() < 1e-10);
                assert!((b.z + a.z).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ii_aee_equal_lengths_certifies() {
        let h = HalfParamsIIAEE {
            l_full: vec![1.0; 6],
            big_l_half: vec![1.0; 3],
        };
        let s = build_ii_aee(&h).unwrap();
        assert_eq!(s.theta1, Theta1Rule::Fixed(0.0));
        let (gap, _) = closure_sweep(&s.params, s.theta1, &s.signs, 33).unwrap();
        assert!(gap < 1e-10);
    }

    #[test]
    fn ii_aee_mirror_symmetry_and_planar_vertexes() {
        let h = HalfParamsIIAEE {
            l_full: vec![1.0, 1.2, 1.4, 1.6, 1.4, 1.2],
            big_l_half: vec![1.0, 1.1, 1.3],
        };
        let s = build_ii_aee(&h).unwrap();
        // m_1 = l_1 makes the axial offset of v_1 vanish.
        assert_eq!(s.params.m(1), s.params.l(1));
        let iv = s.interval().unwrap();
        for z in iv.chebyshev_samples(7, 1e-3) {
            let emb = embed(&s.params, z, s.theta1, &s.signs).unwrap();
            assert!(emb.v(1).z.abs() < 1e-12);
            // z_N = -z_2 and full mirror: v_{k+M} = (x, y, -z) of v_{M-k+2}.
            for k in 2..=3 {
                let a = emb.v(3 - k + 2);
                let b = emb.v(k + 3);
                assert!((b.x - a.x).abs() < 1e-10);
                assert!((b.y - a.y).abs() < 1e-10);
                assert!((b.z + a.z).abs() < 1e-10);
            }
            assert!((emb.v(6).z + emb.v(2).z).abs() < 1e-10);
        }
    }

    #[test]
    fn ii_aee_generic_l_certifies() {
        // l need not be mirror symmetric; m is derived from it.
        let h = HalfParamsIIAEE {
            l_full: vec![1.0, 1.15, 0.95, 1.3, 1.1, 1.25],
            big_l_half: vec![1.0, 1.2, 1.1],
        };
        match build_ii_aee(&h) {
            Ok(s) => {
                assert_eq!(s.params.m(2), s.params.l(6));
                assert_eq!(s.params.m(5), s.params.l(3));
                let (gap, _) = closure_sweep(&s.params, s.theta1, &s.signs, 33).unwrap();
                assert!(gap < 1e-10);
            }
            Err(BuildError::InvalidHalfParams(_)) => {}
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn ii_oee_periodic_expansion_certifies() {
        let h = HalfParamsIIOEE {
            l_half: vec![1.0, 2.0, 1.5],
            m_half: vec![1.3, 1.1, 1.7],
            big_l_half: vec![2.0, 2.2, 1.9],
        };
        match build_ii_oee(&h) {
            Ok(s) => {
                for k in 1..=3 {
                    assert_eq!(s.params.l(k + 3), s.params.l(k));
                    assert_eq!(s.params.m(k + 3), s.params.m(k));
                    assert_eq!(s.params.big_l(k + 3), s.params.big_l(k));
                }
                let (gap, _) = closure_sweep(&s.params, s.theta1, &s.signs, 33).unwrap();
                assert!(gap < 1e-10);
            }
            Err(BuildError::InvalidHalfParams(_)) => {}
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn ii_oee_coordinate_symmetry() {
        let h = HalfParamsIIOEE {
            l_half: vec![1.0, 1.2, 1.1],
            m_half: vec![1.05, 0.95, 1.15],
            big_l_half: vec![1.0, 1.1, 1.05],
        };
        let s = build_ii_oee(&h).unwrap();
        let iv = s.interval().unwrap();
        for z in iv.chebyshev_samples(7, 1e-3) {
            let emb = embed(&s.params, z, s.theta1, &s.signs).unwrap();
            for k in 1..=3 {
                let a = emb.v(k);
                let b = emb.v(k + 3);
                assert!((b.x + a.x).abs() < 1e-10);
                assert!((b.y - a.y).abs() < 1e-10);
                assert!((b.z - a.z).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ii_oee_rejects_negative_length() {
        let h = HalfParamsIIOEE {
            l_half: vec![1.0, -2.0, 1.5],
            m_half: vec![1.0; 3],
            big_l_half: vec![1.0; 3],
        };
        assert!(matches!(
            build_ii_oee(&h),
            Err(BuildError::InvalidHalfParams(_))
        ));
    }

    #[test]
    fn perturbed_suspension_fails_certification() {
        let s = build_i_oee(&equal_half(3)).unwrap();
        let perturbed = s.params.with_l(2, s.params.l(2) * 1.01);
        assert!(is_feasible(&perturbed, 1.0));
        let (gap, _) = closure_sweep(&perturbed, s.theta1, &s.signs, 33).unwrap();
        assert!(gap > 1e-5);
    }
}
