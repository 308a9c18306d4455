//! Domain types for dipyramid suspensions and triangle face-angle math.
//!
//! Indexing convention: the public surface speaks 1-based indices with the
//! cyclic rule `(N + 1) == 1`, matching the usual notation for suspensions.
//! Arrays are stored 0-based internally; the accessors translate.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

// Needed on targets without std's inherent float methods; redundant (and
// flagged unused) on hosted targets.
#[allow(unused_imports)]
use crate::math::F64Ext;

pub const PI: f64 = core::f64::consts::PI;

/// Angle-sum and law-of-sines self-consistency tolerance.
pub const ANGLE_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("degenerate triangle (a={a}, b={b}, c={c}): triangle inequality fails or is tight")]
    DegenerateTriangle { a: f64, b: f64, c: f64 },
    #[error("degenerate face at index {face}: {source}")]
    DegenerateFace {
        face: usize,
        source: alloc::boxed::Box<GeometryError>,
    },
}

/// Edge-length data of a suspension: `N` non-apical vertexes, upper edges
/// `l_k = |u - v_k|`, lower edges `m_k = |w - v_k|`, equatorial edges
/// `L_k = |v_k - v_{k+1}|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuspensionParams {
    n: usize,
    l: Vec<f64>,
    m: Vec<f64>,
    big_l: Vec<f64>,
}

/// One violated invariant of a [`SuspensionParams`] candidate.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `N` must be even and at least 6.
    Parity { n: usize },
    /// A length is non-positive or non-finite. `family` is "l", "m" or "L".
    NonPositiveLength { family: &'static str, index: usize },
    /// Strict triangle inequality fails for the upper face `(l_k, l_{k+1}, L_k)`.
    UpperFace { index: usize },
    /// Strict triangle inequality fails for the lower face `(m_k, m_{k+1}, L_k)`.
    LowerFace { index: usize },
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Violation::Parity { n } => write!(f, "N = {n} is not an even integer >= 6"),
            Violation::NonPositiveLength { family, index } => {
                write!(f, "{family}_{index} is not strictly positive and finite")
            }
            Violation::UpperFace { index } => {
                write!(f, "upper face {index}: triangle inequality fails")
            }
            Violation::LowerFace { index } => {
                write!(f, "lower face {index}: triangle inequality fails")
            }
        }
    }
}

/// Result of [`validate_params`]: empty iff the parameters are valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.is_valid() {
            String::from("ok")
        } else {
            let mut s = String::new();
            for v in &self.violations {
                s.push_str(&format!("{v}\n"));
            }
            s
        }
    }
}

impl SuspensionParams {
    /// Builds a parameter set, checking all invariants.
    pub fn new(l: Vec<f64>, m: Vec<f64>, big_l: Vec<f64>) -> Result<Self, ValidationReport> {
        let p = Self {
            n: l.len(),
            l,
            m,
            big_l,
        };
        let report = p.validate();
        if report.is_valid() {
            Ok(p)
        } else {
            Err(report)
        }
    }

    /// Builds without validation; callers must run [`validate_params`] later.
    pub fn new_unchecked(l: Vec<f64>, m: Vec<f64>, big_l: Vec<f64>) -> Self {
        Self {
            n: l.len(),
            l,
            m,
            big_l,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_half(&self) -> usize {
        self.n / 2
    }

    /// Upper edge `l_k`, 1-based cyclic.
    pub fn l(&self, k: usize) -> f64 {
        self.l[(k - 1) % self.n]
    }

    /// Lower edge `m_k`, 1-based cyclic.
    pub fn m(&self, k: usize) -> f64 {
        self.m[(k - 1) % self.n]
    }

    /// Equatorial edge `L_k`, 1-based cyclic.
    pub fn big_l(&self, k: usize) -> f64 {
        self.big_l[(k - 1) % self.n]
    }

    pub fn l_slice(&self) -> &[f64] {
        &self.l
    }

    pub fn m_slice(&self) -> &[f64] {
        &self.m
    }

    pub fn big_l_slice(&self) -> &[f64] {
        &self.big_l
    }

    /// Largest edge length, used to scale tolerances.
    pub fn max_length(&self) -> f64 {
        let mut mx = 0.0f64;
        for v in self.l.iter().chain(&self.m).chain(&self.big_l) {
            if *v > mx {
                mx = *v;
            }
        }
        mx
    }

    pub fn validate(&self) -> ValidationReport {
        validate_params(self)
    }

    /// Returns a copy with the upper edge `l_k` (1-based) replaced.
    pub fn with_l(&self, k: usize, value: f64) -> Self {
        let mut p = self.clone();
        p.l[(k - 1) % self.n] = value;
        p
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn strict_triangle(a: f64, b: f64, c: f64) -> bool {
    a + b > c && b + c > a && c + a > b
}

/// Lists every violated invariant of a candidate parameter set.
pub fn validate_params(p: &SuspensionParams) -> ValidationReport {
    let mut violations = Vec::new();
    let n = p.n;
    if n < 6 || n % 2 != 0 || p.m.len() != n || p.big_l.len() != n {
        violations.push(Violation::Parity { n });
    }
    let fam = [("l", &p.l), ("m", &p.m), ("L", &p.big_l)];
    for (name, arr) in fam {
        for (i, &v) in arr.iter().enumerate() {
            if !positive(v) {
                violations.push(Violation::NonPositiveLength {
                    family: name,
                    index: i + 1,
                });
            }
        }
    }
    if !violations.is_empty() {
        return ValidationReport { violations };
    }
    for k in 1..=n {
        let kp = k % n + 1;
        if !strict_triangle(p.l(k), p.l(kp), p.big_l(k)) {
            violations.push(Violation::UpperFace { index: k });
        }
        if !strict_triangle(p.m(k), p.m(kp), p.big_l(k)) {
            violations.push(Violation::LowerFace { index: k });
        }
    }
    ValidationReport { violations }
}

/// Angle between sides `a` and `b` of a triangle whose opposite side is
/// `opposite`, by the law of cosines. Strictly inside `(0, pi)`.
pub fn face_angle(a: f64, b: f64, opposite: f64) -> Result<f64, GeometryError> {
    if !(positive(a) && positive(b) && positive(opposite) && strict_triangle(a, b, opposite)) {
        return Err(GeometryError::DegenerateTriangle {
            a,
            b,
            c: opposite,
        });
    }
    let c = (a * a + b * b - opposite * opposite) / (2.0 * a * b);
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Face angles of all `2N` triangular faces of a suspension.
///
/// Upper face `k` is `(u, v_{k+1}, v_k)` with angles `alpha_k` at `u`,
/// `beta_k` at `v_k`, `gamma_k` at `v_{k+1}`; lower face `k` is
/// `(w, v_k, v_{k+1})` with `a_big_k` at `w`, `b_big_k` at `v_k`,
/// `gamma_big_k` at `v_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceAngles {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub a_big: Vec<f64>,
    pub b_big: Vec<f64>,
    pub gamma_big: Vec<f64>,
}

impl FaceAngles {
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha[(k - 1) % self.n()]
    }
    pub fn beta(&self, k: usize) -> f64 {
        self.beta[(k - 1) % self.n()]
    }
    pub fn gamma(&self, k: usize) -> f64 {
        self.gamma[(k - 1) % self.n()]
    }
    pub fn a_big(&self, k: usize) -> f64 {
        self.a_big[(k - 1) % self.n()]
    }
    pub fn b_big(&self, k: usize) -> f64 {
        self.b_big[(k - 1) % self.n()]
    }
    pub fn gamma_big(&self, k: usize) -> f64 {
        self.gamma_big[(k - 1) % self.n()]
    }
}

/// Computes all six face-angle families of a valid parameter set.
pub fn face_angles_of(p: &SuspensionParams) -> Result<FaceAngles, GeometryError> {
    let n = p.n();
    let mut fa = FaceAngles {
        alpha: Vec::with_capacity(n),
        beta: Vec::with_capacity(n),
        gamma: Vec::with_capacity(n),
        a_big: Vec::with_capacity(n),
        b_big: Vec::with_capacity(n),
        gamma_big: Vec::with_capacity(n),
    };
    let wrap = |face: usize| {
        move |e: GeometryError| GeometryError::DegenerateFace {
            face,
            source: alloc::boxed::Box::new(e),
        }
    };
    for k in 1..=n {
        let kp = k % n + 1;
        let (l, lp, ll) = (p.l(k), p.l(kp), p.big_l(k));
        fa.alpha.push(face_angle(l, lp, ll).map_err(wrap(k))?);
        fa.beta.push(face_angle(l, ll, lp).map_err(wrap(k))?);
        fa.gamma.push(face_angle(lp, ll, l).map_err(wrap(k))?);
        let (m, mp) = (p.m(k), p.m(kp));
        fa.a_big.push(face_angle(m, mp, ll).map_err(wrap(k))?);
        fa.b_big.push(face_angle(m, ll, mp).map_err(wrap(k))?);
        fa.gamma_big.push(face_angle(mp, ll, m).map_err(wrap(k))?);
    }
    Ok(fa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn equal_n6() -> SuspensionParams {
        SuspensionParams::new(vec![1.0; 6], vec![1.0; 6], vec![1.0; 6]).unwrap()
    }

    #[test]
    fn face_angle_equilateral() {
        assert!((face_angle(1.0, 1.0, 1.0).unwrap() - PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn face_angle_right_triangle() {
        // 3-4-5: angle between legs 3 and 4 is pi/2.
        assert!((face_angle(3.0, 4.0, 5.0).unwrap() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn face_angle_collinear_rejected() {
        assert!(matches!(
            face_angle(1.0, 1.0, 2.0),
            Err(GeometryError::DegenerateTriangle { .. })
        ));
    }

    #[test]
    fn face_angle_symmetric_in_first_two_args() {
        let a = face_angle(1.3, 0.9, 1.1).unwrap();
        let b = face_angle(0.9, 1.3, 1.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn face_angles_all_equilateral() {
        let fa = face_angles_of(&equal_n6()).unwrap();
        for k in 1..=6 {
            for v in [
                fa.alpha(k),
                fa.beta(k),
                fa.gamma(k),
                fa.a_big(k),
                fa.b_big(k),
                fa.gamma_big(k),
            ] {
                assert!((v - PI / 3.0).abs() < 1e-14);
            }
            assert!((fa.alpha(k) + fa.beta(k) + fa.gamma(k) - PI).abs() < ANGLE_SUM_TOL);
            assert!((fa.a_big(k) + fa.b_big(k) + fa.gamma_big(k) - PI).abs() < ANGLE_SUM_TOL);
        }
    }

    #[test]
    fn face_angles_right_triangle_face() {
        // l_1=3, l_2=4, L_1=5: the right angle sits between the legs 3 and 4,
        // i.e. at the apex u, so alpha_1 = pi/2.
        let l = vec![3.0, 4.0, 4.0, 4.0, 4.0, 4.0];
        let m = vec![4.0; 6];
        let big_l = vec![5.0, 4.0, 4.0, 4.0, 4.0, 5.0];
        let p = SuspensionParams::new(l, m, big_l).unwrap();
        let fa = face_angles_of(&p).unwrap();
        assert!((fa.alpha(1) - PI / 2.0).abs() < 1e-14);
        assert!((fa.alpha(1) + fa.beta(1) + fa.gamma(1) - PI).abs() < ANGLE_SUM_TOL);
    }

    #[test]
    fn face_angles_degenerate_face_reports_index() {
        let mut p = equal_n6();
        p = SuspensionParams::new_unchecked(
            {
                let mut l = p.l_slice().to_vec();
                l[0] = 0.4;
                l[1] = 0.6;
                l
            },
            p.m_slice().to_vec(),
            p.big_l_slice().to_vec(),
        );
        match face_angles_of(&p) {
            Err(GeometryError::DegenerateFace { face, .. }) => assert_eq!(face, 1),
            other => panic!("expected degenerate face, got {other:?}"),
        }
    }

    #[test]
    fn validate_accepts_equal_lengths() {
        assert!(validate_params(&equal_n6()).is_valid());
    }

    #[test]
    fn validate_rejects_odd_n() {
        let p = SuspensionParams::new_unchecked(vec![1.0; 5], vec![1.0; 5], vec![1.0; 5]);
        let r = validate_params(&p);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Parity { n: 5 })));
    }

    #[test]
    fn validate_reports_upper_face_violation() {
        let p = SuspensionParams::new_unchecked(
            vec![1.0; 6],
            vec![1.0; 6],
            vec![3.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        );
        let r = validate_params(&p);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::UpperFace { index: 1 })));
    }

    #[test]
    fn validate_matches_face_angles_success() {
        // validate_params accepts exactly the inputs face_angles_of succeeds on.
        let cases = [
            (vec![1.0; 6], vec![1.0; 6], vec![1.0; 6]),
            (vec![1.0; 6], vec![1.0; 6], vec![2.5, 1.0, 1.0, 1.0, 1.0, 1.0]),
            (vec![0.5, 2.0, 0.5, 2.0, 0.5, 2.0], vec![1.0; 6], vec![1.8; 6]),
        ];
        for (l, m, big_l) in cases {
            let p = SuspensionParams::new_unchecked(l, m, big_l);
            assert_eq!(validate_params(&p).is_valid(), face_angles_of(&p).is_ok());
        }
    }
}
