//! Recursive cylindrical coordinate model for suspensions.
//!
//! The apexes sit on the z-axis at `(0, 0, +z/2)` and `(0, 0, -z/2)` where
//! `z = |u - w|` is the variable of flexion. Each non-apical vertex `v_k`
//! sits at radius `r_k` from the axis, axial offset `(m_k^2 - l_k^2)/(2z)`,
//! and azimuth `theta_k` built by the turn-angle recursion
//! `theta_{k+1} = theta_k +/- dtheta_k`. The upper/lower edge lengths and the
//! first `N-1` equatorial edges are reproduced by construction; the suspension
//! is flexible exactly when the remaining closure edge `|v_N - v_1|` equals
//! `L_N` independently of `z`.

use alloc::vec::Vec;

use nalgebra::Vector3;

use crate::geometry::{SuspensionParams, PI};
// Needed on targets without std's inherent float methods; redundant (and
// flagged unused) on hosted targets.
#[allow(unused_imports)]
use crate::math::F64Ext;

/// Clamp tolerance for `|t_k| <= 1` and radicand feasibility. Configurations
/// on the interval boundary (flat folds) are legitimate.
pub const CLAMP_TOL: f64 = 1e-12;

/// Relative tolerance of the construction invariants asserted by [`embed`].
pub const EDGE_TOL: f64 = 1e-10;

/// Absolute bisection tolerance of [`flexion_interval`].
pub const INTERVAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("vertex {vertex}: radicand {radicand} < 0, axis distance unreachable at z = {z}")]
    InfeasibleRadius { vertex: usize, radicand: f64, z: f64 },
    #[error("edge {index}: |t| = {t_abs} > 1, equatorial edge unreachable at this z")]
    InfeasibleTurn { index: usize, t_abs: f64 },
    #[error("no feasible flexion value found in (0, {z_max}]")]
    EmptyInterval { z_max: f64 },
    #[error("solved cosine {value} outside [-1, 1]")]
    OutOfRange { value: f64 },
    #[error("construction invariant violated at vertex {vertex}: relative error {rel}")]
    InvariantViolation { vertex: usize, rel: f64 },
}

/// Branch choices for the `+/-` in the turn-angle recursion, one per
/// `k = 1..N-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPattern(Vec<i8>);

impl SignPattern {
    pub fn new(signs: Vec<i8>) -> Option<Self> {
        if signs.iter().all(|&s| s == 1 || s == -1) {
            Some(Self(signs))
        } else {
            None
        }
    }

    /// The pattern `+1` for `k = 1..M`, `-1` for `k = M+1..N-1`. Reproduces
    /// the coordinate symmetries of all three symmetric suspension types.
    pub fn default_symmetric(n: usize) -> Self {
        let m = n / 2;
        Self((0..n - 1).map(|i| if i < m { 1 } else { -1 }).collect())
    }

    /// Decodes the low `n-1` bits of `code` as a pattern (bit set => -1).
    pub fn from_bits(code: u32, n: usize) -> Self {
        Self(
            (0..n - 1)
                .map(|i| if code >> i & 1 == 1 { -1 } else { 1 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sign for edge `k`, 1-based, `k = 1..N-1`.
    pub fn sign(&self, k: usize) -> f64 {
        self.0[k - 1] as f64
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }
}

/// How the free azimuth `theta_1` is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Theta1Rule {
    Fixed(f64),
    /// `theta_1 = (pi - Sigma_M) / 2` with `Sigma_M` the sum of the first `M`
    /// turn-angle magnitudes, recomputed at each `z`.
    SymmetricHalf,
}

/// One realized configuration of a suspension at a fixed flexion value.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub z: f64,
    /// `[u, w, v_1, .., v_N]`.
    pub coords: Vec<Vector3<f64>>,
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    pub zoff: Vec<f64>,
    /// Number of turn-angle evaluations that needed clamping of `|t| > 1`.
    pub clamp_count: usize,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.coords.len() - 2
    }

    pub fn u(&self) -> Vector3<f64> {
        self.coords[0]
    }

    pub fn w(&self) -> Vector3<f64> {
        self.coords[1]
    }

    /// Non-apical vertex `v_k`, 1-based cyclic.
    pub fn v(&self, k: usize) -> Vector3<f64> {
        self.coords[2 + (k - 1) % self.n()]
    }

    /// Largest pairwise vertex distance.
    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.coords.len() {
            for j in i + 1..self.coords.len() {
                let t = (self.coords[i] - self.coords[j]).norm();
                if t > d {
                    d = t;
                }
            }
        }
        d
    }
}

/// Axial offset `(m^2 - l^2) / (2z)` of a vertex with edge lengths `l`, `m`.
pub fn axial_offset(l: f64, m: f64, z: f64) -> f64 {
    (m * m - l * l) / (2.0 * z)
}

/// Distance `r` from the axis: `sqrt((m^2 + l^2)/2 - zoff^2 - z^2/4)`.
pub fn radial_distance(l: f64, m: f64, z: f64) -> Result<f64, ModelError> {
    let zoff = axial_offset(l, m, z);
    let radicand = (m * m + l * l) / 2.0 - zoff * zoff - z * z / 4.0;
    let scale = ((m * m + l * l) / 2.0).max(1.0);
    if radicand < -CLAMP_TOL * scale {
        return Err(ModelError::InfeasibleRadius {
            vertex: 0,
            radicand,
            z,
        });
    }
    Ok(radicand.max(0.0).sqrt())
}

/// Turn angle `dtheta = acos(t)` with
/// `t = (r_next^2 + r^2 - L^2 + (zoff_next - zoff)^2) / (2 r r_next)`.
///
/// The sign of the axial term is the one that makes the distance identity
/// `|v_{k+1} - v_k| = L_k` hold exactly; see the unit tests.
pub fn turn_angle(
    r_k: f64,
    r_next: f64,
    big_l: f64,
    zoff_k: f64,
    zoff_next: f64,
) -> Result<f64, ModelError> {
    let dz = zoff_next - zoff_k;
    let t = (r_next * r_next + r_k * r_k - big_l * big_l + dz * dz) / (2.0 * r_k * r_next);
    if t.abs() > 1.0 + CLAMP_TOL {
        return Err(ModelError::InfeasibleTurn {
            index: 0,
            t_abs: t.abs(),
        });
    }
    Ok(t.clamp(-1.0, 1.0).acos())
}

fn raw_turn_cosine(p: &SuspensionParams, z: f64, k: usize) -> f64 {
    // Unclamped t_k, used by feasibility scans.
    let zo = |j: usize| axial_offset(p.l(j), p.m(j), z);
    let rad = |j: usize| {
        let o = zo(j);
        (p.m(j) * p.m(j) + p.l(j) * p.l(j)) / 2.0 - o * o - z * z / 4.0
    };
    let (ra2, rb2) = (rad(k), rad(k + 1));
    if ra2 <= 0.0 || rb2 <= 0.0 {
        return f64::INFINITY;
    }
    let dz = zo(k + 1) - zo(k);
    (rb2 + ra2 - p.big_l(k) * p.big_l(k) + dz * dz) / (2.0 * ra2.sqrt() * rb2.sqrt())
}

/// True when every radicand and every turn cosine is within bounds at `z`.
pub fn is_feasible(p: &SuspensionParams, z: f64) -> bool {
    if !(z > 0.0) {
        return false;
    }
    let n = p.n();
    for k in 1..=n {
        if radial_distance(p.l(k), p.m(k), z).is_err() {
            return false;
        }
    }
    for k in 1..n {
        let t = raw_turn_cosine(p, z, k);
        if !(t.abs() <= 1.0 + CLAMP_TOL) {
            return false;
        }
    }
    true
}

/// Realizes the coordinate model at flexion value `z`.
pub fn embed(
    p: &SuspensionParams,
    z: f64,
    theta1: Theta1Rule,
    signs: &SignPattern,
) -> Result<Embedding, ModelError> {
    let n = p.n();
    assert_eq!(signs.len(), n - 1, "sign pattern must have length N-1");
    let mut zoff = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    for k in 1..=n {
        zoff.push(axial_offset(p.l(k), p.m(k), z));
        let rk = radial_distance(p.l(k), p.m(k), z).map_err(|e| match e {
            ModelError::InfeasibleRadius { radicand, z, .. } => ModelError::InfeasibleRadius {
                vertex: k,
                radicand,
                z,
            },
            other => other,
        })?;
        r.push(rk);
    }
    let mut clamp_count = 0usize;
    let mut dtheta = Vec::with_capacity(n - 1);
    for k in 1..n {
        let t = raw_turn_cosine(p, z, k);
        if t.abs() > 1.0 {
            if t.abs() > 1.0 + CLAMP_TOL {
                return Err(ModelError::InfeasibleTurn {
                    index: k,
                    t_abs: t.abs(),
                });
            }
            clamp_count += 1;
        }
        dtheta.push(t.clamp(-1.0, 1.0).acos());
    }
    let t1 = match theta1 {
        Theta1Rule::Fixed(v) => v,
        Theta1Rule::SymmetricHalf => {
            let sigma_m: f64 = dtheta[..n / 2].iter().sum();
            (PI - sigma_m) / 2.0
        }
    };
    let mut theta = Vec::with_capacity(n);
    theta.push(t1);
    for k in 1..n {
        theta.push(theta[k - 1] + signs.sign(k) * dtheta[k - 1]);
    }
    let mut coords = Vec::with_capacity(n + 2);
    coords.push(Vector3::new(0.0, 0.0, z / 2.0));
    coords.push(Vector3::new(0.0, 0.0, -z / 2.0));
    for k in 0..n {
        coords.push(Vector3::new(
            r[k] * theta[k].cos(),
            r[k] * theta[k].sin(),
            zoff[k],
        ));
    }
    let emb = Embedding {
        z,
        coords,
        r,
        theta,
        zoff,
        clamp_count,
    };
    // The construction reproduces l, m and L[1..N-1]; verify.
    for k in 1..=n {
        let du = (emb.v(k) - emb.u()).norm();
        let dw = (emb.v(k) - emb.w()).norm();
        let rel = ((du - p.l(k)) / p.l(k))
            .abs()
            .max(((dw - p.m(k)) / p.m(k)).abs());
        if rel > EDGE_TOL {
            return Err(ModelError::InvariantViolation { vertex: k, rel });
        }
        if k < n {
            let dv = (emb.v(k + 1) - emb.v(k)).norm();
            let rel = ((dv - p.big_l(k)) / p.big_l(k)).abs();
            if rel > EDGE_TOL {
                return Err(ModelError::InvariantViolation { vertex: k, rel });
            }
        }
    }
    Ok(emb)
}

/// Signed closure gap `|v_N - v_1| - L_N`.
pub fn closure_gap(emb: &Embedding, big_l_n: f64) -> f64 {
    (emb.v(emb.n()) - emb.v(1)).norm() - big_l_n
}

/// Maximal interval of flexion values over which [`embed`] succeeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlexionInterval {
    pub z_lo: f64,
    pub z_hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl FlexionInterval {
    pub fn width(&self) -> f64 {
        self.z_hi - self.z_lo
    }

    /// `count` Chebyshev-spaced samples strictly inside the interval,
    /// endpoints excluded by relative margin `margin`.
    pub fn chebyshev_samples(&self, count: usize, margin: f64) -> Vec<f64> {
        let pad = self.width() * margin;
        let (a, b) = (self.z_lo + pad, self.z_hi - pad);
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        (0..count)
            .map(|i| {
                let t = PI * (2.0 * i as f64 + 1.0) / (2.0 * count as f64);
                mid - half * t.cos()
            })
            .collect()
    }

    /// Central fraction of the interval (e.g. 0.8 for the middle 80%).
    pub fn central(&self, fraction: f64) -> FlexionInterval {
        let pad = self.width() * (1.0 - fraction) / 2.0;
        FlexionInterval {
            z_lo: self.z_lo + pad,
            z_hi: self.z_hi - pad,
            lo_open: false,
            hi_open: false,
        }
    }
}

const INTERVAL_GRID: usize = 4096;

/// Locates the widest contiguous feasible interval of `z` by grid scan and
/// bisection to absolute tolerance [`INTERVAL_TOL`].
pub fn flexion_interval(p: &SuspensionParams) -> Result<FlexionInterval, ModelError> {
    let mut z_max = 0.0f64;
    for k in 1..=p.n() {
        let b = 2.0 * ((p.m(k) * p.m(k) + p.l(k) * p.l(k)) / 2.0).sqrt();
        if b > z_max {
            z_max = b;
        }
    }
    let grid: Vec<f64> = (1..=INTERVAL_GRID)
        .map(|i| z_max * i as f64 / INTERVAL_GRID as f64)
        .collect();
    let feas: Vec<bool> = grid.iter().map(|&z| is_feasible(p, z)).collect();
    // Widest contiguous run of feasible grid points.
    let mut best: Option<(usize, usize)> = None;
    let mut run_start = None;
    for i in 0..=feas.len() {
        match (run_start, feas.get(i).copied().unwrap_or(false)) {
            (None, true) => run_start = Some(i),
            (Some(s), false) => {
                if best.map_or(true, |(bs, be)| i - 1 - s > be - bs) {
                    best = Some((s, i - 1));
                }
                run_start = None;
            }
            _ => {}
        }
    }
    let (s, e) = best.ok_or(ModelError::EmptyInterval { z_max })?;
    let bisect = |mut good: f64, mut bad: f64| -> f64 {
        while (good - bad).abs() > INTERVAL_TOL {
            let mid = (good + bad) / 2.0;
            if is_feasible(p, mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };
    let z_lo = if s == 0 {
        let lo = bisect(grid[0], 0.0);
        if lo < INTERVAL_TOL * 10.0 {
            0.0
        } else {
            lo
        }
    } else {
        bisect(grid[s], grid[s - 1])
    };
    let z_hi = if e == grid.len() - 1 {
        grid[e]
    } else {
        bisect(grid[e], grid[e + 1])
    };
    Ok(FlexionInterval {
        z_lo,
        z_hi,
        lo_open: !is_feasible(p, z_lo),
        hi_open: !is_feasible(p, z_hi),
    })
}

/// Solves eq. `z^2 = l^2 + m^2 - 2 m l (cos b cos B + sin b sin B cos e)`
/// for the dihedral `e` in `[0, pi]`.
pub fn dihedral_from_z(l: f64, m: f64, beta: f64, b_big: f64, z: f64) -> Result<f64, ModelError> {
    let num = l * l + m * m - z * z - 2.0 * m * l * beta.cos() * b_big.cos();
    let den = 2.0 * m * l * beta.sin() * b_big.sin();
    let c = num / den;
    if c.abs() > 1.0 + CLAMP_TOL {
        return Err(ModelError::OutOfRange { value: c });
    }
    Ok(c.clamp(-1.0, 1.0).acos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const SQRT3: f64 = 1.7320508075688772;

    fn equal_n6() -> SuspensionParams {
        SuspensionParams::new(vec![1.0; 6], vec![1.0; 6], vec![1.0; 6]).unwrap()
    }

    #[test]
    fn axial_offset_cases() {
        assert_eq!(axial_offset(1.0, 1.0, 0.37), 0.0);
        assert!((axial_offset(1.0, core::f64::consts::SQRT_2, 1.0) - 0.5).abs() < 1e-15);
        assert!((axial_offset(2.0, 1.0, 2.0) + 0.75).abs() < 1e-15);
    }

    #[test]
    fn radial_distance_cases() {
        assert!((radial_distance(1.0, 1.0, 1e-8).unwrap() - 1.0).abs() < 1e-12);
        assert!((radial_distance(1.0, 1.0, 1.0).unwrap() - SQRT3 / 2.0).abs() < 1e-15);
        assert!(
            (radial_distance(1.0, core::f64::consts::SQRT_2, 1.0).unwrap() - 1.0).abs() < 1e-15
        );
        assert!(matches!(
            radial_distance(1.0, 1.0, 3.0),
            Err(ModelError::InfeasibleRadius { .. })
        ));
    }

    #[test]
    fn turn_angle_cases() {
        assert!((turn_angle(1.0, 1.0, 1.0, 0.0, 0.0).unwrap() - PI / 3.0).abs() < 1e-15);
        assert_eq!(turn_angle(1.0, 1.0, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!((turn_angle(0.5, 0.5, 1.0, 0.0, 0.0).unwrap() - PI).abs() < 1e-15);
        assert!(matches!(
            turn_angle(0.4, 0.4, 1.0, 0.0, 0.0),
            Err(ModelError::InfeasibleTurn { .. })
        ));
    }

    #[test]
    fn embed_equal_lengths_at_unit_z() {
        let p = equal_n6();
        let emb = embed(
            &p,
            1.0,
            Theta1Rule::SymmetricHalf,
            &SignPattern::default_symmetric(6),
        )
        .unwrap();
        let dtheta = (1.0f64 / 3.0).acos();
        assert!((emb.theta[0] - (PI - 3.0 * dtheta) / 2.0).abs() < 1e-12);
        assert!((emb.theta[0] + 0.2756428).abs() < 1e-6);
        assert!((emb.theta[1] - emb.theta[0] - dtheta).abs() < 1e-12);
        for k in 0..6 {
            assert!((emb.r[k] - SQRT3 / 2.0).abs() < 1e-14);
            assert_eq!(emb.zoff[k], 0.0);
        }
    }

    #[test]
    fn embed_reproduces_edge_lengths() {
        let p = SuspensionParams::new(
            vec![1.1, 1.3, 0.9, 1.2, 1.0, 1.15],
            vec![1.3, 0.9, 1.2, 1.0, 1.15, 1.1],
            vec![1.0, 1.1, 0.95, 1.05, 1.2, 0.9],
        )
        .unwrap();
        let signs = SignPattern::default_symmetric(6);
        for &z in &[0.6, 0.9, 1.2] {
            if !is_feasible(&p, z) {
                continue;
            }
            let emb = embed(&p, z, Theta1Rule::Fixed(0.3), &signs).unwrap();
            for k in 1..=6 {
                assert!(((emb.v(k) - emb.u()).norm() - p.l(k)).abs() < 1e-10);
                assert!(((emb.v(k) - emb.w()).norm() - p.m(k)).abs() < 1e-10);
            }
            for k in 1..6 {
                assert!(((emb.v(k + 1) - emb.v(k)).norm() - p.big_l(k)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn embed_equal_lengths_at_fold_limit() {
        let p = equal_n6();
        let emb = embed(
            &p,
            SQRT3,
            Theta1Rule::SymmetricHalf,
            &SignPattern::default_symmetric(6),
        )
        .unwrap();
        for k in 0..6 {
            assert!((emb.r[k] - 0.5).abs() < 1e-12);
        }
        // consecutive turn angles are all pi
        for k in 1..6 {
            let d = (emb.theta[k] - emb.theta[k - 1]).abs();
            assert!((d - PI).abs() < 1e-6);
        }
    }

    #[test]
    fn closure_gap_equal_lengths_is_zero() {
        let p = equal_n6();
        let signs = SignPattern::default_symmetric(6);
        for i in 1..20 {
            let z = SQRT3 * i as f64 / 20.0;
            let emb = embed(&p, z, Theta1Rule::SymmetricHalf, &signs).unwrap();
            assert!(closure_gap(&emb, 1.0).abs() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn closure_gap_detects_perturbation() {
        // Perturbing l_2 breaks closure; l_1 would not, because with the
        // symmetric sign pattern theta_N - theta_1 collapses to the first
        // turn and |v_N - v_1| reduces to the L_1 distance identity.
        let p = equal_n6().with_l(2, 1.01);
        let signs = SignPattern::default_symmetric(6);
        let mut max_gap = 0.0f64;
        for i in 1..30 {
            let z = 1.6 * i as f64 / 30.0;
            if let Ok(emb) = embed(&p, z, Theta1Rule::SymmetricHalf, &signs) {
                max_gap = max_gap.max(closure_gap(&emb, 1.0).abs());
            }
        }
        assert!(max_gap > 1e-4, "max gap {max_gap}");
    }

    #[test]
    fn flexion_interval_equal_lengths() {
        let iv = flexion_interval(&equal_n6()).unwrap();
        assert_eq!(iv.z_lo, 0.0);
        assert!(iv.lo_open);
        assert!((iv.z_hi - SQRT3).abs() < 1e-9);
        assert!(!iv.hi_open);
    }

    #[test]
    fn flexion_interval_short_apex_edges() {
        // z <= l_1 + m_1 by the triangle inequality in u v_1 w.
        let mut l = vec![1.0; 6];
        let mut m = vec![1.0; 6];
        l[0] = 0.6;
        m[0] = 0.6;
        let p = SuspensionParams::new_unchecked(l, m, vec![1.0; 6]);
        let iv = flexion_interval(&p).unwrap();
        assert!(iv.z_hi <= 1.2 + 1e-9, "z_hi = {}", iv.z_hi);
        assert!(iv.width() > 0.1);
    }

    #[test]
    fn flexion_interval_empty() {
        let p = SuspensionParams::new_unchecked(vec![1.0; 6], vec![1.0; 6], vec![50.0; 6]);
        assert!(matches!(
            flexion_interval(&p),
            Err(ModelError::EmptyInterval { .. })
        ));
    }

    #[test]
    fn dihedral_from_z_closed_form() {
        let b = PI / 3.0;
        assert!((dihedral_from_z(1.0, 1.0, b, b, SQRT3).unwrap() - PI).abs() < 1e-7);
        assert!(dihedral_from_z(1.0, 1.0, b, b, 1e-9).unwrap() < 1e-4);
        let e = dihedral_from_z(1.0, 1.0, b, b, 1.0).unwrap();
        assert!((e - (1.0f64 / 3.0).acos()).abs() < 1e-14);
        assert!(matches!(
            dihedral_from_z(1.0, 1.0, b, b, 5.0),
            Err(ModelError::OutOfRange { .. })
        ));
    }

    #[test]
    fn chebyshev_samples_stay_interior() {
        let iv = FlexionInterval {
            z_lo: 0.0,
            z_hi: 2.0,
            lo_open: true,
            hi_open: false,
        };
        let s = iv.chebyshev_samples(33, 1e-6);
        assert_eq!(s.len(), 33);
        assert!(s.iter().all(|&z| z > 0.0 && z < 2.0));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}
