//! Flexibility certification, dihedral traces, volume and rigidity checks.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Vector3};

use crate::constructors::{ConstructedSuspension, VertexClass};
use crate::geometry::face_angles_of;
// Needed on targets without std's inherent float methods; redundant (and
// flagged unused) on hosted targets.
#[allow(unused_imports)]
use crate::math::F64Ext;
use crate::model::{
    closure_gap, dihedral_from_z, embed, Embedding, FlexionInterval, ModelError,
};
use crate::type3::{cr, sr, vp, vr};

const TAU: f64 = 2.0 * crate::geometry::PI;

/// Relative closure-gap threshold below which a suspension counts as flexible.
pub const FLEX_GAP_TOL: f64 = 1e-9;

/// Minimum dihedral range (radians) for the strong-flexibility verdict.
pub const STRONG_RANGE_TOL: f64 = 1e-3;

/// Relative singular-value threshold of the rigidity Jacobian rank.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("degenerate configuration: coincident vertexes {i} and {j}")]
    DegenerateConfiguration { i: usize, j: usize },
    #[error("vertex classification unavailable (not a Type III suspension)")]
    ClassificationUnavailable,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Angle in `[0, 2pi)` from the half-plane through `a` to the half-plane
/// through `b`, both hinged on the directed edge `p -> q`.
pub fn hinge_angle(p: Vector3<f64>, q: Vector3<f64>, a: Vector3<f64>, b: Vector3<f64>) -> f64 {
    let e = (q - p).normalize();
    let proj = |x: Vector3<f64>| {
        let d = x - p;
        d - e * e.dot(&d)
    };
    let (pa, pb) = (proj(a), proj(b));
    let phi = (pa.cross(&pb).dot(&e)).atan2(pa.dot(&pb));
    if phi < 0.0 {
        phi + TAU
    } else {
        phi
    }
}

/// Dihedral `eps_k` along the equatorial edge `v_k v_{k+1}`, between the
/// upper face (toward `u`) and the lower face (toward `w`).
pub fn dihedral_eps(emb: &Embedding, k: usize) -> f64 {
    hinge_angle(emb.v(k), emb.v(k + 1), emb.u(), emb.w())
}

/// Dihedral `delta_k` along the upper edge `u v_k`, between upper faces
/// `k-1` and `k`.
pub fn dihedral_delta(emb: &Embedding, k: usize) -> f64 {
    let n = emb.n();
    let prev = (k + n - 2) % n + 1;
    hinge_angle(emb.v(k), emb.u(), emb.v(prev), emb.v(k % n + 1))
}

/// Dihedral `Delta_k` along the lower edge `w v_k`, between lower faces
/// `k-1` and `k`.
pub fn dihedral_delta_big(emb: &Embedding, k: usize) -> f64 {
    let n = emb.n();
    let prev = (k + n - 2) % n + 1;
    hinge_angle(emb.w(), emb.v(k), emb.v(prev), emb.v(k % n + 1))
}

/// Sampled flexion path: per-sample dihedrals, volume and closure gap.
#[derive(Debug, Clone)]
pub struct DihedralTrace {
    pub z_samples: Vec<f64>,
    pub feasible: Vec<bool>,
    /// `eps[s][k-1]`, `delta[s][k-1]`, `delta_big[s][k-1]` for sample `s`.
    pub eps: Vec<Vec<f64>>,
    pub delta: Vec<Vec<f64>>,
    pub delta_big: Vec<Vec<f64>>,
    pub volume: Vec<f64>,
    pub gap: Vec<f64>,
    /// Largest diameter over feasible samples.
    pub diameter: f64,
    /// Worst disagreement between coordinate-derived `eps_k` (folded into
    /// `[0, pi]`) and the value solved from the flexion relation.
    pub eps_crosscheck_max: f64,
}

impl DihedralTrace {
    pub fn n(&self) -> usize {
        self.eps.first().map_or(0, Vec::len)
    }

    pub fn feasible_count(&self) -> usize {
        self.feasible.iter().filter(|&&f| f).count()
    }
}

/// Computes a trace over the given interval with `samples` Chebyshev points.
pub fn dihedral_trace_over(
    s: &ConstructedSuspension,
    iv: &FlexionInterval,
    samples: usize,
) -> Result<DihedralTrace, AnalysisError> {
    let p = &s.params;
    let n = p.n();
    let fa = face_angles_of(p).ok();
    let big_l_n = p.big_l(n);
    let zs = iv.chebyshev_samples(samples, 1e-6);
    let mut tr = DihedralTrace {
        z_samples: zs.clone(),
        feasible: vec![false; samples],
        eps: vec![vec![f64::NAN; n]; samples],
        delta: vec![vec![f64::NAN; n]; samples],
        delta_big: vec![vec![f64::NAN; n]; samples],
        volume: vec![f64::NAN; samples],
        gap: vec![f64::NAN; samples],
        diameter: 0.0,
        eps_crosscheck_max: 0.0,
    };
    for (si, &z) in zs.iter().enumerate() {
        let emb = match embed(p, z, s.theta1, &s.signs) {
            Ok(e) => e,
            Err(_) => continue,
        };
        tr.feasible[si] = true;
        for k in 1..=n {
            let eps = dihedral_eps(&emb, k);
            tr.eps[si][k - 1] = eps;
            tr.delta[si][k - 1] = dihedral_delta(&emb, k);
            tr.delta_big[si][k - 1] = dihedral_delta_big(&emb, k);
            if let Some(fa) = &fa {
                if let Ok(e3) = dihedral_from_z(p.l(k), p.m(k), fa.beta(k), fa.b_big(k), z) {
                    let folded = eps.min(TAU - eps);
                    let d = (folded - e3).abs();
                    if d > tr.eps_crosscheck_max {
                        tr.eps_crosscheck_max = d;
                    }
                }
            }
        }
        tr.volume[si] = signed_volume(&emb);
        tr.gap[si] = closure_gap(&emb, big_l_n);
        tr.diameter = tr.diameter.max(emb.diameter());
    }
    Ok(tr)
}

/// Trace over the full flexion interval of `s`.
pub fn dihedral_trace(
    s: &ConstructedSuspension,
    samples: usize,
) -> Result<DihedralTrace, AnalysisError> {
    let iv = s.interval()?;
    dihedral_trace_over(s, &iv, samples)
}

/// Outcome of the full certification sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FlexVerdict {
    pub flexible: bool,
    pub max_rel_gap_deviation: f64,
    pub strong: bool,
    pub min_dihedral_range: f64,
    pub volume_max_abs: f64,
    pub volume_constant: bool,
    pub feasible_samples: usize,
    /// Set when fewer than two samples embedded; other fields untrustworthy.
    pub inconclusive: bool,
}

/// Certifies the closure criterion over 33 interior samples, plus strong
/// flexibility over the central 80% and the volume invariants.
pub fn verify_flexible(s: &ConstructedSuspension) -> Result<FlexVerdict, AnalysisError> {
    let iv = s.interval()?;
    let tr = dihedral_trace_over(s, &iv, 33)?;
    let big_l_n = s.params.big_l(s.params.n());
    let mut max_rel = 0.0f64;
    for (si, &g) in tr.gap.iter().enumerate() {
        if tr.feasible[si] {
            max_rel = max_rel.max((g / big_l_n).abs());
        }
    }
    let central = dihedral_trace_over(s, &iv.central(0.8), 33)?;
    let min_range = min_dihedral_range(&central);
    let (vmax, vconst) = volume_stats(&tr);
    let feasible = tr.feasible_count();
    Ok(FlexVerdict {
        flexible: feasible >= 2 && max_rel <= FLEX_GAP_TOL,
        max_rel_gap_deviation: max_rel,
        strong: min_range >= STRONG_RANGE_TOL,
        min_dihedral_range: min_range,
        volume_max_abs: vmax,
        volume_constant: vconst,
        feasible_samples: feasible,
        inconclusive: feasible < 2,
    })
}

fn column_range(rows: &[Vec<f64>], feasible: &[bool], k: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (si, row) in rows.iter().enumerate() {
        if feasible[si] {
            lo = lo.min(row[k]);
            hi = hi.max(row[k]);
        }
    }
    if hi < lo {
        0.0
    } else {
        hi - lo
    }
}

/// Smallest range over all `3N` dihedral traces.
pub fn min_dihedral_range(tr: &DihedralTrace) -> f64 {
    let n = tr.n();
    let mut mn = f64::INFINITY;
    for k in 0..n {
        mn = mn.min(column_range(&tr.eps, &tr.feasible, k));
        mn = mn.min(column_range(&tr.delta, &tr.feasible, k));
        mn = mn.min(column_range(&tr.delta_big, &tr.feasible, k));
    }
    if mn.is_finite() {
        mn
    } else {
        0.0
    }
}

/// True iff every dihedral varies by at least [`STRONG_RANGE_TOL`].
pub fn strong_flexibility(tr: &DihedralTrace) -> bool {
    min_dihedral_range(tr) >= STRONG_RANGE_TOL
}

fn volume_stats(tr: &DihedralTrace) -> (f64, bool) {
    let mut vmax = 0.0f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (si, &v) in tr.volume.iter().enumerate() {
        if tr.feasible[si] {
            vmax = vmax.max(v.abs());
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let tol = 1e-9 * tr.diameter.powi(3);
    (vmax, hi - lo <= tol)
}

/// True iff the oriented volume is constant along the trace to
/// `1e-9 * diameter^3`.
pub fn bellows_check(tr: &DihedralTrace) -> bool {
    volume_stats(tr).1
}

/// Contribution of upper face `k`, `(1/6) u . (v_{k+1} x v_k)`.
pub fn upper_face_contribution(emb: &Embedding, k: usize) -> f64 {
    emb.u().dot(&emb.v(k + 1).cross(&emb.v(k))) / 6.0
}

/// Contribution of lower face `k`, `(1/6) w . (v_k x v_{k+1})`.
pub fn lower_face_contribution(emb: &Embedding, k: usize) -> f64 {
    emb.w().dot(&emb.v(k).cross(&emb.v(k + 1))) / 6.0
}

/// Oriented volume: sum of tetrahedron contributions of the `2N` faces,
/// upper faces wound `(u, v_{k+1}, v_k)`, lower faces `(w, v_k, v_{k+1})`.
pub fn signed_volume(emb: &Embedding) -> f64 {
    let mut v = 0.0;
    for k in 1..=emb.n() {
        v += upper_face_contribution(emb, k) + lower_face_contribution(emb, k);
    }
    v
}

/// Smallest singular value of the centered coordinate matrix; at most
/// `tol * diameter` means all vertexes are coplanar.
pub fn coplanarity_deficiency(emb: &Embedding) -> f64 {
    let m = emb.coords.len();
    let centroid: Vector3<f64> = emb.coords.iter().sum::<Vector3<f64>>() / m as f64;
    let mut a = DMatrix::zeros(m, 3);
    for (i, c) in emb.coords.iter().enumerate() {
        let d = c - centroid;
        a[(i, 0)] = d.x;
        a[(i, 1)] = d.y;
        a[(i, 2)] = d.z;
    }
    let sv = a.singular_values();
    let mut mn = f64::INFINITY;
    for v in sv.iter() {
        mn = mn.min(*v);
    }
    mn
}

/// Rank of the edge-length-map Jacobian and the resulting flex dimension
/// `3(N+2) - 6 - rank`.
pub fn rigidity_jacobian_rank(emb: &Embedding) -> Result<(usize, usize), AnalysisError> {
    let n = emb.n();
    let m = emb.coords.len();
    let scale = emb.diameter();
    for i in 0..m {
        for j in i + 1..m {
            if (emb.coords[i] - emb.coords[j]).norm() < 1e-9 * scale {
                return Err(AnalysisError::DegenerateConfiguration { i, j });
            }
        }
    }
    // Edges: u-v_k, w-v_k, v_k-v_{k+1}, each k = 1..N. Vertex column order
    // follows Embedding: u, w, v_1..v_N.
    let mut jac = DMatrix::zeros(3 * n, 3 * m);
    let mut row = 0;
    let put = |jac: &mut DMatrix<f64>, row: usize, i: usize, j: usize| {
        let d = emb.coords[i] - emb.coords[j];
        for c in 0..3 {
            jac[(row, 3 * i + c)] = d[c];
            jac[(row, 3 * j + c)] = -d[c];
        }
    };
    for k in 1..=n {
        let vk = 2 + (k - 1);
        let vk1 = 2 + k % n;
        put(&mut jac, row, 0, vk);
        put(&mut jac, row + 1, 1, vk);
        put(&mut jac, row + 2, vk, vk1);
        row += 3;
    }
    let sv = jac.singular_values();
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let rank = sv.iter().filter(|&&v| v > RANK_TOL * smax).count();
    Ok((rank, 3 * m - 6 - rank))
}

/// Per-vertex residuals of the tetrahedral-angle relations along a trace.
#[derive(Debug, Clone)]
pub struct TetraResidualTable {
    /// Worst min-over-branches residual of the adjacent-dihedral relation,
    /// per vertex.
    pub eq10_max: Vec<f64>,
    /// Which branch (0 or 1) was satisfied; `None` when it changed along the
    /// flex or no sample was feasible.
    pub eq10_branch: Vec<Option<usize>>,
    /// Worst `|cos eps_{k-1} - cos eps_k|` per vertex.
    pub eq11_eps_max: Vec<f64>,
    /// Worst `|cos delta_k - cos Delta_k|` per vertex.
    pub eq11_delta_max: Vec<f64>,
    /// Worst raw opposite-dihedral equation residuals per vertex.
    pub opposite_eps_max: Vec<f64>,
    pub opposite_delta_max: Vec<f64>,
}

impl TetraResidualTable {
    pub fn worst(&self) -> f64 {
        let mut w = 0.0f64;
        for v in self
            .eq10_max
            .iter()
            .chain(&self.eq11_eps_max)
            .chain(&self.eq11_delta_max)
        {
            w = w.max(*v);
        }
        w
    }
}

/// Evaluates the adjacent- and opposite-dihedral vertex relations of a
/// Type III suspension along a trace.
pub fn tetrahedral_angle_residuals(
    s: &ConstructedSuspension,
    tr: &DihedralTrace,
) -> Result<TetraResidualTable, AnalysisError> {
    let classes = s
        .vertex_classes
        .as_ref()
        .ok_or(AnalysisError::ClassificationUnavailable)?;
    let p = &s.params;
    let n = p.n();
    let fa = face_angles_of(p).map_err(|_| AnalysisError::ClassificationUnavailable)?;
    let mut table = TetraResidualTable {
        eq10_max: vec![0.0; n],
        eq10_branch: vec![None; n],
        eq11_eps_max: vec![0.0; n],
        eq11_delta_max: vec![0.0; n],
        opposite_eps_max: vec![0.0; n],
        opposite_delta_max: vec![0.0; n],
    };
    for k in 1..=n {
        let prev = (k + n - 2) % n + 1;
        let class = classes[k - 1];
        let (beta, b_big) = (fa.beta(k), fa.b_big(k));
        let branches: [Option<f64>; 2] = match class {
            VertexClass::Oae => [cr(b_big, beta).ok(), sr(b_big, beta).ok().map(|v| -v)],
            VertexClass::Oas => [cr(b_big, beta).ok().map(|v| -v), sr(b_big, beta).ok()],
        };
        let mut branch_seen: Option<usize> = None;
        let mut branch_stable = true;
        for si in 0..tr.z_samples.len() {
            if !tr.feasible[si] {
                continue;
            }
            let eps_k = tr.eps[si][k - 1];
            let eps_prev = tr.eps[si][prev - 1];
            let delta_k = tr.delta[si][k - 1];
            let dbig_k = tr.delta_big[si][k - 1];
            // Adjacent relation: V(delta_k, eps_k) matches one face-angle branch.
            let v = match class {
                VertexClass::Oae => vp(delta_k, eps_k),
                VertexClass::Oas => vr(delta_k, eps_k),
            };
            if let Ok(v) = v {
                let res = [
                    branches[0].map_or(f64::INFINITY, |b| (v - b).abs()),
                    branches[1].map_or(f64::INFINITY, |b| (v - b).abs()),
                ];
                let (best, bres) = if res[0] <= res[1] { (0, res[0]) } else { (1, res[1]) };
                if bres.is_finite() {
                    table.eq10_max[k - 1] = table.eq10_max[k - 1].max(bres);
                    match branch_seen {
                        None => branch_seen = Some(best),
                        Some(b) if b != best => branch_stable = false,
                        _ => {}
                    }
                }
            }
            table.eq11_eps_max[k - 1] = table.eq11_eps_max[k - 1]
                .max((eps_prev.cos() - eps_k.cos()).abs());
            table.eq11_delta_max[k - 1] = table.eq11_delta_max[k - 1]
                .max((delta_k.cos() - dbig_k.cos()).abs());
            // Raw opposite-dihedral equations for the vertex figure.
            let (g_prev, gb_prev) = (fa.gamma(prev), fa.gamma_big(prev));
            let lhs = g_prev.cos() * gb_prev.cos() + g_prev.sin() * gb_prev.sin() * eps_prev.cos();
            let rhs = beta.cos() * b_big.cos() + beta.sin() * b_big.sin() * eps_k.cos();
            table.opposite_eps_max[k - 1] = table.opposite_eps_max[k - 1].max((lhs - rhs).abs());
            let lhs2 = g_prev.cos() * beta.cos() + g_prev.sin() * beta.sin() * delta_k.cos();
            let rhs2 = gb_prev.cos() * b_big.cos() + gb_prev.sin() * b_big.sin() * dbig_k.cos();
            table.opposite_delta_max[k - 1] =
                table.opposite_delta_max[k - 1].max((lhs2 - rhs2).abs());
        }
        table.eq10_branch[k - 1] = if branch_stable { branch_seen } else { None };
    }
    Ok(table)
}

/// Vertex index pairs whose adjacent-dihedral values agree in magnitude:
/// `(1,3), (2,5), (4,7), .., (2k, 2k+3), .., (N-2, N)`.
pub fn invariant_pairs(n: usize) -> Vec<(usize, usize)> {
    let m = n / 2;
    let mut pairs = vec![(1, 3)];
    for k in 1..=m.saturating_sub(2) {
        pairs.push((2 * k, 2 * k + 3));
    }
    pairs.push((n - 2, n));
    pairs
}

/// Worst magnitude mismatch of the pair relation over a trace, using each
/// vertex's class-appropriate function.
pub fn pair_identity_max(
    s: &ConstructedSuspension,
    tr: &DihedralTrace,
) -> Result<f64, AnalysisError> {
    let classes = s
        .vertex_classes
        .as_ref()
        .ok_or(AnalysisError::ClassificationUnavailable)?;
    let n = s.params.n();
    let mut worst = 0.0f64;
    for (i, j) in invariant_pairs(n) {
        for si in 0..tr.z_samples.len() {
            if !tr.feasible[si] {
                continue;
            }
            let value = |k: usize| -> Option<f64> {
                let v = match classes[k - 1] {
                    VertexClass::Oae => vp(tr.delta[si][k - 1], tr.eps[si][k - 1]),
                    VertexClass::Oas => vr(tr.delta[si][k - 1], tr.eps[si][k - 1]),
                };
                v.ok()
            };
            if let (Some(a), Some(b)) = (value(i), value(j)) {
                worst = worst.max((a.abs() - b.abs()).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::{build_i_oee, HalfParamsIOEE};
    use crate::geometry::PI;
    use alloc::string::String;

    fn equal_n6() -> ConstructedSuspension {
        build_i_oee(&HalfParamsIOEE {
            l_half: vec![1.0; 3],
            m_half: vec![1.0; 3],
            big_l_half: vec![1.0; 3],
        })
        .unwrap()
    }

    /// Regular hexagonal dipyramid with circumradius `r`, apex height `h`,
    /// equatorial ring wound so the paper's face winding is outward.
    fn dipyramid_control(r: f64, h: f64) -> Embedding {
        let n = 6;
        let mut coords = vec![
            Vector3::new(0.0, 0.0, h),
            Vector3::new(0.0, 0.0, -h),
        ];
        for k in 0..n {
            let phi = -TAU * k as f64 / n as f64;
            coords.push(Vector3::new(r * phi.cos(), r * phi.sin(), 0.0));
        }
        Embedding {
            z: 2.0 * h,
            coords,
            r: vec![r; n],
            theta: (0..n).map(|k| -TAU * k as f64 / n as f64).collect(),
            zoff: vec![0.0; n],
            clamp_count: 0,
        }
    }

    #[test]
    fn dipyramid_control_volume() {
        // 2 * (1/3) * hex area * h with hex area 3 sqrt(3)/2 for r = 1.
        let v = signed_volume(&dipyramid_control(1.0, 1.0));
        assert!((v - 3.0f64.sqrt()).abs() < 1e-12, "v = {v}");
    }

    #[test]
    fn dipyramid_control_dihedrals_convex() {
        let emb = dipyramid_control(1.0, 1.0);
        for k in 1..=6 {
            let e = dihedral_eps(&emb, k);
            let d = dihedral_delta(&emb, k);
            let dd = dihedral_delta_big(&emb, k);
            assert!(e > 0.0 && e < PI, "eps_{k} = {e}");
            assert!(d > 0.0 && d < PI, "delta_{k} = {d}");
            assert!(dd > 0.0 && dd < PI, "Delta_{k} = {dd}");
            assert!((dd - d).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_lengths_eps_closed_form() {
        let s = equal_n6();
        for &z in &[0.1, 0.5, 1.0, 1.5, 1.7] {
            let emb = embed(&s.params, z, s.theta1, &s.signs).unwrap();
            let expect = (1.0 - 2.0 * z * z / 3.0).acos();
            for k in 1..=6 {
                let e = dihedral_eps(&emb, k);
                let folded = e.min(TAU - e);
                assert!((folded - expect).abs() < 1e-10, "z={z} k={k}");
            }
        }
    }

    #[test]
    fn equal_lengths_verdict() {
        let s = equal_n6();
        let v = verify_flexible(&s).unwrap();
        assert!(v.flexible);
        assert!(v.strong, "min range {}", v.min_dihedral_range);
        assert!(v.volume_constant);
        assert!(v.volume_max_abs < 1e-10);
        assert!(!v.inconclusive);
    }

    #[test]
    fn perturbed_equal_lengths_not_flexible() {
        let mut s = equal_n6();
        s.params = s.params.with_l(2, 1.01);
        let v = verify_flexible(&s).unwrap();
        assert!(!v.flexible);
    }

    #[test]
    fn eps_crosscheck_against_flexion_relation() {
        let s = equal_n6();
        let tr = dihedral_trace(&s, 33).unwrap();
        assert!(tr.eps_crosscheck_max < 1e-10);
    }

    #[test]
    fn i_oee_face_pair_cancellation() {
        let s = build_i_oee(&HalfParamsIOEE {
            l_half: vec![1.0, 1.2, 0.9],
            m_half: vec![1.1, 0.95, 1.3],
            big_l_half: vec![1.0, 1.1, 1.05],
        })
        .unwrap();
        let iv = s.interval().unwrap();
        for z in iv.chebyshev_samples(5, 1e-3) {
            let emb = embed(&s.params, z, s.theta1, &s.signs).unwrap();
            for k in 1..=6 {
                let pair = upper_face_contribution(&emb, k) + lower_face_contribution(&emb, k + 3);
                assert!(pair.abs() < 1e-12, "z={z} k={k} pair={pair}");
            }
            assert!(signed_volume(&emb).abs() < 1e-12);
        }
    }

    #[test]
    fn volume_rigid_motion_invariant() {
        let emb = dipyramid_control(1.3, 0.8);
        let v0 = signed_volume(&emb);
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.2);
        let shift = Vector3::new(5.0, -2.0, 7.5);
        let mut moved = emb.clone();
        for c in &mut moved.coords {
            *c = rot * *c + shift;
        }
        let v1 = signed_volume(&moved);
        assert!(((v1 - v0) / v0).abs() < 1e-12);
    }

    #[test]
    fn rigidity_rank_flexible_vs_generic() {
        // The all-equal suspension has coincident ring vertexes (every turn
        // angle is the same), so a generic flexible instance is used here.
        let s = build_i_oee(&HalfParamsIOEE {
            l_half: vec![1.0, 1.2, 0.9],
            m_half: vec![1.1, 0.95, 1.3],
            big_l_half: vec![1.0, 1.1, 1.05],
        })
        .unwrap();
        let iv = s.interval().unwrap();
        let z = 0.5 * (iv.z_lo + iv.z_hi);
        let emb = embed(&s.params, z, s.theta1, &s.signs).unwrap();
        let (rank, flex_dim) = rigidity_jacobian_rank(&emb).unwrap();
        assert!(rank <= 17, "rank {rank}");
        assert!(flex_dim >= 1);

        // Generic dipyramid built from raw coordinates is rigid.
        let control = dipyramid_control(1.1, 0.9);
        let (rank, flex_dim) = rigidity_jacobian_rank(&control).unwrap();
        assert_eq!(rank, 18);
        assert_eq!(flex_dim, 0);
    }

    #[test]
    fn rigidity_rank_rejects_coincident_vertexes() {
        let mut emb = dipyramid_control(1.0, 1.0);
        emb.coords[4] = emb.coords[6];
        assert!(matches!(
            rigidity_jacobian_rank(&emb),
            Err(AnalysisError::DegenerateConfiguration { .. })
        ));
    }

    #[test]
    fn coplanarity_of_flat_fold() {
        let s = equal_n6();
        // At the fold limit the turn cosines round near -1, so acos noise
        // bounds the directly measured deficiency at ~sqrt(machine epsilon).
        let emb = embed(&s.params, 1.7320508075688772, s.theta1, &s.signs).unwrap();
        let d = coplanarity_deficiency(&emb);
        assert!(d < 2e-7 * emb.diameter(), "deficiency {d}");
        let mid = embed(&s.params, 1.0, s.theta1, &s.signs).unwrap();
        assert!(coplanarity_deficiency(&mid) > 0.1);
    }

    #[test]
    fn strong_flexibility_rejects_frozen_column() {
        let s = equal_n6();
        let mut tr = dihedral_trace(&s, 15).unwrap();
        for row in &mut tr.delta {
            row[2] = 1.0;
        }
        assert!(!strong_flexibility(&tr));
    }

    #[test]
    fn tetra_residuals_refuse_symmetric_types() {
        let s = equal_n6();
        let tr = dihedral_trace(&s, 9).unwrap();
        assert!(matches!(
            tetrahedral_angle_residuals(&s, &tr),
            Err(AnalysisError::ClassificationUnavailable)
        ));
    }

    #[test]
    fn invariant_pairs_n6() {
        assert_eq!(invariant_pairs(6), vec![(1, 3), (2, 5), (4, 6)]);
        assert_eq!(invariant_pairs(8), vec![(1, 3), (2, 5), (4, 7), (6, 8)]);
    }

    #[test]
    fn synthetic_drifting_volume_fails_bellows() {
        let s = equal_n6();
        let mut tr = dihedral_trace(&s, 9).unwrap();
        for (i, v) in tr.volume.iter_mut().enumerate() {
            *v = i as f64 * 0.01;
        }
        assert!(!bellows_check(&tr));
    }

    #[allow(dead_code)]
    fn unused(_: String) {}
}
