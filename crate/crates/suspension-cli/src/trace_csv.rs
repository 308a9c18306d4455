//! CSV trace export: one row per flexion sample with closure gap, volume and
//! all `3N` dihedral angles.

use suspension_core::analysis::DihedralTrace;

/// Renders a trace as CSV. The header carries units (radians for angles,
/// input length units elsewhere); columns are
/// `z, gap, volume, feasible, eps_1..N, delta_1..N, Delta_1..N`.
pub fn trace_to_csv(tr: &DihedralTrace) -> String {
    let n = tr.n();
    let mut out = String::new();
    out.push_str("z[length],gap[length],volume[length^3],feasible");
    for k in 1..=n {
        out.push_str(&format!(",eps_{k}[rad]"));
    }
    for k in 1..=n {
        out.push_str(&format!(",delta_{k}[rad]"));
    }
    for k in 1..=n {
        out.push_str(&format!(",Delta_{k}[rad]"));
    }
    out.push('\n');
    for s in 0..tr.z_samples.len() {
        out.push_str(&format!(
            "{},{},{},{}",
            tr.z_samples[s],
            tr.gap[s],
            tr.volume[s],
            u8::from(tr.feasible[s])
        ));
        for col in [&tr.eps, &tr.delta, &tr.delta_big] {
            for k in 0..n {
                out.push_str(&format!(",{}", col[s][k]));
            }
        }
        out.push('\n');
    }
    out
}
