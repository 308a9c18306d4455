//! OBJ mesh frame export and re-import.
//!
//! Each frame holds the `N + 2` vertexes (`u`, `w`, `v_1..v_N`) followed by
//! the `2N` triangular faces, upper faces wound `(u, v_{k+1}, v_k)` and lower
//! faces `(w, v_k, v_{k+1})` so the outward normals of a convex dipyramid
//! point away from its centroid.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use suspension_core::model::embed;
use suspension_core::ConstructedSuspension;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("no flexion interval: {0}")]
    Interval(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("mesh parse error: {0}")]
    Parse(String),
}

/// Renders one embedding as OBJ text with 9-digit coordinates.
pub fn frame_to_obj(s: &ConstructedSuspension, z: f64) -> Result<Option<String>, MeshError> {
    let Ok(emb) = embed(&s.params, z, s.theta1, &s.signs) else {
        return Ok(None);
    };
    let n = emb.n();
    let mut out = String::new();
    let _ = writeln!(out, "# suspension {} frame at z = {:.9}", s.tag, z);
    for c in &emb.coords {
        let _ = writeln!(out, "v {:.9} {:.9} {:.9}", c.x, c.y, c.z);
    }
    // OBJ indexes are 1-based: u = 1, w = 2, v_k = 2 + k.
    for k in 1..=n {
        let next = k % n + 1;
        let _ = writeln!(out, "f 1 {} {}", 2 + next, 2 + k);
    }
    for k in 1..=n {
        let next = k % n + 1;
        let _ = writeln!(out, "f 2 {} {}", 2 + k, 2 + next);
    }
    Ok(Some(out))
}

/// Writes `frames` OBJ files (`frame_000.obj`, ..) plus `manifest.csv`
/// listing the flexion value per frame; infeasible samples are skipped and
/// recorded in the manifest.
pub fn export_mesh_frames(
    s: &ConstructedSuspension,
    frames: usize,
    dir: &Path,
) -> Result<Vec<(usize, f64, bool)>, MeshError> {
    let iv = s
        .interval()
        .map_err(|e| MeshError::Interval(format!("{e}")))?;
    fs::create_dir_all(dir)?;
    let zs = iv.chebyshev_samples(frames, 1e-6);
    let mut manifest = String::from("frame,z,feasible,file\n");
    let mut written = Vec::new();
    for (i, &z) in zs.iter().enumerate() {
        let name = format!("frame_{i:03}.obj");
        match frame_to_obj(s, z)? {
            Some(text) => {
                fs::write(dir.join(&name), text)?;
                let _ = writeln!(manifest, "{i},{z},1,{name}");
                written.push((i, z, true));
            }
            None => {
                let _ = writeln!(manifest, "{i},{z},0,");
                written.push((i, z, false));
            }
        }
    }
    fs::write(dir.join("manifest.csv"), manifest)?;
    Ok(written)
}

/// Parsed OBJ frame: vertex coordinates in file order.
pub struct ObjFrame {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

pub fn parse_obj(text: &str) -> Result<ObjFrame, MeshError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    *slot = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| MeshError::Parse(format!("line {}: bad vertex", ln + 1)))?;
                }
                vertices.push(c);
            }
            Some("f") => {
                let mut f = [0usize; 3];
                for slot in &mut f {
                    let tok = it
                        .next()
                        .ok_or_else(|| MeshError::Parse(format!("line {}: bad face", ln + 1)))?;
                    let idx: usize = tok
                        .split('/')
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| MeshError::Parse(format!("line {}: bad face index", ln + 1)))?;
                    *slot = idx;
                }
                faces.push(f);
            }
            _ => {}
        }
    }
    Ok(ObjFrame { vertices, faces })
}

/// Edge lengths `(l, m, L)` recomputed from a parsed frame.
pub fn edge_lengths(frame: &ObjFrame) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), MeshError> {
    if frame.vertices.len() < 8 {
        return Err(MeshError::Parse(format!(
            "frame has {} vertexes, expected at least 8",
            frame.vertices.len()
        )));
    }
    let n = frame.vertices.len() - 2;
    let dist = |a: usize, b: usize| -> f64 {
        let (p, q) = (frame.vertices[a], frame.vertices[b]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    };
    let v = |k: usize| 2 + (k - 1) % n; // v_k, 1-based cyclic
    let l = (1..=n).map(|k| dist(0, v(k))).collect();
    let m = (1..=n).map(|k| dist(1, v(k))).collect();
    let big_l = (1..=n).map(|k| dist(v(k), v(k + 1))).collect();
    Ok((l, m, big_l))
}
