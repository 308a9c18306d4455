//! Build-request documents for `construct`: per-family free parameter sets,
//! plus an optional seed grid for the third family's staged search.

use serde::{Deserialize, Serialize};
use suspension_core::constructors::{
    build_i_oee, build_ii_aee, build_ii_oee, HalfParamsIIAEE, HalfParamsIIOEE, HalfParamsIOEE,
};
use suspension_core::type3::{
    build_iii_refined, certify_iii, BuildFailure, Type3Variant, TypeIIIParams,
};
use suspension_core::ConstructedSuspension;

use crate::document::{DocError, SCHEMA_VERSION};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeIIISeed {
    pub l1: f64,
    pub m1: f64,
    pub l2: f64,
    pub m2: f64,
    /// `L_1, L_3, .., L_{N-3}` (the odd-indexed equatorial lengths).
    #[serde(rename = "L_odd")]
    pub big_l_odd: Vec<f64>,
}

/// Free parameters for one `construct` invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum RequestBody {
    #[serde(rename = "i-oee")]
    IOee {
        l_half: Vec<f64>,
        m_half: Vec<f64>,
        #[serde(rename = "L_half")]
        big_l_half: Vec<f64>,
    },
    #[serde(rename = "ii-aee")]
    IiAee {
        l_full: Vec<f64>,
        #[serde(rename = "L_half")]
        big_l_half: Vec<f64>,
    },
    #[serde(rename = "ii-oee")]
    IiOee {
        l_half: Vec<f64>,
        m_half: Vec<f64>,
        #[serde(rename = "L_half")]
        big_l_half: Vec<f64>,
    },
    #[serde(rename = "iii-oae")]
    IiiOae {
        m: usize,
        seeds: Vec<TypeIIISeed>,
        fold_l: usize,
        #[serde(default = "default_budget")]
        search_budget: usize,
        #[serde(default = "default_refine")]
        refine_iters: usize,
    },
    #[serde(rename = "iii-oas")]
    IiiOas {
        m: usize,
        seeds: Vec<TypeIIISeed>,
        #[serde(default = "default_budget")]
        search_budget: usize,
        #[serde(default = "default_refine")]
        refine_iters: usize,
    },
}

fn default_budget() -> usize {
    4096
}

fn default_refine() -> usize {
    120
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildRequest {
    pub schema_version: String,
    #[serde(flatten)]
    pub body: RequestBody,
}

impl BuildRequest {
    pub fn type_str(&self) -> &'static str {
        match self.body {
            RequestBody::IOee { .. } => "i-oee",
            RequestBody::IiAee { .. } => "ii-aee",
            RequestBody::IiOee { .. } => "ii-oee",
            RequestBody::IiiOae { .. } => "iii-oae",
            RequestBody::IiiOas { .. } => "iii-oas",
        }
    }
}

pub fn load_request(text: &str) -> Result<BuildRequest, DocError> {
    let req: BuildRequest = serde_json::from_str(text)?;
    if req.schema_version != SCHEMA_VERSION {
        return Err(DocError::SchemaVersion(req.schema_version));
    }
    Ok(req)
}

/// What went wrong while constructing, with enough structure for exit codes.
#[derive(Debug, thiserror::Error)]
pub enum ConstructError {
    #[error("invalid request: {0}")]
    Invalid(String),
    /// Search exhausted; carries the best residual report per seed.
    #[error("{summary}")]
    Exhausted {
        summary: String,
        reports: Vec<BuildFailure>,
    },
}

fn run_iii(
    variant: Type3Variant,
    m: usize,
    seeds: &[TypeIIISeed],
    fold_l: Option<usize>,
    budget: usize,
    refine_iters: usize,
) -> Result<ConstructedSuspension, ConstructError> {
    if seeds.is_empty() {
        return Err(ConstructError::Invalid("empty seed grid".into()));
    }
    let mut reports = Vec::new();
    for seed in seeds {
        let p = TypeIIIParams {
            variant,
            m_half: m,
            l1: seed.l1,
            m1: seed.m1,
            l2: seed.l2,
            m2: seed.m2,
            big_l_odd: seed.big_l_odd.clone(),
            fold_l,
        };
        match build_iii_refined(&p, budget, refine_iters) {
            // `construct` only emits fully certified suspensions: the build
            // gate covers closure and coplanar flat positions, and the
            // certificate additionally demands strong flexibility, the fold
            // templates and the vertex-relation residual suite.
            Ok(s) => match certify_iii(&s) {
                Ok(cert) if cert.fully_certified() => return Ok(s),
                Ok(cert) => reports.push(BuildFailure {
                    best_residuals: vec![
                        cert.verdict.max_rel_gap_deviation,
                        cert.verdict.min_dihedral_range,
                        cert.verdict.volume_max_abs,
                        cert.flat
                            .iter()
                            .map(|st| st.coplanarity_rel)
                            .fold(0.0, f64::max),
                        cert.flat.iter().map(|st| st.max_delta_err).fold(0.0, f64::max),
                        cert.tetra_worst,
                    ],
                    best_score: cert.unmet.len() as f64,
                    attempts: 0,
                    note: format!(
                        "seed built a flexible suspension that fails certification: {}",
                        cert.unmet.join("; ")
                    ),
                }),
                Err(e) => reports.push(BuildFailure {
                    best_residuals: Vec::new(),
                    best_score: f64::INFINITY,
                    attempts: 0,
                    note: format!("certificate evaluation failed: {e}"),
                }),
            },
            Err(f) => reports.push(f),
        }
    }
    let summary = format!(
        "no seed of {} produced a certified suspension; best failure score {:.3e}",
        reports.len(),
        reports
            .iter()
            .map(|r| r.best_score)
            .fold(f64::INFINITY, f64::min)
    );
    Err(ConstructError::Exhausted { summary, reports })
}

/// Runs the family-appropriate constructor for a request.
pub fn run_request(req: &BuildRequest) -> Result<ConstructedSuspension, ConstructError> {
    match &req.body {
        RequestBody::IOee {
            l_half,
            m_half,
            big_l_half,
        } => build_i_oee(&HalfParamsIOEE {
            l_half: l_half.clone(),
            m_half: m_half.clone(),
            big_l_half: big_l_half.clone(),
        })
        .map_err(|e| ConstructError::Invalid(format!("{e}"))),
        RequestBody::IiAee { l_full, big_l_half } => build_ii_aee(&HalfParamsIIAEE {
            l_full: l_full.clone(),
            big_l_half: big_l_half.clone(),
        })
        .map_err(|e| ConstructError::Invalid(format!("{e}"))),
        RequestBody::IiOee {
            l_half,
            m_half,
            big_l_half,
        } => build_ii_oee(&HalfParamsIIOEE {
            l_half: l_half.clone(),
            m_half: m_half.clone(),
            big_l_half: big_l_half.clone(),
        })
        .map_err(|e| ConstructError::Invalid(format!("{e}"))),
        RequestBody::IiiOae {
            m,
            seeds,
            fold_l,
            search_budget,
            refine_iters,
        } => run_iii(
            Type3Variant::Oae,
            *m,
            seeds,
            Some(*fold_l),
            *search_budget,
            *refine_iters,
        ),
        RequestBody::IiiOas {
            m,
            seeds,
            search_budget,
            refine_iters,
        } => run_iii(Type3Variant::Oas, *m, seeds, None, *search_budget, *refine_iters),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_oee_request_builds() {
        let text = r#"{
            "schema_version": "1",
            "type": "i-oee",
            "l_half": [1.0, 1.1, 0.9],
            "m_half": [1.05, 0.95, 1.0],
            "L_half": [1.2, 1.0, 1.1]
        }"#;
        let req = load_request(text).unwrap();
        let s = run_request(&req).unwrap();
        assert_eq!(s.n(), 6);
    }

    #[test]
    fn iii_request_with_zero_budget_reports_residuals() {
        let text = r#"{
            "schema_version": "1",
            "type": "iii-oas",
            "m": 3,
            "seeds": [{"l1": 1.0, "m1": 1.0, "l2": 1.0, "m2": 1.0, "L_odd": [1.0, 1.0]}],
            "search_budget": 0,
            "refine_iters": 0
        }"#;
        let req = load_request(text).unwrap();
        match run_request(&req) {
            Err(ConstructError::Exhausted { reports, .. }) => assert_eq!(reports.len(), 1),
            other => panic!("expected exhausted, got {other:?}"),
        }
    }

    #[test]
    fn bad_schema_version_rejected() {
        let text = r#"{"schema_version": "0", "type": "i-oee", "l_half": [], "m_half": [], "L_half": []}"#;
        assert!(load_request(text).is_err());
    }
}
