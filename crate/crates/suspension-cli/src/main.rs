//! `suspension`: build, flex and certify flexible suspensions from the
//! command line.
//!
//! Exit codes: 0 success, 1 usage, 2 validation error, 3 certification
//! failed, 4 build (search) failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use suspension_core::analysis::{
    dihedral_trace, rigidity_jacobian_rank, tetrahedral_angle_residuals, verify_flexible,
};
use suspension_core::model::embed;
use suspension_core::type3::{flat_states, fold_spec, FoldKind, Type3Variant};
use suspension_core::SuspensionTypeTag;

use suspension_cli::document::{load_suspension, save_suspension, SuspensionDocument};
use suspension_cli::request::{load_request, run_request, ConstructError};
use suspension_cli::{mesh, trace_csv};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_CERTIFICATION: u8 = 3;
const EXIT_BUILD: u8 = 4;

#[derive(Parser)]
#[command(name = "suspension", version, about)]
struct Cli {
    /// Seed for any stochastic search (accepted for reproducibility; all
    /// current searches are deterministic).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct InFile {
    /// Parameter document to read.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a suspension of the given family from a request document.
    Construct {
        /// Family: i-oee | ii-aee | ii-oee | iii-oae | iii-oas.
        #[arg(long = "type")]
        type_tag: String,
        /// Build-request document (free parameters / seed grid).
        #[arg(long)]
        params: PathBuf,
        /// Output parameter document.
        #[arg(long)]
        out: PathBuf,
    },
    /// Certify flexibility of a parameter document (exit 0 iff flexible).
    Verify {
        #[command(flatten)]
        input: InFile,
        /// Number of flexion samples.
        #[arg(long, default_value_t = 33)]
        samples: usize,
        /// Relative closure-gap tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Write the dihedral/volume/gap trace as CSV.
    Trace {
        #[command(flatten)]
        input: InFile,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 33)]
        samples: usize,
    },
    /// Export OBJ mesh frames along the flexion interval.
    Export {
        #[command(flatten)]
        input: InFile,
        #[arg(long)]
        frames: usize,
        #[arg(long)]
        dir: PathBuf,
    },
    /// Rigidity-matrix rank and flex-space dimension at a flexion value.
    Rank {
        #[command(flatten)]
        input: InFile,
        #[arg(long)]
        z: f64,
    },
    /// Locate and grade the two flat positions of a third-family suspension.
    FoldCheck {
        #[command(flatten)]
        input: InFile,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version as "errors" with success intent.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let out = Output {
        quiet: cli.quiet,
        json: cli.json,
    };
    match run(&cli, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CmdError::Silent(..)) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}

struct Output {
    quiet: bool,
    json: bool,
}

impl Output {
    fn info(&self, msg: &str) {
        if !self.quiet && !self.json {
            println!("{msg}");
        }
    }

    fn json(&self, value: serde_json::Value) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(&value).unwrap());
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CmdError {
    #[error("{0}")]
    Validation(String),
    /// Message already emitted (e.g. inside the JSON payload).
    #[error("{1}")]
    Silent(u8, String),
}

impl CmdError {
    fn code(&self) -> u8 {
        match self {
            CmdError::Validation(_) => EXIT_VALIDATION,
            CmdError::Silent(c, _) => *c,
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String, CmdError> {
    fs::read_to_string(path)
        .map_err(|e| CmdError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn load_doc(path: &PathBuf) -> Result<SuspensionDocument, CmdError> {
    let text = read_file(path)?;
    load_suspension(&text).map_err(|e| CmdError::Validation(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli, out: &Output) -> Result<(), CmdError> {
    match &cli.cmd {
        Cmd::Construct {
            type_tag,
            params,
            out: out_path,
        } => {
            if SuspensionTypeTag::parse(type_tag).is_none() {
                return Err(CmdError::Validation(format!("unknown type {type_tag:?}")));
            }
            let req = load_request(&read_file(params)?)
                .map_err(|e| CmdError::Validation(format!("{}: {e}", params.display())))?;
            if req.type_str() != type_tag {
                return Err(CmdError::Validation(format!(
                    "request file is for type {:?}, but --type {:?} was given",
                    req.type_str(),
                    type_tag
                )));
            }
            let built = match run_request(&req) {
                Ok(s) => s,
                Err(ConstructError::Invalid(msg)) => return Err(CmdError::Validation(msg)),
                Err(ConstructError::Exhausted { summary, reports }) => {
                    let payload = json!({
                        "status": "build-failure",
                        "summary": summary,
                        "reports": reports.iter().map(|r| json!({
                            "best_residuals": r.best_residuals,
                            "best_score": r.best_score,
                            "attempts": r.attempts,
                            "note": r.note,
                        })).collect::<Vec<_>>(),
                    });
                    out.json(payload);
                    if !out.json {
                        eprintln!("residual report:");
                        for (i, r) in reports.iter().enumerate() {
                            eprintln!(
                                "  seed {i}: score {:.3e}, residuals {:?}, {} expansions: {}",
                                r.best_score, r.best_residuals, r.attempts, r.note
                            );
                        }
                    }
                    return Err(CmdError::Silent(EXIT_BUILD, summary));
                }
            };
            let doc = SuspensionDocument::from_suspension(&built);
            fs::write(out_path, save_suspension(&doc))
                .map_err(|e| CmdError::Validation(format!("cannot write {}: {e}", out_path.display())))?;
            out.info(&format!(
                "constructed {} suspension with N = {} -> {}",
                built.tag,
                built.n(),
                out_path.display()
            ));
            out.json(json!({
                "status": "ok",
                "type": built.tag.as_str(),
                "n": built.n(),
                "out": out_path.display().to_string(),
            }));
            Ok(())
        }
        Cmd::Verify {
            input,
            samples,
            tol,
        } => {
            let doc = load_doc(&input.input)?;
            let s = doc
                .to_suspension()
                .map_err(|e| CmdError::Validation(format!("{e}")))?;
            if *samples < 2 {
                return Err(CmdError::Validation("--samples must be at least 2".into()));
            }
            let verdict = verify_flexible(&s)
                .map_err(|e| CmdError::Validation(format!("cannot analyze: {e}")))?;
            let flexible = verdict.max_rel_gap_deviation <= *tol
                && verdict.feasible_samples >= 2
                && !verdict.inconclusive;
            out.json(json!({
                "flexible": flexible,
                "max_rel_gap_deviation": verdict.max_rel_gap_deviation,
                "strong": verdict.strong,
                "min_dihedral_range": verdict.min_dihedral_range,
                "volume_max_abs": verdict.volume_max_abs,
                "volume_constant": verdict.volume_constant,
                "feasible_samples": verdict.feasible_samples,
                "inconclusive": verdict.inconclusive,
            }));
            out.info(&format!(
                "flexible: {flexible} (max relative gap deviation {:.3e}); strong: {}; |volume| <= {:.3e}",
                verdict.max_rel_gap_deviation, verdict.strong, verdict.volume_max_abs
            ));
            if flexible {
                Ok(())
            } else {
                Err(CmdError::Silent(
                    EXIT_CERTIFICATION,
                    format!(
                        "certification failed: max relative gap deviation {:.3e} > {tol:.1e}",
                        verdict.max_rel_gap_deviation
                    ),
                ))
            }
        }
        Cmd::Trace {
            input,
            out: out_path,
            samples,
        } => {
            let doc = load_doc(&input.input)?;
            let s = doc
                .to_suspension()
                .map_err(|e| CmdError::Validation(format!("{e}")))?;
            let tr = dihedral_trace(&s, *samples)
                .map_err(|e| CmdError::Validation(format!("cannot trace: {e}")))?;
            fs::write(out_path, trace_csv::trace_to_csv(&tr))
                .map_err(|e| CmdError::Validation(format!("cannot write {}: {e}", out_path.display())))?;
            out.info(&format!(
                "wrote {} samples ({} feasible) -> {}",
                tr.z_samples.len(),
                tr.feasible_count(),
                out_path.display()
            ));
            out.json(json!({
                "samples": tr.z_samples.len(),
                "feasible": tr.feasible_count(),
                "out": out_path.display().to_string(),
            }));
            Ok(())
        }
        Cmd::Export {
            input,
            frames,
            dir,
        } => {
            let doc = load_doc(&input.input)?;
            let s = doc
                .to_suspension()
                .map_err(|e| CmdError::Validation(format!("{e}")))?;
            let written = mesh::export_mesh_frames(&s, *frames, dir)
                .map_err(|e| CmdError::Validation(format!("{e}")))?;
            let ok = written.iter().filter(|&&(_, _, f)| f).count();
            out.info(&format!(
                "wrote {ok}/{} frames -> {}",
                written.len(),
                dir.display()
            ));
            out.json(json!({
                "frames": written.len(),
                "feasible": ok,
                "dir": dir.display().to_string(),
            }));
            Ok(())
        }
        Cmd::Rank { input, z } => {
            let doc = load_doc(&input.input)?;
            let s = doc
                .to_suspension()
                .map_err(|e| CmdError::Validation(format!("{e}")))?;
            let emb = embed(&s.params, *z, s.theta1, &s.signs)
                .map_err(|e| CmdError::Validation(format!("cannot embed at z = {z}: {e}")))?;
            let (rank, flex_dim) = rigidity_jacobian_rank(&emb)
                .map_err(|e| CmdError::Validation(format!("{e}")))?;
            out.info(&format!("rank {rank}, flex-space dimension {flex_dim}"));
            out.json(json!({ "rank": rank, "flex_dim": flex_dim }));
            Ok(())
        }
        Cmd::FoldCheck { input } => {
            let doc = load_doc(&input.input)?;
            let s = doc
                .to_suspension()
                .map_err(|e| CmdError::Validation(format!("{e}")))?;
            let variant = match s.tag {
                SuspensionTypeTag::IiiOae => Type3Variant::Oae,
                SuspensionTypeTag::IiiOas => Type3Variant::Oas,
                other => {
                    return Err(CmdError::Validation(format!(
                        "fold-check applies to the third family only, not {other}"
                    )))
                }
            };
            let states = flat_states(&s).map_err(|e| CmdError::Validation(format!("{e}")))?;
            let n = s.n();
            let fold_l = s.fold_l.unwrap_or(0);
            let mut payload = Vec::new();
            for st in &states {
                let spec = fold_spec(variant, n, fold_l, st.kind);
                payload.push(json!({
                    "z": st.z,
                    "kind": match st.kind { FoldKind::Open => "open", FoldKind::Compact => "compact" },
                    "coplanarity_rel": st.coplanarity_rel,
                    "max_delta_err": st.max_delta_err,
                    "expected_delta": spec.delta,
                }));
                out.info(&format!(
                    "flat state at z = {:.9}: {:?}, coplanarity {:.3e}, delta mismatch {:.3e}",
                    st.z, st.kind, st.coplanarity_rel, st.max_delta_err
                ));
            }
            // The dihedral-relation suite doubles as a fold certificate.
            let residual_worst = dihedral_trace(&s, 33)
                .ok()
                .and_then(|tr| tetrahedral_angle_residuals(&s, &tr).ok())
                .map(|t| t.worst());
            out.json(json!({
                "states": payload,
                "vertex_relation_residual": residual_worst,
            }));
            let coplanar = states.iter().filter(|st| st.coplanarity_rel <= 1e-8).count();
            if coplanar >= 2 {
                Ok(())
            } else {
                Err(CmdError::Silent(
                    EXIT_CERTIFICATION,
                    format!("expected two coplanar flat states, found {coplanar}"),
                ))
            }
        }
    }
}
