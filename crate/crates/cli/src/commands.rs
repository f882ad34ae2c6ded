use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crpoint::canonical::{bishop_normal_form, takagi_factorize};
use crpoint::consim::consim_diagonalize;
use crpoint::graph::{build_isotoped_graph, find_complex_points, GraphSurface, NEWTON_ITERS};
use crpoint::homotopy::{certify, normal_form_path_with, same_class_path, HomotopyPath, PathOptions};
use crpoint::levi::sample_reports;
use crpoint::levi::ZERO_BAND;
use crpoint::quadric::{classify_with, random_pair};
use crpoint::tol::DEGENERATE_REL;
use crpoint::{json, CMatrix, PointClass, QuadricPair};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{read_file, RunConfig, DEFAULT_LEVI_N};
use crate::error::{CliError, CliResult};
use crate::Command;

const SEARCH_RADIUS_FACTOR: f64 = 1.2;

/// Runs one command and returns the exit code for a completed run
/// (0, or 1 when a certificate fails).
pub fn run(command: &Command, cfg: &RunConfig) -> CliResult<i32> {
    let (value, code) = match command {
        Command::Classify => (classify(&read_input(cfg)?, cfg)?, 0),
        Command::Bishop => {
            let pair: QuadricPair = serde_json::from_str(&read_input(cfg)?)?;
            (to_value(&bishop_normal_form(&pair)?)?, 0)
        }
        Command::Takagi => {
            let b = matrix_or_pair(&read_input(cfg)?, |p| p.b().clone())?;
            (to_value(&takagi_factorize(&b)?)?, 0)
        }
        Command::Consim => {
            let a = matrix_or_pair(&read_input(cfg)?, |p| p.a().clone())?;
            (to_value(&consim_diagonalize(&a, cfg.seed)?)?, 0)
        }
        Command::Homotopy { target } => homotopy(&read_input(cfg)?, target, cfg)?,
        Command::Certify => {
            let path: HomotopyPath = serde_json::from_str(&read_input(cfg)?)?;
            let cert = certify(&path, cfg.samples_per_segment, cfg.tol_abs)?;
            (to_value(&cert)?, if cert.pass { 0 } else { 1 })
        }
        Command::Surface => (surface(&read_input(cfg)?, cfg)?, 0),
        Command::Levi => {
            let n = cfg.n.unwrap_or(DEFAULT_LEVI_N);
            let reports = sample_reports(cfg.model, n, cfg.samples_per_segment, cfg.seed, ZERO_BAND)?;
            (to_value(&reports)?, 0)
        }
        Command::Corpus { count } => (corpus(*count, cfg)?, 0),
    };
    write_output(&value, cfg)?;
    Ok(code)
}

fn to_value<T: Serialize + ?Sized>(v: &T) -> CliResult<String> {
    Ok(json::to_string(v)?)
}

fn read_input(cfg: &RunConfig) -> CliResult<String> {
    match &cfg.input_path {
        Some(p) if p.as_os_str() != "-" => read_file(p),
        _ => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| CliError::Input(format!("cannot read stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn write_output(text: &str, cfg: &RunConfig) -> CliResult<()> {
    let text = format!("{text}\n");
    match &cfg.output_path {
        Some(p) if p.as_os_str() != "-" => std::fs::write(p, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        _ => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(format!("cannot write stdout: {e}"))),
    }
}

/// Degenerate band: the larger of `tol_abs` and the relative band.
fn classify(text: &str, cfg: &RunConfig) -> CliResult<String> {
    let pair: QuadricPair = serde_json::from_str(text)?;
    let band = cfg.tol_abs.max(pair.default_tol() * (cfg.tol_rel / DEGENERATE_REL));
    to_value(&classify_with(&pair, band)?)
}

/// Accepts a bare matrix or a pair object, from which `pick` selects one.
fn matrix_or_pair(text: &str, pick: impl Fn(&QuadricPair) -> CMatrix) -> CliResult<CMatrix> {
    let v: Value = serde_json::from_str(text)?;
    if v.is_object() {
        let pair: QuadricPair = serde_json::from_value(v)?;
        Ok(pick(&pair))
    } else {
        Ok(serde_json::from_value(v)?)
    }
}

#[derive(Serialize)]
struct HomotopyOutput<'a> {
    path: &'a HomotopyPath,
    certificate: &'a crpoint::homotopy::Certificate,
}

fn homotopy(text: &str, target: &str, cfg: &RunConfig) -> CliResult<(String, i32)> {
    let pair: QuadricPair = serde_json::from_str(text)?;
    let (path, cert) = if target == "normal-form" {
        let opts = PathOptions {
            samples_per_segment: cfg.samples_per_segment,
            tol: cfg.tol_abs,
            ..PathOptions::default()
        };
        normal_form_path_with(&pair, cfg.seed, &opts)?
    } else {
        let to: QuadricPair = serde_json::from_str(&read_file(Path::new(target))?)?;
        let path = same_class_path(&pair, &to, cfg.seed)?;
        let cert = certify(&path, cfg.samples_per_segment, cfg.tol_abs)?;
        (path, cert)
    };
    let out = HomotopyOutput {
        path: &path,
        certificate: &cert,
    };
    Ok((to_value(&out)?, if cert.pass { 0 } else { 1 }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceInput {
    pair: Option<QuadricPair>,
    path_file: Option<PathBuf>,
    epsilon: Option<f64>,
}

fn surface(text: &str, cfg: &RunConfig) -> CliResult<String> {
    let input: SurfaceInput = serde_json::from_str(text)?;
    let epsilon = cfg
        .epsilon
        .or(input.epsilon)
        .ok_or_else(|| CliError::Input("surface needs an epsilon".into()))?;
    let surface = match (input.pair, input.path_file) {
        (Some(pair), None) => GraphSurface::constant(&pair, epsilon)?,
        (None, Some(file)) => {
            // relative path files are resolved next to the input file
            let file = match (&cfg.input_path, file.is_relative()) {
                (Some(input), true) => input.parent().unwrap_or(Path::new(".")).join(file),
                _ => file,
            };
            let path: HomotopyPath = serde_json::from_str(&read_file(&file)?)?;
            build_isotoped_graph(&path, epsilon)?
        }
        _ => return Err(CliError::Input("surface input needs exactly one of pair and path_file".into())),
    };
    let radius = cfg.radius.unwrap_or(SEARCH_RADIUS_FACTOR * epsilon);
    let grid = cfg.grid.unwrap_or(if surface.n == 1 { 41 } else { 5 });
    to_value(&find_complex_points(&surface, radius, grid, NEWTON_ITERS)?)
}

#[derive(Serialize)]
struct CorpusEntry {
    seed: u64,
    pair: QuadricPair,
    classification: PointClass,
}

fn corpus(count: u64, cfg: &RunConfig) -> CliResult<String> {
    let entries = (0..count)
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let n = cfg.n.unwrap_or(1 + (i % 4) as usize);
            let pair = random_pair(n, seed, None)?;
            let band = cfg.tol_abs.max(pair.default_tol() * (cfg.tol_rel / DEGENERATE_REL));
            let class = classify_with(&pair, band)?;
            Ok(CorpusEntry {
                seed,
                pair,
                classification: class,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    to_value(&entries[..])
}
