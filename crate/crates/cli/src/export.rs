//! Curve export: one CSV (or JSON) per requested curve plus an index file.
//! Rendering is pure — the same configuration always yields the same bytes.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use emergence_core::curves::{
    performance_curve_filtered, points_to_csv, Curve, CurveParams, CurvePoint,
};

use crate::config::RunConfig;
use crate::manifest::RunManifest;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Serialize)]
struct IndexEntry {
    file: String,
    params: CurveParams,
    feasible: bool,
    points: usize,
}

#[derive(Debug, Serialize)]
struct CurveIndex {
    filter: crate::config::CurveFilter,
    alpha_grid: crate::config::AlphaGridSettings,
    curves: Vec<IndexEntry>,
}

/// Points for one request: k' > 1 folds the tuple arity into the error
/// fraction (θ_effective = k'·θ) before the boundary solve.
pub fn curve_points(
    params: &CurveParams,
    grid: &[f64],
    max_beta_theta: Option<f64>,
) -> Result<Vec<CurvePoint>, CliError> {
    let effective_theta = params.kprime as f64 * params.theta;
    if effective_theta >= 1.0 {
        return Err(CliError::Validation(format!(
            "curve (theta={}, k={}, kprime={}): effective error fraction {} reaches 1",
            params.theta, params.k, params.kprime, effective_theta
        )));
    }
    Ok(performance_curve_filtered(
        effective_theta,
        params.k,
        grid,
        max_beta_theta,
    )?)
}

fn curve_file_name(params: &CurveParams, format: OutputFormat) -> String {
    let ext = match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    if params.kprime == 1 {
        format!("curve_theta{}_k{}.{ext}", params.theta, params.k)
    } else {
        format!(
            "curve_theta{}_k{}_kprime{}.{ext}",
            params.theta, params.k, params.kprime
        )
    }
}

fn to_pretty_json<T: Serialize>(value: &T, what: &str) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("{what} serialization: {e}")))?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// Renders every requested curve to (file name, bytes) pairs plus the
/// index, without touching the filesystem.
pub fn render_curves(
    config: &RunConfig,
    format: OutputFormat,
) -> Result<Vec<(String, Vec<u8>)>, CliError> {
    let grid = config.alpha_grid.to_grid()?;
    let cutoff = config.curve_filter.max_beta_theta();
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for params in &config.curves {
        let points = curve_points(params, &grid, cutoff)?;
        let name = curve_file_name(params, format);
        entries.push(IndexEntry {
            file: name.clone(),
            params: *params,
            feasible: !points.is_empty(),
            points: points.len(),
        });
        let bytes = match format {
            OutputFormat::Csv => points_to_csv(&points).into_bytes(),
            OutputFormat::Json => {
                let curve = Curve {
                    params: *params,
                    feasible: !points.is_empty(),
                    points,
                };
                to_pretty_json(&curve, "curve")?
            }
        };
        files.push((name, bytes));
    }
    let index = CurveIndex {
        filter: config.curve_filter,
        alpha_grid: config.alpha_grid,
        curves: entries,
    };
    files.push(("curves_index.json".to_string(), to_pretty_json(&index, "index")?));
    Ok(files)
}

/// Writes the rendered curves under `out_dir` and returns the manifest.
pub fn export_curves(
    config: &RunConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("curve", config);
    for (name, bytes) in render_curves(config, format)? {
        manifest.write_output(out_dir, &name, &bytes)?;
    }
    manifest
        .trial_counts
        .insert("curves".to_string(), config.curves.len() as u64);
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write(out_dir)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering_is_deterministic() {
        let config = RunConfig::default();
        let a = render_curves(&config, OutputFormat::Csv).unwrap();
        let b = render_curves(&config, OutputFormat::Csv).unwrap();
        assert_eq!(a, b);
        // Default configuration: six curve files plus the index.
        assert_eq!(a.len(), 7);
        assert_eq!(a.last().unwrap().0, "curves_index.json");
    }

    #[test]
    fn infeasible_curves_export_header_and_are_indexed() {
        let mut config = RunConfig::default();
        config.curves = vec![CurveParams {
            theta: 0.1,
            k: 2,
            kprime: 1,
        }];
        let files = render_curves(&config, OutputFormat::Csv).unwrap();
        let (name, bytes) = &files[0];
        assert_eq!(name, "curve_theta0.1_k2.csv");
        assert_eq!(
            std::str::from_utf8(bytes).unwrap(),
            "alpha,beta,one_minus_alpha,beta_theta,lhs_residual\n"
        );
        let index: serde_json::Value = serde_json::from_slice(&files[1].1).unwrap();
        assert_eq!(index["curves"][0]["feasible"], serde_json::json!(false));
    }

    #[test]
    fn json_format_mirrors_csv_fields() {
        let mut config = RunConfig::default();
        config.curves = vec![CurveParams {
            theta: 0.1,
            k: 8,
            kprime: 1,
        }];
        let files = render_curves(&config, OutputFormat::Json).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&files[0].1).unwrap();
        assert_eq!(value["params"]["theta"], serde_json::json!(0.1));
        assert!(value["feasible"].as_bool().unwrap());
        let point = &value["points"][0];
        for field in ["alpha", "beta", "one_minus_alpha", "beta_theta", "lhs_residual"] {
            assert!(point.get(field).is_some(), "missing {field}");
        }
    }
}
