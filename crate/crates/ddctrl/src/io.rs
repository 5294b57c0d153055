//! File formats: trajectory CSV (one row per time step, comma-separated,
//! LF line endings, no header), system/spec JSON, and the result JSON
//! emitted by the CLI.

use crate::error::{Error, Result};
use crate::h2::{H2Certificate, H2Spec};
use crate::linalg::{Mat, SymmetricMatrix};
use crate::lqr::{Controller, LqrSpec, SolveDiag};
use crate::sdp::SolveStatus;
use crate::system::{DataRecord, LtiSystem};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Parses a CSV of decimal numbers into a matrix, one row per line.
pub fn read_csv_matrix(path: &Path) -> Result<Mat> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    parse_csv_matrix(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn parse_csv_matrix(text: &str) -> std::result::Result<Mat, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, String> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("line {}: '{}' is not a number", lineno + 1, f.trim()))
            })
            .collect();
        let row = row?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(format!(
                    "line {}: {} fields, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("file contains no data rows".into());
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

/// Writes one row per line; values use the shortest round-trip decimal form.
pub fn write_csv_matrix(path: &Path, m: &Mat) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", m[(i, j)]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Loads measured data from one or more (X, U[, W]) file triples; multiple
/// triples are treated as independent trajectory segments and concatenated.
pub fn read_data(x_paths: &[&Path], u_paths: &[&Path], w_paths: &[&Path]) -> Result<DataRecord> {
    if x_paths.is_empty() || x_paths.len() != u_paths.len() {
        return Err(Error::Format(format!(
            "need matching state/input files, got {} and {}",
            x_paths.len(),
            u_paths.len()
        )));
    }
    if !w_paths.is_empty() && w_paths.len() != x_paths.len() {
        return Err(Error::Format(format!(
            "disturbance files must match the trajectory count ({}), got {}",
            x_paths.len(),
            w_paths.len()
        )));
    }
    let mut segments = Vec::with_capacity(x_paths.len());
    for (idx, (x_path, u_path)) in x_paths.iter().zip(u_paths).enumerate() {
        // rows are time steps on disk; in memory signals are columns
        let x = read_csv_matrix(x_path)?.transpose();
        let u = read_csv_matrix(u_path)?.transpose();
        let w = if w_paths.is_empty() {
            None
        } else {
            Some(read_csv_matrix(w_paths[idx])?.transpose())
        };
        segments.push(DataRecord::new(u, x, w)?);
    }
    DataRecord::concat(&segments)
}

/// Writes a single-trajectory record back to CSV files.
pub fn write_data(
    data: &DataRecord,
    x_path: &Path,
    u_path: &Path,
    w_path: Option<&Path>,
) -> Result<()> {
    let x = data.x_full().ok_or_else(|| {
        Error::Format("concatenated multi-segment data cannot be exported as one trajectory".into())
    })?;
    write_csv_matrix(x_path, &x.transpose())?;
    write_csv_matrix(u_path, &data.u_minus().transpose())?;
    match (w_path, data.w_minus()) {
        (Some(p), Some(w)) => write_csv_matrix(p, &w.transpose())?,
        (Some(_), None) => {
            return Err(Error::Format("record has no disturbance data to export".into()))
        }
        _ => {}
    }
    Ok(())
}

pub fn mat_to_nested(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn nested_to_mat(rows: &[Vec<f64>], what: &str) -> Result<Mat> {
    if rows.is_empty() {
        return Ok(Mat::zeros(0, 0));
    }
    let c = rows[0].len();
    if rows.iter().any(|r| r.len() != c) {
        return Err(Error::Format(format!("{what}: ragged rows")));
    }
    Ok(Mat::from_fn(rows.len(), c, |i, j| rows[i][j]))
}

#[derive(Debug, Serialize, Deserialize)]
struct SystemJson {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "E", skip_serializing_if = "Option::is_none")]
    e: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    c: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    d: Option<Vec<Vec<f64>>>,
}

pub fn read_system_json(path: &Path) -> Result<LtiSystem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    let raw: SystemJson = serde_json::from_str(&text)?;
    LtiSystem::with_all(
        nested_to_mat(&raw.a, "A")?,
        nested_to_mat(&raw.b, "B")?,
        raw.e.as_deref().map(|m| nested_to_mat(m, "E")).transpose()?,
        raw.c.as_deref().map(|m| nested_to_mat(m, "C")).transpose()?,
        raw.d.as_deref().map(|m| nested_to_mat(m, "D")).transpose()?,
    )
}

pub fn write_system_json(path: &Path, sys: &LtiSystem) -> Result<()> {
    let raw = SystemJson {
        a: mat_to_nested(&sys.a),
        b: mat_to_nested(&sys.b),
        e: sys.e.as_ref().map(mat_to_nested),
        c: sys.c.as_ref().map(mat_to_nested),
        d: sys.d.as_ref().map(mat_to_nested),
    };
    std::fs::write(path, serde_json::to_string_pretty(&raw)?)?;
    Ok(())
}

/// Cost specification file: either the LQR form {"Q", "R", "x0", "gamma"?}
/// or the H2 form {"C", "D", "gamma"}.
#[derive(Debug, Deserialize)]
struct SpecJson {
    #[serde(rename = "Q")]
    q: Option<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    r: Option<Vec<Vec<f64>>>,
    x0: Option<Vec<f64>>,
    #[serde(rename = "C")]
    c: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D")]
    d: Option<Vec<Vec<f64>>>,
    gamma: Option<f64>,
}

pub enum ProblemSpec {
    Lqr(LqrSpec),
    H2(H2Spec),
}

pub fn read_spec_json(path: &Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    let raw: SpecJson = serde_json::from_str(&text)?;
    match (&raw.q, &raw.r, &raw.x0, &raw.c, &raw.d) {
        (Some(q), Some(r), Some(x0), None, None) => {
            let q = SymmetricMatrix::new(nested_to_mat(q, "Q")?)?;
            let r = SymmetricMatrix::new(nested_to_mat(r, "R")?)?;
            Ok(ProblemSpec::Lqr(LqrSpec::new(
                q,
                r,
                DVector::from_column_slice(x0),
                raw.gamma,
            )?))
        }
        (None, None, None, Some(c), Some(d)) => {
            let gamma = raw.gamma.ok_or_else(|| {
                Error::Format("H2 spec requires a \"gamma\" field".into())
            })?;
            Ok(ProblemSpec::H2(H2Spec::new(
                nested_to_mat(c, "C")?,
                nested_to_mat(d, "D")?,
                gamma,
            )?))
        }
        _ => Err(Error::Format(
            "spec must contain either Q/R/x0 (LQR) or C/D (H2)".into(),
        )),
    }
}

fn status_str(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Feasible => "feasible",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Inconclusive => "inconclusive",
    }
}

fn solver_json(diag: &SolveDiag) -> serde_json::Value {
    serde_json::json!({
        "iterations": diag.iterations,
        "margins": diag.margins,
        "worst_margin": finite_or_null(diag.worst_margin),
        "objective": diag.objective,
        "margin_bracket": diag.margin_bracket.map(|(lo, hi)| vec![lo, hi]),
        "message": diag.message,
    })
}

fn finite_or_null(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Result JSON for a synthesized LQR controller.
pub fn lqr_result_json(ctrl: &Controller) -> serde_json::Value {
    serde_json::json!({
        "status": status_str(ctrl.diagnostics.status),
        "K": mat_to_nested(&ctrl.k),
        "gamma": ctrl.achieved_gamma,
        "gamma_bound": ctrl.gamma_bound,
        "theta": mat_to_nested(&ctrl.theta),
        "Y": mat_to_nested(&ctrl.y),
        "eps": ctrl.eps,
        "solver": solver_json(&ctrl.diagnostics),
    })
}

/// Result JSON for a failed synthesis attempt.
pub fn failure_result_json(diag: &SolveDiag) -> serde_json::Value {
    serde_json::json!({
        "status": status_str(diag.status),
        "K": null,
        "gamma": null,
        "theta": null,
        "Y": null,
        "eps": null,
        "solver": solver_json(diag),
    })
}

/// Result JSON for an H2 controller: the LQR schema extended with the
/// condition tag, identified E and trace bound.
pub fn h2_result_json(ctrl: &Controller, cert: &H2Certificate) -> serde_json::Value {
    let mut v = lqr_result_json(ctrl);
    let obj = v.as_object_mut().expect("object");
    obj.insert(
        "condition".into(),
        serde_json::json!(cert.condition.as_str()),
    );
    obj.insert(
        "E_identified".into(),
        match &cert.e_identified {
            Some(e) => serde_json::json!(mat_to_nested(e)),
            None => serde_json::Value::Null,
        },
    );
    obj.insert("trace_bound".into(), serde_json::json!(cert.trace_bound));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn tmpdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("ddctrl-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tmpdir();
        let path = dir.join("m.csv");
        let m = dmatrix![1.0, -0.25, 3.1e-17; 0.1, 2.0/3.0, 1e300];
        write_csv_matrix(&path, &m).unwrap();
        let back = read_csv_matrix(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn csv_rejects_ragged_and_non_numeric() {
        assert!(parse_csv_matrix("1,2\n3\n").is_err());
        assert!(parse_csv_matrix("1,abc\n").is_err());
        assert!(parse_csv_matrix("").is_err());
    }

    #[test]
    fn data_round_trip() {
        let dir = tmpdir();
        let (xp, up) = (dir.join("x.csv"), dir.join("u.csv"));
        let rec = DataRecord::new(
            dmatrix![0.5, -0.25, 0.125],
            dmatrix![1.0, 0.3, 0.7, 0.2; -1.0, 0.4, 0.9, 0.1],
            None,
        )
        .unwrap();
        write_data(&rec, &xp, &up, None).unwrap();
        let back = read_data(&[&xp], &[&up], &[]).unwrap();
        assert_eq!(&rec, &back);
    }

    #[test]
    fn mismatched_row_counts_reported() {
        let dir = tmpdir();
        let (xp, up) = (dir.join("xbad.csv"), dir.join("ubad.csv"));
        // X with T rows instead of T+1
        std::fs::write(&xp, "1.0\n2.0\n").unwrap();
        std::fs::write(&up, "0.5\n0.5\n").unwrap();
        let err = read_data(&[&xp], &[&up], &[]).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains('2') && msg.contains('3'), "{msg}");
    }

    #[test]
    fn multi_segment_ingestion_concatenates() {
        let dir = tmpdir();
        let paths: Vec<_> = (0..4).map(|i| dir.join(format!("seg{i}.csv"))).collect();
        std::fs::write(&paths[0], "1.0\n0.5\n").unwrap(); // x seg 1 (T=1)
        std::fs::write(&paths[1], "0.25\n").unwrap(); // u seg 1
        std::fs::write(&paths[2], "2.0\n1.0\n0.1\n").unwrap(); // x seg 2 (T=2)
        std::fs::write(&paths[3], "0.5\n-0.5\n").unwrap(); // u seg 2
        let rec = read_data(
            &[&paths[0], &paths[2]],
            &[&paths[1], &paths[3]],
            &[],
        )
        .unwrap();
        assert_eq!(rec.len(), 3);
        assert_eq!(rec.x_minus(), &dmatrix![1.0, 2.0, 1.0]);
        assert_eq!(rec.x_plus(), &dmatrix![0.5, 1.0, 0.1]);
    }

    #[test]
    fn system_json_round_trip() {
        let dir = tmpdir();
        let path = dir.join("sys.json");
        let sys = LtiSystem::with_all(
            dmatrix![0.5, 0.1; 0.0, 0.8],
            dmatrix![1.0; 0.0],
            Some(dmatrix![0.2; 0.3]),
            None,
            None,
        )
        .unwrap();
        write_system_json(&path, &sys).unwrap();
        let back = read_system_json(&path).unwrap();
        assert_eq!(sys, back);
    }

    #[test]
    fn spec_json_variants() {
        let dir = tmpdir();
        let lqr_path = dir.join("lqr.json");
        std::fs::write(
            &lqr_path,
            r#"{"Q": [[1.0]], "R": [[1.0]], "x0": [1.0], "gamma": 1.2}"#,
        )
        .unwrap();
        match read_spec_json(&lqr_path).unwrap() {
            ProblemSpec::Lqr(spec) => assert_eq!(spec.gamma, Some(1.2)),
            _ => panic!("expected LQR spec"),
        }

        let h2_path = dir.join("h2.json");
        std::fs::write(
            &h2_path,
            r#"{"C": [[1.0],[0.0]], "D": [[0.0],[1.0]], "gamma": 1.2}"#,
        )
        .unwrap();
        match read_spec_json(&h2_path).unwrap() {
            ProblemSpec::H2(spec) => assert_eq!(spec.gamma, 1.2),
            _ => panic!("expected H2 spec"),
        }

        let bad = dir.join("bad.json");
        std::fs::write(&bad, r#"{"Q": [[1.0]]}"#).unwrap();
        assert!(read_spec_json(&bad).is_err());
    }
}
