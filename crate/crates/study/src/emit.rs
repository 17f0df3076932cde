//! Table output: CSV and JSON renderings of the study results.
//!
//! All floating-point columns — errors and EOCs alike — are written in
//! scientific notation with 6 significant digits; missing EOCs (first row)
//! are blank in CSV and `null` in JSON.  JSON uses serde's shortest-exact
//! float printing, so a parse of the emitted text reproduces every value
//! bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::benchmark::{CurvePoint, StudyError, StudyRow};
use crate::mms::MmsRow;

/// Scientific notation with 6 significant digits (`6.17000e-4` shape).
fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

fn sci_opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

/// CSV rendering of the benchmark table.
pub fn benchmark_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from("level,dof,bd_dof,err_full,eoc_full,err_post,eoc_post\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.level,
            r.dof,
            r.bd_dof,
            sci(r.err_full),
            sci_opt(r.eoc_full),
            sci(r.err_post),
            sci_opt(r.eoc_post),
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// JSON rendering of the benchmark table (array of row objects).
pub fn benchmark_json(rows: &[StudyRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows contain only finite serializable fields")
}

/// Parses text produced by [`benchmark_json`].
pub fn parse_benchmark_json(text: &str) -> Result<Vec<StudyRow>, serde_json::Error> {
    serde_json::from_str(text)
}

/// CSV rendering of the verification table.
pub fn mms_csv(rows: &[MmsRow]) -> String {
    let mut out = String::from(
        "level,h1_err,eoc_h1,l2_err,eoc_l2,linf_err,eoc_linf,l2_gamma_err,eoc_l2_gamma\n",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.level,
            sci(r.h1_err),
            sci_opt(r.eoc_h1),
            sci(r.l2_err),
            sci_opt(r.eoc_l2),
            sci(r.linf_err),
            sci_opt(r.eoc_linf),
            sci(r.l2_gamma_err),
            sci_opt(r.eoc_l2_gamma),
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// JSON rendering of the verification table.
pub fn mms_json(rows: &[MmsRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows contain only finite serializable fields")
}

/// CSV rendering of a control curve (edgewise values at edge midpoints).
pub fn control_curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("edge_index,midpoint_x,midpoint_y,value\n");
    for p in curve {
        writeln!(
            out,
            "{},{},{},{}",
            p.edge_index,
            sci(p.midpoint[0]),
            sci(p.midpoint[1]),
            sci(p.value),
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Writes `content` to `path`, reporting failures with the path attached.
pub fn write_file(path: &Path, content: &str) -> Result<(), StudyError> {
    std::fs::write(path, content).map_err(|source| StudyError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<StudyRow> {
        vec![
            StudyRow {
                level: 3,
                dof: 113 + 32,
                bd_dof: 32,
                err_full: 5.0e-3,
                eoc_full: None,
                err_post: 6.25e-4,
                eoc_post: None,
                converged: true,
            },
            StudyRow {
                level: 4,
                dof: 353 + 64,
                bd_dof: 64,
                err_full: 2.5e-3,
                eoc_full: Some(1.0),
                err_post: 1.5625e-4,
                eoc_post: Some(2.0),
                converged: true,
            },
        ]
    }

    #[test]
    fn single_row_csv_has_header_and_blank_eocs() {
        let rows = &sample_rows()[..1];
        let text = benchmark_csv(rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "level,dof,bd_dof,err_full,eoc_full,err_post,eoc_post");
        assert_eq!(lines[1], "3,145,32,5.00000e-3,,6.25000e-4,");
    }

    #[test]
    fn csv_eoc_columns_are_scientific_when_present() {
        let text = benchmark_csv(&sample_rows());
        let last = text.lines().last().unwrap();
        assert_eq!(last, "4,417,64,2.50000e-3,1.00000e0,1.56250e-4,2.00000e0");
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut rows = sample_rows();
        // awkward values that expose any lossy float printing
        rows[1].err_full = 0.1 + 0.2;
        rows[1].eoc_full = Some(f64::from_bits(0x3FF123456789ABCD));
        let parsed = parse_benchmark_json(&benchmark_json(&rows)).unwrap();
        assert_eq!(parsed.len(), rows.len());
        for (a, b) in rows.iter().zip(&parsed) {
            assert_eq!(a.level, b.level);
            assert_eq!(a.dof, b.dof);
            assert_eq!(a.err_full.to_bits(), b.err_full.to_bits());
            assert_eq!(a.err_post.to_bits(), b.err_post.to_bits());
            assert_eq!(
                a.eoc_full.map(f64::to_bits),
                b.eoc_full.map(f64::to_bits)
            );
            assert_eq!(a.eoc_post.map(f64::to_bits), b.eoc_post.map(f64::to_bits));
        }
    }

    #[test]
    fn json_null_marks_missing_eoc() {
        let text = benchmark_json(&sample_rows()[..1]);
        assert!(text.contains("\"eoc_full\": null"));
        assert!(text.contains("\"eoc_post\": null"));
    }

    #[test]
    fn curve_csv_shape() {
        let curve = vec![CurvePoint {
            edge_index: 0,
            midpoint: [0.25, 0.0],
            value: -0.01,
        }];
        let text = control_curve_csv(&curve);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "edge_index,midpoint_x,midpoint_y,value");
        assert_eq!(lines[1], "0,2.50000e-1,0.00000e0,-1.00000e-2");
    }

    #[test]
    fn mms_csv_shape() {
        let rows = vec![MmsRow {
            level: 2,
            h1_err: 0.5,
            eoc_h1: None,
            l2_err: 0.25,
            eoc_l2: None,
            linf_err: 0.125,
            eoc_linf: None,
            l2_gamma_err: 0.0625,
            eoc_l2_gamma: None,
        }];
        let text = mms_csv(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "level,h1_err,eoc_h1,l2_err,eoc_l2,linf_err,eoc_linf,l2_gamma_err,eoc_l2_gamma"
        );
        assert_eq!(
            lines[1],
            "2,5.00000e-1,,2.50000e-1,,1.25000e-1,,6.25000e-2,"
        );
    }
}
