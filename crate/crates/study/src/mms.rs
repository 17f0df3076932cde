//! Manufactured-solution verification of the state discretization.
//!
//! With `y(x) = cos(πx₁)cos(πx₂)` the normal derivative vanishes on every
//! side of the unit square, so under the Robin coefficient `u ≡ 1` the data
//! `f = (2π² + 1)·y` and `g = y|_Γ` reproduce `y` exactly.  Solving per
//! level and comparing against the closed form yields the expected orders:
//! 1 in H¹(Ω), 2 in L²(Ω), ≈2 in L∞(Ω) (up to a log factor), and between
//! 1 and 2 in L²(Γ).

use core::f64::consts::PI;
use robinopt_core::control::BoundaryControl;
use robinopt_core::fem::{assemble_load, assemble_robin, norms, P1Function, SourceSpec};
use robinopt_core::field::{BoundaryField, DomainField};
use robinopt_core::mesh::MeshHierarchy;
use serde::{Deserialize, Serialize};

use crate::benchmark::StudyError;

/// One line of the verification table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmsRow {
    pub level: u32,
    pub h1_err: f64,
    pub eoc_h1: Option<f64>,
    pub l2_err: f64,
    pub eoc_l2: Option<f64>,
    pub linf_err: f64,
    pub eoc_linf: Option<f64>,
    pub l2_gamma_err: f64,
    pub eoc_l2_gamma: Option<f64>,
}

fn exact(x1: f64, x2: f64) -> f64 {
    (PI * x1).cos() * (PI * x2).cos()
}

fn exact_gradient(x1: f64, x2: f64) -> [f64; 2] {
    [
        -PI * (PI * x1).sin() * (PI * x2).cos(),
        -PI * (PI * x1).cos() * (PI * x2).sin(),
    ]
}

fn source(x1: f64, x2: f64) -> f64 {
    (2.0 * PI * PI + 1.0) * exact(x1, x2)
}

/// Runs the verification study on levels `0..=max_level`.
pub fn run_mms(max_level: u32) -> Result<Vec<MmsRow>, StudyError> {
    let hier = MeshHierarchy::build(max_level)?;
    let mut rows: Vec<MmsRow> = Vec::new();
    for level in 0..=max_level {
        let mesh = hier.mesh(level);
        let control = BoundaryControl::constant(mesh, 1.0);
        let system = assemble_robin(mesh, &control);
        let solver = system.prepare()?;
        let sources = SourceSpec {
            f: DomainField::Function(&source),
            g: BoundaryField::Function(&exact),
        };
        let load = assemble_load(mesh, &sources)?;
        let y = P1Function::new(mesh, solver.solve_vec(&load)?);
        let n = norms(&y, &exact, &exact_gradient);
        let eoc = |prev: Option<f64>, cur: f64| prev.map(|p| (p / cur).log2());
        let last = rows.last();
        rows.push(MmsRow {
            level,
            h1_err: n.h1_omega,
            eoc_h1: eoc(last.map(|r| r.h1_err), n.h1_omega),
            l2_err: n.l2_omega,
            eoc_l2: eoc(last.map(|r| r.l2_err), n.l2_omega),
            linf_err: n.linf_omega,
            eoc_linf: eoc(last.map(|r| r.linf_err), n.linf_omega),
            l2_gamma_err: n.l2_gamma,
            eoc_l2_gamma: eoc(last.map(|r| r.l2_gamma_err), n.l2_gamma),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape_and_monotone_decay() {
        let rows = run_mms(4).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows[0].eoc_h1.is_none());
        for w in rows.windows(2) {
            assert!(w[1].h1_err < w[0].h1_err);
            assert!(w[1].l2_err < w[0].l2_err);
            assert!(w[1].eoc_h1.is_some());
        }
    }

    #[test]
    fn orders_settle_near_the_theoretical_rates() {
        let rows = run_mms(6).unwrap();
        let last = rows.last().unwrap();
        assert!((last.eoc_h1.unwrap() - 1.0).abs() < 0.1, "H¹ order ≈ 1");
        assert!((last.eoc_l2.unwrap() - 2.0).abs() < 0.15, "L² order ≈ 2");
        assert!(last.eoc_linf.unwrap() > 1.6, "L∞ order near 2 up to logs");
        assert!(last.eoc_l2_gamma.unwrap() > 1.4, "boundary order above 1");
    }
}
