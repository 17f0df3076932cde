//! The reduced tracking objective, its exact discrete gradient, and
//! Hessian-vector products.
//!
//! The objective is
//!
//! ```text
//!   j(u) = ½ ‖y(u) − y_d‖²_{L²(Ω)} + (α/2) ‖u‖²_{L²(Γ)},
//! ```
//!
//! with `y(u)` the Robin state for the control `u`.  Its derivative pairs as
//! `j′(u)δu = (α u − y p, δu)_{L²(Γ)}` with the adjoint `p`; projecting the
//! quadratic edge trace `y·p` into the edgewise constants by Simpson (exact
//! for quadratics) makes the returned representative the exact L²(Γ)-Riesz
//! representative of `j′` on the control space — no quadrature error enters
//! the gradient.  Hessian-vector products chain the tangent and
//! dual-for-Hessian solves and cost exactly two solves with the
//! already-factorized operator.
//!
//! Central finite-difference oracles for the gradient and the Hessian are
//! part of the module's public surface: verification is a first-class
//! operation here, not an afterthought in test code.

use alloc::vec::Vec;

use crate::control::{r_h_simpson, trace_product, BoundaryControl, BoundaryTrace};
use crate::fem::{misfit_sq, FemError, P1Function};
use crate::pde::PdeContext;

/// The edgewise gradient representative together with the raw product trace
/// it was projected from (the trace is what the projection formula of the
/// optimality system consumes).
pub struct GradientRep<'m> {
    /// Edgewise values of `α·u − Simpson-projection(y·p)`.
    pub rep: BoundaryControl<'m>,
    /// Per-edge quadratic trace of `y·p`.
    pub trace: BoundaryTrace<'m>,
}

impl<'m> GradientRep<'m> {
    /// Exact pairing `(gradient, w)_{L²(Γ)}`.
    pub fn pairing(&self, w: &BoundaryControl) -> f64 {
        self.rep.l2_inner(w)
    }
}

/// Everything one control iterate produces: objective value, state, adjoint,
/// gradient representative.
pub struct Evaluation<'m> {
    pub objective: f64,
    pub state: P1Function<'m>,
    pub adjoint: P1Function<'m>,
    pub gradient: GradientRep<'m>,
}

fn assert_matches_context(ctx: &PdeContext, u: &BoundaryControl) {
    assert!(
        ctx.control().values() == u.values(),
        "context factorization must belong to the control being evaluated"
    );
}

/// Objective value at `u` (the context must be factorized for `u`).
pub fn eval_objective(ctx: &PdeContext, u: &BoundaryControl) -> Result<f64, FemError> {
    assert_matches_context(ctx, u);
    let y = ctx.solve_state()?;
    objective_from_state(ctx, u, &y)
}

fn objective_from_state(
    ctx: &PdeContext,
    u: &BoundaryControl,
    y: &P1Function,
) -> Result<f64, FemError> {
    let misfit = misfit_sq(y, ctx.desired())?;
    Ok(0.5 * misfit + 0.5 * ctx.alpha() * u.l2_inner(u))
}

/// Gradient representative at `u`: solves state and adjoint, projects the
/// product trace.
pub fn eval_gradient<'m>(
    ctx: &PdeContext<'m>,
    u: &BoundaryControl<'m>,
) -> Result<GradientRep<'m>, FemError> {
    assert_matches_context(ctx, u);
    let y = ctx.solve_state()?;
    let p = ctx.solve_adjoint(&y)?;
    Ok(gradient_from_pair(ctx, u, &y, &p))
}

/// Gradient representative from an already-computed state/adjoint pair.
pub fn gradient_from_pair<'m>(
    ctx: &PdeContext<'m>,
    u: &BoundaryControl<'m>,
    y: &P1Function<'m>,
    p: &P1Function<'m>,
) -> GradientRep<'m> {
    let trace = trace_product(y, p);
    let projected = r_h_simpson(&trace);
    let rep = BoundaryControl::new(
        u.mesh(),
        u.values()
            .iter()
            .zip(projected.values())
            .map(|(uv, pv)| ctx.alpha() * uv - pv)
            .collect(),
    );
    GradientRep { rep, trace }
}

/// Full evaluation bundle: one state solve, one adjoint solve.
pub fn evaluate<'m>(
    ctx: &PdeContext<'m>,
    u: &BoundaryControl<'m>,
) -> Result<Evaluation<'m>, FemError> {
    assert_matches_context(ctx, u);
    let y = ctx.solve_state()?;
    let p = ctx.solve_adjoint(&y)?;
    let objective = objective_from_state(ctx, u, &y)?;
    let gradient = gradient_from_pair(ctx, u, &y, &p);
    Ok(Evaluation {
        objective,
        state: y,
        adjoint: p,
        gradient,
    })
}

/// Hessian-vector product `δu ↦ α·δu − Simpson-projection(y·δp + δy·p)`.
///
/// `y` and `p` are the state/adjoint pair of the current iterate; the
/// product costs exactly two solves (tangent and dual) with the factorization
/// the context already holds.
pub fn hess_vec<'m>(
    ctx: &PdeContext<'m>,
    y: &P1Function<'m>,
    p: &P1Function<'m>,
    du: &BoundaryControl<'m>,
) -> Result<BoundaryControl<'m>, FemError> {
    let dy = ctx.solve_tangent(y, du)?;
    let dp = ctx.solve_dual_hessian(p, &dy, du)?;
    let cross = trace_product(y, &dp).add(&trace_product(&dy, p));
    let projected = r_h_simpson(&cross);
    Ok(BoundaryControl::new(
        du.mesh(),
        du.values()
            .iter()
            .zip(projected.values())
            .map(|(d, c)| ctx.alpha() * d - c)
            .collect(),
    ))
}

/// Central difference `(j(u+εδu) − j(u−εδu)) / (2ε)`.
///
/// Temporarily refactorizes the context for the shifted controls and restores
/// it to `u` before returning.
pub fn central_difference_objective<'m>(
    ctx: &mut PdeContext<'m>,
    u: &BoundaryControl<'m>,
    du: &BoundaryControl<'m>,
    eps: f64,
) -> Result<f64, FemError> {
    let shift = |sign: f64| -> BoundaryControl<'m> {
        BoundaryControl::new(
            u.mesh(),
            u.values()
                .iter()
                .zip(du.values())
                .map(|(uv, dv)| uv + sign * eps * dv)
                .collect(),
        )
    };
    let plus = shift(1.0);
    ctx.update_control(&plus)?;
    let j_plus = eval_objective(ctx, &plus)?;
    let minus = shift(-1.0);
    ctx.update_control(&minus)?;
    let j_minus = eval_objective(ctx, &minus)?;
    ctx.update_control(u)?;
    Ok((j_plus - j_minus) / (2.0 * eps))
}

/// Central difference of the gradient representative, edgewise:
/// `(grad(u+εδu) − grad(u−εδu)) / (2ε)`.  Restores the context to `u`.
pub fn central_difference_gradient<'m>(
    ctx: &mut PdeContext<'m>,
    u: &BoundaryControl<'m>,
    du: &BoundaryControl<'m>,
    eps: f64,
) -> Result<BoundaryControl<'m>, FemError> {
    let shift = |sign: f64| -> BoundaryControl<'m> {
        BoundaryControl::new(
            u.mesh(),
            u.values()
                .iter()
                .zip(du.values())
                .map(|(uv, dv)| uv + sign * eps * dv)
                .collect(),
        )
    };
    let plus = shift(1.0);
    ctx.update_control(&plus)?;
    let g_plus = eval_gradient(ctx, &plus)?;
    let minus = shift(-1.0);
    ctx.update_control(&minus)?;
    let g_minus = eval_gradient(ctx, &minus)?;
    ctx.update_control(u)?;
    let values: Vec<f64> = g_plus
        .rep
        .values()
        .iter()
        .zip(g_minus.rep.values())
        .map(|(a, b)| (a - b) / (2.0 * eps))
        .collect();
    Ok(BoundaryControl::new(u.mesh(), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{BoundaryField, DomainField};
    use crate::fem::SourceSpec;
    use crate::mesh::{Mesh, MeshHierarchy};
    use crate::quad::GAUSS5;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// f ≡ 1, g ≡ c, u ≡ c has the exact state y ≡ 1 for every c.
    fn matched_context<'a>(
        mesh: &'a Mesh,
        c: f64,
        alpha: f64,
        control: &BoundaryControl<'a>,
    ) -> PdeContext<'a> {
        PdeContext::new(
            mesh,
            SourceSpec {
                f: DomainField::Constant(1.0),
                g: BoundaryField::Constant(c),
            },
            DomainField::Constant(1.0),
            alpha,
            control,
        )
        .unwrap()
    }

    #[test]
    fn objective_vanishes_when_target_is_attained_at_zero_cost() {
        let h = MeshHierarchy::build(3).unwrap();
        let mesh = h.mesh(3);
        let u = BoundaryControl::constant(mesh, 0.0);
        let ctx = matched_context(mesh, 0.0, 1.0, &u);
        let j = eval_objective(&ctx, &u).unwrap();
        assert!(j.abs() < 1e-20, "matched state at zero control: j = {j}");
    }

    #[test]
    fn objective_reduces_to_control_cost_for_matched_state() {
        let h = MeshHierarchy::build(3).unwrap();
        let mesh = h.mesh(3);
        let (c, alpha) = (0.75, 0.3);
        let u = BoundaryControl::constant(mesh, c);
        let ctx = matched_context(mesh, c, alpha, &u);
        let j = eval_objective(&ctx, &u).unwrap();
        // (α/2)·c²·|Γ| with |Γ| = 4
        let expected = 2.0 * alpha * c * c;
        assert!((j - expected).abs() < 1e-13, "{j} vs {expected}");
    }

    #[test]
    fn gradient_is_alpha_u_when_adjoint_vanishes() {
        let h = MeshHierarchy::build(3).unwrap();
        let mesh = h.mesh(3);
        let (c, alpha) = (0.5, 0.2);
        let u = BoundaryControl::constant(mesh, c);
        let ctx = matched_context(mesh, c, alpha, &u);
        let g = eval_gradient(&ctx, &u).unwrap();
        for &v in g.rep.values() {
            assert!(
                (v - alpha * c).abs() < 1e-12,
                "p ≡ 0 leaves only the α·u term, got {v}"
            );
        }
    }

    fn rich_context<'a>(
        mesh: &'a Mesh,
        alpha: f64,
        control: &BoundaryControl<'a>,
        desired: &'a dyn Fn(f64, f64) -> f64,
    ) -> PdeContext<'a> {
        PdeContext::new(
            mesh,
            SourceSpec {
                f: DomainField::Constant(1.0),
                g: BoundaryField::Constant(0.5),
            },
            DomainField::Function(desired),
            alpha,
            control,
        )
        .unwrap()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let h = MeshHierarchy::build(3).unwrap();
        let mesh = h.mesh(3);
        let mut rng = StdRng::seed_from_u64(5);
        let u = BoundaryControl::new(
            mesh,
            (0..mesh.num_boundary_edges())
                .map(|_| rng.gen_range(0.1..1.0))
                .collect(),
        );
        let desired = |x: f64, y: f64| x + 0.5 * y;
        let mut ctx = rich_context(mesh, 0.1, &u, &desired);
        let du = BoundaryControl::new(
            mesh,
            (0..mesh.num_boundary_edges())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        );
        let g = eval_gradient(&ctx, &u).unwrap();
        let pairing = g.pairing(&du);

        let fd = central_difference_objective(&mut ctx, &u, &du, 1e-4).unwrap();
        let rel = (pairing - fd).abs() / pairing.abs().max(1e-30);
        assert!(rel <= 1e-6, "relative FD mismatch {rel}");

        // quadratic error decay under step halving
        let e1 = (central_difference_objective(&mut ctx, &u, &du, 1e-3).unwrap() - pairing).abs();
        let e2 = (central_difference_objective(&mut ctx, &u, &du, 5e-4).unwrap() - pairing).abs();
        let ratio = e1 / e2;
        assert!(
            (3.5..=4.5).contains(&ratio),
            "central differences must be second order: {e1} / {e2} = {ratio}"
        );
    }

    #[test]
    fn gradient_is_affine_in_the_regularization_weight() {
        let h = MeshHierarchy::build(3).unwrap();
        let mesh = h.mesh(3);
        let u = BoundaryControl::constant(mesh, 0.8);
        let desired = |x: f64, _: f64| x;
        let alpha = 0.25;
        let ctx1 = rich_context(mesh, alpha, &u, &desired);
        let ctx2 = rich_context(mesh, 2.0 * alpha, &u, &desired);
        let g1 = eval_gradient(&ctx1, &u).unwrap();
        let g2 = eval_gradient(&ctx2, &u).unwrap();
        for ((a, b), uv) in g1.rep.values().iter().zip(g2.rep.values()).zip(u.values()) {
            assert!(
                (b - (a + alpha * uv)).abs() < 1e-13,
                "doubling α adds α·u to the representative"
            );
        }
    }

    #[test]
    fn gradient_pairing_agrees_with_independent_quadrature() {
        let h = MeshHierarchy::build(3).unwrap();
        let mesh = h.mesh(3);
        let mut rng = StdRng::seed_from_u64(11);
        let u = BoundaryControl::new(
            mesh,
            (0..mesh.num_boundary_edges())
                .map(|_| rng.gen_range(0.1..1.0))
                .collect(),
        );
        let desired = |x: f64, y: f64| x * y;
        let ctx = rich_context(mesh, 0.05, &u, &desired);
        let g = eval_gradient(&ctx, &u).unwrap();
        let w = BoundaryControl::new(
            mesh,
            (0..mesh.num_boundary_edges())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        );
        // oracle: (α u − y·p, w)_Γ per edge by 5-point Gauss on the exact
        // quadratic trace — a different integration path than Simpson
        let mut oracle = 0.0;
        for (e, t) in g.trace.triples().iter().enumerate() {
            let length = mesh.edge_geometry(e).length;
            let quad: f64 = GAUSS5
                .iter()
                .map(|&(node, wgt)| {
                    // Gauss nodes live on [−1, 1]: map to the unit parameter
                    let s = 0.5 * (node + 1.0);
                    let v0 = t[0];
                    let vm = t[1];
                    let v1 = t[2];
                    // quadratic through (0, v0), (1/2, vm), (1, v1)
                    let a = 2.0 * v0 - 4.0 * vm + 2.0 * v1;
                    let b = -3.0 * v0 + 4.0 * vm - v1;
                    0.5 * wgt * ((a * s + b) * s + v0)
                })
                .sum::<f64>();
            oracle += w.values()[e] * length * (ctx.alpha() * u.values()[e] - quad);
        }
        let pairing = g.pairing(&w);
        assert!(
            (pairing - oracle).abs() <= 1e-13 * (1.0 + pairing.abs()),
            "pairing {pairing} vs oracle {oracle}"
        );
    }

    #[test]
    fn hessian_vanishes_on_zero_direction_and_costs_two_solves() {
        let h = MeshHierarchy::build(3).unwrap();
        let mesh = h.mesh(3);
        let u = BoundaryControl::constant(mesh, 0.6);
        let desired = |x: f64, y: f64| x - y;
        let ctx = rich_context(mesh, 0.1, &u, &desired);
        let ev = evaluate(&ctx, &u).unwrap();
        let before = ctx.solve_count();
        let hz = hess_vec(
            &ctx,
            &ev.state,
            &ev.adjoint,
            &BoundaryControl::constant(mesh, 0.0),
        )
        .unwrap();
        assert_eq!(ctx.solve_count() - before, 2, "exactly two solves per product");
        assert!(hz.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hessian_is_symmetric() {
        let h = MeshHierarchy::build(3).unwrap();
        let mesh = h.mesh(3);
        let mut rng = StdRng::seed_from_u64(23);
        let u = BoundaryControl::new(
            mesh,
            (0..mesh.num_boundary_edges())
                .map(|_| rng.gen_range(0.1..1.0))
                .collect(),
        );
        let desired = |x: f64, y: f64| x + y;
        let ctx = rich_context(mesh, 0.05, &u, &desired);
        let ev = evaluate(&ctx, &u).unwrap();
        for _ in 0..3 {
            let a = BoundaryControl::new(
                mesh,
                (0..mesh.num_boundary_edges())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect(),
            );
            let b = BoundaryControl::new(
                mesh,
                (0..mesh.num_boundary_edges())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect(),
            );
            let ha = hess_vec(&ctx, &ev.state, &ev.adjoint, &a).unwrap();
            let hb = hess_vec(&ctx, &ev.state, &ev.adjoint, &b).unwrap();
            let hab = ha.l2_inner(&b);
            let hba = hb.l2_inner(&a);
            assert!(
                (hab - hba).abs() <= 1e-9 * (1.0 + hab.abs()),
                "symmetry: {hab} vs {hba}"
            );
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let h = MeshHierarchy::build(3).unwrap();
        let mesh = h.mesh(3);
        let mut rng = StdRng::seed_from_u64(31);
        let u = BoundaryControl::new(
            mesh,
            (0..mesh.num_boundary_edges())
                .map(|_| rng.gen_range(0.2..0.9))
                .collect(),
        );
        let desired = |x: f64, y: f64| 1.0 + 0.5 * x - y;
        let mut ctx = rich_context(mesh, 0.1, &u, &desired);
        let ev = evaluate(&ctx, &u).unwrap();
        let du = BoundaryControl::new(
            mesh,
            (0..mesh.num_boundary_edges())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        );
        let hv = hess_vec(&ctx, &ev.state, &ev.adjoint, &du).unwrap();

        let mut err = |eps: f64| -> f64 {
            let fd = central_difference_gradient(&mut ctx, &u, &du, eps).unwrap();
            let diff = BoundaryControl::new(
                mesh,
                hv.values()
                    .iter()
                    .zip(fd.values())
                    .map(|(a, b)| a - b)
                    .collect(),
            );
            diff.l2_norm()
        };
        let e1 = err(1e-3);
        let e2 = err(5e-4);
        let ratio = e1 / e2;
        assert!(
            (3.5..=4.5).contains(&ratio),
            "Hessian FD error must decay quadratically: {e1} / {e2} = {ratio}"
        );
    }
}
