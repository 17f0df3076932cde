//! End-to-end flows through the public API, written the way a consumer of
//! the library would drive it: set up a tracking problem, optimize, and
//! verify optimality from first principles.

use robinopt_core::control::{project_box, r_h_simpson, trace_product, BoundaryControl, BoxBounds};
use robinopt_core::fem::SourceSpec;
use robinopt_core::field::{BoundaryField, DomainField};
use robinopt_core::mesh::MeshHierarchy;
use robinopt_core::objective::{central_difference_objective, evaluate};
use robinopt_core::optimizer::{fixed_point_solve, pdas_solve, SolveOptions, Termination};
use robinopt_core::pde::PdeContext;

const ALPHA: f64 = 1.0;

fn tracking_context<'m>(
    mesh: &'m robinopt_core::mesh::Mesh,
    control: &BoundaryControl<'m>,
) -> PdeContext<'m> {
    let sources = SourceSpec {
        f: DomainField::Constant(1.0),
        g: BoundaryField::Constant(0.5),
    };
    let desired = DomainField::Function(&|x, y| 0.8 + 0.3 * x - 0.2 * y * y);
    PdeContext::new(mesh, sources, desired, ALPHA, control).unwrap()
}

/// Re-derives the projection-formula residual at a reported solution using
/// nothing but public building blocks, independent of the solver internals.
fn optimality_residual(ctx: &PdeContext, u: &BoundaryControl, bounds: &BoxBounds) -> f64 {
    let y = ctx.solve_state().unwrap();
    let p = ctx.solve_adjoint(&y).unwrap();
    let target = r_h_simpson(&trace_product(&y, &p));
    let diff: Vec<f64> = u
        .values()
        .iter()
        .zip(target.values())
        .map(|(ue, ge)| ue - project_box(ge / ctx.alpha(), bounds))
        .collect();
    BoundaryControl::new(u.mesh(), diff).l2_norm()
}

#[test]
fn active_set_solver_honors_binding_bounds() {
    let hier = MeshHierarchy::build(4).unwrap();
    let mesh = hier.mesh(4);
    let start = BoundaryControl::constant(mesh, 0.1);
    let mut ctx = tracking_context(mesh, &start);
    let opts = SolveOptions {
        initial: Some(start.clone()),
        ..SolveOptions::default()
    };

    // First pass without an upper bound to locate the free optimum.
    let free_bounds = BoxBounds::lower_only(0.0);
    let free = pdas_solve(&mut ctx, &free_bounds, &opts).unwrap();
    assert_eq!(free.termination, Termination::Converged);
    let free_max = free
        .control
        .values()
        .iter()
        .fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    assert!(free_max > 0.0, "free optimum must be nontrivial");
    assert!(
        optimality_residual(&ctx, &free.control, &free_bounds) <= 1e-9,
        "projection formula must hold at the free optimum"
    );

    // Cap the control strictly below the free maximum so the bound binds.
    let cap = 0.6 * free_max;
    let bounds = BoxBounds::new(0.0, Some(cap));
    ctx.update_control(&start).unwrap();
    let capped = pdas_solve(&mut ctx, &bounds, &opts).unwrap();
    assert_eq!(capped.termination, Termination::Converged);
    let at_cap = capped
        .control
        .values()
        .iter()
        .filter(|v| (**v - cap).abs() <= 1e-12)
        .count();
    assert!(at_cap > 0, "some edges must sit on the upper bound");
    assert!(capped.control.values().iter().all(|v| *v <= cap + 1e-12));
    assert!(optimality_residual(&ctx, &capped.control, &bounds) <= 1e-9);

    // Variational inequality at the capped optimum: the gradient pairing
    // with directions toward either bound must be nonnegative.
    let ev = evaluate(&ctx, &capped.control).unwrap();
    for target in [0.0, cap] {
        let shift: Vec<f64> = capped.control.values().iter().map(|v| target - v).collect();
        let cert = ev.gradient.pairing(&BoundaryControl::new(mesh, shift));
        assert!(
            cert >= -1e-9,
            "descent direction toward {target} violates optimality: {cert:.3e}"
        );
    }

    // The capped objective cannot beat the free one.
    let free_objective = {
        ctx.update_control(&free.control).unwrap();
        evaluate(&ctx, &free.control).unwrap().objective
    };
    assert!(capped.objective >= free_objective - 1e-12);
}

#[test]
fn both_solvers_and_finite_differences_agree() {
    let hier = MeshHierarchy::build(3).unwrap();
    let mesh = hier.mesh(3);
    let start = BoundaryControl::constant(mesh, 0.1);
    let bounds = BoxBounds::lower_only(0.0);

    let mut ctx = tracking_context(mesh, &start);
    let newton = pdas_solve(
        &mut ctx,
        &bounds,
        &SolveOptions {
            initial: Some(start.clone()),
            ..SolveOptions::default()
        },
    )
    .unwrap();
    assert!(newton.converged());

    let mut ctx2 = tracking_context(mesh, &start);
    let relaxed = fixed_point_solve(
        &mut ctx2,
        &bounds,
        &SolveOptions {
            initial: Some(start.clone()),
            damping: 0.3,
            max_outer: 2000,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    assert!(relaxed.converged());

    let diff: Vec<f64> = newton
        .control
        .values()
        .iter()
        .zip(relaxed.control.values())
        .map(|(a, b)| a - b)
        .collect();
    let distance = BoundaryControl::new(mesh, diff).l2_norm();
    assert!(
        distance <= 1e-9,
        "solvers disagree by {distance:.3e} in the boundary norm"
    );

    // Derivative sanity through the public interface only.
    let probe = BoundaryControl::constant(mesh, 0.25);
    ctx.update_control(&probe).unwrap();
    let ev = evaluate(&ctx, &probe).unwrap();
    let direction = BoundaryControl::constant(mesh, 1.0);
    let fd = central_difference_objective(&mut ctx, &probe, &direction, 1e-5).unwrap();
    let dj = ev.gradient.pairing(&direction);
    assert!(
        (dj - fd).abs() <= 1e-8 * fd.abs().max(1.0),
        "gradient pairing {dj:.6e} vs finite difference {fd:.6e}"
    );
}
