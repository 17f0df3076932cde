//! The four discrete PDE maps of the optimality system.
//!
//! For a fixed control iterate the state, adjoint, tangent and
//! dual-for-Hessian equations all share the same operator `A(u)`
//! (stiffness + mass + control-weighted boundary mass), so [`PdeContext`]
//! assembles and factorizes once per iterate and serves all four solves from
//! that factorization.  Re-assembly for a new control reuses both the cached
//! sparsity positions of the boundary coupling and the symbolic elimination
//! analysis; only the numeric factorization is redone.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::cholesky::LdlSymbolic;
use crate::control::BoundaryControl;
use crate::fem::{
    assemble_load, assemble_mass, robin_boundary_load, FemError, P1Function, PreparedSolver,
    RobinAssembler, RobinSystem, SourceSpec,
};
use crate::field::{BoundaryField, DomainField};
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;

/// One control iterate's worth of assembled operators and data.
///
/// Holds the Robin system for the current control together with its prepared
/// factorization, the mass matrix, the fixed load of the state equation and
/// the load of the desired state.  The invariant is that the prepared solver
/// always matches the stored control.
pub struct PdeContext<'a> {
    mesh: &'a Mesh,
    assembler: RobinAssembler<'a>,
    system: RobinSystem<'a>,
    solver: PreparedSolver,
    symbolic: Arc<LdlSymbolic>,
    mass: CsrMatrix,
    load_state: Vec<f64>,
    yd_load: Vec<f64>,
    desired: DomainField<'a>,
    alpha: f64,
}

impl<'a> PdeContext<'a> {
    /// Assembles everything for the given control and factorizes `A(u)`.
    ///
    /// The desired-state load `(y_d, φ_i)` is integrated exactly when `y_d`
    /// is nested P1 data, by degree-4 quadrature when closed-form.
    pub fn new(
        mesh: &'a Mesh,
        sources: SourceSpec<'a>,
        desired: DomainField<'a>,
        alpha: f64,
        control: &BoundaryControl<'a>,
    ) -> Result<Self, FemError> {
        assert!(alpha > 0.0, "regularization weight must be positive, got {alpha}");
        let assembler = RobinAssembler::new(mesh);
        let system = assembler.assemble(control);
        let solver = system.prepare()?;
        let symbolic = solver.symbolic();
        let mass = assemble_mass(mesh);
        let load_state = assemble_load(mesh, &sources)?;
        let yd_load = assemble_load(
            mesh,
            &SourceSpec {
                f: desired,
                g: BoundaryField::Zero,
            },
        )?;
        Ok(PdeContext {
            mesh,
            assembler,
            system,
            solver,
            symbolic,
            mass,
            load_state,
            yd_load,
            desired,
            alpha,
        })
    }

    /// Re-assembles `A(u)` for a new control and refactorizes numerically,
    /// reusing the symbolic analysis.
    pub fn update_control(&mut self, control: &BoundaryControl<'a>) -> Result<(), FemError> {
        self.system = self.assembler.assemble(control);
        self.solver = self.system.prepare_with(self.symbolic.clone())?;
        Ok(())
    }

    pub fn mesh(&self) -> &'a Mesh {
        self.mesh
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Changes the control-cost weight.  Nothing cached depends on it, so
    /// this is the cheap knob for continuation strategies that approach a
    /// small weight through a sequence of easier problems.
    pub fn set_alpha(&mut self, alpha: f64) {
        assert!(alpha > 0.0, "control-cost weight must be positive");
        self.alpha = alpha;
    }

    /// The control the current factorization belongs to.
    pub fn control(&self) -> &BoundaryControl<'a> {
        self.system.control()
    }

    /// Whether the current control has negative edge values.
    pub fn negative_control(&self) -> bool {
        self.system.negative_control()
    }

    pub fn desired(&self) -> &DomainField<'a> {
        &self.desired
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// Solves performed with the current factorization (resets on
    /// [`Self::update_control`]).
    pub fn solve_count(&self) -> usize {
        self.solver.solve_count()
    }

    /// L²(Ω) inner product of two vertex-value vectors.
    pub fn mass_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass.bilinear(a, b)
    }

    /// State map: `A(u) y = (f, φ) + (g, φ)_Γ`.
    pub fn solve_state(&self) -> Result<P1Function<'a>, FemError> {
        let y = self.solver.solve_vec(&self.load_state)?;
        Ok(P1Function::new(self.mesh, y))
    }

    /// Adjoint map: `A(u) p = (y − y_d, φ)`.
    pub fn solve_adjoint(&self, y: &P1Function<'a>) -> Result<P1Function<'a>, FemError> {
        let mut rhs = self.mass.matvec(y.values());
        for (r, d) in rhs.iter_mut().zip(&self.yd_load) {
            *r -= d;
        }
        let p = self.solver.solve_vec(&rhs)?;
        Ok(P1Function::new(self.mesh, p))
    }

    /// Tangent map: `A(u) δy = −(δu·y, φ)_Γ`, the edge loads in closed form.
    pub fn solve_tangent(
        &self,
        y: &P1Function<'a>,
        du: &BoundaryControl<'a>,
    ) -> Result<P1Function<'a>, FemError> {
        let mut rhs = robin_boundary_load(du, y);
        for r in rhs.iter_mut() {
            *r = -*r;
        }
        let dy = self.solver.solve_vec(&rhs)?;
        Ok(P1Function::new(self.mesh, dy))
    }

    /// Dual-for-Hessian map: `A(u) δp = (δy, φ) − (δu·p, φ)_Γ`.
    pub fn solve_dual_hessian(
        &self,
        p: &P1Function<'a>,
        dy: &P1Function<'a>,
        du: &BoundaryControl<'a>,
    ) -> Result<P1Function<'a>, FemError> {
        let mut rhs = self.mass.matvec(dy.values());
        let bd = robin_boundary_load(du, p);
        for (r, b) in rhs.iter_mut().zip(&bd) {
            *r -= b;
        }
        let dp = self.solver.solve_vec(&rhs)?;
        Ok(P1Function::new(self.mesh, dp))
    }
}
