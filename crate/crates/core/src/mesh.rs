//! Triangulations of the unit square with nested uniform refinement.
//!
//! The base mesh is the square split along the diagonal into two right
//! triangles. One refinement level applies two complete sweeps of
//! longest-edge bisection (each sweep splits every triangle across its
//! longest edge, with a closure pass guarding conformity), which halves the
//! element diameter. All vertex coordinates stay dyadic, so midpoint and
//! nesting computations are exact in floating point.
//!
//! Conventions:
//! - triangles are counterclockwise;
//! - boundary edges form one closed counterclockwise loop starting at the
//!   origin, so the domain lies to the left of each directed edge;
//! - refinement appends vertices, hence coarse vertex indices stay valid in
//!   every finer mesh.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::quad::{segment_length, signed_area};

const NONE: usize = usize::MAX;
const CLOSURE_PASS_LIMIT: usize = 32;

/// Mesh construction or nesting failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshError {
    /// A bisection sweep could not be closed into a conforming mesh.
    NonConforming,
    /// Two meshes passed to a nesting operation are not nested.
    NotNested,
}

impl core::fmt::Display for MeshError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MeshError::NonConforming => write!(f, "bisection produced a non-conforming mesh"),
            MeshError::NotNested => write!(f, "meshes are not nested"),
        }
    }
}

/// Directed boundary edge together with the triangle it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    /// Start and end vertex, oriented so the domain lies on the left.
    pub vertices: [usize; 2],
    /// Index of the unique adjacent triangle.
    pub triangle: usize,
}

/// Geometry of one boundary edge.
#[derive(Clone, Copy, Debug)]
pub struct EdgeGeometry {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub midpoint: [f64; 2],
    pub length: f64,
    /// Outward unit normal.
    pub normal: [f64; 2],
}

/// Conforming triangulation of the unit square.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    level: u32,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    /// For level > 0: containing triangle in the previous level, per triangle.
    parent_triangles: Vec<usize>,
    /// For level > 0: containing boundary edge in the previous level, per edge.
    parent_edges: Vec<usize>,
}

impl Mesh {
    /// The two-triangle base mesh (level 0) of the unit square.
    pub fn base() -> Self {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let triangles = vec![[0, 1, 2], [0, 2, 3]];
        let boundary = build_boundary(&vertices, &triangles)
            .expect("base mesh boundary is a single loop");
        Mesh {
            level: 0,
            vertices,
            triangles,
            boundary,
            parent_triangles: Vec::new(),
            parent_edges: Vec::new(),
        }
    }

    /// Refines by one level: two longest-edge bisection sweeps.
    ///
    /// The result halves the mesh size, keeps all existing vertices (same
    /// indices) and doubles the boundary edge count.
    pub fn refine(&self) -> Result<Mesh, MeshError> {
        let first = bisection_sweep(&self.vertices, &self.triangles)?;
        let second = bisection_sweep(&first.vertices, &first.triangles)?;
        let parent_triangles = second
            .parents
            .iter()
            .map(|&mid| first.parents[mid])
            .collect();
        let boundary = build_boundary(&second.vertices, &second.triangles)?;
        let mut fine = Mesh {
            level: self.level + 1,
            vertices: second.vertices,
            triangles: second.triangles,
            boundary,
            parent_triangles,
            parent_edges: Vec::new(),
        };
        fine.parent_edges = restrict_boundary(&fine, self)?;
        Ok(fine)
    }

    /// Refinement level (0 for the base mesh).
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Vertex coordinates.
    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Triangle vertex index triples (counterclockwise).
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Boundary edges, ordered as one closed counterclockwise loop.
    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    /// Containing previous-level triangle per triangle (empty on level 0).
    pub fn parent_triangles(&self) -> &[usize] {
        &self.parent_triangles
    }

    /// Containing previous-level boundary edge per edge (empty on level 0).
    pub fn parent_edges(&self) -> &[usize] {
        &self.parent_edges
    }

    /// Number of vertices (state unknowns).
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Number of triangles.
    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Number of boundary edges (control unknowns).
    pub fn num_boundary_edges(&self) -> usize {
        self.boundary.len()
    }

    /// Total unknowns of the discrete control problem: state plus control.
    ///
    /// This is the size reported in the convergence tables.
    pub fn total_dof(&self) -> usize {
        self.num_vertices() + self.num_boundary_edges()
    }

    /// Corner coordinates of triangle `t`.
    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Geometry of boundary edge `e`. Panics if `e` is out of range.
    pub fn edge_geometry(&self, e: usize) -> EdgeGeometry {
        assert!(
            e < self.boundary.len(),
            "boundary edge {e} out of range (count {})",
            self.boundary.len()
        );
        let [s, t] = self.boundary[e].vertices;
        let (a, b) = (self.vertices[s], self.vertices[t]);
        let length = segment_length(a, b);
        EdgeGeometry {
            start: a,
            end: b,
            midpoint: [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
            length,
            // domain on the left of a -> b, so outward points right of it
            normal: [(b[1] - a[1]) / length, -(b[0] - a[0]) / length],
        }
    }

    /// Largest element diameter.
    pub fn mesh_size(&self) -> f64 {
        let mut h: f64 = 0.0;
        for t in 0..self.triangles.len() {
            let p = self.triangle_coords(t);
            for k in 0..3 {
                h = h.max(segment_length(p[k], p[(k + 1) % 3]));
            }
        }
        h
    }

    /// Structural soundness check: positive areas, conforming edges, a single
    /// closed counterclockwise boundary loop.
    pub fn validate(&self) -> Result<(), MeshError> {
        for t in 0..self.triangles.len() {
            let p = self.triangle_coords(t);
            if signed_area(p[0], p[1], p[2]) <= 0.0 {
                return Err(MeshError::NonConforming);
            }
        }
        // every undirected edge appears in one or two triangles; when two, with
        // opposite directions
        let mut directed: Vec<(usize, usize)> = Vec::with_capacity(3 * self.triangles.len());
        for tri in &self.triangles {
            for k in 0..3 {
                directed.push((tri[k], tri[(k + 1) % 3]));
            }
        }
        let mut undirected: Vec<(usize, usize, bool)> = directed
            .iter()
            .map(|&(a, b)| if a < b { (a, b, false) } else { (b, a, true) })
            .collect();
        undirected.sort_unstable();
        let mut i = 0;
        let mut boundary_count = 0;
        while i < undirected.len() {
            let (a, b, flip) = undirected[i];
            if i + 1 < undirected.len() && undirected[i + 1].0 == a && undirected[i + 1].1 == b {
                if i + 2 < undirected.len() && undirected[i + 2].0 == a && undirected[i + 2].1 == b {
                    return Err(MeshError::NonConforming);
                }
                if undirected[i + 1].2 == flip {
                    // same direction twice: inconsistent orientation
                    return Err(MeshError::NonConforming);
                }
                i += 2;
            } else {
                boundary_count += 1;
                i += 1;
            }
        }
        if boundary_count != self.boundary.len() {
            return Err(MeshError::NonConforming);
        }
        for (k, e) in self.boundary.iter().enumerate() {
            let next = &self.boundary[(k + 1) % self.boundary.len()];
            if e.vertices[1] != next.vertices[0] {
                return Err(MeshError::NonConforming);
            }
        }
        Ok(())
    }

    /// Plain-text dump with VERTICES, TRIANGLES and BOUNDARY sections.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str("VERTICES\n");
        for (i, v) in self.vertices.iter().enumerate() {
            out.push_str(&format!("{} {} {}\n", i, v[0], v[1]));
        }
        out.push_str("TRIANGLES\n");
        for (i, t) in self.triangles.iter().enumerate() {
            out.push_str(&format!("{} {} {} {}\n", i, t[0], t[1], t[2]));
        }
        out.push_str("BOUNDARY\n");
        for (i, e) in self.boundary.iter().enumerate() {
            out.push_str(&format!(
                "{} {} {} {}\n",
                i, e.vertices[0], e.vertices[1], e.triangle
            ));
        }
        out
    }
}

struct SweepResult {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    parents: Vec<usize>,
}

/// One sweep of longest-edge bisection over all triangles.
///
/// Every triangle marks its longest edge (ties broken by the lowest opposite
/// vertex index); a closure pass re-marks until each triangle whose edges are
/// split includes its longest edge, then all triangles subdivide consistently
/// along the marked edges.
fn bisection_sweep(
    vertices: &[[f64; 2]],
    triangles: &[[usize; 3]],
) -> Result<SweepResult, MeshError> {
    // undirected edge table
    let mut slots: Vec<(usize, usize, usize, u8)> = Vec::with_capacity(3 * triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3u8 {
            let a = tri[k as usize];
            let b = tri[(k as usize + 1) % 3];
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            slots.push((lo, hi, t, k));
        }
    }
    slots.sort_unstable();
    let mut edge_ends: Vec<(usize, usize)> = Vec::new();
    let mut tri_edges = vec![[NONE; 3]; triangles.len()];
    {
        let mut i = 0;
        while i < slots.len() {
            let (a, b, _, _) = slots[i];
            let id = edge_ends.len();
            edge_ends.push((a, b));
            let mut j = i;
            while j < slots.len() && slots[j].0 == a && slots[j].1 == b {
                tri_edges[slots[j].2][slots[j].3 as usize] = id;
                j += 1;
            }
            if j - i > 2 {
                return Err(MeshError::NonConforming);
            }
            i = j;
        }
    }

    // longest edge per triangle, by exact squared lengths (dyadic coordinates)
    let sq = |a: usize, b: usize| -> f64 {
        let (p, q) = (vertices[a], vertices[b]);
        let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
        dx * dx + dy * dy
    };
    let mut longest_slot = vec![0usize; triangles.len()];
    for (t, tri) in triangles.iter().enumerate() {
        let mut best = 0usize;
        for k in 1..3 {
            let lb = sq(tri[best], tri[(best + 1) % 3]);
            let lk = sq(tri[k], tri[(k + 1) % 3]);
            let opp_best = tri[(best + 2) % 3];
            let opp_k = tri[(k + 2) % 3];
            if lk > lb || (lk == lb && opp_k < opp_best) {
                best = k;
            }
        }
        longest_slot[t] = best;
    }

    // mark longest edges, then close until consistent
    let mut marked = vec![false; edge_ends.len()];
    for (t, _) in triangles.iter().enumerate() {
        marked[tri_edges[t][longest_slot[t]]] = true;
    }
    let mut pass = 0;
    loop {
        let mut changed = false;
        for (t, _) in triangles.iter().enumerate() {
            let le = tri_edges[t][longest_slot[t]];
            if !marked[le] && tri_edges[t].iter().any(|&e| marked[e]) {
                marked[le] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        pass += 1;
        if pass > CLOSURE_PASS_LIMIT {
            return Err(MeshError::NonConforming);
        }
    }

    // midpoint vertices for marked edges, in edge id order (deterministic)
    let mut verts = vertices.to_vec();
    let mut midpoint = vec![NONE; edge_ends.len()];
    for (e, &(a, b)) in edge_ends.iter().enumerate() {
        if marked[e] {
            let (p, q) = (vertices[a], vertices[b]);
            midpoint[e] = verts.len();
            verts.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        }
    }

    // subdivide
    let mut out_tris: Vec<[usize; 3]> = Vec::with_capacity(2 * triangles.len());
    let mut parents: Vec<usize> = Vec::with_capacity(2 * triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let kl = longest_slot[t];
        let e_long = tri_edges[t][kl];
        if !marked[e_long] {
            out_tris.push(*tri);
            parents.push(t);
            continue;
        }
        let a = tri[kl];
        let b = tri[(kl + 1) % 3];
        let c = tri[(kl + 2) % 3];
        let m = midpoint[e_long];
        // child (a, m, c) inherits edge (c, a); child (m, b, c) inherits (b, c)
        for (child, inherited) in [
            ([a, m, c], tri_edges[t][(kl + 2) % 3]),
            ([m, b, c], tri_edges[t][(kl + 1) % 3]),
        ] {
            if marked[inherited] {
                let m2 = midpoint[inherited];
                // inherited edge is (child[2], child[0]); bisect across it
                let (x, y, z) = (child[2], child[0], child[1]);
                out_tris.push([x, m2, z]);
                parents.push(t);
                out_tris.push([m2, y, z]);
                parents.push(t);
            } else {
                out_tris.push(child);
                parents.push(t);
            }
        }
    }

    Ok(SweepResult {
        vertices: verts,
        triangles: out_tris,
        parents,
    })
}

/// Collects boundary edges of a triangulation into one closed CCW loop
/// starting at vertex 0.
fn build_boundary(
    vertices: &[[f64; 2]],
    triangles: &[[usize; 3]],
) -> Result<Vec<BoundaryEdge>, MeshError> {
    let mut undirected: Vec<(usize, usize, usize, u8)> = Vec::with_capacity(3 * triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3u8 {
            let a = tri[k as usize];
            let b = tri[(k as usize + 1) % 3];
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            undirected.push((lo, hi, t, k));
        }
    }
    undirected.sort_unstable();
    // map each boundary start vertex to (end vertex, owning triangle)
    let mut by_start: Vec<(usize, usize)> = vec![(NONE, NONE); vertices.len()];
    let mut total = 0usize;
    let mut i = 0;
    while i < undirected.len() {
        let (a, b, t, k) = undirected[i];
        if i + 1 < undirected.len() && undirected[i + 1].0 == a && undirected[i + 1].1 == b {
            i += 2;
            continue;
        }
        // boundary edge, directed as it appears in its triangle so the domain
        // stays on the left
        let tri = triangles[t];
        let (u, v) = (tri[k as usize], tri[(k as usize + 1) % 3]);
        if by_start[u].0 != NONE {
            return Err(MeshError::NonConforming);
        }
        by_start[u] = (v, t);
        total += 1;
        i += 1;
    }
    let mut loop_edges = Vec::with_capacity(total);
    let mut at = 0usize; // vertex 0 is the origin corner on every level
    if by_start[at].0 == NONE {
        return Err(MeshError::NonConforming);
    }
    loop {
        let (next, t) = by_start[at];
        if next == NONE {
            return Err(MeshError::NonConforming);
        }
        loop_edges.push(BoundaryEdge {
            vertices: [at, next],
            triangle: t,
        });
        at = next;
        if at == 0 {
            break;
        }
        if loop_edges.len() > total {
            return Err(MeshError::NonConforming);
        }
    }
    if loop_edges.len() != total {
        return Err(MeshError::NonConforming);
    }
    Ok(loop_edges)
}

/// Maps each boundary edge of `fine` to the containing boundary edge of
/// `coarse`, for nested meshes of the unit square.
///
/// Fails with [`MeshError::NotNested`] if some fine edge is not contained in
/// a single coarse edge. Comparisons are exact: all coordinates are dyadic.
pub fn restrict_boundary(fine: &Mesh, coarse: &Mesh) -> Result<Vec<usize>, MeshError> {
    // classify an edge onto one of the four sides with an interval parameter
    fn classify(a: [f64; 2], b: [f64; 2]) -> Option<(usize, f64, f64)> {
        let (side, t0, t1) = if a[1] == 0.0 && b[1] == 0.0 {
            (0, a[0], b[0])
        } else if a[0] == 1.0 && b[0] == 1.0 {
            (1, a[1], b[1])
        } else if a[1] == 1.0 && b[1] == 1.0 {
            (2, a[0], b[0])
        } else if a[0] == 0.0 && b[0] == 0.0 {
            (3, a[1], b[1])
        } else {
            return None;
        };
        Some(if t0 <= t1 { (side, t0, t1) } else { (side, t1, t0) })
    }

    let mut sides: [Vec<(f64, f64, usize)>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for (e, edge) in coarse.boundary_edges().iter().enumerate() {
        let a = coarse.vertices()[edge.vertices[0]];
        let b = coarse.vertices()[edge.vertices[1]];
        let (s, t0, t1) = classify(a, b).ok_or(MeshError::NotNested)?;
        sides[s].push((t0, t1, e));
    }
    for list in sides.iter_mut() {
        list.sort_unstable_by(|x, y| x.0.partial_cmp(&y.0).expect("finite"));
    }
    let mut map = Vec::with_capacity(fine.num_boundary_edges());
    for edge in fine.boundary_edges() {
        let a = fine.vertices()[edge.vertices[0]];
        let b = fine.vertices()[edge.vertices[1]];
        let (s, t0, t1) = classify(a, b).ok_or(MeshError::NotNested)?;
        let list = &sides[s];
        let pos = list.partition_point(|&(c0, _, _)| c0 <= t0);
        if pos == 0 {
            return Err(MeshError::NotNested);
        }
        let (c0, c1, idx) = list[pos - 1];
        if c0 <= t0 && t1 <= c1 {
            map.push(idx);
        } else {
            return Err(MeshError::NotNested);
        }
    }
    Ok(map)
}

/// A chain of nested meshes, level 0 up to some maximum.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    meshes: Vec<Mesh>,
}

impl MeshHierarchy {
    /// Builds levels `0..=max_level`.
    pub fn build(max_level: u32) -> Result<Self, MeshError> {
        let mut meshes = Vec::with_capacity(max_level as usize + 1);
        meshes.push(Mesh::base());
        for _ in 0..max_level {
            let next = meshes.last().expect("nonempty").refine()?;
            meshes.push(next);
        }
        Ok(MeshHierarchy { meshes })
    }

    /// Mesh at `level`.
    pub fn mesh(&self, level: u32) -> &Mesh {
        &self.meshes[level as usize]
    }

    /// Finest level.
    pub fn max_level(&self) -> u32 {
        (self.meshes.len() - 1) as u32
    }

    /// For each triangle of the `fine` mesh, the containing triangle of the
    /// `coarse` mesh. Requires `fine >= coarse`.
    pub fn triangle_map(&self, fine: u32, coarse: u32) -> Vec<usize> {
        assert!(fine >= coarse, "triangle_map wants fine >= coarse");
        let mut map: Vec<usize> = (0..self.mesh(fine).num_triangles()).collect();
        for level in ((coarse + 1)..=fine).rev() {
            let parents = self.mesh(level).parent_triangles();
            for entry in map.iter_mut() {
                *entry = parents[*entry];
            }
        }
        map
    }

    /// For each boundary edge of the `fine` mesh, the containing boundary
    /// edge of the `coarse` mesh. Requires `fine >= coarse`.
    pub fn boundary_map(&self, fine: u32, coarse: u32) -> Vec<usize> {
        assert!(fine >= coarse, "boundary_map wants fine >= coarse");
        let mut map: Vec<usize> = (0..self.mesh(fine).num_boundary_edges()).collect();
        for level in ((coarse + 1)..=fine).rev() {
            let parents = self.mesh(level).parent_edges();
            for entry in map.iter_mut() {
                *entry = parents[*entry];
            }
        }
        map
    }
}
