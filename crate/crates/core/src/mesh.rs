//! Structured simplicial meshes of the unit square and unit cube.
//!
//! Local facet `i` of an element is the facet opposite its local vertex `i`.
//! Global facets are keyed by their sorted vertex tuple and numbered in
//! lexicographic key order, so facet numbering is independent of element
//! traversal order.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{invalid, Result};

/// A point in up to three dimensions; unused trailing coordinates are zero.
pub type Point = [f64; 3];

/// One side of a facet: the element and the local facet index within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacetSide {
    pub element: usize,
    pub local: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacetNeighbors {
    pub first: FacetSide,
    pub second: Option<FacetSide>,
}

impl FacetNeighbors {
    pub fn is_boundary(&self) -> bool {
        self.second.is_none()
    }

    pub fn sides(&self) -> impl Iterator<Item = FacetSide> + '_ {
        std::iter::once(self.first).chain(self.second)
    }
}

/// Conforming simplicial partition of `[0,1]^d`.
#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    dim: usize,
    vertices: Vec<Point>,
    /// Flat element connectivity with stride `dim + 1`.
    elements: Vec<usize>,
    /// Flat sorted facet vertex tuples with stride `dim`.
    facets: Vec<usize>,
    /// Global facet index of every local facet, stride `dim + 1`.
    element_facets: Vec<usize>,
    facet_neighbors: Vec<FacetNeighbors>,
    boundary: Vec<bool>,
}

/// Affine reference-to-physical map `x = offset + jac * xi`.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub dim: usize,
    pub offset: Point,
    pub jac: [[f64; 3]; 3],
    /// Inverse of `jac`.
    pub inv: [[f64; 3]; 3],
    pub det: f64,
}

impl AffineMap {
    pub fn apply(&self, xi: &[f64]) -> Point {
        let mut x = self.offset;
        for (r, xr) in x.iter_mut().enumerate().take(self.dim) {
            for (c, xic) in xi.iter().enumerate().take(self.dim) {
                *xr += self.jac[r][c] * xic;
            }
        }
        x
    }

    pub fn apply_inverse(&self, x: &Point) -> Point {
        let mut d = [0.0; 3];
        for i in 0..self.dim {
            d[i] = x[i] - self.offset[i];
        }
        let mut xi = [0.0; 3];
        for (r, xir) in xi.iter_mut().enumerate().take(self.dim) {
            for (c, dc) in d.iter().enumerate().take(self.dim) {
                *xir += self.inv[r][c] * dc;
            }
        }
        xi
    }

    /// Maps a reference gradient to a physical one: `J^{-T} g`.
    #[inline]
    pub fn push_gradient(&self, g: &[f64]) -> Point {
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate().take(self.dim) {
            for c in 0..self.dim {
                *o += self.inv[c][r] * g[c];
            }
        }
        out
    }
}

/// Per-element geometric data.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub volume: f64,
    pub diameter: f64,
    pub facet_areas: Vec<f64>,
    pub outward_normals: Vec<Point>,
    pub affine_map: AffineMap,
}

fn det3(m: &[[f64; 3]; 3], dim: usize) -> f64 {
    match dim {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

fn inverse(m: &[[f64; 3]; 3], dim: usize) -> [[f64; 3]; 3] {
    let det = det3(m, dim);
    let mut inv = [[0.0; 3]; 3];
    match dim {
        1 => inv[0][0] = 1.0 / det,
        2 => {
            inv[0][0] = m[1][1] / det;
            inv[0][1] = -m[0][1] / det;
            inv[1][0] = -m[1][0] / det;
            inv[1][1] = m[0][0] / det;
        }
        _ => {
            for r in 0..3 {
                for c in 0..3 {
                    let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
                    let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
                    inv[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
                }
            }
        }
    }
    inv
}

pub(crate) fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

impl SimplicialMesh {
    /// Builds a mesh from raw connectivity. Elements with negative orientation
    /// are reoriented by swapping their last two vertices.
    pub fn from_elements(dim: usize, vertices: Vec<Point>, mut elements: Vec<usize>) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(invalid(format!("mesh dimension must be 2 or 3, got {dim}")));
        }
        let nv = dim + 1;
        if elements.len() % nv != 0 {
            return Err(invalid("element connectivity length is not a multiple of dim + 1"));
        }
        if elements.iter().any(|&v| v >= vertices.len()) {
            return Err(invalid("element references a missing vertex"));
        }
        for conn in elements.chunks_mut(nv) {
            let map = affine_of(dim, &vertices, conn);
            if map.det.abs() < 1e-300 {
                return Err(invalid("degenerate element"));
            }
            if map.det < 0.0 {
                conn.swap(dim - 1, dim);
            }
        }

        let n_elem = elements.len() / nv;
        let mut keyed: BTreeMap<Vec<usize>, Vec<FacetSide>> = BTreeMap::new();
        for e in 0..n_elem {
            let conn = &elements[e * nv..(e + 1) * nv];
            for local in 0..nv {
                let mut key: Vec<usize> = (0..nv).filter(|&j| j != local).map(|j| conn[j]).collect();
                key.sort_unstable();
                keyed.entry(key).or_default().push(FacetSide { element: e, local });
            }
        }

        let mut facets = Vec::with_capacity(keyed.len() * dim);
        let mut facet_neighbors = Vec::with_capacity(keyed.len());
        let mut boundary = Vec::with_capacity(keyed.len());
        let mut element_facets = vec![usize::MAX; n_elem * nv];
        for (id, (key, sides)) in keyed.into_iter().enumerate() {
            if sides.len() > 2 {
                return Err(invalid("non-manifold facet shared by more than two elements"));
            }
            facets.extend_from_slice(&key);
            for s in &sides {
                element_facets[s.element * nv + s.local] = id;
            }
            boundary.push(sides.len() == 1);
            facet_neighbors.push(FacetNeighbors { first: sides[0], second: sides.get(1).copied() });
        }

        Ok(Self { dim, vertices, elements, facets, element_facets, facet_neighbors, boundary })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len() / (self.dim + 1)
    }

    pub fn num_facets(&self) -> usize {
        self.facet_neighbors.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Point {
        &self.vertices[i]
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.elements[e * nv..(e + 1) * nv]
    }

    /// Sorted global vertex ids of a facet.
    pub fn facet(&self, f: usize) -> &[usize] {
        &self.facets[f * self.dim..(f + 1) * self.dim]
    }

    pub fn element_facets(&self, e: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.element_facets[e * nv..(e + 1) * nv]
    }

    pub fn facet_neighbors(&self, f: usize) -> &FacetNeighbors {
        &self.facet_neighbors[f]
    }

    pub fn is_boundary_facet(&self, f: usize) -> bool {
        self.boundary[f]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn check_element(&self, e: usize) -> Result<()> {
        if e >= self.num_elements() {
            return Err(invalid(format!("element id {e} out of range (mesh has {})", self.num_elements())));
        }
        Ok(())
    }

    pub fn affine_map(&self, e: usize) -> AffineMap {
        affine_of(self.dim, &self.vertices, self.element(e))
    }

    pub fn element_geometry(&self, e: usize) -> Result<ElementGeometry> {
        self.check_element(e)?;
        let d = self.dim;
        let conn = self.element(e);
        let map = self.affine_map(e);
        let volume = map.det.abs() / factorial(d);
        let mut diameter: f64 = 0.0;
        for a in 0..=d {
            for b in a + 1..=d {
                diameter = diameter.max(distance(&self.vertices[conn[a]], &self.vertices[conn[b]]));
            }
        }
        // grad(lambda_j) = J^{-T} e_j for j >= 1, grad(lambda_0) = -sum.
        let mut grads = vec![[0.0; 3]; d + 1];
        for j in 1..=d {
            let mut ej = [0.0; 3];
            ej[j - 1] = 1.0;
            grads[j] = map.push_gradient(&ej);
            for c in 0..d {
                grads[0][c] -= grads[j][c];
            }
        }
        let mut facet_areas = Vec::with_capacity(d + 1);
        let mut outward_normals = Vec::with_capacity(d + 1);
        for g in &grads {
            let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            facet_areas.push(d as f64 * volume * norm);
            outward_normals.push([-g[0] / norm, -g[1] / norm, -g[2] / norm]);
        }
        Ok(ElementGeometry { volume, diameter, facet_areas, outward_normals, affine_map: map })
    }

    pub fn centroid(&self, e: usize) -> Point {
        centroid_of(self.element(e).iter().map(|&v| &self.vertices[v]))
    }

    pub fn facet_centroid(&self, f: usize) -> Point {
        centroid_of(self.facet(f).iter().map(|&v| &self.vertices[v]))
    }

    /// Largest element diameter.
    pub fn max_diameter(&self) -> f64 {
        (0..self.num_elements())
            .map(|e| self.element_geometry(e).map(|g| g.diameter).unwrap_or(0.0))
            .fold(0.0, f64::max)
    }

    /// Writes the vertex and element lists as plain text.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "dim {}", self.dim)?;
        writeln!(w, "vertices {}", self.num_vertices())?;
        for v in &self.vertices {
            let coords: Vec<String> = v[..self.dim].iter().map(|c| format!("{c:.17e}")).collect();
            writeln!(w, "{}", coords.join(" "))?;
        }
        writeln!(w, "elements {}", self.num_elements())?;
        for e in 0..self.num_elements() {
            let ids: Vec<String> = self.element(e).iter().map(|i| i.to_string()).collect();
            writeln!(w, "{}", ids.join(" "))?;
        }
        Ok(())
    }
}

fn centroid_of<'a>(pts: impl Iterator<Item = &'a Point>) -> Point {
    let mut c = [0.0; 3];
    let mut n = 0.0;
    for p in pts {
        for i in 0..3 {
            c[i] += p[i];
        }
        n += 1.0;
    }
    c.map(|x| x / n)
}

fn affine_of(dim: usize, vertices: &[Point], conn: &[usize]) -> AffineMap {
    let v0 = vertices[conn[0]];
    let mut jac = [[0.0; 3]; 3];
    for c in 0..dim {
        let vc = vertices[conn[c + 1]];
        for r in 0..dim {
            jac[r][c] = vc[r] - v0[r];
        }
    }
    let det = det3(&jac, dim);
    let inv = inverse(&jac, dim);
    AffineMap { dim, offset: v0, jac, inv, det }
}

/// `M x M` squares, each split along the diagonal from its lower-left to its
/// upper-right corner.
pub fn build_unit_square_mesh(m: usize) -> Result<SimplicialMesh> {
    if m == 0 {
        return Err(invalid("mesh resolution M must be at least 1"));
    }
    let n = m + 1;
    let h = 1.0 / m as f64;
    let mut vertices = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            vertices.push([i as f64 * h, j as f64 * h, 0.0]);
        }
    }
    let id = |i: usize, j: usize| j * n + i;
    let mut elements = Vec::with_capacity(6 * m * m);
    for j in 0..m {
        for i in 0..m {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            elements.extend_from_slice(&[v00, v10, v11]);
            elements.extend_from_slice(&[v00, v11, v01]);
        }
    }
    SimplicialMesh::from_elements(2, vertices, elements)
}

/// `M x M x M` cubes, each cut into the six Kuhn tetrahedra sharing the
/// main diagonal from `(0,0,0)` to `(1,1,1)` of the cube.
pub fn build_unit_cube_mesh(m: usize) -> Result<SimplicialMesh> {
    if m == 0 {
        return Err(invalid("mesh resolution M must be at least 1"));
    }
    let n = m + 1;
    let h = 1.0 / m as f64;
    let mut vertices = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                vertices.push([i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }
    let id = |c: [usize; 3]| (c[2] * n + c[1]) * n + c[0];
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut elements = Vec::with_capacity(24 * m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut tet = [id(c), 0, 0, 0];
                    for (step, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        tet[step + 1] = id(c);
                    }
                    elements.extend_from_slice(&tet);
                }
            }
        }
    }
    SimplicialMesh::from_elements(3, vertices, elements)
}
