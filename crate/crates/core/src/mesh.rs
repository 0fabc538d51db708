//! Structured right-triangle meshes of the unit square.
//!
//! Every cell of the n-by-n grid is split along the same diagonal
//! (lower-left to upper-right), which keeps DOF orderings deterministic.

/// Triangulation of the unit square with boundary tagging.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub n: usize,
    /// Vertex coordinates, lexicographic in (j, i): index `j*(n+1)+i`.
    pub vertices: Vec<[f64; 2]>,
    /// Positively oriented vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Deduplicated undirected edges, stored lo < hi.
    pub edges: Vec<[usize; 2]>,
    /// Per triangle, edge index opposite local vertex k.
    pub tri_edges: Vec<[usize; 3]>,
    pub boundary_vertex: Vec<bool>,
    pub boundary_edge: Vec<bool>,
}

/// Build the n-subdivision mesh. Panics if `n == 0`.
pub fn build_unit_square_mesh(n: usize) -> Mesh {
    assert!(n >= 1, "mesh subdivision must be at least 1");
    let np = n + 1;
    let mut vertices = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let vid = |i: usize, j: usize| j * np + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut edge_ids = std::collections::HashMap::new();
    let mut edges = Vec::new();
    let mut tri_edges = Vec::with_capacity(triangles.len());
    for t in &triangles {
        let mut loc = [0usize; 3];
        for k in 0..3 {
            let (u, v) = (t[(k + 1) % 3], t[(k + 2) % 3]);
            let key = if u < v { [u, v] } else { [v, u] };
            let id = *edge_ids.entry(key).or_insert_with(|| {
                edges.push(key);
                edges.len() - 1
            });
            loc[k] = id;
        }
        tri_edges.push(loc);
    }
    let mut incidence = vec![0usize; edges.len()];
    for loc in &tri_edges {
        for &e in loc {
            incidence[e] += 1;
        }
    }
    let boundary_edge: Vec<bool> = incidence.iter().map(|&c| c == 1).collect();
    let mut boundary_vertex = vec![false; vertices.len()];
    for (e, &b) in edges.iter().zip(&boundary_edge) {
        if b {
            boundary_vertex[e[0]] = true;
            boundary_vertex[e[1]] = true;
        }
    }
    Mesh {
        n,
        vertices,
        triangles,
        edges,
        tri_edges,
        boundary_vertex,
        boundary_edge,
    }
}

/// Boundary vertex and edge index sets, by the incidence-count definition.
pub fn boundary_entities(mesh: &Mesh) -> (Vec<usize>, Vec<usize>) {
    let verts = (0..mesh.vertices.len())
        .filter(|&v| mesh.boundary_vertex[v])
        .collect();
    let edges = (0..mesh.edges.len())
        .filter(|&e| mesh.boundary_edge[e])
        .collect();
    (verts, edges)
}

impl Mesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
    }
}
