use super::topology::{geometry_stats, norm, sub, BoundaryLabel, MeshTopology};

/// The cells sharing one edge, with the data the patch problems need.
#[derive(Debug, Clone)]
pub struct EdgePatch {
    pub edge: usize,
    pub cells: Vec<usize>,
    /// Diameter of the patch domain.
    pub h: f64,
    /// Worst shape-regularity ratio over the patch cells.
    pub kappa: f64,
    /// The edge lies in a Dirichlet boundary face.
    pub dirichlet_edge: bool,
    /// Patch boundary faces lying on the Dirichlet boundary (only filled for Dirichlet edges).
    pub gamma_faces: Vec<usize>,
}

impl EdgePatch {
    /// Faces of the patch cells that are not shared by two patch cells.
    pub fn boundary_faces(&self, mesh: &MeshTopology) -> Vec<usize> {
        let mut faces: Vec<usize> = self.cells.iter().flat_map(|&k| mesh.tet_faces[k]).collect();
        faces.sort_unstable();
        let mut out = Vec::new();
        let mut i = 0;
        while i < faces.len() {
            let mut j = i;
            while j < faces.len() && faces[j] == faces[i] {
                j += 1;
            }
            if j - i == 1 {
                out.push(faces[i]);
            }
            i = j;
        }
        out
    }

    /// Vertices of the patch in ascending order.
    pub fn vertices(&self, mesh: &MeshTopology) -> Vec<usize> {
        let mut v: Vec<usize> = self.cells.iter().flat_map(|&k| mesh.tets[k]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

pub fn edge_patch(mesh: &MeshTopology, edge: usize) -> EdgePatch {
    let cells = mesh.edge_tets[edge].clone();
    let mut patch = EdgePatch {
        edge,
        cells,
        h: 0.0,
        kappa: 0.0,
        dirichlet_edge: false,
        gamma_faces: Vec::new(),
    };
    let verts = patch.vertices(mesh);
    for (i, &a) in verts.iter().enumerate() {
        for &b in &verts[i + 1..] {
            patch.h = patch.h.max(norm(sub(mesh.vertices[a], mesh.vertices[b])));
        }
    }
    patch.kappa = patch
        .cells
        .iter()
        .map(|&k| geometry_stats(mesh, k).map_or(f64::INFINITY, |g| g.kappa))
        .fold(0.0, f64::max);
    let [a, b] = mesh.edges[edge];
    patch.dirichlet_edge = patch.cells.iter().any(|&k| {
        mesh.tet_faces[k].iter().any(|&f| {
            mesh.face_label(f) == Some(BoundaryLabel::Dirichlet) && mesh.faces[f].contains(&a) && mesh.faces[f].contains(&b)
        })
    });
    if patch.dirichlet_edge {
        patch.gamma_faces = patch
            .boundary_faces(mesh)
            .into_iter()
            .filter(|&f| mesh.face_label(f) == Some(BoundaryLabel::Dirichlet))
            .collect();
    }
    patch
}

#[cfg(test)]
mod tests {
    use super::super::generate::unit_cube_mesh;
    use super::*;

    fn find_edge(m: &MeshTopology, p: [f64; 3], q: [f64; 3]) -> usize {
        (0..m.num_edges())
            .find(|&e| {
                let [a, b] = m.edges[e];
                let (x, y) = (m.vertices[a], m.vertices[b]);
                (x == p && y == q) || (x == q && y == p)
            })
            .unwrap()
    }

    #[test]
    fn main_diagonal_patch() {
        let m = unit_cube_mesh(1);
        let e = find_edge(&m, [0.0; 3], [1.0; 3]);
        let p = edge_patch(&m, e);
        assert_eq!(p.cells.len(), 6);
        assert!((p.h - 3f64.sqrt()).abs() < 1e-14);
        assert!(!p.dirichlet_edge);
        assert_eq!(p.boundary_faces(&m).len(), 12);
    }

    #[test]
    fn boundary_edge_is_dirichlet() {
        let m = unit_cube_mesh(1);
        let e = find_edge(&m, [0.0; 3], [1.0, 0.0, 0.0]);
        let p = edge_patch(&m, e);
        assert!(p.dirichlet_edge);
        assert!(!p.gamma_faces.is_empty());
        for &k in &p.cells {
            let t = m.tets[k];
            assert!(t.contains(&m.edges[e][0]) && t.contains(&m.edges[e][1]));
        }
    }

    #[test]
    fn centre_edges_of_refined_cube_are_interior() {
        let m = unit_cube_mesh(2);
        let centre = m.vertices.iter().position(|&p| p == [0.5; 3]).unwrap();
        let through: Vec<usize> = (0..m.num_edges()).filter(|&e| m.edges[e].contains(&centre)).collect();
        assert!(!through.is_empty());
        for e in through {
            assert!(!edge_patch(&m, e).dirichlet_edge);
        }
    }
}
