use std::collections::{BTreeMap, HashMap};

use crate::error::MeshError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryLabel {
    Dirichlet,
    Neumann,
}

/// Conforming tetrahedral mesh with deduplicated edges and faces.
///
/// Edges and faces store their vertices in ascending id order. `tet_edges[k]`
/// and `tet_faces[k]` follow the local numbering of the reference element
/// applied to the *sorted* vertex list of cell `k` (see [`MeshTopology::sorted_cell`]),
/// while `tets[k]` itself keeps a positively oriented ordering.
#[derive(Debug, Clone)]
pub struct MeshTopology {
    pub vertices: Vec<[f64; 3]>,
    pub tets: Vec<[usize; 4]>,
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<[usize; 3]>,
    pub boundary_faces: BTreeMap<usize, BoundaryLabel>,
    pub tet_edges: Vec<[usize; 6]>,
    pub tet_faces: Vec<[usize; 4]>,
    pub edge_tets: Vec<Vec<usize>>,
    pub face_tets: Vec<Vec<usize>>,
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Signed volume of the tetrahedron `(a, b, c, d)`.
pub fn signed_volume(v: &[[f64; 3]], t: [usize; 4]) -> f64 {
    let (a, b, c, d) = (v[t[0]], v[t[1]], v[t[2]], v[t[3]]);
    dot(sub(b, a), cross(sub(c, a), sub(d, a))) / 6.0
}

pub(crate) fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

pub(crate) fn sorted4(mut t: [usize; 4]) -> [usize; 4] {
    t.sort_unstable();
    t
}

/// Swaps the last two vertices of every negatively oriented cell.
pub fn orient_tets(vertices: &[[f64; 3]], tets: &mut [[usize; 4]]) {
    for t in tets.iter_mut() {
        if signed_volume(vertices, *t) < 0.0 {
            t.swap(2, 3);
        }
    }
}

/// Local edges and faces of the sorted vertex list, as in the reference element.
const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];
const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Builds and validates a mesh. `boundary_labels` is keyed by sorted vertex triples and must
/// cover exactly the faces that belong to a single cell.
pub fn build_topology(
    vertices: Vec<[f64; 3]>,
    tets: Vec<[usize; 4]>,
    boundary_labels: &HashMap<[usize; 3], BoundaryLabel>,
) -> Result<MeshTopology, MeshError> {
    build_inner(vertices, tets, |f| boundary_labels.get(&f).copied(), Some(boundary_labels))
}

/// Builds a mesh whose boundary faces all carry `label`.
pub fn build_topology_uniform(
    vertices: Vec<[f64; 3]>,
    tets: Vec<[usize; 4]>,
    label: BoundaryLabel,
) -> Result<MeshTopology, MeshError> {
    build_inner(vertices, tets, |_| Some(label), None)
}

/// Builds a mesh, labelling boundary faces through `label_of`.
pub fn build_topology_with(
    vertices: Vec<[f64; 3]>,
    tets: Vec<[usize; 4]>,
    label_of: impl Fn([usize; 3]) -> Option<BoundaryLabel>,
) -> Result<MeshTopology, MeshError> {
    build_inner(vertices, tets, label_of, None)
}

fn build_inner(
    vertices: Vec<[f64; 3]>,
    tets: Vec<[usize; 4]>,
    label_of: impl Fn([usize; 3]) -> Option<BoundaryLabel>,
    explicit: Option<&HashMap<[usize; 3], BoundaryLabel>>,
) -> Result<MeshTopology, MeshError> {
    let nv = vertices.len();
    for (k, t) in tets.iter().enumerate() {
        if let Some(&bad) = t.iter().find(|&&v| v >= nv) {
            return Err(MeshError::BadVertex {
                cell: k,
                vertex: bad,
                count: nv,
            });
        }
        let volume = signed_volume(&vertices, *t);
        let scale = (0..4)
            .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
            .map(|(i, j)| norm(sub(vertices[t[i]], vertices[t[j]])))
            .fold(0.0, f64::max);
        if !(volume > 1e-14 * scale.powi(3)) {
            return Err(MeshError::InvertedCell { cell: k, volume });
        }
    }

    let mut edge_ids: HashMap<[usize; 2], usize> = HashMap::with_capacity(tets.len() * 2);
    let mut face_ids: HashMap<[usize; 3], usize> = HashMap::with_capacity(tets.len() * 3);
    let mut edges = Vec::new();
    let mut faces = Vec::new();
    let mut tet_edges = Vec::with_capacity(tets.len());
    let mut tet_faces = Vec::with_capacity(tets.len());
    let mut edge_tets: Vec<Vec<usize>> = Vec::new();
    let mut face_tets: Vec<Vec<usize>> = Vec::new();
    for (k, t) in tets.iter().enumerate() {
        let s = sorted4(*t);
        let mut te = [0; 6];
        for (i, [a, b]) in LOCAL_EDGES.iter().enumerate() {
            let key = [s[*a], s[*b]];
            let id = *edge_ids.entry(key).or_insert_with(|| {
                edges.push(key);
                edge_tets.push(Vec::new());
                edges.len() - 1
            });
            edge_tets[id].push(k);
            te[i] = id;
        }
        let mut tf = [0; 4];
        for (i, [a, b, c]) in LOCAL_FACES.iter().enumerate() {
            let key = [s[*a], s[*b], s[*c]];
            let id = *face_ids.entry(key).or_insert_with(|| {
                faces.push(key);
                face_tets.push(Vec::new());
                faces.len() - 1
            });
            face_tets[id].push(k);
            if face_tets[id].len() > 2 {
                return Err(MeshError::NonConforming(key));
            }
            tf[i] = id;
        }
        tet_edges.push(te);
        tet_faces.push(tf);
    }

    let mut boundary_faces = BTreeMap::new();
    for (id, f) in faces.iter().enumerate() {
        if face_tets[id].len() == 1 {
            let label = label_of(*f).ok_or(MeshError::UnlabeledBoundary(*f))?;
            boundary_faces.insert(id, label);
        }
    }
    if let Some(map) = explicit {
        for f in map.keys() {
            match face_ids.get(&sorted3(*f)) {
                Some(&id) if face_tets[id].len() == 1 => {}
                _ => return Err(MeshError::SpuriousLabel(*f)),
            }
        }
    }

    Ok(MeshTopology {
        vertices,
        tets,
        edges,
        faces,
        boundary_faces,
        tet_edges,
        tet_faces,
        edge_tets,
        face_tets,
    })
}

/// Diameter, inscribed-ball diameter and volume of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub h: f64,
    pub rho: f64,
    pub kappa: f64,
    pub volume: f64,
}

impl MeshTopology {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.tets.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Vertices of cell `k` in ascending id order.
    pub fn sorted_cell(&self, k: usize) -> [usize; 4] {
        sorted4(self.tets[k])
    }

    /// Coordinates of the sorted vertices of cell `k`.
    pub fn cell_coords(&self, k: usize) -> [[f64; 3]; 4] {
        let s = self.sorted_cell(k);
        [
            self.vertices[s[0]],
            self.vertices[s[1]],
            self.vertices[s[2]],
            self.vertices[s[3]],
        ]
    }

    /// Unit tangent of an edge, pointing from the lower to the higher vertex id.
    pub fn tangent(&self, e: usize) -> [f64; 3] {
        let [a, b] = self.edges[e];
        let d = sub(self.vertices[b], self.vertices[a]);
        let l = norm(d);
        [d[0] / l, d[1] / l, d[2] / l]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        norm(sub(self.vertices[b], self.vertices[a]))
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_tets[f].len() == 1
    }

    pub fn face_label(&self, f: usize) -> Option<BoundaryLabel> {
        self.boundary_faces.get(&f).copied()
    }

    pub fn cell_volume(&self, k: usize) -> f64 {
        signed_volume(&self.vertices, self.tets[k])
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_cells()).map(|k| self.cell_volume(k)).sum()
    }

    pub fn h_max(&self) -> f64 {
        (0..self.num_edges()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    /// Per-edge flag: the edge lies in some Dirichlet boundary face.
    pub fn dirichlet_edges(&self) -> Vec<bool> {
        self.edges_on(BoundaryLabel::Dirichlet)
    }

    /// Per-vertex flag: the vertex lies in some Dirichlet boundary face.
    pub fn dirichlet_vertices(&self) -> Vec<bool> {
        let mut out = vec![false; self.num_vertices()];
        for (&f, &l) in &self.boundary_faces {
            if l == BoundaryLabel::Dirichlet {
                for v in self.faces[f] {
                    out[v] = true;
                }
            }
        }
        out
    }

    /// Per-face flag: the face is a boundary face with the given label.
    pub fn faces_on(&self, label: BoundaryLabel) -> Vec<bool> {
        let mut out = vec![false; self.num_faces()];
        for (&f, &l) in &self.boundary_faces {
            out[f] = l == label;
        }
        out
    }

    /// Per-edge flag: the edge lies in some boundary face with the given label.
    pub fn edges_on(&self, label: BoundaryLabel) -> Vec<bool> {
        let mut out = vec![false; self.num_edges()];
        for (&f, &l) in &self.boundary_faces {
            if l != label {
                continue;
            }
            let k = self.face_tets[f][0];
            let li = self.tet_faces[k].iter().position(|&x| x == f).unwrap();
            for (i, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                if *a != li && *b != li {
                    out[self.tet_edges[k][i]] = true;
                }
            }
        }
        out
    }

    /// Checks the conformity invariants; used by tests and after refinement.
    pub fn check(&self) -> Result<(), MeshError> {
        for (k, t) in self.tets.iter().enumerate() {
            let volume = signed_volume(&self.vertices, *t);
            if volume <= 0.0 {
                return Err(MeshError::InvertedCell { cell: k, volume });
            }
        }
        for (f, cells) in self.face_tets.iter().enumerate() {
            match cells.len() {
                1 if !self.boundary_faces.contains_key(&f) => {
                    return Err(MeshError::UnlabeledBoundary(self.faces[f]))
                }
                1 | 2 => {}
                _ => return Err(MeshError::NonConforming(self.faces[f])),
            }
        }
        for (e, cells) in self.edge_tets.iter().enumerate() {
            for &k in cells {
                if !self.tet_edges[k].contains(&e) {
                    return Err(MeshError::NonConforming([self.edges[e][0], self.edges[e][1], usize::MAX]));
                }
            }
        }
        Ok(())
    }
}

/// Shape measures of cell `k`.
pub fn geometry_stats(mesh: &MeshTopology, k: usize) -> Result<CellGeometry, MeshError> {
    let volume = mesh.cell_volume(k);
    if volume <= 0.0 {
        return Err(MeshError::InvertedCell { cell: k, volume });
    }
    let c = mesh.cell_coords(k);
    let mut h: f64 = 0.0;
    for [a, b] in LOCAL_EDGES {
        h = h.max(norm(sub(c[a], c[b])));
    }
    let area: f64 = LOCAL_FACES
        .iter()
        .map(|[a, b, d]| 0.5 * norm(cross(sub(c[*b], c[*a]), sub(c[*d], c[*a]))))
        .sum();
    let rho = 6.0 * volume / area;
    Ok(CellGeometry {
        h,
        rho,
        kappa: h / rho,
        volume,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> (Vec<[f64; 3]>, Vec<[usize; 4]>) {
        (
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![[0, 1, 2, 3]],
        )
    }

    #[test]
    fn single_tet() {
        let (v, t) = reference();
        let m = build_topology_uniform(v, t, BoundaryLabel::Dirichlet).unwrap();
        assert_eq!((m.num_edges(), m.num_faces(), m.num_cells()), (6, 4, 1));
        assert_eq!(m.boundary_faces.len(), 4);
        m.check().unwrap();
    }

    #[test]
    fn bipyramid() {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ];
        let mut t = vec![[0, 1, 2, 3], [0, 1, 2, 4]];
        orient_tets(&v, &mut t);
        let m = build_topology_uniform(v, t, BoundaryLabel::Dirichlet).unwrap();
        assert_eq!((m.num_edges(), m.num_faces()), (9, 7));
        assert_eq!(m.face_tets.iter().filter(|c| c.len() == 2).count(), 1);
        // incidence maps are transposes of each other
        for (k, te) in m.tet_edges.iter().enumerate() {
            for &e in te {
                assert!(m.edge_tets[e].contains(&k));
            }
        }
    }

    #[test]
    fn degenerate_and_inverted_cells() {
        let (v, _) = reference();
        let err = build_topology_uniform(v.clone(), vec![[0, 1, 1, 3]], BoundaryLabel::Dirichlet);
        assert!(matches!(err, Err(MeshError::InvertedCell { .. })));
        let err = build_topology_uniform(v, vec![[0, 2, 1, 3]], BoundaryLabel::Dirichlet);
        assert!(matches!(err, Err(MeshError::InvertedCell { .. })));
    }

    #[test]
    fn labels_must_match_the_boundary() {
        let (v, t) = reference();
        let mut labels = HashMap::new();
        labels.insert([1, 2, 3], BoundaryLabel::Dirichlet);
        assert!(matches!(
            build_topology(v.clone(), t.clone(), &labels),
            Err(MeshError::UnlabeledBoundary(_))
        ));
        for f in [[0, 2, 3], [0, 1, 3], [0, 1, 2]] {
            labels.insert(f, BoundaryLabel::Neumann);
        }
        let m = build_topology(v.clone(), t.clone(), &labels).unwrap();
        assert_eq!(m.dirichlet_edges().iter().filter(|&&d| d).count(), 3);
        labels.insert([0, 1, 4], BoundaryLabel::Neumann);
        assert!(matches!(build_topology(v, t, &labels), Err(MeshError::SpuriousLabel(_))));
    }

    #[test]
    fn non_conforming() {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
            [1.0, 1.0, 1.0],
        ];
        let mut t = vec![[0, 1, 2, 3], [0, 1, 2, 4], [0, 1, 2, 5]];
        orient_tets(&v, &mut t);
        let err = build_topology_uniform(v, t, BoundaryLabel::Dirichlet);
        assert!(matches!(err, Err(MeshError::NonConforming(_))));
    }

    #[test]
    fn reference_geometry() {
        let (v, t) = reference();
        let m = build_topology_uniform(v, t, BoundaryLabel::Dirichlet).unwrap();
        let g = geometry_stats(&m, 0).unwrap();
        assert!((g.h - 2f64.sqrt()).abs() < 1e-15);
        // inscribed sphere of x,y,z >= 0, x+y+z <= 1: r = 1 / (3 + sqrt 3)
        let r = 1.0 / (3.0 + 3f64.sqrt());
        assert!((g.rho - 2.0 * r).abs() < 1e-14);
        assert!((g.rho - 0.4226).abs() < 1e-4);
    }

    #[test]
    fn regular_tet_kappa() {
        let s = 1.0 / 2f64.sqrt();
        let v = vec![[s, 0.0, -0.5], [-s, 0.0, -0.5], [0.0, s, 0.5], [0.0, -s, 0.5]];
        // edge length sqrt 2 before scaling
        let v: Vec<[f64; 3]> = v.iter().map(|p| [p[0] * s, p[1] * s, p[2] * s]).collect();
        let mut t = vec![[0, 1, 2, 3]];
        orient_tets(&v, &mut t);
        let m = build_topology_uniform(v, t, BoundaryLabel::Dirichlet).unwrap();
        let g = geometry_stats(&m, 0).unwrap();
        assert!((g.h - 1.0).abs() < 1e-14, "{}", g.h);
        assert!((g.kappa - 6f64.sqrt()).abs() < 1e-12);
    }
}
