use super::element::{Family, LOCAL_EDGES, LOCAL_FACES};
use crate::mesh::{BoundaryLabel, MeshTopology};

/// Which boundary dofs are constrained.
#[derive(Debug, Clone)]
pub enum Essential {
    None,
    /// All dofs supported on Dirichlet boundary faces.
    Dirichlet,
    /// All dofs supported on the flagged faces (one flag per mesh face).
    Faces(Vec<bool>),
}

/// Global numbering of a conforming (or broken) space.
///
/// Global dofs are grouped by entity: vertices, edges, faces, cell interiors. Dofs on a shared
/// entity are defined in the entity's sorted-vertex parametrisation, so all cells agree on them
/// and every orientation sign is `+1`; the signs are kept for callers that expect them.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub family: Family,
    pub degree: usize,
    pub local_dim: usize,
    pub num_dofs: usize,
    cell_dofs: Vec<usize>,
    signs: Vec<i8>,
    pub constrained: Vec<bool>,
}

impl DofMap {
    #[inline]
    pub fn cell_dofs(&self, k: usize) -> &[usize] {
        &self.cell_dofs[k * self.local_dim..(k + 1) * self.local_dim]
    }

    #[inline]
    pub fn cell_signs(&self, k: usize) -> &[i8] {
        &self.signs[k * self.local_dim..(k + 1) * self.local_dim]
    }

    pub fn num_cells(&self) -> usize {
        self.cell_dofs.len() / self.local_dim.max(1)
    }

    pub fn num_free(&self) -> usize {
        self.constrained.iter().filter(|&&c| !c).count()
    }

    /// Maps every dof to its index among the free dofs (or `None` when constrained).
    pub fn free_index(&self) -> Vec<Option<usize>> {
        let mut next = 0;
        self.constrained
            .iter()
            .map(|&c| {
                if c {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    }
}

pub fn build_dofmap(mesh: &MeshTopology, family: Family, degree: usize, essential: &Essential) -> DofMap {
    let [nv, ne, nf, ni] = family.entity_dofs(degree);
    let local_dim = family.local_dim(degree);
    let off_e = nv * mesh.num_vertices();
    let off_f = off_e + ne * mesh.num_edges();
    let off_i = off_f + nf * mesh.num_faces();
    let num_dofs = off_i + ni * mesh.num_cells();

    let mut cell_dofs = Vec::with_capacity(local_dim * mesh.num_cells());
    for k in 0..mesh.num_cells() {
        let s = mesh.sorted_cell(k);
        for &v in &s {
            cell_dofs.extend((0..nv).map(|j| v * nv + j));
        }
        for &e in &mesh.tet_edges[k] {
            cell_dofs.extend((0..ne).map(|j| off_e + e * ne + j));
        }
        for &f in &mesh.tet_faces[k] {
            cell_dofs.extend((0..nf).map(|j| off_f + f * nf + j));
        }
        cell_dofs.extend((0..ni).map(|j| off_i + k * ni + j));
    }

    let flags = match essential {
        Essential::None => None,
        Essential::Dirichlet => Some(mesh.faces_on(BoundaryLabel::Dirichlet)),
        Essential::Faces(f) => Some(f.clone()),
    };
    let mut constrained = vec![false; num_dofs];
    if let Some(flags) = flags {
        for (f, _) in flags.iter().enumerate().filter(|(_, &on)| on) {
            let k = mesh.face_tets[f][0];
            let li = mesh.tet_faces[k].iter().position(|&x| x == f).unwrap();
            let s = mesh.sorted_cell(k);
            for &lv in &LOCAL_FACES[li] {
                for j in 0..nv {
                    constrained[s[lv] * nv + j] = true;
                }
            }
            for (i, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                if *a != li && *b != li {
                    let e = mesh.tet_edges[k][i];
                    for j in 0..ne {
                        constrained[off_e + e * ne + j] = true;
                    }
                }
            }
            for j in 0..nf {
                constrained[off_f + f * nf + j] = true;
            }
        }
    }

    DofMap {
        family,
        degree,
        local_dim,
        num_dofs,
        signs: vec![1; cell_dofs.len()],
        cell_dofs,
        constrained,
    }
}
