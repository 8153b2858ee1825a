//! Uniform red refinement and conforming longest-edge bisection.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet, VecDeque};

use super::topology::{build_topology_with, dot, orient_tets, sorted3, sub, BoundaryLabel, MeshTopology};
use crate::error::MeshError;

fn midpoint(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])]
}

fn label_map(mesh: &MeshTopology) -> HashMap<[usize; 3], BoundaryLabel> {
    mesh.boundary_faces.iter().map(|(&f, &l)| (mesh.faces[f], l)).collect()
}

/// Splits every cell into eight: four corner cells and an interior octahedron cut along its
/// shortest diagonal, which keeps shape regularity bounded under repeated refinement.
pub fn refine_uniform(mesh: &MeshTopology) -> MeshTopology {
    let nv = mesh.num_vertices();
    let mut vertices = mesh.vertices.clone();
    vertices.extend(mesh.edges.iter().map(|[a, b]| midpoint(mesh.vertices[*a], mesh.vertices[*b])));
    let edge_ids: HashMap<[usize; 2], usize> = mesh.edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let mid = |a: usize, b: usize| -> usize { nv + edge_ids[&[a.min(b), a.max(b)]] };
    let mut tets = Vec::with_capacity(8 * mesh.num_cells());
    for k in 0..mesh.num_cells() {
        let [x0, x1, x2, x3] = mesh.sorted_cell(k);
        let te = mesh.tet_edges[k];
        // local edge order: 01 02 03 12 13 23
        let [m01, m02, m03, m12, m13, m23] = te.map(|e| nv + e);
        tets.extend([
            [x0, m01, m02, m03],
            [m01, x1, m12, m13],
            [m02, m12, x2, m23],
            [m03, m13, m23, x3],
        ]);
        // each diagonal with the equator cycle around it
        let options = [
            ([m02, m13], [m01, m03, m23, m12]),
            ([m01, m23], [m02, m03, m13, m12]),
            ([m03, m12], [m01, m02, m23, m13]),
        ];
        let len = |[a, b]: [usize; 2]| {
            let d = sub(vertices[a], vertices[b]);
            dot(d, d)
        };
        let (diag, ring) = options
            .into_iter()
            .min_by(|a, b| len(a.0).total_cmp(&len(b.0)))
            .expect("three diagonals");
        for i in 0..4 {
            tets.push([diag[0], diag[1], ring[i], ring[(i + 1) % 4]]);
        }
    }
    let mut labels = HashMap::new();
    for (&f, &l) in &mesh.boundary_faces {
        let [a, b, c] = mesh.faces[f];
        let (ab, bc, ac) = (mid(a, b), mid(b, c), mid(a, c));
        for child in [[a, ab, ac], [b, ab, bc], [c, ac, bc], [ab, bc, ac]] {
            labels.insert(sorted3(child), l);
        }
    }
    orient_tets(&vertices, &mut tets);
    build_topology_with(vertices, tets, |f| labels.get(&f).copied()).expect("red refinement preserves conformity")
}

/// Strict total order on edges: squared length, then vertex ids.
fn edge_cmp(v: &[[f64; 3]], a: [usize; 2], b: [usize; 2]) -> Ordering {
    let la = {
        let d = sub(v[a[1]], v[a[0]]);
        dot(d, d)
    };
    let lb = {
        let d = sub(v[b[1]], v[b[0]]);
        dot(d, d)
    };
    la.total_cmp(&lb).then_with(|| b.cmp(&a))
}

fn tet_edges(t: [usize; 4]) -> [[usize; 2]; 6] {
    let e = |i: usize, j: usize| [t[i].min(t[j]), t[i].max(t[j])];
    [e(0, 1), e(0, 2), e(0, 3), e(1, 2), e(1, 3), e(2, 3)]
}

fn refinement_edge(v: &[[f64; 3]], t: [usize; 4]) -> [usize; 2] {
    tet_edges(t)
        .into_iter()
        .max_by(|a, b| edge_cmp(v, *a, *b))
        .unwrap()
}

/// Default cap on bisection steps relative to the number of cells.
pub const CLOSURE_FACTOR: usize = 64;

/// Bisects every marked cell at least once at its longest edge and restores conformity by
/// recursively bisecting neighbours. Ties between equally long edges are broken by vertex ids.
pub fn refine_bisection(mesh: &MeshTopology, marked: &[usize]) -> Result<MeshTopology, MeshError> {
    refine_bisection_with_limit(mesh, marked, CLOSURE_FACTOR * mesh.num_cells() + 1000)
}

pub fn refine_bisection_with_limit(
    mesh: &MeshTopology,
    marked: &[usize],
    max_steps: usize,
) -> Result<MeshTopology, MeshError> {
    if marked.is_empty() {
        return Ok(mesh.clone());
    }
    let mut vertices = mesh.vertices.clone();
    let mut tets: Vec<Option<[usize; 4]>> = mesh.tets.iter().map(|t| Some(*t)).collect();
    let mut labels = label_map(mesh);
    let mut around: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
    for (k, t) in mesh.tets.iter().enumerate() {
        for e in tet_edges(*t) {
            around.entry(e).or_default().push(k);
        }
    }
    let mut mids: HashMap<[usize; 2], usize> = HashMap::new();
    let mut split: HashSet<[usize; 2]> = HashSet::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    let require = |e: [usize; 2], split: &mut HashSet<[usize; 2]>, queue: &mut VecDeque<usize>, around: &HashMap<[usize; 2], Vec<usize>>| {
        if split.insert(e) {
            if let Some(cells) = around.get(&e) {
                queue.extend(cells.iter().copied());
            }
        }
    };
    for &k in marked {
        let t = mesh.tets[k];
        require(refinement_edge(&vertices, t), &mut split, &mut queue, &around);
        queue.push_back(k);
    }

    let mut steps = 0;
    while let Some(k) = queue.pop_front() {
        let Some(t) = tets[k] else { continue };
        if !tet_edges(t).iter().any(|e| split.contains(e)) {
            continue;
        }
        steps += 1;
        if steps > max_steps {
            return Err(MeshError::ClosureOverflow(steps));
        }
        let r = refinement_edge(&vertices, t);
        require(r, &mut split, &mut queue, &around);
        let m = *mids.entry(r).or_insert_with(|| {
            vertices.push(midpoint(vertices[r[0]], vertices[r[1]]));
            vertices.len() - 1
        });
        let others: Vec<usize> = t.iter().copied().filter(|v| !r.contains(v)).collect();
        let (c, d) = (others[0], others[1]);

        tets[k] = None;
        for e in tet_edges(t) {
            if let Some(list) = around.get_mut(&e) {
                list.retain(|&x| x != k);
            }
        }
        for end in r {
            let child = [end, m, c, d];
            tets.push(Some(child));
            let id = tets.len() - 1;
            for e in tet_edges(child) {
                around.entry(e).or_default().push(id);
            }
            queue.push_back(id);
        }
        for o in [c, d] {
            if let Some(l) = labels.remove(&sorted3([r[0], r[1], o])) {
                labels.insert(sorted3([r[0], m, o]), l);
                labels.insert(sorted3([m, r[1], o]), l);
            }
        }
    }

    let mut out: Vec<[usize; 4]> = tets.into_iter().flatten().collect();
    orient_tets(&vertices, &mut out);
    build_topology_with(vertices, out, |f| labels.get(&f).copied())
}
