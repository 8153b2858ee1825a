//! Structured mesh generators.

use std::collections::HashMap;

use super::topology::{build_topology_uniform, orient_tets, BoundaryLabel, MeshTopology};
use crate::error::MeshError;

/// Permutations of the axes, one Kuhn simplex each.
const KUHN_PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Kuhn-subdivided box grid with `n` cells of size `h` per axis starting at `origin`,
/// keeping only the subcubes for which `keep(i, j, k)` holds.
pub fn kuhn_grid(
    origin: [f64; 3],
    h: f64,
    n: [usize; 3],
    keep: impl Fn(usize, usize, usize) -> bool,
) -> Result<MeshTopology, MeshError> {
    let mut ids: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut tets = Vec::new();
    // vertices numbered lexicographically over the kept cells for a stable order
    let mut vid = |p: [usize; 3], vertices: &mut Vec<[f64; 3]>| -> usize {
        *ids.entry(p).or_insert_with(|| {
            vertices.push([
                origin[0] + h * p[0] as f64,
                origin[1] + h * p[1] as f64,
                origin[2] + h * p[2] as f64,
            ]);
            vertices.len() - 1
        })
    };
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                if !keep(i, j, k) {
                    continue;
                }
                for perm in KUHN_PERMS {
                    let mut p = [i, j, k];
                    let mut t = [0; 4];
                    t[0] = vid(p, &mut vertices);
                    for (s, &axis) in perm.iter().enumerate() {
                        p[axis] += 1;
                        t[s + 1] = vid(p, &mut vertices);
                    }
                    tets.push(t);
                }
            }
        }
    }
    orient_tets(&vertices, &mut tets);
    build_topology_uniform(vertices, tets, BoundaryLabel::Dirichlet)
}

/// Kuhn mesh of the unit cube with `n` subdivisions per axis, all boundary faces Dirichlet.
pub fn unit_cube_mesh(n: usize) -> MeshTopology {
    assert!(n >= 1, "unit_cube_mesh needs n >= 1");
    kuhn_grid([0.0; 3], 1.0 / n as f64, [n; 3], |_, _, _| true).expect("Kuhn grid is valid")
}

/// The Fichera corner `(-1, 1)^3 \ [0, 1)^3` with `n` subdivisions per unit length.
pub fn fichera_mesh(n: usize) -> MeshTopology {
    assert!(n >= 1);
    kuhn_grid([-1.0; 3], 1.0 / n as f64, [2 * n; 3], |i, j, k| !(i >= n && j >= n && k >= n))
        .expect("Kuhn grid is valid")
}

/// Conforming triangulation of a star-shaped polygon by a fan from `center`,
/// followed by `levels` rounds of red refinement. Returns points and triangles.
pub fn fan_triangulation(
    center: [f64; 2],
    polygon: &[[f64; 2]],
    closed: bool,
    levels: usize,
) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let mut pts = vec![center];
    pts.extend_from_slice(polygon);
    let m = polygon.len();
    let count = if closed { m } else { m - 1 };
    let mut tris: Vec<[usize; 3]> = (0..count).map(|i| [0, 1 + i, 1 + (i + 1) % m]).collect();
    for _ in 0..levels {
        let mut mids: HashMap<[usize; 2], usize> = HashMap::new();
        let mut next = Vec::with_capacity(4 * tris.len());
        let mut mid = |a: usize, b: usize, pts: &mut Vec<[f64; 2]>| -> usize {
            let key = [a.min(b), a.max(b)];
            *mids.entry(key).or_insert_with(|| {
                let (p, q) = (pts[a], pts[b]);
                pts.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                pts.len() - 1
            })
        };
        for [a, b, c] in tris {
            let ab = mid(a, b, &mut pts);
            let bc = mid(b, c, &mut pts);
            let ca = mid(c, a, &mut pts);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        tris = next;
    }
    (pts, tris)
}

/// Extrudes a 2D triangulation over `z in (0, 1)` with `layers` layers. Each prism is cut into
/// three tetrahedra using the global vertex order, which makes the cuts of neighbouring prisms agree.
pub fn extrude(points: &[[f64; 2]], tris: &[[usize; 3]], layers: usize) -> Result<MeshTopology, MeshError> {
    let np = points.len();
    let mut vertices = Vec::with_capacity(np * (layers + 1));
    for l in 0..=layers {
        let z = l as f64 / layers as f64;
        vertices.extend(points.iter().map(|p| [p[0], p[1], z]));
    }
    let mut tets = Vec::with_capacity(3 * tris.len() * layers);
    for l in 0..layers {
        for t in tris {
            let mut s = *t;
            s.sort_unstable();
            let [a, b, c] = s.map(|v| v + l * np);
            let [ta, tb, tc] = s.map(|v| v + (l + 1) * np);
            tets.extend([[a, b, c, ta], [b, c, ta, tb], [c, ta, tb, tc]]);
        }
    }
    orient_tets(&vertices, &mut tets);
    build_topology_uniform(vertices, tets, BoundaryLabel::Dirichlet)
}
