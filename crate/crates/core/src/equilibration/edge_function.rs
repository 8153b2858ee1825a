use nalgebra::Vector3;

use crate::fe::CellMap;
use crate::mesh::MeshTopology;

/// Barycentric coordinates of a cell as affine functions of the reference point.
#[derive(Debug, Clone, Copy)]
pub struct Barycentric {
    /// Gradients of `lambda_0 .. lambda_3` in sorted-vertex order.
    pub grads: [Vector3<f64>; 4],
}

impl Barycentric {
    pub fn new(map: &CellMap) -> Self {
        let g1 = map.jac_inv_t.column(0).into_owned();
        let g2 = map.jac_inv_t.column(1).into_owned();
        let g3 = map.jac_inv_t.column(2).into_owned();
        Self {
            grads: [-(g1 + g2 + g3), g1, g2, g3],
        }
    }

    #[inline]
    pub fn values(x: &[f64; 3]) -> [f64; 4] {
        [1.0 - x[0] - x[1] - x[2], x[0], x[1], x[2]]
    }
}

/// The scaled Whitney function of one edge, `|b - a| (l_a grad l_b - l_b grad l_a)`, restricted
/// to one cell of its patch. Its tangential component is one along the edge.
#[derive(Debug, Clone, Copy)]
pub struct CellEdgeFunction {
    ia: usize,
    ib: usize,
    length: f64,
    grad_a: Vector3<f64>,
    grad_b: Vector3<f64>,
}

impl CellEdgeFunction {
    /// `None` when the edge is not an edge of the cell.
    pub fn new(mesh: &MeshTopology, edge: usize, cell: usize, bary: &Barycentric) -> Option<Self> {
        let [a, b] = mesh.edges[edge];
        let s = mesh.sorted_cell(cell);
        let ia = s.iter().position(|&v| v == a)?;
        let ib = s.iter().position(|&v| v == b)?;
        Some(Self {
            ia,
            ib,
            length: mesh.edge_length(edge),
            grad_a: bary.grads[ia],
            grad_b: bary.grads[ib],
        })
    }

    /// Value at a reference point.
    #[inline]
    pub fn value(&self, x: &[f64; 3]) -> [f64; 3] {
        let l = Barycentric::values(x);
        (self.length * (l[self.ia] * self.grad_b - l[self.ib] * self.grad_a)).into()
    }

    /// The curl, constant on the cell.
    #[inline]
    pub fn curl(&self) -> [f64; 3] {
        (2.0 * self.length * self.grad_a.cross(&self.grad_b)).into()
    }
}

/// The edge function over its whole patch, with sup norms.
#[derive(Debug, Clone)]
pub struct EdgeFunction {
    pub edge: usize,
    pub cells: Vec<usize>,
    pub pieces: Vec<CellEdgeFunction>,
    pub sup_value: f64,
    pub sup_curl: f64,
}

/// The 20 points of the cubic barycentric lattice, vertices included.
pub fn lattice_points() -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(20);
    for i in 0..=3usize {
        for j in 0..=3 - i {
            for k in 0..=3 - i - j {
                out.push([i as f64 / 3.0, j as f64 / 3.0, k as f64 / 3.0]);
            }
        }
    }
    out
}

pub fn edge_function(mesh: &MeshTopology, edge: usize) -> EdgeFunction {
    let cells = mesh.edge_tets[edge].clone();
    let lattice = lattice_points();
    let mut pieces = Vec::with_capacity(cells.len());
    let (mut sup_value, mut sup_curl) = (0.0f64, 0.0f64);
    for &k in &cells {
        let bary = Barycentric::new(&CellMap::new(mesh, k));
        let piece = CellEdgeFunction::new(mesh, edge, k, &bary).expect("patch cell contains the edge");
        for x in &lattice {
            sup_value = sup_value.max(Vector3::from(piece.value(x)).norm());
        }
        sup_curl = sup_curl.max(Vector3::from(piece.curl()).norm());
        pieces.push(piece);
    }
    EdgeFunction {
        edge,
        cells,
        pieces,
        sup_value,
        sup_curl,
    }
}
