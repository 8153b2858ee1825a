//! Tetrahedral meshes: topology, generation, refinement, patches and MEDIT I/O.

pub mod generate;
pub mod medit;
pub mod patch;
pub mod refine;
pub mod topology;

pub use generate::{extrude, fan_triangulation, fichera_mesh, kuhn_grid, unit_cube_mesh};
pub use medit::{format_medit, parse_medit, read_medit, write_medit, RefLabels};
pub use patch::{edge_patch, EdgePatch};
pub use refine::{refine_bisection, refine_bisection_with_limit, refine_uniform};
pub use topology::{
    build_topology, build_topology_uniform, build_topology_with, geometry_stats, orient_tets, signed_volume,
    BoundaryLabel, CellGeometry, MeshTopology,
};
