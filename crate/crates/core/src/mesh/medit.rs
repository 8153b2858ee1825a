//! ASCII MEDIT (`.mesh`) reader and writer for tetrahedral meshes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::topology::{build_topology, orient_tets, sorted3, BoundaryLabel, MeshTopology};
use crate::error::MeshError;

/// How triangle reference integers translate into boundary labels.
#[derive(Debug, Clone, Default)]
pub enum RefLabels {
    /// Every reference is Dirichlet.
    #[default]
    AllDirichlet,
    /// Listed references are Dirichlet, all others Neumann.
    DirichletSet(Vec<i64>),
    /// Explicit table; references missing from it are an error.
    Table(HashMap<i64, BoundaryLabel>),
}

impl RefLabels {
    fn label(&self, r: i64) -> Result<BoundaryLabel, MeshError> {
        match self {
            RefLabels::AllDirichlet => Ok(BoundaryLabel::Dirichlet),
            RefLabels::DirichletSet(set) if set.contains(&r) => Ok(BoundaryLabel::Dirichlet),
            RefLabels::DirichletSet(_) => Ok(BoundaryLabel::Neumann),
            RefLabels::Table(t) => t.get(&r).copied().ok_or(MeshError::UnmappedReference(r)),
        }
    }
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut items = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            items.extend(line.split_whitespace().map(|t| (i + 1, t)));
        }
        Self { items, pos: 0 }
    }

    fn line(&self) -> usize {
        self.items.get(self.pos).or(self.items.last()).map_or(0, |t| t.0)
    }

    fn next(&mut self) -> Option<&'a str> {
        let t = self.items.get(self.pos).map(|t| t.1);
        self.pos += 1;
        t
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, MeshError> {
        let line = self.line();
        let tok = self.next().ok_or_else(|| MeshError::Parse {
            line,
            message: format!("unexpected end of file, expected {what}"),
        })?;
        tok.parse().map_err(|_| MeshError::Parse {
            line,
            message: format!("expected {what}, found `{tok}`"),
        })
    }
}

/// Parses MEDIT text. Indices in the file are 1-based.
pub fn parse_medit(text: &str, refs: &RefLabels) -> Result<MeshTopology, MeshError> {
    let mut tok = Tokens::new(text);
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut tets: Vec<[usize; 4]> = Vec::new();
    let mut labels: HashMap<[usize; 3], BoundaryLabel> = HashMap::new();
    let mut triangles: Vec<([usize; 3], i64, usize)> = Vec::new();
    let mut seen_end = false;
    while let Some(kw) = tok.next() {
        let line = tok.items[tok.pos - 1].0;
        match kw {
            "MeshVersionFormatted" => {
                let _: i64 = tok.parse("format version")?;
            }
            "Dimension" => {
                let d: usize = tok.parse("dimension")?;
                if d != 3 {
                    return Err(MeshError::Parse {
                        line,
                        message: format!("only dimension 3 is supported, found {d}"),
                    });
                }
            }
            "Vertices" => {
                let n: usize = tok.parse("vertex count")?;
                for _ in 0..n {
                    let x = [tok.parse("coordinate")?, tok.parse("coordinate")?, tok.parse("coordinate")?];
                    let _: i64 = tok.parse("vertex reference")?;
                    vertices.push(x);
                }
            }
            "Tetrahedra" => {
                let n: usize = tok.parse("tetrahedron count")?;
                for _ in 0..n {
                    let mut t = [0usize; 4];
                    for v in &mut t {
                        let l = tok.line();
                        let i: usize = tok.parse("vertex index")?;
                        if i == 0 {
                            return Err(MeshError::Parse {
                                line: l,
                                message: "vertex indices are 1-based".into(),
                            });
                        }
                        *v = i - 1;
                    }
                    let _: i64 = tok.parse("tetrahedron reference")?;
                    tets.push(t);
                }
            }
            "Triangles" => {
                let n: usize = tok.parse("triangle count")?;
                for _ in 0..n {
                    let l = tok.line();
                    let mut f = [0usize; 3];
                    for v in &mut f {
                        let i: usize = tok.parse("vertex index")?;
                        *v = i.checked_sub(1).ok_or(MeshError::Parse {
                            line: l,
                            message: "vertex indices are 1-based".into(),
                        })?;
                    }
                    let r: i64 = tok.parse("triangle reference")?;
                    triangles.push((sorted3(f), r, l));
                }
            }
            "End" => {
                seen_end = true;
                break;
            }
            other => {
                return Err(MeshError::Parse {
                    line,
                    message: format!("unsupported keyword `{other}`"),
                })
            }
        }
    }
    if !seen_end {
        return Err(MeshError::Parse {
            line: tok.line(),
            message: "missing `End`".into(),
        });
    }
    for (f, r, _) in triangles {
        labels.insert(f, refs.label(r)?);
    }
    for (k, t) in tets.iter().enumerate() {
        if let Some(&v) = t.iter().find(|&&v| v >= vertices.len()) {
            return Err(MeshError::BadVertex {
                cell: k,
                vertex: v,
                count: vertices.len(),
            });
        }
    }
    orient_tets(&vertices, &mut tets);
    build_topology(vertices, tets, &labels)
}

pub fn read_medit(path: impl AsRef<Path>, refs: &RefLabels) -> Result<MeshTopology, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_medit(&text, refs)
}

/// Serialises a mesh; Dirichlet faces get reference 1 and Neumann faces reference 2.
pub fn format_medit(mesh: &MeshTopology) -> String {
    let mut s = String::new();
    s.push_str("MeshVersionFormatted 2\n\nDimension 3\n\n");
    let _ = writeln!(s, "Vertices\n{}", mesh.num_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:?} {:?} {:?} 0", v[0], v[1], v[2]);
    }
    let _ = writeln!(s, "\nTetrahedra\n{}", mesh.num_cells());
    for t in &mesh.tets {
        let _ = writeln!(s, "{} {} {} {} 0", t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1);
    }
    let _ = writeln!(s, "\nTriangles\n{}", mesh.boundary_faces.len());
    for (&f, &l) in &mesh.boundary_faces {
        let [a, b, c] = mesh.faces[f];
        let r = match l {
            BoundaryLabel::Dirichlet => 1,
            BoundaryLabel::Neumann => 2,
        };
        let _ = writeln!(s, "{} {} {} {r}", a + 1, b + 1, c + 1);
    }
    s.push_str("\nEnd\n");
    s
}

pub fn write_medit(mesh: &MeshTopology, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, format_medit(mesh))?;
    Ok(())
}

/// Reference table matching [`format_medit`].
pub fn default_write_refs() -> RefLabels {
    RefLabels::Table(HashMap::from([(1, BoundaryLabel::Dirichlet), (2, BoundaryLabel::Neumann)]))
}
