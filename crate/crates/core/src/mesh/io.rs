//! VTK unstructured-grid exchange. Tets and labeled boundary triangles share
//! one grid; the integer cell array `boundary_label` is `-1` on tets and the
//! face-label code on triangles.

use std::path::Path;

use vtkio::model::{
    Attribute, Attributes, ByteOrder, CellType, Cells, DataSet, ElementType, IOBuffer, UnstructuredGridPiece, Version,
    VertexNumbers, Vtk,
};

use super::{BoundaryTri, FaceLabel, Point, TetMesh};
use crate::error::{Error, Result};

pub const LABEL_ARRAY: &str = "boundary_label";

/// A per-vertex array carried alongside the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct PointField {
    pub name: String,
    /// 1 for scalars, 3 for vectors.
    pub components: usize,
    pub values: Vec<f64>,
}

impl PointField {
    pub fn scalars(name: impl Into<String>, values: Vec<f64>) -> Self {
        PointField {
            name: name.into(),
            components: 1,
            values,
        }
    }

    pub fn vectors(name: impl Into<String>, values: &[Point]) -> Self {
        PointField {
            name: name.into(),
            components: 3,
            values: values.iter().flat_map(|v| [v.x, v.y, v.z]).collect(),
        }
    }

    pub fn as_vectors(&self) -> Option<Vec<Point>> {
        (self.components == 3).then(|| {
            self.values
                .chunks_exact(3)
                .map(|c| Point::new(c[0], c[1], c[2]))
                .collect()
        })
    }
}

pub fn save_mesh(path: &Path, mesh: &TetMesh) -> Result<()> {
    save_mesh_with_point_data(path, mesh, "tetrahedral mesh", &[])
}

/// Writes legacy ASCII VTK (or XML when the extension is `.vtu`).
pub fn save_mesh_with_point_data(path: &Path, mesh: &TetMesh, title: &str, fields: &[PointField]) -> Result<()> {
    let nv = mesh.num_vertices();
    for f in fields {
        if f.values.len() != nv * f.components || !(f.components == 1 || f.components == 3) {
            return Err(Error::InvalidInput(format!(
                "point field '{}' does not match the mesh vertex count",
                f.name
            )));
        }
    }
    let points: Vec<f64> = mesh.vertices.iter().flat_map(|p| [p.x, p.y, p.z]).collect();
    let ncells = mesh.tets.len() + mesh.boundary.len();
    let mut conn = Vec::with_capacity(mesh.tets.len() * 5 + mesh.boundary.len() * 4);
    let mut types = Vec::with_capacity(ncells);
    let mut labels = Vec::with_capacity(ncells);
    for tet in &mesh.tets {
        conn.push(4);
        conn.extend(tet.iter().map(|&i| i as u32));
        types.push(CellType::Tetra);
        labels.push(-1i32);
    }
    for tri in &mesh.boundary {
        conn.push(3);
        conn.extend(tri.vertices.iter().map(|&i| i as u32));
        types.push(CellType::Triangle);
        labels.push(tri.label.code());
    }
    let point_attrs = fields
        .iter()
        .map(|f| {
            let attr = if f.components == 3 {
                Attribute::vectors(f.name.clone())
            } else {
                Attribute::scalars(f.name.clone(), 1)
            };
            attr.with_data(f.values.clone())
        })
        .collect();
    let piece = UnstructuredGridPiece {
        points: IOBuffer::F64(points),
        cells: Cells {
            cell_verts: VertexNumbers::Legacy {
                num_cells: ncells as u32,
                vertices: conn,
            },
            types,
        },
        data: Attributes {
            point: point_attrs,
            cell: vec![Attribute::scalars(LABEL_ARRAY, 1).with_data(labels)],
        },
    };
    let vtk = Vtk {
        version: Version::new((4, 2)),
        title: title.to_string(),
        byte_order: ByteOrder::BigEndian,
        data: DataSet::inline(piece),
        file_path: None,
    };
    let result = if path.extension().is_some_and(|e| e == "vtu") {
        vtk.export(path)
    } else {
        vtk.export_ascii(path)
    };
    result.map_err(|e| Error::parse(path, e))
}

pub fn load_mesh(path: &Path) -> Result<TetMesh> {
    Ok(load_grid(path)?.0)
}

/// Reads a mesh together with its title line and point arrays.
pub fn load_grid(path: &Path) -> Result<(TetMesh, String, Vec<PointField>)> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    let vtk = Vtk::import(path).map_err(|e| Error::parse(path, e))?;
    let title = vtk.title.clone();
    let piece: UnstructuredGridPiece = match vtk.data {
        DataSet::UnstructuredGrid { pieces, .. } => pieces
            .into_iter()
            .next()
            .ok_or_else(|| Error::parse(path, "no grid piece"))?
            .into_loaded_piece_data(None)
            .map_err(|e| Error::parse(path, e))?,
        _ => return Err(Error::parse(path, "not an unstructured grid")),
    };
    let coords: Vec<f64> = piece
        .points
        .cast_into()
        .ok_or_else(|| Error::parse(path, "unsupported point type"))?;
    if coords.len() % 3 != 0 {
        return Err(Error::parse(path, "point array length is not a multiple of 3"));
    }
    let vertices: Vec<Point> = coords.chunks_exact(3).map(|c| Point::new(c[0], c[1], c[2])).collect();

    let ncells = piece.cells.types.len();
    let cells: Vec<Vec<usize>> = match piece.cells.cell_verts {
        VertexNumbers::Legacy { vertices, .. } => {
            let mut out = Vec::with_capacity(ncells);
            let mut i = 0;
            while i < vertices.len() {
                let n = vertices[i] as usize;
                let end = i + 1 + n;
                if end > vertices.len() {
                    return Err(Error::parse(path, "truncated cell list"));
                }
                out.push(vertices[i + 1..end].iter().map(|&v| v as usize).collect());
                i = end;
            }
            out
        }
        VertexNumbers::XML { connectivity, offsets } => {
            let mut start = 0usize;
            let mut out = Vec::with_capacity(offsets.len());
            for &end in &offsets {
                let end = end as usize;
                if end > connectivity.len() || end < start {
                    return Err(Error::parse(path, "bad cell offsets"));
                }
                out.push(connectivity[start..end].iter().map(|&v| v as usize).collect());
                start = end;
            }
            out
        }
    };
    if cells.len() != ncells {
        return Err(Error::parse(path, "cell count does not match cell types"));
    }

    let labels: Option<Vec<i64>> = piece.data.cell.iter().find_map(|a| match a {
        Attribute::DataArray(d) if d.name == LABEL_ARRAY => d.data.clone().cast_into(),
        _ => None,
    });
    let mut tets = Vec::new();
    let mut boundary = Vec::new();
    for (c, (cell, ty)) in cells.iter().zip(&piece.cells.types).enumerate() {
        match ty {
            CellType::Tetra if cell.len() == 4 => tets.push([cell[0], cell[1], cell[2], cell[3]]),
            CellType::Triangle if cell.len() == 3 => {
                let code = labels
                    .as_ref()
                    .and_then(|l| l.get(c).copied())
                    .ok_or_else(|| Error::parse(path, "boundary triangles need a boundary_label array"))?;
                let label = FaceLabel::from_code(code)
                    .ok_or_else(|| Error::parse(path, format!("invalid boundary label {code}")))?;
                boundary.push(BoundaryTri {
                    vertices: [cell[0], cell[1], cell[2]],
                    label,
                });
            }
            other => {
                return Err(Error::Mesh(format!(
                    "unsupported cell {c} of type {other:?}; only linear tets and triangles are accepted"
                )))
            }
        }
    }

    let nv = vertices.len();
    let mut fields = Vec::new();
    for attr in piece.data.point {
        if let Attribute::DataArray(d) = attr {
            let components = match d.elem {
                ElementType::Vectors | ElementType::Normals => 3,
                ElementType::Scalars { num_comp, .. } => num_comp as usize,
                ElementType::Generic(n) => n as usize,
                _ => continue,
            };
            let values: Vec<f64> = match d.data.cast_into() {
                Some(v) => v,
                None => continue,
            };
            if values.len() != nv * components {
                return Err(Error::parse(path, format!("point array '{}' has wrong length", d.name)));
            }
            fields.push(PointField {
                name: d.name,
                components,
                values,
            });
        }
    }
    let (mesh, repairs) = TetMesh::validated(vertices, tets, boundary)?;
    if repairs != Default::default() {
        log::warn!("{}: applied mesh repairs {:?}", path.display(), repairs);
    }
    Ok((mesh, title, fields))
}
