//! Gmsh MSH 2.2 ASCII import and export.
//!
//! Only 4-node tetrahedra (type 4) and 3-node triangles (type 2) are
//! accepted. The first element tag is the physical group: on tetrahedra it
//! becomes the cell region marker, on triangles the face marker.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use super::{Mesh, Vec3};
use crate::error::{Error, Result};

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<Option<String>> {
        loop {
            match self.inner.next() {
                None => return Ok(None),
                Some(l) => {
                    self.line += 1;
                    let l = l?;
                    let t = l.trim();
                    if !t.is_empty() {
                        return Ok(Some(t.to_string()));
                    }
                }
            }
        }
    }

    fn expect_line(&mut self, what: &str) -> Result<String> {
        self.next_line()?
            .ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn expect_exact(&mut self, token: &str) -> Result<()> {
        let l = self.expect_line(token)?;
        if l != token {
            return Err(self.err(format!("expected {token}, found {l:?}")));
        }
        Ok(())
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, lines: &Lines<impl BufRead>, what: &str) -> Result<T> {
    tok.ok_or_else(|| lines.err(format!("missing {what}")))?
        .parse()
        .map_err(|_| lines.err(format!("malformed {what}")))
}

/// Parses an MSH 2.2 ASCII stream.
pub fn read_gmsh_msh(reader: impl BufRead) -> Result<Mesh> {
    let mut lines = Lines {
        inner: reader.lines(),
        line: 0,
    };
    let mut node_ids: HashMap<usize, usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut cells: Vec<[usize; 4]> = Vec::new();
    let mut markers: Vec<i32> = Vec::new();
    let mut tris: Vec<([usize; 3], i32)> = Vec::new();
    let mut saw_format = false;
    let mut saw_nodes = false;

    while let Some(header) = lines.next_line()? {
        match header.as_str() {
            "$MeshFormat" => {
                let l = lines.expect_line("format line")?;
                let mut it = l.split_whitespace();
                let version: String = parse_num(it.next(), &lines, "version")?;
                let file_type: i32 = parse_num(it.next(), &lines, "file type")?;
                if !version.starts_with("2.") {
                    return Err(lines.err(format!("unsupported MSH version {version}")));
                }
                if file_type != 0 {
                    return Err(lines.err("binary MSH files are not supported"));
                }
                lines.expect_exact("$EndMeshFormat")?;
                saw_format = true;
            }
            "$PhysicalNames" => loop {
                if lines.expect_line("$EndPhysicalNames")? == "$EndPhysicalNames" {
                    break;
                }
            },
            "$Nodes" => {
                let l = lines.expect_line("node count")?;
                let n: usize = parse_num(Some(l.as_str()), &lines, "node count")?;
                vertices.reserve(n);
                for _ in 0..n {
                    let l = lines.expect_line("node")?;
                    let mut it = l.split_whitespace();
                    let id: usize = parse_num(it.next(), &lines, "node id")?;
                    let x: f64 = parse_num(it.next(), &lines, "x coordinate")?;
                    let y: f64 = parse_num(it.next(), &lines, "y coordinate")?;
                    let z: f64 = parse_num(it.next(), &lines, "z coordinate")?;
                    if node_ids.insert(id, vertices.len()).is_some() {
                        return Err(lines.err(format!("duplicate node id {id}")));
                    }
                    vertices.push(Vec3::new(x, y, z));
                }
                lines.expect_exact("$EndNodes")?;
                saw_nodes = true;
            }
            "$Elements" => {
                if !saw_nodes {
                    return Err(lines.err("$Elements before $Nodes"));
                }
                let l = lines.expect_line("element count")?;
                let n: usize = parse_num(Some(l.as_str()), &lines, "element count")?;
                for _ in 0..n {
                    let l = lines.expect_line("element")?;
                    let mut it = l.split_whitespace();
                    let _id: usize = parse_num(it.next(), &lines, "element id")?;
                    let etype: u32 = parse_num(it.next(), &lines, "element type")?;
                    let ntags: usize = parse_num(it.next(), &lines, "tag count")?;
                    let mut tags = Vec::with_capacity(ntags);
                    for _ in 0..ntags {
                        tags.push(parse_num::<i32>(it.next(), &lines, "tag")?);
                    }
                    let nnodes = match etype {
                        2 => 3,
                        4 => 4,
                        other => {
                            return Err(lines.err(format!("unsupported element type {other}")))
                        }
                    };
                    let mut nodes = [0usize; 4];
                    for slot in nodes.iter_mut().take(nnodes) {
                        let id: usize = parse_num(it.next(), &lines, "node reference")?;
                        *slot = *node_ids
                            .get(&id)
                            .ok_or_else(|| lines.err(format!("dangling node reference {id}")))?;
                    }
                    if it.next().is_some() {
                        return Err(lines.err("trailing data after element nodes"));
                    }
                    let tag = tags.first().copied().unwrap_or(0);
                    if etype == 4 {
                        cells.push(nodes);
                        markers.push(tag);
                    } else {
                        tris.push(([nodes[0], nodes[1], nodes[2]], tag));
                    }
                }
                lines.expect_exact("$EndElements")?;
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                // Unknown sections ($NodeData, comments, ...) are skipped.
                let end = format!("$End{}", &other[1..]);
                loop {
                    if lines.expect_line(&end)? == end {
                        break;
                    }
                }
            }
            other => return Err(lines.err(format!("malformed section header {other:?}"))),
        }
    }
    if !saw_format {
        return Err(lines.err("missing $MeshFormat section"));
    }
    if cells.is_empty() {
        return Err(lines.err("no tetrahedra in file"));
    }
    let tris: Vec<_> = tris.into_iter().filter(|&(_, t)| t != 0).collect();
    Mesh::new(vertices, cells, markers, &tris)
}

pub fn read_gmsh_msh_file(path: impl AsRef<Path>) -> Result<Mesh> {
    let f = std::fs::File::open(path)?;
    read_gmsh_msh(std::io::BufReader::new(f))
}

/// Writes `mesh` as MSH 2.2 ASCII: all tetrahedra with their region marker
/// and every marked face as a triangle.
pub fn write_gmsh_msh(mesh: &Mesh) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.n_vertices());
    for (i, v) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(s, "{} {:.17e} {:.17e} {:.17e}", i + 1, v.x, v.y, v.z);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let marked: Vec<usize> = (0..mesh.n_faces()).filter(|&f| mesh.face_markers()[f] != 0).collect();
    let _ = writeln!(s, "{}", marked.len() + mesh.n_cells());
    let mut id = 1;
    for &f in &marked {
        let [a, b, c] = mesh.faces()[f];
        let m = mesh.face_markers()[f];
        let _ = writeln!(s, "{id} 2 2 {m} {m} {} {} {}", a + 1, b + 1, c + 1);
        id += 1;
    }
    for (c, cell) in mesh.cells().iter().enumerate() {
        let m = mesh.cell_markers()[c];
        let _ = writeln!(
            s,
            "{id} 4 2 {m} {m} {} {} {} {}",
            cell[0] + 1,
            cell[1] + 1,
            cell[2] + 1,
            cell[3] + 1
        );
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{extract_submesh, generate_box_mesh, BoxBounds};

    const SINGLE_TET: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 2 0 0
3 0 1 0
4 0 0 3
$EndNodes
$Elements
1
1 4 2 7 1 1 2 3 4
$EndElements
";

    #[test]
    fn single_tet() {
        let m = read_gmsh_msh(SINGLE_TET.as_bytes()).unwrap();
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.cell_markers(), &[7]);
        // det = 2 * 1 * 3
        assert!((m.cell_volume(0) - 6.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn prism_is_rejected() {
        let src = SINGLE_TET.replace("1 4 2 7 1 1 2 3 4", "1 6 2 7 1 1 2 3 4 1 2");
        let err = read_gmsh_msh(src.as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 13);
                assert!(msg.contains("unsupported element type"), "{msg}");
            }
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn dangling_node_is_rejected() {
        let src = SINGLE_TET.replace("1 4 2 7 1 1 2 3 4", "1 4 2 7 1 1 2 3 9");
        let err = read_gmsh_msh(src.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 13, .. }), "{err}");
    }

    #[test]
    fn malformed_header_is_rejected() {
        let src = SINGLE_TET.replace("$EndNodes", "$EndNodez");
        assert!(matches!(read_gmsh_msh(src.as_bytes()), Err(Error::Parse { .. })));
        let src = SINGLE_TET.replace("2.2 0 8", "4.1 0 8");
        assert!(matches!(read_gmsh_msh(src.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn two_region_fixture() {
        // Two tets sharing face (2,3,4); tags 1 and 2; the shared face marked 5.
        let src = "$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
2
3 1 \"metal\"
3 2 \"air\"
$EndPhysicalNames
$Nodes
5
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
5 1 1 1
$EndNodes
$Elements
3
1 2 2 5 1 2 3 4
2 4 2 1 1 1 2 3 4
3 4 2 2 1 5 2 3 4
$EndElements
";
        let m = read_gmsh_msh(src.as_bytes()).unwrap();
        assert_eq!(m.cell_markers(), &[1, 2]);
        let f = m.face_index(1, 2, 3).unwrap();
        assert_eq!(m.face_markers()[f], 5);
        let sub = extract_submesh(&m, 1).unwrap();
        assert_eq!(sub.parent_cell(), &[0]);
        assert_eq!(sub.mesh().n_cells(), 1);
    }

    #[test]
    fn write_read_round_trip() {
        let m = generate_box_mesh([2, 1, 1], BoxBounds::unit_cube()).unwrap();
        let text = write_gmsh_msh(&m);
        let r = read_gmsh_msh(text.as_bytes()).unwrap();
        assert_eq!(r.cells(), m.cells());
        assert_eq!(r.vertices(), m.vertices());
        assert_eq!(r.face_markers(), m.face_markers());
    }
}
