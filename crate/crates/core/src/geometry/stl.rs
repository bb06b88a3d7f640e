use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use super::{topology, TriangleMesh, DEGENERATE_AREA};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct StlLoadReport {
    pub binary: bool,
    pub facets: usize,
    pub raw_vertices: usize,
    pub welded_vertices: usize,
    pub dropped_degenerate: usize,
    /// Triangles whose winding was reversed to make neighbours agree.
    pub rewound: usize,
}

/// Load an ASCII or binary STL, weld coincident vertices and make the winding
/// consistent across every interior edge.
pub fn load_stl(path: impl AsRef<Path>, weld_tolerance: f64) -> Result<TriangleMesh> {
    load_stl_with_report(path, weld_tolerance).map(|(m, _)| m)
}

pub fn load_stl_with_report(
    path: impl AsRef<Path>,
    weld_tolerance: f64,
) -> Result<(TriangleMesh, StlLoadReport)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (facets, binary) = parse_stl(&bytes)?;
    let mut report = StlLoadReport {
        binary,
        facets: facets.len(),
        raw_vertices: facets.len() * 3,
        ..Default::default()
    };

    let raw: Vec<Vec3> = facets.iter().flatten().copied().collect();
    let (vertices, index) = weld(&raw, weld_tolerance);
    report.welded_vertices = vertices.len();

    let mut triangles = Vec::with_capacity(facets.len());
    for f in 0..facets.len() {
        let tri = [index[3 * f], index[3 * f + 1], index[3 * f + 2]];
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            report.dropped_degenerate += 1;
            continue;
        }
        let area = 0.5
            * (vertices[tri[1]] - vertices[tri[0]])
                .cross(&(vertices[tri[2]] - vertices[tri[0]]))
                .norm();
        if area <= DEGENERATE_AREA {
            report.dropped_degenerate += 1;
            continue;
        }
        triangles.push(tri);
    }
    if report.dropped_degenerate > 0 {
        log::warn!(
            "{}: dropped {} degenerate facet(s)",
            path.display(),
            report.dropped_degenerate
        );
    }
    let (vertices, triangles) = super::compact(&vertices, &triangles);
    let mesh = TriangleMesh::new(vertices, triangles, path.display().to_string())?;
    let (mesh, rewound) = topology::orient_consistent_counted(&mesh)?;
    report.rewound = rewound;
    Ok((mesh, report))
}

fn parse_stl(bytes: &[u8]) -> Result<(Vec<[Vec3; 3]>, bool)> {
    if bytes.len() >= 84 {
        let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
        if 84 + 50 * count == bytes.len() {
            return Ok((parse_binary(bytes, count), true));
        }
    }
    let head = bytes.iter().skip_while(|b| b.is_ascii_whitespace()).take(5);
    if head.eq(b"solid".iter()) {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| Error::MalformedStl("ASCII STL is not valid UTF-8".into()))?;
        return parse_ascii(text).map(|f| (f, false));
    }
    if bytes.len() < 84 {
        return Err(Error::MalformedStl(format!(
            "file too short ({} bytes) for binary STL",
            bytes.len()
        )));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    Err(Error::MalformedStl(format!(
        "binary header declares {count} facets ({} bytes) but file has {} bytes",
        84 + 50 * count,
        bytes.len()
    )))
}

fn parse_binary(bytes: &[u8], count: usize) -> Vec<[Vec3; 3]> {
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64;
    (0..count)
        .map(|i| {
            let base = 84 + 50 * i + 12;
            let v = |k: usize| {
                let o = base + 12 * k;
                Vec3::new(f32_at(o), f32_at(o + 4), f32_at(o + 8))
            };
            [v(0), v(1), v(2)]
        })
        .collect()
}

fn parse_ascii(text: &str) -> Result<Vec<[Vec3; 3]>> {
    let mut tokens = text.split_ascii_whitespace().peekable();
    let mut facets = Vec::new();
    let expect = |tok: Option<&str>, want: &str| -> Result<()> {
        match tok {
            Some(t) if t.eq_ignore_ascii_case(want) => Ok(()),
            Some(t) => Err(Error::MalformedStl(format!(
                "expected '{want}', found '{t}'"
            ))),
            None => Err(Error::MalformedStl(format!(
                "expected '{want}', found end of file"
            ))),
        }
    };
    let number = |tok: Option<&str>| -> Result<f64> {
        let t = tok.ok_or_else(|| Error::MalformedStl("unexpected end of file".into()))?;
        t.parse::<f64>()
            .map_err(|_| Error::MalformedStl(format!("invalid number '{t}'")))
    };

    expect(tokens.next(), "solid")?;
    // optional solid name: skip until the first facet/endsolid keyword
    while let Some(t) = tokens.peek() {
        if t.eq_ignore_ascii_case("facet") || t.eq_ignore_ascii_case("endsolid") {
            break;
        }
        tokens.next();
    }
    loop {
        match tokens.next() {
            Some(t) if t.eq_ignore_ascii_case("endsolid") => break,
            Some(t) if t.eq_ignore_ascii_case("facet") => {
                expect(tokens.next(), "normal")?;
                for _ in 0..3 {
                    number(tokens.next())?;
                }
                expect(tokens.next(), "outer")?;
                expect(tokens.next(), "loop")?;
                let mut tri = [Vec3::zeros(); 3];
                for v in tri.iter_mut() {
                    expect(tokens.next(), "vertex")?;
                    *v = Vec3::new(
                        number(tokens.next())?,
                        number(tokens.next())?,
                        number(tokens.next())?,
                    );
                }
                expect(tokens.next(), "endloop")?;
                expect(tokens.next(), "endfacet")?;
                facets.push(tri);
            }
            Some(t) => return Err(Error::MalformedStl(format!("unexpected token '{t}'"))),
            None => return Err(Error::MalformedStl("missing 'endsolid'".into())),
        }
    }
    Ok(facets)
}

/// Merge points closer than `tol`. First occurrence wins; returns the unique
/// points and, for every input point, its index among them.
pub(crate) fn weld(points: &[Vec3], tol: f64) -> (Vec<Vec3>, Vec<usize>) {
    let mut unique: Vec<Vec3> = Vec::new();
    let mut index = Vec::with_capacity(points.len());
    if tol <= 0.0 {
        let mut seen: HashMap<[u64; 3], usize> = HashMap::new();
        for p in points {
            let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
            let id = *seen.entry(key).or_insert_with(|| {
                unique.push(*p);
                unique.len() - 1
            });
            index.push(id);
        }
        return (unique, index);
    }
    let cell = |p: &Vec3| {
        [
            (p.x / tol).floor() as i64,
            (p.y / tol).floor() as i64,
            (p.z / tol).floor() as i64,
        ]
    };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for p in points {
        let c = cell(p);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        for &id in ids {
                            if (unique[id] - p).norm() <= tol {
                                found = Some(id);
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        let id = found.unwrap_or_else(|| {
            unique.push(*p);
            grid.entry(c).or_default().push(unique.len() - 1);
            unique.len() - 1
        });
        index.push(id);
    }
    (unique, index)
}

/// Write a binary STL (the default output format).
pub fn save_stl(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(84 + 50 * mesh.triangle_count());
    let mut header = [0u8; 80];
    let label = format!("binary STL: {}", mesh.provenance());
    let n = label.len().min(80);
    header[..n].copy_from_slice(&label.as_bytes()[..n]);
    buf.extend_from_slice(&header);
    buf.extend_from_slice(&(mesh.triangle_count() as u32).to_le_bytes());
    for t in 0..mesh.triangle_count() {
        let n = mesh.face_normal(t);
        for c in n.iter() {
            buf.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        for v in mesh.corners(t) {
            for c in v.iter() {
                buf.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        buf.extend_from_slice(&0u16.to_le_bytes());
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn save_stl_ascii(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut s = String::new();
    s.push_str("solid wallten\n");
    for t in 0..mesh.triangle_count() {
        let n = mesh.face_normal(t);
        let _ = writeln!(s, "  facet normal {:e} {:e} {:e}", n.x, n.y, n.z);
        s.push_str("    outer loop\n");
        for v in mesh.corners(t) {
            let _ = writeln!(s, "      vertex {:e} {:e} {:e}", v.x, v.y, v.z);
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    s.push_str("endsolid wallten\n");
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
}
