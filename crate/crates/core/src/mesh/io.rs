//! Plain-text mesh format.
//!
//! ```text
//! dim nv nc nbf
//! x y [z]                 # nv vertex lines
//! v0 v1 v2 [v3] region    # nc cell lines
//! f0 f1 [f2]              # nbf boundary-face lines
//! ```
//!
//! Indices are 0-based. Coordinates are written in shortest round-trip form,
//! so write-then-read reproduces the mesh bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::Mesh;
use crate::{Error, Result};

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_to(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    read_from(BufReader::new(File::open(path)?))
}

pub(crate) fn write_to<W: Write>(mesh: &Mesh, w: &mut W) -> Result<()> {
    let d = mesh.dim();
    writeln!(
        w,
        "{} {} {} {}",
        d,
        mesh.num_vertices(),
        mesh.num_cells(),
        mesh.num_boundary_faces()
    )?;
    for v in mesh.vertices() {
        let coords: Vec<String> = v[..d].iter().map(|x| format!("{x:?}")).collect();
        writeln!(w, "{}", coords.join(" "))?;
    }
    for c in 0..mesh.num_cells() {
        let ids: Vec<String> = mesh.cell(c).iter().map(usize::to_string).collect();
        writeln!(w, "{} {}", ids.join(" "), mesh.region(c))?;
    }
    for f in mesh.boundary_faces() {
        let ids: Vec<String> = f.iter().map(usize::to_string).collect();
        writeln!(w, "{}", ids.join(" "))?;
    }
    Ok(())
}

pub(crate) fn read_from<R: BufRead>(r: R) -> Result<Mesh> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));

    let mut next = |section: &str, have: usize, want: usize| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(s))) => Ok((n, s)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::Parse {
                line: 0,
                message: format!(
                    "unexpected end of file in {section} section ({have} of {want} lines read)"
                ),
            }),
        }
    };

    let (n, header) = next("header", 0, 1)?;
    let h = fields::<usize>(&header, n)?;
    if h.len() != 4 {
        return Err(Error::Parse {
            line: n,
            message: "header must be `dim nv nc nbf`".into(),
        });
    }
    let (dim, nv, nc, nbf) = (h[0], h[1], h[2], h[3]);
    if dim != 2 && dim != 3 {
        return Err(Error::Parse {
            line: n,
            message: format!("dimension {dim} is not 2 or 3"),
        });
    }

    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let (n, s) = next("vertices", i, nv)?;
        let x = fields::<f64>(&s, n)?;
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.len(),
            });
        }
        let mut p = [0.0; 3];
        p[..dim].copy_from_slice(&x);
        vertices.push(p);
    }
    let mut cells = Vec::with_capacity(nc * (dim + 1));
    let mut regions = Vec::with_capacity(nc);
    for i in 0..nc {
        let (n, s) = next("cells", i, nc)?;
        let x = fields::<usize>(&s, n)?;
        if x.len() != dim + 2 {
            return Err(Error::Parse {
                line: n,
                message: format!("cell line needs {} vertex indices and a region id", dim + 1),
            });
        }
        cells.extend_from_slice(&x[..=dim]);
        regions.push(u32::try_from(x[dim + 1]).map_err(|_| Error::Parse {
            line: n,
            message: "region id out of range".into(),
        })?);
    }
    let mut faces = Vec::with_capacity(nbf * dim);
    for i in 0..nbf {
        let (n, s) = next("boundary faces", i, nbf)?;
        let x = fields::<usize>(&s, n)?;
        if x.len() != dim {
            return Err(Error::Parse {
                line: n,
                message: format!("boundary face line needs {dim} vertex indices"),
            });
        }
        faces.extend_from_slice(&x);
    }
    Mesh::new(dim, vertices, cells, regions, faces)
}

fn fields<T: std::str::FromStr>(s: &str, line: usize) -> Result<Vec<T>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<T>().map_err(|_| Error::Parse {
                line,
                message: format!("cannot parse `{t}`"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, refine_uniform, DomainKind, DomainSpec};

    #[test]
    fn round_trip_is_exact() {
        let m =
            refine_uniform(&generate_mesh(&DomainSpec::new(DomainKind::Slab), 1).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_to(&m, &mut buf).unwrap();
        let r = read_from(buf.as_slice()).unwrap();
        assert_eq!(r.vertices(), m.vertices());
        assert_eq!(r.regions(), m.regions());
        assert!(r.cells().eq(m.cells()));
        assert!(r.boundary_faces().eq(m.boundary_faces()));
    }

    #[test]
    fn truncated_file_names_the_missing_section() {
        let m = generate_mesh(&DomainSpec::new(DomainKind::UnitSquare2D), 1).unwrap();
        let mut buf = Vec::new();
        write_to(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        match read_from(cut.as_bytes()) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("cells"), "{message}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unit_simplex_file() {
        let text = "3 4 1 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3 0\n0 1 2\n0 1 3\n0 2 3\n1 2 3\n";
        let m = read_from(text.as_bytes()).unwrap();
        assert!((m.volume(0) - 1.0 / 6.0).abs() < 1e-15);
        m.check_invariants().unwrap();
    }

    #[test]
    fn bad_token_reports_line_and_dimension_mismatch_is_typed() {
        let text = "2 3 1 3\n0 0\n1 x\n0 1\n0 1 2 0\n0 1\n1 2\n0 2\n";
        assert!(matches!(
            read_from(text.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let text = "2 3 1 3\n0 0 0\n1 0\n0 1\n0 1 2 0\n0 1\n1 2\n0 2\n";
        assert!(matches!(
            read_from(text.as_bytes()),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }
}
