//! The `pfield v1` CSV format.
//!
//! ```text
//! # pfield v1 nr=<int> ntheta=<int> components=<1|2|4> name=<token>
//! <R>,<theta>,<v1>[,<v2>[,<v3>,<v4>]]
//! ...
//! ```
//!
//! One row per node, R-major then θ, every float printed with 17 significant
//! digits so that a write/read round trip reproduces the values bit for bit.
//! Matrix components are written in the order `m11, m12, m21, m22`.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{MatrixField, PolarGrid, ScalarField, VectorField};
use crate::mat2::Mat2;

#[derive(Debug, Clone, PartialEq)]
pub enum AnyField {
    Scalar(ScalarField),
    Vector(VectorField),
    Matrix(MatrixField),
}

impl AnyField {
    pub fn grid(&self) -> &PolarGrid {
        match self {
            AnyField::Scalar(f) => f.grid(),
            AnyField::Vector(f) => f.grid(),
            AnyField::Matrix(f) => f.grid(),
        }
    }

    pub fn components(&self) -> usize {
        match self {
            AnyField::Scalar(_) => 1,
            AnyField::Vector(_) => 2,
            AnyField::Matrix(_) => 4,
        }
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        match self {
            AnyField::Scalar(f) => Ok(f),
            other => Err(Error::InvalidArgument(format!(
                "expected a scalar field, found {} components",
                other.components()
            ))),
        }
    }

    pub fn into_vector(self) -> Result<VectorField> {
        match self {
            AnyField::Vector(f) => Ok(f),
            other => Err(Error::InvalidArgument(format!(
                "expected a vector field, found {} components",
                other.components()
            ))),
        }
    }

    fn node_values(&self, j: usize) -> Vec<f64> {
        match self {
            AnyField::Scalar(f) => vec![f.values()[j]],
            AnyField::Vector(f) => vec![f.c1()[j], f.c2()[j]],
            AnyField::Matrix(f) => f.values()[j].entries().to_vec(),
        }
    }
}

impl From<ScalarField> for AnyField {
    fn from(f: ScalarField) -> Self {
        AnyField::Scalar(f)
    }
}

impl From<VectorField> for AnyField {
    fn from(f: VectorField) -> Self {
        AnyField::Vector(f)
    }
}

impl From<MatrixField> for AnyField {
    fn from(f: MatrixField) -> Self {
        AnyField::Matrix(f)
    }
}

fn valid_token(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_graphic() && c != ',')
}

pub fn write_field_to<W: Write>(mut w: W, field: &AnyField, name: &str) -> Result<()> {
    if !valid_token(name) {
        return Err(Error::InvalidArgument(format!("field name {name:?} is not a token")));
    }
    let grid = field.grid();
    writeln!(
        w,
        "# pfield v1 nr={} ntheta={} components={} name={}",
        grid.n_r(),
        grid.n_theta(),
        field.components(),
        name
    )?;
    let mut line = String::with_capacity(128);
    for i in 0..grid.n_r() {
        for k in 0..grid.n_theta() {
            line.clear();
            line.push_str(&format!("{:.16e},{:.16e}", grid.radius(i), grid.theta(k)));
            for v in field.node_values(grid.idx(i, k)) {
                line.push_str(&format!(",{v:.16e}"));
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_field(path: &Path, field: &AnyField, name: &str) -> Result<()> {
    let file = fs::File::create(path)?;
    write_field_to(std::io::BufWriter::new(file), field, name)
}

/// Header of a `pfield v1` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldHeader {
    pub n_r: usize,
    pub n_theta: usize,
    pub components: usize,
    pub name: String,
}

fn parse_header(line: &str, path: &Path) -> Result<FieldHeader> {
    let err = |msg: String| Error::Format { path: path.to_path_buf(), line: 1, msg };
    let rest = line
        .strip_prefix("# pfield v1 ")
        .ok_or_else(|| err(format!("expected '# pfield v1' header, found {line:?}")))?;
    let mut n_r = None;
    let mut n_theta = None;
    let mut components = None;
    let mut name = None;
    for tok in rest.split(' ') {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| err(format!("malformed header token {tok:?}")))?;
        let parse_int = |v: &str| v.parse::<usize>().map_err(|_| err(format!("bad integer in {tok:?}")));
        match key {
            "nr" => n_r = Some(parse_int(value)?),
            "ntheta" => n_theta = Some(parse_int(value)?),
            "components" => components = Some(parse_int(value)?),
            "name" if valid_token(value) => name = Some(value.to_string()),
            _ => return Err(err(format!("unexpected header token {tok:?}"))),
        }
    }
    let header = FieldHeader {
        n_r: n_r.ok_or_else(|| err("missing nr".into()))?,
        n_theta: n_theta.ok_or_else(|| err("missing ntheta".into()))?,
        components: components.ok_or_else(|| err("missing components".into()))?,
        name: name.ok_or_else(|| err("missing name".into()))?,
    };
    if ![1, 2, 4].contains(&header.components) {
        return Err(err(format!("components must be 1, 2 or 4, found {}", header.components)));
    }
    Ok(header)
}

pub fn read_field_from<R: BufRead>(reader: R, path: &Path) -> Result<(FieldHeader, AnyField)> {
    let fmt_err = |line: usize, msg: String| Error::Format { path: PathBuf::from(path), line, msg };
    let mut lines = reader.lines();
    let header_line = lines.next().ok_or_else(|| fmt_err(1, "empty file".into()))??;
    let header = parse_header(&header_line, path)?;
    let grid = PolarGrid::new(header.n_r, header.n_theta)
        .map_err(|e| fmt_err(1, e.to_string()))?;
    let nc = header.components;
    let n = grid.len();
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(n); nc];
    let mut count = 0usize;
    for (lineno, line) in lines.enumerate() {
        let lineno = lineno + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        if count == n {
            return Err(fmt_err(lineno, format!("more than {n} data rows")));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + nc {
            return Err(fmt_err(
                lineno,
                format!("expected {} columns, found {}", 2 + nc, fields.len()),
            ));
        }
        let mut nums = [0.0f64; 6];
        for (slot, f) in nums.iter_mut().zip(&fields) {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| fmt_err(lineno, format!("cannot parse {f:?}")))?;
            if !v.is_finite() {
                return Err(fmt_err(lineno, format!("non-finite value {f:?}")));
            }
            *slot = v;
        }
        let (i, k) = grid.node(count);
        if (nums[0] - grid.radius(i)).abs() > 1e-12 || (nums[1] - grid.theta(k)).abs() > 1e-12 {
            return Err(fmt_err(
                lineno,
                format!("node ({}, {}) does not match grid node ({i}, {k})", nums[0], nums[1]),
            ));
        }
        for c in 0..nc {
            cols[c].push(nums[2 + c]);
        }
        count += 1;
    }
    if count != n {
        return Err(fmt_err(count + 1, format!("expected {n} data rows, found {count}")));
    }
    let field = match nc {
        1 => AnyField::Scalar(ScalarField::new(grid, cols.pop().unwrap())?),
        2 => {
            let c2 = cols.pop().unwrap();
            let c1 = cols.pop().unwrap();
            AnyField::Vector(VectorField::new(grid, c1, c2)?)
        }
        _ => {
            let values = (0..n)
                .map(|j| Mat2::new(cols[0][j], cols[1][j], cols[2][j], cols[3][j]))
                .collect();
            AnyField::Matrix(MatrixField::new(grid, values)?)
        }
    };
    Ok((header, field))
}

pub fn read_field(path: &Path) -> Result<(FieldHeader, AnyField)> {
    let file = fs::File::open(path)?;
    read_field_from(BufReader::new(file), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(field: AnyField) -> AnyField {
        let mut buf = Vec::new();
        write_field_to(&mut buf, &field, "f").unwrap();
        read_field_from(buf.as_slice(), Path::new("mem")).unwrap().1
    }

    #[test]
    fn identity_map_roundtrip() {
        let g = PolarGrid::new(8, 16).unwrap();
        let id = g.sample_vector(|p| p.cartesian()).unwrap();
        assert_eq!(roundtrip(id.clone().into()), AnyField::Vector(id));
    }

    #[test]
    fn matrix_roundtrip() {
        let g = PolarGrid::new(8, 8).unwrap();
        let m = g
            .sample_matrix(|p| Mat2::new(p.r, p.theta.sin(), 1.0 / 3.0, -p.r * p.r))
            .unwrap();
        assert_eq!(roundtrip(m.clone().into()), AnyField::Matrix(m));
    }

    #[test]
    fn header_format_is_exact() {
        let g = PolarGrid::new(8, 8).unwrap();
        let mut buf = Vec::new();
        write_field_to(&mut buf, &ScalarField::constant(&g, 0.1).into(), "nu").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# pfield v1 nr=8 ntheta=8 components=1 name=nu");
        assert_eq!(
            lines.next().unwrap(),
            "6.2500000000000000e-2,0.0000000000000000e0,1.0000000000000001e-1"
        );
        assert_eq!(text.lines().count(), 65);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn rejects_short_rows() {
        let text = "# pfield v1 nr=8 ntheta=8 components=2 name=u\n6.25e-2,0,1\n";
        let err = read_field_from(text.as_bytes(), Path::new("bad")).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err}");
    }

    #[test]
    fn rejects_malformed_header_and_counts() {
        assert!(read_field_from("# pfield v2 nr=8".as_bytes(), Path::new("x")).is_err());
        assert!(read_field_from(
            "# pfield v1 nr=8 ntheta=8 components=3 name=u\n".as_bytes(),
            Path::new("x")
        )
        .is_err());
        let text = "# pfield v1 nr=8 ntheta=8 components=1 name=u\n6.25e-2,0,1\n";
        assert!(read_field_from(text.as_bytes(), Path::new("x")).is_err());
        let text = "# pfield v1 nr=8 ntheta=8 components=1 name=u\n6.25e-2,0,nan\n";
        assert!(read_field_from(text.as_bytes(), Path::new("x")).is_err());
    }

    #[test]
    fn large_scalar_row_count() {
        let g = PolarGrid::new(256, 256).unwrap();
        let f = g.sample_scalar(|p| p.r * p.theta.cos()).unwrap();
        let mut buf = Vec::new();
        write_field_to(&mut buf, &f.clone().into(), "s").unwrap();
        let (h, back) = read_field_from(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(h.n_r * h.n_theta, 65536);
        assert_eq!(back.into_scalar().unwrap(), f);
    }
}
