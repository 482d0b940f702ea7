//! CSV serialization of sampled fields.
//!
//! Space fields use the header `x,value` followed by one `x_i,f_i` row per
//! node. Space-time fields use the header `t,x_0,...,x_Nx` (the header cells
//! after `t` are the node coordinates) followed by one `t_n,f(x_0,t_n),...`
//! row per time level. Numbers are written in shortest round-trip form, so
//! writing and reading back reproduces every value exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, SpaceField, SpaceTimeField};

/// Coordinates in a file may differ from the grid by at most this much.
pub const COORDINATE_TOLERANCE: f64 = 1e-9;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line() as usize).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Parse {
            line,
            column: 0,
            message: format!("{}: malformed CSV: {other:?}", path.display()),
        },
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_space_field_to<W: Write>(out: W, field: &SpaceField, grid: &Grid) -> Result<()> {
    field.check_grid(grid)?;
    let path = Path::new("<writer>");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "value"])
        .map_err(|e| csv_err(path, e))?;
    for (i, v) in field.values().iter().enumerate() {
        w.write_record([num(grid.x(i)), num(*v)])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_spacetime_field_to<W: Write>(
    out: W,
    field: &SpaceTimeField,
    grid: &Grid,
) -> Result<()> {
    field.check_grid(grid)?;
    let path = Path::new("<writer>");
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(grid.xs().map(num))
        .collect();
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (n, row) in field.rows().enumerate() {
        let record: Vec<String> = std::iter::once(num(grid.t(n)))
            .chain(row.iter().map(|&v| num(v)))
            .collect();
        w.write_record(&record).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_space_field(path: &Path, field: &SpaceField, grid: &Grid) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_space_field_to(file, field, grid).map_err(|e| relabel(e, path))
}

pub fn write_spacetime_field(path: &Path, field: &SpaceTimeField, grid: &Grid) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_spacetime_field_to(file, field, grid).map_err(|e| relabel(e, path))
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        Error::GridMismatch { message, .. } => Error::GridMismatch {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    }
}

struct Rows {
    rows: Vec<(usize, Vec<String>)>,
}

fn read_rows<R: Read>(input: R, path: &Path) -> Result<Rows> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        rows.push((line, rec.iter().map(|c| c.trim().to_string()).collect()));
    }
    Ok(Rows { rows })
}

fn parse_cell(cell: &str, line: usize, column: usize, path: &Path) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        line,
        column,
        message: format!("{}: non-numeric cell '{cell}'", path.display()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            column,
            message: format!("{}: non-finite cell '{cell}'", path.display()),
        });
    }
    Ok(v)
}

fn check_coordinate(found: f64, expected: f64, what: &str, line: usize, path: &Path) -> Result<()> {
    if (found - expected).abs() > COORDINATE_TOLERANCE {
        return Err(Error::GridMismatch {
            path: path.to_path_buf(),
            message: format!("line {line}: {what} = {found} but the grid has {expected}"),
        });
    }
    Ok(())
}

pub fn read_space_field_from<R: Read>(input: R, grid: &Grid, path: &Path) -> Result<SpaceField> {
    let Rows { rows } = read_rows(input, path)?;
    let Some((line, header)) = rows.first() else {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("{}: empty file", path.display()),
        });
    };
    if header.len() != 2 || header[0] != "x" || header[1] != "value" {
        return Err(Error::Parse {
            line: *line,
            column: 1,
            message: format!("{}: expected header 'x,value'", path.display()),
        });
    }
    let data = &rows[1..];
    if data.len() != grid.space_nodes() {
        return Err(Error::Parse {
            line: data.last().map(|r| r.0).unwrap_or(*line),
            column: 1,
            message: format!(
                "{}: expected {} data rows for Nx = {}, found {}",
                path.display(),
                grid.space_nodes(),
                grid.nx(),
                data.len()
            ),
        });
    }
    let mut values = Vec::with_capacity(data.len());
    for (i, (line, cells)) in data.iter().enumerate() {
        if cells.len() != 2 {
            return Err(Error::Parse {
                line: *line,
                column: cells.len().min(2) + 1,
                message: format!(
                    "{}: expected 2 cells, found {}",
                    path.display(),
                    cells.len()
                ),
            });
        }
        let x = parse_cell(&cells[0], *line, 1, path)?;
        check_coordinate(x, grid.x(i), "x", *line, path)?;
        values.push(parse_cell(&cells[1], *line, 2, path)?);
    }
    SpaceField::new(values)
}

pub fn read_spacetime_field_from<R: Read>(
    input: R,
    grid: &Grid,
    path: &Path,
) -> Result<SpaceTimeField> {
    let Rows { rows } = read_rows(input, path)?;
    let width = grid.space_nodes() + 1;
    let Some((hline, header)) = rows.first() else {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("{}: empty file", path.display()),
        });
    };
    if header.first().map(String::as_str) != Some("t") {
        return Err(Error::Parse {
            line: *hline,
            column: 1,
            message: format!("{}: header must start with 't'", path.display()),
        });
    }
    if header.len() != width {
        return Err(Error::GridMismatch {
            path: path.to_path_buf(),
            message: format!(
                "header lists {} x-coordinates, the grid has {}",
                header.len() - 1,
                grid.space_nodes()
            ),
        });
    }
    for (i, cell) in header[1..].iter().enumerate() {
        let x = parse_cell(cell, *hline, i + 2, path)?;
        check_coordinate(x, grid.x(i), "x", *hline, path)?;
    }
    let data = &rows[1..];
    if data.len() != grid.time_levels() {
        return Err(Error::Parse {
            line: data.last().map(|r| r.0).unwrap_or(*hline),
            column: 1,
            message: format!(
                "{}: expected {} data rows for Nt = {}, found {}",
                path.display(),
                grid.time_levels(),
                grid.nt(),
                data.len()
            ),
        });
    }
    let mut values = Vec::with_capacity(grid.time_levels() * grid.space_nodes());
    for (n, (line, cells)) in data.iter().enumerate() {
        if cells.len() != width {
            return Err(Error::Parse {
                line: *line,
                column: cells.len().min(width) + 1,
                message: format!(
                    "{}: expected {width} cells, found {}",
                    path.display(),
                    cells.len()
                ),
            });
        }
        let t = parse_cell(&cells[0], *line, 1, path)?;
        check_coordinate(t, grid.t(n), "t", *line, path)?;
        for (c, cell) in cells[1..].iter().enumerate() {
            values.push(parse_cell(cell, *line, c + 2, path)?);
        }
    }
    SpaceTimeField::from_rows(grid.time_levels(), grid.space_nodes(), values)
}

pub fn read_space_field(path: &Path, grid: &Grid) -> Result<SpaceField> {
    let file = File::open(path).map_err(io_err(path))?;
    read_space_field_from(file, grid, path)
}

pub fn read_spacetime_field(path: &Path, grid: &Grid) -> Result<SpaceTimeField> {
    let file = File::open(path).map_err(io_err(path))?;
    read_spacetime_field_from(file, grid, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mem() -> &'static Path {
        Path::new("<mem>")
    }

    #[test]
    fn zero_field_round_trips() {
        let g = Grid::new(1.0, 1.0, 6, 3).unwrap();
        let mut buf = Vec::new();
        write_space_field_to(&mut buf, &SpaceField::zeros(&g), &g).unwrap();
        let back = read_space_field_from(buf.as_slice(), &g, mem()).unwrap();
        assert_eq!(back, SpaceField::zeros(&g));
    }

    #[test]
    fn spacetime_layout() {
        let g = Grid::new(std::f64::consts::PI, std::f64::consts::PI, 4, 4).unwrap();
        let f = SpaceTimeField::from_fn(&g, |x, t| x.sin() * t.sin());
        let mut buf = Vec::new();
        write_spacetime_field_to(&mut buf, &f, &g).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].starts_with("t,"));
        assert!(lines.iter().all(|l| l.split(',').count() == 6));
        let back = read_spacetime_field_from(buf.as_slice(), &g, mem()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn wrong_row_count_is_a_parse_error() {
        let g = Grid::new(1.0, 1.0, 4, 2).unwrap();
        let text = "x,value\n0,0\n0.25,1\n";
        let err = read_space_field_from(text.as_bytes(), &g, mem()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn non_numeric_cell_reports_location() {
        let g = Grid::new(1.0, 1.0, 4, 2).unwrap();
        let text = "x,value\n0,0\n0.25,abc\n0.5,0\n0.75,0\n1,0\n";
        match read_space_field_from(text.as_bytes(), &g, mem()).unwrap_err() {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, 2);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn coordinate_mismatch_is_detected() {
        let fine = Grid::new(1.0, 1.0, 4, 2).unwrap();
        let other = Grid::new(1.1, 1.0, 4, 2).unwrap();
        let mut buf = Vec::new();
        write_spacetime_field_to(&mut buf, &SpaceTimeField::zeros(&other), &other).unwrap();
        let err = read_spacetime_field_from(buf.as_slice(), &fine, mem()).unwrap_err();
        assert!(matches!(err, Error::GridMismatch { .. }), "{err}");
    }
}
