//! CSV serialization for fields, designs and level sets.
//!
//! Field layout: a header row, then `index,x1,x2,value` rows in row-major
//! order. Floats print in Rust's shortest round-trip form, so identical
//! runs write identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use targdes::{Design, Field, Grid, LevelSet};

use crate::error::CliError;

pub fn field_to_csv(field: &Field) -> String {
    let grid = field.grid();
    let mut out = String::from("index,x1,x2,value\n");
    for i in grid.indices() {
        let (x1, x2) = grid.coord(i);
        let _ = writeln!(out, "{i},{x1},{x2},{}", field[i]);
    }
    out
}

pub fn read_field_csv(path: &Path, grid: Grid) -> Result<Field, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read field {}: {e}", path.display())))?;
    let mut values = vec![f64::NAN; grid.n_points()];
    let mut seen = vec![false; grid.n_points()];
    let bad_line = |line_no: usize, msg: String| {
        CliError::Config(format!("{}:{}: {msg}", path.display(), line_no))
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "index,x1,x2,value" => {}
        Some((_, header)) => {
            return Err(bad_line(
                1,
                format!("expected header 'index,x1,x2,value', got '{header}'"),
            ))
        }
        None => return Err(bad_line(1, "empty field file".into())),
    }
    for (line_idx, line) in lines {
        let line_no = line_idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(bad_line(
                line_no,
                format!("expected 4 comma-separated columns, got {}", parts.len()),
            ));
        }
        let index: usize = parts[0]
            .trim()
            .parse()
            .map_err(|e| bad_line(line_no, format!("bad index '{}': {e}", parts[0])))?;
        if index >= grid.n_points() {
            return Err(bad_line(
                line_no,
                format!(
                    "index {index} outside the {}x{} grid",
                    grid.n_side(),
                    grid.n_side()
                ),
            ));
        }
        if seen[index] {
            return Err(bad_line(line_no, format!("duplicate index {index}")));
        }
        let x1: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|e| bad_line(line_no, format!("bad x1 '{}': {e}", parts[1])))?;
        let x2: f64 = parts[2]
            .trim()
            .parse()
            .map_err(|e| bad_line(line_no, format!("bad x2 '{}': {e}", parts[2])))?;
        let value: f64 = parts[3]
            .trim()
            .parse()
            .map_err(|e| bad_line(line_no, format!("bad value '{}': {e}", parts[3])))?;
        let (cx1, cx2) = grid.coord(index);
        if (x1 - cx1).abs() > 1e-9 || (x2 - cx2).abs() > 1e-9 {
            return Err(bad_line(
                line_no,
                format!("coordinates ({x1},{x2}) do not match grid point {index} ({cx1},{cx2})"),
            ));
        }
        values[index] = value;
        seen[index] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(CliError::Config(format!(
            "{}: grid index {missing} has no value",
            path.display()
        )));
    }
    Field::from_values(grid, values).map_err(CliError::from_core)
}

pub fn design_to_csv(design: &Design, grid: &Grid) -> String {
    let mut out = String::from("rank,grid_index,x1,x2\n");
    for (rank, &p) in design.points().iter().enumerate() {
        let (x1, x2) = grid.coord(p);
        let _ = writeln!(out, "{rank},{p},{x1},{x2}");
    }
    out
}

pub fn level_set_to_csv(set: &LevelSet, grid: &Grid) -> String {
    let mut out = String::from("grid_index,x1,x2\n");
    for &p in &set.points {
        let (x1, x2) = grid.coord(p);
        let _ = writeln!(out, "{p},{x1},{x2}");
    }
    out
}

/// Missing scores print as NA so downstream plots can drop them; zero
/// would be a lie.
pub fn fmt_optional(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v}"),
        None => "NA".to_string(),
    }
}
