//! Tabular output in CSV or TOML.

use serde::Serialize;

use crate::args::Format;

/// A table with a fixed header; every row has one cell per column.
#[derive(Debug, Default)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Float(f64),
    Bool(bool),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Text => self.toml(),
        }
    }

    fn csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Text(s) => s.clone(),
                    Cell::Int(i) => i.to_string(),
                    Cell::Float(x) => x.to_string(),
                    Cell::Bool(b) => b.to_string(),
                    Cell::Empty => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    // One `[[row]]` table per row; empty cells are left out.
    fn toml(&self) -> String {
        #[derive(Serialize)]
        struct Doc {
            row: Vec<toml::Table>,
        }
        let row = self
            .rows
            .iter()
            .map(|r| {
                let mut t = toml::Table::new();
                for (name, cell) in self.columns.iter().zip(r) {
                    let v = match cell {
                        Cell::Text(s) => toml::Value::String(s.clone()),
                        Cell::Int(i) => toml::Value::Integer(*i as i64),
                        Cell::Float(x) => toml::Value::Float(*x),
                        Cell::Bool(b) => toml::Value::Boolean(*b),
                        Cell::Empty => continue,
                    };
                    t.insert((*name).to_owned(), v);
                }
                t
            })
            .collect();
        toml::to_string(&Doc { row }).expect("toml tables serialize")
    }
}
