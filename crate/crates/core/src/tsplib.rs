//! TSPLIB-style coordinate files.
//!
//! Besides the standard `NODE_COORD_SECTION`, two optional extensions carry a
//! full instance: a `SALESMEN : m` header and an `ENDOWMENT_SECTION` with one
//! `<node> <salesman>` line per non-depot node. File nodes are 1-based; file
//! node 1 is the depot.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use mtsp_milp::Scalar;
use thiserror::Error;

use crate::geometry::Point;
use crate::instance::{Allocation, Instance, InstanceError, DEPOT};

#[derive(Debug, Error)]
pub enum TsplibError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("no NODE_COORD_SECTION")]
    NoCoordinates,
    #[error("node {0} is missing")]
    MissingNode(usize),
    #[error("DIMENSION says {declared} but {found} nodes were read")]
    Dimension { declared: usize, found: usize },
    #[error("unsupported EDGE_WEIGHT_TYPE {0}")]
    EdgeWeightType(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone)]
pub struct TsplibFile<T> {
    pub name: Option<String>,
    pub points: Vec<Point<T>>,
    pub salesmen: Option<usize>,
    /// Owner per node (index 0, the depot, is unused).
    pub owners: Option<Vec<usize>>,
}

#[derive(PartialEq)]
enum Section {
    Header,
    Coords,
    Endowment,
    Skip,
}

pub fn parse<T: Scalar>(text: &str) -> Result<TsplibFile<T>, TsplibError> {
    let mut name = None;
    let mut dimension = None;
    let mut salesmen = None;
    let mut coords: Vec<Option<Point<T>>> = Vec::new();
    let mut owner_lines: Vec<(usize, usize)> = Vec::new();
    let mut section = Section::Header;
    let mut saw_coords = false;

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        let syntax = |msg: &str| TsplibError::Syntax {
            line: line_no,
            msg: msg.to_string(),
        };
        match line {
            "NODE_COORD_SECTION" => {
                section = Section::Coords;
                saw_coords = true;
                continue;
            }
            "ENDOWMENT_SECTION" => {
                section = Section::Endowment;
                continue;
            }
            _ if line.ends_with("_SECTION") => {
                section = Section::Skip;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Header => {
                let Some((key, value)) = line.split_once(':') else {
                    return Err(syntax("expected `KEY : value`"));
                };
                let value = value.trim();
                match key.trim() {
                    "NAME" => name = Some(value.to_string()),
                    "DIMENSION" => dimension = Some(value.parse::<usize>().map_err(|_| syntax("bad DIMENSION"))?),
                    "SALESMEN" => salesmen = Some(value.parse::<usize>().map_err(|_| syntax("bad SALESMEN"))?),
                    "EDGE_WEIGHT_TYPE" if value != "EUC_2D" => {
                        return Err(TsplibError::EdgeWeightType(value.to_string()))
                    }
                    _ => {}
                }
            }
            Section::Coords => {
                let mut it = line.split_whitespace();
                let (Some(i), Some(x), Some(y)) = (it.next(), it.next(), it.next()) else {
                    return Err(syntax("expected `<index> <x> <y>`"));
                };
                let i: usize = i.parse().map_err(|_| syntax("bad node index"))?;
                let x: f64 = x.parse().map_err(|_| syntax("bad x coordinate"))?;
                let y: f64 = y.parse().map_err(|_| syntax("bad y coordinate"))?;
                if i == 0 {
                    return Err(syntax("node indices are 1-based"));
                }
                if coords.len() < i {
                    coords.resize(i, None);
                }
                if coords[i - 1].is_some() {
                    return Err(syntax("duplicate node index"));
                }
                coords[i - 1] = Some(Point::new(T::from_f64_lossy(x), T::from_f64_lossy(y)));
            }
            Section::Endowment => {
                let mut it = line.split_whitespace();
                let (Some(node), Some(s)) = (it.next(), it.next()) else {
                    return Err(syntax("expected `<node> <salesman>`"));
                };
                let node: usize = node.parse().map_err(|_| syntax("bad node index"))?;
                let s: usize = s.parse().map_err(|_| syntax("bad salesman index"))?;
                if node < 2 {
                    return Err(syntax("the depot (node 1) belongs to every salesman"));
                }
                owner_lines.push((node - 1, s));
            }
            Section::Skip => {}
        }
    }
    if !saw_coords {
        return Err(TsplibError::NoCoordinates);
    }
    let points = coords
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or(TsplibError::MissingNode(i + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(d) = dimension {
        if d != points.len() {
            return Err(TsplibError::Dimension {
                declared: d,
                found: points.len(),
            });
        }
    }
    let owners = if owner_lines.is_empty() {
        None
    } else {
        let mut owners = vec![usize::MAX; points.len()];
        for (c, s) in owner_lines {
            if c >= points.len() {
                return Err(TsplibError::MissingNode(c + 1));
            }
            owners[c] = s;
        }
        Some(owners)
    };
    Ok(TsplibFile {
        name,
        points,
        salesmen,
        owners,
    })
}

impl<T: Scalar> TsplibFile<T> {
    /// Builds an instance from the file. `m` overrides `SALESMEN`; without
    /// an endowment section the round-robin endowment is used.
    pub fn into_instance(self, m: Option<usize>) -> Result<Instance<T>, TsplibError> {
        let n = self.points.len();
        let endowment = match (&self.owners, m) {
            (Some(owners), None) => {
                let m = owners.iter().skip(1).copied().filter(|&s| s != usize::MAX).max().map_or(0, |s| s + 1);
                let m = self.salesmen.unwrap_or(m).max(m);
                let mut sets = vec![BTreeSet::from([DEPOT]); m];
                for (c, &s) in owners.iter().enumerate().skip(1) {
                    if s != usize::MAX {
                        sets[s].insert(c);
                    }
                }
                Allocation::new(sets)
            }
            _ => {
                let m = m.or(self.salesmen).ok_or(TsplibError::Instance(InstanceError::TooFewSalesmen(0)))?;
                Allocation::round_robin(n, m)
            }
        };
        Ok(Instance::new(self.points, endowment)?)
    }
}

/// Renders an instance with the `SALESMEN` and `ENDOWMENT_SECTION` extensions.
pub fn write_instance<T: Scalar>(inst: &Instance<T>, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME : {name}");
    let _ = writeln!(out, "TYPE : TSP");
    let _ = writeln!(out, "DIMENSION : {}", inst.n());
    let _ = writeln!(out, "EDGE_WEIGHT_TYPE : EUC_2D");
    let _ = writeln!(out, "SALESMEN : {}", inst.m());
    out.push_str("NODE_COORD_SECTION\n");
    for (i, p) in inst.points().iter().enumerate() {
        // `{:?}` on floats round-trips exactly
        let _ = writeln!(out, "{} {:?} {:?}", i + 1, p.x.to_f64_lossy(), p.y.to_f64_lossy());
    }
    out.push_str("ENDOWMENT_SECTION\n");
    for c in 1..inst.n() {
        let owner = inst.endowment().owner_of(c).expect("validated endowment");
        let _ = writeln!(out, "{} {}", c + 1, owner);
    }
    out.push_str("EOF\n");
    out
}

pub fn read_instance<T: Scalar>(text: &str, m: Option<usize>) -> Result<Instance<T>, TsplibError> {
    parse(text)?.into_instance(m)
}
