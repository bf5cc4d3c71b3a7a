//! CSV ingestion and export.
//!
//! All files are comma separated with a mandatory header row. Node ids are
//! 0-based integers.
//!
//! * edges: `i,j,weight`; unlisted pairs have weight 0.
//! * pair covariates: `i,j,z1,...,zp`; every unordered pair exactly once.
//! * node attributes: `node,x1,...,xq`; every node exactly once.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{pair_count, pair_index, pairs, NetworkData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    None,
    EuclideanDistance,
    MatchIndicator,
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Transform::None),
            "euclidean_distance" => Ok(Transform::EuclideanDistance),
            "match_indicator" => Ok(Transform::MatchIndicator),
            other => Err(Error::Config(format!(
                "unknown transform `{other}` (expected none, euclidean_distance or match_indicator)"
            ))),
        }
    }
}

/// Node attribute table, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeAttrs {
    pub rows: Vec<Vec<f64>>,
}

impl NodeAttrs {
    pub fn n(&self) -> usize {
        self.rows.len()
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input)
}

fn header_check(rdr: &mut csv::Reader<impl Read>, what: &str, fixed: &[&str], prefix: &str) -> Result<usize> {
    let header = rdr.headers()?.clone();
    let ok_fixed = header.len() >= fixed.len() && fixed.iter().zip(header.iter()).all(|(a, b)| *a == b);
    let extra = header.len().saturating_sub(fixed.len());
    let ok_rest = header.iter().skip(fixed.len()).enumerate().all(|(k, h)| h == format!("{prefix}{}", k + 1));
    if !ok_fixed || !ok_rest {
        let expected = if prefix.is_empty() {
            fixed.join(",")
        } else {
            format!("{},{prefix}1,...", fixed.join(","))
        };
        return Err(Error::InvalidData(format!(
            "{what}: header must be `{expected}`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(extra)
}

fn field<T: FromStr>(rec: &csv::StringRecord, k: usize, what: &str, line: u64, name: &str) -> Result<T> {
    let raw = rec.get(k).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::InvalidData(format!("{what} line {line}: cannot parse {name} `{raw}`")))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn node_pair(rec: &csv::StringRecord, what: &str, n: Option<usize>) -> Result<(usize, usize)> {
    let line = line_of(rec);
    let i: usize = field(rec, 0, what, line, "node id i")?;
    let j: usize = field(rec, 1, what, line, "node id j")?;
    if i == j {
        return Err(Error::InvalidData(format!("{what} line {line}: self-loop at node {i}")));
    }
    if let Some(n) = n {
        if i >= n || j >= n {
            return Err(Error::InvalidData(format!(
                "{what} line {line}: node id {} out of range for {n} nodes",
                i.max(j)
            )));
        }
    }
    Ok((i, j))
}

/// Reads an edge list for a network on `n` nodes; returns weights in pair order.
pub fn read_edges<R: Read>(input: R, n: usize) -> Result<Vec<f64>> {
    const WHAT: &str = "edge list";
    let mut rdr = reader(input);
    header_check(&mut rdr, WHAT, &["i", "j", "weight"], "")?;
    let mut weights = vec![0.0; pair_count(n)];
    let mut seen = vec![false; pair_count(n)];
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let (i, j) = node_pair(&rec, WHAT, Some(n))?;
        let w: f64 = field(&rec, 2, WHAT, line, "weight")?;
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidData(format!(
                "{WHAT} line {line}: weight must be finite and non-negative, got {w}"
            )));
        }
        let k = pair_index(i, j);
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::InvalidData(format!("{WHAT} line {line}: duplicate pair ({i}, {j})")));
        }
        weights[k] = w;
    }
    Ok(weights)
}

/// Reads pair covariates; `n` is one more than the largest node id.
pub fn read_pair_covariates<R: Read>(input: R) -> Result<(usize, usize, Vec<f64>)> {
    const WHAT: &str = "pair covariates";
    let mut rdr = reader(input);
    let p = header_check(&mut rdr, WHAT, &["i", "j"], "z")?;
    if p == 0 {
        return Err(Error::InvalidData(format!("{WHAT}: need at least one column z1")));
    }
    let mut rows = Vec::new();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let (i, j) = node_pair(&rec, WHAT, None)?;
        let z = (0..p)
            .map(|c| {
                let v: f64 = field(&rec, 2 + c, WHAT, line, &format!("z{}", c + 1))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::InvalidData(format!("{WHAT} line {line}: z{} is not finite", c + 1)))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        n = n.max(i.max(j) + 1);
        rows.push((line, i, j, z));
    }
    let m = pair_count(n);
    let mut covs = vec![0.0; m * p];
    let mut seen = vec![false; m];
    for (line, i, j, z) in rows {
        let k = pair_index(i, j);
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::InvalidData(format!("{WHAT} line {line}: duplicate pair ({i}, {j})")));
        }
        covs[k * p..(k + 1) * p].copy_from_slice(&z);
    }
    if let Some((i, j)) = pairs(n).find(|&(i, j)| !seen[pair_index(i, j)]) {
        return Err(Error::InvalidData(format!(
            "{WHAT}: pair ({i}, {j}) is missing; every pair of the {n} nodes must appear once"
        )));
    }
    Ok((n, p, covs))
}

pub fn read_node_attrs<R: Read>(input: R) -> Result<NodeAttrs> {
    const WHAT: &str = "node attributes";
    let mut rdr = reader(input);
    let q = header_check(&mut rdr, WHAT, &["node"], "x")?;
    if q == 0 {
        return Err(Error::InvalidData(format!("{WHAT}: need at least one column x1")));
    }
    let mut rows: Vec<Option<Vec<f64>>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let node: usize = field(&rec, 0, WHAT, line, "node")?;
        let x = (0..q)
            .map(|c| field::<f64>(&rec, 1 + c, WHAT, line, &format!("x{}", c + 1)))
            .collect::<Result<Vec<f64>>>()?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("{WHAT} line {line}: attributes must be finite")));
        }
        if rows.len() <= node {
            rows.resize(node + 1, None);
        }
        if rows[node].replace(x).is_some() {
            return Err(Error::InvalidData(format!("{WHAT} line {line}: node {node} listed twice")));
        }
    }
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| Error::InvalidData(format!("{WHAT}: missing attributes for node {i}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(NodeAttrs { rows })
}

/// Scalar pair covariate `g(x_i, x_j)` for every pair, in pair order.
pub fn derive_pair_covariates(attrs: &NodeAttrs, transform: Transform) -> Result<Vec<f64>> {
    let n = attrs.n();
    if let Some(i) = (0..n).find(|&i| attrs.rows[i].len() != attrs.rows[0].len()) {
        return Err(Error::InvalidData(format!("node {i} has a different number of attributes")));
    }
    let g: fn(&[f64], &[f64]) -> f64 = match transform {
        Transform::EuclideanDistance => |a, b| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
        Transform::MatchIndicator => |a, b| if a == b { 1.0 } else { 0.0 },
        Transform::None => {
            return Err(Error::Config("node attributes need a transform (euclidean_distance or match_indicator)".into()))
        }
    };
    Ok(pairs(n).map(|(i, j)| g(&attrs.rows[i], &attrs.rows[j])).collect())
}

/// Writes every pair with non-zero weight.
pub fn write_edges<W: Write>(data: &NetworkData, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "weight"])?;
    for ((i, j), &a) in pairs(data.n()).zip(data.weights()) {
        if a != 0.0 {
            w.write_record([j.to_string(), i.to_string(), a.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_pair_covariates<W: Write>(data: &NetworkData, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["i".to_string(), "j".to_string()];
    header.extend((1..=data.p()).map(|c| format!("z{c}")));
    w.write_record(&header)?;
    for (k, (i, j)) in pairs(data.n()).enumerate() {
        let mut row = vec![j.to_string(), i.to_string()];
        row.extend(data.pair_covariate(k).iter().map(|z| z.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Where the covariates of a network come from.
#[derive(Debug, Clone, PartialEq)]
pub enum CovariateSource<'a> {
    Pairs(&'a Path),
    NodeAttrs(&'a Path, Transform),
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::InvalidData(format!("cannot open {}: {e}", path.display())))
}

/// Loads a network from an edge list plus one covariate source.
pub fn load_network(edges: &Path, covariates: CovariateSource<'_>) -> Result<NetworkData> {
    let (n, p, covs) = match covariates {
        CovariateSource::Pairs(path) => read_pair_covariates(open(path)?)?,
        CovariateSource::NodeAttrs(path, transform) => {
            let attrs = read_node_attrs(open(path)?)?;
            (attrs.n(), 1, derive_pair_covariates(&attrs, transform)?)
        }
    };
    if n < 2 {
        return Err(Error::InvalidData("covariates describe fewer than 2 nodes".into()));
    }
    let weights = read_edges(open(edges)?, n)?;
    NetworkData::new(n, p, weights, covs)
}
