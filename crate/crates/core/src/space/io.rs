use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MetricData, MetricKind, Space, SpaceParts};
use crate::error::{Error, Result};

/// On-disk JSON form of a space. Edge endpoints are external point ids;
/// matrix rows follow the order of `points`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub metric: MetricKind,
    pub points: Vec<SpacePointRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(i64, i64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geodesic: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacePointRecord {
    pub id: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
    pub weight: f64,
    #[serde(default)]
    pub boundary: bool,
}

impl SpaceFile {
    pub fn into_space(self) -> Result<Space> {
        let n = self.points.len();
        if n == 0 {
            return Err(Error::Input("no points".into()));
        }
        let dim = self.points[0].coords.as_ref().map_or(0, Vec::len);
        let mut coords = Vec::new();
        for (k, p) in self.points.iter().enumerate() {
            match (&p.coords, dim) {
                (None, 0) => {}
                (Some(c), d) if c.len() == d && d > 0 => coords.extend_from_slice(c),
                _ => {
                    return Err(Error::Input(format!(
                        "point record {k} (id {}): coordinates missing or of inconsistent dimension",
                        p.id
                    )))
                }
            }
        }
        let labels: Vec<i64> = self.points.iter().map(|p| p.id).collect();
        let lookup: std::collections::HashMap<i64, usize> = labels.iter().enumerate().map(|(k, &l)| (l, k)).collect();
        let metric = match self.metric {
            MetricKind::Euclidean => MetricData::Euclidean,
            MetricKind::Graph => {
                let edges = self.edges.unwrap_or_default();
                let mut out = Vec::with_capacity(edges.len());
                for (k, &(a, b, w)) in edges.iter().enumerate() {
                    let (Some(&i), Some(&j)) = (lookup.get(&a), lookup.get(&b)) else {
                        return Err(Error::Input(format!("edge record {k}: unknown endpoint id in ({a}, {b})")));
                    };
                    if w < 0.0 {
                        return Err(Error::Input(format!("edge record {k}: negative weight {w}")));
                    }
                    out.push((i, j, w));
                }
                MetricData::Graph(out)
            }
            MetricKind::Matrix => {
                let rows =
                    self.matrix.ok_or_else(|| Error::Input("matrix metric requires a \"matrix\" field".into()))?;
                if rows.len() != n {
                    return Err(Error::Input(format!("matrix has {} rows for {n} points", rows.len())));
                }
                let mut flat = Vec::with_capacity(n * n);
                for (k, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::Input(format!(
                            "matrix row {k} (id {}): expected {n} entries, got {}",
                            labels[k],
                            row.len()
                        )));
                    }
                    flat.extend_from_slice(row);
                }
                MetricData::Matrix(flat)
            }
        };
        let geodesic = self.geodesic.unwrap_or(!matches!(self.metric, MetricKind::Matrix));
        Space::new(SpaceParts {
            labels,
            dim,
            coords,
            weights: self.points.iter().map(|p| p.weight).collect(),
            boundary: self.points.iter().map(|p| p.boundary).collect(),
            metric,
            geodesic,
        })
    }

    pub fn from_space(space: &Space) -> SpaceFile {
        let points = (0..space.len())
            .map(|x| SpacePointRecord {
                id: space.label(x),
                coords: space.coords(x).map(<[f64]>::to_vec),
                weight: space.weight(x),
                boundary: space.is_boundary(x),
            })
            .collect();
        let kind = space.metric_kind();
        SpaceFile {
            metric: kind,
            points,
            edges: (kind == MetricKind::Graph)
                .then(|| space.edges().into_iter().map(|(i, j, w)| (space.label(i), space.label(j), w)).collect()),
            matrix: space.matrix().map(|d| d.chunks(space.len()).map(<[f64]>::to_vec).collect()),
            geodesic: Some(space.is_geodesic()),
        }
    }
}

pub fn read_space<R: Read>(reader: R) -> Result<Space> {
    let file: SpaceFile = serde_json::from_reader(reader)?;
    file.into_space()
}

pub fn load_space(path: impl AsRef<Path>) -> Result<Space> {
    let f = std::fs::File::open(path.as_ref())?;
    read_space(std::io::BufReader::new(f))
}

pub fn write_space<W: Write>(space: &Space, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, &SpaceFile::from_space(space))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loader_diagnostics() {
        let err = read_space(r#"{"metric":"euclidean","points":[]}"#.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("no points"));
        let err = read_space(
            r#"{"metric":"euclidean","points":[{"id":4,"coords":[0],"weight":1},{"id":5,"coords":[1],"weight":-1}]}"#
                .as_bytes(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("id 5"), "{err}");
        let err = read_space(
            r#"{"metric":"graph","points":[{"id":1,"weight":1},{"id":2,"weight":1}],"edges":[[1,2,-1]]}"#.as_bytes(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("negative"));
    }

    #[test]
    fn graph_round_trip() {
        let s = super::super::path_graph(5, 0.25);
        let mut buf = Vec::new();
        write_space(&s, &mut buf).unwrap();
        let back = read_space(buf.as_slice()).unwrap();
        assert_eq!(SpaceFile::from_space(&back), SpaceFile::from_space(&s));
        assert_eq!(back.distance(0, 4).unwrap(), 1.0);
    }
}
