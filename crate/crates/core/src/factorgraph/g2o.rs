//! Reader and writer for the 2D subset of the g2o pose-graph text format.
//!
//! ```text
//! VERTEX_SE2 <id> <x> <y> <theta>
//! EDGE_SE2 <id1> <id2> <dx> <dy> <dtheta> <i11> <i12> <i13> <i22> <i23> <i33>
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::se2::{between_factor, prior_factor, sqrt_information, sqrt_information_diag, Pose2};
use super::{FactorGraph, VariableId};
use crate::error::{Error, Result};

/// Standard deviations of the anchor prior placed on the first vertex.
pub const ANCHOR_SIGMAS: [f64; 3] = [0.1, 0.1, 0.05];

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeRecord {
    pub from: u32,
    pub to: u32,
    pub measurement: Pose2,
    /// Upper triangle `(i11, i12, i13, i22, i23, i33)`.
    pub information: [f64; 6],
    line: usize,
}

impl EdgeRecord {
    pub fn new(from: u32, to: u32, measurement: Pose2, information: [f64; 6]) -> Self {
        EdgeRecord {
            from,
            to,
            measurement,
            information,
            line: 0,
        }
    }
}

/// Raw records of a pose-graph file, in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PoseGraphFile {
    pub vertices: Vec<(u32, Pose2)>,
    pub edges: Vec<EdgeRecord>,
}

fn parse_fields<const N: usize>(fields: &[&str], line: usize) -> Result<[f64; N]> {
    if fields.len() != N {
        return Err(Error::Parse {
            line,
            message: format!("expected {N} numeric fields, found {}", fields.len()),
        });
    }
    let mut out = [0.0; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = f.parse().map_err(|_| Error::Parse {
            line,
            message: format!("not a number: {f:?}"),
        })?;
    }
    Ok(out)
}

fn parse_id(s: &str, line: usize) -> Result<u32> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad vertex id {s:?}"),
    })
}

impl PoseGraphFile {
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut file = PoseGraphFile::default();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            let Some((&tag, rest)) = fields.split_first() else {
                continue;
            };
            match tag {
                "VERTEX_SE2" => {
                    if rest.len() != 4 {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "VERTEX_SE2 takes an id and three values".into(),
                        });
                    }
                    let id = parse_id(rest[0], line_no)?;
                    let [x, y, t] = parse_fields::<3>(&rest[1..], line_no)?;
                    if file.vertices.iter().any(|(v, _)| *v == id) {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("duplicate vertex {id}"),
                        });
                    }
                    file.vertices.push((id, Pose2::new(x, y, t)));
                }
                "EDGE_SE2" => {
                    if rest.len() != 11 {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "EDGE_SE2 takes two ids and nine values".into(),
                        });
                    }
                    let from = parse_id(rest[0], line_no)?;
                    let to = parse_id(rest[1], line_no)?;
                    let v = parse_fields::<9>(&rest[2..], line_no)?;
                    file.edges.push(EdgeRecord {
                        from,
                        to,
                        measurement: Pose2::new(v[0], v[1], v[2]),
                        information: [v[3], v[4], v[5], v[6], v[7], v[8]],
                        line: line_no,
                    });
                }
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("unknown record {other:?}"),
                    })
                }
            }
        }
        Ok(file)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (id, p) in &self.vertices {
            writeln!(out, "VERTEX_SE2 {id} {:?} {:?} {:?}", p.x, p.y, p.theta)?;
        }
        for e in &self.edges {
            let m = e.measurement;
            write!(out, "EDGE_SE2 {} {} {:?} {:?} {:?}", e.from, e.to, m.x, m.y, m.theta)?;
            for v in e.information {
                write!(out, " {v:?}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Linearizes every record at the vertex estimates. The first vertex
    /// receives an anchor prior centred on its estimate.
    pub fn to_factor_graph(&self) -> Result<FactorGraph> {
        let mut graph = FactorGraph::new();
        let mut poses = BTreeMap::new();
        for &(id, p) in &self.vertices {
            graph.add_variable(VariableId::new(id, 3), Some(p.to_vec()))?;
            poses.insert(id, p);
        }
        if let Some(&(id, p)) = self.vertices.first() {
            let anchor = sqrt_information_diag(ANCHOR_SIGMAS);
            graph.add_factor(prior_factor(VariableId::new(id, 3), p, p, &anchor)?)?;
        }
        for e in &self.edges {
            let pa = *poses.get(&e.from).ok_or(Error::MissingVertex(e.from))?;
            let pb = *poses.get(&e.to).ok_or(Error::MissingVertex(e.to))?;
            let u = sqrt_information(e.information).ok_or(Error::NonPsdInformation { line: e.line })?;
            graph.add_factor(between_factor(
                VariableId::new(e.from, 3),
                VariableId::new(e.to, 3),
                pa,
                pb,
                e.measurement,
                &u,
            )?)?;
        }
        Ok(graph)
    }
}

/// Parses a pose-graph stream straight into a linearized factor graph.
pub fn load_pose_graph<R: BufRead>(reader: R) -> Result<FactorGraph> {
    PoseGraphFile::parse(reader)?.to_factor_graph()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::StateOrder;
    use crate::factorgraph::assemble;

    const TWO: &str = "VERTEX_SE2 0 0 0 0\nVERTEX_SE2 1 1.0 0.1 0.2\n\
                       EDGE_SE2 0 1 1.0 0.0 0.15 100 0 0 100 0 400\n";

    #[test]
    fn empty_stream_gives_empty_graph() {
        let g = load_pose_graph("".as_bytes()).unwrap();
        assert!(g.variables().is_empty());
        assert!(g.factors().is_empty());
    }

    #[test]
    fn smallest_file_has_prior_and_odometry() {
        let g = load_pose_graph(TWO.as_bytes()).unwrap();
        assert_eq!(g.variables().len(), 2);
        assert_eq!(g.factors().len(), 2);
    }

    #[test]
    fn round_trip_preserves_gram() {
        let file = PoseGraphFile::parse(TWO.as_bytes()).unwrap();
        let mut buf = Vec::new();
        file.write(&mut buf).unwrap();
        let again = PoseGraphFile::parse(buf.as_slice()).unwrap();
        let (g1, g2) = (file.to_factor_graph().unwrap(), again.to_factor_graph().unwrap());
        assert_eq!(g1.variables().len(), g2.variables().len());
        assert_eq!(g1.factors().len(), g2.factors().len());
        let order = StateOrder::new(g1.variables().to_vec()).unwrap();
        let gram = |g: &FactorGraph| {
            let (j, _) = assemble(g, &order).unwrap();
            let d = j.to_dense();
            let n = j.n_cols();
            let mut out = vec![0.0; n * n];
            for row in &d {
                for a in 0..n {
                    for b in 0..n {
                        out[a * n + b] += row[a] * row[b];
                    }
                }
            }
            out
        };
        for (a, b) in gram(&g1).iter().zip(gram(&g2)) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn malformed_input_is_rejected() {
        let bad_tag = "VERTEX_XYZ 0 0 0 0\n";
        assert!(matches!(load_pose_graph(bad_tag.as_bytes()), Err(Error::Parse { line: 1, .. })));
        let bad_number = "VERTEX_SE2 0 0 zero 0\n";
        assert!(matches!(load_pose_graph(bad_number.as_bytes()), Err(Error::Parse { .. })));
        let missing = "VERTEX_SE2 0 0 0 0\nEDGE_SE2 0 5 1 0 0 1 0 0 1 0 1\n";
        assert!(matches!(load_pose_graph(missing.as_bytes()), Err(Error::MissingVertex(5))));
        let non_psd = "VERTEX_SE2 0 0 0 0\nVERTEX_SE2 1 1 0 0\nEDGE_SE2 0 1 1 0 0 1 0 0 -1 0 1\n";
        assert!(matches!(
            load_pose_graph(non_psd.as_bytes()),
            Err(Error::NonPsdInformation { line: 3 })
        ));
    }
}
