//! SNDlib native text format.
//!
//! Only the `NODES`, `LINKS` and `DEMANDS` sections are read; other sections
//! are skipped. Node lines are `id ( longitude latitude )`, link and demand
//! lines start with `id ( source target )`, and the demand value is the
//! second field after the closing parenthesis. Links get weight 1.

use std::collections::HashMap;

use super::IngestError;
use crate::graph::{GeoCoord, Network, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub id: String,
    pub s: NodeId,
    pub t: NodeId,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SndlibInstance {
    pub network: Network,
    /// Number of link lines, before parallel links collapse.
    pub link_count: usize,
    /// Demands with positive value, in file order.
    pub demands: Vec<Demand>,
}

impl SndlibInstance {
    pub fn total_demand(&self) -> f64 {
        self.demands.iter().map(|d| d.value).sum()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Nodes,
    Links,
    Demands,
    Other,
}

/// Splits `id ( a b ) rest...` into `(id, [a, b], rest)`.
fn split_item(line: &str, lineno: usize) -> Result<(&str, Vec<&str>, Vec<&str>), IngestError> {
    let open = line
        .find('(')
        .ok_or_else(|| IngestError::parse(lineno, "expected `(`"))?;
    let close = line[open..]
        .find(')')
        .map(|i| i + open)
        .ok_or_else(|| IngestError::parse(lineno, "expected `)`"))?;
    let id = line[..open].trim();
    if id.is_empty() {
        return Err(IngestError::parse(lineno, "missing identifier"));
    }
    let inner = line[open + 1..close].split_whitespace().collect();
    let rest = line[close + 1..].split_whitespace().collect();
    Ok((id, inner, rest))
}

fn float(token: &str, lineno: usize) -> Result<f64, IngestError> {
    token
        .parse()
        .map_err(|_| IngestError::parse(lineno, format!("`{token}` is not a number")))
}

pub fn parse_sndlib(bytes: &[u8]) -> Result<SndlibInstance, IngestError> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| IngestError::parse(0, format!("not UTF-8: {e}")))?;
    let mut network = Network::new();
    let mut names: HashMap<String, NodeId> = HashMap::new();
    let mut link_count = 0;
    let mut demands = Vec::new();
    let mut section: Option<Section> = None;
    // parenthesis depth inside skipped sections
    let mut depth = 0i64;
    let mut seen_nodes = false;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with('?') {
            continue;
        }
        match section {
            None => {
                let Some(name) = line.strip_suffix('(').map(str::trim) else {
                    return Err(IngestError::parse(
                        lineno,
                        format!("unexpected `{line}` outside a section"),
                    ));
                };
                section = Some(match name {
                    "NODES" => {
                        seen_nodes = true;
                        Section::Nodes
                    }
                    "LINKS" => Section::Links,
                    "DEMANDS" => Section::Demands,
                    _ => Section::Other,
                });
                depth = 1;
            }
            Some(Section::Other) => {
                depth += line.matches('(').count() as i64 - line.matches(')').count() as i64;
                if depth <= 0 {
                    section = None;
                }
            }
            Some(_) if line == ")" => section = None,
            Some(Section::Nodes) => {
                let (id, inner, _) = split_item(line, lineno)?;
                let coord = match inner.as_slice() {
                    [lon, lat] => GeoCoord::new(float(lat, lineno)?, float(lon, lineno)?).ok(),
                    [] => None,
                    _ => {
                        return Err(IngestError::parse(
                            lineno,
                            "expected `( longitude latitude )`",
                        ))
                    }
                };
                if names.contains_key(id) {
                    return Err(IngestError::parse(lineno, format!("duplicate node `{id}`")));
                }
                names.insert(
                    id.to_string(),
                    network.add_node(Some(id.to_string()), coord),
                );
            }
            Some(kind @ (Section::Links | Section::Demands)) => {
                if !seen_nodes {
                    return Err(IngestError::parse(lineno, "NODES section must come first"));
                }
                let (id, inner, rest) = split_item(line, lineno)?;
                let [s, t] = inner.as_slice() else {
                    return Err(IngestError::parse(lineno, "expected `( source target )`"));
                };
                let mut ends = [0; 2];
                for (slot, name) in ends.iter_mut().zip([s, t]) {
                    *slot = *names
                        .get(*name)
                        .ok_or_else(|| IngestError::MissingEndpoint {
                            line: lineno,
                            endpoint: name.to_string(),
                        })?;
                }
                if kind == Section::Links {
                    link_count += 1;
                    if ends[0] != ends[1] {
                        network.add_edge(ends[0], ends[1], 1.0)?;
                    }
                    continue;
                }
                let value = rest
                    .get(1)
                    .ok_or_else(|| IngestError::parse(lineno, "missing demand value"))
                    .and_then(|v| float(v, lineno))?;
                if value < 0.0 {
                    return Err(IngestError::NegativeDemand {
                        id: id.to_string(),
                        value,
                    });
                }
                if value == 0.0 || ends[0] == ends[1] {
                    log::debug!("line {lineno}: demand `{id}` skipped");
                    continue;
                }
                demands.push(Demand {
                    id: id.to_string(),
                    s: ends[0],
                    t: ends[1],
                    value,
                });
            }
        }
    }
    if section.is_some() {
        return Err(IngestError::parse(
            text.lines().count(),
            "unterminated section",
        ));
    }
    Ok(SndlibInstance {
        network,
        link_count,
        demands,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = "?SNDlib native format; type: network; version: 1.0
# network mini

META (
  granularity = 6month
)

NODES (
  A ( 6.04 50.76 )
  B ( 8.80 53.08 )
  C ( 500 500 )
)

LINKS (
  L1 ( A B ) 0.00 0.00 0.00 0.00 ( 40.00 3290.00 )
  L2 ( B C ) 0.00 0.00 0.00 0.00 ( 40.00 3290.00 )
  L3 ( C B ) 0.00 0.00 0.00 0.00 ( 40.00 3290.00 )
)

DEMANDS (
  A_B ( A B ) 1 12.50 UNLIMITED
  A_C ( A C ) 1 0.00 UNLIMITED
  B_C ( B C ) 1 3 UNLIMITED
)

ADMISSIBLE_PATHS (
  A_B (
    P_0 ( L1 )
  )
)
";

    #[test]
    fn parses_sections() {
        let inst = parse_sndlib(MINI.as_bytes()).unwrap();
        assert_eq!(inst.network.node_count(), 3);
        assert_eq!(inst.link_count, 3);
        assert_eq!(inst.network.edge_count(), 2);
        let a = inst.network.node(0).unwrap().coord.unwrap();
        assert_eq!((a.latitude(), a.longitude()), (50.76, 6.04));
        assert!(inst.network.node(2).unwrap().coord.is_none());
        assert_eq!(inst.demands.len(), 2);
        assert_eq!(inst.demands[0].id, "A_B");
        assert_eq!(inst.total_demand(), 15.5);
    }

    #[test]
    fn negative_demand() {
        let doc = MINI.replace("1 3 UNLIMITED", "1 -3 UNLIMITED");
        assert!(matches!(
            parse_sndlib(doc.as_bytes()),
            Err(IngestError::NegativeDemand { value, .. }) if value == -3.0
        ));
    }

    #[test]
    fn unknown_endpoint() {
        let doc = MINI.replace("L2 ( B C )", "L2 ( B Z )");
        assert!(matches!(
            parse_sndlib(doc.as_bytes()),
            Err(IngestError::MissingEndpoint { line: 16, .. })
        ));
    }

    #[test]
    fn unterminated() {
        let doc = "NODES (\n  A ( 1 2 )\n";
        assert!(matches!(
            parse_sndlib(doc.as_bytes()),
            Err(IngestError::Parse { .. })
        ));
    }
}
