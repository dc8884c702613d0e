//! GraphML topologies (graph, node, edge and data elements only).
//!
//! Nodes get dense ids in document order. `Latitude`, `Longitude`, `label`
//! and `weight` keys are matched on `attr.name`, ignoring case; all other
//! data is ignored. Self-loops are dropped and parallel edges collapse to the
//! lightest one. Edges without a weight get weight 1.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::IngestError;
use crate::graph::{GeoCoord, Network};

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Latitude,
    Longitude,
    Label,
    Weight,
}

fn field_of(attr_name: &str) -> Option<Field> {
    match attr_name.to_ascii_lowercase().as_str() {
        "latitude" => Some(Field::Latitude),
        "longitude" => Some(Field::Longitude),
        "label" => Some(Field::Label),
        "weight" => Some(Field::Weight),
        _ => None,
    }
}

fn number(text: &str, line: usize, what: &str) -> Result<f64, IngestError> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| IngestError::parse(line, format!("{what} `{}` is not a number", text.trim())))
}

pub fn parse_graphml(bytes: &[u8]) -> Result<Network, IngestError> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| IngestError::parse(0, format!("not UTF-8: {e}")))?;
    let doc = roxmltree::Document::parse(text).map_err(|e| IngestError::Parse {
        line: e.pos().row as usize,
        message: e.to_string(),
    })?;
    let line_of = |n: roxmltree::Node| doc.text_pos_at(n.range().start).row as usize;

    let root = doc.root_element();
    if root.tag_name().name() != "graphml" {
        return Err(IngestError::parse(
            line_of(root),
            "root element is not <graphml>",
        ));
    }
    let keys: HashMap<&str, Field> = root
        .children()
        .filter(|n| n.has_tag_name("key"))
        .filter_map(|k| Some((k.attribute("id")?, field_of(k.attribute("attr.name")?)?)))
        .collect();
    let graph = root
        .children()
        .find(|n| n.has_tag_name("graph"))
        .ok_or_else(|| IngestError::parse(line_of(root), "no <graph> element"))?;

    let data = |el: roxmltree::Node<'_, '_>| -> Vec<(Field, String, usize)> {
        el.children()
            .filter(|d| d.has_tag_name("data"))
            .filter_map(|d| {
                let f = *keys.get(d.attribute("key")?)?;
                Some((f, d.text().unwrap_or("").to_string(), line_of(d)))
            })
            .collect()
    };

    let mut net = Network::new();
    let mut ids: HashMap<&str, usize> = HashMap::new();
    for el in graph.children().filter(|n| n.has_tag_name("node")) {
        let line = line_of(el);
        let id = el
            .attribute("id")
            .ok_or_else(|| IngestError::parse(line, "node without id"))?;
        let (mut lat, mut lon, mut label) = (None, None, None);
        for (f, value, l) in data(el) {
            match f {
                Field::Latitude => lat = Some(number(&value, l, "latitude")?),
                Field::Longitude => lon = Some(number(&value, l, "longitude")?),
                Field::Label => label = Some(value),
                Field::Weight => {}
            }
        }
        let coord = match (lat, lon) {
            (Some(a), Some(b)) => {
                Some(GeoCoord::new(a, b).map_err(|e| IngestError::parse(line, e.to_string()))?)
            }
            _ => None,
        };
        if ids.insert(id, net.node_count()).is_some() {
            return Err(IngestError::parse(
                line,
                format!("duplicate node id `{id}`"),
            ));
        }
        net.add_node(label, coord);
    }

    for el in graph.children().filter(|n| n.has_tag_name("edge")) {
        let line = line_of(el);
        let mut ends = [0usize; 2];
        for (slot, attr) in ends.iter_mut().zip(["source", "target"]) {
            let name = el
                .attribute(attr)
                .ok_or_else(|| IngestError::parse(line, format!("edge without {attr}")))?;
            *slot = *ids.get(name).ok_or_else(|| IngestError::MissingEndpoint {
                line,
                endpoint: name.to_string(),
            })?;
        }
        if ends[0] == ends[1] {
            log::debug!("line {line}: self-loop skipped");
            continue;
        }
        let mut weight = 1.0;
        for (f, value, l) in data(el) {
            if f == Field::Weight {
                weight = number(&value, l, "weight")?;
            }
        }
        net.add_edge(ends[0], ends[1], weight)
            .map_err(|e| IngestError::parse(line, e.to_string()))?;
    }
    Ok(net)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Serializes `net` so that [`parse_graphml`] reproduces it.
pub fn write_graphml(net: &Network) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    s.push_str("  <key attr.name=\"label\" attr.type=\"string\" for=\"node\" id=\"d0\" />\n");
    s.push_str("  <key attr.name=\"Latitude\" attr.type=\"double\" for=\"node\" id=\"d1\" />\n");
    s.push_str("  <key attr.name=\"Longitude\" attr.type=\"double\" for=\"node\" id=\"d2\" />\n");
    s.push_str("  <key attr.name=\"weight\" attr.type=\"double\" for=\"edge\" id=\"d3\" />\n");
    s.push_str("  <graph edgedefault=\"undirected\">\n");
    for (i, node) in net.nodes().iter().enumerate() {
        let _ = write!(s, "    <node id=\"n{i}\">");
        if let Some(label) = &node.label {
            let _ = write!(s, "<data key=\"d0\">{}</data>", escape(label));
        }
        if let Some(c) = node.coord {
            let _ = write!(
                s,
                "<data key=\"d1\">{}</data><data key=\"d2\">{}</data>",
                c.latitude(),
                c.longitude()
            );
        }
        s.push_str("</node>\n");
    }
    for e in net.edges() {
        let _ = writeln!(
            s,
            "    <edge source=\"n{}\" target=\"n{}\"><data key=\"d3\">{}</data></edge>",
            e.a, e.b, e.weight
        );
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = r#"<?xml version="1.0"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key attr.name="LATITUDE" for="node" id="a"/>
  <key attr.name="longitude" for="node" id="b"/>
  <key attr.name="Color" for="node" id="c"/>
  <graph edgedefault="undirected">
    <node id="x"><data key="a">10.5</data><data key="b">-3</data><data key="c">red</data></node>
    <node id="y"/>
    <edge source="y" target="x"/>
    <edge source="x" target="x"/>
  </graph>
</graphml>"#;

    #[test]
    fn two_nodes_one_edge() {
        let net = parse_graphml(TWO.as_bytes()).unwrap();
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.edge_count(), 1);
        assert_eq!(net.edge_weight(0, 1), Some(1.0));
        let c = net.node(0).unwrap().coord.unwrap();
        assert_eq!((c.latitude(), c.longitude()), (10.5, -3.0));
        assert!(net.node(1).unwrap().coord.is_none());
    }

    #[test]
    fn dangling_edge() {
        let doc = TWO.replace(r#"target="x"/>"#, r#"target="z"/>"#);
        match parse_graphml(doc.as_bytes()) {
            Err(IngestError::MissingEndpoint { endpoint, line }) => {
                assert_eq!(endpoint, "z");
                assert_eq!(line, 9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_xml_reports_line() {
        let doc = "<graphml>\n<graph>\n<node id=\"a\">\n</graph></graphml>";
        match parse_graphml(doc.as_bytes()) {
            Err(IngestError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_numbers_are_errors() {
        let doc = TWO.replace(">10.5<", ">north<");
        assert!(matches!(
            parse_graphml(doc.as_bytes()),
            Err(IngestError::Parse { line: 7, .. })
        ));
        let doc = TWO.replace(">10.5<", ">95<");
        assert!(parse_graphml(doc.as_bytes()).is_err());
    }

    #[test]
    fn escaping() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }

    #[test]
    fn round_trip() {
        let mut net = Network::new();
        net.add_node(
            Some("A & <B>".into()),
            Some(GeoCoord::new(52.1, 0.1).unwrap()),
        );
        net.add_node(None, None);
        net.add_node(
            Some("C".into()),
            Some(GeoCoord::new(-33.3333333333, 151.2).unwrap()),
        );
        net.add_edge(0, 1, 0.3).unwrap();
        net.add_edge(1, 2, 1.0 / 3.0).unwrap();
        let text = write_graphml(&net);
        assert_eq!(parse_graphml(text.as_bytes()).unwrap(), net);
    }
}
