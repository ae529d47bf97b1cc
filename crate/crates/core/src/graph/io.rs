//! Tab-separated edge lists: `src<TAB>dst<TAB>weight`, `#` comments.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Graph, GraphError, LOAD_ROW_SUM_TOL};

pub fn read_graph(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    parse_edge_list(&fs::read_to_string(path)?)
}

pub fn write_graph(g: &Graph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "# nodes: {}", g.node_count())?;
    for (i, j, w) in g.edges() {
        // `{}` prints the shortest decimal that parses back to the same f64.
        writeln!(out, "{i}\t{j}\t{w}")?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let parse_err = |message: String| GraphError::Parse { line: lineno, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
        }
        let src: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad source id {:?}", fields[0])))?;
        let dst: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("bad destination id {:?}", fields[1])))?;
        let weight: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(format!("bad weight {:?}", fields[2])))?;
        let needed = src.max(dst) + 1;
        if rows.len() < needed {
            rows.resize_with(needed, Vec::new);
        }
        if rows[src].iter().any(|&(j, _)| j == dst) {
            return Err(parse_err(format!("duplicate edge ({src}, {dst})")));
        }
        rows[src].push((dst, weight));
    }
    if rows.is_empty() {
        return Err(GraphError::Empty);
    }
    Graph::from_rows_with_tolerance(rows, LOAD_ROW_SUM_TOL)
}

#[cfg(test)]
mod tests {
    use super::super::{generate_scale_free, ScaleFreeParams};
    use super::*;

    #[test]
    fn parses_two_state_chain() {
        let g = parse_edge_list("0 1 0.3\n0 0 0.7\n1 0 0.4\n1 1 0.6\n").unwrap();
        let expected =
            Graph::from_edges(2, &[(0, 0, 0.7), (0, 1, 0.3), (1, 0, 0.4), (1, 1, 0.6)]).unwrap();
        assert_eq!(g, expected);
    }

    #[test]
    fn tabs_and_comments() {
        let g = parse_edge_list("# header\n0\t0\t1\n\n1\t0\t1.0\n").unwrap();
        assert_eq!(g.node_count(), 2);
    }

    #[test]
    fn empty_file_has_no_nodes() {
        assert!(matches!(parse_edge_list(""), Err(GraphError::Empty)));
        assert!(matches!(parse_edge_list("# only a comment\n"), Err(GraphError::Empty)));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        match parse_edge_list("0 0 1\n1 x 0.5\n") {
            Err(GraphError::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_edge_list("0 0 1\n1 1\n") {
            Err(GraphError::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_edge_list("0 0 0.5\n0 0 0.5\n") {
            Err(GraphError::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_tolerance_is_loose_but_bounded() {
        assert!(parse_edge_list("0 0 0.3333333333\n0 1 0.6666666667\n1 1 1\n").is_ok());
        assert!(matches!(
            parse_edge_list("0 0 0.33\n0 1 0.66\n1 1 1\n"),
            Err(GraphError::RowSum { row: 0, .. })
        ));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let g = generate_scale_free(&ScaleFreeParams::new(100, -2.5, 11)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.tsv");
        write_graph(&g, &path).unwrap();
        let back = read_graph(&path).unwrap();
        assert_eq!(g, back);
    }
}
