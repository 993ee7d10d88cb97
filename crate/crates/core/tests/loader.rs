use std::collections::BTreeSet;
use std::io::Cursor;

use slp_core::graph::load_snap_edgelist;

const SAMPLE: &str = "\
# Directed graph: sample
# FromNodeId\tToNodeId
0\t1
1\t0
1\t2
2\t2
3\t7
7\t3
4\t9
9\t8

2\t4
";

#[test]
fn counts_and_renumbering() {
    let (g, st) = load_snap_edgelist(Cursor::new(SAMPLE), None).unwrap();
    assert_eq!(st.raw_edge_lines, 9);
    assert_eq!(st.distinct_ids, 8);
    assert_eq!(st.self_loops, 1);
    assert_eq!(st.directed_edges, 8);
    assert_eq!(st.undirected_edges, 6);
    assert_eq!(g.n(), 8);
    assert_eq!(g.edge_count(), 6);
    // Ids 7, 8, 9 become 5, 6, 7.
    assert!(g.has_edge(3, 5) && g.has_edge(4, 7) && g.has_edge(7, 6));
}

#[test]
fn prefix_keeps_ids_below_the_bound() {
    for k in 1..=10usize {
        let (g, st) = load_snap_edgelist(Cursor::new(SAMPLE), Some(k)).unwrap();
        let mut want = BTreeSet::new();
        for line in SAMPLE
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let v: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().unwrap())
                .collect();
            if v[0] < k && v[1] < k && v[0] != v[1] {
                want.insert((v[0].min(v[1]), v[0].max(v[1])));
            }
        }
        let got: BTreeSet<(usize, usize)> = (0..g.n())
            .flat_map(|u| {
                g.neighbors(u)
                    .into_iter()
                    .filter(move |&v| v > u)
                    .map(move |v| (u, v))
            })
            .collect();
        assert_eq!(g.n(), k);
        assert_eq!(got, want, "k={k}");
        assert_eq!(st.undirected_edges, want.len());
    }
}

#[test]
fn malformed_lines_are_rejected() {
    assert!(load_snap_edgelist(Cursor::new("0 1\n1 x\n"), None).is_err());
    assert!(load_snap_edgelist(Cursor::new("0\n"), None).is_err());
}
