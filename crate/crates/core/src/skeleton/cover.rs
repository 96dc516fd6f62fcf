use crate::graph::{dijkstra_oracle, NodeId, WeightedGraph};

/// Checks that for every pair `(s, t)` some shortest `s`-`t` path has no run
/// of `h` consecutive nodes outside `members`, i.e. every window of `h`
/// nodes on it hits the sample. Returns the first violating pair.
///
/// Works on the shortest-path DAG of each source: the shortest possible
/// trailing run of non-members is propagated in distance order.
pub fn check_path_cover(g: &WeightedGraph, members: &[NodeId], h: u32) -> Result<(), (NodeId, NodeId)> {
    let n = g.node_count();
    let mut is_member = vec![false; n];
    for v in members {
        is_member[v.index()] = true;
    }
    for s in g.nodes() {
        let dist = dijkstra_oracle(g, s).expect("valid source").entries;
        let mut order: Vec<NodeId> = g.nodes().filter(|v| dist[v.index()].is_finite()).collect();
        order.sort_by_key(|v| (dist[v.index()], *v));
        let run_of = |v: NodeId, prev: u32| if is_member[v.index()] { 0 } else { prev + 1 };
        let mut run = vec![u32::MAX; n];
        run[s.index()] = run_of(s, 0);
        for &v in &order {
            if v == s {
                continue;
            }
            let dv = dist[v.index()];
            let best = g
                .neighbors(v)
                .iter()
                .filter(|a| dist[a.node.index()] + a.weight == dv && run[a.node.index()] < h)
                .map(|a| run[a.node.index()])
                .min();
            if let Some(b) = best {
                run[v.index()] = run_of(v, b);
            }
            if run[v.index()] >= h {
                return Err((s, v));
            }
        }
    }
    Ok(())
}
