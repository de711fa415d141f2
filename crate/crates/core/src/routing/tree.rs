use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::RoutingError;
use crate::model::{Direction, MeshTopology, NodeId};

/// Broadcast/gather tree rooted at a hub.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanningTree {
    pub root: NodeId,
    /// child -> parent; the root has no entry.
    #[serde(with = "crate::model::map_as_pairs")]
    pub parent: BTreeMap<NodeId, NodeId>,
    #[serde(with = "crate::model::map_as_pairs")]
    pub depth: BTreeMap<NodeId, u32>,
    /// Directions a node forwards to its children, in E,S,W,N order.
    #[serde(with = "crate::model::map_as_pairs")]
    pub children: BTreeMap<NodeId, Vec<Direction>>,
    pub terminals: BTreeSet<NodeId>,
}

impl SpanningTree {
    pub fn singleton(root: NodeId) -> Self {
        Self {
            root,
            parent: BTreeMap::new(),
            depth: BTreeMap::from([(root, 0)]),
            children: BTreeMap::from([(root, Vec::new())]),
            terminals: BTreeSet::from([root]),
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.depth.keys().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.parent.len()
    }

    /// `(parent, child, child depth)` for every tree edge, ordered by child depth then node.
    pub fn edges(&self) -> Vec<(NodeId, NodeId, u32)> {
        let mut e: Vec<_> = self.parent.iter().map(|(&c, &p)| (p, c, self.depth[&c])).collect();
        e.sort_by_key(|&(_, c, d)| (d, c));
        e
    }

    /// Node sequence from `node` up to the root, inclusive.
    pub fn path_to_root(&self, node: NodeId) -> Vec<NodeId> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(&p) = self.parent.get(&cur) {
            path.push(p);
            cur = p;
        }
        path
    }

    pub fn max_terminal_depth(&self) -> u32 {
        self.terminals.iter().map(|t| self.depth[t]).max().unwrap_or(0)
    }

    pub fn is_terminal(&self, n: NodeId) -> bool {
        self.terminals.contains(&n)
    }
}

/// Minimal bounding rectangle `(x0, y0, x1, y1)` of a node set.
pub fn bounding_rect(nodes: impl IntoIterator<Item = NodeId>) -> (u16, u16, u16, u16) {
    let mut r = (u16::MAX, u16::MAX, 0, 0);
    for n in nodes {
        r.0 = r.0.min(n.x);
        r.1 = r.1.min(n.y);
        r.2 = r.2.max(n.x);
        r.3 = r.3.max(n.y);
    }
    r
}

/// BFS tree from `hub` over the terminals' bounding rectangle, pruned to the
/// branches that reach a terminal. Neighbours expand in E,S,W,N order.
pub fn bfs_spanning_tree(mesh: &MeshTopology, hub: NodeId, terminals: &[NodeId]) -> Result<SpanningTree, RoutingError> {
    let (x0, y0, x1, y1) = bounding_rect(terminals.iter().copied().chain([hub]));
    let inside = |n: NodeId| n.x >= x0 && n.x <= x1 && n.y >= y0 && n.y <= y1;

    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut depth: BTreeMap<NodeId, u32> = BTreeMap::from([(hub, 0)]);
    let mut queue = VecDeque::from([hub]);
    while let Some(cur) = queue.pop_front() {
        for d in Direction::ALL {
            let Some(next) = cur.step(d, mesh) else { continue };
            if !inside(next) || depth.contains_key(&next) {
                continue;
            }
            depth.insert(next, depth[&cur] + 1);
            parent.insert(next, cur);
            queue.push_back(next);
        }
    }

    let mut keep: BTreeSet<NodeId> = BTreeSet::from([hub]);
    for &t in terminals {
        if !depth.contains_key(&t) {
            return Err(RoutingError::UnreachableTerminal(t));
        }
        let mut cur = t;
        while keep.insert(cur) {
            cur = parent[&cur];
        }
    }

    let mut tree = SpanningTree {
        root: hub,
        parent: parent.into_iter().filter(|(c, _)| keep.contains(c)).collect(),
        depth: depth.into_iter().filter(|(n, _)| keep.contains(n)).collect(),
        children: keep.iter().map(|&n| (n, Vec::new())).collect(),
        terminals: terminals.iter().copied().collect(),
    };
    for (&c, &p) in &tree.parent {
        let d = Direction::between(p, c).expect("tree edges join neighbours");
        tree.children.get_mut(&p).unwrap().push(d);
    }
    for dirs in tree.children.values_mut() {
        dirs.sort();
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(x: u16, y: u16) -> NodeId {
        NodeId::new(x, y)
    }

    /// Textbook BFS distances inside a rectangle, written independently of the tree builder.
    fn oracle_dist(rect: (u16, u16, u16, u16), from: NodeId) -> BTreeMap<NodeId, u32> {
        let mut dist = BTreeMap::new();
        let mut q = VecDeque::new();
        dist.insert(from, 0u32);
        q.push_back(from);
        while let Some(c) = q.pop_front() {
            let cand = [
                (c.x as i32 + 1, c.y as i32),
                (c.x as i32 - 1, c.y as i32),
                (c.x as i32, c.y as i32 + 1),
                (c.x as i32, c.y as i32 - 1),
            ];
            for (x, y) in cand {
                if x < rect.0 as i32 || y < rect.1 as i32 || x > rect.2 as i32 || y > rect.3 as i32 {
                    continue;
                }
                let m = n(x as u16, y as u16);
                if !dist.contains_key(&m) {
                    dist.insert(m, dist[&c] + 1);
                    q.push_back(m);
                }
            }
        }
        dist
    }

    #[test]
    fn singleton_terminal() {
        let mesh = MeshTopology::new(4, 4, 256).unwrap();
        let t = bfs_spanning_tree(&mesh, n(2, 2), &[n(2, 2)]).unwrap();
        assert_eq!(t.edge_count(), 0);
        assert_eq!(t.depth[&n(2, 2)], 0);
    }

    #[test]
    fn two_by_two_block_depths() {
        let mesh = MeshTopology::new(4, 4, 256).unwrap();
        let terms = [n(1, 1), n(1, 2), n(2, 1), n(2, 2)];
        let t = bfs_spanning_tree(&mesh, n(1, 1), &terms).unwrap();
        let depths: Vec<u32> = terms.iter().map(|x| t.depth[x]).collect();
        assert_eq!(depths, vec![0, 1, 1, 2]);
        // E first, so (2,2) hangs off (2,1).
        assert_eq!(t.parent[&n(2, 2)], n(2, 1));
        assert_eq!(t.children[&n(1, 1)], vec![Direction::East, Direction::South]);
    }

    #[test]
    fn fork_at_root_goes_east_and_south() {
        // Hub R(1,1) of the lower-right 2x2 block on a 3x3 mesh forwards east and south.
        let mesh = MeshTopology::new(3, 3, 256).unwrap();
        let t = bfs_spanning_tree(&mesh, n(1, 1), &[n(1, 1), n(2, 1), n(1, 2), n(2, 2)]).unwrap();
        assert_eq!(t.children[&n(1, 1)], vec![Direction::East, Direction::South]);
        assert!(t.is_terminal(n(1, 1)));
    }

    #[test]
    fn terminal_outside_mesh_is_unreachable() {
        let mesh = MeshTopology::new(2, 2, 256).unwrap();
        assert!(matches!(
            bfs_spanning_tree(&mesh, n(0, 0), &[n(0, 0), n(5, 5)]),
            Err(RoutingError::UnreachableTerminal(_))
        ));
    }

    proptest! {
        #[test]
        fn depths_match_textbook_bfs(pts in prop::collection::vec((0u16..8, 0u16..8), 1..10), hub_pick in 0usize..10) {
            let mesh = MeshTopology::new(8, 8, 256).unwrap();
            let terms: Vec<NodeId> = pts.iter().map(|&(x, y)| n(x, y)).collect();
            let hub = terms[hub_pick % terms.len()];
            let t = bfs_spanning_tree(&mesh, hub, &terms).unwrap();
            let rect = bounding_rect(terms.iter().copied());
            let dist = oracle_dist(rect, hub);
            for x in &terms {
                prop_assert_eq!(t.depth[x], dist[x]);
                prop_assert_eq!(*t.path_to_root(*x).last().unwrap(), hub);
            }
            // Acyclic and connected: |E| = |V| - 1.
            prop_assert_eq!(t.edge_count() + 1, t.depth.len());
        }
    }
}
