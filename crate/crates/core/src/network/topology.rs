use std::collections::VecDeque;

use super::Network;
use crate::error::{Error, Result};

pub(super) fn is_connected(net: &Network) -> bool {
    let n = net.num_buses();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([net.slack]);
    seen[net.slack] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for k in net.incident(i) {
            let j = net.branches[k].other_end(i);
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == n
}

/// True iff the branch graph has no cycle (parallel branches count as one).
pub fn check_radial(net: &Network) -> bool {
    let mut parent: Vec<usize> = (0..net.num_buses()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for br in &net.branches {
        let (a, b) = (find(&mut parent, br.from), find(&mut parent, br.to));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

/// Radial network oriented away from the slack bus.
#[derive(Clone, Debug)]
pub struct RootedTree {
    pub root: usize,
    /// Breadth-first order starting at the root.
    pub order: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    /// Branch connecting each bus to its parent.
    pub parent_branch: Vec<Option<usize>>,
    /// For each branch, the `(upstream, downstream)` bus pair.
    pub oriented: Vec<(usize, usize)>,
    pub children: Vec<Vec<usize>>,
}

impl RootedTree {
    pub fn new(net: &Network) -> Result<Self> {
        if !net.radial {
            return Err(Error::NotRadial);
        }
        let n = net.num_buses();
        let mut parent = vec![None; n];
        let mut parent_branch = vec![None; n];
        let mut oriented = vec![(0, 0); net.num_branches()];
        let mut children = vec![Vec::new(); n];
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([net.slack]);
        seen[net.slack] = true;
        while let Some(i) = queue.pop_front() {
            order.push(i);
            let mut inc: Vec<usize> = net.incident(i).collect();
            inc.sort_unstable();
            for k in inc {
                let j = net.branches[k].other_end(i);
                if !seen[j] {
                    seen[j] = true;
                    parent[j] = Some(i);
                    parent_branch[j] = Some(k);
                    oriented[k] = (i, j);
                    children[i].push(j);
                    queue.push_back(j);
                }
            }
        }
        Ok(Self {
            root: net.slack,
            order,
            parent,
            parent_branch,
            oriented,
            children,
        })
    }

    /// Buses in the subtree rooted at `bus`, including itself.
    pub fn subtree(&self, bus: usize) -> Vec<usize> {
        let mut out = vec![bus];
        let mut k = 0;
        while k < out.len() {
            out.extend(self.children[out[k]].iter().copied());
            k += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Branch, Bus, BusKind};

    fn net_with(branches: &[(usize, usize)], n: usize) -> Network {
        let buses = (0..n)
            .map(|id| Bus {
                id,
                kind: if id == 0 { BusKind::Slack } else { BusKind::Pq },
                p_inj: 0.0,
                q_inj: 0.0,
                v_min: 0.95,
                v_max: 1.05,
                devices: Vec::new(),
            })
            .collect();
        let branches = branches
            .iter()
            .map(|&(from, to)| Branch {
                from,
                to,
                r: 0.01,
                x: 0.1,
                flow_limit: None,
            })
            .collect();
        Network::new(1.0, buses, branches, vec![], vec![]).unwrap()
    }

    /// Depth-first cycle search, independent of the union-find check.
    fn has_cycle_dfs(net: &Network) -> bool {
        fn visit(net: &Network, i: usize, via: Option<usize>, seen: &mut [bool]) -> bool {
            seen[i] = true;
            for k in net.incident(i) {
                if Some(k) == via {
                    continue;
                }
                let j = net.branches[k].other_end(i);
                if seen[j] || visit(net, j, Some(k), seen) {
                    return true;
                }
            }
            false
        }
        let mut seen = vec![false; net.num_buses()];
        visit(net, net.slack, None, &mut seen)
    }

    #[test]
    fn triangle_is_meshed() {
        let net = net_with(&[(0, 1), (1, 2), (2, 0)], 3);
        assert!(!check_radial(&net));
        assert!(has_cycle_dfs(&net));
        assert!(matches!(RootedTree::new(&net), Err(Error::NotRadial)));
    }

    #[test]
    fn single_branch_is_tree() {
        assert!(check_radial(&net_with(&[(0, 1)], 2)));
    }

    #[test]
    fn bundled_feeder_is_radial() {
        let net = Network::ieee33();
        assert!(!has_cycle_dfs(&net));
        assert!(check_radial(&net));
    }

    #[test]
    fn tree_orientation_points_downstream() {
        let net = net_with(&[(1, 0), (1, 2), (3, 1)], 4);
        let tree = RootedTree::new(&net).unwrap();
        assert_eq!(tree.order[0], 0);
        assert_eq!(tree.oriented[0], (0, 1));
        assert_eq!(tree.oriented[2], (1, 3));
        let mut sub = tree.subtree(1);
        sub.sort_unstable();
        assert_eq!(sub, vec![1, 2, 3]);
    }
}
