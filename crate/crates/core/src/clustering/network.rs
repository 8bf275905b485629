use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::data::Network;

fn undirected_neighbours(net: &Network) -> Vec<Vec<usize>> {
    let n = net.n_users();
    let mut adj = vec![Vec::new(); n];
    for (i, j) in net.edges() {
        adj[i].push(j);
        adj[j].push(i);
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Columns: degree, harmonic closeness and local clustering coefficient, all
/// on the undirected projection of the follower graph.
pub fn network_features(net: &Network) -> DMatrix<f64> {
    let n = net.n_users();
    let adj = undirected_neighbours(net);
    let mut out = DMatrix::zeros(n, 3);
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut mark = vec![false; n];
    for i in 0..n {
        out[(i, 0)] = adj[i].len() as f64;

        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[i] = 0;
        queue.push_back(i);
        let mut harmonic = 0.0;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    harmonic += 1.0 / dist[v] as f64;
                    queue.push_back(v);
                }
            }
        }
        if n > 1 {
            out[(i, 1)] = harmonic / (n - 1) as f64;
        }

        let deg = adj[i].len();
        if deg >= 2 {
            for &v in &adj[i] {
                mark[v] = true;
            }
            let mut links = 0usize;
            for &v in &adj[i] {
                links += adj[v].iter().filter(|&&w| mark[w]).count();
            }
            for &v in &adj[i] {
                mark[v] = false;
            }
            out[(i, 2)] = links as f64 / (deg * (deg - 1)) as f64;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph() {
        assert_eq!(network_features(&Network::empty(4)), DMatrix::zeros(4, 3));
    }

    #[test]
    fn triangle() {
        let net = Network::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let f = network_features(&net);
        for i in 0..3 {
            assert_eq!(f[(i, 0)], 2.0);
            assert_eq!(f[(i, 1)], 1.0);
            assert_eq!(f[(i, 2)], 1.0);
        }
    }

    #[test]
    fn path() {
        let net = Network::from_edges(3, [(0, 1), (2, 1)]).unwrap();
        let f = network_features(&net);
        assert_eq!(f[(1, 2)], 0.0);
        assert_eq!(f[(1, 1)], 1.0);
        assert!((f[(0, 1)] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn reciprocal_edges_count_once() {
        let net = Network::from_edges(2, [(0, 1), (1, 0)]).unwrap();
        let f = network_features(&net);
        assert_eq!(f[(0, 0)], 1.0);
    }
}
