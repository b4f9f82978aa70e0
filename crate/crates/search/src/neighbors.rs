use vrp_core::Instance;

/// For each customer, its closest other customers by matrix distance,
/// sorted ascending with ties broken by lower index. Lists are indexed by
/// node id; depot slots stay empty.
#[derive(Debug, Clone)]
pub struct NeighborLists {
    lists: Vec<Vec<usize>>,
    pub gamma: usize,
}

impl NeighborLists {
    pub fn of(&self, customer: usize) -> &[usize] {
        &self.lists[customer]
    }
}

pub fn build_granular_neighbors(instance: &Instance, gamma: usize) -> NeighborLists {
    let g = instance.num_nodes();
    let mut lists = vec![Vec::new(); g];
    for a in instance.customer_ids() {
        let mut others: Vec<usize> = instance.customer_ids().filter(|&b| b != a).collect();
        others.sort_by(|&x, &y| {
            instance
                .dist(a, x)
                .partial_cmp(&instance.dist(a, y))
                .unwrap()
                .then(x.cmp(&y))
        });
        others.truncate(gamma);
        lists[a] = others;
    }
    NeighborLists { lists, gamma }
}

#[cfg(test)]
mod tests {
    use super::*;
    use vrp_core::{Instance, Node, VariantFlags};

    fn line_instance(n: usize) -> Instance {
        let mut nodes = vec![Node::depot(0, 0.0, 0.0)];
        for i in 0..n {
            nodes.push(Node::customer(i + 1, (i + 1) as f64, 0.0, 1.0));
        }
        Instance::new(nodes, 1, 50.0, None, VariantFlags::cvrp()).unwrap()
    }

    #[test]
    fn two_customers_list_each_other() {
        let inst = line_instance(2);
        let nb = build_granular_neighbors(&inst, 20);
        assert_eq!(nb.of(1), &[2]);
        assert_eq!(nb.of(2), &[1]);
    }

    #[test]
    fn big_gamma_gives_full_sorted_lists() {
        let inst = line_instance(5);
        let nb = build_granular_neighbors(&inst, 99);
        assert_eq!(nb.of(1), &[2, 3, 4, 5]);
        assert_eq!(nb.of(3), &[2, 4, 1, 5]);
    }

    #[test]
    fn lists_match_full_sort_oracle() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut nodes = vec![Node::depot(0, 0.5, 0.5)];
        for i in 0..100 {
            nodes.push(Node::customer(
                i + 1,
                rng.random::<f64>(),
                rng.random::<f64>(),
                1.0,
            ));
        }
        let inst = Instance::new(nodes, 1, 50.0, None, VariantFlags::cvrp()).unwrap();
        let nb = build_granular_neighbors(&inst, 20);
        for a in inst.customer_ids() {
            let mut all: Vec<usize> = inst.customer_ids().filter(|&b| b != a).collect();
            all.sort_by(|&x, &y| {
                inst.dist(a, x)
                    .partial_cmp(&inst.dist(a, y))
                    .unwrap()
                    .then(x.cmp(&y))
            });
            assert_eq!(nb.of(a), &all[..20]);
            assert_eq!(nb.of(a).len(), 20.min(inst.num_customers() - 1));
        }
    }
}
