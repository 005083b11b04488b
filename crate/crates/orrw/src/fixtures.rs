//! Small named graphs used by tests, benchmarks, and the verification
//! battery.  Each returns a freshly built [`FiniteGraph`] with the start
//! vertex at index 0.

use crate::graph::FiniteGraph;

/// Star with three vertices (one centre, two leaves), started at the centre.
/// Two edges: e0 = {0,1}, e1 = {0,2}.
pub fn star3() -> FiniteGraph {
    FiniteGraph::build(&[("0", "1"), ("0", "2")], "0").expect("valid fixture")
}

/// Path 0 – 1 – 2 started at the leaf 0.  Edges e0 = {0,1}, e1 = {1,2}.
pub fn path3() -> FiniteGraph {
    FiniteGraph::build(&[("0", "1"), ("1", "2")], "0").expect("valid fixture")
}

/// Path 0 – 1 – 2 – 3 started at the leaf 0.
pub fn path4() -> FiniteGraph {
    FiniteGraph::build(&[("0", "1"), ("1", "2"), ("2", "3")], "0").expect("valid fixture")
}

/// Path 0 – 1 – 2 – 3 started at the interior vertex 1.
pub fn path4_interior() -> FiniteGraph {
    FiniteGraph::build(&[("0", "1"), ("1", "2"), ("2", "3")], "1").expect("valid fixture")
}

/// Triangle on {1,2,3} started at 1.
pub fn triangle() -> FiniteGraph {
    FiniteGraph::build(&[("1", "2"), ("2", "3"), ("3", "1")], "1").expect("valid fixture")
}

/// Star with four vertices (centre plus three leaves), started at the centre.
pub fn star4() -> FiniteGraph {
    FiniteGraph::build(&[("c", "1"), ("c", "2"), ("c", "3")], "c").expect("valid fixture")
}

/// Four-cycle started anywhere (vertex "0").
pub fn cycle4() -> FiniteGraph {
    FiniteGraph::build(&[("0", "1"), ("1", "2"), ("2", "3"), ("3", "0")], "0")
        .expect("valid fixture")
}

/// The paw: a triangle with a pendant edge, started at the pendant leaf.
pub fn paw() -> FiniteGraph {
    FiniteGraph::build(&[("p", "a"), ("a", "b"), ("b", "c"), ("c", "a")], "p")
        .expect("valid fixture")
}

/// Complete graph on four vertices, started at "0".
pub fn k4() -> FiniteGraph {
    FiniteGraph::build(
        &[
            ("0", "1"),
            ("0", "2"),
            ("0", "3"),
            ("1", "2"),
            ("1", "3"),
            ("2", "3"),
        ],
        "0",
    )
    .expect("valid fixture")
}

/// Every fixture, smallest first — handy for property-style sweeps.
pub fn all() -> Vec<FiniteGraph> {
    vec![
        star3(),
        path3(),
        star4(),
        path4(),
        path4_interior(),
        triangle(),
        cycle4(),
        paw(),
        k4(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_inventory_sizes() {
        let sizes: Vec<(usize, usize)> =
            all().iter().map(|g| (g.n_vertices(), g.n_edges())).collect();
        assert_eq!(
            sizes,
            vec![
                (3, 2),
                (3, 2),
                (4, 3),
                (4, 3),
                (4, 3),
                (3, 3),
                (4, 4),
                (4, 4),
                (4, 6)
            ]
        );
    }

    #[test]
    fn k4_is_regular() {
        let g = k4();
        for v in 0..4 {
            assert_eq!(g.degree(v), 3);
        }
    }

    #[test]
    fn paw_starts_at_pendant_leaf() {
        let g = paw();
        assert_eq!(g.degree(0), 1, "start vertex is the pendant leaf");
    }
}
