// Builds the three product-graph adjacencies of a 4-cycle and checks the
// Cartesian product identity.

use subgraph_product::graph::Graph;
use subgraph_product::product::{cartesian_product_adjacency, ProductGraphBundle, TupleIndexing};
use subgraph_product::Result;

pub fn run() -> Result<()> {
    let g = Graph::cycle(4);
    let bundle = ProductGraphBundle::new(&g);
    let index = TupleIndexing::new(g.n(), 2);

    println!("base graph: n={} |E|={}", g.n(), g.num_edges());
    for (name, adj) in [
        ("internal", &bundle.internal),
        ("external", &bundle.external),
        ("point", &bundle.point),
    ] {
        println!("{name:>8}: {}x{} nnz={}", adj.rows(), adj.cols(), adj.nnz());
    }

    let row = index.flatten(&[1, 2]);
    let show = |cols: &mut dyn Iterator<Item = usize>| {
        cols.map(|c| format!("{:?}", index.unflatten(c)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!(
        "(1,2) receives internally from {}",
        show(&mut bundle.internal.row_indices(row))
    );
    println!(
        "(1,2) receives externally from {}",
        show(&mut bundle.external.row_indices(row))
    );
    println!(
        "(1,2) receives its root from {}",
        show(&mut bundle.point.row_indices(row))
    );

    let union = bundle.internal.union(&bundle.external)?;
    assert_eq!(union, cartesian_product_adjacency(&g));
    print!(
        "G□G in COO form:\n{}",
        union.to_coo_string().lines().take(5).collect::<Vec<_>>().join("\n")
    );
    println!("\n...");
    Ok(())
}

fn main() -> Result<()> {
    run()
}
