// Distance-based node marks on a graph with two components.

use subgraph_product::graph::Graph;
use subgraph_product::pe::node_mark_indices;
use subgraph_product::Result;

pub fn run() -> Result<()> {
    let g = Graph::new(5, [(0, 1), (1, 2), (3, 4)])?;
    let marks = node_mark_indices(&g);
    println!("vocabulary size {} (sentinel {})", marks.vocabulary(), marks.n());
    for s in 0..g.n() {
        let row: Vec<String> = (0..g.n()).map(|v| marks.get(s, v).to_string()).collect();
        println!("root {s}: {}", row.join(" "));
    }
    Ok(())
}

fn main() -> Result<()> {
    run()
}
