// Product-graph positional encodings from one base eigendecomposition,
// cross-checked against a direct diagonalization of L(G□G).

use subgraph_product::graph::Graph;
use subgraph_product::pe::{concatenation_pe, pe_oracle_check, product_pe};
use subgraph_product::Result;

pub fn run() -> Result<()> {
    let p2 = Graph::path(2);
    let pe = product_pe(&p2, 4)?;
    println!("P2 product labels: {:?}", pe.eigenvalues);
    print!("{}", pe.to_text());

    let concat = concatenation_pe(&p2, 2)?;
    println!("P2 concatenation PE row (0,1): {:?}", concat.data.row(1).to_vec());

    for (name, g) in [
        ("K3", Graph::complete(3)),
        ("C5", Graph::cycle(5)),
        ("G(7, 0.4)", Graph::erdos_renyi(7, 0.4, 5)),
    ] {
        let report = pe_oracle_check(&g)?;
        println!(
            "{name:>9}: eigenvalue deviation {:.1e}, projector deviation {:.1e}, {}",
            report.max_eigenvalue_deviation,
            report.max_projector_deviation,
            if report.passed() { "ok" } else { "MISMATCH" }
        );
    }

    let big = Graph::erdos_renyi(64, 0.3, 1);
    let pe = product_pe(&big, 8)?;
    println!(
        "n=64: {} product nodes, first labels {:?}",
        pe.rows(),
        &pe.eigenvalues[..4]
    );
    Ok(())
}

fn main() -> Result<()> {
    run()
}
