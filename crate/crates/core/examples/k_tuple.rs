// k-tuple products: slot adjacencies, the closed form of the k-fold
// Cartesian power, and k-tuple positional encodings.

use subgraph_product::graph::{dense_adjacency, Graph};
use subgraph_product::ktuple::{cartesian_operator, closed_form_cartesian, k_factor_adjacency, k_point_adjacency};
use subgraph_product::pe::k_tuple_pe;
use subgraph_product::Result;

pub fn run() -> Result<()> {
    let a = dense_adjacency(&Graph::path(2));
    for slot in 0..3 {
        let m = k_factor_adjacency(a.view(), slot, 3)?;
        println!(
            "slot {} adjacency: {} entries",
            slot + 1,
            m.iter().filter(|&&x| x == 1).count()
        );
    }
    let cube = cartesian_operator(a.view(), 3)?;
    assert_eq!(cube, closed_form_cartesian(a.view(), 3)?);
    println!(
        "P2^3 is the 3-cube: {} directed edges",
        cube.iter().filter(|&&x| x == 1).count()
    );

    for free in 1..=3 {
        let pt = k_point_adjacency(2, 3, free)?;
        println!("3-point adjacency with free slot {free}: nnz={}", pt.nnz());
    }

    let pe = k_tuple_pe(&Graph::path(2), 3, 8)?;
    println!("3-tuple PE labels of P2: {:?}", pe.eigenvalues);

    let too_big = k_tuple_pe(&Graph::path(17), 3, 1);
    println!("P17 at K=3: {}", too_big.unwrap_err());
    Ok(())
}

fn main() -> Result<()> {
    run()
}
