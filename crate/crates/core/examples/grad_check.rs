// Finite-difference check of the hand-written backward pass through two
// attention blocks and mean-sum pooling.

use subgraph_product::graph::Graph;
use subgraph_product::model::gradcheck::DEFAULT_TOLERANCE;
use subgraph_product::model::{grad_check, Parameterized, PoolVariant, PooledSabObjective, ProductState, SabStack};
use subgraph_product::product::ProductGraphBundle;
use subgraph_product::rng;
use subgraph_product::Result;

pub fn run() -> Result<()> {
    let g = Graph::path(4);
    let mut rng = rng::seeded(3);
    let x0 = ProductState::new(g.n(), rng::uniform_matrix(&mut rng, 16, 3, 1.0))?;
    let bundle = ProductGraphBundle::new(&g);
    let stack = SabStack::seeded(&mut rng, 3, 4, 2, 2)?;
    let theta = stack.to_flat();
    println!("{} parameters", theta.len());

    let objective = PooledSabObjective {
        stack,
        x0: &x0,
        bundle: &bundle,
        variant: PoolVariant::MeanSum,
    };
    let report = grad_check(&objective, &theta, DEFAULT_TOLERANCE)?;
    println!(
        "max relative error {:.2e} at {} (analytic {:.6e}, numeric {:.6e}): {}",
        report.max_relative_error,
        report.worst_parameter,
        report.analytic,
        report.numeric,
        if report.passed() { "ok" } else { "FAILED" }
    );
    Ok(())
}

fn main() -> Result<()> {
    run()
}
