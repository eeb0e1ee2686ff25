// Stochastic subgraph sampling: restrict the product adjacencies to a
// random bag of roots and pool only the sampled rows.

use subgraph_product::graph::Graph;
use subgraph_product::pipeline::{forward, ForwardConfig};
use subgraph_product::product::{ProductGraphBundle, SamplingMask};
use subgraph_product::Result;

pub fn run() -> Result<()> {
    let g = Graph::erdos_renyi(10, 0.35, 3);
    let bundle = ProductGraphBundle::new(&g);
    let config = ForwardConfig {
        seed: 1,
        ..ForwardConfig::default()
    };
    let model = config.build(&g)?;
    let full = forward(&g, &model, &config, None)?;
    println!(
        "full bag: internal nnz={} pooled[0]={:.6}",
        bundle.internal.nnz(),
        full[0]
    );

    for ratio in [0.2, 0.5, 1.0] {
        let mask = SamplingMask::sample(g.n(), ratio, 42)?;
        let masked = bundle.masked(&mask)?;
        let out = forward(&g, &model, &config, Some(&mask))?;
        println!(
            "ratio {ratio}: roots {:?}, internal nnz={}, external nnz={}, pooled[0]={:.6}",
            mask.sampled(),
            masked.internal.nnz(),
            masked.external.nnz(),
            out[0]
        );
    }
    assert_eq!(forward(&g, &model, &config, Some(&SamplingMask::all(g.n())))?, full);
    Ok(())
}

fn main() -> Result<()> {
    run()
}
