// A relational GCN layer with block weights reproduces the concatenated
// subgraph update [X, A_pt X, A_G X, A_GS X] exactly.

use ndarray::{concatenate, Array2, Axis};
use subgraph_product::graph::Graph;
use subgraph_product::model::{rgcn_layer, RGCNParameters};
use subgraph_product::product::ProductGraphBundle;
use subgraph_product::Result;

pub fn run() -> Result<()> {
    let g = Graph::path(3);
    let bundle = ProductGraphBundle::new(&g);
    let d = 2;
    let x = Array2::from_shape_fn((9, d), |(r, c)| f64::from(u8::from((r + c) % 3 == 0)));
    let out = rgcn_layer(x.view(), &bundle, &RGCNParameters::concatenating(d))?;
    let expected = concatenate![
        Axis(1),
        x,
        bundle.point.matmul(x.view())?,
        bundle.internal.matmul(x.view())?,
        bundle.external.matmul(x.view())?
    ];
    assert_eq!(out, expected);
    for (r, row) in out.rows().into_iter().enumerate() {
        println!("({}, {}): {row}", r / 3, r % 3);
    }
    Ok(())
}

fn main() -> Result<()> {
    run()
}
