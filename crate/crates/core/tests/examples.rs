//! Runs every example end to end.

#[allow(dead_code)]
mod build_product {
    include!("../examples/build_product.rs");
}
#[allow(dead_code)]
mod grad_check {
    include!("../examples/grad_check.rs");
}
#[allow(dead_code)]
mod k_tuple {
    include!("../examples/k_tuple.rs");
}
#[allow(dead_code)]
mod node_marking {
    include!("../examples/node_marking.rs");
}
#[allow(dead_code)]
mod product_pe {
    include!("../examples/product_pe.rs");
}
#[allow(dead_code)]
mod rgcn_simulation {
    include!("../examples/rgcn_simulation.rs");
}
#[allow(dead_code)]
mod sab_forward {
    include!("../examples/sab_forward.rs");
}
#[allow(dead_code)]
mod sampling {
    include!("../examples/sampling.rs");
}

#[test]
fn build_product() {
    build_product::run().unwrap();
}

#[test]
fn grad_check() {
    grad_check::run().unwrap();
}

#[test]
fn k_tuple() {
    k_tuple::run().unwrap();
}

#[test]
fn node_marking() {
    node_marking::run().unwrap();
}

#[test]
fn product_pe() {
    product_pe::run().unwrap();
}

#[test]
fn rgcn_simulation() {
    rgcn_simulation::run().unwrap();
}

#[test]
fn sab_forward() {
    sab_forward::run().unwrap();
}

#[test]
fn sampling() {
    sampling::run().unwrap();
}
