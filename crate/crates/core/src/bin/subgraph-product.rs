use clap::Parser;
use subgraph_product::alloc_probe::PeakAllocator;
use subgraph_product::cli::{run, Cli};

#[global_allocator]
static ALLOC: PeakAllocator = PeakAllocator;

fn main() {
    std::process::exit(run(Cli::parse()));
}
