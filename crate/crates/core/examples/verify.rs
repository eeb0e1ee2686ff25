// Runs the quick verification suite and prints the report.

use subgraph_product::alloc_probe::PeakAllocator;
use subgraph_product::verify::{run_verify, VerifyScale};
use subgraph_product::Result;

// the allocation-bound check needs the probe
#[global_allocator]
static ALLOC: PeakAllocator = PeakAllocator;

pub fn run() -> Result<()> {
    let report = run_verify(VerifyScale::Quick);
    print!("{}", report.to_text());
    Ok(())
}

fn main() -> Result<()> {
    run()
}
