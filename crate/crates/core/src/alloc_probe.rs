//! A global allocator wrapper that records the largest single allocation
//! made by the current thread inside [`track`].
//!
//! Binaries and test targets opt in with
//!
//! ```ignore
//! #[global_allocator]
//! static ALLOC: subgraph_product::alloc_probe::PeakAllocator = subgraph_product::alloc_probe::PeakAllocator;
//! ```

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;
use std::sync::atomic::{AtomicBool, Ordering};

static INSTALLED: AtomicBool = AtomicBool::new(false);

thread_local! {
    static TRACKING: Cell<bool> = const { Cell::new(false) };
    static PEAK: Cell<usize> = const { Cell::new(0) };
}

pub struct PeakAllocator;

fn record(size: usize) {
    INSTALLED.store(true, Ordering::Relaxed);
    let _ = TRACKING.try_with(|tracking| {
        if tracking.get() {
            let _ = PEAK.try_with(|peak| peak.set(peak.get().max(size)));
        }
    });
}

unsafe impl GlobalAlloc for PeakAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        record(layout.size());
        System.alloc(layout)
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        record(layout.size());
        System.alloc_zeroed(layout)
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        record(new_size);
        System.realloc(ptr, layout, new_size)
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout)
    }
}

/// Whether [`PeakAllocator`] is the global allocator of this process.
pub fn is_installed() -> bool {
    // make at least one allocation so the flag is set if we are installed
    drop(std::hint::black_box(Box::new(0u8)));
    INSTALLED.load(Ordering::Relaxed)
}

/// Runs `f` and returns its result with the largest allocation, in bytes,
/// that it made on this thread. The size is `None` when the probe is not
/// installed.
pub fn track<T>(f: impl FnOnce() -> T) -> (T, Option<usize>) {
    PEAK.with(|p| p.set(0));
    TRACKING.with(|t| t.set(true));
    let out = f();
    TRACKING.with(|t| t.set(false));
    let peak = PEAK.with(Cell::get);
    (out, is_installed().then_some(peak))
}
