//! Commitment over noisy channels.
//!
//! Channels and their non-redundancy analysis live in [`channel`]; exact
//! information measures and the hashing bounds in [`infotheory`]; the
//! two-universal hash family in [`hashing`]; typical-set membership in
//! [`typicality`]; rate regions and capacities in [`capacity`]; and the
//! executable commit/reveal schemes with their attack harnesses in
//! [`protocol`].

pub mod capacity;
pub mod channel;
pub mod error;
pub mod hashing;
pub mod infotheory;
pub mod protocol;
pub mod typicality;

pub use error::{Error, Result};

/// Crate version, embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable capping the worker threads used for restarts and trials.
pub const THREADS_ENV: &str = "NOISY_COMMIT_THREADS";

/// Runs `f` inside the shared worker pool, sized from [`THREADS_ENV`] when set.
pub(crate) fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    static POOL: std::sync::OnceLock<rayon::ThreadPool> = std::sync::OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("worker pool")
    })
    .install(f)
}
