//! Bijections between user-declared term languages and the natural numbers.
//!
//! A signature (algebraic types, higher-order binders, at most one index per
//! family) is parsed and validated by [`sigmodel`]; [`codec`] turns it into
//! an explicit encoder/decoder pair per type and index; [`adequacy`] checks the
//! result by bounded exhaustive testing; [`natcollections`] builds canonical
//! finite sets and maps on top of any such bijection.

pub mod adequacy;
pub mod bignat;
pub mod cli;
pub mod codec;
pub mod natcollections;
pub mod sigmodel;
pub mod syntax;
pub mod termrep;

pub use bignat::Nat;

/// Stack size for threads that walk deep terms. Encoding, printing and
/// checking recurse on term depth, and a numeral `n` is `n` levels deep.
pub const DEEP_STACK: usize = 512 << 20;

/// Runs `f` on a thread with a [`DEEP_STACK`]-sized stack.
pub fn with_deep_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(DEEP_STACK)
            .spawn_scoped(s, f)
            .expect("spawn worker thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}
