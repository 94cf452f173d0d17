//! Thread-local FLOP accounting.
//!
//! Instrumented kernels report their multiply and add totals through
//! [`record`]. Counts land in the innermost scope opened by [`count_scope`]
//! on the current thread; when a scope closes its totals are folded into the
//! enclosing scope, so an outer scope always sees everything that ran inside
//! it. With no open scope, [`record`] is a no-op.
//!
//! Convention: multiplies and additions are counted separately, one unit each.
//! A fused multiply-add counts as one of each. Divisions are counted as
//! multiplies, subtractions as additions. Square roots and transcendental
//! functions are not counted.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopCounter {
    pub label: String,
    pub multiplies: u64,
    pub additions: u64,
}

impl FlopCounter {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            multiplies: 0,
            additions: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.multiplies + self.additions
    }

    fn absorb(&mut self, other: &FlopCounter) {
        self.multiplies += other.multiplies;
        self.additions += other.additions;
    }
}

thread_local! {
    static SCOPES: RefCell<Vec<FlopCounter>> = const { RefCell::new(Vec::new()) };
}

/// Adds `multiplies` and `additions` to the innermost open scope.
#[inline]
pub fn record(multiplies: u64, additions: u64) {
    SCOPES.with(|s| {
        if let Some(top) = s.borrow_mut().last_mut() {
            top.multiplies += multiplies;
            top.additions += additions;
        }
    });
}

/// Whether any scope is open on this thread.
pub fn active() -> bool {
    SCOPES.with(|s| !s.borrow().is_empty())
}

/// Runs `computation` inside a fresh counting scope and returns its result
/// together with the exact counts recorded while it ran.
pub fn count_scope<R>(label: &str, computation: impl FnOnce() -> R) -> (R, FlopCounter) {
    struct Guard;
    impl Drop for Guard {
        fn drop(&mut self) {
            SCOPES.with(|s| {
                let mut s = s.borrow_mut();
                if let Some(done) = s.pop() {
                    if let Some(parent) = s.last_mut() {
                        parent.absorb(&done);
                    }
                }
            });
        }
    }

    SCOPES.with(|s| s.borrow_mut().push(FlopCounter::new(label)));
    let guard = Guard;
    let result = computation();
    let counter = SCOPES.with(|s| s.borrow().last().cloned().unwrap_or_default());
    drop(guard);
    (result, counter)
}

/// Counts for a dot product of length `n`: `n` multiplies, `n - 1` additions.
#[inline]
pub fn record_dot(n: usize) {
    record_dots(1, n);
}

/// Counts for `count` independent dot products of length `n`.
#[inline]
pub fn record_dots(count: usize, n: usize) {
    if n == 0 || count == 0 {
        return;
    }
    record((count * n) as u64, (count * (n - 1)) as u64);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_scope_is_noop() {
        record(5, 5);
        assert!(!active());
    }

    #[test]
    fn nested_scopes_fold_into_parent() {
        let ((_, inner), outer) = count_scope("outer", || {
            record(1, 1);
            count_scope("inner", || record(10, 3))
        });
        assert_eq!(inner.multiplies, 10);
        assert_eq!(inner.additions, 3);
        assert_eq!(outer.multiplies, 11);
        assert_eq!(outer.additions, 4);
        assert_eq!(outer.total(), 15);
        assert_eq!(outer.label, "outer");
    }

    #[test]
    fn scope_closes_on_panic() {
        let r = std::panic::catch_unwind(|| count_scope("p", || panic!("boom")));
        assert!(r.is_err());
        assert!(!active());
    }

    #[test]
    fn dot_convention() {
        let (_, c) = count_scope("dot", || record_dot(7));
        assert_eq!((c.multiplies, c.additions), (7, 6));
    }
}
