//! Data-parallel map over independent cases, one store per case.
//!
//! Constructive operators recurse once per nested disjunction, so every
//! worker gets a large stack. With the `parallel` feature off, `par_map`
//! runs the same closure sequentially on one big-stack thread.

/// Stack size for solver threads.
pub const STACK_SIZE: usize = 256 << 20;

/// Runs `f` on a fresh thread with a [`STACK_SIZE`] stack.
pub fn with_big_stack<T, F>(f: F) -> T
where
    F: FnOnce() -> T + Send,
    T: Send,
{
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(STACK_SIZE)
            .spawn_scoped(s, f)
            .expect("spawn solver thread")
            .join()
            .unwrap_or_else(|p| std::panic::resume_unwind(p))
    })
}

/// Maps `f` over `items` in order on a single big-stack thread.
pub fn seq_map<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync,
{
    with_big_stack(|| items.iter().map(&f).collect())
}

/// Maps `f` over `items`; results keep the order of `items`. `jobs = 0`
/// uses every core.
#[cfg(feature = "parallel")]
pub fn par_map<I, T, F>(items: &[I], jobs: usize, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync,
{
    use rayon::prelude::*;
    if jobs == 1 {
        return seq_map(items, f);
    }
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(jobs).stack_size(STACK_SIZE).build().expect("build thread pool");
    pool.install(|| items.par_iter().map(&f).collect())
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<I, T, F>(items: &[I], _jobs: usize, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync,
{
    seq_map(items, f)
}

/// Whether `par_map` actually runs in parallel.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..100).collect();
        let sq = |x: &u64| x * x;
        assert_eq!(par_map(&xs, 0, sq), seq_map(&xs, sq));
        assert_eq!(par_map(&xs, 3, sq)[99], 9801);
    }

    #[test]
    fn deep_recursion_fits() {
        fn depth(n: u32) -> u32 {
            let pad = std::hint::black_box([0u8; 512]);
            if n == 0 {
                0
            } else {
                1 + depth(n - 1) + u32::from(pad[0])
            }
        }
        assert_eq!(with_big_stack(|| depth(20_000)), 20_000);
    }
}
