use rayon::prelude::*;
use regpave_core::ShardExecutor;

/// Runs shards on the rayon thread pool.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayonExecutor;

impl ShardExecutor for RayonExecutor {
    fn map_ref<T, R, F>(&self, shards: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        shards.par_iter().map(f).collect()
    }

    fn map_mut<T, R, F>(&self, shards: &mut [T], f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(&mut T) -> R + Sync + Send,
    {
        shards.par_iter_mut().map(f).collect()
    }
}
