//! Grid search spread over a pool of scoped threads.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use gridiron_core::features::FeatureCase;
use gridiron_core::selection::{aggregate, plan_splits, score_config, ModelSpec, SearchOptions, SelectionResult};

/// `0` means one worker per available core.
pub fn resolve_workers(workers: usize) -> usize {
    if workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        workers
    }
}

/// Same result as the sequential search for any worker count: each
/// (configuration, repeat) score is written to its own slot.
pub fn parallel_grid_search(
    train: &[FeatureCase],
    specs: &[ModelSpec],
    options: &SearchOptions,
    workers: usize,
) -> gridiron_core::Result<SelectionResult> {
    if specs.is_empty() {
        return Err(gridiron_core::Error::Empty("grid search needs at least one configuration"));
    }
    let splits = plan_splits(train.len(), options)?;
    let repeats = splits.len();
    let total = specs.len() * repeats;
    let slots: Vec<Mutex<Option<f64>>> = (0..total).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = resolve_workers(workers).min(total);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let task = next.fetch_add(1, Ordering::Relaxed);
                if task >= total {
                    break;
                }
                let (config, repeat) = (task / repeats, task % repeats);
                let score = score_config(train, &splits[repeat], &specs[config], options);
                *slots[task].lock().expect("no worker panics while holding a slot") = score;
            });
        }
    });

    let flat: Vec<Option<f64>> = slots.into_iter().map(|m| m.into_inner().expect("slot lock")).collect();
    let scores = flat.chunks(repeats).map(<[Option<f64>]>::to_vec).collect();
    log::info!("grid search: {} configurations x {repeats} repeats on {workers} workers", specs.len());
    aggregate(specs, scores, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridiron_core::selection::grid_search;
    use gridiron_core::svr::{KernelSpec, SvrConfig, SvrHyper};

    #[test]
    fn matches_sequential_search() {
        let train: Vec<FeatureCase> = (0..30)
            .map(|i| {
                let x = f64::from(i) / 30.0;
                FeatureCase {
                    player_id: format!("p{i}"),
                    season: 2010,
                    week: 1,
                    features: vec![x, (x * 7.0).sin()],
                    label: 3.0 * x + 0.1 * f64::from(i % 3),
                }
            })
            .collect();
        let specs: Vec<ModelSpec> = [0.25, 0.5, 1.0]
            .iter()
            .flat_map(|&c| {
                [KernelSpec::linear(), KernelSpec::rbf(0.0)].map(|kernel| {
                    ModelSpec::Svr(SvrConfig {
                        hyper: SvrHyper { c, epsilon: 0.05 },
                        kernel,
                    })
                })
            })
            .collect();
        let options = SearchOptions { seed: 3, ..SearchOptions::default() };
        let sequential = grid_search(&train, &specs, &options).unwrap();
        for workers in [1, 2, 5, 64] {
            assert_eq!(parallel_grid_search(&train, &specs, &options, workers).unwrap(), sequential);
        }
    }
}
