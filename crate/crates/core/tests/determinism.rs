use chaoslink::montecarlo::{sim_system_grid, sim_waveform_ber, Kernel};
use chaoslink::{NoiseModel, Scenario};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn system_estimates_ignore_thread_count() {
    let sc = Scenario::builder().dest_antennas(3).users(2).paths(2).build().unwrap();
    let run = || sim_system_grid(&sc, &[0.0, 10.0, 20.0], 300_000, 77, &[Kernel::Exact]).unwrap();
    assert_eq!(in_pool(1, run), in_pool(4, run));
}

#[test]
fn waveform_estimates_ignore_thread_count() {
    let run = || sim_waveform_ber(8, 6.0, &NoiseModel::laplacian(), 200_000, 5).unwrap();
    assert_eq!(in_pool(1, run), in_pool(3, run));
}
