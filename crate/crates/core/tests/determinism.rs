use dblrot::diffchain::{predicted_density, DiffChain, Slowdown};
use dblrot::displacement::{phi_profile, z_constant, GridSpec};
use dblrot::rds::NoiseStream;
use dblrot::sets::{SetDescriptor, TorusSet};
use dblrot::torus::TorusPoint;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn square() -> TorusSet {
    SetDescriptor::Boxes {
        dimension: 2,
        boxes: vec![vec![[0.0, 0.5], [0.0, 0.5]]],
    }
    .build()
    .unwrap()
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let run = || {
        let p = phi_profile(square(), &GridSpec::for_dim(2).with_uniform(32)).unwrap();
        let z = z_constant(&p, 0.01).unwrap();
        let h = predicted_density(&p, 4).unwrap();
        let chain = DiffChain::new(square(), TorusPoint::wrap(&[0.3, 0.7]).unwrap(), 4).unwrap();
        let law = chain
            .law_equivalence_test(&TorusPoint::wrap(&[0.5, 0.5]).unwrap(), 10, 10_000, &NoiseStream::new(1, 0), Slowdown::Exact)
            .unwrap();
        (z.z, z.error_bound, h.masses().to_vec(), law.statistic)
    };
    let one = in_pool(1, run);
    let three = in_pool(3, run);
    assert_eq!(one.0.to_bits(), three.0.to_bits());
    assert_eq!(one.1.to_bits(), three.1.to_bits());
    assert_eq!(one.2, three.2);
    assert_eq!(one.3.to_bits(), three.3.to_bits());
}
