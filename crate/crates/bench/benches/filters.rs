use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use dfrc_bench::{design_grid, design_spec, dictionary, Dims, Fixture};
use dfrc_core::array_beam::{design_weights, SolverOptions};
use dfrc_core::filters::CellCost;
use dfrc_core::{
    ampc_cell, ampc_map, jrdap_cell, jrdap_map, spc_mtd, ArrayGeometry, Complex64, JrdapOptions,
};

fn maps(c: &mut Criterion) {
    let geometry = ArrayGeometry::new(10, 0.5).unwrap();
    let dict = dictionary(&geometry).unwrap();
    let ncbm = vec![0; Dims::REDUCED.pulses];
    let options = JrdapOptions::default();
    let mut group = c.benchmark_group("reduced_map");
    group.sample_size(10);
    for (mode, symbols) in [("cbm", None), ("ncbm", Some(ncbm.as_slice()))] {
        let fx = Fixture::new(Dims::REDUCED, &dict, symbols, 7).unwrap();
        group.bench_function(format!("ampc/{mode}"), |b| {
            b.iter(|| ampc_map(&fx.model, &fx.cube, &fx.prior).unwrap())
        });
        group.bench_function(format!("jrdap/{mode}"), |b| {
            b.iter(|| jrdap_map(&fx.model, &fx.cube, &fx.prior, &options).unwrap())
        });
        group.bench_function(format!("spc_mtd/{mode}"), |b| {
            b.iter(|| spc_mtd(&fx.cube, fx.model.waveform(), fx.model.grid()).unwrap())
        });
    }
    group.finish();
}

fn cells(c: &mut Criterion) {
    let geometry = ArrayGeometry::new(10, 0.5).unwrap();
    let dict = dictionary(&geometry).unwrap();
    let fx = Fixture::new(Dims::REDUCED, &dict, None, 7).unwrap();
    let options = JrdapOptions::default();
    let (ell, q) = (18, 13);
    c.bench_function("cell/ampc", |b| {
        b.iter(|| ampc_cell(&fx.model, ell, q, &fx.cube, &fx.prior).unwrap())
    });
    c.bench_function("cell/jrdap", |b| {
        b.iter(|| jrdap_cell(&fx.model, ell, q, &fx.cube, &fx.prior, &options).unwrap())
    });
    c.bench_function("cell/range_aggregates", |b| {
        b.iter(|| fx.model.range_aggregates(ell, &fx.prior).unwrap())
    });
    let cost = CellCost::new(&fx.model, ell, &fx.prior).unwrap();
    let h = fx.model.space_time_steering(q);
    c.bench_function("cell/analytic_cost", |b| b.iter(|| cost.cost(q, &h)));
}

fn beam_design(c: &mut Criterion) {
    let geometry = ArrayGeometry::new(10, 0.5).unwrap();
    let spec = design_spec();
    let grid = design_grid();
    let equalities = [
        (spec.target_angle_deg, Complex64::new(1.0, 0.0)),
        (spec.comm_angle_deg, Complex64::from_polar(spec.sll_levels[0], 0.0)),
    ];
    let mut group = c.benchmark_group("beam_design");
    group.sample_size(10);
    group.bench_function("one_entry", |b| {
        b.iter_batched(
            SolverOptions::default,
            |opts| design_weights(&geometry, &equalities, &grid, &opts).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, maps, cells, beam_design);
criterion_main!(benches);
